"""Opacity filter for everything user-visible.

Scans text for traces of the internal representation: tagged code fences,
distinctive keywords, attribute syntax, and tool-call markers. A hit is
returned as a value, never auto-stripped: the engine's job is to rewrite
(regenerate the summary) or withhold, not to surface a censored string.

The keyword list is deliberately aggressive; "requires" is an ordinary
English word, but a false positive only costs a summary regeneration while
a false negative leaks internals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from ..llm_gateway import TOOL_TAG_OPEN


@dataclass(frozen=True)
class RedactionViolation:
    matched: str
    kind: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.matched!r}"


_PATTERNS: list[tuple[str, re.Pattern]] = [
    ("code-fence", re.compile(r"```\s*dafny", re.IGNORECASE)),
    ("language-name", re.compile(r"\bdafny\b", re.IGNORECASE)),
    ("keyword", re.compile(r"\b(ensures|requires|decreases|datatype|lemma)\b")),
    ("attribute", re.compile(r"\{:\s*(testEntry|axiom|test)\b")),
    ("axiom-stub", re.compile(r"\bassume\s*\{:")),
    ("statement", re.compile(r"^\s*expect\b", re.MULTILINE)),
    ("tool-tag", re.compile(re.escape(TOOL_TAG_OPEN))),
]


def redact(text: str) -> Union[str, RedactionViolation]:
    """The text itself when clean, otherwise the first violation found."""
    for kind, pattern in _PATTERNS:
        m = pattern.search(text)
        if m:
            return RedactionViolation(matched=m.group(0), kind=kind)
    return text


def is_clean(text: str) -> bool:
    return not isinstance(redact(text), RedactionViolation)
