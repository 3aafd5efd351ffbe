"""Lexical utilities over Dafny source text.

Shape validation and spec/implementation merging both work at the token
level on purpose: real parsing is the toolchain's job, and these checks must
stay cheap and total even on garbage model output. Nothing here builds a
syntax tree; declarations are located by keyword scanning with brace
matching that is aware of comments and string literals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

STUB_BODY_TOKENS = ["assume", "{", ":", "axiom", "}", "false", ";"]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<string>@?"(?:[^"\\]|\\.)*")
  | (?P<real>\d+\.\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_'][A-Za-z0-9_']*)
  | (?P<op><==>|==>|==|=>|:=|::|!=|<=|>=|&&|\|\||\.\.|[{}()\[\]<>.,;:+\-*/%!=|&@?])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int  # byte offset into the source


def tokenize(source: str, keep_comments: bool = False) -> list[Token]:
    """Total tokenizer: unknown bytes become single-char 'other' tokens."""
    tokens: list[Token] = []
    i = 0
    n = len(source)
    while i < n:
        m = _TOKEN_RE.match(source, i)
        if m is None:
            tokens.append(Token("other", source[i], i))
            i += 1
            continue
        kind = m.lastgroup or "other"
        if kind == "ws" or (kind == "comment" and not keep_comments):
            i = m.end()
            continue
        tokens.append(Token(kind, m.group(), i))
        i = m.end()
    return tokens


def token_texts(source: str) -> list[str]:
    """Token stream with comments and whitespace dropped."""
    return [t.text for t in tokenize(source)]


@dataclass
class MethodDecl:
    kind: str  # "method" | "function" | "lemma"
    name: str
    attrs: list[str]
    params_text: str
    returns_text: str
    clauses: list[tuple[str, str]]  # (keyword, clause text) in source order
    body_span: Optional[tuple[int, int]]  # offsets of '{' and matching '}' (inclusive)
    span: tuple[int, int]  # full declaration, start offset to end offset (exclusive)
    doc_comment: bool  # a comment immediately precedes the declaration


@dataclass
class ModuleOutline:
    name: Optional[str]
    body_span: Optional[tuple[int, int]]  # offsets of module '{' and matching '}'
    decls: list[MethodDecl] = field(default_factory=list)
    datatypes: list[str] = field(default_factory=list)  # datatype names


_DECL_KEYWORDS = {"method", "function", "lemma", "predicate"}
_CLAUSE_KEYWORDS = {"requires", "ensures", "decreases", "modifies", "reads", "invariant"}


def _match_brace(tokens: list[Token], open_idx: int) -> Optional[int]:
    depth = 0
    for j in range(open_idx, len(tokens)):
        if tokens[j].text == "{":
            depth += 1
        elif tokens[j].text == "}":
            depth -= 1
            if depth == 0:
                return j
    return None


def _collect_attrs(tokens: list[Token], i: int) -> tuple[list[str], int]:
    """Parse `{:name ...}` attribute groups starting at token i."""
    attrs = []
    while i + 1 < len(tokens) and tokens[i].text == "{" and tokens[i + 1].text == ":":
        j = i + 2
        if j < len(tokens) and tokens[j].kind == "ident":
            attrs.append(tokens[j].text)
        while j < len(tokens) and tokens[j].text != "}":
            j += 1
        i = j + 1
    return attrs, i


def _balanced_group(tokens: list[Token], i: int, open_t: str, close_t: str) -> tuple[int, int]:
    """Given tokens[i] == open_t, return (index after matching close, index of close)."""
    depth = 0
    for j in range(i, len(tokens)):
        if tokens[j].text == open_t:
            depth += 1
        elif tokens[j].text == close_t:
            depth -= 1
            if depth == 0:
                return j + 1, j
    return len(tokens), len(tokens) - 1


def outline(source: str) -> ModuleOutline:
    """Locate the module wrapper and every top-level declaration inside it."""
    tokens = tokenize(source, keep_comments=True)
    code = [t for t in tokens if t.kind != "comment"]
    result = ModuleOutline(name=None, body_span=None)

    # module <name> { ... }
    mod_open = None
    mod_close = None
    for i, t in enumerate(code):
        if t.kind == "ident" and t.text == "module":
            j = i + 1
            if j < len(code) and code[j].kind == "ident":
                result.name = code[j].text
                j += 1
            if j < len(code) and code[j].text == "{":
                end = _match_brace(code, j)
                if end is not None:
                    mod_open, mod_close = j, end
                    result.body_span = (code[j].pos, code[end].pos)
            break
    scope = code[mod_open + 1 : mod_close] if mod_open is not None else code

    comment_positions = [t.pos for t in tokens if t.kind == "comment"]

    i = 0
    while i < len(scope):
        t = scope[i]
        if t.kind == "ident" and t.text == "datatype":
            if i + 1 < len(scope) and scope[i + 1].kind == "ident":
                result.datatypes.append(scope[i + 1].text)
            i += 1
            continue
        if t.kind == "ident" and t.text in _DECL_KEYWORDS:
            decl, next_i = _parse_decl(scope, i, source, comment_positions)
            if decl is not None:
                result.decls.append(decl)
                i = next_i
                continue
        i += 1
    return result


def _parse_decl(
    scope: list[Token], i: int, source: str, comment_positions: list[int]
) -> tuple[Optional[MethodDecl], int]:
    kind = scope[i].text
    start = scope[i].pos
    j = i + 1
    attrs, j = _collect_attrs(scope, j)
    if j >= len(scope) or scope[j].kind != "ident":
        return None, i + 1
    name = scope[j].text
    j += 1

    params_text = ""
    if j < len(scope) and scope[j].text == "(":
        after, close = _balanced_group(scope, j, "(", ")")
        params_text = source[scope[j].pos : scope[close].pos + 1]
        j = after

    # function return type: ": T" ; method returns "(...)"
    returns_text = ""
    if j < len(scope) and scope[j].text == ":":
        k = j + 1
        while k < len(scope) and scope[k].text not in ("{", ";") and scope[k].text not in _CLAUSE_KEYWORDS:
            k += 1
        returns_text = source[scope[j].pos : scope[k - 1].pos + len(scope[k - 1].text)] if k > j + 1 else ""
        j = k
    elif j < len(scope) and scope[j].kind == "ident" and scope[j].text == "returns":
        k = j + 1
        if k < len(scope) and scope[k].text == "(":
            after, close = _balanced_group(scope, k, "(", ")")
            returns_text = source[scope[j].pos : scope[close].pos + 1]
            j = after

    clauses: list[tuple[str, str]] = []
    while j < len(scope) and not (scope[j].text == "{" and not _is_attr_open(scope, j)):
        if scope[j].kind == "ident" and scope[j].text in _CLAUSE_KEYWORDS:
            kw = scope[j].text
            k = j + 1
            depth = 0
            while k < len(scope):
                txt = scope[k].text
                if txt in ("(", "[", "<"):
                    depth += 1
                elif txt in (")", "]", ">"):
                    depth -= 1
                elif depth == 0 and (txt in _CLAUSE_KEYWORDS or txt == "{" and not _is_attr_open(scope, k)):
                    break
                elif depth == 0 and txt == ";":
                    break
                k += 1
            end_tok = scope[k - 1]
            clauses.append((kw, source[scope[j + 1].pos : end_tok.pos + len(end_tok.text)].strip()))
            j = k
        else:
            j += 1

    body_span = None
    decl_end = scope[j - 1].pos + len(scope[j - 1].text) if j > 0 else start
    if j < len(scope) and scope[j].text == "{":
        close = _match_brace(scope, j)
        if close is None:
            return None, j + 1
        body_span = (scope[j].pos, scope[close].pos)
        decl_end = scope[close].pos + 1
        j = close + 1

    doc = any(start - 400 < p < start for p in comment_positions)
    return (
        MethodDecl(
            kind=kind,
            name=name,
            attrs=attrs,
            params_text=params_text,
            returns_text=returns_text,
            clauses=clauses,
            body_span=body_span,
            span=(start, decl_end),
            doc_comment=doc,
        ),
        j,
    )


def _is_attr_open(scope: list[Token], j: int) -> bool:
    return scope[j].text == "{" and j + 1 < len(scope) and scope[j + 1].text == ":"


def body_text(source: str, decl: MethodDecl) -> str:
    """Interior of a declaration's outermost braces, byte-exact."""
    if decl.body_span is None:
        return ""
    open_pos, close_pos = decl.body_span
    return source[open_pos + 1 : close_pos]


def is_stub_body(body: str) -> bool:
    """True when the body is exactly `assume {:axiom} false;` modulo comments."""
    return token_texts(body) == STUB_BODY_TOKENS


def param_count(params_text: str) -> int:
    """Arity from a `(...)` parameter list: top-level commas at depth 0.

    Sufficient for benchmark-style signatures; anything deeper is the
    verifier's problem.
    """
    inner = params_text.strip()
    if inner.startswith("("):
        inner = inner[1:]
    if inner.endswith(")"):
        inner = inner[:-1]
    if not inner.strip():
        return 0
    depth = 0
    count = 1
    for t in tokenize(inner):
        if t.text in ("(", "[", "<"):
            depth += 1
        elif t.text in (")", "]", ">"):
            depth -= 1
        elif t.text == "," and depth == 0:
            count += 1
    return count


def find_decl(outline_: ModuleOutline, name: str) -> Optional[MethodDecl]:
    for d in outline_.decls:
        if d.name == name:
            return d
    return None


def entry_decl(outline_: ModuleOutline) -> Optional[MethodDecl]:
    entries = [d for d in outline_.decls if "testEntry" in d.attrs]
    return entries[0] if len(entries) == 1 else None
