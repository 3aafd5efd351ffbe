"""Opacity fuzz harness shared by the fuzz test and the acceptance suite.

Generates random sessions: drafts, shape failures, refinements, accepts,
wrong-state pokes, with leak attempts seeded into scripted model responses
(summaries that contain internal keywords, fences or tool tags). Every HTTP
response body must come back clean; every seeded leak must be caught by
regeneration or withheld.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from fastapi.testclient import TestClient

from dafnypilot.engine import Engine
from dafnypilot.fixtures import ScriptedBackend
from dafnypilot.llm_gateway import Cassette, LlmGateway, Purpose
from dafnypilot.prompt_kit import PromptAssets
from dafnypilot.service.api import create_app
from dafnypilot.service.redaction import RedactionViolation, redact
from dafnypilot.service.sessions import EventStore, SessionManager
from dafnypilot.spec_loop import WITHHELD_SUMMARY

LEAKS = [
    "The method ensures result == 0 for small inputs.",
    "Internally: ```dafny\nmethod leak() {}\n``` as you can see.",
    "Raw payload <<tool:spec_synthesis>> follows.",
    "It requires n at least zero, decreases on n.",
    "We model it as a datatype with a lemma.",
    "The body is assume {:axiom} false; for now.",
    "expect t0 == 0; is checked first.",
]

def clean_summary(entry: str, variant: int) -> str:
    # summaries must differ per revision: the reconstruction request is a
    # pure function of the summary, and identical requests must replay
    # identical answers
    return f"""The function {entry} takes one whole number and returns one whole number, matching a fixed reference definition for every valid input (revision {variant}).

Key differences:
1. The expected behaviour is pinned to an explicit reference definition.
2. Your examples become runnable checks of the final program."""


def spec_source(entry: str) -> str:
    return f"""module M {{
  function {entry}Func(n: int): int
  {{
    n
  }}

  /*
  Return the same whole number that was provided.
  */
  method {{:testEntry}} {entry}(n: int) returns (result: int)
    ensures result == {entry}Func(n)
  {{
    assume {{:axiom}} false; // YOUR CODE HERE
  }}

  method Main() {{
    var t0 := {entry}(0);
    expect t0 == 0;
  }}
}}"""


def impl_source(entry: str) -> str:
    return spec_source(entry).replace(
        "    assume {:axiom} false; // YOUR CODE HERE", "    result := n;"
    )


def task_text(entry: str) -> str:
    return (
        f"def {entry}(n):\n"
        f'    """Return the same whole number that was provided.\n'
        f"    >>> {entry}(0)\n"
        f"    0\n"
        f'    """\n'
    )


def _fenced(source: str) -> str:
    return f"```dafny\n{source}\n```"


@dataclass
class FuzzStats:
    sessions: int = 0
    responses_checked: int = 0
    leaks_seeded: int = 0
    leaks_caught_by_regen: int = 0
    leaks_withheld: int = 0
    dirty_responses: list = field(default_factory=list)


def _draft_script(rng: random.Random, entry: str, stats: FuzzStats, variant: int):
    """Script for one draft/refine round; returns (entries, summary_mode)."""
    script = []
    for _ in range(rng.choice([0, 0, 0, 1, 2])):
        script.append((Purpose.SPEC_GEN, f"no fence here, attempt noise {rng.random()}"))
    source = spec_source(entry) + ("" if variant == 0 else f"\n// revision marker {variant}")
    script.append((Purpose.SPEC_GEN, _fenced(source)))

    summary_mode = rng.choices(["clean", "leak_then_clean", "leak_all"], weights=[6, 3, 1])[0]
    summary = clean_summary(entry, variant)
    if summary_mode == "clean":
        script.append((Purpose.SUMMARY, summary))
    elif summary_mode == "leak_then_clean":
        stats.leaks_seeded += 1
        script.append((Purpose.SUMMARY, rng.choice(LEAKS)))
        script.append((Purpose.SUMMARY, summary))
    else:
        stats.leaks_seeded += 1
        for _ in range(3):
            script.append((Purpose.SUMMARY, rng.choice(LEAKS)))

    if summary_mode != "leak_all":
        # identical reconstruction short-circuits before the judge
        script.append((Purpose.RECONSTRUCT, _fenced(source)))
    return script, summary_mode, source


def run_opacity_fuzz(n_sessions: int, seed: int, data_dir, fake_driver_factory, assets: PromptAssets) -> FuzzStats:
    rng = random.Random(seed)
    stats = FuzzStats()
    store = EventStore(data_dir)

    for i in range(n_sessions):
        entry = f"fn{i}"
        script = []
        revisions = rng.choice([0, 0, 1, 1, 2])
        modes = []
        for variant in range(revisions + 1):
            part, mode, source = _draft_script(rng, entry, stats, variant)
            script += part
            modes.append(mode)
        will_accept = rng.random() < 0.7
        if will_accept:
            script.append((Purpose.IMPL_GEN, _fenced(impl_source(entry))))

        backend = ScriptedBackend(script)
        gateway = LlmGateway(mode="record", cassette=Cassette(), live=backend)
        engine = Engine(gateway=gateway, driver=fake_driver_factory(), assets=assets)
        manager = SessionManager(engine, store, inline_jobs=True)
        client = TestClient(create_app(manager), raise_server_exceptions=True)

        def check(response):
            stats.responses_checked += 1
            verdict = redact(response.text)
            if isinstance(verdict, RedactionViolation):
                stats.dirty_responses.append((i, str(verdict), response.text[:200]))

        response = client.post("/sessions")
        check(response)
        sid = response.json()["id"]

        check(client.post(f"/sessions/{sid}/messages", json={"text": task_text(entry)}))
        for r in range(revisions):
            check(
                client.post(
                    f"/sessions/{sid}/messages",
                    json={"text": f"please adjust detail {r} of the behaviour"},
                )
            )

        view = client.get(f"/sessions/{sid}")
        check(view)
        summary_now = view.json()["draft"]["summary"]
        final_mode = modes[-1]
        if final_mode == "leak_all":
            assert summary_now == WITHHELD_SUMMARY
            stats.leaks_withheld += 1
        elif final_mode == "leak_then_clean":
            assert "matching a fixed reference definition" in summary_now
            stats.leaks_caught_by_regen += 1

        if will_accept:
            check(client.post(f"/sessions/{sid}/accept"))
            check(client.get(f"/sessions/{sid}"))
            check(client.get(f"/sessions/{sid}/deliverable"))
            # wrong-state poke after delivery
            check(client.post(f"/sessions/{sid}/messages", json={"text": "one more thing"}))
        else:
            # wrong-state pokes while awaiting agreement
            check(client.get(f"/sessions/{sid}/deliverable"))

        backend.assert_exhausted()
        stats.sessions += 1

    return stats
