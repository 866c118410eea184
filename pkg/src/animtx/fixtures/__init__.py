"""Bundled example chart pairs with their transitions."""

from __future__ import annotations

import json
from importlib import resources

# chart pairs that recreate the published example transitions
REFERENCE_FIXTURES = ("zoom_lines", "dot_to_scatter", "trajectories", "bar_rescale")
EXTRA_FIXTURES = ("bar_rescale_increase", "sort_filter", "aggregation")
ALL_FIXTURES = REFERENCE_FIXTURES + EXTRA_FIXTURES
PARTS = ("start", "end", "transition")


def fixture_text(name: str, part: str) -> str:
    if name not in ALL_FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(ALL_FIXTURES)}")
    if part not in PARTS:
        raise KeyError(f"unknown fixture part {part!r}")
    return resources.files(__name__).joinpath(name).joinpath(f"{part}.json").read_text(encoding="utf-8")


def fixture_docs(name: str) -> dict:
    return {part: json.loads(fixture_text(name, part)) for part in PARTS}


def load_fixture(name: str):
    """``(start chart, end chart, transition)`` for a bundled fixture."""
    from ..chart import parse_chart
    from ..grammar import parse_transition
    return (parse_chart(fixture_text(name, "start"), f"{name}/start.json"),
            parse_chart(fixture_text(name, "end"), f"{name}/end.json"),
            parse_transition(fixture_text(name, "transition"), f"{name}/transition.json"))
