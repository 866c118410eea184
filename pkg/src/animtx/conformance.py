"""Reference vectors for independent plan players.

A player that evaluates plans itself should reproduce these easing values,
attribute interpolations and frame samples within 1e-6.
"""

from __future__ import annotations

from pathlib import Path

from . import docio
from .easing import EASES, ease_value
from .fixtures import load_fixture
from .plan import blend_color, compile_plan, interpolate_attrs, pair_vertices, plan_to_doc, sample

VECTOR_SCHEMA = ("conformance", 1)
EASE_POINTS = (0.0, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 1.0)
INTERP_POINTS = (0.0, 0.25, 0.5, 0.75, 1.0)

INTERP_CASES = (
    ({"x": 0, "y": 10, "opacity": 1}, {"x": 100, "y": -10, "opacity": 0}, None),
    ({"fill": "#000000"}, {"fill": "#ffffff"}, None),
    ({"fill": "#4c78a8", "shape": "circle"}, {"fill": "#f58518", "shape": "square"}, None),
    ({"text": "2005", "x": 3.5}, {"text": "2010", "x": -1.25}, None),
)
LINE_CASE = ([2000, 2001, 2002], [2000, 2001, 2002, 2003, 2004],
             [[0, 0], [10, 5], [20, 0]], [[0, 0], [5, 5], [10, 0], [15, 5], [20, 0]])
SAMPLE_FIXTURE = "zoom_lines"
SAMPLE_TIMES = (0, 450, 900, 1000, 1100, 1550, 2000)


def ease_vectors() -> list[dict]:
    return [{"ease": name, "u": u, "value": ease_value(name, u)}
            for name in EASES for u in EASE_POINTS]


def interpolation_vectors() -> list[dict]:
    out = []
    for a0, a1, pairs in INTERP_CASES:
        for u in INTERP_POINTS:
            out.append({"attrs0": a0, "attrs1": a1, "u": u, "pairs": pairs,
                        "result": interpolate_attrs(a0, a1, u, pairs)})
    k0, k1, p0, p1 = LINE_CASE
    pairs = pair_vertices(k0, k1)
    a0 = {"points": p0}
    a1 = {"points": p1}
    for u in INTERP_POINTS[1:-1]:
        out.append({"attrs0": a0, "attrs1": a1, "u": u, "pairs": [list(p) for p in pairs],
                    "result": interpolate_attrs(a0, a1, u, pairs)})
    return out


def color_vectors() -> list[dict]:
    pairs = (("#000000", "#ffffff"), ("#123456", "#abcdef"), ("#ff0000", "#0000ff"))
    return [{"c0": c0, "c1": c1, "u": u, "value": blend_color(c0, c1, u)}
            for c0, c1 in pairs for u in INTERP_POINTS]


def frame_vectors() -> dict:
    start, end, spec = load_fixture(SAMPLE_FIXTURE)
    plan = compile_plan(start, end, spec)
    return {"fixture": SAMPLE_FIXTURE, "plan": plan_to_doc(plan),
            "frames": [{"t": t, "elements": sample(plan, t)} for t in SAMPLE_TIMES]}


def build_vectors() -> dict:
    return {"schema": docio.schema_tag(*VECTOR_SCHEMA), "tolerance": 1e-6,
            "ease": ease_vectors(), "color": color_vectors(),
            "interpolate": interpolation_vectors(), "sample": frame_vectors()}


def write_vectors(path) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(docio.dumps(build_vectors(), pretty=True), encoding="utf-8")
