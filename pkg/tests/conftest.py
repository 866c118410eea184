import copy
import math

import pytest
from hypothesis import HealthCheck, settings

from animtx.chart import chart_from_doc
from animtx.fixtures import fixture_docs, load_fixture
from animtx.scene import render_scene

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def bar_doc(values, ymax, cats=None, height=300, ymin=0):
    """A bar chart document: one rect per category over a linear y scale
    whose bars grow from ``ymin``."""
    cats = cats or [chr(ord("A") + i) for i in range(len(values))]
    return {
        "schema": "animtx.chart/1", "width": 400, "height": height,
        "datasets": [{"name": "table", "rows": [{"cat": c, "value": v} for c, v in zip(cats, values)]}],
        "scales": [
            {"name": "x", "type": "band", "domain": list(cats), "range": [0, 400], "padding": 0.2,
             "domainSource": {"data": "table", "field": "cat"}},
            {"name": "y", "type": "linear", "domain": [ymin, ymax], "range": [height, 0],
             "domainSource": {"data": "table", "field": "value"}},
        ],
        "marks": [{"name": "bars", "type": "rect", "from": "table", "key": ["cat"],
                   "encode": {"x": {"field": "cat", "scale": "x"},
                              "width": {"band": True, "scale": "x"},
                              "y": {"field": "value", "scale": "y"},
                              "y2": {"value": ymin, "scale": "y"}}}],
        "axes": [{"name": "x-axis", "orient": "x", "scale": "x", "titleText": "category"},
                 {"name": "y-axis", "orient": "y", "scale": "y", "titleText": "value"}],
    }


def bar_chart(values, ymax, **kw):
    return chart_from_doc(bar_doc(values, ymax, **kw))


def scene_attrs(chart, keys=None):
    return {el.element_id: el.attrs for el in render_scene(chart, keys).elements}


def attrs_close(a, b, tol=1e-9):
    """Per-attribute equality with a numeric tolerance (nested lists allowed)."""
    if isinstance(a, dict) and isinstance(b, dict):
        return set(a) == set(b) and all(attrs_close(a[k], b[k], tol) for k in a)
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return len(a) == len(b) and all(attrs_close(x, y, tol) for x, y in zip(a, b))
    if isinstance(a, (int, float)) and isinstance(b, (int, float)) \
            and not isinstance(a, bool) and not isinstance(b, bool):
        return math.isclose(a, b, rel_tol=0, abs_tol=tol)
    return a == b


@pytest.fixture
def zoom():
    return load_fixture("zoom_lines")


@pytest.fixture
def zoom_docs():
    return copy.deepcopy(fixture_docs("zoom_lines"))


_SESSION = {}


def pytest_sessionstart(session):
    import time
    _SESSION["t0"] = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    import sys
    import time
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)
    dt = time.perf_counter() - _SESSION.get("t0", time.perf_counter())
    terminalreporter.write_line(f"session wall time {dt:.1f} s (budget 60 s for the full suite): "
                                f"{'PASS' if dt < 60 else 'FAIL'}")
