"""Document-level entry points shared by the command line and the HTTP service.

Everything here takes and returns plain JSON-ready values, so the two front
ends produce identical bytes for identical inputs.
"""

from __future__ import annotations

from collections.abc import Mapping

from . import docio
from .chart import chart_from_doc
from .costmodel import CostModel, cost_model_from_doc, load_cost_model
from .errors import AnimtxError, DocumentError, ValidationFailed
from .fixtures import REFERENCE_FIXTURES, fixture_docs
from .grammar import Diagnostic, transition_from_doc, validate_transition
from .plan import compile_plan, plan_to_doc
from .recommender import MAX_STAGES, recommend

DEFAULT_TOTAL_MS = 2000
DEFAULT_STAGES = (1, 2, 3)


def _charts(start_doc, end_doc):
    return chart_from_doc(start_doc, "start"), chart_from_doc(end_doc, "end")


def validate_docs(start_doc, end_doc, spec_doc, total_duration=None) -> list[Diagnostic]:
    start, end = _charts(start_doc, end_doc)
    spec = transition_from_doc(spec_doc, "transition")
    return validate_transition(spec, start, end, total_duration)


def compile_docs(start_doc, end_doc, spec_doc, total_duration=None) -> dict:
    """Plan document for a chart pair and transition; ValidationFailed on diagnostics."""
    start, end = _charts(start_doc, end_doc)
    spec = transition_from_doc(spec_doc, "transition")
    diags = validate_transition(spec, start, end, total_duration)
    if diags:
        raise ValidationFailed(diags)
    return plan_to_doc(compile_plan(start, end, spec, total_duration))


def resolve_cost_model(value) -> CostModel:
    if value is None:
        return load_cost_model("tuned")
    if isinstance(value, Mapping):
        return cost_model_from_doc(value, "costModel")
    return load_cost_model(str(value))


def parse_stages(value) -> tuple[int, ...]:
    """``3``, ``"1,2,3"``, ``"1-3"`` or a list, each count in [1, 4]."""
    if value is None:
        return DEFAULT_STAGES
    if isinstance(value, bool):
        raise DocumentError("stages must be an integer or a list of integers")
    if isinstance(value, int):
        out = [value]
    elif isinstance(value, str):
        out = []
        for part in value.split(","):
            part = part.strip()
            try:
                if "-" in part:
                    lo, hi = part.split("-", 1)
                    out.extend(range(int(lo), int(hi) + 1))
                else:
                    out.append(int(part))
            except ValueError:
                raise DocumentError(f"bad stage count {part!r}") from None
    elif isinstance(value, (list, tuple)) and all(
            isinstance(v, int) and not isinstance(v, bool) for v in value):
        out = list(value)
    else:
        raise DocumentError("stages must be an integer or a list of integers")
    if not out or min(out) < 1 or max(out) > MAX_STAGES:
        raise DocumentError(f"stage counts must lie in [1, {MAX_STAGES}], got {out}")
    return tuple(sorted(set(out)))


def recommend_docs(start_doc, end_doc, stages=None, total_ms=None, top=None, cost_model=None,
                   options=None):
    """``(recommendation, document)``; RecommendError when nothing survives."""
    start, end = _charts(start_doc, end_doc)
    total = DEFAULT_TOTAL_MS if total_ms is None else total_ms
    if isinstance(total, bool) or not isinstance(total, int) or total <= 0:
        raise DocumentError(f"totalDuration must be a positive integer (ms), got {total!r}")
    if top is not None and (isinstance(top, bool) or not isinstance(top, int) or top < 1):
        raise DocumentError(f"top must be a positive integer, got {top!r}")
    rec = recommend(start, end, parse_stages(stages), total, resolve_cost_model(cost_model),
                    top, options)
    return rec, rec.to_doc(top)


def example_docs() -> list[dict]:
    return [dict(fixture_docs(name), name=name) for name in REFERENCE_FIXTURES]


def diagnostics_doc(exc: AnimtxError) -> list[dict]:
    if isinstance(exc, ValidationFailed):
        return [d.to_doc() for d in exc.diagnostics]
    return [Diagnostic(type(exc).__name__, str(exc)).to_doc()]


def dumps(doc) -> str:
    return docio.dumps(doc)
