"""Component states: the unit the change fetcher threads through a timeline.

A state captures everything needed to render one component (a mark, an axis,
a legend or the view frame): its data rows, encodings, concrete scales,
layout signals and mark type. States are immutable; stepping produces new
instances via :func:`dataclasses.replace`.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from typing import Any

from .chart import AxisDef, ChartSpec, DatasetDef, LegendDef, MarkDef, apply_transforms

COMPONENT_KINDS = ("mark", "axis", "legend", "view")
VIEW_NAME = "view"


@dataclass(frozen=True)
class ComponentState:
    kind: str
    name: str
    present: bool = True
    mark: MarkDef | None = None
    dataset: DatasetDef | None = None
    rows: tuple[dict, ...] = ()
    guide: AxisDef | LegendDef | None = None
    overrides: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)
    scales: Mapping[str, Any] = field(default_factory=dict)
    signals: Mapping[str, float] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str]:
        return (self.kind, self.name)

    @property
    def encodings(self):
        return self.mark.encodings if self.mark is not None else {}

    @property
    def mark_type(self) -> str | None:
        return self.mark.mark_type if self.mark is not None else None

    def with_encodings(self, encodings) -> "ComponentState":
        return replace(self, mark=replace(self.mark, encodings=dict(encodings)))

    def with_mark_type(self, mark_type: str) -> "ComponentState":
        return replace(self, mark=replace(self.mark, mark_type=mark_type))


def state_from_chart(chart: ChartSpec, kind: str, name: str) -> ComponentState | None:
    """The state of component ``(kind, name)`` in ``chart``; None when absent."""
    scales = {s.name: s for s in chart.scales}
    signals = chart.signals
    if kind == "view":
        return ComponentState("view", VIEW_NAME, signals=signals, scales=scales)
    if kind == "mark":
        m = chart.mark(name)
        if m is None:
            return None
        ds = chart.dataset(m.dataset)
        return ComponentState("mark", name, mark=m, dataset=ds, rows=apply_transforms(ds),
                              scales=scales, signals=signals)
    if kind in ("axis", "legend"):
        g = chart.axis(name) if kind == "axis" else chart.legend(name)
        if g is None:
            return None
        return ComponentState(kind, name, guide=g, scales=scales, signals=signals)
    raise ValueError(f"unknown component kind {kind!r}")


def endpoint_states(start: ChartSpec, end: ChartSpec, kind: str, name: str
                    ) -> tuple[ComponentState, ComponentState]:
    """Start and end states for one component.

    A component present on one side only gets an absent ("ghost") state on
    the other side that keeps the present side's definition, so entering
    and exiting components can still be rendered and checked.
    """
    s = state_from_chart(start, kind, name)
    e = state_from_chart(end, kind, name)
    if s is None and e is None:
        raise KeyError(f"{kind} {name!r} exists in neither chart")
    if s is None:
        s = replace(e, present=False, scales={x.name: x for x in start.scales},
                    signals=start.signals)
    if e is None:
        e = replace(s, present=False, scales={x.name: x for x in end.scales},
                    signals=end.signals)
    return s, e


def chart_components(chart: ChartSpec) -> list[tuple[str, str]]:
    """Components of a chart in render order."""
    comps = [("view", VIEW_NAME)]
    comps += [("mark", m.name) for m in chart.marks]
    comps += [("axis", a.name) for a in chart.axes]
    comps += [("legend", g.name) for g in chart.legends]
    return comps


def paired_components(start: ChartSpec, end: ChartSpec) -> list[tuple[str, str]]:
    """Union of both charts' components, start order first."""
    seen = []
    for c in chart_components(start) + chart_components(end):
        if c not in seen:
            seen.append(c)
    return seen


@dataclass(frozen=True)
class KeyPolicy:
    """How rows of one mark are keyed for joins and element ids.

    Precedence: grouping fields shared by both endpoint datasets (when the
    rows at hand are aggregated), then user-provided key fields, then the
    mark's own ``key``, then the aggregate's groupby, then the row index.
    """

    shared: tuple[str, ...] | None = None
    user: tuple[str, ...] | None = None

    def fields_for(self, mark: MarkDef | None, dataset: DatasetDef | None,
                   rows) -> tuple[str, ...] | None:
        agg = dataset.aggregate if dataset is not None else None
        present = set(rows[0]) if rows else None

        def usable(fields):
            return fields and (present is None or all(f in present for f in fields))

        if agg is not None and usable(self.shared):
            return self.shared
        if usable(self.user):
            return self.user
        if mark is not None and usable(mark.key):
            return mark.key
        if agg is not None and usable(agg.groupby):
            return agg.groupby
        return None

    def to_doc(self) -> dict:
        return {"shared": list(self.shared) if self.shared else None,
                "user": list(self.user) if self.user else None}

    @classmethod
    def from_doc(cls, doc) -> "KeyPolicy":
        return cls(tuple(doc["shared"]) if doc.get("shared") else None,
                   tuple(doc["user"]) if doc.get("user") else None)


def resolve_key_policy(start: ChartSpec, end: ChartSpec, mark_name: str,
                       user_keys=None) -> KeyPolicy:
    """Join-key policy for a mark across the two endpoint charts."""
    shared = None
    ms, me = start.mark(mark_name), end.mark(mark_name)
    if ms is not None and me is not None:
        a, b = start.dataset(ms.dataset).aggregate, end.dataset(me.dataset).aggregate
        if a is not None and b is not None:
            common = tuple(g for g in a.groupby if g in b.groupby)
            shared = common or None
    return KeyPolicy(shared, tuple(user_keys) if user_keys else None)
