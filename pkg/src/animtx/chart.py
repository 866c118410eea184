"""Single-view chart documents: types, parsing, serialization and data transforms.

A chart is a small grammar-of-graphics description: named datasets (rows plus
an ordered filter/aggregate pipeline), named scales, marks that bind data
fields to visual channels through scales, and axis/legend guides. The same
structure is used for the start and the end state of a transition.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

from . import docio
from .errors import ChartError, DocumentError, TransformError

CHART_SCHEMA = ("chart", 1)

SCALE_KINDS = ("linear", "time", "band", "point", "ordinal-color", "ordinal")
CONTINUOUS_KINDS = ("linear", "time")
DISCRETE_KINDS = ("band", "point", "ordinal-color", "ordinal")
MARK_TYPES = ("symbol", "rect", "line", "text")
CHANNELS = ("x", "y", "x2", "y2", "width", "height", "color", "shape", "size", "opacity", "text")
AGG_OPS = ("mean", "sum", "count", "min", "max")
COMPARATORS = ("<", "<=", "==", ">=", ">", "in")
_COMPARATOR_ALIASES = {"=": "==", "≤": "<=", "≥": ">=", "∈": "in"}

# which channels each mark type accepts
MARK_CHANNELS: dict[str, frozenset[str]] = {
    "symbol": frozenset({"x", "y", "color", "shape", "size", "opacity"}),
    "rect": frozenset({"x", "y", "x2", "y2", "width", "height", "color", "opacity"}),
    "line": frozenset({"x", "y", "color", "opacity"}),
    "text": frozenset({"x", "y", "text", "color", "opacity"}),
}

AXIS_PARTS = ("domain", "ticks", "labels", "grid", "title")
LEGEND_PARTS = ("symbols", "labels", "title")
_AXIS_PART_DEFAULTS = {"domain": True, "ticks": True, "labels": True, "grid": False, "title": True}
LEGEND_CHANNEL_KINDS = {"color": ("ordinal-color",), "shape": ("ordinal",), "size": ("linear",)}
SIGNAL_NAMES = ("width", "height")


@dataclass(frozen=True)
class FilterTransform:
    field: str
    op: str
    value: Any

    def test(self, row: Mapping[str, Any]) -> bool:
        v = row[self.field]
        rhs = self.value
        if self.op == "in":
            return v in rhs
        if self.op == "==":
            return v == rhs
        try:
            if self.op == "<":
                return v < rhs
            if self.op == "<=":
                return v <= rhs
            if self.op == ">=":
                return v >= rhs
            return v > rhs
        except TypeError:
            raise TransformError(
                f"cannot compare field {self.field!r} value {v!r} with {rhs!r}") from None


@dataclass(frozen=True)
class Measure:
    op: str
    field: str | None
    out: str


@dataclass(frozen=True)
class AggregateTransform:
    groupby: tuple[str, ...]
    measures: tuple[Measure, ...]


Transform = FilterTransform | AggregateTransform


@dataclass(frozen=True)
class DatasetDef:
    name: str
    rows: tuple[dict, ...]
    transforms: tuple[Transform, ...] = ()

    @property
    def aggregate(self) -> AggregateTransform | None:
        """The last aggregate transform of the pipeline, if any."""
        for t in reversed(self.transforms):
            if isinstance(t, AggregateTransform):
                return t
        return None

    def filters_on(self, field_name: str, op: str | None = None) -> list[FilterTransform]:
        return [t for t in self.transforms if isinstance(t, FilterTransform)
                and t.field == field_name and (op is None or t.op == op)]


@dataclass(frozen=True)
class ScaleDef:
    name: str
    kind: str
    domain: tuple
    range: tuple
    domain_source: tuple[str, str] | None = None
    padding: float = 0.0

    @property
    def is_continuous(self) -> bool:
        return self.kind in CONTINUOUS_KINDS


@dataclass(frozen=True)
class Encoding:
    """One channel binding: a constant, a field through a scale, a constant
    through a scale, or the bandwidth of a band scale."""

    field: str | None = None
    scale: str | None = None
    value: Any = None
    band: bool = False

    def to_doc(self) -> dict:
        doc: dict[str, Any] = {}
        if self.field is not None:
            doc["field"] = self.field
        if self.scale is not None:
            doc["scale"] = self.scale
        if self.value is not None:
            doc["value"] = self.value
        if self.band:
            doc["band"] = True
        return doc


@dataclass(frozen=True)
class MarkDef:
    name: str
    mark_type: str
    dataset: str
    encodings: Mapping[str, Encoding]
    key: tuple[str, ...] | None = None
    order: str | None = None


@dataclass(frozen=True)
class AxisDef:
    name: str
    orient: str
    scale: str
    parts: frozenset[str] = frozenset({"domain", "ticks", "labels", "title"})
    title: str = ""
    tick_count: int = 5


@dataclass(frozen=True)
class LegendDef:
    name: str
    channel: str
    scale: str
    parts: frozenset[str] = frozenset(LEGEND_PARTS)
    title: str = ""


@dataclass(frozen=True)
class ChartSpec:
    width: float
    height: float
    datasets: tuple[DatasetDef, ...] = ()
    scales: tuple[ScaleDef, ...] = ()
    marks: tuple[MarkDef, ...] = ()
    axes: tuple[AxisDef, ...] = ()
    legends: tuple[LegendDef, ...] = ()

    @property
    def signals(self) -> dict[str, float]:
        return {"width": self.width, "height": self.height}

    def dataset(self, name: str) -> DatasetDef | None:
        return next((d for d in self.datasets if d.name == name), None)

    def scale(self, name: str) -> ScaleDef | None:
        return next((s for s in self.scales if s.name == name), None)

    def mark(self, name: str) -> MarkDef | None:
        return next((m for m in self.marks if m.name == name), None)

    def axis(self, name: str) -> AxisDef | None:
        return next((a for a in self.axes if a.name == name), None)

    def legend(self, name: str) -> LegendDef | None:
        return next((g for g in self.legends if g.name == name), None)

    def component(self, kind: str, name: str):
        if kind == "mark":
            return self.mark(name)
        if kind == "axis":
            return self.axis(name)
        if kind == "legend":
            return self.legend(name)
        if kind == "view":
            return self
        return None

    def rows(self, dataset: str) -> tuple[dict, ...]:
        ds = self.dataset(dataset)
        if ds is None:
            raise ChartError(f"unknown dataset {dataset!r}")
        return apply_transforms(ds)


# --------------------------------------------------------------------------
# transforms

def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def transform_schema(fields: frozenset[str], transforms) -> frozenset[str]:
    """Field set after running ``transforms``; raises on unknown fields."""
    for t in transforms:
        if isinstance(t, FilterTransform):
            if t.field not in fields:
                raise TransformError(f"filter on unknown field {t.field!r}")
        else:
            for g in t.groupby:
                if g not in fields:
                    raise TransformError(f"aggregate groupby on unknown field {g!r}")
            for m in t.measures:
                if m.field is not None and m.field not in fields:
                    raise TransformError(f"aggregate {m.op} over unknown field {m.field!r}")
            fields = frozenset(t.groupby) | {m.out for m in t.measures}
    return fields


def _aggregate(rows: list[dict], agg: AggregateTransform) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault(tuple(row[g] for g in agg.groupby), []).append(row)
    out = []
    for key, members in groups.items():
        rec = dict(zip(agg.groupby, key))
        for m in agg.measures:
            if m.op == "count":
                rec[m.out] = len(members)
                continue
            values = [r[m.field] for r in members]
            bad = [v for v in values if not _is_number(v)]
            if bad:
                raise TransformError(f"{m.op} over non-numeric field {m.field!r} (value {bad[0]!r})")
            if m.op == "sum":
                rec[m.out] = sum(values)
            elif m.op == "mean":
                rec[m.out] = math.fsum(values) / len(values)
            elif m.op == "min":
                rec[m.out] = min(values)
            else:
                rec[m.out] = max(values)
        out.append(rec)
    return out


def apply_transforms(dataset: DatasetDef) -> tuple[dict, ...]:
    """Run the dataset's filter/aggregate pipeline in order."""
    rows = [dict(r) for r in dataset.rows]
    fields = frozenset(rows[0]) if rows else None
    for t in dataset.transforms:
        if fields is not None:
            fields = transform_schema(fields, (t,))
        if isinstance(t, FilterTransform):
            rows = [r for r in rows if t.test(r)]
        else:
            rows = _aggregate(rows, t)
    return tuple(rows)


# --------------------------------------------------------------------------
# parsing

def _req(doc: Mapping, key: str, where: str):
    if key not in doc:
        raise ChartError(f"{where}: missing required field {key!r}")
    return doc[key]


def _name(doc: Mapping, where: str) -> str:
    name = _req(doc, "name", where)
    if not isinstance(name, str) or not name:
        raise ChartError(f"{where}: name must be a non-empty string")
    return name


def parse_comparator(op: str, where: str) -> str:
    op = _COMPARATOR_ALIASES.get(op, op)
    if op not in COMPARATORS:
        raise ChartError(f"{where}: unknown comparator {op!r}")
    return op


def parse_transform(doc: Mapping, where: str) -> Transform:
    if not isinstance(doc, Mapping) or len(doc) != 1:
        raise ChartError(f"{where}: a transform is an object with exactly one of 'filter'/'aggregate'")
    (kind, body), = doc.items()
    if kind == "filter":
        op = parse_comparator(_req(body, "op", where), where)
        value = _req(body, "value", where)
        if op == "in":
            if not isinstance(value, list):
                raise ChartError(f"{where}: 'in' filter needs a list value")
            value = tuple(value)
        return FilterTransform(_req(body, "field", where), op, value)
    if kind == "aggregate":
        measures = []
        for m in _req(body, "measures", where):
            op = _req(m, "op", where)
            if op not in AGG_OPS:
                raise ChartError(f"{where}: unknown aggregate op {op!r}")
            fld = m.get("field")
            if fld is None and op != "count":
                raise ChartError(f"{where}: aggregate {op} needs a field")
            measures.append(Measure(op, fld, m.get("as") or (fld if fld else "count")))
        return AggregateTransform(tuple(body.get("groupby", ())), tuple(measures))
    raise ChartError(f"{where}: unknown transform {kind!r}")


def parse_dataset(doc: Mapping) -> DatasetDef:
    name = _name(doc, "dataset")
    where = f"dataset {name!r}"
    rows = _req(doc, "rows", where)
    if not isinstance(rows, list) or not all(isinstance(r, dict) for r in rows):
        raise ChartError(f"{where}: rows must be a list of objects")
    if rows:
        keys = set(rows[0])
        for i, r in enumerate(rows):
            if set(r) != keys:
                raise ChartError(f"{where}: row {i} has fields {sorted(r)}, expected {sorted(keys)}")
    transforms = tuple(parse_transform(t, where) for t in doc.get("transforms", ()))
    ds = DatasetDef(name, tuple(dict(r) for r in rows), transforms)
    if rows:
        try:
            transform_schema(frozenset(rows[0]), transforms)
        except TransformError as exc:
            raise ChartError(f"{where}: {exc}") from None
    return ds


def _check_hex(c: Any, where: str) -> None:
    if not (isinstance(c, str) and len(c) == 7 and c[0] == "#"
            and all(ch in "0123456789abcdefABCDEF" for ch in c[1:])):
        raise ChartError(f"{where}: {c!r} is not a #rrggbb color")


def parse_scale(doc: Mapping) -> ScaleDef:
    name = _name(doc, "scale")
    where = f"scale {name!r}"
    kind = _req(doc, "type", where)
    if kind not in SCALE_KINDS:
        raise ChartError(f"{where}: unknown scale type {kind!r}")
    domain = tuple(_req(doc, "domain", where))
    rng = tuple(_req(doc, "range", where))
    if kind in CONTINUOUS_KINDS:
        if len(domain) != 2 or not all(_is_number(v) for v in domain) or domain[0] > domain[1]:
            raise ChartError(f"{where}: continuous domain must be [lo, hi] with lo <= hi")
    else:
        if not domain:
            raise ChartError(f"{where}: discrete domain must be non-empty")
        if len(set(domain)) != len(domain):
            raise ChartError(f"{where}: discrete domain has duplicates")
    if kind == "ordinal-color":
        if not rng:
            raise ChartError(f"{where}: color range must be non-empty")
        for c in rng:
            _check_hex(c, where)
    elif kind == "ordinal":
        if not rng:
            raise ChartError(f"{where}: ordinal range must be non-empty")
    elif len(rng) != 2 or not all(_is_number(v) for v in rng):
        raise ChartError(f"{where}: range must be [a, b] in pixels")
    src = doc.get("domainSource")
    source = None
    if src is not None:
        source = (_req(src, "data", where), _req(src, "field", where))
    padding = doc.get("padding", 0)
    if not _is_number(padding) or not 0 <= padding < 1:
        raise ChartError(f"{where}: padding must be in [0, 1)")
    return ScaleDef(name, kind, domain, rng, source, float(padding))


def parse_encoding(doc: Mapping, channel: str, where: str) -> Encoding:
    if not isinstance(doc, Mapping):
        raise ChartError(f"{where}: channel {channel!r} must be an object")
    unknown = set(doc) - {"field", "scale", "value", "band"}
    if unknown:
        raise ChartError(f"{where}: channel {channel!r} has unknown keys {sorted(unknown)}")
    enc = Encoding(doc.get("field"), doc.get("scale"), doc.get("value"), bool(doc.get("band", False)))
    if enc.band:
        if enc.scale is None or enc.field is not None or enc.value is not None:
            raise ChartError(f"{where}: channel {channel!r}: 'band' takes only a scale")
    elif enc.field is not None:
        if enc.scale is None and channel != "text":
            raise ChartError(f"{where}: channel {channel!r}: field needs a scale")
        if enc.value is not None:
            raise ChartError(f"{where}: channel {channel!r}: field and value are exclusive")
    elif enc.value is None:
        raise ChartError(f"{where}: channel {channel!r} needs a field, a value or band")
    if channel == "color" and enc.scale is None and enc.value is not None:
        _check_hex(enc.value, where)
    return enc


def parse_mark(doc: Mapping) -> MarkDef:
    name = _name(doc, "mark")
    where = f"mark {name!r}"
    mtype = _req(doc, "type", where)
    if mtype not in MARK_TYPES:
        raise ChartError(f"{where}: unknown mark type {mtype!r}")
    enc_doc = doc.get("encode", {})
    encodings = {}
    for ch, e in enc_doc.items():
        if ch not in CHANNELS:
            raise ChartError(f"{where}: unknown channel {ch!r}")
        if ch not in MARK_CHANNELS[mtype]:
            raise ChartError(f"{where}: channel {ch!r} is illegal for mark type {mtype!r}")
        encodings[ch] = parse_encoding(e, ch, where)
    key = doc.get("key")
    return MarkDef(name, mtype, _req(doc, "from", where), encodings,
                   tuple(key) if key is not None else None, doc.get("order"))


def parse_axis(doc: Mapping) -> AxisDef:
    name = _name(doc, "axis")
    where = f"axis {name!r}"
    orient = _req(doc, "orient", where)
    if orient not in ("x", "y"):
        raise ChartError(f"{where}: orient must be 'x' or 'y'")
    parts = frozenset(p for p in AXIS_PARTS if doc.get(p, _AXIS_PART_DEFAULTS[p]))
    count = doc.get("tickCount", 5)
    if not isinstance(count, int) or isinstance(count, bool) or count < 2:
        raise ChartError(f"{where}: tickCount must be an integer >= 2")
    return AxisDef(name, orient, _req(doc, "scale", where), parts, doc.get("titleText", ""), count)


def parse_legend(doc: Mapping) -> LegendDef:
    name = _name(doc, "legend")
    where = f"legend {name!r}"
    channel = _req(doc, "channel", where)
    if channel not in LEGEND_CHANNEL_KINDS:
        raise ChartError(f"{where}: legend channel must be one of {sorted(LEGEND_CHANNEL_KINDS)}")
    parts = frozenset(p for p in LEGEND_PARTS if doc.get(p, True))
    return LegendDef(name, channel, _req(doc, "scale", where), parts, doc.get("titleText", ""))


def _unique(items, what: str) -> None:
    seen = set()
    for it in items:
        if it.name in seen:
            raise ChartError(f"duplicate {what} name {it.name!r}")
        seen.add(it.name)


def check_chart(spec: ChartSpec) -> None:
    """Cross-reference invariants of a chart; raises ChartError."""
    if not (spec.width > 0 and spec.height > 0):
        raise ChartError("width and height must be > 0")
    for coll, what in ((spec.datasets, "dataset"), (spec.scales, "scale"), (spec.marks, "mark"),
                       (spec.axes, "axis"), (spec.legends, "legend")):
        _unique(coll, what)
    schemas = {}
    for ds in spec.datasets:
        schemas[ds.name] = (transform_schema(frozenset(ds.rows[0]), ds.transforms)
                            if ds.rows else None)
    for sc in spec.scales:
        if sc.domain_source is not None:
            d, f = sc.domain_source
            if d not in schemas:
                raise ChartError(f"scale {sc.name!r}: dangling dataset reference {d!r}")
            if schemas[d] is not None and f not in schemas[d]:
                raise ChartError(f"scale {sc.name!r}: domainSource field {f!r} not in dataset {d!r}")
    for m in spec.marks:
        where = f"mark {m.name!r}"
        if m.dataset not in schemas:
            raise ChartError(f"{where}: dangling dataset reference {m.dataset!r}")
        fields = schemas[m.dataset]
        for ch, enc in m.encodings.items():
            if ch not in MARK_CHANNELS[m.mark_type]:
                raise ChartError(f"{where}: channel {ch!r} is illegal for mark type {m.mark_type!r}")
            if enc.scale is not None:
                sc = spec.scale(enc.scale)
                if sc is None:
                    raise ChartError(f"{where}: channel {ch!r}: dangling scale reference {enc.scale!r}")
                if enc.band and sc.kind != "band":
                    raise ChartError(f"{where}: channel {ch!r}: 'band' needs a band scale")
                if ch == "color" and sc.kind != "ordinal-color":
                    raise ChartError(f"{where}: color channel needs an ordinal-color scale")
                if ch == "shape" and sc.kind != "ordinal":
                    raise ChartError(f"{where}: shape channel needs an ordinal scale")
            if enc.field is not None and fields is not None and enc.field not in fields:
                raise ChartError(f"{where}: channel {ch!r}: field {enc.field!r} not in dataset")
        for extra in (m.key or ()) + ((m.order,) if m.order else ()):
            if fields is not None and extra not in fields:
                raise ChartError(f"{where}: key/order field {extra!r} not in dataset")
    for a in spec.axes:
        if spec.scale(a.scale) is None:
            raise ChartError(f"axis {a.name!r}: dangling scale reference {a.scale!r}")
    for g in spec.legends:
        sc = spec.scale(g.scale)
        if sc is None:
            raise ChartError(f"legend {g.name!r}: dangling scale reference {g.scale!r}")
        if sc.kind not in LEGEND_CHANNEL_KINDS[g.channel]:
            raise ChartError(f"legend {g.name!r}: scale kind {sc.kind!r} does not match channel {g.channel!r}")


def chart_from_doc(doc: Mapping, path: str | None = None) -> ChartSpec:
    docio.check_schema(doc, *CHART_SCHEMA, path=path)
    width = _req(doc, "width", "chart")
    height = _req(doc, "height", "chart")
    signals = doc.get("signals", {})
    for k, v in signals.items():
        if k not in SIGNAL_NAMES:
            raise ChartError(f"signal {k!r} is not supported (only width/height)")
        if v != (width if k == "width" else height):
            raise ChartError(f"signal {k!r}={v!r} disagrees with chart {k}")
    spec = ChartSpec(
        width=width,
        height=height,
        datasets=tuple(parse_dataset(d) for d in doc.get("datasets", ())),
        scales=tuple(parse_scale(s) for s in doc.get("scales", ())),
        marks=tuple(parse_mark(m) for m in doc.get("marks", ())),
        axes=tuple(parse_axis(a) for a in doc.get("axes", ())),
        legends=tuple(parse_legend(g) for g in doc.get("legends", ())),
    )
    check_chart(spec)
    return spec


def parse_chart(text: str | bytes, path: str | None = None) -> ChartSpec:
    """Parse and validate a chart document."""
    doc = docio.loads(text, path)
    try:
        return chart_from_doc(doc, path)
    except ChartError as exc:
        if path:
            raise ChartError(f"{path}: {exc}") from None
        raise
    except (TypeError, AttributeError) as exc:
        raise DocumentError(f"malformed chart document ({exc})", path=path) from None


def load_chart(path) -> ChartSpec:
    return parse_chart(docio.read_text(path), str(path))


# --------------------------------------------------------------------------
# serialization

def transform_to_doc(t: Transform) -> dict:
    if isinstance(t, FilterTransform):
        value = list(t.value) if t.op == "in" else t.value
        return {"filter": {"field": t.field, "op": t.op, "value": value}}
    measures = []
    for m in t.measures:
        md = {"op": m.op, "as": m.out}
        if m.field is not None:
            md["field"] = m.field
        measures.append(md)
    return {"aggregate": {"groupby": list(t.groupby), "measures": measures}}


def dataset_to_doc(ds: DatasetDef) -> dict:
    return {"name": ds.name, "rows": [dict(r) for r in ds.rows],
            "transforms": [transform_to_doc(t) for t in ds.transforms]}


def scale_to_doc(sc: ScaleDef) -> dict:
    doc = {"name": sc.name, "type": sc.kind, "domain": list(sc.domain), "range": list(sc.range)}
    if sc.domain_source is not None:
        doc["domainSource"] = {"data": sc.domain_source[0], "field": sc.domain_source[1]}
    if sc.padding:
        doc["padding"] = sc.padding
    return doc


def mark_to_doc(m: MarkDef) -> dict:
    doc = {"name": m.name, "type": m.mark_type, "from": m.dataset,
           "encode": {ch: e.to_doc() for ch, e in m.encodings.items()}}
    if m.key is not None:
        doc["key"] = list(m.key)
    if m.order is not None:
        doc["order"] = m.order
    return doc


def axis_to_doc(a: AxisDef) -> dict:
    doc = {"name": a.name, "orient": a.orient, "scale": a.scale, "tickCount": a.tick_count,
           "titleText": a.title}
    for p in AXIS_PARTS:
        doc[p] = p in a.parts
    return doc


def legend_to_doc(g: LegendDef) -> dict:
    doc = {"name": g.name, "channel": g.channel, "scale": g.scale, "titleText": g.title}
    for p in LEGEND_PARTS:
        doc[p] = p in g.parts
    return doc


def chart_to_doc(spec: ChartSpec) -> dict:
    return {
        "schema": docio.schema_tag(*CHART_SCHEMA),
        "width": spec.width,
        "height": spec.height,
        "datasets": [dataset_to_doc(d) for d in spec.datasets],
        "scales": [scale_to_doc(s) for s in spec.scales],
        "marks": [mark_to_doc(m) for m in spec.marks],
        "axes": [axis_to_doc(a) for a in spec.axes],
        "legends": [legend_to_doc(g) for g in spec.legends],
    }


def serialize_chart(spec: ChartSpec, *, pretty: bool = False) -> str:
    return docio.dumps(chart_to_doc(spec), pretty=pretty)
