"""Timeline scheduling: absolute step windows, concat enumerator expansion and
the autoScaleOrder permutation search.

Times are computed exactly with fractions and floored to integer milliseconds
only at the end, so cumulative boundaries never drift and any division
remainder lands in the last iteration.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable
from dataclasses import dataclass, replace
from fractions import Fraction

from .chart import ChartSpec
from .grammar import Block, Concat, EnumeratorSpec, Ratio, Step, TimingSpec, iter_steps
from .errors import ScheduleError


@dataclass(frozen=True)
class ScheduledStep:
    step: Step
    path: tuple[int, ...]
    start_ms: int
    end_ms: int
    delay_ms: int
    bindings: tuple = ()   # ((field, op, value), ...) from enclosing enumerated concats

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms

    def to_doc(self) -> dict:
        comp = self.step.component
        doc = {"path": list(self.path), "component": comp.kind if comp.name is None else
               {comp.kind: comp.name}, "startMs": self.start_ms, "endMs": self.end_ms}
        if self.bindings:
            doc["bindings"] = [list(b) for b in self.bindings]
        return doc


@dataclass(frozen=True)
class Schedule:
    steps: tuple[ScheduledStep, ...]
    total_end_ms: int

    def to_doc(self) -> list:
        return [s.to_doc() for s in self.steps]


def _ms(t, total: Fraction | None) -> Fraction:
    if isinstance(t, Ratio):
        if total is None:
            raise ScheduleError("ratio timing needs a totalDuration")
        return t.value * total
    return Fraction(t)


def block_length(block: Block, total: Fraction | None) -> Fraction:
    """Exact length of a block in ms (delays included)."""
    if isinstance(block, Step):
        return _ms(block.timing.delay, total) + _ms(block.timing.duration, total)
    if isinstance(block, Concat):
        if block.enumerator is not None:
            raise ScheduleError("concat enumerators must be expanded before scheduling")
        return sum((block_length(b, total) for b in block.blocks), Fraction(0))
    return max(block_length(b, total) for b in block.blocks)


def schedule_timeline(block: Block, clock_start: int = 0, total_duration=None) -> Schedule:
    """Resolve ``block`` into absolutely timed steps starting at ``clock_start``."""
    total = Fraction(total_duration) if total_duration is not None else None
    out: list[tuple[Fraction, Fraction, Fraction, ScheduledStep]] = []

    def visit(b: Block, t: Fraction, path: tuple[int, ...], bindings: tuple) -> None:
        if isinstance(b, Step):
            delay = _ms(b.timing.delay, total)
            dur = _ms(b.timing.duration, total)
            s0, s1 = t + delay, t + delay + dur
            out.append((s0, s1, delay, ScheduledStep(b, path, math.floor(s0), math.floor(s1),
                                                     math.floor(delay), bindings)))
        elif isinstance(b, Concat):
            if b.binding is not None:
                bindings = bindings + (b.binding,)
            for i, child in enumerate(b.blocks):
                visit(child, t, path + (i,), bindings)
                t += block_length(child, total)
        else:
            length = block_length(b, total)
            for i, child in enumerate(b.blocks):
                offset = length - block_length(child, total) if b.at == "end" else Fraction(0)
                visit(child, t + offset, path + (i,), bindings)

    start = Fraction(clock_start)
    visit(block, start, (), ())
    steps = tuple(sorted((x[3] for x in out), key=lambda s: (s.start_ms, s.path)))
    end = math.floor(start + block_length(block, total))
    if steps:
        end = max(end, max(s.end_ms for s in steps))
    return Schedule(steps, end)


# --------------------------------------------------------------------------
# enumerators

def _filter_rhs(chart: ChartSpec, enum: EnumeratorSpec, dataset: str | None):
    datasets = [chart.dataset(dataset)] if dataset is not None else list(chart.datasets)
    for ds in datasets:
        if ds is None:
            continue
        found = ds.filters_on(enum.field, enum.op)
        if found:
            return found[0].value
    return None


def _tidy(x: Fraction):
    return int(x) if x.denominator == 1 else float(x)


def resolve_enumerator_values(enum: EnumeratorSpec, start: ChartSpec, end: ChartSpec,
                              dataset: str | None = None) -> list:
    """The values an enumerator sweeps: the explicit list, or the inclusive
    arithmetic sequence between the start and end filter values."""
    if enum.values is not None:
        if not enum.values:
            raise ScheduleError("enumerator has an empty value list")
        return list(enum.values)
    lo = _filter_rhs(start, enum, dataset)
    hi = _filter_rhs(end, enum, dataset)
    if lo is None or hi is None:
        raise ScheduleError(f"no filter on field {enum.field!r} in the "
                            f"{'start' if lo is None else 'end'} chart to enumerate from")
    for v in (lo, hi):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ScheduleError(f"stepSize enumeration needs numeric filter values, got {v!r}")
    a, b = Fraction(str(lo)), Fraction(str(hi))
    step = Fraction(str(enum.step_size))
    if a == b:
        return [lo]
    if (b - a) * step < 0:
        raise ScheduleError(f"stepSize {enum.step_size} points away from {lo} -> {hi}")
    count = math.floor((b - a) / step)
    values = [_tidy(a + i * step) for i in range(count + 1)]
    if a + count * step != b:
        values.append(_tidy(b))
    return values


def _scale_timing(t: TimingSpec, k: int) -> TimingSpec:
    def div(v):
        return Ratio(v.value / k) if isinstance(v, Ratio) else Fraction(v) / k
    return replace(t, duration=div(t.duration), delay=div(t.delay))


def _scale_block(b: Block, k: int) -> Block:
    if isinstance(b, Step):
        return replace(b, timing=_scale_timing(b.timing, k))
    return replace(b, blocks=tuple(_scale_block(x, k) for x in b.blocks))


def expand_concat_enumerator(concat: Concat, values: list) -> Concat:
    """k sequential copies of the concat body, copy i bound to ``values[i]``,
    every timing divided by k so the total length is unchanged."""
    if not values:
        raise ScheduleError("cannot expand an enumerator over no values")
    enum = concat.enumerator
    k = len(values)
    body = tuple(_scale_block(b, k) for b in concat.blocks)
    copies = tuple(Concat(body, None, None, (enum.field, enum.op, v)) for v in values)
    return Concat(copies, None, concat.auto_scale_order, concat.binding)


def expand_enumerators(block: Block, start: ChartSpec, end: ChartSpec) -> Block:
    """Expand every concat enumerator in the tree (outermost first)."""
    if isinstance(block, Step):
        return block
    if isinstance(block, Concat) and block.enumerator is not None:
        values = resolve_enumerator_values(block.enumerator, start, end)
        block = expand_concat_enumerator(block, values)
    return replace(block, blocks=tuple(expand_enumerators(b, start, end) for b in block.blocks))


# --------------------------------------------------------------------------
# autoScaleOrder

def touches_marks(block: Block, names) -> bool:
    return any(s.component.kind == "mark" and s.component.name in names
               for _, s in iter_steps(block))


def candidate_orders(concat: Concat) -> list[tuple[int, ...]]:
    """Child orders to try, in lexicographic order of the movable children.

    Only children that step one of the named marks move; the others keep
    their slots. The identity order comes first.
    """
    names = set(concat.auto_scale_order or ())
    n = len(concat.blocks)
    movable = [i for i in range(n) if touches_marks(concat.blocks[i], names)]
    orders = []
    for perm in itertools.permutations(movable):
        order = list(range(n))
        for slot, child in zip(movable, perm):
            order[slot] = child
        orders.append(tuple(order))
    return orders


def resolve_auto_scale_order(concat: Concat, is_valid: Callable[[tuple[int, ...]], bool]
                             ) -> tuple[tuple[int, ...], str | None]:
    """First child order accepted by ``is_valid``; else the original order
    and a warning."""
    for order in candidate_orders(concat):
        if is_valid(order):
            return order, None
    names = ", ".join(concat.auto_scale_order or ())
    return tuple(range(len(concat.blocks))), (
        f"autoScaleOrder: every order of the concat children overflows a scale of {names}; "
        "keeping the original order")


def reorder(concat: Concat, order: tuple[int, ...]) -> Concat:
    return replace(concat, blocks=tuple(concat.blocks[i] for i in order))
