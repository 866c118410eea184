"""Per-element windows for staggered steps.

Elements are grouped by the staggering field (equal values share a window)
and the groups are ordered. Consecutive windows overlap by the configured
fraction ``o`` of the earlier window's length, so with a uniform ease every
window lasts ``D / (1 + (n - 1)(1 - o))``. A non-uniform ease gives group i a
length proportional to ``f(i/n) - f((i-1)/n)``; the whole pattern is then
scaled so the latest end coincides with the step end.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from fractions import Fraction

from .easing import ease_value
from .errors import CompileError
from .grammar import StaggeringSpec


def _sort_key(v):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return (0, v, "")
    return (1, 0, str(v))


def order_values(values, order) -> list:
    """Distinct values in staggering order."""
    distinct = list(dict.fromkeys(values))
    if isinstance(order, tuple):
        rank = {v: i for i, v in enumerate(order)}
        listed = sorted((v for v in distinct if v in rank), key=rank.__getitem__)
        rest = sorted((v for v in distinct if v not in rank), key=_sort_key)
        return listed + rest
    out = sorted(distinct, key=_sort_key)
    return out[::-1] if order == "descending" else out


def group_windows(n: int, overlap: float, ease: str, start, duration) -> list[tuple[float, float]]:
    """Windows of ``n`` consecutive groups inside ``[start, start + duration]``."""
    if n <= 0:
        return []
    o = Fraction(overlap)
    if ease == "linear":
        weights = [Fraction(1)] * n
    else:
        weights = [Fraction(ease_value(ease, i / n)) - Fraction(ease_value(ease, (i - 1) / n))
                   for i in range(1, n + 1)]
    starts, s = [], Fraction(0)
    for w in weights:
        starts.append(s)
        s += w * (1 - o)
    span = max(a + w for a, w in zip(starts, weights))
    if span <= 0:
        return [(float(start), float(start) + float(duration))] * n
    c = Fraction(duration) / span
    t0 = Fraction(start)
    return [(float(t0 + a * c), float(t0 + (a + w) * c)) for a, w in zip(starts, weights)]


def resolve_stagger(data: Sequence[Mapping | None], stag: StaggeringSpec, start, duration,
                    staggerings: Mapping[str, StaggeringSpec] | None = None
                    ) -> list[tuple[float, float]]:
    """Window per element (in input order) for a staggered step.

    Elements without a datum (titles, domain lines) get the whole window;
    an element with a datum lacking the staggering field is an error.
    """
    whole = (float(start), float(start) + float(duration))
    out: list[tuple[float, float]] = [whole] * len(data)
    idx = [i for i, d in enumerate(data) if d is not None]
    for i in idx:
        if stag.field not in data[i]:
            raise CompileError(f"staggering {stag.name!r}: element without field {stag.field!r}")
    if not idx:
        return out
    values = order_values([data[i][stag.field] for i in idx], stag.order)
    wins = group_windows(len(values), stag.overlap, stag.ease, start, duration)
    slot = {v: w for v, w in zip(values, wins)}
    inner = None
    if stag.staggering is not None:
        inner = (staggerings or {}).get(stag.staggering)
        if inner is None:
            raise CompileError(f"staggering {stag.name!r}: unknown nested {stag.staggering!r}")
    for v in values:
        members = [i for i in idx if data[i][stag.field] == v]
        w0, w1 = slot[v]
        if inner is None:
            for i in members:
                out[i] = (w0, w1)
        else:
            sub = resolve_stagger([data[i] for i in members], inner, w0, w1 - w0, staggerings)
            for i, w in zip(members, sub):
                out[i] = w
    return out


def overlap_of(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Overlap quotient of consecutive windows ``a`` then ``b``."""
    return (a[1] - b[0]) / (a[1] - a[0])
