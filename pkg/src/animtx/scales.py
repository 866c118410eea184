"""Scale evaluation and tick generation."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Any

from .chart import CONTINUOUS_KINDS, ScaleDef
from .errors import ChartError, ScaleOverflow

NICE_MANTISSAS = (Fraction(1), Fraction(2), Fraction(5, 2), Fraction(5))


def _number(scale: ScaleDef, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ChartError(f"scale {scale.name!r} ({scale.kind}) cannot map non-numeric {value!r}")
    return value


def _slot_index(scale: ScaleDef, value: Any, report_overflow: bool) -> tuple[int, bool]:
    try:
        return scale.domain.index(value), False
    except ValueError:
        if not report_overflow:
            raise ScaleOverflow(f"{value!r} is not in the domain of scale {scale.name!r}") from None
        return len(scale.domain), True


def band_step(scale: ScaleDef) -> float:
    r0, r1 = scale.range
    return (r1 - r0) / len(scale.domain)


def bandwidth(scale: ScaleDef) -> float:
    """Width of one band; zero for non-band scales."""
    if scale.kind != "band":
        return 0.0
    return abs(band_step(scale)) * (1.0 - scale.padding)


def scale_apply(scale: ScaleDef, value: Any, report_overflow: bool = True) -> tuple[Any, bool]:
    """Map ``value`` through ``scale``.

    Returns ``(mapped, overflow)``. Continuous scales extrapolate outside the
    domain; discrete scales place unknown categories one slot past the end.
    With ``report_overflow=False`` an unknown category raises instead.
    """
    kind = scale.kind
    if kind in CONTINUOUS_KINDS:
        v = _number(scale, value)
        lo, hi = scale.domain
        r0, r1 = scale.range
        overflow = v < lo or v > hi
        if hi == lo:
            return r0, overflow
        t = (v - lo) / (hi - lo)
        return r0 * (1 - t) + r1 * t, overflow
    i, overflow = _slot_index(scale, value, report_overflow)
    if kind == "band":
        step = band_step(scale)
        a = scale.range[0] + i * step
        b = a + step
        return min(a, b) + abs(step) * scale.padding / 2, overflow
    if kind == "point":
        r0, r1 = scale.range
        n = len(scale.domain)
        if n == 1:
            return (r0 + r1) / 2 + i * (r1 - r0), overflow
        return r0 + i * (r1 - r0) / (n - 1), overflow
    return scale.range[i % len(scale.range)], overflow


def position(scale: ScaleDef, value: Any, report_overflow: bool = True) -> tuple[Any, bool]:
    """Like :func:`scale_apply` but band scales yield the band centre (guides)."""
    pos, overflow = scale_apply(scale, value, report_overflow)
    if scale.kind == "band":
        pos += bandwidth(scale) / 2
    return pos, overflow


def in_domain(scale: ScaleDef, value: Any) -> bool:
    if scale.kind in CONTINUOUS_KINDS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return False
        return scale.domain[0] <= value <= scale.domain[1]
    return value in scale.domain


def _tidy(x: Fraction):
    return int(x) if x.denominator == 1 else float(x)


def nice_ticks(lo: float, hi: float, count: int) -> list:
    """Ticks at multiples of the smallest step in {1, 2, 2.5, 5} x 10^k that
    yields at most ``count`` ticks inside [lo, hi]."""
    if hi < lo:
        lo, hi = hi, lo
    if hi == lo:
        return [_tidy(Fraction(lo))]
    flo, fhi = Fraction(lo), Fraction(hi)
    k = math.floor(math.log10((hi - lo) / max(count, 1))) - 1
    while True:
        base = Fraction(10) ** k
        for m in NICE_MANTISSAS:
            step = m * base
            first = math.ceil(flo / step)
            last = math.floor(fhi / step)
            if last - first + 1 <= count:
                return [_tidy(i * step) for i in range(first, last + 1)]
        k += 1


def scale_ticks(scale: ScaleDef, count: int) -> list:
    """Guide values: nice ticks for continuous scales, the domain otherwise."""
    if scale.kind in CONTINUOUS_KINDS:
        return nice_ticks(scale.domain[0], scale.domain[1], count)
    return list(scale.domain)
