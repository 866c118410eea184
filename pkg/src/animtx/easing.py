"""Easing curves: maps from linear progress in [0, 1] to eased progress."""

from __future__ import annotations

from collections.abc import Callable

DEFAULT_EASE = "cubic-in-out"


def linear(u: float) -> float:
    return u


def quad_in(u: float) -> float:
    return u * u


def quad_out(u: float) -> float:
    return 1 - (1 - u) * (1 - u)


def quad_in_out(u: float) -> float:
    if u < 0.5:
        return 2 * u * u
    return 1 - 2 * (1 - u) ** 2


def cubic_in(u: float) -> float:
    return u * u * u


def cubic_out(u: float) -> float:
    return 1 - (1 - u) ** 3


def cubic_in_out(u: float) -> float:
    if u < 0.5:
        return 4 * u ** 3
    return 1 - 4 * (1 - u) ** 3


EASES: dict[str, Callable[[float], float]] = {
    "linear": linear,
    "quad-in": quad_in,
    "quad-out": quad_out,
    "quad-in-out": quad_in_out,
    "cubic-in": cubic_in,
    "cubic-out": cubic_out,
    "cubic-in-out": cubic_in_out,
}


def ease_value(name: str, u: float) -> float:
    """Eased progress for ``u`` in [0, 1]; endpoints map exactly to 0 and 1."""
    try:
        fn = EASES[name]
    except KeyError:
        raise ValueError(f"unknown ease {name!r}; known: {', '.join(EASES)}") from None
    if u <= 0:
        return 0.0
    if u >= 1:
        return 1.0
    return fn(u)
