"""Closed 1D interval sets over lane arc length.

An interval set is a sorted list of disjoint ``(start, end)`` tuples with
``start < end``.  Touching intervals are merged.
"""
from __future__ import annotations

from typing import Iterable

Interval = tuple[float, float]

#: intervals shorter than this are dropped [m]
EPS_LENGTH = 1e-9


def normalize(intervals: Iterable[Interval], lo: float | None = None,
              hi: float | None = None) -> list[Interval]:
    """Clip to ``[lo, hi]``, drop empties, sort and merge overlaps."""
    items = []
    for a, b in intervals:
        if lo is not None:
            a = max(a, lo)
        if hi is not None:
            b = min(b, hi)
        if b - a > EPS_LENGTH:
            items.append((float(a), float(b)))
    items.sort()
    merged: list[Interval] = []
    for a, b in items:
        if merged and a <= merged[-1][1] + EPS_LENGTH:
            if b > merged[-1][1]:
                merged[-1] = (merged[-1][0], b)
        else:
            merged.append((a, b))
    return merged


def intersect(xs: list[Interval], ys: list[Interval]) -> list[Interval]:
    out = []
    i = j = 0
    while i < len(xs) and j < len(ys):
        a = max(xs[i][0], ys[j][0])
        b = min(xs[i][1], ys[j][1])
        if b - a > EPS_LENGTH:
            out.append((a, b))
        if xs[i][1] < ys[j][1]:
            i += 1
        else:
            j += 1
    return out


def total_length(xs: Iterable[Interval]) -> float:
    return sum(b - a for a, b in xs)


def contains(xs: Iterable[Interval], s: float, tol: float = 1e-9) -> bool:
    return any(a - tol <= s <= b + tol for a, b in xs)


def dilate(xs: Iterable[Interval], back: float, forward: float) -> list[Interval]:
    """Grow every interval by ``back`` at its start and ``forward`` at its end."""
    return normalize((a - back, b + forward) for a, b in xs)
