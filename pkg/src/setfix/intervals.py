"""Exact arithmetic and metric functionals on compact subsets of the real line.

A compact set is represented as a finite union of closed intervals in
canonical form: parts sorted, pairwise separated by more than ``MERGE_EPS``.
On this representation the classical set functionals are all exactly
computable:

* gap        D(A, B) = inf { |a - b| : a in A, b in B }
* excess     e(A, B) = sup { D(a, B) : a in A }
* Hausdorff  H(A, B) = max { e(A, B), e(B, A) }

The key fact is that x -> D(x, B) is piecewise linear with slope +-1 and
local maxima only at the midpoints of B's gaps, so suprema over another
union are attained on a finite candidate set (part endpoints of A plus gap
midpoints of B that lie inside A).  No sampling is involved.

Degenerate point intervals are first-class: singletons {x} appear as
targets of every convergence statement in the rest of the library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptySetError, ParameterRangeError, SchemaError

#: Canonicalization constant: parts whose gap is <= MERGE_EPS are merged.
MERGE_EPS = 1e-12

#: Slack used when checking containment in an ambient interval.
AMBIENT_TOL = 1e-9


@dataclass(frozen=True, order=True)
class Interval:
    """Closed bounded interval [lo, hi]; lo == hi encodes a point."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"interval endpoints must be finite: [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise ValueError(f"interval lower end exceeds upper end: [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def clamp(self, x: float) -> float:
        return min(max(x, self.lo), self.hi)


@dataclass(frozen=True)
class IntervalUnion:
    """Nonempty compact subset of R as a sorted disjoint union of intervals.

    ``ambient``, when present, is the surrounding space X; every part must
    lie inside it (up to ``AMBIENT_TOL`` of floating-point slack).
    """

    parts: tuple[Interval, ...]
    ambient: Interval | None = None

    def __post_init__(self) -> None:
        parts = tuple(self.parts)
        if not parts:
            raise EmptySetError("an interval union needs at least one part")
        object.__setattr__(self, "parts", parts)
        for a, b in zip(parts, parts[1:]):
            if not a.hi + MERGE_EPS < b.lo:
                raise ValueError(
                    "parts must be strictly sorted and separated; build via normalize()"
                )
        if self.ambient is not None:
            if (parts[0].lo < self.ambient.lo - AMBIENT_TOL
                    or parts[-1].hi > self.ambient.hi + AMBIENT_TOL):
                raise ValueError("parts escape the ambient interval")

    @classmethod
    def singleton(cls, x: float, ambient: Interval | None = None) -> "IntervalUnion":
        return cls((Interval(x, x),), ambient)

    @property
    def hull(self) -> Interval:
        return Interval(self.parts[0].lo, self.parts[-1].hi)

    @property
    def is_point(self) -> bool:
        return len(self.parts) == 1 and self.parts[0].lo == self.parts[0].hi

    def contains_point(self, x: float, tol: float = 0.0) -> bool:
        return dist_point_to_set(x, self) <= tol

    def to_json(self) -> dict:
        return {"parts": [[p.lo, p.hi] for p in self.parts]}


def normalize(raw: Iterable[Interval | Sequence[float]],
              ambient: Interval | None = None) -> IntervalUnion:
    """Canonical sorted disjoint form covering exactly the same point set.

    Intervals whose gap is <= MERGE_EPS are merged into one part.
    """
    items: list[Interval] = []
    for entry in raw:
        if isinstance(entry, Interval):
            items.append(entry)
        else:
            lo, hi = entry
            items.append(Interval(float(lo), float(hi)))
    if not items:
        raise EmptySetError("normalize() needs at least one interval")
    items.sort(key=lambda iv: (iv.lo, iv.hi))
    merged: list[list[float]] = [[items[0].lo, items[0].hi]]
    for iv in items[1:]:
        cur = merged[-1]
        if iv.lo <= cur[1] + MERGE_EPS:
            cur[1] = max(cur[1], iv.hi)
        else:
            merged.append([iv.lo, iv.hi])
    return IntervalUnion(tuple(Interval(lo, hi) for lo, hi in merged), ambient)


def set_from_json(obj: object, ambient: Interval | None = None) -> IntervalUnion:
    """Parse ``{"parts": [[lo, hi], ...]}``, re-normalizing; reject bad shapes."""
    if not isinstance(obj, dict) or "parts" not in obj:
        raise SchemaError("set JSON must be an object with a 'parts' key")
    parts = obj["parts"]
    if not isinstance(parts, list) or not parts:
        raise SchemaError("set JSON 'parts' must be a nonempty list")
    out = []
    for entry in parts:
        if (not isinstance(entry, (list, tuple)) or len(entry) != 2
                or not all(isinstance(v, (int, float)) for v in entry)):
            raise SchemaError(f"set JSON part must be a [lo, hi] pair, got {entry!r}")
        lo, hi = float(entry[0]), float(entry[1])
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise SchemaError(f"set JSON part endpoints must be finite, got {entry!r}")
        if lo > hi:
            raise SchemaError(f"set JSON part has lo > hi: {entry!r}")
        out.append(Interval(lo, hi))
    return normalize(out, ambient)


def dist_point_to_set(x: float, a: IntervalUnion) -> float:
    """Distance from the point x to the set A; 0 iff x is a member."""
    return min(max(0.0, p.lo - x, x - p.hi) for p in a.parts)


def nearest_point(a: IntervalUnion, x: float) -> float:
    """Point of A closest to x (leftmost on ties)."""
    best, best_d = None, math.inf
    for p in a.parts:
        c = p.clamp(x)
        d = abs(x - c)
        if d < best_d:
            best, best_d = c, d
    return best  # parts nonempty


def gap(a: IntervalUnion, b: IntervalUnion) -> float:
    """inf distance between the two sets; 0 iff they intersect."""
    best = math.inf
    for p in a.parts:
        for q in b.parts:
            d = max(0.0, p.lo - q.hi, q.lo - p.hi)
            if d < best:
                best = d
            if best == 0.0:
                return 0.0
    return best


def excess(a: IntervalUnion, b: IntervalUnion) -> float:
    """sup_{x in A} D(x, B), computed exactly on the finite candidate set.

    D(., B) is piecewise linear with peaks only at midpoints of B's gaps,
    so the sup over A is attained at an endpoint of a part of A or at a gap
    midpoint of B lying inside A.
    """
    best = 0.0
    for p in a.parts:
        best = max(best, dist_point_to_set(p.lo, b), dist_point_to_set(p.hi, b))
    for q1, q2 in zip(b.parts, b.parts[1:]):
        m = 0.5 * (q1.hi + q2.lo)
        if dist_point_to_set(m, a) == 0.0:
            best = max(best, dist_point_to_set(m, b))
    return best


def hausdorff(a: IntervalUnion, b: IntervalUnion) -> float:
    """Pompeiu-Hausdorff distance max(e(A,B), e(B,A)); a metric on canonical forms."""
    return max(excess(a, b), excess(b, a))


def is_subset(a: IntervalUnion, b: IntervalUnion, tol: float = 0.0) -> bool:
    return excess(a, b) <= tol


def affine_combine(x: float, s: IntervalUnion, lam: float) -> IntervalUnion:
    """{lam*x + (1-lam)*s : s in S} -- the Takahashi convex combination on R.

    lam = 0 returns S unchanged; lam = 1 collapses to the singleton {x}.
    """
    if not 0.0 <= lam <= 1.0:
        raise ParameterRangeError(f"affine_combine needs lam in [0, 1], got {lam}")
    w = 1.0 - lam
    parts = [Interval(lam * x + w * p.lo, lam * x + w * p.hi) for p in s.parts]
    return normalize(parts, s.ambient)


def union_all(sets: Sequence[IntervalUnion]) -> IntervalUnion:
    """Normalized union of all parts of all the given sets."""
    if not sets:
        raise EmptySetError("union_all() needs at least one set")
    parts: list[Interval] = []
    ambient = sets[0].ambient
    for s in sets:
        parts.extend(s.parts)
        if s.ambient != ambient:
            ambient = None
    return normalize(parts, ambient)


@dataclass(frozen=True)
class Domain:
    """The ambient complete metric space: a real interval with d(x,y) = |x-y|."""

    bounds: Interval

    def __post_init__(self) -> None:
        if not self.bounds.lo < self.bounds.hi:
            raise ValueError("a domain needs strictly positive width")

    def grid(self, n: int) -> np.ndarray:
        if n < 2:
            raise ValueError("a domain grid needs at least 2 points")
        return np.linspace(self.bounds.lo, self.bounds.hi, n)

    def contains(self, x: float, tol: float = AMBIENT_TOL) -> bool:
        return self.bounds.contains(x, tol)

    @property
    def width(self) -> float:
        return self.bounds.width
