"""Numerical certification of Ciric-type contraction conditions.

For a multivalued operator T and each ordered grid pair (x, y) the
contraction condition is one linear constraint on the parameters
(alpha, beta, gamma):

    ciric            H(T(x),T(y)) <= a*d(x,y) + b*D(x,T(y)) + g*D(y,T(x))
    ciric_reich_rus  H(T(x),T(y)) <= a*d(x,y) + b*D(x,T(x)) + g*D(y,T(y))
    combined         H(T(x),T(y)) <= a*d(x,y) + b*[D(x,T(x)) + D(y,T(y))]
                                              + g*[D(x,T(y)) + D(y,T(x))]

Feasibility over the admissible simplex (a+b+g < 1 for ciric, a+2b < 1 for
the other two) is decided by a deterministic coarse-to-fine grid search
(initial step 0.05, three halvings) minimizing a+b+g.  A genuinely
infeasible instance is proven by a single witness pair whose constraint
alone cannot be met by any admissible parameters (reported bound > 1);
otherwise infeasibility means exhaustion of the search grid and the
hardest pair is reported with its bound <= 1.

Evals of catalog operators are single intervals, so H between values is
the closed form max(|lo1-lo2|, |hi1-hi2|) and the whole pair sweep is a
handful of vectorized array operations.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DegenerateDomainError,
    ParameterRangeError,
    SchemaError,
    StrictFixedPointMismatchError,
)
from .intervals import IntervalUnion, dist_point_to_set, hausdorff
from .operators import MultivaluedOperator

VARIANTS = ("ciric", "ciric_reich_rus", "combined")

#: The admissible region is closed with this margin off the open boundary,
#: respecting the strict inequality in the contraction definitions.
STRICTNESS = 1e-6

_SEARCH_STEP = 0.05
_REFINEMENTS = 3


def _thread_count() -> int:
    raw = os.environ.get("SETFIX_THREADS", "")
    try:
        n = int(raw)
        if n >= 1:
            return n
    except ValueError:
        pass
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ContractionParams:
    """The parameter triple of a contraction-type condition."""

    alpha: float
    beta: float
    gamma: float
    variant: str = "ciric"

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ParameterRangeError(f"unknown variant {self.variant!r}")
        if min(self.alpha, self.beta, self.gamma) < 0.0:
            raise ParameterRangeError("contraction parameters must be nonnegative")
        if not self.simplex_ok():
            raise ParameterRangeError(
                f"params {(self.alpha, self.beta, self.gamma)} violate the "
                f"{self.variant} simplex constraint")

    def simplex_ok(self) -> bool:
        if self.variant == "ciric":
            return self.alpha + self.beta + self.gamma < 1.0
        return self.alpha + 2.0 * self.beta < 1.0

    @property
    def total(self) -> float:
        return self.alpha + self.beta + self.gamma

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
                "variant": self.variant}


class Witness(NamedTuple):
    x: float
    y: float
    bound: float


@dataclass(frozen=True)
class ContractionCertificate:
    """Outcome of a feasibility search over the parameter simplex.

    feasible   -- params satisfy every sampled pair constraint with margin >= 0
    margin     -- min over pairs of RHS - LHS at the found params; for an
                  infeasible certificate, the best (largest) margin seen
    witness    -- hardest pair; bound > 1 is a proof that no admissible
                  parameters exist, bound <= 1 records search exhaustion
    """

    feasible: bool
    params: ContractionParams | None
    margin: float
    witness: Witness | None
    sample_grid: int
    skipped: int

    def to_json(self) -> dict:
        return {
            "feasible": self.feasible,
            "alpha": None if self.params is None else self.params.alpha,
            "beta": None if self.params is None else self.params.beta,
            "gamma": None if self.params is None else self.params.gamma,
            "margin": self.margin,
            "witness": None if self.witness is None else {
                "x": self.witness.x, "y": self.witness.y, "bound": self.witness.bound},
            "grid_n": self.sample_grid,
            "skipped": self.skipped,
        }

    @classmethod
    def from_json(cls, obj: dict, variant: str = "ciric") -> "ContractionCertificate":
        if not isinstance(obj, dict):
            raise SchemaError("certificate JSON must be an object")
        params = None
        if obj.get("alpha") is not None:
            params = ContractionParams(obj["alpha"], obj["beta"], obj["gamma"], variant)
        wit = obj.get("witness")
        witness = None if wit is None else Witness(wit["x"], wit["y"], wit["bound"])
        return cls(bool(obj["feasible"]), params, float(obj["margin"]), witness,
                   int(obj["grid_n"]), int(obj.get("skipped", 0)))


def _grid_images(t: MultivaluedOperator, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = np.empty(len(xs))
    hi = np.empty(len(xs))
    for i, x in enumerate(xs):
        parts = t.eval(float(x)).parts
        # catalog evals are single intervals by construction
        lo[i] = parts[0].lo
        hi[i] = parts[-1].hi
    return lo, hi


def _pair_system(t: MultivaluedOperator, variant: str, xs: np.ndarray):
    """LHS and the three feature columns over all ordered pairs x != y."""
    lo, hi = _grid_images(t, xs)
    X = xs[:, None]
    dist = np.maximum(0.0, np.maximum(lo[None, :] - X, X - hi[None, :]))
    h = np.maximum(np.abs(lo[:, None] - lo[None, :]), np.abs(hi[:, None] - hi[None, :]))
    d = np.abs(X - xs[None, :])
    n = len(xs)
    mask = ~np.eye(n, dtype=bool)
    lhs = h[mask]
    u = d[mask]
    if variant == "ciric":
        v = dist[mask]
        w = dist.T[mask]
    elif variant == "ciric_reich_rus":
        diag = np.diag(dist)
        v = np.broadcast_to(diag[:, None], (n, n))[mask]
        w = np.broadcast_to(diag[None, :], (n, n))[mask]
    else:  # combined
        diag = np.diag(dist)
        v = (diag[:, None] + diag[None, :])[mask]
        w = (dist + dist.T)[mask]
    idx_i, idx_j = np.nonzero(mask)
    return lhs, u, v, w, idx_i, idx_j


def _candidates(step: float, variant: str,
                center: tuple[float, float, float] | None = None,
                radius: float | None = None) -> list[tuple[float, float, float]]:
    cap = 1.0 - STRICTNESS

    def ok(a: float, b: float, g: float) -> bool:
        if min(a, b, g) < 0.0 or max(a, b, g) > cap:
            return False
        if variant == "ciric":
            return a + b + g <= cap
        return a + 2.0 * b <= cap

    out = []
    if center is None:
        count = int(round(1.0 / step)) + 1
        vals = [round(i * step, 10) for i in range(count)]
        for a in vals:
            for b in vals:
                for g in vals:
                    if ok(a, b, g):
                        out.append((a, b, g))
    else:
        offs = (-radius, -0.5 * radius, 0.0, 0.5 * radius, radius)
        seen = set()
        for da in offs:
            for db in offs:
                for dg in offs:
                    a = round(center[0] + da, 10)
                    b = round(center[1] + db, 10)
                    g = round(center[2] + dg, 10)
                    if (a, b, g) not in seen and ok(a, b, g):
                        seen.add((a, b, g))
                        out.append((a, b, g))
    out.sort(key=lambda t: (t[0] + t[1] + t[2], t))
    return out


def _margins(cands, lhs, u, v, w) -> np.ndarray:
    def one(c):
        a, b, g = c
        return float(np.min(a * u + b * v + g * w - lhs))

    threads = _thread_count()
    if threads > 1 and len(cands) > 64:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.fromiter(pool.map(one, cands), dtype=float, count=len(cands))
    return np.fromiter((one(c) for c in cands), dtype=float, count=len(cands))


def certify_contraction(t: MultivaluedOperator, variant: str = "ciric",
                        grid_n: int = 501,
                        margin_req: float = 0.0) -> ContractionCertificate:
    """Search the admissible simplex for parameters satisfying every pair constraint.

    Deterministic: level 0 sweeps the whole simplex at step 0.05 in ascending
    (a+b+g, a, b, g) order; three refinement levels halve the step around the
    best feasible triple.  Feasibility requires slack >= margin_req * scale
    where scale = max(1, max LHS).
    """
    if variant not in VARIANTS:
        raise ParameterRangeError(f"unknown variant {variant!r}")
    if grid_n < 2:
        raise DegenerateDomainError("certification needs grid_n >= 2")
    if margin_req < 0.0:
        raise ParameterRangeError("margin_req must be >= 0")

    xs = t.domain.grid(grid_n)
    lhs, u, v, w, idx_i, idx_j = _pair_system(t, variant, xs)
    rowmax = np.maximum(u, np.maximum(v, w))
    active = lhs > 1e-14
    skipped = int(np.sum(~active))
    required = np.zeros_like(lhs)
    np.divide(lhs, np.maximum(rowmax, 1e-300), out=required, where=active)
    imax = int(np.argmax(required))
    witness = Witness(float(xs[idx_i[imax]]), float(xs[idx_j[imax]]),
                      float(required[imax]))
    scale = max(1.0, float(lhs.max())) if len(lhs) else 1.0
    slack = margin_req * scale

    if witness.bound > 1.0 / (1.0 - STRICTNESS):
        # this single pair forbids the whole admissible simplex; its best
        # achievable slack bounds every candidate's margin from above
        ceiling = float((1.0 - STRICTNESS) * rowmax[imax] - lhs[imax])
        return ContractionCertificate(False, None, ceiling, witness,
                                      grid_n, skipped)

    best: tuple[float, float, float] | None = None
    best_margin = -np.inf
    cands = _candidates(_SEARCH_STEP, variant)
    margins = _margins(cands, lhs, u, v, w)
    best_seen = float(np.max(margins)) if len(margins) else -np.inf
    for c, m in zip(cands, margins):
        if m >= slack:
            best, best_margin = c, m
            break
    if best is None:
        return ContractionCertificate(False, None, best_seen, witness, grid_n, skipped)

    radius = _SEARCH_STEP
    for _ in range(_REFINEMENTS):
        radius *= 0.5
        local = _candidates(radius, variant, center=best, radius=radius)
        local_margins = _margins(local, lhs, u, v, w)
        for c, m in zip(local, local_margins):
            if m >= slack and sum(c) < sum(best) - 1e-12:
                best, best_margin = c, m
                break
    params = ContractionParams(*best, variant=variant)
    return ContractionCertificate(True, params, float(best_margin), None,
                                  grid_n, skipped)


class GridSup(NamedTuple):
    """Supremum of a ratio over a grid, with skip bookkeeping."""

    value: float
    skipped: int
    arg: float


def _verify_strict_point(op: MultivaluedOperator, xstar: float, label: str) -> None:
    defect = hausdorff(op.eval(xstar), IntervalUnion.singleton(xstar))
    if defect >= 1e-9:
        raise StrictFixedPointMismatchError(
            f"{label}: {xstar!r} is not a strict fixed point "
            f"(hausdorff(T(x*), {{x*}}) = {defect:.3e})")


def sup_ratio_l(t: MultivaluedOperator, tg: MultivaluedOperator, xstar: float,
                grid_n: int = 2001) -> GridSup:
    """sup over grid x != x* of H(T(x), {x*}) / H(T_G(x), {x*}).

    Denominators below 1e-14 are skipped and counted.  A value < 1 realizes
    the comparison constant used by the convergence and quasi-contraction
    arguments.
    """
    if grid_n < 2:
        raise ParameterRangeError("sup_ratio_l needs grid_n >= 2")
    _verify_strict_point(t, xstar, "base operator")
    _verify_strict_point(tg, xstar, "perturbed operator")
    point = IntervalUnion.singleton(xstar)
    best, arg, skipped = 0.0, xstar, 0
    for x in t.domain.grid(grid_n):
        x = float(x)
        if x == xstar:
            skipped += 1
            continue
        den = hausdorff(tg.eval(x), point)
        if den < 1e-14:
            skipped += 1
            continue
        r = hausdorff(t.eval(x), point) / den
        if r > best:
            best, arg = r, x
    return GridSup(best, skipped, arg)


def sup_gap_ratio_l(t: MultivaluedOperator, tg: MultivaluedOperator, xstar: float,
                    grid_n: int = 2001) -> GridSup:
    """Gap-based analogue: sup of D(T(x), {x*}) / D(T_G(x), {x*}) (weak variant)."""
    if grid_n < 2:
        raise ParameterRangeError("sup_gap_ratio_l needs grid_n >= 2")
    _verify_strict_point(t, xstar, "base operator")
    _verify_strict_point(tg, xstar, "perturbed operator")
    best, arg, skipped = 0.0, xstar, 0
    for x in t.domain.grid(grid_n):
        x = float(x)
        if x == xstar:
            skipped += 1
            continue
        den = dist_point_to_set(xstar, tg.eval(x))
        if den < 1e-14:
            skipped += 1
            continue
        r = dist_point_to_set(xstar, t.eval(x)) / den
        if r > best:
            best, arg = r, x
    return GridSup(best, skipped, arg)


def displacement_constant_L(t: MultivaluedOperator, tg: MultivaluedOperator,
                            grid_n: int = 2001) -> GridSup:
    """sup over grid of D(x, T_G(x)) / D(x, T(x)).

    Points where both displacements are below 1e-14 are skipped; a vanishing
    denominator with nonvanishing numerator yields +inf.  For the Takahashi
    combination the ratio is identically 1 - lam.
    """
    if grid_n < 2:
        raise ParameterRangeError("displacement_constant_L needs grid_n >= 2")
    best, arg, skipped = 0.0, float(t.domain.bounds.lo), 0
    for x in t.domain.grid(grid_n):
        x = float(x)
        num = dist_point_to_set(x, tg.eval(x))
        den = dist_point_to_set(x, t.eval(x))
        if den < 1e-14:
            if num < 1e-14:
                skipped += 1
                continue
            return GridSup(float("inf"), skipped, x)
        r = num / den
        if r > best:
            best, arg = r, x
    return GridSup(best, skipped, arg)


class XiResult(NamedTuple):
    xi_max: float
    holds: bool


def retraction_displacement_check(t: MultivaluedOperator, params: ContractionParams,
                                  L: float, xstar: float,
                                  grid_n: int = 2001) -> XiResult:
    """Largest xi in (0,1) with |x - x*| <= (1+g)L/((1-a-b) xi) * D(x, T(x)) on the grid.

    Found by bisection; points with D(x,T(x)) < 1e-14 and |x - x*| < 1e-9
    are skipped.  holds means xi_max >= 1e-6.
    """
    if L <= 0.0:
        raise ParameterRangeError("retraction-displacement check needs L > 0")
    denom = 1.0 - params.alpha - params.beta
    if denom <= 0.0:
        raise ParameterRangeError("need alpha + beta < 1 for the displacement bound")
    C = (1.0 + params.gamma) * L / denom
    dist_vals, err_vals = [], []
    for x in t.domain.grid(grid_n):
        x = float(x)
        d = dist_point_to_set(x, t.eval(x))
        e = abs(x - xstar)
        if d < 1e-14 and e < 1e-9:
            continue
        dist_vals.append(d)
        err_vals.append(e)
    dd = np.asarray(dist_vals)
    ee = np.asarray(err_vals)

    def pred(xi: float) -> bool:
        return bool(np.all(ee * xi <= C * dd))

    lo, hi = 0.0, 1.0
    if pred(1.0 - 1e-12):
        return XiResult(1.0 - 1e-12, True)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return XiResult(lo, lo >= 1e-6)


class KBound(NamedTuple):
    value: float
    in_unit: bool


def corollary_k(params: ContractionParams) -> KBound:
    """(alpha + beta) / (1 - gamma): the pointwise contraction factor toward x*."""
    if params.gamma >= 1.0:
        raise ParameterRangeError("corollary_k needs gamma < 1")
    value = (params.alpha + params.beta) / (1.0 - params.gamma)
    return KBound(value, value < 1.0)


@dataclass(frozen=True)
class AuxiliaryConstants:
    """The constants threaded from certification into the stability harnesses.

    l   -- comparison supremum H(T(x),{x*}) / H(T_G(x),{x*}) (None if unavailable)
    k   -- (alpha+beta)/(1-gamma) of a feasible perturbed certificate
    L   -- displacement comparison sup D(x,T_G(x)) / D(x,T(x))
    xi  -- retraction-displacement free parameter found by bisection
    """

    l: float | None
    k: float | None
    L: float
    xi: float | None
    valid_l: bool
    l_skipped: int = 0
    L_skipped: int = 0

    def to_json(self) -> dict:
        return {"l": self.l, "k": self.k, "L": self.L, "xi": self.xi,
                "valid_l": self.valid_l, "l_skipped": self.l_skipped,
                "L_skipped": self.L_skipped}
