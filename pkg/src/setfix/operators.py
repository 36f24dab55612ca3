"""Multivalued operators T : X -> P_cl(X) with exact set images.

Operators are declarative: the domain is covered by pieces, and on each
piece the value T(x) = [lower(x), upper(x)] is bounded by terms from a
small closed-form catalog

    f(x) = offset + slope*x + coeff*base(x),   base in {x^p, sqrt(x), 1/sqrt(x)}

(affine and constant terms have no base part).  Every term has analytically
known critical points, so pieces can always be split until both boundaries
are monotone and the exact range of f over any subinterval is attained at
endpoints or interior extrema.  That is what makes set images T(Y) exact
rather than sampled: for a connected family of nonempty intervals the union
over x in [u, v] is exactly [min lower, max upper].

The catalog is closed under x -> a*x + b*f(x) + c, which is precisely what
admissible perturbations T_G(x) = {G(x, u) : u in T(x)} with affine
G(x, y) = a*x + b*y + c (the Takahashi combination lam*x + (1-lam)*y being
the convex special case) require.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import (
    AxiomViolationError,
    OutOfDomainError,
    ParameterRangeError,
    SchemaError,
    UnsupportedPerturbationError,
)
from .intervals import AMBIENT_TOL, Domain, Interval, IntervalUnion, normalize

#: Step used for grid validation of piece invariants (order, self-map).
VALIDATION_STEP = 1e-4

#: Tolerance for the self-map requirement T(x) subset of X at construction.
SELF_MAP_SLACK = 1e-9

_BASES = ("none", "power", "sqrt", "invsqrt")


@dataclass(frozen=True)
class BoundaryFn:
    """One term of the closed expression catalog, monotone after splitting."""

    base: str = "none"
    p: int = 2
    coeff: float = 0.0
    slope: float = 0.0
    offset: float = 0.0

    def __post_init__(self) -> None:
        if self.base not in _BASES:
            raise ValueError(f"unknown base {self.base!r}")
        if self.base == "power" and (not isinstance(self.p, int) or self.p < 1):
            raise ValueError(f"power base needs an integer exponent >= 1, got {self.p!r}")

    # -- evaluation ---------------------------------------------------------

    def _base_value(self, x: float) -> float:
        if self.base == "power":
            return x ** self.p
        if self.base == "sqrt":
            return math.sqrt(x)
        if self.base == "invsqrt":
            return 1.0 / math.sqrt(x)
        return 0.0

    def value(self, x: float) -> float:
        acc = self.offset + self.slope * x
        if self.coeff != 0.0 and self.base != "none":
            acc += self.coeff * self._base_value(x)
        return acc

    def value_array(self, xs: np.ndarray) -> np.ndarray:
        acc = self.offset + self.slope * xs
        if self.coeff != 0.0 and self.base != "none":
            if self.base == "power":
                acc = acc + self.coeff * xs ** self.p
            elif self.base == "sqrt":
                acc = acc + self.coeff * np.sqrt(xs)
            else:
                acc = acc + self.coeff / np.sqrt(xs)
        return np.asarray(acc, dtype=float)

    # -- calculus on the catalog -------------------------------------------

    def critical_points(self, lo: float, hi: float) -> list[float]:
        """Interior extrema of the term on (lo, hi); analytically exact."""
        pts: list[float] = []
        if self.base == "none" or self.coeff == 0.0:
            return pts
        if self.base == "power":
            p = self.p
            if p == 1:
                return pts
            d = p * self.coeff  # f' = d*x^(p-1) + slope
            if self.slope == 0.0:
                if (p - 1) % 2 == 1:  # even p: sign change at 0
                    pts = [0.0]
            else:
                r = -self.slope / d
                if (p - 1) % 2 == 1:
                    pts = [math.copysign(abs(r) ** (1.0 / (p - 1)), r)]
                elif r > 0.0:
                    root = r ** (1.0 / (p - 1))
                    pts = [root, -root]
        elif self.base == "sqrt":
            # f' = coeff/(2 sqrt x) + slope
            if self.slope != 0.0:
                s = -self.coeff / (2.0 * self.slope)
                if s > 0.0:
                    pts = [s * s]
        elif self.base == "invsqrt":
            # f' = -coeff/(2 x^(3/2)) + slope
            if self.slope != 0.0:
                r = self.coeff / (2.0 * self.slope)
                if r > 0.0:
                    pts = [r ** (2.0 / 3.0)]
        eps = 1e-12
        return sorted(x for x in pts if lo + eps < x < hi - eps)

    def range_on(self, lo: float, hi: float) -> tuple[float, float]:
        """Exact min/max of the term over [lo, hi]."""
        vals = [self.value(lo), self.value(hi)]
        vals.extend(self.value(x) for x in self.critical_points(lo, hi))
        return min(vals), max(vals)

    def is_monotone_on(self, lo: float, hi: float) -> bool:
        return not self.critical_points(lo, hi)

    def direction_on(self, lo: float, hi: float) -> int:
        """+1 nondecreasing, -1 nonincreasing, 0 if not monotone on the piece."""
        if not self.is_monotone_on(lo, hi):
            return 0
        d = self.value(hi) - self.value(lo)
        if d > 0:
            return 1
        if d < 0:
            return -1
        return 1  # constant: weakly increasing by convention

    def min_domain(self) -> tuple[float, bool]:
        """(lowest admissible x, whether that bound is inclusive)."""
        if self.base == "sqrt" and self.coeff != 0.0:
            return 0.0, True
        if self.base == "invsqrt" and self.coeff != 0.0:
            return 0.0, False
        return -math.inf, False

    # -- algebra -------------------------------------------------------------

    def compose_affine(self, a: float, b: float, c: float) -> "BoundaryFn":
        """The term x -> a*x + b*f(x) + c, still inside the catalog."""
        return BoundaryFn(
            base=self.base,
            p=self.p,
            coeff=b * self.coeff,
            slope=a + b * self.slope,
            offset=c + b * self.offset,
        )

    def shifted(self, delta: float) -> "BoundaryFn":
        return BoundaryFn(self.base, self.p, self.coeff, self.slope, self.offset + delta)

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        if self.base == "none":
            if self.slope == 0.0:
                return {"kind": "const", "value": self.offset}
            out = {"kind": "affine", "a": self.slope}
            if self.offset != 0.0:
                out["b"] = self.offset
            return out
        out = {"kind": self.base, "coeff": self.coeff}
        if self.base == "power":
            out["p"] = self.p
        if self.slope != 0.0:
            out["slope"] = self.slope
        if self.offset != 0.0:
            out["offset"] = self.offset
        return out

    @classmethod
    def from_json(cls, obj: object) -> "BoundaryFn":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise SchemaError(f"term must be an object with a 'kind', got {obj!r}")
        kind = obj["kind"]
        def num(key, default=None):
            v = obj.get(key, default)
            if not isinstance(v, (int, float)):
                raise SchemaError(f"term field {key!r} must be a number in {obj!r}")
            return float(v)
        if kind == "const":
            return cls(offset=num("value", obj.get("b", 0.0)))
        if kind == "affine":
            return cls(slope=num("a"), offset=num("b", 0.0))
        if kind in ("power", "sqrt", "invsqrt"):
            p = obj.get("p", 2)
            if kind == "power" and (not isinstance(p, int) or p < 1):
                raise SchemaError(f"power term needs integer p >= 1, got {p!r}")
            return cls(base=kind, p=p if kind == "power" else 2,
                       coeff=num("coeff", 1.0), slope=num("slope", 0.0),
                       offset=num("offset", 0.0))
        raise SchemaError(f"unknown term kind {kind!r}")


@dataclass(frozen=True)
class Piece:
    """One subinterval of the domain with its lower/upper boundary terms."""

    sub: Interval
    lower: BoundaryFn
    upper: BoundaryFn


@dataclass(frozen=True)
class MultivaluedOperator:
    """Piecewise-monotone description of x -> [lower(x), upper(x)].

    Construction is strict: pieces must cover the domain with disjoint
    interiors, both boundaries must be monotone on every piece (split at
    extrema first), lower <= upper on a validation grid, and all values must
    stay inside the domain (self-map) up to SELF_MAP_SLACK.
    """

    domain: Domain
    pieces: tuple[Piece, ...]
    name: str = ""

    def __post_init__(self) -> None:
        pieces = tuple(self.pieces)
        object.__setattr__(self, "pieces", pieces)
        if not pieces:
            raise ValueError("an operator needs at least one piece")
        b = self.domain.bounds
        if abs(pieces[0].sub.lo - b.lo) > 1e-9 or abs(pieces[-1].sub.hi - b.hi) > 1e-9:
            raise ValueError("pieces must cover the domain exactly")
        for p1, p2 in zip(pieces, pieces[1:]):
            if abs(p1.sub.hi - p2.sub.lo) > 1e-9:
                raise ValueError("pieces must be contiguous with disjoint interiors")
        for pc in pieces:
            self._validate_piece(pc)
        object.__setattr__(self, "_piece_los", tuple(pc.sub.lo for pc in pieces))

    def _validate_piece(self, pc: Piece) -> None:
        lo, hi = pc.sub.lo, pc.sub.hi
        for fn in (pc.lower, pc.upper):
            mlo, inclusive = fn.min_domain()
            if lo < mlo or (lo == mlo and not inclusive):
                raise ValueError(
                    f"term {fn.to_json()} undefined on piece [{lo}, {hi}]")
            if not fn.is_monotone_on(lo, hi):
                raise ValueError(
                    f"boundary {fn.to_json()} is not monotone on [{lo}, {hi}]; "
                    f"split the piece at its extrema")
        n = min(max(2, int(pc.sub.width / VALIDATION_STEP) + 1), 200_000)
        xs = np.linspace(lo, hi, n)
        low = pc.lower.value_array(xs)
        upp = pc.upper.value_array(xs)
        if np.any(low > upp + 1e-12):
            i = int(np.argmax(low - upp))
            raise ValueError(
                f"lower boundary exceeds upper at x={xs[i]!r} on piece [{lo}, {hi}]")
        b = self.domain.bounds
        vals = np.concatenate([low, upp])
        if vals.min() < b.lo - SELF_MAP_SLACK or vals.max() > b.hi + SELF_MAP_SLACK:
            raise ValueError(
                f"operator is not a self-map: values of piece [{lo}, {hi}] escape "
                f"[{b.lo}, {b.hi}]")

    # -- evaluation -----------------------------------------------------------

    def _piece_index(self, x: float) -> int:
        # left-closed selection: at a shared endpoint the right piece wins
        i = bisect_right(self._piece_los, x) - 1
        return max(i, 0)

    def eval(self, x: float) -> IntervalUnion:
        """T(x) = [lower(x), upper(x)] of the piece containing x."""
        b = self.domain.bounds
        if not b.contains(x, AMBIENT_TOL):
            raise OutOfDomainError(f"x={x!r} outside operator domain [{b.lo}, {b.hi}]")
        x = b.clamp(x)
        pc = self.pieces[self._piece_index(x)]
        lo = pc.lower.value(x)
        hi = pc.upper.value(x)
        if hi < lo:  # float noise within validation slack only
            lo, hi = hi, lo
        return IntervalUnion((Interval(b.clamp(lo), b.clamp(hi)),), ambient=b)

    def set_image(self, y: IntervalUnion) -> IntervalUnion:
        """Exact T(Y) = union of T(y) over y in Y (closure at piece junctions)."""
        b = self.domain.bounds
        if y.parts[0].lo < b.lo - AMBIENT_TOL or y.parts[-1].hi > b.hi + AMBIENT_TOL:
            raise OutOfDomainError(
                f"set {y.to_json()} escapes operator domain [{b.lo}, {b.hi}]")
        out: list[Interval] = []
        for part in y.parts:
            a = max(part.lo, b.lo)
            z = min(part.hi, b.hi)
            for pc in self.pieces:
                u = max(a, pc.sub.lo)
                v = min(z, pc.sub.hi)
                if u > v:
                    continue
                lo = pc.lower.range_on(u, v)[0]
                hi = pc.upper.range_on(u, v)[1]
                out.append(Interval(b.clamp(lo), b.clamp(max(lo, hi))))
        return normalize(out, ambient=b)

    # -- serialization ----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "domain": [self.domain.bounds.lo, self.domain.bounds.hi],
            "pieces": [
                {"sub": [pc.sub.lo, pc.sub.hi],
                 "lower": pc.lower.to_json(),
                 "upper": pc.upper.to_json()}
                for pc in self.pieces
            ],
        }

    @classmethod
    def from_json(cls, obj: object, name: str = "") -> "MultivaluedOperator":
        if not isinstance(obj, dict):
            raise SchemaError("operator JSON must be an object")
        dom = obj.get("domain")
        if (not isinstance(dom, (list, tuple)) or len(dom) != 2
                or not all(isinstance(v, (int, float)) for v in dom)):
            raise SchemaError(f"operator 'domain' must be [lo, hi], got {dom!r}")
        pieces_json = obj.get("pieces")
        if not isinstance(pieces_json, list) or not pieces_json:
            raise SchemaError("operator 'pieces' must be a nonempty list")
        pieces = []
        for pj in pieces_json:
            if not isinstance(pj, dict) or "sub" not in pj:
                raise SchemaError(f"piece must be an object with 'sub', got {pj!r}")
            sub = pj["sub"]
            if (not isinstance(sub, (list, tuple)) or len(sub) != 2
                    or not all(isinstance(v, (int, float)) for v in sub)):
                raise SchemaError(f"piece 'sub' must be [a, b], got {sub!r}")
            pieces.append(Piece(
                Interval(float(sub[0]), float(sub[1])),
                BoundaryFn.from_json(pj.get("lower")),
                BoundaryFn.from_json(pj.get("upper")),
            ))
        try:
            return cls(Domain(Interval(float(dom[0]), float(dom[1]))),
                       tuple(pieces), name=name)
        except ValueError as exc:
            raise SchemaError(f"invalid operator: {exc}") from exc


# -- perturbations --------------------------------------------------------------


@dataclass(frozen=True)
class Takahashi:
    """Convex-combination perturbation G(x, y) = lam*x + (1-lam)*y, lam in (0, 1)."""

    lam: float

    def __post_init__(self) -> None:
        if not 0.0 < self.lam < 1.0:
            raise ParameterRangeError(
                f"Takahashi parameter must lie strictly inside (0, 1), got {self.lam}")

    @property
    def coefficients(self) -> tuple[float, float, float]:
        return (self.lam, 1.0 - self.lam, 0.0)

    def to_json(self) -> dict:
        return {"kind": "takahashi", "lam": self.lam}


@dataclass(frozen=True)
class GeneralG:
    """General affine perturbation G(x, y) = a*x + b*y + c.

    Within the term catalog any G satisfying the admissibility identity
    G(x, x) = x for all x is necessarily affine with a + b = 1 and c = 0;
    arbitrary coefficients are accepted here so that the axiom checker can
    exhibit failures.
    """

    a: float
    b: float
    c: float = 0.0

    @property
    def coefficients(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)

    def to_json(self) -> dict:
        return {"kind": "general", "a": self.a, "b": self.b, "c": self.c}


PerturbationSpec = Union[Takahashi, GeneralG]


def perturbation_from_json(obj: object) -> PerturbationSpec:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SchemaError(f"perturbation must be an object with 'kind', got {obj!r}")
    kind = obj["kind"]
    if kind == "takahashi":
        lam = obj.get("lam")
        if not isinstance(lam, (int, float)):
            raise SchemaError("takahashi perturbation needs a numeric 'lam'")
        try:
            return Takahashi(float(lam))
        except ParameterRangeError as exc:
            raise SchemaError(str(exc)) from exc
    if kind == "general":
        vals = []
        for key in ("a", "b", "c"):
            v = obj.get(key, 0.0)
            if not isinstance(v, (int, float)):
                raise SchemaError(f"general perturbation field {key!r} must be a number")
            vals.append(float(v))
        return GeneralG(*vals)
    raise SchemaError(f"unknown perturbation kind {kind!r}")


@dataclass(frozen=True)
class AxiomReport:
    """Result of grid verification of the admissibility axioms."""

    passes: bool
    max_identity_dev: float
    witness: tuple[float, float] | None
    grid_n: int


def check_perturbation_axioms(spec: PerturbationSpec, dom: Domain,
                              grid_n: int = 1001) -> AxiomReport:
    """Verify G(x,x) = x and (G(x,y) = x => y = x) on a grid.

    Passes iff max |G(x,x) - x| < 1e-12 and no witness pair (x, y), y != x,
    with |G(x,y) - x| < 1e-9 exists.  Among violating pairs the one with the
    largest |y - x| is reported.
    """
    if grid_n < 2:
        raise ParameterRangeError("axiom check needs grid_n >= 2")
    a, b, c = spec.coefficients
    xs = dom.grid(grid_n)
    dev = float(np.max(np.abs(a * xs + b * xs + c - xs)))
    X = xs[:, None]
    Y = xs[None, :]
    off_diag = np.abs(Y - X) > 0.0
    viol = (np.abs(a * X + b * Y + c - X) < 1e-9) & off_diag
    witness = None
    if viol.any():
        sep = np.where(viol, np.abs(Y - X), -1.0)
        i, j = np.unravel_index(int(np.argmax(sep)), sep.shape)
        witness = (float(xs[i]), float(xs[j]))
    return AxiomReport(dev < 1e-12 and witness is None, dev, witness, grid_n)


def perturb(t: MultivaluedOperator, spec: PerturbationSpec,
            axiom_grid_n: int = 1001) -> MultivaluedOperator:
    """The admissible perturbation T_G(x) = {G(x, u) : u in T(x)}.

    For affine G(x, y) = a*x + b*y + c each boundary term maps into the
    catalog via compose_affine; pieces are re-split at the extrema of the
    composed boundaries so the result keeps the monotone-piece invariant
    and supports exact set images.
    """
    report = check_perturbation_axioms(spec, t.domain, axiom_grid_n)
    if not report.passes:
        raise AxiomViolationError(
            f"perturbation {spec.to_json()} violates admissibility axioms: "
            f"max |G(x,x)-x| = {report.max_identity_dev:.3e}, witness = {report.witness}")
    a, b, c = spec.coefficients
    if b == 0.0:
        raise UnsupportedPerturbationError(
            "perturbation is constant in its second argument")
    pieces: list[Piece] = []
    for pc in t.pieces:
        low = pc.lower.compose_affine(a, b, c)
        upp = pc.upper.compose_affine(a, b, c)
        if b < 0.0:
            low, upp = upp, low
        cuts = sorted(set(
            low.critical_points(pc.sub.lo, pc.sub.hi)
            + upp.critical_points(pc.sub.lo, pc.sub.hi)))
        edges = [pc.sub.lo, *cuts, pc.sub.hi]
        for u, v in zip(edges, edges[1:]):
            pieces.append(Piece(Interval(u, v), low, upp))
    if isinstance(spec, Takahashi):
        label = f"takahashi({spec.lam:g})"
    else:
        label = f"general({a:g},{b:g},{c:g})"
    base_name = t.name or "operator"
    return MultivaluedOperator(t.domain, tuple(pieces), name=f"{base_name}|{label}")


# -- built-in operators ----------------------------------------------------------


def square_example() -> MultivaluedOperator:
    """T(x) = [-x^2, x^2] on X = [-8/9, 8/9]; Fix(T) = SFix(T) = {0}."""
    c = 8.0 / 9.0
    lower = BoundaryFn(base="power", p=2, coeff=-1.0)
    upper = BoundaryFn(base="power", p=2, coeff=1.0)
    pieces = (
        Piece(Interval(-c, 0.0), lower, upper),
        Piece(Interval(0.0, c), lower, upper),
    )
    return MultivaluedOperator(Domain(Interval(-c, c)), pieces, name="square_example")


def sqrt_example() -> MultivaluedOperator:
    """T(x) = [1, 1/sqrt(x)] on [1/4, 1), [1, sqrt(x)] on [1, 4]; strict fixed point 1."""
    one = BoundaryFn(offset=1.0)
    pieces = (
        Piece(Interval(0.25, 1.0), one, BoundaryFn(base="invsqrt", coeff=1.0)),
        Piece(Interval(1.0, 4.0), one, BoundaryFn(base="sqrt", coeff=1.0)),
    )
    return MultivaluedOperator(Domain(Interval(0.25, 4.0)), pieces, name="sqrt_example")


BUILTIN_OPERATORS = {
    "square_example": square_example,
    "sqrt_example": sqrt_example,
}


def get_builtin(name: str) -> MultivaluedOperator:
    try:
        factory = BUILTIN_OPERATORS[name]
    except KeyError:
        raise SchemaError(
            f"unknown built-in operator {name!r}; "
            f"available: {sorted(BUILTIN_OPERATORS)}") from None
    return factory()


def constant_operator(dom: Domain, value: float, name: str = "") -> MultivaluedOperator:
    """T(x) = {value}; the simplest operator with a strict fixed point."""
    if not dom.contains(value, 0.0):
        raise OutOfDomainError(f"constant value {value} outside domain")
    term = BoundaryFn(offset=value)
    return MultivaluedOperator(dom, (Piece(dom.bounds, term, term),),
                               name=name or f"const({value:g})")


def shift_operator(t: MultivaluedOperator, delta: float) -> MultivaluedOperator:
    """T(x) + delta (value translation).  Raises if the self-map property breaks."""
    pieces = tuple(
        Piece(pc.sub, pc.lower.shifted(delta), pc.upper.shifted(delta))
        for pc in t.pieces)
    return MultivaluedOperator(t.domain, pieces,
                               name=f"{t.name or 'operator'}+{delta:g}")
