"""Conservation-law and symmetry verification.

Polynomial inputs get exact verdicts through :mod:`exprjet`; non-polynomial
first integrals are checked numerically by :func:`cl_drift`, and the two
paths are never mixed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .diffop import UPoly
from .errors import ContractError, DomainError
from .exprjet import (
    ONE,
    JetCoord,
    JetPolynomial,
    JetVectorField,
    as_coord,
    lie_bracket,
    prolong,
)
from .numerics import IntegratorConfig, integrate


@dataclass(frozen=True)
class DynamicalSystem:
    """d(coords)/dt = field."""

    field: JetVectorField

    @property
    def coords(self) -> tuple:
        return self.field.coords

    @classmethod
    def from_components(cls, coords: Sequence, components: Sequence) -> "DynamicalSystem":
        return cls(JetVectorField.from_components(coords, components))

    @classmethod
    def canonical(cls, order: int, rhs) -> "DynamicalSystem":
        """First-order form of y^(n) = rhs(x, y, ..., y^(n-1)) over (x, y, ..., y^(n-1))."""
        coords = [JetCoord("x")] + [JetCoord("y", k) for k in range(order)]
        comps = [ONE] + [JetPolynomial.var(JetCoord("y", k)) for k in range(1, order)]
        comps.append(JetPolynomial.coerce(rhs))
        return cls.from_components(coords, comps)

    def is_canonical(self) -> bool:
        return self.field.component(self.coords[0]) == ONE

    def rhs(self):
        return self.field.numeric_rhs()


@dataclass(frozen=True)
class SymmetryCandidate:
    field: JetVectorField
    tau_label: str = "tau"

    @classmethod
    def from_components(cls, coords, components, tau_label="tau") -> "SymmetryCandidate":
        return cls(JetVectorField.from_components(coords, components), tau_label)


@dataclass(frozen=True)
class CLVerdict:
    conserved: bool
    residual: JetPolynomial

    def __bool__(self) -> bool:
        return self.conserved


@dataclass(frozen=True)
class SymmetryVerdict:
    symmetry: bool
    trivial: bool
    bracket: JetVectorField

    def __bool__(self) -> bool:
        return self.symmetry

    def to_json(self) -> dict:
        return {"symmetry": self.symmetry, "trivial": self.trivial, "bracket": str(self.bracket)}


def is_conservation_law(sys: DynamicalSystem, F) -> CLVerdict:
    """Exact test of L(F) = 0 for the system's vector field L."""
    residual = sys.field.apply(JetPolynomial.coerce(F))
    return CLVerdict(residual.is_zero(), residual)


def proportionality_constant(f: JetVectorField, g: JetVectorField) -> Fraction | None:
    """c with g = c*f exactly, or None."""
    comps_f, comps_g = f.components(), g.components()
    c = None
    for pf, pg in zip(comps_f, comps_g):
        if pf.is_zero():
            if not pg.is_zero():
                return None
            continue
        # compare leading terms to guess c, then verify
        mono, coef = pf.sorted_terms()[0]
        guess = pg.terms.get(mono, Fraction(0)) / coef
        c = guess if c is None else c
        if guess != c:
            return None
    if c is None:
        return Fraction(0) if g.is_zero() else None
    return c if f * c == g else None


def is_symmetry(sys: DynamicalSystem, cand: SymmetryCandidate) -> SymmetryVerdict:
    bracket = lie_bracket(sys.field, cand.field)
    trivial = proportionality_constant(sys.field, cand.field) is not None
    return SymmetryVerdict(bracket.is_zero(), trivial, bracket)


def scale_symmetry(sys: DynamicalSystem, cand: SymmetryCandidate, F) -> SymmetryCandidate:
    """F*g for a conservation law F and a symmetry g; the product is again a symmetry."""
    F = JetPolynomial.coerce(F)
    cl = is_conservation_law(sys, F)
    if not cl:
        raise ContractError("F is not a conservation law", residual=str(cl.residual))
    sym = is_symmetry(sys, cand)
    if not sym:
        raise ContractError("candidate is not a symmetry", bracket=str(sym.bracket))
    scaled = SymmetryCandidate(cand.field * F, f"{cand.tau_label}*({F})")
    post = is_symmetry(sys, scaled)
    if not post:
        raise ContractError("scaled candidate failed the symmetry check", bracket=str(post.bracket))
    return scaled


@dataclass(frozen=True)
class G0Check:
    g0: JetPolynomial
    applicable: bool
    conserved: bool | None

    def __bool__(self) -> bool:
        return bool(self.conserved) if self.applicable else True


def g0_normalization_check(sys: DynamicalSystem, cand: SymmetryCandidate) -> G0Check:
    """For a canonical system, the first component g0 of a symmetry is a conservation law.

    Skipped (``applicable=False``) when g0 is the zero polynomial.
    """
    if not sys.is_canonical():
        raise ContractError("system is not in canonical form (first component must be 1)")
    g0 = cand.field.component(sys.coords[0])
    if g0.is_zero():
        return G0Check(g0, False, None)
    return G0Check(g0, True, is_conservation_law(sys, g0).conserved)


def normalize_symmetry(sys: DynamicalSystem, cand: SymmetryCandidate) -> SymmetryCandidate:
    """Divide the candidate by a constant nonzero g0 so that g0 = 1."""
    g0 = cand.field.component(sys.coords[0])
    if g0.is_zero():
        raise ContractError("g0 vanishes; normalisation g0 = 1 is impossible")
    if not g0.is_constant():
        raise ContractError(
            "g0 is not constant; the normalised field leaves the polynomial ring", g0=str(g0)
        )
    return SymmetryCandidate(cand.field * (1 / g0.constant_value()), cand.tau_label)


# -- evolutionary PDE flows --------------------------------------------------


def min_pde_depth(K_f, K_g) -> int:
    of = max(JetPolynomial.coerce(K_f).max_order("u"), 0)
    og = max(JetPolynomial.coerce(K_g).max_order("u"), 0)
    return of + og + 1


def evolutionary_field(K, depth: int, top: int) -> JetVectorField:
    """Prolonged flow u_t = K on jet coordinates u0..u_top, truncated at u_depth."""
    comps = prolong(K, depth)
    coords = [JetCoord("u", k) for k in range(top + 1)]
    return JetVectorField(coords, {JetCoord("u", k): c for k, c in enumerate(comps)})


def pde_bracket(K_f, K_g, depth: int | None = None) -> JetPolynomial:
    """(u_t)_tau - (u_tau)_t for the flows u_t = K_f, u_tau = K_g."""
    K_f, K_g = JetPolynomial.coerce(K_f), JetPolynomial.coerce(K_g)
    for K in (K_f, K_g):
        bad = [c.name for c in K.coords() if c.kind != "u"]
        if bad:
            raise DomainError("evolution right-hand sides may only use u0, u1, ...", coords=bad)
    need = min_pde_depth(K_f, K_g)
    if depth is None:
        depth = need
    if depth < need:
        raise ContractError(
            f"jet depth {depth} too small; use at least {need}", minimum_depth=need
        )
    top = depth + max(K_f.max_order(), K_g.max_order(), 0)
    f = evolutionary_field(K_f, depth, top)
    g = evolutionary_field(K_g, depth, top)
    return g.apply(K_f) - f.apply(K_g)


def pde_symmetry_check(K_f, K_g, depth: int | None = None) -> bool:
    return pde_bracket(K_f, K_g, depth).is_zero()


# -- one-dimensional reduction ------------------------------------------------


def _to_upoly(p: JetPolynomial, coord: JetCoord) -> UPoly:
    extra = p.coords() - {coord}
    if extra:
        raise DomainError("polynomial is not univariate", coords=sorted(c.name for c in extra))
    deg = max(p.degree(), 0)
    c = [Fraction(0)] * (deg + 1)
    for m, v in p.terms.items():
        c[sum(e for _, e in m)] = v
    return UPoly(c)


@dataclass(frozen=True)
class ReducedSymmetryVerdict:
    bracket_vanishes: bool
    ratio: Fraction | None

    @property
    def trivial(self) -> bool:
        return self.ratio is not None


def reduced_symmetry_check(f, g, coord="y") -> ReducedSymmetryVerdict:
    """For a' = f(a): is g a symmetry (f g' - g f' = 0), and is g = c f?"""
    coord = as_coord(coord)
    fp, gp = _to_upoly(JetPolynomial.coerce(f), coord), _to_upoly(JetPolynomial.coerce(g), coord)
    bracket = fp * gp.derivative() - gp * fp.derivative()
    ratio = None
    if not fp.is_zero():
        q, r = gp.divmod(fp)
        if r.is_zero() and q.degree <= 0:
            ratio = q.c[0] if q.c else Fraction(0)
    return ReducedSymmetryVerdict(bracket.is_zero(), ratio)


def polynomial_symmetries_1d(f, max_degree: int, coord="y") -> list[UPoly]:
    """Basis of all polynomial g with deg g <= max_degree and f g' - g f' = 0.

    Solved as an exact linear system over the rationals.
    """
    coord = as_coord(coord)
    fp = _to_upoly(JetPolynomial.coerce(f), coord)
    cols = []
    for j in range(max_degree + 1):
        e = UPoly.monomial(j)
        cols.append(fp * e.derivative() - e * fp.derivative())
    nrows = max((c.degree for c in cols), default=0) + 1
    A = [[(cols[j].c[i] if i < len(cols[j].c) else Fraction(0)) for j in range(len(cols))] for i in range(nrows)]
    return [UPoly(v) for v in _nullspace(A, len(cols))]


def _nullspace(A: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    rows = [r[:] for r in A]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -rows[i][fc]
        basis.append(v)
    return basis


# -- numerical drift -----------------------------------------------------------


@dataclass(frozen=True)
class NumericCL:
    evaluator: Callable[[np.ndarray], float]
    label: str = "F"


@dataclass
class DriftReport:
    label: str
    max_drift: float
    initial_value: float
    steps: int


def cl_drift(
    rhs,
    cl: NumericCL,
    y0,
    T: float,
    config: IntegratorConfig | None = None,
    t0: float = 0.0,
) -> DriftReport:
    """Integrate and return max |F(y(t)) - F(y(0))| over every step."""
    if isinstance(rhs, DynamicalSystem):
        rhs = rhs.rhs()
    traj = integrate(rhs, y0, t0, t0 + T, config or IntegratorConfig())
    with np.errstate(all="ignore"):
        values = np.array([cl.evaluator(state) for state in traj.y], dtype=float)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise DomainError(
            "trajectory left the conservation law's domain",
            time=float(traj.t[bad[0]]),
            label=cl.label,
        )
    drift = float(np.max(np.abs(values - values[0])))
    return DriftReport(cl.label, drift, float(values[0]), len(traj) - 1)
