"""The thirteen acceptance checks, shared by ``verify-all`` and the test suite.

Each check returns measured values and a verdict; wall time is compared with
the check's budget.  Measured values are deterministic for a fixed seed, so
the CSV summary written by :func:`write_summary` is reproducible byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import diffop, resonance, spectral, symmetry, threebody, transforms, wronskian
from .exprjet import JetPolynomial
from .numerics import Grid1D, SampledField

SCHEMA_VERSION = 1


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: dict
    budget: float
    elapsed: float = 0.0
    error: str | None = None

    @property
    def within_budget(self) -> bool:
        return self.elapsed < self.budget

    @property
    def ok(self) -> bool:
        return self.passed and self.within_budget and self.error is None

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        extra = f" error={self.error}" if self.error else ""
        return f"[{status}] {self.number:2d} {self.title}: {shown} ({self.elapsed:.2f}s / {self.budget:g}s){extra}"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


CHECKS: dict[int, tuple[str, float, Callable]] = {}


def check(number: int, title: str, budget: float):
    def deco(fn):
        CHECKS[number] = (title, budget, fn)
        return fn

    return deco


def _rand_frac(rng, lo=-5, hi=5) -> Fraction:
    return Fraction(int(rng.integers(lo, hi + 1)), int(rng.integers(1, 4)))


def _rand_poly(rng, deg: int) -> diffop.UPoly:
    return diffop.UPoly([_rand_frac(rng) for _ in range(deg + 1)])


def _rand_op(rng, order: int, deg: int = 2) -> diffop.LinearDiffOp:
    return diffop.LinearDiffOp([diffop.RationalFn(_rand_poly(rng, deg)) for _ in range(order + 1)])


# --------------------------------------------------------------------------


@check(1, "operator algebra", 1.0)
def c1(rng, level):
    d2 = diffop.LinearDiffOp.d(2)
    leibniz = True
    for _ in range(50):
        a = diffop.RationalFn(_rand_poly(rng, int(rng.integers(0, 6))))
        got = diffop.compose(d2, diffop.LinearDiffOp.multiplication(a))
        want = diffop.LinearDiffOp([a.derivative(2), a.derivative() * 2, a])
        leibniz &= got == want
    assoc = True
    for _ in range(10):
        A, B, C = (_rand_op(rng, int(rng.integers(0, 4))) for _ in range(3))
        assoc &= diffop.compose(diffop.compose(A, B), C) == diffop.compose(A, diffop.compose(B, C))
    return leibniz and assoc, {"leibniz_cases": 50, "leibniz_exact": leibniz, "associativity_exact": assoc}


@check(2, "commutator of derivations", 1.0)
def c2(rng, level):
    ok = True
    for _ in range(50):
        a = diffop.RationalFn(_rand_poly(rng, int(rng.integers(0, 5))))
        b = diffop.RationalFn(_rand_poly(rng, int(rng.integers(0, 5))))
        A = diffop.LinearDiffOp([0, a])
        B = diffop.LinearDiffOp([0, b])
        C = diffop.commutator(A, B)
        ok &= C.coeff(0).is_zero() and C.order() <= 1
        ok &= C.coeff(1) == a * b.derivative() - b * a.derivative()
    return ok, {"cases": 50, "zeroth_order_vanishes": ok}


@check(3, "kernel-to-operator construction", 2.0)
def c3(rng, level):
    one_x = diffop.monic_operator_from_kernel(["1", "x"])
    exact_ok = one_x == diffop.LinearDiffOp.d(2)
    op = wronskian.operator_from_kernel(
        wronskian.KernelSpec([wronskian.catalog("x"), wronskian.catalog("x^2")], (0.5, 2.0), 64)
    )
    xs = op.x
    hand = np.stack([2 / xs**2, -2 / xs, np.ones_like(xs)], axis=-1)
    gap_x_x2 = float(np.max(np.abs(op.coeffs - hand)))
    basis = [wronskian.sin_basis(), wronskian.sqrt_basis()]
    ss = wronskian.operator_from_kernel(wronskian.KernelSpec(basis, (0.5, 1.4), 64))
    resid = max(wronskian.membership_test(ss, b) for b in basis)
    cmp = wronskian.compare_with_reference(ss, basis)
    measured = {
        "one_x_is_d2": exact_ok,
        "x_x2_gap": gap_x_x2,
        "sin_sqrt_residual": resid,
        "reference_form_matches": cmp.agrees,
        "reference_form_gap": cmp.max_coefficient_gap,
    }
    # a mismatch with the reference equation is reported, not failed
    return exact_ok and gap_x_x2 < 1e-10 and resid < 1e-8, measured


def _example_system() -> symmetry.DynamicalSystem:
    return symmetry.DynamicalSystem.canonical(2, "1")


@check(4, "symmetry and conservation-law suite", 5.0)
def c4(rng, level):
    system = _example_system()
    coords = system.coords
    F1 = JetPolynomial.parse("y1 - x")
    F2 = JetPolynomial.parse("(y1 - x)^2 - 2*(y + x^2/2 - x*y1)")
    cls_ok = all(symmetry.is_conservation_law(system, F).conserved for F in (F1, F2))
    g1 = symmetry.SymmetryCandidate.from_components(coords, [1, 0, 0])
    g2 = symmetry.SymmetryCandidate.from_components(coords, [0, "x", 1])
    g3 = symmetry.SymmetryCandidate.from_components(coords, [0, 1, 0])
    syms_ok = all(symmetry.is_symmetry(system, g).symmetry for g in (g1, g2))
    scaling_ok = True
    for _ in range(20):
        # random valid triple: F and the multiplier of g are polynomials in the two CLs
        def cl_poly():
            p = JetPolynomial.const(_rand_frac(rng))
            for e1 in range(3):
                for e2 in range(2):
                    if e1 + e2 and rng.random() < 0.5:
                        p = p + (F1**e1) * (F2**e2) * _rand_frac(rng)
            return p

        base = [g1, g2, g3][int(rng.integers(0, 3))]
        cand = symmetry.SymmetryCandidate(base.field * cl_poly())
        F = cl_poly()
        scaled = symmetry.scale_symmetry(system, cand, F)
        scaling_ok &= symmetry.is_symmetry(system, scaled).symmetry
    pde_ok = all(
        symmetry.pde_symmetry_check("2*u0*u1", phi) for phi in ("u1", "u0*u1", "u0^2*u1", "u0^3*u1")
    )
    negative = not symmetry.pde_symmetry_check("2*u0*u1", "u2")
    passed = cls_ok and syms_ok and scaling_ok and pde_ok and negative
    return passed, {
        "example_cls": cls_ok,
        "example_symmetries": syms_ok,
        "scaling_triples": scaling_ok,
        "shock_family": pde_ok,
        "negative_control_fails": negative,
    }


@check(5, "hodograph solution", 1.0)
def c5(rng, level):
    prof = transforms.linear_profile()
    xs = np.linspace(-1, 1, 9)
    err = 0.0
    for t in np.linspace(0.0, 0.4, 9):
        for x in xs:
            r = transforms.hodograph_solve(prof, x, t)
            err = max(err, abs(r.u - x / (1 - 2 * t)), r.residual)
    tb = transforms.breaking_time(prof)
    # phi(u) - 2 t u = x implies u_t = 2 u u_x
    transport = transforms.reduce_to_inviscid(lambda u: 2 * u, lambda u: 2 * np.ones_like(u))
    pde = 0.0
    for p in (prof, transforms.cubic_profile()):
        field = np.vectorize(lambda a, b, p=p: transforms.hodograph_solve(p, a, b).u)
        r_u, _ = transport.residuals(field, np.linspace(-1, 1, 5), np.linspace(0.05, 0.35, 4), h=1e-3)
        pde = max(pde, r_u)
    return err < 1e-12 and pde < 1e-8 and abs(tb - 0.5) < 1e-9, {
        "closed_form_gap": err,
        "pde_residual": pde,
        "breaking_time_error": abs(tb - 0.5),
    }


@check(6, "Burgers pipeline", 10.0)
def c6(rng, level):
    n = 256
    g = Grid1D(n)
    u0 = SampledField.from_function(g, lambda x: 0.5 * np.sin(x))
    a = spectral.burgers_solve(u0, 0.5)
    b = spectral.burgers_direct(u0, 0.5, dt=1e-3)
    gap = float(np.max(np.abs(a.values - b.values)))
    mass = max(abs(spectral.burgers_solve(u0, t).integral() - u0.integral()) for t in np.linspace(0, 1, 11))
    w = SampledField.from_function(g, lambda x: 2 + np.cos(x) + 0.3 * np.sin(2 * x))
    semi = float(
        np.max(np.abs(spectral.heat_solve(w, 0.7).values - spectral.heat_solve(spectral.heat_solve(w, 0.3), 0.4).values))
    )
    res = spectral.burgers_residual(u0, 0.5)
    return gap < 1e-5 and mass < 1e-10 and semi < 1e-12 and res < 1e-5, {
        "pipeline_vs_direct": gap,
        "mass_drift": mass,
        "semigroup_gap": semi,
        "pde_residual": res,
    }


@check(7, "dispersion classification", 1.0)
def c7(rng, level):
    ks = np.linspace(0.5, 2.0, 7)
    r1 = spectral.dispersion_relation(spectral.parse_dispersion("ut - uxxx"), ks)
    r2 = spectral.dispersion_relation(spectral.parse_dispersion("ut - 1.5*ux"), ks)
    r3 = spectral.dispersion_relation(spectral.parse_dispersion("utt - uxx"), ks)
    err1 = float(np.max(np.abs(r1.omega_dd[:, 0] - 6 * ks)))
    err2 = float(np.max(np.abs(r2.omega_dd)))
    err3 = float(np.max(np.abs(r3.omega_dd)))
    passed = r1.dispersive and not r2.dispersive and not r3.dispersive and max(err1, err2, err3) < 1e-6
    return passed, {
        "k3_dispersive": r1.dispersive,
        "advection_dispersive": r2.dispersive,
        "wave_dispersive": r3.dispersive,
        "max_omega_dd_error": max(err1, err2, err3),
    }


@check(8, "soliton residual convergence", 30.0)
def c8(rng, level):
    kdv = spectral.pde_residual(spectral.kdv_spec(), spectral.kdv_soliton(1.0))
    nls = spectral.pde_residual(spectral.nls_spec(+1), spectral.nls_soliton(1.0))
    rk, rn = min(kdv.ratios), min(nls.ratios)
    return rk >= 12 and rn >= 12, {"kdv_min_ratio": rk, "nls_min_ratio": rn, "nls_sign": "+"}


@check(9, "Jost solver", 5.0)
def c9(rng, level):
    zero = spectral.JostProblem(lambda x: np.zeros_like(np.asarray(x, float)), (-1.0, 1.0), 1.0)
    z = spectral.jost_solve(zero)
    zero_ok = bool(np.all(z.phi == 1.0))
    prob = spectral.JostProblem(spectral.square_well(-0.1), (-1.0, 1.0), 1.0)
    sol = spectral.jost_solve(prob)
    oracle = spectral.jost_ode_oracle(prob, sol.x)
    gap = float(np.max(np.abs(sol.phi - oracle)))
    gaps = sol.gaps
    ratios = [b / a for a, b in zip(gaps, gaps[1:]) if a > 1e-14 and b > 1e-14]
    geometric = bool(ratios) and max(ratios) <= sol.contraction_bound
    return zero_ok and gap < 1e-8 and geometric and gaps[-1] < 1e-12 and sol.sweeps <= 30, {
        "zero_potential_exact": zero_ok,
        "oracle_gap": gap,
        "sweeps": sol.sweeps,
        "max_contraction_ratio": max(ratios) if ratios else 0.0,
        "contraction_bound": sol.contraction_bound,
    }


@check(10, "triad", 30.0)
def c10(rng, level):
    planetary = resonance.TriadSystem.planetary((1, 2, 3))
    E, Z = resonance.triad_invariants(planetary, (1, 1, 1))
    traj = resonance.triad_run(planetary, (1.0, 1.0, 1.0), 20.0)
    inv = np.array([resonance.triad_invariants(planetary, y) for y in traj.y])
    drift = float(np.max(np.abs(inv - inv[0])))
    worst = 0.0
    for i in range(20):
        a0 = rng.uniform(-1, 1, 3)
        if i % 2:
            # generic couplings with mixed signs
            c = rng.uniform(0.5, 2.0, 3) * rng.permutation([1.0, 1.0, -1.0])
            system = resonance.TriadSystem.generic(c)
        else:
            system = planetary
        p = resonance.closed_form(system, a0)
        tr = resonance.triad_run(system, a0, p.period)
        worst = max(worst, float(np.max(np.abs(p.evaluate(tr.t) - tr.y.T))))
    us = rng.uniform(-10, 10, 1000)
    ms = rng.uniform(0, 0.999, 1000)
    ident = 0.0
    for u, m in zip(us, ms):
        sn, cn, dn = resonance.jacobi(u, m)
        ident = max(ident, abs(sn * sn + cn * cn - 1), abs(dn * dn + m * sn * sn - 1))
    passed = E == 6 and Z == 14 and drift < 1e-9 and worst < 1e-6 and ident < 1e-12
    return passed, {
        "energy": E,
        "enstrophy": Z,
        "rk4_drift": drift,
        "closed_form_gap": worst,
        "jacobi_identity": float(ident),
    }


@check(11, "quartet", 5.0)
def c11(rng, level):
    q = resonance.QuartetSystem((1.0, -0.5, 2.0, 1.5))
    A0 = (0.7, -0.4, 0.5, 0.9)
    traj = resonance.quartet_run(q, A0, 5.0)
    inv = np.array([resonance.quartet_invariants(q, y) for y in traj.y])
    drift = float(np.max(np.abs(inv - inv[0])))
    exact = resonance.quartet_rate_identity(q)
    return drift < 1e-9 and exact, {"invariant_drift": drift, "rate_identity_exact": exact}


@check(12, "three-body suite", 60.0)
def c12(rng, level):
    rep = threebody.poincare_law(1.0)
    worst_drift = {"com_velocity": 0.0, "energy": 0.0, "angular_momentum": 0.0}
    conv_min = math.inf
    for _ in range(3):
        z = np.exp(2j * np.pi * np.arange(3) / 3) + 0.2 * (rng.normal(size=3) + 1j * rng.normal(size=3))
        v = 0.3 * (rng.normal(size=3) + 1j * rng.normal(size=3))
        traj = threebody.simulate(threebody.make_state(z, v), rep, 10.0)
        d = threebody.drift(traj, rep)
        for k in worst_drift:
            worst_drift[k] = max(worst_drift[k], getattr(d, k))
        conv_min = min(conv_min, threebody.convexity_audit(traj, rep).lower_bound_min)
    lj = 0.0
    for _ in range(100):
        z = np.exp(2j * np.pi * np.arange(3) / 3) + 0.3 * (rng.normal(size=3) + 1j * rng.normal(size=3))
        lj = max(lj, threebody.lagrange_jacobi_residual(z, rep))
    newton = threebody.newton_like()
    orbit = threebody.lagrange_orbit(newton, 1.0)
    spread = threebody.distance_spread(threebody.simulate(orbit.state, newton, orbit.period), 1.0)
    pl = threebody.poincare_law(-1.0)
    lo = threebody.lagrange_orbit(pl, 1.0)
    z, v = threebody.split(lo.state)
    z = z + 1e-5 * (rng.normal(size=3) + 1j * rng.normal(size=3))
    v = v + 1e-5 * (rng.normal(size=3) + 1j * rng.normal(size=3))
    zero = threebody.poincare_inertia_study(threebody.zero_energy_state(z, v, -1.0), -1.0, 5.0)
    hot = threebody.poincare_inertia_study(threebody.make_state(z, 1.2 * v), -1.0, 5.0)
    convex = hot.energy > 0 and hot.quadratic_coefficient > 0 and math.isclose(
        hot.quadratic_coefficient, 3 * hot.energy, rel_tol=1e-6
    )
    _, _, perm = threebody.calogero_scattering([-1.0, 0.0, 1.0], [0.5, 0.0, -0.3], 1000.0)
    passed = (
        max(worst_drift.values()) < 1e-8
        and lj < 1e-8
        and conv_min > 0
        and spread < 1e-6
        and zero.z_drift < 1e-6
        and convex
        and perm < 1e-5
    )
    return passed, {
        "energy_drift": worst_drift["energy"],
        "angmom_drift": worst_drift["angular_momentum"],
        "com_velocity": worst_drift["com_velocity"],
        "lagrange_jacobi": lj,
        "convexity_min": conv_min,
        "equidistance_spread": spread,
        "zero_energy_Z_drift": zero.z_drift,
        "positive_energy_convex": convex,
        "calogero_permutation_gap": perm,
    }


@check(13, "end-to-end determinism", 120.0)
def c13(rng, level):
    """Two CLI runs with the same seed must write identical bytes."""
    import tempfile
    from pathlib import Path

    from .cli import main

    outs = []
    with tempfile.TemporaryDirectory() as tmp:
        for i in range(2):
            d = Path(tmp) / f"run{i}"
            code = main(["triad", "--n", "1,2,3", "--a0", "1,1,1", "--t", "2", "--out", str(d / "triad"), "--quiet"])
            code2 = main(["burgers", "--n", "64", "--t", "0.3", "--out", str(d / "burgers"), "--quiet"])
            files = sorted(d.rglob("*.*"))
            outs.append((code, code2, [(p.relative_to(d).as_posix(), p.read_bytes()) for p in files]))
    same = outs[0] == outs[1]
    exits_ok = all(o[0] == 0 and o[1] == 0 for o in outs)
    return same and exits_ok, {"byte_identical": same, "exit_codes_ok": exits_ok, "files": len(outs[0][2])}


# --------------------------------------------------------------------------


def run_check(number: int, seed: int = 0, level: str = "fast") -> CriterionResult:
    title, budget, fn = CHECKS[number]
    rng = np.random.default_rng(seed + number)
    start = time.perf_counter()
    try:
        passed, measured = fn(rng, level)
        err = None
    except Exception as exc:  # report, do not crash the whole suite
        passed, measured, err = False, {}, f"{type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - start
    return CriterionResult(number, title, bool(passed), measured, budget, elapsed, err)


def verify_all(level: str = "fast", seed: int = 0, skip: tuple[int, ...] = ()) -> list[CriterionResult]:
    start = time.perf_counter()
    results = [run_check(n, seed, level) for n in sorted(CHECKS) if n not in skip]
    # the end-to-end budget covers the whole suite, not just its own step
    for r in results:
        if r.number == 13:
            r.elapsed = time.perf_counter() - start
    if level == "full":
        results.append(_full_extras(seed))
    return results


def _full_extras(seed: int) -> CriterionResult:
    """Larger spectral runs (n = 512) that the fast level leaves out."""
    start = time.perf_counter()
    g = Grid1D(512)
    u0 = SampledField.from_function(g, lambda x: 0.5 * np.sin(x))
    a = spectral.burgers_solve(u0, 1.0)
    b = spectral.burgers_direct(u0, 1.0, dt=5e-4)
    gap = float(np.max(np.abs(a.values - b.values)))
    return CriterionResult(
        14, "n=512 Burgers pipeline", gap < 1e-5, {"pipeline_vs_direct": gap}, 900.0, time.perf_counter() - start
    )


def summary_rows(results: list[CriterionResult]) -> list[dict]:
    """Deterministic part of the results (no wall times)."""
    rows = []
    for r in results:
        rows.append(
            {
                "criterion": r.number,
                "title": r.title,
                "passed": r.passed and r.error is None,
                "measured": json.dumps(_jsonable(r.measured), sort_keys=True),
            }
        )
    return rows


def _jsonable(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, (bool, str, int)) or v is None:
            out[k] = v
        elif isinstance(v, Fraction):
            out[k] = str(v)
        else:
            out[k] = float(f"{float(v):.17g}")
    return out


def summary_csv(results: list[CriterionResult]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["criterion", "title", "passed", "measured"], lineterminator="\n")
    w.writeheader()
    for row in summary_rows(results):
        w.writerow(row)
    return buf.getvalue()
