"""Command-line entry point: ``integrability-lab <subcommand> [options]``.

Every run writes its artifacts (CSV time series or fields, JSON reports) into
``--out``.  Runs are deterministic: the same options and seed reproduce the
same bytes.  Exit status is 0 on success, 2 for invalid input and 3 when a
computation fails numerically; in both error cases ``error.json`` is written.
"""

from __future__ import annotations

import os

_THREADS_VAR = "INTEGRABILITY_LAB_THREADS"
if os.environ.get(_THREADS_VAR, "").isdigit() and int(os.environ[_THREADS_VAR]) > 0:
    # must happen before numpy loads its BLAS
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ[_THREADS_VAR])

import argparse
import csv
import json
import re
import sys
import traceback
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import (
    acceptance,
    diffop,
    resonance,
    spectral,
    symmetry,
    threebody,
    transforms,
    wronskian,
)
from .errors import ConfigError, ConfigurationError, IntegrabilityError, NumericalError
from .exprjet import JetPolynomial
from .numerics import Grid1D, IntegratorConfig, SampledField

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


# -- artifact writing -------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


class Artifacts:
    """Collects named outputs and writes them in one go."""

    def __init__(self, out: Path):
        self.out = out
        self.files: dict[str, str] = {}

    def csv(self, name: str, header: Sequence[str], rows) -> None:
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(fmt(v) for v in row))
        self.files[name] = "\n".join(lines) + "\n"

    def json(self, name: str, payload: dict) -> None:
        self.files[name] = dump_json(payload)

    def write(self) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (self.out / name).write_text(text, encoding="utf-8")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dump_json(payload: dict) -> str:
    body = {"schema_version": SCHEMA_VERSION, **_clean(payload)}
    return json.dumps(body, indent=2, sort_keys=True, allow_nan=True) + "\n"


# -- value parsing ----------------------------------------------------------


def floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"expected comma-separated numbers, got {text!r}") from exc


def window(text: str) -> tuple[float, float]:
    vals = floats(text)
    if len(vals) != 2 or not vals[1] > vals[0]:
        raise ConfigurationError(f"window must be 'lo,hi' with lo < hi, got {text!r}")
    return vals[0], vals[1]


def read_field_csv(path: Path) -> SampledField:
    """Read an ``x,value`` CSV sampled on the periodic grid of [0, 2pi)."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigurationError(f"cannot read field file {path}", reason=str(exc)) from exc
    if not rows or [c.strip() for c in rows[0]] != ["x", "value"]:
        raise ConfigurationError("field CSV must start with the header 'x,value'", path=str(path))
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ConfigurationError("field CSV contains a non-numeric cell", path=str(path), reason=str(exc)) from exc
    if data.ndim != 2 or data.shape[1] != 2:
        raise ConfigurationError("field CSV rows must have two columns", path=str(path))
    grid = Grid1D(len(data))
    if np.max(np.abs(data[:, 0] - grid.x)) > 1e-9:
        raise ConfigurationError("x column does not match the uniform periodic grid on [0, 2pi)")
    return SampledField(grid, data[:, 1])


def read_json(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read JSON file {path}", reason=str(exc)) from exc


def _field_rows(field: SampledField):
    vals = np.asarray(field.values)
    if np.iscomplexobj(vals):
        vals = vals.real
    return zip(field.grid.x, vals)


# -- subcommands ------------------------------------------------------------

HANDLERS: dict[str, Callable] = {}


def handler(name: str):
    def deco(fn):
        HANDLERS[name] = fn
        return fn

    return deco


@handler("diffop")
def run_diffop(args, art: Artifacts) -> int:
    L = diffop.LinearDiffOp.parse(args.op)
    if args.action == "show":
        result = L
    elif args.action == "euler":
        result = diffop.euler_substitute(L)
    else:
        if args.other is None:
            raise ConfigurationError(f"action {args.action!r} needs --with")
        M = diffop.LinearDiffOp.parse(args.other)
        result = diffop.compose(L, M) if args.action == "compose" else diffop.commutator(L, M)
    payload = {"action": args.action, "input": str(L), "result": str(result), "coefficients": result.to_json()}
    if args.apply is not None:
        payload["applied"] = str(diffop.apply_op(result, diffop.parse_rational(args.apply)))
    art.json("operator.json", payload)
    return EXIT_OK


@handler("wronskian")
def run_wronskian(args, art: Artifacts) -> int:
    basis = [wronskian.catalog(b) for b in args.basis]
    op = wronskian.operator_from_kernel(wronskian.KernelSpec(basis, window(args.window), args.samples))
    m = op.order
    art.csv("coefficients.csv", ["x"] + [f"c{k}" for k in range(m + 1)], ([x, *c] for x, c in zip(op.x, op.coeffs)))
    report = {
        "basis": op.labels,
        "window": list(op.window),
        "order": m,
        "basis_residuals": {b.label: wronskian.membership_test(op, b) for b in basis},
    }
    if sorted(args.basis) == ["sin", "sqrt"]:
        cmp = wronskian.compare_with_reference(op, basis)
        report["reference_equation"] = {
            "agrees": cmp.agrees,
            "max_coefficient_gap": cmp.max_coefficient_gap,
            "constructed_residuals": cmp.constructed_residuals,
            "reference_residuals": cmp.reference_residuals,
        }
    art.json("report.json", report)
    return EXIT_OK


def _load_system(path: Path) -> symmetry.DynamicalSystem:
    data = read_json(path)
    if "order" in data:
        return symmetry.DynamicalSystem.canonical(int(data["order"]), data["rhs"])
    _require(data, ("coords", "components"), str(path))
    return symmetry.DynamicalSystem.from_components(data["coords"], data["components"])


def _require(data: dict, keys: Sequence[str], where: str) -> None:
    missing = [k for k in keys if k not in data]
    if missing:
        raise ConfigurationError(f"{where}: missing keys", missing=missing, required=list(keys))


@handler("symmetry")
def run_symmetry(args, art: Artifacts) -> int:
    if args.action == "check":
        sys_ = _load_system(args.system)
        data = read_json(args.candidate)
        _require(data, ("components",), str(args.candidate))
        cand = symmetry.SymmetryCandidate.from_components(data.get("coords", sys_.coords), data["components"])
        art.json("verdict.json", symmetry.is_symmetry(sys_, cand).to_json())
    elif args.action == "cl":
        sys_ = _load_system(args.system)
        verdict = symmetry.is_conservation_law(sys_, JetPolynomial.parse(args.F))
        art.json("verdict.json", {"conserved": verdict.conserved, "residual": str(verdict.residual)})
    else:
        bracket = symmetry.pde_bracket(args.f, args.g)
        art.json("verdict.json", {"symmetry": bracket.is_zero(), "bracket": str(bracket)})
    return EXIT_OK


@handler("shock")
def run_shock(args, art: Artifacts) -> int:
    profile = transforms.PROFILES[args.profile]()
    xs = floats(args.x)
    results = [transforms.hodograph_solve(profile, x, args.t) for x in xs]
    art.csv("field.csv", ["x", "value"], ((x, r.u) for x, r in zip(xs, results)))
    art.json(
        "report.json",
        {
            "profile": args.profile,
            "t": args.t,
            "t_break": results[0].t_break,
            "post_breaking": results[0].post_breaking,
            "max_residual": max(r.residual for r in results),
        },
    )
    return EXIT_OK


@handler("thomas")
def run_thomas(args, art: Artifacts) -> int:
    params = transforms.ThomasParams(args.alpha, args.beta, args.k1)
    sol = transforms.thomas_general_solution(
        params, lambda y: 2.0 + np.cos(y), lambda x: 1.0 + 0.5 * np.sin(x)
    )
    win = (window(args.xwin), window(args.ywin))
    xs, ys = np.linspace(*win[0], args.grid), np.linspace(*win[1], args.grid)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    psi = sol.psi(X, Y)
    art.csv("field.csv", ["x", "y", "value"], zip(X.ravel(), Y.ravel(), psi.ravel()))
    art.json(
        "report.json",
        {
            "alpha": args.alpha,
            "beta": args.beta,
            "k1": args.k1,
            "k2": params.k2,
            "phi_residual": sol.phi_residual(win, n=min(args.grid, 32)),
            "psi_residual": transforms.thomas_residual(sol.psi, args.alpha, args.beta, win, n=min(args.grid, 32)),
        },
    )
    return EXIT_OK


@handler("colehopf")
def run_colehopf(args, art: Artifacts) -> int:
    field = read_field_csv(args.input)
    if args.direction == "forward":
        out = transforms.cole_hopf(field, args.eps)
        back = transforms.cole_hopf(transforms.inverse_cole_hopf(out, args.eps), args.eps)
        gap = float(np.max(np.abs(back.values - out.values)))
    else:
        out = transforms.inverse_cole_hopf(field, args.eps)
        gap = float(np.max(np.abs(transforms.cole_hopf(out, args.eps).values - field.values)))
    art.csv("field.csv", ["x", "value"], _field_rows(out))
    art.json("report.json", {"direction": args.direction, "eps": args.eps, "round_trip_gap": gap})
    return EXIT_OK


@handler("heat")
def run_heat(args, art: Artifacts) -> int:
    u0 = spectral.initial_field(args.init, args.n)
    u = spectral.heat_solve(u0, args.t, args.diffusivity)
    half = spectral.heat_solve(spectral.heat_solve(u0, args.t / 2, args.diffusivity), args.t / 2, args.diffusivity)
    art.csv("field.csv", ["x", "value"], _field_rows(u))
    art.json(
        "report.json",
        {
            "residual": float(np.max(np.abs(half.values - u.values))),
            "drift": abs(u.integral() - u0.integral()),
            "verdict": "ok",
        },
    )
    return EXIT_OK


@handler("burgers")
def run_burgers(args, art: Artifacts) -> int:
    u0 = spectral.initial_field(args.init, args.n)
    u = spectral.burgers_solve(u0, args.t, args.eps)
    direct = spectral.burgers_direct(u0, args.t, args.eps, dt=args.dt)
    gap = float(np.max(np.abs(u.values - direct.values)))
    art.csv("field.csv", ["x", "value"], _field_rows(u))
    art.json(
        "report.json",
        {
            "residual": spectral.burgers_residual(u0, args.t, args.eps),
            "drift": abs(u.integral() - u0.integral()),
            "direct_integration_gap": gap,
            "verdict": "agree" if gap < 1e-5 else "disagree",
        },
    )
    return EXIT_OK


@handler("dispersion")
def run_dispersion(args, art: Artifacts) -> int:
    spec = spectral.parse_dispersion(args.poly)
    ks = np.linspace(args.kmin, args.kmax, args.nk)
    res = spectral.dispersion_relation(spec, ks)
    nb = res.omega.shape[1]
    header = ["k"] + [f"omega{j}_re" for j in range(nb)] + [f"omega{j}_im" for j in range(nb)]
    header += [f"omega{j}_dd" for j in range(nb)]
    rows = (
        [k, *w.real, *w.imag, *np.real(dd)] for k, w, dd in zip(res.k, res.omega, res.omega_dd)
    )
    art.csv("dispersion.csv", header, rows)
    art.json("report.json", {"equation": args.poly, **res.to_json()})
    return EXIT_OK


@handler("residual")
def run_residual(args, art: Artifacts) -> int:
    if args.pde == "kdv":
        spec, cand = spectral.kdv_spec(), spectral.kdv_soliton(args.param)
    elif args.pde == "nls":
        spec, cand = spectral.nls_spec(args.sign), spectral.nls_soliton(args.param)
    else:
        raise ConfigurationError("residual supports 'kdv' and 'nls'", pde=args.pde)
    report = spectral.pde_residual(spec, cand, h=args.h, accuracy=args.accuracy, levels=args.levels)
    art.csv("residuals.csv", ["h", "residual"], zip(report.steps, report.residuals))
    art.json("report.json", {"pde": args.pde, **report.to_json()})
    return EXIT_OK


@handler("jost")
def run_jost(args, art: Artifacts) -> int:
    lo, hi = window(args.support)
    prob = spectral.JostProblem(spectral.square_well(args.amp, lo, hi), (lo, hi), args.k, convention=args.convention)
    sol = spectral.jost_solve(prob)
    oracle = spectral.jost_ode_oracle(prob, sol.x)
    phi = np.asarray(sol.phi, dtype=complex)
    art.csv("field.csv", ["x", "value", "value_im"], zip(sol.x, phi.real, phi.imag))
    art.json(
        "report.json",
        {**sol.to_json(), "residual": float(np.max(np.abs(sol.phi - oracle))), "verdict": "converged"},
    )
    return EXIT_OK


@handler("triad")
def run_triad(args, art: Artifacts) -> int:
    if (args.n is None) == (args.c is None):
        raise ConfigurationError("give exactly one of --n (planetary) or --c (couplings)")
    system = resonance.TriadSystem.planetary(floats(args.n)) if args.n else resonance.TriadSystem.generic(floats(args.c))
    a0 = floats(args.a0)
    traj = resonance.triad_run(system, a0, args.t, args.dt)
    inv = np.array([resonance.triad_invariants(system, y) for y in traj.y])
    keep = slice(None, None, args.every)
    rows = ([t, *y, *i] for t, y, i in zip(traj.t[keep], traj.y[keep], inv[keep]))
    names = ("energy", "enstrophy") if system.is_planetary else ("invariant1", "invariant2")
    art.csv("timeseries.csv", ["t", "a1", "a2", "a3", *names], rows)
    drift = np.max(np.abs(inv - inv[0]), axis=0)
    report = {
        "couplings": list(system.couplings),
        f"{names[0]}_drift": drift[0],
        f"{names[1]}_drift": drift[1],
        "initial_invariants": list(inv[0]),
    }
    if args.closed_form:
        params = resonance.closed_form(system, a0)
        report["closed_form"] = params.to_json()
        report["closed_form_gap"] = float(np.max(np.abs(params.evaluate(traj.t) - traj.y.T)))
    art.json("report.json", report)
    return EXIT_OK


@handler("quartet")
def run_quartet(args, art: Artifacts) -> int:
    system = resonance.QuartetSystem(floats(args.c))
    traj = resonance.quartet_run(system, floats(args.a0), args.t, args.dt)
    inv = np.array([resonance.quartet_invariants(system, y) for y in traj.y])
    keep = slice(None, None, args.every)
    rows = ([t, *y, *i] for t, y, i in zip(traj.t[keep], traj.y[keep], inv[keep]))
    art.csv("timeseries.csv", ["t", "A1", "A2", "A3", "A4", "I1", "I2", "I3"], rows)
    art.json(
        "report.json",
        {
            "invariant_drift": list(np.max(np.abs(inv - inv[0]), axis=0)),
            "rate_identity_exact": resonance.quartet_rate_identity(system),
        },
    )
    return EXIT_OK


def _law(args) -> threebody.ForceLaw:
    if args.law == "poincare":
        return threebody.poincare_law(args.sigma)
    if args.law == "power":
        return threebody.power_law(args.sigma, args.power)
    return threebody.newton_like()


@handler("threebody")
def run_threebody(args, art: Artifacts) -> int:
    law = _law(args)
    if args.init is not None:
        data = read_json(args.init)
        _require(data, ("z", "v"), str(args.init))
        z = [complex(*p) for p in data["z"]]
        v = [complex(*p) for p in data["v"]]
        if len(z) != 3 or len(v) != 3:
            raise ConfigurationError("initial data needs three positions and three velocities")
        state0 = threebody.make_state(z, v)
        if data.get("zero_energy"):
            state0 = threebody.zero_energy_state(z, v, args.sigma)
    else:
        state0 = threebody.lagrange_orbit(law, args.side).state
    config = IntegratorConfig(dt=1e-2, method="rkf45-adaptive", abs_tol=args.tol, rel_tol=args.tol)
    traj = threebody.simulate(state0, law, args.T, config)
    rows = []
    for t, y in zip(traj.t, traj.y):
        z, _ = threebody.split(y)
        row = [t]
        for c in z:
            row += [c.real, c.imag]
        row += [threebody.energy(y, law), threebody.angular_momentum(y), threebody.inertia(z)]
        rows.append(row)
    art.csv("timeseries.csv", ["t", "x1", "y1", "x2", "y2", "x3", "y3", "energy", "angmom", "Z"], rows)
    report = {"law": law.label, "drift": threebody.drift(traj, law).to_json()}
    if args.monitors:
        report["final"] = threebody.monitors(traj.final, law).to_json()
        if float(law.f(1.0)) > 0:
            report["convexity"] = threebody.convexity_audit(traj, law).to_json()
    art.json("report.json", report)
    return EXIT_OK


@handler("calogero")
def run_calogero(args, art: Artifacts) -> int:
    x0, v0 = floats(args.x0), floats(args.v0)
    run = threebody.calogero_run(x0, v0, args.T)
    n = len(x0)
    rows = ([t, *y[:n], threebody.calogero_energy(y)] for t, y in zip(run.t, run.y))
    art.csv("timeseries.csv", ["t", *(f"x{j + 1}" for j in range(n)), "energy"], rows)
    vin, vout, gap = threebody.calogero_scattering(x0, v0, args.scatter_time)
    art.json(
        "report.json",
        {
            "energy_drift": run.energy_drift,
            "incoming_velocities": list(vin),
            "outgoing_velocities": list(vout),
            "permutation_gap": gap,
        },
    )
    return EXIT_OK


@handler("verify-all")
def run_verify_all(args, art: Artifacts) -> int:
    results = acceptance.verify_all(args.level, args.seed)
    if not args.quiet:
        for r in results:
            print(r.line())
    art.files["summary.csv"] = acceptance.summary_csv(results)
    failures = [r.number for r in results if not r.ok]
    art.json(
        "summary.json",
        {"level": args.level, "seed": args.seed, "criteria": acceptance.summary_rows(results), "failures": failures},
    )
    if failures:
        print(json.dumps({"failures": failures}), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="integrability-lab", description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, help="JSON run config {subcommand, params, out, seed}")
    p.add_argument("--quiet", action="store_true", help="suppress console output")
    sub = p.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("--out", type=Path, default=Path("out") / name, help="artifact directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--quiet", action="store_true")
        return sp

    sp = add("diffop", "Exact algebra of linear differential operators with rational coefficients (Leibniz composition).")
    sp.add_argument("--op", required=True, help="operator text, e.g. '(x^2)*d2 + x*d1 + 1'")
    sp.add_argument("--action", choices=["show", "compose", "commutator", "euler"], default="show")
    sp.add_argument("--with", dest="other", help="second operator for compose/commutator")
    sp.add_argument("--apply", help="rational function to apply the result to")

    sp = add("wronskian", "Monic linear ODE annihilating a given basis, built from Wronskian minors.")
    sp.add_argument("--basis", nargs="+", required=True, help="catalog names: sin cos sqrt exp(c) x^p poly(a0,a1,..)")
    sp.add_argument("--window", default="0.5,1.4")
    sp.add_argument("--samples", type=int, default=64)

    sp = add("symmetry", "Lie-bracket symmetry and conservation-law checks for polynomial vector fields.")
    sp.add_argument("action", choices=["check", "cl", "pde"])
    sp.add_argument("--system", type=Path, help="JSON {coords, components} or {order, rhs}")
    sp.add_argument("--candidate", type=Path, help="JSON {components[, coords]}")
    sp.add_argument("--F", help="candidate conserved quantity (polynomial text)")
    sp.add_argument("--f", default="2*u0*u1", help="evolution right-hand side K_f")
    sp.add_argument("--g", default="u1", help="candidate symmetry K_g")

    sp = add("shock", "Hodograph solution of u_t = 2 u u_x from x = phi(u) data, with breaking-time detection.")
    sp.add_argument("--profile", choices=sorted(transforms.PROFILES), default="linear")
    sp.add_argument("--x", default="0", help="comma-separated positions")
    sp.add_argument("--t", type=float, required=True)

    sp = add("thomas", "Log-linearisation of the Thomas equation and its general solution for beta = 0.")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--beta", type=float, default=0.0)
    sp.add_argument("--k1", type=float, default=0.0)
    sp.add_argument("--grid", type=int, default=32)
    sp.add_argument("--xwin", default="0,1")
    sp.add_argument("--ywin", default="0,1")

    sp = add("colehopf", "Cole-Hopf map w -> eps w_x / w and its inverse on a periodic grid.")
    sp.add_argument("--in", dest="input", type=Path, required=True, help="CSV with header x,value")
    sp.add_argument("--direction", choices=["forward", "inverse"], default="forward")
    sp.add_argument("--eps", type=float, default=1.0)

    sp = add("heat", "Spectral heat-equation propagator on [0, 2pi).")
    sp.add_argument("--n", type=int, default=128)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--init", choices=sorted(spectral.INITIAL_DATA), default="sin")
    sp.add_argument("--diffusivity", type=float, default=1.0)

    sp = add("burgers", "Viscous Burgers u_t = 2 u u_x + eps u_xx via Cole-Hopf and the heat propagator.")
    sp.add_argument("--n", type=int, default=128)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--init", choices=sorted(spectral.INITIAL_DATA), default="half-sin")
    sp.add_argument("--eps", type=float, default=1.0)
    sp.add_argument("--dt", type=float, default=1e-3, help="step of the direct cross-check integrator")

    sp = add("dispersion", "Dispersion relation branches omega(k) and the dispersive verdict.")
    sp.add_argument("--poly", required=True, help="linear constant-coefficient PDE, e.g. 'ut - uxxx'")
    sp.add_argument("--kmin", type=float, default=0.5)
    sp.add_argument("--kmax", type=float, default=2.0)
    sp.add_argument("--nk", type=int, default=16)

    sp = add("residual", "Finite-difference residual of a closed-form soliton with Richardson ratios.")
    sp.add_argument("--pde", choices=["kdv", "nls"], required=True)
    sp.add_argument("--param", type=float, default=1.0, help="soliton parameter (kappa or eta)")
    sp.add_argument("--sign", type=int, choices=[-1, 1], default=1)
    sp.add_argument("--h", type=float, default=0.05)
    sp.add_argument("--accuracy", type=int, default=4)
    sp.add_argument("--levels", type=int, default=3)

    sp = add("jost", "Volterra equation for the Jost solution solved by Neumann sweeps.")
    sp.add_argument("--k", type=float, required=True)
    sp.add_argument("--amp", type=float, required=True, help="square-well amplitude")
    sp.add_argument("--support", default="-1,1")
    sp.add_argument("--convention", choices=["exponential", "oscillatory"], default="exponential")

    sp = add("triad", "Resonant triad dynamics: RK4 run, invariants and the Jacobi elliptic closed form.")
    sp.add_argument("--n", help="planetary wave numbers n1,n2,n3")
    sp.add_argument("--c", help="generic couplings c1,c2,c3")
    sp.add_argument("--a0", required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--every", type=int, default=10, help="CSV row stride")
    sp.add_argument("--closed-form", action="store_true")

    sp = add("quartet", "Resonant quartet dynamics and its three quadratic invariants.")
    sp.add_argument("--c", required=True, help="couplings c1..c4")
    sp.add_argument("--a0", required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--every", type=int, default=10)

    sp = add("threebody", "Planar three-body problem with a pairwise force law and conservation monitors.")
    sp.add_argument("--law", choices=["poincare", "newton", "power"], default="poincare")
    sp.add_argument("--sigma", type=float, default=1.0, help="force strength")
    sp.add_argument("--power", type=float, default=-1.5, help="exponent for --law power")
    sp.add_argument("--init", type=Path, help="JSON {z: [[re,im]x3], v: [[re,im]x3][, zero_energy]}")
    sp.add_argument("--side", type=float, default=1.0, help="Lagrange triangle side when no --init")
    sp.add_argument("--T", type=float, required=True)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--monitors", action="store_true")

    sp = add("calogero", "Three-particle Calogero system on the line and its scattering velocities.")
    sp.add_argument("--x0", required=True)
    sp.add_argument("--v0", required=True)
    sp.add_argument("--T", type=float, default=10.0)
    sp.add_argument("--scatter-time", type=float, default=1000.0)

    sp = add("verify-all", "Run every acceptance check and print one pass/fail line each.")
    sp.add_argument("level", nargs="?", choices=["fast", "full"], default="fast")
    return p


def _subparsers(parser: argparse.ArgumentParser) -> dict[str, argparse.ArgumentParser]:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return dict(action.choices)
    return {}


CONFIG_KEYS = ("subcommand", "params")
OPTIONAL_CONFIG_KEYS = ("out", "seed")


def argv_from_config(parser: argparse.ArgumentParser, path: Path) -> list[str]:
    """Translate a JSON run config into argv, rejecting unknown keys."""
    data = read_json(path)
    if not isinstance(data, dict):
        raise ConfigurationError("run config must be a JSON object")
    _require(data, CONFIG_KEYS, "run config")
    unknown = sorted(set(data) - set(CONFIG_KEYS) - set(OPTIONAL_CONFIG_KEYS))
    if unknown:
        raise ConfigurationError("unknown run-config keys", unknown=unknown)
    subs = _subparsers(parser)
    name = data["subcommand"]
    if name not in subs:
        raise ConfigurationError(f"unknown subcommand {name!r}", known=sorted(subs))
    sp = subs[name]
    options = {}
    positionals = {}
    for act in sp._actions:
        if act.option_strings:
            options[act.dest] = act
        elif act.dest != "help":
            positionals[act.dest] = act
    params = dict(data["params"] or {})
    argv = [name]
    for key, act in positionals.items():
        if key in params:
            argv.append(str(params.pop(key)))
    bad = sorted(k for k in params if k not in options or k in ("out", "seed"))
    if bad:
        raise ConfigurationError("unknown parameters", subcommand=name, unknown=bad, allowed=sorted(options))
    base = path.resolve().parent
    for key, value in params.items():
        act = options[key]
        flag = act.option_strings[-1]
        if isinstance(act, argparse._StoreTrueAction):
            if value:
                argv.append(flag)
            continue
        if act.type is Path:
            value = str((base / str(value)).resolve())
        if isinstance(value, list):
            if act.nargs in ("+", "*"):
                argv += [flag, *map(str, value)]
                continue
            value = ",".join(map(str, value))
        argv += [flag, str(value)]
    if "out" in data:
        argv += ["--out", str((base / str(data["out"])).resolve())]
    if "seed" in data:
        argv += ["--seed", str(int(data["seed"]))]
    return argv


def _origin(exc: BaseException) -> dict:
    """Module and function of the innermost package frame that raised."""
    frames = [f for f in traceback.extract_tb(exc.__traceback__) if f"{os.sep}integrability_lab{os.sep}" in f.filename]
    if not frames:
        return {}
    f = frames[-1]
    return {"module": Path(f.filename).stem, "operation": f.name}


def _fail(exc: Exception, code: int, out: Path | None, quiet: bool) -> int:
    if isinstance(exc, IntegrabilityError):
        report = exc.report()
    else:
        report = {"error": type(exc).__name__, "message": str(exc)}
    report.update(_origin(exc))
    report["exit_code"] = code
    text = dump_json(report)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(text, encoding="utf-8")
        except OSError:
            pass
    if not quiet:
        sys.stderr.write(text)
    return code


def _check_threads() -> None:
    raw = os.environ.get(_THREADS_VAR)
    if raw is not None and not (raw.isdigit() and int(raw) > 0):
        raise ConfigurationError(f"{_THREADS_VAR} must be a positive integer", value=raw)


_NEGATIVE = re.compile(r"^-[0-9.]")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--x0 -1,0,1`` into ``--x0=-1,0,1`` so argparse keeps it as a value."""
    out: list[str] = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEGATIVE.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def _parse(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    # argparse prints its own usage message; turn its exit into a config error
    try:
        return parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:
            raise
        raise ConfigurationError("invalid command line", argv=argv) from None


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    out, quiet = None, "--quiet" in argv
    try:
        _check_threads()
        args = _parse(parser, argv)
        if args.config is not None:
            if args.subcommand is not None:
                raise ConfigurationError("--config cannot be combined with a subcommand")
            args = _parse(parser, argv_from_config(parser, args.config) + (["--quiet"] if quiet else []))
        if args.subcommand is None:
            parser.print_help(sys.stderr)
            return EXIT_CONFIG
        out = args.out.resolve()
        np.random.seed(args.seed)
        art = Artifacts(out)
        code = HANDLERS[args.subcommand](args, art)
        art.write()
        if not args.quiet and args.subcommand != "verify-all":
            print(f"wrote {', '.join(sorted(art.files))} to {out}")
        return code
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG, out, quiet)
    except NumericalError as exc:
        return _fail(exc, EXIT_NUMERICAL, out, quiet)
    except (ValueError, KeyError, TypeError) as exc:
        # malformed input that slipped past a schema check
        return _fail(exc, EXIT_CONFIG, out, quiet)


if __name__ == "__main__":
    sys.exit(main())
