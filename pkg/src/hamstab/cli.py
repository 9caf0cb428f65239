"""Command-line front end.

Subcommands: ``analyze``, ``stabilize`` (simulate + verify), ``simulate``,
``destabilize`` and ``list-systems``. Reports are JSON with sorted keys and
go to stdout and, with ``--out DIR``, to files alongside the CSV data.

Exit codes: 0 success, 2 classification or configuration error, 3 gain or
precondition error, 4 verification failure.
"""

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .control import ClosedLoopSystem, FeedbackLaw, destabilize, theorem1_checks
from .errors import (
    ClassificationError,
    ConstructionError,
    ConvergenceError,
    GainError,
    HamstabError,
    PreconditionError,
    RankError,
)
from .hamsys import PolynomialHamiltonian, find_equilibrium
from .normal_form import build_transform, expected_normal_hessian, symplectic_defect
from .reaction import classify_reactive
from .sim import IntegratorConfig, annotate, integrate, verify_stability
from .spectral import Kind, classify, linearize
from .systems import SYSTEMS, load_polynomial, make_system

EXIT_OK, EXIT_CONFIG, EXIT_GAIN, EXIT_VERIFY = 0, 2, 3, 4

DEFAULTS = {
    "system": "model",
    "params": {},
    "poly_file": None,
    "gain_c": None,
    "gain_d": None,
    "method": "rk4",
    "dt": 0.01,
    "t_final": None,
    "rel_tol": 1e-9,
    "abs_tol": 1e-12,
    "samples": 100,
    "radius": 0.05,
    "seed": 0,
    "conv_tol": 1e-6,
    "threshold": 0.99,
    "out": None,
    "no_control": False,
    "record_stride": 1,
    "grid": 41,
}

CONJUGATION_RTOL = 1e-6

# default horizons per command
T_FINAL = {"stabilize": 300.0, "simulate": 10.0}


class ConfigError(HamstabError):
    pass


class VerificationError(HamstabError):
    pass


@dataclass
class RunConfig:
    command: str
    system: str = "model"
    params: dict = field(default_factory=dict)
    poly_file: str | None = None
    gain_c: float | None = None
    gain_d: list | None = None
    method: str = "rk4"
    dt: float = 0.01
    t_final: float | None = None
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    samples: int = 100
    radius: float = 0.05
    seed: int = 0
    conv_tol: float = 1e-6
    threshold: float = 0.99
    out: str | None = None
    no_control: bool = False
    record_stride: int = 1
    grid: int = 41

    def integrator(self):
        t_final = self.t_final if self.t_final is not None else T_FINAL.get(self.command, 10.0)
        return IntegratorConfig(
            method=self.method,
            dt=self.dt,
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
            t_final=t_final,
            record_stride=self.record_stride,
        )


def _number(text):
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def parse_param(item):
    """``k=v`` with v a number or a comma-separated list of numbers."""
    if "=" not in item:
        raise ConfigError(f"--param expects k=v, got {item!r}")
    key, val = item.split("=", 1)
    vals = [_number(v) for v in val.split(",") if v.strip()]
    if not vals:
        raise ConfigError(f"--param {key} has no value")
    return key.strip(), vals[0] if len(vals) == 1 and "," not in val else vals


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("system")
    g.add_argument("--system", choices=sorted(SYSTEMS), default=None)
    g.add_argument("--param", action="append", default=None, metavar="K=V",
                   help="system parameter; comma-separated values give a list")
    g.add_argument("--poly-file", default=None, help="polynomial system in JSON")
    g.add_argument("--config", default=None, help="JSON config file; flags override it")
    g.add_argument("--out", default=None, metavar="DIR")

    run = argparse.ArgumentParser(add_help=False)
    r = run.add_argument_group("control and integration")
    r.add_argument("--gain-c", type=float, default=None)
    r.add_argument("--gain-d", type=float, action="append", default=None,
                   help="damping gain; repeat once per degree of freedom or give one for all")
    r.add_argument("--method", choices=["rk4", "rkf45"], default=None)
    r.add_argument("--dt", type=float, default=None)
    r.add_argument("--t-final", type=float, default=None)
    r.add_argument("--rel-tol", type=float, default=None)
    r.add_argument("--abs-tol", type=float, default=None)
    r.add_argument("--record-stride", type=int, default=None)
    r.add_argument("--samples", type=int, default=None)
    r.add_argument("--radius", type=float, default=None)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--conv-tol", type=float, default=None)
    r.add_argument("--threshold", type=float, default=None,
                   help="minimum converged fraction (default 0.99)")
    r.add_argument("--grid", type=int, default=None, help="points per axis of the energy grid")
    r.add_argument("--no-control", action="store_true", default=None)

    ap = argparse.ArgumentParser(prog="hamstab", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="equilibrium, spectrum and normal form")
    sub.add_parser("stabilize", parents=[common, run], help="feedback, simulation and verification")
    sub.add_parser("simulate", parents=[common, run], help="one trajectory, open or closed loop")
    sub.add_parser("destabilize", parents=[common, run], help="make a center a saddle")
    sub.add_parser("list-systems", help="built-in systems and their parameters")
    return ap


def resolve_config(args):
    """Merge built-in defaults, the JSON config file and explicit flags (in that order)."""
    merged = dict(DEFAULTS, params={})
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged.update(data)
        merged["params"] = dict(data.get("params", {}))
    for key in DEFAULTS:
        if key == "params":
            continue
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    for item in getattr(args, "param", None) or []:
        k, v = parse_param(item)
        merged["params"][k] = v
    cfg = RunConfig(command=args.command, **merged)
    if cfg.poly_file and not os.path.isfile(cfg.poly_file):
        raise ConfigError(f"polynomial file not found: {cfg.poly_file}")
    return cfg


def load_system(cfg):
    try:
        if cfg.poly_file:
            return load_polynomial(cfg.poly_file)
        return make_system(cfg.system, cfg.params)
    except PreconditionError as exc:
        raise ConfigError(str(exc)) from exc
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"cannot build system: {exc}") from exc


def system_label(cfg):
    return os.path.basename(cfg.poly_file) if cfg.poly_file else cfg.system


def _mat(A):
    return [[float(x) for x in row] for row in np.atleast_2d(A)]


def _cvec(w):
    w = sorted(np.asarray(w, dtype=complex), key=lambda v: (round(v.real, 12), round(v.imag, 12)))
    return [[float(v.real), float(v.imag)] for v in w]


def coordinate_names(n):
    return [f"x{i + 1}" for i in range(n)] + [f"P{i + 1}" for i in range(n)]


def feedback_table(rows, tol=1e-12):
    names = coordinate_names(rows.shape[1] // 2)
    return {
        f"F{i + 1}": {nm: float(a) for nm, a in zip(names, s) if abs(a) > tol}
        for i, s in enumerate(rows)
    }


def run_analysis(cfg):
    """Equilibrium, classification and transform; raises on classification failure."""
    H, guess = load_system(cfg)
    z0 = find_equilibrium(H, guess)
    L = linearize(H, z0)
    cls = classify(L)
    if cls.kind == Kind.OTHER:
        raise ClassificationError(f"spectrum is neither saddle-center nor all-center: {cls.detail}")
    if cls.resonant:
        raise ClassificationError(f"resonant frequencies: {cls.detail}")
    T = build_transform(cls, H, z0)
    return H, z0, L, cls, T


def analysis_report(cfg, H, z0, L, cls, T):
    target = expected_normal_hessian(T)
    conj_err = float(np.max(np.abs(T.conjugated_hessian - target)))
    conj_tol = CONJUGATION_RTOL * max(1.0, float(np.max(np.abs(target))))
    rep = {
        "system": system_label(cfg),
        "params": H.params,
        "n": H.n,
        "equilibrium": [float(x) for x in z0],
        "linearization": _mat(L.A),
        "eigenvalues": _cvec(cls.eigenvalues),
        "kind": cls.kind.value,
        "lambda": cls.lam,
        "omega": [float(w) for w in cls.omegas],
        "resonant": cls.resonant,
        "eigvec_cond": cls.eigvec_cond,
        "c": [float(x) for x in T.c],
        "M": _mat(T.M),
        "N": _mat(T.N),
        "S": _mat(T.S),
        "checks": {
            "conjugation_error": conj_err,
            "conjugation_passed": conj_err <= conj_tol,
            "symplectic_defect": {k: symplectic_defect(getattr(T, k)) for k in ("M", "N", "S")},
        },
    }
    if cls.kind == Kind.SADDLE_CENTER:
        rep["feedback"] = feedback_table(T.feedback_rows)
    return rep


def make_law(cfg, T):
    d = cfg.gain_d
    if d is not None and len(d) not in (1, T.n):
        raise ConfigError(f"--gain-d needs 1 or {T.n} values, got {len(d)}")
    return FeedbackLaw.from_transform(T, cfg.gain_c, d)


def open_loop(H, T):
    n = H.n
    law = FeedbackLaw(rows=T.feedback_rows.copy(), c=0.0, d=np.zeros(n), z0=T.z0.copy(), lam=0.0)
    return ClosedLoopSystem(H, law)


def trajectory_header(n):
    return (
        ["t"] + [f"z{i + 1}" for i in range(2 * n)] + ["H", "H_mod"]
        + [f"F{i + 1}" for i in range(n)] + [f"I{i + 1}" for i in range(n)]
    )


def _fmt(x):
    return repr(float(x))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def trajectory_rows(traj):
    return np.column_stack(
        [traj.times, traj.states, traj.energies, traj.h_mod, traj.feedback_values, traj.invariants]
    )


def energy_grid(CL, T, npts, half_width):
    """``H`` and ``H_mod`` on a (q1, p1) normal-form grid, other coordinates zero."""
    n = CL.n
    ax = np.linspace(-half_width, half_width, npts)
    rows = []
    for q in ax:
        for p in ax:
            qp = np.zeros(2 * n)
            qp[0], qp[n] = q, p
            z = T.from_normal_form(qp)
            try:
                rows.append([q, p, CL.base.energy(z), CL.h_mod.energy(z)])
            except HamstabError:
                continue
    return ["q1", "p1", "H", "H_mod"], rows


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _outdir(cfg):
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


def reference_initial_condition(cfg, T):
    """Normal-form start point ``q1 = -r, p1 = 2r, q_k = r/2``; reactive at linear order."""
    n = T.n
    r = cfg.radius
    qp = np.full(2 * n, 0.0)
    qp[1:n] = 0.5 * r
    qp[0], qp[n] = -r, 2.0 * r
    return T.from_normal_form(qp)


def cmd_analyze(cfg):
    H, z0, L, cls, T = run_analysis(cfg)
    rep = analysis_report(cfg, H, z0, L, cls, T)
    out = _outdir(cfg)
    if out:
        write_json(os.path.join(out, "analysis.json"), rep)
    return rep, EXIT_OK


def cmd_stabilize(cfg):
    H, z0, L, cls, T = run_analysis(cfg)
    if cls.kind != Kind.SADDLE_CENTER:
        raise ClassificationError("stabilization needs a saddle-center equilibrium")
    law = make_law(cfg, T)
    CL = ClosedLoopSystem(H, law)
    checks = theorem1_checks(CL)
    rep = {
        "system": system_label(cfg),
        "params": H.params,
        "lambda": cls.lam,
        "omega": [float(w) for w in cls.omegas],
        "gains": {"c": law.c, "d": [float(x) for x in law.d]},
        "theorem1": checks.as_dict(),
        "feedback": feedback_table(law.rows),
    }
    if not checks.passed:
        rep["error"] = "closed loop fails the stabilization hypotheses"
        return rep, EXIT_GAIN

    icfg = cfg.integrator()
    traj = integrate(CL.field, reference_initial_condition(cfg, T), icfg, on_error="truncate")
    annotate(traj, CL, T)
    report = verify_stability(CL, cfg.radius, cfg.samples, icfg, cfg.conv_tol, cfg.seed)
    ver = report.as_dict()
    ver.pop("backend")
    ver["threshold"] = cfg.threshold
    ver["method"] = icfg.method
    ver["dt"] = icfg.dt
    rep["verification"] = ver
    rep["trajectory"] = {
        "initial_state": [float(x) for x in traj.states[0]],
        "final_distance": float(np.max(np.abs(traj.final - z0))),
        "samples": len(traj),
        "terminated": traj.meta.get("terminated"),
    }
    out = _outdir(cfg)
    if out:
        write_csv(os.path.join(out, "trajectory.csv"), trajectory_header(H.n), trajectory_rows(traj))
        hdr, rows = energy_grid(CL, T, cfg.grid, 2.0 * cfg.radius)
        write_csv(os.path.join(out, "energy_grid.csv"), hdr, rows)
        write_json(os.path.join(out, "verification.json"), rep)
    code = EXIT_OK if report.converged_fraction >= cfg.threshold else EXIT_VERIFY
    return rep, code


def cmd_simulate(cfg):
    H, z0, L, cls, T = run_analysis(cfg)
    if cls.kind != Kind.SADDLE_CENTER:
        raise ClassificationError("simulation needs a saddle-center equilibrium")
    CL = open_loop(H, T) if cfg.no_control else ClosedLoopSystem(H, make_law(cfg, T))
    traj = integrate(CL.field, reference_initial_condition(cfg, T), cfg.integrator(), on_error="truncate")
    annotate(traj, CL, T)
    diag = classify_reactive(traj, T)
    rep = {
        "system": system_label(cfg),
        "controlled": not cfg.no_control,
        "gains": {"c": CL.law.c, "d": [float(x) for x in CL.law.d]},
        "samples": len(traj),
        "t_final": float(traj.times[-1]),
        "terminated": traj.meta.get("terminated"),
        "reaction": diag.as_dict(),
        "final_distance": float(np.max(np.abs(traj.final - z0))),
    }
    out = _outdir(cfg)
    if out:
        write_csv(os.path.join(out, "trajectory.csv"), trajectory_header(H.n), trajectory_rows(traj))
        hdr, rows = energy_grid(CL, T, cfg.grid, 2.0 * cfg.radius)
        write_csv(os.path.join(out, "energy_grid.csv"), hdr, rows)
        write_json(os.path.join(out, "simulation.json"), rep)
    return rep, EXIT_OK


def cmd_destabilize(cfg):
    H, guess = load_system(cfg)
    z0 = find_equilibrium(H, guess)
    cls0 = classify(linearize(H, z0))
    if cls0.kind != Kind.ALL_CENTER:
        raise ClassificationError(f"destabilization needs an all-center equilibrium, got {cls0.kind.value}")
    w1 = float(cls0.omegas[0])
    c = cfg.gain_c if cfg.gain_c is not None else 2.0 * w1
    CL = destabilize(H, z0, c)
    cls = classify(linearize(CL.h_mod, z0))
    rep = {
        "system": system_label(cfg),
        "c": float(c),
        "omega_before": [float(w) for w in cls0.omegas],
        "expected_lambda": float(np.sqrt(w1 * (c - w1))),
        "kind": cls.kind.value,
        "lambda": cls.lam,
        "omega": [float(w) for w in cls.omegas],
        "eigenvalues": _cvec(cls.eigenvalues),
        "feedback": feedback_table(CL.law.rows[:1]),
    }
    out = _outdir(cfg)
    if out:
        write_json(os.path.join(out, "destabilization.json"), rep)
        if isinstance(H, PolynomialHamiltonian):
            data = CL.h_mod.as_polynomial().to_dict()
            data["guess"] = [float(x) for x in z0]
            write_json(os.path.join(out, "destabilized_system.json"), data)
    if cls.kind != Kind.SADDLE_CENTER:
        rep["error"] = "destabilized system is not saddle-center"
        return rep, EXIT_VERIFY
    return rep, EXIT_OK


def cmd_list_systems(cfg=None):
    return {
        name: {"defaults": e.defaults, "description": e.description} for name, e in sorted(SYSTEMS.items())
    }, EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "stabilize": cmd_stabilize,
    "simulate": cmd_simulate,
    "destabilize": cmd_destabilize,
}


def exit_code_for(exc):
    if isinstance(exc, GainError):
        return EXIT_GAIN
    if isinstance(exc, (ConfigError, ClassificationError, ConstructionError, ConvergenceError, RankError)):
        return EXIT_CONFIG
    if isinstance(exc, PreconditionError):
        return EXIT_GAIN
    if isinstance(exc, VerificationError):
        return EXIT_VERIFY
    return EXIT_CONFIG


def run(argv=None):
    """Parse ``argv`` and run one command; returns ``(report, exit_code)``."""
    args = build_parser().parse_args(argv)
    if args.command == "list-systems":
        return cmd_list_systems()
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except HamstabError as exc:
        code = exit_code_for(exc)
        return {"error": str(exc), "error_type": type(exc).__name__, "exit_code": code}, code
    except np.linalg.LinAlgError as exc:
        return {"error": str(exc), "error_type": "LinAlgError", "exit_code": EXIT_CONFIG}, EXIT_CONFIG


def main(argv=None):
    rep, code = run(argv)
    sys.stdout.write(dumps(rep))
    if code != EXIT_OK:
        msg = rep.get("error", "verification failed")
        sys.stderr.write(f"hamstab: error (exit {code}): {msg}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
