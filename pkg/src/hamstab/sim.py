"""Explicit integrators, trajectory recording and Monte-Carlo stability checks."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .control import closed_loop_jacobian
from .errors import DomainError, PreconditionError, StiffnessError
from .hamsys import as_state
from .reaction import linear_invariants

MIN_STEP = 1e-14

# Fehlberg 4(5) tableau
_C = np.array([0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2])
_A = [
    [],
    [1 / 4],
    [3 / 32, 9 / 32],
    [1932 / 2197, -7200 / 2197, 7296 / 2197],
    [439 / 216, -8.0, 3680 / 513, -845 / 4104],
    [-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40],
]
_B4 = np.array([25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0])
_B5 = np.array([16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])
_E = _B5 - _B4


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    dt: float = 1e-2
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    t_final: float = 10.0
    record_stride: int = 1

    def __post_init__(self):
        if self.method not in ("rk4", "rkf45"):
            raise PreconditionError(f"unknown integration method {self.method!r}")
        if not self.t_final > 0:
            raise PreconditionError("t_final must be positive")
        if not 0 < self.dt <= self.t_final:
            raise PreconditionError("dt must satisfy 0 < dt <= t_final")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise PreconditionError("tolerances must be positive")
        if int(self.record_stride) < 1:
            raise PreconditionError("record_stride must be a positive integer")

    def fixed_steps(self):
        """Number of equal RK4 steps covering ``t_final`` with step <= dt."""
        nsteps = max(1, math.ceil(self.t_final / self.dt - 1e-9))
        return nsteps, self.t_final / nsteps


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    energies: np.ndarray | None = None
    h_mod: np.ndarray | None = None
    feedback_values: np.ndarray | None = None
    invariants: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def final(self):
        return self.states[-1]


def _rk4_step(f, t, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rkf45_step(f, y, h):
    k = np.empty((6, y.size))
    k[0] = f(y)
    for s in range(1, 6):
        k[s] = f(y + h * (np.asarray(_A[s]) @ k[:s]))
    return y + h * (_B4 @ k), h * (_E @ k)


def integrate(field, z_init, cfg=IntegratorConfig(), on_error="raise"):
    """Integrate ``z' = field(z)`` from t = 0 to ``cfg.t_final``.

    RK4 uses equal steps no larger than ``cfg.dt``; RKF45 adapts its step
    (Fehlberg pair, 4th-order solution propagated). Every ``record_stride``-th
    step is recorded, plus the final state. Raises DomainError (with the last
    good state) when the field leaves its domain or a state becomes
    non-finite, and StiffnessError when the adaptive step underflows. With
    ``on_error="truncate"`` those errors end the run instead and the partial
    trajectory is returned with the reason in ``meta["terminated"]``.
    """
    if on_error not in ("raise", "truncate"):
        raise PreconditionError("on_error must be 'raise' or 'truncate'")
    rec = {"times": [0.0], "states": [as_state(z_init)]}
    try:
        _integrate_into(rec, field, cfg)
    except (DomainError, StiffnessError) as exc:
        if on_error == "raise":
            raise
        return Trajectory(np.array(rec["times"]), np.array(rec["states"]), meta={"terminated": str(exc)})
    return Trajectory(np.array(rec["times"]), np.array(rec["states"]))


def _integrate_into(rec, field, cfg):
    times, states = rec["times"], rec["states"]
    y = states[0].copy()
    stride = int(cfg.record_stride)
    t = 0.0
    step = 0

    def guarded(fun, *args):
        try:
            out = fun(*args)
        except DomainError as exc:
            keep()
            raise DomainError(str(exc), last_state=y.copy(), last_time=t) from exc
        return out

    def keep():
        if times[-1] != t:
            times.append(t)
            states.append(y.copy())

    if cfg.method == "rk4":
        nsteps, h = cfg.fixed_steps()
        for step in range(1, nsteps + 1):
            ynew = guarded(_rk4_step, field, t, y, h)
            if not np.all(np.isfinite(ynew)):
                keep()
                raise DomainError("state became non-finite", last_state=y.copy(), last_time=t)
            y = ynew
            t = step * h if step < nsteps else cfg.t_final
            if step % stride == 0 or step == nsteps:
                times.append(t)
                states.append(y.copy())
    else:
        h = cfg.dt
        T = cfg.t_final
        while t < T:
            h = min(h, T - t)
            if h < MIN_STEP:
                if T - t < MIN_STEP:
                    break
                keep()
                raise StiffnessError(f"step size underflow at t = {t:.6g}")
            ynew, err = guarded(_rkf45_step, field, y, h)
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(ynew))
            enorm = float(np.max(np.abs(err) / scale)) if np.all(np.isfinite(ynew)) else np.inf
            if enorm <= 1.0:
                t = T if T - (t + h) < MIN_STEP else t + h
                y = ynew
                step += 1
                if step % stride == 0 or t >= T:
                    times.append(t)
                    states.append(y.copy())
                fac = 5.0 if enorm == 0 else min(5.0, max(0.2, 0.9 * enorm ** -0.2))
            else:
                fac = 0.2 if not np.isfinite(enorm) else max(0.2, 0.9 * enorm ** -0.25)
            h *= fac
        keep()


def annotate(traj, CL, transform=None):
    """Fill H, H_mod, F_i (and I_k when a transform is given) along a trajectory."""
    Z = traj.states
    traj.energies = np.array([CL.base.energy(z) for z in Z])
    traj.h_mod = np.array([CL.h_mod.energy(z) for z in Z])
    traj.feedback_values = CL.law.values(Z)
    if transform is not None:
        traj.invariants = linear_invariants(transform.to_normal_form(Z))
    return traj


def simulate(CL, z_init, cfg=IntegratorConfig(), transform=None):
    """Integrate the closed loop and annotate the trajectory."""
    return annotate(integrate(CL.field, z_init, cfg), CL, transform)


def monotone_violations(values, slack=1e-10):
    """Indices k where ``values[k+1] > values[k] + slack``."""
    values = np.asarray(values)
    return np.flatnonzero(np.diff(values) > slack)


def sample_ball(center, radius, n_samples, rng):
    """Uniform samples from the Euclidean ball around ``center``."""
    dim = len(center)
    g = rng.standard_normal((n_samples, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(n_samples) ** (1.0 / dim)
    return center + g * r[:, None]


@dataclass
class StabilityReport:
    converged_fraction: float
    max_final_distance: float
    jacobian_spectrum: np.ndarray
    n_samples: int
    n_failed: int
    failures: list
    seed: int
    radius: float
    t_final: float
    conv_tol: float
    backend: str

    @property
    def max_jacobian_real_part(self):
        return float(np.max(self.jacobian_spectrum.real))

    def as_dict(self):
        spec = sorted(self.jacobian_spectrum, key=lambda w: (w.real, w.imag))
        return {
            "converged_fraction": self.converged_fraction,
            "max_final_distance": self.max_final_distance,
            "jacobian_spectrum": [[float(w.real), float(w.imag)] for w in spec],
            "max_jacobian_real_part": self.max_jacobian_real_part,
            "n_samples": self.n_samples,
            "n_failed": self.n_failed,
            "failures": self.failures,
            "seed": self.seed,
            "radius": self.radius,
            "t_final": self.t_final,
            "conv_tol": self.conv_tol,
            "backend": self.backend,
        }


def integrate_batch(CL, Z, cfg, backend=None):
    """Final states of many closed-loop trajectories plus per-sample failure reasons.

    Uses the batch RK4 kernels when the method is RK4 and the system has a
    kernel description; otherwise integrates sample by sample.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    args = CL.kernel_args()
    if cfg.method == "rk4" and args is not None:
        nsteps, h = cfg.fixed_steps()
        name = backend or _kernels.BACKEND
        final, status = _kernels.rk4_batch(*args, Z, h, nsteps, backend=name)
        reasons = {_kernels.NONFINITE: "non-finite state", _kernels.SINGULAR: "singularity"}
        failures = [(int(i), reasons[int(s)]) for i, s in enumerate(status) if s]
        return final, failures, name
    final = np.empty_like(Z)
    failures = []
    for i, z in enumerate(Z):
        try:
            final[i] = integrate(CL.field, z, cfg).final
        except (DomainError, StiffnessError) as exc:
            final[i] = getattr(exc, "last_state", None) if getattr(exc, "last_state", None) is not None else z
            failures.append((i, str(exc)))
    return final, failures, "python-loop"


def verify_stability(CL, radius, n_samples, cfg, conv_tol=1e-6, seed=0, backend=None):
    """Integrate seeded random initial conditions and report how many converge.

    A sample converges when ``|z(t_final) - z0|_inf <= conv_tol``. Failed
    integrations count as not converged and are listed in the report.
    """
    rng = np.random.default_rng(seed)
    Z = sample_ball(CL.z0, radius, int(n_samples), rng)
    final, failures, used = integrate_batch(CL, Z, cfg, backend)
    dist = np.max(np.abs(final - CL.z0), axis=1)
    failed = np.zeros(len(Z), dtype=bool)
    failed[[i for i, _ in failures]] = True
    ok = (dist <= conv_tol) & ~failed
    finite = dist[np.isfinite(dist)]
    return StabilityReport(
        converged_fraction=float(np.mean(ok)) if len(Z) else 0.0,
        max_final_distance=float(np.max(finite)) if len(finite) and not failed.any() else float("inf"),
        jacobian_spectrum=np.linalg.eigvals(closed_loop_jacobian(CL)),
        n_samples=len(Z),
        n_failed=int(failed.sum()),
        failures=[{"sample": i, "reason": r} for i, r in failures],
        seed=int(seed),
        radius=float(radius),
        t_final=float(cfg.t_final),
        conv_tol=float(conv_tol),
        backend=used,
    )
