"""Linear-order transition-state diagnostics in normal-form coordinates.

Reactants have ``q1 < 0`` and products ``q1 > 0``. The dividing surface is
``q1 = 0`` and its equator ``q1 = p1 = 0`` is the NHIM. At linear order a
trajectory is reactive iff ``I1 = p1^2 - q1^2 > 0``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError

FORWARD, BACKWARD = "forward", "backward"


@dataclass(frozen=True)
class Crossing:
    time: float
    direction: str
    p1: float


@dataclass(frozen=True)
class ReactionDiagnostics:
    """Diagnostics of one trajectory.

    ``invariants`` and ``nhim_distance`` refer to the first sample;
    ``reactive`` is relative to the sampled time window.
    """

    invariants: np.ndarray
    ds_crossings: tuple
    reactive: bool
    nhim_distance: float

    def as_dict(self):
        return {
            "invariants": [float(v) for v in self.invariants],
            "reactive": self.reactive,
            "nhim_distance": self.nhim_distance,
            "ds_crossings": [
                {"time": c.time, "direction": c.direction, "p1": c.p1} for c in self.ds_crossings
            ],
        }


def linear_invariants(qp):
    """``I1 = p1^2 - q1^2`` and ``Ik = pk^2 + qk^2``; works row-wise on batches."""
    qp = np.asarray(qp, dtype=float)
    n = qp.shape[-1] // 2
    q, p = qp[..., :n], qp[..., n:]
    out = p * p + q * q
    out[..., 0] = p[..., 0] ** 2 - q[..., 0] ** 2
    return out


def nhim_distance(qp):
    qp = np.asarray(qp, dtype=float)
    n = qp.shape[-1] // 2
    return np.hypot(qp[..., 0], qp[..., n])


def ds_crossings(times, qp):
    """Sign changes of q1, with time and p1 linearly interpolated.

    Samples with q1 exactly zero are skipped; a sign change across them is a
    crossing located at the first zero sample.
    """
    times = np.asarray(times, dtype=float)
    qp = np.asarray(qp, dtype=float)
    n = qp.shape[1] // 2
    q1, p1 = qp[:, 0], qp[:, n]
    nz = np.flatnonzero(q1 != 0)
    out = []
    for i, j in zip(nz[:-1], nz[1:]):
        if q1[i] * q1[j] > 0:
            continue
        if j == i + 1:
            s = q1[i] / (q1[i] - q1[j])
            t = times[i] + s * (times[j] - times[i])
            pc = p1[i] + s * (p1[j] - p1[i])
        else:
            t, pc = times[i + 1], p1[i + 1]
        out.append(Crossing(float(t), FORWARD if pc > 0 else BACKWARD, float(pc)))
    return tuple(out)


def classify_reactive(traj, transform=None):
    """Reactivity diagnostics for a trajectory.

    ``traj`` is a Trajectory (or anything with ``times`` and ``states``) or a
    ``(times, states)`` tuple. States must be in normal-form coordinates
    unless ``transform`` is given, in which case they are mapped through it.
    """
    if isinstance(traj, tuple):
        times, states = traj
    else:
        times, states = traj.times, traj.states
    times = np.asarray(times, dtype=float)
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if len(times) < 2 or len(states) != len(times):
        raise PreconditionError("trajectory needs at least two samples with matching times")
    qp = states if transform is None else transform.to_normal_form(states)
    crossings = ds_crossings(times, qp)
    return ReactionDiagnostics(
        invariants=linear_invariants(qp[0]),
        ds_crossings=crossings,
        reactive=bool(crossings),
        nhim_distance=float(nhim_distance(qp[0])),
    )


def linear_saddle_flow(q1, p1, lam, t):
    """Exact flow of ``lam/2 (p1^2 - q1^2)`` at times t."""
    t = np.asarray(t, dtype=float)
    ch, sh = np.cosh(lam * t), np.sinh(lam * t)
    return q1 * ch + p1 * sh, q1 * sh + p1 * ch
