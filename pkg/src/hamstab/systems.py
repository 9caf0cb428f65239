"""Built-in Hamiltonians and the name -> system registry used by the CLI."""

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._kernels import R_MIN, KernelSpec
from .errors import PreconditionError, SingularityError
from .hamsys import HamiltonianSystem, PolynomialHamiltonian, as_state


def quadratic(lam=1.0, omegas=(1.0,)):
    """Quadratic saddle-center normal form.

    ``H = lam/2 (p1^2 - q1^2) + sum_k omega_k/2 (p_k^2 + q_k^2)``. With
    ``lam`` 0 or None the saddle degree of freedom is dropped and the result
    is the all-center form ``sum_k omega_k/2 (p_k^2 + q_k^2)``.
    """
    omegas = [float(w) for w in np.atleast_1d(omegas)]
    saddle = bool(lam)
    n = len(omegas) + int(saddle)
    if n < 1:
        raise PreconditionError("quadratic system needs at least one degree of freedom")
    if any(w <= 0 for w in omegas) or (saddle and lam < 0):
        raise PreconditionError("lambda and omegas must be positive")

    def mono(i):
        e = [0] * (2 * n)
        e[i] += 2
        return e

    terms = []
    k0 = 0
    if saddle:
        terms += [(-lam / 2, mono(0)), (lam / 2, mono(n))]
        k0 = 1
    for k, w in enumerate(omegas, start=k0):
        terms += [(w / 2, mono(k)), (w / 2, mono(n + k))]
    H = PolynomialHamiltonian(n, terms, params={"lambda": float(lam or 0.0), "omega": omegas})
    H.name = "quadratic"
    return H


def model(a=2.0, b=1.0):
    """Isomerization model ``P^2/2 + x1^2 (x1 - 1)^2 / a^2 + x2^2 / b^2``, a > b > 0.

    Kept in its original coordinates: centers at x1 = 0 and x1 = 1, saddle at
    x1 = 1/2.
    """
    a, b = float(a), float(b)
    if not a > b > 0:
        raise PreconditionError("model potential requires a > b > 0")
    ia2 = 1.0 / a**2
    terms = [
        (ia2, (4, 0, 0, 0)),
        (-2 * ia2, (3, 0, 0, 0)),
        (ia2, (2, 0, 0, 0)),
        (1.0 / b**2, (0, 2, 0, 0)),
        (0.5, (0, 0, 2, 0)),
        (0.5, (0, 0, 0, 2)),
    ]
    H = PolynomialHamiltonian(2, terms, params={"a": a, "b": b})
    H.name = "model"
    return H


def model_potential(x1, x2, a=2.0, b=1.0):
    return x1**2 * (x1 - 1) ** 2 / a**2 + x2**2 / b**2


class HydrogenCrossedFields(HamiltonianSystem):
    """Hydrogen atom in crossed electric and magnetic fields (scaled, rotating frame).

    ``H = |P|^2/2 - 1/R + (x1 P2 - x2 P1)/2 + (x1^2 + x2^2)/8 - eps x1``.
    Evaluations with ``R < 1e-8`` raise SingularityError.
    """

    name = "hydrogen"

    def __init__(self, eps=0.58):
        if eps <= 0:
            raise PreconditionError("field strength eps must be positive")
        super().__init__(3, {"eps": float(eps)})
        self.eps = float(eps)

    def stark_point(self):
        """Closed-form Stark saddle ``(eps^-1/2, 0, 0, 0, -eps^-1/2 / 2, 0)``."""
        r = self.eps**-0.5
        return np.array([r, 0.0, 0.0, 0.0, -0.5 * r, 0.0])

    def check_domain(self, z):
        if np.sqrt(z[0] ** 2 + z[1] ** 2 + z[2] ** 2) < R_MIN:
            raise SingularityError("hydrogen Hamiltonian is singular at R = 0")

    def _energy(self, z):
        x, P = z[:3], z[3:]
        R = np.sqrt(x @ x)
        return (
            0.5 * P @ P
            - 1.0 / R
            + 0.5 * (x[0] * P[1] - x[1] * P[0])
            + 0.125 * (x[0] ** 2 + x[1] ** 2)
            - self.eps * x[0]
        )

    def analytic_gradient(self, z):
        return self.gradient_batch(z)[0]

    def gradient_batch(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        x, P = Z[:, :3], Z[:, 3:]
        R = np.sqrt(np.sum(x * x, axis=1))
        if np.any(R < R_MIN):
            raise SingularityError("hydrogen Hamiltonian is singular at R = 0")
        G = np.empty_like(Z)
        G[:, :3] = x / R[:, None] ** 3
        G[:, 0] += 0.5 * P[:, 1] + 0.25 * x[:, 0] - self.eps
        G[:, 1] += -0.5 * P[:, 0] + 0.25 * x[:, 1]
        G[:, 3] = P[:, 0] - 0.5 * x[:, 1]
        G[:, 4] = P[:, 1] + 0.5 * x[:, 0]
        G[:, 5] = P[:, 2]
        return G

    def analytic_hessian(self, z):
        x = z[:3]
        R = np.sqrt(x @ x)
        A = np.zeros((6, 6))
        A[:3, :3] = np.eye(3) / R**3 - 3.0 * np.outer(x, x) / R**5
        A[0, 0] += 0.25
        A[1, 1] += 0.25
        A[3:, 3:] = np.eye(3)
        A[0, 4] = A[4, 0] = 0.5
        A[1, 3] = A[3, 1] = -0.5
        return A

    @property
    def kernel_spec(self):
        return KernelSpec.hydrogen(self.eps)


def hydrogen(eps=0.58):
    return HydrogenCrossedFields(eps)


def load_polynomial(path):
    """Read a polynomial system from JSON ``{"n": int, "terms": [{"coeff", "exps"}], ...}``.

    An optional ``"guess"`` entry gives the equilibrium search start point.
    """
    with open(path) as fh:
        data = json.load(fh)
    H = PolynomialHamiltonian.from_dict(data)
    guess = data.get("guess")
    guess = np.zeros(2 * H.n) if guess is None else as_state(guess, H.n)
    return H, guess


@dataclass(frozen=True)
class SystemEntry:
    build: Callable
    defaults: dict
    guess: Callable
    description: str


def _build_quadratic(p):
    om = p.get("omega", [1.0])
    return quadratic(p.get("lambda", 1.0), om)


def _guess_quadratic(H):
    return np.full(2 * H.n, 1e-3)


SYSTEMS = {
    "quadratic": SystemEntry(
        _build_quadratic,
        {"lambda": 1.0, "omega": [1.0]},
        _guess_quadratic,
        "quadratic normal form; lambda=0 gives the all-center form",
    ),
    "model": SystemEntry(
        lambda p: model(p.get("a", 2.0), p.get("b", 1.0)),
        {"a": 2.0, "b": 1.0},
        lambda H: np.array([0.55, 0.05, 0.0, 0.0]),
        "double-well isomerization model, saddle at x1 = 1/2",
    ),
    "hydrogen": SystemEntry(
        lambda p: hydrogen(p.get("eps", 0.58)),
        {"eps": 0.58},
        lambda H: 0.99 * H.stark_point(),
        "hydrogen atom in crossed electric and magnetic fields",
    ),
}


def make_system(name, params=None):
    """Build a registered system; returns ``(H, equilibrium_guess)``."""
    if name not in SYSTEMS:
        raise PreconditionError(f"unknown system {name!r}; choose from {sorted(SYSTEMS)}")
    entry = SYSTEMS[name]
    unknown = set(params or {}) - set(entry.defaults)
    if unknown:
        raise PreconditionError(f"unknown parameters for {name}: {sorted(unknown)}")
    p = dict(entry.defaults)
    p.update(params or {})
    H = entry.build(p)
    return H, entry.guess(H)
