"""Hamiltonian systems in canonical coordinates and their differential calculus.

States are plain float arrays ordered ``(x_1..x_n, P_1..P_n)``. Systems expose
``energy``, ``gradient`` and ``hessian``; a subclass that knows its derivatives
overrides ``analytic_gradient`` / ``analytic_hessian``, otherwise fourth-order
central differences are used.
"""

import numpy as np

from ._kernels import KernelSpec
from .errors import ConvergenceError, PreconditionError, RankError

EPS = np.finfo(float).eps
GRAD_STEP = EPS ** (1 / 5)
HESS_STEP = EPS ** (1 / 4)


def symplectic_J(n):
    """Standard structure matrix ``[[0, I], [-I, 0]]`` of size 2n."""
    if n < 1:
        raise PreconditionError("n must be a positive integer")
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, I], [-I, Z]])


def as_state(z, n=None):
    """Validate and copy a canonical state."""
    z = np.array(z, dtype=float).ravel()
    if n is not None and z.size != 2 * n:
        raise PreconditionError(f"state has length {z.size}, expected {2 * n}")
    if z.size % 2:
        raise PreconditionError("state length must be even")
    if not np.all(np.isfinite(z)):
        raise PreconditionError("state contains non-finite entries")
    return z


def fd_gradient(f, z, step=GRAD_STEP):
    """Fourth-order central-difference gradient of a scalar function."""
    z = np.asarray(z, dtype=float)
    g = np.empty_like(z)
    for i in range(z.size):
        h = max(1.0, abs(z[i])) * step
        e = np.zeros_like(z)
        e[i] = h
        g[i] = (-f(z + 2 * e) + 8 * f(z + e) - 8 * f(z - e) + f(z - 2 * e)) / (12 * h)
    return g


def fd_jacobian(F, z, step=GRAD_STEP):
    """Fourth-order central-difference Jacobian of a vector map; column j is dF/dz_j."""
    z = np.asarray(z, dtype=float)
    cols = []
    for i in range(z.size):
        h = max(1.0, abs(z[i])) * step
        e = np.zeros_like(z)
        e[i] = h
        cols.append(
            (-F(z + 2 * e) + 8 * F(z + e) - 8 * F(z - e) + F(z - 2 * e)) / (12 * h)
        )
    return np.column_stack(cols)


def fd_hessian(f, z, step=HESS_STEP):
    """Fourth-order central-difference Hessian from function values only."""
    z = np.asarray(z, dtype=float)
    m = z.size
    h = np.maximum(1.0, np.abs(z)) * step
    f0 = f(z)
    A = np.empty((m, m))

    def fz(i, a, j=None, b=0):
        w = z.copy()
        w[i] += a * h[i]
        if j is not None:
            w[j] += b * h[j]
        return f(w)

    for i in range(m):
        A[i, i] = (
            -fz(i, 2) + 16 * fz(i, 1) - 30 * f0 + 16 * fz(i, -1) - fz(i, -2)
        ) / (12 * h[i] ** 2)
        for j in range(i):
            s = (
                8 * (fz(i, 1, j, -2) + fz(i, 2, j, -1) + fz(i, -2, j, 1) + fz(i, -1, j, 2))
                - 8 * (fz(i, -1, j, -2) + fz(i, -2, j, -1) + fz(i, 1, j, 2) + fz(i, 2, j, 1))
                - (fz(i, 2, j, -2) + fz(i, -2, j, 2) - fz(i, -2, j, -2) - fz(i, 2, j, 2))
                + 64 * (fz(i, -1, j, -1) + fz(i, 1, j, 1) - fz(i, 1, j, -1) - fz(i, -1, j, 1))
            )
            A[i, j] = A[j, i] = s / (144 * h[i] * h[j])
    return A


class HamiltonianSystem:
    """Base class for a Hamiltonian on R^{2n}.

    Subclasses implement ``_energy``; ``analytic_gradient`` and
    ``analytic_hessian`` may be overridden to return arrays (returning None
    selects finite differences). ``check_domain`` raises for states outside
    the domain.
    """

    name = "hamiltonian"

    def __init__(self, n, params=None):
        if int(n) < 1:
            raise PreconditionError("n must be a positive integer")
        self.n = int(n)
        self.params = dict(params or {})

    def __repr__(self):
        ps = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}(n={self.n}{', ' + ps if ps else ''})"

    # -- overridable ---------------------------------------------------
    def _energy(self, z):
        raise NotImplementedError

    def analytic_gradient(self, z):
        return None

    def analytic_hessian(self, z):
        return None

    def check_domain(self, z):
        pass

    @property
    def kernel_spec(self):
        """KernelSpec for the batch integrators, or None if not expressible."""
        return None

    # -- public --------------------------------------------------------
    @property
    def gradient_mode(self):
        overridden = type(self).analytic_gradient is not HamiltonianSystem.analytic_gradient
        return "analytic" if overridden else "finite-difference"

    def energy(self, z):
        z = np.asarray(z, dtype=float)
        self.check_domain(z)
        return float(self._energy(z))

    def __call__(self, z):
        return self.energy(z)

    def gradient(self, z):
        z = np.asarray(z, dtype=float)
        self.check_domain(z)
        g = self.analytic_gradient(z)
        if g is None:
            g = fd_gradient(self._energy, z)
        return np.asarray(g, dtype=float)

    def fd_gradient(self, z):
        z = np.asarray(z, dtype=float)
        self.check_domain(z)
        return fd_gradient(self._energy, z)

    def hessian(self, z):
        z = np.asarray(z, dtype=float)
        self.check_domain(z)
        A = self.analytic_hessian(z)
        if A is None:
            if self.analytic_gradient(z) is not None:
                A = fd_jacobian(self.analytic_gradient, z, step=HESS_STEP)
            else:
                A = fd_hessian(self._energy, z)
        A = np.asarray(A, dtype=float)
        return 0.5 * (A + A.T)

    def gradient_batch(self, Z):
        return np.array([self.gradient(z) for z in np.atleast_2d(Z)])

    def shifted(self, offset):
        """System in translated coordinates: ``H'(z) = H(z + offset)``."""
        return ShiftedHamiltonian(self, offset)


class FunctionHamiltonian(HamiltonianSystem):
    """Hamiltonian given by plain callables."""

    name = "function"

    def __init__(self, n, energy, gradient=None, hessian=None, params=None):
        super().__init__(n, params)
        self._f = energy
        self._g = gradient
        self._h = hessian

    @property
    def gradient_mode(self):
        return "finite-difference" if self._g is None else "analytic"

    def _energy(self, z):
        return self._f(z)

    def analytic_gradient(self, z):
        return None if self._g is None else self._g(z)

    def analytic_hessian(self, z):
        return None if self._h is None else self._h(z)


class ShiftedHamiltonian(HamiltonianSystem):
    def __init__(self, base, offset):
        super().__init__(base.n, base.params)
        self.base = base
        self.offset = as_state(offset, base.n)
        self.name = base.name

    @property
    def gradient_mode(self):
        return self.base.gradient_mode

    def _energy(self, z):
        return self.base._energy(z + self.offset)

    def check_domain(self, z):
        self.base.check_domain(z + self.offset)

    def analytic_gradient(self, z):
        return self.base.analytic_gradient(z + self.offset)

    def analytic_hessian(self, z):
        return self.base.analytic_hessian(z + self.offset)

    def gradient_batch(self, Z):
        return self.base.gradient_batch(np.atleast_2d(Z) + self.offset)

    @property
    def kernel_spec(self):
        spec = self.base.kernel_spec
        return None if spec is None else spec.shifted(self.offset)


class PolynomialHamiltonian(HamiltonianSystem):
    """``H(z) = sum_t coeff_t * prod_i z_i ** exps_t[i]``."""

    name = "polynomial"

    def __init__(self, n, terms, params=None):
        super().__init__(n, params)
        terms = list(terms)
        self.coeffs = np.array([float(c) for c, _ in terms])
        exps = np.array([list(e) for _, e in terms], dtype=np.int64).reshape(len(terms), -1)
        if len(terms) and exps.shape[1] != 2 * self.n:
            raise PreconditionError(f"exponent vectors must have length {2 * self.n}")
        if np.any(exps < 0):
            raise PreconditionError("exponents must be non-negative")
        self.exps = exps.reshape(len(terms), 2 * self.n)
        self._spec = KernelSpec.polynomial(self.n, self.coeffs, self.exps)

    @property
    def terms(self):
        return [(float(c), tuple(int(k) for k in e)) for c, e in zip(self.coeffs, self.exps)]

    @classmethod
    def from_dict(cls, data):
        n = int(data["n"])
        terms = [(t["coeff"], t["exps"]) for t in data["terms"]]
        return cls(n, terms, params=data.get("params"))

    def to_dict(self):
        return {
            "n": self.n,
            "terms": [{"coeff": c, "exps": list(e)} for c, e in self.terms],
        }

    def _energy(self, z):
        if not len(self.coeffs):
            return 0.0
        return float(np.prod(z ** self.exps, axis=1) @ self.coeffs)

    def analytic_gradient(self, z):
        return self.gradient_batch(z)[0]

    def gradient_batch(self, Z):
        W = np.atleast_2d(np.asarray(Z, dtype=float))
        s = self._spec
        G = np.zeros_like(W)
        if len(s.dcoef):
            t = np.prod(W[:, None, :] ** s.dexp[None], axis=2) * s.dcoef
            np.add.at(G.T, s.dvar, t.T)
        return G

    def analytic_hessian(self, z):
        dim = 2 * self.n
        A = np.zeros((dim, dim))
        s = self._spec
        for c, e, i in zip(s.dcoef, s.dexp, s.dvar):
            for j in range(dim):
                if e[j] > 0:
                    ee = e.copy()
                    ee[j] -= 1
                    A[i, j] += c * e[j] * np.prod(z ** ee)
        return A

    @property
    def kernel_spec(self):
        return self._spec


def _grad_of(f, z):
    if isinstance(f, HamiltonianSystem) or hasattr(f, "gradient"):
        return np.asarray(f.gradient(z), dtype=float)
    return fd_gradient(f, z)


def gradient(H, z):
    """Gradient of H at z (analytic when available)."""
    return H.gradient(as_state(z, H.n))


def hessian(H, z):
    """Symmetric Hessian of H at z."""
    return H.hessian(as_state(z, H.n))


def vector_field(H, z):
    """Hamiltonian vector field ``J grad H(z)``."""
    g = gradient(H, z)
    n = H.n
    return np.concatenate([g[n:], -g[:n]])


def poisson_bracket(F, G, z):
    """Canonical bracket ``grad F^T J grad G``.

    F and G may be HamiltonianSystem instances, objects with a ``gradient``
    method, or plain callables (differentiated numerically).
    """
    z = np.asarray(z, dtype=float)
    gf, gg = _grad_of(F, z), _grad_of(G, z)
    n = z.size // 2
    return float(gf[:n] @ gg[n:] - gf[n:] @ gg[:n])


def find_equilibrium(H, guess, tol=1e-12, max_iter=50):
    """Newton iteration ``z <- z - (D^2H)^{-1} grad H`` until ``|grad H|_inf <= tol``.

    Raises RankError on a singular Hessian and ConvergenceError when
    ``max_iter`` is exhausted.
    """
    z = as_state(guess, H.n)
    for _ in range(max_iter + 1):
        g = H.gradient(z)
        if np.max(np.abs(g)) <= tol:
            return z
        A = H.hessian(z)
        if np.linalg.cond(A) > 1.0 / EPS:
            raise RankError("Hessian is singular along the Newton iteration")
        z = z - np.linalg.solve(A, g)
        if not np.all(np.isfinite(z)):
            raise ConvergenceError("Newton iteration diverged")
    raise ConvergenceError(
        f"no convergence in {max_iter} iterations (|grad H| = {np.max(np.abs(g)):.3e})"
    )
