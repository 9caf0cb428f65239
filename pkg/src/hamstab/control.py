"""Feedback laws, the modified Hamiltonian, and the dissipative closed loop.

With feedback functions ``F_i(z) = s_i . (z - z0)`` (rows of S) the closed
loop is::

    z' = X_Hmod(z) + sum_i d_i {F_i, Hmod}(z) X_Fi,   Hmod = H + c F_1^2 / 2

so that ``dHmod/dt = -sum_i d_i {F_i, Hmod}^2``. Brackets use
``{F, G} = grad F^T J grad G``.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ClassificationError, GainError, PreconditionError
from .hamsys import HamiltonianSystem, PolynomialHamiltonian, as_state, symplectic_J
from .normal_form import build_transform
from .spectral import Kind, classify, linearize

JACOBIAN_STEP = 1e-5
RANK_RTOL = 1e-8
INVOLUTION_TOL = 1e-10


@dataclass(frozen=True)
class LinearFeedback:
    """``F(z) = coeffs . (z - z0)``; callable on a state or an (m, 2n) batch."""

    coeffs: np.ndarray
    z0: np.ndarray

    def __call__(self, z):
        return (np.asarray(z, dtype=float) - self.z0) @ self.coeffs

    def gradient(self, z=None):
        return self.coeffs.copy()

    def terms(self, names=None, tol=1e-12):
        """Nonzero ``(coefficient, coordinate name)`` pairs."""
        n = len(self.coeffs) // 2
        names = names or [f"x{i + 1}" for i in range(n)] + [f"P{i + 1}" for i in range(n)]
        return [(float(a), nm) for a, nm in zip(self.coeffs, names) if abs(a) > tol]


@dataclass(frozen=True)
class FeedbackLaw:
    """Feedback covectors with gains.

    ``rows`` are the n covectors s_i, ``c`` the proportional gain on F_1, ``d``
    the damping gains, ``lam`` the rate the gain must exceed (lambda for
    stabilization). ``from_transform`` validates the gains; the plain
    constructor does not, so degenerate laws can be built for testing.
    """

    rows: np.ndarray
    c: float
    d: np.ndarray
    z0: np.ndarray
    lam: float = 0.0

    @classmethod
    def from_transform(cls, T, c=None, d=None):
        if T.kind != Kind.SADDLE_CENTER:
            raise ClassificationError("stabilizing feedback needs a saddle-center equilibrium")
        n = T.n
        c = 2.0 * T.lam if c is None else float(c)
        d = np.ones(n) if d is None else np.broadcast_to(np.asarray(d, dtype=float), (n,)).copy()
        if not c > T.lam:
            raise GainError(f"gain c = {c:g} must exceed lambda = {T.lam:g}")
        if np.any(d <= 0):
            raise GainError("damping gains d_i must be positive")
        return cls(rows=T.feedback_rows.copy(), c=c, d=d, z0=T.z0.copy(), lam=float(T.lam))

    @property
    def n(self):
        return self.rows.shape[0]

    def functions(self):
        return [LinearFeedback(s.copy(), self.z0) for s in self.rows]

    def values(self, z):
        return (np.asarray(z, dtype=float) - self.z0) @ self.rows.T


def feedback_functions(T):
    """Feedback functions ``F_i = q_i`` (rows of S applied to ``z - z0``)."""
    return [LinearFeedback(s.copy(), T.z0.copy()) for s in T.feedback_rows]


class ModifiedHamiltonian(HamiltonianSystem):
    """``H + c F^2 / 2`` for a linear F = s . (z - z0)."""

    name = "modified"

    def __init__(self, base, s, z0, c):
        super().__init__(base.n, base.params)
        self.base = base
        self.s = np.asarray(s, dtype=float)
        self.z0 = np.asarray(z0, dtype=float)
        self.c = float(c)

    @property
    def gradient_mode(self):
        return self.base.gradient_mode

    def check_domain(self, z):
        self.base.check_domain(z)

    def _energy(self, z):
        f = (z - self.z0) @ self.s
        return self.base._energy(z) + 0.5 * self.c * f * f

    def analytic_gradient(self, z):
        return self.base.gradient(z) + self.c * ((z - self.z0) @ self.s) * self.s

    def analytic_hessian(self, z):
        return self.base.hessian(z) + self.c * np.outer(self.s, self.s)

    def gradient_batch(self, Z):
        Z = np.atleast_2d(Z)
        G = self.base.gradient_batch(Z)
        return G + (self.c * ((Z - self.z0) @ self.s))[:, None] * self.s

    def as_polynomial(self, tol=0.0):
        """Expand into a PolynomialHamiltonian; the base must be polynomial."""
        if not isinstance(self.base, PolynomialHamiltonian):
            raise PreconditionError("only polynomial base systems can be expanded")
        dim = 2 * self.n
        beta = float(self.s @ self.z0)
        half = 0.5 * self.c
        acc = {}

        def add(e, v):
            acc[e] = acc.get(e, 0.0) + v

        for coeff, e in self.base.terms:
            add(tuple(e), coeff)
        for i in range(dim):
            for j in range(dim):
                e = [0] * dim
                e[i] += 1
                e[j] += 1
                add(tuple(e), half * self.s[i] * self.s[j])
            e = [0] * dim
            e[i] = 1
            add(tuple(e), -2 * half * beta * self.s[i])
        add((0,) * dim, half * beta * beta)
        terms = [(v, e) for e, v in sorted(acc.items()) if abs(v) > tol]
        return PolynomialHamiltonian(self.n, terms, params=self.base.params)


def modified_hamiltonian(H, law, check=True):
    """``H_mod = H + c F_1^2 / 2``; raises GainError if ``c <= lam`` and ``check``."""
    if check and not law.c > law.lam:
        raise GainError(f"gain c = {law.c:g} must exceed lambda = {law.lam:g}")
    return ModifiedHamiltonian(H, law.rows[0], law.z0, law.c)


@dataclass(frozen=True)
class ClosedLoopSystem:
    base: HamiltonianSystem
    law: FeedbackLaw
    h_mod: ModifiedHamiltonian = dc_field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "h_mod", modified_hamiltonian(self.base, self.law, check=False))

    @property
    def n(self):
        return self.base.n

    @property
    def z0(self):
        return self.law.z0

    @property
    def conservative(self):
        return bool(np.all(self.law.d == 0))

    def _split(self, G):
        n = self.n
        X = np.concatenate([G[..., n:], -G[..., :n]], axis=-1)
        B = X @ self.law.rows.T
        return X, B

    def brackets(self, z):
        """``{F_i, H_mod}(z)``, equal to dF_i/dt along the closed loop."""
        return self._split(self.h_mod.gradient(np.asarray(z, dtype=float)))[1]

    def field(self, z):
        z = np.asarray(z, dtype=float)
        X, B = self._split(self.h_mod.gradient(z))
        rows = self.law.rows
        n = self.n
        Jrows = np.concatenate([rows[:, n:], -rows[:, :n]], axis=1)
        return X + (self.law.d * B) @ Jrows

    __call__ = field

    def field_batch(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        X, B = self._split(self.h_mod.gradient_batch(Z))
        rows = self.law.rows
        n = self.n
        Jrows = np.concatenate([rows[:, n:], -rows[:, :n]], axis=1)
        return X + (B * self.law.d) @ Jrows

    def dissipation_rate(self, z):
        """``-sum_i d_i {F_i, H_mod}^2``; accepts a batch of states."""
        Z = np.atleast_2d(np.asarray(z, dtype=float))
        X, B = self._split(self.h_mod.gradient_batch(Z))
        r = -np.sum(self.law.d * B * B, axis=-1)
        return r if np.ndim(z) > 1 else float(r[0])

    def kernel_args(self):
        """``(spec, rows, z0, c, d)`` for the batch kernels, or None."""
        spec = self.base.kernel_spec
        if spec is None:
            return None
        return spec, self.law.rows, self.law.z0, self.law.c, self.law.d


def stabilize(H, T, c=None, d=None):
    """Closed loop with validated gains (defaults ``c = 2 lambda``, ``d_i = 1``)."""
    return ClosedLoopSystem(H, FeedbackLaw.from_transform(T, c, d))


def closed_loop_field(CL, z):
    return CL.field(z)


def closed_loop_jacobian(CL, z=None, step=JACOBIAN_STEP):
    """Fourth-order central-difference Jacobian of the closed-loop field."""
    z = CL.z0 if z is None else np.asarray(z, dtype=float)
    h = step * max(1.0, float(np.max(np.abs(z))))
    cols = []
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h
        cols.append(
            (-CL.field(z + 2 * e) + 8 * CL.field(z + e) - 8 * CL.field(z - e) + CL.field(z - 2 * e))
            / (12 * h)
        )
    return np.column_stack(cols)


@dataclass(frozen=True)
class Theorem1Report:
    positive_definite: bool
    involution: bool
    rank_dC: int
    min_hessian_eigenvalue: float
    max_bracket: float
    dim: int

    @property
    def passed(self):
        return self.positive_definite and self.involution and self.rank_dC == self.dim

    def as_dict(self):
        return {
            "positive_definite": self.positive_definite,
            "involution": self.involution,
            "rank_dC": self.rank_dC,
            "dim": self.dim,
            "min_hessian_eigenvalue": self.min_hessian_eigenvalue,
            "max_bracket": self.max_bracket,
            "passed": self.passed,
        }


def codistribution_rank(rows, A, rtol=RANK_RTOL):
    """Rank of ``{s_i A^k : k < 2n}`` from singular values above ``rtol * sigma_max``."""
    dim = A.shape[0]
    blocks, cur = [], np.asarray(rows, dtype=float)
    for _ in range(dim):
        blocks.append(cur)
        cur = cur @ A
    sv = np.linalg.svd(np.vstack(blocks), compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def theorem1_checks(CL):
    """Positive-definiteness of D^2 H_mod(z0), involution of the F_i, and rank of dC at z0."""
    z0 = CL.z0
    n = CL.n
    J = symplectic_J(n)
    D2 = CL.h_mod.hessian(z0)
    emin = float(np.min(np.linalg.eigvalsh(D2)))
    rows = CL.law.rows
    brackets = rows @ J @ rows.T
    maxb = float(np.max(np.abs(brackets))) if brackets.size else 0.0
    rank = codistribution_rank(rows, J @ D2)
    return Theorem1Report(
        positive_definite=emin > 0,
        involution=maxb <= INVOLUTION_TOL,
        rank_dC=rank,
        min_hessian_eigenvalue=emin,
        max_bracket=maxb,
        dim=2 * n,
    )


def destabilize(H, z0, c, tol=1e-8):
    """Turn a center-...-center equilibrium into a saddle-center one.

    Returns the conservative system ``H - c F_1^2 / 2`` with F_1 the first
    (lowest-frequency) center normal-form coordinate. Requires ``c > omega_1``;
    the new saddle rate is ``sqrt(omega_1 (c - omega_1))``.
    """
    z0 = as_state(z0, H.n)
    cls = classify(linearize(H, z0), tol)
    if cls.kind != Kind.ALL_CENTER:
        raise ClassificationError(
            f"destabilization needs a center-...-center equilibrium, got {cls.kind.value}"
            + (f" ({cls.detail})" if cls.detail else "")
        )
    w1 = float(cls.omegas[0])
    c = float(c)
    if not c > w1:
        raise GainError(f"gain c = {c:g} must exceed omega_1 = {w1:g}")
    T = build_transform(cls, H, z0)
    law = FeedbackLaw(rows=T.feedback_rows.copy(), c=-c, d=np.zeros(H.n), z0=z0, lam=w1)
    return ClosedLoopSystem(H, law)
