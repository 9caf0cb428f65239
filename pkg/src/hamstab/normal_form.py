"""Symplectic normalization of a saddle-center (or all-center) linearization.

Conventions (eigenvectors carry a scale/phase freedom that is fixed here):

* saddle pair: ``v_{n+1}`` is negated if ``<v_1, J v_{n+1}> < 0``; the two
  vectors are rescaled to equal Euclidean norm keeping their product, which
  leaves ``c_1`` unchanged and removes the hyperbolic-rotation freedom;
* center pairs: the eigenvector for ``+i omega`` is rotated so that its
  first non-negligible component is purely imaginary, and conjugated if
  ``<Re v, J Im v> < 0``;
* signs: each conjugate pair of normal-form coordinates is flipped jointly so
  that the largest-magnitude coefficient of its ``q`` row of S is positive;
* frequencies are in ascending order.

M's columns are the scaled eigenvectors, so M maps normal-form coordinates to
displacements ``z - z0``; ``S = N M^{-1}`` maps displacements to ``(q, p)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ClassificationError, ConstructionError
from .hamsys import as_state, symplectic_J
from .spectral import Kind

PHASE_REL_TOL = 1e-6
SYMPLECTIC_TOL = 1e-8
CONJUGATION_TOL = 1e-6


@dataclass(frozen=True)
class NormalFormTransform:
    kind: Kind
    M: np.ndarray
    N: np.ndarray
    S: np.ndarray
    S_inv: np.ndarray
    c: np.ndarray
    lam: float | None
    omegas: np.ndarray
    z0: np.ndarray
    conjugated_hessian: np.ndarray

    @property
    def n(self):
        return len(self.c)

    @property
    def feedback_rows(self):
        return self.S[: self.n]

    def to_normal_form(self, z):
        return to_normal_form(self, z)

    def from_normal_form(self, qp):
        return from_normal_form(self, qp)


def _largest_sign(v):
    a = np.abs(v)
    idx = int(np.flatnonzero(a >= (1 - 1e-9) * a.max())[0])
    return 1.0 if v[idx] >= 0 else -1.0


def _J(v):
    n = len(v) // 2
    return np.concatenate([v[n:], -v[:n]])


def _symp(a, b):
    """``<a, J b>``."""
    return float(a @ _J(b))


def _canonical_phase(v):
    a = np.abs(v)
    j = int(np.flatnonzero(a > PHASE_REL_TOL * a.max())[0])
    return v * (1j * a[j] / v[j])


def _normalized_saddle(v1, vn1):
    v1 = np.array(v1, dtype=float)
    vn1 = np.array(vn1, dtype=float)
    s = _symp(v1, vn1)
    if abs(s) <= 1e-12 * np.linalg.norm(v1) * np.linalg.norm(vn1):
        raise ConstructionError("<v1, J v_{n+1}> vanishes: degenerate saddle pairing")
    if s < 0:
        vn1 = -vn1
    r = np.sqrt(np.linalg.norm(vn1) / np.linalg.norm(v1))
    v1, vn1 = v1 * r, vn1 / r
    if _largest_sign(_J(v1 + vn1)) < 0:
        v1, vn1 = -v1, -vn1
    return v1, vn1


def _krein(v):
    """``<Re v, J Im v>`` = Im(v^H J v) / 2."""
    return _symp(v.real, v.imag)


def _normalized_centers(omegas, vecs, tol):
    vecs = [np.array(v, dtype=complex) for v in vecs]
    out = [None] * len(vecs)
    # clusters of (numerically) equal frequencies
    start = 0
    while start < len(vecs):
        stop = start + 1
        while stop < len(vecs) and omegas[stop] - omegas[stop - 1] <= tol:
            stop += 1
        block = [_canonical_phase(v) for v in vecs[start:stop]]
        block = [v if _krein(v) > 0 else np.conj(v) for v in block]
        if len(block) > 1:
            # Gram-Schmidt in the Hermitian form h(u, w) = u^H J w / (2i)
            Vc = np.column_stack(block)
            JV = np.vstack([Vc[len(Vc) // 2 :], -Vc[: len(Vc) // 2]])
            G = (Vc.conj().T @ JV) / 2j
            G = 0.5 * (G + G.conj().T)
            try:
                L = np.linalg.cholesky(G)
            except np.linalg.LinAlgError as exc:
                raise ConstructionError(
                    "resonant center block has indefinite symplectic form"
                ) from exc
            Vc = Vc @ np.linalg.inv(L.conj().T)
            block = [_canonical_phase(Vc[:, k]) for k in range(Vc.shape[1])]
            block = [v if _krein(v) > 0 else np.conj(v) for v in block]
        out[start:stop] = block
        start = stop
    for k, v in enumerate(out):
        if abs(_krein(v)) <= 1e-12 * np.linalg.norm(v) ** 2:
            raise ConstructionError("<Re v, J Im v> vanishes: degenerate center pair")
        if _largest_sign(_J(v.imag)) < 0:
            out[k] = -v
    return out


def normalized_eigenvectors(cls):
    """Sign/phase-normalized eigenvectors ``(saddle_pair or None, center_list)``."""
    if cls.kind == Kind.SADDLE_CENTER:
        saddle = _normalized_saddle(*cls.eigvec_real_pair)
    elif cls.kind == Kind.ALL_CENTER:
        saddle = None
    else:
        raise ClassificationError(f"cannot normalize a spectrum of kind {cls.kind.value}: {cls.detail}")
    centers = _normalized_centers(cls.omegas, cls.eigvec_center_pairs, cls.tol)
    return saddle, centers


def normalization_constants(cls):
    """Scaling constants ``c_1 = <v1, J v_{n+1}>^{-1/2}``, ``c_k = <Re v_k, J Im v_k>^{-1/2}``.

    Computed after the sign/phase normalization, so every inner product is
    positive. For a saddle-center spectrum ``c[0]`` belongs to the saddle pair
    and ``c[1:]`` follow ``cls.omegas``.
    """
    saddle, centers = normalized_eigenvectors(cls)
    cs = [] if saddle is None else [_symp(*saddle) ** -0.5]
    cs += [_krein(v) ** -0.5 for v in centers]
    return np.array(cs)


def build_M(cls):
    """Symplectic matrix of scaled eigenvectors (normal form -> original displacements)."""
    saddle, centers = normalized_eigenvectors(cls)
    c = normalization_constants(cls)
    if saddle is None:
        left = [ck * v.real for ck, v in zip(c, centers)]
        right = [ck * v.imag for ck, v in zip(c, centers)]
    else:
        v1, vn1 = saddle
        left = [c[0] * v1] + [ck * v.real for ck, v in zip(c[1:], centers)]
        right = [c[0] * vn1] + [ck * v.imag for ck, v in zip(c[1:], centers)]
    return np.column_stack(left + right)


def rotation_N(n):
    """Rotation by 45 degrees in the (q1, p1) plane, identity elsewhere."""
    N = np.eye(2 * n)
    r = 1.0 / np.sqrt(2.0)
    N[0, 0], N[0, n], N[n, 0], N[n, n] = r, -r, r, r
    return N


def symplectic_defect(A):
    J = symplectic_J(A.shape[0] // 2)
    return float(np.max(np.abs(A.T @ J @ A - J)))


def expected_normal_hessian(T_or_kind, lam=None, omegas=None):
    if isinstance(T_or_kind, NormalFormTransform):
        kind, lam, omegas = T_or_kind.kind, T_or_kind.lam, T_or_kind.omegas
    else:
        kind = T_or_kind
    omegas = list(omegas)
    if kind == Kind.SADDLE_CENTER:
        return np.diag([-lam] + omegas + [lam] + omegas)
    return np.diag(omegas + omegas)


def build_transform(cls, H, z0):
    """Assemble M, N and ``S = N M^{-1}`` and verify them.

    Raises ConstructionError when M, N or S is not symplectic, or when the
    Hessian conjugated into normal-form coordinates differs from the expected
    diagonal normal form by more than 1e-6 (relative to the spectral scale).
    """
    if cls.kind not in (Kind.SADDLE_CENTER, Kind.ALL_CENTER):
        raise ClassificationError(f"cannot build a normal form for kind {cls.kind.value}: {cls.detail}")
    z0 = as_state(z0, H.n)
    n = H.n
    M = build_M(cls)
    N = rotation_N(n) if cls.kind == Kind.SADDLE_CENTER else np.eye(2 * n)
    S = N @ np.linalg.inv(M)
    S_inv = M @ N.T
    for name, A in (("M", M), ("N", N), ("S", S)):
        d = symplectic_defect(A)
        if d > SYMPLECTIC_TOL * max(1.0, np.max(np.abs(A)) ** 2):
            raise ConstructionError(f"{name} is not symplectic (defect {d:.3e})")

    D2 = H.hessian(z0)
    C = S_inv.T @ D2 @ S_inv
    want = expected_normal_hessian(cls.kind, cls.lam, cls.omegas)
    scale = max(1.0, float(np.max(np.abs(np.diag(want)))))
    err = float(np.max(np.abs(C - want)))
    if err > CONJUGATION_TOL * scale:
        raise ConstructionError(
            f"conjugated Hessian deviates from the normal form by {err:.3e}"
        )
    return NormalFormTransform(
        kind=cls.kind,
        M=M,
        N=N,
        S=S,
        S_inv=S_inv,
        c=normalization_constants(cls),
        lam=cls.lam,
        omegas=np.array(cls.omegas),
        z0=z0,
        conjugated_hessian=C,
    )


def to_normal_form(T, z):
    """``S (z - z0)``; accepts a single state or an (m, 2n) array of states."""
    z = np.asarray(z, dtype=float)
    return (z - T.z0) @ T.S.T


def from_normal_form(T, qp):
    qp = np.asarray(qp, dtype=float)
    return qp @ T.S_inv.T + T.z0
