"""Linearization at an equilibrium and saddle/center classification of the spectrum."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import NonSemisimpleError, PreconditionError
from .hamsys import as_state, symplectic_J

EQUILIBRIUM_TOL = 1e-8
MAX_EIGVEC_COND = 1e8


class Kind(str, Enum):
    SADDLE_CENTER = "SaddleCenter"
    ALL_CENTER = "AllCenter"
    OTHER = "Other"


@dataclass(frozen=True)
class Linearization:
    A: np.ndarray
    z0: np.ndarray
    n: int
    hessian: np.ndarray

    def hamiltonian_defect(self):
        """``max |JA - (JA)^T|``; zero for a Hamiltonian matrix."""
        JA = symplectic_J(self.n) @ self.A
        return float(np.max(np.abs(JA - JA.T)))


@dataclass(frozen=True)
class SpectrumClassification:
    """Paired spectrum of a Hamiltonian matrix.

    ``eigvec_real_pair`` holds the real eigenvectors for +lambda and -lambda;
    ``eigvec_center_pairs`` holds one complex eigenvector per omega, for the
    eigenvalue +i*omega, in the same (ascending) order as ``omegas``.
    Eigenvectors are raw solver output; normalization happens in normal_form.
    """

    kind: Kind
    n: int
    eigenvalues: np.ndarray
    lam: float | None = None
    omegas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    eigvec_real_pair: tuple | None = None
    eigvec_center_pairs: tuple = ()
    resonant: bool = False
    eigvec_cond: float = 1.0
    trace: float = 0.0
    tol: float = 0.0
    detail: str = ""


def linearize(H, z0):
    """``A = J D^2H(z0)`` at an equilibrium z0."""
    z0 = as_state(z0, H.n)
    g = H.gradient(z0)
    if np.max(np.abs(g)) > EQUILIBRIUM_TOL:
        raise PreconditionError(
            f"z0 is not an equilibrium: |grad H|_inf = {np.max(np.abs(g)):.3e}"
        )
    D2 = H.hessian(z0)
    return Linearization(A=symplectic_J(H.n) @ D2, z0=z0, n=H.n, hessian=D2)


def _pair_eigenvalues(w):
    """Greedy nearest-negation pairing; returns a list of index pairs."""
    order = sorted(
        range(len(w)),
        key=lambda i: (-abs(w[i].real), -abs(w[i].imag), w[i].real, w[i].imag),
    )
    free = set(range(len(w)))
    pairs = []
    for i in order:
        if i not in free:
            continue
        free.discard(i)
        best = min(free, key=lambda j: (abs(w[i] + w[j]), -abs(w[j].imag), j))
        free.discard(best)
        pairs.append((i, best))
    return pairs


def classify(L, tol=1e-8):
    """Pair and classify the spectrum of a linearization.

    ``tol`` is relative to the spectral radius. Eigenvalue pairs with a
    large real part and negligible imaginary part are saddle pairs, pairs
    with negligible real part are center pairs. Anything else (complex
    quartets, zero eigenvalues, several saddle pairs) gives ``Kind.OTHER``
    with an explanation in ``detail``. A defective center block raises
    NonSemisimpleError; repeated frequencies set ``resonant``.
    """
    n = L.n
    w, V = np.linalg.eig(L.A)
    scale = float(np.max(np.abs(w)))
    common = dict(n=n, eigenvalues=w, trace=float(abs(np.sum(w))))
    if scale == 0.0:
        return SpectrumClassification(Kind.OTHER, tol=0.0, detail="zero matrix", **common)
    atol = tol * scale
    cond = float(np.linalg.cond(V))
    if not np.isfinite(cond) or cond >= MAX_EIGVEC_COND:
        raise NonSemisimpleError(
            f"eigenvector matrix is ill-conditioned (cond = {cond:.3e}); "
            "the linearization is not semisimple"
        )

    real_pairs, center_pairs, problems = [], [], []
    for i, j in _pair_eigenvalues(w):
        a, b = w[i], w[j]
        if abs(a + b) > max(atol, 1e-8 * scale):
            problems.append(f"eigenvalues {a:.6g} and {b:.6g} are not a +/- pair")
            continue
        re, im = abs(a.real), abs(a.imag)
        if re > atol and im <= atol:
            if a.real < 0:
                i, j = j, i
            real_pairs.append((abs(w[i].real), V[:, i].real, V[:, j].real))
        elif re <= atol and im > atol:
            if w[i].imag < 0:
                i = j
            center_pairs.append((abs(w[i].imag), V[:, i]))
        elif re <= atol and im <= atol:
            problems.append("zero eigenvalue pair (degenerate equilibrium)")
        else:
            problems.append(f"complex quartet member {a:.6g} (mixed real and imaginary part)")

    center_pairs.sort(key=lambda t: t[0])
    omegas = np.array([t[0] for t in center_pairs])
    resonant = bool(len(omegas) > 1 and np.any(np.diff(omegas) <= atol))
    common.update(
        omegas=omegas,
        eigvec_center_pairs=tuple(t[1] for t in center_pairs),
        resonant=resonant,
        eigvec_cond=cond,
        tol=atol,
    )
    detail = "; ".join(problems)
    if resonant:
        detail = "; ".join(filter(None, [detail, "repeated frequencies (resonance)"]))

    if not problems and len(real_pairs) == 1 and len(center_pairs) == n - 1:
        lam, v1, vn1 = real_pairs[0]
        return SpectrumClassification(
            Kind.SADDLE_CENTER, lam=lam, eigvec_real_pair=(v1, vn1), detail=detail, **common
        )
    if not problems and not real_pairs and len(center_pairs) == n:
        return SpectrumClassification(Kind.ALL_CENTER, detail=detail, **common)
    if not problems:
        detail = f"{len(real_pairs)} saddle pairs and {len(center_pairs)} center pairs"
    lam = real_pairs[0][0] if len(real_pairs) == 1 else None
    return SpectrumClassification(Kind.OTHER, lam=lam, detail=detail, **common)
