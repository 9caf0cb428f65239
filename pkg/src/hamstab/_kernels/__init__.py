"""Batch closed-loop integration kernels.

Two interchangeable backends implement the same two entry points::

    closed_loop_field_batch(kind, dcoef, dexp, dvar, eps, offset,
                            rows, z0, c, d, Z) -> F
    rk4_batch(kind, dcoef, dexp, dvar, eps, offset,
              rows, z0, c, d, Z, dt, nsteps) -> (Z_final, status)

``_ckernel`` is a compiled Cython extension; ``_pykernel`` is a numpy
fallback vectorized over the batch. The compiled one is used when it
imports, unless ``HAMSTAB_PURE_PYTHON`` is set to a non-empty value.

Status codes per sample: ``OK`` (0), ``NONFINITE`` (1), ``SINGULAR`` (2).
A failed sample is frozen at its last good state.
"""

import importlib
import os
from dataclasses import dataclass, field

import numpy as np

from . import _pykernel

OK, NONFINITE, SINGULAR = 0, 1, 2
KIND_POLY, KIND_HYDROGEN = 0, 1

# hydrogen singularity guard, shared with the python-level system
R_MIN = 1e-8

_ckernel = None
if not os.environ.get("HAMSTAB_PURE_PYTHON"):
    try:
        _ckernel = importlib.import_module(__name__ + "._ckernel")
    except ImportError:  # extension not built
        _ckernel = None

BACKEND = "cython" if _ckernel is not None else "python"


def get_backend(name=None):
    """Return the kernel module for ``name`` ("cython", "python" or None for the default)."""
    if name is None:
        name = BACKEND
    if name == "python":
        return _pykernel
    if name == "cython":
        if _ckernel is None:
            raise ImportError("compiled kernel is not available")
        return _ckernel
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    return ["python"] + (["cython"] if _ckernel is not None else [])


@dataclass(frozen=True)
class KernelSpec:
    """Flat description of a Hamiltonian gradient that both backends can evaluate.

    For polynomials, gradient component ``dvar[k]`` receives
    ``dcoef[k] * prod(w ** dexp[k])`` with ``w = z + offset``.
    """

    kind: int
    n: int
    offset: np.ndarray
    dcoef: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dexp: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.int64))
    dvar: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    eps: float = 0.0

    @classmethod
    def polynomial(cls, n, coeffs, exps):
        coeffs = np.asarray(coeffs, dtype=float)
        exps = np.asarray(exps, dtype=np.int64).reshape(len(coeffs), 2 * n)
        dcoef, dexp, dvar = [], [], []
        for j in range(2 * n):
            for c, e in zip(coeffs, exps):
                if e[j] > 0 and c != 0.0:
                    de = e.copy()
                    de[j] -= 1
                    dcoef.append(c * e[j])
                    dexp.append(de)
                    dvar.append(j)
        return cls(
            kind=KIND_POLY,
            n=n,
            offset=np.zeros(2 * n),
            dcoef=np.array(dcoef, dtype=float),
            dexp=np.array(dexp, dtype=np.int64).reshape(len(dcoef), 2 * n),
            dvar=np.array(dvar, dtype=np.int64),
        )

    @classmethod
    def hydrogen(cls, eps):
        return cls(
            kind=KIND_HYDROGEN,
            n=3,
            offset=np.zeros(6),
            dexp=np.zeros((0, 6), dtype=np.int64),
            eps=float(eps),
        )

    def shifted(self, offset):
        return KernelSpec(
            kind=self.kind,
            n=self.n,
            offset=self.offset + np.asarray(offset, dtype=float),
            dcoef=self.dcoef,
            dexp=self.dexp,
            dvar=self.dvar,
            eps=self.eps,
        )

    def args(self):
        return (
            self.kind,
            np.ascontiguousarray(self.dcoef, dtype=float),
            np.ascontiguousarray(self.dexp, dtype=np.int64),
            np.ascontiguousarray(self.dvar, dtype=np.int64),
            float(self.eps),
            np.ascontiguousarray(self.offset, dtype=float),
        )


def _law_args(n, rows, z0, c, d):
    rows = np.ascontiguousarray(np.asarray(rows, dtype=float).reshape(-1, 2 * n))
    if not 1 <= len(rows) <= 2 * n:
        raise ValueError("need between 1 and 2n feedback rows")
    d = np.ascontiguousarray(np.broadcast_to(np.asarray(d, dtype=float), rows.shape[:1]))
    return rows, np.ascontiguousarray(z0, dtype=float), float(c), d


def closed_loop_field_batch(spec, rows, z0, c, d, Z, backend=None):
    """Closed-loop vector field at each row of ``Z``.

    ``rows`` are the feedback covectors; with ``c = 0`` and ``d = 0`` this is
    the open-loop Hamiltonian field.
    """
    k = get_backend(backend)
    Z = np.ascontiguousarray(np.atleast_2d(Z), dtype=float)
    return k.closed_loop_field_batch(*spec.args(), *_law_args(spec.n, rows, z0, c, d), Z)


def rk4_batch(spec, rows, z0, c, d, Z, dt, nsteps, backend=None):
    """Advance every row of ``Z`` by ``nsteps`` classical RK4 steps of size ``dt``."""
    k = get_backend(backend)
    Z = np.array(np.atleast_2d(Z), dtype=float, order="C")
    return k.rk4_batch(
        *spec.args(), *_law_args(spec.n, rows, z0, c, d), Z, float(dt), int(nsteps)
    )
