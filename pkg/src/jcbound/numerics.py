"""Small dense linear algebra with fixed conventions.

Matrices here are at most a few dozen rows, so everything delegates to LAPACK
through numpy/scipy; this module pins down tolerances, ordering and the phase
convention of null-space vectors so results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

RANK_TOL = 1e-9


class NotHermitianError(ValueError):
    pass


def _scale(d: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(d), initial=0.0)))


def eig_hermitian(d: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix (or a stack of them)."""
    d = np.asarray(d)
    dev = np.max(np.abs(d - np.conj(np.swapaxes(d, -1, -2))), initial=0.0)
    if dev > tol * _scale(d):
        raise NotHermitianError(f"matrix deviates from Hermitian by {dev:.3e}")
    return np.linalg.eigvalsh(d)


def singular_values(d: np.ndarray) -> np.ndarray:
    """Descending singular values; ``min(rows, cols)`` of them."""
    return np.linalg.svd(np.asarray(d), compute_uv=False)


def _canonical_phase(vectors: np.ndarray) -> np.ndarray:
    # first component above 1e-12 becomes real positive
    out = vectors.copy()
    for k, v in enumerate(out):
        nz = np.flatnonzero(np.abs(v) > 1e-12)
        if nz.size:
            z = v[nz[0]]
            out[k] = v * (abs(z) / z)
    return out


@dataclass(frozen=True)
class KernelBasis:
    vectors: np.ndarray  # shape (k, dim), orthonormal rows
    tol: float

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]


def kernel_basis(d: np.ndarray, tol: float = RANK_TOL) -> KernelBasis:
    """Orthonormal basis of the right null space at ``tol * sigma_max``."""
    d = np.asarray(d, dtype=complex)
    _, s, vh = np.linalg.svd(d)
    cut = tol * (s[0] if s.size else 0.0)
    r = int(np.sum(s > cut))
    null = vh[r:].conj()
    return KernelBasis(_canonical_phase(null), tol)


def rank(d: np.ndarray, tol: float = RANK_TOL) -> int:
    s = singular_values(d)
    if not s.size:
        return 0
    return int(np.sum(s > tol * s[0]))


def principal_angles(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Principal angles between the spans of the rows of ``u`` and of ``v``."""
    return scipy.linalg.subspace_angles(np.asarray(u).T, np.asarray(v).T)


def span_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Largest principal angle; ``pi/2`` if the dimensions differ."""
    u = np.atleast_2d(u)
    v = np.atleast_2d(v)
    if u.shape[0] != v.shape[0]:
        return float(np.pi / 2)
    return float(np.max(principal_angles(u, v), initial=0.0))


def min_eigenvalue(d: np.ndarray) -> float:
    return float(eig_hermitian(d)[0])
