"""Entanglement criteria for symmetric states.

Each criterion has a closed form in ``(a, b, |c|)`` that broadcasts over
leading batch axes, and a dense-matrix oracle built from partial transposes,
realignments and LAPACK spectra. The closed forms are what the rest of the
package uses; the oracles exist so the two can be checked against each other.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any

import numpy as np

from .state import StructureError, SymmetricState, partial_transpose, require_valid

DETECTION_TOL = 1e-10
CM_TOL = 1e-12


class Verdict(str, enum.Enum):
    NPT_ENTANGLED = "NPT_ENTANGLED"
    PPT_UNDETECTED = "PPT_UNDETECTED"
    SEPARABLE_PROVEN = "SEPARABLE_PROVEN"


# closed forms on arrays: a, b have shape (..., N); c has shape (..., N-1)


def negativity_arrays(a, b, c) -> np.ndarray:
    """``-sum min(0, lambda_n)`` with ``lambda_n = p + q - sqrt((p-q)^2 + 4|c_n|^2)``.

    ``p = a_{n-1}``, ``q = b_n``. ``lambda_n`` is evaluated as
    ``4(pq - |c|^2) / (p + q + sqrt(...))`` to avoid cancellation. Note there is
    no factor 1/2, so a maximally entangled pair scores 1.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p, q = a[..., :-1], b[..., 1:]
    c2 = np.abs(np.asarray(c)) ** 2
    denom = p + q + np.sqrt((p - q) ** 2 + 4 * c2)
    safe = np.where(denom > 0, denom, 1.0)
    lam = np.where(denom > 0, 4 * (p * q - c2) / safe, 0.0)
    return np.sum(np.maximum(-lam, 0.0), axis=-1)


def gerjuoy_arrays(a, b, c) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    g = 2 * np.maximum(0.0, np.abs(np.asarray(c)) - np.sqrt(a[..., :-1] * b[..., 1:]))
    return np.sqrt(np.sum(g**2, axis=-1))


def _normalize_arrays(a, b, c):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    tr = a.sum(axis=-1) + b.sum(axis=-1)
    if np.any(~(tr > 0)):
        raise ValueError("state has zero (or non-positive) trace")
    t = tr[..., None]
    return a / t, b / t, np.abs(np.asarray(c)) / t


def ccnr_singular_values_arrays(a, b, c) -> np.ndarray:
    """The four nonzero-candidate singular values ``(|c|, |c|, x+, x-)`` of R(rho/tr rho).

    ``x+ x- = sqrt(|a|^2|b|^2 - (a.b)^2)`` is computed as a sum of squared
    2x2 minors (Lagrange identity), which keeps ``x-`` accurate when ``a``
    is nearly parallel to ``b``. Returned in descending order.
    """
    a, b, c = _normalize_arrays(a, b, c)
    A = np.sum(a * a, axis=-1)
    B = np.sum(b * b, axis=-1)
    D = np.sum(a * b, axis=-1)
    minors = a[..., :, None] * b[..., None, :] - a[..., None, :] * b[..., :, None]
    G = np.sqrt(0.5 * np.sum(minors**2, axis=(-2, -1)))
    xp = np.sqrt(0.5 * (A + B + np.sqrt((A - B) ** 2 + 4 * D**2)))
    xm = np.where(xp > 0, G / np.where(xp > 0, xp, 1.0), 0.0)
    cn = np.sqrt(np.sum(c * c, axis=-1))
    sv = np.stack([cn, cn, xp, xm], axis=-1)
    return -np.sort(-sv, axis=-1)


def ccnr_norm_arrays(a, b, c) -> np.ndarray:
    return np.sum(ccnr_singular_values_arrays(a, b, c), axis=-1)


def cm_arrays(a, b, c) -> tuple[np.ndarray, np.ndarray]:
    """``(lhs, rhs)`` of the covariance-matrix corollary on the normalized state."""
    a, b, c = _normalize_arrays(a, b, c)
    al0 = a.sum(axis=-1)
    al1 = b.sum(axis=-1)
    cn = np.sqrt(np.sum(c * c, axis=-1))
    diff = al1[..., None] * a - al0[..., None] * b
    norm = 2 * cn + np.sqrt(2.0) * np.sqrt(np.sum(diff * diff, axis=-1))
    lhs = norm**2
    rhs = (1 - al0**2 - al1**2) * (1 - np.sum((a + b) ** 2, axis=-1))
    return lhs, rhs


# dense oracles; accept stacks of matrices


def realign(d: np.ndarray) -> np.ndarray:
    """``R(A (x) B) = vec(A) vec(B)^T`` for a 2 x N bipartite matrix: shape (4, N^2)."""
    d = np.asarray(d)
    if d.ndim < 2 or d.shape[-1] != d.shape[-2] or d.shape[-1] % 2:
        raise StructureError(f"expected a 2N x 2N matrix, got shape {d.shape}")
    N = d.shape[-1] // 2
    lead = d.shape[:-2]
    t = d.reshape(lead + (2, N, 2, N))
    t = np.swapaxes(t, -3, -2)  # (i, j, n, m)
    return t.reshape(lead + (4, N * N))


def reduced_states(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = np.asarray(d)
    N = d.shape[-1] // 2
    t = d.reshape(d.shape[:-2] + (2, N, 2, N))
    rho_a = np.einsum("...injn->...ij", t)
    rho_b = np.einsum("...inim->...nm", t)
    return rho_a, rho_b


def _trace_normalize(d: np.ndarray) -> np.ndarray:
    tr = np.trace(d, axis1=-2, axis2=-1).real
    if np.any(~(tr > 0)):
        raise ValueError("matrix has non-positive trace")
    return d / tr[..., None, None]


def negativity_dense(d: np.ndarray) -> np.ndarray:
    """``2 * sum |negative eigenvalues of d^Gamma|`` (same scale as the closed form)."""
    ev = np.linalg.eigvalsh(partial_transpose(d))
    return 2 * np.sum(np.maximum(-ev, 0.0), axis=-1)


def ccnr_singular_values_dense(d: np.ndarray) -> np.ndarray:
    return np.linalg.svd(realign(_trace_normalize(np.asarray(d))), compute_uv=False)


def ccnr_norm_dense(d: np.ndarray) -> np.ndarray:
    return np.sum(ccnr_singular_values_dense(d), axis=-1)


def cm_dense(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rho = _trace_normalize(np.asarray(d, dtype=complex))
    ra, rb = reduced_states(rho)
    prod = np.einsum("...ij,...nm->...injm", ra, rb).reshape(rho.shape)
    norm = np.sum(np.linalg.svd(realign(rho - prod), compute_uv=False), axis=-1)
    pa = np.einsum("...ij,...ji->...", ra, ra).real
    pb = np.einsum("...ij,...ji->...", rb, rb).real
    return norm**2, (1 - pa) * (1 - pb)


# state-level API


def negativity(s: SymmetricState) -> float:
    require_valid(s)
    return float(negativity_arrays(s.a, s.b, s.c))


def gerjuoy_bound(s: SymmetricState) -> float:
    require_valid(s)
    return float(gerjuoy_arrays(s.a, s.b, s.c))


@dataclass(frozen=True)
class CCNRResult:
    norm: float
    singular_values: np.ndarray

    @property
    def detects(self) -> bool:
        return self.norm - 1.0 > DETECTION_TOL


def ccnr_norm(s: SymmetricState) -> CCNRResult:
    sv = ccnr_singular_values_arrays(s.a, s.b, s.c)
    return CCNRResult(float(sv.sum()), sv)


@dataclass(frozen=True)
class CMResult:
    lhs: float
    rhs: float
    violated: bool
    trace: float  # trace of the input, divided out before evaluation


def cm_corollary(s: SymmetricState) -> CMResult:
    lhs, rhs = cm_arrays(s.a, s.b, s.c)
    lhs, rhs = float(lhs), float(rhs)
    return CMResult(lhs, rhs, lhs > rhs + CM_TOL, s.trace)


@dataclass(frozen=True)
class CriteriaReport:
    negativity: float
    gerjuoy: float
    ccnr_norm: float
    ccnr_singular_values: np.ndarray
    cm_lhs: float
    cm_rhs: float
    cm_violated: bool
    verdict: Verdict

    @property
    def cm_gap(self) -> float:
        return self.cm_rhs - self.cm_lhs

    def to_dict(self) -> dict[str, Any]:
        return {
            "negativity": self.negativity,
            "gerjuoy": self.gerjuoy,
            "ccnr_norm": self.ccnr_norm,
            "ccnr_singular_values": self.ccnr_singular_values.tolist(),
            "cm_lhs": self.cm_lhs,
            "cm_rhs": self.cm_rhs,
            "cm_violated": self.cm_violated,
            "verdict": self.verdict.value,
        }


def verdict_for(negativity_value: float, N: int) -> Verdict:
    if negativity_value > DETECTION_TOL:
        return Verdict.NPT_ENTANGLED
    # 2x2 and 2x3: PPT implies separable
    if N <= 3:
        return Verdict.SEPARABLE_PROVEN
    return Verdict.PPT_UNDETECTED


def report(s: SymmetricState) -> CriteriaReport:
    require_valid(s)
    neg = float(negativity_arrays(s.a, s.b, s.c))
    cc = ccnr_norm(s)
    cm = cm_corollary(s)
    return CriteriaReport(
        negativity=neg,
        gerjuoy=float(gerjuoy_arrays(s.a, s.b, s.c)),
        ccnr_norm=cc.norm,
        ccnr_singular_values=cc.singular_values,
        cm_lhs=cm.lhs,
        cm_rhs=cm.rhs,
        cm_violated=cm.violated,
        verdict=verdict_for(neg, s.N),
    )
