"""Range-criterion certificates.

A separable state ``rho`` must contain a product vector ``|e f>`` in its range
with ``|e* f>`` in the range of its partial transpose. For the N = 4 family
``tau(y1, y2, y3)`` the kernels are known in closed form, so the search for
such a vector reduces to a few inner products. :func:`range_search` does the
same job numerically for any small ``2 x N`` matrix by scanning the qubit
factor over the Riemann sphere.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .normal_form import TauState, tau_dense
from .numerics import kernel_basis, min_eigenvalue, rank
from .state import StructureError, partial_transpose

RESIDUAL_TOL = 1e-12
OBSTRUCTION_TOL = 1e-9
PSD_TOL = 1e-12


class CertVerdict(str, enum.Enum):
    BOUND_ENTANGLED_EDGE = "BOUND_ENTANGLED_EDGE"
    BOUND_ENTANGLED = "BOUND_ENTANGLED"
    NPT = "NPT"
    SEPARABLE_CONSTRUCTED = "SEPARABLE_CONSTRUCTED"
    INCONCLUSIVE = "INCONCLUSIVE"


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return obj


@dataclass(frozen=True)
class ProductVector:
    e: np.ndarray  # qubit factor, length 2
    f: np.ndarray  # qudit factor, length N
    theta: float | None = None

    def __post_init__(self):
        e = np.asarray(self.e, dtype=complex)
        f = np.asarray(self.f, dtype=complex)
        if not np.any(e) or not np.any(f):
            raise ValueError("product vector factors must be nonzero")
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "f", f)

    def vector(self) -> np.ndarray:
        return np.kron(self.e, self.f)

    def conj_first(self) -> np.ndarray:
        """``|e* f>``: complex conjugate on the qubit only."""
        return np.kron(np.conj(self.e), self.f)

    @property
    def ratio(self) -> complex:
        """``z = e_1 / e_0`` (infinite for ``e = |1>``)."""
        return complex(self.e[1] / self.e[0]) if self.e[0] != 0 else complex(math.inf)

    def to_dict(self) -> dict[str, Any]:
        return {"e": _jsonable(self.e), "f": _jsonable(self.f), "theta": self.theta}


@dataclass
class Certificate:
    verdict: CertVerdict
    ranks: tuple[int, int] | None = None
    obstruction: complex | None = None
    witnesses: dict[str, Any] = field(default_factory=dict)
    details: dict[str, Any] = field(default_factory=dict)
    product_vectors: list[ProductVector] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "ranks": list(self.ranks) if self.ranks is not None else None,
            "obstruction": _jsonable(self.obstruction),
            "witnesses": _jsonable(self.witnesses),
            "details": _jsonable(self.details),
            "product_vectors": [p.to_dict() for p in self.product_vectors],
        }


def _ket(N: int, qubit: int, n: int) -> np.ndarray:
    v = np.zeros(2 * N)
    v[qubit * N + n] = 1.0
    return v


def _check_y(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (3,):
        raise ValueError("the N = 4 family takes exactly three parameters")
    if not (0 < y[0] <= y[1] <= y[2]):
        raise ValueError(f"need 0 < y1 <= y2 <= y3, got {y.tolist()}")
    return y


def phi_vectors(y) -> np.ndarray:
    """``phi_n = -|0,n-1> + y_n |1,n>``, n = 1..3 (kernel of tau^Gamma)."""
    y = np.asarray(y, dtype=float)
    return np.array([-_ket(4, 0, n - 1) + y[n - 1] * _ket(4, 1, n) for n in (1, 2, 3)])


def chi_vector(y, n: int) -> np.ndarray:
    """``chi_n = -|0,n> + y_n |1,n-1>``."""
    y = np.asarray(y, dtype=float)
    return -_ket(4, 0, n) + y[n - 1] * _ket(4, 1, n - 1)


def analytic_kernels(y, saturated: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form kernels ``(K(tau^Gamma), K(tau))`` for the monotone N = 4 family.

    ``K(tau^Gamma)`` is spanned by the three ``phi_n``; ``K(tau)`` by ``chi_3``,
    plus ``chi_1`` when ``y1 = y2`` (``saturated``). Vectors are unnormalized.
    """
    y = _check_y(y)
    if saturated and y[0] != y[1]:
        raise ValueError("saturated kernels need y1 == y2")
    ker_tau = [chi_vector(y, 3)]
    if saturated:
        ker_tau.append(chi_vector(y, 1))
    return phi_vectors(y), np.array(ker_tau)


def unique_separable_vector(y, theta: float) -> ProductVector:
    """``(|0> + e^{i th}/y3 |1>) (x) (y1 y2/y3, y2 e^{i th}, y3 e^{2i th}, y3 e^{3i th})``.

    Orthogonal to ``chi_3``, and after conjugating the qubit, to every ``phi_n``.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (3,):
        raise ValueError("need three parameters")
    y1, y2, y3 = y
    if y3 == 0:
        raise ValueError("y3 must be nonzero")
    w = np.exp(1j * theta)
    e = np.array([1.0, w / y3])
    f = np.array([y1 * y2 / y3, y2 * w, y3 * w**2, y3 * w**3])
    return ProductVector(e, f, float(theta))


def tau_n4(y2: float, y3: float) -> np.ndarray:
    """``tau`` with ``y1 = y2``: the saturated member of the N = 4 family."""
    return tau_dense(TauState([y2, y2, y3]))


def _psd_scale(d: np.ndarray) -> float:
    return PSD_TOL * max(1.0, float(np.max(np.abs(d))))


def certify_n4(y2: float, y3: float, n_theta: int = 16) -> Certificate:
    """Edge-state certificate for ``tau(y2, y2, y3)``.

    The only product vectors compatible with ``chi_3`` and the ``phi_n`` are the
    circle ``unique_separable_vector(y, theta)`` and the isolated vector
    ``|1>|0>``. Both must also be orthogonal to ``chi_1``; the obstruction is
    the inner product ``<chi_1|e f>_theta``, whose magnitude does not depend on
    ``theta``.
    """
    if not (y2 > 0 and y3 > 0):
        raise ValueError("y2 and y3 must be positive")
    tau = tau_n4(y2, y3)
    tau_pt = partial_transpose(tau, "A")
    min_pt = min_eigenvalue(tau_pt)
    min_tau = min_eigenvalue(tau)
    ranks = (rank(tau), rank(tau_pt))
    details: dict[str, Any] = {
        "y2": y2,
        "y3": y3,
        "min_eig_tau": min_tau,
        "min_eig_tau_pt": min_pt,
    }
    if min_pt < -_psd_scale(tau):
        return Certificate(CertVerdict.NPT, ranks, details=details)
    if y2 > y3:
        details["note"] = "non-monotone branch y2 > y3 is not covered"
        return Certificate(CertVerdict.INCONCLUSIVE, ranks, details=details)

    y = np.array([y2, y2, y3])
    ker_pt, ker_tau = analytic_kernels(y, saturated=True)
    residual = max(
        float(np.max(np.linalg.norm(ker_pt @ tau_pt.T, axis=1))),
        float(np.max(np.linalg.norm(ker_tau @ tau.T, axis=1))),
    )
    chi1 = ker_tau[1]
    thetas = 2 * np.pi * np.arange(n_theta) / n_theta
    overlaps = np.array([np.vdot(chi1, unique_separable_vector(y, th).vector()) for th in thetas])
    mags = np.abs(overlaps)
    pole = ProductVector([0.0, 1.0], [1.0, 0.0, 0.0, 0.0])
    pole_overlap = np.vdot(chi1, pole.vector())
    details.update(
        kernel_residual=residual,
        obstruction_spread=float(mags.max() - mags.min()),
        pole_obstruction=pole_overlap,
    )
    witnesses = {"kernel_tau": ker_tau, "kernel_tau_pt": ker_pt, "chi1": chi1}
    edge = mags.min() > OBSTRUCTION_TOL and abs(pole_overlap) > OBSTRUCTION_TOL
    verdict = CertVerdict.BOUND_ENTANGLED_EDGE if edge else CertVerdict.INCONCLUSIVE
    return Certificate(verdict, ranks, complex(overlaps[0]), witnesses, details)


# generic search


ARG_POINTS = 720
MAG_POINTS = 50
MAG_RANGE = (1e-3, 1e3)
ROOT_TOL = 1e-8
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class _ConstraintSystem:
    """Rows of ``M(e)``: ``<k|e f> = 0`` for k in K(tau), ``<kappa|e* f> = 0`` for kappa in K(tau_pt)."""

    def __init__(self, ker: np.ndarray, ker_pt: np.ndarray, N: int):
        self.N = N
        k = np.conj(ker).reshape(-1, 2, N)
        q = np.conj(ker_pt).reshape(-1, 2, N)
        self.k0, self.k1 = k[:, 0], k[:, 1]
        self.q0, self.q1 = q[:, 0], q[:, 1]
        self.rows = k.shape[0] + q.shape[0]
        h = lambda u, v: np.conj(u).T @ v  # noqa: E731
        self.S0 = h(self.k0, self.k0) + h(self.q0, self.q0)
        self.S1 = h(self.k1, self.k1) + h(self.q1, self.q1)
        self.X = h(self.k0, self.k1) + h(self.q1, self.q0)

    def matrices(self, e0: np.ndarray, e1: np.ndarray) -> np.ndarray:
        e0 = np.asarray(e0)[..., None, None]
        e1 = np.asarray(e1)[..., None, None]
        top = e0 * self.k0 + e1 * self.k1
        bottom = np.conj(e0) * self.q0 + np.conj(e1) * self.q1
        return np.concatenate([np.broadcast_to(top, e1.shape[:-2] + top.shape[-2:]),
                               np.broadcast_to(bottom, e1.shape[:-2] + bottom.shape[-2:])], axis=-2)

    def rank_indicator(self, e0: np.ndarray, e1: np.ndarray) -> np.ndarray:
        """``det(G) / (tr G / N)^N`` with ``G = M^H M``; in [0, 1], zero iff M drops rank.

        ``G`` is a real-coefficient combination of four fixed matrices, so the
        whole batch is one matrix product. ``e0`` must be real.
        """
        coef = np.stack([e0 * e0, np.abs(e1) ** 2, e0 * e1.real, e0 * e1.imag], axis=-1)
        Xh = self.X.conj().T
        basis = np.stack([self.S0, self.S1, self.X + Xh, 1j * (self.X - Xh)])
        G = (coef @ basis.reshape(4, -1)).reshape(-1, self.N, self.N)
        tr = coef @ np.trace(basis, axis1=-2, axis2=-1).real / self.N
        det = np.linalg.det(G).real
        return det / np.where(tr > 0, tr, 1.0) ** self.N

    def sigma_ratio(self, e0, e1) -> np.ndarray:
        s = np.linalg.svd(self.matrices(e0, e1), compute_uv=False)
        return s[..., -1] / np.where(s[..., 0] > 0, s[..., 0], 1.0)

    def null_vector(self, e0: complex, e1: complex) -> tuple[float, np.ndarray]:
        M = self.matrices(np.array(e0), np.array(e1))
        _, s, vh = np.linalg.svd(M)
        return float(s[-1] / s[0]) if s[0] > 0 else 0.0, np.conj(vh[-1])


def _qubit_factor(u: np.ndarray, th: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mag = 10.0**u
    e0 = 1.0 / np.sqrt(1.0 + mag**2)
    return e0, mag * np.exp(1j * th) * e0


def _golden_batch(fun, lo: np.ndarray, hi: np.ndarray, x0: np.ndarray, f0: np.ndarray, iters: int):
    """Vectorized golden-section minimization; never returns worse than ``(x0, f0)``."""
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = fun(c), fun(d)
    best_x, best_f = x0.copy(), f0.copy()
    for _ in range(iters):
        for x, fx in ((c, fc), (d, fd)):
            better = fx < best_f
            best_x = np.where(better, x, best_x)
            best_f = np.where(better, fx, best_f)
        left = fc < fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new = np.where(left, hi - _GOLDEN * (hi - lo), lo + _GOLDEN * (hi - lo))
        fnew = fun(new)
        c, d, fc, fd = (
            np.where(left, new, d),
            np.where(left, c, new),
            np.where(left, fnew, fd),
            np.where(left, fc, fnew),
        )
    for x, fx in ((c, fc), (d, fd)):
        better = fx < best_f
        best_x = np.where(better, x, best_x)
        best_f = np.where(better, fx, best_f)
    return best_x, best_f


def _local_minima(vals: np.ndarray) -> np.ndarray:
    """Interior grid points no larger than their 8 neighbours (periodic along axis 1).

    The first and last magnitude rows are dropped: the indicator decays
    towards a pole whenever that pole is a solution, and poles are checked
    directly.
    """
    padded = np.pad(vals, ((1, 1), (0, 0)), constant_values=np.inf)
    mask = np.ones(vals.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            shifted = np.roll(padded, dj, axis=1)[1 + di : 1 + di + vals.shape[0]]
            mask &= vals <= shifted
    mask[0] = mask[-1] = False
    return mask


def range_search(
    tau: np.ndarray,
    tau_pt: np.ndarray,
    *,
    n_candidates: int = 4,
    rounds: int = 6,
    iters: int = 40,
    ppt_checked: bool | None = None,
) -> Certificate:
    """Search for ``|e f>`` with ``|e f>`` in R(tau) and ``|e* f>`` in R(tau_pt).

    ``tau_pt`` is the partial transpose on the qubit (for real matrices the two
    partial transposes coincide). The qubit factor is ``(1, z)`` normalized,
    scanned over 720 phases x 50 log-spaced magnitudes in [1e-3, 1e3] plus the
    poles ``z = 0`` and ``z = inf``; for each z the constraints are linear in
    ``f``. Grid minima of a rank-drop indicator are polished by golden-section
    coordinate search on the smallest singular value of the constraint matrix.
    A point is a solution when that value is below ``1e-8`` of the largest.
    """
    tau = np.asarray(tau)
    tau_pt = np.asarray(tau_pt)
    if tau.shape != tau_pt.shape or tau.ndim != 2 or tau.shape[0] != tau.shape[1]:
        raise StructureError("tau and tau_pt must be square matrices of equal shape")
    if tau.shape[0] % 2:
        raise StructureError("dimension must be 2N")
    N = tau.shape[0] // 2

    ker = kernel_basis(tau).vectors
    ker_pt = kernel_basis(tau_pt).vectors
    sys_ = _ConstraintSystem(ker, ker_pt, N)
    if ppt_checked is None:
        ppt_checked = min_eigenvalue(tau_pt) >= -_psd_scale(tau_pt)
    details: dict[str, Any] = {
        "kernel_dims": (ker.shape[0], ker_pt.shape[0]),
        "ppt": bool(ppt_checked),
    }
    ranks = (2 * N - ker.shape[0], 2 * N - ker_pt.shape[0])
    # a PPT 2 x N state of rank N is separable; flagged, not decomposed
    details["rank_separable"] = bool(ppt_checked and ranks[0] <= N)

    found: list[ProductVector] = []
    if sys_.rows < N:
        # fewer constraints than unknowns: every qubit factor works
        _, f = sys_.null_vector(1.0, 0.0)
        found.append(ProductVector([1.0, 0.0], f))
        details.update(search="FOUND", min_sigma_ratio=0.0)
    else:
        u_grid = np.linspace(math.log10(MAG_RANGE[0]), math.log10(MAG_RANGE[1]), MAG_POINTS)
        th_grid = 2 * np.pi * np.arange(ARG_POINTS) / ARG_POINTS
        U, TH = np.meshgrid(u_grid, th_grid, indexing="ij")
        e0, e1 = _qubit_factor(U.ravel(), TH.ravel())
        ind = sys_.rank_indicator(e0, e1).reshape(U.shape)
        order = np.argsort(ind[_local_minima(ind)], kind="stable")
        cand = np.argwhere(_local_minima(ind))[order][:n_candidates]
        u = u_grid[cand[:, 0]]
        th = th_grid[cand[:, 1]]
        du = u_grid[1] - u_grid[0]
        dth = th_grid[1] - th_grid[0]

        def at(u_, th_):
            return sys_.sigma_ratio(*_qubit_factor(u_, th_))

        val = at(u, th)
        for _ in range(rounds):
            prev = val
            u, val = _golden_batch(lambda x: at(x, th), u - du, u + du, u, val, iters)
            th, val = _golden_batch(lambda x: at(u, x), th - dth, th + dth, th, val, iters)
            if np.all((val <= ROOT_TOL) | (val > 0.99 * prev)):
                break

        points = [(complex(a), complex(b), float(t)) for a, b, t in zip(*_qubit_factor(u, th), th)]
        points += [(1.0 + 0j, 0j, None), (0j, 1.0 + 0j, None)]
        best = math.inf
        for a, b, t in points:
            ratio, f = sys_.null_vector(a, b)
            best = min(best, ratio)
            if ratio <= ROOT_TOL:
                pv = ProductVector([a, b], f, None if t is None else float(np.mod(t, 2 * np.pi)))
                if not any(_same_direction(pv, q) for q in found):
                    found.append(pv)
        details.update(search="FOUND" if found else "NONE_FOUND", min_sigma_ratio=best)

    if not ppt_checked:
        verdict = CertVerdict.NPT
    elif found:
        verdict = CertVerdict.INCONCLUSIVE
    else:
        verdict = CertVerdict.BOUND_ENTANGLED_EDGE
    return Certificate(
        verdict,
        ranks,
        witnesses={"kernel_tau": ker, "kernel_tau_pt": ker_pt},
        details=details,
        product_vectors=found,
    )


def _same_direction(p: ProductVector, q: ProductVector, tol: float = 1e-6) -> bool:
    u, v = p.vector(), q.vector()
    return abs(abs(np.vdot(u, v)) - np.linalg.norm(u) * np.linalg.norm(v)) <= tol * np.linalg.norm(u) * np.linalg.norm(v)
