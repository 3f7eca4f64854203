"""Reduction of PPT symmetric states to the filtered ``(x, y)`` normal form.

Pipeline: split the ladder wherever ``b_m = 0``, filter each piece with the
local qudit operator ``F_B = diag(b_n^{-1/2})`` so that the ``|1>`` block
becomes the identity, then peel off the diagonal excess ``sigma_s`` to leave a
PPT-saturated ``tau`` whose separability matches the original state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .state import SymmetricState, require_valid

PPT_TOL = 1e-12


@dataclass(frozen=True)
class Segment:
    """A sub-ladder ``[start, start + N)`` of the original state."""

    start: int
    state: SymmetricState

    @property
    def stop(self) -> int:
        return self.start + self.state.N


@dataclass(frozen=True)
class Split:
    segments: list[Segment]
    # (m, a_m): isolated separable terms a_m |0 m><0 m| at zero-b sites
    leftovers: list[tuple[int, float]] = field(default_factory=list)


def split_zero_b(s: SymmetricState) -> Split:
    """Cut the ladder at every site with ``b_m = 0``.

    ``b_m = 0`` forces ``c_{m+1} = 0`` by positivity and ``c_m = 0`` by PPT, so
    the state is a direct sum of two smaller symmetric states and the product
    term ``a_m |0 m><0 m|``. A nonzero coupling to such a site is refused.
    """
    require_valid(s)
    zeros = [m for m in range(s.N) if s.b[m] == 0]
    for m in zeros:
        if m >= 1 and s.c[m - 1] != 0:
            raise ValueError(f"b_{m} = 0 with c_{m} != 0: state is NPT, cannot split")
        if m + 1 < s.N and s.c[m] != 0:
            raise ValueError(f"b_{m} = 0 with c_{m + 1} != 0: positivity fails, cannot split")
    segments: list[Segment] = []
    leftovers: list[tuple[int, float]] = []
    start = 0
    for m in zeros + [s.N]:
        if m > start:
            segments.append(
                Segment(start, SymmetricState(s.a[start:m], s.b[start:m], s.c[start : m - 1]))
            )
        if m < s.N:
            leftovers.append((m, float(s.a[m])))
        start = m + 1
    return Split(segments, leftovers)


@dataclass(frozen=True)
class NormalFormSegment:
    start: int
    x: np.ndarray  # x_n = sqrt(a_n / b_n)
    y: np.ndarray  # y_n = |c_n| / sqrt(b_{n-1} b_n), n = 1..N-1
    b: np.ndarray  # filter weights, kept so the filter can be undone

    @property
    def N(self) -> int:
        return self.x.size

    def sigma_dense(self) -> np.ndarray:
        return _pattern_dense(self.x**2, np.ones(self.N), self.y)

    def unfilter(self) -> SymmetricState:
        """Apply ``F^{-1}``: recovers the gauge-fixed segment state."""
        a = self.x**2 * self.b
        c = self.y * np.sqrt(self.b[:-1] * self.b[1:])
        return SymmetricState(a, self.b, c)

    def to_dict(self) -> dict[str, Any]:
        return {
            "start": self.start,
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "b": self.b.tolist(),
        }


@dataclass(frozen=True)
class NormalForm:
    segments: list[NormalFormSegment]
    leftovers: list[tuple[int, float]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "segments": [seg.to_dict() for seg in self.segments],
            "leftovers": [{"index": m, "a": a} for m, a in self.leftovers],
        }


def _pattern_dense(zero_block: np.ndarray, one_block: np.ndarray, coh: np.ndarray) -> np.ndarray:
    N = zero_block.size
    d = np.zeros((2 * N, 2 * N))
    idx = np.arange(N)
    d[idx, idx] = zero_block
    d[N + idx, N + idx] = one_block
    n = np.arange(1, N)
    d[n, N + n - 1] = coh
    d[N + n - 1, n] = coh
    return d


def filter_segment(s: SymmetricState, start: int = 0) -> NormalFormSegment:
    """Local filter ``(I (x) F_B) rho (I (x) F_B)^dagger`` on a segment with all ``b_n > 0``.

    Coherence phases are dropped (equivalent to gauge fixing first).
    """
    if np.any(s.b <= 0):
        raise ValueError("filter needs every b_n > 0; split the state first")
    x = np.sqrt(s.a / s.b)
    y = np.abs(s.c) / np.sqrt(s.b[:-1] * s.b[1:])
    return NormalFormSegment(start, x, y, s.b.copy())


def filter(s: SymmetricState) -> NormalForm:  # noqa: A001 - mirrors the operation name
    """Normal form of a state whose populations ``b_n`` are all positive."""
    require_valid(s)
    return NormalForm([filter_segment(s)])


def normal_form(s: SymmetricState) -> NormalForm:
    """Split at zero ``b`` sites, then filter every segment."""
    sp = split_zero_b(s)
    return NormalForm([filter_segment(seg.state, seg.start) for seg in sp.segments], sp.leftovers)


def _padded(y: np.ndarray) -> np.ndarray:
    # boundary convention y_0 := y_1, y_N := y_{N-1}
    if y.size == 0:
        return np.zeros(2)
    return np.concatenate([[y[0]], y, [y[-1]]])


def tau_diagonal(y: np.ndarray) -> np.ndarray:
    """``max(y_n, y_{n+1})^2`` for n = 0..N-1."""
    yp = _padded(np.asarray(y, dtype=float))
    return np.maximum(yp[:-1], yp[1:]) ** 2


@dataclass(frozen=True)
class PPTCheck:
    ok: bool
    # min(x_i, x_{i-1}) - y_i, one array per segment
    margins: list[np.ndarray]


def ppt_conditions(nf: NormalForm | NormalFormSegment, tol: float = PPT_TOL) -> PPTCheck:
    """Positivity and PPT in normal form: ``y_i <= min(x_i, x_{i-1})`` for every i."""
    segs = [nf] if isinstance(nf, NormalFormSegment) else nf.segments
    margins = [np.minimum(seg.x[1:], seg.x[:-1]) - seg.y for seg in segs]
    ok = all(bool(np.all(m >= -tol)) for m in margins)
    return PPTCheck(ok, margins)


@dataclass(frozen=True)
class TauState:
    y: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=float).reshape(-1)
        if np.any(y < 0):
            raise ValueError("tau parameters y_n must be nonnegative")
        object.__setattr__(self, "y", y)

    @property
    def N(self) -> int:
        return self.y.size + 1

    @property
    def monotone(self) -> bool:
        """True on the branch ``y_1 <= y_2 <= ... <= y_{N-1}``."""
        return bool(np.all(np.diff(self.y) >= 0))


def tau_dense(t: TauState | np.ndarray) -> np.ndarray:
    """Dense ``tau``: ``|0>`` block ``max(y_n, y_{n+1})^2``, ``|1>`` block identity, coherences ``y_n``."""
    if not isinstance(t, TauState):
        t = TauState(t)
    return _pattern_dense(tau_diagonal(t.y), np.ones(t.N), t.y)


@dataclass(frozen=True)
class Decomposition:
    sigma_s: np.ndarray  # diagonal weights on the |0> block
    tau: TauState

    def sigma_s_dense(self) -> np.ndarray:
        N = self.sigma_s.size
        return _pattern_dense(self.sigma_s, np.zeros(N), np.zeros(N - 1))


def decompose(seg: NormalFormSegment, tol: float = PPT_TOL) -> Decomposition:
    """Split ``sigma = sigma_s + tau``; refuses non-PPT input instead of clamping."""
    check = ppt_conditions(seg, tol)
    if not check.ok:
        raise ValueError(f"normal form is not PPT (worst margin {check.margins[0].min():.3e})")
    excess = seg.x**2 - tau_diagonal(seg.y)
    if np.any(excess < -tol):
        raise ValueError("sigma_s would have a negative entry")
    return Decomposition(np.maximum(excess, 0.0), TauState(seg.y))
