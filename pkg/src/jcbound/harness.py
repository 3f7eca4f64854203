"""Random states, Monte-Carlo studies, family scans and convex-hull decompositions.

Sampling measure (documented because nothing canonical exists): populations
``(a, b)`` are uniform on the ``2N``-simplex via sorted-uniform spacings;
``|c_n|`` is uniform on ``[0, sqrt(a_n b_{n-1})]`` given the populations and
its phase is uniform. ``ppt_only`` rejects samples with any
``|c_n|^2 > a_{n-1} b_n``.

Streams are cut into fixed chunks, each drawn from its own child of the
seed's ``SeedSequence``, so output does not depend on the number of workers.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterator, Sequence

import numpy as np

from .criteria import (
    CM_TOL,
    DETECTION_TOL,
    Verdict,
    ccnr_norm_arrays,
    cm_arrays,
    gerjuoy_arrays,
    negativity_arrays,
)
from .normal_form import tau_diagonal, tau_dense
from .numerics import rank
from .range_cert import CertVerdict, ProductVector, certify_n4, range_search
from .state import SymmetricState, partial_transpose, state_to_dict, symmetry_project

CHUNK = 4096
WORKERS_ENV = "JCBOUND_WORKERS"
MAX_COUNTEREXAMPLES = 100


@dataclass(frozen=True)
class SampleConfig:
    N: int = 4
    count: int = 100_000
    seed: int = 0
    normalized: bool = True
    ppt_only: bool = False

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if self.N < 2:
            raise ValueError("N must be at least 2")


def _chunk(cfg: SampleConfig, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(k,)))
    N = cfg.N
    cuts = np.sort(rng.random((CHUNK, 2 * N - 1)), axis=1)
    pops = np.diff(cuts, axis=1, prepend=0.0, append=1.0)
    if not cfg.normalized:
        pops = pops * rng.uniform(0.5, 2.0, size=(CHUNK, 1))
    a, b = pops[:, :N], pops[:, N:]
    mag = np.sqrt(a[:, 1:] * b[:, :-1]) * rng.random((CHUNK, N - 1))
    c = mag * np.exp(2j * np.pi * rng.random((CHUNK, N - 1)))
    if cfg.ppt_only:
        keep = np.all(np.abs(c) ** 2 <= a[:, :-1] * b[:, 1:], axis=1)
        a, b, c = a[keep], b[keep], c[keep]
    return a, b, c


def sample_arrays(cfg: SampleConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The first ``cfg.count`` samples as stacked arrays ``(count, N)``, ``(count, N)``, ``(count, N-1)``."""
    parts = []
    got = 0
    k = 0
    while got < cfg.count:
        part = _chunk(cfg, k)
        parts.append(part)
        got += part[0].shape[0]
        k += 1
    a, b, c = (np.concatenate([p[i] for p in parts])[: cfg.count] for i in range(3))
    return a, b, c


def sample_states(cfg: SampleConfig) -> Iterator[SymmetricState]:
    a, b, c = sample_arrays(cfg)
    for i in range(cfg.count):
        yield SymmetricState(a[i], b[i], c[i])


@dataclass
class StudyReport:
    N: int
    total: int
    seed: int
    counts: dict[str, int]
    max_ccnr_ppt: float  # largest CCNR norm seen on a PPT sample
    max_cm_margin_ppt: float  # largest lhs - rhs of the CM inequality on a PPT sample
    ccnr_violations: int  # PPT samples with CCNR norm > 1
    cm_violations: int  # PPT samples violating the CM inequality
    ordering_violations: int  # samples with negativity < max(ccnr - 1, 0)
    gerjuoy_mismatches: int  # detection by Gerjuoy bound differs from negativity
    counterexamples: list[dict[str, Any]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.ccnr_violations or self.cm_violations or self.ordering_violations or self.gerjuoy_mismatches)

    def to_dict(self) -> dict[str, Any]:
        return {
            "N": self.N,
            "total": self.total,
            "seed": self.seed,
            "counts": dict(self.counts),
            "max_ccnr_ppt": self.max_ccnr_ppt,
            "max_cm_margin_ppt": self.max_cm_margin_ppt,
            "ccnr_violations": self.ccnr_violations,
            "cm_violations": self.cm_violations,
            "ordering_violations": self.ordering_violations,
            "gerjuoy_mismatches": self.gerjuoy_mismatches,
            "counterexamples": self.counterexamples,
            "ok": self.ok,
        }


def _block_stats(args) -> dict[str, Any]:
    a, b, c, N = args
    neg = negativity_arrays(a, b, c)
    ccnr = ccnr_norm_arrays(a, b, c)
    lhs, rhs = cm_arrays(a, b, c)
    ger = gerjuoy_arrays(a, b, c)
    npt = neg > DETECTION_TOL
    ppt = ~npt
    bad_ccnr = ppt & (ccnr - 1.0 > DETECTION_TOL)
    bad_cm = ppt & (lhs > rhs + CM_TOL)
    bad_order = neg < np.maximum(ccnr - 1.0, 0.0) - DETECTION_TOL
    bad_ger = (ger > DETECTION_TOL) != npt
    bad = np.flatnonzero(bad_ccnr | bad_cm | bad_order | bad_ger)[:MAX_COUNTEREXAMPLES]
    sep = int(ppt.sum()) if N <= 3 else 0
    return {
        "counts": {
            Verdict.NPT_ENTANGLED.value: int(npt.sum()),
            Verdict.SEPARABLE_PROVEN.value: sep,
            Verdict.PPT_UNDETECTED.value: int(ppt.sum()) - sep,
        },
        "max_ccnr_ppt": float(ccnr[ppt].max(initial=-math.inf)),
        "max_cm_margin_ppt": float((lhs - rhs)[ppt].max(initial=-math.inf)),
        "ccnr_violations": int(bad_ccnr.sum()),
        "cm_violations": int(bad_cm.sum()),
        "ordering_violations": int(bad_order.sum()),
        "gerjuoy_mismatches": int(bad_ger.sum()),
        "counterexamples": [state_to_dict(SymmetricState(a[i], b[i], c[i])) for i in bad],
    }


def _merge(stats: Sequence[dict[str, Any]], cfg: SampleConfig) -> StudyReport:
    counts = {v.value: 0 for v in Verdict}
    for st in stats:
        for k, v in st["counts"].items():
            counts[k] += v
    return StudyReport(
        N=cfg.N,
        total=sum(counts.values()),
        seed=cfg.seed,
        counts=counts,
        max_ccnr_ppt=max(st["max_ccnr_ppt"] for st in stats),
        max_cm_margin_ppt=max(st["max_cm_margin_ppt"] for st in stats),
        ccnr_violations=sum(st["ccnr_violations"] for st in stats),
        cm_violations=sum(st["cm_violations"] for st in stats),
        ordering_violations=sum(st["ordering_violations"] for st in stats),
        gerjuoy_mismatches=sum(st["gerjuoy_mismatches"] for st in stats),
        counterexamples=[ce for st in stats for ce in st["counterexamples"]][:MAX_COUNTEREXAMPLES],
    )


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def monte_carlo_study(cfg: SampleConfig, workers: int | None = None) -> StudyReport:
    """Evaluate every criterion on ``cfg.count`` samples and collect violations.

    Checked on every sample: negativity >= max(ccnr - 1, 0) and Gerjuoy/negativity
    detection agreement. Checked on PPT samples: ccnr <= 1 and the CM inequality.
    """
    a, b, c = sample_arrays(cfg)
    blocks = [
        (a[i : i + CHUNK], b[i : i + CHUNK], c[i : i + CHUNK], cfg.N) for i in range(0, cfg.count, CHUNK)
    ]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            stats = list(ex.map(_block_stats, blocks))
    else:
        stats = [_block_stats(blk) for blk in blocks]
    return _merge(stats, cfg)


# N = 4 family scan

FAMILY_COLUMNS = [
    "y2",
    "y3",
    "negativity",
    "ccnr_norm",
    "cm_lhs",
    "cm_rhs",
    "cm_violated",
    "rank_tau",
    "rank_tau_pt",
    "obstruction",
    "verdict",
    "search_verdict",
]


@dataclass
class FamilyScan:
    rows: list[dict[str, Any]]
    failures: list[str]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, FAMILY_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow({k: ("" if row[k] is None else row[k]) for k in FAMILY_COLUMNS})
        return buf.getvalue()


def tau_state(y) -> SymmetricState:
    y = np.asarray(y, dtype=float)
    return SymmetricState(tau_diagonal(y), np.ones(y.size + 1), y)


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    k0 = max(1, math.ceil(lo / step - 1e-9))
    k1 = math.floor(hi / step + 1e-9)
    return np.round(np.arange(k0, k1 + 1) * step, 12)


def grid_scan_family(
    y2_range: tuple[float, float] = (0.0, 10.0),
    y3_range: tuple[float, float] = (0.0, 10.0),
    step: float = 0.1,
    search: bool = False,
) -> FamilyScan:
    """Scan ``tau(y2, y2, y3)`` over ``0 < y2 <= y3`` on a regular grid."""
    if not step > 0:
        raise ValueError("step must be positive")
    rows, failures = [], []
    for y2 in _grid(*y2_range, step):
        for y3 in _grid(*y3_range, step):
            if y2 > y3:
                continue
            s = tau_state([y2, y2, y3]).normalized()
            neg = float(negativity_arrays(s.a, s.b, s.c))
            ccnr = float(ccnr_norm_arrays(s.a, s.b, s.c))
            lhs, rhs = (float(v) for v in cm_arrays(s.a, s.b, s.c))
            cert = certify_n4(float(y2), float(y3))
            row = {
                "y2": float(y2),
                "y3": float(y3),
                "negativity": neg,
                "ccnr_norm": ccnr,
                "cm_lhs": lhs,
                "cm_rhs": rhs,
                "cm_violated": lhs > rhs + CM_TOL,
                "rank_tau": cert.ranks[0],
                "rank_tau_pt": cert.ranks[1],
                "obstruction": abs(cert.obstruction) if cert.obstruction is not None else None,
                "verdict": cert.verdict.value,
                "search_verdict": None,
            }
            where = f"(y2={y2}, y3={y3})"
            if neg > 1e-12:
                failures.append(f"{where}: not PPT, negativity {neg:.3e}")
            if row["cm_violated"]:
                failures.append(f"{where}: CM inequality violated")
            if y2 < y3 and cert.verdict != CertVerdict.BOUND_ENTANGLED_EDGE:
                failures.append(f"{where}: certificate {cert.verdict.value}")
            if search:
                tau = tau_dense([y2, y2, y3])
                rs = range_search(tau, partial_transpose(tau, "A"))
                row["search_verdict"] = rs.verdict.value
                if y2 < y3 and rs.verdict != cert.verdict:
                    failures.append(f"{where}: search gives {rs.verdict.value}")
            rows.append(row)
    return FamilyScan(rows, failures)


# convex hulls for N = 2, 3


@dataclass
class HullDecomposition:
    N: int
    y: np.ndarray
    branch: str
    terms: list[tuple[float, ProductVector]]  # (weight, vector), weights >= 0
    residual_weight: float
    residual_index: tuple[int, int] | None  # (qubit, photon) of the leftover product term
    reconstruction_error: float
    projection_error: float  # |P(|gh><gh|) - (tau - residual)|

    def dense(self) -> np.ndarray:
        dim = 2 * self.N
        out = np.zeros((dim, dim), dtype=complex)
        for w, pv in self.terms:
            v = pv.vector()
            out += w * np.outer(v, v.conj())
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "N": self.N,
            "y": self.y.tolist(),
            "branch": self.branch,
            "terms": [{"weight": w, **pv.to_dict()} for w, pv in self.terms],
            "residual_weight": self.residual_weight,
            "residual_index": list(self.residual_index) if self.residual_index else None,
            "reconstruction_error": self.reconstruction_error,
            "projection_error": self.projection_error,
        }


def hull_product_vector(y) -> tuple[ProductVector, str, float, tuple[int, int] | None]:
    """Product vector whose symmetric projection sits under ``tau``, and the leftover.

    Returns ``(|gh>, branch, residual weight, (qubit, photon) of the residual)``.
    """
    y = np.asarray(y, dtype=float)
    if y.size == 1:
        (y1,) = y
        return ProductVector([1.0, 1 / y1], [y1, y1]), "N=2", 0.0, None
    y1, y2 = y
    if y1 >= y2:
        pv = ProductVector([1.0, 1 / y1], [y1, y1, y2])
        return pv, "y1>=y2", 1 - (y2 / y1) ** 2, (1, 2)
    pv = ProductVector([1.0, 1 / y2], [y1, y2, y2])
    return pv, "y2>y1", 1 - (y1 / y2) ** 2, (1, 0)


def phase_rotations(pv: ProductVector, N: int) -> list[ProductVector]:
    """The ``2N`` product vectors ``exp(i pi k Pi / N) |gh>`` averaged by the symmetric projector."""
    out = []
    for k in range(2 * N):
        w = np.exp(1j * np.pi * k / N)
        out.append(ProductVector(pv.e * np.array([1.0, w]), pv.f * w ** np.arange(N)))
    return out


def hull_construct(N: int, y) -> HullDecomposition:
    """Explicit separable decomposition of the PPT-saturated ``tau`` for N = 2 or 3."""
    if N not in (2, 3):
        raise ValueError("hull_construct handles N = 2 and N = 3 only")
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != N - 1 or np.any(y <= 0):
        raise ValueError(f"need {N - 1} positive parameters")
    tau = tau_dense(y)
    gh, branch, res_w, res_idx = hull_product_vector(y)
    terms = [(1.0 / (2 * N), pv) for pv in phase_rotations(gh, N)]
    v = gh.vector()
    proj = symmetry_project(np.outer(v, v.conj()))
    residual = np.zeros_like(tau)
    if res_idx is not None:
        i = res_idx[0] * N + res_idx[1]
        residual[i, i] = res_w
        e = np.eye(2)[res_idx[0]]
        f = np.eye(N)[res_idx[1]]
        terms.append((res_w, ProductVector(e, f)))
    dec = HullDecomposition(N, y, branch, terms, res_w, res_idx, 0.0, float(np.max(np.abs(tau - residual - proj))))
    dec.reconstruction_error = float(np.max(np.abs(dec.dense() - tau)))
    return dec
