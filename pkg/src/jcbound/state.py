"""Excitation-number-conserving qubit-qudit states.

A state commuting with the total excitation number ``Pi = |1><1| (x) I + I (x) n``
has, in the qubit-major basis ``|0,0>..|0,N-1>, |1,0>..|1,N-1>``, only three
families of nonzero entries::

    a_n = <0 n|rho|0 n>,   b_n = <1 n|rho|1 n>,   c_n = <0 n|rho|1 n-1>  (n >= 1)

Everything in this module works on that ``(a, b, c)`` triple, with a dense
``2N x 2N`` numpy array as the interchange format for oracle checks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

HERMITIAN_TOL = 1e-12


class StructureError(ValueError):
    """Inputs have inconsistent shapes or are not of the expected form."""


class SuperselectionError(ValueError):
    """A dense matrix has weight outside the excitation-conserving pattern."""

    def __init__(self, index: tuple[int, int], magnitude: float, tol: float):
        self.index = index
        self.magnitude = magnitude
        self.tol = tol
        super().__init__(
            f"entry {index} has magnitude {magnitude:.3e} > tol {tol:.1e} "
            "but connects different excitation sectors"
        )


class InvalidStateError(ValueError):
    """A state violates positivity or normalization invariants."""

    def __init__(self, report: "ValidityReport"):
        self.report = report
        super().__init__("invalid state: " + "; ".join(str(v) for v in report.violations))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SymmetricState:
    """Populations ``a``, ``b`` (length N) and coherences ``c`` (length N-1).

    ``c[k]`` holds ``c_{k+1}``. States are kept unnormalized; use
    :meth:`normalized` when a trace-one copy is required.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=float).reshape(-1)
        b = np.array(self.b, dtype=float).reshape(-1)
        c = np.array(self.c, dtype=complex).reshape(-1)
        if a.size < 1:
            raise StructureError("need at least one qudit level")
        if b.size != a.size:
            raise StructureError(f"len(a)={a.size} but len(b)={b.size}")
        if c.size != a.size - 1:
            raise StructureError(f"len(c) must be N-1={a.size - 1}, got {c.size}")
        object.__setattr__(self, "a", _frozen(a))
        object.__setattr__(self, "b", _frozen(b))
        object.__setattr__(self, "c", _frozen(c))

    @property
    def N(self) -> int:
        return self.a.size

    @property
    def trace(self) -> float:
        return float(self.a.sum() + self.b.sum())

    @property
    def is_normalized(self) -> bool:
        return abs(self.trace - 1.0) <= 1e-12

    def normalized(self) -> "SymmetricState":
        tr = self.trace
        if not tr > 0 or not math.isfinite(tr):
            raise ValueError(f"cannot normalize a state with trace {tr}")
        return SymmetricState(self.a / tr, self.b / tr, self.c / tr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SymmetricState):
            return NotImplemented
        return (
            np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.c, other.c)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"SymmetricState(a={self.a.tolist()}, b={self.b.tolist()}, c={self.c.tolist()})"


@dataclass(frozen=True)
class Violation:
    kind: str
    index: int
    margin: float

    def __str__(self) -> str:
        return f"{self.kind}[{self.index}] margin {self.margin:.3e}"


@dataclass(frozen=True)
class ValidityReport:
    ok: bool
    violations: list[Violation]
    # a_n b_{n-1} - |c_n|^2 for n = 1..N-1
    margins: np.ndarray

    def to_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "violations": [
                {"kind": v.kind, "index": v.index, "margin": v.margin} for v in self.violations
            ],
            "margins": self.margins.tolist(),
        }


def validate(s: SymmetricState, tol: float = HERMITIAN_TOL) -> ValidityReport:
    """Check nonnegativity, positivity ``|c_n|^2 <= a_n b_{n-1}`` and a positive trace."""
    violations: list[Violation] = []
    for name, arr in (("a", s.a), ("b", s.b)):
        for n, v in enumerate(arr):
            if not math.isfinite(v):
                violations.append(Violation(f"nonfinite_{name}", n, float("nan")))
            elif v < -tol:
                violations.append(Violation(f"negative_{name}", n, float(v)))
    if not np.all(np.isfinite(s.c)):
        bad = int(np.flatnonzero(~np.isfinite(s.c))[0]) + 1
        violations.append(Violation("nonfinite_c", bad, float("nan")))
    margins = s.a[1:] * s.b[:-1] - np.abs(s.c) ** 2
    for n, m in enumerate(margins, start=1):
        if m < -tol:
            violations.append(Violation("positivity", n, float(m)))
    tr = s.trace
    if not (math.isfinite(tr) and tr > 0):
        violations.append(Violation("trace", 0, tr))
    return ValidityReport(not violations, violations, _frozen(margins))


def require_valid(s: SymmetricState) -> None:
    report = validate(s)
    if not report.ok:
        raise InvalidStateError(report)


@dataclass(frozen=True)
class GaugePhases:
    theta: np.ndarray

    def unitary(self) -> np.ndarray:
        """Diagonal qudit unitary ``sum_n exp(i theta_n)|n><n|``."""
        return np.diag(np.exp(1j * self.theta))


def gauge_fix(s: SymmetricState) -> tuple[SymmetricState, GaugePhases]:
    """Remove coherence phases with a local diagonal unitary on the qudit.

    Returns the state with ``c_n -> |c_n|`` and the phases ``theta`` such that
    ``(I (x) V) rho_fixed (I (x) V)^dagger = rho`` with ``V = diag(exp(i theta))``.
    A vanishing ``c_n`` contributes a zero phase increment.
    """
    increments = np.where(s.c != 0, np.angle(s.c), 0.0)
    theta = np.concatenate([[0.0], np.cumsum(increments)])
    fixed = SymmetricState(s.a, s.b, np.abs(s.c))
    return fixed, GaugePhases(_frozen(theta))


def excitation_numbers(N: int) -> np.ndarray:
    """Eigenvalues of ``Pi`` along the qubit-major basis."""
    n = np.arange(N)
    return np.concatenate([n, n + 1])


def number_operator(N: int) -> np.ndarray:
    return np.diag(excitation_numbers(N).astype(float))


def to_dense(s: SymmetricState) -> np.ndarray:
    N = s.N
    rho = np.zeros((2 * N, 2 * N), dtype=complex)
    idx = np.arange(N)
    rho[idx, idx] = s.a
    rho[N + idx, N + idx] = s.b
    n = np.arange(1, N)
    rho[n, N + n - 1] = s.c
    rho[N + n - 1, n] = np.conj(s.c)
    return rho


def _check_square_even(d: np.ndarray) -> int:
    if d.ndim < 2 or d.shape[-1] != d.shape[-2]:
        raise StructureError(f"expected a square matrix, got shape {d.shape}")
    if d.shape[-1] % 2:
        raise StructureError(f"dimension {d.shape[-1]} is odd; expected 2N")
    return d.shape[-1] // 2


def from_dense(d: np.ndarray, tol: float = HERMITIAN_TOL) -> SymmetricState:
    """Extract ``(a, b, c)``, refusing matrices outside the superselection pattern."""
    d = np.asarray(d)
    N = _check_square_even(d)
    herm = np.max(np.abs(d - d.conj().T), initial=0.0)
    if herm > tol:
        raise StructureError(f"matrix is not Hermitian (max deviation {herm:.3e})")
    ex = excitation_numbers(N)
    off = np.where(ex[:, None] != ex[None, :], np.abs(d), 0.0)
    if off.size and off.max() > tol:
        i, j = np.unravel_index(np.argmax(off), off.shape)
        raise SuperselectionError((int(i), int(j)), float(off[i, j]), tol)
    diag = np.diagonal(d).real
    n = np.arange(1, N)
    return SymmetricState(diag[:N].copy(), diag[N:].copy(), d[n, N + n - 1].copy())


def partial_transpose(d: np.ndarray, party: str = "B") -> np.ndarray:
    """Partial transpose of a (stack of) ``2N x 2N`` qubit (x) qudit matrices."""
    d = np.asarray(d)
    N = _check_square_even(d)
    lead = d.shape[:-2]
    t = d.reshape(lead + (2, N, 2, N))
    if party == "B":
        t = np.swapaxes(t, -3, -1)
    elif party == "A":
        t = np.swapaxes(t, -4, -2)
    else:
        raise ValueError(f"party must be 'A' or 'B', got {party!r}")
    return t.reshape(lead + (2 * N, 2 * N))


@dataclass(frozen=True)
class Marginals:
    alpha0: float
    alpha1: float
    beta: np.ndarray


def marginals(s: SymmetricState) -> Marginals:
    return Marginals(float(s.a.sum()), float(s.b.sum()), _frozen(s.a + s.b))


def symmetry_project(d: np.ndarray) -> np.ndarray:
    """Keep only entries with equal excitation number on both sides."""
    d = np.asarray(d)
    N = _check_square_even(d)
    ex = excitation_numbers(N)
    return np.where(ex[:, None] == ex[None, :], d, 0)


def symmetry_project_average(d: np.ndarray) -> np.ndarray:
    """Same projector written as the uniform average over ``2N`` phase rotations."""
    d = np.asarray(d, dtype=complex)
    N = _check_square_even(d)
    ex = excitation_numbers(N)
    out = np.zeros_like(d)
    for k in range(2 * N):
        phase = np.exp(1j * np.pi * k * ex / N)
        out += phase[:, None] * d * phase.conj()[None, :]
    return out / (2 * N)


def number_commutator_norm(d: np.ndarray) -> float:
    """Max-norm of ``[d, Pi]``."""
    d = np.asarray(d)
    N = _check_square_even(d)
    ex = excitation_numbers(N).astype(float)
    return float(np.max(np.abs(d * (ex[None, :] - ex[:, None])), initial=0.0))


def concurrence_pure(v: np.ndarray, tol: float = 1e-12) -> float:
    """Concurrence ``sqrt(2(1 - tr mu^2))`` of a normalized pure qubit (x) qudit vector."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.size % 2:
        raise StructureError(f"vector length {v.size} is odd")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"vector is not normalized (norm {norm!r})")
    psi = v.reshape(2, -1)
    mu = psi @ psi.conj().T
    purity = float(np.real(np.trace(mu @ mu)))
    return math.sqrt(max(0.0, 2.0 * (1.0 - purity)))


# JSON: {"N": int, "a": [...], "b": [...], "c": [{"re": x, "im": y}, ...]}


def state_to_dict(s: SymmetricState) -> dict[str, Any]:
    return {
        "N": s.N,
        "a": s.a.tolist(),
        "b": s.b.tolist(),
        "c": [{"re": float(z.real), "im": float(z.imag)} for z in s.c],
    }


def state_from_dict(obj: dict[str, Any]) -> SymmetricState:
    try:
        N = obj["N"]
        a, b, c = obj["a"], obj["b"], obj["c"]
    except (KeyError, TypeError) as exc:
        raise StructureError(f"state JSON must have keys N, a, b, c ({exc})") from None
    if not isinstance(N, int) or isinstance(N, bool) or N < 2:
        raise StructureError(f"N must be an integer >= 2, got {N!r}")
    if len(a) != N or len(b) != N or len(c) != N - 1:
        raise StructureError(f"expected len(a)=len(b)={N}, len(c)={N - 1}")
    try:
        a = [float(x) for x in a]
        b = [float(x) for x in b]
        cz = [complex(float(z["re"]), float(z.get("im", 0.0))) for z in c]
    except (KeyError, TypeError, ValueError) as exc:
        raise StructureError(f"malformed number in state JSON ({exc})") from None
    for name, vals in (("a", a), ("b", b)):
        for n, v in enumerate(vals):
            if math.isnan(v) or math.isinf(v):
                raise StructureError(f"{name}[{n}] is not finite")
            if v < 0:
                raise StructureError(f"{name}[{n}] = {v} is negative")
    if any(not (math.isfinite(z.real) and math.isfinite(z.imag)) for z in cz):
        raise StructureError("coherences must be finite")
    return SymmetricState(a, b, cz)


def state_to_json(s: SymmetricState) -> str:
    return json.dumps(state_to_dict(s))


def state_from_json(text: str) -> SymmetricState:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructureError(f"invalid JSON: {exc}") from None
    return state_from_dict(obj)


def bell_state(N: int, n: int) -> SymmetricState:
    """``(|0,n> + |1,n-1>)/sqrt(2)`` as a symmetric state."""
    if not 1 <= n < N:
        raise ValueError(f"need 1 <= n < N, got n={n}, N={N}")
    a = np.zeros(N)
    b = np.zeros(N)
    c = np.zeros(N - 1, dtype=complex)
    a[n] = 0.5
    b[n - 1] = 0.5
    c[n - 1] = 0.5
    return SymmetricState(a, b, c)


__all__ = [
    "GaugePhases",
    "InvalidStateError",
    "Marginals",
    "StructureError",
    "SuperselectionError",
    "SymmetricState",
    "ValidityReport",
    "Violation",
    "bell_state",
    "concurrence_pure",
    "excitation_numbers",
    "from_dense",
    "gauge_fix",
    "marginals",
    "number_commutator_norm",
    "number_operator",
    "partial_transpose",
    "require_valid",
    "state_from_dict",
    "state_from_json",
    "state_to_dict",
    "state_to_json",
    "symmetry_project",
    "symmetry_project_average",
    "to_dense",
    "validate",
]
