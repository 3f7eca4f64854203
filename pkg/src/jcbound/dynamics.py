"""Jaynes-Cummings dynamics of number-conserving qubit-qudit states.

Conventions: ``|1>`` is the excited qubit level, ``sigma = |0><1|`` and

    H = w0 I (x) a^dag a + (w0 - Delta) sigma^dag sigma (x) I - i g (sigma (x) a^dag - sigma^dag (x) a)

with ``drho/dt = i[rho, H]``, i.e. ``rho(t) = exp(-iHt) rho exp(iHt)``.
``H`` only couples ``|0,n>`` with ``|1,n-1>``, so every evolution here works
on 2x2 blocks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .criteria import negativity_arrays
from .normal_form import tau_dense
from .numerics import kernel_basis, min_eigenvalue, span_distance
from .range_cert import (
    OBSTRUCTION_TOL,
    Certificate,
    CertVerdict,
    ProductVector,
    chi_vector,
    phi_vectors,
    range_search,
    unique_separable_vector,
)
from .state import SymmetricState, partial_transpose, symmetry_project, to_dense

LAMBDA_PRIME = 27.0 / 43.0
KERNEL_ANGLE_TOL = 1e-6
RECONSTRUCTION_TOL = 1e-12


class RegimeError(ValueError):
    """Parameters outside the regime an operation is valid for."""


@dataclass(frozen=True)
class EvolutionSpec:
    lam: float  # excited-state probability of the qubit
    m: float  # mean thermal photon number
    g: float  # coupling, rad / time
    t: float = 0.0
    omega0: float = 0.0
    delta: float = 0.0
    ncut: int = 4
    # +1: drho/dt = i[rho, H]; -1 runs the opposite sign (time reversal)
    sign: int = 1

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")
        if not self.m >= 0:
            raise ValueError(f"m must be nonnegative, got {self.m}")
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if not self.t >= 0:
            raise ValueError(f"t must be nonnegative, got {self.t}")
        if int(self.ncut) != self.ncut or self.ncut < 2:
            raise ValueError(f"ncut must be an integer >= 2, got {self.ncut}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def at(self, t: float) -> "EvolutionSpec":
        return EvolutionSpec(self.lam, self.m, self.g, t, self.omega0, self.delta, self.ncut, self.sign)


def thermal_weights(m: float, ncut: int) -> tuple[np.ndarray, float]:
    """``p_n = m^n / (1+m)^(n+1)`` for n < ncut, and the retained mass ``sum p_n``."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    n = np.arange(ncut)
    r = m / (1.0 + m)
    p = r**n / (1.0 + m)
    return p, float(1.0 - r**ncut)


@dataclass(frozen=True)
class EvolutionTerms:
    f: np.ndarray  # f_n, n = 0..ncut
    alpha_minus: np.ndarray
    alpha_plus: np.ndarray
    beta: np.ndarray  # dynamical coherence amplitude, n = 0..ncut
    T: float


def evolution_terms(spec: EvolutionSpec) -> EvolutionTerms:
    """Resonant closed-form ingredients; needs ``m > 0`` (``f_0`` diverges at m = 0)."""
    if spec.m <= 0:
        raise RegimeError("f_n is undefined at m = 0")
    lam, m = spec.lam, spec.m
    n = np.arange(spec.ncut + 1)
    f = 0.5 * m ** (n - 1.0) * (m + 1.0) ** (-n - 1.0)
    D = lam + m * (2 * lam - 1)
    phase = 2 * spec.g * np.sqrt(n) * spec.t
    T = scaled_time(spec) if lam > 0 else math.nan
    return EvolutionTerms(
        f,
        m + lam - D * np.cos(phase),
        m + lam + D * np.cos(phase),
        D * np.sin(phase),
        T,
    )


def _resonant_arrays(lam: float, m: float, g: float, t, ncut: int):
    """Populations and coherences of the evolved product state, broadcast over ``t``.

    Written with thermal weights rather than ``f_n`` so that ``m = 0`` works;
    the two forms agree identically for ``m > 0``.
    """
    t = np.asarray(t, dtype=float)[..., None]
    r = m / (1.0 + m)
    p = r ** np.arange(ncut + 1) / (1.0 + m)  # p_0..p_ncut
    p_prev = np.concatenate([[0.0], p[:-1]])  # p_{n-1}
    n = np.arange(ncut + 1)
    w = 2 * g * np.sqrt(n) * t
    # block n: |0,n> starts with (1-lam) p_n, |1,n-1> with lam p_{n-1}
    up, low = (1 - lam) * p, lam * p_prev
    pop0 = 0.5 * (up + low) + 0.5 * (up - low) * np.cos(w)
    pop1 = 0.5 * (up + low) - 0.5 * (up - low) * np.cos(w)
    coh = 0.5 * (up - low) * np.sin(w)
    a = pop0[..., :ncut]
    b = pop1[..., 1:]  # b_n lives in block n+1; b_{ncut-1} uses p_ncut
    c = np.abs(coh[..., 1:ncut])
    return a, b, c


def evolve_resonant(spec: EvolutionSpec) -> SymmetricState:
    """Closed-form resonant evolution of ``(unpolarized qubit) (x) (thermal field)``.

    Coherences are returned gauge-fixed (``|c_n|``).
    """
    if spec.delta != 0:
        raise RegimeError("evolve_resonant needs delta = 0; use evolve_unitary")
    a, b, c = _resonant_arrays(spec.lam, spec.m, spec.g, spec.t, spec.ncut)
    return SymmetricState(a, b, c)


def initial_state(spec: EvolutionSpec) -> SymmetricState:
    """Truncated ``rho_A (x) rho_B`` at t = 0."""
    p, _ = thermal_weights(spec.m, spec.ncut)
    return SymmetricState((1 - spec.lam) * p, spec.lam * p, np.zeros(spec.ncut - 1))


def jc_hamiltonian(spec: EvolutionSpec, N: int | None = None) -> np.ndarray:
    """Dense truncated Hamiltonian on ``C^2 (x) C^N``."""
    N = spec.ncut if N is None else N
    ann = np.diag(np.sqrt(np.arange(1, N)), 1)
    sigma = np.array([[0.0, 1.0], [0.0, 0.0]])
    I2, IN = np.eye(2), np.eye(N)
    return (
        spec.omega0 * np.kron(I2, ann.T @ ann)
        + (spec.omega0 - spec.delta) * np.kron(sigma.T @ sigma, IN)
        - 1j * spec.g * (np.kron(sigma, ann.T) - np.kron(sigma.T, ann))
    )


def block_unitaries(spec: EvolutionSpec, N: int) -> np.ndarray:
    """``exp(-i sign H_n t)`` on each span ``{|0,n>, |1,n-1>}``, n = 1..N-1, up to a phase.

    ``H_n = (w0 n - Delta/2) I + (Delta/2) Z + g sqrt(n) Y``; the scalar part is a
    global phase on the block and cancels in ``U rho U^dag``.
    """
    n = np.arange(1, N)
    h = spec.delta / 2
    k = spec.g * np.sqrt(n)
    omega = np.sqrt(h * h + k * k)
    tau = spec.sign * spec.t
    cs = np.cos(omega * tau)
    sn = np.where(omega > 0, np.sin(omega * tau) / np.where(omega > 0, omega, 1.0), tau)
    U = np.empty((N - 1, 2, 2), dtype=complex)
    # K = [[h, -ik], [ik, -h]];  U = cos I - i sin K / Omega
    U[:, 0, 0] = cs - 1j * sn * h
    U[:, 1, 1] = cs + 1j * sn * h
    U[:, 0, 1] = -sn * k
    U[:, 1, 0] = sn * k
    return U


def evolve_unitary(s: SymmetricState, spec: EvolutionSpec) -> SymmetricState:
    """Conjugate ``s`` by the truncated JC propagator, block by block.

    ``|0,0>`` and ``|1,N-1>`` are one-dimensional blocks and keep their
    populations.
    """
    N = s.N
    U = block_unitaries(spec, N)
    blk = np.empty((N - 1, 2, 2), dtype=complex)
    blk[:, 0, 0] = s.a[1:]
    blk[:, 1, 1] = s.b[:-1]
    blk[:, 0, 1] = s.c
    blk[:, 1, 0] = np.conj(s.c)
    out = U @ blk @ np.conj(np.swapaxes(U, -1, -2))
    a = np.concatenate([[s.a[0]], out[:, 0, 0].real])
    b = np.concatenate([out[:, 1, 1].real, [s.b[-1]]])
    return SymmetricState(np.maximum(a, 0.0), np.maximum(b, 0.0), out[:, 0, 1])


# Lindblad


class Channel(str, enum.Enum):
    PHOTON_LOSS = "photon-loss"
    PHOTON_GAIN = "photon-gain"
    PHOTON_DEPHASING = "photon-dephasing"
    ATOM_DECAY = "atom-decay"
    ATOM_PUMP = "atom-pump"
    ATOM_DEPHASING = "atom-dephasing"


@dataclass(frozen=True)
class LindbladSpec:
    channel: Channel
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "channel", Channel(self.channel))
        if not (math.isfinite(self.rate) and self.rate >= 0):
            raise ValueError(f"rate must be finite and nonnegative, got {self.rate}")


def lindblad_operator(channel: Channel | str, N: int) -> np.ndarray:
    """Jump operator on ``C^2 (x) C^N`` (truncated ladder operators for the field)."""
    channel = Channel(channel)
    ann = np.diag(np.sqrt(np.arange(1, N)), 1)
    sigma = np.array([[0.0, 1.0], [0.0, 0.0]])
    I2, IN = np.eye(2), np.eye(N)
    ops = {
        Channel.PHOTON_LOSS: np.kron(I2, ann),
        Channel.PHOTON_GAIN: np.kron(I2, ann.T),
        Channel.PHOTON_DEPHASING: np.kron(I2, ann.T @ ann),
        Channel.ATOM_DECAY: np.kron(sigma, IN),
        Channel.ATOM_PUMP: np.kron(sigma.T, IN),
        Channel.ATOM_DEPHASING: np.kron(sigma.T @ sigma, IN),
    }
    return ops[channel]


def lindblad_rhs(d: np.ndarray, H: np.ndarray, jumps: Sequence[tuple[float, np.ndarray]], sign: int = 1) -> np.ndarray:
    out = sign * 1j * (d @ H - H @ d)
    for rate, O in jumps:
        if rate == 0:
            continue
        Od = O.conj().T
        OdO = Od @ O
        out = out + rate * (O @ d @ Od - 0.5 * (OdO @ d + d @ OdO))
    return out


@dataclass(frozen=True)
class StepResult:
    state: SymmetricState
    leakage: float  # off-pattern max-norm before re-projection
    trace_drift: float  # |tr after - tr before|
    edge_population: float  # population on the top Fock level, where truncation acts


def _rk4(d, H, jumps, dt, sign):
    k1 = lindblad_rhs(d, H, jumps, sign)
    k2 = lindblad_rhs(d + 0.5 * dt * k1, H, jumps, sign)
    k3 = lindblad_rhs(d + 0.5 * dt * k2, H, jumps, sign)
    k4 = lindblad_rhs(d + dt * k3, H, jumps, sign)
    return d + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def lindblad_step(
    s: SymmetricState, specs: Sequence[LindbladSpec], h: EvolutionSpec, dt: float
) -> StepResult:
    """One RK4 step of ``drho/dt = i[rho, H] + sum_O gamma_O D[O](rho)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    N = s.N
    H = jc_hamiltonian(h, N)
    jumps = [(sp.rate, lindblad_operator(sp.channel, N)) for sp in specs]
    d = to_dense(s)
    new = _rk4(d, H, jumps, dt, h.sign)
    new = 0.5 * (new + new.conj().T)
    proj = symmetry_project(new)
    leak = float(np.max(np.abs(new - proj)))
    drift = float(abs(np.trace(new).real - s.trace))
    idx = np.arange(2 * N).reshape(2, N)[:, -1]
    edge = float(np.sum(np.diag(new).real[idx]))
    out = SymmetricState(
        np.diag(proj).real[:N].copy(),
        np.diag(proj).real[N:].copy(),
        proj[np.arange(1, N), N + np.arange(N - 1)].copy(),
    )
    return StepResult(out, leak, drift, edge)


@dataclass
class Trajectory:
    states: list[SymmetricState]
    max_leakage: float
    trace_drift: float  # cumulative |tr(final) - tr(initial)|
    edge_population: np.ndarray
    leakage: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))


def lindblad_trajectory(
    s: SymmetricState, specs: Sequence[LindbladSpec], h: EvolutionSpec, dt: float, steps: int
) -> Trajectory:
    states = [s]
    leaks, edges = [], []
    cur = s
    for _ in range(steps):
        r = lindblad_step(cur, specs, h, dt)
        cur = r.state
        states.append(cur)
        leaks.append(r.leakage)
        edges.append(r.edge_population)
    leaks_arr = np.array(leaks)
    return Trajectory(
        states,
        float(leaks_arr.max(initial=0.0)),
        abs(cur.trace - s.trace),
        np.array(edges),
        leaks_arr,
    )


# small-time regime


def scaled_time(spec: EvolutionSpec) -> float:
    """``T = |lam + m(2 lam - 1)| / (lam sqrt(m(m+1))) * g t``."""
    lam, m = spec.lam, spec.m
    if lam == 0 or m == 0:
        raise RegimeError("the small-time expansion needs lam > 0 and m > 0")
    return abs(lam + m * (2 * lam - 1)) / (lam * math.sqrt(m * (m + 1))) * spec.g * spec.t


@dataclass(frozen=True)
class SmallTime:
    T: float
    y_taylor: np.ndarray
    y_exact: np.ndarray
    coefficient: float  # max_n |y_exact - y_taylor| / T^3


def normal_form_y(s: SymmetricState) -> np.ndarray:
    return np.abs(s.c) / np.sqrt(s.b[:-1] * s.b[1:])


def small_time(spec: EvolutionSpec) -> SmallTime:
    T = scaled_time(spec)
    n = np.arange(1, spec.ncut)
    y_taylor = np.sqrt(n) * T
    y_exact = normal_form_y(evolve_resonant(spec))
    err = float(np.max(np.abs(y_exact - y_taylor)))
    return SmallTime(T, y_taylor, y_exact, err / T**3 if T > 0 else math.nan)


# generation certificate


def zeta_vector(T: float) -> np.ndarray:
    """Second kernel vector of ``tau_1`` (besides ``chi_3``) in the Taylor regime."""
    v = np.zeros(8)
    v[0] = math.sqrt(6) / T
    v[1] = 2 * math.sqrt(2) / T
    v[2] = math.sqrt(3) / T
    v[3] = math.sqrt(3) / T
    v[4] = -math.sqrt(2)
    v[7] = 3.0
    return v


def scaled_product_vector(y, theta: float) -> ProductVector:
    """The separable-family vector with ``f`` divided by ``y3`` (unit last entries)."""
    pv = unique_separable_vector(y, theta)
    return ProductVector(pv.e, pv.f / y[2], theta)


def certify_generation(
    spec: EvolutionSpec,
    t_threshold: float = 0.2,
    n_theta: int = 32,
    search: bool = False,
) -> Certificate:
    """Certify that the Taylor-regime ``tau`` is bound entangled.

    ``tau = tau_1 + (27/43) T^2 |ef><ef|`` with ``|ef>`` the theta = 0 member of
    the separable family. ``tau_1`` is PPT, its kernels are ``span(chi_3, zeta)``
    and ``span(phi_1..3)``, and ``zeta`` is never orthogonal to the family, so
    ``tau_1`` is an edge state; mixing in one product vector keeps ``tau``
    entangled while PPT.
    """
    if spec.ncut != 4:
        raise RegimeError("the generation certificate is built for ncut = 4")
    T = scaled_time(spec)
    if T <= 0:
        raise RegimeError("T = 0: tau is degenerate")
    if T > t_threshold:
        raise RegimeError(f"T = {T:.4g} exceeds the small-time threshold {t_threshold}")

    y = np.sqrt(np.arange(1, 4)) * T
    tau = tau_dense(y)
    ef = scaled_product_vector(y, 0.0).vector().real
    lam_p = LAMBDA_PRIME * T**2
    tau1 = tau - lam_p * np.outer(ef, ef)
    tau1_pt = partial_transpose(tau1, "A")

    details: dict[str, Any] = {"T": T, "lambda_prime": lam_p, "y": y}
    details["min_eig_tau1"] = min_eigenvalue(tau1)
    details["min_eig_tau1_pt"] = min_eigenvalue(tau1_pt)
    details["min_eig_tau_pt"] = min_eigenvalue(partial_transpose(tau, "A"))
    tol = 1e-12
    psd = details["min_eig_tau1"] >= -tol
    ppt = details["min_eig_tau1_pt"] >= -tol and details["min_eig_tau_pt"] >= -tol

    zeta = zeta_vector(T)
    ker = kernel_basis(tau1).vectors
    ker_pt = kernel_basis(tau1_pt).vectors
    expected = np.array([chi_vector(y, 3), zeta])
    expected_pt = phi_vectors(y)
    details["kernel_angle"] = span_distance(ker, expected)
    details["kernel_pt_angle"] = span_distance(ker_pt, expected_pt)
    details["reconstruction_error"] = float(np.max(np.abs(tau1 + lam_p * np.outer(ef, ef) - tau)))

    thetas = 2 * np.pi * np.arange(n_theta) / n_theta
    overlaps = np.array([np.vdot(zeta, scaled_product_vector(y, th).vector()) for th in thetas])
    details["min_zeta_overlap"] = float(np.abs(overlaps).min())
    details["pole_overlap"] = float(abs(zeta[4]))  # <zeta|1,0>
    # the evolved state itself, filtered, for comparison with the Taylor tau
    details["y_exact"] = normal_form_y(evolve_resonant(spec))

    kernels_ok = (
        details["kernel_angle"] <= KERNEL_ANGLE_TOL and details["kernel_pt_angle"] <= KERNEL_ANGLE_TOL
    )
    checks = {
        "tau1_psd": psd,
        "ppt": ppt,
        "kernels": kernels_ok,
        "reconstruction": details["reconstruction_error"] <= RECONSTRUCTION_TOL,
        "obstruction": details["min_zeta_overlap"] > OBSTRUCTION_TOL
        and details["pole_overlap"] > OBSTRUCTION_TOL,
    }
    if search:
        rs = range_search(tau1, tau1_pt)
        details["search"] = rs.details["search"]
        checks["search"] = rs.verdict == CertVerdict.BOUND_ENTANGLED_EDGE
    details["checks"] = checks
    ok = all(checks.values())
    details["tau1_verdict"] = (CertVerdict.BOUND_ENTANGLED_EDGE if ok else CertVerdict.INCONCLUSIVE).value
    verdict = CertVerdict.BOUND_ENTANGLED if ok else CertVerdict.INCONCLUSIVE
    witnesses = {"zeta": zeta, "kernel_tau1": ker, "kernel_tau1_pt": ker_pt, "ef": ef}
    ranks = (8 - ker.shape[0], 8 - ker_pt.shape[0])
    return Certificate(verdict, ranks, complex(overlaps[0]), witnesses, details, [scaled_product_vector(y, 0.0)])


# region scan


class Region(str, enum.Enum):
    REGION_I = "REGION_I"
    REGION_II = "REGION_II"
    REGION_III_CANDIDATE = "REGION_III_CANDIDATE"


@dataclass(frozen=True)
class RegionResult:
    region: Region
    t_bar: float | None  # first NPT time in region II
    horizon: float  # scan horizon; region III is only a candidate up to here
    ncut: int

    def to_dict(self) -> dict[str, Any]:
        return {"region": self.region.value, "t_bar": self.t_bar, "horizon": self.horizon, "ncut": self.ncut}


def classify_region(
    lam: float, m: float, g: float, t_max: float, steps: int, ncut: int = 20, tol: float = 1e-10
) -> RegionResult:
    """Scan ``t in (0, t_max]`` on ``steps`` equally spaced points.

    REGION_I: NPT at the first step; REGION_II: PPT at first, NPT by ``t_bar``;
    REGION_III_CANDIDATE: PPT at every scanned time (no claim beyond ``t_max``).
    """
    if not (t_max > 0 and steps >= 1 and g > 0):
        raise ValueError("need t_max > 0, g > 0 and steps >= 1")
    EvolutionSpec(lam, m, g, 0.0, ncut=ncut)  # parameter validation
    t = t_max * np.arange(1, steps + 1) / steps
    a, b, c = _resonant_arrays(lam, m, g, t, ncut)
    neg = negativity_arrays(a, b, c)
    npt = np.flatnonzero(neg > tol)
    if npt.size == 0:
        return RegionResult(Region.REGION_III_CANDIDATE, None, t_max, ncut)
    if npt[0] == 0:
        return RegionResult(Region.REGION_I, None, t_max, ncut)
    return RegionResult(Region.REGION_II, float(t[npt[0]]), t_max, ncut)

