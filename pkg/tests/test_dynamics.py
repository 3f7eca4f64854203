import numpy as np
import pytest
from scipy.linalg import expm

from jcbound.criteria import negativity, report
from jcbound.dynamics import (
    LAMBDA_PRIME,
    Channel,
    EvolutionSpec,
    LindbladSpec,
    Region,
    RegimeError,
    block_unitaries,
    certify_generation,
    classify_region,
    evolution_terms,
    evolve_resonant,
    evolve_unitary,
    initial_state,
    jc_hamiltonian,
    lindblad_operator,
    lindblad_step,
    lindblad_trajectory,
    scaled_time,
    small_time,
    thermal_weights,
    zeta_vector,
)
from jcbound.range_cert import CertVerdict
from jcbound.state import SymmetricState, from_dense, number_commutator_norm, to_dense

from conftest import random_state


def _dense_evolve(s, spec):
    # drho/dt = i[rho, H]  =>  rho(t) = exp(-iHt) rho exp(iHt)
    U = expm(-1j * spec.sign * spec.t * jc_hamiltonian(spec, s.N))
    return U @ to_dense(s) @ U.conj().T


def _liouvillian(H, jumps):
    # column-stacking vec: vec(A X B) = (B^T kron A) vec(X)
    n = H.shape[0]
    I = np.eye(n)
    L = 1j * (np.kron(H.T, I) - np.kron(I, H))
    for rate, O in jumps:
        OdO = O.conj().T @ O
        L += rate * (np.kron(O.conj(), O) - 0.5 * np.kron(I, OdO) - 0.5 * np.kron(OdO.T, I))
    return L


def test_thermal_weights_example():
    p, mass = thermal_weights(1.0, 4)
    np.testing.assert_allclose(p, [1 / 2, 1 / 4, 1 / 8, 1 / 16])
    assert mass == pytest.approx(15 / 16)
    p, mass = thermal_weights(0.0, 3)
    np.testing.assert_array_equal(p, [1, 0, 0])
    assert mass == 1.0


def test_spec_validation():
    with pytest.raises(ValueError):
        EvolutionSpec(1.5, 1, 1)
    with pytest.raises(ValueError):
        EvolutionSpec(0.5, -1, 1)
    with pytest.raises(ValueError):
        EvolutionSpec(0.5, 1, 0)
    with pytest.raises(ValueError):
        EvolutionSpec(0.5, 1, 1, ncut=1)
    with pytest.raises(ValueError):
        EvolutionSpec(0.5, 1, 1, sign=0)
    assert EvolutionSpec(0.5, 1, 1).at(0.3).t == 0.3


def test_time_zero_is_initial_state():
    spec = EvolutionSpec(0.3, 0.7, 1.0, 0.0, ncut=6)
    s = evolve_resonant(spec)
    ref = initial_state(spec)
    np.testing.assert_allclose(s.a, ref.a, atol=1e-16)
    np.testing.assert_allclose(s.c, 0.0, atol=1e-16)
    # b_{ncut-1} is fed from the block above the cutoff
    np.testing.assert_allclose(s.b[:-1], ref.b[:-1], atol=1e-16)


@pytest.mark.parametrize("lam,m", [(0.5, 1.0), (0.25, 2.0), (0.75, 0.5), (0.1, 0.01)])
def test_resonant_matches_closed_form_terms(lam, m):
    spec = EvolutionSpec(lam, m, 1.3, 0.77, ncut=5)
    s = evolve_resonant(spec)
    tm = evolution_terms(spec)
    f, am, ap, beta = tm.f, tm.alpha_minus, tm.alpha_plus, tm.beta
    np.testing.assert_allclose(s.a, (f * am)[:5], rtol=1e-12)
    np.testing.assert_allclose(s.b, (f * ap)[1:], rtol=1e-12)
    np.testing.assert_allclose(np.abs(s.c), np.abs(f * beta)[1:5], rtol=1e-12, atol=1e-16)


def test_evolution_terms_need_photons():
    with pytest.raises(RegimeError):
        evolution_terms(EvolutionSpec(0.5, 0.0, 1.0, 0.1))


@pytest.mark.parametrize("lam,m,gt", [(0.5, 1.0, 0.3), (0.25, 2.0, 1.7), (0.9, 0.0, 0.5), (0.0, 3.0, 2.2)])
def test_resonant_matches_dense_propagator(lam, m, gt):
    ncut = 5
    spec = EvolutionSpec(lam, m, 1.0, gt, ncut=ncut)
    s = evolve_resonant(spec)
    big = EvolutionSpec(lam, m, 1.0, gt, ncut=ncut + 1)
    ref = from_dense(_dense_evolve(initial_state(big), big))
    np.testing.assert_allclose(s.a, ref.a[:ncut], atol=1e-14)
    np.testing.assert_allclose(s.b, ref.b[:ncut], atol=1e-14)
    np.testing.assert_allclose(s.c, np.abs(ref.c[: ncut - 1]), atol=1e-14)
    # the true coherence is real and nonpositive in this gauge when up > low
    assert np.all(ref.c.imag == pytest.approx(0.0, abs=1e-14))


def test_block_unitaries_are_unitary():
    spec = EvolutionSpec(0.5, 1.0, 0.8, 1.3, omega0=2.0, delta=0.4)
    U = block_unitaries(spec, 6)
    for u in U:
        np.testing.assert_allclose(u @ u.conj().T, np.eye(2), atol=1e-14)


@pytest.mark.parametrize("delta,sign", [(0.0, 1), (0.7, 1), (-1.1, -1), (0.3, -1)])
def test_block_evolution_matches_dense_expm(rng, delta, sign):
    s = random_state(rng, 5)
    spec = EvolutionSpec(0.5, 1.0, 0.9, 1.7, omega0=1.3, delta=delta, sign=sign)
    out = evolve_unitary(s, spec)
    dense = _dense_evolve(s, spec)
    assert number_commutator_norm(dense) <= 1e-12
    np.testing.assert_allclose(to_dense(out), dense, atol=1e-13)
    np.testing.assert_allclose(np.linalg.eigvalsh(to_dense(out)), np.linalg.eigvalsh(to_dense(s)), atol=1e-13)
    assert out.trace == pytest.approx(s.trace, abs=1e-14)


def test_sign_flip_leaves_entanglement_unchanged(rng):
    s = random_state(rng, 4)
    fwd = evolve_unitary(s, EvolutionSpec(0.5, 1.0, 1.0, 0.6))
    back = evolve_unitary(s, EvolutionSpec(0.5, 1.0, 1.0, 0.6, sign=-1))
    st = initial_state(EvolutionSpec(0.5, 1.0, 1.0, ncut=4))
    f2 = evolve_unitary(st, EvolutionSpec(0.5, 1.0, 1.0, 0.6))
    b2 = evolve_unitary(st, EvolutionSpec(0.5, 1.0, 1.0, 0.6, sign=-1))
    assert negativity(f2) == pytest.approx(negativity(b2), abs=1e-14)
    np.testing.assert_allclose(np.abs(f2.c), np.abs(b2.c), atol=1e-15)
    assert fwd != back


def test_evolve_resonant_rejects_detuning():
    with pytest.raises(RegimeError):
        evolve_resonant(EvolutionSpec(0.5, 1.0, 1.0, 0.1, delta=0.2))


def test_resonant_conserves_complete_blocks():
    # blocks 0..ncut-1 are complete; only the half of block ncut kept in b moves
    spec = EvolutionSpec(0.4, 1.5, 1.0, 0.0, ncut=6)
    s0 = evolve_resonant(spec)
    inner0 = s0.a.sum() + s0.b[:-1].sum()
    for t in np.linspace(0, 3, 7):
        s = evolve_resonant(spec.at(t))
        assert s.a.sum() + s.b[:-1].sum() == pytest.approx(inner0, abs=1e-15)


@pytest.mark.parametrize("channel", list(Channel))
def test_lindblad_matches_liouvillian_oracle(rng, channel):
    N = 4
    s = random_state(rng, N)
    h = EvolutionSpec(0.5, 1.0, 0.7, omega0=0.4, delta=0.2)
    specs = [LindbladSpec(channel, 0.3)]
    dt, steps = 0.01, 50
    traj = lindblad_trajectory(s, specs, h, dt, steps)
    H = jc_hamiltonian(h, N)
    L = _liouvillian(H, [(0.3, lindblad_operator(channel, N))])
    vec = expm(L * dt * steps) @ to_dense(s).reshape(-1, order="F")
    ref = vec.reshape(2 * N, 2 * N, order="F")
    np.testing.assert_allclose(to_dense(traj.states[-1]), ref, atol=1e-9)
    assert traj.max_leakage <= 1e-12
    assert traj.trace_drift <= 1e-10


def test_lindblad_zero_rates_reproduce_unitary(rng):
    s = random_state(rng, 5)
    h = EvolutionSpec(0.5, 1.0, 1.1, omega0=0.5, delta=0.3)
    specs = [LindbladSpec(c, 0.0) for c in Channel]
    traj = lindblad_trajectory(s, specs, h, 0.005, 200)
    ref = evolve_unitary(s, h.at(1.0))
    np.testing.assert_allclose(to_dense(traj.states[-1]), to_dense(ref), atol=1e-10)


def test_photon_loss_depletes_top_level():
    s = SymmetricState([0, 0, 0, 1.0], [0, 0, 0, 0], [0, 0, 0])
    r = lindblad_step(s, [LindbladSpec("photon-loss", 1.0)], EvolutionSpec(0.5, 1.0, 1e-9), 1e-3)
    # d a_3 / dt = -3 a_3 for the bare field
    assert r.state.a[3] == pytest.approx(np.exp(-3e-3), rel=1e-10)
    # a_2' = 3 a_3 - 2 a_2
    assert r.state.a[2] == pytest.approx(3 * (np.exp(-2e-3) - np.exp(-3e-3)), rel=1e-9)
    assert r.edge_population == pytest.approx(r.state.a[3])


def test_lindblad_spec_validation():
    with pytest.raises(ValueError):
        LindbladSpec("photon-teleport", 1.0)
    with pytest.raises(ValueError):
        LindbladSpec("atom-decay", -1.0)
    with pytest.raises(ValueError):
        lindblad_step(random_state(np.random.default_rng(0), 3), [], EvolutionSpec(0.5, 1, 1), 0.0)


def test_scaled_time_examples():
    for gt in (0.01, 0.05, 0.3):
        assert scaled_time(EvolutionSpec(0.5, 1.0, 1.0, gt)) == pytest.approx(gt / np.sqrt(2))
    with pytest.raises(RegimeError):
        scaled_time(EvolutionSpec(0.5, 0.0, 1.0, 0.1))
    with pytest.raises(RegimeError):
        scaled_time(EvolutionSpec(0.0, 1.0, 1.0, 0.1))


def test_small_time_example():
    st = small_time(EvolutionSpec(0.5, 1.0, 1.0, 0.05))
    assert st.y_taylor[0] == pytest.approx(0.035355, abs=5e-7)
    np.testing.assert_allclose(st.y_exact, st.y_taylor, atol=1e-4)
    assert st.coefficient < 10


def test_small_time_error_is_cubic():
    spec = EvolutionSpec(0.25, 2.0, 1.0)
    errs = []
    for gt in (0.02, 0.01):
        st = small_time(spec.at(gt))
        errs.append(np.max(np.abs(st.y_exact - st.y_taylor)))
    assert errs[0] / errs[1] == pytest.approx(8, rel=0.05)


@pytest.mark.parametrize("gt", [0.01, 0.05, 0.1])
def test_certify_generation(gt):
    cert = certify_generation(EvolutionSpec(0.5, 1.0, 1.0, gt))
    assert cert.verdict is CertVerdict.BOUND_ENTANGLED
    assert all(cert.details["checks"].values())
    assert cert.details["tau1_verdict"] == "BOUND_ENTANGLED_EDGE"
    assert cert.details["kernel_angle"] <= 1e-6
    assert cert.details["kernel_pt_angle"] <= 1e-6
    assert cert.details["reconstruction_error"] <= 1e-12
    assert cert.details["lambda_prime"] == pytest.approx(LAMBDA_PRIME * gt**2 / 2)
    assert cert.ranks == (6, 5)


def test_certify_generation_lambda_prime_example():
    cert = certify_generation(EvolutionSpec(0.5, 1.0, 1.0, 0.05))
    assert cert.details["lambda_prime"] == pytest.approx(7.85e-4, abs=5e-7)


def test_certify_generation_with_search():
    cert = certify_generation(EvolutionSpec(0.5, 1.0, 1.0, 0.05), search=True)
    assert cert.details["search"] == "NONE_FOUND"
    assert cert.verdict is CertVerdict.BOUND_ENTANGLED


def test_certify_generation_regime_checks():
    with pytest.raises(RegimeError):
        certify_generation(EvolutionSpec(0.5, 1.0, 1.0, 0.0))
    with pytest.raises(RegimeError):
        certify_generation(EvolutionSpec(0.5, 1.0, 1.0, 1.0))
    with pytest.raises(RegimeError):
        certify_generation(EvolutionSpec(0.5, 1.0, 1.0, 0.05, ncut=5))


def test_zeta_is_orthogonal_to_product_pole():
    z = zeta_vector(0.1)
    assert z[4] == -np.sqrt(2)
    assert z[0] == pytest.approx(np.sqrt(6) / 0.1)


def test_classify_region_examples():
    assert classify_region(1.0, 0.1, 1.0, 10.0, 2000).region is Region.REGION_I
    r = classify_region(0.9, 0.1, 1.0, 10.0, 2000)
    assert r.region is Region.REGION_II and 0 < r.t_bar <= 10
    assert negativity(evolve_resonant(EvolutionSpec(0.9, 0.1, 1.0, r.t_bar, ncut=20))) > 1e-10
    r = classify_region(0.5, 1.0, 1.0, 10.0, 2000)
    assert r.region is Region.REGION_III_CANDIDATE and r.horizon == 10.0
    assert r.to_dict()["region"] == "REGION_III_CANDIDATE"


def test_classify_region_short_horizon_is_candidate():
    assert classify_region(0.9, 0.1, 1.0, 1e-8, 3).region is Region.REGION_III_CANDIDATE


def test_report_on_evolved_state():
    rep = report(evolve_resonant(EvolutionSpec(1.0, 0.1, 1.0, 0.4)))
    assert rep.negativity > 0
