"""
This module contains test cases for Haar sampling, Born-rule sampling, Monte
Carlo estimation and the noise figures in uframe.estimation.

Statistical assertions use fixed seeds and a threshold of 4 standard errors for
single means (4.5 for maxima over matrix entries).

Test Cases:
- test_haar_unitary_is_unitary: sampled matrices are unitary to 1e-12.
- test_haar_eigenphases_uniform: pooled eigenphases for d = 2 pass a KS test.
- test_haar_left_invariance: V U for a fixed V passes the Haar entry and eigenphase KS tests and twirls correctly.
- test_haar_sampler_reproducible: same seed, same unitaries and states.
- test_twirl: the Haar twirl of A approaches Tr[A] I / d.
- test_haar_identity_check: swap identity, first and second moments for d = 2, 3.
- test_haar_identity_check_known_operators: A = |0><0| and A = I_4 for d = 2.
- test_parallel_substreams: budgets split exactly, results depend only on (seed, workers).
- test_sample_outcomes_deterministic: single-outcome and projective readouts.
- test_sample_outcomes_bell_frequencies: uniform Bell outcomes at 1e5 shots.
- test_covariant_sample_weights: I/d gives unit weights, weights are nonnegative.
- test_covariant_sample_estimate: importance-sampled estimate of Tr[rho O].
- test_mc_estimate_constant: constant f gives zero standard error.
- test_mc_estimate_identity_sud: O = I with the canonical covariant dual gives 1.
- test_mc_estimate_weyl_z: Weyl detector estimate of <0|Z|0>.
- test_mc_estimate_random_pairs: 20 random (rho, O) pairs on the qubit Weyl detector.
- test_mc_estimate_errors: empty records and mismatched processing functions.
- test_covariance_matrix: real, constant and random processing functions.
- test_delta_obs_analytic: Z, I, diag(1, 0, 0) and non-Hermitian input.
- test_delta_xi_analytic: zero coefficient and the d + 2 factor.
- test_delta_opt_analytic: closed-form values, monotonicity and range.
- test_minimal_noise_factor: canonical xi gives d + 2 analytically and by Monte Carlo.
- test_delta_xi_mc_identity: O = I has no noise.
- test_delta_xi_mc_perturbed: a noisier xi is detected by Monte Carlo.
- test_delta_xi_mc_reference_state: the reference state psi0 does not change the average noise.
- test_delta_obs_mc: ideal-measurement noise by Monte Carlo for d = 2 and d = 3.
- test_purity_scan_spot_checks: Monte Carlo at p = 0.6 and p = 1 for d = 2.
- test_average_variance_exact: exact Weyl-detector noise against a Haar average over states.
- test_variance_report: ratio consistency and empirical fields.

Fixtures:
- rng: seeded numpy generator.

Helper Functions:
- weyl_detector: Bell POVM, ancilla, frame and dual of the Weyl detector.
- within: |estimate - exact| below k standard errors.
"""
import numpy as np
import pytest
from scipy.stats import kstest

from uframe.core.hilbert_schmidt import random_density_matrix, random_hermitian
from uframe.covariant.sud import CovariantXi, covariant_perturbation, isotropic_ancilla, sud_canonical_dual_xi, sud_processing_values
from uframe.covariant.weyl import abelian_ancilla, abelian_dual, abelian_frame, weyl_bell_povm, weyl_system
from uframe.errors import InvalidDualError, InvalidStateError, NotHermitianError, ShapeMismatchError
from uframe.estimation.haar import HaarSampler, haar_identity_check, haar_unitaries, haar_unitary, twirl
from uframe.estimation.parallel import run_streams, split_budget, substreams, worker_count
from uframe.estimation.sampling import ShotRecords, covariant_sample, mc_estimate, sample_outcomes
from uframe.estimation.variance import (
    average_variance_exact,
    covariance_matrix,
    delta_obs_analytic,
    delta_obs_mc,
    delta_opt_analytic,
    delta_xi_analytic,
    delta_xi_mc,
    variance_report,
)
from uframe.povm.catalog import PAULI_Z, computational_povm
from uframe.povm.measurement import (
    DensityMatrix,
    Observable,
    Povm,
    ProcessingFunction,
    estimate_expectation_exact,
    outcome_probabilities,
    processing_function,
)


@pytest.fixture
def rng():
    return np.random.default_rng(2718)


def weyl_detector(d):
    """
    Helper function returning (povm, nu, frame, dual) of the Weyl detector with the abelian ancilla.
    """
    w = weyl_system(d)
    nu = abelian_ancilla(d)
    return weyl_bell_povm(w).povm, nu, abelian_frame(w, nu), abelian_dual(w, nu)


def within(estimate, exact, k=4.0):
    """
    Helper function: is the estimate within k standard errors of the exact value?
    """
    return abs(estimate.value - exact) <= k * estimate.std_error + 1e-12


def test_haar_unitary_is_unitary(rng):
    for d in (2, 3, 5):
        u = haar_unitary(d, rng)
        assert np.linalg.norm(u.conj().T @ u - np.eye(d)) < 1e-12


def test_haar_eigenphases_uniform(rng):
    phases = np.angle(np.linalg.eigvals(haar_unitaries(2, 10_000, rng))).reshape(-1)
    assert kstest((phases + np.pi) / (2 * np.pi), "uniform").pvalue > 1e-3


def test_haar_left_invariance(rng):
    v = haar_unitary(3, rng)
    w = v @ haar_unitaries(3, 20_000, rng)
    assert np.linalg.norm(w[0].conj().T @ w[0] - np.eye(3)) < 1e-12
    # |W_00|^2 of a Haar unitary on C^3 has CDF 1 - (1 - x)^2
    entries = np.abs(w[:, 0, 0]) ** 2
    assert kstest(entries, lambda x: 1 - (1 - x) ** 2).pvalue > 1e-3
    phases = np.angle(np.linalg.eigvals(w)).reshape(-1)
    assert kstest((phases + np.pi) / (2 * np.pi), "uniform").pvalue > 1e-3
    a = random_hermitian(3, rng)
    assert np.allclose(twirl(a, w), np.trace(a) * np.eye(3) / 3, atol=0.05)


def test_haar_sampler_reproducible():
    a, b = HaarSampler(d=3, seed=5, n=10), HaarSampler(d=3, seed=5, n=10)
    assert np.array_equal(a.unitaries(), b.unitaries())
    states = a.states()
    assert states.shape == (10, 3)
    assert np.allclose(np.linalg.norm(states, axis=1), 1.0)


def test_twirl(rng):
    a = random_hermitian(3, rng)
    mean = twirl(a, haar_unitaries(3, 50_000, rng))
    assert np.allclose(mean, np.trace(a) * np.eye(3) / 3, atol=0.05)


@pytest.mark.parametrize("d", [2, 3])
def test_haar_identity_check(d):
    report = haar_identity_check(d, 100_000, seed=11 + d)
    assert report.swap_identity_error < 1e-12
    assert report.first_moment.max_z < 4.5
    assert report.second_moment.max_z < 4.5
    with pytest.raises(ValueError):
        haar_identity_check(d, 999, seed=1)


def test_haar_identity_check_known_operators():
    report = haar_identity_check(2, 100_000, seed=3, a=np.diag([1.0, 0.0]), a2=np.eye(4), b=[[0, 1], [1, 0]])
    assert report.swap_identity_error == pytest.approx(0.0, abs=1e-15)
    assert report.first_moment.max_z < 4.5
    assert report.second_moment.max_error < 1e-10


def test_parallel_substreams():
    assert split_budget(10, 3) == [4, 3, 3]
    assert sum(split_budget(100_001, 7)) == 100_001
    first = [rng.integers(1000) for rng in substreams(42, 3)]
    second = [rng.integers(1000) for rng in substreams(42, 3)]
    assert first == second

    def draw(share, rng):
        return rng.standard_normal(share)

    a = np.concatenate(run_streams(draw, 1000, seed=9, workers=4))
    b = np.concatenate(run_streams(draw, 1000, seed=9, workers=4))
    assert a.shape == (1000,)
    assert np.array_equal(a, b)
    assert worker_count(1) == 1


def test_sample_outcomes_deterministic():
    zero = DensityMatrix.basis(2)
    single = Povm(elements=[np.eye(2)])
    records = sample_outcomes(zero, None, single, 500, seed=1)
    assert np.all(records.outcomes == 0)
    records = sample_outcomes(zero, None, computational_povm(2), 500, seed=1)
    assert np.all(records.outcomes == 0)
    assert records.counts().tolist() == [500, 0]


def test_sample_outcomes_bell_frequencies():
    half = DensityMatrix.maximally_mixed(2)
    n = 100_000
    records = sample_outcomes(half, half, weyl_bell_povm(weyl_system(2)).povm, n, seed=17)
    freq = records.counts() / n
    sigma = np.sqrt(0.25 * 0.75 / n)
    assert np.all(np.abs(freq - 0.25) < 4 * sigma)
    again = sample_outcomes(half, half, weyl_bell_povm(weyl_system(2)).povm, n, seed=17)
    assert np.array_equal(records.outcomes, again.outcomes)


def test_covariant_sample_weights(rng):
    nu = DensityMatrix(matrix=random_density_matrix(3, rng))
    records = covariant_sample(DensityMatrix.maximally_mixed(3), nu, 1000, seed=4)
    assert np.allclose(records.weights, 1.0)
    records = covariant_sample(DensityMatrix(matrix=random_density_matrix(3, rng)), nu, 1000, seed=4)
    assert records.weights.min() >= 0


def test_covariant_sample_estimate(rng):
    rho = DensityMatrix.pure(haar_unitary(2, rng)[:, 0])
    nu = DensityMatrix.basis(2)
    o = Observable(matrix=random_hermitian(2, rng))
    xi = sud_canonical_dual_xi(nu)
    records = covariant_sample(rho, nu, 100_000, seed=8)
    estimate = mc_estimate(records, lambda u: sud_processing_values(xi, u, o))
    assert within(estimate, np.trace(rho.matrix @ o.matrix).real)


def test_mc_estimate_constant():
    records = ShotRecords(size=5, outcomes=[0, 1, 1, 0, 1], cardinality=2)
    estimate = mc_estimate(records, ProcessingFunction(values=[2.5, 2.5]))
    assert estimate.value == 2.5
    assert estimate.std_error == 0.0


def test_mc_estimate_identity_sud(rng):
    nu = DensityMatrix.basis(2)
    xi = sud_canonical_dual_xi(nu)
    records = covariant_sample(DensityMatrix.pure(haar_unitary(2, rng)[:, 0]), nu, 2000, seed=6)
    identity = Observable(matrix=np.eye(2))
    estimate = mc_estimate(records, lambda u: sud_processing_values(xi, u, identity))
    assert estimate.value == pytest.approx(1.0, abs=1e-12)
    assert estimate.std_error < 1e-12


def test_mc_estimate_weyl_z():
    povm, nu, _, dual = weyl_detector(2)
    f = processing_function(dual, Observable(matrix=PAULI_Z))
    records = sample_outcomes(DensityMatrix.basis(2), nu, povm, 100_000, seed=21)
    assert within(mc_estimate(records, f), 1.0)


def test_mc_estimate_random_pairs(rng):
    povm, nu, _, dual = weyl_detector(2)
    hits = 0
    for k in range(20):
        rho = DensityMatrix(matrix=random_density_matrix(2, rng))
        o = Observable(matrix=random_hermitian(2, rng))
        f = processing_function(dual, o)
        exact = np.trace(rho.matrix @ o.matrix).real
        assert estimate_expectation_exact(rho, nu, povm, f) == pytest.approx(exact, abs=1e-8)
        hits += within(mc_estimate(sample_outcomes(rho, nu, povm, 100_000, seed=100 + k), f), exact)
    assert hits >= 19


def test_mc_estimate_errors():
    empty = ShotRecords(size=0, outcomes=np.zeros(0, dtype=int))
    with pytest.raises(ValueError):
        mc_estimate(empty, ProcessingFunction(values=[1.0]))
    records = ShotRecords(size=2, outcomes=[0, 1], cardinality=2)
    with pytest.raises(ShapeMismatchError):
        mc_estimate(records, ProcessingFunction(values=[1.0, 2.0, 3.0]))
    with pytest.raises(ShapeMismatchError):
        mc_estimate(records, lambda u: u)


def test_covariance_matrix(rng):
    probs = rng.dirichlet(np.ones(6))
    real = covariance_matrix(rng.standard_normal(6), probs)
    assert real.var_im == 0.0 and real.cov == 0.0
    constant = covariance_matrix(np.full(6, 1.5 - 2j), probs)
    assert np.allclose(constant.matrix, 0, atol=1e-12)

    f = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    c = covariance_matrix(f, probs)
    mean = np.sum(probs * f)
    assert c.var_re == pytest.approx(np.sum(probs * (f.real - mean.real) ** 2), abs=1e-12)
    assert c.var_im == pytest.approx(np.sum(probs * (f.imag - mean.imag) ** 2), abs=1e-12)
    assert c.cov == pytest.approx(np.sum(probs * (f.real - mean.real) * (f.imag - mean.imag)), abs=1e-12)
    assert c.eigenvalues.min() >= -1e-12
    with pytest.raises(ShapeMismatchError):
        covariance_matrix(f, probs[:5])


def test_delta_obs_analytic():
    assert delta_obs_analytic(Observable(matrix=PAULI_Z), 2) == pytest.approx(2 / 3)
    assert delta_obs_analytic(Observable(matrix=np.eye(3)), 3) == pytest.approx(0.0, abs=1e-15)
    assert delta_obs_analytic(Observable(matrix=np.diag([1.0, 0.0, 0.0])), 3) == pytest.approx(1 / 6)
    with pytest.raises(NotHermitianError):
        delta_obs_analytic(Observable.of([[0, 1], [0, 0]]), 2)


def test_delta_xi_analytic():
    z = Observable(matrix=PAULI_Z)
    assert delta_xi_analytic(CovariantXi(xi=np.diag([1.0, 0.0])), z, 2) == pytest.approx(0.0)
    xi = sud_canonical_dual_xi(DensityMatrix.basis(2))
    assert delta_xi_analytic(xi, z, 2) == pytest.approx(4 * 2 / 3)
    with pytest.raises(ShapeMismatchError):
        delta_xi_analytic(xi, z, 3)


def test_delta_opt_analytic():
    assert delta_opt_analytic(1.0, 2) == pytest.approx(4.0)
    assert delta_opt_analytic(1.0, 3) == pytest.approx(5.0)
    assert delta_opt_analytic(0.75, 2) == pytest.approx(8.5)
    for d in (2, 3, 4):
        grid = [1 / d + (1 - 1 / d) * k / 20 for k in range(1, 21)]
        values = [delta_opt_analytic(p, d) for p in grid]
        assert all(b < a for a, b in zip(values, values[1:]))
        for p, value in zip(grid, values):
            assert value == pytest.approx((d * d + d - 1 - p) / (d * p - 1), rel=1e-12)
        assert values[-1] == pytest.approx(d + 2)
    with pytest.raises(InvalidStateError):
        delta_opt_analytic(0.5, 2)
    with pytest.raises(InvalidStateError):
        delta_opt_analytic(1.1, 2)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_minimal_noise_factor(d, rng):
    nu = DensityMatrix.basis(d)
    o = Observable(matrix=random_hermitian(d, rng))
    xi = sud_canonical_dual_xi(nu)
    delta_obs = delta_obs_analytic(o, d)
    assert delta_xi_analytic(xi, o, d) / delta_obs == pytest.approx(d + 2, rel=1e-10)
    estimate = delta_xi_mc(xi, nu, o, n_states=10_000, n_group=10, seed=50 + d)
    assert within(estimate, (d + 2) * delta_obs)


def test_delta_xi_mc_identity():
    nu = DensityMatrix.basis(2)
    estimate = delta_xi_mc(sud_canonical_dual_xi(nu), nu, Observable(matrix=np.eye(2)), 2000, 10, seed=3)
    assert within(estimate, 0.0)
    with pytest.raises(InvalidDualError):
        delta_xi_mc(CovariantXi(xi=np.eye(2) / 2), nu, Observable(matrix=np.eye(2)), 100, 10, seed=3)


def test_delta_xi_mc_perturbed(rng):
    nu = DensityMatrix.basis(2)
    z = Observable(matrix=PAULI_Z)
    xi = sud_canonical_dual_xi(nu)
    noisy = CovariantXi(xi=xi.xi + covariant_perturbation(nu, rng, 1.5))
    assert noisy.purity - xi.purity > 0.5
    assert delta_xi_analytic(noisy, z, 2) > delta_xi_analytic(xi, z, 2)
    best = delta_xi_mc(xi, nu, z, 10_000, 10, seed=12)
    worse = delta_xi_mc(noisy, nu, z, 10_000, 10, seed=13)
    assert within(worse, delta_xi_analytic(noisy, z, 2))
    assert worse.value - best.value > 3 * np.hypot(worse.std_error, best.std_error)


def test_delta_xi_mc_reference_state(rng):
    nu = DensityMatrix.basis(2)
    o = Observable(matrix=random_hermitian(2, rng))
    xi = sud_canonical_dual_xi(nu)
    exact = delta_xi_analytic(xi, o, 2)
    default = delta_xi_mc(xi, nu, o, 10_000, 10, seed=21)
    rotated = delta_xi_mc(xi, nu, o, 10_000, 10, seed=22, psi0=haar_unitary(2, rng)[:, 0])
    assert within(default, exact)
    assert within(rotated, exact)
    assert abs(default.value - rotated.value) <= 4 * np.hypot(default.std_error, rotated.std_error)
    # an unnormalized reference state is normalized first
    scaled = delta_xi_mc(xi, nu, o, 1000, 5, seed=23, psi0=[0.0, 3.0])
    assert scaled == delta_xi_mc(xi, nu, o, 1000, 5, seed=23, psi0=[0.0, 1.0])
    with pytest.raises(ShapeMismatchError):
        delta_xi_mc(xi, nu, o, 100, 10, seed=3, psi0=[1.0, 0.0, 0.0])
    with pytest.raises(InvalidStateError):
        delta_obs_mc(o, 2, 100, seed=3, psi0=[0.0, 0.0])


@pytest.mark.parametrize(
    "matrix, d, expected",
    [
        (PAULI_Z, 2, 2 / 3),
        (np.diag([1.0, 0.0, 0.0]), 3, 1 / 6),
    ],
)
def test_delta_obs_mc(matrix, d, expected):
    estimate = delta_obs_mc(Observable(matrix=matrix), d, 100_000, seed=77)
    assert within(estimate, expected)
    assert delta_obs_mc(Observable(matrix=np.eye(d)), d, 1000, seed=77).value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("p", [0.6, 1.0])
def test_purity_scan_spot_checks(p):
    nu = isotropic_ancilla(2, p)
    z = Observable(matrix=PAULI_Z)
    xi = sud_canonical_dual_xi(nu)
    assert delta_xi_analytic(xi, z, 2) / delta_obs_analytic(z, 2) == pytest.approx(delta_opt_analytic(p, 2))
    estimate = delta_xi_mc(xi, nu, z, 10_000, 10, seed=int(p * 100))
    assert within(estimate, delta_opt_analytic(p, 2) * 2 / 3)


def test_average_variance_exact(rng):
    povm, nu, frame, dual = weyl_detector(2)
    o = Observable(matrix=random_hermitian(2, rng))
    f = processing_function(dual, o)
    exact = average_variance_exact(frame, f, o)
    assert exact >= delta_obs_analytic(o, 2)

    samples = []
    for psi in haar_unitaries(2, 20_000, rng)[:, :, 0]:
        rho = DensityMatrix.pure(psi)
        probs = outcome_probabilities(rho, nu, povm)
        mean = np.dot(probs, f.real)
        samples.append(np.dot(probs, f.real**2) - mean**2)
    samples = np.array(samples)
    se = samples.std(ddof=1) / np.sqrt(len(samples))
    assert abs(samples.mean() - exact) < 4 * se


def test_variance_report():
    nu = DensityMatrix.basis(3)
    o = Observable(matrix=np.diag([1.0, -1.0, 0.0]))
    report = variance_report(sud_canonical_dual_xi(nu), nu, o)
    assert report.ratio == pytest.approx(report.delta_xi / report.delta_obs, rel=1e-12)
    assert report.ratio == pytest.approx(5.0)
    assert report.empirical_variance is None

    report = variance_report(sud_canonical_dual_xi(nu), nu, o, n_states=2000, n_group=5, seed=1)
    assert report.shots == 10_000
    assert report.empirical_ratio == pytest.approx(report.empirical_variance / report.delta_obs)
