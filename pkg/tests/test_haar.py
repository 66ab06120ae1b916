import numpy as np
import pytest
from scipy import stats

from gausshaar.haar import (
    EnvelopeViolationError,
    EulerGaussianUnitary,
    LambdaVector,
    apply_to_vacuum,
    euler_to_symplectic,
    passive_symplectic,
    sample_haar_unitary,
    sample_homogeneous_gaussian_unitary,
    sample_lambda,
    sample_repulsive,
    squeeze_symplectic,
    vandermonde_repulsion,
)
from gausshaar.symplectic import (
    Bipartition,
    symplectic_form,
    tmsv_state,
    tmsv_symplectic,
    williamson_spectrum,
)


class TestHaarUnitary:
    def test_unitarity(self):
        rng = np.random.default_rng(0)
        for n in (1, 2, 5):
            U = sample_haar_unitary(n, rng)
            assert np.abs(U.conj().T @ U - np.eye(n)).max() < 1e-12

    def test_phase_circular_symmetry_n1(self):
        rng = np.random.default_rng(1)
        draws = sample_haar_unitary(1, rng, size=100_000)[:, 0, 0]
        assert np.abs(draws.mean()) < 3.0 / np.sqrt(draws.size)

    def test_second_moment_is_one_over_n(self):
        rng = np.random.default_rng(2)
        n = 4
        U = sample_haar_unitary(n, rng, size=100_000)
        m = np.abs(U[:, 0, 0]) ** 2
        stderr = m.std(ddof=1) / np.sqrt(m.size)
        assert abs(m.mean() - 1.0 / n) < 3 * stderr

    def test_u11_squared_uniform_for_n2(self):
        rng = np.random.default_rng(3)
        U = sample_haar_unitary(2, rng, size=100_000)
        t = np.abs(U[:, 0, 0]) ** 2
        ks = stats.kstest(t, "uniform").statistic
        assert ks < 0.01

    def test_left_invariance_smoke(self):
        rng = np.random.default_rng(4)
        fixed = sample_haar_unitary(2, np.random.default_rng(99))
        U = sample_haar_unitary(2, rng, size=100_000)
        t_plain = np.abs(U[:, 0, 0]) ** 2
        t_shift = np.abs((fixed @ U)[:, 0, 0]) ** 2
        assert stats.ks_2samp(t_plain, t_shift).statistic < 0.02


class TestLambdaSampler:
    def test_n1_uniform(self):
        rng = np.random.default_rng(5)
        lam = sample_lambda(1, 5.0, rng, size=100_000)[:, 0]
        ks = stats.kstest(lam, stats.uniform(loc=1.0, scale=4.0).cdf).statistic
        assert ks < 0.01

    def test_range_always_respected(self):
        rng = np.random.default_rng(6)
        lam = sample_lambda(3, 4.0, rng, size=2_000)
        assert lam.min() >= 1.0 and lam.max() <= 4.0

    def test_n2_close_pair_probability(self):
        # P(|l1 - l2| < 0.1) on [1,3]^2 against 2D quadrature of |l1 - l2|
        rng = np.random.default_rng(7)
        count = 100_000
        lam = sample_lambda(2, 3.0, rng, size=count)
        gap = np.abs(lam[:, 0] - lam[:, 1])
        hits = gap < 0.1
        # int |x-y| over [1,3]^2 = w^3/3 with w=2; band mass by direct formula
        w, d = 2.0, 0.1
        total = w**3 / 3
        band = d**2 * w - 2 * d**3 / 3  # int_{|x-y|<d} |x-y|
        expected = band / total
        stderr = np.sqrt(expected * (1 - expected) / count)
        assert abs(hits.mean() - expected) < 3 * stderr

    def test_n2_sign_symmetry(self):
        rng = np.random.default_rng(8)
        lam = sample_lambda(2, 3.0, rng, size=100_000)
        frac = (lam[:, 0] > lam[:, 1]).mean()
        assert abs(frac - 0.5) < 3 * 0.5 / np.sqrt(lam.shape[0])

    def test_n2_joint_density_chi2(self):
        rng = np.random.default_rng(9)
        count = 100_000
        lam = sample_lambda(2, 3.0, rng, size=count)
        edges = np.linspace(1.0, 3.0, 21)
        counts, _, _ = np.histogram2d(lam[:, 0], lam[:, 1], bins=[edges, edges])
        # expected cell masses of |x - y| by fine midpoint quadrature
        fine = np.linspace(1.0, 3.0, 20 * 6 + 1)
        mids = 0.5 * (fine[:-1] + fine[1:])
        X, Y = np.meshgrid(mids, mids, indexing="ij")
        cellmass = np.abs(X - Y) * np.diff(fine)[:, None] * np.diff(fine)[None, :]
        expected_prob = cellmass.reshape(20, 6, 20, 6).sum(axis=(1, 3))
        expected_prob /= expected_prob.sum()
        expected = count * expected_prob
        keep = expected > 5
        chi2 = ((counts[keep] - expected[keep]) ** 2 / expected[keep]).sum()
        dof = keep.sum() - 1
        assert stats.chi2.sf(chi2, dof) > 0.01

    def test_cutoff_validation(self):
        with pytest.raises(ValueError):
            sample_lambda(2, 1.0, np.random.default_rng(0))

    def test_envelope_violation_detected(self):
        rng = np.random.default_rng(10)
        with pytest.raises(EnvelopeViolationError):
            sample_repulsive(2, 1.0, 3.0, 100, rng, envelope=1e-6)


class TestEulerSymplectic:
    def test_identity_factors_give_identity(self):
        g = EulerGaussianUnitary(0.0, np.eye(2), np.zeros(2), np.eye(2))
        assert np.allclose(euler_to_symplectic(g), np.eye(4), atol=1e-15)

    def test_single_mode_squeeze_oracle(self):
        s1 = 0.35
        g = EulerGaussianUnitary(0.0, np.eye(1), np.array([s1]), np.eye(1))
        state = apply_to_vacuum(euler_to_symplectic(g))
        assert np.allclose(
            state.covariance, np.diag([np.exp(-4 * s1), np.exp(4 * s1)]), atol=1e-12
        )
        nu = williamson_spectrum(state, Bipartition(1, 0)).nu
        assert nu[0] == pytest.approx(1.0, abs=1e-10)

    def test_symplectic_group_membership(self):
        rng = np.random.default_rng(12)
        omega = symplectic_form(3).matrix
        for _ in range(100):
            g = sample_homogeneous_gaussian_unitary(3, 6.0, rng)
            S = euler_to_symplectic(g)
            assert np.abs(S @ omega @ S.T - omega).max() < 1e-10 * max(
                1.0, np.abs(S).max() ** 2
            )

    def test_theta_has_no_effect(self):
        rng = np.random.default_rng(13)
        U = sample_haar_unitary(2, rng)
        Up = sample_haar_unitary(2, rng)
        s = np.array([0.2, 0.5])
        a = euler_to_symplectic(EulerGaussianUnitary(0.0, U, s, Up))
        b = euler_to_symplectic(EulerGaussianUnitary(1.7, U, s, Up))
        assert np.array_equal(a, b)

    def test_passive_is_orthogonal_symplectic(self):
        rng = np.random.default_rng(14)
        U = sample_haar_unitary(3, rng)
        O = passive_symplectic(U)
        omega = symplectic_form(3).matrix
        assert np.abs(O @ O.T - np.eye(6)).max() < 1e-12
        assert np.abs(O @ omega @ O.T - omega).max() < 1e-12

    def test_squeeze_matrix_shape(self):
        Z = squeeze_symplectic([0.3])
        assert np.allclose(Z, np.diag([np.exp(-0.6), np.exp(0.6)]), atol=1e-15)


class TestApplyToVacuum:
    def test_identity_gives_vacuum(self):
        state = apply_to_vacuum(np.eye(4))
        assert np.array_equal(state.covariance, np.eye(4))

    def test_tmsv_cross_constructor(self):
        r = 0.6
        state = apply_to_vacuum(tmsv_symplectic(r))
        assert np.allclose(state.covariance, tmsv_state(r).covariance, atol=1e-10)

    def test_rejects_non_symplectic(self):
        with pytest.raises(ValueError):
            apply_to_vacuum(2.0 * np.eye(4))

    def test_sampled_states_pass_invariants(self):
        rng = np.random.default_rng(15)
        for _ in range(20):
            g = sample_homogeneous_gaussian_unitary(2, 5.0, rng)
            apply_to_vacuum(euler_to_symplectic(g))  # constructor validates


class TestSmallLimits:
    def test_cutoff_near_one_gives_vacuum_spectrum(self):
        rng = np.random.default_rng(16)
        g = sample_homogeneous_gaussian_unitary(2, 1.0 + 1e-9, rng)
        state = apply_to_vacuum(euler_to_symplectic(g))
        nu = williamson_spectrum(state, Bipartition(1, 1)).nu
        assert nu[0] == pytest.approx(1.0, abs=1e-6)

    def test_haar_moment_grid(self):
        rng = np.random.default_rng(17)
        n = 3
        U = sample_haar_unitary(n, rng, size=100_000)
        m = (np.abs(U) ** 2).mean(axis=0)
        stderr = (np.abs(U) ** 2).std(axis=0, ddof=1) / np.sqrt(U.shape[0])
        assert np.all(np.abs(m - 1.0 / n) < 4 * stderr)

    def test_vandermonde_repulsion_values(self):
        assert vandermonde_repulsion(np.array([2.0, 5.0])) == pytest.approx(3.0)
        assert vandermonde_repulsion(np.array([1.0, 2.0, 4.0])) == pytest.approx(6.0)

    def test_lambda_vector_squeezings(self):
        lv = LambdaVector(values=np.array([np.cosh(0.8)]))
        assert lv.s[0] == pytest.approx(0.4, abs=1e-12)
