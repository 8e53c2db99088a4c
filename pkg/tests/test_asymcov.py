import numpy as np
import pytest

from tspca import MultivariateSeries, eigendecompose
from tspca import asymcov
from tspca.asymcov import (
    EigenAsymptotics,
    asymptotics_ad,
    asymptotics_dag,
    asymptotics_ind,
    cov_u_gaussian,
    direct_estimate,
    standard_errors,
)
from tspca.dgp import DGPSpec, GaussianNoise, fixture, population_truth
from tspca.eigen import DegenerateEigenvaluesError
from tspca.spectral import model_spectral_density, rotate_spectrum

TWO_PI = 2.0 * np.pi


def diagonal_spectrum(lam, grid=256):
    """g = diag(lam)/(2*pi): the spectrum of independent observations."""
    spec = DGPSpec("vma", (), GaussianNoise(np.zeros(len(lam)), np.diag(lam)))
    return model_spectral_density(spec, grid)


def rotated_model_spectrum(dgp_id, grid=2048):
    spec = fixture(dgp_id)
    truth = population_truth(spec)
    g = rotate_spectrum(model_spectral_density(spec, grid), truth.decomp.vectors)
    return g, truth.decomp


class TestCovUGaussian:
    def test_all_equal_indices(self):
        lam = [3.0, 2.0, 1.0]
        g = diagonal_spectrum(lam)
        for i, lam_i in enumerate(lam):
            assert cov_u_gaussian(g, i, i, i, i) == pytest.approx(
                2.0 * lam_i**2, rel=1e-10
            )

    def test_paired_indices(self):
        lam = [3.0, 2.0, 1.0]
        g = diagonal_spectrum(lam)
        assert cov_u_gaussian(g, 0, 1, 0, 1) == pytest.approx(6.0, rel=1e-10)
        assert cov_u_gaussian(g, 1, 2, 1, 2) == pytest.approx(2.0, rel=1e-10)

    def test_mismatched_diagonal_indices_vanish(self):
        g = diagonal_spectrum([3.0, 2.0, 1.0])
        assert cov_u_gaussian(g, 0, 0, 1, 1) == pytest.approx(0.0, abs=1e-12)

    def test_pair_swap_symmetry(self):
        g, _ = rotated_model_spectrum(2)
        for i, j, k, l in [(0, 1, 2, 3), (1, 1, 2, 0), (0, 2, 1, 4)]:
            a = cov_u_gaussian(g, i, j, k, l)
            b = cov_u_gaussian(g, k, l, i, j)
            assert a == pytest.approx(b, rel=1e-8, abs=1e-10)


class TestIndClosedForms:
    def test_sigma_two_by_two(self):
        decomp = eigendecompose(np.diag([2.0, 1.0]))
        asym = asymptotics_ind(decomp)
        assert np.allclose(asym.sigma[0], np.diag([0.0, 2.0]))

    def test_b_closed_form(self):
        decomp = eigendecompose(np.diag([3.0, 2.0, 1.0]))
        asym = asymptotics_ind(decomp)
        assert np.allclose(asym.B, np.diag([18.0, 8.0, 2.0]))

    def test_eta_hand_value(self):
        decomp = eigendecompose(np.diag([3.0, 2.0, 1.0]))
        asym = asymptotics_ind(decomp)
        assert asym.eta_sq[0] == pytest.approx(7.0 / 36.0, rel=1e-12)
        assert asym.eta_sq[-1] == 0.0

    def test_p_equals_one(self):
        asym = asymptotics_ind(eigendecompose(np.array([[4.0]])))
        assert asym.B[0, 0] == pytest.approx(32.0)
        assert np.allclose(asym.sigma, 0.0)
        assert asym.eta_sq[0] == 0.0


class TestWhiteNoiseReduction:
    """For a flat diagonal spectrum the three engines must coincide."""

    @pytest.fixture(scope="class")
    def engines(self):
        lam = np.array([10.0, 8.0, 6.0, 4.0, 2.0])
        decomp = eigendecompose(np.diag(lam))
        g = diagonal_spectrum(lam, grid=512)
        return (
            asymptotics_ad(g, decomp),
            asymptotics_dag(g, decomp),
            asymptotics_ind(decomp),
        )

    def test_b_agrees(self, engines):
        ad, dag, ind = engines
        scale = np.max(np.abs(ind.B))
        assert np.max(np.abs(ad.B - ind.B)) < 1e-6 * scale
        assert np.max(np.abs(dag.B - ind.B)) < 1e-6 * scale

    def test_sigma_agrees(self, engines):
        ad, dag, ind = engines
        scale = np.max(np.abs(ind.sigma))
        assert np.max(np.abs(ad.sigma - ind.sigma)) < 1e-6 * scale
        assert np.max(np.abs(dag.sigma - ind.sigma)) < 1e-6 * scale

    def test_eta_agrees(self, engines):
        ad, dag, ind = engines
        scale = np.max(ind.eta_sq)
        assert np.max(np.abs(ad.eta_sq - ind.eta_sq)) < 1e-6 * scale
        assert np.max(np.abs(dag.eta_sq - ind.eta_sq)) < 1e-6 * scale


class TestAdEngine:
    def test_b_matches_time_domain_oracle(self):
        # For an order-1 moving average the spectral integrals telescope into
        # sums over the three nonzero autocovariance lags of the rotated series.
        spec = fixture(2)
        truth = population_truth(spec)
        phi = truth.decomp.vectors
        k = 10.0 * np.eye(5)
        g1 = np.asarray(spec.coefficients[0])
        gy0 = phi.T @ truth.covariance @ phi
        gy1 = phi.T @ (g1 @ k) @ phi
        b_oracle = 2.0 * (gy0**2 + gy1**2 + gy1.T**2)
        g, decomp = rotated_model_spectrum(2, grid=4096)
        ad = asymptotics_ad(g, decomp)
        assert np.max(np.abs(ad.B - b_oracle)) < 1e-8 * np.max(b_oracle)

    def test_sigma_matches_time_domain_oracle(self):
        spec = fixture(2)
        truth = population_truth(spec)
        phi = truth.decomp.vectors
        lam = truth.decomp.values
        k = 10.0 * np.eye(5)
        g1 = np.asarray(spec.coefficients[0])
        lags = [phi.T @ truth.covariance @ phi, phi.T @ (g1 @ k) @ phi]
        lags.append(lags[1].T)

        def cov_oracle(i, j, k_, l):
            return sum(gy[i, k_] * gy[j, l] + gy[i, l] * gy[j, k_] for gy in lags)

        p = 5
        sigma_oracle = np.zeros((p, p, p))
        for k_ in range(p):
            w = np.zeros((p, p))
            for i in range(p):
                for j in range(p):
                    if i != k_ and j != k_:
                        w[i, j] = cov_oracle(i, k_, j, k_) / (
                            (lam[k_] - lam[i]) * (lam[k_] - lam[j])
                        )
            sigma_oracle[k_] = phi @ w @ phi.T
        g, decomp = rotated_model_spectrum(2, grid=4096)
        ad = asymptotics_ad(g, decomp)
        assert np.max(np.abs(ad.sigma - sigma_oracle)) < 1e-8 * np.max(
            np.abs(sigma_oracle)
        )

    def test_sigma_annihilates_own_component(self):
        g, decomp = rotated_model_spectrum(2)
        for asym in (
            asymptotics_ad(g, decomp),
            asymptotics_dag(g, decomp),
            asymptotics_ind(decomp),
        ):
            for k in range(decomp.p):
                residual = np.linalg.norm(asym.sigma[k] @ decomp.vectors[:, k])
                assert residual < 1e-8 * max(np.linalg.norm(asym.sigma[k]), 1e-30)

    def test_sigma_psd(self):
        g, decomp = rotated_model_spectrum(1)
        for asym in (asymptotics_ad(g, decomp), asymptotics_dag(g, decomp)):
            for k in range(decomp.p):
                eigvals = np.linalg.eigvalsh(asym.sigma[k])
                assert eigvals.min() > -1e-8 * max(eigvals.max(), 1e-30)

    def test_eta_scale_invariance(self):
        spec = fixture(2)
        scaled = DGPSpec(
            "vma", spec.coefficients, GaussianNoise(np.zeros(5), 70.0 * np.eye(5))
        )
        for build in (
            lambda s: asymptotics_ad(*self._g_and_d(s)),
            lambda s: asymptotics_dag(*self._g_and_d(s)),
            lambda s: asymptotics_ind(self._g_and_d(s)[1]),
        ):
            eta_base = build(spec).eta_sq
            eta_scaled = build(scaled).eta_sq
            assert np.max(np.abs(eta_base - eta_scaled)) < 1e-8 * max(eta_base.max(), 1e-30)

    @staticmethod
    def _g_and_d(spec):
        truth = population_truth(spec)
        g = rotate_spectrum(model_spectral_density(spec, 2048), truth.decomp.vectors)
        return g, truth.decomp


class TestDagEngine:
    def test_b_diagonal(self):
        g, decomp = rotated_model_spectrum(1)
        dag = asymptotics_dag(g, decomp)
        off = dag.B - np.diag(np.diag(dag.B))
        assert np.max(np.abs(off)) == 0.0

    def test_b_diagonal_matches_ad(self):
        for dgp_id in (1, 2):
            g, decomp = rotated_model_spectrum(dgp_id)
            ad = asymptotics_ad(g, decomp)
            dag = asymptotics_dag(g, decomp)
            assert np.max(np.abs(np.diag(ad.B) - np.diag(dag.B))) < 1e-10 * np.max(
                dag.B
            )

    def test_ad_has_nonzero_value_correlations(self):
        g, decomp = rotated_model_spectrum(1)
        ad = asymptotics_ad(g, decomp)
        off = ad.B - np.diag(np.diag(ad.B))
        assert np.max(np.abs(off)) > 1.0  # genuinely correlated eigenvalues


class TestDegeneracyRefusal:
    def test_tied_eigenvalues_refused_with_location(self):
        decomp = eigendecompose(np.diag([2.0, 2.0, 1.0]))
        with pytest.raises(DegenerateEigenvaluesError, match="0 and 1"):
            asymptotics_ind(decomp)

    def test_nonpositive_eigenvalues_refused(self):
        decomp = eigendecompose(np.diag([2.0, 1.0, -0.5]))
        with pytest.raises(ValueError, match="positive"):
            asymptotics_ind(decomp)

    def test_direct_estimate_propagates_refusal(self):
        rng = np.random.default_rng(1)
        base = rng.standard_normal((100, 2))
        data = np.column_stack([base[:, 0], base[:, 0]])  # rank-1 covariance
        with pytest.raises((DegenerateEigenvaluesError, ValueError)):
            direct_estimate(MultivariateSeries(data), "ind")


class TestDirectEstimate:
    def test_ind_monte_carlo_consistency(self):
        rng = np.random.default_rng(20240506)
        data = rng.standard_normal((5000, 3)) * np.sqrt([3.0, 2.0, 1.0])
        est = direct_estimate(MultivariateSeries(data), "ind")
        assert est.scale_n == 5000
        target = np.array([18.0, 8.0, 2.0])
        assert np.max(np.abs(np.diag(est.B) / target - 1.0)) < 0.10

    def test_ad_close_to_ind_for_iid_data(self):
        rng = np.random.default_rng(15)
        data = rng.standard_normal((3000, 3)) * np.sqrt([5.0, 2.0, 1.0])
        series = MultivariateSeries(data)
        ad = direct_estimate(series, "ad")
        ind = direct_estimate(series, "ind")
        # same data, flat true spectrum: plug-in AD should land near IND
        assert np.max(np.abs(np.diag(ad.B) / np.diag(ind.B) - 1.0)) < 0.35

    def test_ad_and_dag_generally_differ(self):
        from tspca.dgp import simulate

        series = simulate(fixture(2), 1000, 3)
        ad = direct_estimate(series, "ad")
        dag = direct_estimate(series, "dag")
        assert not np.allclose(ad.eta_sq[:-1], dag.eta_sq[:-1], rtol=1e-3)

    def test_bandwidth_override(self):
        rng = np.random.default_rng(16)
        series = MultivariateSeries(rng.standard_normal((400, 2)))
        a = direct_estimate(series, "ad", bandwidth=5)
        b = direct_estimate(series, "ad", bandwidth=40)
        assert not np.allclose(a.B, b.B)

    def test_unknown_assumption(self):
        rng = np.random.default_rng(17)
        series = MultivariateSeries(rng.standard_normal((50, 2)))
        with pytest.raises(ValueError, match="assumption"):
            direct_estimate(series, "iid")


class TestStandardErrors:
    def test_arithmetic(self):
        decomp = eigendecompose(np.diag([3.0, 2.0, 1.0]))
        asym = asymptotics_ind(decomp, scale_n=2000)
        se = standard_errors(asym)
        assert np.allclose(se.sd_values, np.sqrt(np.array([18.0, 8.0, 2.0]) / 2000))
        assert se.sd_r[-1] == 0.0

    def test_loading_rows(self):
        decomp = eigendecompose(np.diag([2.0, 1.0]))
        se = standard_errors(asymptotics_ind(decomp, scale_n=2000))
        assert np.allclose(se.sd_loadings[0], [0.0, np.sqrt(2.0 / 2000)])

    def test_requires_scale(self):
        asym = asymptotics_ind(eigendecompose(np.diag([2.0, 1.0])))
        with pytest.raises(ValueError, match="scale_n"):
            standard_errors(asym)

    def test_with_scale(self):
        asym = asymptotics_ind(eigendecompose(np.diag([2.0, 1.0])))
        assert standard_errors(asym.with_scale(100)).sd_values[0] == pytest.approx(
            np.sqrt(8.0 / 100)
        )


class TestBundleInvariants:
    def test_rejects_asymmetric_b(self):
        with pytest.raises(ValueError, match="symmetric"):
            EigenAsymptotics(
                "ind",
                np.array([[1.0, 0.5], [0.0, 1.0]]),
                np.zeros((2, 2, 2)),
                np.array([0.1, 0.0]),
            )

    def test_rejects_nonzero_last_eta(self):
        with pytest.raises(ValueError, match="zero variance"):
            EigenAsymptotics(
                "ind", np.eye(2), np.zeros((2, 2, 2)), np.array([0.1, 0.2])
            )

    def test_rejects_unknown_assumption(self):
        with pytest.raises(ValueError, match="assumption"):
            EigenAsymptotics(
                "iid", np.eye(2), np.zeros((2, 2, 2)), np.array([0.1, 0.0])
            )
