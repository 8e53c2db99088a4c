import numpy as np
import pytest

from tspca import MultivariateSeries, eigendecompose
from tspca.asymcov import asymptotics_ind, standard_errors
from tspca.bootstrap import MBBConfig, bootstrap_sd, default_block_size, mbb_resample
from tspca.eigen import DegenerateEigenvaluesError


def iid_series(seed, n=2000, scales=(3.0, 2.0, 1.0)):
    rng = np.random.default_rng(seed)
    return MultivariateSeries(rng.standard_normal((n, len(scales))) * np.sqrt(scales))


class TestDefaultBlockSize:
    @pytest.mark.parametrize("n,expected", [(2000, 13), (1000, 10), (8, 2), (27, 3)])
    def test_rule(self, n, expected):
        assert default_block_size(n) == expected

    def test_requires_minimum_length(self):
        with pytest.raises(ValueError, match="n >= 8"):
            default_block_size(7)


class TestMBBConfig:
    def test_rejects_single_replicate(self):
        with pytest.raises(ValueError, match="replicates"):
            MBBConfig(10, 1, 0)

    def test_rejects_zero_block(self):
        with pytest.raises(ValueError, match="block_size"):
            MBBConfig(0, 10, 0)

    def test_rejects_bad_seed(self):
        with pytest.raises(ValueError, match="seed"):
            MBBConfig(10, 10, -1)


class TestMBBResample:
    def test_full_block_returns_original(self):
        s = iid_series(0, n=50)
        out = mbb_resample(s, MBBConfig(50, 2, 7), 0)
        assert np.array_equal(out.data, s.data)

    def test_block_count_and_truncation(self):
        s = iid_series(1, n=2000)
        config = MBBConfig(10, 2, 7)
        out = mbb_resample(s, config, 0)
        assert out.n == 2000  # 200 blocks of 10
        s7 = iid_series(2, n=7)
        out7 = mbb_resample(s7, MBBConfig(3, 2, 7), 0)
        assert out7.n == 7  # 3 blocks of 3, truncated

    def test_deterministic_per_key(self):
        s = iid_series(3, n=100)
        config = MBBConfig(5, 2, 42)
        a = mbb_resample(s, config, 17)
        b = mbb_resample(s, config, 17)
        assert np.array_equal(a.data, b.data)
        c = mbb_resample(s, config, 18)
        assert not np.array_equal(a.data, c.data)

    def test_blocks_are_contiguous_runs(self):
        base = np.arange(40, dtype=float).reshape(-1, 1) + 0.0
        s = MultivariateSeries(np.hstack([base, base * 2.0]))
        out = mbb_resample(s, MBBConfig(4, 2, 5), 0)
        runs = out.data[:, 0].reshape(-1, 4)
        diffs = np.diff(runs, axis=1)
        assert np.all(diffs == 1.0)

    def test_rejects_block_longer_than_series(self):
        s = iid_series(4, n=20)
        with pytest.raises(ValueError, match="exceeds"):
            mbb_resample(s, MBBConfig(21, 2, 0), 0)


class TestBootstrapSD:
    def test_matches_ind_closed_form_for_iid_data(self):
        series = iid_series(20240506)
        result = bootstrap_sd(series, MBBConfig(10, 500, 99))
        closed = standard_errors(
            asymptotics_ind(eigendecompose(np.diag([3.0, 2.0, 1.0])), scale_n=2000)
        )
        mask = closed.sd_loadings > 0
        ratios = result.sd_loadings[mask] / closed.sd_loadings[mask]
        assert np.all(np.abs(ratios - 1.0) < 0.15)
        # own-component entries have no first-order variation
        assert np.max(result.sd_loadings[~mask]) < 0.2 * closed.sd_loadings[mask].min()

    def test_last_proportion_sd_is_zero(self):
        result = bootstrap_sd(iid_series(5, n=300), MBBConfig(5, 50, 1))
        assert result.sd_r[-1] == 0.0
        assert np.all(result.sd_r >= 0)

    def test_full_block_degenerate_spread(self):
        s = iid_series(6, n=64)
        result = bootstrap_sd(s, MBBConfig(64, 10, 3))
        assert np.max(result.sd_loadings) == 0.0
        assert np.max(result.sd_values) == 0.0

    def test_bitwise_determinism(self):
        s = iid_series(7, n=400)
        config = MBBConfig(8, 100, 21)
        a = bootstrap_sd(s, config)
        b = bootstrap_sd(s, config)
        assert np.array_equal(a.sd_loadings, b.sd_loadings)
        assert np.array_equal(a.sd_r, b.sd_r)
        assert a.replicate_count == b.replicate_count

    def test_alignment_guards_against_sign_flips(self):
        # Leading eigenvector with two near-equal max-|.| entries of opposite
        # sign: the global sign convention flips across resamples, so without
        # alignment the loading sds explode.
        v1 = np.array([1.0, -0.999, 0.05])
        v1 /= np.linalg.norm(v1)
        basis = np.linalg.qr(np.column_stack([v1, np.eye(3)[:, 1:]]))[0]
        gamma = basis @ np.diag([6.0, 2.0, 1.0]) @ basis.T
        rng = np.random.default_rng(20240507)
        series = MultivariateSeries(rng.multivariate_normal(np.zeros(3), gamma, 800))
        config = MBBConfig(5, 200, 11)
        aligned = bootstrap_sd(series, config, align=True)
        unaligned = bootstrap_sd(series, config, align=False)
        flip_entries = unaligned.sd_loadings[0, :2] / aligned.sd_loadings[0, :2]
        assert np.all(flip_entries >= 2.0)

    def test_constant_series_refused(self):
        s = MultivariateSeries(np.ones((50, 3)))
        with pytest.raises(DegenerateEigenvaluesError):
            bootstrap_sd(s, MBBConfig(5, 10, 0))

    def test_duplicated_column_refused(self):
        rng = np.random.default_rng(8)
        col = rng.standard_normal(100)
        s = MultivariateSeries(np.column_stack([col, col]))
        with pytest.raises(DegenerateEigenvaluesError):
            bootstrap_sd(s, MBBConfig(5, 10, 0))

    def test_point_decomposition_returned(self):
        s = iid_series(9, n=200)
        result = bootstrap_sd(s, MBBConfig(5, 20, 2))
        expected = eigendecompose(
            np.cov(s.data.T, ddof=0) * (s.n - 0) / s.n  # divisor n
        )
        assert np.allclose(result.point.values, expected.values)
