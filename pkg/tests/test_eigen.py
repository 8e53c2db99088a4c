import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tspca import eigen
from tspca.eigen import (
    ConvergenceError,
    EigenDecomposition,
    NotSymmetricError,
    align_signs,
    eigendecompose,
    proportion_of_variation,
)

RT2 = 1.0 / np.sqrt(2.0)


def random_symmetric(rng, p):
    a = rng.standard_normal((p, p))
    return (a + a.T) / 2.0


class TestEigendecompose:
    def test_diagonal_input(self):
        d = eigendecompose(np.diag([3.0, 2.0, 1.0]))
        assert np.allclose(d.values, [3.0, 2.0, 1.0])
        assert np.allclose(d.vectors, np.eye(3))
        assert d.source_trace == pytest.approx(6.0)

    def test_two_by_two_hand_example(self):
        d = eigendecompose(np.array([[2 / 3, 1 / 3], [1 / 3, 2 / 3]]))
        assert np.allclose(d.values, [1.0, 1 / 3])
        assert np.allclose(d.vectors[:, 0], [RT2, RT2])
        assert np.allclose(d.vectors[:, 1], [RT2, -RT2])

    def test_reconstruction_random(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            m = random_symmetric(rng, 5)
            d = eigendecompose(m)
            recon = d.vectors @ np.diag(d.values) @ d.vectors.T
            assert np.max(np.abs(recon - m)) < 1e-8 * max(1.0, np.linalg.norm(m))

    def test_rejects_nonsymmetric(self):
        with pytest.raises(NotSymmetricError):
            eigendecompose(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError, match="square"):
            eigendecompose(np.zeros((2, 3)))

    def test_convergence_cap_reported_distinctly(self):
        rng = np.random.default_rng(1)
        m = random_symmetric(rng, 6)
        with pytest.raises(ConvergenceError):
            eigendecompose(m, max_sweeps=1)

    def test_p_equals_one(self):
        d = eigendecompose(np.array([[4.0]]))
        assert d.values[0] == 4.0
        assert d.vectors[0, 0] == 1.0

    def test_zero_matrix(self):
        d = eigendecompose(np.zeros((3, 3)))
        assert np.allclose(d.values, 0.0)
        assert d.near_degenerate

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        m = random_symmetric(rng, 7)
        d1 = eigendecompose(m)
        d2 = eigendecompose(m.copy())
        assert np.array_equal(d1.values, d2.values)
        assert np.array_equal(d1.vectors, d2.vectors)


@pytest.fixture(scope="module")
def decompositions():
    rng = np.random.default_rng(20240503)
    out = []
    for i in range(1000):
        p = 2 + i % 9
        m = random_symmetric(rng, p)
        out.append((m, eigendecompose(m)))
    return out


class TestPropertySuite:
    """Bulk invariants on 1000 random symmetric matrices, p in 2..10."""

    def test_orthonormality(self, decompositions):
        for _, d in decompositions:
            gap = np.max(np.abs(d.vectors.T @ d.vectors - np.eye(d.p)))
            assert gap < 1e-8

    def test_descending_order(self, decompositions):
        for _, d in decompositions:
            assert np.all(np.diff(d.values) <= 0)

    def test_reconstruction(self, decompositions):
        for m, d in decompositions:
            recon = d.vectors @ np.diag(d.values) @ d.vectors.T
            assert np.max(np.abs(recon - m)) < 1e-8 * max(1.0, np.linalg.norm(m))

    def test_sign_convention(self, decompositions):
        for _, d in decompositions:
            for k in range(d.p):
                col = d.vectors[:, k]
                assert col[int(np.argmax(np.abs(col)))] > 0

    def test_sign_fix_idempotent(self, decompositions):
        for _, d in decompositions:
            assert np.array_equal(eigen._fix_signs(d.vectors), d.vectors)


class TestConstructionOracle:
    def test_recovers_planted_spectrum(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            p = int(rng.integers(2, 8))
            q, _ = np.linalg.qr(rng.standard_normal((p, p)))
            planted = np.sort(rng.uniform(0.5, 10.0, size=p))[::-1]
            d = eigendecompose(q @ np.diag(planted) @ q.T)
            assert np.max(np.abs(d.values - planted)) < 1e-8


class TestDegeneracyFlag:
    def test_identity_flagged(self):
        d = eigendecompose(np.eye(4))
        assert d.near_degenerate
        assert d.degenerate_gaps() == (0, 1, 2)

    def test_distinct_not_flagged(self):
        d = eigendecompose(np.diag([3.0, 2.0, 1.0]))
        assert not d.near_degenerate

    def test_tiny_gap_flagged(self):
        d = eigendecompose(np.diag([1.0, 1.0 - 1e-12, 0.5]))
        assert d.degenerate_gaps() == (0,)


class TestAlignSigns:
    def test_reference_is_self(self):
        d = eigendecompose(np.diag([2.0, 1.0]))
        aligned = align_signs(d, d.vectors)
        assert np.array_equal(aligned.vectors, d.vectors)

    def test_reference_negated(self):
        rng = np.random.default_rng(4)
        d = eigendecompose(random_symmetric(rng, 4))
        aligned = align_signs(d, -d.vectors)
        assert np.array_equal(aligned.vectors, -d.vectors)
        assert np.array_equal(aligned.values, d.values)

    def test_alignment_gives_nonnegative_dots(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            d = eigendecompose(random_symmetric(rng, 5))
            q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
            aligned = align_signs(d, q)
            dots = np.einsum("ij,ij->j", aligned.vectors, q)
            assert np.all(dots >= 0)

    def test_shape_mismatch(self):
        d = eigendecompose(np.diag([2.0, 1.0]))
        with pytest.raises(ValueError, match="shape"):
            align_signs(d, np.eye(3))


class TestProportionOfVariation:
    def test_hand_arithmetic(self):
        prop = proportion_of_variation(np.array([3.0, 2.0, 1.0]))
        assert np.allclose(prop.r, [0.5, 5 / 6, 1.0])
        assert prop.r[-1] == 1.0

    def test_single_component(self):
        assert proportion_of_variation(np.array([7.3])).r[0] == 1.0

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError, match="positive"):
            proportion_of_variation(np.array([2.0, 0.0]))

    @given(
        st.lists(st.floats(min_value=0.01, max_value=1e6), min_size=1, max_size=8),
        st.floats(min_value=1e-3, max_value=1e3),
    )
    @settings(max_examples=50, deadline=None)
    def test_scale_invariance(self, values, c):
        values = np.sort(np.asarray(values))[::-1]
        r1 = proportion_of_variation(values).r
        r2 = proportion_of_variation(c * values).r
        assert np.allclose(r1, r2, rtol=1e-12, atol=1e-12)

    def test_final_entry_exactly_one(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            values = np.sort(rng.uniform(0.1, 5.0, size=6))[::-1]
            assert proportion_of_variation(values).r[-1] == 1.0


class TestEigenDecompositionType:
    def test_rejects_ascending_values(self):
        with pytest.raises(ValueError, match="descending"):
            EigenDecomposition(np.array([1.0, 2.0]), np.eye(2), 3.0)

    def test_arrays_readonly(self):
        d = eigendecompose(np.diag([2.0, 1.0]))
        with pytest.raises(ValueError):
            d.values[0] = 5.0
