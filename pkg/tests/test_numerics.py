import numpy as np
import pytest

from core.errors import DecompositionError, SymmetryError
from core.numerics import cholesky, diag, identity, is_symmetric, kron, kron_power, spectral_radius


class TestCholesky:
    def test_identity(self):
        np.testing.assert_array_equal(cholesky(identity(2)), identity(2))

    def test_diagonal(self):
        np.testing.assert_allclose(cholesky(np.array([[4.0, 0.0], [0.0, 9.0]])), np.diag([2.0, 3.0]))

    def test_reproduces_input(self):
        m = np.array([[1.0, 0.5], [0.5, 1.0]])
        L = cholesky(m)
        assert np.allclose(np.triu(L, 1), 0.0)
        np.testing.assert_allclose(L @ L.T, m, atol=1e-10)

    def test_indefinite_names_pivot(self):
        with pytest.raises(DecompositionError) as info:
            cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert info.value.pivot == 1

    def test_first_pivot(self):
        with pytest.raises(DecompositionError) as info:
            cholesky(np.array([[-1.0, 0.0], [0.0, 1.0]]))
        assert info.value.pivot == 0

    def test_asymmetric_rejected(self):
        with pytest.raises(SymmetryError):
            cholesky(np.array([[1.0, 0.1], [0.0, 1.0]]))

    def test_round_off_is_symmetrized(self):
        m = np.array([[2.0, 0.3], [0.3 + 1e-13, 2.0]])
        L = cholesky(m)
        np.testing.assert_allclose(L @ L.T, 0.5 * (m + m.T), atol=1e-12)


class TestSpectralRadius:
    @pytest.mark.parametrize("m, expected", [
        (np.diag([0.5, 0.6]), 0.6),
        (np.array([[0.0, 1.0], [0.0, 0.0]]), 0.0),
        (np.array([[2.0, 1.0], [1.0, 2.0]]), 3.0),
        (np.array([[-1.5]]), 1.5),
    ])
    def test_values(self, m, expected):
        assert spectral_radius(m) == pytest.approx(expected, abs=1e-12)

    def test_rotation(self):
        c, s = np.cos(0.3), np.sin(0.3)
        assert spectral_radius(0.8 * np.array([[c, -s], [s, c]])) == pytest.approx(0.8)


class TestKron:
    def test_identity(self):
        np.testing.assert_array_equal(kron(identity(2), identity(2)), identity(4))

    def test_diagonal(self):
        a1, a2 = 0.5, 0.7
        np.testing.assert_allclose(kron(diag([a1, a2]), diag([a1, a2])), np.diag([a1 * a1, a1 * a2, a2 * a1, a2 * a2]))

    def test_against_definition(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[0.0, 1.0], [1.0, 0.0]])
        expected = np.array([
            [0.0, 1.0, 0.0, 2.0],
            [1.0, 0.0, 2.0, 0.0],
            [0.0, 3.0, 0.0, 4.0],
            [3.0, 0.0, 4.0, 0.0],
        ])
        np.testing.assert_array_equal(kron(a, b), expected)

    def test_power(self):
        a = np.array([[1.0, 2.0], [0.0, 1.0]])
        assert kron_power(a, 1).shape == (2, 2)
        np.testing.assert_array_equal(kron_power(a, 3), np.kron(np.kron(a, a), a))

    def test_mixed_product(self):
        rng = np.random.default_rng(3)
        a, b, c, d = (rng.standard_normal((2, 2)) for _ in range(4))
        np.testing.assert_allclose(kron(a, b) @ kron(c, d), kron(a @ c, b @ d), atol=1e-12)


def test_is_symmetric():
    assert is_symmetric(np.eye(3))
    assert not is_symmetric(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert not is_symmetric(np.ones((2, 3)))
