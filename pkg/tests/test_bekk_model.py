import numpy as np
import pytest

from core.bekk_model import (
    assemble_coefficient, classify, draw_coefficient, draw_coefficients, similarity_scale, spec_digest,
    spec_from_dict, validate_spec,
)
from core.errors import DimensionError, EmptyTermsError, NotPositiveDefiniteError, SpecValidationError
from core.models import ParamLabel

from tests.conftest import make_spec


def _labels(spec):
    return classify(spec).labels


class TestValidateSpec:
    def test_accepts_diagonal(self, diag_spec):
        assert validate_spec(diag_spec) is diag_spec

    def test_indefinite_covariance(self):
        with pytest.raises(NotPositiveDefiniteError):
            validate_spec(make_spec(np.diag([0.5, 0.6]), C=[[1.0, 2.0], [2.0, 1.0]]))

    def test_wrong_shape(self):
        spec = make_spec(np.diag([0.5, 0.6]))
        spec.A = [np.eye(3)]
        with pytest.raises(DimensionError):
            validate_spec(spec)

    def test_l_mismatch(self, diag_spec):
        diag_spec.l = 2
        with pytest.raises(DimensionError):
            validate_spec(diag_spec)

    def test_no_terms(self, diag_spec):
        diag_spec.A, diag_spec.l = [], 0
        with pytest.raises(EmptyTermsError):
            validate_spec(diag_spec)

    def test_non_finite(self, diag_spec):
        diag_spec.A = [np.array([[np.nan, 0.0], [0.0, 0.5]])]
        with pytest.raises(DimensionError):
            validate_spec(diag_spec)


class TestSpecFromDict:
    def test_round_trip(self, diag_spec):
        rebuilt = spec_from_dict(diag_spec.to_dict())
        assert rebuilt.d == 2 and rebuilt.l == 1 and rebuilt.A0 is None
        np.testing.assert_array_equal(rebuilt.A[0], diag_spec.A[0])
        assert spec_digest(rebuilt) == spec_digest(diag_spec)

    def test_missing_key(self):
        with pytest.raises(SpecValidationError, match="C"):
            spec_from_dict({"d": 1, "l": 1, "A": [[[0.5]]]})

    def test_ragged_matrix(self):
        with pytest.raises(DimensionError):
            spec_from_dict({"d": 2, "l": 1, "A": [[[0.5, 0.0], [0.0]]], "C": [[1, 0], [0, 1]]})


class TestClassify:
    def test_scalar(self):
        assert _labels(make_spec(0.7 * np.eye(2))) == {
            ParamLabel.SCALAR, ParamLabel.DIAGONAL, ParamLabel.SIMILARITY,
        }

    def test_diagonal(self):
        assert _labels(make_spec(np.diag([0.8, 0.5]))) == {ParamLabel.DIAGONAL}

    def test_similarity(self):
        rotation = np.array([[0.0, -1.0], [1.0, 0.0]])
        assert _labels(make_spec(0.8 * rotation)) == {ParamLabel.SIMILARITY}
        assert similarity_scale(0.8 * rotation) == pytest.approx(0.8)

    def test_id_candidate(self):
        a = [0.3, 0.4, 0.5, 0.6]
        units = []
        for k in range(4):
            e = np.zeros((2, 2))
            e.flat[k] = a[k]
            units.append(e)
        assert _labels(make_spec(units)) == {ParamLabel.ID_CANDIDATE}

    def test_dependent_terms_are_general(self):
        terms = [np.eye(2), 2 * np.eye(2), np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
        param_class = classify(make_spec(terms))
        assert param_class.labels == {ParamLabel.GENERAL}

    def test_two_terms_general_with_note(self):
        param_class = classify(make_spec([np.diag([0.3, 0.2]), np.array([[0.0, 0.1], [0.1, 0.0]])]))
        assert param_class.labels == {ParamLabel.GENERAL}
        assert "l < d^2" in param_class.details[ParamLabel.GENERAL.value]

    def test_autoregressive_note(self):
        param_class = classify(make_spec(np.diag([0.3, 0.2]), A0=0.5 * np.eye(2)))
        assert "A0" in param_class.details

    def test_scalar_implies_diagonal_and_similarity(self):
        for a in (0.1, 0.9, 1.5):
            labels = _labels(make_spec(a * np.eye(3)))
            assert {ParamLabel.DIAGONAL, ParamLabel.SIMILARITY} <= labels


class TestDraws:
    def test_identity_cholesky(self, diag_spec):
        draw = assemble_coefficient(diag_spec, np.array([0.0]), np.array([1.0, 0.0]))
        np.testing.assert_array_equal(draw.Q, [1.0, 0.0])

    def test_captured_multiplier(self):
        a1, a2 = 0.3, 0.9
        draw = assemble_coefficient(make_spec(np.diag([a1, a2])), np.array([2.0]), np.zeros(2))
        np.testing.assert_allclose(draw.Mtilde, np.diag([2 * a1, 2 * a2]))

    def test_autoregressive_term_added(self):
        spec = make_spec(np.diag([0.3, 0.9]), A0=0.5 * np.eye(2))
        draw = assemble_coefficient(spec, np.array([1.0]), np.zeros(2))
        np.testing.assert_allclose(draw.Mtilde, np.diag([0.8, 1.4]))

    def test_single_draw_matches_batch(self, diag_spec):
        single = draw_coefficient(diag_spec, np.random.default_rng(11))
        mtilde, q = draw_coefficients(diag_spec, np.random.default_rng(11), 1)
        np.testing.assert_allclose(single.Mtilde, mtilde[0])
        np.testing.assert_allclose(single.Q, q[0])

    def test_mean_multiplier_is_zero(self):
        spec = make_spec(np.array([[0.5, 0.2], [-0.1, 0.7]]), C=[[1.0, 0.3], [0.3, 1.0]])
        mtilde, q = draw_coefficients(spec, np.random.default_rng(5), 100_000)
        mean = mtilde.mean(axis=0)
        stderr = mtilde.std(axis=0, ddof=1) / np.sqrt(mtilde.shape[0])
        assert np.all(np.abs(mean) <= 3 * stderr + 1e-15)
        np.testing.assert_allclose(np.cov(q.T), spec.C, atol=0.02)


def test_digest_changes_with_coefficients(diag_spec, scalar_spec):
    assert spec_digest(diag_spec) != spec_digest(scalar_spec)
    assert len(spec_digest(diag_spec)) == 64
