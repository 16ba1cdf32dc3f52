import json

import numpy as np
import pytest

from core.models import ModelSpec, PathSample
from core.tails import solve_coeff


def make_spec(A, C=None, A0=None) -> ModelSpec:
    terms = [np.asarray(a, dtype=float) for a in (A if isinstance(A, list) else [A])]
    d = terms[0].shape[0]
    return ModelSpec(
        d=d,
        l=len(terms),
        A=terms,
        C=np.eye(d) if C is None else np.asarray(C, dtype=float),
        A0=None if A0 is None else np.asarray(A0, dtype=float),
    )


def make_path(data, seed: int = 0) -> PathSample:
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    return PathSample(data=data, seed=seed, burnin=0, spec_digest="test")


@pytest.fixture
def diag_spec() -> ModelSpec:
    return make_spec(np.diag([0.5, 0.6]))


@pytest.fixture
def scalar_spec() -> ModelSpec:
    return make_spec(0.5 * np.eye(2))


@pytest.fixture
def alpha3_spec() -> ModelSpec:
    """Univariate Diagonal spec whose marginal has tail index 3."""
    return make_spec(np.array([[solve_coeff(3.0)]]))


@pytest.fixture
def spec_file(tmp_path, diag_spec):
    path = tmp_path / "diag.json"
    path.write_text(json.dumps(diag_spec.to_dict()))
    return path
