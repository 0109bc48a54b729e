import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ehkit import maps
from ehkit.errors import DimensionMismatchError, InvalidArgumentError, MapRangeError
from ehkit.estimators import SpectralDecomposer, UlamEstimator
from ehkit.measure import make_uniform_partition
from ehkit.transfer import ulam_operator


def test_params_and_clone():
    est = UlamEstimator(n_cells=16, seed=3)
    assert est.get_params()["n_cells"] == 16
    c = clone(est)
    assert c.get_params() == est.get_params()
    sd = SpectralDecomposer(horizon=30).set_params(match_tol=0.2)
    assert sd.get_params()["match_tol"] == 0.2


def test_fit_from_samples_matches_dyadic():
    # stratified samples: every cell split exactly in half, as for the exact Ulam matrix
    n, m = 32, 64
    x = (np.arange(n * m) + 0.5) / (n * m)
    est = UlamEstimator(n_cells=n).fit(x, (2 * x) % 1.0)
    M = est.operator_.matrix
    exact = np.zeros((n, n))
    for j in range(n):
        exact[(2 * j) % n, j] += 0.5
        exact[(2 * j + 1) % n, j] += 0.5
    assert np.allclose(M, exact, atol=1e-12)


def test_fit_map_and_transform():
    est = UlamEstimator(n_cells=3).fit(maps.cyclic_shift(3))
    out = est.transform(np.array([[3.0, 0, 0], [1.0, 1.0, 1.0]]))
    assert np.allclose(out, [[0, 3.0, 0], [1, 1, 1]])


def test_fit_input_checks():
    est = UlamEstimator(n_cells=4)
    with pytest.raises(InvalidArgumentError):
        est.fit(np.array([0.1, 0.2]))
    with pytest.raises(MapRangeError):
        est.fit(np.array([0.1, 1.5]), np.array([0.2, 0.3]))
    with pytest.raises(InvalidArgumentError):
        est.fit(np.array([0.1, 0.2]), np.array([0.3, 0.4]))


def test_not_fitted():
    with pytest.raises(NotFittedError):
        UlamEstimator().transform(np.ones((1, 4)))
    with pytest.raises(NotFittedError):
        SpectralDecomposer().predict(np.ones((1, 4)))


def test_decomposer_on_shift():
    P = ulam_operator(maps.cyclic_shift(3), make_uniform_partition(3))
    sd = SpectralDecomposer().fit(P)
    assert sd.decomposition_.r == 3
    lam = sd.transform(np.array([[3.0, 0, 0]]))
    assert np.allclose(np.sort(lam[0]), [0, 0, 1])
    assert list(sd.predict(np.ones((2, 3)))) == ["ergodic, not mixing (r = 3, cyclic α)"] * 2
    with pytest.raises(DimensionMismatchError):
        sd.transform(np.ones((1, 4)))


def test_decomposer_accepts_matrix():
    sd = SpectralDecomposer().fit(np.eye(4))
    assert sd.classification_.verdict.startswith("not ergodic")
    with pytest.raises(DimensionMismatchError):
        SpectralDecomposer().fit(np.ones((2, 3)))
