"""scikit-learn style wrappers for the classical pipeline.

``UlamEstimator`` learns a transfer operator from sample pairs
``(x, T(x))`` (or directly from a map) and pushes density rows forward.
``SpectralDecomposer`` learns the asymptotic decomposition of a fitted
operator and projects densities onto it.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import DimensionMismatchError, InvalidArgumentError, MapRangeError
from .maps import MapSystem
from .measure import make_uniform_partition
from .spectral import classify, extract_decomposition
from .transfer import TransferOperator, _cell_index, ulam_operator


class UlamEstimator(TransformerMixin, BaseEstimator):
    """Ulam transfer matrix estimated from observed transitions.

    ``fit(X, y)`` takes points ``X`` of shape ``(m, dim)`` and their images
    ``y``.  ``transform(D)`` maps density rows of shape ``(k, n_cells)``
    one step forward.
    """

    def __init__(self, n_cells: int = 256, domain: str = "unit interval", samples_per_cell: int = 1000, seed: int = 0):
        self.n_cells = n_cells
        self.domain = domain
        self.samples_per_cell = samples_per_cell
        self.seed = seed

    def _space(self):
        return make_uniform_partition(self.n_cells, self.domain)

    def fit(self, X, y=None):
        if isinstance(X, MapSystem):
            return self.fit_map(X)
        if y is None:
            raise InvalidArgumentError("fit needs the images y = T(X)")
        space = self._space()
        dim = 2 if self.domain == "unit square" else 1
        X = check_array(X, ensure_2d=False).reshape(-1, dim) if dim == 1 else check_array(X)
        y = check_array(y, ensure_2d=False).reshape(-1, dim) if dim == 1 else check_array(y)
        if X.shape != y.shape or X.shape[1] != dim:
            raise DimensionMismatchError(f"X {X.shape} and y {y.shape} must both be (m, {dim})")
        for arr in (X, y):
            if np.any(arr < -1e-12) or np.any(arr > 1 + 1e-12):
                raise MapRangeError("sample points leave the domain", cell=None)
        src = _cell_index(np.clip(X if dim == 2 else X[:, 0], 0, 1), space)
        dst = _cell_index(np.clip(y if dim == 2 else y[:, 0], 0, 1), space)
        n = space.n_cells
        counts = np.zeros((n, n))
        np.add.at(counts, (dst, src), 1.0)
        per_cell = counts.sum(axis=0)
        if np.any(per_cell == 0):
            raise InvalidArgumentError(f"cell {int(np.argmin(per_cell))} has no samples")
        mu = space.cell_measure
        M = counts / per_cell[None, :] * mu[None, :] / mu[:, None]
        self.operator_ = TransferOperator(M, space, {"kind": "ulam-data", "samples": int(X.shape[0])}).check()
        self.n_features_in_ = n
        return self

    def fit_map(self, system: MapSystem):
        self.operator_ = ulam_operator(system, self._space(), self.samples_per_cell, self.seed)
        self.n_features_in_ = self.n_cells
        return self

    def transform(self, X):
        check_is_fitted(self, "operator_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatchError(f"expected {self.n_features_in_} cell values, got {X.shape[1]}")
        return X @ self.operator_.matrix.T


class SpectralDecomposer(TransformerMixin, BaseEstimator):
    """Asymptotic decomposition of a transfer operator.

    ``fit`` accepts a :class:`TransferOperator` or a square matrix (read on
    the uniform interval partition).  ``transform`` returns the coefficients
    ``lambda_i(f)`` of each density row; ``predict`` returns the verdict
    string for each row, which is a property of the operator alone.
    """

    def __init__(self, tol=None, probe_count: int = 5, horizon: int = 50, radius_tol: float = 0.05, match_tol: float = 0.1, seed: int = 0):
        self.tol = tol
        self.probe_count = probe_count
        self.horizon = horizon
        self.radius_tol = radius_tol
        self.match_tol = match_tol
        self.seed = seed

    def fit(self, X, y=None):
        if not isinstance(X, TransferOperator):
            M = check_array(X)
            if M.shape[0] != M.shape[1]:
                raise DimensionMismatchError("transfer matrix must be square")
            X = TransferOperator(M, make_uniform_partition(M.shape[0])).check()
        self.operator_ = X
        self.decomposition_ = extract_decomposition(
            X,
            tol=self.tol,
            probe_count=self.probe_count,
            horizon=self.horizon,
            radius_tol=self.radius_tol,
            match_tol=self.match_tol,
            seed=self.seed,
        )
        self.classification_ = classify(self.decomposition_)
        self.n_features_in_ = X.n
        return self

    def transform(self, X):
        check_is_fitted(self, "decomposition_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatchError(f"expected {self.n_features_in_} cell values, got {X.shape[1]}")
        return np.array([self.decomposition_.lambdas(row) for row in X])

    def predict(self, X):
        check_is_fitted(self, "classification_")
        X = check_array(X)
        return np.array([self.classification_.verdict] * X.shape[0], dtype=object)
