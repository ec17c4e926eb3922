"""scikit-learn style wrappers over the functional API.

``fit`` takes the network's adjacency matrix ``A`` (and optionally ``B``);
rows of ``X`` / ``Y`` are states or target values.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .bounds import estimate_bounds
from .ctrb import DEFAULT_GS_TOL, DriverSet, as_targets, decompose_gram_schmidt
from .energy import ControlTask, minimum_energy, optimal_input
from .gramian import gramian_target

__all__ = ["ControllableSubspace", "MinimumEnergyControl", "EnergyBoundEstimator"]


class ControllableSubspace(TransformerMixin, BaseEstimator):
    """Projects states onto the controllable coordinates ``x_c = R[:r] x``."""

    def __init__(self, drivers=(1,), tol: float = DEFAULT_GS_TOL):
        self.drivers = drivers
        self.tol = tol

    def fit(self, A, y=None):
        A = check_array(A)
        self.decomposition_ = decompose_gram_schmidt(A, DriverSet(self.drivers).input_matrix(A.shape[0]), self.tol)
        self.rank_ = self.decomposition_.rank
        self.n_features_in_ = A.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "decomposition_")
        X = check_array(X)
        return X @ self.decomposition_.R[: self.rank_].T

    def inverse_transform(self, Xc):
        check_is_fitted(self, "decomposition_")
        Xc = check_array(Xc)
        return Xc @ self.decomposition_.R[: self.rank_]


class MinimumEnergyControl(BaseEstimator):
    """``predict`` returns the minimum energy to reach each row of ``Y`` (from ``x0 = 0``)."""

    def __init__(self, drivers=(1,), targets=None, tau_f: int = 10, energy_half: bool = False):
        self.drivers = drivers
        self.targets = targets
        self.tau_f = tau_f
        self.energy_half = energy_half

    def fit(self, A, y=None):
        A = check_array(A)
        n = A.shape[0]
        self.A_ = A
        self.B_ = DriverSet(self.drivers).input_matrix(n)
        self.targets_ = as_targets(self.targets, n)
        self.gramian_ = gramian_target(A, self.B_, self.targets_, self.tau_f)
        return self

    def predict(self, Y):
        check_is_fitted(self, "gramian_")
        Y = check_array(Y)
        x0 = np.zeros(self.A_.shape[0])
        return np.array([
            minimum_energy(self.A_, self.B_, self.targets_, ControlTask(x0, y, self.tau_f), self.energy_half)
            for y in Y
        ])

    def plan(self, y_f, x0=None):
        check_is_fitted(self, "gramian_")
        x0 = np.zeros(self.A_.shape[0]) if x0 is None else x0
        return optimal_input(self.A_, self.B_, self.targets_, ControlTask(x0, y_f, self.tau_f), self.energy_half)


class EnergyBoundEstimator(BaseEstimator):
    """``predict`` maps horizons to ``[E_lower, E_upper]`` estimates."""

    def __init__(self, drivers=(1,), targets=None, form: str = "asymptotic"):
        self.drivers = drivers
        self.targets = targets
        self.form = form

    def fit(self, A, y=None):
        A = check_array(A)
        self.A_ = A
        self.B_ = DriverSet(self.drivers).input_matrix(A.shape[0])
        self.decomposition_ = decompose_gram_schmidt(A, self.B_)
        return self

    def predict(self, tau_fs):
        check_is_fitted(self, "decomposition_")
        out = []
        for t in np.atleast_1d(tau_fs).ravel():
            est = estimate_bounds(self.A_, self.B_, self.targets, int(t),
                                  decomposition=self.decomposition_, form=self.form)
            out.append([est.E_lower, est.E_upper])
        return np.array(out)
