import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from netctl import (
    ControlTask,
    ControllableSubspace,
    DriverSet,
    EnergyBoundEstimator,
    MinimumEnergyControl,
    estimate_bounds,
    minimum_energy,
)


def test_params_round_trip():
    est = MinimumEnergyControl(drivers=(1, 2), targets=[1], tau_f=7)
    assert est.get_params() == {"drivers": (1, 2), "targets": [1], "tau_f": 7, "energy_half": False}
    twin = clone(est).set_params(tau_f=9)
    assert twin.tau_f == 9 and est.tau_f == 7


def test_subspace_transform(star_adjacency):
    cs = ControllableSubspace(drivers=[1]).fit(star_adjacency)
    assert cs.rank_ == 3
    X = np.array([[0.0, 1.0, 2.0, 2.0], [1.0, 0.0, 0.0, 0.0]])
    # Reachable states survive the round trip unchanged.
    assert np.allclose(cs.inverse_transform(cs.transform(X)), X)


def test_minimum_energy_control_predict(star_adjacency):
    model = MinimumEnergyControl(drivers=[1], targets=[1, 2, 3], tau_f=5).fit(star_adjacency)
    Y = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, -1.0]])
    B = DriverSet([1]).input_matrix(4)
    expected = [minimum_energy(star_adjacency, B, [1, 2, 3], ControlTask(np.zeros(4), y, 5)) for y in Y]
    assert np.allclose(model.predict(Y), expected)
    assert model.plan(Y[0]).energy == pytest.approx(expected[0])


def test_bound_estimator_predict(star_adjacency):
    model = EnergyBoundEstimator(drivers=[1], targets=[1, 2, 3]).fit(star_adjacency)
    out = model.predict([6, 12])
    ref = estimate_bounds(star_adjacency, DriverSet([1]).input_matrix(4), [1, 2, 3], 12)
    assert out.shape == (2, 2)
    assert out[1] == pytest.approx([ref.E_lower, ref.E_upper])


def test_not_fitted():
    with pytest.raises(NotFittedError):
        MinimumEnergyControl().predict(np.ones((1, 1)))
    with pytest.raises(NotFittedError):
        ControllableSubspace().transform(np.ones((1, 1)))
