import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netctl import (
    ControlTask,
    DriverSet,
    energies,
    energy_sandwich,
    gramian_target,
    minimum_energy,
    optimal_input,
    simulate,
)
from netctl.energy import write_plan
from netctl.exceptions import NotControllableError, ParameterError

from conftest import random_symmetric


def least_norm_energy(A, B, targets, x0, y_f, tau_f):
    """Oracle: smallest ||u||^2 with C x(tau_f) = y_f, via the pseudo-inverse."""
    C = np.eye(A.shape[0])[np.asarray(targets) - 1]
    blocks = [C @ np.linalg.matrix_power(A, tau_f - 1 - t) @ B for t in range(tau_f)]
    G = np.hstack(blocks)
    beta = y_f - C @ np.linalg.matrix_power(A, tau_f) @ x0
    u = np.linalg.pinv(G) @ beta
    return float(u @ u)


def test_scalar_hand_case():
    # W = 1 + 1/4 + 1/16 + 1/64 = 85/64, so E = 64/85.
    A = np.array([[0.5]])
    task = ControlTask([0.0], [1.0], 4)
    assert minimum_energy(A, np.ones(1), None, task) == pytest.approx(64 / 85, rel=1e-15)
    assert gramian_target(A, np.ones(1), None, 4).W_C[0, 0] == pytest.approx(85 / 64, rel=1e-15)
    assert minimum_energy(A, np.ones(1), None, task, energy_half=True) == pytest.approx(32 / 85, rel=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
def test_energy_matches_pseudo_inverse_oracle(n, seed):
    rng = np.random.default_rng(seed)
    A = random_symmetric(rng, n, rng.uniform(0.5, 1.3))
    m = int(rng.integers(1, n + 1))
    B = DriverSet(sorted(rng.choice(np.arange(1, n + 1), m, replace=False))).input_matrix(n)
    k = int(rng.integers(1, n + 1))
    targets = sorted(int(t) for t in rng.choice(np.arange(1, n + 1), k, replace=False))
    tau_f = int(rng.integers(n, n + 5))
    x0 = rng.standard_normal(n)
    y_f = rng.standard_normal(k)
    try:
        bundle = gramian_target(A, B, targets, tau_f)
    except NotControllableError:
        return
    if bundle.condition_number > 1e7:
        return
    E = minimum_energy(A, B, targets, ControlTask(x0, y_f, tau_f))
    assert E == pytest.approx(least_norm_energy(A, B, targets, x0, y_f, tau_f), rel=1e-8)
    plan = optimal_input(A, B, targets, ControlTask(x0, y_f, tau_f))
    assert plan.energy == pytest.approx(E, rel=1e-8)
    assert plan.endpoint_error <= 1e-8


def test_optimal_input_reaches_star_targets(star_adjacency):
    B = DriverSet([1]).input_matrix(4)
    task = ControlTask(np.zeros(4), [1.0, -2.0, 0.5], 5)
    plan = optimal_input(star_adjacency, B, [1, 2, 3], task)
    assert plan.inputs.shape == (5, 1)
    assert plan.trajectory.shape == (6, 4)
    assert np.allclose(plan.trajectory[-1, :3], task.y_f, atol=1e-10)
    # Nodes 3 and 4 stay in lock step from the origin.
    assert np.allclose(plan.trajectory[:, 2], plan.trajectory[:, 3])
    half = optimal_input(star_adjacency, B, [1, 2, 3], task, energy_half=True)
    assert half.energy == pytest.approx(plan.energy / 2)
    assert np.array_equal(half.inputs, plan.inputs)


def test_uncontrollable_targets(star_adjacency):
    B = DriverSet([1]).input_matrix(4)
    with pytest.raises(NotControllableError):
        minimum_energy(star_adjacency, B, [3, 4], ControlTask(np.zeros(4), [1.0, 0.0], 8))


def test_simulate_zero_input_is_free_response(rng):
    A = random_symmetric(rng, 3)
    x0 = rng.standard_normal(3)
    X = simulate(A, np.eye(3)[:, :1], np.zeros((4, 1)), x0)
    assert np.allclose(X[-1], np.linalg.matrix_power(A, 4) @ x0)


def test_sandwich_and_batch_energies(rng):
    M = rng.standard_normal((4, 4))
    W = M @ M.T + 0.1 * np.eye(4)
    lo, hi = energy_sandwich(W, np.eye(4)[0])
    Y = rng.standard_normal((500, 4))
    Y /= np.linalg.norm(Y, axis=1, keepdims=True)
    E = energies(W, Y)
    assert np.all(E >= lo * (1 - 1e-12)) and np.all(E <= hi * (1 + 1e-12))
    assert np.allclose(E, np.einsum("ij,jk,ik->i", Y, np.linalg.inv(W), Y))
    with pytest.raises(ParameterError):
        energy_sandwich(W, np.ones(4))
    with pytest.raises(NotControllableError):
        energy_sandwich(np.diag([1.0, 0.0]), np.array([1.0, 0.0]))


def test_write_plan(tmp_path, star_adjacency):
    plan = optimal_input(star_adjacency, DriverSet([1]).input_matrix(4), [1, 2, 3],
                         ControlTask(np.zeros(4), [1.0, 0.0, 0.0], 4))
    write_plan(plan, tmp_path / "plan.csv")
    lines = (tmp_path / "plan.csv").read_text().splitlines()
    assert lines[0] == "tau,u1,x1,x2,x3,x4"
    assert len(lines) == 6
    assert lines[-1].split(",")[1] == ""
    assert json.loads((tmp_path / "plan.json").read_text())["E"] == pytest.approx(plan.energy)
