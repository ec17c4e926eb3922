import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netctl import (
    DriverSet,
    TargetSet,
    controllability_matrix,
    controllable_basis,
    decompose_gram_schmidt,
    decompose_permutation,
    decomposition_report,
    numerical_rank,
    orthonormal_completion,
    output_controllability_matrix,
    structural_checks,
)
from netctl.exceptions import DegenerateDecompositionError, ParameterError, PreconditionError

from conftest import random_symmetric

S3, S6, S2 = np.sqrt(3), np.sqrt(6), np.sqrt(2)
GOLDEN_RT = np.array(
    [
        [1, 0, 0, 0],
        [0, 1 / S3, 2 / S6, 0],
        [0, 1 / S3, -1 / S6, 1 / S2],
        [0, 1 / S3, -1 / S6, -1 / S2],
    ]
)
GOLDEN_AC = np.array([[0, S3, 0], [S3, 1 / 3, 2 / np.sqrt(18)], [0, 2 / np.sqrt(18), 2 / 3]])


def test_controllability_matrix_matches_powers(rng):
    A = rng.standard_normal((5, 5))
    B = rng.standard_normal((5, 2))
    expected = np.hstack([np.linalg.matrix_power(A, k) @ B for k in range(5)])
    assert np.allclose(controllability_matrix(A, B), expected)


def test_numerical_rank_matches_svd_oracle(rng):
    for k in range(1, 6):
        M = rng.standard_normal((6, k)) @ rng.standard_normal((k, 7))
        assert numerical_rank(M) == np.linalg.matrix_rank(M) == k
    assert numerical_rank(np.zeros((3, 3))) == 0


def test_golden_completion_of_basis():
    basis = np.array([[1, 0, 0, 0], [0, 1, 1, 1], [3, 1, 0, 0]], dtype=float).T
    assert np.allclose(orthonormal_completion(basis), GOLDEN_RT, atol=1e-12)


def test_golden_decomposition_star4(star_adjacency):
    dec = decompose_gram_schmidt(star_adjacency, DriverSet([1]).input_matrix(4))
    assert dec.rank == 3
    assert np.allclose(dec.R.T, GOLDEN_RT, atol=1e-10)
    assert np.allclose(dec.A_c, GOLDEN_AC, atol=1e-10)
    assert np.allclose(dec.B_c, [[1], [0], [0]], atol=1e-10)
    assert dec.coupling(star_adjacency) < 1e-12


def test_star_output_controllability(star_adjacency):
    B = DriverSet([1]).input_matrix(4)
    assert numerical_rank(output_controllability_matrix(star_adjacency, B, TargetSet([1, 2, 3]))) == 3
    assert numerical_rank(output_controllability_matrix(star_adjacency, B, [3, 4])) == 1
    C = TargetSet([3, 4]).output_matrix(4)
    assert np.allclose(output_controllability_matrix(star_adjacency, B, C)[0],
                       output_controllability_matrix(star_adjacency, B, C)[1])


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.integers(1, 3), st.integers(0, 2**31 - 1), st.integers(0, 3))
def test_decomposition_block_structure(n, m, seed, zero_links):
    rng = np.random.default_rng(seed)
    A = random_symmetric(rng, n)
    # Cut some nodes off so that the controllable rank drops below n.
    cut = rng.choice(n, size=min(zero_links, n - 1), replace=False)
    A[cut, :] = 0.0
    A[:, cut] = 0.0
    A[cut, cut] = rng.uniform(-1, 1, cut.size)
    m = min(m, n)
    keep = [i for i in range(n) if i not in cut][:m]
    B = np.eye(n)[:, keep]
    dec = decompose_gram_schmidt(A, B)
    r = dec.rank
    assert r == numerical_rank(controllability_matrix(A, B), tol=1e-9)
    assert np.allclose(dec.R @ dec.R.T, np.eye(n), atol=1e-10)
    Abar = dec.R @ A @ dec.R.T
    scale = max(1.0, np.max(np.abs(A)))
    assert np.max(np.abs(Abar[r:, :r]), initial=0.0) <= 1e-8 * scale
    assert np.max(np.abs((dec.R @ B)[r:]), initial=0.0) <= 1e-10
    assert np.allclose(dec.A_c, Abar[:r, :r], atol=1e-10 * scale)


def test_controllable_basis_spans_krylov_space(rng):
    A = random_symmetric(rng, 6)
    B = rng.standard_normal((6, 1))
    V = controllable_basis(A, B, max_steps=3)
    K = controllability_matrix(A, B)[:, :3]
    assert V.shape == (6, 3)
    assert np.allclose(V @ (V.T @ K), K, atol=1e-10 * np.max(np.abs(K)))


def test_basis_stays_accurate_on_large_er_network():
    from netctl import ErRecipe, generate_er

    A = np.asarray(generate_er(ErRecipe(20, 0.3, (0, 1), 0.0, seed=2)).adjacency)
    B = DriverSet([1]).input_matrix(20)
    V = controllable_basis(A, B)
    assert np.allclose(V.T @ V, np.eye(V.shape[1]), atol=1e-12)


def test_empty_input_is_degenerate():
    with pytest.raises(DegenerateDecompositionError):
        decompose_gram_schmidt(np.eye(3), np.zeros((3, 1)))


def test_permutation_decomposition_on_disconnected_network():
    A = np.zeros((5, 5))
    A[:3, :3] = [[0.5, 0.2, 0], [0.2, 0.1, 0.3], [0, 0.3, -0.4]]
    A[3:, 3:] = [[1.0, 0.5], [0.5, 2.0]]
    pd = decompose_permutation(A, DriverSet([1]).input_matrix(5))
    assert pd.controllable == (1, 2, 3)
    assert pd.uncontrollable == (4, 5)
    assert np.array_equal(pd.A_c_bar, A[:3, :3])
    assert np.array_equal(pd.theta @ pd.theta.T, np.eye(5))


def test_permutation_needs_nonsingular_a(star_adjacency):
    with pytest.raises(PreconditionError):
        decompose_permutation(star_adjacency, DriverSet([1]).input_matrix(4))


def test_permutation_warns_when_not_node_aligned():
    # Twin leaves 2 and 3 around a hub: the controllable space mixes them.
    A = np.array([[0.5, 1.0, 1.0], [1.0, 0.3, 0.0], [1.0, 0.0, 0.3]])
    with pytest.warns(RuntimeWarning):
        decompose_permutation(A, DriverSet([1]).input_matrix(3))


def test_structural_checks():
    A = np.array([[0.0, 1, 0], [1, 0, 0], [0, 0, 1]])
    rep = structural_checks(A, DriverSet([1]).input_matrix(3))
    assert rep.accessible == (True, True, False)
    assert not rep.structurally_controllable
    # A zero matrix with one driver has a dilation.
    assert not structural_checks(np.zeros((2, 2)), DriverSet([1]).input_matrix(2)).dilation_free
    assert structural_checks(np.array([[0.0, 1], [1, 0]]), DriverSet([1]).input_matrix(2)).structurally_controllable


def test_decomposition_report(star_adjacency):
    dec = decompose_gram_schmidt(star_adjacency, DriverSet([1]).input_matrix(4))
    doc = json.loads(decomposition_report(dec, star_adjacency))
    assert doc["rank"] == 3
    assert doc["controllable_nodes"] == [1, 2]
    assert np.allclose(doc["A_c"], GOLDEN_AC)


@pytest.mark.parametrize("bad", [[0], [1, 1], [], [1.5]])
def test_driver_set_validation(bad):
    with pytest.raises(ParameterError):
        DriverSet(bad)


def test_driver_out_of_range():
    with pytest.raises(ParameterError):
        DriverSet([5]).input_matrix(4)
