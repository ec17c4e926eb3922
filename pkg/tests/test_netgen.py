import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad_vec
from scipy.linalg import expm

from netctl import (
    ContinuousSystem,
    ErRecipe,
    Network,
    discretize,
    generate_er,
    load_edge_list,
    network_from_json,
    network_to_json,
    parse_edge_list,
)
from netctl.exceptions import FormatError, ParameterError, PreconditionError

from conftest import STAR_EDGES


def test_er_is_symmetric_with_offset_row_sums():
    net = generate_er(ErRecipe(30, 0.2, (-1.0, 0.0), self_loop_offset=1.0, seed=7))
    A = net.adjacency
    assert np.array_equal(A, A.T)
    assert np.allclose(A.sum(axis=1), 1.0)


def test_er_same_seed_same_network():
    r = ErRecipe(15, 0.3, seed=4)
    assert np.array_equal(generate_er(r).adjacency, generate_er(r).adjacency)
    assert not np.array_equal(generate_er(r).adjacency, generate_er(ErRecipe(15, 0.3, seed=5)).adjacency)


def test_er_extreme_probabilities():
    empty = generate_er(ErRecipe(6, 0.0, self_loop_offset=0.5)).adjacency
    assert np.array_equal(empty, 0.5 * np.eye(6))
    full = generate_er(ErRecipe(6, 1.0, (0.2, 0.4))).adjacency
    off = full[~np.eye(6, dtype=bool)]
    assert np.all((off >= 0.2) & (off <= 0.4))


def test_er_weights_within_interval():
    A = generate_er(ErRecipe(40, 0.5, (0.0, 0.05), seed=1)).adjacency
    off = A[~np.eye(40, dtype=bool)]
    assert off.min() >= 0.0 and off.max() <= 0.05


@pytest.mark.parametrize(
    "kwargs",
    [dict(n=0, p=0.1), dict(n=5, p=1.5), dict(n=5, p=-0.1), dict(n=5, p=0.1, weight_interval=(1.0, 0.0))],
)
def test_er_rejects_bad_parameters(kwargs):
    with pytest.raises(ParameterError):
        generate_er(ErRecipe(**kwargs))


def test_parse_star_edge_list(star_adjacency):
    assert np.array_equal(parse_edge_list(STAR_EDGES).adjacency, star_adjacency)


def test_load_edge_list_with_explicit_size(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("1 2 0.5\n")
    assert load_edge_list(p, n=4).n == 4


@pytest.mark.parametrize(
    "text",
    ["1 2 1\n1 2 1\n", "1 2 1\n2 1 3\n", "0 1 1\n", "1 2\n", "1 2 x\n", "1 2 nan\n", ""],
)
def test_parse_rejects_malformed(text):
    with pytest.raises(FormatError):
        parse_edge_list(text)


def test_parse_rejects_out_of_range_node():
    with pytest.raises(FormatError):
        parse_edge_list("1 5 1\n", n=4)


def test_network_requires_exact_symmetry():
    with pytest.raises(PreconditionError):
        Network(np.array([[0.0, 1.0], [1.0 + 1e-15, 0.0]]))


def test_network_adjacency_is_read_only(star_adjacency):
    net = Network(star_adjacency)
    with pytest.raises(ValueError):
        net.adjacency[0, 0] = 3.0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.floats(0, 1), st.integers(0, 10_000))
def test_json_round_trip(n, p, seed):
    net = generate_er(ErRecipe(n, p, (-1.0, 1.0), 0.3, seed))
    back = network_from_json(network_to_json(net))
    assert np.array_equal(back.adjacency, net.adjacency)


def test_json_keeps_labels_and_rejects_lower_triangle():
    net = Network(np.array([[0.0, 2.0], [2.0, 0.0]]), labels=("a", "b"))
    doc = json.loads(network_to_json(net))
    assert doc["entries"] == [[1, 2, 2.0]]
    assert network_from_json(network_to_json(net)).labels == ("a", "b")
    with pytest.raises(FormatError):
        network_from_json('{"n": 2, "entries": [[2, 1, 1.0]]}')
    with pytest.raises(FormatError):
        network_from_json("{not json")


def test_discretize_matches_quadrature(rng):
    S = rng.standard_normal((4, 4))
    Bin = rng.standard_normal((4, 2))
    eta = 0.3
    A, B = discretize(ContinuousSystem(S, Bin, eta))
    integral, _ = quad_vec(lambda t: expm(S * t), 0.0, eta, epsabs=1e-13, epsrel=1e-13)
    assert np.allclose(A, expm(S * eta), atol=1e-13)
    assert np.allclose(B, integral @ Bin, atol=1e-11)


def test_discretize_scalar_closed_form():
    A, B = discretize(ContinuousSystem(np.array([[-1.0]]), np.array([[1.0]]), 0.5))
    assert A[0, 0] == pytest.approx(np.exp(-0.5), rel=1e-14)
    assert B[0, 0] == pytest.approx(1 - np.exp(-0.5), rel=1e-12)


def test_discretize_errors():
    with pytest.raises(ParameterError):
        discretize(ContinuousSystem(np.eye(2), np.ones(2), 0.0))
    with pytest.raises(OverflowError):
        discretize(ContinuousSystem(1e3 * np.eye(2), np.ones(2), 10.0))
