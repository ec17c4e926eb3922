"""Network construction, ingestion and continuous-to-discrete conversion.

Node indices in every file format handled here are 1-based, matching the
usual numbering of nodes in the network-control literature.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm

from ._validation import check_input_matrix, check_square
from .exceptions import FormatError, ParameterError, PreconditionError

__all__ = [
    "Network",
    "ErRecipe",
    "ContinuousSystem",
    "generate_er",
    "load_edge_list",
    "parse_edge_list",
    "network_to_json",
    "network_from_json",
    "discretize",
]


@dataclass(frozen=True)
class Network:
    """Undirected weighted network stored as its symmetric adjacency matrix."""

    adjacency: np.ndarray
    labels: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        A = check_square(self.adjacency, "adjacency")
        if not np.array_equal(A, A.T):
            raise PreconditionError("adjacency must be exactly symmetric")
        A = A.copy()
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != A.shape[0]:
                raise ParameterError(f"expected {A.shape[0]} labels, got {len(labels)}")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]


@dataclass(frozen=True)
class ErRecipe:
    """Erdos-Renyi style generator with Laplacian-shifted self-loops.

    Each unordered pair is linked with probability ``p`` and weight drawn
    uniformly from ``weight_interval``. Node ``i`` then gets a self-loop of
    weight ``self_loop_offset - sum_{j != i} a_ij`` so that every row of the
    adjacency sums to ``self_loop_offset``.
    """

    n: int
    p: float
    weight_interval: tuple[float, float] = (0.0, 1.0)
    self_loop_offset: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"edge probability must lie in [0, 1], got {self.p}")
        lo, hi = self.weight_interval
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
            raise ParameterError(f"invalid weight interval {self.weight_interval}")
        if not np.isfinite(self.self_loop_offset):
            raise ParameterError("self_loop_offset must be finite")


@dataclass(frozen=True)
class ContinuousSystem:
    sys_matrix: np.ndarray
    input_matrix: np.ndarray
    sampling_period: float = 1.0


def generate_er(recipe: ErRecipe) -> Network:
    recipe.validate()
    n = int(recipe.n)
    lo, hi = recipe.weight_interval
    rng = np.random.default_rng(recipe.seed)
    iu, ju = np.triu_indices(n, k=1)
    # Both draws are always made so the weights do not depend on p.
    linked = rng.random(iu.size) < recipe.p
    weights = rng.uniform(lo, hi, iu.size)
    A = np.zeros((n, n))
    A[iu, ju] = np.where(linked, weights, 0.0)
    A[ju, iu] = A[iu, ju]
    off_row_sums = A.sum(axis=1)
    A[np.diag_indices(n)] = recipe.self_loop_offset - off_row_sums
    return Network(A)


def parse_edge_list(text: str, n: Optional[int] = None) -> Network:
    """Build a network from ``i j w`` lines (1-based; ``#`` starts a comment)."""
    entries: dict[tuple[int, int], float] = {}
    max_index = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"line {lineno}: expected 'i j w', got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
        if i < 1 or j < 1:
            raise FormatError(f"line {lineno}: node indices are 1-based, got {i} {j}")
        if not np.isfinite(w):
            raise FormatError(f"line {lineno}: non-finite weight {parts[2]!r}")
        key = (min(i, j), max(i, j))
        if key in entries:
            if entries[key] != w:
                raise FormatError(
                    f"line {lineno}: conflicting weights for edge {key}: {entries[key]} vs {w}"
                )
            raise FormatError(f"line {lineno}: duplicate edge {key}")
        entries[key] = w
        max_index = max(max_index, i, j)
    if n is None:
        n = max_index
    if n < 1:
        raise FormatError("edge list defines no nodes")
    if max_index > n:
        raise FormatError(f"node index {max_index} out of range for n={n}")
    A = np.zeros((n, n))
    for (i, j), w in entries.items():
        A[i - 1, j - 1] = w
        A[j - 1, i - 1] = w
    return Network(A)


def load_edge_list(path: str | os.PathLike, n: Optional[int] = None) -> Network:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh.read(), n=n)


def network_to_json(net: Network) -> str:
    A = net.adjacency
    iu, ju = np.triu_indices(net.n)
    keep = A[iu, ju] != 0
    entries = [[int(i) + 1, int(j) + 1, float(A[i, j])] for i, j in zip(iu[keep], ju[keep])]
    doc = {"n": net.n, "entries": entries}
    if net.labels is not None:
        doc["labels"] = list(net.labels)
    return json.dumps(doc)


def network_from_json(text: str) -> Network:
    try:
        doc = json.loads(text)
        n = int(doc["n"])
        entries = doc["entries"]
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"invalid network JSON: {exc}") from None
    A = np.zeros((n, n))
    for item in entries:
        i, j, w = int(item[0]), int(item[1]), float(item[2])
        if not (1 <= i <= n and 1 <= j <= n):
            raise FormatError(f"entry {item} out of range for n={n}")
        if i > j:
            raise FormatError(f"entry {item} is below the diagonal; store upper triangle only")
        A[i - 1, j - 1] = w
        A[j - 1, i - 1] = w
    return Network(A, labels=doc.get("labels"))


def discretize(cs: ContinuousSystem) -> tuple[np.ndarray, np.ndarray]:
    """Zero-order-hold discretisation ``A = e^{S eta}``, ``B = int_0^eta e^{S t} dt . Bin``.

    Both blocks come out of a single exponential of the augmented matrix
    ``[[S, Bin], [0, 0]] * eta``.
    """
    S = check_square(cs.sys_matrix, "sys_matrix")
    n = S.shape[0]
    Bin = check_input_matrix(cs.input_matrix, n, "input_matrix")
    eta = float(cs.sampling_period)
    if not eta > 0:
        raise ParameterError(f"sampling period must be positive, got {eta}")
    m = Bin.shape[1]
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = S * eta
    aug[:n, n:] = Bin * eta
    with np.errstate(over="ignore", invalid="ignore"):
        E = expm(aug)
    if not np.all(np.isfinite(E)):
        raise OverflowError("matrix exponential overflowed; reduce the sampling period")
    return E[:n, :n], E[:n, n:]

