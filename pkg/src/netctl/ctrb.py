"""Controllability analysis and controllable-subspace decompositions.

Node indices (drivers, targets, node sets in reports) are 1-based.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.sparse.csgraph import breadth_first_order

from ._validation import check_input_matrix, check_node_indices, check_square
from .exceptions import DegenerateDecompositionError, ParameterError, PreconditionError

__all__ = [
    "DriverSet",
    "TargetSet",
    "ControllableDecomposition",
    "PermutationDecomposition",
    "StructuralReport",
    "DEFAULT_GS_TOL",
    "controllability_matrix",
    "numerical_rank",
    "output_controllability_matrix",
    "orthonormal_completion",
    "controllable_basis",
    "decompose_gram_schmidt",
    "decompose_permutation",
    "structural_checks",
    "decomposition_report",
]

# Relative residual below which a Krylov candidate counts as dependent.
DEFAULT_GS_TOL = 1e-10


@dataclass(frozen=True)
class DriverSet:
    """Ordered 1-based driver nodes; ``input_matrix(n)`` gives ``B = [e_d1 ... e_dm]``."""

    indices: tuple[int, ...]

    def __init__(self, indices: Iterable[int]):
        object.__setattr__(self, "indices", check_node_indices(indices, None, "drivers"))

    def __len__(self):
        return len(self.indices)

    def input_matrix(self, n: int) -> np.ndarray:
        check_node_indices(self.indices, n, "drivers")
        B = np.zeros((n, len(self.indices)))
        for k, d in enumerate(self.indices):
            B[d - 1, k] = 1.0
        return B


@dataclass(frozen=True)
class TargetSet:
    """Ordered 1-based target nodes; ``output_matrix(n)`` stacks identity rows."""

    indices: tuple[int, ...]

    def __init__(self, indices: Iterable[int]):
        object.__setattr__(self, "indices", check_node_indices(indices, None, "targets"))

    def __len__(self):
        return len(self.indices)

    @property
    def zero_based(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=int) - 1

    def output_matrix(self, n: int) -> np.ndarray:
        check_node_indices(self.indices, n, "targets")
        return np.eye(n)[self.zero_based]


TargetsLike = Union[TargetSet, Sequence[int], None]


def as_targets(targets: TargetsLike, n: int) -> TargetSet:
    if targets is None:
        return TargetSet(range(1, n + 1))
    if not isinstance(targets, TargetSet):
        targets = TargetSet(targets)
    check_node_indices(targets.indices, n, "targets")
    return targets


def as_input_matrix(B, n: int) -> np.ndarray:
    if isinstance(B, DriverSet):
        return B.input_matrix(n)
    return check_input_matrix(B, n)


@dataclass(frozen=True)
class ControllableDecomposition:
    """Orthogonal change of coordinates ``xbar = R x`` splitting off the controllable part.

    The first ``rank`` rows of ``R`` span the column space of the
    controllability matrix, so ``R A R^T = blockdiag(A_c, A_nc)`` and
    ``R B = [B_c; 0]``.
    """

    rank: int
    R: np.ndarray
    A_c: np.ndarray
    B_c: np.ndarray
    A_nc: np.ndarray

    @property
    def basis(self) -> np.ndarray:
        """n x r orthonormal basis of the controllable subspace (first r columns of R^T)."""
        return self.R[: self.rank].T

    @property
    def R1(self) -> np.ndarray:
        return self.R[: self.rank, : self.rank]

    def target_rows(self, targets: TargetSet) -> np.ndarray:
        """Rows of the controllable basis at the target nodes (``C V``, k x r).

        With the targets equal to nodes ``1..r`` this is ``R1^T``.
        """
        return self.basis[targets.zero_based]

    def coupling(self, A) -> float:
        """Largest entry of the off-diagonal blocks of ``R A R^T``."""
        Abar = self.R @ np.asarray(A, dtype=float) @ self.R.T
        r = self.rank
        if r == Abar.shape[0]:
            return 0.0
        return float(max(np.max(np.abs(Abar[:r, r:])), np.max(np.abs(Abar[r:, :r]))))


@dataclass(frozen=True)
class PermutationDecomposition:
    controllable: tuple[int, ...]
    uncontrollable: tuple[int, ...]
    theta: np.ndarray
    A_c_bar: np.ndarray


@dataclass(frozen=True)
class StructuralReport:
    accessible: tuple[bool, ...]
    dilation_free: bool

    @property
    def structurally_controllable(self) -> bool:
        return all(self.accessible) and self.dilation_free


def controllability_matrix(A, B) -> np.ndarray:
    """Return ``[B, AB, ..., A^{n-1} B]`` built by repeated multiplication."""
    A = check_square(A)
    n = A.shape[0]
    B = as_input_matrix(B, n)
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def numerical_rank(M, tol: Optional[float] = None) -> int:
    """Number of singular values above ``tol * sigma_max``.

    The default relative tolerance is ``max(M.shape) * eps``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    if tol is None:
        tol = max(M.shape) * np.finfo(float).eps
    elif tol <= 0:
        raise ParameterError("rank tolerance must be positive")
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def output_controllability_matrix(A, B, C) -> np.ndarray:
    """``[CB, CAB, ..., C A^{n-1} B]``; ``C`` may be a TargetSet or an r x n matrix."""
    A = check_square(A)
    n = A.shape[0]
    if isinstance(C, TargetSet) or (not hasattr(C, "shape") and np.ndim(C) == 1):
        return controllability_matrix(A, B)[as_targets(C, n).zero_based]
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[1] != n:
        raise ParameterError(f"C must have {n} columns, got shape {C.shape}")
    return C @ controllability_matrix(A, B)


def _orthogonalize(w: np.ndarray, Q: list[np.ndarray]) -> np.ndarray:
    # Two passes of classical Gram-Schmidt ("twice is enough").
    if Q:
        Qm = np.column_stack(Q)
        w = w - Qm @ (Qm.T @ w)
        w = w - Qm @ (Qm.T @ w)
    return w


def orthonormal_completion(columns, tol: float = DEFAULT_GS_TOL) -> np.ndarray:
    """Gram-Schmidt the given columns, then extend to an orthonormal basis of R^n.

    Columns that are dependent on earlier ones are skipped. The extension runs
    the same procedure over ``e_1, ..., e_n`` in order. Returns ``R^T``, i.e.
    the basis vectors as columns.
    """
    X = np.asarray(columns, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    Q: list[np.ndarray] = []
    for cols in (X.T, np.eye(n)):
        for v in cols:
            nv = np.linalg.norm(v)
            if nv == 0:
                continue
            w = _orthogonalize(v, Q)
            nw = np.linalg.norm(w)
            if nw > tol * nv:
                Q.append(w / nw)
            if len(Q) == n:
                break
    return np.column_stack(Q)


def controllable_basis(A, B, tol: float = DEFAULT_GS_TOL, max_steps: Optional[int] = None) -> np.ndarray:
    """Orthonormal basis of ``span[B, AB, ..., A^{s-1} B]`` with ``s = max_steps`` (default n).

    Columns are visited in controllability-matrix order. Instead of forming
    ``A^k b`` explicitly, the candidate for ``A^k b_j`` is ``A`` applied to the
    normalised residual of ``A^{k-1} b_j``; the spanned spaces agree step by
    step in exact arithmetic, and the Krylov powers never need to be
    represented in floating point. A chain whose candidate is dependent stops.
    """
    A = check_square(A)
    n = A.shape[0]
    B = as_input_matrix(B, n)
    steps = n if max_steps is None else min(int(max_steps), n)
    Q: list[np.ndarray] = []
    chains = [B[:, j].copy() for j in range(B.shape[1])]
    for _ in range(steps):
        survivors = []
        for v in chains:
            nv = np.linalg.norm(v)
            if nv == 0:
                continue
            w = _orthogonalize(v, Q)
            nw = np.linalg.norm(w)
            if nw > tol * nv and len(Q) < n:
                q = w / nw
                Q.append(q)
                survivors.append(A @ q)
        chains = survivors
        if not chains:
            break
    if not Q:
        return np.zeros((n, 0))
    return np.column_stack(Q)


def decompose_gram_schmidt(A, B, tol: float = DEFAULT_GS_TOL) -> ControllableDecomposition:
    A = check_square(A)
    n = A.shape[0]
    B = as_input_matrix(B, n)
    V = controllable_basis(A, B, tol)
    r = V.shape[1]
    if r == 0:
        raise DegenerateDecompositionError("controllable subspace is empty (B = 0?)")
    RT = orthonormal_completion(V, tol)
    R = RT.T
    Abar = R @ A @ RT
    Bbar = R @ B
    return ControllableDecomposition(
        rank=r,
        R=R,
        A_c=_symmetrize(Abar[:r, :r]),
        B_c=Bbar[:r].copy(),
        A_nc=_symmetrize(Abar[r:, r:]),
    )


def _symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def decompose_permutation(A, B, tol: float = DEFAULT_GS_TOL) -> PermutationDecomposition:
    """Reorder nodes as (controllable, uncontrollable) for nonsingular ``A``.

    A node counts as controllable when its indicator vector lies in the
    controllable subspace to within ``tol``.
    """
    A = check_square(A)
    n = A.shape[0]
    B = as_input_matrix(B, n)
    if numerical_rank(A) < n:
        raise PreconditionError(
            "A is singular; use decompose_gram_schmidt for the general decomposition"
        )
    V = controllable_basis(A, B, tol)
    r = V.shape[1]
    # Distance of e_i from span(V) is sqrt(1 - |V[i, :]|^2).
    resid = np.sqrt(np.clip(1.0 - np.sum(V**2, axis=1), 0.0, None))
    inside = resid <= np.sqrt(tol)
    ctrl = np.flatnonzero(inside)
    unctrl = np.flatnonzero(~inside)
    if ctrl.size != r:
        warnings.warn(
            f"node-wise controllable set has {ctrl.size} nodes but the controllable "
            f"subspace has dimension {r}; the permutation form is not exact here",
            RuntimeWarning,
            stacklevel=2,
        )
    if ctrl.size and unctrl.size:
        link = np.max(np.abs(A[np.ix_(ctrl, unctrl)]))
        if link > tol * max(1.0, np.max(np.abs(A))):
            warnings.warn(
                f"controllable and uncontrollable nodes are linked (max |a| = {link:.3e})",
                RuntimeWarning,
                stacklevel=2,
            )
    order = np.concatenate([ctrl, unctrl])
    theta = np.eye(n)[order]
    return PermutationDecomposition(
        controllable=tuple(int(i) + 1 for i in ctrl),
        uncontrollable=tuple(int(i) + 1 for i in unctrl),
        theta=theta,
        A_c_bar=A[np.ix_(ctrl, ctrl)].copy(),
    )


def structural_checks(A, B) -> StructuralReport:
    """Accessibility of every node from the drivers, and absence of dilation.

    ``x_i`` is influenced by ``x_j`` when ``A[i, j] != 0``; a node is
    accessible if some driver reaches it along such links.
    """
    A = check_square(A)
    n = A.shape[0]
    B = as_input_matrix(B, n)
    # Graph with edge j -> i for every nonzero A[i, j]; csgraph follows row -> column.
    G = (A.T != 0).astype(float)
    accessible = np.zeros(n, dtype=bool)
    for d in np.flatnonzero(np.any(B != 0, axis=1)):
        accessible[d] = True
        reached = breadth_first_order(G, d, directed=True, return_predecessors=False)
        accessible[reached] = True
    dilation_free = numerical_rank(np.hstack([A, B])) == n
    return StructuralReport(tuple(bool(a) for a in accessible), bool(dilation_free))


def decomposition_report(dec: ControllableDecomposition, A=None) -> str:
    """JSON document with rank, controllable node list, R, A_c and B_c."""
    doc = {
        "rank": dec.rank,
        "R": dec.R.tolist(),
        "A_c": dec.A_c.tolist(),
        "B_c": dec.B_c.tolist(),
    }
    if A is not None:
        resid = 1.0 - np.sum(dec.basis**2, axis=1)
        doc["controllable_nodes"] = [int(i) + 1 for i in np.flatnonzero(resid <= np.sqrt(DEFAULT_GS_TOL))]
        doc["coupling"] = dec.coupling(A)
    return json.dumps(doc)
