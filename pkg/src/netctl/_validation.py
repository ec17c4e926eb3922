"""Input validation helpers used across the public API."""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from .exceptions import ParameterError, PreconditionError


def check_square(A, name: str = "A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ParameterError(f"{name} must be a square 2-D array, got shape {A.shape}")
    if A.shape[0] < 1:
        raise ParameterError(f"{name} must have at least one row")
    if not np.all(np.isfinite(A)):
        raise ParameterError(f"{name} contains non-finite entries")
    return A


def check_symmetric(A, name: str = "A", atol: float = 0.0) -> np.ndarray:
    A = check_square(A, name)
    asym = np.max(np.abs(A - A.T))
    if asym > atol:
        raise PreconditionError(f"{name} must be symmetric (max |A - A^T| = {asym:.3e})")
    return A


def check_input_matrix(B, n: int, name: str = "B") -> np.ndarray:
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if B.ndim != 2 or B.shape[0] != n:
        raise ParameterError(f"{name} must have {n} rows, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise ParameterError(f"{name} contains non-finite entries")
    return B


def check_horizon(tau_f) -> int:
    if isinstance(tau_f, (bool, np.bool_)) or int(tau_f) != tau_f or tau_f < 1:
        raise ParameterError(f"tau_f must be a positive integer, got {tau_f!r}")
    return int(tau_f)


def check_node_indices(indices: Iterable[int], n: Optional[int], name: str) -> tuple[int, ...]:
    """Validate a 1-based, duplicate-free node index list."""
    out = []
    for i in indices:
        if isinstance(i, (bool, np.bool_)) or int(i) != i:
            raise ParameterError(f"{name} must contain integers, got {i!r}")
        out.append(int(i))
    if not out:
        raise ParameterError(f"{name} must be non-empty")
    if len(set(out)) != len(out):
        raise ParameterError(f"{name} contains duplicate nodes: {out}")
    lo = min(out)
    if lo < 1 or (n is not None and max(out) > n):
        raise ParameterError(f"{name} indices must lie in 1..{n}, got {out}")
    return tuple(out)


def check_vector(x, n: int, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != n:
        raise ParameterError(f"{name} must have length {n}, got {x.shape[0]}")
    return x
