"""Exact minimum-energy target control.

Energy is ``E = sum_t u(t)^T u(t)`` unless ``energy_half=True``, which
restores the factor 1/2 of the Hamiltonian formulation. The optimal input is
the same under either convention.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ._validation import check_horizon, check_square, check_vector
from .ctrb import TargetsLike, as_input_matrix, as_targets
from .exceptions import NotControllableError, NumericalError, ParameterError, RangeError
from .gramian import gramian_full, would_overflow

__all__ = [
    "ControlTask",
    "OptimalPlan",
    "ENDPOINT_TOL",
    "free_response",
    "optimal_input",
    "minimum_energy",
    "simulate",
    "energy_sandwich",
    "energies",
    "write_plan",
]

ENDPOINT_TOL = 1e-8


@dataclass(frozen=True)
class ControlTask:
    x0: np.ndarray
    y_f: np.ndarray
    tau_f: int

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float).reshape(-1))
        object.__setattr__(self, "y_f", np.asarray(self.y_f, dtype=float).reshape(-1))
        object.__setattr__(self, "tau_f", check_horizon(self.tau_f))


@dataclass(frozen=True)
class OptimalPlan:
    inputs: np.ndarray  # tau_f x m
    energy: float
    trajectory: np.ndarray  # (tau_f + 1) x n
    condition_number: float
    endpoint_error: float


def free_response(A, x0, tau_f: int) -> np.ndarray:
    """``A^tau_f x0`` by repeated multiplication."""
    x = np.asarray(x0, dtype=float).copy()
    for _ in range(tau_f):
        x = A @ x
    return x


def _factor_target_gramian(A, B, idx, tau_f):
    if would_overflow(A, tau_f):
        raise RangeError(f"Gramian overflows double precision at tau_f={tau_f}")
    W = gramian_full(A, B, tau_f)
    W_C = W[np.ix_(idx, idx)]
    try:
        factor = cho_factor(W_C, lower=True)
    except LinAlgError:
        raise NotControllableError(
            f"target Gramian is not positive definite at tau_f={tau_f}"
        ) from None
    ev = np.linalg.eigvalsh(W_C)
    if ev[0] <= 0:
        raise NotControllableError(f"target Gramian is singular at tau_f={tau_f}")
    return W_C, factor, float(ev[-1] / ev[0])


def _setup(A, B, targets, task: ControlTask):
    A = check_square(A)
    n = A.shape[0]
    B = as_input_matrix(B, n)
    tgt = as_targets(targets, n)
    x0 = check_vector(task.x0, n, "x0")
    y_f = check_vector(task.y_f, len(tgt), "y_f")
    idx = tgt.zero_based
    beta = y_f - free_response(A, x0, task.tau_f)[idx]
    return A, B, idx, x0, y_f, beta


def minimum_energy(A, B, targets: TargetsLike, task: ControlTask, energy_half: bool = False) -> float:
    """``(y_f - C A^tau_f x0)^T W_C^{-1} (y_f - C A^tau_f x0)`` via a Cholesky solve."""
    A, B, idx, _, _, beta = _setup(A, B, targets, task)
    _, factor, _ = _factor_target_gramian(A, B, idx, task.tau_f)
    E = float(beta @ cho_solve(factor, beta))
    return 0.5 * E if energy_half else E


def optimal_input(
    A, B, targets: TargetsLike, task: ControlTask, energy_half: bool = False,
    endpoint_tol: Optional[float] = ENDPOINT_TOL,
) -> OptimalPlan:
    """Least-energy input sequence ``u*(t) = B^T (A^T)^(tau_f-t-1) C^T W_C^{-1} beta``.

    ``endpoint_tol`` (absolute, infinity norm) is checked on the rolled-out
    trajectory; pass ``None`` to skip the check.
    """
    A, B, idx, x0, y_f, beta = _setup(A, B, targets, task)
    n, m = B.shape
    tau_f = task.tau_f
    _, factor, cond = _factor_target_gramian(A, B, idx, tau_f)
    lam_hat = cho_solve(factor, beta)
    v = np.zeros(n)
    v[idx] = lam_hat
    U = np.empty((tau_f, m))
    for t in range(tau_f - 1, -1, -1):
        U[t] = B.T @ v
        v = A.T @ v
    X = simulate(A, B, U, x0)
    err = float(np.max(np.abs(X[-1, idx] - y_f)))
    if endpoint_tol is not None and err > endpoint_tol * max(1.0, np.max(np.abs(y_f))):
        raise NumericalError(
            f"endpoint missed by {err:.3e} (condition number {cond:.3e})"
        )
    E = float(np.sum(U * U))
    return OptimalPlan(
        inputs=U,
        energy=0.5 * E if energy_half else E,
        trajectory=X,
        condition_number=cond,
        endpoint_error=err,
    )


def simulate(A, B, inputs, x0) -> np.ndarray:
    """Roll ``x(t+1) = A x(t) + B u(t)`` forward; returns the (tau_f + 1) x n trajectory."""
    A = check_square(A)
    n = A.shape[0]
    B = as_input_matrix(B, n)
    U = np.asarray(inputs, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if U.shape[1] != B.shape[1]:
        raise ParameterError(f"inputs must have {B.shape[1]} columns, got {U.shape[1]}")
    X = np.empty((U.shape[0] + 1, n))
    X[0] = check_vector(x0, n, "x0")
    for t, u in enumerate(U):
        X[t + 1] = A @ X[t] + B @ u
    return X


def energy_sandwich(W_C, y_f_unit) -> tuple[float, float]:
    """``(1/lambda_max(W_C), 1/lambda_min(W_C))``, the range of ``y^T W_C^{-1} y`` on the unit sphere."""
    W_C = check_square(W_C, "W_C")
    y = check_vector(y_f_unit, W_C.shape[0], "y_f_unit")
    if abs(np.linalg.norm(y) - 1.0) > 1e-12:
        raise ParameterError(f"target state must have unit norm, got {np.linalg.norm(y)!r}")
    ev = np.linalg.eigvalsh(0.5 * (W_C + W_C.T))
    if ev[0] <= 0:
        raise NotControllableError("W_C is not positive definite")
    return 1.0 / ev[-1], 1.0 / ev[0]


def energies(W_C, Y) -> np.ndarray:
    """``y^T W_C^{-1} y`` for every row of ``Y`` through one Cholesky factorisation."""
    W_C = check_square(W_C, "W_C")
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[1] != W_C.shape[0]:
        raise ParameterError(f"rows of Y must have length {W_C.shape[0]}, got {Y.shape[1]}")
    try:
        factor = cho_factor(0.5 * (W_C + W_C.T), lower=True)
    except LinAlgError:
        raise NotControllableError("W_C is not positive definite") from None
    return np.einsum("ij,ji->i", Y, cho_solve(factor, Y.T))


def write_plan(plan: OptimalPlan, csv_path, json_path=None) -> None:
    """CSV with columns tau, u1..um, x1..xn plus a JSON summary.

    The final row (``tau = tau_f``) carries the terminal state and empty inputs.
    """
    tau_f, m = plan.inputs.shape
    n = plan.trajectory.shape[1]
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["tau"] + [f"u{k + 1}" for k in range(m)] + [f"x{i + 1}" for i in range(n)])
        for t in range(tau_f + 1):
            u = [repr(float(v)) for v in plan.inputs[t]] if t < tau_f else [""] * m
            w.writerow([t] + u + [repr(float(v)) for v in plan.trajectory[t]])
    if json_path is None:
        json_path = str(csv_path).rsplit(".", 1)[0] + ".json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(
            {"E": plan.energy, "tau_f": tau_f, "condition_number": plan.condition_number},
            fh,
            indent=2,
        )
