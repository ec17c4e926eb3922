"""Finite-horizon controllability Gramians for full and target control.

``W(tau_f) = sum_{t=0}^{tau_f-1} A^t B B^T (A^T)^t``. For target nodes ``C``
the relevant matrix is ``W_C = C W C^T``; in the coordinates of the
controllable decomposition it also equals ``G Wc G^T`` where ``Wc`` is the
Gramian of ``(A_c, B_c)`` and ``G`` holds the target rows of the
controllable basis.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from typing import Optional

import mpmath
import numpy as np

from ._validation import check_horizon, check_square
from .ctrb import (
    DEFAULT_GS_TOL,
    ControllableDecomposition,
    TargetsLike,
    as_input_matrix,
    as_targets,
    controllable_basis,
    decompose_gram_schmidt,
    numerical_rank,
)
from .exceptions import NotControllableError, NumericalError, RangeError

__all__ = [
    "GramianBundle",
    "EigenbasisForm",
    "POLE_GUARD",
    "gramian_full",
    "gramian_target",
    "geometric_factor",
    "eigenbasis_form",
    "would_overflow",
    "exact_extreme_eigenvalues",
    "write_gramian_dump",
]

POLE_GUARD = 1e-7
# log10 of the largest Gramian entry magnitude we let double precision carry.
_LOG10_RANGE = 300.0


@dataclass(frozen=True)
class GramianBundle:
    tau_f: int
    W: np.ndarray
    W_C: np.ndarray
    script_W: np.ndarray
    eig_min: float
    eig_max: float
    decomposition: ControllableDecomposition
    target_rows: np.ndarray

    @property
    def r(self) -> int:
        return self.W_C.shape[0]

    @property
    def condition_number(self) -> float:
        return self.eig_max / self.eig_min if self.eig_min > 0 else np.inf


@dataclass(frozen=True)
class EigenbasisForm:
    """``A = P diag(Lambda) P^T``, ``Q = P^T B B^T P`` and ``M = sum_t Lambda^t Q Lambda^t``.

    Eigenvalues are ordered by increasing absolute value.
    """

    P: np.ndarray
    Lambda: np.ndarray
    Q: np.ndarray
    M: np.ndarray
    tau_f: int
    G: np.ndarray  # P^T B, so that Q = G G^T

    def gramian(self) -> np.ndarray:
        return self.P @ self.M @ self.P.T


def would_overflow(A, tau_f: int) -> bool:
    """True when ``rho(A)^(2 tau_f)`` leaves the double-precision range."""
    rho = np.max(np.abs(np.linalg.eigvals(np.asarray(A, dtype=float))))
    if rho <= 1.0:
        return False
    return 2.0 * (tau_f - 1) * np.log10(rho) > _LOG10_RANGE


def gramian_full(A, B, tau_f: int) -> np.ndarray:
    A = check_square(A)
    n = A.shape[0]
    B = as_input_matrix(B, n)
    tau_f = check_horizon(tau_f)
    W = np.zeros((n, n))
    X = B.copy()
    for _ in range(tau_f):
        W += X @ X.T
        X = A @ X
    return 0.5 * (W + W.T)


def gramian_target(
    A, B, targets: TargetsLike, tau_f: int, tol: float = DEFAULT_GS_TOL, wct_tol: float = 1e-8
) -> GramianBundle:
    """Target Gramian ``W_C`` plus the controllable-subsystem Gramian.

    Raises ``NotControllableError`` if the targets cannot all be steered
    within ``tau_f`` steps. The two routes to ``W_C`` (principal submatrix of
    ``W`` and ``G Wc G^T``) are cross-checked to ``wct_tol`` relative to
    ``max|W_C|``.
    """
    A = check_square(A)
    n = A.shape[0]
    B = as_input_matrix(B, n)
    tau_f = check_horizon(tau_f)
    tgt = as_targets(targets, n)
    k = len(tgt)
    # Reachable space after tau_f steps is spanned by the first tau_f blocks.
    Vt = controllable_basis(A, B, tol, max_steps=tau_f)
    if Vt.shape[1] < k or numerical_rank(Vt[tgt.zero_based]) < k:
        raise NotControllableError(
            f"targets {list(tgt.indices)} are not output controllable within tau_f={tau_f} steps"
        )
    if would_overflow(A, tau_f):
        raise RangeError(f"Gramian overflows double precision at tau_f={tau_f}")
    W = gramian_full(A, B, tau_f)
    idx = tgt.zero_based
    W_C = W[np.ix_(idx, idx)]
    dec = decompose_gram_schmidt(A, B, tol)
    G = dec.target_rows(tgt)
    script_W = gramian_full(dec.A_c, dec.B_c, tau_f)
    via_decomp = G @ script_W @ G.T
    scale = max(1.0, np.max(np.abs(W_C)))
    gap = np.max(np.abs(W_C - via_decomp))
    if gap > wct_tol * scale:
        raise NumericalError(f"W_C and G Wc G^T disagree by {gap:.3e}")
    ev = np.linalg.eigvalsh(W_C)
    return GramianBundle(
        tau_f=tau_f,
        W=W,
        W_C=W_C,
        script_W=script_W,
        eig_min=float(ev[0]),
        eig_max=float(ev[-1]),
        decomposition=dec,
        target_rows=G,
    )


def geometric_factor(x, tau_f: int) -> np.ndarray:
    """``sum_{t<tau_f} x^t = (1 - x^tau_f) / (1 - x)``, elementwise.

    Near the pole ``x = 1`` (``|1 - x| < POLE_GUARD``) the sum is evaluated
    term by term, which also gives exactly ``tau_f`` at ``x = 1``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    near = np.abs(1.0 - x) < POLE_GUARD
    far = ~near
    with np.errstate(over="ignore", invalid="ignore"):
        out[far] = (1.0 - x[far] ** tau_f) / (1.0 - x[far])
    if np.any(near):
        xs = x[near]
        acc = np.zeros_like(xs)
        for _ in range(tau_f):
            acc = acc * xs + 1.0
        out[near] = acc
    return out


def eigenbasis_form(A, B, tau_f: int) -> EigenbasisForm:
    A = check_square(A)
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(A)))):
        raise ValueError("eigenbasis_form requires a symmetric matrix")
    n = A.shape[0]
    B = as_input_matrix(B, n)
    tau_f = check_horizon(tau_f)
    lam, P = np.linalg.eigh(0.5 * (A + A.T))
    order = np.argsort(np.abs(lam), kind="stable")
    lam, P = lam[order], P[:, order]
    G = P.T @ B
    Q = G @ G.T
    M = Q * geometric_factor(np.outer(lam, lam), tau_f)
    return EigenbasisForm(P=P, Lambda=lam, Q=Q, M=0.5 * (M + M.T), tau_f=tau_f, G=G)


def _mp_symmetric_eig(A: np.ndarray):
    Amp = mpmath.matrix(A.tolist())
    E, V = mpmath.eigsy(Amp)
    return E, V


def exact_extreme_eigenvalues(
    A, B, targets: TargetsLike, tau_fs, dps: Optional[int] = None, min_guard_digits: int = 25
) -> list[tuple[float, float, float, float]]:
    """Extreme eigenvalues of ``W_C(tau_f)`` for each horizon, immune to ill-conditioning.

    Target Gramians of single-driver networks routinely have condition
    numbers far beyond 1e16, where a double-precision eigensolve returns noise
    for the smallest eigenvalue. The matrices are therefore evaluated in the
    eigenbasis of ``A`` at extended precision (mpmath): the given double
    precision ``A`` is treated as exact. The working precision grows until it
    exceeds ``log10(cond) + min_guard_digits``.

    Returns a list of ``(log10 eig_min, log10 eig_max, eig_min, eig_max)``;
    the plain values may overflow to ``inf`` / underflow to ``0`` while the
    logarithms stay finite.
    """
    A = check_square(A)
    n = A.shape[0]
    B = as_input_matrix(B, n)
    tgt = as_targets(targets, n)
    taus = [check_horizon(t) for t in np.atleast_1d(tau_fs)]
    idx = list(tgt.zero_based)
    Vt = controllable_basis(A, B, max_steps=min(taus))
    if Vt.shape[1] < len(idx) or numerical_rank(Vt[idx]) < len(idx):
        raise NotControllableError(f"targets not output controllable within tau_f={min(taus)}")
    work = dps or 50
    while True:
        with mpmath.workdps(work):
            results, worst = _mp_extremes(A, B, idx, taus)
        if worst + min_guard_digits <= work or work >= 2000:
            return results
        work = int(worst + min_guard_digits + 10)


def _mp_extremes(A, B, idx, taus):
    E, V = _mp_symmetric_eig(0.5 * (A + A.T))
    n = A.shape[0]
    m = B.shape[1]
    Bmp = mpmath.matrix(B.tolist())
    G = V.T * Bmp  # n x m
    Ct = mpmath.matrix([[V[i, j] for j in range(n)] for i in idx])  # k x n
    k = len(idx)
    out = []
    worst = 0.0
    for tau in taus:
        Mm = mpmath.matrix(n, n)
        for i in range(n):
            for j in range(i, n):
                q = mpmath.fsum(G[i, c] * G[j, c] for c in range(m))
                if q == 0:
                    continue
                x = E[i] * E[j]
                if x == 1:
                    g = mpmath.mpf(tau)
                else:
                    g = (1 - x**tau) / (1 - x)
                Mm[i, j] = Mm[j, i] = q * g
        WC = Ct * Mm * Ct.T
        for i in range(k):
            for j in range(i + 1, k):
                WC[i, j] = WC[j, i] = (WC[i, j] + WC[j, i]) / 2
        ev = mpmath.eigsy(WC, eigvals_only=True)
        lo, hi = min(ev), max(ev)
        if lo <= 0:
            # Not resolved at this precision (or singular): force a retry.
            worst = max(worst, mpmath.mp.dps + 10.0)
            out.append((-np.inf, float(mpmath.log10(hi)), 0.0, float(hi)))
            continue
        cond = float(mpmath.log10(hi / lo))
        worst = max(worst, cond)
        out.append((float(mpmath.log10(lo)), float(mpmath.log10(hi)), float(lo), float(hi)))
    return out, worst


def write_gramian_dump(bundle: GramianBundle, csv_path, json_path=None) -> None:
    """CSV of ``W_C`` plus a JSON header ``{tau_f, r, eig_min, eig_max}``."""
    buf = io.StringIO()
    np.savetxt(buf, bundle.W_C, delimiter=",", fmt="%.17g")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())
    header = {
        "tau_f": bundle.tau_f,
        "r": bundle.r,
        "eig_min": bundle.eig_min,
        "eig_max": bundle.eig_max,
    }
    if json_path is None:
        json_path = str(csv_path).rsplit(".", 1)[0] + ".json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(header, fh, indent=2)
