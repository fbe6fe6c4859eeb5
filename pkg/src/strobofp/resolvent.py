"""Survival sequences, mean exit frames via the resolvent, leading spectral pair.

Everything here consumes an immutable `StroboOperator`.  The expected number
of frames beyond the first, M = sum_{n>=1} S_n, is obtained from the banded
symmetric positive-definite solve (I - K) x = h rather than by summing the
series; `neumann_partial_sum` provides the series route as a consistency
check, and `spectral_pair` the geometric decay rate.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, LinAlgError

from .errors import ConvergenceError, SolverError
from .operator_core import StroboOperator, _mixture_cell_average, _mixture_kernel

# Contractual bound on ||(I-K)x - h||_inf after the direct solve.
RESIDUAL_TOL = 1e-10

_factor_cache: "weakref.WeakKeyDictionary[StroboOperator, np.ndarray]" = (
    weakref.WeakKeyDictionary()
)


@dataclass(frozen=True)
class SurvivalSeries:
    """Survival probabilities S_0..S_nmax for one start point."""

    rho: float
    y0: float
    values: np.ndarray


@dataclass(frozen=True)
class ExitStats:
    """Mean frame counts and, when computed, the leading spectral data."""

    M: float
    mean_tau: float
    lambda0: float | None = None
    a0_est: float | None = None
    gap: float | None = None


def initial_vector(op: StroboOperator, y0: float) -> np.ndarray:
    """Kernel profile h_i = k(y_i - y0): the one-step image of a start at y0.

    For cell-averaged operators the entries are cell means of the kernel so
    that the quadrature weights reproduce S_1 exactly.
    """
    if not 0.0 <= y0 <= 1.0:
        raise ValueError(f"y0 must lie in [0, 1], got {y0}")
    d = op.grid - y0
    if op.cell_averaged:
        return _mixture_cell_average(
            d, op.rho, op.width_scales, op.width_weights, 1.0 / op.n
        )
    return _mixture_kernel(d, op.rho, op.width_scales, op.width_weights)


def survival_sequence(op: StroboOperator, y0: float, n_max: int) -> SurvivalSeries:
    """S_0 = 1 and S_n = w . K^{n-1} h for n = 1..n_max."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    values = np.empty(n_max + 1)
    values[0] = 1.0
    vec = initial_vector(op, y0)
    for n in range(1, n_max + 1):
        values[n] = op.weights @ vec
        if n < n_max:
            vec = op.matvec(vec)
    return SurvivalSeries(rho=op.rho, y0=y0, values=values)


def _factorization(op: StroboOperator) -> np.ndarray:
    cached = _factor_cache.get(op)
    if cached is not None:
        return cached
    bw, n = op.bandwidth, op.n
    ab = np.zeros((bw + 1, n))
    for d in range(bw + 1):
        ab[bw - d, :] = -op.band[d]
    ab[bw, :] += 1.0
    try:
        factor = cholesky_banded(ab)
    except LinAlgError as exc:
        raise SolverError(
            "(I - K) is not positive definite; the operator exceeds unit "
            "spectral radius, which signals a construction bug"
        ) from exc
    _factor_cache[op] = factor
    return factor


def _resolvent_solve(op: StroboOperator, rhs: np.ndarray) -> np.ndarray:
    factor = _factorization(op)
    x = cho_solve_banded((factor, False), rhs)
    residual = rhs - (x - op.matvec(x))
    if np.max(np.abs(residual)) > 0.5 * RESIDUAL_TOL:
        x = x + cho_solve_banded((factor, False), residual)
        residual = rhs - (x - op.matvec(x))
    if np.max(np.abs(residual)) > RESIDUAL_TOL:
        raise SolverError(
            f"resolvent residual {np.max(np.abs(residual)):.3e} exceeds "
            f"{RESIDUAL_TOL:.0e} after refinement"
        )
    return x


def mean_frames(op: StroboOperator, y0: float) -> ExitStats:
    """Mean frames beyond the first, M = w . (I - K)^{-1} h, and E[tau] = 1 + M."""
    h = initial_vector(op, y0)
    x = _resolvent_solve(op, h)
    M = float(op.weights @ x)
    return ExitStats(M=M, mean_tau=1.0 + M)


def spectral_pair(op: StroboOperator, tol: float = 1e-12, y0: float = 0.5):
    """Leading eigenvalue, eigenvector and overlap amplitude by power iteration.

    Starts from the half-sine profile (the wide-kernel limit mode) and stops
    when the Rayleigh quotient changes by less than `tol`.  `a0_est` is
    normalized so that S_n ~ a0_est * lambda0^n for large n with the start
    point `y0`.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    vec = np.sin(np.pi * op.grid)
    vec /= np.linalg.norm(vec)
    # Gap scales like rho^-2, so the cap leaves two orders of margin.
    cap = max(10_000, int(100 * op.rho**2))
    lam_prev = np.inf
    lam = 0.0
    for _ in range(cap):
        image = op.matvec(vec)
        lam = float(vec @ image)
        vec = image / np.linalg.norm(image)
        if abs(lam - lam_prev) < tol:
            break
        lam_prev = lam
    else:
        raise ConvergenceError(
            f"power iteration did not converge within {cap} iterations "
            f"(tol={tol:g}, rho={op.rho})"
        )
    if not 0.0 < lam < 1.0:
        raise SolverError(f"leading eigenvalue {lam} outside (0, 1)")
    if vec.sum() < 0.0:
        vec = -vec
    h = initial_vector(op, y0)
    # ||vec|| == 1, so the mode expansion of S_n gives this overlap amplitude.
    a0_est = float((op.weights @ vec) * (vec @ h) / lam)
    return lam, vec, a0_est


def neumann_partial_sum(op: StroboOperator, y0: float, terms: int) -> float:
    """Partial series sum_{n=1}^{terms} S_n; increases monotonically to M."""
    if terms < 1:
        raise ValueError(f"terms must be >= 1, got {terms}")
    vec = initial_vector(op, y0)
    total = 0.0
    for n in range(1, terms + 1):
        total += float(op.weights @ vec)
        if n < terms:
            vec = op.matvec(vec)
    return total


def exit_stats(op: StroboOperator, y0: float, tol: float = 1e-12) -> ExitStats:
    """Resolvent mean combined with the spectral pair in one record."""
    base = mean_frames(op, y0)
    lam, _, a0 = spectral_pair(op, tol=tol, y0=y0)
    return ExitStats(
        M=base.M, mean_tau=base.mean_tau, lambda0=lam, a0_est=a0, gap=1.0 - lam
    )
