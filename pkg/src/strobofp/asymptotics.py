"""Closed-form reference laws for the frame-counted exit statistics.

Boundary and bulk large-rho laws for E[tau], the continuous-monitoring
benchmark, the spectral-gap expansion, sine-mode survival sums, and the
finite-window effective exponent.  These are reference formulas: the banded
resolvent pipeline is the numerical ground truth they are compared against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError
from .operator_core import PhysicalParams

# Riemann zeta at 1/2; only this single value is needed, hard-coded rather
# than pulling in a zeta implementation.
ZETA_HALF = -1.46035450880958681

#: E[tau](rho; 0) ~ BOUNDARY_SLOPE * rho + BOUNDARY_CONST
BOUNDARY_SLOPE = 1.0 / math.sqrt(2.0)
BOUNDARY_CONST = abs(ZETA_HALF) / math.sqrt(math.pi)

#: E[tau](rho; 1/2) ~ BULK_A rho^2 + BULK_B rho + BULK_C  (M-form constant is BULK_C - 1)
BULK_A = 0.25
BULK_B = 0.583014
BULK_C = 0.573592

#: Reference gap correction: 1 - lambda0 ~ pi^2/(2 rho^2) + GAP_BETA / rho^3
GAP_BETA = 2.332056


@dataclass(frozen=True)
class AsymptoticConstants:
    """The universal coefficients bundled for reporting."""

    boundary_slope: float = BOUNDARY_SLOPE
    boundary_const: float = BOUNDARY_CONST
    bulk_a: float = BULK_A
    bulk_b: float = BULK_B
    bulk_c: float = BULK_C
    beta: float = GAP_BETA


CONSTANTS = AsymptoticConstants()


def boundary_law(rho: float) -> float:
    """E[tau] for a boundary start: rho/sqrt(2) + |zeta(1/2)|/sqrt(pi).

    Pure formula evaluation; meaningful as an asymptote for rho >~ 5.
    """
    return rho * BOUNDARY_SLOPE + BOUNDARY_CONST


def bulk_law(rho: float) -> float:
    """E[tau] for a centered start: rho^2/4 + 0.583014 rho + 0.573592."""
    return BULK_A * rho**2 + BULK_B * rho + BULK_C


def bulk_law_mean_frames(rho: float) -> float:
    """M-form of `bulk_law` (E[tau] - 1); avoids off-by-one confusion."""
    return bulk_law(rho) - 1.0


def dirichlet_mean_exit(x0: float, params: PhysicalParams) -> float:
    """Continuously monitored mean exit time x0 (L - x0) / (2 D)."""
    if not 0.0 <= x0 <= params.L:
        raise ValueError(f"x0 must lie in [0, L]=[0, {params.L}], got {x0}")
    return x0 * (params.L - x0) / (2.0 * params.D)


def gap_expansion(rho: float) -> float:
    """Reference expansion pi^2/(2 rho^2) + 2.332056/rho^3 for 1 - lambda0."""
    return math.pi**2 / (2.0 * rho**2) + GAP_BETA / rho**3


def eigenvalue_formula(m: int, rho: float) -> float:
    """Sine-mode damping factor int_{-1}^{1} (1-|u|) g_rho(u) cos(m pi u) du.

    Evaluated by composite Gauss-Legendre with panel count resolving both the
    kernel width and the cosine oscillation (absolute accuracy ~1e-13).
    """
    if m < 1:
        raise ValueError(f"mode index must be >= 1, got {m}")
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    panels = int(max(m, rho / 2.0, 4.0))
    edges = np.linspace(0.0, 1.0, panels + 1)
    nodes, glw = np.polynomial.legendre.leggauss(16)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        u = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        w = 0.5 * (b - a) * glw
        f = (
            (1.0 - u)
            * (rho / math.sqrt(2.0 * math.pi))
            * np.exp(-0.5 * (rho * u) ** 2)
            * np.cos(m * math.pi * u)
        )
        total += float(f @ w)
    return 2.0 * total  # integrand is even in u


def mode_sum_survival(
    rho: float, n: int, start: str = "boundary", truncation_tol: float = 1e-12
) -> float:
    """Sine-mode survival sums for boundary or bulk starts.

    boundary: 1/2 + (2/pi) sum_m exp[-pi^2 (2m+1)^2 n / (2 rho^2)]/(2m+1)
    bulk:     (2/pi) sum_m (-1)^m exp[-2 pi^2 (m+1)^2 n / rho^2]/(2m+2)

    Terms are truncated below `truncation_tol`; the bulk series alternates
    with decreasing terms, so the truncation error is below the first
    omitted term.  These are reference formulas with a limited validity
    window: they do not reproduce the true n -> infinity decay and are
    reported for comparison, never used as an oracle.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if start not in ("boundary", "bulk"):
        raise ValueError(f"start must be 'boundary' or 'bulk', got {start!r}")
    x = n / rho**2
    if start == "boundary":
        # positive terms decaying super-geometrically in m
        m_cap = int(rho * math.sqrt(2.0 * max(math.log(1.0 / truncation_tol), 1.0) / n) / math.pi) + 2
        m = np.arange(m_cap + 1)
        odd = 2 * m + 1
        terms = np.exp(-0.5 * math.pi**2 * odd**2 * x) / odd
        terms = terms[terms >= truncation_tol]
        return 0.5 + (2.0 / math.pi) * float(terms.sum())
    m_cap = int(rho * math.sqrt(max(math.log(1.0 / truncation_tol), 1.0) / (2.0 * n)) / math.pi) + 2
    m = np.arange(m_cap + 1)
    even = m + 1
    terms = np.exp(-2.0 * math.pi**2 * even**2 * x) / (2.0 * m + 2)
    keep = terms >= truncation_tol
    signs = np.where(m % 2 == 0, 1.0, -1.0)
    return (2.0 / math.pi) * float((signs[keep] * terms[keep]).sum())


def loglog_window_points(rho_lo: float, rho_hi: float, n_points: int = 20) -> np.ndarray:
    """Sample points uniform in log rho, the sampling used for exponent fits."""
    pts = np.exp(np.linspace(math.log(rho_lo), math.log(rho_hi), n_points))
    pts[0], pts[-1] = rho_lo, rho_hi  # pin endpoints against float drift
    return pts


def effective_exponent(values, window) -> float:
    """Least-squares slope of log E[tau] vs log rho inside the window.

    `values` is a sequence of (rho, etau) pairs; at least 5 must fall inside
    the inclusive window.
    """
    rho_lo, rho_hi = window
    data = np.asarray(list(values), dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("values must be (rho, etau) pairs")
    if np.any(data <= 0.0):
        raise ValueError("rho and E[tau] values must be positive")
    mask = (data[:, 0] >= rho_lo) & (data[:, 0] <= rho_hi)
    if mask.sum() < 5:
        raise InsufficientDataError(
            f"need at least 5 points inside [{rho_lo}, {rho_hi}], have {mask.sum()}"
        )
    slope = np.polyfit(np.log(data[mask, 0]), np.log(data[mask, 1]), 1)[0]
    return float(slope)
