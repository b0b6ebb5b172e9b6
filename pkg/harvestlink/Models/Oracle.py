"""
Brute-force and numeric references for the closed forms. Nothing here imports the analytic models:
integrals are integrated, grids are scanned and the link formulas are written out again from the SIR model.
"""

import logging
import math
from collections.abc import Callable

import numpy as np

from harvestlink.Helpers.Exceptions import ConvergenceError, DomainError
from harvestlink.TypedDicts.SystemParams import SystemParams

logger = logging.getLogger(__name__)

MAX_DEPTH = 60
# Local tolerances stop halving here, below it Simpson differences are rounding noise
TOLERANCE_FLOOR = 1e-15
CONSTRAINT_SLACK = 1e-12


def integrate_adaptive_simpson(
    f: Callable[[float], float], a: float, b: float, tol: float, max_depth: int = MAX_DEPTH
) -> tuple[float, float]:
    """
    Adaptive Simpson rule with Richardson correction
    @param f: Integrand
    @param a: Lower bound
    @param b: Upper bound
    @param tol: Absolute error tolerance
    @param max_depth: Maximum subdivision depth
    @return: Integral and accumulated error estimate
    """

    def simpson(fa: float, fm: float, fb: float, h: float) -> float:
        return h / 3.0 * (fa + 4.0 * fm + fb)

    def adaptive(a: float, b: float, fa: float, fm: float, fb: float, whole: float, depth: int, tol: float):
        m = (a + b) / 2.0
        h = (b - a) / 2.0
        flm, frm = f((a + m) / 2.0), f((m + b) / 2.0)
        left = simpson(fa, flm, fm, h / 2.0)
        right = simpson(fm, frm, fb, h / 2.0)
        error_estimate = (left + right - whole) / 15.0
        if abs(error_estimate) <= tol:
            return left + right + error_estimate, abs(error_estimate)
        if depth >= max_depth:
            raise ConvergenceError(
                "Adaptive Simpson hit the maximum depth.", error={"interval": [a, b], "estimate": error_estimate}
            )
        tol = max(tol / 2.0, TOLERANCE_FLOOR)
        left_result, left_error = adaptive(a, m, fa, flm, fm, left, depth + 1, tol)
        right_result, right_error = adaptive(m, b, fm, frm, fb, right, depth + 1, tol)
        return left_result + right_result, left_error + right_error

    fa, fm, fb = f(a), f((a + b) / 2.0), f(b)
    return adaptive(a, b, fa, fm, fb, simpson(fa, fm, fb, (b - a) / 2.0), 0, tol)


def quad_expected_log(k: float, tol: float = 1e-8) -> float:
    """
    Integrates log2(1 + x) k / (k + x)^2 over [0, inf).
    With x = u / (1 - u) and u = 1 - s^2 the integral becomes -4 s log2(s) k / (k s^2 + 1 - s^2)^2 over [0, 1]
    @param k: Scale factor of the ratio distribution
    @param tol: Absolute error tolerance
    @return: E[log2(1 + k H1 / H2)]
    """
    if not (isinstance(k, (int, float)) and math.isfinite(k) and k > 0):
        raise DomainError("Scale factor k must be positive and finite.", error={"k": k})
    if not (isinstance(tol, (int, float)) and tol > 0):
        raise DomainError("Tolerance must be positive.", error={"tol": tol})

    def integrand(s: float) -> float:
        if s <= 0.0 or s >= 1.0:
            return 0.0
        square = s * s
        return -4.0 * s * math.log2(s) * k / (k * square + 1.0 - square) ** 2

    value, error = integrate_adaptive_simpson(integrand, 0.0, 1.0, tol)
    logger.debug("Quadrature at k=%g gave %r with error estimate %g", k, value, error)
    return value


def _log_term(k: np.ndarray) -> np.ndarray:
    # k log2(k) / (k - 1), log2(e) at k = 1
    with np.errstate(divide="ignore", invalid="ignore"):
        value = k * np.log2(k) / (k - 1.0)
    return np.where(np.abs(k - 1.0) < 1e-12, 1.0 / math.log(2.0), value)


def _direct_outage(params: SystemParams, alpha: float) -> float:
    k = params["zeta"] * alpha / (1.0 - alpha)
    return params["gamma_o"] / (k + params["gamma_o"])


def _direct_lower_bound(params: SystemParams) -> float:
    theta = params["theta"]
    if theta is None:
        return 0.0
    # outage falls with alpha, keep the feasible end of the bracket
    low, high = 0.0, 1.0
    for _ in range(200):
        middle = (low + high) / 2.0
        if middle in (low, high):
            break
        if _direct_outage(params, middle) <= theta:
            high = middle
        else:
            low = middle
    return high


def grid_optimize_dt(params: SystemParams, n: int = 2000) -> tuple[float, float]:
    """
    Best direct link harvest ratio on an n point grid of [lower bound, 1)
    @param params: System parameters
    @param n: Grid points
    @return: (alpha, throughput)
    """
    if not (isinstance(n, int) and n >= 100):
        raise DomainError("Grid needs at least 100 points.", error={"n": n})
    alphas = np.linspace(_direct_lower_bound(params), 1.0, n, endpoint=False)
    alphas = alphas[alphas > 0]
    k = params["zeta"] * alphas / (1.0 - alphas)
    values = (1.0 - alphas) * _log_term(k)
    if params["theta"] is not None:
        outage = params["gamma_o"] / (k + params["gamma_o"])
        values = np.where(outage <= params["theta"] + CONSTRAINT_SLACK, values, -np.inf)
    best = int(np.argmax(values))
    return float(alphas[best]), float(values[best])


def _best_df_point(
    params: SystemParams, alpha: np.ndarray, beta: np.ndarray, inside: np.ndarray
) -> tuple[float, float, float, bool]:
    # best first hop throughput over the masked points meeting both constraints
    relay_time = np.where(inside, 1.0 - alpha - beta, 1.0)
    alpha, beta = np.where(inside, alpha, 0.5), np.where(inside, beta, 0.25)

    gamma_o, zeta, mu, d = params["gamma_o"], params["zeta"], params["mu"], params["d"]
    k_sr = zeta * alpha * d**-mu / beta
    k_rd = zeta * alpha * (1.0 - d) ** -mu / relay_time
    rate_sr = beta * _log_term(k_sr)
    rate_rd = relay_time * _log_term(k_rd)

    feasible = inside & (rate_sr <= rate_rd + CONSTRAINT_SLACK)
    if params["theta"] is not None:
        outage = 1.0 - k_sr / (k_sr + gamma_o) * k_rd / (k_rd + gamma_o)
        feasible &= outage <= params["theta"] + CONSTRAINT_SLACK
    if not feasible.any():
        logger.info("No grid point meets both constraints")
        return math.nan, math.nan, math.nan, False
    values = np.where(feasible, np.minimum(rate_sr, rate_rd), -np.inf)
    i, j = np.unravel_index(int(np.argmax(values)), values.shape)
    return float(alpha[i, j]), float(beta[i, j]), float(values[i, j]), True


def grid_optimize_df(params: SystemParams, n: int = 500) -> tuple[float, float, float, bool]:
    """
    Scans alpha = i / n, beta = j / n over the open simplex and keeps the best first hop throughput
    among points meeting the outage constraint and data causality
    @param params: System parameters
    @param n: Grid points per axis
    @return: (alpha, beta, throughput, feasible), nan values when no point is feasible
    """
    if not (isinstance(n, int) and n >= 100):
        raise DomainError("Grid needs at least 100 points per axis.", error={"n": n})
    steps = np.arange(1, n) / n
    alpha, beta = np.meshgrid(steps, steps, indexing="ij")
    return _best_df_point(params, alpha, beta, 1.0 - alpha - beta > 0.5 / n)


def refine_grid_df(
    params: SystemParams, alpha: float, beta: float, radius: float, n: int = 501
) -> tuple[float, float, float, bool]:
    """
    Rescans an n x n grid on the square of half width radius around (alpha, beta), clipped to the open simplex
    @return: (alpha, beta, throughput, feasible) as grid_optimize_df
    """
    if not (isinstance(n, int) and n >= 3 and 0 < radius < 1 and 0 < alpha < 1 and 0 < beta < 1):
        raise DomainError(
            "Refinement needs a point of the simplex, radius in (0, 1) and n >= 3.",
            error={"alpha": alpha, "beta": beta, "radius": radius, "n": n},
        )
    offsets = np.linspace(-radius, radius, n)
    alphas, betas = np.meshgrid(alpha + offsets, beta + offsets, indexing="ij")
    inside = (alphas > 0) & (betas > 0) & (1.0 - alphas - betas > 0)
    return _best_df_point(params, alphas, betas, inside)


def scan_concavity(fn: Callable[[float], float], lo: float, hi: float, n: int = 200, h: float = 1e-4) -> float:
    """
    Largest central second difference f(x + h) - 2 f(x) + f(x - h) over n points of [lo, hi].
    A result <= 1e-9 is taken as numeric concavity
    """
    if not (lo < hi and n >= 10 and h > 0):
        raise DomainError("Need lo < hi, n >= 10 and h > 0.", error={"lo": lo, "hi": hi, "n": n, "h": h})
    return max(fn(x + h) - 2.0 * fn(x) + fn(x - h) for x in np.linspace(lo, hi, n).tolist())


def scan_monotonicity(fn: Callable[[float], float], lo: float, hi: float, n: int = 200, log_grid: bool = False) -> float:
    """
    Smallest first difference of fn over n points of [lo, hi], positive for an increasing function
    """
    if not (lo < hi and n >= 10) or (log_grid and lo <= 0):
        raise DomainError("Need lo < hi and n >= 10, lo > 0 on a log grid.", error={"lo": lo, "hi": hi, "n": n})
    grid = np.geomspace(lo, hi, n) if log_grid else np.linspace(lo, hi, n)
    values = np.array([fn(x) for x in grid.tolist()])
    return float(np.min(np.diff(values)))
