"""
Scaled ratio of unit-mean exponential gains, X = k * H1 / H2, which every SIR of the
harvest-then-transmit links reduces to, plus the fading samplers behind the simulator.
"""

import math

import numpy as np

from harvestlink.Helpers.Exceptions import DomainError
from harvestlink.TypedDicts.Simulation import FadingDraw

LOG2_E = 1.0 / math.log(2.0)
# Below this distance from k = 1 the log/(k - 1) forms are evaluated by their series
SERIES_RADIUS = 1e-6
# Denominator gains below this are redrawn
UNDERFLOW_GAIN = 1e-300


def _check_scale(k: float) -> None:
    if not (isinstance(k, (int, float, np.floating)) and math.isfinite(k) and k > 0):
        raise DomainError("Scale factor k must be positive and finite.", error={"k": k})


def _check_support(x: float | np.ndarray) -> np.ndarray:
    values = np.asarray(x, dtype=float)
    if np.any(np.isnan(values)) or np.any(values < 0):
        raise DomainError("Ratio support is x >= 0.", error={"x": np.asarray(x).tolist()})
    return values


def _as_output(values: np.ndarray) -> float | np.ndarray:
    return float(values) if values.ndim == 0 else values


def ratio_pdf(k: float, x: float | np.ndarray) -> float | np.ndarray:
    """
    Density of X = k * H1 / H2
    @param k: Scale factor
    @param x: Point(s) of the support
    @return: k / (k + x)^2
    """
    _check_scale(k)
    values = _check_support(x)
    return _as_output(k / (k + values) ** 2)


def ratio_cdf(k: float, x: float | np.ndarray) -> float | np.ndarray:
    """
    Distribution function of X = k * H1 / H2
    @param k: Scale factor
    @param x: Point(s) of the support
    @return: x / (k + x)
    """
    _check_scale(k)
    values = _check_support(x)
    with np.errstate(invalid="ignore"):
        result = np.where(np.isinf(values), 1.0, values / (k + values))
    return _as_output(result)


def log2_secant(k: float) -> float:
    """
    Slope of log2 between 1 and k, log2(k) / (k - 1), with the value log2(e) at k = 1
    @param k: Positive argument
    @return: The slope, always positive
    """
    _check_scale(k)
    delta = k - 1.0
    if abs(delta) < SERIES_RADIUS:
        return LOG2_E * (1.0 - delta / 2.0 + delta * delta / 3.0)
    if abs(delta) < 0.5:
        return math.log1p(delta) / delta * LOG2_E
    # k - 1 rounds to -1 for k below 1e-16, log(k) keeps the value
    return math.log(k) / delta * LOG2_E


def expected_log2_one_plus(k: float) -> float:
    """
    E[log2(1 + X)] for X = k * H1 / H2, equal to log2(1/k) / (1/k - 1)
    @param k: Scale factor
    @return: Expectation in bits, log2(e) at k = 1
    """
    _check_scale(k)
    if abs(k - 1.0) < SERIES_RADIUS:
        u = 1.0 / k
        return LOG2_E * (1.0 - (u - 1.0) / 2.0 + (u - 1.0) ** 2 / 3.0)
    return k * log2_secant(k)


def exponential_from_uniform(u: float | np.ndarray) -> float | np.ndarray:
    """
    Inverse transform of a uniform in [0, 1) to a unit-mean exponential, -ln(1 - u).
    u = 0 maps to 0, never to -inf
    """
    values = np.asarray(u, dtype=float)
    return _as_output(-np.log1p(-values))


def sample_unit_exponential(rng_state: np.random.Generator) -> FadingDraw:
    """
    @param rng_state: Generator owned by the caller
    @return: One fading draw
    """
    return {"h": float(exponential_from_uniform(rng_state.random()))}


def sample_unit_exponentials(rng_state: np.random.Generator, size: int) -> np.ndarray:
    return exponential_from_uniform(rng_state.random(size))


def replace_underflow(denominator: np.ndarray, spare: np.ndarray) -> np.ndarray:
    """
    Swaps denominator gains that underflow for the matching spare draw
    """
    redraw = denominator < UNDERFLOW_GAIN
    if not np.any(redraw):
        return denominator
    # a spare that underflows too falls back to the smallest nonzero draw
    fallback = np.maximum(spare, exponential_from_uniform(2.0**-53))
    return np.where(redraw, fallback, denominator)


def sample_ratio(rng_state: np.random.Generator, k: float, size: int | None = None) -> float | np.ndarray:
    """
    Samples X = k * H1 / H2 from two independent unit exponentials
    @param rng_state: Generator owned by the caller
    @param k: Scale factor
    @param size: Number of samples, None for a single float
    @return: Sample(s)
    """
    _check_scale(k)
    count = 1 if size is None else size
    numerator = sample_unit_exponentials(rng_state, count)
    denominator = sample_unit_exponentials(rng_state, count)
    while np.any(denominator < UNDERFLOW_GAIN):
        redraw = denominator < UNDERFLOW_GAIN
        denominator[redraw] = sample_unit_exponentials(rng_state, int(redraw.sum()))
    samples = k * (numerator / denominator)
    return float(samples[0]) if size is None else samples
