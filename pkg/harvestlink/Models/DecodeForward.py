import logging
import math
import sys
from typing import Literal

import numpy as np
from scipy.optimize import bisect, minimize_scalar
from scipy.special import expit

from harvestlink.Helpers.Exceptions import ConvergenceError, DomainError
from harvestlink.Helpers.HelperFunctions import require_interference_limited
from harvestlink.Models.ChannelModel import LOG2_E, expected_log2_one_plus, log2_secant, ratio_cdf
from harvestlink.TypedDicts.Results import DfFeasibility, DfOptimum, LinkStats
from harvestlink.TypedDicts.Splits import DfSplit, KappaZ
from harvestlink.TypedDicts.SystemParams import SystemParams

logger = logging.getLogger(__name__)

KAPPA_BOUNDS = (1e-6, 1e6)
KAPPA_TOLERANCE = 1e-10
KAPPA_SCAN_POINTS = 481
TAU_BOUNDS = (1e-12, 1e12)
# Widest bracket for log(tau) when psi lies outside f(TAU_BOUNDS)
LOG_TAU_LIMIT = 1e308
MAX_LOG_FLOAT = math.log(sys.float_info.max)
Z_EDGE = 1e-15
# z_lower may exceed z_upper by this much and still count as a tie
Z_TIE = 1e-12

Method = Literal["joint", "three_step"]


def check_df_split(split: DfSplit) -> tuple[float, float]:
    alpha, beta = split.get("alpha"), split.get("beta")
    if not (
        isinstance(alpha, (int, float))
        and isinstance(beta, (int, float))
        and 0 < alpha < 1
        and 0 < beta < 1
        and alpha + beta < 1
    ):
        raise DomainError(
            "Relay split needs alpha, beta in (0, 1) and alpha + beta < 1.",
            error={"alpha": alpha, "beta": beta},
        )
    return float(alpha), float(beta)


def check_kappa_z(kz: KappaZ, allow_full_slot: bool = False) -> tuple[float, float]:
    kappa, z = kz.get("kappa"), kz.get("z")
    z_ok = isinstance(z, (int, float)) and (0 < z <= 1 if allow_full_slot else 0 < z < 1)
    if not (isinstance(kappa, (int, float)) and math.isfinite(kappa) and kappa > 0 and z_ok):
        raise DomainError("Need kappa > 0 and z in (0, 1).", error={"kappa": kappa, "z": z})
    return float(kappa), float(z)


def split_to_kappa_z(split: DfSplit) -> KappaZ:
    alpha, beta = check_df_split(split)
    return {"kappa": alpha / beta, "z": alpha + beta}


def kappa_z_to_split(kz: KappaZ) -> DfSplit:
    kappa, z = check_kappa_z(kz)
    return {"alpha": kappa * z / (1.0 + kappa), "beta": z / (1.0 + kappa)}


def f_tau(tau: float) -> float:
    """
    f(tau) = tau log2(tau) / (tau - 1), increasing for tau > 0, log2(e) at tau = 1
    """
    if not (isinstance(tau, (int, float)) and tau > 0):
        raise DomainError("f(tau) is defined for tau > 0.", error={"tau": tau})
    return tau * log2_secant(tau)


def log_f_tau(log_tau: float) -> float:
    """
    log f(tau) from log(tau), finite for every finite log(tau) so tau may lie far outside the float range
    """
    if abs(log_tau) < 1e-6:
        return math.log(f_tau(math.exp(log_tau)))
    if log_tau > 0:
        # f = log2(tau) / (1 - 1/tau)
        return math.log(log_tau * LOG2_E) - math.log(-math.expm1(-log_tau))
    # f = tau log2(1/tau) / (1 - tau)
    return log_tau + math.log(-log_tau * LOG2_E) - math.log1p(-math.exp(log_tau))


def log_tau_star(psi_value: float) -> float:
    """
    Inverts f by bisection on log(tau), widening the bracket until it holds psi
    @param psi_value: Target value of f
    @return: log(tau*)
    """
    if not (isinstance(psi_value, (int, float)) and math.isfinite(psi_value) and psi_value > 0):
        raise DomainError("Psi must be positive.", error={"psi": psi_value})
    target = math.log(psi_value)

    def gap(log_tau: float) -> float:
        return log_f_tau(log_tau) - target

    low, high = (math.log(bound) for bound in TAU_BOUNDS)
    while gap(high) < 0:
        if high >= LOG_TAU_LIMIT:
            raise ConvergenceError("Psi is beyond the reach of f.", error={"psi": psi_value})
        high = min(2.0 * high, LOG_TAU_LIMIT)
        logger.debug("Widened tau bracket to exp(%g)", high)
    while gap(low) > 0:
        if low <= -LOG_TAU_LIMIT:
            raise ConvergenceError("Psi is below the reach of f.", error={"psi": psi_value})
        low = max(2.0 * low, -LOG_TAU_LIMIT)
        logger.debug("Widened tau bracket to exp(%g)", low)
    if gap(high) == 0:
        return high
    if gap(low) == 0:
        return low
    return bisect(gap, low, high, xtol=1e-14 * max(1.0, abs(low), abs(high)), rtol=1e-15, maxiter=2000)


def tau_star(psi_value: float) -> float:
    """
    @param psi_value: Target value of f
    @return: tau with |f(tau) - psi_value| < 1e-9, inf when tau* exceeds the float range
    """
    log_tau = log_tau_star(psi_value)
    return math.exp(log_tau) if log_tau < MAX_LOG_FLOAT else math.inf


class DecodeForward:
    """
    Harvest-transmit-relay link S -> R -> D. Both hops run on harvested energy and both
    receivers are interfered by the access point.
    """

    def __init__(self, params: SystemParams) -> None:
        """
        @param params: Interference-limited parameters (sigma2 = 0, equal access point distances)
        """
        require_interference_limited(params)
        self.params = params
        with np.errstate(over="ignore"):
            self.gain_sr = float(np.float64(params["d"]) ** -params["mu"])
            self.gain_rd = float(np.float64(1.0 - params["d"]) ** -params["mu"])
        if not (math.isfinite(self.gain_sr) and math.isfinite(self.gain_rd)):
            raise DomainError("Path loss overflows for this d and mu.", error={"d": params["d"], "mu": params["mu"]})

    def k_sr(self, split: DfSplit) -> float:
        """
        @return: zeta alpha d^-mu / beta
        """
        alpha, beta = check_df_split(split)
        return self.params["zeta"] * alpha * self.gain_sr / beta

    def k_rd(self, split: DfSplit) -> float:
        """
        @return: zeta alpha (1 - d)^-mu / (1 - alpha - beta)
        """
        alpha, beta = check_df_split(split)
        return self.params["zeta"] * alpha * self.gain_rd / (1.0 - alpha - beta)

    def outage_sr(self, split: DfSplit) -> float:
        return ratio_cdf(self.k_sr(split), self.params["gamma_o"])

    def outage_rd(self, split: DfSplit) -> float:
        return ratio_cdf(self.k_rd(split), self.params["gamma_o"])

    def outage(self, split: DfSplit) -> float:
        """
        Either hop in outage
        @return: 1 - (1 - P_SR)(1 - P_RD)
        """
        return 1.0 - (1.0 - self.outage_sr(split)) * (1.0 - self.outage_rd(split))

    def expected_throughput_sr(self, split: DfSplit) -> float:
        _, beta = check_df_split(split)
        return beta * expected_log2_one_plus(self.k_sr(split))

    def expected_throughput_rd(self, split: DfSplit) -> float:
        alpha, beta = check_df_split(split)
        return (1.0 - alpha - beta) * expected_log2_one_plus(self.k_rd(split))

    def expected_throughput(self, split: DfSplit) -> float:
        """
        The end-to-end rate is limited by the weaker hop
        """
        return min(self.expected_throughput_sr(split), self.expected_throughput_rd(split))

    def link_stats(self, split: DfSplit) -> LinkStats:
        return {"outage": self.outage(split), "expected_throughput": self.expected_throughput(split)}

    def esr_kappa_z(self, kz: KappaZ) -> float:
        """
        Expected first hop throughput in the (kappa, z) parameterization
        @param kz: Harvest ratio and sum time, z = 1 allowed
        @return: z / (1 + kappa) E[log2(1 + zeta kappa d^-mu H1/H2)]
        """
        kappa, z = check_kappa_z(kz, allow_full_slot=True)
        return z / (1.0 + kappa) * expected_log2_one_plus(self.params["zeta"] * kappa * self.gain_sr)

    def optimize_kappa(self, z: float = 1.0) -> float:
        """
        Maximizes the first hop throughput over kappa at a fixed sum time, z only scales the objective
        @param z: Sum time
        @return: kappa*
        """
        search = minimize_scalar(
            lambda log_kappa: -self.esr_kappa_z({"kappa": math.exp(log_kappa), "z": z}),
            bounds=tuple(math.log(bound) for bound in KAPPA_BOUNDS),
            method="bounded",
            options={"xatol": KAPPA_TOLERANCE},
        )
        return math.exp(float(search.x))

    def _outage_margin(self, kappa: float) -> float:
        # positive when the first hop alone leaves room under theta
        theta, gamma_o = self.params["theta"], self.params["gamma_o"]
        return theta * self.params["zeta"] * kappa * self.gain_sr - (1.0 - theta) * gamma_o

    def _z_lower_closed_form(self, kappa: float) -> float | None:
        theta = self.params["theta"]
        if theta is None:
            return 0.0
        margin = self._outage_margin(kappa)
        if margin <= 0:
            return None
        gamma_o = self.params["gamma_o"]
        k_sr = self.params["zeta"] * kappa * self.gain_sr
        relay_scale = self.params["zeta"] * kappa * self.gain_rd / (1.0 + kappa)
        return 1.0 / (1.0 + relay_scale * margin / (gamma_o * (1.0 - theta) * (k_sr + gamma_o)))

    def z_lower(self, kappa: float) -> float | None:
        """
        Smallest sum time meeting the outage constraint. The closed form seeds a bisection on
        outage(z) = theta, the bisection root is returned
        @param kappa: Harvest ratio
        @return: z_lower, None if no z in (0, 1) meets the constraint
        """
        if not (isinstance(kappa, (int, float)) and kappa > 0):
            raise DomainError("Harvest ratio kappa must be positive.", error={"kappa": kappa})
        closed = self._z_lower_closed_form(kappa)
        if closed is None or closed == 0.0:
            return closed
        theta = self.params["theta"]

        def excess(z: float) -> float:
            return self.outage(kappa_z_to_split({"kappa": kappa, "z": z})) - theta

        low = max(closed * (1.0 - 1e-7), Z_EDGE)
        high = min(closed * (1.0 + 1e-7), 1.0 - Z_EDGE)
        if not (excess(low) > 0 > excess(high)):
            logger.debug("Closed form z_lower %r does not bracket the root, bisecting on (0, 1)", closed)
            low, high = Z_EDGE, 1.0 - Z_EDGE
            if not (excess(low) > 0 > excess(high)):
                return None
        root = bisect(excess, low, high, xtol=1e-15, maxiter=200)
        if abs(root - closed) > 1e-8:
            logger.warning("z_lower closed form %r and bisection %r disagree", closed, root)
        return float(root)

    def psi(self, kappa: float) -> float:
        """
        Causality threshold: E[R_SR] <= E[R_RD] exactly when f(tau) >= psi
        @param kappa: Harvest ratio
        @return: ((1 - d) / d)^mu log2(k_SR) / (k_SR - 1), k_SR = zeta kappa d^-mu
        """
        if not (isinstance(kappa, (int, float)) and math.isfinite(kappa) and kappa > 0):
            raise DomainError("Harvest ratio kappa must be positive.", error={"kappa": kappa})
        return self.gain_sr / self.gain_rd * log2_secant(self.params["zeta"] * kappa * self.gain_sr)

    def z_upper(self, kappa: float, tau_star_value: float) -> float:
        """
        Largest sum time meeting data causality
        @param kappa: Harvest ratio
        @param tau_star_value: tau* = f^-1(psi(kappa)), inf gives 0
        @return: [1 + zeta kappa tau* / ((1 + kappa)(1 - d)^mu)]^-1
        """
        if math.isinf(tau_star_value):
            return 0.0
        return 1.0 / (1.0 + self.params["zeta"] * kappa * tau_star_value * self.gain_rd / (1.0 + kappa))

    def _z_upper_from_log(self, kappa: float, log_tau: float) -> float:
        # same bound with tau* as a logarithm, underflows to 0 instead of overflowing
        scale = self.params["zeta"] * kappa * self.gain_rd / (1.0 + kappa)
        return float(expit(-(math.log(scale) + log_tau)))

    def feasibility(self, kappa: float) -> DfFeasibility:
        z_lower = self.z_lower(kappa)
        psi_value = self.psi(kappa)
        log_tau = log_tau_star(psi_value)
        z_upper = self._z_upper_from_log(kappa, log_tau)
        return {
            "z_lower": z_lower,
            "z_upper": z_upper,
            "psi": psi_value,
            "tau_star": math.exp(log_tau) if log_tau < MAX_LOG_FLOAT else math.inf,
            "feasible": z_lower is not None and z_upper > 0 and z_lower <= z_upper + Z_TIE,
        }

    def _bound_margin(self, log_kappa: float) -> float:
        # z_upper - z_lower, -1 where the outage constraint cannot be met at all
        kappa = math.exp(log_kappa)
        z_lower = self._z_lower_closed_form(kappa)
        if z_lower is None:
            return -1.0
        return self._z_upper_from_log(kappa, log_tau_star(self.psi(kappa))) - z_lower

    def _joint_value(self, log_kappa: float) -> float | None:
        # throughput at z = z_upper, None where the outage bound exceeds it
        kappa = math.exp(log_kappa)
        z_lower = self._z_lower_closed_form(kappa)
        if z_lower is None:
            return None
        z_upper = self._z_upper_from_log(kappa, log_tau_star(self.psi(kappa)))
        if z_upper <= 0 or z_lower > z_upper:
            return None
        return self.esr_kappa_z({"kappa": kappa, "z": z_upper})

    def _joint_kappa(self) -> float | None:
        grid = np.linspace(*(math.log(bound) for bound in KAPPA_BOUNDS), KAPPA_SCAN_POINTS)
        values = [self._joint_value(float(log_kappa)) for log_kappa in grid]
        feasible = [index for index, value in enumerate(values) if value is not None]
        if not feasible:
            return None
        best = max(feasible, key=lambda index: values[index])
        low, high = float(grid[max(best - 1, 0)]), float(grid[min(best + 1, len(grid) - 1)])

        def loss(log_kappa: float) -> float:
            value = self._joint_value(log_kappa)
            return 1.0 if value is None else -value

        search = minimize_scalar(loss, bounds=(low, high), method="bounded", options={"xatol": KAPPA_TOLERANCE})
        logger.debug("Joint kappa scan peaked at exp(%g), refined to exp(%g)", grid[best], search.x)
        candidates = {float(grid[best]): values[best]}
        if search.fun < 0:
            candidates[float(search.x)] = -float(search.fun)
        # the optimum may sit where the outage bound meets the causality bound
        for neighbor in (best - 1, best + 1):
            if 0 <= neighbor < len(grid) and values[neighbor] is None:
                edge = self._feasible_edge(float(grid[best]), float(grid[neighbor]))
                candidates[edge] = self._joint_value(edge)
        return math.exp(max(candidates, key=lambda log_kappa: candidates[log_kappa]))

    def _feasible_edge(self, inside: float, outside: float) -> float:
        """
        Feasible log(kappa) next to the point where z_lower crosses z_upper between a feasible
        and an infeasible grid point
        """
        if self._bound_margin(outside) >= 0:
            return inside
        edge = bisect(self._bound_margin, inside, outside, xtol=KAPPA_TOLERANCE * 1e-3)
        # the root can land just on the infeasible side, step back towards the feasible point
        step = math.copysign(KAPPA_TOLERANCE * 1e-3, inside - edge)
        for _ in range(40):
            if self._joint_value(edge) is not None:
                return edge
            edge += step
            step *= 2.0
        return inside

    def optimize(self, method: Method = "joint") -> DfOptimum:
        """
        Maximizes E[R_SR] subject to the outage and data causality constraints.
        The sum time always sits on the causality bound z_upper because the objective grows linearly in z.
        @param method: "three_step" fixes kappa at the z-free maximizer first, "joint" picks the kappa
            that maximizes the throughput reached at z_upper(kappa)
        @return: The optimum, feasible=False when the constraints cannot be met together
        """
        if method == "three_step":
            kappa = self.optimize_kappa()
        elif method == "joint":
            kappa = self._joint_kappa()
            if kappa is None:
                logger.info("No harvest ratio in [%g, %g] meets both constraints", *KAPPA_BOUNDS)
                kappa = self.optimize_kappa()
        else:
            raise DomainError("Unknown relay optimization method.", error={"method": method})

        bounds = self.feasibility(kappa)
        if method == "joint" and not bounds["feasible"]:
            logger.debug("Refined kappa %g failed the bisection check", kappa)
        z_star = min(bounds["z_upper"], 1.0 - Z_EDGE)
        if z_star >= Z_EDGE:
            split = kappa_z_to_split({"kappa": kappa, "z": z_star})
            throughput, outage = self.expected_throughput(split), self.outage(split)
        else:
            # causality leaves no time for harvesting or the first hop
            split, throughput, outage = {"alpha": 0.0, "beta": 0.0}, 0.0, 1.0
        return {
            "kappa_star": kappa,
            "z_star": z_star,
            "alpha_star": split["alpha"],
            "beta_star": split["beta"],
            "throughput": throughput,
            "outage": outage,
            "feasible": bounds["feasible"],
            "z_lower": bounds["z_lower"],
            "z_upper": bounds["z_upper"],
        }
