import logging
import math

from scipy.optimize import minimize_scalar

from harvestlink.Helpers.Exceptions import DomainError
from harvestlink.Helpers.HelperFunctions import require_interference_limited
from harvestlink.Models.ChannelModel import LOG2_E, expected_log2_one_plus, ratio_cdf
from harvestlink.TypedDicts.Results import DtOptimum, LinkStats
from harvestlink.TypedDicts.Splits import DtSplit
from harvestlink.TypedDicts.SystemParams import SystemParams

logger = logging.getLogger(__name__)

# Upper end of the harvest ratio search
ALPHA_CEILING = 1.0 - 1e-9
SEARCH_TOLERANCE = 1e-9


def check_dt_split(split: DtSplit) -> float:
    alpha = split.get("alpha")
    if not (isinstance(alpha, (int, float)) and 0 < alpha < 1):
        raise DomainError("Harvest ratio alpha must be in (0, 1).", error={"alpha": alpha})
    return float(alpha)


class DirectTransmission:
    """
    Closed-form outage, expected throughput and constrained optimum of the harvest-then-transmit
    direct link S -> D, interference-limited by the access point it harvests from.
    """

    def __init__(self, params: SystemParams) -> None:
        """
        @param params: Interference-limited parameters (sigma2 = 0, equal access point distances)
        """
        require_interference_limited(params)
        self.params = params

    def sir_scale(self, split: DtSplit) -> float:
        """
        SIR scale factor of gamma_DT = k * h_AS / h_AD
        @param split: Time split
        @return: k = zeta * alpha / (1 - alpha)
        """
        alpha = check_dt_split(split)
        return self.params["zeta"] * alpha / (1.0 - alpha)

    def outage(self, split: DtSplit) -> float:
        """
        @param split: Time split
        @return: P(gamma_DT <= gamma_o)
        """
        return ratio_cdf(self.sir_scale(split), self.params["gamma_o"])

    def expected_throughput(self, split: DtSplit) -> float:
        """
        @param split: Time split
        @return: (1 - alpha) * E[log2(1 + gamma_DT)] in bits/s/Hz
        """
        alpha = check_dt_split(split)
        return (1.0 - alpha) * expected_log2_one_plus(self.sir_scale(split))

    def link_stats(self, split: DtSplit) -> LinkStats:
        return {"outage": self.outage(split), "expected_throughput": self.expected_throughput(split)}

    def min_alpha(self) -> float:
        """
        Smallest harvest ratio meeting the outage constraint, 0 without a constraint
        @return: (1 - theta) gamma_o / (theta zeta + (1 - theta) gamma_o)
        """
        theta = self.params["theta"]
        if theta is None:
            return 0.0
        gamma_o = self.params["gamma_o"]
        return (1.0 - theta) * gamma_o / (theta * self.params["zeta"] + (1.0 - theta) * gamma_o)

    def optimize(self) -> DtOptimum:
        """
        Maximizes the expected throughput subject to the outage constraint.
        With zeta = 1 the unconstrained maximizer is exactly 0.5, otherwise it is searched numerically.
        @return: Optimal harvest ratio and what limits it
        """
        lower = self.min_alpha()
        binding = "interior"
        if self.params["zeta"] == 1:
            alpha_star = max(0.5, lower)
            if lower > 0.5:
                binding = "outage_constraint"
        else:
            start = max(lower, SEARCH_TOLERANCE)
            search = minimize_scalar(
                lambda alpha: -self.expected_throughput({"alpha": alpha}),
                bounds=(start, ALPHA_CEILING),
                method="bounded",
                options={"xatol": SEARCH_TOLERANCE},
            )
            alpha_star = float(search.x)
            logger.debug("Bounded search on [%g, %g] stopped at %g", start, ALPHA_CEILING, alpha_star)
            if lower > 0 and self.expected_throughput({"alpha": lower}) >= -search.fun:
                alpha_star = lower
                binding = "outage_constraint"
        split: DtSplit = {"alpha": alpha_star}
        return {
            "alpha_star": alpha_star,
            "throughput": self.expected_throughput(split),
            "outage": self.outage(split),
            "binding": binding,
        }

    @staticmethod
    def deterministic_throughput(alpha: float) -> float:
        """
        Throughput with all gains fixed to 1, where the SIR is alpha / (1 - alpha)
        @param alpha: Harvest ratio
        @return: (1 - alpha) log2(1 / (1 - alpha))
        """
        check_dt_split({"alpha": alpha})
        return -(1.0 - alpha) * math.log1p(-alpha) * LOG2_E

    @staticmethod
    def deterministic_optimize(gamma_o: float) -> float:
        """
        Best deterministic harvest ratio that keeps the SIR alpha / (1 - alpha) at or above gamma_o
        @param gamma_o: Linear SIR threshold
        @return: max(1 - 1/e, gamma_o / (1 + gamma_o))
        """
        if not (isinstance(gamma_o, (int, float)) and math.isfinite(gamma_o) and gamma_o > 0):
            raise DomainError("SIR threshold must be positive.", error={"gamma_o": gamma_o})
        return max(1.0 - math.exp(-1.0), gamma_o / (1.0 + gamma_o))
