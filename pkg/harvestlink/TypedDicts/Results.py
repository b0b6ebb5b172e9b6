from typing import Literal, TypedDict

Binding = Literal["interior", "outage_constraint", "infeasible"]


class LinkStats(TypedDict):
    outage: float
    expected_throughput: float


class DtOptimum(TypedDict):
    alpha_star: float
    throughput: float
    outage: float
    binding: Binding


class DfFeasibility(TypedDict):
    """
    Bounds on the harvest-and-first-hop sum time for one harvest ratio.

    :param z_lower: Smallest z meeting the outage constraint, None if no z in (0, 1) does
    :param z_upper: Largest z meeting data causality
    :param psi: Right hand side of the causality condition f(tau) >= psi
    :param tau_star: Inverse of f at psi, inf past the float range
    :param feasible: Whether z_lower <= z_upper
    """

    z_lower: float | None
    z_upper: float
    psi: float
    tau_star: float
    feasible: bool


class DfOptimum(TypedDict):
    kappa_star: float
    z_star: float
    alpha_star: float
    beta_star: float
    throughput: float
    outage: float
    feasible: bool
    z_lower: float | None
    z_upper: float
