from typing import TypedDict


class SystemParams(TypedDict):
    """
    Physical and constraint constants of one link configuration.
    Slot length is normalized to 1 and the S-D distance to 1.

    :param gamma_o: Linear SIR threshold
    :param theta: Maximum tolerable outage probability, None for the unconstrained problem
    :param mu: Path-loss exponent
    :param d: Source-relay distance, the relay-destination distance is 1 - d
    :param zeta: Energy harvesting efficiency
    :param p_a: Transmit power of the access point in watts
    :param sigma2: Receiver noise power in watts
    :param r_as: Distance from the access point to the source
    :param r_ar: Distance from the access point to the relay
    :param r_ad: Distance from the access point to the destination
    """

    gamma_o: float
    theta: float | None
    mu: float
    d: float
    zeta: float
    p_a: float
    sigma2: float
    r_as: float
    r_ar: float
    r_ad: float
