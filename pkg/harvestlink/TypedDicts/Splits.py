from typing import TypedDict


class DtSplit(TypedDict):
    """
    Time split of a direct transmission slot.

    :param alpha: Harvest ratio, fraction of the slot spent harvesting
    """

    alpha: float


class DfSplit(TypedDict):
    """
    Time split of a harvest-transmit-relay slot. The relay phase lasts 1 - alpha - beta.

    :param alpha: Harvesting phase
    :param beta: Source to relay phase
    """

    alpha: float
    beta: float


class KappaZ(TypedDict):
    """
    Reparameterized relay split.

    :param kappa: Harvest ratio alpha / beta
    :param z: Harvest-and-first-hop sum time alpha + beta
    """

    kappa: float
    z: float
