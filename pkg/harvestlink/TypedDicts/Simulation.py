from typing import Literal, TypedDict

Protocol = Literal["dt", "df"]


class FadingDraw(TypedDict):
    """
    Unit-mean exponential channel power gain.
    """

    h: float


class SimConfig(TypedDict):
    """
    :param slots: Number of simulated slots
    :param seed: Key of the counter-based random stream
    :param include_noise: Whether receiver noise enters the SINR
    :param chunk_size: Slots per worker task
    :param workers: Maximum number of chunk tasks running at once
    """

    slots: int
    seed: int
    include_noise: bool
    chunk_size: int
    workers: int


class SlotRealization(TypedDict, total=False):
    h_as: float
    h_ar: float
    h_ad: float
    e_s: float
    e_r: float
    p_s: float
    p_s_co: float
    p_r: float
    gamma_dt: float
    gamma_sr: float
    gamma_rd: float
    r_dt: float
    r_sr: float
    r_rd: float


class SimResult(TypedDict, total=False):
    """
    Monte Carlo estimates. The relay fields are only present for relay simulations.
    """

    slots: int
    mean_throughput: float
    stderr: float
    outage_rate: float
    outage_stderr: float
    conditional_mean_throughput: float
    mean_throughput_sr: float
    stderr_sr: float
    mean_throughput_rd: float
    stderr_rd: float
    outage_rate_sr: float
    outage_rate_rd: float
    outage_rate_product: float
    mean_min_throughput: float
    stderr_min: float
