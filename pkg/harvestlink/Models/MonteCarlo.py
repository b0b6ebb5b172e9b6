import asyncio
import logging
import math

import numpy as np

from harvestlink.Helpers.Exceptions import DomainError, SimulationError
from harvestlink.Helpers.HelperFunctions import build_sim_config, validate_system_params
from harvestlink.Models.ChannelModel import exponential_from_uniform, replace_underflow
from harvestlink.Models.DecodeForward import check_df_split
from harvestlink.Models.DirectTransmission import check_dt_split
from harvestlink.TypedDicts.Simulation import Protocol, SimConfig, SimResult, SlotRealization
from harvestlink.TypedDicts.Splits import DfSplit, DtSplit
from harvestlink.TypedDicts.SystemParams import SystemParams

logger = logging.getLogger(__name__)

# Raw 64-bit words per slot: h_as, h_ar, h_ad and a spare for underflowing denominators
WORDS_PER_SLOT = 4


def _physical_chain(
    params: SystemParams,
    alpha: float,
    beta: float | None,
    h_as: np.ndarray,
    h_ar: np.ndarray,
    h_ad: np.ndarray,
    include_noise: bool,
    first_hop_only: bool = False,
) -> dict[str, np.ndarray]:
    """
    Energy, power, SINR and rate of every slot. beta None is the direct link, otherwise the relay link
    """
    p_a, zeta, mu = params["p_a"], params["zeta"], params["mu"]
    noise = params["sigma2"] if include_noise else 0.0
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        loss_as, loss_ar, loss_ad = (np.float64(params[key]) ** -mu for key in ("r_as", "r_ar", "r_ad"))
        loss_sr, loss_rd = np.float64(params["d"]) ** -mu, np.float64(1.0 - params["d"]) ** -mu
        e_s = alpha * zeta * p_a * h_as * loss_as
        interference_d = p_a * h_ad * loss_ad + noise
        if beta is None:
            p_s = e_s / (1.0 - alpha)
            gamma_dt = p_s / interference_d
            chain = {"e_s": e_s, "p_s": p_s, "gamma_dt": gamma_dt, "r_dt": (1.0 - alpha) * np.log2(1.0 + gamma_dt)}
        else:
            relay_time = 1.0 - alpha - beta
            e_r = alpha * zeta * p_a * h_ar * loss_ar
            p_s_co = e_s / beta
            gamma_sr = p_s_co * loss_sr / (p_a * h_ar * loss_ar + noise)
            chain = {"e_s": e_s, "e_r": e_r, "p_s_co": p_s_co, "gamma_sr": gamma_sr}
            chain["r_sr"] = beta * np.log2(1.0 + gamma_sr)
            if not first_hop_only:
                p_r = e_r / relay_time
                gamma_rd = p_r * loss_rd / interference_d
                chain.update({"p_r": p_r, "gamma_rd": gamma_rd, "r_rd": relay_time * np.log2(1.0 + gamma_rd)})
    for name in ("gamma_dt", "gamma_sr", "gamma_rd"):
        if name in chain and not np.all(np.isfinite(chain[name])):
            raise SimulationError(
                "SINR overflowed, path loss or distances are too extreme to simulate.",
                error={"sinr": name, "mu": mu, "d": params["d"]},
            )
    return chain


def derive_slot(
    params: SystemParams,
    split: DtSplit | DfSplit,
    h_as: float,
    h_ar: float,
    h_ad: float,
    protocol: Protocol,
    include_noise: bool = True,
) -> SlotRealization:
    """
    Runs one slot through the physical model
    @param params: System parameters, noise and distances included
    @param split: Time split of the protocol
    @param h_as: Gain AP -> S
    @param h_ar: Gain AP -> R
    @param h_ad: Gain AP -> D
    @param protocol: "dt" or "df"
    @param include_noise: Whether sigma2 enters the SINR
    @return: Energies, powers, SINRs and rates of the slot
    """
    validate_system_params(params)
    gains = {"h_as": h_as, "h_ar": h_ar, "h_ad": h_ad}
    if not all(isinstance(value, (int, float)) and math.isfinite(value) and value > 0 for value in gains.values()):
        raise DomainError("Channel gains must be positive and finite.", error=gains)
    if protocol == "dt":
        alpha, beta = check_dt_split(split), None
    elif protocol == "df":
        alpha, beta = check_df_split(split)
    else:
        raise DomainError("Unknown protocol.", error={"protocol": protocol})
    chain = _physical_chain(params, alpha, beta, *(np.float64(value) for value in gains.values()), include_noise)
    slot: SlotRealization = {name: float(value) for name, value in gains.items()}
    slot.update({name: float(value) for name, value in chain.items()})
    return slot


def draw_gains(seed: int, start: int, count: int) -> np.ndarray:
    """
    Fading gains of slots start .. start + count - 1, a pure function of (seed, slot index)
    @param seed: Philox key
    @param start: First slot index, used as the Philox counter
    @param count: Number of slots
    @return: Array of shape (count, 3) holding h_as, h_ar, h_ad
    """
    raw = np.random.Philox(key=seed, counter=start).random_raw(WORDS_PER_SLOT * count).reshape(count, WORDS_PER_SLOT)
    gains = exponential_from_uniform((raw >> np.uint64(11)).astype(np.float64) * 2.0**-53)
    gains[:, 1] = replace_underflow(gains[:, 1], gains[:, 3])
    gains[:, 2] = replace_underflow(gains[:, 2], gains[:, 3])
    return gains[:, :3]


def _stderr(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(values.size))


def _outage_stderr(rate: float, slots: int) -> float:
    return math.sqrt(rate * (1.0 - rate) / slots)


class Simulator:
    """
    Slot-level Rayleigh fading simulation of the direct and relay links. Slots are cut into chunks that run
    in worker threads, results only depend on the seed and the slot count.
    """

    def __init__(self, params: SystemParams, config: SimConfig) -> None:
        """
        @param params: System parameters
        @param config: Slot count, seed, noise switch and chunking
        """
        validate_system_params(params)
        self.params = params
        self.config = config
        self._loop: asyncio.AbstractEventLoop | None = None
        self._chunk_limit: asyncio.Semaphore | None = None
        self._row_limit: asyncio.Semaphore | None = None

    def _limits(self) -> tuple[asyncio.Semaphore, asyncio.Semaphore]:
        # one pair per simulator and loop: workers bounds the threads and the buffered rows of a whole sweep
        loop = asyncio.get_running_loop()
        if self._loop is not loop:
            self._loop = loop
            self._chunk_limit = asyncio.Semaphore(self.config["workers"])
            self._row_limit = asyncio.Semaphore(self.config["workers"])
        return self._chunk_limit, self._row_limit

    async def _run_chunks(
        self, alpha: float, beta: float | None, fields: tuple[str, ...], first_hop_only: bool = False
    ) -> dict[str, np.ndarray]:
        slots, chunk_size = self.config["slots"], self.config["chunk_size"]
        chunk_limit, row_limit = self._limits()

        def run(results: dict[str, np.ndarray], start: int, count: int) -> None:
            gains = draw_gains(self.config["seed"], start, count)
            chain = _physical_chain(
                self.params,
                alpha,
                beta,
                gains[:, 0],
                gains[:, 1],
                gains[:, 2],
                self.config["include_noise"],
                first_hop_only,
            )
            for name in fields:
                results[name][start : start + count] = chain[name]

        async def run_limited(results: dict[str, np.ndarray], start: int) -> None:
            async with chunk_limit:
                await asyncio.to_thread(run, results, start, min(chunk_size, slots - start))

        async with row_limit:
            results = {name: np.empty(slots) for name in fields}
            await asyncio.gather(*(run_limited(results, start) for start in range(0, slots, chunk_size)))
        logger.debug("Simulated %d slots in chunks of %d", slots, chunk_size)
        return results

    def _link_summary(self, rates: np.ndarray, sinr: np.ndarray) -> SimResult:
        in_outage = sinr <= self.params["gamma_o"]
        outage_rate = float(np.mean(in_outage))
        served = rates[~in_outage]
        return {
            "slots": int(rates.size),
            "mean_throughput": float(np.mean(rates)),
            "stderr": _stderr(rates),
            "outage_rate": outage_rate,
            "outage_stderr": _outage_stderr(outage_rate, rates.size),
            "conditional_mean_throughput": float(np.mean(served)) if served.size else 0.0,
        }

    async def simulate_dt(self, split: DtSplit) -> SimResult:
        """
        @param split: Time split of the direct link
        @return: Unconditional mean throughput, outage rate and their standard errors
        """
        alpha = check_dt_split(split)
        results = await self._run_chunks(alpha, None, ("r_dt", "gamma_dt"))
        return self._link_summary(results["r_dt"], results["gamma_dt"])

    async def simulate_df(self, split: DfSplit) -> SimResult:
        """
        Both hops see the same AP -> R gain, so the two-link outage event is counted slot by slot
        rather than taken as the product of the per-link rates
        @param split: Time split of the relay link
        @return: Per-link and end-to-end estimates
        """
        alpha, beta = check_df_split(split)
        results = await self._run_chunks(alpha, beta, ("r_sr", "gamma_sr", "r_rd", "gamma_rd"))
        gamma_o = self.params["gamma_o"]
        outage_sr = results["gamma_sr"] <= gamma_o
        outage_rd = results["gamma_rd"] <= gamma_o
        in_outage = outage_sr | outage_rd
        slots = self.config["slots"]
        rate_sr, rate_rd = float(np.mean(outage_sr)), float(np.mean(outage_rd))
        outage_rate = float(np.mean(in_outage))
        mean_sr, mean_rd = float(np.mean(results["r_sr"])), float(np.mean(results["r_rd"]))
        stderr_sr, stderr_rd = _stderr(results["r_sr"]), _stderr(results["r_rd"])
        per_slot_min = np.minimum(results["r_sr"], results["r_rd"])
        served = per_slot_min[~in_outage]
        return {
            "slots": slots,
            "mean_throughput": min(mean_sr, mean_rd),
            "stderr": stderr_sr if mean_sr <= mean_rd else stderr_rd,
            "outage_rate": outage_rate,
            "outage_stderr": _outage_stderr(outage_rate, slots),
            "conditional_mean_throughput": float(np.mean(served)) if served.size else 0.0,
            "mean_throughput_sr": mean_sr,
            "stderr_sr": stderr_sr,
            "mean_throughput_rd": mean_rd,
            "stderr_rd": stderr_rd,
            "outage_rate_sr": rate_sr,
            "outage_rate_rd": rate_rd,
            "outage_rate_product": 1.0 - (1.0 - rate_sr) * (1.0 - rate_rd),
            "mean_min_throughput": float(np.mean(per_slot_min)),
            "stderr_min": _stderr(per_slot_min),
        }

    async def simulate_first_hop(self, kappa: float, z: float = 1.0) -> SimResult:
        """
        S -> R link alone with alpha = kappa z / (1 + kappa) and beta = z / (1 + kappa), z = 1 leaves no relay time
        @param kappa: Harvest ratio alpha / beta
        @param z: Sum time alpha + beta
        @return: First hop estimates
        """
        if not (isinstance(kappa, (int, float)) and math.isfinite(kappa) and kappa > 0 and 0 < z <= 1):
            raise DomainError("Need kappa > 0 and z in (0, 1].", error={"kappa": kappa, "z": z})
        alpha, beta = kappa * z / (1.0 + kappa), z / (1.0 + kappa)
        results = await self._run_chunks(alpha, beta, ("r_sr", "gamma_sr"), first_hop_only=True)
        return self._link_summary(results["r_sr"], results["gamma_sr"])


async def create_simulator_class(params: SystemParams, config: SimConfig | None = None) -> Simulator:
    return Simulator(params=params, config=config if config is not None else build_sim_config())
