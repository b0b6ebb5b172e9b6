import logging
import math
import os
import uuid
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import aiofiles
import aiofiles.os

from harvestlink.Helpers.Exceptions import DomainError
from harvestlink.TypedDicts.Simulation import SimConfig
from harvestlink.TypedDicts.SystemParams import SystemParams

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12


def db_to_linear(value_db: float) -> float:
    """
    @param value_db: Value in decibels
    @return: 10^(dB/10)
    """
    return 10.0 ** (value_db / 10.0)


def build_system_params(**overrides: Any) -> SystemParams:
    """
    Builds SystemParams from the defaults used throughout the experiments and validates them
    @param overrides: Fields to replace
    @return: Validated SystemParams
    """
    params: SystemParams = {
        "gamma_o": db_to_linear(-13.0),
        "theta": 0.05,
        "mu": 2.0,
        "d": 0.5,
        "zeta": 1.0,
        "p_a": 1.0,
        "sigma2": 0.0,
        "r_as": 10.0,
        "r_ar": 10.0,
        "r_ad": 10.0,
    }
    unknown = set(overrides) - set(params)
    if unknown:
        raise DomainError("Unknown system parameters.", error=sorted(unknown))
    params.update(overrides)
    validate_system_params(params)
    return params


def validate_system_params(params: SystemParams) -> None:
    """
    Raises DomainError if any field is outside its domain
    @param params: Parameters to check
    """

    def check(name: str, ok: bool, domain: str) -> None:
        if not ok:
            raise DomainError(
                f"System parameter {name} must be {domain}.",
                error={name: params.get(name)},
            )

    def finite(name: str) -> bool:
        value = params.get(name)
        return isinstance(value, (int, float)) and math.isfinite(value)

    check("gamma_o", finite("gamma_o") and params["gamma_o"] > 0, "positive")
    theta = params.get("theta")
    if theta is not None:
        check("theta", finite("theta") and 0 < theta < 1, "in (0, 1)")
    check("mu", finite("mu") and params["mu"] >= 2, "at least 2")
    check("d", finite("d") and 0 < params["d"] < 1, "in (0, 1)")
    check("zeta", finite("zeta") and 0 < params["zeta"] <= 1, "in (0, 1]")
    check("p_a", finite("p_a") and params["p_a"] > 0, "positive")
    check("sigma2", finite("sigma2") and params["sigma2"] >= 0, "nonnegative")
    for name in ("r_as", "r_ar", "r_ad"):
        check(name, finite(name) and params[name] > 0, "positive")


def require_interference_limited(params: SystemParams) -> None:
    """
    The closed forms assume no noise and equal access point distances
    @param params: Parameters to check
    """
    validate_system_params(params)
    if params["sigma2"] != 0:
        raise DomainError(
            "Analytic expressions need sigma2 = 0 (interference-limited link).",
            error={"sigma2": params["sigma2"]},
        )
    if not params["r_as"] == params["r_ar"] == params["r_ad"]:
        raise DomainError(
            "Analytic expressions need equal access point distances.",
            error={key: params[key] for key in ("r_as", "r_ar", "r_ad")},
        )


def build_sim_config(**overrides: Any) -> SimConfig:
    """
    @param overrides: Fields to replace
    @return: Validated SimConfig
    """
    config: SimConfig = {
        "slots": 10_000,
        "seed": 0,
        "include_noise": False,
        "chunk_size": 65_536,
        "workers": 4,
    }
    unknown = set(overrides) - set(config)
    if unknown:
        raise DomainError("Unknown simulation options.", error=sorted(unknown))
    config.update(overrides)
    for name in ("slots", "chunk_size", "workers"):
        if not isinstance(config[name], int) or config[name] < 1:
            raise DomainError(f"Simulation option {name} must be a positive integer.", error={name: config[name]})
    if not isinstance(config["seed"], int) or not 0 <= config["seed"] < 2**64:
        raise DomainError("Seed must be a 64-bit unsigned integer.", error={"seed": config["seed"]})
    return config


def format_number(value: float | None) -> str:
    """
    Fixed 12 significant digit text form, empty for missing values
    """
    if value is None:
        return ""
    return format(float(value), f".{SIGNIFICANT_DIGITS}g")


def round_number(value: float) -> float:
    return float(format_number(value))


def sweep_values(start: float, stop: float, step: float) -> list[float]:
    """
    Grid start, start + step, ... up to and including stop, each value rounded to 12 significant digits
    @param start: First value
    @param stop: Last value
    @param step: Spacing
    @return: Ascending axis values
    """
    if not all(isinstance(value, (int, float)) and math.isfinite(value) for value in (start, stop, step)):
        raise DomainError("Sweep bounds must be finite numbers.", error={"start": start, "stop": stop, "step": step})
    if step <= 0 or stop < start:
        raise DomainError("Sweep range is empty.", error={"start": start, "stop": stop, "step": step})
    count = int(math.floor(round((stop - start) / step, 9))) + 1
    return [round_number(start + index * step) for index in range(count)]


async def load_run_config(config_file: dict | str) -> dict:
    """
    @param config_file: Run manifest as a dict or a path to a TOML file
    @return: The manifest as a dict
    """
    # Check if its the manifest content or path to the file
    if isinstance(config_file, dict):
        return config_file
    if isinstance(config_file, str) and config_file.endswith(".toml"):
        async with aiofiles.open(config_file, "r") as file:
            content = await file.read()
        try:
            return tomllib.loads(content)
        except tomllib.TOMLDecodeError as error:
            raise DomainError(f"Could not parse {config_file}.", error=str(error)) from error
    raise TypeError(f"Expected config_file to be a dict or a .toml path (str), got {type(config_file).__name__}")


async def write_atomically(path: str, content: str) -> None:
    """
    Writes to a sibling temporary file and renames it over the target, so a partial file is never left behind
    @param path: Target file
    @param content: Text to write
    """
    directory = os.path.dirname(os.path.abspath(path))
    await aiofiles.os.makedirs(directory, exist_ok=True)
    temporary = os.path.join(directory, f".{os.path.basename(path)}.{uuid.uuid4().hex}.tmp")
    try:
        async with aiofiles.open(temporary, "w", newline="") as file:
            await file.write(content)
        await aiofiles.os.replace(temporary, path)
    except BaseException:
        if await aiofiles.os.path.exists(temporary):
            await aiofiles.os.remove(temporary)
        raise
    logger.debug("Wrote %d characters to %s", len(content), path)
