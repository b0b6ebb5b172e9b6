from typing import Literal, TypedDict

from harvestlink.TypedDicts.Simulation import Protocol, SimConfig
from harvestlink.TypedDicts.SystemParams import SystemParams

OutputFormat = Literal["csv", "json"]
Cell = float | int | str | bool | None


class SweepRange(TypedDict):
    start: float
    stop: float
    step: float


class RunSpec(TypedDict, total=False):
    """
    Everything one command line invocation needs, after the manifest and the flags are merged.

    :param split: Any of alpha, beta, kappa, z given on the command line or in the manifest
    :param out: Output file, or output directory for reproduce, None for stdout
    """

    subcommand: str
    params: SystemParams
    sweep: SweepRange | None
    sim: SimConfig
    split: dict[str, float]
    method: str
    protocol: Protocol
    figure_id: str
    out: str | None
    format: OutputFormat | None


class Dataset(TypedDict):
    """
    Tabular command output. notes become leading "# note:" lines in CSV, single marks a one-record result
    """

    notes: list[str]
    header: list[str]
    rows: list[list[Cell]]
    single: bool
