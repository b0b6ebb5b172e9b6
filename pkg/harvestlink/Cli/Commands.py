import argparse
import asyncio
import csv
import io
import json
import logging
import os
import sys
from typing import Any

from harvestlink.Cli.Presets import FIGURES, build_figure, df_sweep, dt_sweep
from harvestlink.Helpers.Exceptions import DomainError, HarvestError, InfeasibleError
from harvestlink.Helpers.HelperFunctions import (
    build_sim_config,
    build_system_params,
    db_to_linear,
    format_number,
    load_run_config,
    round_number,
    sweep_values,
    write_atomically,
)
from harvestlink.Models.DecodeForward import DecodeForward, kappa_z_to_split
from harvestlink.Models.DirectTransmission import DirectTransmission
from harvestlink.Models.MonteCarlo import create_simulator_class
from harvestlink.TypedDicts.RunSpec import Cell, Dataset, OutputFormat, RunSpec

logger = logging.getLogger(__name__)

PARAM_KEYS = ("gamma_o", "gamma_o_db", "theta", "mu", "d", "zeta", "p_a", "sigma2", "r_as", "r_ar", "r_ad")
SIM_KEYS = {"slots": "slots", "seed": "seed", "noise": "include_noise", "chunk_size": "chunk_size", "workers": "workers"}
SPLIT_KEYS = ("alpha", "beta", "kappa", "z")
SWEEP_KEYS = ("start", "stop", "step")
DEFAULT_SWEEPS = {
    "dt-sweep": {"start": 0.01, "stop": 0.99, "step": 0.01},
    "df-sweep": {"start": 0.05, "stop": 5.0, "step": 0.05},
}
DEFAULT_FORMATS: dict[str, OutputFormat] = {
    "dt-sweep": "csv",
    "df-sweep": "csv",
    "reproduce": "csv",
    "dt-optimize": "json",
    "df-optimize": "json",
    "simulate": "json",
}


def parse_theta(text: str) -> float | None:
    """
    @param text: Probability, or "none" for the unconstrained problem
    """
    if str(text).lower() == "none":
        return None
    return float(text)


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps unset flags out of the namespace so manifest values survive the merge
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)

    system = common.add_argument_group("System")
    threshold = system.add_mutually_exclusive_group()
    threshold.add_argument("--gamma-o-db", type=float, help="SIR threshold in dB")
    threshold.add_argument("--gamma-o", type=float, help="Linear SIR threshold")
    system.add_argument("--theta", type=parse_theta, help='Outage constraint, "none" for unconstrained')
    system.add_argument("--mu", type=float, help="Path-loss exponent")
    system.add_argument("--d", type=float, help="Source to relay distance, source to destination is 1")
    system.add_argument("--zeta", type=float, help="Harvesting efficiency")
    system.add_argument("--p-a", type=float, help="Access point transmit power (W)")
    system.add_argument("--sigma2", type=float, help="Noise power (W)")
    system.add_argument("--r-as", type=float, help="Access point to source distance")
    system.add_argument("--r-ar", type=float, help="Access point to relay distance")
    system.add_argument("--r-ad", type=float, help="Access point to destination distance")

    split = common.add_argument_group("Time split")
    split.add_argument("--alpha", type=float, help="Harvest ratio")
    split.add_argument("--beta", type=float, help="First hop time")
    split.add_argument("--kappa", type=float, help="alpha / beta")
    split.add_argument("--z", type=float, help="alpha + beta")

    sweep = common.add_argument_group("Sweep")
    sweep.add_argument("--start", type=float)
    sweep.add_argument("--stop", type=float)
    sweep.add_argument("--step", type=float)

    simulation = common.add_argument_group("Simulation")
    simulation.add_argument("--slots", type=int)
    simulation.add_argument("--seed", type=int)
    simulation.add_argument("--noise", action="store_true", help="Add sigma2 to the simulated SINR")
    simulation.add_argument("--chunk-size", type=int)
    simulation.add_argument("--workers", type=int)

    output = common.add_argument_group("Output")
    output.add_argument("--out", help="Output file (directory for reproduce), stdout when omitted")
    output.add_argument("--format", choices=["csv", "json"])
    output.add_argument("--config", help="TOML run manifest, flags override it")
    output.add_argument("-v", "--verbose", action="count", help="-v for info, -vv for debug logging")

    parser = argparse.ArgumentParser(
        prog="harvestlink",
        description="Throughput and outage of wireless powered direct and relay links",
    )
    subcommands = parser.add_subparsers(dest="subcommand", required=True)
    subcommands.add_parser("dt-sweep", parents=[common], help="Direct link over a harvest ratio grid")
    subcommands.add_parser("dt-optimize", parents=[common], help="Optimal direct link harvest ratio")
    subcommands.add_parser("df-sweep", parents=[common], help="Relay link over a kappa grid at fixed z")
    df_optimize = subcommands.add_parser("df-optimize", parents=[common], help="Optimal relay time split")
    df_optimize.add_argument("--method", choices=["joint", "three-step"], default=argparse.SUPPRESS)
    simulate = subcommands.add_parser("simulate", parents=[common], help="Monte Carlo estimate at one split")
    simulate.add_argument("--protocol", choices=["dt", "df"], default=argparse.SUPPRESS)
    reproduce = subcommands.add_parser("reproduce", parents=[common], help="Dataset behind a figure")
    reproduce.add_argument("figure_id", help=f"One of {', '.join(FIGURES)}")
    return parser


def build_run_spec(subcommand: str, flags: dict[str, Any], manifest: dict[str, Any]) -> RunSpec:
    """
    Merges a run manifest with command line flags, flags win
    @param subcommand: Subcommand name
    @param flags: Flags that were given, by argparse destination
    @param manifest: Parsed manifest, top-level options plus [params], [sweep] and [sim] tables
    @return: Validated RunSpec
    """
    params = dict(manifest.get("params", {}))
    for key in PARAM_KEYS:
        if key in flags:
            # a threshold flag replaces the threshold of the manifest in either unit
            if key in ("gamma_o", "gamma_o_db"):
                params.pop("gamma_o", None)
                params.pop("gamma_o_db", None)
            params[key] = flags[key]
    if "gamma_o_db" in params:
        if "gamma_o" in params:
            raise DomainError("Give the SIR threshold either in dB or linear.", error=params)
        params["gamma_o"] = db_to_linear(params.pop("gamma_o_db"))
    if isinstance(params.get("theta"), str):
        try:
            params["theta"] = parse_theta(params["theta"])
        except ValueError as error:
            raise DomainError('Outage constraint theta must be a number or "none".', error=params) from error

    sim = {SIM_KEYS.get(key, key): value for key, value in manifest.get("sim", {}).items()}
    sim.update({SIM_KEYS[key]: flags[key] for key in SIM_KEYS if key in flags})

    sweep = None
    if subcommand in DEFAULT_SWEEPS:
        sweep = {**DEFAULT_SWEEPS[subcommand], **manifest.get("sweep", {})}
        sweep.update({key: flags[key] for key in SWEEP_KEYS if key in flags})

    def option(key: str, default: Any = None) -> Any:
        return flags.get(key, manifest.get(key, default))

    output_format = option("format", DEFAULT_FORMATS[subcommand])
    if output_format not in ("csv", "json"):
        raise DomainError("Output format must be csv or json.", error={"format": output_format})
    return {
        "subcommand": subcommand,
        "params": build_system_params(**params),
        "sweep": sweep,
        "sim": build_sim_config(**sim),
        "split": {key: option(key) for key in SPLIT_KEYS if option(key) is not None},
        "method": str(option("method", "joint")).replace("-", "_"),
        "protocol": option("protocol", "dt"),
        "figure_id": option("figure_id", option("figure", "")),
        "out": option("out"),
        "format": output_format,
    }


def _cell(value: Cell) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    return format_number(value)


def _json_value(value: Cell) -> Cell:
    if isinstance(value, float):
        return round_number(value)
    return value


def render(dataset: Dataset, output_format: OutputFormat) -> str:
    """
    @param dataset: Rows to serialize
    @param output_format: csv (notes, header, rows) or json (one object, or notes and a list of records)
    @return: Serialized text
    """
    if output_format == "csv":
        buffer = io.StringIO()
        for note in dataset["notes"]:
            buffer.write(f"# note: {note}\r\n")
        writer = csv.writer(buffer)
        writer.writerow(dataset["header"])
        writer.writerows([[_cell(value) for value in row] for row in dataset["rows"]])
        return buffer.getvalue()
    records = [
        {name: _json_value(value) for name, value in zip(dataset["header"], row)} for row in dataset["rows"]
    ]
    payload: Any = records[0] if dataset["single"] else {"notes": dataset["notes"], "rows": records}
    return json.dumps(payload, indent=2) + "\n"


def single(record: dict[str, Cell]) -> Dataset:
    return {"notes": [], "header": list(record), "rows": [list(record.values())], "single": True}


async def emit(spec: RunSpec, dataset: Dataset, file_name: str | None = None) -> None:
    """
    Writes to --out (or --out/file_name) through a temporary file, to stdout without --out
    """
    content = render(dataset, spec["format"])
    if spec["out"] is None:
        sys.stdout.write(content)
        return
    path = os.path.join(spec["out"], file_name) if file_name else spec["out"]
    await write_atomically(path, content)
    logger.info("Wrote %s", path)


async def cmd_dt_sweep(spec: RunSpec) -> int:
    alphas = sweep_values(**spec["sweep"])
    await emit(spec, await dt_sweep(spec["params"], spec["sim"], alphas))
    return 0


async def cmd_dt_optimize(spec: RunSpec) -> int:
    optimum = DirectTransmission(spec["params"]).optimize()
    await emit(spec, single(dict(optimum)))
    return 0


async def cmd_df_sweep(spec: RunSpec) -> int:
    z = spec["split"].get("z", 0.5)
    kappas = sweep_values(**spec["sweep"])
    await emit(spec, await df_sweep(spec["params"], spec["sim"], kappas, z))
    return 0


async def cmd_df_optimize(spec: RunSpec) -> int:
    """
    The report is written either way, an infeasible problem then exits with 1
    """
    optimum = DecodeForward(spec["params"]).optimize(method=spec["method"])
    await emit(spec, single(dict(optimum)))
    if not optimum["feasible"]:
        raise InfeasibleError(
            "No time split meets both the outage constraint and data causality.",
            error={"z_lower": optimum["z_lower"], "z_upper": optimum["z_upper"]},
        )
    return 0


async def cmd_simulate(spec: RunSpec) -> int:
    simulator = await create_simulator_class(spec["params"], spec["sim"])
    split = spec["split"]
    if spec["protocol"] == "dt":
        result = await simulator.simulate_dt({"alpha": split.get("alpha", 0.5)})
    elif "kappa" in split or "z" in split:
        kz = {"kappa": split.get("kappa", 1.0), "z": split.get("z", 0.5)}
        result = await simulator.simulate_df(kappa_z_to_split(kz))
    else:
        result = await simulator.simulate_df({"alpha": split.get("alpha", 0.5), "beta": split.get("beta", 0.25)})
    await emit(spec, single(dict(result)))
    return 0


async def cmd_reproduce(spec: RunSpec) -> int:
    figure_id = spec["figure_id"]
    dataset = await build_figure(figure_id, spec["params"], spec["sim"])
    await emit(spec, dataset, file_name=f"{figure_id}.{spec['format']}")
    return 0


COMMANDS = {
    "dt-sweep": cmd_dt_sweep,
    "dt-optimize": cmd_dt_optimize,
    "df-sweep": cmd_df_sweep,
    "df-optimize": cmd_df_optimize,
    "simulate": cmd_simulate,
    "reproduce": cmd_reproduce,
}


async def run(flags: dict[str, Any]) -> int:
    subcommand = flags.pop("subcommand")
    config_file = flags.pop("config", None)
    try:
        manifest = await load_run_config(config_file) if config_file is not None else {}
    except (TypeError, OSError) as error:
        raise DomainError("Could not read the run manifest.", error=str(error)) from error
    spec = build_run_spec(subcommand, flags, manifest)
    logger.debug("Running %s with %s", subcommand, spec)
    return await COMMANDS[subcommand](spec)


def main(argv: list[str] | None = None) -> int:
    """
    @param argv: Arguments without the program name, sys.argv when None
    @return: 0 ok, 1 infeasible, 2 usage or domain error
    """
    try:
        flags = vars(build_parser().parse_args(argv))
    except SystemExit as error:
        return int(error.code or 0)
    verbosity = flags.pop("verbose", 0)
    logging.basicConfig(
        level=logging.DEBUG if verbosity >= 2 else logging.INFO if verbosity == 1 else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return asyncio.run(run(flags))
    except HarvestError as error:
        sys.stderr.write(json.dumps(error.detail, default=str) + "\n")
        return error.exit_code
    except (ValueError, ArithmeticError) as error:
        logger.debug("Unhandled numeric failure", exc_info=True)
        sys.stderr.write(json.dumps({"message": "Invalid input.", "error": str(error)}) + "\n")
        return DomainError.exit_code
