"""
Datasets behind the sweeps and the figure presets. Every builder returns a Dataset whose rows are in
ascending axis order, simulated columns are gathered concurrently.
"""

import asyncio
import logging
import math

from harvestlink.Helpers.Exceptions import DomainError
from harvestlink.Helpers.HelperFunctions import build_system_params, db_to_linear, sweep_values
from harvestlink.Models.DecodeForward import DecodeForward, kappa_z_to_split
from harvestlink.Models.DirectTransmission import DirectTransmission
from harvestlink.Models.MonteCarlo import create_simulator_class
from harvestlink.TypedDicts.RunSpec import Dataset
from harvestlink.TypedDicts.Simulation import SimConfig
from harvestlink.TypedDicts.SystemParams import SystemParams

logger = logging.getLogger(__name__)

FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8")
THETAS = (0.02, 0.05)


def _with(params: SystemParams, **overrides) -> SystemParams:
    merged = dict(params)
    merged.update(overrides)
    return build_system_params(**merged)


async def dt_sweep(params: SystemParams, sim: SimConfig, alphas: list[float]) -> Dataset:
    """
    Analytic and simulated direct link throughput and outage per harvest ratio
    """
    model = DirectTransmission(params)
    simulator = await create_simulator_class(params, sim)
    simulated = await asyncio.gather(*(simulator.simulate_dt({"alpha": alpha}) for alpha in alphas))
    rows = []
    for alpha, result in zip(alphas, simulated):
        stats = model.link_stats({"alpha": alpha})
        rows.append(
            [
                alpha,
                stats["expected_throughput"],
                stats["outage"],
                result["mean_throughput"],
                result["stderr"],
                result["outage_rate"],
            ]
        )
    header = ["alpha", "analytic_throughput", "analytic_outage", "sim_throughput", "sim_stderr", "sim_outage"]
    return {"notes": [], "header": header, "rows": rows, "single": False}


async def df_sweep(params: SystemParams, sim: SimConfig, kappas: list[float], z: float) -> Dataset:
    """
    Relay link per harvest ratio kappa at a fixed sum time z < 1
    """
    model = DecodeForward(params)
    simulator = await create_simulator_class(params, sim)
    splits = [kappa_z_to_split({"kappa": kappa, "z": z}) for kappa in kappas]
    simulated = await asyncio.gather(*(simulator.simulate_df(split) for split in splits))
    rows = []
    for kappa, split, result in zip(kappas, splits, simulated):
        rows.append(
            [
                kappa,
                split["alpha"],
                split["beta"],
                model.expected_throughput_sr(split),
                model.expected_throughput_rd(split),
                model.expected_throughput(split),
                model.outage(split),
                result["mean_throughput_sr"],
                result["mean_throughput_rd"],
                result["mean_throughput"],
                result["outage_rate"],
            ]
        )
    header = [
        "kappa",
        "alpha",
        "beta",
        "analytic_throughput_sr",
        "analytic_throughput_rd",
        "analytic_throughput",
        "analytic_outage",
        "sim_throughput_sr",
        "sim_throughput_rd",
        "sim_throughput",
        "sim_outage",
    ]
    return {"notes": [], "header": header, "rows": rows, "single": False}


async def fig2(params: SystemParams, sim: SimConfig) -> Dataset:
    # no fading: SIR alpha / (1 - alpha)
    notes = [
        f"gamma_o = {gamma_o:.12g}: alpha_star = {DirectTransmission.deterministic_optimize(gamma_o):.12g}"
        for gamma_o in (0.1, math.e - 1.0, 3.0)
    ]
    rows = [
        [alpha, alpha / (1.0 - alpha), DirectTransmission.deterministic_throughput(alpha)]
        for alpha in sweep_values(0.01, 0.99, 0.01)
    ]
    return {"notes": notes, "header": ["alpha", "sir", "throughput"], "rows": rows, "single": False}


async def fig3(params: SystemParams, sim: SimConfig) -> Dataset:
    return await dt_sweep(params, sim, sweep_values(0.01, 0.99, 0.01))


async def fig4(params: SystemParams, sim: SimConfig) -> Dataset:
    """
    Optimal direct link throughput against harvesting efficiency, zeta from 0.1 (lower end not fixed by the setup)
    """
    rows = []
    for zeta in sweep_values(0.1, 1.0, 0.05):
        row = [zeta]
        for theta in (*THETAS, None):
            row.append(DirectTransmission(_with(params, zeta=zeta, theta=theta)).optimize()["throughput"])
        rows.append(row)
    header = ["zeta", "throughput_theta_0.02", "throughput_theta_0.05", "throughput_unconstrained"]
    return {"notes": [], "header": header, "rows": rows, "single": False}


async def fig5(params: SystemParams, sim: SimConfig) -> Dataset:
    rows = []
    for gamma_o_db in sweep_values(-20.0, 0.0, 0.5):
        row = [gamma_o_db]
        for theta in THETAS:
            model = DirectTransmission(_with(params, gamma_o=db_to_linear(gamma_o_db), theta=theta))
            row.append(model.optimize()["alpha_star"])
        rows.append(row)
    return {
        "notes": [],
        "header": ["gamma_o_db", "alpha_star_theta_0.02", "alpha_star_theta_0.05"],
        "rows": rows,
        "single": False,
    }


async def fig6(params: SystemParams, sim: SimConfig) -> Dataset:
    """
    First hop throughput against kappa with the whole slot spent on harvesting and the first hop (z = 1)
    """
    fixed = _with(params, d=0.5, mu=2.0)
    model = DecodeForward(fixed)
    simulator = await create_simulator_class(fixed, sim)
    kappas = sweep_values(0.05, 5.0, 0.05)
    simulated = await asyncio.gather(*(simulator.simulate_first_hop(kappa) for kappa in kappas))
    rows = [
        [kappa, model.esr_kappa_z({"kappa": kappa, "z": 1.0}), result["mean_throughput"], result["stderr"]]
        for kappa, result in zip(kappas, simulated)
    ]
    return {
        "notes": ["z = 1, d = 0.5, mu = 2"],
        "header": ["kappa", "analytic_throughput_sr", "sim_throughput_sr", "sim_stderr"],
        "rows": rows,
        "single": False,
    }


async def fig7(params: SystemParams, sim: SimConfig) -> Dataset:
    """
    Sum time bounds at the first hop maximizing kappa. d = 0 makes both bounds degenerate, so d comes from
    the parameters (0.5 unless overridden)
    """
    if params["d"] != 0.5:
        logger.warning("Sum time bounds computed at d = %g", params["d"])
    rows = []
    for gamma_o_db in sweep_values(-20.0, 0.0, 1.0):
        gamma_o = db_to_linear(gamma_o_db)
        kappa = DecodeForward(_with(params, gamma_o=gamma_o)).optimize_kappa()
        z_lowers = [DecodeForward(_with(params, gamma_o=gamma_o, theta=theta)).z_lower(kappa) for theta in THETAS]
        bounds = DecodeForward(_with(params, gamma_o=gamma_o)).feasibility(kappa)
        rows.append([gamma_o_db, kappa, *z_lowers, bounds["z_upper"]])
    return {
        "notes": [
            f"d = {params['d']:.12g} (d = 0 is singular for the bounds), set with --d",
            "bounds use the three-step kappa maximizing the first hop alone, df-optimize defaults to the joint method",
        ],
        "header": ["gamma_o_db", "kappa_star", "z_lower_theta_0.02", "z_lower_theta_0.05", "z_upper"],
        "rows": rows,
        "single": False,
    }


async def fig8(params: SystemParams, sim: SimConfig) -> Dataset:
    """
    Optimal direct against optimal relay throughput over the relay position
    """
    base = _with(params, gamma_o=db_to_linear(-18.0))
    dt_throughput = DirectTransmission(base).optimize()["throughput"]
    rows = []
    for d in sweep_values(0.05, 0.95, 0.05):
        row = [d, dt_throughput]
        for mu in (2.0, 3.0):
            optimum = DecodeForward(_with(base, d=d, mu=mu)).optimize()
            row.append(optimum["throughput"] if optimum["feasible"] else None)
        rows.append(row)
    theta = base["theta"]
    return {
        "notes": [
            "gamma_o = -18 dB",
            f"theta = {'none' if theta is None else format(theta, '.12g')}, set with --theta",
        ],
        "header": ["d", "dt_throughput", "df_throughput_mu_2", "df_throughput_mu_3"],
        "rows": rows,
        "single": False,
    }


async def build_figure(figure_id: str, params: SystemParams, sim: SimConfig) -> Dataset:
    builders = {
        "fig2": fig2,
        "fig3": fig3,
        "fig4": fig4,
        "fig5": fig5,
        "fig6": fig6,
        "fig7": fig7,
        "fig8": fig8,
    }
    if figure_id not in builders:
        raise DomainError("Unknown figure.", error={"figure_id": figure_id, "known": list(FIGURES)})
    logger.info("Building %s", figure_id)
    return await builders[figure_id](params, sim)
