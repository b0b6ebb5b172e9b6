import asyncio
import math
import threading
import time

import numpy as np
import pytest
from scipy import stats

from harvestlink.Helpers.Exceptions import DomainError, SimulationError
from harvestlink.Helpers.HelperFunctions import build_sim_config, build_system_params
from harvestlink.Models import MonteCarlo as monte_carlo
from harvestlink.Models.ChannelModel import ratio_cdf
from harvestlink.Models.DecodeForward import DecodeForward
from harvestlink.Models.DirectTransmission import DirectTransmission
from harvestlink.Models.MonteCarlo import Simulator, create_simulator_class, derive_slot, draw_gains


def simulate(coroutine):
    return asyncio.run(coroutine)


class TestDeriveSlot:
    def test_equal_gains_give_unit_sir(self, params):
        slot = derive_slot(params, {"alpha": 0.5}, 0.7, 1.3, 0.7, "dt")
        assert slot["gamma_dt"] == pytest.approx(1.0, rel=1e-12)
        assert slot["r_dt"] == pytest.approx(0.5, rel=1e-12)

    def test_reduces_to_scaled_ratio(self):
        params = build_system_params(zeta=0.6, d=0.3, mu=3.0)
        h_as, h_ar, h_ad = 0.4, 1.7, 0.9
        slot = derive_slot(params, {"alpha": 0.3, "beta": 0.5}, h_as, h_ar, h_ad, "df")
        assert slot["gamma_sr"] == pytest.approx(0.6 * 0.3 * 0.3**-3 / 0.5 * h_as / h_ar, rel=1e-12)
        assert slot["gamma_rd"] == pytest.approx(0.6 * 0.3 * 0.7**-3 / 0.2 * h_ar / h_ad, rel=1e-12)
        dt = derive_slot(params, {"alpha": 0.3}, h_as, h_ar, h_ad, "dt")
        assert dt["gamma_dt"] == pytest.approx(0.6 * 0.3 / 0.7 * h_as / h_ad, rel=1e-12)

    def test_power_does_not_matter_without_noise(self):
        slot = derive_slot(build_system_params(p_a=1.0), {"alpha": 0.4, "beta": 0.3}, 0.5, 2.0, 1.1, "df")
        louder = derive_slot(build_system_params(p_a=10.0), {"alpha": 0.4, "beta": 0.3}, 0.5, 2.0, 1.1, "df")
        for name in ("gamma_sr", "gamma_rd"):
            assert louder[name] == pytest.approx(slot[name], rel=1e-12)
        assert louder["e_s"] == pytest.approx(10.0 * slot["e_s"], rel=1e-12)

    def test_noise_lowers_sinr(self):
        params = build_system_params(sigma2=1e-3)
        quiet = derive_slot(params, {"alpha": 0.5}, 1.0, 1.0, 1.0, "dt", include_noise=False)
        noisy = derive_slot(params, {"alpha": 0.5}, 1.0, 1.0, 1.0, "dt", include_noise=True)
        assert noisy["gamma_dt"] < quiet["gamma_dt"]

    def test_energy_and_power(self, params):
        slot = derive_slot(params, {"alpha": 0.4, "beta": 0.2}, 2.0, 3.0, 1.0, "df")
        assert slot["e_s"] == pytest.approx(0.4 * 2.0 * 10.0**-2, rel=1e-12)
        assert slot["e_r"] == pytest.approx(0.4 * 3.0 * 10.0**-2, rel=1e-12)
        assert slot["p_s_co"] == pytest.approx(slot["e_s"] / 0.2, rel=1e-12)
        assert slot["p_r"] == pytest.approx(slot["e_r"] / 0.4, rel=1e-12)
        assert all(value >= 0 for value in slot.values())

    def test_rejects(self, params):
        with pytest.raises(DomainError):
            derive_slot(params, {"alpha": 0.5}, 0.0, 1.0, 1.0, "dt")
        with pytest.raises(DomainError):
            derive_slot(params, {"alpha": 0.5}, 1.0, 1.0, 1.0, "af")


class TestDeterminism:
    def test_same_seed_same_result(self, params):
        config = build_sim_config(slots=20_000, seed=5)
        first = simulate(Simulator(params, config).simulate_dt({"alpha": 0.3}))
        second = simulate(Simulator(params, config).simulate_dt({"alpha": 0.3}))
        assert first == second

    def test_independent_of_chunking(self, params):
        wide = build_sim_config(slots=30_001, seed=11, chunk_size=65_536, workers=4)
        narrow = build_sim_config(slots=30_001, seed=11, chunk_size=997, workers=1)
        split = {"alpha": 0.5, "beta": 0.2}
        assert simulate(Simulator(params, wide).simulate_df(split)) == simulate(
            Simulator(params, narrow).simulate_df(split)
        )

    def test_gains_depend_on_slot_index_only(self):
        np.testing.assert_array_equal(draw_gains(3, 0, 10)[4:], draw_gains(3, 4, 6))

    def test_seeds_differ(self):
        assert not np.array_equal(draw_gains(1, 0, 100), draw_gains(2, 0, 100))

    def test_gains_are_unit_exponential(self):
        gains = draw_gains(7, 0, 200_000)
        critical = 1.63 / math.sqrt(gains.shape[0])
        for column in range(3):
            assert stats.kstest(gains[:, column], "expon").statistic < critical

    def test_sir_ratio_distribution(self):
        gains = draw_gains(13, 0, 1_000_000)
        k = 1.0
        sir = k * gains[:, 0] / gains[:, 2]
        statistic = stats.kstest(sir, lambda x: ratio_cdf(k, x)).statistic
        assert statistic < 1.63 / math.sqrt(sir.size)

    def test_factory_defaults(self, params):
        simulator = simulate(create_simulator_class(params))
        assert simulator.config["slots"] == 10_000


class TestWorkerLimit:
    def test_workers_cap_spans_rows(self, params, monkeypatch):
        lock = threading.Lock()
        active, peak = [0], [0]
        original = monte_carlo.draw_gains

        def tracked(seed, start, count):
            with lock:
                active[0] += 1
                peak[0] = max(peak[0], active[0])
            time.sleep(0.01)
            try:
                return original(seed, start, count)
            finally:
                with lock:
                    active[0] -= 1

        monkeypatch.setattr(monte_carlo, "draw_gains", tracked)
        config = build_sim_config(slots=4000, seed=3, chunk_size=500, workers=2)
        simulator = Simulator(params, config)

        async def sweep():
            return await asyncio.gather(*(simulator.simulate_dt({"alpha": alpha}) for alpha in (0.2, 0.4, 0.6, 0.8)))

        rows = simulate(sweep())
        assert peak[0] <= 2
        assert rows[1] == simulate(Simulator(params, config).simulate_dt({"alpha": 0.4}))

    def test_reused_across_event_loops(self, params):
        simulator = Simulator(params, build_sim_config(slots=2000, seed=6))
        assert simulate(simulator.simulate_dt({"alpha": 0.5})) == simulate(simulator.simulate_dt({"alpha": 0.5}))


class TestDirectAgreement:
    def test_half_split_mean(self, params, sim_config):
        result = simulate(Simulator(params, sim_config).simulate_dt({"alpha": 0.5}))
        assert abs(result["mean_throughput"] - 0.5 / math.log(2.0)) <= 3.0 * result["stderr"]
        assert result["slots"] == sim_config["slots"]

    @pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.7, 0.9])
    def test_sweep_points(self, params, sim_config, alpha):
        model = DirectTransmission(params)
        result = simulate(Simulator(params, sim_config).simulate_dt({"alpha": alpha}))
        assert abs(result["mean_throughput"] - model.expected_throughput({"alpha": alpha})) <= 3.0 * result["stderr"]
        assert abs(result["outage_rate"] - model.outage({"alpha": alpha})) <= 3.0 * result["outage_stderr"]

    @pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
    def test_outage_at_low_threshold(self, sim_config, alpha):
        params = build_system_params(gamma_o=0.05)
        model = DirectTransmission(params)
        result = simulate(Simulator(params, sim_config).simulate_dt({"alpha": alpha}))
        assert abs(result["outage_rate"] - model.outage({"alpha": alpha})) <= 3.0 * result["outage_stderr"]

    def test_conditional_mean_is_larger(self, params):
        result = simulate(Simulator(params, build_sim_config(slots=50_000)).simulate_dt({"alpha": 0.5}))
        assert result["conditional_mean_throughput"] > result["mean_throughput"]
        assert 0.0 <= result["outage_rate"] <= 1.0


class TestRelayAgreement:
    def test_closed_forms(self, relay_params, sim_config):
        split = {"alpha": 0.5, "beta": 0.25}
        model = DecodeForward(relay_params)
        result = simulate(Simulator(relay_params, sim_config).simulate_df(split))
        assert abs(result["mean_throughput_sr"] - model.expected_throughput_sr(split)) <= 3.0 * result["stderr_sr"]
        assert abs(result["mean_throughput_rd"] - model.expected_throughput_rd(split)) <= 3.0 * result["stderr_rd"]
        assert abs(result["outage_rate"] - model.outage(split)) <= 3.0 * result["outage_stderr"]
        assert abs(result["outage_rate_sr"] - model.outage_sr(split)) <= 3.0 * math.sqrt(
            model.outage_sr(split) * (1 - model.outage_sr(split)) / result["slots"]
        )

    def test_symmetric_hops(self, relay_params):
        config = build_sim_config(slots=200_000, seed=3)
        result = simulate(Simulator(relay_params, config).simulate_df({"alpha": 0.4, "beta": 0.3}))
        gap = abs(result["mean_throughput_sr"] - result["mean_throughput_rd"])
        # the hops share h_ar, so the errors add
        assert gap <= 3.0 * (result["stderr_sr"] + result["stderr_rd"])

    def test_per_slot_min_is_dominated(self, relay_params):
        simulator = Simulator(relay_params, build_sim_config(slots=50_000))
        result = simulate(simulator.simulate_df({"alpha": 0.5, "beta": 0.2}))
        assert result["mean_min_throughput"] <= result["mean_throughput"] + 3.0 * result["stderr_min"]
        assert result["mean_throughput"] == min(result["mean_throughput_sr"], result["mean_throughput_rd"])

    def test_first_hop_full_slot(self, relay_params, sim_config):
        model = DecodeForward(relay_params)
        result = simulate(Simulator(relay_params, sim_config).simulate_first_hop(1.0))
        assert abs(result["mean_throughput"] - model.esr_kappa_z({"kappa": 1.0, "z": 1.0})) <= 3.0 * result["stderr"]

    def test_overflow_is_reported(self):
        params = build_system_params(d=1e-3, mu=200.0)
        with pytest.raises(SimulationError):
            simulate(Simulator(params, build_sim_config(slots=10)).simulate_df({"alpha": 0.5, "beta": 0.2}))

    def test_noise_lowers_throughput(self):
        params = build_system_params(sigma2=1e-3)
        quiet = simulate(Simulator(params, build_sim_config(slots=5_000)).simulate_dt({"alpha": 0.5}))
        noisy = simulate(
            Simulator(params, build_sim_config(slots=5_000, include_noise=True)).simulate_dt({"alpha": 0.5})
        )
        assert noisy["mean_throughput"] < quiet["mean_throughput"]

    def test_power_scale_invariance(self, relay_params):
        config = build_sim_config(slots=20_000, seed=17)
        split = {"alpha": 0.45, "beta": 0.3}
        base = simulate(Simulator(relay_params, config).simulate_df(split))
        scaled_params = build_system_params(**{**relay_params, "p_a": 250.0})
        scaled = simulate(Simulator(scaled_params, config).simulate_df(split))
        for name in ("mean_throughput_sr", "mean_throughput_rd", "mean_min_throughput"):
            assert scaled[name] == pytest.approx(base[name], rel=1e-12)
        assert scaled["outage_rate"] == pytest.approx(base["outage_rate"], abs=1e-4)
