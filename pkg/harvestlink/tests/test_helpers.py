import asyncio
import os

import pytest

from harvestlink.Helpers.Exceptions import DomainError, HarvestError, InfeasibleError
from harvestlink.Helpers.HelperFunctions import (
    build_sim_config,
    build_system_params,
    db_to_linear,
    format_number,
    load_run_config,
    require_interference_limited,
    round_number,
    sweep_values,
    write_atomically,
)


class TestDecibels:
    def test_known_values(self):
        assert db_to_linear(0.0) == 1.0
        assert db_to_linear(-10.0) == pytest.approx(0.1, rel=1e-15)
        assert f"{db_to_linear(-13.0):.4g}" == "0.05012"

    def test_monotone(self):
        values = [db_to_linear(value_db) for value_db in (-20.0, -13.0, 0.0, 7.5)]
        assert values == sorted(values)
        assert db_to_linear(-18.0) == pytest.approx(0.015848931924611134, rel=1e-12)


class TestSweepValues:
    @pytest.mark.parametrize(
        "start, stop, step, count",
        [
            (0.01, 0.99, 0.01, 99),
            (0.1, 1.0, 0.05, 19),
            (-20.0, 0.0, 0.5, 41),
            (0.05, 5.0, 0.05, 100),
            (-20.0, 0.0, 1.0, 21),
            (0.05, 0.95, 0.05, 19),
        ],
    )
    def test_counts(self, start, stop, step, count):
        values = sweep_values(start, stop, step)
        assert len(values) == count
        assert values[0] == start
        assert values[-1] == pytest.approx(stop, abs=1e-12)

    def test_values_are_rounded(self):
        assert 0.7 in sweep_values(0.05, 0.95, 0.05)
        assert sweep_values(0.01, 0.99, 0.01)[2] == 0.03

    def test_single_point(self):
        assert sweep_values(0.5, 0.5, 0.1) == [0.5]

    @pytest.mark.parametrize(
        "start, stop, step", [(0.5, 0.4, 0.1), (0.0, 1.0, 0.0), (0.0, 1.0, -0.1), (0.0, float("inf"), 0.1)]
    )
    def test_rejects(self, start, stop, step):
        with pytest.raises(DomainError):
            sweep_values(start, stop, step)


class TestSystemParams:
    def test_defaults(self, params):
        assert params["theta"] == 0.05
        assert params["zeta"] == 1.0
        assert params["r_as"] == params["r_ar"] == params["r_ad"]

    @pytest.mark.parametrize(
        "overrides",
        [
            {"gamma_o": 0.0},
            {"theta": 1.0},
            {"theta": 0.0},
            {"mu": 1.5},
            {"d": 1.0},
            {"zeta": 0.0},
            {"zeta": 1.2},
            {"p_a": -1.0},
            {"sigma2": -1e-9},
            {"r_ar": 0.0},
            {"gamma_o": float("nan")},
        ],
    )
    def test_rejects(self, overrides):
        with pytest.raises(DomainError):
            build_system_params(**overrides)

    def test_rejects_unknown(self):
        with pytest.raises(DomainError):
            build_system_params(power=2.0)

    def test_unconstrained(self):
        assert build_system_params(theta=None)["theta"] is None

    def test_interference_limited(self, params):
        require_interference_limited(params)
        with pytest.raises(DomainError):
            require_interference_limited(build_system_params(sigma2=1e-6))


class TestSimConfig:
    def test_defaults(self):
        config = build_sim_config()
        assert config["slots"] == 10_000
        assert config["include_noise"] is False

    @pytest.mark.parametrize(
        "overrides", [{"slots": 0}, {"workers": 0}, {"chunk_size": 2.5}, {"seed": -1}, {"seed": 2**64}, {"fast": True}]
    )
    def test_rejects(self, overrides):
        with pytest.raises(DomainError):
            build_sim_config(**overrides)


class TestNumbers:
    def test_format(self):
        assert format_number(1 / 3) == "0.333333333333"
        assert format_number(None) == ""
        assert format_number(0.5) == "0.5"

    def test_round(self):
        assert round_number(0.1 + 0.2) == 0.3


class TestErrors:
    def test_detail(self):
        error = DomainError("Bad value.", error={"x": 1})
        assert error.detail == {"message": "Bad value.", "error": {"x": 1}}
        assert error.exit_code == 2
        assert isinstance(error, ValueError)

    def test_exit_codes(self):
        assert InfeasibleError("none").exit_code == 1
        assert HarvestError("custom").exit_code == 2
        assert HarvestError("custom").detail == {"message": "custom", "error": None}


class TestRunConfig:
    def test_dict(self):
        manifest = {"params": {"theta": 0.02}}
        assert asyncio.run(load_run_config(manifest)) is manifest

    def test_toml(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text('format = "json"\n[params]\nd = 0.3\n[sim]\nslots = 100\n')
        manifest = asyncio.run(load_run_config(str(path)))
        assert manifest == {"format": "json", "params": {"d": 0.3}, "sim": {"slots": 100}}

    def test_malformed(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text("[params\n")
        with pytest.raises(DomainError):
            asyncio.run(load_run_config(str(path)))

    def test_wrong_type(self):
        with pytest.raises(TypeError):
            asyncio.run(load_run_config(["theta"]))
        with pytest.raises(TypeError):
            asyncio.run(load_run_config("run.yaml"))


class TestWriteAtomically:
    def test_writes_and_replaces(self, tmp_path):
        target = tmp_path / "nested" / "out.csv"
        asyncio.run(write_atomically(str(target), "a,b\r\n"))
        asyncio.run(write_atomically(str(target), "c,d\r\n"))
        assert target.read_bytes() == b"c,d\r\n"
        assert os.listdir(target.parent) == ["out.csv"]
