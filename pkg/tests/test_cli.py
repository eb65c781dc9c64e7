import json
from pathlib import Path

import numpy as np
import pytest

from microtrap.cli import run
from microtrap.config import ConfigError, Scenario
from microtrap.species import RB85

# the dual-beam scenario deliberately brings the lattices within a spot size
pytestmark = pytest.mark.filterwarnings("ignore:lattice separation:RuntimeWarning")

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

TRAP_INI = """
[species]
name = Rb85

[beam]
power_mW = 50
waist_um = 15

[trap]
detuning_nm = 2   # red

[montecarlo]
seed = 11
atom_count = 400
temperature_mK = 0.141
cloud_radius_um = 2
lifetime_ms = 166
duration_ms = 300
n_samples = 7
"""


@pytest.fixture
def trap_ini(tmp_path):
    path = tmp_path / "trap.ini"
    path.write_text(TRAP_INI)
    return path


def _json(path):
    return json.loads(Path(path).read_text())


def test_trap_subcommand(trap_ini, tmp_path):
    assert run(["trap", "--config", str(trap_ini), "--out", str(tmp_path / "o")]) == 0
    out = _json(tmp_path / "o" / "trap.json")
    assert out["site"]["depth_over_kB_mK"] == pytest.approx(-1.9, rel=0.1)
    assert out["site"]["depth_J"] < 0
    assert out["doppler_temperature_mK"] == pytest.approx(0.141, rel=0.01)


def test_fit_degenerate_csv(tmp_path, capsys):
    csv = tmp_path / "flat.csv"
    csv.write_text("time_s,count\n0.0,100\n0.1,100\n")
    assert run(["fit", "--input", str(csv), "--out", str(tmp_path / "o")]) == 2
    assert "degenerate" in capsys.readouterr().err


def test_fit_csv(tmp_path):
    t = np.linspace(0, 0.5, 10)
    rows = "\n".join(f"{a},{b}" for a, b in zip(t, 1000 * np.exp(-t / 0.166)))
    csv = tmp_path / "decay.csv"
    csv.write_text("time_s,count\n" + rows + "\n")
    assert run(["fit", "--input", str(csv), "--out", str(tmp_path / "o"), "--plot"]) == 0
    assert _json(tmp_path / "o" / "fit.json")["lifetime_s"] == pytest.approx(0.166, rel=1e-6)
    assert (tmp_path / "o" / "fit.png").stat().st_size > 0


def test_fit_bad_csv(tmp_path):
    csv = tmp_path / "bad.csv"
    csv.write_text("t,n\n0,1\n")
    assert run(["fit", "--input", str(csv), "--out", str(tmp_path)]) == 1
    assert run(["fit", "--input", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 3


def test_mc_byte_identical(trap_ini, tmp_path):
    for name in ("a", "b"):
        assert run(["mc", "--config", str(trap_ini), "--out", str(tmp_path / name)]) == 0
    a = (tmp_path / "a" / "survival.csv").read_bytes()
    assert a == (tmp_path / "b" / "survival.csv").read_bytes()
    assert a.startswith(b"time_s,count\n")
    assert run(["mc", "--config", str(trap_ini), "--out", str(tmp_path / "c"), "--seed", "12"]) == 0
    assert (tmp_path / "c" / "survival.csv").read_bytes() != a
    summary = _json(tmp_path / "c" / "mc.json")
    assert summary["metadata"]["scenario"]["montecarlo"]["seed"] == "11"
    assert summary["metadata"]["seed_override"] == 12
    assert summary["metadata"]["prng"].startswith("numpy PCG64")


def test_invalid_config_names_key(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(TRAP_INI.replace("waist_um", "waste_um"))
    assert run(["trap", "--config", str(path), "--out", str(tmp_path)]) == 1
    assert "beam.waste_um" in capsys.readouterr().err
    path.write_text(TRAP_INI + "\n[lasers]\npower_mW = 1\n")
    assert run(["trap", "--config", str(path), "--out", str(tmp_path)]) == 1
    path.write_text(TRAP_INI.replace("power_mW = 50", "power_mW = fifty"))
    assert run(["trap", "--config", str(path), "--out", str(tmp_path)]) == 1


def test_missing_section(tmp_path, capsys):
    path = tmp_path / "nobeam.ini"
    path.write_text("[trap]\ndetuning_nm = 2\n")
    assert run(["trap", "--config", str(path), "--out", str(tmp_path)]) == 1
    assert "beam" in capsys.readouterr().err


def test_domain_violation(trap_ini, tmp_path):
    assert run(["trap", "--config", str(trap_ini), "--out", str(tmp_path),
                "--set", "trap.detuning_nm=0"]) == 2


def test_io_failure(trap_ini, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run(["trap", "--config", str(trap_ini), "--out", str(blocker / "sub")]) == 3
    assert run(["trap", "--config", str(tmp_path / "absent.ini"), "--out", str(tmp_path)]) == 3


def test_override_equals_file_edit(trap_ini, tmp_path):
    edited = tmp_path / "edited.ini"
    edited.write_text(TRAP_INI.replace("power_mW = 50", "power_mW = 25"))
    assert run(["trap", "--config", str(edited), "--out", str(tmp_path / "e")]) == 0
    assert run(["trap", "--config", str(trap_ini), "--out", str(tmp_path / "s"),
                "--set", "beam.power_mW=25"]) == 0
    assert (tmp_path / "e" / "trap.json").read_bytes() == (tmp_path / "s" / "trap.json").read_bytes()


def test_metadata_roundtrip(trap_ini, tmp_path):
    assert run(["trap", "--config", str(trap_ini), "--out", str(tmp_path)]) == 0
    echoed = _json(tmp_path / "trap.json")["metadata"]["scenario"]
    assert Scenario.from_mapping(echoed) == Scenario.from_file(trap_ini)
    assert Scenario.from_text(Scenario.from_file(trap_ini).to_text()) == Scenario.from_file(trap_ini)


def test_env_output_directory(trap_ini, tmp_path, monkeypatch):
    monkeypatch.setenv("MICROTRAP_OUT", str(tmp_path / "env"))
    assert run(["trap", "--config", str(trap_ini)]) == 0
    assert (tmp_path / "env" / "trap.json").exists()


def test_species_overrides():
    sc = Scenario.from_text("[species]\nname = Rb85\nlinewidth_MHz = 6.07\n")
    sp = sc.species()
    assert sp.natural_linewidth == pytest.approx(2 * np.pi * 6.07e6)
    assert sp.mass == RB85.mass
    assert Scenario.from_text("").species() == RB85
    with pytest.raises(ConfigError):
        Scenario.from_text("[species]\nname = Cs133\n").species()


def test_scenario_parsing():
    sc = Scenario.from_text("[schedule]\nsamples_us_mrad = 0:1, 2:3.5\nhold_separation_um = 1\n"
                            "hold_duration_us = 2\n[pulse.2]\nrabi_1_MHz=1\nrabi_2_MHz=1\n"
                            "detuning_GHz=1\nduration_us=1\n[pulse.1]\nrabi_1_MHz=2\n"
                            "rabi_2_MHz=1\ndetuning_GHz=1\nduration_us=1\n")
    assert sc.section("schedule")["samples_us_mrad"] == ((0.0, 1.0), (2.0, 3.5))
    assert [p["rabi_1_MHz"] for p in sc.pulse_sections()] == [2.0, 1.0]
    with pytest.raises(ConfigError, match="pulse.1.duration_us"):
        Scenario.from_text("[pulse.1]\nrabi_1_MHz=2\nrabi_2_MHz=1\ndetuning_GHz=1\n")
    with pytest.raises(ConfigError):
        Scenario.from_text("no section header\n")


@pytest.mark.parametrize("subcommand,ini,files", [
    ("array", "microlens_array.ini", ["array.json", "array.csv", "array_full.json", "array.png"]),
    ("address", "microlens_array.ini", ["address.json", "register.json", "crosstalk.csv",
                                        "crosstalk.png"]),
    ("readout", "microlens_array.ini", ["readout.json", "readout.csv", "readout.png"]),
    ("move", "dual_beam_move.ini", ["move.json", "move.csv", "move.png"]),
    ("array", "vcsel.ini", ["array.json", "array.csv"]),
    ("trap", "single_trap.ini", ["trap.json"]),
    ("mc", "single_trap.ini", ["mc.json", "survival.csv", "energy.csv", "mc.png"]),
])
def test_shipped_scenarios(subcommand, ini, files, tmp_path):
    code = run([subcommand, "--config", str(SCENARIOS / ini), "--out", str(tmp_path), "--plot",
                "--set", "montecarlo.atom_count=500"] if subcommand == "mc" else
               [subcommand, "--config", str(SCENARIOS / ini), "--out", str(tmp_path), "--plot"])
    assert code == 0
    for name in files:
        assert (tmp_path / name).stat().st_size > 0


def test_array_outputs(tmp_path):
    assert run(["array", "--config", str(SCENARIOS / "microlens_array.ini"),
                "--out", str(tmp_path)]) == 0
    summary = _json(tmp_path / "array.json")
    assert summary["n_sites"] == summary["n_trapped"] == 100
    header = (tmp_path / "array.csv").read_text().splitlines()[0].split(",")
    assert header[:6] == ["site", "site_row", "site_col", "lattice", "x_m", "y_m"]
    assert "power_W" in header
    assert not (tmp_path / "array.png").exists()


def test_vcsel_outputs(tmp_path):
    assert run(["array", "--config", str(SCENARIOS / "vcsel.ini"), "--out", str(tmp_path)]) == 0
    full = _json(tmp_path / "array_full.json")
    assert full["source"] == "vcsel-array"
    assert [s["trapped"] for s in full["sites"]].count(False) == 1
    assert full["sites"][5]["trapped"] is False


def test_readout_after_pi_pulse(tmp_path):
    assert run(["readout", "--config", str(SCENARIOS / "microlens_array.ini"),
                "--out", str(tmp_path)]) == 0
    sites = _json(tmp_path / "readout.json")["sites"]
    assert sites[44]["expected_photons"] == pytest.approx(670, rel=1e-3)
    assert all(s["expected_photons"] == 0 for s in sites if s["site"] != 44)


def test_address_outputs(tmp_path):
    assert run(["address", "--config", str(SCENARIOS / "microlens_array.ini"),
                "--out", str(tmp_path)]) == 0
    report = _json(tmp_path / "address.json")["pulses"][0]
    assert report["pulse_area_rad"] == pytest.approx(np.pi)
    assert report["nonzero_neighbours"] == 0
    register = _json(tmp_path / "register.json")
    assert register[44]["w"] == pytest.approx(1.0)
    assert register[43]["w"] == -1.0


def test_move_outputs(tmp_path):
    assert run(["move", "--config", str(SCENARIOS / "dual_beam_move.ini"),
                "--out", str(tmp_path)]) == 0
    summary = _json(tmp_path / "move.json")
    assert summary["success"]
    assert summary["window_duration_s"] >= 10e-6
