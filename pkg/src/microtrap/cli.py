"""Command-line entry point: ``microtrap <subcommand> --config scenario.ini``.

Exit codes: 0 success, 1 invalid config, 2 domain/precondition violation,
3 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .array import (SpacingSchedule, Source, TrapArray, VcselConfig, apply_spacing_schedule,
                    build_array, build_vcsel_array)
from .config import ConfigError, Scenario
from .errors import DomainError
from .montecarlo import McScenario, fit_exponential, simulate
from .optics import (GaussianBeam, MicrolensArray, RelayTelescope, focal_spot_radius,
                     numerical_aperture, relay_image)
from .register import (QubitRegister, RamanPulse, collection_efficiency, crosstalk_map,
                       effective_rabi, readout, stark_leakage)
from .species import detuning_from_wavelength_offset, doppler_temperature, k_B, \
    wavelength_from_detuning
from .trapfield import characterize_site

log = logging.getLogger("microtrap")

OUT_ENV = "MICROTRAP_OUT"
EXIT_CONFIG, EXIT_DOMAIN, EXIT_IO = 1, 2, 3
SUBCOMMANDS = ("trap", "array", "move", "address", "readout", "mc", "fit")


# -- scenario -> domain objects

def _detuning(sc, species):
    return detuning_from_wavelength_offset(species, sc.section("trap")["detuning_nm"] * 1e-9)


def _beam(sc, species, detuning):
    sec = sc.section("beam")
    lam = sec["wavelength_nm"] * 1e-9 if "wavelength_nm" in sec \
        else wavelength_from_detuning(species, detuning)
    return GaussianBeam(power=sec["power_mW"] * 1e-3, waist=sec["waist_um"] * 1e-6,
                        wavelength=lam,
                        focus_position=(sec.get("center_x_um", 0.0) * 1e-6,
                                        sec.get("center_y_um", 0.0) * 1e-6, 0.0))


def _lens_array(sc):
    sec = sc.section("lens_array")
    return MicrolensArray(pitch=sec["pitch_um"] * 1e-6,
                          lens_diameter=sec["lens_diameter_um"] * 1e-6,
                          focal_length=sec["focal_length_um"] * 1e-6,
                          rows=sec.get("rows", 1), cols=sec.get("cols", 1),
                          kind=sec.get("kind", "refractive"))


def _min_depth(sc):
    value = sc.get("trap", "min_depth_mK")
    return None if value is None else value * 1e-3 * k_B


def _build_array(sc, species, detuning, optics):
    source = sc.get("trap", "source")
    angle = sc.get("trap", "second_beam_angle_mrad")
    if source is None:
        source = "dual-beam" if angle is not None or sc.has("schedule") else "single-beam"
    source = Source(source)
    if source is Source.VCSEL:
        sec = sc.section("vcsel")
        n = optics.size
        power = {i: sec.get("power_mW", 1.0) * 1e-3 for i in range(n)}
        for i, p in sec.get("site_power_mW", ()):
            power[int(i)] = p * 1e-3
        enabled = {i: i not in sec.get("disabled", ()) for i in range(n)}
        offsets = {i: 0.0 for i in range(n)}
        for i, nm in sec.get("wavelength_offset_nm", ()):
            offsets[int(i)] = nm * 1e-9
        config = VcselConfig(power, enabled, offsets)
        return build_vcsel_array(optics, config, species, detuning, min_depth=_min_depth(sc))
    order = sc.get("lens_array", "quadrature_order", 32)
    if source is Source.DUAL_BEAM:
        if angle is None:
            samples = sc.section("schedule")["samples_us_mrad"]
            angle = samples[0][1]
        angle *= 1e-3
    else:
        angle = None
    return build_array(optics, _beam(sc, species, detuning), species, detuning,
                       min_depth=_min_depth(sc), second_beam_angle=angle, order=(order, order))


def _pulses(sc):
    return [RamanPulse(target_site=p.get("target_site", 0),
                       beam_waist_at_plane=sc.get("addressing", "waist_um", 5.0) * 1e-6,
                       rabi_1=2 * np.pi * p["rabi_1_MHz"] * 1e6,
                       rabi_2=2 * np.pi * p["rabi_2_MHz"] * 1e6,
                       single_photon_detuning=2 * np.pi * p["detuning_GHz"] * 1e9,
                       duration=p["duration_us"] * 1e-6, phase=p.get("phase_rad", 0.0))
            for p in sc.pulse_sections()]


def _mc_scenario(sc, seed=None):
    sec = sc.section("montecarlo")
    duration = sec["duration_ms"] * 1e-3
    if "sample_times_ms" in sec:
        times = tuple(t * 1e-3 for t in sec["sample_times_ms"])
    else:
        times = tuple(np.linspace(0.0, duration, sec.get("n_samples", 11)))
    lifetime = sec.get("lifetime_ms")
    return McScenario(
        seed=sec.get("seed", 0) if seed is None else seed,
        atom_count=sec["atom_count"],
        cloud_temperature=sec["temperature_mK"] * 1e-3,
        cloud_radius=sec["cloud_radius_um"] * 1e-6,
        background_loss_rate=0.0 if not lifetime else 1.0 / (lifetime * 1e-3),
        include_recoil_heating=sec.get("heating", False),
        duration=duration,
        sample_times=times,
        time_step=sec.get("time_step_ms", 1.0) * 1e-3,
    )


def _single_site(sc, species):
    detuning = _detuning(sc, species)
    beam = _beam(sc, species, detuning)
    min_depth = _min_depth(sc) or 0.0
    return characterize_site(species, beam.power, beam.waist, detuning,
                             wavelength=beam.wavelength, min_depth=min_depth)


# -- output

def _cell(value):
    # shortest round-trip repr; numpy scalars would otherwise print as np.float64(...)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


class Output:
    def __init__(self, directory: Path, formats: set[str], metadata: dict):
        self.directory = directory
        self.formats = formats
        self.metadata = metadata
        self.written = []

    def json(self, name, payload):
        path = self.directory / name
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, allow_nan=True)
            fh.write("\n")
        self.written.append(path)

    def summary(self, subcommand, payload):
        metadata = {**payload.pop("metadata", {}), **self.metadata}
        self.json(f"{subcommand}.json", {**payload, "metadata": metadata})

    def csv(self, name, header, rows):
        if "csv" not in self.formats:
            return
        path = self.directory / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
        self.written.append(path)

    @property
    def figures(self) -> bool:
        return "png" in self.formats

    def figure(self, name, func_name, *args):
        if not self.figures:
            return
        try:
            from . import plotting
        except ImportError:
            log.warning("matplotlib not installed; skipping %s", name)
            return
        self.written.append(getattr(plotting, func_name)(*args, self.directory / name))


# -- subcommands

def cmd_trap(sc, out, args):
    species = sc.species()
    site = _single_site(sc, species)
    payload = {"site": site.to_dict(),
               "doppler_temperature_mK": doppler_temperature(species) * 1e3}
    if sc.has("relay"):
        sec = sc.section("relay")
        relay = RelayTelescope(sec["focal_length_1_mm"] * 1e-3, sec["focal_length_2_mm"] * 1e-3,
                               sec.get("aperture_mm", 50.0) * 1e-3)
        payload["relay_magnification"] = relay.magnification
        payload["relayed_position_m"] = relay_image(relay, [site.position])[0].tolist()
    out.summary("trap", payload)
    log.info("depth %.3f mK, scattering %.3g /s", site.depth / k_B * 1e3, site.scattering_rate)


def cmd_array(sc, out, args):
    species = sc.species()
    optics = _lens_array(sc)
    array = _build_array(sc, species, _detuning(sc, species), optics)
    na = numerical_aperture(optics)
    out.json("array_full.json", array.to_dict())
    out.summary("array", {"n_sites": len(array.sites), "n_trapped": array.n_trapped,
                          "numerical_aperture": na,
                          "airy_radius_m": focal_spot_radius(array.sites[0].wavelength, na),
                          "site_waist_m": array.sites[0].waist,
                          "source": Source(array.source).value, "offset_m": array.offset})
    out.csv("array.csv", *array.csv_rows())
    if out.figures:
        out.figure("array.png", "plot_array_depths", array)


def cmd_move(sc, out, args):
    species = sc.species()
    optics = _lens_array(sc)
    base = _build_array(sc, species, _detuning(sc, species), optics)
    sec = sc.section("schedule")
    schedule = SpacingSchedule(samples=[(t * 1e-6, a * 1e-3) for t, a in sec["samples_us_mrad"]],
                               hold_separation=sec["hold_separation_um"] * 1e-6,
                               hold_duration=sec["hold_duration_us"] * 1e-6)
    result = apply_spacing_schedule(base, schedule, optics)
    out.summary("move", {
        "gate_window_s": list(result.gate_window) if result.gate_window else None,
        "window_duration_s": result.window_duration,
        "windows_s": [list(w) for w in result.windows],
        "success": result.success,
        "min_separation_m": result.min_separation,
        "interference_warning": result.interference_warning,
    })
    out.csv("move.csv", ["time_s", "angle_rad", "offset_m"],
            [(t, a, o) for (t, a), (_, o) in zip(schedule.samples, result.offsets())])
    if out.figures:
        out.figure("move.png", "plot_schedule", result, schedule)


def _register_after_pulses(sc, array):
    register = QubitRegister.from_array(array)
    pulses = _pulses(sc)
    for pulse in pulses:
        register.apply_pulse(array, pulse)
    storage = sc.get("addressing", "storage_time_ms")
    if storage:
        register.store(storage * 1e-3)
    return register, pulses


def cmd_address(sc, out, args):
    species = sc.species()
    optics = _lens_array(sc)
    array = _build_array(sc, species, _detuning(sc, species), optics)
    register, pulses = _register_after_pulses(sc, array)
    if not pulses:
        raise ConfigError("address needs at least one [pulse.N] section", key="pulse")
    reports = []
    for pulse in pulses:
        ratios = crosstalk_map(array, pulse)
        reports.append({"target_site": pulse.target_site,
                        "effective_rabi_rad_s": effective_rabi(pulse),
                        "pulse_area_rad": effective_rabi(pulse) * pulse.duration,
                        "stark_leakage": stark_leakage(array, pulse),
                        "nonzero_neighbours": sum(1 for i, r in ratios.items()
                                                  if r > 0 and i != pulse.target_site)})
    first = crosstalk_map(array, pulses[0])
    out.summary("address", {"pulses": reports})
    out.json("register.json", register.to_records())
    out.csv("crosstalk.csv", ["site", "ratio"], sorted(first.items()))
    if out.figures:
        out.figure("crosstalk.png", "plot_crosstalk", array, first, pulses[0].target_site)


def cmd_readout(sc, out, args):
    species = sc.species()
    optics = _lens_array(sc)
    array = _build_array(sc, species, _detuning(sc, species), optics)
    register, _ = _register_after_pulses(sc, array)
    na = sc.get("addressing", "na") or numerical_aperture(optics)
    count = sc.get("addressing", "scatter_count", 1e4)
    efficiency = collection_efficiency(na)
    records = [{"site": i, "p_bright": register.states[i].p_bright,
                "expected_photons": readout(register, i, na, count)}
               for i in sorted(register.states)]
    out.summary("readout", {"numerical_aperture": na, "collection_efficiency": efficiency,
                            "scatter_count": count, "sites": records})
    out.csv("readout.csv", ["site", "p_bright", "expected_photons"],
            [(r["site"], r["p_bright"], r["expected_photons"]) for r in records])
    if out.figures:
        out.figure("readout.png", "plot_readout", records)


def cmd_mc(sc, out, args):
    species = sc.species()
    site = _single_site(sc, species)
    scenario = _mc_scenario(sc, seed=args.seed)
    result = simulate(scenario, site, species)
    out.summary("mc", result.summary())
    out.csv("survival.csv", ["time_s", "count"], result.survival_counts)
    out.csv("energy.csv", ["time_s", "mean_energy_J"], result.mean_energy)
    if out.figures and result.fitted_lifetime is not None:
        amplitude = fit_exponential(result.survival_counts).amplitude
        out.figure("mc.png", "plot_decay", result.survival_counts, result.fitted_lifetime,
                   amplitude)


def read_decay_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"time_s", "count"} <= set(reader.fieldnames):
            raise ConfigError("decay CSV needs 'time_s' and 'count' columns", key=str(path))
        try:
            return [(float(r["time_s"]), float(r["count"])) for r in reader]
        except ValueError as exc:
            raise ConfigError(f"bad number in decay CSV: {exc}", key=str(path)) from None


def cmd_fit(sc, out, args):
    if args.input is None:
        raise ConfigError("fit needs --input <csv>", key="--input")
    counts = read_decay_csv(args.input)
    fit = fit_exponential(counts)
    out.summary("fit", {"lifetime_s": fit.lifetime, "lifetime_stderr_s": fit.stderr,
                        "amplitude": fit.amplitude, "n_points": len(counts),
                        "input": str(args.input)})
    if out.figures:
        out.figure("fit.png", "plot_decay", counts, fit.lifetime, fit.amplitude)


COMMANDS = {"trap": cmd_trap, "array": cmd_array, "move": cmd_move, "address": cmd_address,
            "readout": cmd_readout, "mc": cmd_mc, "fit": cmd_fit}


def parse_args(argv):
    parser = argparse.ArgumentParser(prog="microtrap",
                                     description="Microlens dipole-trap array toolkit")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", type=Path, help="scenario file (INI-style)")
    parser.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV})")
    parser.add_argument("--seed", type=int, help="Monte Carlo seed, overrides the config")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="override a config value")
    parser.add_argument("--input", type=Path, help="decay CSV for the fit subcommand")
    parser.add_argument("--plot", action="store_true", help="also render PNG figures")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser.parse_args(argv)


def run(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        if args.config is not None:
            sc = Scenario.from_file(args.config, args.overrides)
        else:
            sc = Scenario.from_mapping({})
            if args.overrides:
                from .config import apply_overrides
                sc = Scenario.from_mapping(apply_overrides({}, args.overrides))
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer", key="--seed")
        directory = args.out or Path(sc.get("output", "directory") or
                                     os.environ.get(OUT_ENV, "microtrap_out"))
        formats = {f.strip() for f in (sc.get("output", "formats") or "json,csv").split(",")}
        if args.plot:
            formats.add("png")
        directory.mkdir(parents=True, exist_ok=True)
        metadata = {"version": __version__, "subcommand": args.subcommand,
                    "scenario": sc.to_mapping()}
        if args.seed is not None:
            metadata["seed_override"] = args.seed
        out = Output(directory, formats, metadata)
        COMMANDS[args.subcommand](sc, out, args)
    except ConfigError as exc:
        print(f"microtrap: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"microtrap: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"microtrap: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in out.written:
        log.info("wrote %s", path)
    return 0


def main():
    sys.exit(run())
