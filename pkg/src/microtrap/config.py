"""Scenario files: sectioned key = value text with unit-suffixed keys.

Values are converted to SI when the domain objects are built. Unknown
sections or keys are rejected so typos fail loudly.

Example::

    [species]
    name = Rb85

    [beam]
    power_mW = 50
    waist_um = 15

    [trap]
    detuning_nm = 2
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass

import numpy as np
from scipy import constants as csts

from .errors import ConfigError
from .species import AtomSpecies, get_species, two_level_saturation_intensity


def _bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text):
    return tuple(int(x) for x in text.replace(",", " ").split())


def _float_list(text):
    return tuple(float(x) for x in text.replace(",", " ").split())


def _pairs(text):
    """``a:b, c:d`` -> ((a, b), (c, d)) as floats."""
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        a, b = item.split(":")
        out.append((float(a), float(b)))
    return tuple(out)


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ", ".join(f"{a!r}:{b!r}" for a, b in value)
        return ", ".join(repr(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


SCHEMA = {
    "species": {
        "name": str, "mass_amu": float, "transition_wavelength_nm": float,
        "linewidth_MHz": float, "saturation_intensity_W_m2": float,
    },
    "beam": {
        "power_mW": float, "waist_um": float, "wavelength_nm": float,
        "center_x_um": float, "center_y_um": float,
    },
    "trap": {
        "detuning_nm": float, "min_depth_mK": float, "source": str,
        "second_beam_angle_mrad": float,
    },
    "lens_array": {
        "pitch_um": float, "lens_diameter_um": float, "focal_length_um": float,
        "rows": int, "cols": int, "kind": str, "quadrature_order": int,
    },
    "relay": {
        "focal_length_1_mm": float, "focal_length_2_mm": float, "aperture_mm": float,
    },
    "vcsel": {
        "power_mW": float, "disabled": _int_list, "site_power_mW": _pairs,
        "wavelength_offset_nm": _pairs,
    },
    "schedule": {
        "samples_us_mrad": _pairs, "hold_separation_um": float, "hold_duration_us": float,
    },
    "addressing": {
        "waist_um": float, "na": float, "scatter_count": float, "storage_time_ms": float,
    },
    "pulse": {
        "target_site": int, "rabi_1_MHz": float, "rabi_2_MHz": float, "detuning_GHz": float,
        "duration_us": float, "phase_rad": float,
    },
    "montecarlo": {
        "seed": int, "atom_count": int, "temperature_mK": float, "cloud_radius_um": float,
        "lifetime_ms": float, "heating": _bool, "duration_ms": float,
        "sample_times_ms": _float_list, "n_samples": int, "time_step_ms": float,
    },
    "output": {"directory": str, "formats": str},
}

REQUIRED = {
    "beam": ("power_mW", "waist_um"),
    "trap": ("detuning_nm",),
    "lens_array": ("pitch_um", "lens_diameter_um", "focal_length_um"),
    "relay": ("focal_length_1_mm", "focal_length_2_mm"),
    "schedule": ("samples_us_mrad", "hold_separation_um", "hold_duration_us"),
    "pulse": ("rabi_1_MHz", "rabi_2_MHz", "detuning_GHz", "duration_us"),
    "montecarlo": ("atom_count", "temperature_mK", "cloud_radius_um", "duration_ms"),
}

_PULSE_SECTION = re.compile(r"^pulse\.(\d+)$")


def _schema_for(section):
    if _PULSE_SECTION.match(section):
        return SCHEMA["pulse"]
    if section not in SCHEMA:
        raise ConfigError("unknown section", key=section)
    return SCHEMA[section]


@dataclass(frozen=True)
class Scenario:
    """Parsed scenario: ``sections[name][key]`` holds typed values in file units."""

    sections: dict

    @classmethod
    def from_mapping(cls, raw: dict) -> "Scenario":
        sections = {}
        for name, items in raw.items():
            schema = _schema_for(name)
            parsed = {}
            for key, text in items.items():
                if key not in schema:
                    raise ConfigError("unknown key", key=f"{name}.{key}")
                try:
                    parsed[key] = schema[key](str(text))
                except ValueError as exc:
                    raise ConfigError(f"cannot parse {text!r} ({exc})", key=f"{name}.{key}") from None
            sections[name] = parsed
        for name, keys in REQUIRED.items():
            targets = [s for s in sections if s == name or
                       (name == "pulse" and _PULSE_SECTION.match(s))]
            for target in targets:
                for key in keys:
                    if key not in sections[target]:
                        raise ConfigError("required key missing", key=f"{target}.{key}")
        return cls(sections)

    @classmethod
    def from_text(cls, text: str, overrides=()) -> "Scenario":
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        raw = {s: dict(parser.items(s)) for s in parser.sections()}
        return cls.from_mapping(apply_overrides(raw, overrides))

    @classmethod
    def from_file(cls, path, overrides=()) -> "Scenario":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read(), overrides)

    def to_mapping(self) -> dict:
        return {s: {k: _format(v) for k, v in items.items()} for s, items in self.sections.items()}

    def to_text(self) -> str:
        lines = []
        for s, items in self.to_mapping().items():
            lines.append(f"[{s}]")
            lines += [f"{k} = {v}" for k, v in items.items()]
            lines.append("")
        return "\n".join(lines)

    def has(self, section):
        return section in self.sections

    def section(self, name) -> dict:
        if name not in self.sections:
            raise ConfigError("required section missing", key=name)
        return self.sections[name]

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def pulse_sections(self):
        found = [(int(m.group(1)), s) for s in self.sections if (m := _PULSE_SECTION.match(s))]
        return [self.sections[s] for _, s in sorted(found)]

    # -- SI conversion helpers

    def species(self) -> AtomSpecies:
        sec = self.sections.get("species", {})
        try:
            base = get_species(sec.get("name", "Rb85"))
        except KeyError:
            if not all(k in sec for k in ("mass_amu", "transition_wavelength_nm", "linewidth_MHz")):
                raise ConfigError(f"unknown species {sec.get('name')!r} and incomplete "
                                  "constants", key="species.name") from None
            base = None
        mass = sec["mass_amu"] * csts.atomic_mass if "mass_amu" in sec else base.mass
        lam = sec["transition_wavelength_nm"] * 1e-9 if "transition_wavelength_nm" in sec \
            else base.transition_wavelength
        gamma = 2 * np.pi * sec["linewidth_MHz"] * 1e6 if "linewidth_MHz" in sec \
            else base.natural_linewidth
        if "saturation_intensity_W_m2" in sec:
            isat = sec["saturation_intensity_W_m2"]
        elif base is not None and lam == base.transition_wavelength and gamma == base.natural_linewidth:
            isat = base.saturation_intensity
        else:
            isat = two_level_saturation_intensity(lam, gamma)
        return AtomSpecies(sec.get("name", "Rb85"), mass, lam, gamma, isat)


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``section.key=value`` strings to a raw section mapping."""
    out = {s: dict(items) for s, items in raw.items()}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        lhs, value = item.split("=", 1)
        if "." not in lhs:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        section, key = lhs.strip().rsplit(".", 1)
        out.setdefault(section, {})[key] = value.strip()
    return out
