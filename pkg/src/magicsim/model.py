"""Constants, unit conventions and configuration types.

Every frequency held inside the package is angular (rad/s). Configuration
files carry ordinary frequencies in Hz; they are converted exactly once, in
:func:`config_from_dict`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import jsonschema


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass(frozen=True)
class PhysicalConstants:
    # CODATA 2018
    hbar: float = 1.054571817e-34
    mu_bohr: float = 9.2740100783e-24
    eps0: float = 8.8541878128e-12
    elem_charge: float = 1.602176634e-19
    amu: float = 1.66053906660e-27


CONST = PhysicalConstants()
HBAR = CONST.hbar
MU_B = CONST.mu_bohr


def angular(freq_hz):
    """Convert an ordinary frequency in Hz to rad/s."""
    if freq_hz < 0:
        raise ValueError(f"frequency must be non-negative, got {freq_hz}")
    return 2.0 * math.pi * freq_hz


def to_hz(omega):
    return omega / (2.0 * math.pi)


@dataclass(frozen=True)
class IonSpecies:
    name: str
    mass: float
    mu: float = MU_B

    def __post_init__(self):
        if not self.mass > 0:
            raise ConfigError(f"mass must be positive, got {self.mass}")
        if not self.mu > 0:
            raise ConfigError(f"magnetic moment must be positive, got {self.mu}")


def species_presets():
    return [
        IonSpecies("Be9", 9.012 * CONST.amu, MU_B),
        IonSpecies("Yb171", 170.936 * CONST.amu, MU_B),
    ]


def species_by_name(name):
    for sp in species_presets():
        if sp.name == name:
            return sp
    raise KeyError(name)


AXES = ("axial", "radial")


@dataclass(frozen=True)
class TrapConfig:
    n_ions: int
    nu_axial: float
    nu_radial: float = 0.0
    active_axis: str = "axial"

    def __post_init__(self):
        if self.n_ions < 1:
            raise ConfigError("n_ions must be >= 1")
        if not self.nu_axial > 0:
            raise ConfigError("nu_axial must be positive")
        if self.active_axis not in AXES:
            raise ConfigError(f"active_axis must be one of {AXES}")
        if self.active_axis == "radial" and not self.nu_radial > self.nu_axial:
            raise ConfigError("radial modes need nu_radial > nu_axial")


@dataclass(frozen=True)
class FieldConfig:
    """Magnetic field description.

    For ``kind="static"`` ``b_offset`` is B0, the field at the trap centre.
    For ``kind="dynamic"`` it is the oscillating amplitude at the trap centre;
    the amplitude at ion j is ``b_offset + gradient * z_j``.
    """

    kind: str
    b_offset: float = 0.0
    gradient: float = 0.0
    omega_b: float = 0.0
    omega0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("static", "dynamic"):
            raise ConfigError(f"unknown field kind {self.kind!r}")
        if self.gradient < 0:
            raise ConfigError("gradient must be >= 0")
        if self.kind == "dynamic" and not self.omega_b > 0:
            raise ConfigError("dynamic field needs omega_b > 0")

    @property
    def detuning(self):
        return self.omega_b - self.omega0


@dataclass(frozen=True)
class SimConfig:
    fock_cutoff: int = 8
    t_final: float = 1e-6
    steps_per_drive_period: int = 40
    algebra_tol: float = 1e-10
    physics_tol: float = 1e-3
    max_modes: int | None = None

    def __post_init__(self):
        if self.fock_cutoff < 2:
            raise ConfigError("fock_cutoff must be >= 2")
        if self.steps_per_drive_period < 8:
            raise ConfigError("steps_per_drive_period must be >= 8")
        if self.max_modes is not None and self.max_modes < 1:
            raise ConfigError("max_modes must be >= 1")


@dataclass(frozen=True)
class SystemConfig:
    species: IonSpecies
    trap: TrapConfig
    field: FieldConfig
    sim: SimConfig = field(default_factory=SimConfig)

    @property
    def n_ions(self):
        return self.trap.n_ions

    def with_field(self, **changes):
        return replace(self, field=replace(self.field, **changes))

    def with_trap(self, **changes):
        return replace(self, trap=replace(self.trap, **changes))

    def with_sim(self, **changes):
        return replace(self, sim=replace(self.sim, **changes))


_NUM = {"type": "number"}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["species", "trap", "field"],
    "properties": {
        "species": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {"name": {"type": "string"}, "mass_amu": _NUM, "mu_bohr": _NUM},
        },
        "trap": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n_ions", "nu_axial_hz"],
            "properties": {
                "n_ions": {"type": "integer", "minimum": 1},
                "nu_axial_hz": _NUM,
                "nu_radial_hz": _NUM,
                "active_axis": {"enum": list(AXES)},
            },
        },
        "field": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["static", "dynamic"]},
                "b_offset_tesla": _NUM,
                "gradient_t_per_m": _NUM,
                "omega_b_hz": _NUM,
                "omega0_hz": _NUM,
            },
        },
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "fock_cutoff": {"type": "integer"},
                "t_final_s": _NUM,
                "steps_per_drive_period": {"type": "integer"},
                "algebra_tol": _NUM,
                "physics_tol": _NUM,
                "max_modes": {"type": "integer"},
            },
        },
    },
}


def config_from_dict(data):
    """Build a :class:`SystemConfig` from the JSON configuration layout.

    Unknown keys are rejected. All ``*_hz`` values are ordinary frequencies.
    """
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None

    sp = data["species"]
    try:
        preset = species_by_name(sp["name"])
    except KeyError:
        preset = None
    if "mass_amu" in sp:
        mass = sp["mass_amu"] * CONST.amu
    elif preset is not None:
        mass = preset.mass
    else:
        raise ConfigError(f"species {sp['name']!r} is not a preset; give mass_amu")
    mu = sp["mu_bohr"] * MU_B if "mu_bohr" in sp else (preset.mu if preset else MU_B)

    tr = data["trap"]
    fl = data["field"]
    sm = data.get("sim", {})
    try:
        return SystemConfig(
            species=IonSpecies(sp["name"], mass, mu),
            trap=TrapConfig(
                n_ions=tr["n_ions"],
                nu_axial=angular(tr["nu_axial_hz"]),
                nu_radial=angular(tr.get("nu_radial_hz", 0.0)),
                active_axis=tr.get("active_axis", "axial"),
            ),
            field=FieldConfig(
                kind=fl["kind"],
                b_offset=fl.get("b_offset_tesla", 0.0),
                gradient=fl.get("gradient_t_per_m", 0.0),
                omega_b=angular(fl.get("omega_b_hz", 0.0)),
                omega0=angular(fl.get("omega0_hz", 0.0)),
            ),
            sim=SimConfig(
                fock_cutoff=sm.get("fock_cutoff", 8),
                t_final=sm.get("t_final_s", 1e-6),
                steps_per_drive_period=sm.get("steps_per_drive_period", 40),
                algebra_tol=sm.get("algebra_tol", 1e-10),
                physics_tol=sm.get("physics_tol", 1e-3),
                max_modes=sm.get("max_modes"),
            ),
        )
    except ValueError as exc:
        # negative frequencies from angular() and dataclass invariants
        raise ConfigError(str(exc)) from None


def config_to_dict(system):
    """Inverse of :func:`config_from_dict` (resolved values, Hz units)."""
    sp, tr, fl, sm = system.species, system.trap, system.field, system.sim
    out = {
        "species": {"name": sp.name, "mass_amu": sp.mass / CONST.amu, "mu_bohr": sp.mu / MU_B},
        "trap": {
            "n_ions": tr.n_ions,
            "nu_axial_hz": to_hz(tr.nu_axial),
            "nu_radial_hz": to_hz(tr.nu_radial),
            "active_axis": tr.active_axis,
        },
        "field": {
            "kind": fl.kind,
            "b_offset_tesla": fl.b_offset,
            "gradient_t_per_m": fl.gradient,
            "omega_b_hz": to_hz(fl.omega_b),
            "omega0_hz": to_hz(fl.omega0),
        },
        "sim": {
            "fock_cutoff": sm.fock_cutoff,
            "t_final_s": sm.t_final,
            "steps_per_drive_period": sm.steps_per_drive_period,
            "algebra_tol": sm.algebra_tol,
            "physics_tol": sm.physics_tol,
        },
    }
    if sm.max_modes is not None:
        out["sim"]["max_modes"] = sm.max_modes
    return out
