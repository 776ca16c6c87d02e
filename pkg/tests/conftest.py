import math

import pytest

from magicsim.crystal import zero_point_extent
from magicsim.model import (
    HBAR,
    FieldConfig,
    SimConfig,
    SystemConfig,
    TrapConfig,
    angular,
    species_by_name,
)


@pytest.fixture
def be():
    return species_by_name("Be9")


def desk_system(scale=1.0, steps=1280, cutoff=10, t_final=200e-6, epsilon=0.03, rabi_hz=50e3):
    """Single Be-9 ion, resonant 50 MHz drive, nu = 2pi x 1 MHz."""
    be = species_by_name("Be9")
    nu = angular(1e6)
    w = angular(50e6)
    q = zero_point_extent(be, nu)
    gradient = epsilon * 2 * HBAR * nu / (be.mu * q) * scale
    b_offset = 2 * HBAR * angular(rabi_hz) / be.mu * scale
    return SystemConfig(
        be,
        TrapConfig(1, nu),
        FieldConfig("dynamic", b_offset, gradient, w, w),
        SimConfig(fock_cutoff=cutoff, t_final=t_final, steps_per_drive_period=steps),
    )


def be_pair(gradient=200.0, nu_hz=1e6, kind="static", cutoff=10, omega0_hz=20e6, b_offset=0.0):
    be = species_by_name("Be9")
    w = angular(omega0_hz)
    return SystemConfig(
        be,
        TrapConfig(2, angular(nu_hz), angular(10 * nu_hz)),
        FieldConfig(kind, b_offset, gradient, w if kind == "dynamic" else 0.0, w),
        SimConfig(fock_cutoff=cutoff),
    )


TWO_PI = 2 * math.pi


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
        terminalreporter.write_line(line)
