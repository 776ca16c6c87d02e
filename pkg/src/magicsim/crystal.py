"""Equilibrium positions and normal modes of a linear ion crystal.

Positions are solved in the dimensionless units of the axial Coulomb length
``l = (e^2 / (4 pi eps0 m nu_ax^2))**(1/3)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CONST, HBAR


class ConvergenceError(RuntimeError):
    pass


class UnstableCrystalError(RuntimeError):
    pass


@dataclass(frozen=True)
class Crystal:
    positions: np.ndarray  # m, ascending
    length_scale: float  # m

    @property
    def dimensionless(self):
        return self.positions / self.length_scale


@dataclass(frozen=True)
class ModeData:
    frequencies: np.ndarray  # rad/s, ascending
    coeffs: np.ndarray  # b[j, n]: ion j, mode n
    extents: np.ndarray  # q_n in m
    axis: str = "axial"

    @property
    def n_modes(self):
        return len(self.frequencies)

    def truncated(self, max_modes):
        if max_modes is None or max_modes >= self.n_modes:
            return self
        return ModeData(
            self.frequencies[:max_modes],
            self.coeffs[:, :max_modes],
            self.extents[:max_modes],
            self.axis,
        )


def length_scale(species, nu_axial):
    k = CONST.elem_charge**2 / (4 * math.pi * CONST.eps0)
    return (k / (species.mass * nu_axial**2)) ** (1.0 / 3.0)


def coulomb_force(u):
    """Net dimensionless force on each ion (trap + Coulomb)."""
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return -u + np.sum(np.sign(d) / d**2, axis=1)


def axial_hessian(u):
    n = len(u)
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    inv3 = 1.0 / d**3
    a = -2.0 * inv3
    a[np.diag_indices(n)] = 1.0 + 2.0 * inv3.sum(axis=1)
    return a


def radial_hessian(u, beta):
    """Transverse Hessian for trap anisotropy ``beta = nu_radial / nu_axial``."""
    a = axial_hessian(u)
    eye = np.eye(len(u))
    return beta**2 * eye - 0.5 * (a - eye)


def solve_dimensionless(n, max_iter=200, tol=1e-13):
    if n == 1:
        return np.zeros(1)
    half = 0.5 * n**0.56
    u = np.linspace(-half, half, n)
    f = coulomb_force(u)
    for _ in range(max_iter):
        res = np.max(np.abs(f))
        if res < tol:
            break
        step = np.linalg.solve(axial_hessian(u), f)
        lam = 1.0
        while True:
            trial = u + lam * step
            if np.all(np.diff(trial) > 0):
                ft = coulomb_force(trial)
                if np.max(np.abs(ft)) < res or lam < 1e-6:
                    break
            lam *= 0.5
            if lam < 1e-12:
                raise ConvergenceError("line search failed to keep ion ordering")
        u, f = trial, ft
    else:
        raise ConvergenceError(f"no convergence after {max_iter} iterations (N={n})")
    return u - u.mean()


def equilibrium_positions(species, trap):
    u = solve_dimensionless(trap.n_ions)
    ell = length_scale(species, trap.nu_axial)
    return Crystal(positions=ell * u, length_scale=ell)


def fix_signs(vecs, tol=1e-9):
    """Make the first largest-magnitude entry of each column positive.

    Entries within ``tol`` of the column maximum count as ties so that
    symmetric modes get a platform-independent sign.
    """
    out = vecs.copy()
    for n in range(out.shape[1]):
        col = out[:, n]
        mags = np.abs(col)
        j = int(np.flatnonzero(mags >= mags.max() - tol)[0])
        if col[j] < 0:
            out[:, n] = -col
    return out


def zero_point_extent(species, nu_n):
    if not nu_n > 0:
        raise ValueError("mode frequency must be positive")
    return math.sqrt(HBAR / (2.0 * species.mass * nu_n))


def normal_modes(species, trap, crystal):
    u = crystal.dimensionless
    if trap.active_axis == "axial":
        h = axial_hessian(u)
    else:
        h = radial_hessian(u, trap.nu_radial / trap.nu_axial)
    lam, vecs = np.linalg.eigh(h)
    if lam[0] <= 0:
        raise UnstableCrystalError(
            f"non-positive {trap.active_axis} Hessian eigenvalue {lam[0]:.3g}; "
            "linear crystal is unstable"
        )
    freqs = trap.nu_axial * np.sqrt(lam)
    extents = np.array([zero_point_extent(species, f) for f in freqs])
    return ModeData(freqs, fix_signs(vecs), extents, trap.active_axis)


def gradient_positions(crystal, axis):
    """Ion coordinates along the gradient direction.

    The gradient points along the active axis; for radial coupling the whole
    string sits at the same transverse coordinate.
    """
    if axis == "axial":
        return crystal.positions
    return np.zeros_like(crystal.positions)


def prepare(system, all_modes=False):
    """Crystal and mode data for a system.

    Modes are truncated to ``system.sim.max_modes`` unless ``all_modes``.
    """
    crystal = equilibrium_positions(system.species, system.trap)
    modes = normal_modes(system.species, system.trap, crystal)
    if all_modes:
        return crystal, modes
    return crystal, modes.truncated(system.sim.max_modes)
