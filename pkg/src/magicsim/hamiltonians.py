"""Hamiltonians and coupling constants for static and dynamic gradients.

All operators are in SI energy units (J) on the layout
``[spin_1, ..., spin_N, mode_1, ..., mode_M]`` with a common Fock cutoff.
Ions are indexed by ``j``, modes by ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .crystal import gradient_positions
from .model import HBAR, ConfigError
from .operators import SM, SP, SX, SZ, displacement, embed, fock_ladder, layout_for, tensor


@dataclass(frozen=True)
class CouplingTable:
    epsilon: np.ndarray  # (N, M)
    j_matrix: np.ndarray  # (N, N) rad/s
    omega0_rabi: np.ndarray | None = None  # (N,) rad/s
    omega_grad_rabi: np.ndarray | None = None  # (N, M) rad/s


@dataclass(frozen=True)
class TimeDepHamiltonian:
    """``H(t) = static + sum_i coef_i(t) * op_i``.

    ``periodic`` promises that ``H(t + period_hint) == H(t)`` exactly, which
    lets the integrator reuse step propagators.
    """

    static: np.ndarray
    terms: tuple[tuple[Callable[[float], complex], np.ndarray], ...]
    period_hint: float | None
    periodic: bool = False

    @property
    def dim(self):
        return self.static.shape[0]

    def evaluate(self, t):
        h = self.static.copy()
        for coef, op in self.terms:
            h += coef(t) * op
        return h


def _require(field, kind):
    if field.kind != kind:
        raise ConfigError(f"operation needs a {kind} field, got {field.kind}")


def epsilon_matrix(species, field, modes):
    """Effective Lamb-Dicke parameters ``mu B' b_jn q_n / (2 hbar nu_n)``."""
    scale = species.mu * field.gradient * modes.extents / (2.0 * HBAR * modes.frequencies)
    return modes.coeffs * scale[None, :]


def coupling_epsilon(species, field, modes, j, n):
    return (
        species.mu * field.gradient * modes.coeffs[j, n] * modes.extents[n]
        / (2.0 * HBAR * modes.frequencies[n])
    )


def field_at_ions(field, crystal, axis):
    """B_j = b_offset + gradient * z_j along the gradient direction."""
    return field.b_offset + field.gradient * gradient_positions(crystal, axis)


def j_matrix(epsilon, frequencies):
    epsilon = np.asarray(epsilon, dtype=float)
    frequencies = np.asarray(frequencies, dtype=float)
    if epsilon.shape[1] != frequencies.shape[0]:
        raise ValueError("epsilon columns must match the number of modes")
    j = (epsilon * frequencies[None, :]) @ epsilon.T
    j = 0.5 * (j + j.T)
    np.fill_diagonal(j, 0.0)
    return j


def rabi_frequencies(species, field, modes, crystal):
    """Carrier and gradient Rabi frequencies of a dynamic field.

    Returns a full :class:`CouplingTable`; ``epsilon`` is computed
    independently from the gradient Rabi frequencies so the identity
    ``epsilon == omega_grad_rabi / nu`` can be checked rather than assumed.
    """
    _require(field, "dynamic")
    b_j = field_at_ions(field, crystal, modes.axis)
    omega0 = b_j * species.mu / (2.0 * HBAR)
    omega_grad = field.gradient * species.mu * modes.coeffs * modes.extents[None, :] / (2.0 * HBAR)
    eps = epsilon_matrix(species, field, modes)
    return CouplingTable(eps, j_matrix(eps, modes.frequencies), omega0, omega_grad)


def coupling_table(system, crystal, modes):
    if system.field.kind == "dynamic":
        return rabi_frequencies(system.species, system.field, modes, crystal)
    eps = epsilon_matrix(system.species, system.field, modes)
    return CouplingTable(eps, j_matrix(eps, modes.frequencies))


def _spin_boson(splittings, couplings, frequencies, cutoff):
    """``sum_j E_j/2 sz_j + sum_n hbar nu_n a^dag a + sum_jn g_jn (a+a^dag) sz_j``."""
    n_spins, n_modes = couplings.shape
    layout = layout_for(n_spins, n_modes, cutoff)
    a, ad = fock_ladder(cutoff)
    dim = int(np.prod(layout))
    h = np.zeros((dim, dim), dtype=complex)
    # sz_j and a^dag a are diagonal; the couplings of one mode collapse to
    # a single column scaling of (a + a^dag)
    grid = np.indices(layout).reshape(len(layout), -1)
    sz = 1.0 - 2.0 * grid[:n_spins]
    diag = 0.5 * np.asarray(splittings, dtype=float) @ sz
    for n in range(n_modes):
        slot = n_spins + n
        diag = diag + HBAR * frequencies[n] * grid[slot]
        weights = np.asarray(couplings[:, n], dtype=float) @ sz
        if np.any(weights):
            h += embed(a + ad, slot, layout) * weights[None, :]
    h[np.diag_indices(dim)] += diag
    return h


def h_static(system, crystal, modes):
    _require(system.field, "static")
    f, sp = system.field, system.species
    z = gradient_positions(crystal, modes.axis)
    splittings = HBAR * f.omega0 + sp.mu * (f.b_offset + z * f.gradient)
    eps = epsilon_matrix(sp, f, modes)
    couplings = HBAR * modes.frequencies[None, :] * eps
    return _spin_boson(splittings, couplings, modes.frequencies, system.sim.fock_cutoff)


def h_dressed(system, crystal, modes):
    """Dressed-basis Hamiltonian of a dynamic gradient.

    The dressed Pauli-z is represented by the ordinary ``sz`` matrix with the
    basis relabelled ``(|+>, |->)``; the basis time dependence is handled by
    :func:`magicsim.dynamics.frame_transform`.
    """
    _require(system.field, "dynamic")
    f, sp = system.field, system.species
    splittings = sp.mu * field_at_ions(f, crystal, modes.axis)
    couplings = sp.mu * f.gradient * modes.coeffs * modes.extents[None, :] / 2.0
    return _spin_boson(splittings, couplings, modes.frequencies, system.sim.fock_cutoff)


def identify_static_equivalent(system):
    """Static-gradient system whose Hamiltonian equals the dressed one.

    Sets the bare splitting to zero and keeps offset and gradient, so that
    ``omega(z_j) = mu B_j / hbar`` and every epsilon is unchanged.
    """
    _require(system.field, "dynamic")
    f = system.field
    return replace(
        system,
        field=replace(f, kind="static", omega0=0.0, omega_b=0.0),
    )


def h_driving_transformed(omega_d, epsilon, cutoff):
    """Carrier drive after the spin-dependent displacement transform."""
    if abs(epsilon) > 0.5:
        raise ValueError("|epsilon| must be <= 0.5")
    d_plus = displacement(epsilon, cutoff)
    d_minus = displacement(-epsilon, cutoff)
    return 0.5 * HBAR * omega_d * (tensor(SP, d_plus) + tensor(SM, d_minus))


def h_spin_spin(jmat, n_modes=0, cutoff=2):
    """``-(hbar/2) sum_{j<k} J_jk sz_j sz_k``, identity on any modes."""
    jmat = np.asarray(jmat, dtype=float)
    if not np.allclose(jmat, jmat.T, rtol=1e-12, atol=0.0):
        raise ValueError("J matrix must be symmetric")
    n = jmat.shape[0]
    layout = layout_for(n, n_modes, cutoff)
    dim = int(np.prod(layout))
    h = np.zeros((dim, dim), dtype=complex)
    sz = [embed(SZ, j, layout) for j in range(n)]
    for j in range(n):
        for k in range(j + 1, n):
            h += -0.5 * HBAR * jmat[j, k] * (sz[j] @ sz[k])
    return h


def _bare(system, modes):
    n_spins, cutoff = system.n_ions, system.sim.fock_cutoff
    layout = layout_for(n_spins, modes.n_modes, cutoff)
    a, ad = fock_ladder(cutoff)
    dim = int(np.prod(layout))
    h = np.zeros((dim, dim), dtype=complex)
    for j in range(n_spins):
        h += 0.5 * HBAR * system.field.omega0 * embed(SZ, j, layout)
    for n in range(modes.n_modes):
        h += HBAR * modes.frequencies[n] * embed(ad @ a, n_spins + n, layout)
    return h, layout


def h_dynamic_lab(system, crystal, modes):
    """Lab-frame Hamiltonian of an oscillating gradient field, no RWA."""
    _require(system.field, "dynamic")
    f, sp = system.field, system.species
    h0, layout = _bare(system, modes)
    n_spins = system.n_ions
    a, ad = fock_ladder(system.sim.fock_cutoff)
    b_j = field_at_ions(f, crystal, modes.axis)
    v = np.zeros_like(h0)
    for j in range(n_spins):
        sx = embed(SX, j, layout)
        v += sp.mu * b_j[j] * sx
        for n in range(modes.n_modes):
            g = sp.mu * f.gradient * modes.coeffs[j, n] * modes.extents[n]
            if g != 0.0:
                v += g * (sx @ embed(a + ad, n_spins + n, layout))
    w = f.omega_b
    return TimeDepHamiltonian(
        h0, ((lambda t: math.cos(w * t), v),), period_hint=2 * math.pi / w, periodic=True
    )


def h_dynamic_rwa(system, crystal, modes):
    """Interaction-picture Hamiltonian after the rotating-wave approximation.

    ``-hbar sum_j sp_j (Om0_j e^{-i d t} + sum_n Om_nj a_n e^{-i (d + nu_n) t}) + h.c.``
    """
    _require(system.field, "dynamic")
    table = rabi_frequencies(system.species, system.field, modes, crystal)
    delta = system.field.detuning
    n_spins, cutoff = system.n_ions, system.sim.fock_cutoff
    layout = layout_for(n_spins, modes.n_modes, cutoff)
    a, _ = fock_ladder(cutoff)
    dim = int(np.prod(layout))

    carrier = np.zeros((dim, dim), dtype=complex)
    for j in range(n_spins):
        carrier += -HBAR * table.omega0_rabi[j] * embed(SP, j, layout)
    pieces = [(delta, carrier)]
    for n in range(modes.n_modes):
        op = np.zeros((dim, dim), dtype=complex)
        a_n = embed(a, n_spins + n, layout)
        for j in range(n_spins):
            op += -HBAR * table.omega_grad_rabi[j, n] * (embed(SP, j, layout) @ a_n)
        pieces.append((delta + modes.frequencies[n], op))

    terms = []
    static = np.zeros((dim, dim), dtype=complex)
    for freq, op in pieces:
        if not np.any(op):
            continue
        if freq == 0.0:
            static += op + op.conj().T
            continue
        terms.append((lambda t, w=freq: np.exp(-1j * w * t), op))
        terms.append((lambda t, w=freq: np.exp(1j * w * t), op.conj().T))
    rates = [abs(freq) for freq, op in pieces if freq != 0.0 and np.any(op)]
    period = 2 * math.pi / max(rates) if rates else None
    return TimeDepHamiltonian(static, tuple(terms), period_hint=period, periodic=len(rates) == 1)
