"""Propagation, frame changes and the two numerical certificates.

* :func:`equivalence_check` evolves the full lab-frame dynamic-gradient
  Hamiltonian (no rotating-wave approximation) and compares it, in the
  dressed frame, with evolution under the dressed Hamiltonian.
* :func:`extract_j_from_spectrum` reads the spin-spin coupling off the exact
  spectrum of the static-gradient Hamiltonian of two ions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .crystal import prepare
from .hamiltonians import (
    epsilon_matrix,
    h_dressed,
    h_dynamic_lab,
    h_static,
    identify_static_equivalent,
    rabi_frequencies,
)
from .model import HBAR, ConfigError
from .operators import (
    BOUNDARY_BAND,
    SZ,
    basis_state,
    check_hermitian,
    embed,
    fock_ladder,
    herm_expm,
    layout_for,
)

NORM_TOL = 1e-8
GROUND = 1  # spin index of |g> in the (|e>, |g>) ordering
EXCITED = 0
# rows <+|, <-| in the (|e>, |g>) basis
DRESSING = np.array([[1.0, 1.0], [-1.0, 1.0]], dtype=complex) / math.sqrt(2.0)


class NormDriftError(RuntimeError):
    pass


class LevelIdentificationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Frame:
    kind: str  # lab | rotating | dressed | polaron
    layout: tuple
    n_spins: int
    omega_b: float = 0.0
    epsilon: np.ndarray | None = None

    @classmethod
    def lab(cls, layout, n_spins):
        return cls("lab", tuple(layout), n_spins)

    @classmethod
    def rotating(cls, layout, n_spins, omega_b):
        return cls("rotating", tuple(layout), n_spins, omega_b)

    @classmethod
    def dressed(cls, layout, n_spins, omega_b):
        return cls("dressed", tuple(layout), n_spins, omega_b)

    @classmethod
    def polaron(cls, layout, n_spins, epsilon):
        return cls("polaron", tuple(layout), n_spins, epsilon=np.asarray(epsilon, dtype=float))


@dataclass
class EvolutionReport:
    times: np.ndarray
    states: np.ndarray  # (n_times, dim)
    frame: Frame | None
    norm_drift: float
    step_control: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EquivalenceReport:
    max_infidelity: float
    ratio: float
    bound: float
    calibration: float
    passes: bool
    times: np.ndarray
    infidelity: np.ndarray


def ground_state(layout, n_spins):
    labels = [GROUND] * n_spins + [0] * (len(layout) - n_spins)
    return basis_state(layout, labels)


def fidelity(psi, phi):
    psi, phi = np.asarray(psi), np.asarray(phi)
    if psi.shape != phi.shape:
        raise ValueError(f"dimension mismatch {psi.shape} vs {phi.shape}")
    return float(abs(np.vdot(psi, phi)) ** 2)


def _check_norm(psi, where):
    drift = abs(np.linalg.norm(psi) - 1.0)
    if drift > NORM_TOL:
        raise NormDriftError(f"norm drift {drift:.3g} at {where}")
    return drift


def evolve_const(h, psi0, t, tol=1e-10):
    h = np.asarray(h)
    if h.shape[0] != len(psi0):
        raise ValueError("Hamiltonian and state dimensions differ")
    if t == 0:
        return np.array(psi0, dtype=complex)
    return herm_expm(h, -1j * t / HBAR, tol) @ psi0


def propagate_const(h, psi0, times, tol=1e-10):
    """States ``exp(-i h t / hbar) psi0`` for every t in ``times``."""
    h = np.asarray(h, dtype=complex)
    if h.shape[0] != len(psi0):
        raise ValueError("Hamiltonian and state dimensions differ")
    check_hermitian(h, tol)
    w, v = np.linalg.eigh(h)
    c0 = v.conj().T @ psi0
    phases = np.exp(-1j * np.outer(times, w) / HBAR)
    return (phases * c0[None, :]) @ v.T


def _step_grid(period, steps, t_final):
    dt = period / steps
    n_full = int(math.floor(t_final / dt + 1e-9))
    rem = t_final - n_full * dt
    if rem < 1e-9 * dt:
        rem = 0.0
    return dt, n_full, rem


def _record_indices(n_full, n_samples):
    if n_samples is None or n_samples >= n_full:
        return np.arange(n_full + 1)
    return np.unique(np.round(np.linspace(0, n_full, n_samples + 1)).astype(int))


def _run_midpoint(h, psi0, dt, n_full, rem, record, tol):
    steps = None
    if h.periodic and h.period_hint is not None:
        steps = int(round(h.period_hint / dt))
        if not math.isclose(steps * dt, h.period_hint, rel_tol=1e-12):
            steps = None

    def step_prop(t_mid, width):
        return herm_expm(h.evaluate(t_mid), -1j * width / HBAR, tol)

    psi = np.array(psi0, dtype=complex)
    states = []
    drift = 0.0
    rec = set(int(k) for k in record)
    if steps is not None:
        cache = [step_prop((s + 0.5) * dt, dt) for s in range(steps)]
        u_period = np.eye(len(psi), dtype=complex)
        for u in cache:
            u_period = u @ u_period
    k = 0
    targets = sorted(rec)
    if targets and targets[0] == 0:
        states.append(psi.copy())
    for target in targets:
        if target == 0:
            continue
        while k < target:
            if steps is not None and k % steps == 0 and target - k >= steps:
                psi = u_period @ psi
                k += steps
            elif steps is not None:
                psi = cache[k % steps] @ psi
                k += 1
            else:
                psi = step_prop((k + 0.5) * dt, dt) @ psi
                k += 1
        drift = max(drift, _check_norm(psi, f"step {k}"))
        states.append(psi.copy())
    times = [k * dt for k in targets]
    if rem > 0.0:
        while k < n_full:
            psi = (cache[k % steps] if steps is not None else step_prop((k + 0.5) * dt, dt)) @ psi
            k += 1
        psi = step_prop(n_full * dt + 0.5 * rem, rem) @ psi
        drift = max(drift, _check_norm(psi, "final step"))
        states.append(psi.copy())
        times.append(n_full * dt + rem)
    return np.array(times), np.array(states), drift, steps is not None


def evolve_timedep(h, psi0, sim, n_samples=None, t_final=None, richardson=False, frame=None):
    """Exponential-midpoint propagation of a time-dependent Hamiltonian.

    The step is ``period_hint / sim.steps_per_drive_period``. States are
    recorded at (up to) ``n_samples + 1`` step boundaries including t=0 and
    the final time.
    """
    if sim.steps_per_drive_period < 8:
        raise ValueError("steps_per_drive_period must be >= 8")
    if h.period_hint is None:
        raise ValueError("time-dependent Hamiltonian carries no period hint")
    t_final = sim.t_final if t_final is None else t_final
    dt, n_full, rem = _step_grid(h.period_hint, sim.steps_per_drive_period, t_final)
    record = _record_indices(n_full, n_samples)
    times, states, drift, cached = _run_midpoint(h, psi0, dt, n_full, rem, record, sim.algebra_tol)
    control = {
        "method": "exponential_midpoint",
        "dt": dt,
        "steps": n_full + (1 if rem else 0),
        "steps_per_drive_period": sim.steps_per_drive_period,
        "periodic_cache": cached,
    }
    if richardson:
        fine = replace(sim, steps_per_drive_period=2 * sim.steps_per_drive_period)
        dt2, n2, rem2 = _step_grid(h.period_hint, fine.steps_per_drive_period, t_final)
        _, fine_states, _, _ = _run_midpoint(h, psi0, dt2, n2, rem2, [n2], sim.algebra_tol)
        # second order: coarse - exact ~ 4/3 (coarse - fine)
        control["richardson_error"] = float(
            4.0 / 3.0 * np.linalg.norm(states[-1] - fine_states[-1])
        )
    return EvolutionReport(times, states, frame, drift, control)


def _spin_factor(frame, t):
    rot = np.diag([np.exp(0.5j * frame.omega_b * t), np.exp(-0.5j * frame.omega_b * t)])
    if frame.kind == "rotating":
        return rot
    return DRESSING @ rot


def polaron_generator(epsilon, layout, n_spins):
    """Anti-Hermitian ``S = sum_jn eps_jn (a_n^dag - a_n) sz_j``."""
    epsilon = np.asarray(epsilon, dtype=float)
    cutoff = layout[n_spins] if len(layout) > n_spins else 2
    a, ad = fock_ladder(cutoff)
    dim = int(np.prod(layout))
    s = np.zeros((dim, dim), dtype=complex)
    for n in range(epsilon.shape[1]):
        p = embed(ad - a, n_spins + n, layout)
        for j in range(n_spins):
            if epsilon[j, n] != 0.0:
                s += epsilon[j, n] * (p @ embed(SZ, j, layout))
    return s


def frame_unitary(frame, t, tol=1e-10):
    dim = int(np.prod(frame.layout))
    if frame.kind == "lab":
        return np.eye(dim, dtype=complex)
    if frame.kind in ("rotating", "dressed"):
        spin = np.eye(1, dtype=complex)
        f = _spin_factor(frame, t)
        for _ in range(frame.n_spins):
            spin = np.kron(spin, f)
        return np.kron(spin, np.eye(dim // spin.shape[0]))
    if frame.kind == "polaron":
        s = polaron_generator(frame.epsilon, frame.layout, frame.n_spins)
        u = herm_expm(1j * s, -1j, tol)
        err = np.max(np.abs(u.conj().T @ u - np.eye(dim)))
        if err > tol:
            raise NormDriftError(f"polaron transform not unitary ({err:.3g}); raise the cutoff")
        return u
    raise ValueError(f"unknown frame {frame.kind!r}")


def frame_transform(psi, frame, t, inverse=False):
    u = frame_unitary(frame, t)
    if u.shape[0] != len(psi):
        raise ValueError("frame layout does not match the state")
    return (u.conj().T if inverse else u) @ psi


def polaron_transform(h, epsilon, layout, n_spins):
    """``exp(S) H exp(-S)``; diagonalises the static-gradient Hamiltonian."""
    u = frame_unitary(Frame.polaron(layout, n_spins, epsilon), 0.0)
    return u @ h @ u.conj().T


def load_calibration():
    text = resources.files("magicsim").joinpath("data/equivalence_calibration.json").read_text()
    return json.loads(text)


def equivalence_check(system, psi0=None, t_final=None, n_samples=200, calibration=None):
    """Lab-frame versus dressed-frame evolution of a dynamic gradient.

    Requires a resonant drive (``omega_b == omega0``) and a carrier Rabi
    frequency below ``omega_b / 10``. Passes when the largest sampled
    infidelity is within three times the calibrated ``C (Omega0/omega_B)^2``.
    """
    f = system.field
    if f.kind != "dynamic":
        raise ConfigError("equivalence check needs a dynamic field")
    if abs(f.detuning) > 1e-9 * f.omega_b:
        raise ConfigError("equivalence check needs omega_b == omega0 (zero detuning)")
    crystal, modes = prepare(system)
    table = rabi_frequencies(system.species, f, modes, crystal)
    ratio = float(np.max(np.abs(table.omega0_rabi)) / f.omega_b)
    if not ratio < 0.1:
        raise ConfigError(f"Omega0/omega_B = {ratio:.3g} violates the < 0.1 precondition")

    layout = layout_for(system.n_ions, modes.n_modes, system.sim.fock_cutoff)
    if psi0 is None:
        psi0 = ground_state(layout, system.n_ions)
    frame = Frame.dressed(layout, system.n_ions, f.omega_b)

    lab = evolve_timedep(
        h_dynamic_lab(system, crystal, modes), psi0, system.sim,
        n_samples=n_samples, t_final=t_final,
    )
    dressed = propagate_const(h_dressed(system, crystal, modes), frame_transform(psi0, frame, 0.0), lab.times)
    infid = np.array([
        1.0 - fidelity(d, frame_transform(s, frame, t))
        for t, s, d in zip(lab.times, lab.states, dressed)
    ])
    infid = np.clip(infid, 0.0, None)
    c = load_calibration()["C"] if calibration is None else calibration
    bound = 3.0 * c * ratio**2
    worst = float(infid.max())
    return EquivalenceReport(
        max_infidelity=worst,
        ratio=ratio,
        bound=bound,
        calibration=c,
        passes=worst <= max(bound, 1e-10),
        times=lab.times,
        infidelity=infid,
    )


def spin_sector_energies(system, k=0):
    """Eigenenergies ``E(s_1, ..., s_N; k)`` of the static-gradient Hamiltonian.

    ``k`` is the motional label (an int applies to every mode). The
    Hamiltonian conserves each ``sz_j``, so it is diagonalised one spin
    sector at a time and the level is identified by maximum overlap with
    the bare Fock label.
    """
    if system.field.kind == "dynamic":
        system = identify_static_equivalent(system)
    crystal, modes = prepare(system)
    cutoff = system.sim.fock_cutoff
    n_spins = system.n_ions
    ks = (k,) * modes.n_modes if np.isscalar(k) else tuple(k)
    if len(ks) != modes.n_modes:
        raise ValueError("one motional label per mode is needed")
    if max(ks) >= cutoff - BOUNDARY_BAND:
        raise LevelIdentificationError(
            f"motional label {max(ks)} lies in the boundary band of cutoff {cutoff}"
        )
    h = h_static(system, crystal, modes)
    layout = layout_for(n_spins, modes.n_modes, cutoff)
    grid = np.indices(layout).reshape(len(layout), -1)
    n_fock = cutoff**modes.n_modes
    target = int(np.ravel_multi_index(ks, (cutoff,) * modes.n_modes)) if ks else 0

    energies = {}
    for pattern in np.ndindex(*(2,) * n_spins):
        mask = np.all(grid[:n_spins] == np.array(pattern)[:, None], axis=0)
        idx = np.flatnonzero(mask)
        assert len(idx) == n_fock
        leak = np.max(np.abs(h[np.ix_(idx, np.flatnonzero(~mask))])) if (~mask).any() else 0.0
        if leak != 0.0:
            raise LevelIdentificationError("Hamiltonian mixes spin sectors")
        w, v = np.linalg.eigh(h[np.ix_(idx, idx)])
        overlaps = np.abs(v[target, :]) ** 2
        best = int(np.argmax(overlaps))
        if overlaps[best] < 0.9:
            raise LevelIdentificationError(
                f"level {ks} in sector {pattern} has overlap {overlaps[best]:.3f} < 0.9"
            )
        spins = tuple(1 if s == EXCITED else -1 for s in pattern)
        energies[spins] = float(w[best])
    return energies


def extract_j_from_spectrum(system, k=0):
    """Spin-spin coupling (rad/s) of two ions from the exact spectrum.

    ``J = -(E_uu + E_dd - E_ud - E_du) / (2 hbar)``, the normalisation of
    ``H_J = -(hbar/2) J sz_1 sz_2``.
    """
    if system.n_ions != 2:
        raise ValueError("spectral J extraction is defined for two ions")
    if system.sim.max_modes is not None and system.sim.max_modes < 2:
        raise ValueError("both modes of the active axis must be included")
    e = spin_sector_energies(system, k)
    return -(e[1, 1] + e[-1, -1] - e[1, -1] - e[-1, 1]) / (2.0 * HBAR)


def expectation(psi, op):
    return float(np.real(np.vdot(psi, op @ psi)))


def epsilon_for(system):
    crystal, modes = prepare(system)
    return epsilon_matrix(system.species, system.field, modes)
