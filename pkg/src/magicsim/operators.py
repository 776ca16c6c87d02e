"""Dense operator algebra on spin and truncated Fock spaces.

Basis conventions: a spin is ordered ``(|e>, |g>)`` so that
``sigma_z = diag(+1, -1)`` and ``sigma_+ = |e><g|``. Composite spaces use
the fixed tensor order ``[spin_1, ..., spin_N, mode_1, ..., mode_M]``.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

# Fock levels at the top of each truncated mode excluded from comparisons.
BOUNDARY_BAND = 3


class HermiticityError(ValueError):
    pass


def fock_ladder(cutoff):
    if cutoff < 2:
        raise ValueError("cutoff must be >= 2")
    a = np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1).astype(complex)
    return a, a.conj().T


def number_op(cutoff):
    return np.diag(np.arange(cutoff, dtype=float)).astype(complex)


def pauli():
    """Return ``(sx, sy, sz, sp, sm, id2)``."""
    sp = np.array([[0, 1], [0, 0]], dtype=complex)
    sm = sp.conj().T
    sx = sp + sm
    sy = -1j * (sp - sm)
    sz = np.diag([1.0, -1.0]).astype(complex)
    return sx, sy, sz, sp, sm, np.eye(2, dtype=complex)


SX, SY, SZ, SP, SM, I2 = pauli()


def layout_for(n_spins, n_modes, cutoff):
    return [2] * n_spins + [cutoff] * n_modes


def embed(op, slot, layout):
    op = np.asarray(op)
    if op.shape != (layout[slot], layout[slot]):
        raise ValueError(
            f"operator of shape {op.shape} does not fit slot {slot} of dim {layout[slot]}"
        )
    left = int(np.prod(layout[:slot], dtype=int))
    right = int(np.prod(layout[slot + 1:], dtype=int))
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def tensor(*ops):
    return reduce(np.kron, ops)


def basis_state(layout, labels):
    """Product basis vector for per-slot indices ``labels``."""
    vec = np.ones(1, dtype=complex)
    for dim, k in zip(layout, labels):
        e = np.zeros(dim, dtype=complex)
        e[k] = 1.0
        vec = np.kron(vec, e)
    return vec


def check_hermitian(h, tol):
    scale = np.max(np.abs(h)) if h.size else 0.0
    dev = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
    if dev > tol * max(scale, np.finfo(float).tiny):
        raise HermiticityError(f"matrix is not Hermitian (max deviation {dev:.3g}, scale {scale:.3g})")


def herm_expm(h, scale, tol=1e-10):
    """``exp(scale * h)`` for Hermitian ``h`` via its spectral decomposition.

    ``tol`` bounds the anti-Hermitian part relative to the largest entry.
    """
    h = np.asarray(h, dtype=complex)
    check_hermitian(h, tol)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(scale * w)) @ v.conj().T


def displacement(eps, cutoff):
    """Truncated ``exp(eps * (a^dag - a))``."""
    a, ad = fock_ladder(cutoff)
    # i(a^dag - a) is Hermitian, eps (a^dag - a) = -i eps * that
    return herm_expm(1j * (ad - a), -1j * eps)


def commutator(x, y):
    return x @ y - y @ x


def is_unitary(u, tol=1e-10):
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < tol


def guarded_fock_indices(layout, n_spins, band=BOUNDARY_BAND):
    """Flat indices whose Fock labels all lie below the boundary band."""
    grids = np.indices(layout).reshape(len(layout), -1)
    ok = np.ones(grids.shape[1], dtype=bool)
    for slot in range(n_spins, len(layout)):
        ok &= grids[slot] < layout[slot] - band
    return np.flatnonzero(ok)
