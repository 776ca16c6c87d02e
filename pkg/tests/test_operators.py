import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magicsim.operators import (
    BOUNDARY_BAND,
    I2,
    SM,
    SP,
    SX,
    SY,
    SZ,
    HermiticityError,
    basis_state,
    commutator,
    displacement,
    embed,
    fock_ladder,
    guarded_fock_indices,
    herm_expm,
    is_unitary,
    layout_for,
    number_op,
)


def taylor_expm(m, terms=30):
    out = np.eye(m.shape[0], dtype=complex)
    term = np.eye(m.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ m / k
        out = out + term
    return out


def test_pauli_algebra():
    assert np.allclose(commutator(SX, SY), 2j * SZ)
    assert np.allclose(SZ @ np.array([1, 0]), [1, 0])  # |e> is +1
    assert np.allclose(SP @ np.array([0, 1]), [1, 0])  # sigma+ |g> = |e>
    for s in (SX, SY, SZ):
        assert np.allclose(s @ s, I2)
    assert np.allclose(SM, SP.conj().T)


@pytest.mark.parametrize("cutoff", [2, 3, 8, 20])
def test_ladder(cutoff):
    a, ad = fock_ladder(cutoff)
    assert np.allclose(ad @ a, number_op(cutoff))
    c = commutator(a, ad)
    # [a, a^dag] = 1 except in the last level
    assert np.allclose(np.diag(c)[:-1], 1.0)
    assert np.diag(c)[-1] == pytest.approx(-(cutoff - 1))


def test_ladder_rejects_tiny_cutoff():
    with pytest.raises(ValueError):
        fock_ladder(1)


def test_embed_and_basis_order():
    layout = layout_for(2, 1, 3)
    assert layout == [2, 2, 3]
    psi = basis_state(layout, [0, 1, 2])  # |e, g, 2>
    assert np.vdot(psi, embed(SZ, 0, layout) @ psi).real == 1.0
    assert np.vdot(psi, embed(SZ, 1, layout) @ psi).real == -1.0
    assert np.vdot(psi, embed(number_op(3), 2, layout) @ psi).real == 2.0
    assert np.flatnonzero(psi).tolist() == [0 * 6 + 1 * 3 + 2]
    with pytest.raises(ValueError):
        embed(SZ, 2, layout)


def test_embedded_operators_on_different_slots_commute():
    layout = layout_for(2, 2, 3)
    a, ad = fock_ladder(3)
    ops = [embed(SX, 0, layout), embed(SY, 1, layout), embed(a, 2, layout), embed(ad, 3, layout)]
    for i in range(len(ops)):
        for k in range(i + 1, len(ops)):
            assert np.max(np.abs(commutator(ops[i], ops[k]))) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31 - 1), st.floats(-2.0, 2.0))
def test_herm_expm_matches_series(n, seed, t):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = 0.5 * (x + x.conj().T)
    h /= np.linalg.norm(h, 2)
    u = herm_expm(h, -1j * t)
    assert np.max(np.abs(u - taylor_expm(-1j * t * h))) < 1e-12
    assert is_unitary(u, 1e-12)


def test_herm_expm_rejects_non_hermitian():
    with pytest.raises(HermiticityError):
        herm_expm(np.array([[0, 1], [0, 0]], dtype=complex), 1.0)


def test_hermiticity_check_is_relative():
    # SI-sized Hamiltonians are ~1e-27 J; a relative test accepts them
    h = 1e-27 * SX
    u = herm_expm(h, -1j / 1e-27)
    assert is_unitary(u)


@pytest.mark.parametrize("cutoff", [10, 20])
def test_displacement_vacuum_overlap(cutoff):
    d = displacement(0.1, cutoff)
    assert d[0, 0].real == pytest.approx(0.9950124791926823, abs=1e-12)
    assert d[0, 0].real == pytest.approx(math.exp(-0.1**2 / 2), abs=1e-12)
    assert is_unitary(d, 1e-12)


@given(st.floats(-0.5, 0.5))
def test_displacement_inverse_and_coherent_state(eps):
    d = displacement(eps, 20)
    assert np.allclose(d @ displacement(-eps, 20), np.eye(20), atol=1e-12)
    # coherent-state amplitudes in the unaffected low levels
    col = d[:, 0]
    for n in range(5):
        exact = math.exp(-eps**2 / 2) * eps**n / math.sqrt(math.factorial(n))
        assert col[n].real == pytest.approx(exact, abs=1e-10)


def test_guarded_indices():
    layout = layout_for(1, 1, 6)
    idx = guarded_fock_indices(layout, 1)
    assert BOUNDARY_BAND == 3
    # spin e/g times Fock 0..2
    assert idx.tolist() == [0, 1, 2, 6, 7, 8]
