import math

import numpy as np
import pytest

from dicke_battery.errors import DimensionError, DomainError
from dicke_battery.model import (BatteryParams, Drive, apply_hamiltonian, build_terms,
                                 drive_coefficient, internal_energy_of_state)
from dicke_battery.spin_algebra import DickeBasis, StateVector, basis_state


def test_params_validation():
    with pytest.raises(DomainError):
        BatteryParams(delta=0.0, omega=1.0)
    with pytest.raises(DomainError):
        BatteryParams(n_atoms=0, omega=1.0)
    with pytest.raises(DomainError):
        BatteryParams(amp=1.0)  # harmonic without omega
    BatteryParams(amp=1.0, drive="static")
    p = BatteryParams.from_lambda(-1.2, delta=2.0, omega=1.0)
    assert p.g == -2.4 and p.lam == -1.2


def test_drive_coefficient():
    p = BatteryParams(amp=1.0, omega=2 * math.pi)
    assert drive_coefficient(p, 0.0) == 1.0
    assert abs(drive_coefficient(p, 0.25)) < 1e-15
    assert drive_coefficient(BatteryParams(amp=0.7, drive=Drive.STATIC), 12.3) == 0.7
    assert drive_coefficient(BatteryParams(amp=0.7, drive=Drive.OFF), 1.0) == 0.0


def test_diagonal_only_without_drive():
    p = BatteryParams(amp=0.0, omega=1.0, n_atoms=4)
    terms = build_terms(p)
    b = DickeBasis(4)
    for m in b.m_values:
        out = apply_hamiltonian(terms, p, 0.3, basis_state(b, m))
        assert np.allclose(out.amplitudes, m * basis_state(b, m).amplitudes)


def test_single_atom_hamiltonian_action():
    p = BatteryParams(amp=1.0, omega=1.0, n_atoms=1)
    out = apply_hamiltonian(build_terms(p), p, 0.0, basis_state(DickeBasis(1), -0.5))
    assert np.allclose(out.amplitudes, [-0.5, 0.5])


@pytest.mark.parametrize("lam", [-2.0, -1.2, 0.0, 0.5, 1.2])
@pytest.mark.parametrize("n", [1, 2, 9, 200])
def test_g_term_vanishes_on_all_down(lam, n):
    p = BatteryParams.from_lambda(lam, amp=0.0, omega=1.0, n_atoms=n)
    terms = build_terms(p)
    assert terms.diag_internal[0] == -n / 2
    psi = basis_state(terms.basis, -n / 2)
    out = apply_hamiltonian(terms, p, 0.0, psi)
    assert np.allclose(out.amplitudes, -n / 2 * psi.amplitudes)


def test_internal_equals_free_without_coupling():
    terms = build_terms(BatteryParams(omega=1.0, n_atoms=11))
    assert np.array_equal(terms.diag_internal, terms.diag_free)


def test_internal_energy_examples():
    b = DickeBasis(200)
    terms = build_terms(BatteryParams.from_lambda(-1.2, omega=1.0, n_atoms=200))
    # -83 + (-1.2/200) * (100*101 - 83**2 - 100)
    expected = -83 - 0.006 * (10100 - 6889 - 100)
    assert internal_energy_of_state(terms, basis_state(b, -83), "internal") == pytest.approx(
        expected, abs=1e-12)
    assert expected == pytest.approx(-101.666, abs=1e-9)
    assert internal_energy_of_state(terms, basis_state(b, 100), "free") == 100.0
    assert internal_energy_of_state(terms, basis_state(b, -100), "internal") == -100.0


def test_hamiltonian_hermitian_against_dense():
    p = BatteryParams.from_lambda(0.7, amp=0.9, omega=1.3, n_atoms=6)
    terms = build_terms(p)
    b = terms.basis
    dense = np.column_stack([apply_hamiltonian(terms, p, 0.4, basis_state(b, m)).amplitudes
                             for m in b.m_values])
    assert np.allclose(dense, dense.conj().T)


def test_dimension_mismatch():
    p = BatteryParams(omega=1.0, n_atoms=3)
    with pytest.raises(DimensionError):
        apply_hamiltonian(build_terms(p), p, 0.0, basis_state(DickeBasis(4), 2))
