import math

import numpy as np
import pytest

from uscqed.errors import ContractError, DomainError, InvalidDimensionError
from uscqed.models import (
    CPBParams,
    CoupledLCParams,
    FluxoniumParams,
    RabiParams,
    ResonatorParams,
    build_coupled_lc,
    build_cpb_bare,
    build_fluxonium_bare,
    coupled_lc_probe,
    cpb_photon_system,
    fluxonium_photon_system,
    normal_modes_analytic,
    rabi_parity_chain,
    rabi_system,
    resonator_from_x,
    single_excitations,
    truncate_to_rabi,
    x_charge,
    x_flux,
)
from uscqed.spectrum import eigensolve


def lowest(h, k):
    return np.linalg.eigvalsh(h if isinstance(h, np.ndarray) else h.toarray())[:k]


# ---------------------------------------------------------------- coupled LC


def test_normal_modes_analytic_values():
    # omega0 (sqrt(1+x^2) +- x), product omega0^2
    hi, lo = normal_modes_analytic(2.0, 0.75)
    assert hi == pytest.approx(2.0 * 2.0)
    assert lo == pytest.approx(2.0 * 0.5)
    hi, lo = normal_modes_analytic(1.0, 1e4)
    assert hi * lo == pytest.approx(1.0, rel=1e-12)


def test_uncoupled_lc_is_two_ladders():
    ev = lowest(build_coupled_lc(CoupledLCParams(1.0, 1.7, 0.0), "flux", 8, 8), 6)
    want = sorted(1.0 * i + 1.7 * j for i in range(8) for j in range(8))[:6]
    assert np.allclose(ev - ev[0], want, atol=1e-12)


@pytest.mark.parametrize("gauge", ["flux", "charge"])
def test_coupled_lc_modes_dense(gauge):
    h = build_coupled_lc(CoupledLCParams(1.0, 1.0, 0.3), gauge, 30, 30)
    res = eigensolve(h, 12)
    low, high = single_excitations(res, coupled_lc_probe(30, 30))
    a_hi, a_lo = normal_modes_analytic(1.0, 0.3)
    assert low == pytest.approx(a_lo, rel=1e-9)
    assert high == pytest.approx(a_hi, rel=1e-9)


def test_coupled_lc_detuned_gauges_agree():
    p = CoupledLCParams(1.0, 1.6, 0.4)
    flux = lowest(build_coupled_lc(p, "flux", 30, 30), 8)
    charge = lowest(build_coupled_lc(p, "charge", 30, 30), 8)
    assert np.allclose(flux, charge, atol=1e-8)


def test_coupled_lc_sparse_matches_dense():
    p = CoupledLCParams(1.0, 1.0, 0.5)
    dense = build_coupled_lc(p, "charge", 12, 12)
    sparse = build_coupled_lc(p, "charge", 12, 12, sparse=True)
    assert np.allclose(sparse.toarray(), dense)


def test_coupled_lc_rejects_bad_gauge():
    with pytest.raises(ContractError):
        build_coupled_lc(CoupledLCParams(1.0, 1.0, 0.5), "coulomb", 5, 5)
    with pytest.raises(ContractError):
        CoupledLCParams(1.0, -1.0, 0.5)


# ---------------------------------------------------------------- fluxonium


def test_fluxonium_without_junction_is_harmonic():
    p = FluxoniumParams(1e-300, 2.0, 0.5, 0.0)
    h, _ = build_fluxonium_bare(p, 60)
    ev = lowest(h, 5)
    assert np.allclose(np.diff(ev), math.sqrt(8 * 2.0 * 0.5), rtol=1e-10)


def test_fluxonium_flux_periodicity():
    h0, _ = build_fluxonium_bare(FluxoniumParams(5.0, 5.0, 0.5, 0.3), 120)
    h1, _ = build_fluxonium_bare(FluxoniumParams(5.0, 5.0, 0.5, -0.3), 120)
    # theta_ext -> -theta_ext is theta -> -theta: same spectrum
    assert np.allclose(lowest(h0, 6), lowest(h1, 6), atol=1e-9)


def test_fluxonium_photon_decoupled_is_product():
    atom = FluxoniumParams(5.0, 5.0, 0.5)
    s = fluxonium_photon_system(atom, resonator_from_x(2.0, 0.0), 6, 6, atom_fock=150)
    h_bare, _ = build_fluxonium_bare(atom, 150)
    e_atom = lowest(h_bare, 6)
    want = sorted(e + 2.0 * n for e in e_atom for n in range(6))[:8]
    assert np.allclose(lowest(s.hamiltonian, 8), want, atol=1e-9)


def test_fluxonium_photon_parity_commutes():
    s = fluxonium_photon_system(FluxoniumParams(5.0, 5.0, 0.5), resonator_from_x(2.47, 2.0), 10, 20, atom_fock=120)
    h, p = s.hamiltonian, s.parity
    assert np.max(np.abs(h @ p - p @ h)) < 1e-12
    off = fluxonium_photon_system(FluxoniumParams(5.0, 5.0, 0.5, 2.0), resonator_from_x(2.47, 2.0), 10, 20)
    assert off.parity is None


def test_fluxonium_basis_choice_does_not_change_levels():
    atom = FluxoniumParams(5.0, 5.0, 0.5)
    res = resonator_from_x(2.47, 1.0)
    a = lowest(fluxonium_photon_system(atom, res, 80, 25).hamiltonian, 4)
    b = lowest(fluxonium_photon_system(atom, res, 80, 25, basis_el=0.8).hamiltonian, 4)
    assert np.allclose(a, b, atol=1e-6)


# ---------------------------------------------------------------- resonator maps


@pytest.mark.parametrize("x", [0.1, 1.0, 3.0])
def test_flux_branch_inverse(x):
    res = resonator_from_x(2.47, x)
    assert x_flux(res) == pytest.approx(x, rel=1e-13)
    assert res.omega_r == pytest.approx(2.47, rel=1e-13)


@pytest.mark.parametrize("x", [0.2, 1.0, 2.0])
def test_charge_branch_inverse(x):
    res = resonator_from_x(None, x, "charge", e_c1=10.0, e_c2=1.0)
    assert x_charge(11.0, res.e_l2) == pytest.approx(x, rel=1e-13)
    assert math.sqrt(8 * 11.0 * res.e_l2) == pytest.approx(11.0 / x**2, rel=1e-13)


def test_decoupled_resonator():
    res = resonator_from_x(3.0, 0.0)
    assert res.decoupled and res.omega_r == 3.0 and x_flux(res) == 0.0
    with pytest.raises(ContractError):
        ResonatorParams(0.0, math.inf)
    with pytest.raises(DomainError):
        resonator_from_x(None, 0.0, "charge", e_c1=1.0, e_c2=1.0)


# ---------------------------------------------------------------- Cooper pair box


def test_cpb_without_junction_is_charge_parabola():
    h, _ = build_cpb_bare(CPBParams(0.0, 1.5, 0.2), 4)
    want = sorted(4 * 1.5 * (n + 0.2) ** 2 for n in range(-4, 5))
    assert np.allclose(lowest(h, 9), want)


def test_cpb_exact_and_regrouped_agree():
    atom = CPBParams(2.0, 10.0, 0.3)
    res = resonator_from_x(None, 1.0, "charge", e_c1=10.0, e_c2=1.0)
    a = lowest(cpb_photon_system(atom, res, 8, 60).hamiltonian, 6)
    b = lowest(cpb_photon_system(atom, res, 8, 60, form="regrouped").hamiltonian, 6)
    assert np.allclose(a, b, atol=1e-9)


def test_cpb_parity_only_at_symmetric_points():
    res = resonator_from_x(None, 1.0, "charge", e_c1=10.0, e_c2=1.0)
    s = cpb_photon_system(CPBParams(2.0, 10.0, 0.5), res, 6, 30)
    assert s.parity is not None
    assert cpb_photon_system(CPBParams(2.0, 10.0, 0.3), res, 6, 30).parity is None
    with pytest.raises(ContractError):
        cpb_photon_system(CPBParams(2.0, 10.0, 0.5), res, 6, 30, form="other")
    with pytest.raises(InvalidDimensionError):
        cpb_photon_system(CPBParams(2.0, 10.0, 0.5), res, 0, 30)


# ---------------------------------------------------------------- Rabi


def test_rabi_without_qubit_splitting_is_displaced_oscillator():
    s = rabi_system(RabiParams(1.0, 0.0, 0.7), 60)
    ev = lowest(s.hamiltonian, 6)
    # each displaced level is doubly degenerate at n - g^2
    assert np.allclose(ev, [-0.49, -0.49, 0.51, 0.51, 1.51, 1.51], atol=1e-10)


def test_rabi_parity_chain_reproduces_spectrum():
    p = RabiParams(1.0, 0.8, 0.6)
    full = lowest(rabi_system(p, 40).hamiltonian, 6)
    chains = []
    for sector in (1, -1):
        d, o = rabi_parity_chain(p, 40, sector)
        chains += list(np.linalg.eigvalsh(np.diag(d) + np.diag(o, 1) + np.diag(o, -1))[:6])
    assert np.allclose(sorted(chains)[:6], full, atol=1e-10)


def test_truncate_to_rabi_domains():
    res = resonator_from_x(2.47, 1.0)
    t = truncate_to_rabi("fluxonium", FluxoniumParams(5.0, 5.0, 0.5), res)
    assert t.rabi.omega_r == pytest.approx(2.47)
    assert t.rabi.g == pytest.approx(2.47 * t.matrix_element / math.pi * 1.0)
    with pytest.raises(DomainError):
        truncate_to_rabi("fluxonium", FluxoniumParams(5.0, 5.0, 0.5, 3.0), res)
    with pytest.raises(DomainError):
        truncate_to_rabi("cpb", CPBParams(2.0, 10.0, 0.4), res)
    with pytest.raises(ContractError):
        truncate_to_rabi("transmon", FluxoniumParams(5.0, 5.0, 0.5), res)
