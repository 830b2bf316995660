"""Hamiltonians of coupled LC circuits, fluxonium-resonator and Cooper pair
box-resonator circuits, and their two-level (quantum Rabi) truncations.

All energies are frequencies in GHz. Zero-point constants are dropped, so
only eigenvalue differences are physical. Product spaces are ordered
atom (x) photon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .errors import ContractError, DomainError, InvalidDimensionError, ResourceError
from .operators import (
    ChargeBasis,
    OscillatorBasis,
    charge_ops,
    charge_reflection,
    fock_ladder,
    fock_parity,
    max_dim,
    number_op,
    operator_cos_sin,
    quadratures,
    tensor,
)

DEGENERACY_TOL = 1e-9


# ---------------------------------------------------------------- parameters


def _positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise ContractError(f"{name} must be positive and finite, got {value!r}")


def _non_negative(name, value):
    if not (np.isfinite(value) and value >= 0):
        raise ContractError(f"{name} must be non-negative and finite, got {value!r}")


@dataclass(frozen=True)
class CoupledLCParams:
    omega1: float
    omega2: float
    x: float

    def __post_init__(self):
        _positive("omega1", self.omega1)
        _positive("omega2", self.omega2)
        _non_negative("x", self.x)


@dataclass(frozen=True)
class FluxoniumParams:
    e_j: float
    e_c1: float
    e_l1: float
    theta_ext: float = math.pi

    def __post_init__(self):
        _positive("e_j", self.e_j)
        _positive("e_c1", self.e_c1)
        _positive("e_l1", self.e_l1)
        if not np.isfinite(self.theta_ext):
            raise ContractError("theta_ext must be finite")


@dataclass(frozen=True)
class CPBParams:
    e_j: float
    e_c1: float
    ng: float = 0.5

    def __post_init__(self):
        _non_negative("e_j", self.e_j)
        _positive("e_c1", self.e_c1)
        if not np.isfinite(self.ng):
            raise ContractError("ng must be finite")


@dataclass(frozen=True)
class ResonatorParams:
    """Series L2-C2 resonator given by its inductive and charging energies.

    The flux-branch limit ``x -> 0`` at fixed bare frequency has
    ``e_l2 = 0`` and ``e_c2 = inf``; that decoupled resonator is represented
    by ``e_l2 = 0, e_c2 = inf`` together with ``omega_r_limit``.
    """

    e_l2: float
    e_c2: float
    omega_r_limit: float | None = None

    def __post_init__(self):
        if self.e_l2 == 0 and math.isinf(self.e_c2):
            if self.omega_r_limit is None:
                raise ContractError("decoupled resonator needs omega_r_limit")
            _positive("omega_r_limit", self.omega_r_limit)
            return
        _positive("e_l2", self.e_l2)
        _positive("e_c2", self.e_c2)
        if self.omega_r_limit is not None:
            raise ContractError("omega_r_limit is only meaningful for the decoupled limit e_l2=0")

    @property
    def decoupled(self) -> bool:
        return self.e_l2 == 0

    @property
    def omega_r(self) -> float:
        """Bare frequency ``sqrt(8 E_C2 E_L2)`` of the isolated series resonator."""
        if self.decoupled:
            return float(self.omega_r_limit)
        return math.sqrt(8.0 * self.e_c2 * self.e_l2)


@dataclass(frozen=True)
class RabiParams:
    omega_r: float
    omega_a: float
    g: float

    def __post_init__(self):
        _positive("omega_r", self.omega_r)
        _non_negative("omega_a", self.omega_a)
        _non_negative("g", self.g)


@dataclass
class CoupledSystem:
    """A Hamiltonian together with what observables need to interpret it."""

    hamiltonian: np.ndarray
    dims: tuple[int, int]
    parity: np.ndarray | None = None
    ops: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


def _check_dims(**dims):
    for name, value in dims.items():
        if int(value) != value or value < 2:
            raise InvalidDimensionError(f"{name} must be an integer >= 2, got {value!r}")


def _compressed_quadratures(n_levels):
    """``X = a + a^dag``, ``P = i(a^dag - a)``, ``X^2``, ``P^2`` as exact compressions.

    The squares are formed one level up and cut, so the truncated matrices are
    projections of the untruncated operators (keeps truncation variational).
    """
    a, ad = fock_ladder(n_levels + 1)
    xq = a + ad
    pq = 1j * (ad - a)
    x2 = (xq @ xq)[:n_levels, :n_levels]
    p2 = (pq @ pq).real[:n_levels, :n_levels]
    return xq[:n_levels, :n_levels], pq[:n_levels, :n_levels], x2, p2


def _compressed_quadratures_for(basis: OscillatorBasis):
    """theta, n, theta^2 and n^2 of an oscillator basis (squares compressed)."""
    xq, pq, x2, p2 = _compressed_quadratures(basis.n_levels)
    tz, nz = basis.theta_zpf, basis.n_zpf
    return tz * xq, nz * pq, tz**2 * x2, nz**2 * p2


# ---------------------------------------------------------------- coupled LC


def build_coupled_lc(
    params: CoupledLCParams, gauge: str = "flux", n1: int = 40, n2: int = 40, *, sparse: bool = False
) -> np.ndarray:
    """Two coupled LC modes in the flux or the charge gauge.

    flux:   w1 a1'a1 + w2 a2'a2 - G (a1'+a1)(a2'+a2) + D (a1'+a1)^2,
            G = w2 x, D = w2 x^2
    charge: w1 a1'a1 + w2 a2'a2 + Gt (a1'-a1)(a2'-a2) - Dt (a2'-a2)^2,
            Gt = w1 x, Dt = w1 x^2

    Both follow from the circuit Hamiltonian and are unitarily equivalent
    for any ``omega1, omega2``. ``sparse=True`` returns a CSR matrix, for
    truncations too large to hold densely.
    """
    _check_dims(n1=n1, n2=n2)
    w1, w2, x = params.omega1, params.omega2, params.x
    x1, p1, x1sq, _ = _compressed_quadratures(n1)
    x2, p2, _, p2sq = _compressed_quadratures(n2)
    # P1 P2 is real: (i)(i) = -1 times real matrices
    p1p2 = [np.imag(p1), np.imag(p2)]
    if sparse:
        if n1 * n2 > max_dim():
            raise ResourceError(f"product dimension {n1 * n2} exceeds the guard {max_dim()} (set USC_MAX_DIM to raise it)")
        kron = lambda a, b: scipy.sparse.kron(scipy.sparse.csr_matrix(a), scipy.sparse.csr_matrix(b), format="csr")
        i1, i2 = scipy.sparse.identity(n1), scipy.sparse.identity(n2)
    else:
        kron = tensor
        i1, i2 = np.eye(n1), np.eye(n2)
    h = w1 * kron(number_op(n1), i2) + w2 * kron(i1, number_op(n2))
    if gauge == "flux":
        h = h - w2 * x * kron(x1, x2) + w2 * x**2 * kron(x1sq, i2)
    elif gauge == "charge":
        # (a1'-a1)(a2'-a2) = -P1 P2 ;  -(a2'-a2)^2 = P2^2
        h = h + w1 * x * kron(p1p2[0], p1p2[1]) + w1 * x**2 * kron(i1, p2sq)
    else:
        raise ContractError(f"gauge must be 'flux' or 'charge', got {gauge!r}")
    return h.tocsr() if sparse else np.real_if_close(h)


def single_excitations(result, op) -> tuple[float, float]:
    """Lower and upper single-quantum energies of two coupled linear modes.

    A linear quadrature (e.g. ``(a1 + a1^dag) (x) 1``) connects the ground
    state only to the two single-excitation states, so these are the two
    levels with the largest ``|<k|op|0>|``. NaN marks a mode that lies
    above the computed levels.
    """
    vecs = result.eigenvectors
    d = np.abs(vecs.conj().T @ np.asarray(op @ vecs[:, 0]))
    d[0] = 0.0
    top = np.argsort(-d, kind="stable")[:2]
    strong = [int(i) for i in top if d[i] > 1e-3 * d.max()]
    energies = sorted(float(result.eigenvalues[i] - result.eigenvalues[0]) for i in strong)
    if len(energies) < 2:
        energies += [float("nan")] * (2 - len(energies))
    return energies[0], energies[1]


def coupled_lc_probe(n1: int, n2: int, *, sparse: bool = False):
    """``(a1 + a1^dag) (x) 1`` matching the coupled-LC Hamiltonian layout."""
    a, ad = fock_ladder(n1)
    if sparse:
        return scipy.sparse.kron(scipy.sparse.csr_matrix(a + ad), scipy.sparse.identity(n2), format="csr")
    return tensor(a + ad, np.eye(n2))


def normal_modes_analytic(omega0: float, x: float) -> tuple[float, float]:
    """Normal-mode frequencies ``omega0 (sqrt(1 + x^2) +- x)`` for equal bare modes."""
    _positive("omega0", omega0)
    _non_negative("x", x)
    root = math.sqrt(1.0 + x * x)
    # the difference form loses digits at large x
    return omega0 * (root + x), omega0 / (root + x)


# ---------------------------------------------------------------- fluxonium


def _fluxonium_block(e_j, e_c, e_l, theta_ext, n_levels, basis_el=None):
    """Fluxonium-type single-mode block and its phase operator.

    ``4 e_c n^2 + e_l theta^2 / 2 - e_j cos(theta - theta_ext)`` in the
    oscillator basis of ``(e_c, basis_el)``; the constant is fixed so that
    the result does not depend on ``basis_el``.
    """
    basis_el = e_l if basis_el is None else basis_el
    basis = OscillatorBasis(n_levels, e_c, basis_el)
    theta, _, theta2, _ = _compressed_quadratures_for(basis)
    h = basis.omega * number_op(n_levels)
    if basis_el != e_l:
        shift = 0.5 * basis.omega - 0.5 * math.sqrt(8.0 * e_c * e_l)
        h = h + shift * np.eye(n_levels) + 0.5 * (e_l - basis_el) * theta2
    cos_t, sin_t = operator_cos_sin(theta)
    h = h - e_j * (math.cos(theta_ext) * cos_t + math.sin(theta_ext) * sin_t)
    return h, theta


def is_flux_symmetric(theta_ext: float, tol: float = DEGENERACY_TOL) -> bool:
    """True at theta_ext = 0 or pi (mod 2 pi), where theta -> -theta is a symmetry."""
    r = math.remainder(theta_ext, math.pi)
    return abs(r) <= tol


def is_flux_degenerate(theta_ext: float, tol: float = DEGENERACY_TOL) -> bool:
    """True at maximal frustration, theta_ext = pi (mod 2 pi)."""
    return abs(math.remainder(theta_ext - math.pi, 2.0 * math.pi)) <= tol


def is_charge_degenerate(ng: float, tol: float = DEGENERACY_TOL) -> bool:
    """True at ng = 1/2 (mod 1)."""
    return abs(math.remainder(ng - 0.5, 1.0)) <= tol


def build_fluxonium_bare(params: FluxoniumParams, n_levels: int = 150) -> tuple[np.ndarray, np.ndarray]:
    """Uncoupled fluxonium in the oscillator basis of ``(E_C1, E_L1)``; returns ``(H, theta)``."""
    _check_dims(n_levels=n_levels)
    return _fluxonium_block(params.e_j, params.e_c1, params.e_l1, params.theta_ext, n_levels)


def build_capshunted_fluxonium(atom: FluxoniumParams, e_c2: float, n_levels: int = 150) -> np.ndarray:
    """Fluxonium shunted by C2 (resonator inductance removed): ``C1 -> C1 + C2``."""
    _check_dims(n_levels=n_levels)
    if not e_c2 > 0:
        raise ContractError(f"e_c2 must be positive, got {e_c2!r}")
    e_c = atom.e_c1 if math.isinf(e_c2) else atom.e_c1 * e_c2 / (atom.e_c1 + e_c2)
    h, _ = _fluxonium_block(atom.e_j, e_c, atom.e_l1, atom.theta_ext, n_levels)
    return h


def _dressed_block(h, theta, n_keep, symmetric):
    """Lowest ``n_keep`` eigenstates of a single-mode block.

    Returns energies, the phase operator in that eigenbasis and, for a
    reflection-symmetric block, the parity (+-1) of each eigenstate.
    Symmetric blocks are diagonalized per parity sector so the labels are exact.
    """
    dim = h.shape[0]
    if n_keep > dim:
        raise InvalidDimensionError(f"cannot keep {n_keep} levels of a {dim}-level block")
    if symmetric:
        vecs, vals, par = [], [], []
        for sign, idx in ((1.0, np.arange(0, dim, 2)), (-1.0, np.arange(1, dim, 2))):
            ev, v = np.linalg.eigh(h[np.ix_(idx, idx)])
            full = np.zeros((dim, len(ev)), dtype=v.dtype)
            full[idx, :] = v
            vals.append(ev)
            vecs.append(full)
            par.append(np.full(len(ev), sign))
        vals = np.concatenate(vals)
        vecs = np.concatenate(vecs, axis=1)
        par = np.concatenate(par)
        order = np.argsort(vals, kind="stable")[:n_keep]
        vals, vecs, par = vals[order], vecs[:, order], par[order]
    else:
        vals, vecs = np.linalg.eigh(h)
        vals, vecs, par = vals[:n_keep], vecs[:, :n_keep], None
    theta_d = vecs.conj().T @ theta @ vecs
    theta_d = 0.5 * (theta_d + theta_d.conj().T)
    return vals, np.real_if_close(theta_d), par


def _resonator_coupling_scale(res: ResonatorParams) -> float:
    """``E_L2 * theta2_zpf``, finite (zero) in the decoupled limit."""
    if res.decoupled:
        return 0.0
    return res.e_l2 * (2.0 * res.e_c2 / res.e_l2) ** 0.25


def fluxonium_photon_system(
    atom: FluxoniumParams,
    res: ResonatorParams,
    n1: int,
    n2: int,
    *,
    atom_fock: int | None = None,
    basis_el: float | None = None,
) -> CoupledSystem:
    """Fluxonium coupled inductively to the series resonator (flux gauge).

    ``[4 E_C1 n1^2 + (E_L1+E_L2) theta1^2/2 - E_J cos(theta1 - theta_ext)] (x) 1
    + 1 (x) omega_r a'a - E_L2 theta1 (x) theta2``.

    The atom mode uses the oscillator basis of ``(E_C1, basis_el)``, by
    default ``basis_el = E_L1 + E_L2``. With ``atom_fock`` set, the atom block
    is first diagonalized on ``atom_fock`` oscillator states and only its
    lowest ``n1`` eigenstates are kept; otherwise ``n1`` is the number of
    oscillator states.
    """
    _check_dims(n1=n1, n2=n2)
    el_total = atom.e_l1 + res.e_l2
    symmetric = is_flux_symmetric(atom.theta_ext)
    if atom_fock is None:
        h_atom, theta1 = _fluxonium_block(atom.e_j, atom.e_c1, el_total, atom.theta_ext, n1, basis_el)
        atom_parity = fock_parity(n1) if symmetric else None
        atom_energies = None
    else:
        _check_dims(atom_fock=atom_fock)
        h_full, theta_full = _fluxonium_block(atom.e_j, atom.e_c1, el_total, atom.theta_ext, atom_fock, basis_el)
        atom_energies, theta1, par = _dressed_block(h_full, theta_full, n1, symmetric)
        h_atom = np.diag(atom_energies)
        atom_parity = np.diag(par) if symmetric else None

    a, ad = fock_ladder(n2)
    x2 = a + ad
    omega_r = res.omega_r
    coupling = _resonator_coupling_scale(res)
    i1, i2 = np.eye(n1), np.eye(n2)
    h = tensor(h_atom, i2) + omega_r * tensor(i1, number_op(n2))
    if coupling:
        h = h - coupling * tensor(theta1, x2)
    parity = tensor(atom_parity, fock_parity(n2)) if symmetric else None
    return CoupledSystem(
        hamiltonian=np.real_if_close(h),
        dims=(n1, n2),
        parity=parity,
        ops={"theta1": theta1, "atom_energies": atom_energies, "omega_r": omega_r},
    )


def build_fluxonium_photon(atom: FluxoniumParams, res: ResonatorParams, n1: int, n2: int, **kwargs) -> np.ndarray:
    return fluxonium_photon_system(atom, res, n1, n2, **kwargs).hamiltonian


# ---------------------------------------------------------------- Cooper pair box


def _cpb_block(e_j, e_c1, ng, n_cut):
    basis = ChargeBasis(n_cut, ng)
    n_op, cos_theta = charge_ops(basis)
    shifted = n_op + ng * np.eye(basis.dim)
    return 4.0 * e_c1 * shifted @ shifted - e_j * cos_theta, n_op


def build_cpb_bare(params: CPBParams, n_cut: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """``4 E_C1 (n + ng)^2 - E_J cos(theta)`` in the charge basis; returns ``(H, n_op)``."""
    if int(n_cut) != n_cut or n_cut < 1:
        raise InvalidDimensionError(f"n_cut must be a positive integer, got {n_cut!r}")
    return _cpb_block(params.e_j, params.e_c1, params.ng, n_cut)


def cpb_resonator_basis(atom: CPBParams, res: ResonatorParams, n2: int) -> OscillatorBasis:
    """Photon basis of the renormalized resonator, charging energy ``E_C1 + E_C2``."""
    if res.decoupled:
        raise DomainError("the Cooper pair box needs a finite resonator inductance")
    return OscillatorBasis(n2, atom.e_c1 + res.e_c2, res.e_l2)


def _is_half_or_integer(ng):
    return abs(math.remainder(2.0 * ng, 1.0)) <= DEGENERACY_TOL


def cpb_photon_system(
    atom: CPBParams, res: ResonatorParams, n_cut: int, n2: int, *, form: str = "exact"
) -> CoupledSystem:
    """Cooper pair box coupled capacitively to the series resonator (charge gauge).

    ``form="exact"`` expands ``4 E_C1 (n1 + n2 + ng)^2 + 4 E_C2 n2^2 + E_L2 theta2^2/2
    - E_J cos(theta1)`` around the renormalized resonator ``(E_C1 + E_C2, E_L2)``;
    the photon basis is rotated (``a -> i a``) so that ``n2`` is real.

    ``form="regrouped"`` writes the same model as bare box + ``omega_r a'a`` +
    ``2 omega_r E_C1/(E_C1+E_C2) x * i(a'-a) (x) (n1 + ng)`` with complex
    ladder operators. Both give the same spectrum.
    """
    if int(n_cut) != n_cut or n_cut < 1:
        raise InvalidDimensionError(f"n_cut must be a positive integer, got {n_cut!r}")
    _check_dims(n2=n2)
    basis = cpb_resonator_basis(atom, res, n2)
    h_atom, n_op = _cpb_block(atom.e_j, atom.e_c1, atom.ng, n_cut)
    dim_a = 2 * n_cut + 1
    charge = n_op + atom.ng * np.eye(dim_a)
    ia, i2 = np.eye(dim_a), np.eye(n2)
    h = tensor(h_atom, i2) + basis.omega * tensor(ia, number_op(n2))
    if form == "exact":
        a, ad = fock_ladder(n2)
        n2_rot = basis.n_zpf * (a + ad)
        h = h + 8.0 * atom.e_c1 * tensor(charge, n2_rot)
    elif form == "regrouped":
        a, ad = fock_ladder(n2)
        e_cr = atom.e_c1 + res.e_c2
        prefactor = 2.0 * basis.omega * (atom.e_c1 / e_cr) * x_charge(e_cr, res.e_l2)
        h = h + prefactor * tensor(charge, 1j * (ad - a))
    else:
        raise ContractError(f"form must be 'exact' or 'regrouped', got {form!r}")
    parity = None
    if _is_half_or_integer(atom.ng):
        # n1 + ng -> -(n1 + ng) together with n2 -> -n2; exact up to the
        # unpaired edge charge state of the truncated window
        parity = tensor(charge_reflection(n_cut, round(2.0 * atom.ng) / 2.0), fock_parity(n2))
    return CoupledSystem(
        hamiltonian=h if form == "regrouped" else np.real_if_close(h),
        dims=(dim_a, n2),
        parity=parity,
        ops={"n1": n_op, "omega_r": basis.omega},
    )


def build_cpb_photon(atom: CPBParams, res: ResonatorParams, n_cut: int, n2: int, **kwargs) -> np.ndarray:
    return cpb_photon_system(atom, res, n_cut, n2, **kwargs).hamiltonian


# ---------------------------------------------------------------- quantum Rabi


SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


def rabi_system(params: RabiParams, n_photon: int) -> CoupledSystem:
    """``omega_r a'a + (omega_a/2) sz + g (a + a') sx`` on 2 x ``n_photon`` states."""
    _check_dims(n_photon=n_photon)
    a, ad = fock_ladder(n_photon)
    h = (
        0.5 * params.omega_a * tensor(SIGMA_Z, np.eye(n_photon))
        + params.omega_r * tensor(np.eye(2), number_op(n_photon))
        + params.g * tensor(SIGMA_X, a + ad)
    )
    return CoupledSystem(
        hamiltonian=h,
        dims=(2, n_photon),
        parity=tensor(SIGMA_Z, fock_parity(n_photon)),
        ops={"omega_r": params.omega_r},
    )


def build_quantum_rabi(params: RabiParams, n_photon: int) -> np.ndarray:
    return rabi_system(params, n_photon).hamiltonian


def rabi_parity_chain(params: RabiParams, n_photon: int, sector: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of the Rabi Hamiltonian in one parity sector.

    The sector with parity ``sector`` (+1 or -1) is the chain
    ``|s0, 0>, |-s0, 1>, |s0, 2>, ...`` with ``s0 = sector``; it is tridiagonal:
    ``diag_m = omega_r m + sector (omega_a/2) (-1)^m``, ``off_m = g sqrt(m)``.
    """
    if sector not in (1, -1):
        raise ContractError("sector must be +1 or -1")
    m = np.arange(n_photon, dtype=float)
    diag = params.omega_r * m + sector * 0.5 * params.omega_a * (-1.0) ** m
    off = params.g * np.sqrt(m[1:])
    return diag, off


# ---------------------------------------------------------------- Rabi truncation


def x_flux(res: ResonatorParams) -> float:
    """Coupling ``(pi/2) (E_L2 / 2 E_C2)^(1/4)``, i.e. ``(1/2) sqrt(pi R_Q / Z_r)``."""
    if res.decoupled:
        return 0.0
    return 0.5 * math.pi * (res.e_l2 / (2.0 * res.e_c2)) ** 0.25


def x_charge(e_c_total: float, e_l2: float) -> float:
    """Coupling ``(1/2) (2 E_Cr / E_L2)^(1/4)``, i.e. ``(1/2) sqrt(pi Z_r / R_Q)``."""
    _positive("e_c_total", e_c_total)
    _positive("e_l2", e_l2)
    return 0.5 * (2.0 * e_c_total / e_l2) ** 0.25


def resonator_from_x(
    omega_r: float | None,
    x: float,
    branch: str = "flux",
    *,
    e_c1: float | None = None,
    e_c2: float | None = None,
) -> ResonatorParams:
    """Resonator energies realizing coupling ``x``.

    ``branch="flux"``: fixed bare frequency ``omega_r``;
    ``E_L2 = (omega_r/2)(2x/pi)^2``, ``E_C2 = E_L2 (pi/2x)^4 / 2``.

    ``branch="charge"``: fixed capacitances ``(e_c1, e_c2)``;
    ``E_L2 = (E_C1 + E_C2) / (8 x^4)``, so ``omega_r = (E_C1 + E_C2)/x^2``
    (``omega_r`` is ignored).
    """
    _non_negative("x", x)
    if branch == "flux":
        _positive("omega_r", omega_r)
        if x == 0:
            return ResonatorParams(0.0, math.inf, omega_r_limit=float(omega_r))
        e_l2 = 0.5 * omega_r * (2.0 * x / math.pi) ** 2
        e_c2 = 0.5 * e_l2 * (math.pi / (2.0 * x)) ** 4
        return ResonatorParams(e_l2, e_c2)
    if branch == "charge":
        if e_c1 is None or e_c2 is None:
            raise ContractError("charge branch needs e_c1 and e_c2")
        _positive("e_c1", e_c1)
        _positive("e_c2", e_c2)
        if x == 0:
            raise DomainError("x = 0 on the charge branch: the bare photon frequency diverges")
        return ResonatorParams((e_c1 + e_c2) / (8.0 * x**4), e_c2)
    raise ContractError(f"branch must be 'flux' or 'charge', got {branch!r}")


@dataclass(frozen=True)
class RabiTruncation:
    """Two-level truncation result: the Rabi parameters plus the inputs to ``g``."""

    rabi: RabiParams
    x: float
    matrix_element: float


def truncate_to_rabi(model: str, atom, res: ResonatorParams, *, n_levels: int | None = None) -> RabiTruncation:
    """Map a circuit at its degeneracy point onto a quantum Rabi model.

    fluxonium: ``g/omega_r = (|<0|theta1|1>|/pi) x_flux``, bare levels of
    ``(E_J, E_C1, E_L1)``, ``omega_r = sqrt(8 E_C2 E_L2)``.
    cpb: ``g/omega_r = E_C1/(E_C1+E_C2) * 2|<0|n1|1>| * x_charge``,
    ``omega_r = sqrt(8 (E_C1+E_C2) E_L2)``.
    """
    # local import: spectrum depends on this module's parameter types only indirectly
    from .spectrum import eigensolve, matrix_element

    if model == "fluxonium":
        if not is_flux_degenerate(atom.theta_ext):
            raise DomainError(
                f"fluxonium truncation requires theta_ext = pi (maximal frustration), got {atom.theta_ext!r}; "
                "away from it a transverse bias term spoils the Rabi form"
            )
        h, theta = build_fluxonium_bare(atom, n_levels or 150)
        result = eigensolve(h, 2)
        d = abs(matrix_element(result, theta, 0, 1))
        x = x_flux(res)
        omega_r = res.omega_r
        g = omega_r * (d / math.pi) * x
    elif model == "cpb":
        if not is_charge_degenerate(atom.ng):
            raise DomainError(
                f"Cooper pair box truncation requires ng = 1/2 (charge degeneracy), got {atom.ng!r}"
            )
        if res.decoupled:
            raise DomainError("the Cooper pair box needs a finite resonator inductance")
        h, n_op = build_cpb_bare(atom, n_levels or 10)
        result = eigensolve(h, 2)
        d = abs(matrix_element(result, n_op, 0, 1))
        e_cr = atom.e_c1 + res.e_c2
        x = x_charge(e_cr, res.e_l2)
        omega_r = math.sqrt(8.0 * e_cr * res.e_l2)
        g = omega_r * (atom.e_c1 / e_cr) * 2.0 * d * x
    else:
        raise ContractError(f"model must be 'fluxonium' or 'cpb', got {model!r}")
    omega_a = float(result.eigenvalues[1] - result.eigenvalues[0])
    return RabiTruncation(RabiParams(omega_r, omega_a, g), x, d)
