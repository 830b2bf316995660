"""Physical quantities extracted from eigenstates and bare spectra."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ContractError, InvalidDimensionError, ResonanceError

NORM_TOL = 1e-8
RESONANCE_TOL = 1e-3


@dataclass(frozen=True)
class EntanglementSpectrum:
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if abs(p.sum() - 1.0) > NORM_TOL:
            raise ContractError(f"entanglement spectrum sums to {p.sum():.12g}, expected 1")
        if np.any(np.diff(p) > 0):
            raise ContractError("entanglement spectrum must be non-increasing")

    def tail(self, start: int = 2) -> float:
        """Total weight beyond the leading ``start`` values."""
        return float(np.sum(self.probabilities[start:]))

    def participation_ratio(self) -> float:
        p = self.probabilities
        return float(1.0 / np.sum(p**2))


@dataclass(frozen=True)
class CatReference:
    alpha: float

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ContractError(f"alpha must be non-negative, got {self.alpha!r}")


@dataclass(frozen=True)
class DispersiveShift:
    chi01: float
    terms: tuple[tuple[str, int, float], ...]
    two_level: float

    def __post_init__(self):
        total = math.fsum(t[2] for t in self.terms)
        if abs(total - self.chi01) > 1e-12 * max(1.0, abs(total)):
            raise ContractError("chi01 must equal the sum of its terms")


def _as_matrix(state, dims):
    state = np.asarray(state)
    atom, photon = dims
    if state.ndim != 1 or state.shape[0] != atom * photon:
        raise InvalidDimensionError(f"state of length {state.shape} does not match dims {dims}")
    return state.reshape(atom, photon)


def photon_number(state: np.ndarray, dims: tuple[int, int]) -> float:
    """``<psi| 1 (x) a'a |psi>``."""
    m = _as_matrix(state, dims)
    weights = np.sum(np.abs(m) ** 2, axis=0)
    return float(weights @ np.arange(dims[1]))


def reduced_density_matrix(state: np.ndarray, dims: tuple[int, int], keep: str = "atom") -> np.ndarray:
    m = _as_matrix(state, dims)
    if keep == "atom":
        return m @ m.conj().T
    if keep == "photon":
        return m.T @ m.conj()
    raise ContractError(f"keep must be 'atom' or 'photon', got {keep!r}")


def entanglement_spectrum(state: np.ndarray, dims: tuple[int, int], trace_out: str = "photon") -> EntanglementSpectrum:
    """Eigenvalues of the reduced density matrix, descending.

    ``trace_out="photon"`` keeps the atom (``rho = M M^H`` with ``M`` the
    state reshaped to atom x photon); ``"atom"`` keeps the resonator.
    """
    if trace_out not in ("atom", "photon"):
        raise ContractError(f"trace_out must be 'atom' or 'photon', got {trace_out!r}")
    norm = np.vdot(state, state).real
    if abs(norm - 1.0) > NORM_TOL:
        raise ContractError(f"state is not normalized (norm^2 = {norm:.12g})")
    rho = reduced_density_matrix(state, dims, keep="atom" if trace_out == "photon" else "photon")
    p = np.linalg.eigvalsh(rho)[::-1]
    p = np.clip(p, 0.0, 1.0)
    p = p / p.sum()
    return EntanglementSpectrum(p)


def parity_expectation(state: np.ndarray, parity_op: np.ndarray) -> float:
    state = np.asarray(state)
    parity_op = np.asarray(parity_op)
    if parity_op.shape != (state.shape[0], state.shape[0]):
        raise InvalidDimensionError("parity operator does not match the state dimension")
    return float(np.real(np.vdot(state, parity_op @ state)))


def coherent_state(alpha: float, n_levels: int) -> np.ndarray:
    """Fock amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)`` (real ``alpha``), renormalized on the cut."""
    n = np.arange(n_levels)
    if alpha == 0:
        v = np.zeros(n_levels)
        v[0] = 1.0
        return v
    log_mag = -0.5 * alpha**2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    v = np.exp(log_mag) * np.sign(alpha) ** n
    return v / np.linalg.norm(v)


def cat_state(reference: CatReference, atom_left: np.ndarray, atom_right: np.ndarray, n_photon: int) -> np.ndarray:
    """``N (|alpha>|left> - |-alpha>|right>)`` on atom (x) photon."""
    plus = coherent_state(reference.alpha, n_photon)
    minus = coherent_state(-reference.alpha, n_photon)
    v = np.kron(atom_left, plus) - np.kron(atom_right, minus)
    return v / np.linalg.norm(v)


def cat_fidelity(state, dims, reference: CatReference, atom_subspace) -> float:
    """``|<cat|psi>|^2`` with the atomic partners ``atom_subspace = (left, right)``.

    At ``alpha = 0`` both coherent states are the vacuum and the cat reduces
    to the vacuum times ``(left - right)/sqrt(2)``.
    """
    left, right = (np.asarray(v) for v in atom_subspace)
    gram = np.array([[np.vdot(left, left), np.vdot(left, right)], [np.vdot(right, left), np.vdot(right, right)]])
    if np.max(np.abs(gram - np.eye(2))) > 1e-8:
        raise ContractError("atom_subspace vectors must be orthonormal")
    if left.shape[0] != dims[0]:
        raise InvalidDimensionError("atomic vectors do not match the atom dimension")
    _as_matrix(state, dims)
    cat = cat_state(reference, left, right, dims[1])
    return float(abs(np.vdot(cat, state)) ** 2)


def dressed_cat_partners(state, dims, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal atomic partners of ``|alpha>`` and ``|-alpha>`` for a cat-like state.

    The two-dimensional subspace is spanned by the leading eigenvectors of the
    reduced atomic density matrix. Inside it the partners are the
    projections of ``(<alpha| (x) 1)|psi>`` and ``-(<-alpha| (x) 1)|psi>``,
    symmetrically orthonormalized. (For nearly equal leading probabilities
    the individual eigenvectors are ill-conditioned but their span is not.)
    """
    m = _as_matrix(state, dims)
    rho = m @ m.conj().T
    _, vecs = np.linalg.eigh(rho)
    span = vecs[:, ::-1][:, :2]
    plus = coherent_state(alpha, dims[1])
    minus = coherent_state(-alpha, dims[1])
    left = span @ (span.conj().T @ (m @ plus.conj()))
    right = -(span @ (span.conj().T @ (m @ minus.conj())))
    if alpha == 0 or np.linalg.norm(left - right) < 1e-12 * max(np.linalg.norm(left), 1e-300):
        # partners coincide; fall back to the eigenbasis of rho
        return span[:, 0], span[:, 1]
    basis = np.column_stack([left, right])
    # Loewdin orthonormalization keeps both partners as close as possible to the projections
    u, _, vh = np.linalg.svd(basis, full_matrices=False)
    ortho = u @ vh
    return ortho[:, 0], ortho[:, 1]


def _chi_sum(energies, dipole, level, omega_r, x, n_sum, label):
    terms = []
    for i in range(n_sum):
        if i == level:
            continue
        w = energies[i] - energies[level]
        if abs(abs(w) - omega_r) <= RESONANCE_TOL:
            raise ResonanceError(
                f"transition {level}->{i} at {w:.6g} GHz is resonant with omega_r = {omega_r:.6g} GHz", level=i
            )
        terms.append((label, i, x**2 * omega_r**2 * 2.0 * w / (w**2 - omega_r**2) * abs(dipole[level, i]) ** 2))
    return terms


def dispersive_shift_chi01(bare_energies, dipole, omega_r: float, x: float, n_levels_sum: int | None = None) -> DispersiveShift:
    """Second-order dispersive shift of the 0-1 transition of a multilevel atom.

    ``chi01 = x^2 w_r^2 sum_{i!=0} 2 w_0i/(w_0i^2 - w_r^2) |d_0i|^2
    - x^2 w_r^2 sum_{j!=1} 2 w_1j/(w_1j^2 - w_r^2) |d_1j|^2`` with
    ``d = theta1/pi`` in the bare eigenbasis. It equals the change of the
    dressed 0-1 frequency per resonator photon. ``two_level`` keeps only the
    ``i = 1, j = 0`` terms.
    """
    energies = np.asarray(getattr(bare_energies, "eigenvalues", bare_energies), dtype=float)
    dipole = np.asarray(dipole)
    n_sum = len(energies) if n_levels_sum is None else int(n_levels_sum)
    if n_sum < 2 or n_sum > len(energies) or dipole.shape[0] < n_sum or dipole.shape[1] < n_sum:
        raise InvalidDimensionError("need energies and dipole elements for n_levels_sum >= 2 levels")
    plus = _chi_sum(energies, dipole, 0, omega_r, x, n_sum, "0")
    minus = [(lab, i, -v) for lab, i, v in _chi_sum(energies, dipole, 1, omega_r, x, n_sum, "1")]
    terms = tuple(plus + minus)
    two = math.fsum(v for lab, i, v in terms if (lab, i) in (("0", 1), ("1", 0)))
    return DispersiveShift(math.fsum(t[2] for t in terms), terms, two)


def lamb_shift_01(bare_energies, dipole, omega_r: float, x: float, n_levels_sum: int | None = None) -> float:
    """Second-order shift of the zero-photon 0-1 frequency of the fluxonium-resonator circuit.

    Includes the ``E_L2 theta1^2/2`` term to first order; per level
    ``delta_k = x^2 w_r sum_i |d_ki|^2 w_ki/(w_ki + w_r)``.
    """
    energies = np.asarray(getattr(bare_energies, "eigenvalues", bare_energies), dtype=float)
    dipole = np.asarray(dipole)
    n_sum = len(energies) if n_levels_sum is None else int(n_levels_sum)

    def delta(k):
        w = energies[:n_sum] - energies[k]
        return x**2 * omega_r * math.fsum(abs(dipole[k, i]) ** 2 * w[i] / (w[i] + omega_r) for i in range(n_sum))

    return delta(1) - delta(0)


def dressed_level(result, dims, atom_index: int, photon_index: int) -> float:
    """Energy of the computed eigenstate with most weight on ``|atom_index> (x) |photon_index>``.

    Meaningful when the atom basis is the bare atomic eigenbasis and the
    coupling is weak enough for product-state labels to survive.
    """
    vecs = np.asarray(result.eigenvectors)
    if vecs.shape[0] != dims[0] * dims[1]:
        raise InvalidDimensionError("result does not match dims")
    idx = atom_index * dims[1] + photon_index
    weights = np.abs(vecs[idx, :]) ** 2
    best = int(np.argmax(weights))
    if weights[best] < 0.5:
        raise ContractError(
            f"no computed state is dominated by |{atom_index},{photon_index}> (best weight {weights[best]:.3f})"
        )
    return float(result.eigenvalues[best])
