"""Elementary dense operators: Fock ladders, oscillator quadratures,
charge-basis operators, Kronecker products and spectral operator functions.

Conventions used throughout the package:

* phases are dimensionless, ``theta = 2*pi*phi/Phi0``; charges are counted in
  Cooper pairs, ``n = Q/2e``;
* every product space is ordered atom first, photon second
  (``np.kron(atom_op, photon_op)``).

Operators are plain ``numpy`` arrays. Real symmetric arrays are returned
where the operator happens to be real; callers must not rely on the dtype.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, InvalidDimensionError, ResourceError

HERMITIAN_RTOL = 1e-12
DEFAULT_MAX_DIM = 200_000


def max_dim() -> int:
    """Product-space dimension guard; ``USC_MAX_DIM`` overrides the default."""
    env = os.environ.get("USC_MAX_DIM")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ResourceError(f"USC_MAX_DIM must be an integer, got {env!r}") from None
        if value < 1:
            raise ResourceError("USC_MAX_DIM must be positive")
        return value
    return DEFAULT_MAX_DIM


def hermiticity_defect(m: np.ndarray) -> float:
    """Relative defect ``max|M - M^H| / max|M|`` (0 for the zero matrix)."""
    m = np.asarray(m)
    scale = np.max(np.abs(m)) if m.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)) / scale)


def is_hermitian(m: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and hermiticity_defect(m) <= rtol


def require_hermitian(m: np.ndarray, name: str = "operator", rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractError(f"{name} must be a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise InvalidDimensionError(f"{name} must have dimension >= 1")
    defect = hermiticity_defect(m)
    if defect > rtol:
        raise ContractError(f"{name} is not Hermitian (relative defect {defect:.3e})")
    return m


def _as_real_if_possible(m: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(m) and not np.any(m.imag):
        return np.ascontiguousarray(m.real)
    return m


def _check_levels(n_levels: int, name: str = "n_levels") -> int:
    if int(n_levels) != n_levels or n_levels < 1:
        raise InvalidDimensionError(f"{name} must be a positive integer, got {n_levels!r}")
    return int(n_levels)


def fock_ladder(n_levels: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated annihilation and creation operators on ``n_levels`` Fock states."""
    n_levels = _check_levels(n_levels)
    a = np.diag(np.sqrt(np.arange(1, n_levels, dtype=float)), k=1)
    return a, a.T.copy()


def number_op(n_levels: int) -> np.ndarray:
    n_levels = _check_levels(n_levels)
    return np.diag(np.arange(n_levels, dtype=float))


def fock_parity(n_levels: int) -> np.ndarray:
    """``exp(i*pi*a^dag a)``; also the reflection ``theta -> -theta`` in an oscillator basis."""
    n_levels = _check_levels(n_levels)
    return np.diag((-1.0) ** np.arange(n_levels))


@dataclass(frozen=True)
class OscillatorBasis:
    """Harmonic-oscillator basis of ``4 e_c n^2 + e_l theta^2 / 2``.

    Energies in GHz. ``omega``, ``theta_zpf`` and ``n_zpf`` are derived.
    """

    n_levels: int
    e_c: float
    e_l: float
    omega: float = field(init=False)
    theta_zpf: float = field(init=False)
    n_zpf: float = field(init=False)

    def __post_init__(self):
        _check_levels(self.n_levels)
        if not (self.e_c > 0 and self.e_l > 0):
            raise ContractError(f"oscillator energies must be positive, got e_c={self.e_c}, e_l={self.e_l}")
        object.__setattr__(self, "omega", float(np.sqrt(8.0 * self.e_c * self.e_l)))
        object.__setattr__(self, "theta_zpf", float((2.0 * self.e_c / self.e_l) ** 0.25))
        object.__setattr__(self, "n_zpf", float((self.e_l / (32.0 * self.e_c)) ** 0.25))


def quadratures(basis: OscillatorBasis) -> tuple[np.ndarray, np.ndarray]:
    """Phase ``theta = theta_zpf (a + a^dag)`` and charge ``n = i n_zpf (a^dag - a)``."""
    a, ad = fock_ladder(basis.n_levels)
    theta = basis.theta_zpf * (a + ad)
    n = 1j * basis.n_zpf * (ad - a)
    return theta, n


@dataclass(frozen=True)
class ChargeBasis:
    """Cooper-pair number states ``n = -n_cut .. n_cut`` with offset charge ``ng``."""

    n_cut: int
    ng: float = 0.0

    def __post_init__(self):
        _check_levels(self.n_cut, "n_cut")

    @property
    def dim(self) -> int:
        return 2 * self.n_cut + 1

    @property
    def charges(self) -> np.ndarray:
        return np.arange(-self.n_cut, self.n_cut + 1, dtype=float)


def charge_ops(basis: ChargeBasis) -> tuple[np.ndarray, np.ndarray]:
    """Number operator and ``cos(theta)`` (nearest-neighbour hopping / 2) in the charge basis."""
    n_op = np.diag(basis.charges)
    hop = np.full(basis.dim - 1, 0.5)
    cos_theta = np.diag(hop, 1) + np.diag(hop, -1)
    return n_op, cos_theta


def charge_reflection(n_cut: int, ng: float) -> np.ndarray:
    """Permutation ``n -> -2*ng - n`` for integer or half-integer ``ng``.

    Reflects ``n + ng`` about zero. Unless ``ng = 0`` some edge states of the
    window have no partner and map to themselves, which is harmless for
    converged truncations (their amplitude is negligible).
    """
    shift = -2.0 * ng
    if abs(shift - round(shift)) > 1e-12:
        raise ContractError(f"charge reflection requires integer or half-integer ng, got {ng}")
    shift = int(round(shift))
    dim = 2 * n_cut + 1
    p = np.zeros((dim, dim))
    for i, n in enumerate(range(-n_cut, n_cut + 1)):
        m = shift - n
        j = m + n_cut if -n_cut <= m <= n_cut else i
        p[j, i] = 1.0
    return p


def tensor(a: np.ndarray, b: np.ndarray, *, limit: int | None = None) -> np.ndarray:
    """Kronecker product ``a (x) b`` with the first factor's index slow."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise InvalidDimensionError("tensor factors must be square matrices")
    dim = a.shape[0] * b.shape[0]
    limit = max_dim() if limit is None else limit
    if dim > limit:
        raise ResourceError(f"product dimension {dim} exceeds the guard {limit} (set USC_MAX_DIM to raise it)")
    return np.kron(a, b)


def spectral_function(op: np.ndarray, func) -> np.ndarray:
    """Apply ``func`` to a Hermitian operator through its eigendecomposition."""
    op = require_hermitian(op, "operator")
    evals, evecs = np.linalg.eigh(op)
    out = (evecs * func(evals)) @ evecs.conj().T
    out = 0.5 * (out + out.conj().T)
    return _as_real_if_possible(out)


def operator_cosine(theta: np.ndarray, offset: float = 0.0) -> np.ndarray:
    """``cos(theta - offset)`` for Hermitian ``theta``."""
    return spectral_function(theta, lambda ev: np.cos(ev - offset))


def operator_cos_sin(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(cos theta, sin theta)`` from a single eigendecomposition.

    Handy when ``cos(theta - offset)`` is needed for many offsets:
    ``cos(theta - t) = cos(theta) cos t + sin(theta) sin t``.
    """
    theta = require_hermitian(theta, "theta")
    evals, evecs = np.linalg.eigh(theta)
    vh = evecs.conj().T
    c = (evecs * np.cos(evals)) @ vh
    s = (evecs * np.sin(evals)) @ vh
    c = _as_real_if_possible(0.5 * (c + c.conj().T))
    s = _as_real_if_possible(0.5 * (s + s.conj().T))
    return c, s
