"""Lowest-k eigensolver with a deterministic phase convention, parity-resolved
solving for nearly degenerate doublets, truncation convergence and
transition extraction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import ContractError, InvalidDimensionError, ResourceError
from .operators import require_hermitian

log = logging.getLogger(__name__)

DENSE_LIMIT = 4000
TIE_TOL = 1e-12
ITERATIVE_TOL = 1e-8
# dense inputs above DENSE_LIMIT with less fill than this go through sparse LU
SPARSE_FILL = 0.02


@dataclass
class SpectralResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    basis_dims: tuple[int, ...] = ()
    converged: bool = True
    cutoff_history: list = field(default_factory=list)
    parities: np.ndarray | None = None

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def state(self, i: int) -> np.ndarray:
        return self.eigenvectors[:, i]


@dataclass(frozen=True)
class TransitionSet:
    """Transition frequencies ``w_ij = E_j - E_i`` in GHz."""

    items: tuple[tuple[int, int, float], ...]

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def get(self, i: int, j: int) -> float:
        for a, b, w in self.items:
            if (a, b) == (i, j):
                return w
            if (a, b) == (j, i):
                return -w
        raise KeyError((i, j))


def fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of each column real and positive.

    Magnitudes equal to the maximum within a relative 1e-9 count as ties and
    the first such index wins, so the choice does not depend on round-off.
    """
    vectors = np.array(vectors, copy=True)
    if vectors.ndim == 1:
        return fix_phase(vectors[:, None])[:, 0]
    mags = np.abs(vectors)
    for c in range(vectors.shape[1]):
        col = mags[:, c]
        idx = int(np.argmax(col >= col.max() * (1.0 - 1e-9)))
        pivot = vectors[idx, c]
        vectors[:, c] *= np.conj(pivot) / abs(pivot)
    if np.iscomplexobj(vectors) and not np.any(vectors.imag):
        vectors = vectors.real
    return vectors


def _lowest_dense(h, k):
    vals, vecs = scipy.linalg.eigh(h, subset_by_index=(0, k - 1), driver="evr")
    return vals, vecs


def _lowest_sparse(h, k):
    """Shift-invert Lanczos just below the ground state."""
    h = scipy.sparse.csc_matrix(h)
    e0 = scipy.sparse.linalg.eigsh(h, k=1, which="SA", tol=ITERATIVE_TOL, return_eigenvectors=False)[0]
    sigma = e0 - max(1e-3 * abs(e0), 1e-2)
    vals, vecs = scipy.sparse.linalg.eigsh(h, k=k, sigma=sigma, which="LM", tol=ITERATIVE_TOL * 1e-2)
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def _lowest(h, k):
    dim = h.shape[0]
    if dim <= DENSE_LIMIT or k >= dim - 1:
        if scipy.sparse.issparse(h):
            h = h.toarray()
        return _lowest_dense(h, k)
    if scipy.sparse.issparse(h):
        return _lowest_sparse(h, k)
    if np.count_nonzero(h) < SPARSE_FILL * dim * dim:
        return _lowest_sparse(scipy.sparse.csc_matrix(h), k)
    vals, vecs = scipy.sparse.linalg.eigsh(h, k=k, which="SA", tol=ITERATIVE_TOL * 1e-2)
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def _require_hermitian_any(h):
    if not scipy.sparse.issparse(h):
        return require_hermitian(h, "Hamiltonian")
    if h.shape[0] != h.shape[1]:
        raise ContractError(f"Hamiltonian must be square, got shape {h.shape}")
    scale = abs(h).max()
    defect = abs(h - h.conj().T).max() / scale if scale else 0.0
    if defect > 1e-12:
        raise ContractError(f"Hamiltonian is not Hermitian (relative defect {defect:.3e})")
    return h.tocsr()


def parity_sectors(parity: np.ndarray) -> dict[int, scipy.sparse.csr_matrix]:
    """Isometries onto the +1 and -1 eigenspaces of a signed-permutation involution."""
    parity = np.asarray(parity)
    dim = parity.shape[0]
    if np.count_nonzero(parity - np.diag(np.diag(parity))) == 0:
        d = np.real(np.diag(parity))
        out = {}
        for s in (1, -1):
            idx = np.flatnonzero(np.isclose(d, s))
            out[s] = scipy.sparse.csr_matrix(
                (np.ones(len(idx)), (idx, np.arange(len(idx)))), shape=(dim, len(idx))
            )
        if sum(m.shape[1] for m in out.values()) != dim:
            raise ContractError("diagonal parity must have entries +-1")
        return out
    rows = {1: [], -1: []}
    cols = {1: [], -1: []}
    vals = {1: [], -1: []}
    count = {1: 0, -1: 0}
    seen = np.zeros(dim, dtype=bool)
    for i in range(dim):
        if seen[i]:
            continue
        nz = np.flatnonzero(parity[:, i])
        if len(nz) != 1 or not np.isclose(abs(parity[nz[0], i]), 1.0):
            raise ContractError("parity must be a signed permutation matrix")
        j, s = int(nz[0]), int(round(np.real(parity[nz[0], i])))
        seen[i] = seen[j] = True
        if j == i:
            rows[s].append(i), cols[s].append(count[s]), vals[s].append(1.0)
            count[s] += 1
            continue
        r = 1.0 / np.sqrt(2.0)
        for sector, sign in ((1, s), (-1, -s)):
            rows[sector] += [i, j]
            cols[sector] += [count[sector]] * 2
            vals[sector] += [r, sign * r]
            count[sector] += 1
    return {
        s: scipy.sparse.csr_matrix((vals[s], (rows[s], cols[s])), shape=(dim, count[s])) for s in (1, -1)
    }


def _order_with_ties(vals, vecs, parities):
    order = list(np.argsort(vals, kind="stable"))

    def key(i):
        if parities is not None:
            return -parities[i]
        return -np.real(vecs[0, i])

    # sort runs of near-degenerate levels by the tie-break key
    changed = True
    while changed:
        changed = False
        for p in range(len(order) - 1):
            a, b = order[p], order[p + 1]
            if abs(vals[a] - vals[b]) < TIE_TOL and key(b) < key(a):
                order[p], order[p + 1] = b, a
                changed = True
    return np.array(order, dtype=int)


def eigensolve(
    h: np.ndarray,
    k: int | None = None,
    *,
    parity: np.ndarray | None = None,
    basis_dims: tuple[int, ...] = (),
) -> SpectralResult:
    """Lowest ``k`` eigenpairs of a Hermitian matrix, ascending and phase-fixed.

    With ``parity`` (a signed-permutation involution commuting with ``h``)
    each symmetry sector is solved separately and the eigenvalues are
    refined by Rayleigh quotients inside the sector. This resolves doublet
    splittings far below ``eps * ||h||`` and returns exact parity eigenstates.
    """
    h = _require_hermitian_any(h)
    dim = h.shape[0]
    k = dim if k is None else k
    if int(k) != k or not 1 <= k <= dim:
        raise InvalidDimensionError(f"k must be in [1, {dim}], got {k!r}")
    k = int(k)
    if parity is None:
        vals, vecs = _lowest(h, k)
        pars = None
    else:
        parity = parity.toarray() if scipy.sparse.issparse(parity) else np.asarray(parity)
        if parity.shape != h.shape:
            raise InvalidDimensionError("parity and Hamiltonian shapes differ")
        all_vals, all_vecs, all_pars = [], [], []
        for s, iso in parity_sectors(parity).items():
            n_s = iso.shape[1]
            if n_s == 0:
                continue
            hs = iso.T @ h @ iso if scipy.sparse.issparse(h) else np.asarray(iso.T @ np.asarray(iso.T @ h.T).T)
            hs = 0.5 * (hs + hs.conj().T)
            ks = min(k, n_s)
            v_s, u_s = _lowest(hs, ks)
            # Rayleigh refinement; accurate to ~eps * (state energy scale)
            hu = hs @ u_s
            v_s = np.real(np.einsum("ij,ij->j", u_s.conj(), hu)) / np.real(np.einsum("ij,ij->j", u_s.conj(), u_s))
            all_vals.append(v_s)
            all_vecs.append(np.asarray(iso @ u_s))
            all_pars.append(np.full(ks, float(s)))
        vals = np.concatenate(all_vals)
        vecs = np.concatenate(all_vecs, axis=1)
        pars = np.concatenate(all_pars)
    vecs = fix_phase(vecs)
    order = _order_with_ties(vals, vecs, pars)[:k]
    return SpectralResult(
        eigenvalues=np.asarray(vals)[order],
        eigenvectors=vecs[:, order],
        basis_dims=tuple(basis_dims) or (dim,),
        parities=None if pars is None else pars[order],
    )


def solve_system(system, k: int = 12) -> SpectralResult:
    """Eigensolve a ``CoupledSystem`` using its parity when it has one."""
    k = min(k, system.dim)
    return eigensolve(system.hamiltonian, k, parity=system.parity, basis_dims=system.dims)


def residuals(h: np.ndarray, result: SpectralResult) -> np.ndarray:
    """``||H v - E v||`` for each returned pair."""
    v = result.eigenvectors
    return np.linalg.norm(np.asarray(h @ v) - v * result.eigenvalues, axis=0)


@dataclass(frozen=True)
class CutoffRecord:
    dims: tuple[int, ...]
    drift: float | None


def converge_truncation(
    builder: Callable,
    k: int = 12,
    tol: float = 1e-4,
    start_dims: tuple[int, ...] = (60, 60),
    step: int | tuple[int, ...] = 20,
    max_dims: int | tuple[int, ...] = 200,
) -> SpectralResult:
    """Grow truncation dimensions until the lowest ``k`` levels move less than ``tol``.

    ``builder(dims)`` returns either a Hamiltonian or a ``CoupledSystem``.
    The returned result is the largest truncation computed; ``converged`` is
    False when ``max_dims`` was reached first.
    """
    if not tol > 0:
        raise ContractError("tol must be positive")
    start = tuple(int(d) for d in np.atleast_1d(start_dims))
    steps = tuple(int(s) for s in np.broadcast_to(step, len(start)))
    caps = tuple(int(m) for m in np.broadcast_to(max_dims, len(start)))
    if any(s > m for s, m in zip(start, caps)):
        raise ResourceError(f"start dims {start} exceed max dims {caps}")

    def solve(dims):
        built = builder(dims if len(dims) > 1 else dims[0])
        if hasattr(built, "hamiltonian"):
            kk = min(k, built.dim)
            return eigensolve(built.hamiltonian, kk, parity=built.parity, basis_dims=built.dims)
        return eigensolve(built, min(k, built.shape[0]), basis_dims=dims)

    dims = start
    result = solve(dims)
    history = [CutoffRecord(dims, None)]
    converged = False
    while True:
        if dims == caps:
            break
        new_dims = tuple(min(d + s, m) for d, s, m in zip(dims, steps, caps))
        new = solve(new_dims)
        n = min(result.k, new.k)
        drift = float(np.max(np.abs(new.eigenvalues[:n] - result.eigenvalues[:n])))
        history.append(CutoffRecord(new_dims, drift))
        log.debug("truncation %s drift %.3e", new_dims, drift)
        dims, result = new_dims, new
        if drift < tol:
            converged = True
            break
    result.converged = converged
    result.cutoff_history = history
    return result


def transitions(result: SpectralResult, from_states=(0,)) -> TransitionSet:
    """All ``w_ij = E_j - E_i`` for ``i`` in ``from_states`` and ``j > i``."""
    items = []
    for i in from_states:
        if not 0 <= i < result.k:
            raise IndexError(f"state index {i} outside the {result.k} computed levels")
        for j in range(i + 1, result.k):
            items.append((i, j, float(result.eigenvalues[j] - result.eigenvalues[i])))
    return TransitionSet(tuple(items))


def matrix_element(result: SpectralResult, op: np.ndarray, i: int, j: int) -> complex:
    """``<psi_i| op |psi_j>`` under the fixed phase convention."""
    op = np.asarray(op)
    dim = result.eigenvectors.shape[0]
    if op.shape != (dim, dim):
        raise InvalidDimensionError(f"operator shape {op.shape} does not match state dimension {dim}")
    for idx in (i, j):
        if not 0 <= idx < result.k:
            raise IndexError(f"state index {idx} outside the {result.k} computed levels")
    vi, vj = result.eigenvectors[:, i], result.eigenvectors[:, j]
    return complex(np.vdot(vi, op @ vj))


# ------------------------------------------------------------ high precision


def _sturm_count(diag, off2, lam):
    """Number of eigenvalues below ``lam`` of a symmetric tridiagonal matrix."""
    count = 0
    d = diag[0] - lam
    if d < 0:
        count += 1
    for i in range(1, len(diag)):
        if d == 0:
            d = mpmath.mpf(10) ** (-mpmath.mp.dps * 2)
        d = diag[i] - lam - off2[i - 1] / d
        if d < 0:
            count += 1
    return count


def tridiagonal_lowest_mp(diag, off, n: int = 2, dps: int = 50) -> list:
    """Lowest ``n`` eigenvalues of a real symmetric tridiagonal matrix by
    Sturm-sequence bisection in ``dps``-digit arithmetic (mpmath values)."""
    with mpmath.workdps(dps):
        d = [mpmath.mpf(float(v)) for v in diag]
        o2 = [mpmath.mpf(float(v)) ** 2 for v in off]
        o = [abs(mpmath.mpf(float(v))) for v in off]
        lo = min(d[i] - (o[i - 1] if i else 0) - (o[i] if i < len(o) else 0) for i in range(len(d)))
        hi = max(d[i] + (o[i - 1] if i else 0) + (o[i] if i < len(o) else 0) for i in range(len(d)))
        eps = mpmath.mpf(10) ** (-(dps - 8)) * max(abs(lo), abs(hi), 1)
        out = []
        for target in range(n):
            a, b = lo, hi
            while b - a > eps:
                mid = (a + b) / 2
                if _sturm_count(d, o2, mid) > target:
                    b = mid
                else:
                    a = mid
            out.append((a + b) / 2)
        return out


def rabi_splitting_mp(params, n_photon: int = 120, dps: int = 50) -> float:
    """Gap between the two lowest quantum Rabi levels in extended precision.

    Each parity sector is a tridiagonal chain; the lowest two levels of each
    are located by bisection and merged. Usable far below double precision
    (the gap closes like ``exp(-2 (g/omega_r)^2)``).
    """
    from .models import rabi_parity_chain

    levels = []
    for sector in (1, -1):
        diag, off = rabi_parity_chain(params, n_photon, sector)
        levels += tridiagonal_lowest_mp(diag, off, 2, dps)
    with mpmath.workdps(dps):
        levels.sort()
        return float(levels[1] - levels[0])
