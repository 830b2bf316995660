"""Least-squares fit of bare-fluxonium parameters to a flux-dependent spectrum."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import ContractError
from .models import FluxoniumParams, _compressed_quadratures_for
from .operators import OscillatorBasis, number_op, operator_cos_sin

BARRIER = 1e6
MIN_FLUX_POINTS = 10


@dataclass(frozen=True)
class RenormalizedFitResult:
    e_j_star: float
    e_c_star: float
    e_l_star: float
    residual: float
    iterations: int
    converged: bool
    init_residual: float
    per_transition: tuple[float, ...]

    def __post_init__(self):
        if not self.residual >= 0:
            raise ContractError("residual must be non-negative")
        if min(self.e_j_star, self.e_c_star, self.e_l_star) <= 0:
            raise ContractError("fitted energies must be positive")

    @property
    def params(self) -> tuple[float, float, float]:
        return self.e_j_star, self.e_c_star, self.e_l_star


def bare_transitions(e_j, e_c, e_l, flux, n_transitions, n_levels=60):
    """``w_0j``, ``j = 1..n_transitions``, of a bare fluxonium at each flux point.

    One oscillator basis and one ``cos/sin(theta)`` serve every flux point.
    """
    basis = OscillatorBasis(n_levels, e_c, e_l)
    theta, _, _, _ = _compressed_quadratures_for(basis)
    h0 = basis.omega * number_op(n_levels)
    cos_t, sin_t = operator_cos_sin(theta)
    out = np.empty((len(flux), n_transitions))
    for i, t in enumerate(flux):
        h = h0 - e_j * (math.cos(t) * cos_t + math.sin(t) * sin_t)
        ev = scipy.linalg.eigh(h, eigvals_only=True, subset_by_index=(0, n_transitions), driver="evr")
        out[i] = ev[1:] - ev[0]
    return out


def target_from_table(table, n_transitions):
    """Flux points and the lowest ``n_transitions`` transitions of a sweep table."""
    if table.axis != "theta_ext":
        raise ContractError(f"fit target must be swept over theta_ext, got axis {table.axis!r}")
    cols = [f"w0{j}" for j in range(1, n_transitions + 1)]
    missing = [c for c in cols if c not in table.columns]
    if missing:
        raise ContractError(f"fit target lacks transition columns {missing}")
    bad = set(table.failed)
    keep = [i for i in range(len(table.rows)) if i not in bad]
    flux = table.column("theta_ext")[keep]
    data = np.column_stack([table.column(c)[keep] for c in cols])
    if len(flux) < MIN_FLUX_POINTS:
        raise ContractError(f"fit needs at least {MIN_FLUX_POINTS} valid flux points, got {len(flux)}")
    return flux, data


def _rms(model, data):
    # fsum is exactly rounded, so the value does not depend on the point order
    return math.sqrt(math.fsum(((model - data) ** 2).ravel()) / data.size)


def fit_renormalized_fluxonium(
    target,
    n_transitions: int,
    init: FluxoniumParams,
    *,
    seeds=(1, 2, 3),
    spread: float = 0.2,
    n_levels: int = 60,
    max_iter: int = 3000,
) -> RenormalizedFitResult:
    """Nelder-Mead fit of ``(E_J, E_C, E_L)`` to the target transitions.

    ``target`` is a ``SweepTable`` over ``theta_ext`` or a ``(flux, data)``
    pair with ``data[:, j-1] = w_0j``. The simplex is started from ``init``
    and from one +-``spread`` perturbation per seed; the best point is
    polished by a final run. Non-positive energies hit a barrier. The
    returned residual (RMS, GHz) never exceeds the one at ``init``.
    """
    if n_transitions < 1:
        raise ContractError("n_transitions must be >= 1")
    if isinstance(target, tuple):
        flux, data = (np.asarray(v, dtype=float) for v in target)
        data = data.reshape(len(flux), -1)
        if data.shape[1] < n_transitions or len(flux) < MIN_FLUX_POINTS:
            raise ContractError(f"target needs >= {n_transitions} transitions over >= {MIN_FLUX_POINTS} flux points")
        data = data[:, :n_transitions]
    else:
        flux, data = target_from_table(target, n_transitions)

    def objective(p):
        if np.any(p <= 0):
            return BARRIER * (1.0 + float(np.sum(np.clip(-p, 0, None))))
        try:
            model = bare_transitions(*p, flux, n_transitions, n_levels)
        except (np.linalg.LinAlgError, ValueError):
            return BARRIER
        return _rms(model, data) ** 2

    x_init = np.array([init.e_j, init.e_c1, init.e_l1], dtype=float)
    f_init = objective(x_init)
    best_x, best_f = x_init, f_init
    iterations = 0
    opts = dict(maxiter=max_iter, xatol=1e-11, fatol=1e-20)
    starts = [x_init] + [x_init * (1.0 + np.random.default_rng(s).uniform(-spread, spread, 3)) for s in seeds]
    for x0 in starts:
        res = scipy.optimize.minimize(objective, x0, method="Nelder-Mead", options=opts)
        iterations += int(res.nit)
        if res.fun < best_f:
            best_x, best_f = np.array(res.x), float(res.fun)
    polish = scipy.optimize.minimize(objective, best_x, method="Nelder-Mead", options=opts)
    iterations += int(polish.nit)
    if polish.fun <= best_f:
        best_x, best_f = np.array(polish.x), float(polish.fun)
    model = bare_transitions(*best_x, flux, n_transitions, n_levels)
    per = tuple(math.sqrt(math.fsum((model[:, j] - data[:, j]) ** 2) / len(flux)) for j in range(n_transitions))
    return RenormalizedFitResult(
        e_j_star=float(best_x[0]),
        e_c_star=float(best_x[1]),
        e_l_star=float(best_x[2]),
        residual=math.sqrt(best_f),
        iterations=iterations,
        converged=bool(polish.success),
        init_residual=math.sqrt(f_init),
        per_transition=per,
    )
