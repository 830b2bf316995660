"""Parameter sweeps over the circuit models."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ConfigError, ContractError, UsCqedError
from .models import (
    CPBParams,
    CoupledLCParams,
    FluxoniumParams,
    RabiParams,
    ResonatorParams,
    build_capshunted_fluxonium,
    build_coupled_lc,
    coupled_lc_probe,
    cpb_photon_system,
    fluxonium_photon_system,
    normal_modes_analytic,
    rabi_system,
    resonator_from_x,
    single_excitations,
    truncate_to_rabi,
)
from .observables import entanglement_spectrum, parity_expectation, photon_number
from .operators import fock_parity
from .spectrum import converge_truncation, eigensolve, rabi_splitting_mp

log = logging.getLogger(__name__)

MODELS = ("coupled-lc", "fluxonium", "cpb", "rabi", "capshunt")
AXES = {
    "coupled-lc": ("x", "x_squared"),
    "fluxonium": ("x", "x_squared", "theta_ext"),
    "cpb": ("x", "x_squared", "ng"),
    "rabi": ("x", "x_squared"),
    "capshunt": ("x", "x_squared"),
}
OUTPUTS = ("levels", "transitions", "photon_number", "entanglement", "parity", "rabi_overlay", "capshunt_overlay", "analytic")
REQUIRED = {
    "coupled-lc": ("omega1", "omega2"),
    "fluxonium": ("e_j", "e_c1", "e_l1", "theta_ext", "omega_r"),
    "cpb": ("e_j", "e_c1", "e_c2", "ng"),
    "rabi": ("omega_r", "omega_a"),
    "capshunt": ("e_j", "e_c1", "e_l1", "theta_ext", "omega_r"),
}
# an axis-less sweep must supply the coupling itself
COUPLING_KEYS = {
    "coupled-lc": ("x",),
    "fluxonium": ("x",),
    "cpb": ("x", "e_l2"),
    "rabi": ("g", "x"),
    "capshunt": ("x", "e_c2"),
}
ATOM_FOCK = 200


@dataclass(frozen=True)
class TruncationPolicy:
    start: tuple[int, ...]
    step: tuple[int, ...]
    max: tuple[int, ...]
    tol: float = 1e-4
    k: int = 12


DEFAULT_POLICIES = {
    # fluxonium dims are (dressed atom levels, photon levels)
    "fluxonium": TruncationPolicy((20, 50), (10, 20), (60, 160)),
    "cpb": TruncationPolicy((6, 60), (2, 20), (12, 200)),
    "rabi": TruncationPolicy((60,), (20,), (240,)),
    "coupled-lc": TruncationPolicy((30, 30), (20, 20), (160, 160)),
    "capshunt": TruncationPolicy((100,), (40,), (300,)),
}


def _validate(spec):
    if spec.model not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}, got {spec.model!r}")
    if spec.axis not in AXES[spec.model]:
        raise ConfigError(f"axis {spec.axis!r} is not valid for model {spec.model!r}; choose from {AXES[spec.model]}")
    unknown = [o for o in spec.outputs if o not in OUTPUTS]
    if unknown:
        raise ConfigError(f"unknown outputs {unknown}; choose from {OUTPUTS}")
    missing = [k for k in REQUIRED[spec.model] if k not in spec.fixed and k != spec.axis]
    if missing:
        raise ConfigError(f"model {spec.model!r} needs parameters {missing}")
    if spec.axis in ("theta_ext", "ng") and not any(k in spec.fixed for k in COUPLING_KEYS[spec.model]):
        raise ConfigError(f"model {spec.model!r} needs one of {COUPLING_KEYS[spec.model]} when sweeping {spec.axis}")
    if int(spec.n_levels) != spec.n_levels or spec.n_levels < 2:
        raise ConfigError("n_levels must be an integer >= 2")
    if spec.workers < 1:
        raise ConfigError("workers must be >= 1")


@dataclass(frozen=True)
class PointSpec:
    """A single evaluation; ``value`` is the coordinate on ``axis``."""

    model: str
    axis: str
    value: float
    fixed: dict
    outputs: tuple[str, ...] = ("transitions",)
    n_levels: int = 6
    policy: TruncationPolicy | None = None
    workers: int = 1

    def __post_init__(self):
        _validate(self)
        if not math.isfinite(self.value):
            raise ConfigError(f"{self.axis} must be finite")

    def grid(self) -> np.ndarray:
        return np.array([float(self.value)])


@dataclass(frozen=True)
class SweepSpec:
    model: str
    axis: str
    range: tuple[float, float, int]
    fixed: dict
    outputs: tuple[str, ...] = ("transitions",)
    n_levels: int = 6
    policy: TruncationPolicy | None = None
    workers: int = 1

    def __post_init__(self):
        _validate(self)
        lo, hi, points = self.range
        if int(points) != points or points < 2:
            raise ConfigError(f"range needs at least 2 points, got {points!r}")
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ConfigError("range bounds must be finite")
        if lo == hi:
            raise ConfigError("range bounds must be distinct")

    def grid(self) -> np.ndarray:
        """Ascending grid; independent of the order the bounds were given in."""
        lo, hi, points = self.range
        lo, hi = min(lo, hi), max(lo, hi)
        return np.linspace(lo, hi, int(points))


@dataclass
class SweepTable:
    axis: str
    columns: list[str]
    rows: list[list]
    header: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([np.nan if r[j] is None else r[j] for r in self.rows], dtype=float)

    @property
    def failed(self) -> list[int]:
        j = self.columns.index("error")
        return [i for i, r in enumerate(self.rows) if r[j]]


# ------------------------------------------------------------ point models


def _coupling_x(params, axis_name, value):
    if axis_name == "x":
        return value
    if axis_name == "x_squared":
        if value < 0:
            raise ConfigError("x_squared must be non-negative")
        return math.sqrt(value)
    return params.get("x")


def point_params(spec: SweepSpec, value: float) -> dict:
    p = dict(spec.fixed)
    if spec.axis in ("x", "x_squared"):
        p["x"] = _coupling_x(p, spec.axis, value)
    else:
        p[spec.axis] = value
    return p


def _fluxonium_res(p):
    return resonator_from_x(p["omega_r"], p["x"], "flux")


def _cpb_res(p):
    if p.get("x") is not None:
        return resonator_from_x(None, p["x"], "charge", e_c1=p["e_c1"], e_c2=p["e_c2"])
    return ResonatorParams(p["e_l2"], p["e_c2"])


def _rabi_params(p):
    g = p["x"] * p["omega_r"] if p.get("x") is not None else p["g"]
    return RabiParams(p["omega_r"], p["omega_a"], g)


def _capshunt_ec2(p):
    if p.get("x") is not None:
        res = resonator_from_x(p["omega_r"], p["x"], "flux")
        return res.e_c2
    return p["e_c2"]


def validate_point(model: str, p: dict) -> None:
    """Check the physical parameters of one point without building anything.

    Raises ``ContractError`` naming the offending field. Coupling values
    that only fail inside a truncation map (e.g. ``x = 0`` on the charge
    branch) are left to the per-point error handling.
    """
    if model in ("fluxonium", "capshunt"):
        FluxoniumParams(p["e_j"], p["e_c1"], p["e_l1"], p["theta_ext"])
    elif model == "cpb":
        CPBParams(p["e_j"], p["e_c1"], p["ng"])
        for key in ("e_c2", "e_l2"):
            if p.get(key) is not None and not (math.isfinite(p[key]) and p[key] > 0):
                raise ContractError(f"{key} must be positive and finite, got {p[key]!r}")
    elif model == "rabi":
        RabiParams(p["omega_r"], p["omega_a"], p["x"] * p["omega_r"] if p.get("x") is not None else p["g"])
    elif model == "coupled-lc":
        CoupledLCParams(p["omega1"], p["omega2"], p["x"])
    if "omega_r" in p and not (math.isfinite(p["omega_r"]) and p["omega_r"] > 0):
        raise ContractError(f"omega_r must be positive and finite, got {p['omega_r']!r}")
    if p.get("x") is not None and not (math.isfinite(p["x"]) and p["x"] >= 0):
        raise ContractError(f"x must be non-negative and finite, got {p['x']!r}")


def system_builder(model: str, p: dict):
    """``dims -> CoupledSystem | ndarray`` for a fully specified point."""
    if model == "fluxonium":
        atom = FluxoniumParams(p["e_j"], p["e_c1"], p["e_l1"], p["theta_ext"])
        res = _fluxonium_res(p)
        fock = int(p.get("atom_fock", ATOM_FOCK))
        return lambda dims: fluxonium_photon_system(atom, res, dims[0], dims[1], atom_fock=fock)
    if model == "cpb":
        atom = CPBParams(p["e_j"], p["e_c1"], p["ng"])
        res = _cpb_res(p)
        return lambda dims: cpb_photon_system(atom, res, dims[0], dims[1])
    if model == "rabi":
        rp = _rabi_params(p)
        return lambda n: rabi_system(rp, n)
    if model == "coupled-lc":
        lc = CoupledLCParams(p["omega1"], p["omega2"], p["x"])
        gauge = p.get("gauge", "flux")
        return lambda dims: build_coupled_lc(lc, gauge, dims[0], dims[1], sparse=True)
    if model == "capshunt":
        atom = FluxoniumParams(p["e_j"], p["e_c1"], p["e_l1"], p["theta_ext"])
        e_c2 = _capshunt_ec2(p)
        return lambda n: build_capshunted_fluxonium(atom, e_c2, n)
    raise ConfigError(f"unknown model {model!r}")


def _last_system(model, p, dims):
    built = system_builder(model, p)(dims if len(dims) > 1 else dims[0])
    return built


def capshunt_w01(p: dict, n_levels: int = 200) -> float:
    atom = FluxoniumParams(p["e_j"], p["e_c1"], p["e_l1"], p["theta_ext"])
    h = build_capshunted_fluxonium(atom, _capshunt_ec2(p), n_levels)
    parity = fock_parity(n_levels) if math.remainder(p["theta_ext"], math.pi) == 0 else None
    r = eigensolve(h, 2, parity=parity)
    return float(r.eigenvalues[1] - r.eigenvalues[0])


def rabi_overlay_w01(model: str, p: dict) -> float:
    """Lowest gap of the two-level (Rabi) truncation at this point."""
    if model == "fluxonium":
        atom = FluxoniumParams(p["e_j"], p["e_c1"], p["e_l1"], p["theta_ext"])
        tr = truncate_to_rabi("fluxonium", atom, _fluxonium_res(p))
    elif model == "cpb":
        atom = CPBParams(p["e_j"], p["e_c1"], p["ng"])
        tr = truncate_to_rabi("cpb", atom, _cpb_res(p))
    elif model == "rabi":
        return rabi_splitting_mp(_rabi_params(p), 160)
    else:
        raise ConfigError(f"no Rabi overlay for model {model!r}")
    rp = tr.rabi
    n_photon = max(120, int(4 * (rp.g / rp.omega_r) ** 2 + 60))
    return rabi_splitting_mp(rp, n_photon)


def _columns(spec: SweepSpec) -> list[str]:
    cols = [spec.axis]
    k = spec.n_levels
    if "levels" in spec.outputs:
        cols += [f"E{j}" for j in range(k)]
    if "transitions" in spec.outputs:
        cols += [f"w0{j}" for j in range(1, k)]
    if "photon_number" in spec.outputs:
        cols.append("photon_number")
    if "entanglement" in spec.outputs:
        cols += ["p1", "p2", "p_tail"]
    if "parity" in spec.outputs:
        cols += ["parity0", "parity1"]
    if "rabi_overlay" in spec.outputs:
        cols.append("rabi_w01")
    if "capshunt_overlay" in spec.outputs:
        cols.append("capshunt_w01")
    if "analytic" in spec.outputs:
        cols += ["analytic_high", "analytic_low", "numeric_high", "numeric_low"]
    cols += ["dims", "converged", "error"]
    return cols


def evaluate_point(spec: SweepSpec, value: float) -> dict:
    p = point_params(spec, value)
    policy = spec.policy or DEFAULT_POLICIES[spec.model]
    k = spec.n_levels
    n_track = max(k, policy.k)
    if "analytic" in spec.outputs and spec.model == "coupled-lc":
        if p["omega1"] != p["omega2"]:
            raise ConfigError("analytic normal modes need omega1 == omega2")
        analytic = normal_modes_analytic(p["omega1"], p["x"])
        # enough levels to reach the upper single excitation
        n_track = max(n_track, int(math.ceil(analytic[0] / analytic[1])) + 4)
    builder = system_builder(spec.model, p)
    result = converge_truncation(builder, k=n_track, tol=policy.tol, start_dims=policy.start,
                                 step=policy.step, max_dims=policy.max)
    dims = result.cutoff_history[-1].dims
    out = {spec.axis: float(value), "dims": "x".join(str(d) for d in dims), "converged": int(result.converged)}
    ev = result.eigenvalues
    if "levels" in spec.outputs:
        out.update({f"E{j}": float(ev[j]) for j in range(k)})
    if "transitions" in spec.outputs:
        out.update({f"w0{j}": float(ev[j] - ev[0]) for j in range(1, k)})
    product = spec.model in ("fluxonium", "cpb", "rabi")
    if product and ({"photon_number", "entanglement", "parity"} & set(spec.outputs)):
        system = _last_system(spec.model, p, dims)
        psi = result.state(0)
        if "photon_number" in spec.outputs:
            out["photon_number"] = photon_number(psi, system.dims)
        if "entanglement" in spec.outputs:
            es = entanglement_spectrum(psi, system.dims)
            out.update(p1=float(es.probabilities[0]), p2=float(es.probabilities[1]), p_tail=es.tail())
        if "parity" in spec.outputs:
            if system.parity is not None:
                out["parity0"] = parity_expectation(result.state(0), system.parity)
                out["parity1"] = parity_expectation(result.state(1), system.parity)
    if "rabi_overlay" in spec.outputs and spec.model in ("fluxonium", "cpb", "rabi"):
        out["rabi_w01"] = rabi_overlay_w01(spec.model, p)
    if "capshunt_overlay" in spec.outputs and spec.model in ("fluxonium", "capshunt"):
        out["capshunt_w01"] = capshunt_w01(p)
    if "analytic" in spec.outputs and spec.model == "coupled-lc":
        low, high = single_excitations(result, coupled_lc_probe(*dims, sparse=True))
        out.update(analytic_high=analytic[0], analytic_low=analytic[1], numeric_high=high, numeric_low=low)
    if not result.converged:
        out["error"] = f"truncation not converged at dims {out['dims']}"
    return out


def _header(spec, grid):
    policy = spec.policy or DEFAULT_POLICIES[spec.model]
    return {
        "model": spec.model,
        "axis": spec.axis,
        "range": f"{float(grid[0])!r}:{float(grid[-1])!r}:{len(grid)}",
        **{f"param.{k}": v for k, v in sorted(spec.fixed.items())},
        "trunc.start": "x".join(map(str, policy.start)),
        "trunc.step": "x".join(map(str, policy.step)),
        "trunc.max": "x".join(map(str, policy.max)),
        "trunc.tol": policy.tol,
        "version": __version__,
    }


def run_sweep(spec: SweepSpec | PointSpec) -> SweepTable:
    """Evaluate every grid point; failures are recorded in-row, never dropped.

    A resource error (dimension guard, memory) aborts the sweep; the rows
    finished so far are attached to the exception as ``partial``.
    """
    cols = _columns(spec)
    grid = spec.grid()

    def one(value):
        try:
            return evaluate_point(spec, value)
        except MemoryError:
            raise
        except (UsCqedError, np.linalg.LinAlgError, ValueError, ArithmeticError) as exc:
            log.warning("sweep point %s=%r failed: %s", spec.axis, value, exc)
            return {spec.axis: float(value), "error": f"{type(exc).__name__}: {exc}"}

    def table(results):
        rows = [[r.get(c, "" if c == "error" else None) for c in cols] for r in results]
        return SweepTable(spec.axis, cols, rows, _header(spec, grid))

    results = []
    try:
        if spec.workers > 1:
            with ThreadPoolExecutor(max_workers=spec.workers) as pool:
                futures = [pool.submit(one, v) for v in grid]
                for f in futures:
                    results.append(f.result())
        else:
            for v in grid:
                results.append(one(v))
    except MemoryError as exc:
        exc.partial = table(results)
        raise
    return table(results)
