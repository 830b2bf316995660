"""Command-line frontend: ``uscqed <subcommand> [flags]``.

Exit codes: 0 success, 2 configuration error, 3 convergence failure
(non-converged or failed rows present), 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .emit import ResultEnvelope, emit, read_csv, timestamp
from .errors import (
    ConfigError,
    ContractError,
    ConvergenceError,
    DomainError,
    InvalidDimensionError,
    ResourceError,
    UsCqedError,
)
from .fit import fit_renormalized_fluxonium
from .models import FluxoniumParams, RabiParams, rabi_system
from .spectrum import converge_truncation, eigensolve, rabi_splitting_mp
from .sweep import (
    DEFAULT_POLICIES,
    PointSpec,
    SweepSpec,
    SweepTable,
    point_params,
    TruncationPolicy,
    run_sweep,
    system_builder,
    validate_point,
)

log = logging.getLogger("uscqed")

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 4
SCHEMA = 1

# ------------------------------------------------------------ value parsers

_ANGLE = re.compile(r"^\s*([+-]?)\s*(\d*\.?\d*(?:[eE][+-]?\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d*\.?\d+))?\s*$")


def parse_angle(v) -> float:
    """Radians as a float, or a multiple of ``pi`` (``pi``, ``-pi``, ``2pi``, ``pi/2``, ``0.5*pi``)."""
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    text = str(v).strip().lower()
    m = _ANGLE.match(text)
    if m:
        sign, coef, denom = m.groups()
        value = (float(coef) if coef not in ("", ".") else 1.0) * math.pi / (float(denom) if denom else 1.0)
        return -value if sign == "-" else value
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot read {v!r} as an angle (radians or a multiple of pi)") from None


def parse_float(v) -> float:
    if isinstance(v, bool):
        raise ConfigError(f"expected a number, got {v!r}")
    try:
        out = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {v!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"expected a finite number, got {v!r}")
    return out


def parse_ng(v) -> float:
    out = parse_float(v)
    if not -1.0 <= out <= 1.0:
        raise ConfigError(f"expected an offset charge in [-1, 1], got {v!r}")
    return out


def parse_int(v) -> int:
    if isinstance(v, bool):
        raise ConfigError(f"expected an integer, got {v!r}")
    try:
        out = int(v) if not isinstance(v, float) else (int(v) if v == int(v) else None)
    except (TypeError, ValueError):
        out = None
    if out is None:
        raise ConfigError(f"expected an integer, got {v!r}")
    return out


def parse_range(v) -> tuple[float, float, int]:
    """``from:to:points``; bounds accept ``pi`` multiples."""
    if isinstance(v, (list, tuple)):
        parts = list(v)
    else:
        parts = str(v).split(":")
    if len(parts) != 3:
        raise ConfigError(f"range must be 'from:to:points', got {v!r}")
    return parse_angle(parts[0]), parse_angle(parts[1]), parse_int(parts[2])


def parse_dims(v) -> tuple[int, ...]:
    if isinstance(v, (list, tuple)):
        parts = list(v)
    elif isinstance(v, int) and not isinstance(v, bool):
        parts = [v]
    else:
        parts = re.split(r"[x,]", str(v))
    dims = tuple(parse_int(p) for p in parts)
    if any(d < 1 for d in dims):
        raise ConfigError(f"dimensions must be positive, got {v!r}")
    return dims


def parse_seeds(v) -> tuple[int, ...]:
    parts = list(v) if isinstance(v, (list, tuple)) else str(v).split(",")
    return tuple(parse_int(p) for p in parts)


def parse_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    text = str(v).strip().lower()
    if text in ("true", "1", "yes"):
        return True
    if text in ("false", "0", "no"):
        return False
    raise ConfigError(f"expected true or false, got {v!r}")


def _choice(*options):
    def parse(v):
        if v not in options:
            raise ConfigError(f"expected one of {options}, got {v!r}")
        return v

    return parse


def _fmt_range(r):
    return f"{r[0]!r}:{r[1]!r}:{r[2]}"


def _fmt_dims(d):
    return "x".join(str(i) for i in d)


# key -> (parser, formatter for the echo, help)
KEYS = {
    "ej": (parse_float, repr, "Josephson energy E_J (GHz)"),
    "ec1": (parse_float, repr, "atom charging energy E_C1 (GHz)"),
    "el1": (parse_float, repr, "atom inductive energy E_L1 (GHz)"),
    "flux": (parse_angle, repr, "external phase theta_ext in radians; 'pi' accepted"),
    "omega_r": (parse_float, repr, "bare resonator frequency (GHz)"),
    "omega_a": (parse_float, repr, "two-level splitting (GHz)"),
    "g": (parse_float, repr, "Rabi coupling (GHz)"),
    "ec2": (parse_float, repr, "resonator charging energy E_C2 (GHz)"),
    "el2": (parse_float, repr, "resonator inductive energy E_L2 (GHz)"),
    "ng": (parse_ng, repr, "offset charge in Cooper pairs"),
    "x": (parse_float, repr, "dimensionless coupling"),
    "omega1": (parse_float, repr, "first LC mode frequency (GHz)"),
    "omega2": (parse_float, repr, "second LC mode frequency (GHz)"),
    "gauge": (_choice("flux", "charge"), str, "coupled-LC gauge"),
    "axis": (_choice("x", "x_squared", "theta_ext", "ng"), str, "sweep axis"),
    "range": (parse_range, _fmt_range, "sweep range from:to:points"),
    "model": (_choice("rabi", "fluxonium", "cpb", "coupled-lc", "capshunt"), str, "circuit model"),
    "rabi_overlay": (parse_bool, lambda v: "true" if v else "false", "add the Rabi-truncation w01 column"),
    "capshunt_overlay": (parse_bool, lambda v: "true" if v else "false", "add the capacitively shunted w01 column"),
    "transitions": (parse_int, str, "number of transitions to fit"),
    "seeds": (parse_seeds, lambda v: ",".join(map(str, v)), "restart seeds, comma separated"),
    "target": (str, str, "CSV from fluxonium-spectrum --axis theta_ext to fit against"),
    "fit_levels": (parse_int, str, "oscillator levels of the fitted bare fluxonium"),
    "levels": (parse_int, str, "photon levels"),
    "k": (parse_int, str, "number of eigenvalues reported and tracked"),
    "start_dims": (parse_dims, _fmt_dims, "starting truncation, e.g. 20x50"),
    "step": (parse_dims, _fmt_dims, "truncation increment per step"),
    "max_dims": (parse_dims, _fmt_dims, "largest truncation tried"),
    "tol": (parse_float, repr, "convergence tolerance on the tracked levels (GHz)"),
    "workers": (parse_int, str, "threads for sweep points"),
    "output": (str, str, "output path (default stdout)"),
    "format": (_choice("csv", "json"), str, "output format"),
    "timestamp": (parse_bool, lambda v: "true" if v else "false", "record the current time"),
}
FLAGS = {"rabi_overlay", "capshunt_overlay", "timestamp"}
COMMON = ("start_dims", "step", "max_dims", "tol", "k", "workers", "output", "format", "timestamp")
MODEL_KEYS = ("ej", "ec1", "el1", "flux", "omega_r", "omega_a", "g", "ec2", "el2", "ng", "x", "omega1", "omega2", "gauge")
COMMANDS = {
    "coupled-lc": ("omega1", "omega2", "gauge", "axis", "range", "x"),
    "fluxonium-spectrum": ("ej", "ec1", "el1", "flux", "omega_r", "x", "axis", "range", "rabi_overlay", "capshunt_overlay"),
    "cpb-spectrum": ("ej", "ec1", "ec2", "ng", "el2", "x", "axis", "range", "rabi_overlay"),
    "ground-state": ("model", "axis", "range") + MODEL_KEYS,
    "fit-renorm": ("ej", "ec1", "el1", "omega_r", "x", "range", "transitions", "seeds", "target", "fit_levels"),
    "converge": ("model",) + MODEL_KEYS,
    "rabi": ("omega_r", "omega_a", "g", "levels"),
}
HELP = {
    "coupled-lc": "numeric and analytic normal modes of two coupled LC circuits vs x",
    "fluxonium-spectrum": "fluxonium-resonator transitions vs x or theta_ext",
    "cpb-spectrum": "Cooper pair box-resonator transitions vs ng or x",
    "ground-state": "ground-state observables for any model",
    "fit-renorm": "fit a renormalized bare fluxonium to the coupled spectrum",
    "converge": "truncation convergence history for one model",
    "rabi": "quantum Rabi spectrum at a fixed photon cutoff",
}
DEFAULT_AXIS = {"cpb-spectrum": "ng"}
INTERNAL = {"ej": "e_j", "ec1": "e_c1", "el1": "e_l1", "flux": "theta_ext", "ec2": "e_c2", "el2": "e_l2"}


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)
    schema: int = SCHEMA

    def get(self, key, default=None):
        return self.values.get(key, default)

    def echo(self) -> dict:
        """Configuration as JSON-ready values; ``parse_config`` reads it back unchanged."""
        out = {}
        for k in sorted(self.values):
            if k in NOT_ECHOED:
                continue
            v = self.values[k]
            if isinstance(v, bool) or (isinstance(v, (int, float)) and k in KEYS and KEYS[k][1] in (repr, str)):
                out[k] = v
            else:
                out[k] = KEYS[k][1](v)
        return out


# the output destination does not change the result, so it is left out of
# the echo; two runs of one config into different files stay byte-identical
NOT_ECHOED = {"output"}


# ------------------------------------------------------------ parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uscqed", description="Exact diagonalization of ultrastrongly coupled circuits.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, keys in COMMANDS.items():
        p = sub.add_parser(name, help=HELP[name], argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON configuration file; flags override its values")
        for key in keys + COMMON:
            flag = "--" + key.replace("_", "-")
            if key in FLAGS:
                p.add_argument(flag, dest=key, action="store_const", const=True, help=KEYS[key][2])
            else:
                p.add_argument(flag, dest=key, help=KEYS[key][2])
    return parser


def _load_config_file(path: str, command: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    if "config" in data and isinstance(data["config"], dict):
        # an emitted JSON envelope; reuse its configuration echo
        cmd = data.get("command")
        data = dict(data["config"], command=cmd) if cmd else dict(data["config"])
    schema = data.pop("schema", SCHEMA)
    if schema != SCHEMA:
        raise ConfigError(f"{path}: field 'schema': unsupported version {schema!r} (expected {SCHEMA})")
    cmd = data.pop("command", command)
    if cmd != command:
        raise ConfigError(f"{path}: field 'command': file is for {cmd!r}, not {command!r}")
    return data


def parse_config(command: str, flags: dict | None = None, path: str | None = None) -> RunConfig:
    """Merge a JSON file and explicit flags (flags win), validate and convert."""
    allowed = set(COMMANDS[command]) | set(COMMON)
    raw = _load_config_file(path, command) if path else {}
    source = {k: path or "file" for k in raw}
    for k, v in (flags or {}).items():
        raw[k] = v
        source[k] = "flag"
    unknown = sorted(set(raw) - allowed)
    if unknown:
        where = f"{path}: " if path and any(source[k] != "flag" for k in unknown) else ""
        raise ConfigError(f"{where}unknown field(s) {unknown} for {command!r}")
    values = {}
    for k, v in raw.items():
        try:
            values[k] = KEYS[k][0](v)
        except ConfigError as exc:
            raise ConfigError(f"field '{k}' ({source[k]}): {exc}") from None
    cfg = RunConfig(command, values)
    _check_complete(cfg)
    return cfg


def _model_of(cfg: RunConfig) -> str:
    return {
        "coupled-lc": "coupled-lc",
        "fluxonium-spectrum": "fluxonium",
        "cpb-spectrum": "cpb",
        "fit-renorm": "fluxonium",
        "rabi": "rabi",
    }.get(cfg.command) or cfg.get("model")


def _require(cfg, keys):
    missing = [k for k in keys if k not in cfg.values]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise ConfigError(f"{cfg.command}: missing required parameter(s) {flags}")


def _require_one(cfg, keys, why):
    if not any(k in cfg.values for k in keys):
        flags = " or ".join("--" + k.replace("_", "-") for k in keys)
        raise ConfigError(f"{cfg.command}: {why} needs {flags}")


def _check_complete(cfg: RunConfig) -> None:
    """Physical parameters are never defaulted; only the truncation policy is."""
    c = cfg.command
    if c in ("ground-state", "converge"):
        _require(cfg, ["model"])
    model = _model_of(cfg)
    axis = cfg.get("axis", DEFAULT_AXIS.get(c, "x"))
    implicit = c == "cpb-spectrum" and axis == "ng" and "ng" not in cfg.values
    swept = axis if "range" in cfg.values or implicit else None
    fixed_key = {"x": "x", "x_squared": "x", "theta_ext": "flux", "ng": "ng"}.get(swept)
    if "range" in cfg.values and fixed_key in cfg.values:
        raise ConfigError(f"{c}: --{fixed_key} conflicts with a --range sweep over {swept}")
    if c == "rabi":
        _require(cfg, ["omega_r", "omega_a", "g", "levels"])
        return
    if c == "fit-renorm":
        _require(cfg, ["ej", "ec1", "el1"])
        if "target" not in cfg.values:
            _require(cfg, ["omega_r", "x", "range"])
        return
    needed = {
        "coupled-lc": ["omega1", "omega2"],
        "fluxonium": ["ej", "ec1", "el1", "flux", "omega_r"],
        "capshunt": ["ej", "ec1", "el1", "flux", "omega_r"],
        "cpb": ["ej", "ec1", "ec2"],
        "rabi": ["omega_r", "omega_a"],
    }[model]
    if swept == "theta_ext":
        needed = [k for k in needed if k != "flux"]
    _require(cfg, needed)
    if model == "cpb" and swept != "ng":
        _require(cfg, ["ng"])
    coupling = {"coupled-lc": ["x"], "fluxonium": ["x"], "capshunt": ["x", "ec2"], "cpb": ["x", "el2"], "rabi": ["g", "x"]}[model]
    if swept not in ("x", "x_squared"):
        _require_one(cfg, coupling, f"model {model!r}")


# ------------------------------------------------------------ running


def _policy(cfg: RunConfig, model: str) -> TruncationPolicy:
    base = DEFAULT_POLICIES[model]
    start = cfg.get("start_dims", base.start)
    n = len(base.start)

    def fit(d, name):
        d = tuple(d)
        if len(d) == 1 and n > 1:
            d = d * n
        if len(d) != n:
            raise ConfigError(f"field '{name}': model {model!r} needs {n} truncation dimension(s), got {_fmt_dims(d)}")
        return d

    start = fit(start, "start_dims")
    step = fit(cfg.get("step", base.step), "step")
    cap = fit(cfg.get("max_dims", tuple(max(s, m) for s, m in zip(start, base.max))), "max_dims")
    if any(s > m for s, m in zip(start, cap)):
        raise ConfigError(f"field 'start_dims': {_fmt_dims(start)} exceeds max_dims {_fmt_dims(cap)}")
    tol = cfg.get("tol", base.tol)
    if not tol > 0:
        raise ConfigError("field 'tol': must be positive")
    return TruncationPolicy(start, step, cap, tol, cfg.get("k", base.k))


def _fixed(cfg: RunConfig) -> dict:
    return {INTERNAL.get(k, k): v for k, v in cfg.values.items() if k in MODEL_KEYS}


def _spec(cfg: RunConfig, model: str, axis: str, outputs, n_levels, default_range=None):
    fixed = _fixed(cfg)
    policy = _policy(cfg, model)
    workers = cfg.get("workers", 1)
    rng = cfg.get("range", default_range)
    if rng is None:
        value = fixed.get(axis) if axis != "x_squared" else (fixed["x"] ** 2 if "x" in fixed else None)
        if value is None:
            raise ConfigError(f"{cfg.command}: give --range or a fixed value for axis {axis!r}")
        spec = PointSpec(model, axis, value, fixed, tuple(outputs), n_levels, policy, workers)
    else:
        fixed.pop(axis, None)
        if axis == "x_squared":
            fixed.pop("x", None)
        spec = SweepSpec(model, axis, rng, fixed, tuple(outputs), n_levels, policy, workers)
    validate_point(model, point_params(spec, float(spec.grid()[0])))
    return spec


def _table_result(table):
    failed = bool(table.failed) or any(r[table.columns.index("converged")] == 0 for r in table.rows)
    return table.columns, table.rows, table.header, EXIT_CONVERGENCE if failed else EXIT_OK


def cmd_coupled_lc(cfg):
    axis = cfg.get("axis", "x")
    spec = _spec(cfg, "coupled-lc", axis, ("analytic", "transitions"), cfg.get("k", 6))
    return _table_result(run_sweep(spec))


def cmd_fluxonium_spectrum(cfg):
    outputs = ["transitions"]
    if cfg.get("rabi_overlay"):
        outputs.append("rabi_overlay")
    if cfg.get("capshunt_overlay"):
        outputs.append("capshunt_overlay")
    spec = _spec(cfg, "fluxonium", cfg.get("axis", "x"), outputs, cfg.get("k", 6))
    return _table_result(run_sweep(spec))


def cmd_cpb_spectrum(cfg):
    axis = cfg.get("axis", DEFAULT_AXIS["cpb-spectrum"])
    outputs = ["transitions"] + (["rabi_overlay"] if cfg.get("rabi_overlay") else [])
    # without --ng or --range the offset charge is swept over [-1, 1]
    default = (-1.0, 1.0, 41) if axis == "ng" and "ng" not in cfg.values else None
    spec = _spec(cfg, "cpb", axis, outputs, cfg.get("k", 6), default_range=default)
    return _table_result(run_sweep(spec))


def cmd_ground_state(cfg):
    model = cfg.get("model")
    axis = cfg.get("axis", "x")
    outputs = ["levels", "transitions"]
    if model in ("rabi", "fluxonium", "cpb"):
        outputs += ["photon_number", "parity", "entanglement"]
    if "range" not in cfg.values and axis == "x" and "x" not in cfg.values:
        # fixed-coupling point given through g or e_l2 / e_c2
        axis = {"rabi": "x", "cpb": "ng", "capshunt": "x"}.get(model, axis)
        if model == "rabi":
            cfg = RunConfig(cfg.command, dict(cfg.values, x=cfg.values["g"] / cfg.values["omega_r"]))
            cfg.values.pop("g")
    spec = _spec(cfg, model, axis, outputs, cfg.get("k", 2))
    return _table_result(run_sweep(spec))


def cmd_fit_renorm(cfg):
    init = FluxoniumParams(cfg.get("ej"), cfg.get("ec1"), cfg.get("el1"))
    n = cfg.get("transitions", 3)
    header = {}
    if "target" in cfg.values:
        try:
            with open(cfg.get("target"), encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise OSError(f"cannot read target {cfg.get('target')!r}: {exc.strerror}") from None
        _, columns, rows = read_csv(text)
        if "theta_ext" not in columns:
            raise ConfigError("field 'target': table has no theta_ext column")
        target = SweepTable("theta_ext", columns, rows)
    else:
        values = dict(cfg.values, flux=math.pi, axis="theta_ext")
        spec = _spec(RunConfig(cfg.command, values), "fluxonium", "theta_ext", ("transitions",), max(n + 1, 2))
        target = run_sweep(spec)
        header = target.header
        bad = target.failed
        if bad:
            raise ConvergenceError(f"target sweep failed at rows {bad}; adjust the truncation policy")
    kwargs = {}
    if "seeds" in cfg.values:
        kwargs["seeds"] = cfg.get("seeds")
    if "fit_levels" in cfg.values:
        kwargs["n_levels"] = cfg.get("fit_levels")
    res = fit_renormalized_fluxonium(target, n, init, **kwargs)
    columns = ["e_j_star", "e_c_star", "e_l_star", "residual", "init_residual", "iterations", "converged"]
    columns += [f"rms_w0{j}" for j in range(1, n + 1)]
    row = [res.e_j_star, res.e_c_star, res.e_l_star, res.residual, res.init_residual, res.iterations, int(res.converged)]
    row += list(res.per_transition)
    return columns, [row], header, EXIT_OK if res.converged else EXIT_CONVERGENCE


def cmd_converge(cfg):
    model = cfg.get("model")
    fixed = _fixed(cfg)
    validate_point(model, fixed)
    policy = _policy(cfg, model)
    result = converge_truncation(system_builder(model, fixed), k=max(policy.k, cfg.get("k", 6)), tol=policy.tol,
                                 start_dims=policy.start, step=policy.step, max_dims=policy.max)
    rows = [[i, _fmt_dims(rec.dims), rec.drift] for i, rec in enumerate(result.cutoff_history)]
    header = {
        "model": model,
        **{f"param.{k}": v for k, v in sorted(fixed.items())},
        "trunc.start": _fmt_dims(policy.start),
        "trunc.step": _fmt_dims(policy.step),
        "trunc.max": _fmt_dims(policy.max),
        "trunc.tol": policy.tol,
        "converged": int(result.converged),
        "w01": float(result.eigenvalues[1] - result.eigenvalues[0]),
    }
    return ["step", "dims", "drift"], rows, header, EXIT_OK if result.converged else EXIT_CONVERGENCE


def cmd_rabi(cfg):
    params = RabiParams(cfg.get("omega_r"), cfg.get("omega_a"), cfg.get("g"))
    levels = cfg.get("levels")
    if levels < 2:
        raise ConfigError("field 'levels': need at least 2 photon levels")
    k = min(cfg.get("k", 6), 2 * levels)
    system = rabi_system(params, levels)
    res = eigensolve(system.hamiltonian, k, parity=system.parity, basis_dims=system.dims)
    columns = [f"E{j}" for j in range(k)] + [f"w0{j}" for j in range(1, k)] + [f"parity{j}" for j in range(k)]
    columns.append("w01_extended")
    row = [float(e) for e in res.eigenvalues] + [float(e - res.eigenvalues[0]) for e in res.eigenvalues[1:]]
    row += [float(p) for p in res.parities]
    row.append(rabi_splitting_mp(params, levels))
    header = {"model": "rabi", "trunc.dims": f"2x{levels}"}
    return columns, [row], header, EXIT_OK


HANDLERS = {
    "coupled-lc": cmd_coupled_lc,
    "fluxonium-spectrum": cmd_fluxonium_spectrum,
    "cpb-spectrum": cmd_cpb_spectrum,
    "ground-state": cmd_ground_state,
    "fit-renorm": cmd_fit_renorm,
    "converge": cmd_converge,
    "rabi": cmd_rabi,
}


def _write(data: bytes, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    with open(path, "wb") as fh:
        fh.write(data)


def run(cfg: RunConfig) -> tuple[bytes, int]:
    """Execute a validated configuration; returns the serialized output and exit code."""
    try:
        columns, rows, header, status = HANDLERS[cfg.command](cfg)
    except ResourceError as exc:
        partial = getattr(exc, "partial", None)
        if partial is None:
            raise
        columns, rows, header, status = partial.columns, partial.rows, partial.header, EXIT_CONFIG
        log.error("aborted: %s (partial table written)", exc)
    env = ResultEnvelope(cfg.command, cfg.echo(), list(columns), rows, header, timestamp(cfg.get("timestamp", False)))
    return emit(env, cfg.get("format", "csv")), status


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    logging.basicConfig(level=logging.INFO if args.pop("verbose", False) else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    command = args.pop("command")
    path = args.pop("config", None)
    try:
        cfg = parse_config(command, args, path)
        data, status = run(cfg)
    except (ConfigError, ContractError, DomainError, InvalidDimensionError) as exc:
        print(f"uscqed {command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        print(f"uscqed {command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"uscqed {command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except UsCqedError as exc:
        print(f"uscqed {command}: error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    try:
        _write(data, cfg.get("output"))
    except OSError as exc:
        print(f"uscqed {command}: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    if status == EXIT_CONVERGENCE:
        print(f"uscqed {command}: warning: some points did not converge (see the error column)", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
