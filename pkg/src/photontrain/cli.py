"""
Command-line drivers.

    photontrain <command> --config scenario.json [--seed N] [--out DIR]
                [--units rad_s|Hz] [--threads N] [--allow-large]

Commands: envelope, validate-markov, factorization, fidelity-sweep, engineer,
feasibility, ghz.  Every command validates the whole scenario document before
running, computes all results in memory and only then moves the finished files
into --out, so a failed run leaves no data files behind.  Exit status is 0 on
success, 2 for configuration errors and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import os
import shutil
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from pathlib import Path

import jsonschema
import numpy as np

from . import decoherence, markov, reservoir, sequence
from .control import (
    GenerationSequence,
    Recycle,
    Schedule,
    accumulated_phases,
    schedule_from_dict,
    validate_schedule,
)
from .exceptions import ConfigError, NumericalError

log = logging.getLogger("photontrain")

DEFAULT_MAX_MODES = 1024
DEFAULT_MAX_TWO_PHOTON_MODES = 256

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT1 = {"type": "integer", "minimum": 1}
_COMPLEX = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}]}
_PARAMS = {
    "type": "object",
    "additionalProperties": False,
    "required": ["g", "delta", "kappa_c"],
    "properties": {"g": _NUM, "delta": _NUM, "kappa_c": _NUM, "kappa_abs": _NUM, "gamma_sp": _NUM},
}
_SHAPE = {
    "type": "object",
    "required": ["kind"],
    "oneOf": [
        {"additionalProperties": False,
         "properties": {"kind": {"const": "gaussian"}, "peak": _NUM, "center": _NUM, "width": _NUM},
         "required": ["kind", "peak", "center", "width"]},
        {"additionalProperties": False,
         "properties": {"kind": {"enum": ["constant", "raised_cosine"]}, "amplitude": _NUM, "start": _NUM,
                        "stop": _NUM},
         "required": ["kind", "amplitude", "start", "stop"]},
        {"additionalProperties": False,
         "properties": {"kind": {"const": "tabulated"}, "times": {"type": "array", "items": _NUM},
                        "values": {"type": "array", "items": _NUM}},
         "required": ["kind", "times", "values"]},
    ],
}
_PHASE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {"kind": {"enum": ["chirp_compensated", "zero", "explicit"]},
                   "times": {"type": "array", "items": _NUM}, "values": {"type": "array", "items": _NUM}},
}
_PULSE = {"type": "object", "additionalProperties": False, "required": ["shape"],
          "properties": {"shape": _SHAPE, "phase": _PHASE}}
_EVENT = {
    "type": "object",
    "required": ["type"],
    "oneOf": [
        {"additionalProperties": False,
         "properties": {"type": {"const": "generation"}, "start": _NUM, "duration": _POS,
                        "pulses": {"type": "array", "items": _PULSE, "minItems": 2, "maxItems": 2}},
         "required": ["type", "start", "duration", "pulses"]},
        {"additionalProperties": False, "properties": {"type": {"const": "recycle"}}},
        {"additionalProperties": False,
         "properties": {"type": {"const": "mixing"},
                        "d": {"type": "array", "items": _COMPLEX, "minItems": 2, "maxItems": 2}},
         "required": ["type", "d"]},
        {"additionalProperties": False,
         "properties": {"type": {"const": "measurement"},
                        "m": {"type": "array", "items": _COMPLEX, "minItems": 2, "maxItems": 2}},
         "required": ["type", "m"]},
    ],
}


def _section(props: dict, required=()) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": props, "required": list(required)}


SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "units": {"enum": ["rad_s", "Hz"]},
        "seed": {"type": "integer", "minimum": 0},
        "params": {"oneOf": [_PARAMS, {"type": "array", "items": _PARAMS, "minItems": 2, "maxItems": 2}]},
        "initial": {"type": "array", "items": _COMPLEX, "minItems": 2, "maxItems": 2},
        "events": {"type": "array", "items": _EVENT},
        "limits": _section({"max_modes": _INT1, "max_two_photon_modes": _INT1}),
        "envelope": _section({
            "sequence": {"type": "integer", "minimum": 0}, "branch": {"enum": [0, 1]},
            "method": {"enum": ["full_ode", "overdamped"]}, "n_omega": {"type": "integer", "minimum": 2},
            "half_width": _POS, "tol": _POS}),
        "markov": _section({
            "sequence": {"type": "integer", "minimum": 0}, "branch": {"enum": [0, 1]},
            "pairs": {"type": "array", "minItems": 1,
                      "items": {"type": "array", "prefixItems": [_INT1, _POS], "minItems": 2, "maxItems": 2}},
            "dt": _POS}),
        "factorization": _section({
            "n_modes": _INT1, "width": _POS, "branch": {"enum": [0, 1]}, "dt": _POS,
            "allow_overlap": {"type": "boolean"}}),
        "fidelity": _section({
            "n_max": _INT1, "samples": {"type": "integer", "minimum": 100},
            "mode": {"enum": ["raw", "postselected"]},
            "curves": {"type": "array", "minItems": 1, "items": _section(
                {"label": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                 "eps_m": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                 "delta_m": {"type": "number", "minimum": 0, "maximum": 1}},
                required=("label", "eps_m", "delta_m"))}}),
        "engineer": _section({
            "target": _section({"n": _INT1, "amplitudes": {
                "type": "object", "additionalProperties": _COMPLEX, "propertyNames": {"pattern": "^[01]+$"}}},
                required=("n", "amplitudes")),
            "starts": _INT1, "maxfev": _INT1}, required=("target",)),
        "feasibility": _section({
            "sequence": {"type": "integer", "minimum": 0}, "branch": {"enum": [0, 1]},
            "rel_intensity_fluct": _POS, "recycle_overhead": {"type": "number", "minimum": 0}}),
        "ghz": _section({"n": _INT1, "sign": {"enum": [1, -1]},
                         "pattern": {"type": "string", "pattern": "^[01]+$"}}),
    },
}


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------


class Scenario:
    """Validated scenario document plus the objects built from it."""

    def __init__(self, doc: dict, units: str | None = None, seed: int | None = None):
        try:
            jsonschema.Draft202012Validator(SCHEMA).validate(doc)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config invalid at {where}: {exc.message}") from None
        self.doc = doc
        self.units = units or doc.get("units", "rad_s")
        self.scale = 2 * math.pi if self.units == "Hz" else 1.0
        self.seed = int(doc.get("seed", 0) if seed is None else seed)
        limits = doc.get("limits", {})
        self.max_modes = limits.get("max_modes", DEFAULT_MAX_MODES)
        self.max_two_photon_modes = limits.get("max_two_photon_modes", DEFAULT_MAX_TWO_PHOTON_MODES)
        self.schedule = None
        self.params = None
        if "params" in doc:
            self.schedule, self.params = schedule_from_dict(doc, self.units)

    def section(self, name: str) -> dict:
        return self.doc.get(name, {})

    def need_schedule(self):
        if self.schedule is None:
            raise ConfigError("this command needs 'params' and 'events'")
        return self.schedule, self.params

    def generation(self, index: int) -> GenerationSequence:
        seqs = self.need_schedule()[0].sequences
        if index >= len(seqs):
            raise ConfigError(f"schedule has {len(seqs)} generation sequences, asked for #{index}")
        return seqs[index]


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _guard_modes(n: int, cap: int, allow: bool, what: str):
    if n > cap and not allow:
        raise ConfigError(f"{what}: N = {n} exceeds the resource cap {cap} (use --allow-large)")


# ---------------------------------------------------------------------------
# commands; each returns {filename: writer(path)} and never touches the disk
# ---------------------------------------------------------------------------


def cmd_envelope(sc: Scenario, args) -> dict:
    opts = sc.section("envelope")
    _, params = sc.need_schedule()
    seq = sc.generation(opts.get("sequence", 0))
    branch = opts.get("branch", 0)
    p = params[branch]
    omegas = markov.default_omega_grid(p.kappa_c, opts.get("n_omega", 1024), opts.get("half_width", 20.0))
    env = markov.spectral_envelope(seq, p, omegas, opts.get("method", "full_ode"), branch,
                                   tol=opts.get("tol", 1e-10))
    traj = markov.solve_amplitudes(seq, p, branch, tol=opts.get("tol", 1e-10))
    mu_T = float(accumulated_phases(seq.pulse(branch), p, seq.duration).mu)
    summary = {
        "units": "rad_s",
        "emission_probability": markov.emission_probability(traj),
        "envelope_norm": env.norm_sq(),
        "mu_T": mu_T,
        "kappa_c": p.kappa_c,
        "duration_s": seq.duration,
        "method": env.method,
        "branch": branch,
        "schedule_checks": [{"name": c.name, "passed": c.passed, "detail": c.detail}
                            for c in validate_schedule(sc.schedule, params).checks],
    }
    return {"envelope.csv": lambda path: markov.write_envelope_csv(env, path),
            "envelope_summary.json": _text(_dumps(summary))}


def cmd_validate_markov(sc: Scenario, args, executor=None) -> dict:
    opts = sc.section("markov")
    _, params = sc.need_schedule()
    seq = sc.generation(opts.get("sequence", 0))
    branch = opts.get("branch", 0)
    pairs = [tuple(p) for p in opts.get("pairs", [[1024, 40.0], [512, 40.0], [256, 40.0]])]
    for n, _ in pairs:
        _guard_modes(n, sc.max_modes, args.allow_large, "validate-markov")
    rows = reservoir.convergence_sweep(seq, params[branch], pairs, branch, opts.get("dt"), executor)
    return {"markov_sweep.csv": lambda path: reservoir.write_sweep_csv(rows, path)}


def cmd_factorization(sc: Scenario, args) -> dict:
    opts = sc.section("factorization")
    schedule, params = sc.need_schedule()
    branch = opts.get("branch", 0)
    p = params[branch]
    n = opts.get("n_modes", 256)
    _guard_modes(n, sc.max_two_photon_modes, args.allow_large, "factorization")
    grid = reservoir.ModeGrid.relative(n, opts.get("width", 40.0), p.kappa_c)
    allow_overlap = opts.get("allow_overlap", False)
    first, second = sc.generation(0), sc.generation(1)
    tp = reservoir.integrate_two_photon(Schedule(schedule.initial, (first, Recycle(), second)), p, grid,
                                        branch, opts.get("dt"), allow_overlap=allow_overlap)
    envs = []
    for seq in (first, second):
        run = reservoir.integrate_single(seq, p, grid, branch, opts.get("dt"))
        envs.append(reservoir.extract_exact_envelope(run.final, grid, seq.start, seq.duration))
    two_photon_weight = float(np.sum(np.abs(tp.s2) ** 2))
    report = {
        "n_modes": n,
        "width_over_kappa": grid.width / p.kappa_c,
        "t0_s": first.start,
        "t1_s": second.start,
        "allow_overlap": allow_overlap,
        "two_photon_weight": two_photon_weight,
        "discarded_weight": tp.discarded_weight,
        "max_norm_drift": tp.max_norm_drift,
        "factorization_error": (reservoir.factorization_error(tp, envs[0], envs[1], first.start, second.start)
                                if two_photon_weight > 0 else None),
    }
    return {"factorization.json": _text(_dumps(report)),
            "two_photon_density.csv": lambda path: reservoir.write_two_photon_csv(tp, path)}


def cmd_fidelity_sweep(sc: Scenario, args, executor=None) -> dict:
    opts = sc.section("fidelity")
    n_max = opts.get("n_max", 10)
    samples = opts.get("samples", 10000)
    mode = opts.get("mode", "raw")
    curves_cfg = opts.get("curves", [
        {"label": "a", "eps_m": 0.0125, "delta_m": 0.0},
        {"label": "b", "eps_m": 0.0125, "delta_m": 0.05},
        {"label": "c", "eps_m": 0.025, "delta_m": 0.0},
        {"label": "d", "eps_m": 0.025, "delta_m": 0.05},
        {"label": "e", "eps_m": 0.1, "delta_m": 0.0},
    ])
    labels = [c["label"] for c in curves_cfg]
    if len(set(labels)) != len(labels):
        raise ConfigError("curve labels must be unique")
    out = {}
    summary = {"rng": "PCG64/SeedSequence", "seed": sc.seed, "mode": mode, "samples": samples, "curves": {}}
    for c in curves_cfg:
        dist = decoherence.ErrorDistribution(c["eps_m"], c["delta_m"])
        curve = decoherence.fidelity_curve(n_max, dist, samples, sc.seed, mode, executor=executor,
                                           label=c["label"])
        out[f"fidelity_{c['label']}.csv"] = (lambda cv: lambda path: decoherence.write_curve_csv(cv, path))(curve)
        summary["curves"][c["label"]] = {"eps_m": c["eps_m"], "delta_m": c["delta_m"],
                                         "final_mean": float(curve.mean[-1]),
                                         "final_std_error": float(curve.std_error[-1])}
    out["fidelity_summary.json"] = _text(_dumps(summary))
    return out


def cmd_engineer(sc: Scenario, args, executor=None) -> dict:
    opts = sc.section("engineer")
    if not opts:
        raise ConfigError("engineer needs an 'engineer' section with a target state")
    target = sequence.state_from_dict(opts["target"])
    if target.norm_sq() == 0:
        raise ConfigError("target state is zero")
    result = sequence.engineer_state(target.normalized(), starts=opts.get("starts", 50), seed=sc.seed,
                                     maxfev=opts.get("maxfev"), executor=executor)
    doc = result.to_dict()
    doc["budget"] = {"free_params": sequence.parameter_budget(target.n).free_params,
                     "optimized_params": 2 * target.n + 4,
                     "state_dim_params": sequence.parameter_budget(target.n).state_dim_params}
    doc["seed"] = sc.seed
    return {"engineer.json": _text(_dumps(doc))}


def cmd_feasibility(sc: Scenario, args) -> dict:
    opts = sc.section("feasibility")
    _, params = sc.need_schedule()
    seq = sc.generation(opts.get("sequence", 0))
    branch = opts.get("branch", 0)
    overhead = opts.get("recycle_overhead")
    rep = decoherence.feasibility(params[branch], seq.pulse(branch), opts.get("rel_intensity_fluct", 1e-4),
                                  seq.duration, overhead)
    doc = rep.to_dict()
    doc["units"] = {"rates": "rad/s", "cycle_rate": "1/s", "cycle_time": "s"}
    return {"feasibility.json": _text(_dumps(doc))}


def cmd_ghz(sc: Scenario, args) -> dict:
    opts = sc.section("ghz")
    n = opts.get("n", 3)
    state = sequence.build_mes(n, opts.get("sign", 1), opts.get("pattern"))
    print(sequence.format_state(state))
    return {"ghz.json": _text(sequence.state_to_json(state) + "\n")}


def _text(content: str):
    def write(path):
        with open(path, "w", newline="") as fh:
            fh.write(content)
    return write


COMMANDS = {
    "envelope": (cmd_envelope, False),
    "validate-markov": (cmd_validate_markov, True),
    "factorization": (cmd_factorization, False),
    "fidelity-sweep": (cmd_fidelity_sweep, True),
    "engineer": (cmd_engineer, True),
    "feasibility": (cmd_feasibility, False),
    "ghz": (cmd_ghz, False),
}


def _commit(files: dict, out_dir: Path) -> list:
    """Write every file into a scratch directory, then move them all into place."""
    out_dir.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=".partial-", dir=out_dir))
    try:
        for name, write in files.items():
            write(scratch / name)
        written = []
        for name in files:
            os.replace(scratch / name, out_dir / name)
            written.append(out_dir / name)
        return written
    finally:
        shutil.rmtree(scratch, ignore_errors=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photontrain", description=__doc__.strip().splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="scenario JSON document")
    parser.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--units", choices=["rad_s", "Hz"], default=None,
                        help="unit of rates in the config (Hz values are multiplied by 2 pi)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    parser.add_argument("--allow-large", action="store_true", help="lift the mode-count resource cap")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        sc = Scenario(copy.deepcopy(load_config(args.config)), args.units, args.seed)
        func, parallel = COMMANDS[args.command]
        pool = ThreadPoolExecutor(args.threads) if parallel and args.threads > 1 else None
        with pool or nullcontext():
            files = func(sc, args, pool) if parallel else func(sc, args)
        for path in _commit(files, Path(args.out)):
            log.info("wrote %s", path)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
