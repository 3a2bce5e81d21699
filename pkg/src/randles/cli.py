"""Command-line front end: ``randles identifiability|excite|simulate|study``.

Configuration is a JSON document validated against :data:`CONFIG_SCHEMA`
before anything is computed.  Exit codes: 0 success, 1 analysis failure
(insufficient excitation, no accepted trials), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema

from .circuit import REFERENCE_CIRCUIT, CircuitParams
from .errors import NoAcceptedTrials, RankDeficient
from .estimate import FitConfig, OutlierPolicy
from .excitation import MultiSineSpec, build_multisine, check_pe_order, sample
from .identifiability import classify
from .montecarlo import StudyConfig, run_study, simulate_record, write_study
from .simulate import NoiseSpec, add_noise, design_diagnostics
from .timeseries import write_csv

EXIT_OK, EXIT_ANALYSIS, EXIT_USAGE = 0, 1, 2

_POS = {"type": "number", "exclusiveMinimum": 0}
_RANGE = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "truth": {
            "type": "object",
            "additionalProperties": False,
            "required": ["r_inf"],
            "properties": {
                "r_inf": _POS,
                "r": {"type": "array", "items": _POS},
                "c": {"type": "array", "items": _POS},
                "c_w": {"oneOf": [_POS, {"type": "null"}]},
            },
        },
        "n": {"type": "integer", "minimum": 0},
        "excitation": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["l", "magnitude", "f_min", "f_max"],
                    "properties": {
                        "l": {"type": "integer", "minimum": 1},
                        "magnitude": _POS,
                        "f_min": _POS,
                        "f_max": _POS,
                        "spacing": {"enum": ["log", "linear"]},
                        "phi1": {"type": "number"},
                        "band_unit": {"enum": ["Hz", "rad/s"]},
                        "dc_offset": {"type": "number"},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["components"],
                    "properties": {
                        "components": {
                            "type": "array",
                            "minItems": 1,
                            "items": {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["magnitude", "omega", "phase"],
                                "properties": {"magnitude": _POS, "omega": _POS,
                                               "phase": {"type": "number"}},
                            },
                        },
                        "dc_offset": {"type": "number"},
                    },
                },
            ]
        },
        "fs": _POS,
        "duration": _POS,
        "noise": {
            "oneOf": [
                {"type": "null"},
                {"type": "object", "additionalProperties": False, "required": ["sigma"],
                 "properties": {"sigma": {"type": "number", "minimum": 0}}},
            ]
        },
        "trials": {"type": "integer", "minimum": 1},
        "fit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_iter": {"type": "integer", "minimum": 1},
                "init_log_range": _RANGE,
                "residue_log_range": _RANGE,
                "convergence_tol": _POS,
                "settle_time": {"type": ["number", "null"], "minimum": 0},
                "method": {"enum": ["varpro", "full"]},
                "hold": {"enum": ["continuous", "zoh"]},
                "lm_damping": _POS,
            },
        },
        "outliers": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "c_w_max": _POS,
                "c_i_max": _POS,
                "require_real_positive_poles": {"type": "boolean"},
            },
        },
        "data_hold": {"enum": ["continuous", "zoh"]},
        "bins": {"type": "integer", "minimum": 1},
        "workers": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "out": {"type": "string"},
    },
}


class ConfigError(Exception):
    pass


def load_config(path: str | Path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from exc
    return cfg


def excitation_from_config(d: dict) -> MultiSineSpec:
    if "components" in d:
        return MultiSineSpec.from_dict(d)
    return build_multisine(d["l"], d["magnitude"], d["f_min"], d["f_max"],
                           d.get("spacing", "log"), d.get("phi1", 0.0),
                           unit=d.get("band_unit", "Hz"), dc_offset=d.get("dc_offset", 0.0))


def truth_from_config(cfg: dict) -> CircuitParams:
    if "truth" not in cfg:
        return REFERENCE_CIRCUIT
    t = cfg["truth"]
    return CircuitParams(r_inf=t["r_inf"], r=tuple(t.get("r", ())), c=tuple(t.get("c", ())),
                         c_w=t.get("c_w"))


def _require(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"config is missing {', '.join(missing)}")


def _out_dir(args, cfg: dict) -> Path:
    out = args.out or cfg.get("out")
    if not out:
        raise ConfigError("no output directory: pass --out or set 'out' in the config")
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _seed(args, cfg: dict) -> int:
    return args.seed if args.seed is not None else cfg.get("seed", 0)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def study_config(cfg: dict, seed: int) -> StudyConfig:
    _require(cfg, "excitation", "fs", "duration")
    noise = cfg.get("noise")
    return StudyConfig(
        truth=truth_from_config(cfg),
        excitation=excitation_from_config(cfg["excitation"]),
        fs=cfg["fs"], duration=cfg["duration"],
        noise=None if noise is None else NoiseSpec(noise["sigma"], seed),
        trials=cfg.get("trials", 100),
        fit=FitConfig(**{k: tuple(v) if isinstance(v, list) else v
                         for k, v in cfg.get("fit", {}).items()}),
        outliers=OutlierPolicy(**cfg.get("outliers", {})),
        seed=seed, data_hold=cfg.get("data_hold", "continuous"),
        workers=cfg.get("workers", 1),
    )


# -- subcommands ---------------------------------------------------------------

def cmd_identifiability(args) -> int:
    if args.n is None or args.n < 1:
        raise ConfigError("--n must be an integer >= 1")
    sys.stdout.write(_dump(classify(args.n, args.ordered).to_dict()))
    return EXIT_OK


def cmd_excite(args) -> int:
    cfg = load_config(args.config)
    _require(cfg, "excitation", "fs", "duration")
    spec = excitation_from_config(cfg["excitation"])
    n = cfg.get("n", truth_from_config(cfg).n)
    u = sample(spec, cfg["fs"], cfg["duration"])
    report = check_pe_order(spec, n, u)
    out = _out_dir(args, cfg)
    write_csv(out / "input.csv", u)
    doc = report.to_dict()
    doc["order_n"] = n
    doc["tones"] = spec.to_dict()["components"]
    (out / "excitation_report.json").write_text(_dump(doc), encoding="utf-8")
    if not report.passed:
        print(f"excitation provides PE order {report.pe_order}, "
              f"{report.required_order} required for n={n}", file=sys.stderr)
        return EXIT_ANALYSIS
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    seed = _seed(args, cfg)
    sc = study_config({**cfg, "trials": 1}, seed)
    for msg in design_diagnostics(sc.truth, sc.fs, sc.duration, warn=False):
        print(f"warning: {msg}", file=sys.stderr)
    if sc.truth.c_w is None:
        raise ConfigError("simulation needs a circuit with the series capacitor")
    u, y = simulate_record(sc)
    if sc.noise is not None:
        y = add_noise(y, sc.noise)
    out = _out_dir(args, cfg)
    write_csv(out / "data.csv", u, y)
    return EXIT_OK


def cmd_study(args) -> int:
    cfg = load_config(args.config)
    sc = study_config(cfg, _seed(args, cfg))
    out = _out_dir(args, cfg)
    try:
        stats, results = run_study(sc)
    except (NoAcceptedTrials, RankDeficient) as exc:
        print(f"study failed: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    write_study(out, stats, results, bins=cfg.get("bins", 20))
    print(_dump(stats.to_dict()), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="randles",
                                description="Randles circuit identifiability and estimation.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("identifiability", help="classify the order-n circuit")
    s.add_argument("--n", type=int, required=True, help="number of RC pairs")
    s.add_argument("--ordered", action="store_true",
                   help="impose a_1 > ... > a_n on the time constants")
    s.set_defaults(func=cmd_identifiability)

    for name, func, help_ in (
        ("excite", cmd_excite, "build the multisine, write input.csv and excitation_report.json"),
        ("simulate", cmd_simulate, "simulate the circuit, write data.csv"),
        ("study", cmd_study, "run a Monte Carlo estimation study"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, help="JSON configuration file")
        s.add_argument("--out", help="output directory (overrides 'out' in the config)")
        s.add_argument("--seed", type=int, help="master seed (overrides 'seed' in the config)")
        s.set_defaults(func=func)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be in [0, 2^64)", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
