"""Command line runner: ``gaussmix run --config cfg.json`` and ``gaussmix list-experiments``.

Exit codes: 0 success, 2 config or argument error, 3 numerical guard.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import sys
import time
from pathlib import Path

import jsonschema

from . import __version__
from .cantor import DepthError
from .circle import AliasingError
from .diagnostics import NumericalGuardError
from .experiments import RUNNERS
from .semigroup import NonAdmissibleError

MANIFEST_SCHEMA_VERSION = 1

_num = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}
_families = {"type": "array", "items": {"enum": ["strong", "weak", "ergodic"]}, "minItems": 1}

BASE_SCHEMA = {
    "type": "object",
    "required": ["experiment", "seed"],
    "properties": {
        "experiment": {"enum": sorted(RUNNERS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "output_dir": {"type": "string"},
    },
}

KIND_SCHEMAS = {
    "shift-mixing": {
        "properties": {
            "weight": _num, "dim": {"type": "integer", "minimum": 2}, "nodes": _pos_int,
            "horizon": _pos_int, "tol": {"type": "number", "exclusiveMinimum": 0},
            "families": _families, "space": {"enum": ["1", "2", "c0"]},
            "correlation": {
                "type": "object",
                "properties": {"n": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                               "mc": {"type": "integer", "minimum": 100}, "radius": _num,
                               "dim": {"type": "integer", "minimum": 2}, "nodes": _pos_int,
                               "stream": {"type": "integer", "minimum": 0}},
                "additionalProperties": False,
            },
        },
    },
    "kalisch": {
        "properties": {
            "grid": {"type": "integer", "minimum": 16},
            "t_values": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0,
                                                     "exclusiveMaximum": 6.283185307179586}},
            "mixing": {
                "type": "object",
                "properties": {"grid": {"type": "integer", "minimum": 16}, "horizon": _pos_int,
                               "arc": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                               "density": {"enum": ["lebesgue", "hann"]}, "families": _families,
                               "tol": {"type": "number", "exclusiveMinimum": 0}},
                "additionalProperties": False,
            },
        },
    },
    "cantor-fourier": {
        "properties": {
            "weight": _num, "dim": {"type": "integer", "minimum": 2},
            "depth": {"type": "integer", "minimum": 1, "maximum": 16},
            "alpha": {"type": "number", "exclusiveMinimum": 1},
            "lipschitz": {"type": "number", "exclusiveMinimum": 0},
            "arc": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
            "product_spaces": {"type": "array", "items": {
                "type": "array", "minItems": 1,
                "items": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 2}}}},
        },
    },
    "wiener-classify": {
        "required": ["measure"],
        "properties": {
            "measure": {
                "type": "object",
                "properties": {
                    "grid": {"type": "integer", "minimum": 2},
                    "atoms": {"type": "array", "items": {"type": "array", "items": _num,
                                                         "minItems": 2, "maxItems": 3}},
                    "density": {"type": "object",
                                "properties": {"kind": {"enum": ["lebesgue", "one_plus_cos"]},
                                               "weight": _num},
                                "additionalProperties": False},
                },
                "additionalProperties": False,
            },
            "horizon": _pos_int, "tol": {"type": "number", "exclusiveMinimum": 0},
            "families": _families,
        },
    },
    "haar-null": {
        "required": ["operator"],
        "properties": {
            "operator": {
                "type": "object", "required": ["type"],
                "properties": {"type": {"enum": ["shift", "identity"]}, "weight": _num,
                               "scale": _num, "dim": _pos_int},
                "additionalProperties": False,
            },
            "p": {"type": "number", "minimum": 1}, "n_terms": {"type": "integer", "minimum": 2},
            "tail_tol": {"type": "number", "exclusiveMinimum": 0},
        },
    },
    "semigroup": {
        "properties": {
            "weight": {"enum": ["exp", "inv1p", "const"]}, "grid": {"type": "integer", "minimum": 2},
            "h": {"type": "number", "exclusiveMinimum": 0}, "space": {"enum": ["C0", "Lp"]},
            "t_grid": {"type": "array", "items": {"type": "number", "minimum": 0}},
            "theta": _num,
            "theta_interval": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
            "t0": {"type": "number", "exclusiveMinimum": 0}, "horizon": _pos_int,
            "probes": {"type": "array", "items": {"type": "number", "minimum": 0}},
            "family": {"enum": ["strong", "weak", "ergodic"]},
            "tol": {"type": "number", "exclusiveMinimum": 0}, "density": {"enum": ["hann", "lebesgue"]},
        },
    },
    "chaos-check": {
        "properties": {
            "weight": _num, "dim": {"type": "integer", "minimum": 2}, "nodes": _pos_int,
            "k": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 6}},
            "mc": _pos_int, "phase_average": {"type": "boolean"},
            "orbit_shifts": _pos_int,
        },
    },
}

DESCRIPTIONS = {
    "shift-mixing": "spectral traces and mixing verdicts for a weighted backward shift",
    "kalisch": "eigenpair residuals and arc-restricted mixing for the Kalisch-type operator",
    "cantor-fourier": "Walsh coefficients of a nested Cantor eigenfield and product-space bases",
    "wiener-classify": "Fourier-decay classification of an explicit circle measure",
    "haar-null": "probe-series partial sums for the Haar-null criterion",
    "semigroup": "admissibility, generator residual and mixing of a weighted translation semigroup",
    "chaos-check": "Monte Carlo Hermite chaos identity for the shift Gaussian measure",
}


class ConfigError(ValueError):
    pass


def _schema_for(kind: str) -> dict:
    extra = KIND_SCHEMAS[kind]
    schema = copy.deepcopy(BASE_SCHEMA)
    schema["properties"].update(extra.get("properties", {}))
    schema["required"] = schema["required"] + extra.get("required", [])
    schema["additionalProperties"] = False
    return schema


def _path(err: jsonschema.ValidationError) -> str:
    out = "$"
    for part in err.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


def validate_config(cfg) -> None:
    validator = jsonschema.Draft202012Validator(BASE_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"{_path(e)}: {e.message}")
    validator = jsonschema.Draft202012Validator(_schema_for(cfg["experiment"]))
    errors = sorted(validator.iter_errors(cfg), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        e = errors[0]
        raise ConfigError(f"{_path(e)}: {e.message}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def run_config(cfg: dict, out_dir: Path) -> dict:
    """Execute one experiment and write its artifacts; returns the manifest."""
    start = time.perf_counter()
    summary, files = RUNNERS[cfg["experiment"]](cfg)
    files = dict(files)
    files["summary.json"] = _dump({"experiment": cfg["experiment"], "seed": cfg["seed"],
                                   "results": summary})
    out_dir.mkdir(parents=True, exist_ok=True)
    hashes = {}
    for name in sorted(files):
        path = out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(files[name])
        hashes[name] = _sha(files[name])
    content = {"schema_version": MANIFEST_SCHEMA_VERSION, "library": "gaussmix",
               "version": __version__, "config": cfg, "files": hashes}
    manifest = dict(content)
    manifest["content_hash"] = _sha(_dump(content))
    manifest["wall_time_s"] = round(time.perf_counter() - start, 6)
    with open(out_dir / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dump(manifest))
    return manifest


def _list(as_json: bool) -> str:
    rows = []
    for kind in sorted(RUNNERS):
        schema = _schema_for(kind)
        rows.append({"kind": kind, "required": schema["required"], "description": DESCRIPTIONS[kind]})
    if as_json:
        return _dump(rows)
    width = max(len(r["kind"]) for r in rows)
    lines = [f"{'kind'.ljust(width)}  required            description"]
    for r in rows:
        lines.append(f"{r['kind'].ljust(width)}  {','.join(r['required']).ljust(18)}  {r['description']}")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaussmix", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment from a JSON config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--out", type=Path, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--json", action="store_true", help="print the manifest as JSON")
    lst = sub.add_parser("list-experiments", help="list experiment kinds")
    lst.add_argument("--json", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-experiments":
        sys.stdout.write(_list(args.json))
        return 0
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None and isinstance(cfg, dict):
        cfg["seed"] = args.seed
    try:
        validate_config(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out or Path(cfg.get("output_dir", f"runs/{cfg['experiment']}"))
    try:
        manifest = run_config(cfg, out_dir)
    except NumericalGuardError as exc:
        print(f"numerical guard tripped: {exc.guard}: {exc}", file=sys.stderr)
        return 3
    except (NonAdmissibleError, DepthError, AliasingError) as exc:
        print(f"numerical guard tripped: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    if args.json:
        sys.stdout.write(_dump(manifest))
    else:
        print(f"{cfg['experiment']}: wrote {len(manifest['files'])} files to {out_dir} "
              f"(hash {manifest['content_hash'][:12]})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
