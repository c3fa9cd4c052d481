"""Command line runner: ``qifs run``, ``qifs catalogue`` and ``qifs compare``."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .catalogue import listing, preset
from .config import ConfigError, take
from .errors import ConvergenceError, QIFSError
from .experiments import FORMATS, RUNNERS, RunContext
from .export import config_hash, write_json

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 4
OUTPUT_ROOT_ENV = "QIFS_OUTPUT_ROOT"
CONFIG_SCHEMA = {"kind": None, "seed": 0, "params": {}, "name": None, "out": None}


class CLIError(Exception):
    def __init__(self, code: int, kind: str, message: str, **extra):
        super().__init__(message)
        self.code, self.kind, self.extra = code, kind, extra


def _load_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CLIError(EXIT_IO, "io", f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CLIError(EXIT_CONFIG, "config", f"malformed JSON: {exc.msg}",
                       location={"file": path, "line": exc.lineno, "column": exc.colno}) from None


def _source(spec: str) -> dict:
    """A config path, or a preset name when no such file exists."""
    if Path(spec).exists() or spec.endswith(".json"):
        return _load_json(spec)
    return preset(spec)


def resolve_config(doc: dict, seed: int | None) -> dict:
    cfg = take(doc, CONFIG_SCHEMA, "config")
    if cfg["kind"] not in RUNNERS:
        raise ConfigError(f"config.kind: unknown experiment kind {cfg['kind']!r}; known {sorted(RUNNERS)}")
    if seed is not None:
        cfg["seed"] = seed
    if not isinstance(cfg["seed"], int) or not 0 <= cfg["seed"] < 2 ** 64:
        raise ConfigError("config.seed: expected a 64-bit nonnegative integer")
    return cfg


def _output_dir(cfg: dict, out: str | None, digest: str) -> Path:
    if out:
        return Path(out)
    if cfg["out"]:
        return Path(cfg["out"])
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "qifs-runs"))
    return root / f"{cfg['name'] or cfg['kind']}-{digest}"


def execute(cfg: dict, out: str | None = None, formats=FORMATS, threads: int = 1,
            pgm_bits: int = 8, pgm_binary: bool = False) -> dict:
    """Run a resolved config and write its manifest; returns the manifest."""
    digest = config_hash(cfg)
    target = _output_dir(cfg, out, digest)
    try:
        target.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CLIError(EXIT_IO, "io", f"cannot create {target}: {exc.strerror}") from None
    ctx = RunContext(target, tuple(formats), max(1, threads), digest, pgm_bits, pgm_binary)
    t0 = time.perf_counter()
    results = RUNNERS[cfg["kind"]](cfg["params"], cfg["seed"], ctx)
    duration = time.perf_counter() - t0
    if ctx.sidecar:
        write_json(target / "images.json", ctx.sidecar)
        ctx.artifacts.append("images.json")
    manifest = {"status": "ok", "version": __version__, "config": cfg, "config_hash": digest,
                "artifacts": sorted(set(ctx.artifacts)), "duration_s": duration, "results": results}
    write_json(target / "manifest.json", manifest)
    manifest["out"] = str(target)
    return manifest


def _error_doc(exc: CLIError) -> dict:
    return {"status": "error", "exit_code": exc.code, "error": exc.kind, "message": str(exc), **exc.extra}


def _translate(exc: Exception) -> CLIError:
    if isinstance(exc, CLIError):
        return exc
    if isinstance(exc, ConvergenceError):
        return CLIError(EXIT_CONVERGENCE, "convergence", str(exc))
    if isinstance(exc, OSError):
        return CLIError(EXIT_IO, "io", str(exc))
    if isinstance(exc, (QIFSError, ValueError, TypeError, KeyError)):
        return CLIError(EXIT_CONFIG, "config", str(exc))
    raise exc


def _cmd_run(args) -> dict:
    if bool(args.config) == bool(args.preset):
        raise ConfigError("give exactly one of --config or --preset")
    doc = _load_json(args.config) if args.config else preset(args.preset)
    if args.preset:
        doc.setdefault("name", args.preset)
    cfg = resolve_config(doc, args.seed)
    return execute(cfg, args.out, tuple(args.format or FORMATS), args.threads,
                   args.pgm_bits, args.pgm_binary)


def _cmd_catalogue(args) -> dict:
    return {"status": "ok", "presets": listing()}


def _cmd_compare(args) -> dict:
    classical = resolve_config(_source(args.classical), None)
    quantum = resolve_config(_source(args.quantum), None)
    n_values = [int(v) for v in args.n_values.split(",")] if args.n_values else None
    cfg = {"kind": "compare-classical-quantum", "seed": classical["seed"] if args.seed is None else args.seed,
           "params": {"classical": classical, "quantum": quantum, "resolution": args.resolution,
                      "n_values": n_values}, "name": "compare", "out": None}
    return execute(cfg, args.out, tuple(args.format or FORMATS), args.threads)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qifs", description="Classical and quantum IFS experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", action="append", choices=FORMATS,
                       help="artifact format (repeatable; default all)")
        p.add_argument("--threads", type=int, default=1, help="maximum worker processes")

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--config", help="experiment config JSON")
    run.add_argument("--preset", help="built-in preset, e.g. example-1")
    run.add_argument("--pgm-bits", type=int, choices=(8, 16), default=8)
    run.add_argument("--pgm-binary", action="store_true", help="write P5 instead of P2")
    common(run)
    run.set_defaults(func=_cmd_run)

    cat = sub.add_parser("catalogue", help="list built-in presets")
    cat.set_defaults(func=_cmd_catalogue)

    cmp_ = sub.add_parser("compare", help="compare a classical grid with a quantum Husimi grid")
    cmp_.add_argument("classical", help="config path or preset")
    cmp_.add_argument("quantum", help="config path or preset")
    cmp_.add_argument("--resolution", type=int, default=27)
    cmp_.add_argument("--n-values", help="comma-separated Hilbert space dimensions")
    common(cmp_)
    cmp_.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = args.func(args)
    except Exception as exc:  # noqa: BLE001 - translated into an exit code
        err = _translate(exc)
        print(json.dumps(_error_doc(err), indent=2, default=str))
        return err.code
    print(json.dumps(doc, indent=2, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
