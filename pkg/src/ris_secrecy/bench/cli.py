"""Command-line entry point: ``ris-secrecy run|fit-ris|validate``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..errors import ConfigError, DomainError, FitError, NumericError
from ..ris_model import CircuitParams, fit_ris_params
from .config import load_config
from .output import emit_csv, emit_diagnostics, emit_plots, emit_timings
from .runner import run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("ris_secrecy.bench")


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out or cfg.output)
    table = run_experiment(cfg, threads=args.threads)
    emit_csv(table, out / f"{cfg.name}.csv")
    emit_diagnostics(table, out / f"{cfg.name}_diagnostics.csv")
    emit_timings(table, out / f"{cfg.name}_timings.csv")
    (out / f"{cfg.name}_config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")
    if not args.no_plots:
        emit_plots(table, out, cfg.name)
    n_fail = len(table.failures)
    print(f"{cfg.name}: {len(table.rows) - n_fail} results, {n_fail} failed cells -> {out}")
    if table.numeric_failures:
        print(f"{table.numeric_failures} cells hit numeric failures", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_fit(args) -> int:
    base = {}
    if args.circuit_file:
        try:
            base = json.loads(Path(args.circuit_file).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read circuit file: {exc}") from exc
        if "C_range" in base:
            base["C_range"] = tuple(base["C_range"])
    base["R"] = args.R
    try:
        cp = CircuitParams(**base)
    except (TypeError, DomainError) as exc:
        raise ConfigError(f"invalid circuit: {exc}") from exc
    params = fit_ris_params(cp, args.samples)
    text = params.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    cells = len(cfg.sweep) * cfg.n_seeds * len(cfg.methods)
    print(f"{args.config}: ok ({cfg.family}, {len(cfg.sweep)} sweep points, "
          f"{cfg.n_seeds} seeds, {len(cfg.methods)} methods, {cells} cells)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ris-secrecy", description="Secrecy-rate experiments with a lossy RIS.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides the config)")
    r.add_argument("--threads", type=int, default=1, help="worker processes")
    r.add_argument("--no-plots", action="store_true")
    r.set_defaults(func=_cmd_run)

    f = sub.add_parser("fit-ris", help="fit the amplitude law and print RisParams JSON")
    f.add_argument("--R", type=float, required=True, help="element resistance in ohm")
    f.add_argument("--circuit-file", help="JSON with circuit constants (L1, L2, f, Z0, C_range)")
    f.add_argument("--samples", type=int, default=512)
    f.add_argument("--out", help="also write the JSON here")
    f.set_defaults(func=_cmd_fit)

    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    v.set_defaults(func=_cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, FitError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
