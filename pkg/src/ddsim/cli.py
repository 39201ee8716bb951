"""Command-line interface.

Verbs: ``run`` executes a scenario preset and writes a CSV/JSON table,
``presets`` lists the registry, ``sequence dump`` serializes a timeline.
Exit codes: 0 success, 2 unknown preset, 3 malformed config or sequence
spec, 4 unwritable output.  Tables are built fully in memory before writing,
so a failed run never leaves a partial file.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import sequences
from .presets import (
    ConfigError,
    UnknownPresetError,
    list_presets,
    resolve_config,
    run_scenario,
)

EXIT_OK = 0
EXIT_UNKNOWN_PRESET = 2
EXIT_BAD_CONFIG = 3
EXIT_UNWRITABLE = 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as config errors (exit 3)."""

    def error(self, message):
        raise CliError(EXIT_BAD_CONFIG, message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ddsim", description="dynamical-decoupling sequence simulator")
    sub = parser.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run a scenario preset")
    run.add_argument("--preset", required=True)
    run.add_argument("--sequence", default=None, help="restrict a multi-sequence preset")
    run.add_argument("--tau", type=float, default=None, help="inter-pulse delay / cycle time [us]")
    run.add_argument("--cycles", type=int, default=None)
    run.add_argument("--epsilon", type=float, default=None, help="fractional flip-angle error")
    run.add_argument("--delta", type=float, default=None, help="normalized resonance offset")
    run.add_argument("--noise", default=None, help="none | static:SIGMA | ou:SIGMA:TAU_CORR | vector:SIGMA (krad/s, us)")
    run.add_argument("--ensemble", type=int, default=None, help="Monte-Carlo trajectories")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--t-p", type=float, default=None, dest="t_p", help="finite pulse duration [us]")
    run.add_argument("--config", default=None, help="JSON config file with flat dotted keys")
    run.add_argument("--out", default=None, help="output path (default ddsim_<preset>.<format>)")
    run.add_argument("--format", default="csv", choices=("csv", "json"))

    sub.add_parser("presets", help="list scenario presets")

    seq = sub.add_parser("sequence", help="timeline utilities")
    seq_sub = seq.add_subparsers(dest="seq_verb", required=True)
    dump = seq_sub.add_parser("dump", help="serialize a sequence timeline")
    dump.add_argument("--name", required=True, help="hahn|cp|cpmg|udd|xy4|xy8|xy16|cdd|kdd (udd3/cdd2 also work)")
    dump.add_argument("--order", type=int, default=None)
    dump.add_argument("--tau", type=float, default=1.0)
    dump.add_argument("--cycles", type=int, default=1)
    dump.add_argument("--symmetry", default="sym", choices=("sym", "asym"))
    dump.add_argument("--robust", action="store_true", help="wrap each pi pulse in the 5-pulse composite")
    dump.add_argument("--phi0", type=float, default=0.0, help="global phase for kdd [deg]")
    dump.add_argument("--format", default="text", choices=("text", "json"))
    dump.add_argument("--out", default=None)
    return parser


def _noise_overrides(spec: str) -> dict:
    parts = spec.split(":")
    kind = parts[0]
    if kind == "none":
        if len(parts) != 1:
            raise CliError(EXIT_BAD_CONFIG, "noise 'none' takes no parameters")
        return {"noise.kind": "none", "noise.sigma": 0.0}
    try:
        if kind in ("static", "vector") and len(parts) == 2:
            return {"noise.kind": kind, "noise.sigma": float(parts[1])}
        if kind == "ou" and len(parts) == 3:
            return {"noise.kind": "ou", "noise.sigma": float(parts[1]), "noise.tau_corr": float(parts[2])}
    except ValueError:
        pass
    raise CliError(EXIT_BAD_CONFIG, f"bad noise spec {spec!r}")


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(EXIT_UNWRITABLE, f"cannot write {path}: {exc}") from None


def _cmd_run(args) -> int:
    file_cfg = None
    if args.config is not None:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise CliError(EXIT_BAD_CONFIG, f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise CliError(EXIT_BAD_CONFIG, f"config is not valid JSON: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise CliError(EXIT_BAD_CONFIG, "config must be a JSON object")
    overrides = {}
    for key, value in (
        ("sequence", args.sequence),
        ("tau", args.tau),
        ("cycles", args.cycles),
        ("epsilon", args.epsilon),
        ("delta", args.delta),
        ("ensemble.size", args.ensemble),
        ("seed", args.seed),
        ("pulse.t_p", args.t_p),
    ):
        if value is not None:
            overrides[key] = value
    if args.noise is not None:
        overrides.update(_noise_overrides(args.noise))
    try:
        cfg = resolve_config(args.preset, file_cfg, overrides)
        table = run_scenario(cfg)
    except UnknownPresetError as exc:
        raise CliError(EXIT_UNKNOWN_PRESET, f"unknown preset: {exc}") from None
    except (ConfigError, ValueError) as exc:
        raise CliError(EXIT_BAD_CONFIG, str(exc)) from None
    out = args.out or f"ddsim_{args.preset}.{args.format}"
    _write(out, table.to_csv() if args.format == "csv" else table.to_json())
    sys.stderr.write(f"wrote {out} ({len(table.rows)} rows)\n")
    return EXIT_OK


def _cmd_presets() -> int:
    for name, description in list_presets():
        sys.stdout.write(f"{name}: {description}\n")
    return EXIT_OK


def _cmd_dump(args) -> int:
    try:
        timeline = sequences.make_sequence(
            args.name,
            args.tau,
            args.cycles,
            order=args.order,
            symmetry=args.symmetry,
            robust=args.robust,
            phi0_deg=args.phi0,
        )
    except ValueError as exc:
        raise CliError(EXIT_BAD_CONFIG, str(exc)) from None
    text = sequences.to_text(timeline) if args.format == "text" else sequences.to_json(timeline)
    _write(args.out, text)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verb == "run":
            return _cmd_run(args)
        if args.verb == "presets":
            return _cmd_presets()
        return _cmd_dump(args)
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
