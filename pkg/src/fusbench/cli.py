"""Command-line front end: generate / sample / evaluate / compare.

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(missing/corrupt inputs), 3 internal error.  Config files are JSON with a
strict schema — unknown keys are rejected by name — and command-line flags
override config values.
"""

from __future__ import annotations

import argparse
import shutil
import sys
import traceback
from pathlib import Path

from . import __version__
from .core import InputError
from .io import read_json, write_json
from .pipeline import (
    SequenceScorer,
    compare_grid,
    load_trajectory,
    run_sequence,
    write_trajectory,
)
from .report import write_report
from .sampler import STRATEGIES, SamplerConfig
from .simulator import KINDS, NoiseSpec, build_scene, generate_sequence, load_sequence, write_sequence

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

_ABLATION_TRIO = ["FUS", "FUS-no-uncertainty", "FUS-no-consistency"]

_CONFIG_KEYS = {"scene", "noise", "sampler", "strategies", "seeds", "num_inferences"}
_SCENE_KEYS = {"kind", "seed", "frames", "overrides"}


class UsageError(Exception):
    """Bad flags or bad config; exits with code 1."""


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def load_config(path) -> dict:
    """Load and strictly validate a JSON run config."""
    path = Path(path)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    try:
        payload = read_json(path)
    except ValueError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})")
    if not isinstance(payload, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    unknown = sorted(set(payload) - _CONFIG_KEYS)
    if unknown:
        raise UsageError(f"{path}: unknown config keys: {', '.join(unknown)}")
    scene = payload.get("scene", {})
    if not isinstance(scene, dict):
        raise UsageError(f"{path}: 'scene' must be an object")
    bad = sorted(set(scene) - _SCENE_KEYS)
    if bad:
        raise UsageError(f"{path}: unknown scene keys: {', '.join(bad)}")
    for section, builder in (("noise", NoiseSpec.from_dict), ("sampler", SamplerConfig.from_dict)):
        if section in payload:
            try:
                builder(payload[section])
            except (InputError, TypeError) as exc:
                raise UsageError(f"{path}: invalid '{section}' section: {exc}")
    if "strategies" in payload:
        _check_strategies(payload["strategies"])
    if "seeds" in payload and not all(isinstance(s, int) for s in payload["seeds"]):
        raise UsageError(f"{path}: 'seeds' must be a list of integers")
    return payload


def _check_strategies(names) -> list[str]:
    if not names:
        raise UsageError("strategy list is empty")
    for name in names:
        if name not in STRATEGIES:
            raise UsageError(
                f"unknown strategy {name!r}; choose from {', '.join(STRATEGIES)}"
            )
    return list(names)


def _parse_seeds(text: str) -> list[int]:
    """Accept '0,1,5' lists and 'a:b' half-open ranges."""
    text = text.strip()
    if ":" in text:
        lo, _, hi = text.partition(":")
        try:
            return list(range(int(lo), int(hi)))
        except ValueError:
            raise UsageError(f"bad seed range: {text!r}")
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise UsageError(f"bad seed list: {text!r}")


def _sampler_config(config: dict, args) -> SamplerConfig:
    """Sampler section of the config with flag overrides applied."""
    cfg = SamplerConfig.from_dict(config.get("sampler", {}))
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "strategy", None) is not None:
        overrides["strategy"] = args.strategy
    if getattr(args, "points_per_part", None) is not None:
        overrides["points_per_part"] = args.points_per_part
    return cfg.with_overrides(**overrides) if overrides else cfg


def build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed override")
    common.add_argument("--config", default=None, help="JSON run config")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--workers", type=int, default=1, help="worker processes")
    common.add_argument("--format", choices=("csv", "json"), default=None,
                        help="report table format (default csv)")

    parser = _Parser(prog="fusbench",
                     description="part-aware point sampling benchmark")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("generate", parents=[common],
                       help="render a synthetic articulated-object sequence")
    p.add_argument("--kind", choices=KINDS, default=None)
    p.add_argument("--frames", type=int, default=None)
    p.add_argument("--num-inferences", type=int, default=None,
                   help="stochastic inferences per frame")

    p = sub.add_parser("sample", parents=[common],
                       help="run a sampling strategy over a sequence")
    p.add_argument("--sequence", required=True, help="sequence directory")
    p.add_argument("--strategy", choices=STRATEGIES, default=None)
    p.add_argument("--points-per-part", type=int, default=None)
    p.add_argument("--oracle", action="store_true",
                   help="segment from ground-truth labels instead of the network")

    p = sub.add_parser("evaluate", parents=[common],
                       help="score a sampled trajectory against its sequence")
    p.add_argument("--sequence", required=True)
    p.add_argument("--trajectory", required=True)
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("compare", parents=[common],
                       help="run a strategy-by-seed grid and report metrics")
    p.add_argument("--sequence", action="append", default=None, required=True,
                   help="sequence directory (repeatable)")
    p.add_argument("--strategies", default=None,
                   help="comma-separated strategy names")
    p.add_argument("--ablation", action="store_true",
                   help="run the FUS / no-uncertainty / no-consistency trio")
    p.add_argument("--seeds", default=None,
                   help="seed list '0,1,2' or range '0:100'")
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--no-figures", action="store_true")
    return parser


def _require_out(args) -> Path:
    if args.out is None:
        raise UsageError("--out is required")
    return Path(args.out)


def cmd_generate(args) -> int:
    config = load_config(args.config) if args.config else {}
    scene_cfg = dict(config.get("scene", {}))
    if args.kind is not None:
        scene_cfg["kind"] = args.kind
    if args.seed is not None:
        scene_cfg["seed"] = args.seed
    if args.frames is not None:
        scene_cfg["frames"] = args.frames
    if "kind" not in scene_cfg:
        raise UsageError("missing required field: scene.kind (or --kind)")
    kind = scene_cfg["kind"]
    if kind not in KINDS:
        raise UsageError(f"unknown scene kind {kind!r}; choose from {', '.join(KINDS)}")
    out = _require_out(args)
    spec = build_scene(
        kind,
        seed=int(scene_cfg.get("seed", 0)),
        frames=int(scene_cfg.get("frames", 20)),
        overrides=scene_cfg.get("overrides"),
    )
    noise = NoiseSpec.from_dict(config.get("noise", {}))
    num_inferences = int(
        args.num_inferences
        if args.num_inferences is not None
        else config.get("num_inferences", 4)
    )
    seq = generate_sequence(spec, noise, num_inferences=num_inferences)
    existed = out.exists()
    try:
        write_sequence(seq, out)
    except OSError as exc:
        if not existed and out.exists():
            shutil.rmtree(out, ignore_errors=True)
        raise InputError(f"failed writing sequence to {out}: {exc}")
    print(f"wrote {spec.frames}-frame {kind} sequence to {out}")
    return EXIT_OK


def cmd_sample(args) -> int:
    config = load_config(args.config) if args.config else {}
    cfg = _sampler_config(config, args)
    out = _require_out(args)
    seq = load_sequence(args.sequence)
    sampled = run_sequence(seq, cfg, oracle=args.oracle)
    write_trajectory(out, sampled, cfg, sequence_dir=str(args.sequence), oracle=args.oracle)
    total = sum(f.total_points() for f in sampled)
    print(f"sampled {len(sampled)} frames ({total} points, strategy={cfg.strategy}) to {out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    out = _require_out(args)
    fmt = args.format or "csv"
    seq = load_sequence(args.sequence)
    sampled, manifest = load_trajectory(args.trajectory)
    scorer = SequenceScorer(seq)
    rows = scorer.rows_for_run(sampled, manifest["strategy"], int(manifest["seed"]))
    paths = write_report(out, rows, fmt=fmt, figures=not args.no_figures)
    print(f"wrote {len(rows)} metric rows to {paths['table']}")
    return EXIT_OK


def cmd_compare(args) -> int:
    config = load_config(args.config) if args.config else {}
    cfg = _sampler_config(config, args)
    out = _require_out(args)
    fmt = args.format or "csv"

    if args.ablation:
        strategies = list(_ABLATION_TRIO)
        if args.strategies:
            strategies += [s for s in args.strategies.split(",") if s not in strategies]
    elif args.strategies is not None:
        strategies = [s for s in args.strategies.split(",") if s]
    else:
        strategies = list(config.get("strategies", []))
    strategies = _check_strategies(strategies)

    if args.seeds is not None:
        seeds = _parse_seeds(args.seeds)
    else:
        seeds = [int(s) for s in config.get("seeds", [0])]
    if not seeds:
        raise UsageError("seed list is empty")

    rows, failures = compare_grid(
        args.sequence, strategies, seeds, cfg,
        workers=max(1, args.workers), oracle=args.oracle,
    )
    paths = write_report(out, rows, fmt=fmt, figures=not args.no_figures)
    write_json(
        out / "run_manifest.json",
        {
            "sequences": [str(s) for s in args.sequence],
            "strategies": strategies,
            "seeds": seeds,
            "sampler": cfg.to_dict(),
            "oracle": bool(args.oracle),
            "tool_version": __version__,
        },
    )
    if failures:
        write_json(out / "failures.json", failures)
        for failure in failures:
            print(
                f"cell failed: {failure['strategy']} seed={failure['seed']} "
                f"({failure['sequence']}): {failure['error']}",
                file=sys.stderr,
            )
        all_data = all(f["error"].startswith("InputError") for f in failures)
        return EXIT_DATA if all_data else EXIT_INTERNAL
    print(f"wrote {len(rows)} metric rows to {paths['table']}")
    return EXIT_OK


_COMMANDS = {
    "generate": cmd_generate,
    "sample": cmd_sample,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
