"""Command-line entry point: ``artimesh <subcommand> [options]``.

Exit codes: 0 success, 1 partial joint failures (or a runtime failure),
2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ArtimeshError, ConfigError
from .evaluation import report_table
from .pipeline import (RunConfig, cmd_articulate, cmd_eval, cmd_export_urdf, cmd_fixtures, cmd_prompts, cmd_refine,
                       run_fixture_suite)

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("artimesh")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="TOML run configuration")
    p.add_argument("--seed", type=int, help="random seed (sampling, clustering, refinement)")
    p.add_argument("--oracle", choices=("remote", "mock", "replay"), help="oracle backend")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return p


def _inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fixture", type=Path, help="fixture directory (mesh.obj, labels.txt, truth.json)")
    p.add_argument("--mesh", type=Path, help="segmented OBJ mesh")
    p.add_argument("--labels", type=Path, help="per-face label file")
    p.add_argument("--object-name", help="object name used in prompts")
    p.add_argument("--tree", type=Path, help="declared tree (.json or fenced articulation tree text)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="artimesh", description="Articulate segmented meshes into URDF.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()

    p = sub.add_parser("articulate", parents=[common], help="run the full pipeline")
    _inputs(p)
    p.add_argument("--fixtures-dir", type=Path, help="articulate and evaluate every fixture in a directory")
    p.add_argument("--workers", type=int, help="concurrent joint estimations")
    p.add_argument("--noise", type=float, help="Gaussian point noise (normalized units)")
    p.add_argument("--replay-dir", type=Path, help="stored transcripts for --oracle replay")
    p.add_argument("--recognize-parts", action="store_true", default=None, help="ask the oracle for the part list")
    p.add_argument("--debug-ply", action="store_true", default=None, help="dump connecting areas as PLY")

    p = sub.add_parser("prompts", parents=[common], help="render prompt images without calling the oracle")
    _inputs(p)
    p.add_argument("--joint", help="only this joint")

    p = sub.add_parser("eval", parents=[common], help="score predictions against ground truth")
    p.add_argument("pred", type=Path, help="predictions JSON (or run directory)")
    p.add_argument("gt", type=Path, help="ground truth JSON (or fixtures directory)")

    sub.add_parser("fixtures", parents=[common], help="write the synthetic fixture corpus")

    p = sub.add_parser("export-urdf", parents=[common], help="export a tree.json as URDF")
    _inputs(p)

    p = sub.add_parser("refine", parents=[common], help="run the refinement scheduler with analytic guidance")
    _inputs(p)
    p.add_argument("--iterations", type=int, help="number of iterations")
    return parser


_OVERRIDES = {"seed": "seed", "oracle": "oracle", "out": "out", "fixture": "fixture", "mesh": "mesh",
              "labels": "labels", "object_name": "object_name", "tree": "tree", "fixtures_dir": "fixtures_dir",
              "workers": "workers", "noise": "noise", "replay_dir": "replay_dir",
              "recognize_parts": "recognize_parts", "debug_ply": "debug_ply", "iterations": "iterations"}


def make_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_toml(args.config) if args.config else RunConfig()
    kw = {field: getattr(args, name) for name, field in _OVERRIDES.items()
          if getattr(args, name, None) is not None}
    return cfg.replace(**kw)


def _run(args: argparse.Namespace) -> int:
    cfg = make_config(args)
    if args.command == "fixtures":
        out = args.out or (cfg.out if args.config else Path("fixtures"))
        dirs = cmd_fixtures(out, cfg.seed)
        print(f"wrote {len(dirs)} fixtures to {out}")
        return EXIT_OK
    if args.command == "eval":
        report = cmd_eval(args.pred, args.gt, args.out)
        print(report_table(report), end="")
        return EXIT_OK
    if args.command == "articulate":
        if cfg.fixtures_dir is not None:
            cfg.validate()
            results, report = run_fixture_suite(cfg)
            print(report_table(report), end="")
            failed = [f"{r.run_dir.name}/{n}" for r in results for n in r.failed]
        else:
            res = cmd_articulate(cfg)
            failed = res.failed
            for j in res.report["joints"]:
                axis = j.get("axis")
                desc = "" if axis is None else f" dir={['%.4f' % v for v in axis['direction']]}"
                print(f"{j['name']}: {j['status']} {j.get('type', '')}{desc} limits={j.get('limits')}")
            print(f"run directory: {res.run_dir}")
        if failed:
            print(f"failed joints: {', '.join(failed)}", file=sys.stderr)
            return EXIT_PARTIAL
        return EXIT_OK
    if args.command == "prompts":
        for path in cmd_prompts(cfg, args.joint):
            print(path)
        return EXIT_OK
    if args.command == "export-urdf":
        manifest = cmd_export_urdf(cfg, cfg.tree)
        print(json.dumps(manifest, indent=2))
        return EXIT_OK
    if args.command == "refine":
        summary = cmd_refine(cfg, cfg.tree)
        print(json.dumps(summary, indent=2))
        return EXIT_PARTIAL if summary["error"] else EXIT_OK
    raise ConfigError(f"unknown command {args.command!r}")  # pragma: no cover


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArtimeshError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
