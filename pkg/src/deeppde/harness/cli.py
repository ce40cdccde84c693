"""Command-line entry point: ``deeppde {train,evaluate,sweep,price,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .. import dgm, tdgf
from ..models import ModelSpec
from .config import PRESETS, load_config
from .report import read_records, write_report
from .sweep import METHODS, MODELS, PARAMS, SweepConfig, evaluate, run_sweep, train

log = logging.getLogger("deeppde")


def _int_list(text: str) -> tuple:
    return tuple(int(v) for v in text.replace(",", " ").split())


def model_from_manifest(manifest: dict) -> ModelSpec:
    desc = dict(manifest["model"])
    desc["domain"] = tuple(tuple(iv) for iv in desc["domain"])
    return ModelSpec(**desc)


def load_archive(directory):
    """``(method, solution, manifest)`` for a TDGF or DGM archive."""
    manifest = json.loads((Path(directory) / "manifest.json").read_text())
    if manifest["method"] == "tdgf":
        sols, manifest = tdgf.load_solution(directory)
        return "tdgf", sols, manifest
    sol, manifest = dgm.load_solution(directory)
    return "dgm", sol, manifest


def cmd_train(args, cfg) -> int:
    model = cfg.model_spec(args.model)
    solver = cfg.solver(args.method)
    if args.seeds:
        solver = replace(solver, seed=_int_list(args.seeds)[0])
    if args.order is not None:
        if args.method != "tdgf":
            raise SystemExit("--order applies to tdgf only")
        solver = replace(solver, order=args.order)
    out = Path(args.out)
    _, sol, seconds = train(args.method, model, solver)
    extra = {"train_seconds": seconds}
    if args.method == "tdgf":
        tdgf.save_solution(sol, out, model, solver, extra)
    else:
        dgm.save_solution(sol, out, model, solver, extra)
    cfg = cfg.with_solver(args.method, **{f: getattr(solver, f) for f in ("seed",)})
    cfg.echo(out)
    print(f"trained {args.method}/{args.model} in {seconds:.2f} s -> {out}")
    return 0


def cmd_evaluate(args, cfg) -> int:
    method, sol, manifest = load_archive(args.out)
    model = model_from_manifest(manifest)
    predict = sol[-1] if method == "tdgf" else sol
    err = evaluate(predict, model, cfg)
    print(f"l2_error {err!r} ({method}/{model.name}, t={model.T}, {cfg.points} points per dimension)")
    return 0


def cmd_price(args, cfg) -> int:
    method, sol, manifest = load_archive(args.snapshot or args.out)
    model = model_from_manifest(manifest)
    if not 0.0 <= args.t <= model.T:
        raise SystemExit(f"error: t={args.t} outside [0, {model.T}]")
    point = [args.S] if model.dim == 1 else [args.S, args.V]
    if model.dim == 2 and args.V is None:
        raise SystemExit("error: heston prices need --V")
    x = np.array([point], dtype=float)
    if method == "tdgf":
        step = tdgf.nearest_step(sol, args.t)
        price = float(step(x)[0])
        print(f"price {price!r} (tdgf step k={step.k}, t_k={step.t!r})")
    else:
        price = float(sol.at(args.t)(x)[0])
        print(f"price {price!r} (dgm, t={args.t!r})")
    return 0


def cmd_sweep(args, cfg) -> int:
    if not args.param or not args.values:
        raise SystemExit("sweep needs --param and --values")
    seeds = _int_list(args.seeds) if args.seeds else cfg.seeds
    sweep = SweepConfig(args.method, args.model, args.param, _int_list(args.values),
                        order=args.order or 1, seeds=seeds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.echo(out)

    def progress(rec):
        print(f"{rec.param}={rec.value} seed={rec.seed} l2={rec.l2_error:.5g} "
              f"time={rec.train_seconds:.2f}s {rec.status}", flush=True)

    records = run_sweep(sweep, cfg, progress)
    paths = write_report(records, out)
    print(paths["table"].read_text(), end="")
    return 0


def cmd_report(args, cfg) -> int:
    out = Path(args.out)
    records = read_records(out / "records.csv")
    paths = write_report(records, out)
    print(paths["table"].read_text(), end="")
    return 0


COMMANDS = {
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "price": cmd_price,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file overlaid on the preset")
    common.add_argument("--preset", choices=PRESETS, default="desk")
    common.add_argument("--method", choices=METHODS, default="tdgf")
    common.add_argument("--model", choices=MODELS, default="black_scholes")
    common.add_argument("--param", choices=sorted(PARAMS))
    common.add_argument("--values", help="comma-separated increasing integers")
    common.add_argument("--seeds", help="comma-separated seeds (train uses the first)")
    common.add_argument("--order", type=int, choices=(1, 2))
    common.add_argument("--out", default="runs/latest", help="output or archive directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="deeppde", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="train one solver and archive it")
    sub.add_parser("evaluate", parents=[common], help="L2 error of an archive at t = T")
    sub.add_parser("sweep", parents=[common], help="seeded one-parameter sweep")
    p = sub.add_parser("price", parents=[common], help="price with a trained archive")
    p.add_argument("--snapshot", help="archive directory (defaults to --out)")
    p.add_argument("--t", type=float, required=True, help="time to maturity")
    p.add_argument("--S", type=float, required=True)
    p.add_argument("--V", type=float)
    sub.add_parser("report", parents=[common], help="rebuild summaries from records.csv in --out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.preset)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return COMMANDS[args.command](args, cfg)


if __name__ == "__main__":
    sys.exit(main())
