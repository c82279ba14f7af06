"""Command-line entry point: ``echoimaging <subcommand> ...``.

Failures print one JSON object on stderr, e.g.
``{"error": "SceneError", "field": "room.size_x", "message": "non-positive size"}``,
and exit with status 1 (2 for malformed command lines).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("UsageError", message, status=2)


def _fail(kind: str, message: str, status: int = 1, field: str | None = None):
    payload = {"error": kind, "message": " ".join(str(message).split())}
    if field is not None:
        payload = {"error": kind, "field": field, "message": payload["message"]}
    print(json.dumps(payload), file=sys.stderr)
    raise SystemExit(status)


def _emit(obj) -> None:
    print(json.dumps(obj))


# -- subcommands --------------------------------------------------------------


def cmd_simulate(args):
    from .dataset import ExperimentPlan, generate_dataset, preset

    if args.plan is not None:
        plan = ExperimentPlan.from_json(args.plan)
    else:
        plan = preset(args.preset)
    if args.seed is not None:
        from dataclasses import replace

        plan = replace(plan, seed=args.seed)
    written = generate_dataset(plan, args.out)
    _emit({"out": str(args.out), "files": sorted(written)})


def cmd_render(args):
    from .scene import SceneConfig, validate
    from .tracer import render_depth

    scene = validate(SceneConfig.from_json(Path(args.scene)))
    img = render_depth(scene, height=args.height, width=args.width)
    if args.out.endswith(".csv"):
        img.to_csv(args.out)
    else:
        img.to_pgm(args.out, args.meters_per_level)
    _emit({"out": args.out, "min_depth_m": float(img.depth.min()), "max_depth_m": float(img.depth.max())})


def cmd_truncate(args):
    from .dataset import DatasetFile, truncate_dataset

    data = DatasetFile.load(args.inp)
    out = truncate_dataset(data, args.k, args.c)
    out.save(args.out)
    _emit({"out": args.out, "records": len(out), "t_cut_s": (args.k + 1) * data.depth_scale_m / args.c})


def cmd_info(args):
    from .dataset import load_histograms
    from .infotheory import multipath_information_curve

    curve = multipath_information_curve(load_histograms(args.data, args.kmax))
    curve.to_csv(args.out)
    _emit({"out": args.out, "H1_bits": curve.h1_bits, "UI_bits": {str(k): v for k, v in curve.rows()}})


def cmd_train(args):
    from .dataset import DatasetFile
    from .reconstruct import TrainConfig, save, train

    config = TrainConfig.from_json(args.config) if args.config else TrainConfig()
    data = DatasetFile.load(args.data)
    tr = data.training_data(count_transform=args.count_transform)
    te = DatasetFile.load(args.test).training_data(tr.count_scale, args.count_transform) if args.test else None
    params, report = train(tr, config, te)
    save(params, args.out)
    if args.report:
        report.to_json(args.report)
    _emit({"out": args.out, "final_loss": report.epoch_losses[-1], "test_mse": report.final_test_mse})


def cmd_predict(args):
    from .histogram import EchoHistogram
    from .reconstruct import load, predict

    params = load(args.model)
    img = predict(params, EchoHistogram.from_csv(args.histogram))
    if args.out.endswith(".csv"):
        img.to_csv(args.out)
    else:
        img.to_pgm(args.out, args.meters_per_level)
    _emit({"out": args.out, "height": img.height, "width": img.width})


def cmd_eval(args):
    from .dataset import DatasetFile, evaluate_model
    from .io import read_pgm
    from .reconstruct import load

    params = load(args.model)
    data = DatasetFile.load(args.data)
    mask = read_pgm(args.mask)
    rows = evaluate_model(params, data, mask, args.kappa)
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["scene_id", "mse", "iou"])
        for sid, m, i in rows:
            w.writerow([sid, repr(m), repr(i)])
        w.writerow(["mean", repr(float(np.mean([r[1] for r in rows]))), repr(float(np.mean([r[2] for r in rows])))])
    _emit({"out": args.out, "scenes": len(rows)})


def cmd_localize(args):
    from .localizer2d import invert

    est = invert(args.t0, args.t2, args.wall, args.c, t1=args.t1)
    _emit({"x0": est.x0, "y0_abs": est.y0_abs, "ambiguous": est.ambiguity_flag, "candidates": est.candidates})


def cmd_sweep(args):
    from .dataset import ExperimentPlan, preset, run_multipath_sweep

    plan = ExperimentPlan.from_json(args.plan) if args.plan else preset(args.preset)
    report = run_multipath_sweep(plan, args.data, args.out)
    _emit({"out": args.out, "mean_mse": {str(r.k): r.mean_mse for r in report.rows}})


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="echoimaging", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="generate train/test datasets for a plan")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--plan", help="experiment plan JSON")
    src.add_argument("--preset", default="desk", help="named plan: desk, full or info")
    s.add_argument("--seed", type=int, help="override the plan seed")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("render", help="ground-truth depth map of one scene")
    s.add_argument("--scene", required=True)
    s.add_argument("--out", required=True, help=".pgm or .csv")
    s.add_argument("--height", type=int, default=64)
    s.add_argument("--width", type=int, default=64)
    s.add_argument("--meters-per-level", type=float, default=2e-4)
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("truncate", help="zero histogram bins beyond max_tof(k)")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--c", type=float, default=299_792_458.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_truncate)

    s = sub.add_parser("info", help="information gain per bounce order")
    s.add_argument("--data", required=True)
    s.add_argument("--kmax", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_info)

    s = sub.add_parser("train", help="train a reconstruction network")
    s.add_argument("--data", required=True)
    s.add_argument("--test")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--report")
    s.add_argument("--count-transform", choices=("linear", "sqrt"), default="sqrt",
                   help="count transform before max scaling (default sqrt, as in the sweep)")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", help="depth map from one histogram CSV")
    s.add_argument("--model", required=True)
    s.add_argument("--histogram", required=True)
    s.add_argument("--out", required=True, help=".pgm or .csv")
    s.add_argument("--meters-per-level", type=float, default=2e-4)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("eval", help="per-scene MSE and IOU of a model on a dataset")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--mask", required=True)
    s.add_argument("--kappa", type=float, default=0.5)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("localize", help="2D scatterer position from echo times")
    s.add_argument("--t0", type=float, required=True)
    s.add_argument("--t1", type=float)
    s.add_argument("--t2", type=float, required=True)
    s.add_argument("--wall", type=float, required=True)
    s.add_argument("--c", type=float, default=299_792_458.0)
    s.set_defaults(func=cmd_localize)

    s = sub.add_parser("sweep", help="multipath sweep over generated datasets")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--plan")
    src.add_argument("--preset", default="desk")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except SystemExit:
        raise
    except FileNotFoundError as e:
        _fail("FileNotFoundError", f"{e.filename or ''} {e.strerror or e}".strip())
    except json.JSONDecodeError as e:
        _fail("JSONDecodeError", str(e))
    except (ValueError, FloatingPointError, OSError) as e:
        _fail(type(e).__name__, getattr(e, "message", str(e)), field=getattr(e, "field", None))
    return 0


if __name__ == "__main__":
    sys.exit(main())
