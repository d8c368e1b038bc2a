"""Command-line interface.

Subcommands::

    dataset convert|tile|split      annotation conversion, tiling, splits
    filters build|respond|apply|export   directional filter bank tooling
    vegmetric analyze               batch vegetation metric reports
    eval sweep|roc|severity|ap      evaluation curves and detection AP
    pipeline run                    full ingest -> metric -> alert batch run

Exit codes: 0 clean, 2 at least one alert emitted, 64 usage error,
65 data error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import evalkit, filterbank, pipeline, svgplot
from .config import RunConfig, load_config, save_config
from .imaging import RasterImage


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}error: {message}")


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "threads", None):
        cfg = replace(cfg, threads=args.threads)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "live_clock", False):
        stamp = datetime.datetime.now(datetime.timezone.utc)
        cfg = replace(cfg, run_timestamp=stamp.isoformat())
    return cfg.validate()


def _read_csv_column(path: str) -> np.ndarray:
    vals = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                vals.append(float(row[0]))
            except ValueError:
                continue  # header row
    if not vals:
        raise ValueError(f"{path} holds no numeric values")
    return np.asarray(vals)


# ---------------------------------------------------------------- dataset

def _cmd_dataset_convert(args) -> int:
    images = ds.parse_annotations(args.coco)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for img in images:
        labels = [(name, ds.polygon_to_obb(poly)) for name, poly in img.instances]
        ds.write_obb_labels(labels, out / f"{img.parent_id}.txt",
                            (img.width, img.height))
    print(f"wrote {len(images)} label files to {out}")
    return 0


def _cmd_dataset_tile(args) -> int:
    images = ds.parse_annotations(args.coco)
    policy = ds.TilePolicy(tile_size=args.tile, drop_empty=not args.keep_empty)
    out = Path(args.out)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    images_dir = Path(args.images) if args.images else None
    if images_dir:
        (out / "tiles").mkdir(exist_ok=True)
    entries = []
    for img in images:
        records = ds.tile_image(img, policy)
        raster = None
        if images_dir:
            src = images_dir / Path(img.image_path).name
            if src.exists():
                raster = RasterImage.from_file(src)
            else:
                print(f"warning: missing image {src}", file=sys.stderr)
        for rec in records:
            label_file = out / "labels" / f"{rec.tile_id}.txt"
            ds.write_obb_labels(rec.labels, label_file, (rec.size, rec.size))
            image_file = None
            if raster is not None:
                image_file = f"tiles/{rec.tile_id}.png"
                ds.crop_tile(raster, rec).to_file(out / image_file)
            entries.append({
                "tile_id": rec.tile_id,
                "parent_id": rec.parent_id,
                "origin": list(rec.origin),
                "n_labels": len(rec.labels),
                "label_file": f"labels/{rec.tile_id}.txt",
                "image_file": image_file,
            })
    manifest = {"tile_size": policy.tile_size, "tiles": entries}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(entries)} tiles to {out}")
    return 0


def _cmd_dataset_split(args) -> int:
    doc = json.loads(Path(args.manifest).read_text())
    records = [ds.TileRecord(t["parent_id"], tuple(t["origin"]),
                             doc["tile_size"], []) for t in doc["tiles"]]
    train, val, test = ds.split_dataset(records, seed=args.seed)
    names = {}
    for split_name, recs in (("train", train), ("val", val), ("test", test)):
        names[split_name] = sorted(r.tile_id for r in recs)
    out = Path(args.out)
    out.write_text(json.dumps({"seed": args.seed, "splits": names}, indent=2) + "\n")
    print(f"split {len(records)} tiles -> "
          f"{len(names['train'])}/{len(names['val'])}/{len(names['test'])}")
    return 0


# ---------------------------------------------------------------- filters

def _cmd_filters_build(args) -> int:
    params = filterbank.default_block_params()
    print("angle_deg  hp_dc      hp_l2     lp_dc")
    for idx, ang in enumerate(filterbank.BANK_ANGLES_DEG):
        hp = params.hp_bank.kernels[idx].weights
        lp = params.lp_bank.kernels[idx].weights
        print(f"{ang:9.4f}  {hp.sum():+.2e}  {np.sqrt((hp**2).sum()):.5f}  {lp.sum():.5f}")
    if args.out:
        filterbank.export_block_weights(params, args.out)
        print(f"weights written to {args.out}")
    return 0


def _cmd_filters_export(args) -> int:
    filterbank.export_block_weights(filterbank.default_block_params(), args.out)
    print(f"weights written to {args.out}")
    return 0


def _cmd_filters_respond(args) -> int:
    params = filterbank.default_block_params()
    bank = params.hp_bank if args.bank == "highpass" else params.lp_bank
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["angle_deg", "omega1", "omega2", "magnitude"])
        om = np.linspace(-np.pi, np.pi, args.grid, endpoint=False)
        for kernel in bank.kernels:
            resp = filterbank.frequency_response(kernel, args.grid).values
            for r in range(args.grid):
                for c in range(args.grid):
                    writer.writerow([f"{kernel.angle_deg:.6f}", f"{om[c]:.6f}",
                                     f"{om[r]:.6f}", f"{resp[r, c]:.9f}"])
    print(f"responses written to {args.out}")
    return 0


def _cmd_filters_apply(args) -> int:
    img = RasterImage.from_file(getattr(args, "in"))
    out = filterbank.directional_block_forward(img)
    out.to_file(args.out)
    print(f"filtered image written to {args.out}")
    return 0


# ---------------------------------------------------------------- vegmetric

def _cmd_vegmetric_analyze(args) -> int:
    cfg = _load_run_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports, warnings = pipeline.analyze_batch(args.images, args.labels, cfg)
    with open(out / "reports.jsonl", "w") as fh:
        for r in reports:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
    (out / "summary.csv").write_text(pipeline._summary_csv(reports))
    save_config(cfg, out / "run_config.txt")
    print(f"analyzed {len(reports)} images ({len(warnings)} warnings) -> {out}")
    return 0


# ---------------------------------------------------------------- eval

def _cmd_eval_sweep(args) -> int:
    scores = _read_csv_column(args.scores)
    labels = _read_csv_column(args.labels).astype(bool)
    lo, hi = float(scores.min()), float(scores.max())
    grid = np.linspace(lo, hi, args.grid) if hi > lo else np.array([lo])
    curve = evalkit.sweep(scores, labels, grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "curve.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["threshold", "precision", "recall", "f1", "accuracy"])
        for i in range(curve.thresholds.size):
            writer.writerow([repr(float(v)) for v in
                             (curve.thresholds[i], curve.precision[i],
                              curve.recall[i], curve.f1[i], curve.accuracy[i])])
    svgplot.line_chart(
        out / "curve.svg",
        [("precision", curve.thresholds, curve.precision),
         ("recall", curve.thresholds, curve.recall),
         ("f1", curve.thresholds, curve.f1)],
        "threshold", "score", "threshold sweep",
        xlim=(float(curve.thresholds[0]), float(max(curve.thresholds[-1],
                                                    curve.thresholds[0] + 1e-9))))
    tau, at = evalkit.optimal_threshold(curve)
    doc = {"optimal_threshold": tau, **at, "auc": curve.auc}
    (out / "best.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    print(f"optimal threshold {tau:.4f} (f1 {at['f1']:.4f}) -> {out}")
    return 0


def _cmd_eval_roc(args) -> int:
    scores = _read_csv_column(args.scores)
    labels = _read_csv_column(args.labels).astype(bool)
    points, auc = evalkit.roc_auc(scores, labels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "roc.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fpr", "tpr"])
        for fpr, tpr in points:
            writer.writerow([repr(float(fpr)), repr(float(tpr))])
    svgplot.line_chart(out / "roc.svg",
                       [("roc", points[:, 0], points[:, 1]),
                        ("chance", [0.0, 1.0], [0.0, 1.0])],
                       "false positive rate", "true positive rate",
                       f"ROC (AUC {auc:.4f})")
    (out / "roc.json").write_text(json.dumps({"auc": auc}, indent=2) + "\n")
    print(f"AUC {auc:.4f} -> {out}")
    return 0


def _cmd_eval_severity(args) -> int:
    metrics = _read_csv_column(args.metrics)
    table = evalkit.severity_table(metrics)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = {"cut_points": list(table.cut_points), "degenerate": table.degenerate,
           "levels": list(table.levels)}
    (out / "severity.json").write_text(json.dumps(doc, indent=2) + "\n")
    with open(out / "levels.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["metric", "level"])
        for v in metrics:
            writer.writerow([repr(float(v)), table.classify(float(v))])
    print(f"cut points {tuple(round(c, 4) for c in table.cut_points)} -> {out}")
    return 0


def _cmd_eval_ap(args) -> int:
    preds_dir, gts_dir = Path(args.preds), Path(args.gts)
    size = (args.size, args.size)
    preds, gts = {}, {}
    for path in sorted(gts_dir.glob("*.txt")):
        gts[path.stem] = [box for _, box in ds.read_obb_labels(path, size)]
    for path in sorted(preds_dir.glob("*.txt")):
        entries = ds.read_obb_labels(path, size, with_scores=True)
        preds[path.stem] = [(box, 1.0 if score is None else score)
                            for _, box, score in entries]
    result = evalkit.detection_ap(preds, gts)
    doc = {"ap50": result.ap50, "ap50_95": result.ap50_95,
           "defined": result.defined,
           "ap_per_iou": {f"{t:.2f}": v for t, v in result.ap_per_iou.items()}}
    text = json.dumps(doc, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


# ---------------------------------------------------------------- pipeline

def _cmd_pipeline_run(args) -> int:
    cfg = _load_run_config(args)
    out_dir = args.out or cfg.out_dir
    if not out_dir:
        raise ValueError("an output directory is required (--out or config out_dir)")
    result = pipeline.run_pipeline(args.images, args.labels, cfg, out_dir,
                                   post_url=args.post)
    print(f"{len(result.reports)} reports, {len(result.alerts)} alerts, "
          f"{len(result.warnings)} warnings -> {result.out_dir}")
    return result.exit_code


# ---------------------------------------------------------------- parser

def _add_common(parser) -> None:
    parser.add_argument("--config", help="run configuration file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)


def build_parser() -> _Parser:
    top = _Parser(prog="plcorridor",
                  description="power-line corridor inspection toolkit")
    sub = top.add_subparsers(dest="group", parser_class=_Parser)

    p_ds = sub.add_parser("dataset", help="annotation conversion, tiling, splits")
    ds_sub = p_ds.add_subparsers(dest="cmd", parser_class=_Parser)
    p = ds_sub.add_parser("convert")
    p.add_argument("--coco", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_dataset_convert)
    p = ds_sub.add_parser("tile")
    p.add_argument("--coco", required=True)
    p.add_argument("--images", help="source frame directory (omit for labels only)")
    p.add_argument("--out", required=True)
    p.add_argument("--tile", type=int, default=640)
    p.add_argument("--keep-empty", action="store_true")
    p.set_defaults(func=_cmd_dataset_tile)
    p = ds_sub.add_parser("split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_dataset_split)

    p_f = sub.add_parser("filters", help="directional filter bank tooling")
    f_sub = p_f.add_subparsers(dest="cmd", parser_class=_Parser)
    p = f_sub.add_parser("build")
    p.add_argument("--out", help="also export weights JSON here")
    p.set_defaults(func=_cmd_filters_build)
    p = f_sub.add_parser("export")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_filters_export)
    p = f_sub.add_parser("respond")
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--bank", choices=("highpass", "lowpass"), default="highpass")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_filters_respond)
    p = f_sub.add_parser("apply")
    p.add_argument("--in", required=True, dest="in")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_filters_apply)

    p_v = sub.add_parser("vegmetric", help="vegetation metric analysis")
    v_sub = p_v.add_subparsers(dest="cmd", parser_class=_Parser)
    p = v_sub.add_parser("analyze")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_vegmetric_analyze)

    p_e = sub.add_parser("eval", help="evaluation curves and detection AP")
    e_sub = p_e.add_subparsers(dest="cmd", parser_class=_Parser)
    p = e_sub.add_parser("sweep")
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--grid", type=int, default=101)
    p.set_defaults(func=_cmd_eval_sweep)
    p = e_sub.add_parser("roc")
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval_roc)
    p = e_sub.add_parser("severity")
    p.add_argument("--metrics", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval_severity)
    p = e_sub.add_parser("ap")
    p.add_argument("--preds", required=True)
    p.add_argument("--gts", required=True)
    p.add_argument("--size", type=int, default=640)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eval_ap)

    p_p = sub.add_parser("pipeline", help="full batch run")
    p_sub = p_p.add_subparsers(dest="cmd", parser_class=_Parser)
    p = p_sub.add_parser("run")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out")
    p.add_argument("--post", help="POST each alert record to this URL")
    p.add_argument("--live-clock", action="store_true",
                   help="stamp alerts with the current UTC time")
    _add_common(p)
    p.set_defaults(func=_cmd_pipeline_run)

    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(str(err), file=sys.stderr)
        return 64
    except SystemExit as err:  # --help
        return int(err.code or 0)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 64
    try:
        return args.func(args) or 0
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 65


if __name__ == "__main__":
    sys.exit(main())
