"""Command line entry point: ``eitmap <subcommand>``.

Exit codes: 0 success, 1 config error, 2 data error, 3 model error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .dataio import (
    load_frame_sequence,
    load_trigger_train,
    read_pixel_map,
    write_frame_sequence,
    write_pixel_map,
    write_trigger_train,
)
from .errors import ConfigError, EitmapError
from .evaluation import roc_curve, write_roc_csv
from .features import FeatureBundle, build_features
from .fuzzy import load_rule_base
from .gating import MeanCycle, gated_series, mean_cycle_to_sequence, pool_series
from .models import ModelSuite
from .phantom import PhantomConfig, generate_phantom
from .pipeline import default_config_dict, load_config, model_acquisition, run_pipeline
from .segmentation import SegmentationConfig, threshold_map, three_region_segment, union_mask

log = logging.getLogger("eitmap")


def _dump(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def write_phantom(ds, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_frame_sequence(ds.frames, out / "frames.eitf")
    write_trigger_train(ds.cardiac_triggers, out / "cardiac_triggers.txt")
    write_trigger_train(ds.respiratory_triggers, out / "respiratory_triggers.txt")


def cmd_phantom(args) -> int:
    if args.print_default_config:
        _dump(PhantomConfig().to_dict())
        return 0
    cfg = PhantomConfig()
    if args.config:
        try:
            cfg = PhantomConfig.from_dict(json.loads(Path(args.config).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read phantom config {args.config}: {exc}") from exc
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.noise_sigma is not None:
        cfg = replace(cfg, noise_sigma=args.noise_sigma)
    out = Path(args.out)
    acqs = []
    for i in range(args.acquisitions):
        ds = generate_phantom(replace(cfg, seed=cfg.seed + i))
        sub = out if args.acquisitions == 1 else out / f"acq_{i + 1:02d}"
        write_phantom(ds, sub)
        rel = sub.relative_to(out)
        acqs.append({
            "frames": str(rel / "frames.eitf"),
            "cardiac_triggers": str(rel / "cardiac_triggers.txt"),
            "respiratory_triggers": str(rel / "respiratory_triggers.txt"),
        })
    # geometry does not depend on the seed, so truth maps are shared
    for name in ("truth_heart", "truth_lung", "truth_perfused_lung", "truth_ventilated_lung", "saline_reference"):
        write_pixel_map(getattr(ds, name), out / name)
    (out / "phantom_config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")
    pipeline_cfg = default_config_dict()
    pipeline_cfg.update(acquisitions=acqs, acquisition_count=len(acqs), reference="saline_reference.csv",
                        output_dir="results")
    (out / "pipeline.json").write_text(json.dumps(pipeline_cfg, indent=2) + "\n", encoding="utf-8")
    log.info("wrote %d acquisition(s) to %s", len(acqs), out)
    return 0


def cmd_pipeline(args) -> int:
    if args.print_default_config:
        _dump(default_config_dict())
        return 0
    if not args.config:
        raise ConfigError("--config is required")
    raw = Path(args.config).read_bytes() if Path(args.config).is_file() else None
    cfg = load_config(args.config)
    result = run_pipeline(cfg, args.out, raw)
    if result.roc is not None:
        print(f"auc={result.roc.auc:.4f}")
    return 0


def cmd_gate(args) -> int:
    seq = load_frame_sequence(args.frames)
    trig = load_trigger_train(args.triggers)
    series = gated_series(seq, trig, args.group_size, args.target_length)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    index = []
    for i, mc in enumerate(series):
        name = f"{trig.kind}_mean_{i:03d}.eitf"
        write_frame_sequence(mean_cycle_to_sequence(mc, seq.sample_rate), out / name)
        index.append({"file": name, "cycle_count": mc.cycle_count})
    pooled = pool_series(series, args.group_size)
    write_frame_sequence(mean_cycle_to_sequence(pooled, seq.sample_rate), out / f"{trig.kind}_pooled.eitf")
    (out / f"{trig.kind}_index.json").write_text(
        json.dumps({"kind": trig.kind, "group_size": args.group_size, "mean_cycles": index,
                    "pooled": {"file": f"{trig.kind}_pooled.eitf", "cycle_count": pooled.cycle_count}}, indent=2)
        + "\n", encoding="utf-8")
    return 0


def _load_mean_cycle(path, kind: str) -> MeanCycle:
    seq = load_frame_sequence(path)
    return MeanCycle(seq.frames.astype("float64"), kind, 1)


def cmd_features(args) -> int:
    fb = build_features(_load_mean_cycle(args.cardiac, "cardiac"), _load_mean_cycle(args.respiratory, "respiratory"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("perfusion_amplitude", "ventilation_amplitude", "time_delay", "position"):
        write_pixel_map(getattr(fb, name), out / name)
    return 0


def cmd_infer(args) -> int:
    src = Path(args.features)
    fb = FeatureBundle(
        perfusion_amplitude=read_pixel_map(src / "perfusion_amplitude.csv", "normalized"),
        ventilation_amplitude=read_pixel_map(src / "ventilation_amplitude.csv", "normalized"),
        time_delay=read_pixel_map(src / "time_delay.csv", "time_delay"),
        position=read_pixel_map(src / "position.csv", "binary"),
    )
    suite = ModelSuite.from_paths(args.heart_rules, args.perfusion_rules, args.ventilation_rules)
    maps = model_acquisition(fb, suite)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("heart_possibility", "heart_possibility_norm", "perfusion_possibility", "ventilation_possibility"):
        write_pixel_map(maps.named()[name], out / name)
    return 0


def cmd_segment(args) -> int:
    cfg = SegmentationConfig(args.ventilation_threshold, args.perfusion_threshold)
    perf = read_pixel_map(args.perfusion, "possibility")
    vent = read_pixel_map(args.ventilation, "possibility")
    pmask = threshold_map(perf, cfg.perfusion_threshold)
    vmask = threshold_map(vent, cfg.ventilation_threshold)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_pixel_map(pmask, out / "perfusion_mask")
    write_pixel_map(vmask, out / "ventilation_mask")
    write_pixel_map(union_mask(pmask, vmask), out / "total_lung_mask")
    write_pixel_map(three_region_segment(vent, perf, cfg), out / "segmented")
    return 0


def cmd_evaluate(args) -> int:
    pm = read_pixel_map(args.map, "possibility")
    ref = threshold_map(read_pixel_map(args.reference, "normalized"), args.reference_threshold)
    curve = roc_curve(pm, ref, args.t_start, args.t_end, args.t_step)
    write_roc_csv(curve, args.out)
    print(f"auc={curve.auc:.4f}")
    return 0


def cmd_validate_rules(args) -> int:
    for p in args.files:
        rb = load_rule_base(p)
        print(f"{p}: {rb.name}, {len(rb.inputs)} inputs, {len(rb.rules)} rules")
    return 0


def build_parser() -> argparse.ArgumentParser:
    seg = SegmentationConfig()
    ap = argparse.ArgumentParser(prog="eitmap", description="Fuzzy heart/lung mapping of gated EIT image sequences.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate synthetic acquisitions")
    p.add_argument("--config", help="phantom config JSON (defaults embedded)")
    p.add_argument("--out", required=False, default="phantom")
    p.add_argument("--seed", type=int)
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--acquisitions", type=int, default=1, help="number of seeds seed..seed+n-1")
    p.add_argument("--print-default-config", action="store_true")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("pipeline", help="run the full pipeline from a config file")
    p.add_argument("--config")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--print-default-config", action="store_true")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("gate", help="build mean cycles from a frame sequence and trigger file")
    p.add_argument("--frames", required=True)
    p.add_argument("--triggers", required=True)
    p.add_argument("--group-size", type=int, required=True)
    p.add_argument("--target-length", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gate)

    p = sub.add_parser("features", help="amplitude, time delay and position maps from pooled mean cycles")
    p.add_argument("--cardiac", required=True, help="EITF holding the cardiac mean cycle")
    p.add_argument("--respiratory", required=True, help="EITF holding the respiratory mean cycle")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("infer", help="run the heart and lung fuzzy models on a feature directory")
    p.add_argument("--features", required=True)
    p.add_argument("--heart-rules")
    p.add_argument("--perfusion-rules")
    p.add_argument("--ventilation-rules")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("segment", help="threshold possibility maps into masks and regions")
    p.add_argument("--perfusion", required=True)
    p.add_argument("--ventilation", required=True)
    p.add_argument("--perfusion-threshold", type=float, default=seg.perfusion_threshold)
    p.add_argument("--ventilation-threshold", type=float, default=seg.ventilation_threshold)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("evaluate", help="ROC sweep of a map against a reference image")
    p.add_argument("--map", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--reference-threshold", type=float, default=seg.reference_threshold)
    p.add_argument("--t-start", type=float, default=0.1)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--t-step", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("validate-rules", help="parse rule base files and report problems")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_validate_rules)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except EitmapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
