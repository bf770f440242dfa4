"""Command line interface.

Subcommands:

* ``gen``       synthesize a dataset file
* ``train``     train a model on a dataset, write checkpoint + logs
* ``compare``   train proposed/plain variants across seeds, report medians
* ``eval``      score detections against ground truth labels
* ``sweep``     perturb one sample's inputs and trace the predicted yaw
* ``invert``    recover yaw candidates from box dimensions analytically
* ``gradcheck`` finite-difference audit of the training gradients

Settings come from an INI file (sections [synth], [model], [train],
[compare], [gradcheck]); every value has a default so the file is
optional.  File-writing commands put everything under --out and drop a
manifest.json recording the resolved settings and sha256 checksums of
inputs and outputs.

Exit codes: 0 success, 1 invalid input or a failed check, 2 unexpected
error.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import hashlib
import json
import math
import statistics
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .evaluation import Detection, GroundTruth, evaluate_detections
from .geometry import Dims2D, Dims3D, invert_orientation_candidates, implied_width_span
from .kitti_io import DONT_CARE, Difficulty, classify_difficulty, parse_label_file
from .model import (
    DEFAULT_SWEEP_FACTORS,
    ModelConfig,
    TrainingDivergedError,
    analytic_selector_curve,
    build_model,
    evaluate_model,
    load_model,
    make_batch,
    model_gradient_check,
    save_model,
    sweep_2d_width,
    sweep_3d_height,
    train,
)
from .nn_core import NonFiniteGradientError
from .synth import SynthConfig, brute_force_orientation_oracle, gen_dataset, read_dataset, write_dataset

_PEDESTRIAN = "Pedestrian"
# Sitting people overlap pedestrians in appearance; their boxes become
# ignore regions rather than counting matched detections as false positives.
_SIMILAR_CLASSES = ("Person_sitting",)


# ---------------------------------------------------------------------------
# Small helpers: config access, manifests
# ---------------------------------------------------------------------------


def _load_ini(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ValueError(f"config file not found: {p}")
        cp.read(p)
    return cp


def _sec(cp: configparser.ConfigParser, name: str):
    return cp[name] if cp.has_section(name) else {}


def _getfloat(sec, key: str, default: float) -> float:
    v = sec.get(key)
    return default if v is None else float(v)


def _getint(sec, key: str, default: int) -> int:
    v = sec.get(key)
    return default if v is None else int(v)


def _getbool(sec, key: str, default: bool) -> bool:
    v = sec.get(key)
    if v is None:
        return default
    lowered = str(v).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"cannot parse boolean {key} = {v!r}")


def _getints(sec, key: str, default: tuple[int, ...]) -> tuple[int, ...]:
    v = sec.get(key)
    if v is None:
        return default
    parts = [p for p in str(v).replace(",", " ").split() if p]
    if not parts:
        raise ValueError(f"empty integer list for {key}")
    return tuple(int(p) for p in parts)


def parse_lr_schedule(text: str) -> tuple[tuple[int, float], ...]:
    """Parse "600:1e-3,1400:1e-4" into ((600, 1e-3), (1400, 1e-4))."""
    segments = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        steps, sep, lr = part.partition(":")
        if not sep:
            raise ValueError(f"bad schedule segment {part!r}, expected STEPS:LR")
        segments.append((int(steps), float(lr)))
    if not segments:
        raise ValueError(f"empty learning rate schedule {text!r}")
    return tuple(segments)


def _synth_config(cp, seed=None, n=None) -> SynthConfig:
    s = _sec(cp, "synth")
    return SynthConfig(
        n=n if n is not None else _getint(s, "n", 1000),
        seed=seed if seed is not None else _getint(s, "seed", 0),
        h1_mean=_getfloat(s, "h1_mean", 1.7),
        h1_sd=_getfloat(s, "h1_sd", 0.1),
        h1_range=(_getfloat(s, "h1_min", 1.4), _getfloat(s, "h1_max", 2.0)),
        w1_mean=_getfloat(s, "w1_mean", 0.6),
        w1_sd=_getfloat(s, "w1_sd", 0.1),
        w1_range=(_getfloat(s, "w1_min", 0.3), _getfloat(s, "w1_max", 0.9)),
        l1_mean=_getfloat(s, "l1_mean", 0.5),
        l1_sd=_getfloat(s, "l1_sd", 0.15),
        l1_range=(_getfloat(s, "l1_min", 0.2), _getfloat(s, "l1_max", 0.9)),
        scale_range=(_getfloat(s, "scale_min", 30.0), _getfloat(s, "scale_max", 120.0)),
        box_noise_sd=_getfloat(s, "box_noise_sd", 1.0),
        context_noise=_getfloat(s, "context_noise", 0.5),
        context_width=_getint(s, "context_width", 16),
    )


def _model_config(cp, seed=None) -> ModelConfig:
    m = _sec(cp, "model")
    t = _sec(cp, "train")
    return ModelConfig(
        num_bins=_getint(m, "num_bins", 4),
        context_width=_getint(m, "context_width", 16),
        encoder_hidden=_getints(m, "encoder_hidden", (64, 64)),
        proc_hidden=_getints(m, "proc_hidden", (512, 2048)),
        head_hidden=_getint(m, "head_hidden", 512),
        use_feedforward=_getbool(m, "use_feedforward", True),
        use_consistency_loss=_getbool(m, "use_consistency_loss", False),
        consistency_weight=_getfloat(m, "consistency_weight", 0.01),
        exclusion_tau=math.radians(_getfloat(m, "exclusion_tau_deg", 15.0)),
        teacher_force_dims3d=_getbool(m, "teacher_force_dims3d", False),
        dims2d_scale=_getfloat(m, "dims2d_scale", 0.01),
        seed=seed if seed is not None else _getint(t, "seed", 0),
        batch_size=_getint(t, "batch_size", 32),
        momentum=_getfloat(t, "momentum", 0.9),
        lr_schedule=parse_lr_schedule(t.get("lr_schedule") or "600:1e-3,1400:1e-4"),
    )


def _config_snapshot(cfg) -> dict:
    d = dataclasses.asdict(cfg)
    for k, v in d.items():
        if isinstance(v, tuple):
            d[k] = list(list(x) if isinstance(x, tuple) else x for x in v)
    return d


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, settings: dict, seed,
                    inputs, outputs, started: float) -> Path:
    manifest = {
        "command": command,
        "config": settings,
        "seed": seed,
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": {str(p): _sha256(Path(p)) for p in outputs},
        "elapsed_seconds": round(time.monotonic() - started, 3),
        "created_utc": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "tool_version": __version__,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _split_holdout(samples, fraction: float, seed: int):
    """Deterministic train/validation split; order within parts is stable."""
    if not 0.0 <= fraction <= 0.9:
        raise ValueError(f"holdout_fraction {fraction} outside [0, 0.9]")
    n_val = int(round(fraction * len(samples)))
    if n_val == 0:
        return list(samples), []
    perm = np.random.default_rng([seed, 2]).permutation(len(samples))
    val_idx = set(perm[:n_val].tolist())
    train_s = [s for i, s in enumerate(samples) if i not in val_idx]
    val_s = [s for i, s in enumerate(samples) if i in val_idx]
    return train_s, val_s


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    started = time.monotonic()
    cp = _load_ini(args.config)
    cfg = _synth_config(cp, seed=args.seed, n=args.n)
    samples, _ = gen_dataset(cfg)
    out = _out_dir(args)
    data_path = out / "dataset.txt"
    write_dataset(data_path, samples)
    print(f"wrote {len(samples)} samples to {data_path}")
    _write_manifest(out, "gen", _config_snapshot(cfg), cfg.seed,
                    inputs=[args.config] if args.config else [],
                    outputs=[data_path], started=started)
    return 0


def cmd_train(args) -> int:
    started = time.monotonic()
    cp = _load_ini(args.config)
    cfg = _model_config(cp, seed=args.seed)
    samples = read_dataset(args.data)
    holdout = _getfloat(_sec(cp, "train"), "holdout_fraction", 0.1)
    train_s, val_s = _split_holdout(samples, holdout, cfg.seed)

    result = train(train_s, cfg)
    out = _out_dir(args)
    model_path = out / "model.npz"
    save_model(result.model, model_path)

    log_path = out / "loss_log.csv"
    with open(log_path, "w") as fh:
        fh.write("step,lr,total,dims,orientation,consistency\n")
        for row in result.log:
            fh.write(f"{row.step},{row.lr:.10g},{row.total:.10g},"
                     f"{row.dims:.10g},{row.orientation:.10g},{row.consistency:.10g}\n")

    eval_set = val_s if val_s else train_s
    metrics = evaluate_model(result.model, eval_set)
    metrics["evaluated_on"] = "validation" if val_s else "train"
    metrics["n_train"] = len(train_s)
    metrics["n_val"] = len(val_s)
    metrics_path = out / "metrics.json"
    metrics_path.write_text(json.dumps(metrics, sort_keys=True, indent=2) + "\n")

    final = result.log[-1]
    print(f"trained {cfg.total_steps()} steps on {len(train_s)} samples"
          f" (final batch loss {final.total:.4f})")
    print(f"{metrics['evaluated_on']} loss {metrics['loss']:.4f},"
          f" yaw MAE {metrics['mae_deg']:.2f} deg over {metrics['n']} samples")
    inputs = [args.data] + ([args.config] if args.config else [])
    _write_manifest(out, "train", _config_snapshot(cfg), cfg.seed,
                    inputs=inputs, outputs=[model_path, log_path, metrics_path],
                    started=started)
    return 0


_COMPARE_VARIANTS = (
    ("proposed", True, False),
    ("proposed+consistency", True, True),
    ("plain", False, False),
    ("plain+consistency", False, True),
)


def cmd_compare(args) -> int:
    started = time.monotonic()
    cp = _load_ini(args.config)
    base = _model_config(cp)
    seeds = _getints(_sec(cp, "compare"), "seeds", (0, 1, 2))
    if args.seeds:
        seeds = tuple(int(p) for p in args.seeds.replace(",", " ").split())
    samples = read_dataset(args.data)
    holdout = _getfloat(_sec(cp, "train"), "holdout_fraction", 0.1)

    runs = []
    for name, use_ff, use_cons in _COMPARE_VARIANTS:
        for seed in seeds:
            cfg = dataclasses.replace(base, use_feedforward=use_ff,
                                      use_consistency_loss=use_cons, seed=seed)
            train_s, val_s = _split_holdout(samples, holdout, seed)
            result = train(train_s, cfg)
            metrics = evaluate_model(result.model, val_s if val_s else train_s)
            runs.append({
                "variant": name, "seed": seed,
                "val_loss": metrics["loss"],
                "dims_loss": metrics["dims_loss"],
                "orientation_loss": metrics["orientation_loss"],
                "mae_deg": metrics["mae_deg"],
            })
            print(f"  {name:<22s} seed {seed}: val loss {metrics['loss']:.4f},"
                  f" MAE {metrics['mae_deg']:.2f} deg")

    medians = {}
    for name, _, _ in _COMPARE_VARIANTS:
        rows = [r for r in runs if r["variant"] == name]
        medians[name] = {
            key: statistics.median(r[key] for r in rows)
            for key in ("val_loss", "dims_loss", "orientation_loss", "mae_deg")
        }

    print(f"{'variant':<22s} {'median val loss':>16s} {'median MAE deg':>15s}")
    for name, _, _ in _COMPARE_VARIANTS:
        m = medians[name]
        print(f"{name:<22s} {m['val_loss']:>16.4f} {m['mae_deg']:>15.2f}")
    gap = medians["plain"]["val_loss"] - medians["proposed"]["val_loss"]
    better = "lower" if gap > 0 else "not lower"
    print(f"finding: proposed median val loss is {better} than plain"
          f" (difference {gap:+.4f})")

    out = _out_dir(args)
    report_path = out / "compare.json"
    report_path.write_text(json.dumps(
        {"runs": runs, "medians": medians, "seeds": list(seeds)},
        sort_keys=True, indent=2) + "\n")
    inputs = [args.data] + ([args.config] if args.config else [])
    _write_manifest(out, "compare", _config_snapshot(base), list(seeds),
                    inputs=inputs, outputs=[report_path], started=started)
    return 0


_TIER_ORDER = (Difficulty.EASY, Difficulty.MODERATE, Difficulty.HARD)


def cmd_eval(args) -> int:
    started = time.monotonic()
    gt_parsed = parse_label_file(Path(args.labels).read_text())
    det_parsed = parse_label_file(Path(args.detections).read_text())
    tier = Difficulty(args.difficulty)
    included = set(_TIER_ORDER[: _TIER_ORDER.index(tier) + 1])

    gts, ignores = [], []
    for lb in gt_parsed.labels:
        if lb.class_name == DONT_CARE or lb.class_name in _SIMILAR_CLASSES:
            ignores.append(lb.box2d)
            continue
        if lb.class_name != _PEDESTRIAN:
            continue
        if classify_difficulty(lb) in included:
            gts.append(GroundTruth(lb.box2d, getattr(lb, args.orientation)))
        else:
            ignores.append(lb.box2d)

    dets = []
    for i, lb in enumerate(det_parsed.labels):
        if lb.class_name != _PEDESTRIAN:
            continue
        if lb.score is None:
            raise ValueError(f"detection row {i + 1} has no confidence score")
        dets.append(Detection(lb.box2d, lb.score, getattr(lb, args.orientation)))

    report = evaluate_detections(dets, gts, iou_threshold=args.iou,
                                 ignore_boxes=ignores)
    out = _out_dir(args)
    payload = report.to_dict()
    payload.update({
        "difficulty": tier.value,
        "iou_threshold": args.iou,
        "orientation_field": args.orientation,
        "n_ignore_regions": len(ignores),
        "gt_angle_warnings": gt_parsed.angle_warnings,
        "det_angle_warnings": det_parsed.angle_warnings,
    })
    report_path = out / "report.json"
    report_path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    curve_path = out / "os_recall.csv"
    with open(curve_path, "w") as fh:
        fh.write("recall,orientation_similarity\n")
        for recall, os_val in report.os_recall_curve:
            fh.write(f"{recall:.6f},{os_val:.6f}\n")

    print(f"AOS {report.aos:.4f}  AP {report.ap:.4f}"
          f"  yaw MAE {report.mean_abs_angular_error_deg:.2f} deg"
          f"  ({report.n_matched}/{report.n_gt} matched, {len(dets)} detections)")
    settings = {"difficulty": tier.value, "iou_threshold": args.iou,
                "orientation_field": args.orientation}
    _write_manifest(out, "eval", settings, None,
                    inputs=[args.labels, args.detections],
                    outputs=[report_path, curve_path], started=started)
    return 0


def _parse_factors(text: str | None):
    if text is None:
        return DEFAULT_SWEEP_FACTORS
    lo, sep, rest = text.partition(":")
    hi, sep2, count = rest.partition(":")
    if not (sep and sep2):
        raise ValueError(f"bad factor range {text!r}, expected MIN:MAX:COUNT")
    lo, hi, count = float(lo), float(hi), int(count)
    if count < 1 or not hi >= lo:
        raise ValueError(f"bad factor range {text!r}")
    return tuple(np.linspace(lo, hi, count))


def cmd_sweep(args) -> int:
    started = time.monotonic()
    model = load_model(args.checkpoint)
    samples = read_dataset(args.data)
    if not 0 <= args.index < len(samples):
        raise ValueError(f"index {args.index} outside dataset of {len(samples)}")
    sample = samples[args.index]
    factors = _parse_factors(args.factors)

    sweep_fn = sweep_2d_width if args.which == "2d" else sweep_3d_height
    points = sweep_fn(model, sample, factors)

    # Baseline for the analytic selector: the model's own prediction at the
    # factor closest to 1.0, falling back to the true yaw.
    nearest = min(points, key=lambda p: abs(p.factor - 1.0))
    baseline = nearest.theta_pred if nearest.theta_pred is not None else sample.theta
    analytic = analytic_selector_curve(sample, factors, baseline_theta=baseline)

    out = _out_dir(args)
    csv_path = out / f"sweep_{args.which}.csv"
    num_bins = model.cfg.num_bins
    with open(csv_path, "w") as fh:
        bin_cols = "".join(f",bin{i}_deg" for i in range(num_bins))
        fh.write(f"factor,model_theta_deg,analytic_theta_deg,n_excluded{bin_cols}\n")
        for p, a in zip(points, analytic):
            model_deg = "" if p.theta_pred is None else f"{math.degrees(p.theta_pred):.4f}"
            analytic_deg = "" if math.isnan(a) else f"{math.degrees(a):.4f}"
            if p.per_bin_angles is None:
                bins = "".join("," for _ in range(num_bins))
            else:
                bins = "".join(f",{math.degrees(b):.4f}" for b in p.per_bin_angles)
            fh.write(f"{p.factor:.6f},{model_deg},{analytic_deg},{len(p.excluded)}{bins}\n")

    print(f"swept {len(points)} factors over sample {args.index}"
          f" ({args.which}), wrote {csv_path}")
    settings = {"which": args.which, "index": args.index,
                "factors": [float(f) for f in factors],
                "baseline_theta": float(baseline)}
    _write_manifest(out, "sweep", settings, None,
                    inputs=[args.checkpoint, args.data],
                    outputs=[csv_path], started=started)
    return 0


def cmd_invert(args) -> int:
    d2 = Dims2D(args.h2d, args.w2d)
    dims = Dims3D(args.h1, args.w1, args.l1)
    implied = implied_width_span(d2, dims.h1)
    max_span = math.hypot(dims.w1, dims.l1)
    result = invert_orientation_candidates(d2, dims)

    print(f"implied width span {implied:.6f} m (max possible {max_span:.6f} m)")
    if result.infeasible:
        print("infeasible: implied span exceeds the maximum for these dimensions")
    if not result.candidates:
        if not result.infeasible:
            print("no candidates: implied span is below the minimum span")
        return 0
    degs = ", ".join(f"{math.degrees(c):+.3f}" for c in result.candidates)
    print(f"{len(result.candidates)} yaw candidate(s) [deg]: {degs}")

    oracle = brute_force_orientation_oracle(
        d2, dims, grid_step=math.radians(args.grid_step_deg))
    tol = math.radians(0.05)
    covered = all(
        any(abs(math.remainder(c - o, 2 * math.pi)) <= tol for c in result.candidates)
        for o in oracle
    ) and all(
        any(abs(math.remainder(c - o, 2 * math.pi)) <= tol for o in oracle)
        for c in result.candidates
    )
    print(f"grid-search cross-check: {len(oracle)} hit(s),"
          f" {'agrees' if covered else 'DISAGREES'} with the analytic set")
    return 0


def cmd_gradcheck(args) -> int:
    started = time.monotonic()
    cp = _load_ini(args.config)
    g = _sec(cp, "gradcheck")
    cfg = _model_config(cp, seed=args.seed)
    if _getbool(g, "include_consistency", True):
        cfg = dataclasses.replace(cfg, use_consistency_loss=True)
    batch_size = _getint(g, "batch_size", 8)
    eps = _getfloat(g, "eps", 1e-5)
    max_entries = _getint(g, "max_entries_per_param", 25)
    threshold = _getfloat(g, "threshold", 1e-4)

    synth_cfg = SynthConfig(n=batch_size, seed=cfg.seed,
                            context_width=cfg.context_width)
    samples, _ = gen_dataset(synth_cfg)
    model = build_model(cfg)
    report = model_gradient_check(model, make_batch(samples), eps=eps,
                                  max_entries_per_param=max_entries,
                                  seed=cfg.seed)

    width = max(len(name) for name, _ in report.per_param)
    for name, err in report.per_param:
        print(f"  {name:<{width}s}  max rel err {err:.3e}")
    passed = report.passed(threshold)
    print(f"overall max rel err {report.max_rel_error:.3e}"
          f" vs threshold {threshold:.1e}: {'PASS' if passed else 'FAIL'}")

    if args.out:
        out = _out_dir(args)
        path = out / "gradcheck.json"
        path.write_text(json.dumps({
            "max_rel_error": float(report.max_rel_error),
            "per_param": {name: float(err) for name, err in report.per_param},
            "threshold": threshold,
            "passed": bool(passed),
        }, sort_keys=True, indent=2) + "\n")
        _write_manifest(out, "gradcheck", _config_snapshot(cfg), cfg.seed,
                        inputs=[args.config] if args.config else [],
                        outputs=[path], started=started)
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pedorient",
        description="Pedestrian yaw estimation from monocular box geometry.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="synthesize a dataset")
    p.add_argument("--config", help="INI settings file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the dataset seed")
    p.add_argument("--n", type=int, help="override the sample count")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--config", help="INI settings file")
    p.add_argument("--data", required=True, help="dataset file from gen")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the training seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compare", help="train all variants across seeds")
    p.add_argument("--config", help="INI settings file")
    p.add_argument("--data", required=True, help="dataset file from gen")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seeds", help="comma separated seed list override")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("eval", help="score detections against labels")
    p.add_argument("--labels", required=True, help="ground truth label file")
    p.add_argument("--detections", required=True, help="scored detection file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--iou", type=float, default=0.5, help="IoU match threshold")
    p.add_argument("--difficulty", default="Hard",
                   choices=[t.value for t in _TIER_ORDER],
                   help="most difficult tier still counted as ground truth")
    p.add_argument("--orientation", default="rotation_y",
                   choices=["rotation_y", "alpha"],
                   help="which label angle to compare")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="perturb one sample and trace the yaw")
    p.add_argument("--checkpoint", required=True, help="model.npz from train")
    p.add_argument("--data", required=True, help="dataset file from gen")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--index", type=int, default=0, help="sample index")
    p.add_argument("--which", required=True, choices=["2d", "3d"],
                   help="sweep the 2D box width or the fed 3D height")
    p.add_argument("--factors", help="factor range MIN:MAX:COUNT")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("invert", help="analytic yaw candidates from dimensions")
    p.add_argument("--h2d", type=float, required=True, help="box height px")
    p.add_argument("--w2d", type=float, required=True, help="box width px")
    p.add_argument("--h1", type=float, required=True, help="person height m")
    p.add_argument("--w1", type=float, required=True, help="person width m")
    p.add_argument("--l1", type=float, required=True, help="person length m")
    p.add_argument("--grid-step-deg", type=float, default=1e-3,
                   help="grid resolution for the cross-check")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    p.add_argument("--config", help="INI settings file")
    p.add_argument("--seed", type=int, default=0, help="model and probe seed")
    p.add_argument("--out", help="optional output directory for the report")
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, TrainingDivergedError, NonFiniteGradientError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception:
        import traceback

        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
