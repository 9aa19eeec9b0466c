"""One command-line entry point for the whole pipeline.

Subcommands: synth, featurize, augment, detect, decode, weak-sed,
eval-psds, eval-f1, ablate, plus bound-call (the array-op boundary used by
foreign-language bindings). Every randomized command takes an explicit
--seed; there is no wall-clock default. Exit codes: 0 ok, 2 usage,
3 invalid input data, 4 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._parallel import parallel_map
from .augment import (
    AugmentConfig,
    FilterAugmentConfig,
    LabelSet,
    empty_labels,
    filter_augment,
    get_preset,
    load_augment_config,
    make_student_teacher_views,
)
from .errors import InvalidConfig, SedkitError
from .evaluate import (
    DEFAULT_THRESHOLDS,
    ScenarioConfig,
    evaluate_system,
    event_f1,
    events_by_clip,
    read_ground_truth,
    scenario1,
    scenario2,
    write_report,
    write_roc_svg,
)
from .frontend import (
    FrontendConfig,
    MelSpec,
    linear_mel,
    log_mel,
    normalize_waveform,
    read_melspec,
    read_wav,
    write_melspec,
)
from .harness import (
    load_scene,
    load_toy_config,
    run_ablation,
    synth_dataset,
    toy_detect,
    write_ablation_csv,
)
from .postprocess import (
    DecodeConfig,
    ScoreMatrix,
    decode_clip,
    median_filter,
    rasterize_events,
    read_events_tsv,
    read_scores,
    weak_sed_events,
    write_events_tsv,
    write_scores,
)
from .rng import Rng

FULL_GRID_NAME = "full"


def _write_manifest(target: Path, command: str, args: argparse.Namespace, t0: float) -> None:
    """Atomic manifest next to the outputs (reviewable provenance, not data)."""
    if target.suffix:
        path = target.with_name(target.name + ".manifest.json")
    else:
        path = target / "manifest.json"
        target.mkdir(parents=True, exist_ok=True)
    payload = {
        "command": command,
        "args": {k: str(v) for k, v in sorted(vars(args).items()) if k != "func"},
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "wall_time_s": round(time.time() - t0, 6),
    }
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=".manifest-")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _iter_feature_files(dir_path: Path) -> list[Path]:
    files = sorted(p for p in dir_path.rglob("*.csv") if p.with_suffix(".json").exists())
    if not files:
        raise InvalidConfig(f"no feature CSVs under {dir_path}")
    return files


def _read_scores_dir(dir_path: Path) -> dict[str, ScoreMatrix]:
    out: dict[str, ScoreMatrix] = {}
    for path in sorted(Path(dir_path).glob("*.csv")):
        clip_id, scores = read_scores(path)
        out[clip_id] = scores
    if not out:
        raise InvalidConfig(f"no score CSVs under {dir_path}")
    return out


def _parse_threshold(raw: str):
    parts = [float(p) for p in raw.split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def _scenario_from_arg(raw: str) -> ScenarioConfig:
    if raw == "1":
        return scenario1()
    if raw == "2":
        return scenario2()
    return ScenarioConfig.from_json(json.loads(Path(raw).read_text()))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_synth(args) -> int:
    t0 = time.time()
    scene = load_scene(args.scene)
    if args.seed is not None:
        scene = scene.from_json({**scene.to_json(), "seed": args.seed})
    out = Path(args.out)
    synth_dataset(scene, out)
    _write_manifest(out, "synth", args, t0)
    return 0


def _cmd_featurize(args) -> int:
    t0 = time.time()
    in_dir, out_dir = Path(args.in_dir), Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    wavs = sorted(in_dir.rglob("*.wav"))
    if not wavs:
        raise InvalidConfig(f"no WAV files under {in_dir}")

    def one(path: Path) -> None:
        w = read_wav(path)
        if not args.no_normalize:
            w = normalize_waveform(w)
        spec = linear_mel(w, FrontendConfig(sample_rate=w.sample_rate)) if args.domain == "linear" else log_mel(
            w, FrontendConfig(sample_rate=w.sample_rate)
        )
        write_melspec(spec, out_dir / (path.stem + ".csv"))

    parallel_map(one, wavs)
    _write_manifest(out_dir, "featurize", args, t0)
    return 0


def _labels_for(clip_stem: str, spec: MelSpec, gt_rows, class_names) -> LabelSet:
    events = [ev for cid, ev in gt_rows if Path(cid).stem == clip_stem]
    grid = rasterize_events(events, class_names, spec.n_frames, spec.hop_seconds)
    strong = grid.astype(np.float64)
    return LabelSet(strong, strong.max(axis=1) if strong.size else np.zeros(len(class_names)), class_names)


def _cmd_augment(args) -> int:
    t0 = time.time()
    if (args.preset is None) == (args.config is None):
        raise InvalidConfig("give exactly one of --preset or --config")
    cfg = get_preset(args.preset) if args.preset else load_augment_config(args.config)
    views = [v.strip() for v in args.views.split(",") if v.strip()]
    if not views or set(views) - {"student", "teacher"}:
        raise InvalidConfig("--views must list student and/or teacher")

    in_dir, out_dir = Path(args.in_dir), Path(args.out)
    files = _iter_feature_files(in_dir)
    specs = [read_melspec(p) for p in files]

    if args.gt:
        gt_rows = read_events_tsv(args.gt)
        class_names = tuple(sorted({ev.class_name for _, ev in gt_rows}))
        labels = [_labels_for(p.stem, s, gt_rows, class_names) for p, s in zip(files, specs)]
    else:
        labels = [empty_labels((), s.n_frames) for s in specs]

    student, teacher, shared = make_student_teacher_views(
        list(zip(specs, labels)), cfg, Rng(args.seed)
    )
    for view_name, view in (("student", student), ("teacher", teacher)):
        if view_name not in views:
            continue
        view_dir = out_dir / view_name
        view_dir.mkdir(parents=True, exist_ok=True)
        for path, spec in zip(files, view):
            write_melspec(spec, view_dir / path.name)
    if args.gt:
        label_dir = out_dir / "labels"
        label_dir.mkdir(parents=True, exist_ok=True)
        for path, spec, lab in zip(files, specs, shared):
            mat = ScoreMatrix(
                strong=lab.strong.T,
                weak=lab.weak,
                hop_seconds=spec.hop_seconds,
                clip_duration_seconds=spec.clip_duration_seconds,
                class_names=lab.class_names,
            )
            write_scores(mat, label_dir / path.name, clip_id=path.stem + ".wav")
    _write_manifest(out_dir, "augment", args, t0)
    return 0


def _cmd_detect(args) -> int:
    t0 = time.time()
    detector = load_toy_config(args.toy_config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = _iter_feature_files(Path(args.features))

    def one(path: Path) -> None:
        scores = toy_detect(read_melspec(path), detector)
        write_scores(scores, out_dir / path.name, clip_id=path.stem + ".wav")

    parallel_map(one, files)
    _write_manifest(out_dir, "detect", args, t0)
    return 0


def _cmd_decode(args) -> int:
    t0 = time.time()
    cfg = DecodeConfig(
        threshold=_parse_threshold(args.threshold),
        median_len=args.median,
        weak_masking=args.weak_mask,
    )
    cfg.validate()
    scores = _read_scores_dir(Path(args.scores))
    rows = []
    for clip_id in sorted(scores):
        for ev in decode_clip(scores[clip_id], cfg):
            rows.append((clip_id, ev))
    out = Path(args.out)
    write_events_tsv(rows, out)
    _write_manifest(out, "decode", args, t0)
    return 0


def _cmd_weak_sed(args) -> int:
    t0 = time.time()
    scores = _read_scores_dir(Path(args.scores))
    thr = _parse_threshold(args.threshold)
    rows = []
    for clip_id in sorted(scores):
        for ev in weak_sed_events(scores[clip_id], thr):
            rows.append((clip_id, ev))
    out = Path(args.out)
    write_events_tsv(rows, out)
    _write_manifest(out, "weak-sed", args, t0)
    return 0


def _cmd_eval_psds(args) -> int:
    t0 = time.time()
    gt = read_ground_truth(args.gt, args.durations)
    scores = _read_scores_dir(Path(args.scores))
    sc = _scenario_from_arg(args.scenario)
    decode = DecodeConfig(median_len=args.median, weak_masking=args.weak_mask)
    thresholds = tuple(np.linspace(0.01, 0.99, args.thresholds))
    decoder = "weak_sed" if args.decoder == "weak-sed" else "strong"
    report = evaluate_system(scores, gt, sc, decode, thresholds, decoder=decoder)
    out = Path(args.out)
    write_report(report, out)
    if args.plot:
        write_roc_svg(report, args.plot)
    _write_manifest(out, "eval-psds", args, t0)
    print(f"psds={report.psds!r}")
    return 0


def _cmd_eval_f1(args) -> int:
    t0 = time.time()
    gt_rows = read_events_tsv(args.gt)
    det_rows = read_events_tsv(args.events)
    durations: dict[str, float] = {}
    for cid, ev in gt_rows + det_rows:
        durations[cid] = max(durations.get(cid, 0.0), ev.offset)
    from .evaluate import GroundTruth  # local to keep module surface tidy

    gt = GroundTruth(
        events=tuple(gt_rows),
        clip_durations=durations,
        class_names=tuple(sorted({ev.class_name for _, ev in gt_rows})),
    )
    result = event_f1(
        events_by_clip(det_rows, durations),
        gt,
        onset_collar=args.onset_collar,
        offset_collar_ratio=args.offset_collar_ratio,
    )
    out = Path(args.out)
    out.write_text(json.dumps(result, indent=2) + "\n")
    _write_manifest(out, "eval-f1", args, t0)
    print(f"macro_f1={result['macro_f1']!r}")
    return 0


def _cmd_ablate(args) -> int:
    t0 = time.time()
    scene = load_scene(args.scene)
    if args.grid == FULL_GRID_NAME:
        from .augment import ABLATION_GRID

        grid = list(ABLATION_GRID)
    else:
        loaded = json.loads(Path(args.grid).read_text())
        grid = list(loaded["grid"] if isinstance(loaded, dict) else loaded)
    thresholds = tuple(np.linspace(0.01, 0.99, args.thresholds))
    rows = run_ablation(grid, scene, thresholds=thresholds)
    out = Path(args.out)
    write_ablation_csv(rows, out)
    _write_manifest(out, "ablate", args, t0)
    return 0


# ---------------------------------------------------------------------------
# bound-call: the file boundary used by foreign-language bindings
# ---------------------------------------------------------------------------


def _grid_from_csv(path: Path) -> tuple[np.ndarray, dict]:
    meta = json.loads(path.with_suffix(".json").read_text())
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    body = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.float64, ndmin=2)
    return body[:, 1:].T.astype(np.uint8), {**meta, "class_names": header[1:]}


def _grid_to_csv(grid: np.ndarray, meta: dict, path: Path) -> None:
    names = meta["class_names"]
    hop = meta["hop_seconds"]
    lines = ["time_s," + ",".join(names)]
    for t in range(grid.shape[1]):
        lines.append(repr(float(t * hop)) + "," + ",".join(str(int(v)) for v in grid[:, t]))
    path.write_text("\n".join(lines) + "\n")
    path.with_suffix(".json").write_text(
        json.dumps({k: meta[k] for k in ("clip_id", "hop_seconds", "clip_duration_seconds")}, indent=2) + "\n"
    )


def _cmd_bound_call(args) -> int:
    in_dir, out_dir = Path(args.in_dir), Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = json.loads(Path(args.config).read_text()) if args.config else {}
    rng = Rng(args.seed or 0, args.stream)

    if args.op == "filter_augment":
        spec = read_melspec(in_dir / "feature.csv")
        fa = FilterAugmentConfig(**cfg) if cfg else FilterAugmentConfig()
        write_melspec(filter_augment(spec, fa, rng), out_dir / "feature.csv")
    elif args.op == "make_student_teacher_views":
        files = [p for p in _iter_feature_files(in_dir) if not p.name.endswith(".labels.csv")]
        specs = [read_melspec(p) for p in files]
        labels = []
        for p, s in zip(files, specs):
            lab_csv = p.with_name(p.stem + ".labels.csv")
            if lab_csv.exists():
                _, mat = read_scores(lab_csv)
                labels.append(LabelSet(mat.strong.T, mat.weak, mat.class_names))
            else:
                labels.append(empty_labels((), s.n_frames))
        aug = AugmentConfig.from_json(cfg) if cfg else AugmentConfig()
        student, teacher, shared = make_student_teacher_views(list(zip(specs, labels)), aug, rng)
        for name, view in (("student", student), ("teacher", teacher)):
            (out_dir / name).mkdir(exist_ok=True)
            for p, s in zip(files, view):
                write_melspec(s, out_dir / name / p.name)
        (out_dir / "labels").mkdir(exist_ok=True)
        for p, s, lab in zip(files, specs, shared):
            if lab.n_classes == 0:
                continue
            mat = ScoreMatrix(lab.strong.T, lab.weak, s.hop_seconds, s.clip_duration_seconds, lab.class_names)
            write_scores(mat, out_dir / "labels" / p.name, clip_id=p.stem)
    elif args.op in ("apply_weak_masking", "weak_sed_events"):
        clip_id, scores = read_scores(in_dir / "scores.csv")
        thr = cfg.get("threshold", 0.5)
        thr = tuple(thr) if isinstance(thr, list) else thr
        if args.op == "weak_sed_events":
            rows = [(clip_id, ev) for ev in weak_sed_events(scores, thr)]
            write_events_tsv(rows, out_dir / "events.tsv")
        else:
            from .postprocess import apply_weak_masking

            grid = apply_weak_masking(scores, thr)
            meta = {
                "clip_id": clip_id,
                "hop_seconds": scores.hop_seconds,
                "clip_duration_seconds": scores.clip_duration_seconds,
                "class_names": list(scores.class_names),
            }
            _grid_to_csv(grid, meta, out_dir / "grid.csv")
    elif args.op == "median_filter":
        grid, meta = _grid_from_csv(in_dir / "grid.csv")
        out = median_filter(grid, int(cfg.get("median_len", 7)))
        _grid_to_csv(out, meta, out_dir / "grid.csv")
    elif args.op == "decode_events":
        grid, meta = _grid_from_csv(in_dir / "grid.csv")
        from .postprocess import decode_events

        events = decode_events(grid, meta["hop_seconds"], meta["clip_duration_seconds"], meta["class_names"])
        write_events_tsv([(meta["clip_id"], ev) for ev in events], out_dir / "events.tsv")
    elif args.op == "evaluate_system":
        gt = read_ground_truth(in_dir / "gt.tsv", in_dir / "durations.csv")
        scores = _read_scores_dir(in_dir / "scores")
        sc = ScenarioConfig.from_json(cfg["scenario"]) if "scenario" in cfg else scenario1()
        decode = DecodeConfig(
            median_len=int(cfg.get("median_len", 7)),
            weak_masking=bool(cfg.get("weak_masking", True)),
        )
        thresholds = tuple(cfg.get("thresholds", DEFAULT_THRESHOLDS))
        decoder = cfg.get("decoder", "strong")
        report = evaluate_system(scores, gt, sc, decode, thresholds, decoder=decoder)
        write_report(report, out_dir / "report.json")
    else:
        raise InvalidConfig(f"unknown bound op {args.op!r}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sedkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"sedkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the scene seed")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("featurize", help="WAV directory to mel-spectrogram CSVs")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--domain", choices=("log", "linear"), default="log")
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("augment", help="build student/teacher augmented views")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--preset", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--views", default="student,teacher")
    p.add_argument("--gt", default=None, help="co-transform labels rasterized from this TSV")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("detect", help="run the toy detector over features")
    p.add_argument("--features", required=True)
    p.add_argument("--toy-config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("decode", help="scores to events via threshold + median filter")
    p.add_argument("--scores", required=True)
    p.add_argument("--threshold", default="0.5")
    p.add_argument("--median", type=int, default=7)
    mask = p.add_mutually_exclusive_group()
    mask.add_argument("--weak-mask", dest="weak_mask", action="store_true", default=True)
    mask.add_argument("--no-weak-mask", dest="weak_mask", action="store_false")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("weak-sed", help="full-clip events from weak predictions only")
    p.add_argument("--scores", required=True)
    p.add_argument("--threshold", default="0.5")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_weak_sed)

    p = sub.add_parser("eval-psds", help="PSDS over a threshold sweep")
    p.add_argument("--scores", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--durations", required=True)
    p.add_argument("--scenario", default="1", help="1, 2, or a JSON file")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", default=None)
    p.add_argument("--thresholds", type=int, default=50)
    p.add_argument("--median", type=int, default=7)
    mask = p.add_mutually_exclusive_group()
    mask.add_argument("--weak-mask", dest="weak_mask", action="store_true", default=True)
    mask.add_argument("--no-weak-mask", dest="weak_mask", action="store_false")
    p.add_argument("--decoder", choices=("strong", "weak-sed"), default="strong")
    p.set_defaults(func=_cmd_eval_psds)

    p = sub.add_parser("eval-f1", help="collar-based event F1 of an event list")
    p.add_argument("--events", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--onset-collar", type=float, default=0.2)
    p.add_argument("--offset-collar-ratio", type=float, default=0.2)
    p.set_defaults(func=_cmd_eval_f1)

    p = sub.add_parser("ablate", help="run an augmentation preset grid end to end")
    p.add_argument("--grid", required=True, help=f"JSON list of preset names, or '{FULL_GRID_NAME}'")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--thresholds", type=int, default=50)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("bound-call", help="file boundary for foreign-language bindings")
    p.add_argument("--op", required=True)
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    p.set_defaults(func=_cmd_bound_call)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SedkitError as exc:
        if args.command == "bound-call":
            print(json.dumps({"error": {"name": type(exc).__name__, "message": str(exc)}}), file=sys.stderr)
        else:
            print(f"sedkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
