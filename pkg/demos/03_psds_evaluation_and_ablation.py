#!/usr/bin/env python3
# End to end on synthetic data: scene -> toy detector -> PSDS -> ablation.
#
# The synthetic harness places tone events over noise with exact labels, the
# toy detector scores each class from its mel-band energy, and the evaluator
# sweeps thresholds into the two standard PSDS scenarios:
#   scenario 1: tolerances 0.7 (timing matters)
#   scenario 2: tolerances 0.1 + cross-trigger penalty (presence matters)

import numpy as np

from sedkit import (
    DecodeConfig,
    EventPrototype,
    FrontendConfig,
    SceneSpec,
    default_toy_config,
    evaluate_system,
    generate_scene,
    linear_mel,
    normalize_waveform,
    run_ablation,
    scenario1,
    scenario2,
    toy_detect,
)

scene = SceneSpec(
    n_clips=6,
    classes=(
        EventPrototype("tone_low", "tone", freq_hz=440.0, duration_range=(1.0, 3.0)),
        EventPrototype("tone_high", "tone", freq_hz=3000.0, duration_range=(1.0, 3.0)),
    ),
    clip_seconds=10.0,
    events_per_clip=(1, 2),
    background_snr_db=30.0,
    seed=23,
)
clips, gt = generate_scene(scene)
print(f"scene: {scene.n_clips} clips, {len(gt.events)} events, classes {gt.class_names}")

detector = default_toy_config(scene)
scores = {}
for clip in clips:
    feats = linear_mel(normalize_waveform(clip.waveform), FrontendConfig())
    scores[clip.clip_id] = toy_detect(feats, detector)

for decoder in ("strong", "weak_sed"):
    r1 = evaluate_system(scores, gt, scenario1(), DecodeConfig(), decoder=decoder)
    r2 = evaluate_system(scores, gt, scenario2(), DecodeConfig(), decoder=decoder)
    print(f"decoder={decoder:8s}  psds1={r1.psds:.4f}  psds2={r2.psds:.4f}")
print("weak-SED decoding collapses psds1 (timing gone) while psds2 stays high,")
print("the same direction the method shows on real detectors\n")

# --- a small slice of the augmentation grid on this scene
grid = ["none", "freqmask_16", "filtaug_-7.5_6_b2-4", "noise_30_50"]
rows = run_ablation(grid, scene, thresholds=tuple(np.linspace(0.01, 0.99, 15)))
print(f"{'method':28s} {'psds1':>8s} {'psds2':>8s}")
for name, p1, p2 in rows:
    print(f"{name:28s} {p1:8.4f} {p2:8.4f}")
print("\n(toy-scale numbers; the grid structure and determinism are the point)")
