"""sedkit: sound event detection tooling.

Mel-spectrogram frontend, spectrogram augmentation (FilterAugment,
masking, frameshift, mixup, noise) with a student/teacher dual-view
policy, weak-prediction decoding, intersection-criterion PSDS and
event-based F1, and a deterministic synthetic harness to run it all
end to end.
"""

__version__ = "0.1.0"

from .rng import Rng
from .frontend import (
    FrontendConfig,
    MelSpec,
    Waveform,
    LINEAR,
    LOG,
    log_mel,
    linear_mel,
    mel_filterbank,
    normalize_waveform,
)
from .augment import (
    AugmentConfig,
    FilterAugmentConfig,
    LabelSet,
    PRESETS,
    ABLATION_GRID,
    add_gaussian_noise,
    augment_features,
    filter_augment,
    frame_shift,
    freq_mask,
    get_preset,
    make_student_teacher_views,
    mixup,
    time_mask,
)
from .postprocess import (
    DecodeConfig,
    Event,
    ScoreMatrix,
    apply_weak_masking,
    binarize,
    decode_clip,
    decode_events,
    median_filter,
    rasterize_events,
    weak_sed_events,
)
from .evaluate import (
    GroundTruth,
    OperatingPointCounts,
    PSDSReport,
    ScenarioConfig,
    effective_rates,
    evaluate_system,
    event_f1,
    intersect,
    match_operating_point,
    psd_roc,
    scenario1,
    scenario2,
)
from .harness import (
    EventPrototype,
    SceneSpec,
    ToyDetectorConfig,
    default_toy_config,
    generate_scene,
    run_ablation,
    synth_dataset,
    toy_detect,
)
