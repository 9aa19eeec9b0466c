"""Waveform to mel-spectrogram frontend.

The feature is a magnitude mel spectrogram on a fixed frame grid:
peak-normalized waveform, Hann-windowed centered STFT (reflective
padding), triangular mel filterbank, then an amplitude floor and natural
log. Frame count is a pure function of the sample count: T = N // hop + 1.

Fixed conventions, chosen once so tests are exact:
  * mel scale: 2595 * log10(1 + f / 700)
  * triangular filters, each row scaled to peak weight 1 (no area norm)
  * amplitude floor 1e-5 before the log, so silence maps to ln(1e-5)
  * stereo input is averaged to mono at load time
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.io import wavfile

from .errors import (
    ClipTooShort,
    DegenerateFilterbank,
    InvalidConfig,
    InvalidWaveform,
    SampleRateMismatch,
)

LINEAR = "linear_magnitude"
LOG = "log_magnitude"

DEFAULT_LOG_FLOOR = 1e-5
#: fill value for masked cells of log-domain features (floor of the log range)
LOG_MASK_VALUE = math.log(DEFAULT_LOG_FLOOR)


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvalidWaveform(f"expected mono 1-D samples, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise InvalidWaveform("waveform contains NaN or Inf samples")
        if self.sample_rate <= 0:
            raise InvalidWaveform(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    @property
    def duration_seconds(self) -> float:
        return self.samples.shape[0] / self.sample_rate


@dataclass(frozen=True)
class FrontendConfig:
    n_fft: int = 2048
    hop: int = 256
    n_mels: int = 128
    sample_rate: int = 16000
    log_floor: float = DEFAULT_LOG_FLOOR

    def validate(self) -> None:
        if self.n_fft <= 0 or self.hop <= 0 or self.n_mels <= 0 or self.sample_rate <= 0:
            raise InvalidConfig("n_fft, hop, n_mels and sample_rate must be positive")
        if self.hop > self.n_fft:
            raise InvalidConfig(f"hop ({self.hop}) must not exceed n_fft ({self.n_fft})")
        if self.n_mels >= self.n_fft // 2 + 1:
            raise InvalidConfig(f"n_mels ({self.n_mels}) too large for n_fft ({self.n_fft})")
        if self.log_floor <= 0:
            raise InvalidConfig("log_floor must be positive")


@dataclass(frozen=True)
class MelSpec:
    """T x M feature matrix plus the timing metadata needed downstream."""

    data: np.ndarray
    domain: str
    hop_seconds: float
    clip_duration_seconds: float

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise InvalidConfig(f"MelSpec data must be 2-D (frames x mels), got {data.shape}")
        if self.domain not in (LINEAR, LOG):
            raise InvalidConfig(f"unknown domain {self.domain!r}")
        if self.hop_seconds <= 0 or self.clip_duration_seconds <= 0:
            raise InvalidConfig("hop_seconds and clip_duration_seconds must be positive")
        if not np.all(np.isfinite(data)):
            raise InvalidWaveform("MelSpec entries must be finite")
        if self.domain == LINEAR and np.any(data < 0):
            raise InvalidWaveform("linear-domain MelSpec entries must be nonnegative")
        object.__setattr__(self, "data", data)

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def n_mels(self) -> int:
        return self.data.shape[1]

    @property
    def mask_value(self) -> float:
        """Fill value for masked cells: 0 in linear domain, the log floor in log."""
        return 0.0 if self.domain == LINEAR else LOG_MASK_VALUE

    def with_data(self, data: np.ndarray) -> "MelSpec":
        return replace(self, data=data)


def frame_count(n_samples: int, hop: int) -> int:
    return n_samples // hop + 1


def normalize_waveform(w: Waveform) -> Waveform:
    """Scale so the peak absolute sample is 1; all-zero input is returned as is."""
    peak = float(np.max(np.abs(w.samples))) if w.samples.size else 0.0
    if peak == 0.0:
        return w
    return Waveform(w.samples / peak, w.sample_rate)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: FrontendConfig) -> np.ndarray:
    """Triangular mel filterbank, shape (n_mels, n_fft // 2 + 1).

    Rows are peak-normalized to 1. Raises DegenerateFilterbank when the FFT
    resolution cannot give every row a positive weight and a strictly
    increasing peak frequency.
    """
    cfg.validate()
    n_freqs = cfg.n_fft // 2 + 1
    freqs = np.arange(n_freqs) * (cfg.sample_rate / cfg.n_fft)
    mel_edges = np.linspace(hz_to_mel(0.0), hz_to_mel(cfg.sample_rate / 2.0), cfg.n_mels + 2)
    hz_edges = mel_to_hz(mel_edges)

    fb = np.zeros((cfg.n_mels, n_freqs), dtype=np.float64)
    for m in range(cfg.n_mels):
        lo, ctr, hi = hz_edges[m], hz_edges[m + 1], hz_edges[m + 2]
        tri = np.minimum((freqs - lo) / (ctr - lo), (hi - freqs) / (hi - ctr))
        tri = np.clip(tri, 0.0, None)
        peak = tri.max()
        if peak <= 0.0:
            raise DegenerateFilterbank(
                f"mel row {m} has no positive weight; n_mels={cfg.n_mels} exceeds FFT resolution"
            )
        fb[m] = tri / peak
    peaks = fb.argmax(axis=1)
    if np.any(np.diff(peaks) <= 0):
        raise DegenerateFilterbank("row peak frequencies are not strictly increasing")
    return fb


def filterbank_peak_hz(cfg: FrontendConfig) -> np.ndarray:
    """Center frequency (Hz) of each filterbank row on the FFT bin grid."""
    fb = mel_filterbank(cfg)
    return fb.argmax(axis=1) * (cfg.sample_rate / cfg.n_fft)


def _hann(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _stft_magnitude(x: np.ndarray, cfg: FrontendConfig) -> np.ndarray:
    n = x.shape[0]
    half = cfg.n_fft // 2
    if n < half + 1:
        raise ClipTooShort(f"{n} samples is shorter than half a window ({half + 1} needed)")
    t = frame_count(n, cfg.hop)
    padded = np.pad(x, half, mode="reflect")
    frames = sliding_window_view(padded, cfg.n_fft)[:: cfg.hop][:t]
    return np.abs(np.fft.rfft(frames * _hann(cfg.n_fft), axis=1))


def linear_mel(w: Waveform, cfg: FrontendConfig | None = None) -> MelSpec:
    """Magnitude mel spectrogram (linear domain), T x n_mels."""
    cfg = cfg or FrontendConfig()
    cfg.validate()
    if w.sample_rate != cfg.sample_rate:
        raise SampleRateMismatch(
            f"waveform at {w.sample_rate} Hz, config expects {cfg.sample_rate} Hz"
        )
    mag = _stft_magnitude(w.samples, cfg)
    mel = mag @ mel_filterbank(cfg).T
    return MelSpec(
        data=mel,
        domain=LINEAR,
        hop_seconds=cfg.hop / cfg.sample_rate,
        clip_duration_seconds=w.samples.shape[0] / cfg.sample_rate,
    )


def log_mel(w: Waveform, cfg: FrontendConfig | None = None) -> MelSpec:
    """Log mel spectrogram: linear magnitudes floored at log_floor, natural log."""
    cfg = cfg or FrontendConfig()
    spec = linear_mel(w, cfg)
    data = np.log(np.maximum(spec.data, cfg.log_floor))
    return replace(spec, data=data, domain=LOG)


def read_wav(path) -> Waveform:
    """Load a PCM WAV clip: 16-bit int or 32-bit float, mono or stereo."""
    rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise InvalidWaveform(f"unsupported WAV sample format {data.dtype} in {path}")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return Waveform(samples, int(rate))


def write_wav(path, w: Waveform) -> None:
    """Write 16-bit PCM; samples are clipped to the representable range."""
    clipped = np.clip(w.samples, -1.0, 32767.0 / 32768.0)
    wavfile.write(path, w.sample_rate, np.round(clipped * 32768.0).astype(np.int16))


def _sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_melspec(spec: MelSpec, csv_path) -> None:
    """Feature CSV (one row per frame, mel-bin header) plus a JSON sidecar.

    Values are written with repr so the round trip through text is exact.
    """
    csv_path = Path(csv_path)
    header = ",".join(f"mel_{i:03d}" for i in range(spec.n_mels))
    lines = [header]
    for row in spec.data:
        lines.append(",".join(repr(float(v)) for v in row))
    csv_path.write_text("\n".join(lines) + "\n")
    sidecar = {
        "hop_seconds": spec.hop_seconds,
        "clip_duration_seconds": spec.clip_duration_seconds,
        "domain": spec.domain,
        "n_mels": spec.n_mels,
    }
    _sidecar_path(csv_path).write_text(json.dumps(sidecar, indent=2) + "\n")


def read_melspec(csv_path) -> MelSpec:
    csv_path = Path(csv_path)
    meta = json.loads(_sidecar_path(csv_path).read_text())
    body = np.loadtxt(csv_path, delimiter=",", skiprows=1, dtype=np.float64, ndmin=2)
    if body.shape[1] != meta["n_mels"]:
        raise InvalidConfig(
            f"{csv_path}: {body.shape[1]} columns but sidecar says n_mels={meta['n_mels']}"
        )
    return MelSpec(
        data=body,
        domain=meta["domain"],
        hop_seconds=meta["hop_seconds"],
        clip_duration_seconds=meta["clip_duration_seconds"],
    )
