"""MFCC extraction with a pluggable analysis window, plus feature/WAV file I/O."""

from __future__ import annotations

import hashlib
import json
import struct
import wave
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.fft import dct

from .errors import ConfigError, FormatError, SignalTooShort, ValidationError
from .spectral import multitaper_power
from .windows import Base, WindowSpec, apply_window, make_window

__all__ = [
    "MfccConfig",
    "FeatureMatrix",
    "MelFilterbank",
    "hz_to_mel",
    "mel_to_hz",
    "frame_signal",
    "build_mel_filterbank",
    "power_spectra",
    "cepstra_from_power",
    "deltas",
    "extract",
    "write_features",
    "read_features",
    "read_wav",
    "write_wav",
    "config_digest",
]

FEATURE_MAGIC = b"MFC1"
_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True)
class MfccConfig:
    """MFCC front-end settings.

    Defaults give 19 cepstra (c0 dropped) plus their deltas, 38 values per
    20 ms frame with a 10 ms shift at 8 kHz.  ``window=None`` selects a
    Hamming window matching the frame length.
    """

    sample_rate: int = 8000
    frame_len: float = 20.0
    frame_shift: float = 10.0
    num_filters: int = 20
    num_ceps: int = 19
    window: WindowSpec | None = None
    preemphasis: float = 0.97
    deltas: bool = True
    delta_context: int = 2
    fft_size: int = 512
    energy_floor: float = 1e-10
    vad_percentile: float | None = None

    def __post_init__(self):
        samples = self.frame_len * self.sample_rate / 1000
        if samples != int(samples) or samples < 2:
            raise ConfigError(f"frame_len {self.frame_len} ms is not a whole number of samples at {self.sample_rate} Hz")
        shift = self.frame_shift * self.sample_rate / 1000
        if shift != int(shift) or shift < 1:
            raise ConfigError(f"frame_shift {self.frame_shift} ms is not a whole number of samples")
        if self.window is None:
            object.__setattr__(self, "window", WindowSpec(Base.HAMMING, 0, int(samples)))
        elif self.window.length != int(samples):
            raise ConfigError(f"window length {self.window.length} does not match frame of {int(samples)} samples")
        if not 0 < self.num_ceps < self.num_filters:
            raise ConfigError("need 0 < num_ceps < num_filters")
        if self.fft_size < samples:
            raise ConfigError(f"fft_size {self.fft_size} is shorter than a frame ({int(samples)} samples)")
        if not 0 <= self.preemphasis < 1:
            raise ConfigError("preemphasis must lie in [0, 1)")
        if self.delta_context < 1:
            raise ConfigError("delta_context must be >= 1")
        if self.energy_floor <= 0:
            raise ConfigError("energy_floor must be positive")
        if self.vad_percentile is not None and not 0 <= self.vad_percentile <= 100:
            raise ConfigError("vad_percentile must lie in [0, 100]")

    @property
    def frame_samples(self) -> int:
        return int(self.frame_len * self.sample_rate / 1000)

    @property
    def hop_samples(self) -> int:
        return int(self.frame_shift * self.sample_rate / 1000)

    @property
    def dim(self) -> int:
        return self.num_ceps * (2 if self.deltas else 1)

    def with_window(self, window: WindowSpec) -> "MfccConfig":
        return replace(self, window=window)


def config_digest(obj) -> str:
    """Short content digest of a (nested) dataclass or plain mapping."""
    payload = asdict(obj) if hasattr(obj, "__dataclass_fields__") else obj
    text = json.dumps(payload, sort_keys=True, default=lambda v: getattr(v, "value", str(v)))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class FeatureMatrix:
    frames: np.ndarray = field(repr=False)
    frame_shift: float = 10.0
    config_digest: str = ""

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float64, ndmin=2)
        if frames.size == 0:
            frames = frames.reshape(0, frames.shape[1] if frames.ndim == 2 else 0)
        if not np.all(np.isfinite(frames)):
            raise ValidationError("feature values must be finite")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    def __len__(self) -> int:
        return self.frames.shape[0]

    def quantized(self) -> "FeatureMatrix":
        """Copy with values rounded to float32, i.e. what a feature file stores."""
        return FeatureMatrix(self.frames.astype(np.float32), self.frame_shift, self.config_digest)


@dataclass(frozen=True)
class MelFilterbank:
    num_filters: int
    fft_size: int
    weights: np.ndarray = field(repr=False)
    center_freqs: np.ndarray


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def frame_signal(samples, config: MfccConfig) -> np.ndarray:
    """Split into overlapping frames, one per row; a trailing partial frame is dropped."""
    samples = np.asarray(samples, dtype=np.float64)
    size, hop = config.frame_samples, config.hop_samples
    if samples.ndim != 1:
        raise ValidationError("signal must be one-dimensional")
    if samples.size < size:
        raise SignalTooShort(f"signal of {samples.size} samples is shorter than one frame ({size})")
    return np.lib.stride_tricks.sliding_window_view(samples, size)[::hop]


def build_mel_filterbank(config: MfccConfig) -> MelFilterbank:
    """Triangular filters with centres equally spaced on the mel scale.

    Each triangle spans the neighbouring centres (0 Hz and Nyquist at the
    ends) and is scaled so its largest weight on the FFT bin grid is 1.
    """
    nyquist = config.sample_rate / 2
    knots = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(nyquist), config.num_filters + 2))
    bin_freqs = np.arange(config.fft_size // 2 + 1) * config.sample_rate / config.fft_size
    lo, mid, hi = knots[:-2, None], knots[1:-1, None], knots[2:, None]
    rising = (bin_freqs - lo) / (mid - lo)
    falling = (hi - bin_freqs) / (hi - mid)
    weights = np.maximum(0.0, np.minimum(rising, falling))
    peaks = weights.max(axis=1)
    if np.any(peaks == 0):
        raise ConfigError("fft_size too small: some mel filters contain no FFT bin")
    weights /= peaks[:, None]
    return MelFilterbank(config.num_filters, config.fft_size, weights, knots[1:-1])


def _preemphasize(samples: np.ndarray, alpha: float) -> np.ndarray:
    if alpha == 0:
        return samples
    out = samples.copy()
    out[1:] -= alpha * samples[:-1]
    return out


def power_spectra(frames: np.ndarray, config: MfccConfig) -> np.ndarray:
    """One-sided power spectrum of each frame using the configured window."""
    spec = config.window
    if spec.is_multitaper:
        return multitaper_power(frames, spec.tapers, config.fft_size)
    bins = np.fft.rfft(apply_window(make_window(spec), frames), config.fft_size, axis=-1)
    return bins.real**2 + bins.imag**2


def deltas(ceps: np.ndarray, context: int = 2) -> np.ndarray:
    """Regression deltas over +-``context`` frames, edges padded by repetition."""
    num = len(ceps)
    if num == 0:
        return ceps.copy()
    padded = np.pad(ceps, ((context, context), (0, 0)), mode="edge")
    acc = np.zeros_like(ceps)
    for k in range(1, context + 1):
        acc += k * (padded[context + k : context + k + num] - padded[context - k : context - k + num])
    return acc / (2 * sum(k * k for k in range(1, context + 1)))


def cepstra_from_power(power: np.ndarray, config: MfccConfig, fbank: MelFilterbank | None = None) -> np.ndarray:
    """Filterbank, log, DCT and deltas: everything downstream of the window."""
    if fbank is None:
        fbank = build_mel_filterbank(config)
    energies = power @ fbank.weights.T
    log_e = np.log(np.maximum(energies, config.energy_floor))
    ceps = dct(log_e, type=2, norm="ortho", axis=-1)[:, 1 : config.num_ceps + 1]
    if config.deltas:
        ceps = np.hstack([ceps, deltas(ceps, config.delta_context)])
    return ceps


def _vad_mask(frames: np.ndarray, percentile: float) -> np.ndarray:
    energy_db = 10 * np.log10(np.sum(frames**2, axis=1) + 1e-30)
    return energy_db >= np.percentile(energy_db, percentile) - 30.0


def extract(samples, config: MfccConfig | None = None) -> FeatureMatrix:
    """MFCC (+ delta) features of a signal."""
    if config is None:
        config = MfccConfig()
    samples = np.asarray(samples, dtype=np.float64)
    emphasized = _preemphasize(samples, config.preemphasis)
    frames = frame_signal(emphasized, config)
    feats = cepstra_from_power(power_spectra(frames, config), config)
    if config.vad_percentile is not None:
        feats = feats[_vad_mask(frames, config.vad_percentile)]
    return FeatureMatrix(feats, config.frame_shift, config_digest(config))


def write_features(fm: FeatureMatrix, path) -> None:
    """Write ``MFC1`` header (dim, count, shift in microseconds) and float32 rows."""
    shift_us = int(round(fm.frame_shift * 1000))
    data = np.ascontiguousarray(fm.frames, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FEATURE_MAGIC, fm.dim, len(fm), shift_us))
        fh.write(data.tobytes())


def read_features(path) -> FeatureMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, dim, count, shift_us = _HEADER.unpack_from(raw)
    if magic != FEATURE_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if dim == 0:
        raise FormatError(f"{path}: zero feature dimension")
    expected = _HEADER.size + 4 * dim * count
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    frames = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(count, dim)
    return FeatureMatrix(frames, shift_us / 1000.0)


def read_wav(path):
    """Read a 16-bit PCM mono WAV. Returns ``(samples, sample_rate)`` with samples in [-1, 1)."""
    with wave.open(str(path), "rb") as wf:
        if wf.getnchannels() != 1 or wf.getsampwidth() != 2:
            raise FormatError(f"{path}: only 16-bit PCM mono WAV is supported")
        rate = wf.getframerate()
        data = wf.readframes(wf.getnframes())
    return np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0, rate


def write_wav(path, samples, sample_rate: int) -> None:
    """Write samples in [-1, 1) as 16-bit PCM mono; values are clipped."""
    pcm = np.clip(np.round(np.asarray(samples) * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(sample_rate))
        wf.writeframes(pcm.tobytes())
