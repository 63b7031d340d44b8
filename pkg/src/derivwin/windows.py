"""Derivative window family ``n**order * base(n)`` and window quality metrics."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidFftSize, InvalidLength, LengthMismatch, ValidationError

__all__ = [
    "Base",
    "Normalize",
    "WindowSpec",
    "Window",
    "WindowMetrics",
    "make_window",
    "window_metrics",
    "apply_window",
    "default_metrics_fft_size",
    "magnitude_response",
]


class Base(str, enum.Enum):
    HAMMING = "hamming"
    HANNING = "hanning"
    RECTANGULAR = "rectangular"
    # Not a single taper: marks the sine-taper multitaper baseline in MfccConfig.
    MULTITAPER = "multitaper"


class Normalize(str, enum.Enum):
    NONE = "none"
    UNIT_PEAK = "unit_peak"


@dataclass(frozen=True)
class WindowSpec:
    """Parametric description of a window.

    ``order`` is the exponent of the ``n`` weighting; ``order=0`` gives the
    plain base taper.  ``tapers`` is only meaningful for the multitaper base.
    """

    base: Base = Base.HAMMING
    order: int = 0
    length: int = 160
    normalize: Normalize = Normalize.NONE
    tapers: int = 0

    def __post_init__(self):
        object.__setattr__(self, "base", Base(self.base))
        object.__setattr__(self, "normalize", Normalize(self.normalize))
        if int(self.order) != self.order or self.order < 0:
            raise ValidationError(f"order must be a non-negative integer, got {self.order!r}")
        if int(self.length) != self.length:
            raise InvalidLength(f"length must be an integer, got {self.length!r}")
        if self.length < 2:
            raise InvalidLength(f"window length must be >= 2, got {self.length}")
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "length", int(self.length))
        if self.base is Base.MULTITAPER:
            if self.tapers < 1:
                raise ValidationError("multitaper window needs tapers >= 1")
            if self.order != 0:
                raise ValidationError("multitaper baseline has no derivative order")
        elif self.tapers:
            raise ValidationError("tapers is only valid with the multitaper base")

    @property
    def is_multitaper(self) -> bool:
        return self.base is Base.MULTITAPER

    @property
    def label(self) -> str:
        if self.is_multitaper:
            return f"Sine-taper multitaper (k={self.tapers})"
        name = self.base.value.capitalize()
        if self.order == 0:
            return name
        return f"{name} order {self.order}"

    def replace(self, **changes) -> "WindowSpec":
        values = {
            "base": self.base,
            "order": self.order,
            "length": self.length,
            "normalize": self.normalize,
            "tapers": self.tapers,
        }
        values.update(changes)
        return WindowSpec(**values)


@dataclass(frozen=True)
class Window:
    spec: WindowSpec
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)


@dataclass(frozen=True)
class WindowMetrics:
    leakage_factor: float
    relative_sidelobe_attenuation: float
    mainlobe_width_3db: float
    fft_size: int

    def as_row(self) -> str:
        return (
            f"{100 * self.leakage_factor:>9.2f}% "
            f"{self.relative_sidelobe_attenuation:>9.1f} dB "
            f"{self.mainlobe_width_3db:>10.6f}"
        )


def _base_taper(base: Base, length: int) -> np.ndarray:
    n = np.arange(length)
    if base is Base.HAMMING:
        return 0.54 - 0.46 * np.cos(2 * np.pi * n / (length - 1))
    if base is Base.HANNING:
        return 0.5 - 0.5 * np.cos(2 * np.pi * n / (length - 1))
    if base is Base.RECTANGULAR:
        return np.ones(length)
    raise ValidationError(f"{base.value} is not a single-taper window base")


def make_window(spec: WindowSpec) -> Window:
    """Materialize ``spec`` as ``n**order * base(n)`` for ``n = 0..N-1``.

    The base tapers are the symmetric forms (denominator ``N - 1``).
    """
    taper = _base_taper(spec.base, spec.length)
    if spec.order:
        n = np.arange(spec.length, dtype=np.float64)
        samples = n**spec.order * taper
    else:
        samples = taper
    if spec.normalize is Normalize.UNIT_PEAK:
        samples = samples / np.max(np.abs(samples))
    return Window(spec, samples)


def apply_window(w: Window, frame) -> np.ndarray:
    """Multiply ``frame`` by the window samples.

    ``frame`` may carry leading batch axes; the last axis must match the
    window length.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape[-1:] != (w.spec.length,):
        raise LengthMismatch(
            f"frame length {frame.shape[-1:] or 'scalar'} does not match window length {w.spec.length}"
        )
    return frame * w.samples


def default_metrics_fft_size(length: int) -> int:
    """Zero-padded grid used for the window metrics: max(4096, 2**ceil(log2(8N)))."""
    return max(4096, 1 << int(np.ceil(np.log2(8 * length))))


def magnitude_response(w: Window, fft_size: int | None = None):
    """Centered two-sided magnitude spectrum of the window.

    Returns ``(normfreq, magnitude)`` with ``normfreq`` in units of pi
    rad/sample, running from -1 to just below 1.
    """
    if fft_size is None:
        fft_size = default_metrics_fft_size(w.spec.length)
    mag = np.abs(np.fft.fftshift(np.fft.fft(w.samples, fft_size)))
    normfreq = (np.arange(fft_size) - fft_size // 2) * (2.0 / fft_size)
    return normfreq, mag


def window_metrics(w: Window, fft_size: int | None = None) -> WindowMetrics:
    """Leakage factor, relative sidelobe attenuation and -3 dB mainlobe width.

    The mainlobe extends from the spectral peak to the first strict local
    minimum on either side.  The -3 dB width is the distance between the
    outermost grid points whose magnitude is at least ``peak / sqrt(2)``,
    expressed in units of pi rad/sample.
    """
    n_win = w.spec.length
    if fft_size is None:
        fft_size = default_metrics_fft_size(n_win)
    if int(fft_size) != fft_size or fft_size < 4 * n_win:
        raise InvalidFftSize(f"fft_size must be an integer >= 4*N = {4 * n_win}, got {fft_size}")
    fft_size = int(fft_size)

    _, mag = magnitude_response(w, fft_size)
    if not np.any(mag > 0):
        raise ValidationError("window has an all-zero spectrum")
    peak = int(np.argmax(mag))
    last = fft_size - 1

    right = peak
    while right < last and mag[right + 1] < mag[right]:
        right += 1
    left = peak
    while left > 0 and mag[left - 1] < mag[left]:
        left -= 1

    power = mag**2
    total = power.sum()
    main = power[left : right + 1].sum()
    leakage = float((total - main) / total)

    sidelobes = np.concatenate([mag[:left], mag[right + 1 :]])
    if sidelobes.size and sidelobes.max() > 0:
        rsa = float(20 * np.log10(sidelobes.max() / mag[peak]))
    else:
        rsa = float("-inf")

    half_power = mag[peak] / np.sqrt(2)
    hi = peak
    while hi < last and mag[hi + 1] >= half_power:
        hi += 1
    lo = peak
    while lo > 0 and mag[lo - 1] >= half_power:
        lo -= 1
    width = (hi - lo) * 2.0 / fft_size

    return WindowMetrics(leakage, rsa, width, fft_size)
