"""Spectra of analysis frames and numerical checks of the derivative-window identities.

The DTFT of ``n * x(n)`` equals ``j dX/dw``; consequently the power spectrum
of a frame weighted by ``n * hamming(n)`` can be written in terms of the
slope of the Hamming-windowed power spectrum and two phase functions.  The
functions here evaluate both sides on dense frequency grids so the relation
can be checked to finite-difference accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGrid, InvalidFftSize, TooManyTapers, ValidationError, ZeroSignal
from .windows import Base, WindowSpec, make_window

__all__ = [
    "SpectralFrame",
    "DerivativeDecomposition",
    "spectrum",
    "dtft_derivative",
    "verify_freq_diff_property",
    "derivative_decomposition",
    "sine_tapers",
    "multitaper_power",
]


def _readonly(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpectralFrame:
    fft_size: int
    complex_bins: np.ndarray = field(repr=False)
    power: np.ndarray = field(repr=False)
    phase: np.ndarray = field(repr=False)


def _principal_phase(z: np.ndarray) -> np.ndarray:
    phase = np.angle(z)
    # np.angle returns -pi for a negative real with -0.0 imaginary part
    phase[phase <= -np.pi] = np.pi
    phase[z == 0] = 0.0
    return phase


def spectrum(frame, fft_size: int) -> SpectralFrame:
    """One-sided zero-padded DFT of a real frame."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 1:
        raise ValidationError("frame must be one-dimensional")
    if int(fft_size) != fft_size or fft_size < max(1, frame.size):
        raise InvalidFftSize(f"fft_size {fft_size} must be >= frame length {frame.size}")
    bins = np.fft.rfft(frame, int(fft_size))
    power = bins.real**2 + bins.imag**2
    return SpectralFrame(
        int(fft_size), _readonly(bins), _readonly(power), _readonly(_principal_phase(bins))
    )


# Central and one-sided first-derivative stencils, (offsets, weights) per accuracy order.
_CENTRAL = {
    2: (np.array([-1, 1]), np.array([-1.0, 1.0]) / 2),
    4: (np.array([-2, -1, 1, 2]), np.array([1.0, -8.0, 8.0, -1.0]) / 12),
}
_FORWARD = {
    2: [np.array([-3.0, 4.0, -1.0]) / 2],
    4: [
        np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12,
        np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12,
    ],
}


def dtft_derivative(values: np.ndarray, step: float, order: int = 2) -> np.ndarray:
    """Finite-difference derivative of samples on a uniform frequency grid.

    Central stencils in the interior, one-sided stencils of the same
    accuracy order at the two ends of the grid.
    """
    if order not in _CENTRAL:
        raise ValidationError(f"unsupported finite-difference order {order}")
    values = np.asarray(values)
    n = values.shape[0]
    offsets, weights = _CENTRAL[order]
    reach = int(offsets.max())
    if n < 2 * reach + 3:
        raise DegenerateGrid(f"grid of {n} points too small for order-{order} differences")
    out = np.zeros_like(values)
    for off, wt in zip(offsets, weights):
        out[reach : n - reach] += wt * values[reach + off : n - reach + off]
    head = values[: len(_FORWARD[order][0])]
    tail = values[::-1][: len(head)]
    for i, stencil in enumerate(_FORWARD[order]):
        # stencil i gives the derivative at the i-th point from the edge
        out[i] = stencil @ head
        out[n - 1 - i] = -(stencil @ tail)
    return out / step


def verify_freq_diff_property(frame, fft_size: int, dense_factor: int = 64) -> float:
    """Compare the DFT of ``n * frame`` with ``j dX/dw`` from finite differences.

    ``dX/dw`` is obtained by second-order central differences on the DTFT of
    ``frame`` sampled ``dense_factor`` times more finely than the DFT grid.
    Returns the largest deviation over bins whose reference magnitude exceeds
    ``1e-9`` of the peak, relative to the peak reference magnitude.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 1 or frame.size == 0:
        raise ValidationError("frame must be a non-empty 1-D array")
    if not np.any(frame):
        raise ZeroSignal("frame is identically zero")
    if int(fft_size) != fft_size or fft_size < frame.size:
        raise InvalidFftSize(f"fft_size {fft_size} must be >= frame length {frame.size}")
    if int(dense_factor) != dense_factor or dense_factor < 8:
        raise ValidationError(f"dense_factor must be an integer >= 8, got {dense_factor}")
    fft_size, dense_factor = int(fft_size), int(dense_factor)

    n = np.arange(frame.size)
    reference = np.fft.fft(n * frame, fft_size)

    grid = fft_size * dense_factor
    dense = np.fft.fft(frame, grid)
    slope = dtft_derivative(dense, 2 * np.pi / grid, order=2)
    estimate = 1j * slope[::dense_factor]

    scale = np.abs(reference).max()
    if scale == 0:
        # DTFT is constant (impulse at n = 0); the estimate must vanish too.
        return float(np.abs(estimate).max())
    mask = np.abs(reference) > 1e-9 * scale
    return float(np.abs(reference - estimate)[mask].max() / scale)


@dataclass(frozen=True)
class DerivativeDecomposition:
    """Both sides of the slope/phase identity on a dense grid.

    ``residual`` is zero, and ``valid`` False, at points where the identity
    is singular (vanishing power or ``cos(phi - phi_hat)`` near zero).
    """

    omega_grid: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)
    H_hat: np.ndarray = field(repr=False)
    dH_domega: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    phi_hat: np.ndarray = field(repr=False)
    residual: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    valid: np.ndarray = field(repr=False)

    @property
    def relative_residual(self) -> np.ndarray:
        """``residual / H_hat**2`` on valid points only."""
        return self.residual[self.valid] / self.H_hat[self.valid] ** 2

    def stats(self) -> dict:
        rel = self.relative_residual
        return {
            "median": float(np.median(rel)) if rel.size else float("nan"),
            "p95": float(np.percentile(rel, 95)) if rel.size else float("nan"),
            "excluded": int(self.valid.size - np.count_nonzero(self.valid)),
            "points": int(self.valid.size),
        }


def derivative_decomposition(
    frame,
    grid_size: int,
    power_floor: float = 1e-6,
    cos_floor: float = 1e-3,
    fd_order: int = 4,
) -> DerivativeDecomposition:
    """Evaluate the slope/phase expression for the derivative-windowed power spectrum.

    ``frame`` is the raw frame ``s(n)``.  The left side ``|DTFT(n*hamming*s)|**2``
    is computed directly; the right side
    ``(dP/dw)**2 / (4P) * sec(phi - phi_hat)**2`` uses finite differences of
    the Hamming-windowed spectrum for the slope.
    """
    s = np.asarray(frame, dtype=np.float64)
    if s.ndim != 1 or s.size < 2:
        raise ValidationError("frame must be a 1-D array of at least 2 samples")
    if not np.any(s):
        raise ZeroSignal("frame is identically zero")
    if int(grid_size) != grid_size or grid_size < 8 * s.size:
        raise DegenerateGrid(f"grid_size must be >= 8*len(frame) = {8 * s.size}, got {grid_size}")
    grid_size = int(grid_size)

    hamming = make_window(WindowSpec(Base.HAMMING, 0, s.size)).samples
    n = np.arange(s.size)
    x = hamming * s
    X = np.fft.fft(x, grid_size)
    X_hat = np.fft.fft(n * x, grid_size)
    step = 2 * np.pi / grid_size
    omega = np.arange(grid_size) * step

    H = np.abs(X)
    H_hat = np.abs(X_hat)
    phi = np.arctan2(X.imag, X.real)
    # dX/dw = -j * X_hat, so dX_R/dw = Im(X_hat) and dX_I/dw = -Re(X_hat).
    phi_hat = np.arctan2(-X_hat.real, X_hat.imag)

    dX = dtft_derivative(X, step, order=fd_order)
    a = np.abs(dX)
    P = H**2
    nonzero = H > 0
    dH = np.zeros(grid_size)
    dH[nonzero] = (X.real[nonzero] * dX.real[nonzero] + X.imag[nonzero] * dX.imag[nonzero]) / H[nonzero]
    dP = 2 * H * dH

    cos_diff = np.cos(phi - phi_hat)
    valid = (P >= power_floor * P.max()) & (np.abs(cos_diff) >= cos_floor)
    residual = np.zeros(grid_size)
    rhs = dP[valid] ** 2 / (4 * P[valid]) / cos_diff[valid] ** 2
    residual[valid] = np.abs(H_hat[valid] ** 2 - rhs)

    return DerivativeDecomposition(
        *(_readonly(v) for v in (omega, H, H_hat, dH, phi, phi_hat, residual, a, valid))
    )


def sine_tapers(length: int, num_tapers: int) -> np.ndarray:
    """Orthonormal sine tapers, shape ``(num_tapers, length)``."""
    n = np.arange(length)
    m = np.arange(num_tapers)[:, None]
    return np.sqrt(2.0 / (length + 1)) * np.sin(np.pi * (m + 1) * (n + 1) / (length + 1))


def multitaper_power(frame, num_tapers: int, fft_size: int) -> np.ndarray:
    """Uniformly weighted average of sine-taper power spectra (one-sided).

    ``frame`` may be 2-D, one frame per row.
    """
    frame = np.asarray(frame, dtype=np.float64)
    length = frame.shape[-1]
    if int(num_tapers) != num_tapers or num_tapers < 1:
        raise ValidationError(f"num_tapers must be a positive integer, got {num_tapers}")
    if num_tapers >= length:
        raise TooManyTapers(f"{num_tapers} tapers need a frame longer than {length} samples")
    if int(fft_size) != fft_size or fft_size < length:
        raise InvalidFftSize(f"fft_size {fft_size} must be >= frame length {length}")
    tapers = sine_tapers(length, int(num_tapers))
    bins = np.fft.rfft(frame[..., None, :] * tapers, int(fft_size), axis=-1)
    return np.mean(bins.real**2 + bins.imag**2, axis=-2)
