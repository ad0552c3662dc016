"""Room-compensation filter design from an estimated room curve.

Magnitudes here follow the log-energy convention of the room curves: a gain
``|G|`` is written as ``10*log10|G|``, so that ``r_dB + 2*|G|_dB = t_dB``
states ``r * |G|**2 = t``. The realized FIR therefore has a log-power
spectrum of ``2 * magnitude_db``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidInput
from .spectra import LogPowerSpectrum, bin_frequencies, check_nfft, min_phase_fir, power_db, rfft

DEFAULT_CLAMP = (-12.0, 12.0)
DEFAULT_FIR_LENGTH = 512


@dataclass(frozen=True, eq=False)
class TargetCurve:
    bins: np.ndarray
    description: str = ""

    def __post_init__(self):
        bins = np.array(self.bins, dtype=float)
        if bins.ndim != 1 or not np.all(np.isfinite(bins)):
            raise InvalidInput("target curve must be a finite 1-D vector")
        bins.setflags(write=False)
        object.__setattr__(self, "bins", bins)


def flat_target(nfft: int, bass_shelf_db: float = 0.0, shelf_corner_hz: float = 100.0, sample_rate: int = 16000) -> TargetCurve:
    """Flat target with an optional first-order low shelf.

    A boost of ``g`` dB follows ``10*log10((f**2 + G**2 fc**2) / (f**2 + fc**2))``
    with ``G = 10**(g/20)``; a cut is the exact dB mirror of the same boost.
    """
    nfft = check_nfft(nfft)
    if not 0 < shelf_corner_hz < sample_rate / 2:
        raise InvalidInput(f"shelf corner {shelf_corner_hz} Hz must lie in (0, Nyquist)")
    f = bin_frequencies(nfft, sample_rate)
    g = 10.0 ** (abs(bass_shelf_db) / 20.0)
    fc2 = shelf_corner_hz**2
    shelf = 10.0 * np.log10((f**2 + g * g * fc2) / (f**2 + fc2))
    bins = np.sign(bass_shelf_db) * shelf
    desc = f"flat, {bass_shelf_db:+g} dB low shelf at {shelf_corner_hz:g} Hz"
    return TargetCurve(bins + 0.0, desc)


class EqDesign(NamedTuple):
    magnitude_db: np.ndarray
    unclamped_db: np.ndarray
    clamped: np.ndarray


def _check_clamp(clamp):
    lo, hi = (float(v) for v in clamp)
    if not lo < 0.0 < hi:
        raise InvalidInput(f"clamp must satisfy min < 0 < max, got {clamp!r}")
    return lo, hi


def design_eq_magnitude(r_hat, target, clamp=DEFAULT_CLAMP) -> EqDesign:
    """Ideal gain ``(t_dB - r_dB) / 2`` per bin, clamped to ``clamp``."""
    r = r_hat.bins if isinstance(r_hat, LogPowerSpectrum) else np.asarray(r_hat, dtype=float)
    t = target.bins if isinstance(target, TargetCurve) else np.asarray(target, dtype=float)
    if r.shape != t.shape:
        raise InvalidInput(f"bin count mismatch: room curve {r.shape} vs target {t.shape}")
    lo, hi = _check_clamp(clamp)
    raw = 0.5 * (t - r)
    mag = np.clip(raw, lo, hi)
    return EqDesign(mag, raw, (raw < lo) | (raw > hi))


@dataclass(frozen=True, eq=False)
class EqFilter:
    taps: np.ndarray
    magnitude_db: np.ndarray
    clamp: tuple
    sample_rate: int = 16000

    def __post_init__(self):
        lo, hi = self.clamp
        if np.any(self.magnitude_db < lo) or np.any(self.magnitude_db > hi):
            raise InvalidInput("design magnitude exceeds the clamp range")

    @property
    def nfft(self) -> int:
        return 2 * (self.magnitude_db.size - 1)

    def realized_magnitude_db(self) -> np.ndarray:
        """Magnitude of the taps on the design grid, same units as ``magnitude_db``."""
        return 0.5 * power_db(np.abs(rfft(self.taps, self.nfft)) ** 2)


def design_eq_filter(magnitude_db, fir_length: int = DEFAULT_FIR_LENGTH, clamp=DEFAULT_CLAMP, sample_rate: int = 16000) -> EqFilter:
    """Minimum-phase FIR realizing a designed gain.

    Accepts an :class:`EqDesign` or a plain dB vector; plain vectors are
    clamped (a no-op for already clamped designs).
    """
    lo, hi = _check_clamp(clamp)
    mag = magnitude_db.magnitude_db if isinstance(magnitude_db, EqDesign) else np.asarray(magnitude_db, dtype=float)
    mag = np.clip(mag, lo, hi)
    taps = min_phase_fir(2.0 * mag, fir_length)
    return EqFilter(taps, mag, (lo, hi), int(sample_rate))


def smooth_fractional_octave(bins, freqs, fraction: float = 6.0) -> np.ndarray:
    """Power-average each bin over a ``1/fraction``-octave window (DC passed through)."""
    bins = np.asarray(bins, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    power = 10.0 ** (bins / 10.0)
    csum = np.concatenate([[0.0], np.cumsum(power)])
    half = 2.0 ** (1.0 / (2.0 * fraction))
    lo = np.searchsorted(freqs, freqs / half, side="left")
    hi = np.searchsorted(freqs, freqs * half, side="right")
    out = bins.copy()
    nz = freqs > 0
    out[nz] = 10.0 * np.log10((csum[hi[nz]] - csum[lo[nz]]) / (hi[nz] - lo[nz]))
    return out
