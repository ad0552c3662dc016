"""Log-power spectra on power-of-two DFT grids, plus minimum-phase FIR synthesis."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidInput

#: Power floor added before taking logs; -120 dB.
POWER_FLOOR = 1e-12

#: Internal frequency-grid oversampling used by :func:`min_phase_fir`.
CEPSTRUM_OVERSAMPLING = 4


def _frozen(values, dtype=float):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ImpulseResponse:
    """Time-domain response sampled at ``sample_rate`` Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = _frozen(np.ravel(self.samples))
        if samples.size < 1:
            raise InvalidInput("impulse response must contain at least one sample")
        if not np.all(np.isfinite(samples)):
            raise InvalidInput("impulse response contains non-finite samples")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise InvalidInput(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True, eq=False)
class LogPowerSpectrum:
    """Log-energy spectrum, ``10*log10(power)`` on the ``nfft//2 + 1`` rfft bins."""

    bins: np.ndarray
    sample_rate: int
    nfft: int

    def __post_init__(self):
        bins = _frozen(np.ravel(self.bins))
        nfft = int(self.nfft)
        if nfft < 2 or nfft % 2:
            raise InvalidInput(f"nfft must be even and >= 2, got {self.nfft!r}")
        if bins.size != nfft // 2 + 1:
            raise InvalidInput(f"expected {nfft // 2 + 1} bins for nfft={nfft}, got {bins.size}")
        if not np.all(np.isfinite(bins)):
            raise InvalidInput("log-power spectrum contains non-finite bins")
        if self.sample_rate <= 0:
            raise InvalidInput("sample_rate must be positive")
        object.__setattr__(self, "bins", bins)
        object.__setattr__(self, "nfft", nfft)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def freqs(self) -> np.ndarray:
        return bin_frequencies(self.nfft, self.sample_rate)

    def __len__(self):
        return self.bins.size


def bin_frequencies(nfft: int, sample_rate: float) -> np.ndarray:
    """Centre frequencies in Hz of the ``nfft//2 + 1`` rfft bins."""
    return np.arange(nfft // 2 + 1) * (sample_rate / nfft)


def check_nfft(nfft: int) -> int:
    """Validate a transform length: a power of two, at least 2."""
    n = int(nfft)
    if n != nfft or n < 2 or n & (n - 1):
        raise InvalidInput(f"nfft must be a power of two >= 2, got {nfft!r}")
    return n


def rfft(samples, nfft: int) -> np.ndarray:
    """Real DFT of ``samples`` zero-padded (or truncated) to ``nfft`` points."""
    n = check_nfft(nfft)
    x = np.asarray(samples, dtype=float)
    return np.fft.rfft(x[:n], n)


def power_db(power) -> np.ndarray:
    """``10*log10(power + POWER_FLOOR)``."""
    return 10.0 * np.log10(np.asarray(power, dtype=float) + POWER_FLOOR)


def log_power_spectrum(ir: ImpulseResponse, nfft: int) -> LogPowerSpectrum:
    """Log-energy spectrum of an impulse response.

    Parameters
    ----------
    ir : ImpulseResponse
        Input response. Samples beyond ``nfft`` are dropped with a warning.
    nfft : int
        DFT length, a power of two.

    Returns
    -------
    LogPowerSpectrum
        ``10*log10(|H[k]|**2 + 1e-12)`` for ``k = 0 .. nfft/2``.
    """
    if not isinstance(ir, ImpulseResponse):
        ir = ImpulseResponse(ir, 1)
    n = check_nfft(nfft)
    if len(ir) > n:
        warnings.warn(
            f"impulse response of {len(ir)} samples truncated to nfft={n}",
            RuntimeWarning,
            stacklevel=2,
        )
    spectrum = rfft(ir.samples, n)
    return LogPowerSpectrum(power_db(np.abs(spectrum) ** 2), ir.sample_rate, n)


def _full_circle(half: np.ndarray) -> np.ndarray:
    # conjugate-symmetric extension of a real half-spectrum
    return np.concatenate([half, half[-2:0:-1]])


def _oversample_log_magnitude(log_mag_half: np.ndarray, factor: int) -> np.ndarray:
    """Resample a real, even log-magnitude onto a ``factor`` times denser full grid."""
    full = _full_circle(log_mag_half)
    if factor == 1:
        return full
    n = full.size
    grid = np.arange(n + 1) * (2 * np.pi / n)
    spline = CubicSpline(grid, np.append(full, full[0]), bc_type="periodic")
    fine = np.arange(n * factor) * (2 * np.pi / (n * factor))
    return spline(fine)


def min_phase_fir(magnitude_db, fir_length: int, *, oversampling: int = CEPSTRUM_OVERSAMPLING) -> np.ndarray:
    """Minimum-phase FIR whose magnitude follows a dB target.

    The target is given on the ``nfft//2 + 1`` rfft bins in the same units as
    :class:`LogPowerSpectrum` (``20*log10|H|``). The real cepstrum of the
    log-magnitude is folded onto positive quefrencies and exponentiated back
    to the frequency domain.

    Parameters
    ----------
    magnitude_db : array_like or LogPowerSpectrum
        Target magnitude per bin in dB.
    fir_length : int
        Number of output taps, at most ``nfft``.
    oversampling : int, optional
        Frequency-grid oversampling used to limit cepstral aliasing.

    Returns
    -------
    numpy.ndarray
        Real causal filter taps of length ``fir_length``.
    """
    if isinstance(magnitude_db, LogPowerSpectrum):
        magnitude_db = magnitude_db.bins
    half = np.asarray(magnitude_db, dtype=float)
    nfft = check_nfft(2 * (half.size - 1))
    if not np.all(np.isfinite(half)):
        raise InvalidInput("target magnitude must be finite")
    if fir_length < 1 or fir_length > nfft:
        raise InvalidInput(f"fir_length must lie in [1, {nfft}], got {fir_length}")

    # floor-clamp to the same -120 dB bound used for log spectra
    half = np.maximum(half, 10.0 * np.log10(POWER_FLOOR))
    log_mag = _oversample_log_magnitude(half * (np.log(10.0) / 20.0), int(oversampling))
    n = log_mag.size

    cepstrum = np.fft.ifft(log_mag).real
    folded = np.zeros(n)
    folded[0] = cepstrum[0]
    folded[1 : n // 2] = 2.0 * cepstrum[1 : n // 2]
    folded[n // 2] = cepstrum[n // 2]

    impulse = np.fft.ifft(np.exp(np.fft.fft(folded))).real
    return impulse[:fir_length].copy()
