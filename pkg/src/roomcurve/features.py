"""Local-grouping features of echo paths and normal-fit group thresholds."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import DegenerateDistribution, InsufficientDecay, InvalidInput
from .spectra import ImpulseResponse, LogPowerSpectrum

#: Schroeder regression interval in dB below the EDC start.
EDC_FIT_START_DB = -5.0
EDC_FIT_END_DB = -35.0

ROLLOFF_LOW_HZ = 60.0
ROLLOFF_HIGH_HZ = 120.0

DEFAULT_TAIL_PROB = 0.22


class FeatureKind(str, enum.Enum):
    RT30 = "rt30"
    LOW_FREQ_ROLLOFF = "rolloff"

    @classmethod
    def parse(cls, value) -> "FeatureKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"rt": cls.RT30, "rt30": cls.RT30, "rolloff": cls.LOW_FREQ_ROLLOFF,
                   "roff": cls.LOW_FREQ_ROLLOFF, "lowfreqrolloff": cls.LOW_FREQ_ROLLOFF,
                   "low_freq_rolloff": cls.LOW_FREQ_ROLLOFF}
        try:
            return aliases[key]
        except KeyError:
            raise InvalidInput(f"unknown feature kind {value!r}") from None


@dataclass(frozen=True)
class GroupThresholds:
    """Cut points splitting a feature axis into ``(-inf, low)``, ``[low, high]``, ``(high, inf)``."""

    feature_kind: FeatureKind
    low: float
    high: float

    def __post_init__(self):
        object.__setattr__(self, "feature_kind", FeatureKind.parse(self.feature_kind))
        if not (np.isfinite(self.low) and np.isfinite(self.high) and self.low < self.high):
            raise InvalidInput(f"thresholds must satisfy low < high, got ({self.low}, {self.high})")

    def group_of(self, value: float) -> int:
        """Group index 0, 1 or 2; both cut values belong to the middle group."""
        if value < self.low:
            return 0
        if value > self.high:
            return 2
        return 1


def energy_decay_curve(samples) -> np.ndarray:
    """Schroeder backward-integrated energy in dB relative to total energy.

    Samples after the last non-zero one map to ``-inf``.
    """
    energy = np.asarray(samples, dtype=float) ** 2
    remaining = np.cumsum(energy[::-1])[::-1]
    total = remaining[0]
    if total <= 0:
        raise InsufficientDecay("impulse response has no energy")
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(remaining / total)


def rt30(ir: ImpulseResponse) -> float:
    """Time in ms for the fitted Schroeder decay line to fall 30 dB.

    The line is fitted by least squares to the EDC samples lying in
    ``[-35, -5]`` dB.

    Raises
    ------
    InsufficientDecay
        If the EDC never reaches -35 dB or fewer than two samples fall in the
        regression interval.
    """
    if not isinstance(ir, ImpulseResponse):
        raise InvalidInput("rt30 expects an ImpulseResponse")
    edc = energy_decay_curve(ir.samples)
    if not np.any(edc <= EDC_FIT_END_DB):
        raise InsufficientDecay(f"decay range below {-EDC_FIT_END_DB:g} dB")
    idx = np.flatnonzero((edc <= EDC_FIT_START_DB) & (edc >= EDC_FIT_END_DB))
    if idx.size < 2:
        raise InsufficientDecay("fewer than two EDC samples inside the regression interval")
    t = idx / ir.sample_rate
    slope, _ = np.polyfit(t, edc[idx], 1)
    if slope >= 0:
        raise InsufficientDecay("fitted decay slope is not negative")
    return float(-30.0 / slope * 1000.0)


def _level_at(spectrum: LogPowerSpectrum, freq: float) -> float:
    return float(np.interp(freq, spectrum.freqs, spectrum.bins))


def lf_rolloff(spectrum: LogPowerSpectrum) -> float:
    """Level difference ``L(120 Hz) - L(60 Hz)`` in dB, bins linearly interpolated."""
    if spectrum.sample_rate < 2 * 2 * ROLLOFF_HIGH_HZ:
        raise InvalidInput(f"sample_rate {spectrum.sample_rate} too low for the roll-off feature")
    if np.count_nonzero(spectrum.freqs < ROLLOFF_LOW_HZ) < 2:
        raise InvalidInput(f"nfft={spectrum.nfft} cannot resolve {ROLLOFF_LOW_HZ:g} Hz")
    return _level_at(spectrum, ROLLOFF_HIGH_HZ) - _level_at(spectrum, ROLLOFF_LOW_HZ)


def fit_normal_thresholds(values, q: float = DEFAULT_TAIL_PROB, feature_kind=FeatureKind.RT30) -> GroupThresholds:
    """Thresholds at the ``q`` and ``1 - q`` quantiles of a fitted normal.

    Parameters
    ----------
    values : array_like
        At least 10 feature values.
    q : float
        Tail probability, ``0 < q < 0.5``.
    feature_kind : FeatureKind
        Stored on the result.
    """
    x = np.asarray(values, dtype=float)
    if x.size < 10:
        raise InvalidInput(f"need at least 10 values, got {x.size}")
    if not 0.0 < q < 0.5:
        raise InvalidInput(f"tail probability must lie in (0, 0.5), got {q}")
    mu = float(np.mean(x))
    sigma = float(np.std(x, ddof=1))
    if not sigma > 0.0:
        raise DegenerateDistribution("feature values have zero variance")
    dist = NormalDist(mu, sigma)
    low, high = dist.inv_cdf(q), dist.inv_cdf(1.0 - q)
    if not low < high:  # q within rounding of 0.5
        high = np.nextafter(low, np.inf)
    return GroupThresholds(FeatureKind.parse(feature_kind), low, float(high))


def record_feature(record, kind) -> float:
    """Feature value of a dataset record (RT30 of the IR or roll-off of the spectrum)."""
    kind = FeatureKind.parse(kind)
    if kind is FeatureKind.RT30:
        return rt30(record.echo_ir)
    return lf_rolloff(record.echo_spectrum)
