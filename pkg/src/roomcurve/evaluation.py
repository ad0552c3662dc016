"""Estimation-error metric with repeated cross-validation and percentile summaries."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import estimators as est
from .errors import InvalidInput, RoomCurveError
from .features import DEFAULT_TAIL_PROB, FeatureKind, fit_normal_thresholds
from .spectra import LogPowerSpectrum, bin_frequencies

log = logging.getLogger(__name__)

BAND_HZ = (100.0, 7000.0)
REPORT_HEADER = ("bin_hz", "mean_db", "std_db", "p50_db", "p95_db")

ESTIMATOR_KINDS = ("average", "oracle", "ls", "gpca", "lpca")


def _bins(x) -> np.ndarray:
    return x.bins if isinstance(x, LogPowerSpectrum) else np.asarray(x, dtype=float)


def error_spectrum(r, r_hat) -> np.ndarray:
    """Absolute dB difference per bin between a room curve and its estimate."""
    a, b = _bins(r), _bins(r_hat)
    if a.shape != b.shape:
        raise InvalidInput(f"bin count mismatch: {a.shape} vs {b.shape}")
    return np.abs(a - b)


def band_mask(freqs, band=BAND_HZ) -> np.ndarray:
    lo, hi = band
    freqs = np.asarray(freqs)
    return (freqs >= lo) & (freqs <= hi)


@dataclass(frozen=True)
class EstimatorSpec:
    """Which estimator to train inside cross-validation, with its parameters."""

    kind: str
    mu: float = est.DEFAULT_MU
    ks: int | None = None
    kr: int = est.DEFAULT_KR
    feature: str = FeatureKind.RT30.value
    q: float = DEFAULT_TAIL_PROB
    ridge: float | None = None
    name: str | None = None

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in ESTIMATOR_KINDS:
            raise InvalidInput(f"unknown estimator {self.kind!r}; choose from {ESTIMATOR_KINDS}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "feature", FeatureKind.parse(self.feature).value)
        if self.ks is None:
            object.__setattr__(self, "ks", est.DEFAULT_KS_LOCAL if kind == "lpca" else est.DEFAULT_KS_GLOBAL)

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == "gpca":
            return f"gpca_{self.ks}_{self.kr}"
        if self.kind == "lpca":
            return f"lpca_{self.feature}_{self.ks}_{self.kr}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "EstimatorSpec":
        """``"gpca"``, ``"lpca:rt30:80:32"``, ``"gpca:240:32"``, ``"ls:0.001"``."""
        parts = text.split(":")
        kind = parts[0].lower()
        try:
            if kind == "ls" and len(parts) > 1:
                return cls("ls", mu=float(parts[1]))
            if kind == "gpca" and len(parts) > 1:
                return cls("gpca", ks=int(parts[1]), kr=int(parts[2]) if len(parts) > 2 else est.DEFAULT_KR)
            if kind == "lpca" and len(parts) > 1:
                ks = int(parts[2]) if len(parts) > 2 else est.DEFAULT_KS_LOCAL
                kr = int(parts[3]) if len(parts) > 3 else est.DEFAULT_KR
                return cls("lpca", feature=parts[1], ks=ks, kr=kr)
        except (ValueError, IndexError) as exc:
            raise InvalidInput(f"cannot parse estimator {text!r}: {exc}") from None
        if len(parts) > 1:
            raise InvalidInput(f"estimator {kind!r} takes no parameters: {text!r}")
        return cls(kind)


@dataclass
class ErrorSurface:
    """Per-repeat, per-validation-record error curves, shape ``(repeats, N_val, bins)``."""

    errors: np.ndarray
    freqs: np.ndarray
    meta: dict = field(default_factory=dict)
    failures: int = 0

    @property
    def samples(self) -> np.ndarray:
        """All error curves pooled over repeats and records, shape ``(n, bins)``."""
        return self.errors.reshape(-1, self.errors.shape[-1])

    def __len__(self):
        return self.samples.shape[0]


def split_indices(n_records: int, n_tr: int, n_val: int, seed: int, repeat: int):
    """Disjoint ``(validation, training pool)`` index arrays for one repeat.

    The training pool lists the non-validation records in draw order; the
    first ``n_tr`` of them form the ordinary training split.
    """
    rng = np.random.default_rng([int(seed), int(repeat)])
    perm = rng.permutation(n_records)
    return perm[:n_val], perm[n_val:]


def _stratified_training(pool, features, n_tr, feature_kind, q):
    """Thresholds fitted on the pool, then about ``n_tr / 3`` records per group."""
    values = features[pool]
    finite = np.isfinite(values)
    thresholds = fit_normal_thresholds(values[finite], q, feature_kind)
    filled = np.where(finite, values, 0.5 * (thresholds.low + thresholds.high))
    groups = est.partition(filled, thresholds)
    quota = [n_tr // 3, n_tr - 2 * (n_tr // 3), n_tr // 3]
    chosen = []
    for members, k in zip(groups, quota):
        if len(members) < k:
            log.warning("local group has %d pool records, fewer than the quota %d", len(members), k)
        chosen.extend(members[:k])
    return pool[np.sort(np.asarray(chosen, dtype=int))], thresholds


def _predict_all(model, records) -> np.ndarray:
    return np.array([est.predict(model, rec).bins for rec in records])


def run_repeat(dataset, spec: EstimatorSpec, n_tr: int, n_val: int, seed: int, repeat: int, features=None):
    """Error curves ``(n_val, bins)`` for one cross-validation repeat."""
    ds = est._as_dataset(dataset)
    val, pool = split_indices(len(ds), n_tr, n_val, seed, repeat)
    val_records = [ds[i] for i in val]
    truth = np.array([r.room_avg_spectrum.bins for r in val_records])

    if spec.kind == "oracle":
        pred = truth.copy()
    elif spec.kind == "average":
        pred = np.tile(ds.subset(pool[:n_tr]).room_matrix().mean(axis=0), (len(val), 1))
    elif spec.kind == "ls":
        pred = _predict_all(est.train_ls(ds.subset(pool[:n_tr]), spec.mu), val_records)
    elif spec.kind == "gpca":
        model = est.train_global_pca(ds.subset(pool[:n_tr]), spec.ks, spec.kr, spec.ridge)
        pred = _predict_all(model, val_records)
    else:
        if features is None:
            features = est.dataset_features(ds, spec.feature)
        train_idx, thresholds = _stratified_training(pool, features, n_tr, FeatureKind.parse(spec.feature), spec.q)
        model = est.train_local_pca(
            ds.subset(train_idx), spec.feature, spec.q, spec.ks, spec.kr, thresholds=thresholds, ridge=spec.ridge
        )
        pred = _predict_all(model, val_records)
    return np.abs(truth - pred)


_WORKER = {}


def _init_worker(dataset, spec, n_tr, n_val, seed, features):
    _WORKER.update(dataset=dataset, spec=spec, n_tr=n_tr, n_val=n_val, seed=seed, features=features)


def _guarded_repeat(dataset, spec, n_tr, n_val, seed, repeat, features):
    try:
        return run_repeat(dataset, spec, n_tr, n_val, seed, repeat, features), None
    except (RoomCurveError, np.linalg.LinAlgError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _worker_repeat(repeat):
    w = _WORKER
    return _guarded_repeat(w["dataset"], w["spec"], w["n_tr"], w["n_val"], w["seed"], repeat, w["features"])


def cross_validate(dataset, spec, n_tr: int = 300, n_val: int = 100, repeats: int = 50, seed: int = 0, jobs: int = 1) -> ErrorSurface:
    """Repeated random-split cross-validation of one estimator.

    Each repeat draws a disjoint validation set and training split from a
    PRNG stream keyed by ``(seed, repeat)``. Local-PCA training takes about
    ``n_tr / 3`` records from each feature group of the training pool.
    Repeats whose training fails are skipped and counted in ``failures``.
    Results do not depend on ``jobs``.
    """
    ds = est._as_dataset(dataset)
    if isinstance(spec, str):
        spec = EstimatorSpec.parse(spec)
    if n_tr < 1 or n_val < 1 or repeats < 1:
        raise InvalidInput("n_tr, n_val and repeats must be positive")
    if n_tr + n_val > len(ds):
        raise InvalidInput(f"n_tr + n_val = {n_tr + n_val} exceeds dataset size {len(ds)}")
    features = est.dataset_features(ds, spec.feature) if spec.kind == "lpca" else None

    if jobs > 1 and repeats > 1:
        with ProcessPoolExecutor(
            max_workers=min(jobs, repeats),
            initializer=_init_worker,
            initargs=(ds, spec, n_tr, n_val, seed, features),
        ) as pool:
            outcomes = list(pool.map(_worker_repeat, range(repeats)))
    else:
        outcomes = [_guarded_repeat(ds, spec, n_tr, n_val, seed, r, features) for r in range(repeats)]

    curves, failures = [], 0
    for repeat, (curve, err) in enumerate(outcomes):
        if curve is None:
            failures += 1
            log.warning("repeat %d of %s failed: %s", repeat, spec.label, err)
        else:
            curves.append(curve)
    n_bins = ds.nfft // 2 + 1
    errors = np.array(curves) if curves else np.zeros((0, n_val, n_bins))
    meta = {
        "estimator": spec.label,
        "spec": asdict(spec),
        "N_tr": n_tr,
        "N_val": n_val,
        "repeats": repeats,
        "seed": seed,
        "failures": failures,
    }
    return ErrorSurface(errors, bin_frequencies(ds.nfft, ds.sample_rate), meta, failures)


def _pooled(surface) -> np.ndarray:
    samples = surface.samples if isinstance(surface, ErrorSurface) else np.asarray(surface, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.shape[0] == 0:
        raise InvalidInput("error surface is empty")
    return samples


def percentile_curve(surface, p: float) -> np.ndarray:
    """Nearest-rank ``p``-th percentile per bin over all pooled error curves."""
    if not 0.0 < p <= 100.0:
        raise InvalidInput(f"percentile must lie in (0, 100], got {p}")
    samples = _pooled(surface)
    n = samples.shape[0]
    rank = max(1, math.ceil(p / 100.0 * n))
    return np.sort(samples, axis=0)[rank - 1]


@dataclass
class Report:
    freqs: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    percentiles: dict

    def rows(self):
        for k, f in enumerate(self.freqs):
            yield (f, self.mean[k], self.std[k], *(self.percentiles[p][k] for p in (50, 95)))

    def to_csv(self) -> str:
        lines = [",".join(REPORT_HEADER)]
        lines += [",".join(f"{v:.6g}" for v in row) for row in self.rows()]
        return "\n".join(lines) + "\n"


def summarize(surface: ErrorSurface, percentiles=(50, 95)) -> Report:
    """Per-bin mean and population standard deviation, plus nearest-rank percentiles."""
    samples = _pooled(surface)
    pcts = {p: percentile_curve(samples, p) for p in sorted(set(percentiles) | {50, 95})}
    freqs = surface.freqs if isinstance(surface, ErrorSurface) else np.arange(samples.shape[1], dtype=float)
    return Report(np.asarray(freqs), samples.mean(axis=0), samples.std(axis=0), pcts)
