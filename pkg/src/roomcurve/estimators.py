"""Room-curve estimators: per-bin regularized LS, global PCA and local PCA.

All estimators operate on log-energy spectra (dB vectors of length
``nfft//2 + 1``).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import EmptyGroup, InsufficientDecay, InvalidInput, SingularSystem
from .features import FeatureKind, GroupThresholds, fit_normal_thresholds, record_feature
from .spectra import LogPowerSpectrum

log = logging.getLogger(__name__)

DEFAULT_MU = 1e-3
DEFAULT_KS_GLOBAL = 240
DEFAULT_KS_LOCAL = 80
DEFAULT_KR = 32
RIDGE_SCALE = 1e-8


class Dataset:
    """Training records sharing ``nfft`` and ``sample_rate``."""

    def __init__(self, records: Sequence):
        records = list(records)
        if not records:
            raise InvalidInput("dataset must contain at least one record")
        nfft, fs = records[0].nfft, records[0].sample_rate
        for rec in records:
            if rec.nfft != nfft or rec.sample_rate != fs:
                raise InvalidInput("all records must share nfft and sample_rate")
        self.records = records
        self.nfft = nfft
        self.sample_rate = fs

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, idx):
        return self.records[idx]

    @property
    def J(self) -> int:
        return len(self.records)

    def subset(self, indices) -> "Dataset":
        return Dataset([self.records[i] for i in indices])

    def echo_matrix(self) -> np.ndarray:
        return np.array([r.echo_spectrum.bins for r in self.records])

    def room_matrix(self) -> np.ndarray:
        return np.array([r.room_avg_spectrum.bins for r in self.records])


def _as_dataset(data) -> Dataset:
    return data if isinstance(data, Dataset) else Dataset(data)


def _bins_of(s, n_bins: int) -> np.ndarray:
    x = s.bins if isinstance(s, LogPowerSpectrum) else np.asarray(s, dtype=float)
    if x.shape != (n_bins,):
        raise InvalidInput(f"expected {n_bins} bins, got shape {x.shape}")
    return x


def _spectrum_like(bins, nfft, sample_rate) -> LogPowerSpectrum:
    return LogPowerSpectrum(bins, sample_rate, nfft)


# ---------------------------------------------------------------- least squares


@dataclass(frozen=True, eq=False)
class LsModel:
    gain: np.ndarray
    mu: float
    nfft: int
    sample_rate: int

    kind = "ls"


def solve_ls_gain(S: np.ndarray, R: np.ndarray, mu: float) -> np.ndarray:
    """Per-bin ridge solution ``sum_j s*r / (sum_j s**2 + mu)``.

    With stacked diagonal design matrices the normal equations are diagonal,
    so each bin decouples.
    """
    num = np.sum(S * R, axis=0)
    den = np.sum(S * S, axis=0) + mu
    if np.any(den == 0):
        raise SingularSystem("mu = 0 and some bin has zero echo energy across the dataset")
    return num / den


def train_ls(dataset, mu: float = DEFAULT_MU) -> LsModel:
    """Fit the per-bin multiplicative gain on log-energy coefficients."""
    ds = _as_dataset(dataset)
    if mu < 0:
        raise InvalidInput(f"mu must be non-negative, got {mu}")
    gain = solve_ls_gain(ds.echo_matrix(), ds.room_matrix(), float(mu))
    return LsModel(gain, float(mu), ds.nfft, ds.sample_rate)


def predict_ls(model: LsModel, s) -> LogPowerSpectrum:
    """Element-wise product of the echo spectrum and the trained gain."""
    x = _bins_of(s, model.gain.size)
    return _spectrum_like(x * model.gain, model.nfft, model.sample_rate)


# ------------------------------------------------------------------------- PCA


@dataclass(frozen=True, eq=False)
class PcaBasis:
    """Ensemble mean plus ``K`` orthonormal principal directions (columns)."""

    mean: np.ndarray
    components: np.ndarray

    @property
    def K(self) -> int:
        return self.components.shape[1]

    @property
    def dim(self) -> int:
        return self.mean.size


def pca(data, K: int) -> PcaBasis:
    """Top-``K`` principal components of the rows of ``data``.

    Components are right singular vectors of the centred data, ordered by
    descending singular value, each signed so its largest-magnitude entry is
    positive. If the centred data has rank below ``K`` the basis is truncated
    to that rank with a warning.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise InvalidInput("pca expects a 2-D matrix (records x bins)")
    J, n = X.shape
    if int(K) != K or not 1 <= K <= min(J - 1, n):
        raise InvalidInput(f"K={K} outside [1, min(J-1, bins)] = [1, {min(J - 1, n)}]")
    mean = X.mean(axis=0)
    _, sv, vt = np.linalg.svd(X - mean, full_matrices=False)
    tol = sv[0] * max(J, n) * np.finfo(float).eps if sv.size else 0.0
    rank = int(np.count_nonzero(sv > tol))
    if rank < K:
        warnings.warn(f"data rank {rank} below requested K={K}; basis truncated", RuntimeWarning, stacklevel=2)
        K = rank
    comps = vt[:K].T.copy()
    if K:
        pivot = np.argmax(np.abs(comps), axis=0)
        signs = np.sign(comps[pivot, np.arange(K)])
        comps *= signs
    return PcaBasis(mean, comps)


def project(basis: PcaBasis, x) -> np.ndarray:
    """Principal-component gains ``U^T (x - mean)``."""
    v = _bins_of(x, basis.dim)
    return basis.components.T @ (v - basis.mean)


def reconstruct(basis: PcaBasis, g) -> np.ndarray:
    """``mean + U g``."""
    g = np.asarray(g, dtype=float)
    if g.shape != (basis.K,):
        raise InvalidInput(f"expected {basis.K} gains, got shape {g.shape}")
    return basis.mean + basis.components @ g


def _project_rows(basis: PcaBasis, X: np.ndarray) -> np.ndarray:
    """Gains of every row of X as a K x J matrix."""
    return basis.components.T @ (X - basis.mean).T


def train_linear_map(Gs, Gr, ridge: float | None = None) -> np.ndarray:
    """Least-squares map ``A`` (K_r x K_s) with ``Gr ~ A Gs``.

    ``A = (Gr Gs^T)(Gs Gs^T + ridge I)^-1``. ``ridge=None`` uses
    ``1e-8 * trace(Gs Gs^T) / K_s``.
    """
    Gs = np.asarray(Gs, dtype=float)
    Gr = np.asarray(Gr, dtype=float)
    if Gs.ndim != 2 or Gr.ndim != 2 or Gs.shape[1] != Gr.shape[1]:
        raise InvalidInput(f"gain matrices must be K x J with equal J, got {Gs.shape} and {Gr.shape}")
    ks = Gs.shape[0]
    if ks == 0:
        return np.zeros((Gr.shape[0], 0))
    gram = Gs @ Gs.T
    if ridge is None:
        ridge = RIDGE_SCALE * np.trace(gram) / ks
    if ridge < 0:
        raise InvalidInput("ridge must be non-negative")
    if ridge == 0 and np.linalg.matrix_rank(gram) < ks:
        raise SingularSystem("echo gain Gram matrix is singular; pass ridge > 0")
    lhs = gram + ridge * np.eye(ks)
    try:
        return np.ascontiguousarray(np.linalg.solve(lhs, Gs @ Gr.T).T)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc


def linear_map_cost(A, Gs, Gr) -> float:
    """``sum_j ||g_r,j - A g_s,j||^2``."""
    resid = np.asarray(Gr) - np.asarray(A) @ np.asarray(Gs)
    return float(np.sum(resid * resid))


@dataclass(frozen=True, eq=False)
class GlobalPcaModel:
    basis_s: PcaBasis
    basis_r: PcaBasis
    map: np.ndarray
    nfft: int
    sample_rate: int

    kind = "gpca"


def train_global_pca(dataset, K_s: int = DEFAULT_KS_GLOBAL, K_r: int = DEFAULT_KR, ridge=None) -> GlobalPcaModel:
    """PCA both spectra sets, then regress room gains on echo gains."""
    ds = _as_dataset(dataset)
    if K_s < K_r:
        raise InvalidInput(f"K_s={K_s} < K_r={K_r} leaves the gain map under-determined")
    S, R = ds.echo_matrix(), ds.room_matrix()
    basis_s = pca(S, K_s)
    basis_r = pca(R, K_r)
    A = train_linear_map(_project_rows(basis_s, S), _project_rows(basis_r, R), ridge)
    return GlobalPcaModel(basis_s, basis_r, A, ds.nfft, ds.sample_rate)


def predict_global_pca(model: GlobalPcaModel, s) -> LogPowerSpectrum:
    g_s = project(model.basis_s, s)
    r_hat = reconstruct(model.basis_r, model.map @ g_s)
    return _spectrum_like(r_hat, model.nfft, model.sample_rate)


# ------------------------------------------------------------------- local PCA


@dataclass(frozen=True, eq=False)
class LocalPcaModel:
    feature_kind: FeatureKind
    thresholds: GroupThresholds
    groups: tuple
    nfft: int
    sample_rate: int

    kind = "lpca"

    def __post_init__(self):
        if len(self.groups) != 3:
            raise InvalidInput("a local PCA model has exactly three groups")


class LocalPrediction(NamedTuple):
    spectrum: LogPowerSpectrum
    group: int
    fallback: bool


def partition(features, thresholds: GroupThresholds) -> list:
    """Indices of records in each of the three groups."""
    groups = [[], [], []]
    for i, v in enumerate(features):
        groups[thresholds.group_of(v)].append(i)
    return groups


def dataset_features(dataset, kind) -> np.ndarray:
    """Feature per record; RT30 failures become NaN."""
    out = []
    for rec in _as_dataset(dataset):
        try:
            out.append(record_feature(rec, kind))
        except InsufficientDecay:
            out.append(np.nan)
    return np.array(out)


def _train_group(sub: Dataset, index: int, K_s: int, K_r: int, ridge) -> GlobalPcaModel:
    limit = sub.J - 1
    ks, kr = K_s, K_r
    if ks > limit:
        ks = max(limit, 1)
        kr = min(kr, ks)
        warnings.warn(
            f"local group {index} has {sub.J} records; K_s reduced to {ks}, K_r to {kr}",
            RuntimeWarning,
            stacklevel=3,
        )
    if limit < 1:
        raise EmptyGroup(index, f"local group {index} has {sub.J} record(s); at least 2 are needed")
    return train_global_pca(sub, ks, kr, ridge)


def train_local_pca(
    dataset,
    feature_kind=FeatureKind.RT30,
    q: float = 0.22,
    K_s: int = DEFAULT_KS_LOCAL,
    K_r: int = DEFAULT_KR,
    *,
    thresholds: GroupThresholds | None = None,
    ridge=None,
) -> LocalPcaModel:
    """Split by a feature into three groups and fit a global-PCA model per group.

    Thresholds are fitted on the dataset's own features unless given.
    Records whose RT30 cannot be measured are placed in the middle group.
    """
    ds = _as_dataset(dataset)
    kind = FeatureKind.parse(feature_kind)
    if K_s < K_r:
        raise InvalidInput(f"K_s={K_s} < K_r={K_r} leaves the gain map under-determined")
    values = dataset_features(ds, kind)
    if thresholds is None:
        thresholds = fit_normal_thresholds(values[np.isfinite(values)], q, kind)
    elif thresholds.feature_kind is not kind:
        raise InvalidInput("thresholds were fitted for a different feature")
    filled = np.where(np.isfinite(values), values, 0.5 * (thresholds.low + thresholds.high))
    members = partition(filled, thresholds)
    for idx, m in enumerate(members):
        if not m:
            raise EmptyGroup(idx)
    groups = tuple(_train_group(ds.subset(m), idx, K_s, K_r, ridge) for idx, m in enumerate(members))
    return LocalPcaModel(kind, thresholds, groups, ds.nfft, ds.sample_rate)


def select_group(model: LocalPcaModel, record) -> tuple:
    """``(group index, fallback flag)`` for a runtime record."""
    try:
        value = record_feature(record, model.feature_kind)
    except InsufficientDecay:
        log.warning("RT30 not measurable; using the middle local model")
        return 1, True
    return model.thresholds.group_of(value), False


def predict_local_pca(model: LocalPcaModel, record) -> LocalPrediction:
    """Choose the local model from the record's feature and predict with it."""
    group, fallback = select_group(model, record)
    spectrum = predict_global_pca(model.groups[group], record.echo_spectrum)
    return LocalPrediction(spectrum, group, fallback)


def predict(model, record) -> LogPowerSpectrum:
    """Dispatch on model kind; ``record`` needs ``echo_spectrum`` (and ``echo_ir`` for RT30)."""
    if isinstance(model, LsModel):
        return predict_ls(model, record.echo_spectrum)
    if isinstance(model, GlobalPcaModel):
        return predict_global_pca(model, record.echo_spectrum)
    if isinstance(model, LocalPcaModel):
        return predict_local_pca(model, record).spectrum
    raise InvalidInput(f"unknown model type {type(model).__name__}")
