"""JSON file formats for datasets and trained models, plus equalizer export.

Floats are written with ``repr`` precision, so every value round-trips
exactly. Every file carries a ``version``; newer versions are refused.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InvalidInput, VersionError
from .estimators import GlobalPcaModel, LocalPcaModel, LsModel, PcaBasis
from .features import FeatureKind, GroupThresholds
from .roomsim import DatasetRecord
from .spectra import ImpulseResponse, LogPowerSpectrum

FORMAT_VERSION = 1
MANIFEST = "manifest.json"


def _dump(obj, path: Path):
    path.write_text(json.dumps(obj, sort_keys=True) + "\n")


def _load(path) -> dict:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: not valid JSON ({exc})") from None
    check_version(data, path)
    return data


def check_version(data: dict, source="input"):
    version = data.get("version")
    if not isinstance(version, int):
        raise InvalidInput(f"{source}: missing integer 'version' field")
    if version > FORMAT_VERSION:
        raise VersionError(f"{source}: format version {version} is newer than supported {FORMAT_VERSION}")


def _floats(arr) -> list:
    return [float(v) for v in np.ravel(arr)]


# --------------------------------------------------------------------- dataset


def record_filename(index: int) -> str:
    return f"rec_{index:05d}.json"


def record_to_dict(rec: DatasetRecord) -> dict:
    return {
        "version": FORMAT_VERSION,
        "sample_rate": rec.sample_rate,
        "nfft": rec.nfft,
        "echo_ir": _floats(rec.echo_ir.samples),
        "echo_spectrum": _floats(rec.echo_spectrum.bins),
        "room_avg_spectrum": _floats(rec.room_avg_spectrum.bins),
        "meta": rec.meta,
    }


def record_from_dict(data: dict, source="record") -> DatasetRecord:
    check_version(data, source)
    try:
        fs, nfft = data["sample_rate"], data["nfft"]
        return DatasetRecord(
            ImpulseResponse(data["echo_ir"], fs),
            LogPowerSpectrum(data["echo_spectrum"], fs, nfft),
            LogPowerSpectrum(data["room_avg_spectrum"], fs, nfft),
            dict(data.get("meta", {})),
        )
    except KeyError as exc:
        raise InvalidInput(f"{source}: missing field {exc}") from None


def load_record(path) -> DatasetRecord:
    return record_from_dict(_load(path), str(path))


def save_dataset(records, out_dir, *, seed=None, config=None) -> Path:
    """Write ``manifest.json`` plus one ``rec_<idx>.json`` per record."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = list(records)
    names = []
    for i, rec in enumerate(records):
        name = record_filename(i)
        _dump(record_to_dict(rec), out / name)
        names.append(name)
    manifest = {
        "version": FORMAT_VERSION,
        "seed": seed,
        "config": config,
        "record_count": len(records),
        "records": names,
    }
    if records:
        manifest["nfft"] = records[0].nfft
        manifest["sample_rate"] = records[0].sample_rate
    _dump(manifest, out / MANIFEST)
    return out


def load_manifest(dataset_dir) -> dict:
    return _load(Path(dataset_dir) / MANIFEST)


def load_dataset(dataset_dir) -> list:
    root = Path(dataset_dir)
    manifest = load_manifest(root)
    names = manifest.get("records") or [record_filename(i) for i in range(manifest["record_count"])]
    if len(names) != manifest["record_count"]:
        raise InvalidInput(f"{root}: manifest lists {len(names)} files for {manifest['record_count']} records")
    return [load_record(root / n) for n in names]


# ----------------------------------------------------------------------- models


def _matrix_to_dict(m) -> dict:
    m = np.asarray(m, dtype=float)
    return {"rows": m.shape[0], "cols": m.shape[1], "order": "column-major", "data": _floats(m.T)}


def _matrix_from_dict(d) -> np.ndarray:
    rows, cols = int(d["rows"]), int(d["cols"])
    data = np.asarray(d["data"], dtype=float)
    if data.size != rows * cols:
        raise InvalidInput(f"matrix declares {rows}x{cols} but holds {data.size} values")
    return np.ascontiguousarray(data.reshape(cols, rows).T)


def _basis_to_dict(b: PcaBasis) -> dict:
    return {"mean": _floats(b.mean), "components": _matrix_to_dict(b.components)}


def _basis_from_dict(d) -> PcaBasis:
    return PcaBasis(np.asarray(d["mean"], dtype=float), _matrix_from_dict(d["components"]))


def _gpca_body(m: GlobalPcaModel) -> dict:
    return {"basis_s": _basis_to_dict(m.basis_s), "basis_r": _basis_to_dict(m.basis_r), "map": _matrix_to_dict(m.map)}


def _gpca_from_body(d, nfft, fs) -> GlobalPcaModel:
    return GlobalPcaModel(_basis_from_dict(d["basis_s"]), _basis_from_dict(d["basis_r"]), _matrix_from_dict(d["map"]), nfft, fs)


def model_to_dict(model) -> dict:
    out = {"version": FORMAT_VERSION, "kind": model.kind, "nfft": model.nfft, "sample_rate": model.sample_rate}
    if isinstance(model, LsModel):
        out.update(mu=model.mu, gain=_floats(model.gain))
    elif isinstance(model, GlobalPcaModel):
        out.update(_gpca_body(model))
    elif isinstance(model, LocalPcaModel):
        out.update(
            feature_kind=model.feature_kind.value,
            thresholds={"low": model.thresholds.low, "high": model.thresholds.high},
            groups=[_gpca_body(g) for g in model.groups],
        )
    else:
        raise InvalidInput(f"cannot serialize {type(model).__name__}")
    return out


def model_from_dict(data: dict, source="model"):
    check_version(data, source)
    try:
        kind, nfft, fs = data["kind"], int(data["nfft"]), int(data["sample_rate"])
        if kind == "ls":
            return LsModel(np.asarray(data["gain"], dtype=float), float(data["mu"]), nfft, fs)
        if kind == "gpca":
            return _gpca_from_body(data, nfft, fs)
        if kind == "lpca":
            feature = FeatureKind.parse(data["feature_kind"])
            thr = GroupThresholds(feature, float(data["thresholds"]["low"]), float(data["thresholds"]["high"]))
            groups = tuple(_gpca_from_body(g, nfft, fs) for g in data["groups"])
            return LocalPcaModel(feature, thr, groups, nfft, fs)
    except KeyError as exc:
        raise InvalidInput(f"{source}: missing field {exc}") from None
    raise InvalidInput(f"{source}: unknown model kind {kind!r}")


def save_model(model, path) -> Path:
    path = Path(path)
    _dump(model_to_dict(model), path)
    return path


def load_model(path):
    return model_from_dict(_load(path), str(path))


# ------------------------------------------------------------------- equalizer


def save_eq(eq_filter, json_path, taps_path=None, extra=None) -> Path:
    """``eq.json`` plus an optional one-coefficient-per-line taps file."""
    json_path = Path(json_path)
    body = {
        "version": FORMAT_VERSION,
        "sample_rate": eq_filter.sample_rate,
        "nfft": eq_filter.nfft,
        "clamp": list(eq_filter.clamp),
        "taps": _floats(eq_filter.taps),
        "magnitude_db": _floats(eq_filter.magnitude_db),
    }
    if extra:
        body.update(extra)
    _dump(body, json_path)
    if taps_path is not None:
        Path(taps_path).write_text("".join(f"{t:.15g}\n" for t in eq_filter.taps))
    return json_path


def load_eq(path) -> dict:
    return _load(path)


def read_ir_text(path, sample_rate: int) -> ImpulseResponse:
    """Raw impulse response, one sample per line (blank lines and ``#`` comments ignored)."""
    values = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise InvalidInput(f"{path}:{lineno}: not a number: {line!r}") from None
    return ImpulseResponse(values, sample_rate)
