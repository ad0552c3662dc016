import json

import numpy as np
import pytest

from roomcurve import storage
from roomcurve.equalizer import design_eq_filter
from roomcurve.errors import InvalidInput, VersionError
from roomcurve.estimators import predict, train_global_pca, train_local_pca, train_ls


@pytest.fixture
def models(small_records, quiet):
    return {
        "ls": train_ls(small_records),
        "gpca": train_global_pca(small_records, 20, 8),
        "lpca": train_local_pca(small_records, "rt30", 0.22, 8, 4),
    }


@pytest.mark.parametrize("kind", ["ls", "gpca", "lpca"])
def test_model_round_trip_bit_identical(models, small_records, tmp_path, kind, quiet):
    path = storage.save_model(models[kind], tmp_path / "model.json")
    loaded = storage.load_model(path)
    assert loaded.kind == kind
    for rec in small_records:
        np.testing.assert_array_equal(predict(loaded, rec).bins, predict(models[kind], rec).bins)


def test_model_file_layout(models, tmp_path):
    body = json.loads(storage.save_model(models["gpca"], tmp_path / "m.json").read_text())
    assert body["version"] == storage.FORMAT_VERSION and body["kind"] == "gpca"
    comp = body["basis_s"]["components"]
    assert comp["order"] == "column-major"
    assert (comp["rows"], comp["cols"]) == (1025, 20)
    # first column comes first
    U = models["gpca"].basis_s.components
    assert comp["data"][:1025] == U[:, 0].tolist()


def test_newer_version_refused(models, tmp_path):
    path = storage.save_model(models["ls"], tmp_path / "m.json")
    body = json.loads(path.read_text())
    body["version"] = storage.FORMAT_VERSION + 1
    path.write_text(json.dumps(body))
    with pytest.raises(VersionError):
        storage.load_model(path)


def test_missing_fields(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"kind": "ls"}))
    with pytest.raises(InvalidInput, match="version"):
        storage.load_model(p)
    p.write_text(json.dumps({"version": 1, "kind": "ls", "nfft": 16, "sample_rate": 16000}))
    with pytest.raises(InvalidInput, match="gain"):
        storage.load_model(p)
    p.write_text(json.dumps({"version": 1, "kind": "svm", "nfft": 16, "sample_rate": 16000}))
    with pytest.raises(InvalidInput, match="svm"):
        storage.load_model(p)
    p.write_text("{not json")
    with pytest.raises(InvalidInput):
        storage.load_model(p)


def test_dataset_round_trip(small_records, tmp_path):
    recs = small_records[:3]
    storage.save_dataset(recs, tmp_path / "ds", seed=11, config={"rooms": 3})
    manifest = storage.load_manifest(tmp_path / "ds")
    assert manifest["record_count"] == 3 and manifest["seed"] == 11 and manifest["version"] == 1
    loaded = storage.load_dataset(tmp_path / "ds")
    for a, b in zip(recs, loaded):
        np.testing.assert_array_equal(a.echo_ir.samples, b.echo_ir.samples)
        np.testing.assert_array_equal(a.echo_spectrum.bins, b.echo_spectrum.bins)
        np.testing.assert_array_equal(a.room_avg_spectrum.bins, b.room_avg_spectrum.bins)
        assert a.meta == b.meta


def test_dataset_bytes_deterministic(small_records, tmp_path):
    storage.save_dataset(small_records[:2], tmp_path / "a", seed=1)
    storage.save_dataset(small_records[:2], tmp_path / "b", seed=1)
    for name in ("manifest.json", "rec_00000.json", "rec_00001.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_eq_export(tmp_path):
    f = design_eq_filter(np.linspace(-3, 3, 1025), 64)
    storage.save_eq(f, tmp_path / "eq.json", tmp_path / "taps.txt")
    body = storage.load_eq(tmp_path / "eq.json")
    assert body["taps"] == f.taps.tolist() and body["clamp"] == [-12.0, 12.0]
    lines = (tmp_path / "taps.txt").read_text().splitlines()
    assert len(lines) == 64
    np.testing.assert_allclose([float(x) for x in lines], f.taps, rtol=1e-14)


def test_read_ir_text(tmp_path):
    p = tmp_path / "ir.txt"
    p.write_text("# measured\n1.0\n\n-0.5  # second\n0.25\n")
    ir = storage.read_ir_text(p, 48000)
    np.testing.assert_array_equal(ir.samples, [1.0, -0.5, 0.25])
    p.write_text("1.0\nabc\n")
    with pytest.raises(InvalidInput, match=":2:"):
        storage.read_ir_text(p, 48000)
