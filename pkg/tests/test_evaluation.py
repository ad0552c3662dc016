import numpy as np
import pytest
from helpers import make_records

from roomcurve.errors import InvalidInput
from roomcurve.evaluation import (
    BAND_HZ,
    REPORT_HEADER,
    ErrorSurface,
    EstimatorSpec,
    band_mask,
    cross_validate,
    error_spectrum,
    percentile_curve,
    split_indices,
    summarize,
)
from roomcurve.spectra import LogPowerSpectrum


def spec(bins):
    return LogPowerSpectrum(bins, 16000, 2 * (len(bins) - 1))


def test_error_spectrum_examples(rng):
    r = rng.normal(size=9)
    np.testing.assert_array_equal(error_spectrum(spec(r), spec(r)), 0.0)
    np.testing.assert_allclose(error_spectrum(spec(r), spec(r + 3)), 3.0, atol=1e-12)
    low = r.copy()
    low[4] -= 5
    e = error_spectrum(r, low)
    assert e[4] == pytest.approx(5.0) and np.count_nonzero(e) == 1
    with pytest.raises(InvalidInput):
        error_spectrum(r, r[:5])


def _linear_dataset(n=60, bins=17, seed=0):
    """Room curves genuinely driven by the echo curves, plus noise."""
    rng = np.random.default_rng(seed)
    S = rng.normal(5.0, 2.0, size=(n, bins))
    R = 1.5 * S + rng.normal(0.0, 0.5, size=(n, bins))
    return make_records(S, R)


def test_oracle_is_exact():
    surf = cross_validate(_linear_dataset(), "oracle", n_tr=5, n_val=1, repeats=1)
    assert surf.errors.shape == (1, 1, 17)
    assert np.all(surf.errors == 0.0)


def test_same_seed_same_surface():
    ds = _linear_dataset()
    a = cross_validate(ds, "gpca:10:4", n_tr=30, n_val=10, repeats=3, seed=4)
    b = cross_validate(ds, "gpca:10:4", n_tr=30, n_val=10, repeats=3, seed=4)
    np.testing.assert_array_equal(a.errors, b.errors)
    c = cross_validate(ds, "gpca:10:4", n_tr=30, n_val=10, repeats=3, seed=5)
    assert not np.array_equal(a.errors, c.errors)


def test_jobs_do_not_change_results():
    ds = _linear_dataset()
    a = cross_validate(ds, "ls", n_tr=30, n_val=10, repeats=4, seed=1, jobs=1)
    b = cross_validate(ds, "ls", n_tr=30, n_val=10, repeats=4, seed=1, jobs=3)
    np.testing.assert_array_equal(a.errors, b.errors)


def test_ls_beats_average_with_real_correlation():
    ds = _linear_dataset()
    ls = cross_validate(ds, "ls", n_tr=40, n_val=20, repeats=5)
    avg = cross_validate(ds, "average", n_tr=40, n_val=20, repeats=5)
    assert ls.errors.mean() < avg.errors.mean()


def test_errors_nonnegative_and_meta():
    surf = cross_validate(_linear_dataset(), "average", n_tr=20, n_val=10, repeats=2, seed=3)
    assert np.all(surf.errors >= 0)
    assert surf.meta["N_tr"] == 20 and surf.meta["N_val"] == 10
    assert surf.meta["repeats"] == 2 and surf.meta["seed"] == 3
    assert surf.meta["estimator"] == "average"
    assert len(surf) == 20


def test_splits_disjoint():
    for repeat in range(5):
        val, pool = split_indices(50, 30, 10, 9, repeat)
        assert len(val) == 10 and len(pool) == 40
        assert not set(val) & set(pool[:30])


def test_dataset_size_checked():
    with pytest.raises(InvalidInput):
        cross_validate(_linear_dataset(n=20), "ls", n_tr=15, n_val=10, repeats=1)
    with pytest.raises(InvalidInput):
        cross_validate(_linear_dataset(n=20), "ls", n_tr=5, n_val=5, repeats=0)


def test_failed_repeats_are_counted():
    # K_s larger than the training split: every repeat fails to train
    surf = cross_validate(_linear_dataset(), "gpca:40:4", n_tr=10, n_val=5, repeats=3)
    assert surf.failures == 3 and len(surf) == 0
    with pytest.raises(InvalidInput):
        percentile_curve(surf, 95)


def test_local_pca_protocol_runs(small_records, quiet):
    surf = cross_validate(small_records, "lpca:rt30:6:3", n_tr=27, n_val=10, repeats=2)
    assert surf.failures == 0 and surf.errors.shape == (2, 10, 1025)


def test_percentile_constant():
    s = np.full((7, 4), 2.5)
    for p in (1, 50, 95, 100):
        np.testing.assert_array_equal(percentile_curve(s, p), 2.5)


def test_percentile_max_and_nearest_rank(rng):
    s = rng.random((13, 6))
    np.testing.assert_array_equal(percentile_curve(s, 100), s.max(axis=0))
    col = np.array([[3.0], [1.0], [5.0], [2.0], [4.0]])
    assert percentile_curve(col, 95)[0] == 5.0
    assert percentile_curve(col, 40)[0] == 2.0


def test_percentile_monotone(rng):
    s = rng.random((50, 8))
    curves = [percentile_curve(s, p) for p in (5, 25, 50, 75, 95, 100)]
    assert all(np.all(a <= b) for a, b in zip(curves, curves[1:]))


def test_percentile_bounds():
    with pytest.raises(InvalidInput):
        percentile_curve(np.ones((3, 2)), 0)
    with pytest.raises(InvalidInput):
        percentile_curve(np.ones((3, 2)), 101)


def test_summary_stats():
    one = summarize(np.array([[1.0, 2.0]]))
    np.testing.assert_array_equal(one.std, 0.0)
    two = summarize(np.array([[1.0, 2.0], [3.0, 6.0]]))
    np.testing.assert_allclose(two.mean, [2.0, 4.0])


def test_report_csv_golden():
    errors = np.array([[[0.5, 1.0, 2.0]], [[1.5, 3.0, 2.0]]])
    surf = ErrorSurface(errors, np.array([0.0, 8000.0 / 3, 16000.0 / 3]))
    text = summarize(surf).to_csv()
    assert text == (
        "bin_hz,mean_db,std_db,p50_db,p95_db\n"
        "0,1,0.5,0.5,1.5\n"
        "2666.67,2,1,1,3\n"
        "5333.33,2,0,2,2\n"
    )
    assert text.splitlines()[0] == ",".join(REPORT_HEADER)


def test_band_mask():
    f = np.array([50.0, 100.0, 3000.0, 7000.0, 7500.0])
    np.testing.assert_array_equal(band_mask(f), [False, True, True, True, False])
    assert BAND_HZ == (100.0, 7000.0)


def test_estimator_spec_parse():
    assert EstimatorSpec.parse("gpca:240:32").label == "gpca_240_32"
    lp = EstimatorSpec.parse("lpca:rt30:80:32")
    assert (lp.kind, lp.feature, lp.ks, lp.kr) == ("lpca", "rt30", 80, 32)
    assert EstimatorSpec.parse("ls:0.01").mu == 0.01
    assert EstimatorSpec("gpca").ks == 240 and EstimatorSpec("lpca").ks == 80
    for bad in ("svm", "gpca:x", "average:3"):
        with pytest.raises(InvalidInput):
            EstimatorSpec.parse(bad)
