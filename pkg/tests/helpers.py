"""Builders for synthetic datasets with prescribed spectra."""

import numpy as np

from roomcurve.roomsim import DatasetRecord
from roomcurve.spectra import ImpulseResponse, LogPowerSpectrum


def make_records(S, R, fs=16000, ir=None):
    """Records whose echo and room spectra are the rows of ``S`` and ``R``."""
    S, R = np.atleast_2d(S), np.atleast_2d(R)
    nfft = 2 * (S.shape[1] - 1)
    ir = ImpulseResponse([1.0] if ir is None else ir, fs)
    return [
        DatasetRecord(ir, LogPowerSpectrum(s, fs, nfft), LogPowerSpectrum(r, fs, nfft), {"record_id": j})
        for j, (s, r) in enumerate(zip(S, R))
    ]


def orthonormal(rng, n, k):
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return q
