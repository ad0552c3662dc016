"""Agreement between the compiled and numpy image-source kernels."""

import importlib
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roomcurve import _backend, _pykernels

ckernels = pytest.importorskip("roomcurve._ckernels", reason="compiled extension not built")


def _args(src, mic, dims, beta, order, pre_delay=0):
    f = lambda v: np.ascontiguousarray(v, dtype=float)  # noqa: E731
    return f(src), f(mic), f(dims), f(beta), order, 16000.0, 343.0, pre_delay


@settings(max_examples=60, deadline=None)
@given(
    dims=st.tuples(*[st.floats(1.5, 8.0)] * 3),
    fr=st.tuples(*[st.floats(0.05, 0.95)] * 6),
    beta=st.tuples(*[st.floats(0.0, 0.99)] * 6),
    order=st.integers(0, 7),
    pre_delay=st.integers(0, 10),
)
def test_backends_agree(dims, fr, beta, order, pre_delay):
    dims = np.array(dims)
    src = np.array(fr[:3]) * dims
    mic = np.array(fr[3:]) * dims
    if np.linalg.norm(src - mic) < 1e-3:
        return
    args = _args(src, mic, dims, beta, order, pre_delay)
    py = _pykernels.image_source_rir(*args)
    cy = np.asarray(ckernels.image_source_rir(*args))
    assert py.shape == cy.shape
    np.testing.assert_allclose(cy, py, rtol=0, atol=1e-12 * max(1.0, np.abs(py).max()))


def test_image_count_grows_with_order():
    counts = [len(_pykernels._image_table(k)) for k in range(6)]
    # number of lattice images with total reflection order <= k
    assert counts == [1, 7, 25, 63, 129, 231]


def test_default_backend_is_compiled():
    assert _backend.BACKEND == "cython"


def test_env_var_forces_python_fallback():
    code = "import roomcurve; print(roomcurve.BACKEND)"
    env = dict(os.environ, ROOMCURVE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_backend_module_reload_is_stable():
    mod = importlib.reload(_backend)
    assert mod.image_source_rir is not None
