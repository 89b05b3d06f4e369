import os
import subprocess
import sys

import numpy as np
import pytest

from decomploss import kernels
from decomploss._kernels_py import moving_average_3d as py_ma

needs_ext = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernels not built")


@needs_ext
@pytest.mark.parametrize("kernel", [1, 3, 25, 49, 101])
def test_backends_bitwise_equal(rng, kernel):
    x = rng.normal(size=(5, 60, 4)) * 100
    a = kernels.moving_average_3d(x, kernel, backend="python")
    b = kernels.moving_average_3d(x, kernel, backend="cython")
    assert np.array_equal(a, b)


@needs_ext
def test_backends_agree_on_short_and_empty_windows(rng):
    # kernels wider than the series leave no unclamped interior
    for n, t, c, k in [(0, 5, 2, 3), (3, 1, 1, 25), (2, 4, 3, 49), (1, 7, 5, 7), (2, 13, 1, 9)]:
        x = rng.normal(size=(n, t, c))
        assert np.array_equal(kernels.moving_average_3d(x, k, backend="python"),
                              kernels.moving_average_3d(x, k, backend="cython"))


def test_python_backend_reference(rng):
    x = rng.normal(size=(2, 9, 1))
    out = py_ma(x, 3)
    padded = np.concatenate([x[:, :1], x, x[:, -1:]], axis=1)
    expect = (padded[:, :-2] + padded[:, 1:-1] + padded[:, 2:]) / 3
    np.testing.assert_allclose(out, expect, rtol=1e-15)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.moving_average_3d(np.zeros((1, 3, 1)), 3, backend="fortran")


def test_env_forces_fallback():
    env = dict(os.environ, DECOMPLOSS_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import decomploss.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
