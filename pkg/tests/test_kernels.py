import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import ndimage

from seqmeas import kernels

BACKENDS = kernels.backends()


def test_compiled_backend_available():
    # the build is optional, but the default install ships it
    assert "cython" in BACKENDS
    assert kernels.BACKEND == "cython"


def test_pure_python_override():
    env = dict(os.environ, SEQMEAS_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from seqmeas import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.fixture(params=sorted(BACKENDS))
def impl(request):
    return BACKENDS[request.param]


@given(st.integers(0, 1000), st.integers(1, 6), st.integers(3, 80))
def test_row_functionals(seed, n_rows, n_cols):
    rng = np.random.default_rng(seed)
    a = rng.random((n_rows, n_cols))
    a[a < 0.2] = 0.0
    orders = np.array([1.0, 0.5, 2.0, 3.7])
    ref = np.empty((n_rows, 4))
    for k, q in enumerate(orders):
        for i in range(n_rows):
            nz = a[i][a[i] > 0]
            ref[i, k] = -np.sum(nz * np.log(nz)) if q == 1.0 else np.sum(nz**q)
    for impl in BACKENDS.values():
        np.testing.assert_allclose(impl.row_functionals(a, orders), ref, rtol=1e-12, atol=1e-14)


@given(st.integers(0, 1000), st.integers(0, 12), st.integers(10, 60))
def test_convolve_rows(seed, half, n):
    rng = np.random.default_rng(seed)
    a = rng.random((3, n))
    taps = rng.random(2 * half + 1)
    ref = ndimage.convolve1d(a, taps, axis=1, mode="constant")
    for impl in BACKENDS.values():
        np.testing.assert_allclose(impl.convolve_rows(a, taps), ref, atol=1e-13)


def test_convolve_dispatch_long_kernel():
    rng = np.random.default_rng(1)
    a = rng.random((2, 400))
    taps = np.exp(-np.linspace(-3, 3, 2 * kernels.DIRECT_TAPS_MAX + 1) ** 2)
    ref = ndimage.convolve1d(a, taps, axis=1, mode="constant")
    np.testing.assert_allclose(kernels.convolve_rows(a, taps), ref, atol=1e-11)
    with pytest.raises(ValueError):
        kernels.convolve_rows(a, np.ones(4))


def test_bin_rows(impl):
    a = np.arange(12.0).reshape(2, 6)
    pos = np.array([0.0, 1.5, 4.0, 6.0])
    out = impl.bin_rows(a, pos)
    np.testing.assert_allclose(out[0], [0 + 0.5, 0.5 + 2 + 3, 4 + 5])
    np.testing.assert_allclose(out.sum(axis=1), a.sum(axis=1))


def test_toeplitz_scale(impl):
    rng = np.random.default_rng(2)
    n = 7
    rho = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    c = rng.normal(size=2 * n - 1) + 1j * rng.normal(size=2 * n - 1)
    j, k = np.indices((n, n))
    np.testing.assert_allclose(impl.toeplitz_scale(rho, c), rho * c[j - k + n - 1], atol=1e-15)
