"""Backend selection for the hot kernels.

The compiled extension ``seqmeas._kernels`` is used when it was built;
otherwise the numpy versions in ``seqmeas._fallback`` are used. Setting the
environment variable ``SEQMEAS_PURE_PYTHON=1`` forces the fallback.
"""
import os

import numpy as np
from scipy import signal

from . import _fallback

if os.environ.get("SEQMEAS_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
        BACKEND = "python"

# above this many taps a direct loop loses to FFT convolution
DIRECT_TAPS_MAX = 97

row_functionals = _impl.row_functionals
bin_rows = _impl.bin_rows
toeplitz_scale = _impl.toeplitz_scale


def convolve_rows(a, taps):
    """Row-wise linear ``same``-size convolution with a centred odd-length kernel."""
    taps = np.asarray(taps, dtype=np.float64)
    if taps.shape[0] % 2 != 1:
        raise ValueError("kernel length must be odd")
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    if taps.shape[0] <= DIRECT_TAPS_MAX:
        return _impl.convolve_rows(a, taps)
    out = signal.oaconvolve(a, taps[None, :], mode="same", axes=1)
    # FFT round-off leaves tiny negative values where the true result is ~0
    np.maximum(out, 0.0, out=out)
    return out


def backends():
    """Return the available backend modules keyed by name (for tests and benchmarks)."""
    found = {"python": _fallback}
    try:
        from . import _kernels

        found["cython"] = _kernels
    except ImportError:
        pass
    return found
