"""Pure numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_kernels.pyx``.
"""
import numpy as np
from scipy import ndimage


def row_functionals(a, orders):
    """Row-wise ``sum(a**q)`` over strictly positive entries, one column per order.

    An order equal to exactly 1.0 yields the Shannon sum ``-sum(a*log(a))``
    instead of the (trivial) first moment.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    orders = np.ascontiguousarray(orders, dtype=np.float64)
    out = np.zeros((a.shape[0], orders.shape[0]))
    pos = a > 0.0
    log_a = np.log(np.where(pos, a, 1.0))
    for k, q in enumerate(orders):
        if q == 1.0:
            out[:, k] = -np.sum(np.where(pos, a * log_a, 0.0), axis=1)
        else:
            out[:, k] = np.sum(np.where(pos, np.exp(q * log_a), 0.0), axis=1)
    return out


def convolve_rows(a, taps):
    """Linear convolution of every row with an odd-length centred kernel.

    Values beyond the row ends are treated as zero; output has the input shape.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    taps = np.ascontiguousarray(taps, dtype=np.float64)
    return ndimage.convolve1d(a, taps, axis=1, mode="constant", cval=0.0)


def bin_rows(a, positions):
    """Integrate piecewise-constant rows between fractional cell positions.

    Row ``a[i]`` holds cell masses; ``positions`` are increasing coordinates in
    units of cells, already clipped to ``[0, n]``. Returns the mass between
    consecutive positions, shape ``(rows, len(positions) - 1)``.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    n = a.shape[1]
    t = np.asarray(positions, dtype=np.float64)
    cum = np.zeros((a.shape[0], n + 1))
    np.cumsum(a, axis=1, out=cum[:, 1:])
    idx = np.minimum(np.floor(t).astype(np.intp), n - 1)
    frac = t - idx
    at_marks = cum[:, idx] + frac * a[:, idx]
    return np.diff(at_marks, axis=1)


def toeplitz_scale(rho, c):
    """Return ``rho[j, k] * c[j - k + n - 1]`` for a square complex matrix."""
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    n = rho.shape[0]
    idx = np.subtract.outer(np.arange(n), np.arange(n)) + (n - 1)
    return rho * np.asarray(c, dtype=np.complex128)[idx]
