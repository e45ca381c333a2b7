"""Finite-resolution measurement apparatus.

A detector with acceptance function ``f`` has Kraus operators
``K(zeta) = integral f(zeta - y) |y><y| dy``. Its outcome density is the input
position density convolved with ``|f|^2``; the non-selective channel multiplies
the position kernel by the autocorrelation ``c(y - y') = integral f(t - u) f*(t) dt``
with ``u = y - y'``.

Profiles are discretised on a lattice spacing ``h`` as odd-length tap arrays.
Smoothing taps are nonnegative, sum to one and reproduce the continuum second
moment exactly (see :meth:`AcceptanceProfile.kernel_taps`), so the variance of a
smoothed lattice density grows by exactly ``sigma_f(f)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy import linalg

from . import kernels
from .exceptions import CoverageError, GridMismatchError, NegligibleWeightError, ResolutionError
from .lattice import DensityMatrix, Lattice, ProbabilityDensity, WaveFunction, density_of

log = logging.getLogger(__name__)

# outcomes with P < CONDITION_FLOOR * max(P) are not conditioned on
CONDITION_FLOOR = 1e-12
# Gaussian taps extend to this many standard deviations of |f|^2
GAUSS_TAIL_SIGMAS = 10.0


@dataclass(frozen=True)
class AcceptanceProfile:
    """Detector resolution function.

    ``shape`` is ``"gaussian"`` (``width`` = standard deviation of ``|f|^2``),
    ``"tophat"`` (``|f|^2`` uniform on ``[-width, width]``) or ``"sampled"``
    (complex amplitudes on a centred grid of spacing ``sample_spacing``).
    ``scale`` multiplies the amplitude; only ``scale == 1`` profiles are normalised.
    """

    shape: str
    width: float
    scale: float = 1.0
    samples: Optional[np.ndarray] = field(default=None, repr=False)
    sample_spacing: Optional[float] = None

    def __post_init__(self):
        if self.shape not in ("gaussian", "tophat", "sampled"):
            raise ValueError(f"unknown profile shape {self.shape!r}")
        if self.shape == "sampled":
            s = np.array(self.samples, dtype=np.complex128)
            if s.ndim != 1 or s.size % 2 != 1:
                raise ValueError("sampled profiles need an odd number of centred samples")
            if not np.allclose(s, s[::-1], rtol=0.0, atol=1e-10):
                raise ValueError("acceptance functions must be even")
            s.flags.writeable = False
            object.__setattr__(self, "samples", s)
        elif not self.width > 0:
            raise ValueError("profile width must be positive")

    # -- analytic description ---------------------------------------------

    def amplitude(self, u) -> np.ndarray:
        """Amplitude ``f(u)`` for the closed-form shapes."""
        u = np.asarray(u, dtype=float)
        if self.shape == "gaussian":
            s = self.width
            return self.scale * (2.0 * np.pi * s * s) ** -0.25 * np.exp(-(u * u) / (4.0 * s * s))
        if self.shape == "tophat":
            a = self.width
            return np.where(np.abs(u) <= a, self.scale / np.sqrt(2.0 * a), 0.0)
        idx = u / self.sample_spacing
        k = np.rint(idx).astype(int)
        if not np.allclose(idx, k, atol=1e-9):
            raise GridMismatchError("sampled profiles can only be evaluated on their own grid")
        half = self.samples.size // 2
        inside = np.abs(k) <= half
        out = np.zeros(u.shape, dtype=np.complex128)
        out[inside] = self.samples[k[inside] + half]
        return out

    def norm_squared(self) -> float:
        """``integral |f|^2``; equals 1 for a normalised profile."""
        if self.shape == "sampled":
            return float(np.sum(np.abs(self.samples) ** 2) * self.sample_spacing)
        return self.scale**2

    def is_normalized(self, tol: float = 1e-8) -> bool:
        return abs(self.norm_squared() - 1.0) <= tol

    def _require_normalized(self):
        if not self.is_normalized():
            raise ValueError(f"acceptance profile is not normalised (integral |f|^2 = {self.norm_squared()})")

    def second_moment(self) -> float:
        if self.shape == "gaussian":
            return self.scale**2 * self.width**2
        if self.shape == "tophat":
            return self.scale**2 * self.width**2 / 3.0
        h = self.sample_spacing
        half = self.samples.size // 2
        z = h * np.arange(-half, half + 1)
        return float(np.sum(z * z * np.abs(self.samples) ** 2) * h)

    def autocorrelation(self, u) -> np.ndarray:
        """``c(u) = integral f(t - u) f*(t) dt``."""
        u = np.asarray(u, dtype=float)
        if self.shape == "gaussian":
            return self.scale**2 * np.exp(-(u * u) / (8.0 * self.width**2))
        if self.shape == "tophat":
            return self.scale**2 * np.clip(1.0 - np.abs(u) / (2.0 * self.width), 0.0, None)
        f = self.samples
        h = self.sample_spacing
        L = f.size
        lags = np.arange(L)
        pos = np.array([np.vdot(f[m:], f[: L - m]) for m in lags]) * h
        idx = u / h
        k = np.rint(idx).astype(int)
        if not np.allclose(idx, k, atol=1e-9):
            raise GridMismatchError("sampled profile autocorrelation needs lattice offsets")
        out = np.zeros(u.shape, dtype=np.complex128)
        inside = np.abs(k) < L
        kk = k[inside]
        vals = pos[np.abs(kk)]
        out[inside] = np.where(kk >= 0, vals, np.conj(vals))
        return out

    # -- lattice discretisation -------------------------------------------

    def resolves(self, h: float) -> bool:
        """Whether the amplitude is smooth on spacing ``h`` (needed for conditioning)."""
        if self.shape == "gaussian":
            return self.width >= h
        if self.shape == "tophat":
            return self.width >= 2.0 * h
        return math.isclose(self.sample_spacing, h, rel_tol=1e-9)

    def kernel_taps(self, h: float) -> np.ndarray:
        """Smoothing weights ``k_m`` for offsets ``m*h``; see :func:`_kernel_taps`."""
        self._require_normalized()
        if self.shape == "sampled":
            if not math.isclose(self.sample_spacing, h, rel_tol=1e-9):
                raise GridMismatchError(
                    f"profile sampled at spacing {self.sample_spacing}, lattice spacing is {h}"
                )
            return np.abs(self.samples) ** 2 * h
        return _kernel_taps(self.shape, float(self.width), float(h)).copy()

    def amplitude_taps(self, h: float) -> np.ndarray:
        """Kraus amplitudes ``f(m*h)`` consistent with :meth:`kernel_taps`."""
        if self.shape == "sampled":
            self.kernel_taps(h)
            return self.samples.copy()
        return np.sqrt(self.kernel_taps(h) / h).astype(np.complex128)


def gaussian_profile(width: float) -> AcceptanceProfile:
    return AcceptanceProfile("gaussian", width)


def tophat_profile(half_width: float) -> AcceptanceProfile:
    return AcceptanceProfile("tophat", half_width)


def sampled_profile(samples, spacing: float) -> AcceptanceProfile:
    samples = np.asarray(samples, dtype=np.complex128)
    half = samples.size // 2
    z = spacing * np.arange(-half, half + 1)
    rms = float(np.sqrt(np.sum(z * z * np.abs(samples) ** 2) * spacing)) if samples.size > 1 else 0.0
    return AcceptanceProfile("sampled", rms, samples=samples, sample_spacing=spacing)


def _three_taps(var_units: float) -> np.ndarray:
    r = var_units / 2.0
    return np.array([r, 1.0 - 2.0 * r, r])


@lru_cache(maxsize=256)
def _kernel_taps(shape: str, width: float, h: float) -> np.ndarray:
    """Nonnegative, unit-sum taps whose discrete second moment equals the continuum one.

    Gaussian: point samples of ``|f|^2`` (moment exact up to ~exp(-2 pi^2 s^2/h^2))
    when ``width >= h``, otherwise a three-tap kernel with matched variance.
    Top-hat: unit interior weights with a reduced weight on the outermost node
    pair, chosen so that mass and variance both match.
    """
    if shape == "gaussian":
        if width < h:
            taps = _three_taps((width / h) ** 2)
        else:
            M = int(math.ceil(GAUSS_TAIL_SIGMAS * width / h))
            m = np.arange(-M, M + 1)
            taps = np.exp(-((m * h) ** 2) / (2.0 * width * width))
            taps /= taps.sum()
    else:
        A = width / h
        target = A * A / 3.0  # variance in units of h^2
        if target <= 0.5 and A < 1.0:
            taps = _three_taps(target)
        else:
            for M in range(max(1, int(math.floor(A))), int(math.ceil(A)) + 2):
                S = (M - 1) * M * (2 * M - 1) / 6.0
                e = (target * (2 * M - 1) - 2.0 * S) / (2.0 * (M * M - target))
                if 0.0 <= e <= 1.0:
                    break
            else:  # pragma: no cover - every A admits some M
                raise RuntimeError(f"no moment-matched top-hat discretisation for width {width}, h {h}")
            taps = np.ones(2 * M + 1)
            taps[0] = taps[-1] = e
            taps /= taps.sum()
    taps.flags.writeable = False
    return taps


# -- operations ----------------------------------------------------------------


def sigma_f(f: AcceptanceProfile) -> float:
    """Variance added to the measured variable: ``integral zeta^2 |f(zeta)|^2``."""
    return f.second_moment()


def smooth_rows(rows: np.ndarray, f: AcceptanceProfile, h: float) -> np.ndarray:
    """Convolve every row of lattice density samples with ``|f|^2``."""
    return kernels.convolve_rows(rows, f.kernel_taps(h))


def smooth_density(w: ProbabilityDensity, f: AcceptanceProfile, tol: float = 1e-8) -> ProbabilityDensity:
    """``P(zeta) = integral |f(zeta - y)|^2 w(y) dy`` on the grid of ``w``."""
    out = smooth_rows(w.vals[None, :], f, w.spacing)[0]
    lost = (np.sum(w.vals) - np.sum(out)) * w.spacing
    if lost > tol:
        raise CoverageError(f"smoothing pushed {lost:.3e} of the mass outside the window")
    return ProbabilityDensity(w.grid, out, w.representation)


def smoothing_slacks(w: ProbabilityDensity, f: AcceptanceProfile, order: float) -> float:
    """Slack of the smoothing monotonicity for one order.

    order > 1: ``||w||^order - ||P||^order`` (integrated powers)
    order < 1: ``||P||^order - ||w||^order``
    Nonnegative when the inequality holds.
    """
    from .entropy import power_integral

    p = smooth_density(w, f)
    if order > 1:
        return power_integral(w, order) - power_integral(p, order)
    if order < 1:
        return power_integral(p, order) - power_integral(w, order)
    raise ValueError("order 1 is an identity, not an inequality")


def check_resolution_identity(f: AcceptanceProfile, lattice: Lattice, margin: Optional[float] = None) -> float:
    """Max deviation of ``integral |f(zeta - y)|^2 dzeta`` from 1 over interior lattice points.

    The integral is a direct quadrature over outcome points ``zeta`` on the
    lattice, using the closed-form amplitude. Points closer than ``margin``
    (default 6 profile widths) to the window edges are skipped.
    """
    if margin is None:
        margin = 6.0 * f.width
    y = lattice.y
    interior = (y - lattice.y_min >= margin) & (lattice.y_max - lattice.dy - y >= margin)
    if not np.any(interior):
        raise ValueError("no interior points; widen the window or shrink the margin")
    zeta = lattice.y
    dev = 0.0
    for yj in y[interior]:
        total = np.sum(np.abs(f.amplitude(zeta - yj)) ** 2) * lattice.dy
        dev = max(dev, abs(total - 1.0))
    return float(dev)


def kraus_rows(f: AcceptanceProfile, lattice: Lattice, stride: int = 1) -> np.ndarray:
    """Matrix ``K[i, j] = f(zeta_i - y_j)`` for outcomes on every ``stride``-th lattice node."""
    h = lattice.dy
    taps = f.amplitude_taps(h)
    n = lattice.n_points
    M = taps.size // 2
    col = np.zeros(n, dtype=np.complex128)
    row = np.zeros(n, dtype=np.complex128)
    k = min(M, n - 1)
    col[: k + 1] = taps[M: M + k + 1]          # i - j = 0..k
    row[: k + 1] = taps[M - np.arange(k + 1)]  # i - j = 0..-k
    full = linalg.toeplitz(col, row)
    return full[::stride]


def kraus_conditional(psi: WaveFunction, f: AcceptanceProfile, zeta: float):
    """Post-measurement state for outcome ``zeta`` and its density ``P(zeta)``.

    Returns ``(state, weight)`` where ``state`` has amplitudes proportional to
    ``f(zeta - y) psi(y)``. Raises :class:`NegligibleWeightError` below the
    conditioning floor.
    """
    lattice = psi.lattice
    h = lattice.dy
    f._require_normalized()
    offset = (zeta - lattice.y_min) / h
    node = int(round(offset))
    if abs(offset - node) < 1e-9:
        taps = f.amplitude_taps(h)
        M = taps.size // 2
        m = node - np.arange(lattice.n_points)
        amp = np.where(np.abs(m) <= M, taps[np.clip(m + M, 0, taps.size - 1)], 0.0)
    else:
        amp = f.amplitude(zeta - lattice.y)
    phi = amp * psi.amps
    weight = float(np.sum(np.abs(phi) ** 2) * h)
    p_max = float(smooth_density(density_of(psi), f).vals.max())
    if weight < CONDITION_FLOOR * p_max or weight <= 0.0:
        raise NegligibleWeightError(f"P({zeta}) = {weight:.3e} is below the conditioning floor")
    return WaveFunction(lattice, phi / np.sqrt(weight)), weight


def nonselective_channel(rho: Union[DensityMatrix, WaveFunction], f: AcceptanceProfile) -> DensityMatrix:
    """``Phi(rho) = integral K(zeta) rho K(zeta)^dagger dzeta`` via the autocorrelation kernel."""
    if isinstance(rho, WaveFunction):
        rho = DensityMatrix.from_pure(rho)
    f._require_normalized()
    lattice = rho.lattice
    n = lattice.n_points
    u = (np.arange(2 * n - 1) - (n - 1)) * lattice.dy
    c = f.autocorrelation(u)
    return DensityMatrix(lattice, kernels.toeplitz_scale(rho.elems, c))


@dataclass(frozen=True)
class MeasurementRecord:
    """Outcome of a selective measurement on a lattice.

    ``zeta`` / ``density`` hold ``P(zeta)`` on the outcome grid. Retained outcomes
    are indexed by ``retained``; ``cond_amps[r, k]`` is the (normalised) conditional
    amplitude of ensemble member ``r`` for retained outcome ``k``, mixed with
    weights ``ens_weights[r, k]``. ``weights`` are ``P dzeta`` renormalised over the
    retained outcomes.
    """

    lattice: Lattice
    zeta: np.ndarray
    density: ProbabilityDensity
    retained: np.ndarray
    weights: np.ndarray
    cond_amps: np.ndarray = field(repr=False)
    ens_weights: np.ndarray = field(repr=False)
    discarded_mass: float

    def conditional_state(self, k: int) -> Union[WaveFunction, DensityMatrix]:
        amps = self.cond_amps[:, k, :]
        if amps.shape[0] == 1:
            return WaveFunction(self.lattice, amps[0])
        lam = self.ens_weights[:, k]
        states = [WaveFunction(self.lattice, a) for a in amps]
        return DensityMatrix.from_ensemble(lam, states)

    def conditional_position_densities(self) -> np.ndarray:
        return np.einsum("rk,rkj->kj", self.ens_weights, np.abs(self.cond_amps) ** 2)

    def conditional_conjugate_densities(self) -> np.ndarray:
        mom = self.lattice.forward(self.cond_amps, axis=-1)
        return np.einsum("rk,rkj->kj", self.ens_weights, np.abs(mom) ** 2)


def measure(state: Union[WaveFunction, DensityMatrix], f: AcceptanceProfile, zeta_stride: int = 1,
            coverage_tol: float = 1e-6) -> MeasurementRecord:
    """Selective finite-resolution measurement on the outcome grid ``y[::zeta_stride]``."""
    lattice = state.lattice
    h = lattice.dy
    f._require_normalized()
    if not f.resolves(h):
        raise ResolutionError(f"profile width {f.width} is not resolved by lattice spacing {h}")
    if isinstance(state, WaveFunction):
        lam, rows = np.ones(1), state.amps[None, :]
    else:
        lam, rows = state.ensemble()
    K = kraus_rows(f, lattice, zeta_stride)
    zeta = lattice.y[::zeta_stride]
    dzeta = h * zeta_stride
    # (r, zeta, y) unnormalised conditional amplitudes
    amps = K[None, :, :] * rows[:, None, :]
    member_p = np.sum(np.abs(amps) ** 2, axis=-1) * h
    p = np.einsum("r,rk->k", lam, member_p)
    keep = p >= CONDITION_FLOOR * p.max()
    total = float(np.sum(p) * dzeta)
    kept = float(np.sum(p[keep]) * dzeta)
    discarded = total - kept
    if discarded > coverage_tol or abs(total - 1.0) > coverage_tol:
        raise CoverageError(
            f"outcome grid keeps {kept:.8f} of the probability (total {total:.8f}); widen the window"
        )
    idx = np.nonzero(keep)[0]
    weights = p[idx] * dzeta
    weights = weights / weights.sum()
    if discarded > 0:
        log.debug("discarded %.3e outcome mass below the conditioning floor", discarded)
    safe_p = p[idx]
    mp = member_p[:, idx]
    with np.errstate(divide="ignore", invalid="ignore"):
        norm = np.where(mp > 0, 1.0 / np.sqrt(np.where(mp > 0, mp, 1.0)), 0.0)
    cond = amps[:, idx, :] * norm[:, :, None]
    ens = lam[:, None] * mp / safe_p[None, :]
    density = ProbabilityDensity(zeta, p, "position")
    return MeasurementRecord(lattice, zeta, density, idx, weights, cond, ens, discarded)
