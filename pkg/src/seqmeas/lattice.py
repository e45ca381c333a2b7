"""Uniform grid on the line and the exact Fourier pairing to its conjugate grid.

Units are dimensionless with hbar = 1. A lattice of ``n_points`` cells of width
``dy`` covers ``[y_min, y_max)``; the conjugate grid has spacing
``dx = 2*pi / (n_points*dy)`` and is symmetric about zero, ``x_k = (k - n/2) dx``.

The transform pair samples the continuum transform

    psi~(x) = (2 pi)^(-1/2) * integral psi(y) exp(-i x y) dy

on the conjugate grid, so it stays correct for windows that are not centred
at the origin.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Optional, Union

import numpy as np
from scipy import special

from .exceptions import GridMismatchError, WindowError

Representation = Literal["position", "conjugate"]

# tail mass a factory may leave outside the window
WINDOW_TAIL_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Lattice:
    n_points: int
    y_min: float
    y_max: float

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError(f"n_points must be an integer >= 2, got {self.n_points}")
        if not self.y_max > self.y_min:
            raise ValueError("y_max must exceed y_min")

    @classmethod
    def centered(cls, n_points: int, half_width: float) -> "Lattice":
        return cls(n_points, -half_width, half_width)

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / self.n_points

    @property
    def dx(self) -> float:
        return 2.0 * np.pi / (self.n_points * self.dy)

    @property
    def x_min(self) -> float:
        return -(self.n_points // 2) * self.dx

    @cached_property
    def y(self) -> np.ndarray:
        return _frozen(self.y_min + self.dy * np.arange(self.n_points))

    @cached_property
    def x(self) -> np.ndarray:
        return _frozen(self.x_min + self.dx * np.arange(self.n_points))

    def grid(self, representation: Representation) -> np.ndarray:
        return self.y if representation == "position" else self.x

    def spacing(self, representation: Representation) -> float:
        return self.dy if representation == "position" else self.dx

    @cached_property
    def _pre_phase(self) -> np.ndarray:
        return np.exp(-1j * self.x_min * (self.y - self.y_min))

    @cached_property
    def _post_phase(self) -> np.ndarray:
        return self.dy / np.sqrt(2.0 * np.pi) * np.exp(-1j * self.x * self.y_min)

    def forward(self, amps: np.ndarray, axis: int = -1) -> np.ndarray:
        """Position samples -> conjugate samples along ``axis`` (batched)."""
        amps = np.moveaxis(np.asarray(amps, dtype=np.complex128), axis, -1)
        out = np.fft.fft(amps * self._pre_phase, axis=-1) * self._post_phase
        return np.moveaxis(out, -1, axis)

    def inverse(self, amps: np.ndarray, axis: int = -1) -> np.ndarray:
        """Conjugate samples -> position samples; exact inverse of :meth:`forward`."""
        amps = np.moveaxis(np.asarray(amps, dtype=np.complex128), axis, -1)
        out = np.fft.ifft(amps / self._post_phase, axis=-1) / self._pre_phase
        return np.moveaxis(out, -1, axis)


@dataclass(frozen=True)
class WaveFunction:
    """Pure state sampled on a lattice; ``amps`` carry units of spacing^(-1/2)."""

    lattice: Lattice
    amps: np.ndarray
    representation: Representation = "position"

    def __post_init__(self):
        amps = np.array(self.amps, dtype=np.complex128)
        if amps.shape != (self.lattice.n_points,):
            raise GridMismatchError(
                f"expected {self.lattice.n_points} amplitudes, got shape {amps.shape}"
            )
        object.__setattr__(self, "amps", _frozen(amps))

    @property
    def spacing(self) -> float:
        return self.lattice.spacing(self.representation)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2) * self.spacing))

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.lattice, self.amps / self.norm(), self.representation)


@dataclass(frozen=True)
class DensityMatrix:
    """Dense position-representation kernel ``rho(y_j, y_k)`` (units dy^-1).

    ``ensemble`` optionally records a decomposition ``rho = sum_r p_r |psi_r><psi_r|``
    (weights, rows of amplitudes) so pure-state fast paths can be used.
    """

    lattice: Lattice
    elems: np.ndarray
    ensemble_hint: Optional[tuple] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        elems = np.array(self.elems, dtype=np.complex128)
        n = self.lattice.n_points
        if elems.shape != (n, n):
            raise GridMismatchError(f"expected ({n}, {n}) kernel, got {elems.shape}")
        scale = max(1.0, float(np.max(np.abs(np.diagonal(elems)))))
        if float(np.max(np.abs(elems - elems.conj().T))) > 1e-10 * scale:
            raise ValueError("density matrix is not Hermitian")
        tr = float(np.real(np.trace(elems))) * self.lattice.dy
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"density matrix trace is {tr}, expected 1")
        object.__setattr__(self, "elems", _frozen(elems))

    @classmethod
    def from_pure(cls, psi: WaveFunction) -> "DensityMatrix":
        amps = psi.amps
        return cls(psi.lattice, np.outer(amps, amps.conj()),
                   ensemble_hint=(np.ones(1), amps[None, :].copy()))

    @classmethod
    def from_ensemble(cls, weights, states) -> "DensityMatrix":
        weights = np.asarray(weights, dtype=float)
        if np.any(weights < 0):
            raise ValueError("ensemble weights must be nonnegative")
        weights = weights / weights.sum()
        lattice = states[0].lattice
        rows = np.stack([s.amps for s in states])
        elems = np.einsum("r,rj,rk->jk", weights, rows, rows.conj())
        return cls(lattice, elems, ensemble_hint=(weights, rows))

    def trace(self) -> float:
        return float(np.real(np.trace(self.elems))) * self.lattice.dy

    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue of the operator (kernel times dy)."""
        return float(np.linalg.eigvalsh(self.elems * self.lattice.dy)[0])

    def is_positive(self, tol: float = 1e-8) -> bool:
        return self.min_eigenvalue() >= -tol

    def ensemble(self, cutoff: float = 1e-14):
        """Return ``(weights, amps)`` with ``rho = sum_r weights[r] |amps[r]><amps[r]|``."""
        if self.ensemble_hint is not None:
            return self.ensemble_hint
        dy = self.lattice.dy
        vals, vecs = np.linalg.eigh(self.elems * dy)
        keep = vals > cutoff
        weights = vals[keep] / vals[keep].sum()
        amps = (vecs[:, keep] / np.sqrt(dy)).T
        return weights, amps


State = Union[WaveFunction, DensityMatrix]


@dataclass(frozen=True)
class ProbabilityDensity:
    """Nonnegative samples of a density on a uniform grid (midpoint convention)."""

    grid: np.ndarray
    vals: np.ndarray
    representation: Representation = "position"

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        vals = np.array(self.vals, dtype=float)
        if grid.shape != vals.shape or grid.ndim != 1 or grid.size < 2:
            raise GridMismatchError("grid and values must be matching 1-D arrays")
        if np.any(vals < 0):
            raise ValueError("density values must be nonnegative")
        object.__setattr__(self, "grid", _frozen(grid))
        object.__setattr__(self, "vals", _frozen(vals))

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def mass(self) -> float:
        return float(np.sum(self.vals) * self.spacing)

    def mean(self) -> float:
        return float(np.sum(self.grid * self.vals) * self.spacing / self.mass())

    def variance(self) -> float:
        m = self.mean()
        return float(np.sum((self.grid - m) ** 2 * self.vals) * self.spacing / self.mass())

    def same_grid(self, other: "ProbabilityDensity") -> bool:
        return (
            self.grid.shape == other.grid.shape
            and np.allclose(self.grid, other.grid, rtol=0.0, atol=1e-12 * max(1.0, abs(self.spacing)))
        )


def _gaussian_tail(center: float, std: float, lo: float, hi: float) -> float:
    z_lo = (lo - center) / (np.sqrt(2.0) * std)
    z_hi = (hi - center) / (np.sqrt(2.0) * std)
    return 0.5 * (special.erfc(-z_lo) + special.erfc(z_hi))


def _gaussian_amps(lattice: Lattice, y0: float, sigma: float, p0: float) -> np.ndarray:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    y = lattice.y
    return np.exp(-((y - y0) ** 2) / (4.0 * sigma**2) + 1j * p0 * y)


def check_gaussian_window(lattice: Lattice, y0: float, sigma: float, p0: float) -> None:
    """Raise :class:`WindowError` if either marginal of the Gaussian spills out."""
    lo, hi = lattice.y_min, lattice.y_max - lattice.dy
    tail_y = _gaussian_tail(y0, sigma, lo, hi)
    x = lattice.x
    tail_x = _gaussian_tail(p0, 1.0 / (2.0 * sigma), x[0], x[-1])
    if tail_y > WINDOW_TAIL_TOL:
        raise WindowError(f"Gaussian (y0={y0}, sigma={sigma}) has {tail_y:.2e} mass outside the window")
    if tail_x > WINDOW_TAIL_TOL:
        raise WindowError(
            f"Gaussian (p0={p0}, sigma={sigma}) has {tail_x:.2e} conjugate mass outside the window"
        )


def make_gaussian(lattice: Lattice, y0: float = 0.0, sigma: float = 1.0, p0: float = 0.0) -> WaveFunction:
    """Minimum-uncertainty packet with position std ``sigma`` and mean momentum ``p0``."""
    check_gaussian_window(lattice, y0, sigma, p0)
    return WaveFunction(lattice, _gaussian_amps(lattice, y0, sigma, p0)).normalized()


def make_superposition(lattice: Lattice, components) -> WaveFunction:
    """Coherent sum of Gaussian packets.

    ``components`` is an iterable of ``(amplitude, y0, sigma, p0)``; each packet
    is normalised before weighting, the sum is normalised at the end.
    """
    total = np.zeros(lattice.n_points, dtype=complex)
    for amp, y0, sigma, p0 in components:
        check_gaussian_window(lattice, y0, sigma, p0)
        g = WaveFunction(lattice, _gaussian_amps(lattice, y0, sigma, p0)).normalized()
        total += complex(amp) * g.amps
    return WaveFunction(lattice, total).normalized()


def make_mixture(lattice: Lattice, components) -> DensityMatrix:
    """Incoherent mixture; ``components`` yields ``(weight, y0, sigma, p0)``."""
    weights, states = [], []
    for weight, y0, sigma, p0 in components:
        weights.append(weight)
        states.append(make_gaussian(lattice, y0, sigma, p0))
    return DensityMatrix.from_ensemble(weights, states)


def to_conjugate(psi: WaveFunction) -> WaveFunction:
    if psi.representation != "position":
        raise ValueError("state is already in the conjugate representation")
    return WaveFunction(psi.lattice, psi.lattice.forward(psi.amps), "conjugate")


def from_conjugate(psi: WaveFunction) -> WaveFunction:
    if psi.representation != "conjugate":
        raise ValueError("state is not in the conjugate representation")
    return WaveFunction(psi.lattice, psi.lattice.inverse(psi.amps), "position")


def conjugate_diagonal(lattice: Lattice, elems: np.ndarray) -> np.ndarray:
    """Diagonal ``<x_k|rho|x_k>`` of a position kernel, via the two-sided transform."""
    half = lattice.forward(elems, axis=0)
    # W_k = sum_j' half[k, j'] conj(F[k, j']) = conj(F applied to conj(half) rows)[k, k]
    full = lattice.forward(half.conj(), axis=1)
    return np.real(np.diagonal(full)).copy()


def density_of(state: State, representation: Representation = "position") -> ProbabilityDensity:
    """Probability density of a state in the position or conjugate representation."""
    lattice = state.lattice
    grid = lattice.grid(representation)
    if isinstance(state, WaveFunction):
        if state.representation == representation:
            amps = state.amps
        elif representation == "conjugate":
            amps = lattice.forward(state.amps)
        else:
            amps = lattice.inverse(state.amps)
        return ProbabilityDensity(grid, np.abs(amps) ** 2, representation)
    if representation == "position":
        vals = np.real(np.diagonal(state.elems)).copy()
    else:
        vals = conjugate_diagonal(lattice, state.elems)
    np.maximum(vals, 0.0, out=vals)
    return ProbabilityDensity(grid, vals, representation)
