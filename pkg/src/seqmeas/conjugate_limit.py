"""Pegg-Barnett conjugate pairs in ``d + 1`` dimensions and their large-``d`` limit.

Two orthonormal bases ``|n>`` and ``|m>`` with overlaps
``<n|m> = (d+1)^(-1/2) exp(-i (m + b0)(n + a0) delta)``, ``delta = 2 pi / (d+1)``,
define ``X = (N + a0) gamma`` and ``Y = (M + b0) delta / gamma``. Everything is
represented in the ``|n>`` frame, where ``X`` is diagonal and the columns of the
overlap matrix are the ``|m>`` vectors.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

# the physical-state conditions are tested on this fraction of each spectrum end
EDGE_FRACTION = 0.1
EDGE_MASS_TOL = 1e-4


@dataclass(frozen=True)
class PeggBarnettPair:
    d: int
    gamma: float
    a0: float = 0.0
    b0: float = 0.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be an integer >= 1, got {self.d}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        object.__setattr__(self, "d", int(self.d))

    @property
    def dim(self) -> int:
        return self.d + 1

    @property
    def delta(self) -> float:
        return 2.0 * math.pi / self.dim

    @cached_property
    def labels(self) -> np.ndarray:
        return np.arange(self.dim)

    @cached_property
    def overlaps(self) -> np.ndarray:
        """``U[n, m] = <n|m>``; column ``m`` is ``|m>`` in the ``|n>`` frame."""
        k = self.labels
        phase = np.outer(k + self.a0, k + self.b0) * self.delta
        return np.exp(-1j * phase) / math.sqrt(self.dim)

    @cached_property
    def x(self) -> np.ndarray:
        return (self.labels + self.a0) * self.gamma

    @cached_property
    def y(self) -> np.ndarray:
        return (self.labels + self.b0) * self.delta / self.gamma

    @property
    def dx(self) -> float:
        return self.gamma

    @property
    def dy(self) -> float:
        return self.delta / self.gamma

    def _in_n_frame(self, eigenvalues: np.ndarray) -> np.ndarray:
        U = self.overlaps
        return (U * eigenvalues) @ U.conj().T

    @cached_property
    def N(self) -> np.ndarray:
        return np.diag(self.labels.astype(np.complex128))

    @cached_property
    def M(self) -> np.ndarray:
        return self._in_n_frame(self.labels.astype(float))

    @cached_property
    def X(self) -> np.ndarray:
        return np.diag(self.x.astype(np.complex128))

    @cached_property
    def Y(self) -> np.ndarray:
        return self._in_n_frame(self.y)

    @cached_property
    def commutator(self) -> np.ndarray:
        """``[Y, X]``, using that ``X`` is diagonal: ``[Y, X]_ab = Y_ab (x_b - x_a)``."""
        return self.Y * (self.x[None, :] - self.x[:, None])

    def mub_deviation(self) -> float:
        return float(np.max(np.abs(np.abs(self.overlaps) - self.dim ** -0.5)))

    def unitarity_residual(self) -> float:
        U = self.overlaps
        return float(np.max(np.abs(U.conj().T @ U - np.eye(self.dim))))


def build_pair(d: int, gamma: float, a0: float = 0.0, b0: float = 0.0) -> PeggBarnettPair:
    """Construct a pair and verify the basis invariants."""
    pair = PeggBarnettPair(d, gamma, a0, b0)
    if pair.mub_deviation() > 1e-12:
        raise ArithmeticError(f"overlap moduli deviate by {pair.mub_deviation():.2e}")
    if pair.unitarity_residual() > 1e-10:
        raise ArithmeticError(f"basis change not unitary: {pair.unitarity_residual():.2e}")
    return pair


def check_shifts(pair: PeggBarnettPair, track_phase: bool = True) -> float:
    """Largest deviation in the two shift relations over all shifts ``0..d+1``.

    ``exp(-i (N + a0) j delta)|m> = |m + j>`` and
    ``exp(+i (M + b0) k delta)|n> = |n + k>``, labels taken mod ``d + 1``.
    For a non-integer offset, a label that wraps around picks up the constant
    phase ``exp(-2 pi i a0)`` (resp. ``exp(+2 pi i b0)``); with ``track_phase``
    that phase is included in the target vector, otherwise the bare cyclic
    label is used and only integer offsets pass.
    """
    D = pair.dim
    U = pair.overlaps
    labels = pair.labels
    dev = 0.0
    for j in range(D + 1):
        target = (labels + j) % D
        wraps = (labels + j) // D
        # first relation, in the |n> frame: columns are vectors |m>
        lhs = np.exp(-1j * (labels + pair.a0) * j * pair.delta)[:, None] * U
        rhs = U[:, target]
        if track_phase:
            rhs = rhs * np.exp(-2j * math.pi * pair.a0 * wraps)[None, :]
        dev = max(dev, float(np.max(np.linalg.norm(lhs - rhs, axis=0))))
        # second relation, in the |m> frame: row n of U.conj() is |n>
        V = U.conj()
        lhs = V * np.exp(1j * (labels + pair.b0) * j * pair.delta)[None, :]
        rhs = V[target, :]
        if track_phase:
            rhs = rhs * np.exp(2j * math.pi * pair.b0 * wraps)[:, None]
        dev = max(dev, float(np.max(np.linalg.norm(lhs - rhs, axis=1))))
    return dev


def edge_masses(pair: PeggBarnettPair, psi: np.ndarray):
    """Probability on the outer ``EDGE_FRACTION`` of the X and of the Y spectrum."""
    k = max(1, int(round(EDGE_FRACTION * pair.dim)))
    px = np.abs(psi) ** 2
    py = np.abs(pair.overlaps.conj().T @ psi) ** 2
    edge = lambda p: float(p[:k].sum() + p[-k:].sum())  # noqa: E731
    return edge(px), edge(py)


def commutator_diagnostics(pair: PeggBarnettPair, psi: np.ndarray):
    """``(||[Y,X] - delta [M,N]||_2, <psi|[Y,X]|psi>)`` for a normalised state in the ``|n>`` frame."""
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.shape != (pair.dim,):
        raise ValueError(f"state must have {pair.dim} components")
    if abs(np.vdot(psi, psi).real - 1.0) > 1e-10:
        raise ValueError("state is not normalised")
    mx, my = edge_masses(pair, psi)
    if max(mx, my) > EDGE_MASS_TOL:
        warnings.warn(
            f"state has mass {mx:.2e} (X) / {my:.2e} (Y) on the spectrum edges; "
            "finite-dimensional corrections are not negligible",
            stacklevel=2,
        )
    C = pair.commutator
    labels = pair.labels
    MN = pair.M * (labels[None, :] - labels[:, None])
    residual = float(np.linalg.norm(C - pair.delta * MN, 2))
    expectation = complex(np.vdot(psi, C @ psi))
    return residual, expectation


def gaussian_state(pair: PeggBarnettPair, sigma: float = 1.5, center: float = 0.0) -> np.ndarray:
    """Discrete Gaussian ``psi_n ~ exp(-(x_n - center)^2 / (4 sigma^2))`` in the ``|n>`` frame."""
    psi = np.exp(-((pair.x - center) ** 2) / (4.0 * sigma**2)).astype(np.complex128)
    return psi / np.linalg.norm(psi)


@dataclass(frozen=True)
class LimitSchedule:
    """Dimensions ``d`` with ``gamma = c (d+1)^(-theta)`` and centred offsets ``-d/2``."""

    ds: Sequence[int]
    theta: float = 0.5
    c: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie strictly between 0 and 1")
        if not self.c > 0:
            raise ValueError("c must be positive")
        ds = tuple(int(d) for d in self.ds)
        if not ds or min(ds) < 1:
            raise ValueError("need at least one d >= 1")
        if any(b <= a for a, b in zip(ds, ds[1:])):
            raise ValueError("d values must be increasing")
        object.__setattr__(self, "ds", ds)

    @classmethod
    def from_dims(cls, dims: Sequence[int], theta: float = 0.5, c: float = 1.0) -> "LimitSchedule":
        return cls([D - 1 for D in dims], theta, c)

    def gamma(self, d: int) -> float:
        return self.c * (d + 1) ** (-self.theta)

    def pair(self, d: int) -> PeggBarnettPair:
        return build_pair(d, self.gamma(d), -d / 2.0, -d / 2.0)


@dataclass(frozen=True)
class LimitRow:
    d: int
    gamma: float
    dx: float
    dy: float
    x_extent: float
    y_extent: float
    identity_residual: float
    shift_deviation: float
    expectation: complex

    @property
    def deviation(self) -> float:
        return abs(self.expectation - 1j)


def _limit_row(schedule: LimitSchedule, d: int, sigma: float) -> LimitRow:
    pair = schedule.pair(d)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        residual, expectation = commutator_diagnostics(pair, gaussian_state(pair, sigma))
    return LimitRow(d, pair.gamma, pair.dx, pair.dy, pair.dim * pair.gamma, 2.0 * math.pi / pair.gamma,
                    residual, check_shifts(pair), expectation)


def limit_study(schedule: LimitSchedule, sigma: float = 1.5, threads: Optional[int] = None):
    """Convergence table along the schedule for discrete Gaussians of fixed physical width.

    Rows come back in schedule order. Edge-mass warnings are suppressed here;
    the growing edge mass at small ``d`` is what the ``deviation`` column shows.
    """
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda d: _limit_row(schedule, d, sigma), schedule.ds))


def empirical_rates(rows: Sequence[LimitRow]) -> list:
    """Local exponents ``-d ln(deviation) / d ln(d+1)`` between consecutive rows."""
    out = []
    for a, b in zip(rows, rows[1:]):
        if a.deviation > 0 and b.deviation > 0:
            out.append(-math.log(b.deviation / a.deviation) / math.log((b.d + 1) / (a.d + 1)))
        else:
            out.append(math.nan)
    return out
