"""Rényi and Tsallis entropies, norm-like functionals and binning.

Discrete quantities act on probability vectors. Continuous quantities act on
:class:`~seqmeas.lattice.ProbabilityDensity` samples, read as a piecewise-constant
density on cells of width ``spacing`` centred on the grid points, so every
integral is a midpoint Riemann sum. Binning integrates the same
piecewise-constant function exactly, which makes the discretisation
inequalities ``hardy_slacks`` hold exactly on the lattice rather than only up
to quadrature error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .exceptions import CoverageError
from .lattice import ProbabilityDensity

# |order - 1| below this is treated as the Shannon case
SHANNON_BAND = 1e-9


def _check_order(order: float, name: str = "alpha") -> float:
    order = float(order)
    if not order > 0:
        raise ValueError(f"{name} must be positive, got {order}")
    return order


def _is_shannon(order: float) -> bool:
    return abs(order - 1.0) < SHANNON_BAND


@dataclass(frozen=True)
class DiscreteDistribution:
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probabilities must be a non-empty 1-D array")
        if np.any(p < 0) or np.any(p > 1 + 1e-12):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(p.sum() - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {p.sum()!r}, expected 1")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __len__(self):
        return self.probs.size


@dataclass(frozen=True)
class BinSpec:
    """Bins between strictly increasing marks ``l_0 < l_1 < ... < l_B``."""

    marks: np.ndarray

    def __post_init__(self):
        m = np.array(self.marks, dtype=float)
        if m.ndim != 1 or m.size < 2:
            raise ValueError("need at least two marks")
        if np.any(np.diff(m) <= 0):
            raise ValueError("marks must be strictly increasing")
        m.flags.writeable = False
        object.__setattr__(self, "marks", m)

    @classmethod
    def uniform(cls, lo: float, hi: float, width: float) -> "BinSpec":
        """Equal bins of ``width`` starting at ``lo`` and covering at least ``[lo, hi]``."""
        count = max(1, int(math.ceil((hi - lo) / width - 1e-9)))
        return cls(lo + width * np.arange(count + 1))

    @classmethod
    def covering(cls, grid: np.ndarray, width: float) -> "BinSpec":
        """Uniform bins of ``width`` centred on zero that cover all cells of ``grid``."""
        h = float(grid[1] - grid[0])
        lo, hi = grid[0] - h / 2, grid[-1] + h / 2
        k_lo = math.floor(lo / width + 0.5)
        k_hi = math.ceil(hi / width + 0.5)
        return cls(width * (np.arange(k_lo, k_hi + 1) - 0.5))

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.marks)

    @property
    def max_width(self) -> float:
        return float(self.widths.max())

    def __len__(self):
        return self.marks.size - 1


@dataclass(frozen=True)
class EntropyOrderPair:
    """Conjugate orders with ``1/alpha + 1/beta = 2``; ``alpha`` may be ``inf``."""

    alpha: float
    beta: float

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        if not (a > 0 and b > 0):
            raise ValueError("orders must be positive")
        inv = (0.0 if math.isinf(a) else 1.0 / a) + (0.0 if math.isinf(b) else 1.0 / b)
        if abs(inv - 2.0) > 1e-12:
            raise ValueError(f"1/alpha + 1/beta = {inv!r}, expected 2")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @staticmethod
    def conjugate(order: float) -> float:
        order = float(order)
        if math.isinf(order):
            return 0.5
        if not order > 0.5:
            raise ValueError(f"order {order} has no positive conjugate (needs order > 1/2)")
        if order == 0.5:
            return math.inf
        return order / (2.0 * order - 1.0)

    @classmethod
    def from_alpha(cls, alpha: float) -> "EntropyOrderPair":
        return cls(alpha, cls.conjugate(alpha))

    @property
    def mu(self) -> float:
        return max(self.alpha, self.beta)

    @property
    def is_shannon(self) -> bool:
        return _is_shannon(self.alpha) and _is_shannon(self.beta)

    @property
    def kappa(self) -> float:
        from .scenarios import kappa

        return kappa(self)


# -- discrete -----------------------------------------------------------------


def _probs(p) -> np.ndarray:
    return np.asarray(getattr(p, "probs", p), dtype=float)


def shannon(p) -> float:
    p = _probs(p)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def renyi(p, alpha: float) -> float:
    """R_alpha(p) = ln(sum p_i^alpha) / (1 - alpha); Shannon at alpha = 1."""
    alpha = _check_order(alpha)
    if _is_shannon(alpha):
        return shannon(p)
    p = _probs(p)
    nz = p[p > 0]
    if math.isinf(alpha):
        return float(-np.log(nz.max()))
    return float(np.log(np.sum(nz**alpha)) / (1.0 - alpha))


def tsallis(p, alpha: float) -> float:
    """H_alpha(p) = (sum p_i^alpha - 1) / (1 - alpha); Shannon at alpha = 1."""
    alpha = _check_order(alpha)
    if _is_shannon(alpha):
        return shannon(p)
    p = _probs(p)
    nz = p[p > 0]
    if math.isinf(alpha):
        return 0.0
    return float((np.sum(nz**alpha) - 1.0) / (1.0 - alpha))


def alpha_log(xi: float, alpha: float) -> float:
    """The alpha-logarithm (xi^(1-alpha) - 1)/(1 - alpha); natural log at alpha = 1."""
    if not xi > 0:
        raise ValueError(f"alpha_log needs a positive argument, got {xi}")
    if _is_shannon(alpha):
        return math.log(xi)
    if math.isinf(alpha):
        return 0.0 if xi >= 1.0 else math.inf
    return (xi ** (1.0 - alpha) - 1.0) / (1.0 - alpha)


def pnorm_discrete(p, beta: float) -> float:
    beta = _check_order(beta, "beta")
    p = _probs(p)
    nz = p[p > 0]
    return float(np.sum(nz**beta) ** (1.0 / beta))


# -- continuous ---------------------------------------------------------------


def pnorm_density(w: ProbabilityDensity, beta: float) -> float:
    beta = _check_order(beta, "beta")
    v = w.vals[w.vals > 0]
    return float((np.sum(v**beta) * w.spacing) ** (1.0 / beta))


def power_integral(w: ProbabilityDensity, order: float) -> float:
    """``||w||_order ** order``, the integral of w^order."""
    order = _check_order(order)
    v = w.vals[w.vals > 0]
    return float(np.sum(v**order) * w.spacing)


def renyi_density(w: ProbabilityDensity, alpha: float) -> float:
    """Differential Rényi entropy; may be negative."""
    alpha = _check_order(alpha)
    v = w.vals[w.vals > 0]
    h = w.spacing
    if _is_shannon(alpha):
        return float(-np.sum(v * np.log(v)) * h)
    return float(np.log(np.sum(v**alpha) * h) / (1.0 - alpha))


# -- binning ------------------------------------------------------------------


def _cell_positions(grid: np.ndarray, marks: np.ndarray) -> np.ndarray:
    h = grid[1] - grid[0]
    edge0 = grid[0] - h / 2
    return np.clip((marks - edge0) / h, 0.0, grid.size)


def bin_masses(rows: np.ndarray, grid: np.ndarray, bins: BinSpec, absorb_edges: bool = True,
               tol: float = 1e-8) -> np.ndarray:
    """Bin probabilities for each row of densities sampled on ``grid``.

    Mass in cells outside the marks is folded into the first/last bin when
    ``absorb_edges`` is set; otherwise more than ``tol`` of it raises.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    h = float(grid[1] - grid[0])
    cell_mass = rows * h
    pos = _cell_positions(grid, bins.marks)
    # include the full row range so outside mass can be recovered
    full = np.concatenate(([0.0], pos, [float(grid.size)]))
    chunks = kernels.bin_rows(cell_mass, full)
    below, inner, above = chunks[:, 0], chunks[:, 1:-1], chunks[:, -1]
    outside = below + above
    if absorb_edges:
        inner = inner.copy()
        inner[:, 0] += below
        inner[:, -1] += above
    elif np.any(outside > tol):
        raise CoverageError(f"{outside.max():.3e} of the mass lies outside the bin marks")
    return inner


def bin_density(w: ProbabilityDensity, bins: BinSpec, absorb_edges: bool = True,
                tol: float = 1e-8) -> DiscreteDistribution:
    """p_i = integral of w over [l_i, l_{i+1}]."""
    masses = bin_masses(w.vals[None, :], w.grid, bins, absorb_edges, tol)[0]
    total = masses.sum()
    if abs(total - 1.0) > tol:
        raise CoverageError(f"binned mass {total!r} differs from 1 by more than {tol}")
    masses = np.clip(masses, 0.0, None) / total
    return DiscreteDistribution(masses)


def hardy_slacks(w: ProbabilityDensity, bins: BinSpec, alpha: float, beta: float):
    """Slacks of the two binning inequalities (nonnegative when they hold).

    For alpha > 1:  ||w||_alpha^alpha - dl^(1-alpha) ||p||_alpha^alpha
    For beta < 1:   dl^(1-beta) ||p||_beta^beta - ||w||_beta^beta
    where dl is the largest bin width and p the binned distribution.
    """
    if not (alpha > 1.0 > beta > 0.0):
        raise ValueError("need alpha > 1 > beta > 0")
    p = bin_masses(w.vals[None, :], w.grid, bins, absorb_edges=False, tol=1e-12)[0]
    p = p[p > 0]
    dl = bins.max_width
    s_alpha = power_integral(w, alpha) - dl ** (1.0 - alpha) * np.sum(p**alpha)
    s_beta = dl ** (1.0 - beta) * np.sum(p**beta) - power_integral(w, beta)
    return float(s_alpha), float(s_beta)


# -- batched forms used by the scenario pipelines -----------------------------


def row_power_sums(rows: np.ndarray, orders: Sequence[float]) -> np.ndarray:
    """``sum_j rows[i, j]^q`` per row and order; ``-sum a ln a`` for the Shannon order."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    orders = [_check_order(q) for q in orders]
    if any(math.isinf(q) for q in orders):
        raise ValueError("batched entropies need finite orders")
    exps = np.array([1.0 if _is_shannon(q) else q for q in orders])
    return kernels.row_functionals(rows, exps)


def entropies_from_sums(sums: np.ndarray, orders: Sequence[float], family: str = "renyi",
                        spacing: Optional[float] = None) -> np.ndarray:
    """Turn :func:`row_power_sums` output into Rényi or Tsallis entropies."""
    if family not in ("renyi", "tsallis"):
        raise ValueError(f"unknown entropy family {family!r}")
    if family == "tsallis" and spacing is not None:
        raise ValueError("Tsallis entropy is only defined here for binned distributions")
    out = np.empty_like(sums)
    h = 1.0 if spacing is None else float(spacing)
    for k, q in enumerate(orders):
        s = sums[:, k]
        if _is_shannon(q):
            out[:, k] = s * h
        elif family == "renyi":
            out[:, k] = np.log(s * h) / (1.0 - q)
        else:
            out[:, k] = (s - 1.0) / (1.0 - q)
    return out


def row_entropies(rows: np.ndarray, orders: Sequence[float], family: str = "renyi",
                  spacing: Optional[float] = None) -> np.ndarray:
    """Entropy of every row for every order; shape ``(rows, len(orders))``.

    With ``spacing`` the rows are density samples (differential entropies);
    without it they are probability vectors. Tsallis is discrete-only.
    """
    if family == "tsallis" and spacing is not None:
        raise ValueError("Tsallis entropy is only defined here for binned distributions")
    orders = [float(q) for q in orders]
    return entropies_from_sums(row_power_sums(rows, orders), orders, family, spacing)
