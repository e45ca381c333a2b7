"""Successive-measurement pipelines and their entropic lower bounds.

Scenario one measures Y non-selectively (outcome erased, state ``Phi(rho)``)
and then X. Scenario two keeps every outcome ``zeta`` and measures X on the
conditional state, averaging both entropies with the outcome density.
The preparation check evaluates the underlying norm inequalities on a single
state.

Entropies are differential when no bins are given and discrete (binned)
otherwise; Tsallis entropies are only used binned.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .detector import AcceptanceProfile, measure, nonselective_channel, smooth_density, smooth_rows
from .entropy import (
    BinSpec,
    EntropyOrderPair,
    alpha_log,
    bin_masses,
    pnorm_discrete,
    pnorm_density,
    entropies_from_sums,
    row_entropies,
    row_power_sums,
)
from .exceptions import ResolutionError
from .lattice import ProbabilityDensity, State, density_of

TWO_PI = 2.0 * math.pi
DEFAULT_BUDGET = 1e-3


def kappa(orders: EntropyOrderPair) -> float:
    """Sharp position-momentum constant: ``kappa^2 = alpha^(1/(alpha-1)) beta^(1/(beta-1))``.

    Ranges from 2 (``beta = 1/2``) to e (``alpha = beta = 1``).
    """
    a, b = orders.alpha, orders.beta
    if orders.is_shannon:
        return math.e
    if math.isinf(a) or math.isinf(b):
        return 2.0

    def half_log(q):
        # ln(q) / (q - 1), continuous through q = 1
        d = q - 1.0
        if abs(d) < 1e-9:
            return 1.0 - d / 2.0
        return math.log1p(d) / d

    return math.exp(0.5 * (half_log(a) + half_log(b)))


def bound_constant(orders: EntropyOrderPair, bound_family: str) -> float:
    """``2 pi`` for general conjugate pairs, ``kappa pi`` for the Fourier (x-p) pair."""
    if bound_family == "general":
        return TWO_PI
    if bound_family == "xp":
        return kappa(orders) * math.pi
    raise ValueError(f"unknown bound family {bound_family!r}")


def entropy_bound(orders: EntropyOrderPair, family: str = "renyi", bound_family: str = "general",
                  cell: Optional[float] = None) -> float:
    """Lower bound on the entropy sum.

    ``cell`` is the product of the maximal bin widths; ``None`` means continuous
    (differential) entropies.
    """
    c = bound_constant(orders, bound_family)
    if cell is None:
        if family != "renyi":
            raise ValueError("Tsallis bounds need binned distributions")
        return math.log(c)
    ratio = c / cell
    if family == "renyi":
        return math.log(ratio)
    if family == "tsallis":
        return alpha_log(ratio, orders.mu)
    raise ValueError(f"unknown entropy family {family!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    state: State
    f: AcceptanceProfile
    g: AcceptanceProfile
    orders: EntropyOrderPair
    zeta_bins: Optional[BinSpec] = None
    xi_bins: Optional[BinSpec] = None
    family: str = "renyi"
    bound_family: str = "general"
    budget: float = DEFAULT_BUDGET
    zeta_stride: int = 1
    coverage_tol: float = 1e-8

    def __post_init__(self):
        if self.family not in ("renyi", "tsallis"):
            raise ValueError(f"unknown entropy family {self.family!r}")
        if self.bound_family not in ("general", "xp"):
            raise ValueError(f"unknown bound family {self.bound_family!r}")
        if (self.zeta_bins is None) != (self.xi_bins is None):
            raise ValueError("give bins for both measured variables or for neither")
        if self.family == "tsallis" and self.zeta_bins is None:
            raise ValueError("Tsallis entropies need bins for both variables")
        if self.binned and self.cell >= bound_constant(self.orders, self.bound_family):
            warnings.warn(
                f"bin cell {self.cell:.4g} is not below the phase cell; the binned bound is not positive",
                stacklevel=3,
            )

    @property
    def binned(self) -> bool:
        return self.zeta_bins is not None

    @property
    def cell(self) -> Optional[float]:
        if not self.binned:
            return None
        return self.zeta_bins.max_width * self.xi_bins.max_width

    def bound(self) -> float:
        return entropy_bound(self.orders, self.family, self.bound_family, self.cell)


def bound(config: ScenarioConfig) -> float:
    return config.bound()


@dataclass(frozen=True)
class UncertaintyReport:
    """Entropy terms of one scenario evaluation and the bound they are tested against.

    For scenario two ``first`` and ``second`` are the outcome-averaged terms and
    ``min_pointwise_margin`` is the worst single-outcome margin.
    """

    scenario: str
    first: float
    second: float
    bound: float
    budget: float = DEFAULT_BUDGET
    min_pointwise_margin: Optional[float] = None
    slacks: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.first + self.second

    @property
    def margin(self) -> float:
        return self.total - self.bound

    @property
    def holds(self) -> bool:
        ok = self.margin >= -self.budget
        if self.min_pointwise_margin is not None:
            ok = ok and self.min_pointwise_margin >= -self.budget
        return ok and all(s >= -self.budget for s in self.slacks.values())


def _binned(rows, grid, bins: BinSpec) -> np.ndarray:
    p = np.clip(bin_masses(rows, grid, bins), 0.0, None)
    return p / p.sum(axis=1, keepdims=True)


def _entropy_table(rows, grid, bins, orders, families) -> dict:
    """Entropies of every row keyed by ``(order, family)``; one power sum per order."""
    if bins is None:
        vals, h = rows, float(grid[1] - grid[0])
    else:
        vals, h = _binned(rows, grid, bins), None
    uniq = sorted(set(orders))
    sums = row_power_sums(vals, uniq)
    table = {}
    for family in families:
        if family == "tsallis" and bins is None:
            continue
        ent = entropies_from_sums(sums, uniq, family, h)
        for k, q in enumerate(uniq):
            table[q, family] = ent[:, k]
    return table


@dataclass(frozen=True)
class ScenarioData:
    """Smoothed outcome densities of one scenario run, reusable across orders, bins and families.

    Row ``k`` of ``first_rows`` / ``second_rows`` holds the densities for outcome
    weight ``weights[k]``; scenario one and the preparation check have a single
    row of weight one. ``after_rows`` (scenario one) is the first density
    recomputed from the post-channel state.
    """

    scenario: str
    first_rows: np.ndarray
    second_rows: np.ndarray
    y: np.ndarray
    x: np.ndarray
    weights: np.ndarray
    discarded_mass: float = 0.0
    seconds: float = 0.0
    after_rows: Optional[np.ndarray] = None

    @property
    def P(self) -> ProbabilityDensity:
        return ProbabilityDensity(self.y, self.first_rows[0], "position")

    @property
    def Q(self) -> ProbabilityDensity:
        return ProbabilityDensity(self.x, self.second_rows[0], "conjugate")

    def reports(self, pairs, families=("renyi",), bins=((None, None),), bound_family="general",
                budget=DEFAULT_BUDGET) -> list:
        """Reports nested as pair, then bin pair, then family.

        Tsallis is skipped for unbinned entries.
        """
        alphas = [p.alpha for p in pairs]
        betas = [p.beta for p in pairs]
        tables = []
        for zb, xb in bins:
            if (zb is None) != (xb is None):
                raise ValueError("give bins for both measured variables or for neither")
            t1 = _entropy_table(self.first_rows, self.y, zb, alphas, families)
            t2 = _entropy_table(self.second_rows, self.x, xb, betas, families)
            ta = None
            if self.after_rows is not None:
                ta = _entropy_table(self.after_rows, self.y, zb, alphas, families)
            tables.append((zb, xb, t1, t2, ta))
        out = []
        for pair in pairs:
            for zb, xb, t1, t2, ta in tables:
                cell = None if zb is None else zb.max_width * xb.max_width
                for family in families:
                    if family == "tsallis" and zb is None:
                        continue
                    b = entropy_bound(pair, family, bound_family, cell)
                    r1, r2 = t1[pair.alpha, family], t2[pair.beta, family]
                    diag = {"discarded_mass": self.discarded_mass, "outcomes": int(self.weights.size),
                            "seconds": self.seconds}
                    if ta is not None:
                        diag["first_term_invariance"] = float(np.max(np.abs(ta[pair.alpha, family] - r1)))
                    if self.scenario == "two":
                        # fixed-order, correctly rounded reductions keep results independent of scheduling
                        first = math.fsum((self.weights * r1).tolist())
                        second = math.fsum((self.weights * r2).tolist())
                        pointwise = float(np.min(r1 + r2)) - b
                    else:
                        first, second, pointwise = float(r1[0]), float(r2[0]), None
                    out.append(UncertaintyReport(self.scenario, first, second, b, budget, pointwise,
                                                 diagnostics=diag))
        return out

    def report(self, orders, family="renyi", bound_family="general", zeta_bins=None, xi_bins=None,
               budget=DEFAULT_BUDGET) -> UncertaintyReport:
        if family == "tsallis" and zeta_bins is None:
            raise ValueError("Tsallis entropies need bins for both variables")
        return self.reports([orders], [family], [(zeta_bins, xi_bins)], bound_family, budget)[0]


def _single(scenario, P, Q, seconds, after=None) -> ScenarioData:
    return ScenarioData(scenario, P.vals[None, :], Q.vals[None, :], P.grid, Q.grid, np.ones(1),
                        seconds=seconds, after_rows=None if after is None else after.vals[None, :])


# -- scenario one --------------------------------------------------------------


def prepare_scenario_one(state: State, f: AcceptanceProfile, g: AcceptanceProfile,
                         coverage_tol: float = 1e-8) -> ScenarioData:
    t0 = time.perf_counter()
    P = smooth_density(density_of(state, "position"), f, coverage_tol)
    after = nonselective_channel(state, f)
    P_after = smooth_density(density_of(after, "position"), f, coverage_tol)
    Q = smooth_density(density_of(after, "conjugate"), g, coverage_tol)
    return _single("one", P, Q, time.perf_counter() - t0, P_after)


def scenario_one(config: ScenarioConfig) -> UncertaintyReport:
    """Non-selective first measurement followed by the conjugate measurement."""
    data = prepare_scenario_one(config.state, config.f, config.g, config.coverage_tol)
    return data.report(config.orders, config.family, config.bound_family, config.zeta_bins,
                       config.xi_bins, config.budget)


# -- scenario two --------------------------------------------------------------


def prepare_scenario_two(state: State, f: AcceptanceProfile, g: AcceptanceProfile,
                         zeta_stride: int = 1) -> ScenarioData:
    t0 = time.perf_counter()
    lattice = state.lattice
    if not f.resolves(lattice.dy):
        raise ResolutionError(f"first profile width {f.width} is not resolved by dy = {lattice.dy:.4g}")
    rec = measure(state, f, zeta_stride)
    P_rows = smooth_rows(rec.conditional_position_densities(), f, lattice.dy)
    Q_rows = smooth_rows(rec.conditional_conjugate_densities(), g, lattice.dx)
    return ScenarioData("two", P_rows, Q_rows, lattice.y, lattice.x, rec.weights, rec.discarded_mass,
                        time.perf_counter() - t0)


def scenario_two(config: ScenarioConfig) -> UncertaintyReport:
    """Selective first measurement; entropies of conditional states averaged over outcomes."""
    data = prepare_scenario_two(config.state, config.f, config.g, config.zeta_stride)
    return data.report(config.orders, config.family, config.bound_family, config.zeta_bins,
                       config.xi_bins, config.budget)


def prepare_preparation(state: State, f: AcceptanceProfile, g: AcceptanceProfile,
                        coverage_tol: float = 1e-8) -> ScenarioData:
    """Smoothed marginals of the state itself, for the entropy form of the preparation relation."""
    t0 = time.perf_counter()
    P = smooth_density(density_of(state, "position"), f, coverage_tol)
    Q = smooth_density(density_of(state, "conjugate"), g, coverage_tol)
    return _single("prep", P, Q, time.perf_counter() - t0)


# -- preparation ---------------------------------------------------------------


def _norm_slack(lhs: float, rhs_base: float, const: float, beta: float) -> float:
    """``ln(const^((1-beta)/beta) * rhs_base) - ln(lhs)``: nonnegative when ``lhs <= rhs``."""
    return (1.0 - beta) / beta * math.log(const) + math.log(rhs_base) - math.log(lhs)


def preparation_check(state: State, orders: EntropyOrderPair, bound_family: str = "general",
                      f: Optional[AcceptanceProfile] = None, g: Optional[AcceptanceProfile] = None,
                      zeta_bins: Optional[BinSpec] = None, xi_bins: Optional[BinSpec] = None,
                      budget: float = DEFAULT_BUDGET) -> UncertaintyReport:
    """Norm inequalities between the two marginals of one state.

    Raw marginals are always checked in both directions. Smoothed marginals
    are checked when ``f`` and ``g`` are given, binned ones when bins are
    given as well. Slacks are logarithmic (entropy units). ``first`` and
    ``second`` are the Rényi entropies of the smoothed (or raw) marginals.
    """
    a, b = orders.alpha, orders.beta
    if orders.is_shannon:
        raise ValueError("norm inequalities need alpha != beta; use the entropy form at alpha = beta = 1")
    if a < b:
        raise ValueError("preparation_check expects alpha > 1 > beta")
    if (f is None) != (g is None):
        raise ValueError("give both profiles or neither")
    c = bound_constant(orders, bound_family)
    inv_c = 1.0 / c
    w = density_of(state, "position")
    W = density_of(state, "conjugate")
    slacks = {
        "raw_yx": _norm_slack(pnorm_density(w, a), pnorm_density(W, b), inv_c, b),
        "raw_xy": _norm_slack(pnorm_density(W, a), pnorm_density(w, b), inv_c, b),
    }
    P, Q = w, W
    if f is not None:
        P = smooth_density(w, f)
        Q = smooth_density(W, g)
        slacks["smoothed_pq"] = _norm_slack(pnorm_density(P, a), pnorm_density(Q, b), inv_c, b)
        slacks["smoothed_qp"] = _norm_slack(pnorm_density(Q, a), pnorm_density(P, b), inv_c, b)
        if zeta_bins is not None:
            p = bin_masses(P.vals[None, :], P.grid, zeta_bins)[0]
            q = bin_masses(Q.vals[None, :], Q.grid, xi_bins)[0]
            p, q = np.clip(p, 0, None), np.clip(q, 0, None)
            p, q = p / p.sum(), q / q.sum()
            ratio = zeta_bins.max_width * xi_bins.max_width / c
            slacks["binned_pq"] = _norm_slack(pnorm_discrete(p, a), pnorm_discrete(q, b), ratio, b)
            slacks["binned_qp"] = _norm_slack(pnorm_discrete(q, a), pnorm_discrete(p, b), ratio, b)
    r1 = row_entropies(P.vals[None, :], [a], "renyi", spacing=P.spacing)[0, 0]
    r2 = row_entropies(Q.vals[None, :], [b], "renyi", spacing=Q.spacing)[0, 0]
    bnd = entropy_bound(orders, "renyi", bound_family)
    return UncertaintyReport("prep", float(r1), float(r2), bnd, budget, slacks=slacks)
