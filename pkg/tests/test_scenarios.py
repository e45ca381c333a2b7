import math

import numpy as np
import pytest

import oracles
from seqmeas.detector import gaussian_profile, tophat_profile
from seqmeas.entropy import BinSpec, EntropyOrderPair
from seqmeas.lattice import Lattice, make_gaussian, make_mixture, make_superposition
from seqmeas.scenarios import (
    ScenarioConfig,
    bound,
    entropy_bound,
    kappa,
    preparation_check,
    prepare_preparation,
    prepare_scenario_one,
    prepare_scenario_two,
    scenario_one,
    scenario_two,
)

SHANNON = EntropyOrderPair(1.0, 1.0)


@pytest.fixture(scope="module")
def lat():
    return Lattice.centered(1024, 12.0)


def test_kappa_limits():
    assert kappa(EntropyOrderPair(math.inf, 0.5)) == 2.0
    assert kappa(SHANNON) == math.e
    assert kappa(EntropyOrderPair.from_alpha(2.0)) == pytest.approx(math.sqrt(6.75), abs=1e-12)


@pytest.mark.parametrize("alpha", [0.6, 0.9, 1.0 + 1e-6, 1.3, 2.0, 10.0, 1e6])
def test_kappa_range_and_direct_formula(alpha):
    pair = EntropyOrderPair.from_alpha(alpha)
    k = kappa(pair)
    assert 2.0 <= k <= math.e
    if abs(alpha - 1) > 1e-3:
        assert k == pytest.approx(oracles.kappa_direct(pair.alpha, pair.beta), rel=1e-9)
    assert kappa(EntropyOrderPair(pair.beta, pair.alpha)) == pytest.approx(k, rel=1e-12)


def test_kappa_continuous_through_shannon():
    assert kappa(EntropyOrderPair.from_alpha(1 + 1e-10)) == pytest.approx(math.e, rel=1e-9)


def test_bound_examples():
    assert entropy_bound(SHANNON) == pytest.approx(1.837877, abs=1e-6)
    assert entropy_bound(SHANNON, "renyi", "xp", 0.01) == pytest.approx(math.log(100 * math.e * math.pi), abs=1e-12)
    assert entropy_bound(SHANNON, "renyi", "xp", 0.01) == pytest.approx(6.749900, abs=1e-6)
    for a in (1.0, 2.0, 5.0):
        assert entropy_bound(EntropyOrderPair.from_alpha(a), "tsallis", "general", 2 * math.pi) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        entropy_bound(SHANNON, "tsallis")


@pytest.mark.parametrize("alpha", [0.75, 1.0, 2.0, 4.0])
def test_xp_bound_tighter(alpha):
    pair = EntropyOrderPair.from_alpha(alpha)
    assert entropy_bound(pair, bound_family="xp") >= entropy_bound(pair) - 1e-15


def test_refining_bins_raises_bound():
    prev = -math.inf
    for w in (1.0, 0.5, 0.2, 0.05):
        b = entropy_bound(SHANNON, cell=w * w)
        assert b > prev
        prev = b


def test_config_validation(lat):
    psi = make_gaussian(lat)
    f = gaussian_profile(0.2)
    with pytest.raises(ValueError, match="Tsallis"):
        ScenarioConfig(psi, f, f, SHANNON, family="tsallis")
    bins = BinSpec.covering(lat.y, 0.1)
    with pytest.raises(ValueError):
        ScenarioConfig(psi, f, f, SHANNON, zeta_bins=bins)
    with pytest.raises(ValueError):
        ScenarioConfig(psi, f, f, SHANNON, bound_family="other")
    with pytest.warns(UserWarning, match="phase cell"):
        cfg = ScenarioConfig(psi, f, f, SHANNON, BinSpec.covering(lat.y, 3.0), BinSpec.covering(lat.x, 3.0))
    assert bound(cfg) < 0


@pytest.mark.parametrize("s_f, s_g", [(0.05, 0.3), (0.3, 0.4), (1.0, 0.5)])
@pytest.mark.parametrize("alpha", [1.0, 2.0, 0.8])
def test_scenario_one_gaussian_closed_form(lat, s_f, s_g, alpha):
    pair = EntropyOrderPair.from_alpha(alpha)
    psi = make_gaussian(lat, 0.5, 0.8, -0.7)
    rep = scenario_one(ScenarioConfig(psi, gaussian_profile(s_f), gaussian_profile(s_g), pair))
    first, second = oracles.scenario_one_gaussian(0.8, s_f, s_g, pair.alpha, pair.beta)
    assert rep.first == pytest.approx(first, abs=1e-8)
    assert rep.second == pytest.approx(second, abs=1e-8)
    assert rep.margin >= 0 and rep.holds


@pytest.mark.parametrize("s_f, s_g", [(0.05, 0.3), (0.3, 0.4), (1.0, 0.5)])
@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_scenario_two_gaussian_closed_form(lat, s_f, s_g, alpha):
    pair = EntropyOrderPair.from_alpha(alpha)
    psi = make_gaussian(lat, -0.3, 0.8, 0.9)
    rep = scenario_two(ScenarioConfig(psi, gaussian_profile(s_f), gaussian_profile(s_g), pair))
    first, second = oracles.scenario_two_gaussian(0.8, s_f, s_g, pair.alpha, pair.beta)
    assert rep.first == pytest.approx(first, abs=1e-8)
    assert rep.second == pytest.approx(second, abs=1e-8)
    # every conditional state is the same Gaussian, so every pointwise margin equals the average
    assert rep.min_pointwise_margin == pytest.approx(rep.margin, abs=1e-7)


def test_preparation_gaussian_saturates_xp_bound(lat):
    psi = make_gaussian(lat, 0.0, 1.0)
    data = prepare_preparation(psi, gaussian_profile(0.02), gaussian_profile(0.02))
    rep = data.report(SHANNON, bound_family="xp")
    first, second = oracles.preparation_gaussian(1.0, 0.02, 0.02, 1.0, 1.0)
    # s below the lattice spacing: three-tap kernels keep the variance but not the shape
    assert rep.total == pytest.approx(first + second, abs=1e-7)
    assert rep.bound == pytest.approx(math.log(math.e * math.pi))
    assert 0 <= rep.margin < 2e-3


def test_scenario_one_gaussian_does_not_saturate(lat):
    # the erased first measurement adds 1/(4 s^2) to the conjugate variance
    psi = make_gaussian(lat, 0.0, 1.0)
    rep = prepare_scenario_one(psi, gaussian_profile(0.05), gaussian_profile(0.05)).report(SHANNON, bound_family="xp")
    assert rep.total >= math.log(2 * math.pi * math.e)
    assert rep.margin > math.log(2)


def test_first_term_unchanged_by_channel(lat):
    psi = make_superposition(lat, [(1, -1.0, 0.6, 0.5), (1j, 1.2, 0.8, -1.0)])
    data = prepare_scenario_one(psi, gaussian_profile(0.1), gaussian_profile(0.1))
    for alpha in (1.0, 2.0, 0.7):
        rep = data.report(EntropyOrderPair.from_alpha(alpha))
        assert rep.diagnostics["first_term_invariance"] <= 1e-9
    binned = data.report(SHANNON, zeta_bins=BinSpec.covering(lat.y, 0.1), xi_bins=BinSpec.covering(lat.x, 0.1))
    assert binned.diagnostics["first_term_invariance"] <= 1e-9


def test_trade_off_in_scenario_two(lat):
    psi = make_gaussian(lat, 0.0, 1.0)
    firsts, seconds = [], []
    for s in (1.0, 0.3, 0.05):
        rep = scenario_two(ScenarioConfig(psi, gaussian_profile(s), gaussian_profile(0.05), SHANNON))
        firsts.append(rep.first)
        seconds.append(rep.second)
        assert rep.second >= rep.bound - rep.first
    assert firsts == sorted(firsts, reverse=True)
    assert seconds == sorted(seconds)


def test_batched_reports_match_single(lat):
    psi = make_mixture(lat, [(0.5, -1.0, 0.6, 0.0), (0.5, 1.0, 0.7, 1.0)])
    data = prepare_scenario_two(psi, gaussian_profile(0.2), gaussian_profile(0.3))
    pairs = [EntropyOrderPair.from_alpha(a) for a in (1.0, 2.0)]
    bins = [(None, None), (BinSpec.covering(lat.y, 0.1), BinSpec.covering(lat.x, 0.1))]
    batch = data.reports(pairs, ["renyi", "tsallis"], bins)
    assert len(batch) == 2 * (1 + 2)
    single = data.report(pairs[1], "tsallis", zeta_bins=bins[1][0], xi_bins=bins[1][1])
    assert batch[-1] == single


@pytest.mark.parametrize("family", ["renyi", "tsallis"])
@pytest.mark.parametrize("bound_family", ["general", "xp"])
def test_binned_bounds_hold(lat, family, bound_family):
    rng = np.random.default_rng(11)
    comps = [(complex(rng.normal(), rng.normal()), rng.uniform(-2, 2), rng.uniform(0.4, 1.0), rng.uniform(-2, 2))
             for _ in range(3)]
    psi = make_superposition(lat, comps)
    for alpha in (1.0, 1.5, 4.0):
        cfg = ScenarioConfig(psi, gaussian_profile(0.1), tophat_profile(0.2), EntropyOrderPair.from_alpha(alpha),
                             BinSpec.covering(lat.y, 0.05), BinSpec.covering(lat.x, 0.05), family, bound_family)
        for rep in (scenario_one(cfg), scenario_two(cfg)):
            assert rep.holds, rep
            assert rep.first >= 0 and rep.second >= 0


def test_mixed_conditional_states_with_xp_bound(lat):
    rho = make_mixture(lat, [(0.3, -1.5, 0.5, 1.0), (0.7, 1.0, 0.9, -0.5)])
    for alpha in (1.0, 2.0):
        rep = scenario_two(ScenarioConfig(rho, gaussian_profile(0.1), gaussian_profile(0.1),
                                          EntropyOrderPair.from_alpha(alpha), bound_family="xp"))
        assert rep.holds
        assert rep.min_pointwise_margin >= 0


def test_preparation_check_gaussian(lat):
    psi = make_gaussian(lat, 0.3, 0.9, 0.4)
    rep = preparation_check(psi, EntropyOrderPair.from_alpha(2.0), "general", gaussian_profile(0.1),
                            gaussian_profile(0.1), BinSpec.covering(lat.y, 0.1), BinSpec.covering(lat.x, 0.1))
    assert set(rep.slacks) == {"raw_yx", "raw_xy", "smoothed_pq", "smoothed_qp", "binned_pq", "binned_qp"}
    assert all(v >= 0 for v in rep.slacks.values())
    # Gaussians saturate the raw x-p norm inequality
    tight = preparation_check(psi, EntropyOrderPair.from_alpha(2.0), "xp")
    assert abs(tight.slacks["raw_yx"]) < 1e-9
    assert all(v >= tight.slacks["raw_yx"] for v in rep.slacks.values())


@pytest.mark.parametrize("seed", range(5))
def test_preparation_check_random_superposition(lat, seed):
    rng = np.random.default_rng(seed)
    comps = [(complex(rng.normal(), rng.normal()), rng.uniform(-2.5, 2.5), rng.uniform(0.4, 1.0), rng.uniform(-2, 2))
             for _ in range(5)]
    psi = make_superposition(lat, comps)
    rep = preparation_check(psi, EntropyOrderPair.from_alpha(1.5), "xp", gaussian_profile(0.2), tophat_profile(0.3),
                            BinSpec.covering(lat.y, 0.2), BinSpec.covering(lat.x, 0.2))
    assert rep.holds
    assert min(rep.slacks.values()) >= -1e-9


def test_preparation_check_rejects_shannon(lat):
    with pytest.raises(ValueError):
        preparation_check(make_gaussian(lat), SHANNON)
    with pytest.raises(ValueError):
        preparation_check(make_gaussian(lat), EntropyOrderPair.from_alpha(0.75))
