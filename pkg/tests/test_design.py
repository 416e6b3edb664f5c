"""Efficiency, threshold bounds, designer bisection, and protocol search."""

import math

import numpy as np
import pytest

from token_lab import (
    NoEquilibriumFound,
    PopulationParams,
    PopulationStrategy,
    Protocol,
    bisection_design,
    check_equilibrium,
    classification_sweep,
    efficiency,
    efficiency_bounds,
    exhaustive_scan,
    fixed_threshold_sweep,
    invariant_distribution,
    optimal_efficiency_sweep,
    optimal_protocol_search,
    threshold_bounds,
)
from conftest import random_protocol


def test_canonical_efficiency():
    steady = invariant_distribution(Protocol.pi_k(3))
    assert efficiency(steady) == pytest.approx(0.5625, abs=1e-14)


def test_efficiency_of_tilted_state():
    steady = invariant_distribution(Protocol(0.6, PopulationStrategy.pure(2)))
    assert efficiency(steady) == pytest.approx(
        (1 - 0.5539722826784925) * (1 - 0.15397228267840266), abs=1e-9
    )
    assert efficiency(steady) == pytest.approx(0.37735, abs=1e-4)


def test_efficiency_degenerate_zero():
    from token_lab import SteadyState

    dead = SteadyState(
        eta=np.array([1.0]), mu=1.0, nu=0.0, alpha=0.0,
        strategy=PopulationStrategy.pure(1),
    )
    assert efficiency(dead) == 0.0


def test_efficiency_bounds_examples():
    upper_alpha, upper_k = efficiency_bounds(0.6, 2)
    assert upper_alpha == pytest.approx(1 - 1 / 3)
    assert upper_k == pytest.approx(4 / 9)
    actual = efficiency(invariant_distribution(Protocol(0.6, PopulationStrategy.pure(2))))
    assert actual <= min(upper_alpha, upper_k)

    # half-threshold supply attains the threshold bound exactly
    for k in (1, 3, 7):
        _, upper_k = efficiency_bounds(k / 2, k)
        actual = efficiency(invariant_distribution(Protocol.pi_k(k)))
        assert actual == pytest.approx(upper_k, abs=1e-13)

    assert efficiency_bounds(0.4, 1)[1] == pytest.approx(0.25)


def test_efficiency_below_bounds_random(rng):
    for _ in range(100):
        proto = random_protocol(rng, k_max=25)
        k = proto.strategy.pure_threshold
        actual = efficiency(invariant_distribution(proto))
        upper_alpha, upper_k = efficiency_bounds(proto.alpha, k)
        assert actual <= min(upper_alpha, upper_k) + 1e-12


def test_threshold_bounds_values():
    tb = threshold_bounds(PopulationParams.from_ratio(0.5, 0.9, 2.0))
    # direct evaluation of the two logarithms
    base_low = 0.45 / (0.2 + 0.9)
    base_high = 0.45 / (0.1 + 0.45)
    assert tb.K_L == pytest.approx(math.log(1 / 3) / math.log(base_low) - 1, abs=1e-12)
    assert tb.K_H == pytest.approx(math.log(0.25) / math.log(base_high), abs=1e-12)
    assert tb.K_L == pytest.approx(0.2291, abs=1e-4)
    assert tb.K_H == pytest.approx(6.9083, abs=1e-4)


def test_threshold_bounds_floor_at_zero():
    # as r -> 1+ the lower bound formula dips and clamps at zero
    tb = threshold_bounds(PopulationParams.from_ratio(0.5, 0.6, 1.0 + 1e-9))
    assert tb.K_L == 0.0


def test_threshold_bound_grows_with_patience():
    tb_90 = threshold_bounds(PopulationParams.from_ratio(0.5, 0.9, 2.0))
    tb_99 = threshold_bounds(PopulationParams.from_ratio(0.5, 0.99, 2.0))
    base = 0.495 / (0.01 + 0.495)
    assert tb_99.K_H == pytest.approx(math.log(0.25) / math.log(base), abs=1e-10)
    assert tb_99.K_H > tb_90.K_H


def test_design_finds_robust_k1():
    result = bisection_design(PopulationParams.from_ratio(0.5, 0.85, 2.0))
    assert result.K_star == 1
    assert result.alpha_star == 0.5
    assert result.efficiency == pytest.approx(0.25)


def test_design_matches_scan_at_higher_beta():
    params = PopulationParams.from_ratio(0.5, 0.95, 2.0)
    result = bisection_design(params)
    assert result.K_star > 1
    scan = exhaustive_scan(params)
    assert scan[result.K_star].is_equilibrium


def test_design_empty_range():
    with pytest.raises(NoEquilibriumFound):
        bisection_design(PopulationParams.from_ratio(0.5, 0.5, 1.2))


def test_design_agrees_with_scan_on_grid():
    for r in np.linspace(1.3, 9.0, 8):
        for beta in np.linspace(0.55, 0.98, 8):
            params = PopulationParams.from_ratio(0.5, float(beta), float(r))
            tb = threshold_bounds(params)
            scan = exhaustive_scan(params)
            eq_set = [k for k, rep in scan.items() if rep.is_equilibrium]
            cap = max(1, math.ceil(math.log2(max(tb.K_H - tb.K_L, 1.0))) + 1)
            try:
                result = bisection_design(params)
            except NoEquilibriumFound:
                assert not [k for k in eq_set if k in tb.integer_range]
                continue
            assert result.K_star in eq_set
            assert result.iterations <= cap


def test_equilibrium_set_contiguous_and_small(rng):
    # at most two equilibrium thresholds, and always adjacent
    for _ in range(30):
        beta = float(rng.uniform(0.6, 0.98))
        r = float(rng.uniform(1.3, 8.0))
        scan = exhaustive_scan(PopulationParams.from_ratio(0.5, beta, r))
        eq = sorted(k for k, rep in scan.items() if rep.is_equilibrium)
        if eq:
            assert len(eq) <= 2
            assert eq == list(range(eq[0], eq[-1] + 1))


def test_robust_coverage_above_onset():
    # above the smallest robust onset some canonical protocol is always robust
    onset = 0.8  # lower endpoint of the K=1 interval at rho=0.5, r=2
    for beta in np.linspace(onset + 0.01, 0.99, 25):
        scan = exhaustive_scan(PopulationParams.from_ratio(0.5, float(beta), 2.0))
        robust = [k for k, rep in scan.items() if rep.tag.value == "robust"]
        assert robust, f"no robust threshold at beta={beta}"


def test_optimal_search_beats_canonical():
    params = PopulationParams.from_ratio(0.5, 0.9, 2.0)
    res = optimal_protocol_search(params, alpha_steps=100)
    assert res.best_canonical is not None
    assert res.best.efficiency >= res.best_canonical.efficiency
    assert check_equilibrium(
        Protocol(res.best.alpha, PopulationStrategy.pure(res.best.K)), params
    ).tag.value == "robust"


def test_optimal_search_deterministic():
    params = PopulationParams.from_ratio(0.5, 0.92, 2.0)
    a = optimal_protocol_search(params, alpha_steps=80)
    b = optimal_protocol_search(params, alpha_steps=80)
    assert a == b


def test_optimal_search_no_equilibrium():
    with pytest.raises(NoEquilibriumFound):
        optimal_protocol_search(
            PopulationParams.from_ratio(0.5, 0.3, 1.2), alpha_steps=40
        )


def test_fig3_shape():
    rows = optimal_efficiency_sweep(0.5, 2.0, np.linspace(0.78, 0.96, 8), alpha_steps=60)
    assert all(row[3] >= row[4] for row in rows)  # eff_opt >= eff_piK
    assert any(row[3] > row[4] + 1e-9 for row in rows)  # strictly better somewhere


def test_fig4_cap_and_gap():
    rows = fixed_threshold_sweep(0.5, 2.0, np.linspace(0.75, 0.97, 8), fixed_K=3,
                                 alpha_steps=60)
    assert all(row[2] <= 0.5625 + 1e-12 for row in rows)
    assert any(row[1] - row[2] > 0.2 for row in rows)


def test_classification_grid_rows():
    from token_lab import canonical_classification_grid
    from token_lab.serialize import csv_lines

    rows = canonical_classification_grid(0.5, [0.85, 0.9], [2.0, 3.0], k_max=4)
    assert len(rows) == 2 * 2 * 4
    csv = csv_lines(("beta", "r", "K", "class", "slack_low", "slack_high"), rows)
    assert csv.splitlines()[0] == "beta,r,K,class,slack_low,slack_high"
    # classification consistent with the slacks it reports
    for beta, r, k, tag, sl, sh in rows:
        if tag == "robust":
            assert sl > 0 and sh > 0


def test_bounds_grid_rows():
    from token_lab import bounds_grid

    rows = bounds_grid([0.3, 0.5], [0.8, 0.9], [2.0])
    assert len(rows) == 4
    for rho, beta, r, k_lo, k_hi in rows:
        assert k_lo <= k_hi


def test_efficiency_grid_rows():
    from token_lab import efficiency_grid

    rows = efficiency_grid(0.5, [0.88, 0.92], [2.0, 3.0], alpha_steps=40)
    assert len(rows) == 4
    for beta, r, k_star, alpha_star, eff_opt, eff_pik in rows:
        assert eff_opt >= eff_pik


def test_thread_env_var_does_not_change_results(monkeypatch):
    import numpy as np

    betas = np.linspace(0.8, 0.95, 6)
    serial = classification_sweep(0.25, 0.5, 2.0, betas, k_max=3)
    monkeypatch.setenv("TOKEN_LAB_THREADS", "4")
    threaded = classification_sweep(0.25, 0.5, 2.0, betas, k_max=3)
    assert serial == threaded


def test_asymptotic_efficiency_trend():
    # more patience: best robust canonical protocol weakly improves, and the
    # best equilibrium threshold weakly grows
    best_eff, best_k = [], []
    for beta in (0.9, 0.95, 0.99, 0.995):
        scan = exhaustive_scan(PopulationParams.from_ratio(0.5, beta, 2.0))
        robust = [k for k, rep in scan.items() if rep.tag.value == "robust"]
        assert robust
        best_k.append(max(robust))
        best_eff.append(max((k / (k + 1)) ** 2 for k in robust))
    assert all(a <= b for a, b in zip(best_eff, best_eff[1:]))
    assert all(a <= b for a, b in zip(best_k, best_k[1:]))


def test_equilibrium_marginals_capped_by_deviation_value(rng):
    # At an equilibrium the marginal value of a token is capped by the value
    # of mimicking a one-token-richer agent until the first forced shortfall:
    # M(k) <= h*b / (1 - beta*(1-h)) with per-period hazard h = rho*(1-nu),
    # hence strictly below b/beta (which is what "always request" needs).
    # The cruder cap rho*b fails, e.g. at rho=.5, beta=.875, r=2.64, K=1.
    from token_lab import solve_marginals

    found = 0
    for _ in range(60):
        beta = float(rng.uniform(0.75, 0.98))
        r = float(rng.uniform(1.5, 6.0))
        params = PopulationParams.from_ratio(0.5, beta, r)
        scan = exhaustive_scan(params)
        for k, rep in scan.items():
            if not rep.is_equilibrium:
                continue
            found += 1
            steady = invariant_distribution(Protocol.pi_k(k))
            m = solve_marginals(k, params, steady, extra_above=2).M
            h = params.rho * (1 - steady.nu)
            assert np.all(m <= h * params.b / (1 - beta * (1 - h)) + 1e-9)
            assert np.all(m < params.b / beta)
    assert found > 20
