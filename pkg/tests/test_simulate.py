"""Finite-population simulation: determinism, conservation, convergence."""

import io

import pytest

from token_lab import (
    InfeasibleAllocation,
    PopulationParams,
    PopulationStrategy,
    Protocol,
    SimConfig,
    compliance_value,
    deviation_payoff_estimate,
    run_simulation,
)


def small_config(**over):
    base = dict(
        n_agents=500,
        steps=400,
        seed=123,
        alpha=2.0,
        strategy=PopulationStrategy.pure(4),
        rho=0.5,
        burn_in=100,
    )
    base.update(over)
    return SimConfig(**base)


def test_bit_identical_reports():
    a = run_simulation(small_config())
    b = run_simulation(small_config())
    assert a.as_dict() == b.as_dict()
    c = run_simulation(small_config(seed=124))
    assert c.as_dict() != a.as_dict()


def test_token_conservation_and_counts():
    cfg = small_config()
    report = run_simulation(cfg)
    assert report.token_conservation_check
    assert report.trades > 0
    assert report.empirical_eta.sum() == pytest.approx(1.0, abs=1e-12)


def test_zero_supply_never_trades():
    cfg = SimConfig(
        n_agents=2, steps=50, seed=5, alpha=0.0,
        strategy=PopulationStrategy.pure(3), rho=0.5,
    )
    report = run_simulation(cfg)
    assert report.trades == 0
    assert report.empirical_eta[0] == 1.0
    assert report.l1_distance_to_invariant == 0.0


def test_infeasible_allocation():
    with pytest.raises(InfeasibleAllocation):
        run_simulation(small_config(alpha=5.0))


def test_moderate_run_approaches_invariant():
    report = run_simulation(small_config(n_agents=2000, steps=1200, burn_in=300))
    assert report.l1_distance_to_invariant < 0.12
    assert report.empirical_efficiency == pytest.approx(0.64, abs=0.05)


def test_sample_from_invariant_start_is_exact_total():
    cfg = small_config(init_mode="sample-from-invariant", steps=5, burn_in=0)
    report = run_simulation(cfg)
    assert report.token_conservation_check


def test_mixed_strategy_type_assignment():
    strat = PopulationStrategy.mix(2, 0.25)
    cfg = SimConfig(
        n_agents=400, steps=300, seed=9, alpha=1.0, strategy=strat, rho=0.4,
        burn_in=100,
    )
    report = run_simulation(cfg)
    assert report.token_conservation_check
    # support reaches the higher threshold
    assert len(report.empirical_eta) == 4
    assert report.l1_distance_to_invariant < 0.2


def test_stream_csv():
    buf = io.StringIO()
    run_simulation(small_config(steps=20, burn_in=5), stream=buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,trades,eta0,etaK"
    assert len(lines) == 21
    first = lines[1].split(",")
    assert first[0] == "0" and len(first) == 4


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(n_agents=1)
    with pytest.raises(ValueError):
        small_config(burn_in=400)
    with pytest.raises(ValueError):
        small_config(rho=0.6)
    with pytest.raises(ValueError):
        small_config(init_mode="bogus")


def test_for_protocol_constructor():
    cfg = SimConfig.for_protocol(
        Protocol.pi_k(4), n_agents=100, steps=10, seed=1, rho=0.5
    )
    assert cfg.alpha == 2.0
    assert cfg.total_tokens == 200


def test_zero_horizon_payoff():
    params = PopulationParams.from_ratio(0.5, 0.85, 2.0)
    cfg = SimConfig(
        n_agents=100, steps=10, seed=3, alpha=0.5,
        strategy=PopulationStrategy.pure(1), rho=0.5,
    )
    est = deviation_payoff_estimate(cfg, params, 1, horizon=0, replications=100)
    assert est.mean == 0.0 and est.std_error == 0.0


def test_compliance_estimate_matches_value_average():
    params = PopulationParams.from_ratio(0.5, 0.85, 2.0)
    cfg = SimConfig(
        n_agents=100, steps=10, seed=11, alpha=0.5,
        strategy=PopulationStrategy.pure(1), rho=0.5,
    )
    est = deviation_payoff_estimate(cfg, params, 1, horizon=250, replications=30_000)
    target = compliance_value(cfg, params)
    assert target == pytest.approx(5 / 6, abs=1e-9)
    assert abs(est.mean - target) <= 4 * est.std_error


def test_compliance_dominates_neighbor_thresholds():
    # at a robust equilibrium the protocol threshold beats one-step deviations
    params = PopulationParams.from_ratio(0.5, 0.85, 2.0)
    cfg = SimConfig(
        n_agents=100, steps=10, seed=17, alpha=0.5,
        strategy=PopulationStrategy.pure(1), rho=0.5,
    )
    comply = deviation_payoff_estimate(cfg, params, 1, horizon=250, replications=20_000)
    down = deviation_payoff_estimate(cfg, params, 0, horizon=250, replications=20_000)
    up = deviation_payoff_estimate(cfg, params, 2, horizon=250, replications=20_000)
    assert comply.dominates(down)
    assert comply.dominates(up)


def test_deviation_rejects_mismatched_matching_rate():
    params = PopulationParams.from_ratio(0.4, 0.85, 2.0)
    cfg = SimConfig(
        n_agents=100, steps=10, seed=3, alpha=0.5,
        strategy=PopulationStrategy.pure(1), rho=0.5,
    )
    with pytest.raises(ValueError):
        deviation_payoff_estimate(cfg, params, 1, horizon=10, replications=10)


def test_deviation_determinism():
    params = PopulationParams.from_ratio(0.5, 0.85, 2.0)
    cfg = SimConfig(
        n_agents=100, steps=10, seed=23, alpha=0.5,
        strategy=PopulationStrategy.pure(1), rho=0.5,
    )
    a = deviation_payoff_estimate(cfg, params, 2, horizon=50, replications=500)
    b = deviation_payoff_estimate(cfg, params, 2, horizon=50, replications=500)
    assert a == b


@pytest.mark.slow
def test_large_population_tightens_l1():
    cfg = SimConfig(
        n_agents=100_000, steps=5000, seed=7, alpha=2.0,
        strategy=PopulationStrategy.pure(4), rho=0.5, burn_in=1000,
    )
    report = run_simulation(cfg)
    assert report.l1_distance_to_invariant < 0.02
    assert report.empirical_efficiency == pytest.approx(0.64, abs=0.02)


def test_report_json_roundtrip():
    import json

    report = run_simulation(small_config(steps=30, burn_in=10))
    text = json.dumps(report.as_dict())
    back = json.loads(text)
    assert back["seed"] == 123
    assert back["generator"] == "numpy-pcg64"
    assert len(back["empirical_eta"]) == len(report.empirical_eta)
