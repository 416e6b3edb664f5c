"""Finite-population Monte Carlo of the matching-and-exchange process.

The steady-state analysis is exact for a continuum; this module checks what a
finite community actually does: does the empirical holding histogram converge
to the invariant distribution, does the realized trade rate match
(1 - mu)(1 - nu), and does a single deviant actually lose by moving its
threshold?  Each period a seeded shuffle picks floor(rho*N) disjoint
client-server pairs; a trade moves exactly one token, so the total endowment
round(alpha*N) is conserved by construction and verified every step.

Mixed population strategies are realized as fixed types: a deterministic
fraction of agents is assigned each threshold at initialization, matching the
interpretation of the mix as population shares rather than per-period
randomization.  Everything is reproducible: one 64-bit seed drives a single
PCG64 generator and identical configs give bit-identical reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO

import numpy as np

from .errors import InfeasibleAllocation
from .population import (
    PopulationParams,
    PopulationStrategy,
    Protocol,
    invariant_distribution,
)
from .values import solve_values

GENERATOR = "numpy-pcg64"

INIT_SPREAD = "near-uniform-integer-spread"
INIT_INVARIANT = "sample-from-invariant"


@dataclass(frozen=True)
class SimConfig:
    """Reproducible simulation setup.

    ``alpha`` and ``strategy`` describe the protocol; unlike ``Protocol`` the
    config also admits degenerate supplies (alpha = 0, or alpha at the top
    threshold) so no-trade dynamics remain simulable.
    """

    n_agents: int
    steps: int
    seed: int
    alpha: float
    strategy: PopulationStrategy
    rho: float
    burn_in: int = 0
    init_mode: str = INIT_SPREAD

    def __post_init__(self):
        if self.n_agents < 2:
            raise ValueError("need at least two agents")
        if self.steps < 1 or not (0 <= self.burn_in < self.steps):
            raise ValueError("need steps >= 1 and 0 <= burn_in < steps")
        if not (0.0 < self.rho <= 0.5):
            raise ValueError(f"rho must be in (0, 1/2], got {self.rho}")
        if self.alpha < 0.0:
            raise ValueError("alpha must be non-negative")
        if self.init_mode not in (INIT_SPREAD, INIT_INVARIANT):
            raise ValueError(f"unknown init mode {self.init_mode!r}")

    @classmethod
    def for_protocol(cls, protocol: Protocol, **kwargs) -> "SimConfig":
        return cls(alpha=protocol.alpha, strategy=protocol.strategy, **kwargs)

    @property
    def total_tokens(self) -> int:
        return round(self.alpha * self.n_agents)


@dataclass(frozen=True, eq=False)
class SimReport:
    """Post-burn-in summary of one simulation run."""

    empirical_eta: np.ndarray  # time-averaged holding histogram
    l1_distance_to_invariant: float
    empirical_efficiency: float  # trades per matched pair
    trades: int  # total trades over the whole run
    token_conservation_check: bool
    seed: int
    generator: str = GENERATOR

    def as_dict(self) -> dict:
        return {
            "empirical_eta": [float(x) for x in self.empirical_eta],
            "l1_distance_to_invariant": self.l1_distance_to_invariant,
            "empirical_efficiency": self.empirical_efficiency,
            "trades": self.trades,
            "token_conservation_check": self.token_conservation_check,
            "seed": self.seed,
            "generator": self.generator,
        }


def _assign_thresholds(strategy: PopulationStrategy, n: int) -> np.ndarray:
    """Deterministic largest-remainder split of n agents across the mix."""
    ks = [k for k, _ in strategy.weights]
    ws = [w for _, w in strategy.weights]
    counts = [math.floor(w * n) for w in ws]
    remainders = sorted(
        range(len(ws)), key=lambda i: (ws[i] * n - counts[i]), reverse=True
    )
    for i in remainders[: n - sum(counts)]:
        counts[i] += 1
    return np.repeat(np.array(ks, dtype=np.int64), counts)


def _spread_holdings(total: int, n: int) -> np.ndarray:
    base, extra = divmod(total, n)
    holdings = np.full(n, base, dtype=np.int64)
    holdings[:extra] += 1
    return holdings


def _sample_holdings(
    config: SimConfig, rng: np.random.Generator, top: int
) -> np.ndarray:
    if not (0.0 < config.alpha < top):
        raise ValueError(
            "sample-from-invariant needs a supply with a bounded steady state"
        )
    eta = invariant_distribution(Protocol(config.alpha, config.strategy)).eta
    holdings = rng.choice(len(eta), size=config.n_agents, p=eta).astype(np.int64)
    # repair the draw so the endowment is exact
    diff = config.total_tokens - int(holdings.sum())
    while diff != 0:
        step = 1 if diff > 0 else -1
        room = np.flatnonzero(holdings < top) if step > 0 else np.flatnonzero(holdings > 0)
        take = min(abs(diff), len(room))
        holdings[rng.choice(room, size=take, replace=False)] += step
        diff -= step * take
    return holdings


def _analytic_eta(config: SimConfig) -> np.ndarray | None:
    top = config.strategy.max_support
    if config.alpha == 0.0:
        return np.array([1.0])
    if 0.0 < config.alpha < top:
        return invariant_distribution(Protocol(config.alpha, config.strategy)).eta
    return None  # unbounded transient; nothing to compare against


def run_simulation(config: SimConfig, stream: IO[str] | None = None) -> SimReport:
    """Simulate the community and report convergence diagnostics.

    ``stream`` optionally receives per-step CSV rows ``t,trades,eta0,etaK``
    (fractions at holding 0 and at the top threshold).
    """
    n = config.n_agents
    top = config.strategy.max_support
    total = config.total_tokens
    if total > top * n:
        raise InfeasibleAllocation(
            f"{total} tokens cannot sit below threshold {top} across {n} agents"
        )
    rng = np.random.default_rng(config.seed)
    thresholds = _assign_thresholds(config.strategy, n)
    if config.init_mode == INIT_SPREAD:
        holdings = _spread_holdings(total, n)
    else:
        holdings = _sample_holdings(config, rng, top)

    pairs = math.floor(config.rho * n + 1e-9)
    hist_len = max(top, int(holdings.max())) + 1
    hist = np.zeros(hist_len, dtype=np.int64)
    post_steps = config.steps - config.burn_in
    conserved = True
    trades_total = 0
    trades_post = 0

    if stream is not None:
        stream.write("t,trades,eta0,etaK\n")

    for t in range(config.steps):
        perm = rng.permutation(n)
        clients = perm[:pairs]
        servers = perm[pairs : 2 * pairs]
        trade = (holdings[clients] >= 1) & (holdings[servers] < thresholds[servers])
        # permutation indices are distinct, so plain fancy indexing is safe
        holdings[clients[trade]] -= 1
        holdings[servers[trade]] += 1
        t_count = int(trade.sum())
        trades_total += t_count
        if holdings.sum() != total:
            conserved = False  # pragma: no cover - transfers cannot break this
        if t >= config.burn_in:
            hist += np.bincount(holdings, minlength=hist_len)
            trades_post += t_count
        if stream is not None:
            eta0 = float(np.count_nonzero(holdings == 0)) / n
            eta_top = float(np.count_nonzero(holdings == top)) / n
            stream.write(f"{t},{t_count},{eta0:.12g},{eta_top:.12g}\n")

    empirical = hist / (n * post_steps)
    target = _analytic_eta(config)
    if target is None:
        l1 = math.nan
    else:
        width = max(len(empirical), len(target))
        pe = np.zeros(width)
        pt = np.zeros(width)
        pe[: len(empirical)] = empirical
        pt[: len(target)] = target
        l1 = float(np.abs(pe - pt).sum())
    eff = trades_post / (pairs * post_steps) if pairs > 0 else 0.0
    return SimReport(
        empirical_eta=empirical,
        l1_distance_to_invariant=l1,
        empirical_efficiency=eff,
        trades=trades_total,
        token_conservation_check=conserved,
        seed=config.seed,
    )


@dataclass(frozen=True)
class DeviationEstimate:
    """Monte Carlo discounted payoff of a single deviant."""

    mean: float
    std_error: float
    replications: int
    horizon: int

    def dominates(self, other: "DeviationEstimate", z: float = 2.0) -> bool:
        """Weak dominance within z combined standard errors."""
        gap_se = math.hypot(self.std_error, other.std_error)
        return self.mean >= other.mean - z * gap_se


def deviation_payoff_estimate(
    config: SimConfig,
    params: PopulationParams,
    deviant_threshold: int,
    horizon: int,
    replications: int,
) -> DeviationEstimate:
    """Discounted payoff of one agent playing ``deviant_threshold`` while the
    population holds the protocol's steady state.

    The deviant starts from a holding drawn from the invariant distribution
    and meets willing servers with probability 1 - nu and paying clients with
    probability 1 - mu, the aggregates any single agent faces at the steady
    state.  With the compliant threshold this estimates the eta-weighted
    average of the value function.
    """
    if deviant_threshold < 0:
        raise ValueError("deviant threshold must be non-negative")
    if horizon < 0 or replications < 1:
        raise ValueError("need horizon >= 0 and replications >= 1")
    if config.rho != params.rho:
        raise ValueError(
            f"config.rho={config.rho} and params.rho={params.rho} disagree; "
            "the matching rate is one physical constant"
        )
    steady = invariant_distribution(Protocol(config.alpha, config.strategy))
    rho, beta, b, c = params.rho, params.beta, params.b, params.c
    rng = np.random.default_rng(config.seed)

    holdings = rng.choice(len(steady.eta), size=replications, p=steady.eta)
    payoff = np.zeros(replications)
    disc = 1.0
    for _ in range(horizon):
        role = rng.random(replications)
        partner = rng.random(replications)
        buys = (role < rho) & (partner < 1.0 - steady.nu) & (holdings >= 1)
        serves = (
            (role >= rho)
            & (role < 2.0 * rho)
            & (partner < 1.0 - steady.mu)
            & (holdings < deviant_threshold)
        )
        payoff += disc * (b * buys - c * serves)
        holdings += serves.astype(np.int64) - buys.astype(np.int64)
        disc *= beta
    mean = float(payoff.mean())
    se = float(payoff.std(ddof=1) / math.sqrt(replications)) if replications > 1 else 0.0
    return DeviationEstimate(
        mean=mean, std_error=se, replications=replications, horizon=horizon
    )


def compliance_value(config: SimConfig, params: PopulationParams) -> float:
    """Analytic eta-weighted value of following the protocol's own pure
    threshold; the convergence target for the compliant deviation estimate."""
    K = config.strategy.pure_threshold
    steady = invariant_distribution(Protocol(config.alpha, config.strategy))
    v = solve_values(K, params, steady).V
    return float(steady.eta @ v[: len(steady.eta)])
