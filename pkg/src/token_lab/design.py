"""Designer-side tools: efficiency, threshold bounds, bisection search for an
equilibrium threshold, and grid search for the most efficient protocol.

Efficiency of a protocol is the fraction of matches in which trade actually
happens, Eff = (1 - mu)(1 - nu), relative to the first best where every match
trades.  The canonical protocol Pi_K (supply K/2, threshold K) has the
uniform invariant distribution and Eff(Pi_K) = (K/(K+1))^2, which caps any
protocol using threshold K; a supply cap gives Eff <= 1 - 1/(2*ceil(alpha)+1).

Every threshold whose canonical protocol is a robust equilibrium lies inside
closed-form bounds [K_L, K_H] driven by the geometric growth/decay of the
marginals, which shrinks the designer's search to a finite range.  Inside the
range, one midpoint check per step suffices: if the climbing condition
M(K-1) >= c/beta fails at K, it fails for every larger threshold; if the
stopping condition M(K) <= c/beta fails, it fails for every smaller one, so
the equilibrium thresholds form a contiguous run and bisection lands on one
in at most ceil(log2(K_H - K_L)) + 1 checks.

The canonical supply K/2 need not be optimal: the grid search below often
finds a higher threshold with fewer tokens strictly more efficient.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .equilibrium import (
    CLASS_TOL,
    EquilibriumClass,
    EquilibriumReport,
    check_equilibrium,
    classify,
    mixed_equilibrium_weight,
)
from .errors import NoEquilibriumFound
from .population import (
    PopulationParams,
    PopulationStrategy,
    Protocol,
    SteadyState,
    invariant_distribution,
)
from .values import solve_marginals

DEFAULT_ALPHA_STEPS = 200


def efficiency(steady: SteadyState) -> float:
    """Fraction of matches that trade: (1 - mu)(1 - nu)."""
    return (1.0 - steady.mu) * (1.0 - steady.nu)


def efficiency_bounds(alpha: float, K: int) -> tuple[float, float]:
    """Upper bounds (supply-driven, threshold-driven) on Eff(alpha, K)."""
    if alpha <= 0 or K < 1:
        raise ValueError("need alpha > 0 and K >= 1")
    upper_alpha = 1.0 - 1.0 / (2.0 * math.ceil(alpha) + 1.0)
    upper_k = (K / (K + 1.0)) ** 2
    return upper_alpha, upper_k


@dataclass(frozen=True)
class ThresholdBounds:
    """Real-valued bracket containing every robust-equilibrium threshold."""

    K_L: float
    K_H: float

    @property
    def integer_range(self) -> range:
        lo = max(1, math.ceil(self.K_L))
        hi = math.floor(self.K_H)
        return range(lo, hi + 1)

    def as_dict(self) -> dict:
        return {"K_L": self.K_L, "K_H": self.K_H}


def threshold_bounds(params: PopulationParams) -> ThresholdBounds:
    """Closed-form bracket [K_L, K_H] for robust canonical protocols.

    Both logarithm bases and arguments lie in (0, 1), so both logs are
    positive; K_L is floored at 0.
    """
    rho, beta, r = params.rho, params.beta, params.r
    base_low = rho * beta / (2.0 * (1.0 - beta) + 2.0 * rho * beta)
    base_high = rho * beta / (1.0 - beta + rho * beta)
    k_low = math.log(1.0 / (1.0 + r)) / math.log(base_low) - 1.0
    k_high = math.log(1.0 / (2.0 * r)) / math.log(base_high)
    return ThresholdBounds(K_L=max(k_low, 0.0), K_H=k_high)


@dataclass(frozen=True)
class DesignResult:
    """Outcome of the designer's bisection over canonical protocols."""

    K_star: int
    alpha_star: float
    efficiency: float
    iterations: int
    trail: tuple[tuple[int, float, float, str], ...]  # (K, slack_low, slack_high, class)
    bounds: ThresholdBounds

    def as_dict(self) -> dict:
        return {
            "K_star": self.K_star,
            "alpha_star": self.alpha_star,
            "efficiency": self.efficiency,
            "iterations": self.iterations,
            "K_L": self.bounds.K_L,
            "K_H": self.bounds.K_H,
            "trail": [
                {"K": k, "slack_low": sl, "slack_high": sh, "class": tag}
                for k, sl, sh, tag in self.trail
            ],
        }


def _canonical_slacks(
    K: int, params: PopulationParams
) -> tuple[float, float, SteadyState]:
    steady = invariant_distribution(Protocol.pi_k(K))
    m = solve_marginals(K, params, steady).M
    bar = params.c / params.beta
    return m[K - 1] - bar, bar - m[K], steady


def bisection_design(params: PopulationParams, tol: float = CLASS_TOL) -> DesignResult:
    """Find an equilibrium canonical protocol by bisecting on the threshold.

    Midpoints are integers inside [K_L, K_H]; a failed climbing condition
    discards everything to the right, a failed stopping condition everything
    to the left.  The final candidate is re-checked through the ordinary
    classifier.  Raises NoEquilibriumFound when the integer range is empty or
    the run of equilibrium thresholds misses it (the bracket is necessary,
    not sufficient).
    """
    bounds = threshold_bounds(params)
    rng = bounds.integer_range
    lo, hi = rng.start, rng.stop - 1
    iterations = 0
    trail: list[tuple[int, float, float, str]] = []
    while lo <= hi:
        K = (lo + hi) // 2
        iterations += 1
        slack_low, slack_high, _ = _canonical_slacks(K, params)
        tag = classify(slack_low, slack_high, tol)
        trail.append((K, slack_low, slack_high, tag.value))
        if tag is not EquilibriumClass.NOT_EQUILIBRIUM:
            report = check_equilibrium(Protocol.pi_k(K), params, tol)
            if not report.is_equilibrium:  # pragma: no cover - same computation
                break
            return DesignResult(
                K_star=K,
                alpha_star=K / 2.0,
                efficiency=(K / (K + 1.0)) ** 2,
                iterations=iterations,
                trail=tuple(trail),
                bounds=bounds,
            )
        if slack_low < -tol:
            hi = K - 1  # no larger threshold can satisfy the climbing condition
        else:
            lo = K + 1  # no smaller threshold can satisfy the stopping condition
    raise NoEquilibriumFound(
        f"no equilibrium threshold in [{bounds.K_L:.4g}, {bounds.K_H:.4g}] at "
        f"rho={params.rho}, beta={params.beta}, r={params.r}"
    )


def exhaustive_scan(
    params: PopulationParams, K_max: int | None = None, tol: float = CLASS_TOL
) -> dict[int, EquilibriumReport]:
    """Classify the canonical protocol for every threshold up to K_max
    (default: a little beyond the upper bound).  Oracle for the bisection."""
    if K_max is None:
        K_max = math.ceil(threshold_bounds(params).K_H) + 5
    out: dict[int, EquilibriumReport] = {}
    for K in range(1, K_max + 1):
        slack_low, slack_high, _ = _canonical_slacks(K, params)
        out[K] = EquilibriumReport(classify(slack_low, slack_high, tol), slack_low, slack_high)
    return out


@dataclass(frozen=True)
class ProtocolChoice:
    alpha: float
    K: int
    efficiency: float

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "K": self.K, "efficiency": self.efficiency}


@dataclass(frozen=True)
class SearchResult:
    """Best robust protocol overall and best robust canonical protocol."""

    best: ProtocolChoice
    best_canonical: ProtocolChoice | None

    def as_dict(self) -> dict:
        return {
            "best": self.best.as_dict(),
            "best_pi_k": None
            if self.best_canonical is None
            else self.best_canonical.as_dict(),
        }


def _robust_efficiency(
    alpha: float, K: int, params: PopulationParams, tol: float
) -> float | None:
    steady = invariant_distribution(Protocol(alpha, PopulationStrategy.pure(K)))
    m = solve_marginals(K, params, steady).M
    bar = params.c / params.beta
    if classify(m[K - 1] - bar, bar - m[K], tol) is EquilibriumClass.ROBUST:
        return efficiency(steady)
    return None


def optimal_protocol_search(
    params: PopulationParams,
    alpha_steps: int = DEFAULT_ALPHA_STEPS,
    K_range: Iterable[int] | None = None,
    tol: float = CLASS_TOL,
) -> SearchResult:
    """Grid search for the most efficient robust equilibrium protocol.

    For each threshold K the supply grid is alpha = j*K/alpha_steps,
    j = 1..alpha_steps-1; only robust classifications count.  Ties break
    toward smaller K, then smaller alpha (iteration order does that).  The
    upper threshold bound applies to any robust protocol, canonical or not,
    so the default K range stops there.
    """
    bounds = threshold_bounds(params)
    if K_range is None:
        K_range = range(1, max(1, math.floor(bounds.K_H)) + 1)
    best: ProtocolChoice | None = None
    best_canonical: ProtocolChoice | None = None
    for K in K_range:
        for j in range(1, alpha_steps):
            alpha = j * K / alpha_steps
            eff = _robust_efficiency(alpha, K, params, tol)
            if eff is None:
                continue
            if best is None or eff > best.efficiency:
                best = ProtocolChoice(alpha=alpha, K=K, efficiency=eff)
            if alpha == K / 2.0 and (
                best_canonical is None or eff > best_canonical.efficiency
            ):
                best_canonical = ProtocolChoice(alpha=alpha, K=K, efficiency=eff)
    if best is None:
        raise NoEquilibriumFound(
            f"no robust equilibrium protocol at rho={params.rho}, "
            f"beta={params.beta}, r={params.r}"
        )
    return SearchResult(best=best, best_canonical=best_canonical)


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("TOKEN_LAB_THREADS", "1")))
    except ValueError:
        return 1


def grid_map(fn: Callable, cells: Sequence) -> list:
    """Apply fn to every grid cell, optionally across TOKEN_LAB_THREADS
    worker threads; results keep the grid order regardless of scheduling."""
    n = min(_thread_count(), max(1, len(cells)))
    if n == 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, cells))


def canonical_classification_grid(
    rho: float,
    betas: Sequence[float],
    rs: Sequence[float],
    k_max: int = 10,
    tol: float = CLASS_TOL,
) -> list[tuple[float, float, int, str, float, float]]:
    """Rows (beta, r, K, class, slack_low, slack_high) classifying the
    canonical protocol Pi_K over a parameter grid."""

    def one_cell(cell: tuple[float, float]) -> list:
        beta, r = cell
        params = PopulationParams.from_ratio(rho, beta, r)
        rows = []
        for K in range(1, k_max + 1):
            slack_low, slack_high, _ = _canonical_slacks(K, params)
            tag = classify(slack_low, slack_high, tol)
            rows.append((beta, r, K, tag.value, slack_low, slack_high))
        return rows

    cells = [(float(b), float(r)) for b in betas for r in rs]
    return [row for chunk in grid_map(one_cell, cells) for row in chunk]


def bounds_grid(
    rhos: Sequence[float], betas: Sequence[float], rs: Sequence[float]
) -> list[tuple[float, float, float, float, float]]:
    """Rows (rho, beta, r, K_L, K_H) of the threshold bracket over a grid."""
    rows = []
    for rho in rhos:
        for beta in betas:
            for r in rs:
                tb = threshold_bounds(PopulationParams.from_ratio(rho, beta, r))
                rows.append((float(rho), float(beta), float(r), tb.K_L, tb.K_H))
    return rows


def efficiency_grid(
    rho: float,
    betas: Sequence[float],
    rs: Sequence[float],
    alpha_steps: int = DEFAULT_ALPHA_STEPS,
    tol: float = CLASS_TOL,
) -> list[tuple[float, float, int, float, float, float]]:
    """Rows (beta, r, K_star, alpha_star, eff_opt, eff_piK): the optimal-vs-
    canonical comparison across a full (beta, r) grid."""
    rows = []
    for r in rs:
        for beta, k_star, alpha_star, eff_opt, eff_pik in optimal_efficiency_sweep(
            rho, float(r), betas, alpha_steps, tol
        ):
            rows.append((beta, float(r), k_star, alpha_star, eff_opt, eff_pik))
    return rows


def classification_sweep(
    alpha: float,
    rho: float,
    r: float,
    betas: Sequence[float],
    k_max: int = 10,
    tol: float = CLASS_TOL,
) -> list[tuple[float, int, str, float]]:
    """Rows (beta, K, class, mix_weight) for a fixed supply alpha.

    Thresholds K <= alpha are skipped (no bounded steady state).  mix_weight
    is the equilibrium weight on K+1 adjacent to K, NaN when none exists.
    """
    thresholds = [K for K in range(1, k_max + 1) if alpha < K]

    def one_beta(beta: float) -> list[tuple[float, int, str, float]]:
        params = PopulationParams.from_ratio(rho, beta, r)
        rows = []
        for K in thresholds:
            report = check_equilibrium(
                Protocol(alpha, PopulationStrategy.pure(K)), params, tol
            )
            w = mixed_equilibrium_weight(alpha, K, params, tol)
            rows.append((beta, K, report.tag.value, math.nan if w is None else w))
        return rows

    return [row for chunk in grid_map(one_beta, list(betas)) for row in chunk]


def optimal_efficiency_sweep(
    rho: float,
    r: float,
    betas: Sequence[float],
    alpha_steps: int = DEFAULT_ALPHA_STEPS,
    tol: float = CLASS_TOL,
) -> list[tuple[float, int, float, float, float]]:
    """Rows (beta, K_star, alpha_star, eff_opt, eff_piK): best robust
    protocol vs best robust canonical protocol.  Zeros mark betas where no
    robust equilibrium exists (the community stays at the no-trade outcome).
    """

    def one_beta(beta: float) -> tuple[float, int, float, float, float]:
        params = PopulationParams.from_ratio(rho, beta, r)
        try:
            res = optimal_protocol_search(params, alpha_steps, tol=tol)
        except NoEquilibriumFound:
            return (beta, 0, 0.0, 0.0, 0.0)
        eff_pik = 0.0 if res.best_canonical is None else res.best_canonical.efficiency
        return (beta, res.best.K, res.best.alpha, res.best.efficiency, eff_pik)

    return grid_map(one_beta, list(betas))


def fixed_threshold_sweep(
    rho: float,
    r: float,
    betas: Sequence[float],
    fixed_K: int = 3,
    alpha_steps: int = DEFAULT_ALPHA_STEPS,
    tol: float = CLASS_TOL,
) -> list[tuple[float, float, float]]:
    """Rows (beta, eff_opt, eff_fixedK): the cost of hard-wiring a threshold.

    eff_fixedK is the best robust protocol constrained to threshold fixed_K
    (supply free), 0 where no such equilibrium exists.
    """

    def one_beta(beta: float) -> tuple[float, float, float]:
        params = PopulationParams.from_ratio(rho, beta, r)
        try:
            eff_opt = optimal_protocol_search(params, alpha_steps, tol=tol).best.efficiency
        except NoEquilibriumFound:
            eff_opt = 0.0
        eff_fixed = 0.0
        for j in range(1, alpha_steps):
            eff = _robust_efficiency(j * fixed_K / alpha_steps, fixed_K, params, tol)
            if eff is not None and eff > eff_fixed:
                eff_fixed = eff
        return (beta, eff_opt, eff_fixed)

    return grid_map(one_beta, list(betas))
