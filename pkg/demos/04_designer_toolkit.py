"""
The designer's search for a good protocol
=========================================

Efficiency -- the fraction of matches that actually trade -- is capped at
(K/(K+1))^2 for any protocol with threshold K, and the canonical supply K/2
attains the cap.  But the canonical protocol is only usable where it is an
equilibrium, and every equilibrium threshold lies inside closed-form bounds
[K_L, K_H].  Bisection over that bracket finds an equilibrium threshold in a
handful of marginal-utility checks; a grid search then shows the canonical
supply is often *not* optimal: a higher threshold with fewer tokens can trade
strictly more.  Hard-wiring the wrong threshold, by contrast, is disastrous.

Writes fig3.csv / fig4.csv next to this script (and PNGs when matplotlib is
importable).
"""

from pathlib import Path

import numpy as np

from token_lab import (
    PopulationParams,
    bisection_design,
    efficiency_bounds,
    fixed_threshold_sweep,
    optimal_efficiency_sweep,
    optimal_protocol_search,
    threshold_bounds,
)
from token_lab.serialize import csv_lines

HERE = Path(__file__).resolve().parent

params = PopulationParams.from_ratio(rho=0.5, beta=0.93, r=2.0)

tb = threshold_bounds(params)
print(f"all equilibrium thresholds lie in [{tb.K_L:.3f}, {tb.K_H:.3f}]")

result = bisection_design(params)
print(f"bisection: K*={result.K_star}, alpha*={result.alpha_star}, "
      f"Eff={result.efficiency:.4f} in {result.iterations} checks")
for k, sl, sh, tag in result.trail:
    print(f"  checked K={k}: slacks ({sl:+.3f}, {sh:+.3f}) -> {tag}")

search = optimal_protocol_search(params, alpha_steps=200)
print(f"\ngrid search: best protocol alpha={search.best.alpha:.3f}, "
      f"K={search.best.K}, Eff={search.best.efficiency:.4f}")
print(f"best canonical protocol: {search.best_canonical}")
ua, uk = efficiency_bounds(search.best.alpha, search.best.K)
print(f"upper bounds at the optimum: supply cap {ua:.4f}, threshold cap {uk:.4f}")

# --- efficiency of the optimum vs the canonical family across patience ----

betas = np.linspace(0.75, 0.97, 45)
fig3 = optimal_efficiency_sweep(0.5, 2.0, betas, alpha_steps=120)
(HERE / "fig3.csv").write_text(
    csv_lines(("beta", "K_star", "alpha_star", "eff_opt", "eff_piK"), fig3)
)
gaps = [row[3] - row[4] for row in fig3]
print(f"\nwrote fig3.csv; max optimal-vs-canonical gap = {max(gaps):.4f}")

fig4 = fixed_threshold_sweep(0.5, 2.0, betas, fixed_K=3, alpha_steps=120)
(HERE / "fig4.csv").write_text(csv_lines(("beta", "eff_opt", "eff_fixedK"), fig4))
losses = [row[1] - row[2] for row in fig4]
print(f"wrote fig4.csv; hard-wiring K=3 loses up to {max(losses):.4f} efficiency")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(11, 4), sharey=True)
    b3 = [row[0] for row in fig3]
    axes[0].plot(b3, [row[3] for row in fig3], lw=1.2, label="optimal protocol")
    axes[0].plot(b3, [row[4] for row in fig3], lw=2.4, alpha=0.6,
                 label="best canonical (supply K/2)")
    axes[0].set(xlabel="discount factor", ylabel="efficiency",
                title="optimal vs canonical")
    axes[0].legend()
    axes[1].plot(b3, [row[1] for row in fig4], lw=1.2, label="optimal protocol")
    axes[1].plot(b3, [row[2] for row in fig4], lw=2.4, alpha=0.6,
                 label="threshold fixed at 3")
    axes[1].set(xlabel="discount factor", title="the cost of a hard-wired threshold")
    axes[1].legend()
    fig.tight_layout()
    fig.savefig(HERE / "designer_curves.png", dpi=120)
    print("wrote designer_curves.png")
except ImportError:
    print("matplotlib not available; skipped the plot")
