"""
Token distributions in steady state
===================================

A community of anonymous agents trades one service for one token.  Once the
designer fixes a per-capita token supply alpha and a serving threshold K, the
distribution of token holdings settles into a unique fixed point.  This script
shows the three facts everything else builds on:

1. supplying exactly K/2 tokens per head makes holdings exactly uniform,
2. any other supply tilts the distribution geometrically,
3. the two "friction" fractions mu (broke clients) and nu (saturated servers)
   always satisfy the balance identity mu*(1-mu)^K = nu*(1-nu)^K.
"""

import numpy as np

from token_lab import (
    PopulationStrategy,
    Protocol,
    invariant_distribution,
    one_step_update,
)

# --- the canonical protocol: supply K/2, threshold K --------------------

for k in (1, 4, 9):
    steady = invariant_distribution(Protocol.pi_k(k))
    print(f"Pi_{k}: eta = {np.round(steady.eta, 4)}  (uniform on 0..{k})")

# --- tilting the supply --------------------------------------------------

print("\nThreshold K=6, sweeping the supply:")
for alpha in (1.0, 2.0, 3.0, 4.0, 5.0):
    s = invariant_distribution(Protocol(alpha, PopulationStrategy.pure(6)))
    print(
        f"  alpha={alpha:>3}: mu={s.mu:.3f} nu={s.nu:.3f}  "
        f"balance lhs-rhs={s.mu*(1-s.mu)**6 - s.nu*(1-s.nu)**6:+.2e}"
    )
print("scarce tokens push mass to zero holdings (mu up); plentiful tokens")
print("push mass to the threshold (nu up); K/2 balances the two frictions.")

# --- the fixed point really is the long-run outcome ----------------------

proto = Protocol(2.5, PopulationStrategy.pure(6))
target = invariant_distribution(proto).eta
eta = np.zeros(7)
eta[0], eta[6] = 1 - 2.5 / 6, 2.5 / 6  # extreme start with the right mean
print("\nsup-norm distance to the invariant distribution while iterating:")
for t in range(1, 201):
    eta = one_step_update(eta, proto.strategy, rho=0.5)[:7]
    if t in (1, 5, 20, 80, 200):
        print(f"  after {t:>3} periods: {np.max(np.abs(eta - target)):.2e}")
