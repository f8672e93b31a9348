"""Walkthrough: certifying decay bounds for the quadratic difference inequality

    g[n+1] <= g[n]*(1 - h*gamma) + alpha*h*g[n]^2 + h*beta.

A positive non-decreasing sequence mu certifies g[n] <= 1/mu[n] when the
start and the coefficient conditions hold.  The worst-case trajectory
(iterating with equality) gives an independent cross-check.
"""

import numpy as np

from ineqsolve import (
    Majorant,
    Schedule,
    certify_discrete,
    verify_bound,
    worst_case_trajectory,
)

# --- a certified instance: geometric decay --------------------------------
# gamma = 1/2, no quadratic or constant forcing, mu doubling every 2 steps
n = 12
schedule = Schedule(
    alpha=np.zeros(n),
    beta=np.zeros(n),
    gamma=np.full(n, 0.5),
    h=np.ones(n),
)
majorant = Majorant(2.0 ** (np.arange(n + 1) / 4.0))  # grows ~19% per step < gamma
report = certify_discrete(schedule, majorant, g0=1.0)
print("certified:", report.passed)
print("first bounds:", np.round(report.certified_bounds[:5], 4))

trajectory = worst_case_trajectory(schedule, g0=1.0)
print("worst-case trajectory dominated by 1/mu:",
      verify_bound(trajectory, majorant, 1e-12).ok)

# --- the same instance with forcing pushed past the condition -------------
# beta above the per-index ceiling (gamma - growth)/(2 mu) breaks the bound
beta_ceiling = (0.5 - np.diff(majorant.mu) / majorant.mu[:-1]) / (2.0 * majorant.mu[:-1])
broken = Schedule(
    alpha=np.zeros(n),
    beta=1.5 * beta_ceiling,
    gamma=np.full(n, 0.5),
    h=np.ones(n),
)
report = certify_discrete(broken, majorant, g0=1.0)
print("\ninflated beta certified:", report.passed)
print("violated indices:", [v.index for v in report.violations][:6], "...")

# and the violation is real, not an artifact of the conditions: with
# constant mu = 2 and beta = 0.6 the recurrence settles at 1.2 > 1/2
flat = Schedule(alpha=np.zeros(40), beta=np.full(40, 0.6), gamma=np.full(40, 0.5))
flat_mu = Majorant(np.full(41, 2.0))
trajectory = worst_case_trajectory(flat, g0=0.5)
check = verify_bound(trajectory, flat_mu, 1e-12)
print("\nflat-mu fixed point:", round(trajectory[-1], 6),
      "exceeds 1/mu =", 1.0 / flat_mu.mu[0], "first violation at n =", check.first_violation)
