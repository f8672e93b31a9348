"""Walkthrough: the continuous-time certificate for

    dg/dt <= -gamma(t) g + alpha(t) g^2 + beta(t).

With gamma = 1, beta = exp(-t/2)/8 and mu = exp(t/2), the conditions hold
with a factor-2 margin, and the integrated equality ODE stays below the
certified envelope 1/mu = exp(-t/2) everywhere.
"""

import math

import numpy as np

from ineqsolve import ContinuousInstance, certify_continuous

instance = ContinuousInstance(
    alpha=lambda t: 0.0,
    beta=lambda t: math.exp(-t / 2.0) / 8.0,
    gamma=lambda t: 1.0,
    mu=lambda t: math.exp(t / 2.0),
    mu_dot=lambda t: 0.5 * math.exp(t / 2.0),
    t0=0.0,
    T=10.0,
    g0=0.5,
)
cert = certify_continuous(instance, grid_points=2001)
print("conditions pass:", cert.conditions.passed)
print("integrated bound holds:", cert.bound_ok)

# closed form for this right-hand side: g = e^{-t}/2 + (e^{-t/2} - e^{-t})/4
closed = 0.5 * np.exp(-cert.t) + (np.exp(-cert.t / 2.0) - np.exp(-cert.t)) / 4.0
print("max |rk4 - closed form|:", float(np.max(np.abs(cert.g - closed))))

margin = cert.bound - cert.g
for i in range(0, 2001, 400):
    print(f"  t = {cert.t[i]:5.2f}   g = {cert.g[i]:.6f}   1/mu = {cert.bound[i]:.6f}"
          f"   margin = {margin[i]:.6f}")

# a certificate that grows faster than gamma allows is rejected up front:
# with mu = exp(2t) the condition headroom gamma - mu'/mu = -1 is negative
fast = ContinuousInstance(
    alpha=instance.alpha,
    beta=instance.beta,
    gamma=instance.gamma,
    mu=lambda t: math.exp(2.0 * t),
    mu_dot=lambda t: 2.0 * math.exp(2.0 * t),
    t0=0.0,
    T=10.0,
    g0=0.5,
)
rejected = certify_continuous(fast, grid_points=201)
print("\nfast-growing mu certified:", rejected.conditions.passed,
      "| violations:", len(rejected.conditions.violations),
      "| bound asserted:", rejected.bound_checked)
