"""Decay certificates for a quadratic difference inequality and its ODE analog.

The discrete object is the recurrence inequality

    g[n+1] <= g[n]*(1 - h[n]*gamma[n]) + alpha[n]*h[n]*g[n]**2 + h[n]*beta[n]

with step sizes h[n] > 0, damping 0 < h[n]*gamma[n] < 1 and non-negative
coefficients alpha, beta.  A positive non-decreasing sequence mu certifies
the decay bound g[n] <= 1/mu[n] for *every* sequence satisfying the
inequality, provided

    g[0]     <= 1/mu[0]                                          (C-g0)
    alpha[n] <= mu[n]/2 * (gamma[n] - dmu[n]/(mu[n]*h[n]))        (C-alpha)
    beta[n]  <= 1/(2*mu[n]) * (gamma[n] - dmu[n]/(mu[n]*h[n]))    (C-beta)

where dmu[n] = mu[n+1] - mu[n].  :func:`certify_discrete` checks the
conditions, :func:`worst_case_trajectory` iterates the inequality with
equality (which dominates every admissible sequence), and
:func:`verify_bound` compares the two -- an independent cross-check of any
issued certificate.  :func:`certify_corollary` is the unit-step (h = 1)
specialization.

The continuous counterpart treats dg/dt <= -gamma(t)*g + alpha(t)*g^2 +
beta(t); :func:`certify_continuous` checks the analogous conditions on a
grid and integrates the equality ODE with a fixed-step classical
fourth-order scheme.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import InputError

#: Relative grace applied to every condition comparison, so that exact
#: equality cases (boundary-tight instances) certify deterministically.
EPS_CERT = 1e-12

C_G0 = "C-g0"
C_ALPHA = "C-alpha"
C_BETA = "C-beta"
C_SIDE = "C-side"

_CONDITION_ORDER = {C_G0: 0, C_SIDE: 1, C_ALPHA: 2, C_BETA: 3}


def _as_vector(name, values, length=None, min_length=1):
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise InputError(f"{name} needs at least {min_length} entries, got {arr.size}")
    if length is not None and arr.size != length:
        raise InputError(f"{name} has length {arr.size}, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


def _as_g0(g0):
    g0 = float(g0)
    if not math.isfinite(g0) or g0 < 0:
        raise InputError(f"g0 must be a non-negative finite real, got {g0}")
    return g0


@dataclass(frozen=True, eq=False)
class Schedule:
    """Coefficient sequences (alpha, beta, gamma, h) of the difference inequality.

    Construction checks signs, matching lengths and finiteness.  The open
    side condition 0 < h[n]*gamma[n] < 1 is deliberately *not* enforced
    here, so that failing instances remain representable: the certifiers
    report it per index as ``C-side``, while file loaders reject it up
    front (see :func:`inequality_from_dict`).

    ``h=None`` means unit steps throughout (the corollary form).
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    h: np.ndarray | None = None

    def __post_init__(self):
        alpha = _as_vector("alpha", self.alpha)
        n = alpha.size
        beta = _as_vector("beta", self.beta, length=n)
        gamma = _as_vector("gamma", self.gamma, length=n)
        h = np.ones(n) if self.h is None else _as_vector("h", self.h, length=n)
        if np.any(alpha < 0):
            raise InputError("alpha must be non-negative")
        if np.any(beta < 0):
            raise InputError("beta must be non-negative")
        if np.any(h <= 0):
            raise InputError("h must be positive")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "h", h)

    @property
    def length(self) -> int:
        return self.alpha.size

    def side_condition_ok(self) -> np.ndarray:
        """Boolean mask of indices with 0 < h[n]*gamma[n] < 1."""
        prod = self.h * self.gamma
        return (prod > 0.0) & (prod < 1.0)


@dataclass(frozen=True, eq=False)
class Majorant:
    """Positive non-decreasing certificate sequence mu (one entry per bound index)."""

    mu: np.ndarray

    def __post_init__(self):
        mu = _as_vector("mu", self.mu)
        if np.any(mu <= 0):
            raise InputError("mu must be positive")
        if np.any(np.diff(mu) < 0):
            raise InputError("mu must be non-decreasing")
        object.__setattr__(self, "mu", mu)

    def __len__(self) -> int:
        return self.mu.size

    @property
    def bounds(self) -> np.ndarray:
        """The certified bounds 1/mu."""
        return 1.0 / self.mu

    def constant_suffix_start(self) -> int | None:
        """Start index of a trailing constant run of length >= 2, if any.

        A constant suffix means the certified bound stops decaying there.
        """
        mu = self.mu
        if mu.size < 2 or mu[-1] > mu[-2]:
            return None
        rises = np.nonzero(np.diff(mu) > 0)[0]
        return 0 if rises.size == 0 else int(rises[-1]) + 1


@dataclass(frozen=True)
class Violation:
    """One failed condition: the index, the condition id, and both sides."""

    index: int
    condition: str
    lhs: float
    rhs: float

    def to_dict(self):
        return {
            "index": self.index,
            "condition": self.condition,
            "lhs": self.lhs,
            "rhs": self.rhs,
        }


@dataclass(eq=False)
class CertificateReport:
    """Outcome of a condition check; ``passed`` iff ``violations`` is empty."""

    passed: bool
    violations: list
    certified_bounds: np.ndarray | None = None
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return {
            "passed": self.passed,
            "violations": [v.to_dict() for v in self.violations],
            "certified_bounds": (
                None if self.certified_bounds is None else [float(b) for b in self.certified_bounds]
            ),
            "warnings": list(self.warnings),
        }


def _make_report(violations, majorant):
    violations.sort(key=lambda v: (v.index, _CONDITION_ORDER[v.condition]))
    warnings = []
    start = majorant.constant_suffix_start()
    if start is not None:
        warnings.append(
            f"mu is constant from index {start}; the certified bound stops decaying there"
        )
    passed = not violations
    bounds = majorant.bounds.copy() if passed else None
    return CertificateReport(passed, violations, bounds, warnings)


def certify_discrete(schedule: Schedule, majorant: Majorant, g0: float) -> CertificateReport:
    """Check the decay-certificate conditions for a discrete instance.

    Parameters
    ----------
    schedule : Schedule
        Coefficients (alpha, beta, gamma, h), N entries each.
    majorant : Majorant
        Candidate bound sequence mu, N+1 entries.
    g0 : float
        Non-negative starting value of the dominated sequence.

    Returns
    -------
    CertificateReport
        ``passed`` guarantees g[n] <= 1/mu[n] for 0 <= n <= N for every
        sequence satisfying the inequality from g0.  Violations carry one
        of the condition ids ``C-g0``, ``C-alpha``, ``C-beta``, ``C-side``.

    Notes
    -----
    All comparisons allow a relative grace of ``EPS_CERT`` so boundary-tight
    instances certify.  A condition right-hand side may be negative when mu
    grows faster than gamma admits; non-negative alpha/beta then fail the
    comparison and are reported as ordinary C-alpha/C-beta violations.
    """
    n = schedule.length
    if len(majorant) != n + 1:
        raise InputError(
            f"majorant length {len(majorant)} does not match schedule length + 1 = {n + 1}"
        )
    g0 = _as_g0(g0)

    mu = majorant.mu
    lo = mu[:-1]
    growth = (mu[1:] - lo) / (lo * schedule.h)
    headroom = schedule.gamma - growth
    rhs_alpha = 0.5 * lo * headroom
    rhs_beta = headroom / (2.0 * lo)

    violations = []
    bound0 = 1.0 / mu[0]
    if g0 > bound0 + EPS_CERT * max(1.0, abs(bound0)):
        violations.append(Violation(0, C_G0, g0, float(bound0)))

    side_prod = schedule.h * schedule.gamma
    for i in np.nonzero(~schedule.side_condition_ok())[0]:
        violations.append(Violation(int(i), C_SIDE, float(side_prod[i]), 1.0))
    tol_alpha = EPS_CERT * np.maximum(1.0, np.abs(rhs_alpha))
    for i in np.nonzero(schedule.alpha > rhs_alpha + tol_alpha)[0]:
        violations.append(Violation(int(i), C_ALPHA, float(schedule.alpha[i]), float(rhs_alpha[i])))
    tol_beta = EPS_CERT * np.maximum(1.0, np.abs(rhs_beta))
    for i in np.nonzero(schedule.beta > rhs_beta + tol_beta)[0]:
        violations.append(Violation(int(i), C_BETA, float(schedule.beta[i]), float(rhs_beta[i])))

    return _make_report(violations, majorant)


def certify_corollary(schedule: Schedule, majorant: Majorant, g0: float) -> CertificateReport:
    """Unit-step specialization: requires h identically 1.

    Agrees bit for bit with :func:`certify_discrete` on h == 1 inputs (the
    same code path runs; dividing by h = 1 is exact).
    """
    if not np.all(schedule.h == 1.0):
        raise InputError("certify_corollary requires h identically equal to 1")
    return certify_discrete(schedule, majorant, g0)


def worst_case_trajectory(schedule: Schedule, g0: float) -> np.ndarray:
    """Iterate the inequality with equality, starting from g0.

    The update map x -> x*(1 - h*gamma) + alpha*h*x**2 + h*beta is monotone
    non-decreasing on x >= 0 when 0 < h*gamma < 1, so this trajectory is a
    pointwise upper envelope of every sequence satisfying the inequality
    with the same start.  Returns N+1 values including g0.
    """
    if not np.all(schedule.side_condition_ok()):
        bad = int(np.nonzero(~schedule.side_condition_ok())[0][0])
        raise InputError(
            f"h[{bad}]*gamma[{bad}] = {schedule.h[bad] * schedule.gamma[bad]} "
            "violates 0 < h[n]*gamma[n] < 1"
        )
    g = _as_g0(g0)
    decay = (1.0 - schedule.h * schedule.gamma).tolist()
    quad = (schedule.alpha * schedule.h).tolist()
    const = (schedule.h * schedule.beta).tolist()
    out = np.empty(schedule.length + 1)
    out[0] = g
    for i in range(schedule.length):
        g = g * decay[i] + quad[i] * g * g + const[i]
        out[i + 1] = g
    return out


class BoundCheck(NamedTuple):
    ok: bool
    first_violation: int | None


def verify_bound(trajectory, majorant: Majorant, tol: float) -> BoundCheck:
    """Check trajectory[n] <= 1/mu[n] + tol for all n (non-strict bound).

    Returns the overall verdict and the first violating index, if any.
    Non-finite trajectory entries count as violations.
    """
    traj = np.atleast_1d(np.asarray(trajectory, dtype=float))
    if traj.ndim != 1:
        raise InputError(f"trajectory must be one-dimensional, got shape {traj.shape}")
    if traj.size != len(majorant):
        raise InputError(
            f"trajectory length {traj.size} does not match majorant length {len(majorant)}"
        )
    tol = float(tol)
    if not math.isfinite(tol) or tol < 0:
        raise InputError("tol must be a non-negative finite real")
    bad = (traj > majorant.bounds + tol) | ~np.isfinite(traj)
    if not bad.any():
        return BoundCheck(True, None)
    return BoundCheck(False, int(np.nonzero(bad)[0][0]))


@dataclass
class ContinuousInstance:
    """Time-dependent instance: scalar callables on [t0, T] plus the start value g0.

    ``mu_dot`` is the derivative of ``mu`` and is trusted as supplied.
    """

    alpha: Callable[[float], float]
    beta: Callable[[float], float]
    gamma: Callable[[float], float]
    mu: Callable[[float], float]
    mu_dot: Callable[[float], float]
    t0: float
    T: float
    g0: float

    def __post_init__(self):
        self.t0 = float(self.t0)
        self.T = float(self.T)
        if not (math.isfinite(self.t0) and math.isfinite(self.T)) or self.T <= self.t0:
            raise InputError(f"need finite t0 < T, got t0={self.t0}, T={self.T}")
        self.g0 = _as_g0(self.g0)


@dataclass(eq=False)
class ContinuousCertificate:
    """Condition report plus the integrated equality-ODE samples.

    The decay bound g(t) < 1/mu(t) is asserted on the grid only when the
    conditions pass; ``bound_checked`` records whether that assertion ran.
    """

    conditions: CertificateReport
    t: np.ndarray
    g: np.ndarray
    bound: np.ndarray
    bound_checked: bool
    bound_ok: bool | None
    bound_violations: list

    @property
    def passed(self) -> bool:
        return self.conditions.passed and bool(self.bound_ok)

    def to_dict(self):
        out = self.conditions.to_dict()
        out["bound_checked"] = self.bound_checked
        out["bound_ok"] = self.bound_ok
        out["bound_violations"] = list(self.bound_violations)
        out["passed"] = self.passed
        return out


def _sample_callable(name, fn, t_nodes):
    values = np.asarray([float(fn(float(t))) for t in t_nodes])
    if not np.all(np.isfinite(values)):
        bad = int(np.nonzero(~np.isfinite(values))[0][0])
        raise InputError(f"{name}(t) is non-finite at t={t_nodes[bad]}")
    return values


def _integrate_rk4(instance, t_nodes):
    """Classical fixed-step RK4 for dg/dt = -gamma*g + alpha*g^2 + beta."""
    al, be, ga = instance.alpha, instance.beta, instance.gamma

    def rhs(t, g):
        return -ga(t) * g + al(t) * g * g + be(t)

    g = np.empty(t_nodes.size)
    g[0] = instance.g0
    for i in range(t_nodes.size - 1):
        ti = t_nodes[i]
        dt = t_nodes[i + 1] - ti
        gi = g[i]
        k1 = rhs(ti, gi)
        k2 = rhs(ti + 0.5 * dt, gi + 0.5 * dt * k1)
        k3 = rhs(ti + 0.5 * dt, gi + 0.5 * dt * k2)
        k4 = rhs(ti + dt, gi + dt * k3)
        gn = gi + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not math.isfinite(gn):
            g[i + 1 :] = math.nan
            break
        g[i + 1] = gn
    return g


def certify_continuous(
    instance: ContinuousInstance, grid_points: int, bound_tol: float = 1e-9
) -> ContinuousCertificate:
    """Certify the continuous decay bound on a uniform grid.

    Checks, at every node of a uniform grid over [t0, T]:

        0 <= alpha(t) <= mu(t)/2 * (gamma(t) - mu_dot(t)/mu(t))
        beta(t)       <= 1/(2*mu(t)) * (gamma(t) - mu_dot(t)/mu(t))
        mu(t0) * g0 < 1   (strict)

    then integrates the equality ODE with fixed-step RK4 on the same grid.
    When the conditions pass, the integrated samples are compared against
    1/mu(t) at every node (tolerance ``bound_tol``); the guaranteed bound
    has slack under the conditions, so a modest fixed-step integrator
    suffices and grid refinement is the caller's control.  When the
    conditions fail, no bound assertion is made but the samples are still
    returned.

    Raises
    ------
    InputError
        Fewer than two grid points, non-finite callable values, mu <= 0,
        or negative alpha/beta/gamma on the grid.
    """
    grid_points = int(grid_points)
    if grid_points < 2:
        raise InputError("grid_points must be at least 2")
    t_nodes = np.linspace(instance.t0, instance.T, grid_points)

    alpha_t = _sample_callable("alpha", instance.alpha, t_nodes)
    beta_t = _sample_callable("beta", instance.beta, t_nodes)
    gamma_t = _sample_callable("gamma", instance.gamma, t_nodes)
    mu_t = _sample_callable("mu", instance.mu, t_nodes)
    mu_dot_t = _sample_callable("mu_dot", instance.mu_dot, t_nodes)

    if np.any(mu_t <= 0):
        raise InputError("mu must be positive on [t0, T]")
    for name, vals in (("alpha", alpha_t), ("beta", beta_t), ("gamma", gamma_t)):
        if np.any(vals < 0):
            raise InputError(f"{name} must be non-negative on [t0, T]")

    headroom = gamma_t - mu_dot_t / mu_t
    rhs_alpha = 0.5 * mu_t * headroom
    rhs_beta = headroom / (2.0 * mu_t)

    violations = []
    start_prod = mu_t[0] * instance.g0
    if start_prod > 1.0 - EPS_CERT:
        violations.append(Violation(0, C_G0, float(start_prod), 1.0))
    tol_alpha = EPS_CERT * np.maximum(1.0, np.abs(rhs_alpha))
    for i in np.nonzero(alpha_t > rhs_alpha + tol_alpha)[0]:
        violations.append(Violation(int(i), C_ALPHA, float(alpha_t[i]), float(rhs_alpha[i])))
    tol_beta = EPS_CERT * np.maximum(1.0, np.abs(rhs_beta))
    for i in np.nonzero(beta_t > rhs_beta + tol_beta)[0]:
        violations.append(Violation(int(i), C_BETA, float(beta_t[i]), float(rhs_beta[i])))

    conditions = _make_report(violations, Majorant(mu_t))

    g = _integrate_rk4(instance, t_nodes)
    bound = 1.0 / mu_t
    if conditions.passed:
        bad = (g > bound + bound_tol) | ~np.isfinite(g)
        bound_violations = [int(i) for i in np.nonzero(bad)[0]]
        certificate = ContinuousCertificate(
            conditions, t_nodes, g, bound, True, not bad.any(), bound_violations
        )
    else:
        certificate = ContinuousCertificate(conditions, t_nodes, g, bound, False, None, [])
    return certificate


def inequality_from_dict(data, require_side: bool = True):
    """Build (Schedule, Majorant, g0) from a mapping of plain arrays.

    Expected keys: ``alpha``, ``beta``, ``gamma``, ``mu``, ``g0`` and
    optionally ``h`` (unit steps when absent).  With ``require_side`` the
    full invariant 0 < h[n]*gamma[n] < 1 is enforced at load time.
    """
    for key in ("alpha", "beta", "gamma", "mu", "g0"):
        if key not in data:
            raise InputError(f"missing field '{key}' in inequality spec")
    schedule = Schedule(
        alpha=np.asarray(data["alpha"], dtype=float),
        beta=np.asarray(data["beta"], dtype=float),
        gamma=np.asarray(data["gamma"], dtype=float),
        h=None if data.get("h") is None else np.asarray(data["h"], dtype=float),
    )
    if require_side:
        bad = np.nonzero(~schedule.side_condition_ok())[0]
        if bad.size:
            i = int(bad[0])
            raise InputError(
                f"h[{i}]*gamma[{i}] = {schedule.h[i] * schedule.gamma[i]} "
                "violates the invariant 0 < h[n]*gamma[n] < 1"
            )
    mu = _as_vector("mu", data["mu"], length=schedule.length + 1)
    return schedule, Majorant(mu), _as_g0(data["g0"])


def inequality_to_dict(schedule: Schedule, majorant: Majorant, g0: float):
    """Inverse of :func:`inequality_from_dict`."""
    return {
        "alpha": [float(x) for x in schedule.alpha],
        "beta": [float(x) for x in schedule.beta],
        "gamma": [float(x) for x in schedule.gamma],
        "h": [float(x) for x in schedule.h],
        "mu": [float(x) for x in majorant.mu],
        "g0": float(g0),
    }
