"""Regularized Newton-type iteration for monotone equations F(u) = f.

Each update solves the shifted linear system

    (F'(u_n) + a_n I) x = F(u_n) + a_n u_n - f,      u_{n+1} = u_n - h_n x,

along the decaying regularization schedule a_n = 4*a0/(4 + n).  The
schedule has two exact rational identities,

    a_{n+1}/a_n = (4 + n)/(5 + n) >= 4/5,
    (a_n - a_{n+1})/a_{n+1} = 1/(4 + n) <= a_n/a0,

exposed as :func:`schedule_ratio` and :func:`schedule_drop`.

Run preconditions (checked, advisory): with c1 = m2/4 and the working
lambda (given, or defaulting to max(8*c1, LAMBDA_FLOOR)),

    a_{n+1}/a_n >= 4/5,     lambda >= 8*c1,
    g0 <= a0/(8*c1),        a0 >= 16*c1*||y||   (64*c1*||y|| in strict mode),

where g0 = ||u0 - V0|| is the distance to the first regularized-path point
(see :mod:`ineqsolve.diagnostics`) and ||y|| is a bound on the solution
norm.  :func:`solve` records the report and proceeds regardless; under the
preconditions the diagnostics chain certifies g_n <= a_n/lambda.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError
from .operators import OperatorProblem, RegularizedSystem, evaluate, resolvent_apply

#: Working lambda when c1 = 0 (m2 = 0 would make lambda = 8*c1 and the
#: certificate sequence mu_n = lambda/a_n degenerate).
LAMBDA_FLOOR = 1e-8

_RELTOL = 1e-12


def schedule_a(a0: float, n):
    """Regularization value(s) 4*a0/(4 + n); n may be an integer or an array."""
    a0 = float(a0)
    if not math.isfinite(a0) or a0 <= 0:
        raise InputError(f"a0 must be a positive finite real, got {a0}")
    if np.any(np.asarray(n) < 0):
        raise InputError("n must be non-negative")
    return 4.0 * a0 / (4.0 + n)


def schedule_ratio(n):
    """a_{n+1}/a_n = (4 + n)/(5 + n), independent of a0 (exact rational form)."""
    if np.any(np.asarray(n) < 0):
        raise InputError("n must be non-negative")
    return (4.0 + n) / (5.0 + n)


def schedule_drop(n):
    """(a_n - a_{n+1})/a_{n+1} = 1/(4 + n), independent of a0.

    This also equals the relative growth (mu_{n+1} - mu_n)/mu_n of the
    certificate sequence mu = lambda/a_n.  It is evaluated in this
    integer-exact form (a single rounding) rather than from stored a-values:
    subtracting near-equal a's amplifies their rounding by a factor ~n and
    would swamp the quantity, which is itself of size 1/n.
    """
    if np.any(np.asarray(n) < 0):
        raise InputError("n must be non-negative")
    return 1.0 / (4.0 + n)


@dataclass
class SolverConfig:
    """Run parameters for :func:`solve`.

    ``lam`` is the certificate scale lambda; ``None`` selects
    max(8*c1, LAMBDA_FLOOR).  ``h`` is a constant step (default 1/2) or a
    per-step sequence.  ``stop_a`` defaults to a0 * 1e-4.  ``y_norm_bound``
    is the user's bound on ||y|| (computed exactly from a known solution
    when omitted and one is attached to the problem).  ``strict`` tightens
    the a0 precondition from 16*c1*||y|| to 64*c1*||y||.  ``u0`` is an
    optional initial iterate for file-driven runs; library callers pass u0
    to :func:`solve` directly.
    """

    a0: float
    lam: float | None = None
    h: float | Sequence[float] = 0.5
    max_iter: int = 1000
    stop_a: float | None = None
    y_norm_bound: float | None = None
    g0_bound: float | None = None
    strict: bool = False
    u0: np.ndarray | None = None

    def __post_init__(self):
        self.a0 = float(self.a0)
        if not math.isfinite(self.a0) or self.a0 <= 0:
            raise InputError(f"a0 must be a positive finite real, got {self.a0}")
        if self.lam is not None:
            self.lam = float(self.lam)
            if not math.isfinite(self.lam) or self.lam <= 0:
                raise InputError(f"lambda must be positive, got {self.lam}")
        self.max_iter = int(self.max_iter)
        if self.max_iter < 1:
            raise InputError("max_iter must be at least 1")
        if self.stop_a is not None:
            self.stop_a = float(self.stop_a)
            if not math.isfinite(self.stop_a) or self.stop_a <= 0:
                raise InputError(f"stop_a must be positive, got {self.stop_a}")
        if np.ndim(self.h) == 0:
            self.h = float(self.h)
            if not math.isfinite(self.h) or self.h <= 0:
                raise InputError(f"h must be positive, got {self.h}")
        else:
            h = np.asarray(self.h, dtype=float)
            if h.ndim != 1 or not np.all(np.isfinite(h)) or np.any(h <= 0):
                raise InputError("h sequence must be one-dimensional, finite and positive")
            self.h = h
        for name in ("y_norm_bound", "g0_bound"):
            value = getattr(self, name)
            if value is not None:
                value = float(value)
                if not math.isfinite(value) or value < 0:
                    raise InputError(f"{name} must be non-negative, got {value}")
                setattr(self, name, value)
        if self.u0 is not None:
            self.u0 = np.atleast_1d(np.asarray(self.u0, dtype=float))

    def resolved_stop_a(self) -> float:
        return self.stop_a if self.stop_a is not None else self.a0 * 1e-4

    def h_at(self, n: int) -> float:
        if isinstance(self.h, float):
            return self.h
        if n >= len(self.h):
            raise InputError(f"h sequence exhausted at step {n} (length {len(self.h)})")
        return float(self.h[n])


@dataclass(frozen=True)
class PrecondCheck:
    name: str
    passed: bool
    lhs: float
    rhs: float

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "lhs": self.lhs, "rhs": self.rhs}


@dataclass(eq=False)
class PreconditionReport:
    """Outcome of the four run preconditions, plus the resolved constants."""

    c1: float
    lambda_used: float
    y_norm: float
    g0: float
    g0_source: str
    strict: bool
    checks: list

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def check(self, name: str) -> PrecondCheck:
        for item in self.checks:
            if item.name == name:
                return item
        raise KeyError(name)

    def to_dict(self):
        return {
            "passed": self.passed,
            "c1": self.c1,
            "lambda_used": self.lambda_used,
            "y_norm": self.y_norm,
            "g0": self.g0,
            "g0_source": self.g0_source,
            "strict": self.strict,
            "checks": [check.to_dict() for check in self.checks],
        }


def _le(lhs, rhs):
    return lhs <= rhs + _RELTOL * max(1.0, abs(rhs))


def _ge(lhs, rhs):
    return lhs >= rhs - _RELTOL * max(1.0, abs(rhs))


def resolve_lambda(config: SolverConfig, c1: float) -> float:
    return config.lam if config.lam is not None else max(8.0 * c1, LAMBDA_FLOOR)


def check_preconditions(
    problem: OperatorProblem, config: SolverConfig, g0_estimate: float, g0_source: str = "user"
) -> PreconditionReport:
    """Evaluate the run preconditions; advisory for :func:`solve`.

    Requires the problem's m2 bound (declared, or obtained beforehand via
    :func:`ineqsolve.operators.estimate_M2`) and a solution-norm bound
    (``config.y_norm_bound``, or exact from an attached known solution).
    """
    if problem.m2 is None:
        raise InputError("problem has no m2 bound; declare one or run estimate_M2 first")
    g0 = float(g0_estimate)
    if not math.isfinite(g0) or g0 < 0:
        raise InputError(f"g0_estimate must be a non-negative finite real, got {g0}")
    if config.y_norm_bound is not None:
        y_norm = config.y_norm_bound
    elif problem.known_solution is not None:
        y_norm = float(np.linalg.norm(problem.known_solution))
    else:
        raise InputError("y_norm_bound required when the problem has no known solution")

    c1 = problem.m2 / 4.0
    lam = resolve_lambda(config, c1)
    factor = 64.0 if config.strict else 16.0

    ratio = schedule_ratio(0)  # minimum over n: the ratio increases with n
    g0_cap = config.a0 / (8.0 * c1) if c1 > 0 else math.inf
    a0_floor = factor * c1 * y_norm
    checks = [
        PrecondCheck("ratio-4/5", _ge(ratio, 0.8), float(ratio), 0.8),
        PrecondCheck("lambda>=8c1", _ge(lam, 8.0 * c1), lam, 8.0 * c1),
        PrecondCheck("g0<=a0/(8c1)", _le(g0, g0_cap), g0, g0_cap),
        PrecondCheck(f"a0>={int(factor)}c1*ynorm", _ge(config.a0, a0_floor), config.a0, a0_floor),
    ]
    return PreconditionReport(c1, lam, y_norm, g0, g0_source, config.strict, checks)


def step(problem: OperatorProblem, u, a: float, h: float, f) -> np.ndarray:
    """One update u - h * (F'(u) + a*I)^{-1} (F(u) + a*u - f)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    f = np.atleast_1d(np.asarray(f, dtype=float))
    residual = evaluate(problem, u) + a * u - f
    direction = resolvent_apply(
        RegularizedSystem(np.asarray(problem.jacobian(u), dtype=float), a), residual
    )
    return u - h * direction


@dataclass
class TraceStep:
    """One recorded iterate; g / g_bound are filled by the diagnostics module."""

    n: int
    a: float
    h: float
    u: np.ndarray
    residual: float
    step_norm: float
    g: float | None = None
    g_bound: float | None = None


@dataclass(eq=False)
class IterationTrace:
    """Everything recorded by one :func:`solve` run.

    ``status`` is ``max_iter``, ``stop_a`` or ``diverged`` (non-finite
    values appeared; the trace up to that point is kept).
    """

    steps: list
    status: str
    config: SolverConfig
    lambda_used: float
    preconditions: PreconditionReport | None
    f: np.ndarray

    @property
    def a_values(self) -> np.ndarray:
        return np.asarray([s.a for s in self.steps])

    @property
    def residuals(self) -> np.ndarray:
        return np.asarray([s.residual for s in self.steps])

    def g_violations(self) -> list:
        """Indices where the attached g exceeds the certified bound a_n/lambda."""
        return [s.n for s in self.steps if s.g is not None and s.g > s.g_bound]

    def to_dict(self, full_vectors: bool = False):
        steps = []
        for s in self.steps:
            row = {
                "n": s.n,
                "a": s.a,
                "h": s.h,
                "residual": s.residual,
                "step_norm": s.step_norm,
                "g": s.g,
                "g_bound": s.g_bound,
            }
            if full_vectors:
                row["u"] = [float(x) for x in s.u]
            steps.append(row)
        out = {
            "status": self.status,
            "lambda_used": self.lambda_used,
            "a0": self.config.a0,
            "preconditions": None if self.preconditions is None else self.preconditions.to_dict(),
            "steps": steps,
        }
        if full_vectors:
            out["f"] = [float(x) for x in self.f]
        return out


def solve(problem: OperatorProblem, f, config: SolverConfig, u0) -> IterationTrace:
    """Run the regularized iteration from u0 until max_iter or a_n < stop_a.

    The precondition report is computed first -- g0 = ||u0 - V0|| from the
    inner regularized solve at a0 when it converges, else the user's
    ``g0_bound`` -- and recorded on the trace; failing checks do not stop
    the run.  Iterates are recorded at every n; a non-finite iterate or
    residual aborts with status ``diverged`` and the partial trace.
    Deterministic given its inputs.
    """
    f = _require_vector(problem, "f", f)
    u = _require_vector(problem, "u0", u0).copy()

    # local import: diagnostics builds on this module
    from .diagnostics import solve_regularized
    from .errors import OracleError

    g0_source = "oracle"
    try:
        v0 = solve_regularized(problem, f, schedule_a(config.a0, 0), x0=u)
        g0 = float(np.linalg.norm(u - v0))
    except OracleError:
        if config.g0_bound is None:
            raise InputError(
                "inner regularized solve for g0 failed and no g0_bound was supplied"
            ) from None
        g0 = config.g0_bound
        g0_source = "user"
    preconditions = check_preconditions(problem, config, g0, g0_source=g0_source)

    if not isinstance(config.h, float) and len(config.h) < config.max_iter:
        raise InputError(
            f"h sequence has {len(config.h)} entries but max_iter = {config.max_iter}"
        )

    def row_h(n):
        # the step at n uses h_at(n); the final row reuses the last value
        if isinstance(config.h, float) or n < len(config.h):
            return config.h_at(n)
        return float(config.h[-1])

    stop_a = config.resolved_stop_a()
    steps = []
    status = "max_iter"
    prev = None
    for n in range(config.max_iter + 1):
        if not np.all(np.isfinite(u)):
            status = "diverged"
            break
        a = schedule_a(config.a0, n)
        residual = float(np.linalg.norm(evaluate(problem, u) + a * u - f))
        step_norm = 0.0 if prev is None else float(np.linalg.norm(u - prev))
        steps.append(TraceStep(n, float(a), row_h(n), u.copy(), residual, step_norm))
        if not math.isfinite(residual):
            status = "diverged"
            break
        if n == config.max_iter:
            status = "max_iter"
            break
        if a < stop_a:
            status = "stop_a"
            break
        prev = u
        u = step(problem, u, a, config.h_at(n), f)
    return IterationTrace(steps, status, config, preconditions.lambda_used, preconditions, f)


def _require_vector(problem, name, values):
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.shape != (problem.dim,):
        raise InputError(f"{name} has shape {arr.shape}, expected ({problem.dim},)")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr
