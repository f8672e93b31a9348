"""Verification-side computations for solver runs.

For a run along regularization values a_0 > a_1 > ... > 0, the regularized
path point V_n is the unique solution of F(V) + a_n V = f (F monotone makes
F + a*I strongly monotone).  The quantities that let a run be audited step
by step are

    g_n   = ||u_n - V_n||             distance to the path,
    drift = ||V_n - V_{n+1}||         path movement, bounded by
            (a_n - a_{n+1})/a_{n+1} * ||V_n||  <=  same * ||y||,
    ||V_n|| <= ||y||                  path stays inside the solution ball,

and the one-step recurrence with c1 = m2/4 and h = 1/2:

    g_{n+1} <= g_n/2 + (c1/a_n) g_n^2 + (a_n - a_{n+1})/a_{n+1} * ||y||.

:func:`map_to_inequality` rewrites a default-schedule run as a unit-step
certified-inequality instance (gamma = 1/2, alpha_n = c1/a_n, beta_n =
drop_n*||y||, mu_n = lambda/a_n); feeding it to
:func:`ineqsolve.certify.certify_corollary` must succeed whenever the run
preconditions held, which then guarantees g_n <= a_n/lambda.
:func:`verify_chain` runs the whole pipeline and reports every stage.

The path-norm and path-convergence facts (||V_n|| <= ||y||, V_n -> y) are
treated as testable assumptions: violations are reported, not assumed away.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .certify import CertificateReport, Majorant, Schedule, certify_corollary
from .errors import InputError, OracleError, UnsupportedMapError
from .operators import OperatorProblem, evaluate
from .solver import (
    IterationTrace,
    SolverConfig,
    schedule_a,
    schedule_drop,
    solve,
)


def solve_regularized(
    problem: OperatorProblem,
    f,
    a: float,
    inner_tol: float = 1e-12,
    x0=None,
    max_newton: int = 100,
) -> np.ndarray:
    """Damped-Newton solve of F(V) + a V = f to ||residual|| <= inner_tol*(1 + ||f||).

    Newton steps on G(V) = F(V) + a V - f are halved until the residual
    norm decreases; with F monotone, F + a*I is strongly monotone with
    modulus a, so the solution is unique and Newton from a warm start is
    dependable.

    Parameters
    ----------
    x0 : vector, optional
        Starting point; defaults to the problem's ball center.  Pass the
        previous path point when walking a decreasing a-sequence.

    Raises
    ------
    OracleError
        No convergence within ``max_newton`` iterations, a stalled line
        search, or a singular Newton system.
    """
    a = float(a)
    if not math.isfinite(a) or a <= 0:
        raise InputError(f"regularization a must be positive, got {a}")
    f = np.atleast_1d(np.asarray(f, dtype=float))
    v = problem.center.copy() if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    target = inner_tol * (1.0 + float(np.linalg.norm(f)))

    def residual_at(point):
        return evaluate(problem, point) + a * point - f

    if not np.all(np.isfinite(v)):
        raise OracleError("starting point is non-finite")
    res = residual_at(v)
    res_norm = float(np.linalg.norm(res))
    if not math.isfinite(res_norm):
        raise OracleError(f"residual at the starting point is non-finite (a={a:.6g})")
    for _ in range(max_newton):
        if res_norm <= target:
            return v
        system = np.asarray(problem.jacobian(v), dtype=float) + a * np.eye(problem.dim)
        try:
            direction = np.linalg.solve(system, -res)
        except np.linalg.LinAlgError as exc:
            raise OracleError(f"singular Newton system at a={a:.6g}: {exc}") from exc
        if not np.all(np.isfinite(direction)):
            raise OracleError(f"Newton direction is non-finite at a={a:.6g}")
        scale = 1.0
        while True:
            candidate = v + scale * direction
            cand_norm = math.inf
            if np.all(np.isfinite(candidate)):
                cand_res = residual_at(candidate)
                cand_norm = float(np.linalg.norm(cand_res))
            if cand_norm < res_norm:
                break
            scale *= 0.5
            if scale < 1e-18:
                raise OracleError(
                    f"line search stalled at a={a:.6g} with residual {res_norm:.3g}"
                )
        v, res, res_norm = candidate, cand_res, cand_norm
    if res_norm <= target:
        return v
    raise OracleError(
        f"no convergence within {max_newton} Newton iterations at a={a:.6g} "
        f"(residual {res_norm:.3g}, target {target:.3g})"
    )


@dataclass
class RegularizedPathPoint:
    """One point of the regularized path, with its audit quantities.

    ``drift*`` fields are filled when the next point exists; ``g`` and
    ``g_bound`` are filled by :func:`attach_g`.  ``drift_ok`` / ``norm_ok``
    compare against the path bounds with a 10*inner_tol slack (``norm_ok``
    only when a known solution is available).
    """

    n: int
    a: float
    v: np.ndarray
    inner_residual: float
    v_norm: float
    drift: float | None = None
    drift_bound: float | None = None
    drift_bound_y: float | None = None
    drift_ok: bool | None = None
    norm_ok: bool | None = None
    g: float | None = None
    g_bound: float | None = None


def trace_regularized_path(
    problem: OperatorProblem, f, a_sequence, inner_tol: float = 1e-12
) -> list:
    """Solve the regularized equation along a decreasing a-sequence.

    Each point is warm-started from the previous one (the path is
    continuous in a).  Per-point audit flags record the drift bound
    drift <= (a_n - a_{n+1})/a_{n+1} * ||V_n|| (and * ||y|| when a known
    solution exists) and the norm bound ||V_n|| <= ||y||, both with
    10*inner_tol slack.  Oracle failures propagate with the failing index.
    """
    a_seq = np.atleast_1d(np.asarray(a_sequence, dtype=float))
    if a_seq.size < 1 or not np.all(np.isfinite(a_seq)) or np.any(a_seq <= 0):
        raise InputError("a_sequence must be positive and finite")
    if np.any(np.diff(a_seq) >= 0):
        raise InputError("a_sequence must be strictly decreasing")
    f = np.atleast_1d(np.asarray(f, dtype=float))

    points = []
    warm = problem.center
    for k, a in enumerate(a_seq):
        try:
            v = solve_regularized(problem, f, float(a), inner_tol=inner_tol, x0=warm)
        except OracleError as exc:
            raise OracleError(f"path point {k} (a={a:.6g}) failed: {exc}") from exc
        inner_res = float(np.linalg.norm(evaluate(problem, v) + a * v - f))
        points.append(
            RegularizedPathPoint(k, float(a), v, inner_res, float(np.linalg.norm(v)))
        )
        warm = v

    y = problem.known_solution
    y_norm = None if y is None else float(np.linalg.norm(y))
    slack = 10.0 * inner_tol
    for current, nxt in zip(points, points[1:]):
        drop = (current.a - nxt.a) / nxt.a
        current.drift = float(np.linalg.norm(current.v - nxt.v))
        current.drift_bound = drop * current.v_norm
        ok = current.drift <= current.drift_bound + slack
        if y_norm is not None:
            current.drift_bound_y = drop * y_norm
            ok = ok and current.drift <= current.drift_bound_y + slack
        current.drift_ok = bool(ok)
    if y_norm is not None:
        for point in points:
            point.norm_ok = bool(point.v_norm <= y_norm + slack)
    return points


def attach_g(trace: IterationTrace, path: list) -> IterationTrace:
    """Fill g_n = ||u_n - V_n|| and the bound a_n/lambda on trace rows and path points.

    Requires the trace and path to cover the same indices with the same
    a-values.  Returns the (mutated) trace; indices with g_n above the
    bound are available via ``trace.g_violations()``.
    """
    if len(trace.steps) != len(path):
        raise InputError(
            f"trace has {len(trace.steps)} rows but path has {len(path)} points"
        )
    lam = trace.lambda_used
    for row, point in zip(trace.steps, path):
        if row.n != point.n or abs(row.a - point.a) > 1e-12 * max(1.0, abs(row.a)):
            raise InputError(f"index/a mismatch at n={row.n}: a={row.a} vs {point.a}")
        g = float(np.linalg.norm(row.u - point.v))
        bound = row.a / lam
        row.g = g
        row.g_bound = bound
        point.g = g
        point.g_bound = bound
    return trace


class InequalityMap(NamedTuple):
    """A solver run rewritten as a unit-step certified-inequality instance."""

    schedule: Schedule
    majorant: Majorant
    g0: float


def map_to_inequality(trace: IterationTrace, c1: float, y_norm: float, lam: float) -> InequalityMap:
    """Rewrite a default-schedule, h = 1/2 run in certifiable form.

    Emits gamma_n = 1/2, alpha_n = c1/a_n, beta_n = drop_n * y_norm with
    drop_n = 1/(4+n) (integer-exact form), mu_n = lam/a_n, unit steps, and
    g0 from the attached g of row 0.  Whenever the run preconditions held,
    feeding the result to :func:`ineqsolve.certify.certify_corollary`
    passes: the relative mu growth is 1/(4+n) <= 1/4, so the condition
    headroom gamma - growth stays >= 1/4.

    Raises
    ------
    UnsupportedMapError
        The trace does not use h = 1/2 throughout or does not follow the
        4*a0/(4+n) schedule.
    InputError
        Fewer than two rows, or :func:`attach_g` has not run.
    """
    steps = trace.steps
    if len(steps) < 2:
        raise InputError("need at least two trace rows to build an instance")
    if any(row.h != 0.5 for row in steps):
        raise UnsupportedMapError("mapping assumes h = 1/2 throughout the run")
    a_values = trace.a_values
    expected = schedule_a(trace.config.a0, np.arange(len(steps)))
    if not np.allclose(a_values, expected, rtol=1e-12, atol=0.0):
        raise UnsupportedMapError("mapping assumes the 4*a0/(4+n) schedule")
    if steps[0].g is None:
        raise InputError("attach_g must run before mapping (g0 = ||u_0 - V_0|| is needed)")

    transitions = len(steps) - 1
    head = a_values[:-1]
    schedule = Schedule(
        alpha=(c1 / head) if c1 != 0.0 else np.zeros(transitions),
        beta=schedule_drop(np.arange(transitions)) * y_norm,
        gamma=np.full(transitions, 0.5),
        h=None,
    )
    majorant = Majorant(lam / a_values)
    return InequalityMap(schedule, majorant, float(steps[0].g))


@dataclass
class ChainStage:
    """One audited stage: a pass flag, scalar details, and violating indices."""

    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    note: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "detail": dict(self.detail),
            "violations": list(self.violations),
            "note": self.note,
        }


@dataclass(eq=False)
class ChainReport:
    """Stage-by-stage audit of a run; produced even when stages fail."""

    stages: list
    summary: dict
    trace: IterationTrace | None = None
    path: list | None = None
    certificate: CertificateReport | None = None

    @property
    def passed(self) -> bool:
        return bool(self.stages) and all(stage.passed for stage in self.stages)

    def stage(self, name: str) -> ChainStage:
        for stage in self.stages:
            if stage.name == name:
                return stage
        raise KeyError(name)

    def to_dict(self):
        return {
            "passed": self.passed,
            "stages": [stage.to_dict() for stage in self.stages],
            "summary": dict(self.summary),
        }

    def csv_rows(self):
        """Rows (n, a, g, g_bound, drift, drift_bound); blanks where unset."""
        rows = []
        for point in self.path or []:
            rows.append(
                [point.n, point.a, point.g, point.g_bound, point.drift, point.drift_bound]
            )
        return rows


def verify_chain(
    problem: OperatorProblem,
    f,
    config: SolverConfig,
    u0,
    inner_tol: float = 1e-12,
    g_slack: float = 1e-9,
) -> ChainReport:
    """End-to-end audit: solve, path, g-attachment, per-step bounds, certificate.

    Stages reported (in order): ``preconditions``, ``solve``,
    ``regularized_path``, ``drift_bounds``, ``v_norm_bound``,
    ``v_convergence``, ``g_bound``, ``recurrence``, ``triangle``,
    ``map_certify``.  Any stage failure is recorded with the stage name and
    the remaining runnable stages still execute; the report is always
    produced.  Requires a known solution on the problem.

    The numeric tolerances: per-step bound checks use ``g_slack``
    (default 1e-9) on top of the inner-solve accuracy; the monotone
    decrease of ||V_n - y|| is an observed property of the built-in
    problems, checked with 1e-10 slack and reported rather than required
    by any theory.
    """
    if problem.known_solution is None:
        raise InputError("verify_chain needs a problem with a known solution")
    y = problem.known_solution
    y_norm = float(np.linalg.norm(y))
    f = np.atleast_1d(np.asarray(f, dtype=float))

    stages = []
    trace = None
    path = None
    certificate = None

    try:
        trace = solve(problem, f, config, u0)
    except Exception as exc:  # report must exist whatever went wrong
        stages.append(ChainStage("solve", False, note=f"{type(exc).__name__}: {exc}"))

    if trace is not None:
        pre = trace.preconditions
        stages.append(
            ChainStage(
                "preconditions",
                pre.passed,
                detail={check.name: check.passed for check in pre.checks},
            )
        )
        stages.append(
            ChainStage(
                "solve",
                trace.status != "diverged",
                detail={"status": trace.status, "rows": len(trace.steps)},
            )
        )
        c1 = pre.c1
        lam = pre.lambda_used

        try:
            path = trace_regularized_path(problem, f, trace.a_values, inner_tol=inner_tol)
        except OracleError as exc:
            stages.append(ChainStage("regularized_path", False, note=str(exc)))

    if trace is not None and path is not None:
        stages.append(
            ChainStage("regularized_path", True, detail={"inner_tol": inner_tol})
        )

        drift_bad = [p.n for p in path[:-1] if p.drift_ok is False]
        stages.append(ChainStage("drift_bounds", not drift_bad, violations=drift_bad))

        norm_bad = [p.n for p in path if p.norm_ok is False]
        stages.append(ChainStage("v_norm_bound", not norm_bad, violations=norm_bad))

        v_err = np.asarray([float(np.linalg.norm(p.v - y)) for p in path])
        conv_bad = [int(i) + 1 for i in np.nonzero(np.diff(v_err) > 1e-10)[0]]
        stages.append(
            ChainStage(
                "v_convergence",
                not conv_bad,
                detail={"final_v_error": float(v_err[-1])},
                violations=conv_bad,
                note="observed property: ||V_n - y|| non-increasing (reported, not required)",
            )
        )

        attach_g(trace, path)
        g = np.asarray([row.g for row in trace.steps])
        a = trace.a_values
        bound_bad = [row.n for row in trace.steps if row.g > row.g_bound + g_slack]
        stages.append(ChainStage("g_bound", not bound_bad, violations=bound_bad))

        drops = schedule_drop(np.arange(len(g) - 1))
        recur_rhs = 0.5 * g[:-1] + (c1 / a[:-1]) * g[:-1] ** 2 + drops * y_norm
        recur_bad = [int(i) + 1 for i in np.nonzero(g[1:] > recur_rhs + g_slack)[0]]
        stages.append(ChainStage("recurrence", not recur_bad, violations=recur_bad))

        tri_bad = []
        for row, point in zip(trace.steps, path):
            lhs = float(np.linalg.norm(row.u - y))
            rhs = row.g + float(np.linalg.norm(point.v - y))
            if lhs > rhs + 4.0 * np.spacing(max(rhs, 1.0)):
                tri_bad.append(row.n)
        stages.append(ChainStage("triangle", not tri_bad, violations=tri_bad))

        try:
            mapped = map_to_inequality(trace, c1, y_norm, lam)
            certificate = certify_corollary(mapped.schedule, mapped.majorant, mapped.g0)
            implication_ok = (not pre.passed) or certificate.passed
            stages.append(
                ChainStage(
                    "map_certify",
                    certificate.passed and implication_ok,
                    detail={
                        "certified": certificate.passed,
                        "preconditions_imply_certificate": implication_ok,
                    },
                    violations=[v.index for v in certificate.violations],
                )
            )
        except (InputError, UnsupportedMapError) as exc:
            stages.append(ChainStage("map_certify", False, note=str(exc)))

    summary = {"y_norm": y_norm}
    if trace is not None:
        last = trace.steps[-1]
        summary.update(
            {
                "steps": len(trace.steps),
                "status": trace.status,
                "c1": trace.preconditions.c1,
                "lambda_used": trace.lambda_used,
                "final_a": last.a,
                "final_g": last.g,
                "final_error": float(np.linalg.norm(last.u - y)),
            }
        )
    return ChainReport(stages, summary, trace, path, certificate)
