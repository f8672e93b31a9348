"""Monotone operator problems on R^d with dense Jacobian access.

An :class:`OperatorProblem` packages the map F, its Jacobian, a reference
ball B(center, radius) on which derivative bounds are meant, and optional
metadata: declared derivative-norm bounds m0/m1/m2 (spectral norm), a
paired right-hand side, and a known solution.  Monotonicity -- positive
semidefinite symmetric part of the Jacobian -- is audited by sampling
(:func:`psd_spotcheck`) rather than assumed, and declared second-derivative
bounds can be cross-checked against finite differences
(:func:`estimate_M2`).

:func:`resolvent_apply` solves the shifted system (J + a*I) x = b; when the
symmetric part of J is PSD the solution obeys ||x|| <= ||b|| / a, which is
what makes the regularized iteration in :mod:`ineqsolve.solver` stable.

Built-in problem families: :func:`linear_problem` (F = A u),
:func:`cubic_problem` (componentwise u + u^3), :func:`rotation_problem`
(plane quarter turn, skew), and :func:`polynomial_problem` (componentwise
polynomial).  Together they span strongly monotone, merely monotone and
second-derivative-free cases.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConsistencyError, InputError, SolveError

_EPS = float(np.finfo(float).eps)


def _as_point(name, values, dim=None):
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        raise InputError(f"{name} must be a vector, got shape {arr.shape}")
    if dim is not None and arr.size != dim:
        raise InputError(f"{name} has dimension {arr.size}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class OperatorProblem:
    """A finite-dimensional operator F: R^d -> R^d with Jacobian access.

    Parameters
    ----------
    dim : int
        Dimension d.
    F, jacobian : callable
        The map and its Jacobian (vector -> vector, vector -> d x d matrix).
    center, radius : vector, float
        Reference ball on which the derivative bounds m0/m1/m2 hold.
    m0, m1, m2 : float or None
        Declared spectral-norm bounds on F, F', F'' over the ball; ``None``
        means unknown.  Only m2 feeds the solver constants; m0/m1 are kept
        for completeness.
    rhs : vector or None
        Paired right-hand side f of F(u) = f.
    known_solution : vector or None
        A solution y of F(y) = rhs, when one is known (test problems are
        chosen so it is unique).
    """

    dim: int
    F: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    center: np.ndarray
    radius: float
    m0: float | None = None
    m1: float | None = None
    m2: float | None = None
    rhs: np.ndarray | None = None
    known_solution: np.ndarray | None = None
    kind: str = "custom"

    def __post_init__(self):
        dim = int(self.dim)
        if dim < 1:
            raise InputError(f"dim must be positive, got {dim}")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "center", _as_point("center", self.center, dim))
        radius = float(self.radius)
        if not math.isfinite(radius) or radius <= 0:
            raise InputError(f"radius must be a positive finite real, got {radius}")
        object.__setattr__(self, "radius", radius)
        for name in ("m0", "m1", "m2"):
            value = getattr(self, name)
            if value is not None:
                value = float(value)
                if not math.isfinite(value) or value < 0:
                    raise InputError(f"{name} must be a non-negative finite real, got {value}")
                object.__setattr__(self, name, value)
        if self.rhs is not None:
            object.__setattr__(self, "rhs", _as_point("rhs", self.rhs, dim))
        if self.known_solution is not None:
            y = _as_point("known_solution", self.known_solution, dim)
            object.__setattr__(self, "known_solution", y)
            if self.rhs is not None:
                res = float(np.linalg.norm(np.asarray(self.F(y), dtype=float) - self.rhs))
                if res > 1e-8 * (1.0 + float(np.linalg.norm(self.rhs))):
                    raise InputError(
                        f"known_solution does not solve F(y)=rhs (residual {res:.3g})"
                    )


def evaluate(problem: OperatorProblem, u) -> np.ndarray:
    """Apply F at u, validating dimensions and finiteness of the input."""
    u = _as_point("u", u, problem.dim)
    out = np.atleast_1d(np.asarray(problem.F(u), dtype=float))
    if out.shape != (problem.dim,):
        raise InputError(f"operator returned shape {out.shape}, expected ({problem.dim},)")
    return out


def _jacobian_at(problem, u):
    jac = np.atleast_2d(np.asarray(problem.jacobian(u), dtype=float))
    if jac.shape != (problem.dim, problem.dim):
        raise InputError(f"jacobian returned shape {jac.shape}, expected square of dim {problem.dim}")
    return jac


def _fd_step(u):
    # balances truncation against roundoff for central differences
    return _EPS ** (1.0 / 3.0) * max(1.0, float(np.linalg.norm(u)))


def _fd_jacobian(problem, u):
    h = _fd_step(u)
    cols = []
    for j in range(problem.dim):
        e = np.zeros(problem.dim)
        e[j] = h
        cols.append((evaluate(problem, u + e) - evaluate(problem, u - e)) / (2.0 * h))
    return np.column_stack(cols)


def _ball_points(rng, center, radius, count):
    d = center.size
    directions = rng.standard_normal((count, d))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radii = radius * rng.random(count) ** (1.0 / d)
    return center + directions / norms * radii[:, None]


@dataclass(frozen=True)
class JacobianCheck:
    max_rel_error: float
    rtol: float
    passed: bool


def check_jacobian_consistency(
    problem: OperatorProblem, sample_count: int = 50, seed: int = 0, rtol: float = 1e-5
) -> JacobianCheck:
    """Compare the declared Jacobian against central differences on ball samples."""
    if sample_count < 1:
        raise InputError("sample_count must be at least 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for u in _ball_points(rng, problem.center, problem.radius, sample_count):
        jac = _jacobian_at(problem, u)
        err = np.linalg.norm(jac - _fd_jacobian(problem, u), 2)
        worst = max(worst, err / max(1.0, np.linalg.norm(jac, 2)))
    return JacobianCheck(float(worst), rtol, worst <= rtol)


@dataclass(frozen=True)
class SpotcheckReport:
    min_eigenvalue: float
    threshold: float
    passed: bool
    worst_point: np.ndarray


def psd_spotcheck(
    problem: OperatorProblem, sample_count: int = 50, seed: int = 0, threshold: float = -1e-10
) -> SpotcheckReport:
    """Sample the ball and report the smallest eigenvalue of sym(J).

    The problem counts as monotone on the evidence gathered when the
    minimum eigenvalue found stays above ``threshold``.
    """
    if sample_count < 1:
        raise InputError("sample_count must be at least 1")
    rng = np.random.default_rng(seed)
    best = math.inf
    worst_point = problem.center
    for u in _ball_points(rng, problem.center, problem.radius, sample_count):
        jac = _jacobian_at(problem, u)
        low = float(np.linalg.eigvalsh(0.5 * (jac + jac.T))[0])
        if low < best:
            best = low
            worst_point = u
    return SpotcheckReport(best, threshold, best >= threshold, worst_point)


def estimate_M2(problem: OperatorProblem, sample_count: int = 50, seed: int = 0) -> float:
    """Sampled lower estimate of the ball bound on ||F''||.

    Takes the central finite-difference directional derivative of the
    Jacobian along random unit directions at random ball points and returns
    the largest spectral norm seen.  When the problem declares m2, the
    declared value is returned after cross-checking that the estimate does
    not exceed it by more than 1% (ConsistencyError otherwise).
    """
    if sample_count < 1:
        raise InputError("sample_count must be at least 1")
    rng = np.random.default_rng(seed)
    best = 0.0
    points = _ball_points(rng, problem.center, problem.radius, sample_count)
    for u in points:
        direction = rng.standard_normal(problem.dim)
        norm = np.linalg.norm(direction)
        if norm == 0.0:
            continue
        direction /= norm
        h = _fd_step(u)
        delta = (_jacobian_at(problem, u + h * direction) - _jacobian_at(problem, u - h * direction)) / (
            2.0 * h
        )
        best = max(best, float(np.linalg.norm(delta, 2)))
    if problem.m2 is not None:
        if best > problem.m2 * 1.01 + 1e-12:
            raise ConsistencyError(
                f"sampled second-derivative norm {best:.6g} exceeds declared m2 = {problem.m2:.6g}"
            )
        return problem.m2
    return best


@dataclass(frozen=True, eq=False)
class RegularizedSystem:
    """A shifted Jacobian system: matrix J and regularization a > 0."""

    matrix: np.ndarray
    a: float

    def __post_init__(self):
        mat = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InputError(f"matrix must be square, got shape {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise InputError("matrix contains non-finite entries")
        object.__setattr__(self, "matrix", mat)
        a = float(self.a)
        if not math.isfinite(a) or a <= 0:
            raise InputError(f"regularization a must be positive, got {a}")
        object.__setattr__(self, "a", a)


def resolvent_apply(system: RegularizedSystem, b) -> np.ndarray:
    """Solve (J + a*I) x = b by dense factorization.

    For J with positive semidefinite symmetric part the shifted matrix is
    invertible with ||(J + a*I)^{-1}|| <= 1/a, hence ||x|| <= ||b||/a.  A
    singular shifted matrix (only possible when that assumption fails)
    raises SolveError.
    """
    b = _as_point("b", b, system.matrix.shape[0])
    shifted = system.matrix + system.a * np.eye(system.matrix.shape[0])
    try:
        x = np.linalg.solve(shifted, b)
    except np.linalg.LinAlgError as exc:
        raise SolveError(f"shifted system J + {system.a}*I is singular: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolveError("shifted solve produced non-finite values")
    return x


def linear_problem(
    matrix, center=None, radius: float = 1.0, rhs=None, known_solution=None
) -> OperatorProblem:
    """F(u) = A u.  Monotone iff the symmetric part of A is PSD; m2 = 0."""
    A = np.atleast_2d(np.asarray(matrix, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"matrix must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError("matrix contains non-finite entries")
    dim = A.shape[0]
    center = np.zeros(dim) if center is None else _as_point("center", center, dim)
    m1 = float(np.linalg.norm(A, 2))
    m0 = m1 * (float(np.linalg.norm(center)) + float(radius))
    return OperatorProblem(
        dim=dim,
        F=lambda u: A @ u,
        jacobian=lambda u: A,
        center=center,
        radius=radius,
        m0=m0,
        m1=m1,
        m2=0.0,
        rhs=rhs,
        known_solution=known_solution,
        kind="linear",
    )


def cubic_problem(
    dim: int = 1, center=None, radius: float = 1.0, rhs=None, known_solution=None, m2=None
) -> OperatorProblem:
    """Componentwise F(u) = u + u^3, with J(u) = I + 3 diag(u^2) >= I.

    The exact second-derivative bound over B(center, radius) is
    6 * (max_i |center_i| + radius), declared as m2 unless overridden.
    """
    center = np.zeros(dim) if center is None else _as_point("center", center, dim)
    reach = float(np.max(np.abs(center))) + float(radius)
    return OperatorProblem(
        dim=dim,
        F=lambda u: u + u**3,
        jacobian=lambda u: np.diag(1.0 + 3.0 * u**2),
        center=center,
        radius=radius,
        m1=1.0 + 3.0 * reach**2,
        m2=6.0 * reach if m2 is None else m2,
        rhs=rhs,
        known_solution=known_solution,
        kind="cubic",
    )


def rotation_problem(center=None, radius: float = 1.0, rhs=None, known_solution=None) -> OperatorProblem:
    """Plane quarter-turn F(u) = R u: skew, <F(u), u> = 0, merely monotone, m2 = 0."""
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    center = np.zeros(2) if center is None else _as_point("center", center, 2)
    return OperatorProblem(
        dim=2,
        F=lambda u: R @ u,
        jacobian=lambda u: R,
        center=center,
        radius=radius,
        m0=float(np.linalg.norm(center)) + float(radius),
        m1=1.0,
        m2=0.0,
        rhs=rhs,
        known_solution=known_solution,
        kind="rotation",
    )


def polynomial_problem(
    coefficients,
    dim: int = 1,
    center=None,
    radius: float = 1.0,
    rhs=None,
    known_solution=None,
    m2=None,
) -> OperatorProblem:
    """Componentwise polynomial map F_i(u) = p(u_i), coefficients low to high.

    Monotone iff p' >= 0 on the relevant range; audit with
    :func:`psd_spotcheck`.  Unless overridden, m2 defaults to the triangle
    bound sum_k k*(k-1)*|c_k| * reach^(k-2) with reach = max|center| + radius.
    """
    coeffs = np.atleast_1d(np.asarray(coefficients, dtype=float))
    if coeffs.ndim != 1 or coeffs.size < 1 or not np.all(np.isfinite(coeffs)):
        raise InputError("coefficients must be a finite one-dimensional sequence")
    center = np.zeros(dim) if center is None else _as_point("center", center, dim)
    reach = float(np.max(np.abs(center))) + float(radius)
    dcoeffs = np.polynomial.polynomial.polyder(coeffs) if coeffs.size > 1 else np.zeros(1)
    powers = np.arange(coeffs.size)
    m1_bound = float(np.sum(powers * np.abs(coeffs) * reach ** np.maximum(powers - 1, 0)))
    m2_bound = float(
        np.sum(powers * (powers - 1) * np.abs(coeffs) * reach ** np.maximum(powers - 2, 0))
    )
    polyval = np.polynomial.polynomial.polyval
    return OperatorProblem(
        dim=dim,
        F=lambda u: polyval(u, coeffs),
        jacobian=lambda u: np.diag(np.atleast_1d(polyval(u, dcoeffs))),
        center=center,
        radius=radius,
        m1=m1_bound,
        m2=m2_bound if m2 is None else m2,
        rhs=rhs,
        known_solution=known_solution,
        kind="polynomial",
    )
