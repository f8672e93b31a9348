"""Command-line entry point: certify / certify-ode / solve / diagnose / sweep.

Subcommands
-----------
certify <ineq.json>
    Check a discrete instance ({"alpha": [...], "beta": [...],
    "gamma": [...], "h": [...], "mu": [...], "g0": x}); writes
    certificate.json.
certify-ode <ode.json> --grid N
    Continuous instance with expression-valued coefficients over t (e.g.
    "exp(-t/2)/8"); writes certificate.json and g_samples.csv.
solve <problem.toml> --config <cfg.toml>
    Run the regularized iteration; writes preconditions.json, trace.csv
    and trace.json.
diagnose <problem.toml> --config <cfg.toml> [--n-max N]
    Full verification chain; writes chain.json and path.csv.
sweep <problem.toml> --a0 lo:hi:steps --lambda lo:hi:steps
    Chain verdict per (a0, lambda) grid cell; writes sweep.csv in grid
    order.

Common flags: --out DIR (default $INEQSOLVE_OUT or the working directory),
--seed S (governs only the sampling-based audits), --set key=value (beats
file config values; last one wins), --full-trace, --strict.

Exit status: 0 all requested checks passed, 1 some check failed, 2 input
error.  Identical inputs and seed produce byte-identical outputs: floats
are written with repr-exact formatting and JSON keys are sorted.
"""

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .certify import (
    ContinuousInstance,
    certify_continuous,
    certify_discrete,
    inequality_from_dict,
)
from .diagnostics import verify_chain
from .errors import ConsistencyError, InputError
from .operators import (
    OperatorProblem,
    cubic_problem,
    estimate_M2,
    linear_problem,
    polynomial_problem,
    psd_spotcheck,
    rotation_problem,
)
from .solver import SolverConfig, solve

_PROBLEM_KINDS = ("linear", "cubic", "rotation", "polynomial")

_CONFIG_KEYS = {
    "a0",
    "lambda",
    "h",
    "max_iter",
    "stop_a",
    "y_norm_bound",
    "g0_bound",
    "strict",
    "u0",
}

# restricted namespace for coefficient expressions over t
_EXPR_NAMES = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "tanh": np.tanh,
    "cosh": np.cosh,
    "sinh": np.sinh,
    "abs": abs,
    "min": min,
    "max": max,
    "pi": math.pi,
    "e": math.e,
}


def read_structured(path) -> dict:
    """Read a .json or .toml file into a mapping, with parse-error context."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"input file not found: {path}")
    suffix = path.suffix.lower()
    if suffix == ".json":
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    elif suffix == ".toml":
        try:
            data = tomllib.loads(path.read_text())
        except tomllib.TOMLDecodeError as exc:
            raise InputError(f"{path}: invalid TOML: {exc}") from exc
    else:
        raise InputError(f"{path}: expected a .json or .toml file")
    if not isinstance(data, dict):
        raise InputError(f"{path}: top level must be a table/object")
    return data


def compile_time_expression(source):
    """Turn a number or an expression string over t into a scalar callable.

    Expressions may use t and the names exp, log, sqrt, sin, cos, tan,
    tanh, sinh, cosh, abs, min, max, pi, e.  Anything else is rejected.
    """
    if isinstance(source, (int, float)):
        value = float(source)
        return lambda t: value
    if not isinstance(source, str):
        raise InputError(f"expected a number or expression string, got {type(source).__name__}")
    try:
        code = compile(source, "<expression>", "eval")
    except SyntaxError as exc:
        raise InputError(f"invalid expression {source!r}: {exc.msg}") from exc
    for name in code.co_names:
        if name != "t" and name not in _EXPR_NAMES:
            raise InputError(f"expression {source!r} uses unknown name {name!r}")

    def evaluate_at(t):
        return float(eval(code, {"__builtins__": {}}, {**_EXPR_NAMES, "t": t}))

    return evaluate_at


def load_problem(data) -> OperatorProblem:
    """Build an OperatorProblem from a problem-spec mapping (see README)."""
    kind = data.get("kind")
    if kind not in _PROBLEM_KINDS:
        raise InputError(f"field 'kind' must be one of {_PROBLEM_KINDS}, got {kind!r}")
    ball = data.get("ball", {})
    if not isinstance(ball, dict):
        raise InputError("field 'ball' must be a table with center and radius")
    center = ball.get("center")
    radius = float(ball.get("radius", 1.0))
    rhs = data.get("f")
    known = data.get("known_solution")
    m2 = data.get("m2")
    common = {"center": center, "radius": radius, "rhs": rhs, "known_solution": known}
    try:
        if kind == "linear":
            matrix = data.get("matrix")
            if matrix is None and "diag" in data:
                matrix = np.diag(np.asarray(data["diag"], dtype=float))
            if matrix is None:
                raise InputError("linear problems need 'matrix' or 'diag'")
            return linear_problem(matrix, **common)
        if kind == "cubic":
            dim = int(data.get("dim", len(center) if center is not None else 1))
            return cubic_problem(dim=dim, m2=m2, **common)
        if kind == "rotation":
            if data.get("dim") not in (None, 2):
                raise InputError("rotation problems are two-dimensional")
            return rotation_problem(**common)
        dim = int(data.get("dim", len(center) if center is not None else 1))
        coefficients = data.get("coefficients")
        if coefficients is None:
            raise InputError("polynomial problems need 'coefficients'")
        return polynomial_problem(coefficients, dim=dim, m2=m2, **common)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"invalid problem spec: {exc}") from exc


def _coerce_override(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_overrides(pairs) -> dict:
    """Parse repeated key=value flags; values are JSON literals when they parse."""
    overrides = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise InputError(f"override {pair!r} is not of the form key=value")
        overrides[key.strip()] = _coerce_override(value.strip())
    return overrides


def load_config(data, overrides=None) -> SolverConfig:
    """Build a SolverConfig from a config mapping plus flat overrides."""
    merged = dict(data)
    merged.update(overrides or {})
    unknown = set(merged) - _CONFIG_KEYS
    if unknown:
        raise InputError(f"unknown config fields: {sorted(unknown)}")
    if "a0" not in merged:
        raise InputError("config needs field 'a0'")
    kwargs = {
        "a0": merged["a0"],
        "lam": merged.get("lambda"),
        "max_iter": merged.get("max_iter", 1000),
        "stop_a": merged.get("stop_a"),
        "y_norm_bound": merged.get("y_norm_bound"),
        "g0_bound": merged.get("g0_bound"),
        "strict": bool(merged.get("strict", False)),
        "u0": merged.get("u0"),
    }
    if "h" in merged:
        kwargs["h"] = merged["h"]
    return SolverConfig(**kwargs)


def load_ode_instance(data) -> ContinuousInstance:
    """Build a ContinuousInstance from an ODE spec mapping."""
    for key in ("alpha", "beta", "gamma", "mu", "mu_dot", "t0", "T", "g0"):
        if key not in data:
            raise InputError(f"missing field '{key}' in ODE spec")
    return ContinuousInstance(
        alpha=compile_time_expression(data["alpha"]),
        beta=compile_time_expression(data["beta"]),
        gamma=compile_time_expression(data["gamma"]),
        mu=compile_time_expression(data["mu"]),
        mu_dot=compile_time_expression(data["mu_dot"]),
        t0=float(data["t0"]),
        T=float(data["T"]),
        g0=float(data["g0"]),
    )


def load_spec(path, config_path=None, overrides=None):
    """Load and fully validate a spec file; dispatches on its fields.

    Returns ``(domain_object, SolverConfig | None)`` where the domain
    object is an OperatorProblem ('kind' present), a ContinuousInstance
    ('mu_dot' present), or a ``(Schedule, Majorant, g0)`` triple.
    """
    data = read_structured(path)
    config = None
    if config_path is not None:
        config = load_config(read_structured(config_path), overrides)
    elif overrides:
        config = load_config({}, overrides) if "a0" in (overrides or {}) else None
    if "kind" in data:
        return load_problem(data), config
    if "mu_dot" in data:
        return load_ode_instance(data), config
    return inequality_from_dict(data), config


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_cell(cell) for cell in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, payload):
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


@dataclass
class RunSpec:
    """A fully parsed command invocation; inputs are validated before compute."""

    command: str
    input_path: Path
    config_path: Path | None = None
    out_dir: Path = Path(".")
    seed: int = 0
    overrides: dict = field(default_factory=dict)
    grid: int = 1001
    n_max: int | None = None
    full_trace: bool = False
    strict: bool = False
    a0_range: tuple | None = None
    lambda_range: tuple | None = None


def _parse_range(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise InputError(f"range {text!r} is not of the form lo:hi:steps")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise InputError(f"range {text!r} is not of the form lo:hi:steps") from exc
    if steps < 1 or not math.isfinite(lo) or not math.isfinite(hi) or lo <= 0 or hi < lo:
        raise InputError(f"range {text!r} needs 0 < lo <= hi and steps >= 1")
    return lo, hi, steps


def _grid_values(rng):
    lo, hi, steps = rng
    return np.linspace(lo, hi, steps)


def _problem_audit(problem, seed):
    """Sampling-based monotonicity and m2 audits (the only seed-dependent checks)."""
    psd = psd_spotcheck(problem, sample_count=25, seed=seed)
    audit = {
        "psd_min_eigenvalue": psd.min_eigenvalue,
        "psd_passed": psd.passed,
    }
    try:
        estimate_M2(problem, sample_count=25, seed=seed)
        audit["m2_consistent"] = True
    except ConsistencyError as exc:
        audit["m2_consistent"] = False
        audit["m2_note"] = str(exc)
    return audit, psd.passed and audit["m2_consistent"]


def _solver_inputs(spec):
    problem = load_problem(read_structured(spec.input_path))
    if spec.config_path is None:
        raise InputError(f"'{spec.command}' needs --config")
    config = load_config(read_structured(spec.config_path), spec.overrides)
    if spec.strict:
        config = replace(config, strict=True)
    if spec.n_max is not None:
        config = replace(config, max_iter=spec.n_max)
    if problem.rhs is None:
        raise InputError("problem file must provide the right-hand side 'f'")
    u0 = problem.center if config.u0 is None else config.u0
    return problem, config, u0


def run(spec: RunSpec) -> int:
    """Execute a RunSpec; writes artifacts into spec.out_dir and returns the exit code.

    All inputs are loaded and validated before any computation starts; no
    output file is created when loading fails.
    """
    out_dir = Path(spec.out_dir)

    if spec.command == "certify":
        schedule, majorant, g0 = inequality_from_dict(read_structured(spec.input_path))
        report = certify_discrete(schedule, majorant, g0)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_json(out_dir / "certificate.json", report.to_dict())
        return 0 if report.passed else 1

    if spec.command == "certify-ode":
        instance = load_ode_instance(read_structured(spec.input_path))
        certificate = certify_continuous(instance, spec.grid)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_json(out_dir / "certificate.json", certificate.to_dict())
        write_csv(
            out_dir / "g_samples.csv",
            ["t", "g", "bound"],
            list(zip(certificate.t, certificate.g, certificate.bound)),
        )
        return 0 if certificate.passed else 1

    if spec.command == "solve":
        problem, config, u0 = _solver_inputs(spec)
        trace = solve(problem, problem.rhs, config, u0)
        audit, audit_ok = _problem_audit(problem, spec.seed)
        payload = trace.preconditions.to_dict()
        payload["audit"] = audit
        out_dir.mkdir(parents=True, exist_ok=True)
        write_json(out_dir / "preconditions.json", payload)
        write_csv(
            out_dir / "trace.csv",
            ["n", "a_n", "residual", "step_norm"],
            [[s.n, s.a, s.residual, s.step_norm] for s in trace.steps],
        )
        write_json(out_dir / "trace.json", trace.to_dict(full_vectors=spec.full_trace))
        ok = trace.preconditions.passed and trace.status != "diverged" and audit_ok
        return 0 if ok else 1

    if spec.command == "diagnose":
        problem, config, u0 = _solver_inputs(spec)
        if problem.known_solution is None:
            raise InputError("'diagnose' needs a problem file with 'known_solution'")
        report = verify_chain(problem, problem.rhs, config, u0)
        audit, audit_ok = _problem_audit(problem, spec.seed)
        payload = report.to_dict()
        payload["audit"] = audit
        out_dir.mkdir(parents=True, exist_ok=True)
        write_json(out_dir / "chain.json", payload)
        write_csv(
            out_dir / "path.csv",
            ["n", "a_n", "g_n", "g_bound", "drift", "drift_bound"],
            report.csv_rows(),
        )
        return 0 if report.passed and audit_ok else 1

    if spec.command == "sweep":
        problem, config, u0 = _solver_inputs(spec)
        if problem.known_solution is None:
            raise InputError("'sweep' needs a problem file with 'known_solution'")
        if spec.a0_range is None or spec.lambda_range is None:
            raise InputError("'sweep' needs --a0 lo:hi:steps and --lambda lo:hi:steps")
        rows = []
        all_pass = True
        for a0 in _grid_values(spec.a0_range):
            for lam in _grid_values(spec.lambda_range):
                cell = replace(config, a0=float(a0), lam=float(lam), stop_a=config.stop_a)
                report = verify_chain(problem, problem.rhs, cell, u0)
                pre_ok = report.stage("preconditions").passed if report.trace else False
                rows.append(
                    [
                        a0,
                        lam,
                        pre_ok,
                        report.passed,
                        report.summary.get("final_g"),
                        report.summary.get("final_error"),
                        report.summary.get("final_a"),
                    ]
                )
                all_pass = all_pass and report.passed
        out_dir.mkdir(parents=True, exist_ok=True)
        write_csv(
            out_dir / "sweep.csv",
            ["a0", "lambda", "preconditions_pass", "chain_pass", "final_g", "final_error", "final_a"],
            rows,
        )
        return 0 if all_pass else 1

    raise InputError(f"unknown command {spec.command!r}")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ineqsolve",
        description="Decay-bound certification and self-verifying regularized iteration",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_flag=False):
        p.add_argument("input", help="spec file (.json or .toml)")
        if config_flag:
            p.add_argument("--config", help="solver config file (.json or .toml)")
            p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                           help="override a config field; repeatable, last wins")
        p.add_argument("--out", default=None, help="output directory (default $INEQSOLVE_OUT or .)")
        p.add_argument("--seed", type=int, default=0, help="seed for sampling-based audits")

    p = sub.add_parser("certify", help="certify a discrete instance")
    common(p)

    p = sub.add_parser("certify-ode", help="certify a continuous instance")
    common(p)
    p.add_argument("--grid", type=int, default=1001, help="number of grid points (>= 2)")

    p = sub.add_parser("solve", help="run the regularized iteration")
    common(p, config_flag=True)
    p.add_argument("--full-trace", action="store_true", help="include iterate vectors in trace.json")
    p.add_argument("--strict", action="store_true", help="tighten a0 precondition to 64*c1*||y||")

    p = sub.add_parser("diagnose", help="run the full verification chain")
    common(p, config_flag=True)
    p.add_argument("--n-max", type=int, default=None, help="override max_iter")
    p.add_argument("--strict", action="store_true", help="tighten a0 precondition to 64*c1*||y||")

    p = sub.add_parser("sweep", help="chain verdict over an (a0, lambda) grid")
    common(p, config_flag=True)
    p.add_argument("--a0", dest="a0_range", required=True, metavar="LO:HI:STEPS")
    p.add_argument("--lambda", dest="lambda_range", required=True, metavar="LO:HI:STEPS")
    p.add_argument("--strict", action="store_true", help="tighten a0 precondition to 64*c1*||y||")

    return parser


def _spec_from_args(args) -> RunSpec:
    out = args.out if args.out is not None else os.environ.get("INEQSOLVE_OUT", ".")
    return RunSpec(
        command=args.command,
        input_path=Path(args.input),
        config_path=Path(args.config) if getattr(args, "config", None) else None,
        out_dir=Path(out),
        seed=args.seed,
        overrides=parse_overrides(getattr(args, "set", None)),
        grid=getattr(args, "grid", 1001),
        n_max=getattr(args, "n_max", None),
        full_trace=getattr(args, "full_trace", False),
        strict=getattr(args, "strict", False),
        a0_range=_parse_range(args.a0_range) if getattr(args, "a0_range", None) else None,
        lambda_range=_parse_range(args.lambda_range) if getattr(args, "lambda_range", None) else None,
    )


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        spec = _spec_from_args(args)
        return run(spec)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
