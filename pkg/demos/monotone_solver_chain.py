"""Walkthrough: solving the monotone scalar equation u + u^3 = 2 by the
regularized iteration, then auditing the run against its own theory.

The map F(u) = u + u^3 is strongly monotone with solution y = 1.  On the
ball B(0.5, 1) the second derivative is bounded by m2 = 9, so c1 = 9/4 and
the canonical parameters are lambda = 8*c1 = 18 and a0 = 16*c1*||y|| = 36.
The chain report checks, step by step, that the run obeys the certified
decay g_n = ||u_n - V_n|| <= a_n / lambda along the regularized path V_n.
"""

from ineqsolve import SolverConfig, cubic_problem, verify_chain

problem = cubic_problem(dim=1, center=[0.5], radius=1.0, rhs=[2.0], known_solution=[1.0])
print("declared ball bound m2 =", problem.m2, "->  c1 =", problem.m2 / 4.0)

config = SolverConfig(a0=36.0, lam=18.0, max_iter=300)
report = verify_chain(problem, [2.0], config, u0=[0.5])

print("\nstage audit:")
for stage in report.stages:
    print(f"  {stage.name:17s} {'pass' if stage.passed else 'FAIL'}")

print("\nrun summary:")
for key in ("steps", "final_a", "final_g", "final_error"):
    print(f"  {key:12s} {report.summary[key]}")

print("\n    n        a_n          u_n          g_n        a_n/lambda")
for row in report.trace.steps[:: len(report.trace.steps) // 10]:
    print(f"  {row.n:4d}   {row.a:9.5f}   {row.u[0]:10.7f}   {row.g:.3e}   {row.g_bound:.3e}")

# a deliberately small a0 breaks the preconditions; the audit still runs
# and reports what actually happened instead of refusing
low = verify_chain(problem, [2.0], SolverConfig(a0=4.0, max_iter=300), u0=[0.5])
print("\nwith a0 = 4 (floor is 36):")
print("  preconditions pass:", low.stage("preconditions").passed)
print("  certified decay observed:", low.stage("g_bound").passed)
print("  final error:", low.summary["final_error"])
