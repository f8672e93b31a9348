"""Discrete and continuous decay-certificate tests.

Expected values are either exact arithmetic, closed forms, or recomputed
in-test by an independent route (direct condition evaluation, fixed points
of the affine recurrence, closed-form ODE solutions).
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ineqsolve import (
    ContinuousInstance,
    InputError,
    Majorant,
    Schedule,
    certify_continuous,
    certify_corollary,
    certify_discrete,
    inequality_from_dict,
    inequality_to_dict,
    verify_bound,
    worst_case_trajectory,
)


def constant_schedule(n, alpha=0.0, beta=0.0, gamma=0.5, h=1.0):
    return Schedule(
        alpha=np.full(n, alpha),
        beta=np.full(n, beta),
        gamma=np.full(n, gamma),
        h=np.full(n, h),
    )


def section_map_instance(n_steps, a0=1.0, c1=0.25, lam=2.0, y_norm=0.25):
    """Instance built from the solver parameter map: a_n = 4*a0/(4+n),
    mu = lam/a_n, alpha = c1/a_n, beta = drop_n * y_norm, gamma = 1/2."""
    idx = np.arange(n_steps)
    a = 4.0 * a0 / (4.0 + np.arange(n_steps + 1))
    schedule = Schedule(
        alpha=c1 / a[:-1],
        beta=(1.0 / (4.0 + idx)) * y_norm,
        gamma=np.full(n_steps, 0.5),
        h=np.ones(n_steps),
    )
    return schedule, Majorant(lam / a)


class TestScheduleAndMajorant:
    def test_length_mismatch_rejected(self):
        with pytest.raises(InputError):
            Schedule(alpha=np.zeros(3), beta=np.zeros(2), gamma=np.full(3, 0.5))

    def test_non_finite_rejected(self):
        with pytest.raises(InputError):
            Schedule(alpha=[np.nan], beta=[0.0], gamma=[0.5])

    def test_negative_coefficients_rejected(self):
        with pytest.raises(InputError):
            Schedule(alpha=[-1.0], beta=[0.0], gamma=[0.5])
        with pytest.raises(InputError):
            Schedule(alpha=[0.0], beta=[-1.0], gamma=[0.5])

    def test_h_defaults_to_ones(self):
        s = Schedule(alpha=[0.0], beta=[0.0], gamma=[0.5])
        assert s.h.tolist() == [1.0]

    def test_side_condition_not_enforced_at_construction(self):
        s = Schedule(alpha=[0.0], beta=[0.0], gamma=[1.0], h=[1.0])
        assert not s.side_condition_ok()[0]

    def test_majorant_must_be_positive_nondecreasing(self):
        with pytest.raises(InputError):
            Majorant([1.0, 0.0])
        with pytest.raises(InputError):
            Majorant([2.0, 1.0])

    def test_constant_suffix_detection(self):
        assert Majorant([1.0, 1.0, 1.0]).constant_suffix_start() == 0
        assert Majorant([1.0, 2.0, 2.0]).constant_suffix_start() == 1
        assert Majorant([1.0, 2.0, 3.0]).constant_suffix_start() is None


class TestCertifyDiscrete:
    def test_trivial_constant_mu_passes(self):
        # alpha = beta = 0, gamma = 1/2, mu = 1: both condition RHS equal 1/4
        s = constant_schedule(5)
        report = certify_discrete(s, Majorant(np.ones(6)), 1.0)
        assert report.passed
        assert report.violations == []
        assert report.certified_bounds.tolist() == [1.0] * 6
        assert any("constant" in w for w in report.warnings)

    def test_doubling_mu_fails_alpha_and_beta_everywhere(self):
        # mu = 2^n grows faster than gamma admits: headroom = 1/2 - 1 < 0,
        # so both RHS are negative and even zero coefficients violate them
        s = constant_schedule(4)
        report = certify_discrete(s, Majorant(2.0 ** np.arange(5)), 0.1)
        assert not report.passed
        conditions = {(v.index, v.condition) for v in report.violations}
        for n in range(4):
            assert (n, "C-alpha") in conditions
            assert (n, "C-beta") in conditions
        assert all(v.rhs < 0 for v in report.violations)
        assert report.certified_bounds is None

    def test_solver_map_instance_passes_with_equality_at_zero(self):
        # direct evaluation of the conditions: at n=0 both hold with equality
        # (alpha_0 = 0.25 = mu_0/8, beta_0 = 0.0625 = (1/4)(1/2 - 1/4))
        schedule, majorant = section_map_instance(8)
        assert schedule.alpha[0] == 0.25
        assert schedule.beta[0] == 0.0625
        assert majorant.mu[0] == 2.0
        report = certify_discrete(schedule, majorant, 0.5)
        assert report.passed
        # the certified bound holds on the worst-case trajectory
        traj = worst_case_trajectory(schedule, 0.5)
        assert verify_bound(traj, majorant, 1e-12).ok

    def test_g0_above_initial_bound_fails(self):
        s = constant_schedule(2)
        report = certify_discrete(s, Majorant(np.full(3, 2.0)), 0.51)
        assert [v.condition for v in report.violations] == ["C-g0"]
        assert report.violations[0].index == 0

    def test_g0_equal_to_initial_bound_accepted(self):
        s = constant_schedule(2)
        assert certify_discrete(s, Majorant(np.full(3, 2.0)), 0.5).passed

    def test_majorant_length_must_be_schedule_plus_one(self):
        s = constant_schedule(3)
        with pytest.raises(InputError):
            certify_discrete(s, Majorant(np.ones(3)), 0.5)

    def test_negative_g0_rejected(self):
        s = constant_schedule(2)
        with pytest.raises(InputError):
            certify_discrete(s, Majorant(np.ones(3)), -0.1)


class TestCertifyCorollary:
    def test_trivial_instance_with_h_dropped(self):
        s = Schedule(alpha=np.zeros(5), beta=np.zeros(5), gamma=np.full(5, 0.5))
        assert certify_corollary(s, Majorant(np.ones(6)), 1.0).passed

    def test_beta_threshold(self):
        # gamma = 0.9, mu = 1: beta RHS = 0.45; 0.2 passes, 0.5 violates
        ok = Schedule(alpha=np.zeros(3), beta=np.full(3, 0.2), gamma=np.full(3, 0.9))
        bad = Schedule(alpha=np.zeros(3), beta=np.full(3, 0.5), gamma=np.full(3, 0.9))
        majorant = Majorant(np.ones(4))
        assert certify_corollary(ok, majorant, 1.0).passed
        report = certify_corollary(bad, majorant, 1.0)
        assert {v.condition for v in report.violations} == {"C-beta"}
        assert all(math.isclose(v.rhs, 0.45) for v in report.violations)

    def test_gamma_one_boundary_is_side_violation(self):
        s = Schedule(alpha=np.zeros(2), beta=np.zeros(2), gamma=np.ones(2))
        report = certify_corollary(s, Majorant(np.ones(3)), 0.5)
        assert {v.condition for v in report.violations} == {"C-side"}
        assert [v.index for v in report.violations] == [0, 1]

    def test_nonunit_h_rejected(self):
        s = constant_schedule(2, h=0.5)
        with pytest.raises(InputError):
            certify_corollary(s, Majorant(np.ones(3)), 0.5)

    @settings(deadline=None, derandomize=True, max_examples=60)
    @given(
        n=st.integers(1, 6),
        gamma=st.floats(0.05, 1.3),
        alpha=st.floats(0.0, 1.0),
        beta=st.floats(0.0, 1.0),
        growth=st.floats(0.0, 0.8),
        mu0=st.floats(0.2, 5.0),
        g0=st.floats(0.0, 3.0),
    )
    def test_specialization_matches_discrete(self, n, gamma, alpha, beta, growth, mu0, g0):
        # on h = 1 inputs (including failing ones) the two certifiers agree
        schedule = Schedule(
            alpha=np.full(n, alpha),
            beta=np.full(n, beta),
            gamma=np.full(n, gamma),
            h=np.ones(n),
        )
        majorant = Majorant(mu0 * (1.0 + growth) ** np.arange(n + 1))
        a = certify_corollary(schedule, majorant, g0)
        b = certify_discrete(schedule, majorant, g0)
        assert a.to_dict() == b.to_dict()


class TestWorstCaseTrajectory:
    def test_pure_geometric_decay(self):
        traj = worst_case_trajectory(constant_schedule(10), 1.0)
        assert np.allclose(traj, 0.5 ** np.arange(11), rtol=0, atol=0)

    def test_affine_recurrence_fixed_point(self):
        # g_{n+1} = g_n/2 + 1/8 from 0: fixed point beta/gamma = 1/4
        traj = worst_case_trajectory(constant_schedule(60, beta=0.125), 0.0)
        assert traj[1] == 0.125
        assert traj[2] == 0.1875
        assert abs(traj[-1] - 0.25) < 1e-15
        # monotone approach; saturates at the fixed point once below ulp scale
        assert np.all(np.diff(traj) >= 0)
        assert np.all(traj <= 0.25)

    def test_half_step_contraction(self):
        traj = worst_case_trajectory(constant_schedule(8, h=0.5), 1.0)
        assert np.allclose(traj, 0.75 ** np.arange(9), rtol=0, atol=0)

    def test_side_condition_required(self):
        s = Schedule(alpha=np.zeros(2), beta=np.zeros(2), gamma=np.ones(2))
        with pytest.raises(InputError):
            worst_case_trajectory(s, 1.0)

    def test_domination_by_slack_sequences(self):
        # any per-step shrinkage of the equality update stays below the
        # worst case pointwise: the update map is monotone on g >= 0
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(1, 60))
            gamma = rng.uniform(0.1, 0.9, n)
            h = rng.uniform(0.1, 1.0, n)
            alpha = rng.uniform(0.0, 0.5, n)
            beta = rng.uniform(0.0, 0.5, n)
            schedule = Schedule(alpha=alpha, beta=beta, gamma=gamma, h=h)
            g0 = rng.uniform(0.0, 1.0)
            worst = worst_case_trajectory(schedule, g0)
            slack = rng.uniform(0.0, 1.0, n)
            decay = (1.0 - h * gamma).tolist()
            quad = (alpha * h).tolist()
            const = (h * beta).tolist()
            g = g0
            for i in range(n):
                g = slack[i] * (g * decay[i] + quad[i] * g * g + const[i])
                assert g <= worst[i + 1]

    @settings(deadline=None, derandomize=True, max_examples=200)
    @given(
        mu=st.floats(1e-3, 1e3),
        growth=st.floats(0.0, 1.0),
        gamma=st.floats(0.05, 0.95),
        h=st.floats(0.1, 1.0),
    )
    def test_proof_step_identity(self, mu, growth, gamma, h):
        # with both conditions tight and g = 1/mu, one equality step lands at
        # 1/mu' - (mu' - mu)^2 / (mu^2 mu') exactly (up to a few ulps)
        if h * gamma >= 1.0:
            h = 0.99 / gamma
        mu_next = mu * (1.0 + growth * h * gamma)
        headroom = gamma - (mu_next - mu) / (mu * h)
        alpha = 0.5 * mu * headroom
        beta = headroom / (2.0 * mu)
        schedule = Schedule(alpha=[alpha], beta=[beta], gamma=[gamma], h=[h])
        stepped = worst_case_trajectory(schedule, 1.0 / mu)[1]
        expected = 1.0 / mu_next - (mu_next - mu) ** 2 / (mu * mu * mu_next)
        scale = abs(1.0 / mu) + abs(stepped) + abs(expected)
        assert abs(stepped - expected) <= 4.0 * np.spacing(scale)


class TestVerifyBound:
    def test_accepts_dominated_trajectory(self):
        traj = 0.5 ** np.arange(6)
        assert verify_bound(traj, Majorant(np.ones(6)), 0.0).ok

    def test_certified_map_instance_bound(self):
        schedule, majorant = section_map_instance(30)
        traj = worst_case_trajectory(schedule, 0.5)
        assert verify_bound(traj, majorant, 1e-12).ok

    def test_reports_first_violation(self):
        check = verify_bound(np.ones(4), Majorant(np.full(4, 2.0)), 0.0)
        assert not check.ok
        assert check.first_violation == 0

    def test_non_finite_counts_as_violation(self):
        check = verify_bound([0.1, np.inf], Majorant(np.ones(2)), 0.0)
        assert not check.ok
        assert check.first_violation == 1

    def test_length_mismatch_rejected(self):
        with pytest.raises(InputError):
            verify_bound(np.ones(3), Majorant(np.ones(4)), 0.0)


def exp_instance():
    return ContinuousInstance(
        alpha=lambda t: 0.0,
        beta=lambda t: math.exp(-t / 2.0) / 8.0,
        gamma=lambda t: 1.0,
        mu=lambda t: math.exp(t / 2.0),
        mu_dot=lambda t: 0.5 * math.exp(t / 2.0),
        t0=0.0,
        T=10.0,
        g0=0.5,
    )


class TestCertifyContinuous:
    def test_exponential_instance_passes(self):
        cert = certify_continuous(exp_instance(), 2001)
        assert cert.conditions.passed
        assert cert.bound_checked and cert.bound_ok
        assert cert.passed
        # closed form: g(t) = e^{-t}/2 + (e^{-t/2} - e^{-t})/4 < e^{-t/2}
        closed = 0.5 * np.exp(-cert.t) + (np.exp(-cert.t / 2.0) - np.exp(-cert.t)) / 4.0
        assert np.max(np.abs(cert.g - closed)) < 1e-10
        assert np.all(cert.g < np.exp(-cert.t / 2.0))

    def test_fast_growing_mu_rejected_at_every_node(self):
        instance = exp_instance()
        instance.mu = lambda t: math.exp(2.0 * t)
        instance.mu_dot = lambda t: 2.0 * math.exp(2.0 * t)
        cert = certify_continuous(instance, 101)
        assert not cert.conditions.passed
        assert not cert.bound_checked and cert.bound_ok is None
        alpha_nodes = {v.index for v in cert.conditions.violations if v.condition == "C-alpha"}
        beta_nodes = {v.index for v in cert.conditions.violations if v.condition == "C-beta"}
        assert alpha_nodes == set(range(101))
        assert beta_nodes == set(range(101))

    def test_linear_ode_closed_form(self):
        instance = ContinuousInstance(
            alpha=lambda t: 0.0,
            beta=lambda t: 0.0,
            gamma=lambda t: 1.0,
            mu=lambda t: math.exp(t / 2.0),
            mu_dot=lambda t: 0.5 * math.exp(t / 2.0),
            t0=0.0,
            T=10.0,
            g0=0.9,
        )
        cert = certify_continuous(instance, 2001)
        assert cert.passed
        assert np.max(np.abs(cert.g - 0.9 * np.exp(-cert.t))) < 1e-8
        assert np.all(cert.g < np.exp(-cert.t / 2.0))

    def test_strict_start_condition(self):
        instance = exp_instance()
        instance.g0 = 1.0  # mu(0)*g0 = 1 is not strictly below 1
        cert = certify_continuous(instance, 51)
        assert [v.condition for v in cert.conditions.violations] == ["C-g0"]

    def test_discretized_instance_passes_discrete_certifier(self):
        # sampling the passing instance at dt = 1e-3 yields a certified
        # discrete schedule (the continuous conditions have slack 2)
        instance = exp_instance()
        dt = 1e-3
        t = np.arange(0.0, 10.0 + dt / 2.0, dt)
        schedule = Schedule(
            alpha=np.zeros(t.size - 1),
            beta=np.exp(-t[:-1] / 2.0) / 8.0,
            gamma=np.ones(t.size - 1),
            h=np.full(t.size - 1, dt),
        )
        majorant = Majorant(np.exp(t / 2.0))
        assert certify_discrete(schedule, majorant, instance.g0).passed

    def test_grid_too_small_rejected(self):
        with pytest.raises(InputError):
            certify_continuous(exp_instance(), 1)

    def test_negative_gamma_rejected(self):
        instance = exp_instance()
        instance.gamma = lambda t: -1.0
        with pytest.raises(InputError):
            certify_continuous(instance, 11)

    def test_non_finite_callable_rejected(self):
        instance = exp_instance()
        instance.beta = lambda t: math.inf
        with pytest.raises(InputError):
            certify_continuous(instance, 11)


class TestJsonInterface:
    def test_round_trip(self):
        schedule, majorant = section_map_instance(4)
        data = inequality_to_dict(schedule, majorant, 0.5)
        s2, m2, g0 = inequality_from_dict(data)
        assert s2.alpha.tolist() == schedule.alpha.tolist()
        assert s2.beta.tolist() == schedule.beta.tolist()
        assert s2.gamma.tolist() == schedule.gamma.tolist()
        assert s2.h.tolist() == schedule.h.tolist()
        assert m2.mu.tolist() == majorant.mu.tolist()
        assert g0 == 0.5

    def test_missing_field_named(self):
        with pytest.raises(InputError, match="mu"):
            inequality_from_dict({"alpha": [0], "beta": [0], "gamma": [0.5], "g0": 1})

    def test_side_invariant_enforced_at_load(self):
        data = {"alpha": [0], "beta": [0], "gamma": [1.0], "h": [1.0], "mu": [1, 1], "g0": 0.5}
        with pytest.raises(InputError, match="0 < h"):
            inequality_from_dict(data)

    def test_report_dict_shape(self):
        s = constant_schedule(2)
        report = certify_discrete(s, Majorant(np.ones(3)), 2.0)
        payload = report.to_dict()
        assert payload["passed"] is False
        assert payload["violations"][0] == {"index": 0, "condition": "C-g0", "lhs": 2.0, "rhs": 1.0}
