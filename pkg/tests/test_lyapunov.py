"""Lyapunov certificate: positivity, gradient, and continuous-flow decay."""

import numpy as np
import pytest

from triggerstep.dynamics import FlowParams, State, field_hb_displaced, rk4_reference
from triggerstep.lyapunov import (LyapunovContext, decay_residual,
                                  lyapunov_gradient, lyapunov_value)
from triggerstep.objectives import make_quadratic


def test_nonnegative_zero_only_at_rest(quad_oracle, quad_params):
    ctx = LyapunovContext(quad_oracle, quad_params)
    rest = State(quad_oracle.minimizer, np.zeros(2))
    assert lyapunov_value(rest, ctx) == 0.0
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = State(rng.uniform(-60, 60, 2), rng.uniform(-60, 60, 2))
        assert lyapunov_value(p, ctx) > 0.0


def test_requires_minimizer(quad_params):
    base = make_quadratic(np.array([1.0, 2.0]))
    anonymous = type(base)(n=base.n, mu=base.mu, lipschitz=base.lipschitz,
                           value_hook=base.value_hook,
                           gradient_hook=base.gradient_hook, minimizer=None)
    with pytest.raises(ValueError):
        LyapunovContext(anonymous, quad_params)


def test_gradient_matches_finite_differences(quad_oracle, quad_params):
    ctx = LyapunovContext(quad_oracle, quad_params)
    rng = np.random.default_rng(1)
    h = 1e-6
    for _ in range(10):
        p = State(rng.uniform(-20, 20, 2), rng.uniform(-20, 20, 2))
        grad = lyapunov_gradient(p, ctx)
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            dx = (lyapunov_value(State(p.x + e, p.v), ctx)
                  - lyapunov_value(State(p.x - e, p.v), ctx)) / (2 * h)
            dv = (lyapunov_value(State(p.x, p.v + e), ctx)
                  - lyapunov_value(State(p.x, p.v - e), ctx)) / (2 * h)
            assert dx == pytest.approx(grad.x[i], rel=1e-5, abs=1e-4)
            assert dv == pytest.approx(grad.v[i], rel=1e-5, abs=1e-4)


def test_batched_evaluation(quad_oracle, quad_params):
    ctx = LyapunovContext(quad_oracle, quad_params)
    rng = np.random.default_rng(2)
    xs = rng.normal(size=(6, 2))
    vs = rng.normal(size=(6, 2))
    batch = lyapunov_value(State(xs, vs), ctx)
    assert batch.shape == (6,)
    for i in range(6):
        assert batch[i] == pytest.approx(
            lyapunov_value(State(xs[i], vs[i]), ctx), rel=1e-14)


def test_residual_nonpositive_at_certified_displacements(
        quad_oracle, quad_params, quad_consts):
    ctx = LyapunovContext(quad_oracle, quad_params)
    rng = np.random.default_rng(3)
    for a in (0.0, 0.5 * quad_consts.a1_star, quad_consts.a1_star):
        for _ in range(30):
            p = State(rng.uniform(-60, 60, 2), rng.uniform(-60, 60, 2))
            assert decay_residual(p, a, ctx) <= 1e-9 * (1 + lyapunov_value(p, ctx))


def test_decay_along_exact_flow(quad_oracle, quad_params):
    # integrate the a = 0 flow and compare against the exponential envelope
    ctx = LyapunovContext(quad_oracle, quad_params)
    p0 = State(np.array([50.0, 50.0]), np.zeros(2))
    trace = rk4_reference(
        lambda p: field_hb_displaced(p, quad_params, quad_oracle), p0, 5.0, 1e-3)
    v0 = lyapunov_value(p0, ctx)
    kappa = 0.25 * quad_params.sqrt_mu
    for rec in trace.records[:: len(trace.records) // 100]:
        val = lyapunov_value(State(rec.x, rec.v), ctx)
        assert val <= v0 * np.exp(-kappa * rec.t) * (1 + 1e-6)
