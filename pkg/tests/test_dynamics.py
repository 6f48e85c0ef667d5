"""Flow field, hold maps, initial velocity, and the RK4 reference."""

import math

import numpy as np
import pytest

from triggerstep.dynamics import (FlowParams, State, field_hb_displaced,
                                  hoh_step_from_gradient, hoh_trajectory,
                                  initial_velocity, rk4_reference,
                                  zoh_step_from_gradient, zoh_trajectory)
from triggerstep.errors import NumericError
from triggerstep.objectives import make_quadratic


def test_flow_params_defaults(quad_oracle):
    params = FlowParams.from_oracle(quad_oracle)
    s = 2e-2 / (36.0 * 2e2**2)
    assert params.s == pytest.approx(s, rel=1e-15)
    assert params.sqrt_mu == pytest.approx(math.sqrt(2e-2), rel=1e-15)
    assert params.sqrt_mu_s == pytest.approx(1.0 + math.sqrt(2e-2 * s), rel=1e-15)
    assert params.mu_s == pytest.approx(params.sqrt_mu_s**2, rel=1e-15)


def test_initial_velocity_benchmark_value(quad_oracle, quad_params):
    # hand-derived: grad f(50, 50) = (2*0.01*50, 2*100*50) = (1, 10000),
    # v0 = -2 sqrt(s) grad / (1 + sqrt(mu s))
    s = 2e-2 / (36.0 * 2e2**2)
    expected = -2.0 * math.sqrt(s) / (1.0 + math.sqrt(2e-2 * s)) \
        * np.array([1.0, 10000.0])
    v0 = initial_velocity(np.array([50.0, 50.0]), quad_params, quad_oracle)
    assert np.allclose(v0, expected, rtol=1e-14, atol=0.0)
    # order-of-magnitude sanity on the frozen benchmark numbers
    assert abs(v0[0]) < 3e-4 and -2.5 < v0[1] < -2.2


def test_field_matches_hand_formula(quad_oracle):
    rng = np.random.default_rng(5)
    params = FlowParams.from_oracle(quad_oracle, a=0.03)
    for _ in range(10):
        p = State(rng.normal(size=2), rng.normal(size=2))
        out = field_hb_displaced(p, params, quad_oracle)
        g = quad_oracle.gradient(p.x + 0.03 * p.v)
        assert np.allclose(out.x, p.v)
        assert np.allclose(
            out.v, -2.0 * params.sqrt_mu * p.v - params.sqrt_mu_s * g)


def test_zoh_is_affine(quad_oracle, quad_params):
    rng = np.random.default_rng(6)
    p = State(rng.normal(size=2), rng.normal(size=2))
    g = quad_oracle.gradient(p.x)
    out = zoh_step_from_gradient(p, 0.3, quad_params, g)
    assert np.allclose(out.x, p.x + 0.3 * p.v)
    assert np.allclose(out.v, p.v + 0.3 * (-2.0 * quad_params.sqrt_mu * p.v
                                           - quad_params.sqrt_mu_s * g))
    # array t broadcasts to a leading axis
    ts = np.linspace(0.0, 1.0, 7)
    traj = zoh_step_from_gradient(p, ts, quad_params, g)
    assert traj.x.shape == (7, 2)
    assert np.allclose(traj.x[3], p.x + ts[3] * p.v)


def test_hoh_matches_rk4_frozen_forcing(quad_oracle, quad_params):
    rng = np.random.default_rng(7)
    p0 = State(rng.uniform(-30, 30, 2), rng.uniform(-30, 30, 2))
    g = quad_oracle.gradient(p0.x + 0.05 * p0.v)

    def frozen_field(p):
        return State(x=p.v, v=-2.0 * quad_params.sqrt_mu * p.v
                     - quad_params.sqrt_mu_s * g)

    ref = rk4_reference(frozen_field, p0, 0.05, 1e-5)
    end = ref.records[-1]
    out = hoh_step_from_gradient(p0, end.t, quad_params, g)
    assert np.max(np.abs(out.x - end.x)) < 1e-10
    assert np.max(np.abs(out.v - end.v)) < 1e-10


def test_hoh_near_zoh_at_tiny_t(quad_oracle, quad_params):
    rng = np.random.default_rng(8)
    p = State(rng.normal(size=2), rng.normal(size=2))
    g = quad_oracle.gradient(p.x)
    t = 1e-9
    zoh = zoh_step_from_gradient(p, t, quad_params, g)
    hoh = hoh_step_from_gradient(p, t, quad_params, g)
    # holds agree to O(t^2); at t = 1e-9 that is below one ulp of the state,
    # so the maps match to rounding (a few eps of the component magnitudes)
    assert np.max(np.abs(zoh.x - hoh.x)) < 1e-15
    assert np.max(np.abs(zoh.v - hoh.v)) < 1e-15


def test_trajectory_wrappers_use_displaced_gradient(quad_oracle):
    rng = np.random.default_rng(9)
    params = FlowParams.from_oracle(quad_oracle, a=0.2)
    p = State(rng.normal(size=2), rng.normal(size=2))
    g = quad_oracle.gradient(p.x + 0.2 * p.v)
    for wrapper, step in ((zoh_trajectory, zoh_step_from_gradient),
                          (hoh_trajectory, hoh_step_from_gradient)):
        a = wrapper(p, 0.4, params, quad_oracle)
        b = step(p, 0.4, params, g)
        assert np.allclose(a.x, b.x) and np.allclose(a.v, b.v)


def test_rk4_records_and_order():
    # x' = -x: global error scales like h^4
    def field(p):
        return State(x=-p.x, v=-p.v)

    p0 = State(np.array([1.0]), np.array([1.0]))
    errs = []
    for h in (0.1, 0.05):
        trace = rk4_reference(field, p0, 1.0, h)
        assert len(trace.records) == int(round(1.0 / h)) + 1
        errs.append(abs(float(trace.records[-1].x[0]) - math.exp(-1.0)))
    ratio = errs[0] / errs[1]
    assert 12.0 < ratio < 20.0


def test_rk4_flags_blowup():
    def exploding(p):
        return State(x=p.v, v=-1e300 * p.x)

    p0 = State(np.array([1.0]), np.array([0.0]))
    with pytest.raises(NumericError, match="step"):
        rk4_reference(exploding, p0, 1.0, 0.5)
