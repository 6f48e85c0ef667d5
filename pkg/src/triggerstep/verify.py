"""Invariant checks behind the ``verify`` subcommand and the acceptance
tests: trigger soundness against the Lyapunov oracle, step orderings, MIET
lower bounds, hold-trajectory exactness, the closed-form performance
integral, and gradient consistency.

Every check takes the oracle and parameters as arguments rather than
building its own, so a caller can hand in deliberately corrupted inputs
(e.g. a doubled mu) and watch the right check fail.  States within a small
ball of the rest point are skipped: there C -> 0 and step roots degenerate,
and the certified inequalities are vacuous at the point itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import (FlowParams, State, hoh_step_from_gradient,
                       rk4_reference, zoh_step_from_gradient)
from .lyapunov import LyapunovContext, lyapunov_gradient, lyapunov_value
from .objectives import ObjectiveOracle, check_gradient
from .triggers import (_adaptive_simpson, _exp_poly_integral, constants_from,
                       make_bound, step_size)

_KINDS = [(trig, mode, hold)
          for hold in ("ZOH", "HOH")
          for trig in ("derivative", "performance")
          for mode in ("ST", "ET")]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _near_rest(p: State, oracle: ObjectiveOracle) -> bool:
    # epsilon-ball exclusion around p* = (x*, 0)
    if oracle.minimizer is None:
        return False
    scale = 1.0 + float(np.linalg.norm(oracle.minimizer))
    return (np.linalg.norm(p.x - oracle.minimizer) + np.linalg.norm(p.v)) < 1e-8 * scale


def _sample_states(oracle: ObjectiveOracle, rng: np.random.Generator,
                   count: int, scale: float = 60.0):
    xs = rng.uniform(-scale, scale, (count, oracle.n))
    vs = rng.uniform(-scale, scale, (count, oracle.n))
    return [State(xs[i], vs[i]) for i in range(count)]


def _hold_states(bound, p: State, params: FlowParams, ts: np.ndarray) -> State:
    g = bound.anchor.gax
    if bound.hold == "ZOH":
        return zoh_step_from_gradient(p, ts, params, g)
    return hoh_step_from_gradient(p, ts, params, g)


def _hold_velocity_dot(bound, p: State, params: FlowParams, traj: State) -> State:
    # time derivative of the hold trajectory: ZOH freezes it entirely,
    # HOH freezes only the gradient forcing
    g = bound.anchor.gax
    if bound.hold == "ZOH":
        dx = np.broadcast_to(p.v, traj.x.shape)
        dv = np.broadcast_to(-2.0 * params.sqrt_mu * p.v - params.sqrt_mu_s * g,
                             traj.v.shape)
        return State(dx, dv)
    return State(traj.v, -2.0 * params.sqrt_mu * traj.v - params.sqrt_mu_s * g)


def check_trigger_soundness(oracle: ObjectiveOracle, params: FlowParams,
                            rng: np.random.Generator, n_states: int = 200,
                            grid: int = 100) -> CheckResult:
    """Each of the 8 bound kinds dominates the Lyapunov residual along its
    hold trajectory on a t-grid over [0, step], additive tolerance
    1e-9 * (1 + |V(p_hat)|).  Also flags infeasible C at a <= a2* away from
    the rest point, where feasibility is guaranteed.
    """
    ctx = LyapunovContext(oracle, params)
    consts = constants_from(oracle, params)
    kappa = params.sqrt_mu / 4.0
    a_cycle = [0.0, consts.a2_star / 2.0, consts.a2_star, 0.1]
    checked = 0
    worst = 0.0
    n_skipped = 0
    for i, p in enumerate(_sample_states(oracle, rng, n_states)):
        if _near_rest(p, oracle):
            n_skipped += 1
            continue
        a = a_cycle[i % len(a_cycle)]
        v_hat = lyapunov_value(p, ctx)
        tol = 1e-9 * (1.0 + abs(v_hat))
        for trig, mode, hold in _KINDS:
            bound = make_bound(p, a, params, oracle, trigger=trig, mode=mode, hold=hold)
            if bound.constant_term >= 0.0:
                if a <= consts.a2_star:
                    return CheckResult(
                        "trigger soundness", False,
                        f"C = {bound.constant_term:.3e} >= 0 at a = {a:.3e} "
                        f"<= a2* (state {i}, {trig}/{mode}/{hold})")
                continue  # a beyond the guarantee; feasibility not promised
            res = step_size(bound)
            ts = np.linspace(0.0, res.step, grid)
            traj = _hold_states(bound, p, params, ts)
            vt = lyapunov_value(traj, ctx)
            bt = bound(ts)
            if trig == "performance":
                lhs = np.exp(kappa * ts) * vt - v_hat
            else:
                grad_v = lyapunov_gradient(traj, ctx)
                dot = _hold_velocity_dot(bound, p, params, traj)
                lhs = (np.sum(grad_v.x * dot.x, axis=-1)
                       + np.sum(grad_v.v * dot.v, axis=-1) + kappa * vt)
            excess = float(np.max(lhs - bt))
            worst = max(worst, excess - tol)
            if excess > tol:
                j = int(np.argmax(lhs - bt))
                return CheckResult(
                    "trigger soundness", False,
                    f"residual exceeds bound by {excess:.3e} (tol {tol:.3e}) at "
                    f"t = {ts[j]:.3e}, state {i}, a = {a:.3e}, {trig}/{mode}/{hold}")
            checked += 1
    return CheckResult("trigger soundness", True,
                       f"{checked} state/kind combinations within tolerance "
                       f"({n_skipped} rest-point skips)")


def check_step_orderings(oracle: ObjectiveOracle, params: FlowParams,
                         rng: np.random.Generator,
                         n_states: int = 100) -> CheckResult:
    """step^d_ST <= step^d_ET, step^d_ST <= step^p_ST, step^p_ST <= step^p_ET
    per hold, up to root-finding tolerance."""
    consts = constants_from(oracle, params)
    a_cycle = [0.0, consts.a2_star / 2.0, consts.a2_star]
    n_checked = 0
    for i, p in enumerate(_sample_states(oracle, rng, n_states)):
        if _near_rest(p, oracle):
            continue
        a = a_cycle[i % len(a_cycle)]
        for hold in ("ZOH", "HOH"):
            steps = {}
            for trig, mode in (("derivative", "ST"), ("derivative", "ET"),
                               ("performance", "ST"), ("performance", "ET")):
                bound = make_bound(p, a, params, oracle, trigger=trig,
                                   mode=mode, hold=hold)
                steps[(trig, mode)] = step_size(bound).step
            for lo, hi in ((("derivative", "ST"), ("derivative", "ET")),
                           (("derivative", "ST"), ("performance", "ST")),
                           (("performance", "ST"), ("performance", "ET"))):
                if steps[lo] > steps[hi] * (1.0 + 1e-9) + 1e-13:
                    return CheckResult(
                        "step orderings", False,
                        f"step{lo} = {steps[lo]:.6e} > step{hi} = {steps[hi]:.6e} "
                        f"at state {i}, a = {a:.3e}, {hold}")
            n_checked += 1
    return CheckResult("step orderings", True,
                       f"{n_checked} state/hold combinations ordered")


def check_miet(oracle: ObjectiveOracle, params: FlowParams,
               rng: np.random.Generator, n_states: int = 1000) -> CheckResult:
    """MIET(a) > 0 on a 1024-point grid over [0, a2*], and every computed
    derivative/ST step from a random state respects it."""
    consts = constants_from(oracle, params)
    grid = np.linspace(0.0, consts.a2_star, 1024)
    miet = consts.miet(grid)
    if np.min(miet) <= 0.0:
        return CheckResult("MIET bounds", False,
                           f"MIET <= 0 at a = {grid[int(np.argmin(miet))]:.6e}")
    n_checked = 0
    for i, p in enumerate(_sample_states(oracle, rng, n_states)):
        if _near_rest(p, oracle):
            continue
        for a in (0.0, consts.a2_star / 2.0, consts.a2_star):
            bound = make_bound(p, a, params, oracle, trigger="derivative",
                               mode="ST", hold="ZOH")
            if bound.constant_term >= 0.0:
                return CheckResult("MIET bounds", False,
                                   f"C >= 0 at a = {a:.3e} <= a2*, state {i}")
            step = step_size(bound).step
            floor = float(consts.miet(a))
            if step < floor * (1.0 - 1e-9):
                return CheckResult(
                    "MIET bounds", False,
                    f"step {step:.6e} < MIET {floor:.6e} at a = {a:.3e}, state {i}")
            n_checked += 1
    return CheckResult("MIET bounds", True,
                       f"grid positive; {n_checked} steps above their floor")


def check_hoh_vs_rk4(oracle: ObjectiveOracle, params: FlowParams,
                     rng: np.random.Generator, n_states: int = 50,
                     horizon: float = 0.1, h: float = 1e-5) -> CheckResult:
    """hoh_step_from_gradient against RK4 on the frozen-gradient linear
    system, absolute tolerance 1e-8 over [0, horizon].

    All states integrate as one stacked linear system (the forcing gradient
    is constant per state, so no oracle calls happen inside the integrator).
    """
    states = _sample_states(oracle, rng, n_states)
    xs = np.stack([p.x for p in states])
    vs = np.stack([p.v for p in states])
    gs = oracle.gradient_hook(xs + params.a * vs)
    stacked = State(xs.ravel(), vs.ravel())
    g_flat = gs.ravel()

    def frozen_field(p: State) -> State:
        return State(p.v, -2.0 * params.sqrt_mu * p.v - params.sqrt_mu_s * g_flat)

    trace = rk4_reference(frozen_field, stacked, horizon, h)
    worst = 0.0
    for rec in trace.records:
        exact = hoh_step_from_gradient(stacked, rec.t, params, g_flat)
        err = max(float(np.max(np.abs(exact.x - rec.x))),
                  float(np.max(np.abs(exact.v - rec.v))))
        worst = max(worst, err)
    if worst > 1e-8:
        return CheckResult("HOH vs RK4", False,
                           f"max deviation {worst:.3e} > 1e-8")
    return CheckResult("HOH vs RK4", True,
                       f"{n_states} states, max deviation {worst:.3e}")


def check_perf_integral(oracle: ObjectiveOracle, params: FlowParams,
                        rng: np.random.Generator,
                        n_samples: int = 100) -> CheckResult:
    """Closed-form exp-weighted quadratic integral against adaptive Simpson,
    relative tolerance 1e-8, on (state, t) samples across both holds."""
    kappa = params.sqrt_mu / 4.0
    consts = constants_from(oracle, params)
    states = _sample_states(oracle, rng, n_samples)
    worst = 0.0
    for i, p in enumerate(states):
        if _near_rest(p, oracle):
            continue
        a = (0.0, consts.a2_star)[i % 2]
        hold = ("ZOH", "HOH")[(i // 2) % 2]
        bound = make_bound(p, a, params, oracle, trigger="performance",
                           mode="ST", hold=hold)
        if bound.constant_term >= 0.0:
            continue
        t = step_size(bound).step * rng.uniform(0.25, 1.75)
        closed = _exp_poly_integral(bound.st_coeffs, kappa, t)
        c2, c1, c0 = bound.st_coeffs
        quad = _adaptive_simpson(
            lambda z: np.exp(kappa * z) * ((c2 * z + c1) * z + c0), 0.0, t)
        scale = abs(closed) + abs(c0) * t + 1e-30
        rel = abs(closed - quad) / scale
        worst = max(worst, rel)
        if rel > 1e-8:
            return CheckResult(
                "performance integral", False,
                f"closed form {closed:.9e} vs quadrature {quad:.9e} "
                f"(rel {rel:.3e}) at state {i}, t = {t:.3e}")
    return CheckResult("performance integral", True,
                       f"max relative deviation {worst:.3e}")


def check_gradients(oracle: ObjectiveOracle, rng: np.random.Generator,
                    n_states: int = 20) -> CheckResult:
    """Central-difference validation of the oracle gradient."""
    worst = 0.0
    for _ in range(n_states):
        x = rng.uniform(-10.0, 10.0, oracle.n)
        err = check_gradient(oracle, x)
        worst = max(worst, err)
        if err > 1e-5:
            return CheckResult("gradient consistency", False,
                               f"finite-difference error {err:.3e} at x = {x}")
    return CheckResult("gradient consistency", True,
                       f"max finite-difference error {worst:.3e}")


def run_all_checks(oracle: ObjectiveOracle, params: FlowParams,
                   seed: int = 0, scale: float = 1.0) -> list[CheckResult]:
    """The full invariant suite on one problem; each check gets its own
    seeded generator so results do not depend on check order.  ``scale``
    multiplies the sample counts (floored at 5) for quick smoke runs; the
    defaults, at scale 1, are the certified counts.
    """
    def n(base):
        return max(5, int(round(base * scale)))

    results = [
        check_gradients(oracle, np.random.default_rng(seed), n_states=n(20)),
        check_trigger_soundness(oracle, params, np.random.default_rng(seed + 1),
                                n_states=n(200)),
        check_step_orderings(oracle, params, np.random.default_rng(seed + 2),
                             n_states=n(100)),
        check_miet(oracle, params, np.random.default_rng(seed + 3),
                   n_states=n(1000)),
        check_hoh_vs_rk4(oracle, params, np.random.default_rng(seed + 4),
                         n_states=n(50)),
        check_perf_integral(oracle, params, np.random.default_rng(seed + 5),
                            n_samples=n(100)),
    ]
    return results
