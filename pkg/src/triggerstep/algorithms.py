"""Triggered optimization runs (fixed and adaptive displacement) and the
discrete baselines, all producing full iteration traces.

The triggered runners share one skeleton: at each iterate, build the
configured trigger bound, take its first positive root as the stepsize, and
advance along the hold trajectory.  The adaptive variants wrap that in the
printed two-site shrink loop: the displacement a shrinks while the bound is
infeasible at t = 0, shrinks again while the certified step falls below the
floor tau, and grows by r_i after any iteration that needed no shrink.

Stepsizes certify exponential Lyapunov decay, so traces expose f_gap and
the Lyapunov value per iterate whenever the oracle knows its minimizer.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dynamics import (FlowParams, State, field_hb_displaced,
                       hoh_step_from_gradient, rk4_reference,
                       zoh_step_from_gradient)
from .errors import NumericError, TriggerInfeasibleError
from .lyapunov import LyapunovContext, lyapunov_value
from .objectives import ObjectiveOracle
from .traces import IterationRecord, RunTrace
from .triggers import constants_from, make_bound, step_size

_A_FLOOR = 1e-300  # shrinking past this raises instead of denormalizing
_MAX_SHRINKS = 200


@dataclass(frozen=True)
class AlgoConfig:
    """Configuration shared by the triggered runners.

    r_i and r_d have no defaults on purpose: the adaptive algorithms refuse
    to run without an explicit choice (the fixed-displacement runner ignores
    them).  tau = None means the trigger-derived default (0.99 times the
    grid minimum of MIET over [0, a2*]); s = None means mu/(36 L^2).
    """

    trigger: str = "derivative"   # "derivative" | "performance"
    mode: str = "ST"              # "ET" | "ST"
    hold: str = "ZOH"             # "ZOH" | "HOH"
    epsilon: float = 1e-6
    a0: float = 0.0
    r_i: Optional[float] = None
    r_d: Optional[float] = None
    tau: Optional[float] = None
    max_iters: int = 10**6
    s: Optional[float] = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.a0 < 0:
            raise ValueError("a0 must be nonnegative")
        if self.r_i is not None and self.r_i <= 1:
            raise ValueError("r_i must exceed 1")
        if self.r_d is not None and not 0 < self.r_d < 1:
            raise ValueError("r_d must lie in (0, 1)")
        if self.tau is not None and self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.s is not None and self.s <= 0:
            raise ValueError("s must be positive")


class _Accumulator:
    """Collects per-iteration scalars/vectors in flat lists and assembles the
    RunTrace at the end, batching the f_gap and Lyapunov evaluations over the
    whole trajectory (per-record oracle calls would dominate long runs)."""

    def __init__(self, algorithm: str, oracle: ObjectiveOracle,
                 params: Optional[FlowParams], metadata: dict):
        self.algorithm = algorithm
        self.oracle = oracle
        self.params = params
        self.metadata = metadata
        self.t = []
        self.delta = []
        self.a = []
        self.grad_norm = []
        self.x = []
        self.v = []
        self.retries = []
        self._t0 = time.perf_counter()

    def add(self, t, delta, a, grad_norm, x, v, retries=0):
        self.t.append(t)
        self.delta.append(delta)
        self.a.append(a)
        self.grad_norm.append(grad_norm)
        self.x.append(x)
        self.v.append(v)
        self.retries.append(retries)

    def finish(self) -> RunTrace:
        self.metadata["wall_time"] = time.perf_counter() - self._t0
        xs = np.asarray(self.x)
        vs = np.asarray(self.v)
        f_gap = lyap = None
        if self.oracle.minimizer is not None:
            f_star = float(self.oracle.value_hook(self.oracle.minimizer))
            f_gap = np.asarray(self.oracle.value_hook(xs), dtype=float) - f_star
            if self.params is not None:
                ctx = LyapunovContext(self.oracle, self.params)
                lyap = lyapunov_value(State(xs, vs), ctx)
        trace = RunTrace(algorithm=self.algorithm, metadata=self.metadata)
        for i in range(len(self.t)):
            trace.records.append(IterationRecord(
                k=i, t=self.t[i], delta=self.delta[i], x=xs[i], v=vs[i],
                a=self.a[i], grad_norm=self.grad_norm[i],
                f_gap=None if f_gap is None else float(f_gap[i]),
                lyapunov=None if lyap is None else float(lyap[i]),
                inner_retries=self.retries[i]))
        return trace


def _resolve(oracle: ObjectiveOracle, config: AlgoConfig):
    params = FlowParams.from_oracle(oracle, a=config.a0, s=config.s)
    consts = constants_from(oracle, params)
    tau = config.tau if config.tau is not None else consts.default_tau()
    return params, consts, tau


def run_displaced_gradient(p0: State, config: AlgoConfig,
                           oracle: ObjectiveOracle,
                           on_step: Optional[Callable] = None) -> RunTrace:
    """Fixed-displacement triggered run: Delta_k from the configured bound at
    a = a0, iterates advanced with the matching hold map.

    a0 > a2* only warns: feasibility is then state-dependent, and the run
    aborts with a diagnostic if the bound ever turns infeasible.
    """
    params, consts, _ = _resolve(oracle, config)
    a = config.a0
    if a > consts.a2_star:
        warnings.warn(f"a0 = {a:.3e} exceeds a2* = {consts.a2_star:.3e}; "
                      "trigger feasibility is no longer guaranteed",
                      stacklevel=2)
    acc = _Accumulator(
        "displaced_gradient", oracle, params,
        {"trigger": config.trigger, "mode": config.mode, "hold": config.hold,
         "a0": a, "s": params.s, "epsilon": config.epsilon, "capped_steps": 0})
    advance = hoh_step_from_gradient if config.hold == "HOH" else zoh_step_from_gradient
    p, t, k = p0, 0.0, 0
    while True:
        gx = oracle.gradient_hook(p.x)
        gn = float(np.sqrt(gx @ gx))
        if gn < config.epsilon or k >= config.max_iters:
            acc.add(t, 0.0, a, gn, p.x, p.v)
            break
        bound = make_bound(p, a, params, oracle, trigger=config.trigger,
                           mode=config.mode, hold=config.hold, gx=gx)
        if bound.constant_term >= 0.0:
            raise TriggerInfeasibleError(
                f"bound infeasible at iteration {k}: "
                f"C = {bound.constant_term:.6e} >= 0 with a = {a:.6e} "
                f"({config.trigger}/{config.mode}/{config.hold}); "
                "reduce a (a <= a2* cannot reach this)")
        res = step_size(bound)
        if res.capped:
            acc.metadata["capped_steps"] += 1
        if on_step is not None:
            on_step(k, bound, res)
        acc.add(t, res.step, a, gn, p.x, p.v)
        p = advance(p, res.step, params, bound.anchor.gax)
        t += res.step
        k += 1
    return acc.finish()


def _run_adaptive(p0: State, config: AlgoConfig, oracle: ObjectiveOracle,
                  algorithm: str, on_step: Optional[Callable]) -> RunTrace:
    if config.r_i is None or config.r_d is None:
        raise ValueError("adaptive runs require explicit r_i and r_d")
    params, consts, tau = _resolve(oracle, config)
    acc = _Accumulator(
        algorithm, oracle, params,
        {"trigger": config.trigger, "mode": config.mode, "hold": config.hold,
         "a0": config.a0, "s": params.s, "epsilon": config.epsilon,
         "r_i": config.r_i, "r_d": config.r_d, "tau": tau, "capped_steps": 0})
    advance = hoh_step_from_gradient if config.hold == "HOH" else zoh_step_from_gradient
    p, t, k, a = p0, 0.0, 0, config.a0
    while True:
        gx = oracle.gradient_hook(p.x)
        gn = float(np.sqrt(gx @ gx))
        if gn < config.epsilon or k >= config.max_iters:
            acc.add(t, 0.0, a, gn, p.x, p.v)
            break
        increase = True
        retries = 0

        def shrink(a):
            nonlocal increase, retries
            increase = False
            retries += 1
            a *= config.r_d
            if retries > _MAX_SHRINKS:
                raise NumericError(
                    f"iteration {k}: displacement shrank {retries} times "
                    "without an admissible step")
            if a < _A_FLOOR:
                raise NumericError(f"iteration {k}: displacement underflow")
            return a

        # two shrink sites, exactly as printed: infeasible C, then step < tau
        while True:
            bound = make_bound(p, a, params, oracle, trigger=config.trigger,
                               mode=config.mode, hold=config.hold, gx=gx)
            while bound.constant_term >= 0.0:
                a = shrink(a)
                bound = make_bound(p, a, params, oracle, trigger=config.trigger,
                                   mode=config.mode, hold=config.hold, gx=gx)
            res = step_size(bound)
            if res.step >= tau:
                break
            a = shrink(a)
        if res.capped:
            acc.metadata["capped_steps"] += 1
        if on_step is not None:
            on_step(k, bound, res)
        acc.add(t, res.step, a, gn, p.x, p.v, retries)
        p = advance(p, res.step, params, bound.anchor.gax)
        t += res.step
        k += 1
        if increase:
            a *= config.r_i
    return acc.finish()


def run_adaptive_dg(p0: State, config: AlgoConfig, oracle: ObjectiveOracle,
                    on_step: Optional[Callable] = None) -> RunTrace:
    """Adaptive displaced-gradient run: ZOH update, displacement adapted by
    (r_i, r_d) around the feasibility and stepsize-floor constraints."""
    if config.hold != "ZOH":
        raise ValueError("run_adaptive_dg uses the ZOH hold; "
                         "use run_adaptive_hoh for HOH")
    return _run_adaptive(p0, config, oracle, "adaptive_dg", on_step)


def run_adaptive_hoh(p0: State, config: AlgoConfig, oracle: ObjectiveOracle,
                     on_step: Optional[Callable] = None) -> RunTrace:
    """Adaptive run advancing along the exact frozen-gradient trajectory,
    with the HOH trigger bounds; control flow identical to run_adaptive_dg."""
    if config.hold != "HOH":
        raise ValueError("run_adaptive_hoh uses the HOH hold; "
                         "use run_adaptive_dg for ZOH")
    return _run_adaptive(p0, config, oracle, "adaptive_hoh", on_step)


def run_nesterov(x0, oracle: ObjectiveOracle, s: Optional[float] = None,
                 max_iters: int = 10**6, epsilon: float = 1e-6) -> RunTrace:
    """Accelerated-gradient baseline

        y_{k+1} = x_k - s grad f(x_k)
        x_{k+1} = y_{k+1} + ((1 - sqrt(mu s)) / (1 + sqrt(mu s))) (y_{k+1} - y_k)

    with y_0 = x_0.  Default s = 1/L, the classical safe stepsize for an
    L-smooth objective.  Discrete method: records carry zero velocity,
    time stays at 0.
    """
    if s is None:
        s = 1.0 / oracle.lipschitz
    if s > 1.0 / oracle.lipschitz:
        raise ValueError(f"s = {s} exceeds 1/L = {1.0 / oracle.lipschitz}")
    coef = (1.0 - math.sqrt(oracle.mu * s)) / (1.0 + math.sqrt(oracle.mu * s))
    acc = _Accumulator("nesterov", oracle, None,
                       {"s": s, "momentum": coef, "epsilon": epsilon})
    x = np.asarray(x0, dtype=float)
    y = x
    zero = np.zeros_like(x)
    k = 0
    while True:
        g = oracle.gradient_hook(x)
        gn = float(np.sqrt(g @ g))
        acc.add(0.0, 0.0, 0.0, gn, x, zero)
        if gn < epsilon or k >= max_iters:
            break
        y_next = x - s * g
        x = y_next + coef * (y_next - y)
        y = y_next
        k += 1
    return acc.finish()


def run_heavy_ball_discrete(x0, oracle: ObjectiveOracle,
                            max_iters: int = 10**6,
                            epsilon: float = 1e-6) -> RunTrace:
    """Classical momentum baseline x_{k+1} = x_k - alpha grad f(x_k)
    + beta (x_k - x_{k-1}) with the optimally tuned
    alpha = 4/(sqrt(L)+sqrt(mu))^2, beta = ((sqrt(L)-sqrt(mu))/(sqrt(L)+sqrt(mu)))^2
    and x_{-1} = x_0."""
    rL, rmu = math.sqrt(oracle.lipschitz), math.sqrt(oracle.mu)
    alpha = 4.0 / (rL + rmu) ** 2
    beta = ((rL - rmu) / (rL + rmu)) ** 2
    acc = _Accumulator("heavy_ball", oracle, None,
                       {"alpha": alpha, "beta": beta, "epsilon": epsilon})
    x = np.asarray(x0, dtype=float)
    x_prev = x
    zero = np.zeros_like(x)
    k = 0
    while True:
        g = oracle.gradient_hook(x)
        gn = float(np.sqrt(g @ g))
        acc.add(0.0, 0.0, 0.0, gn, x, zero)
        if gn < epsilon or k >= max_iters:
            break
        x, x_prev = x - alpha * g + beta * (x - x_prev), x
        k += 1
    return acc.finish()


def run_continuous_reference(p0: State, a: float, params: FlowParams,
                             oracle: ObjectiveOracle, T: float,
                             h: float) -> RunTrace:
    """Densely sampled RK4 integration of the displaced-gradient flow,
    enriched with gradient norms (and f_gap/Lyapunov when the minimizer is
    known).  Test oracle and plotting reference, not an optimizer."""
    pa = params.with_a(a)
    raw = rk4_reference(lambda p: field_hb_displaced(p, pa, oracle), p0, T, h)
    xs = np.asarray([r.x for r in raw.records])
    vs = np.asarray([r.v for r in raw.records])
    gns = np.sqrt(np.sum(oracle.gradient_hook(xs) ** 2, axis=-1))
    f_gap = lyap = None
    if oracle.minimizer is not None:
        f_star = float(oracle.value_hook(oracle.minimizer))
        f_gap = np.asarray(oracle.value_hook(xs), dtype=float) - f_star
        ctx = LyapunovContext(oracle, pa)
        lyap = lyapunov_value(State(xs, vs), ctx)
    trace = RunTrace(algorithm="continuous_reference",
                     metadata={**raw.metadata, "a": a, "s": params.s})
    for i, rec in enumerate(raw.records):
        trace.records.append(IterationRecord(
            k=rec.k, t=rec.t, delta=rec.delta, x=rec.x, v=rec.v, a=a,
            grad_norm=float(gns[i]),
            f_gap=None if f_gap is None else float(f_gap[i]),
            lyapunov=None if lyap is None else float(lyap[i])))
    return trace
