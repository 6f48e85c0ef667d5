"""Heavy-ball flow with displaced gradient: vector field, hold trajectories,
initial-velocity rule, and a fixed-step RK4 reference integrator.

Notation trap worth stating once: the shorthand sqrt_mu_s stands for the
SINGLE symbol 1 + sqrt(mu*s).  Its literal square, mu_s = (1 + sqrt(mu*s))^2,
is precomputed alongside it on FlowParams; neither is ever recomputed ad hoc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NumericError
from .objectives import ObjectiveOracle
from .traces import IterationRecord, RunTrace


@dataclass(frozen=True)
class State:
    """Phase-space point p = (x, v).

    ``x`` and ``v`` must share their trailing dimension; leading batch axes
    are allowed and flow through every function in this module.
    """

    x: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class FlowParams:
    """Flow family parameters with the derived constants precomputed.

    ``sqrt_mu_s`` is 1 + sqrt(mu*s) and ``mu_s`` its square; ``sqrt_mu`` is
    sqrt(mu).  ``s <= 1/L`` is expected wherever decay-rate claims are
    asserted (not enforced here).
    """

    s: float
    a: float
    mu: float
    lipschitz: float
    sqrt_mu: float = field(init=False)
    sqrt_mu_s: float = field(init=False)
    mu_s: float = field(init=False)

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError(f"s must be positive, got {self.s}")
        if self.a < 0:
            raise ValueError(f"a must be nonnegative, got {self.a}")
        if not 0 < self.mu <= self.lipschitz:
            raise ValueError("need 0 < mu <= lipschitz")
        sms = 1.0 + math.sqrt(self.mu * self.s)
        object.__setattr__(self, "sqrt_mu", math.sqrt(self.mu))
        object.__setattr__(self, "sqrt_mu_s", sms)
        object.__setattr__(self, "mu_s", sms * sms)

    @classmethod
    def from_oracle(cls, oracle: ObjectiveOracle, a: float = 0.0,
                    s: Optional[float] = None) -> "FlowParams":
        """Default s = mu / (36 L^2)."""
        if s is None:
            s = oracle.mu / (36.0 * oracle.lipschitz**2)
        return cls(s=s, a=a, mu=oracle.mu, lipschitz=oracle.lipschitz)

    def with_a(self, a: float) -> "FlowParams":
        return FlowParams(s=self.s, a=a, mu=self.mu, lipschitz=self.lipschitz)


def field_hb_displaced(p: State, params: FlowParams, oracle: ObjectiveOracle) -> State:
    """Time derivative (v, -2 sqrt(mu) v - (1 + sqrt(mu s)) grad f(x + a v))."""
    g = oracle.gradient(p.x + params.a * p.v)
    return State(x=p.v, v=-2.0 * params.sqrt_mu * p.v - params.sqrt_mu_s * g)


def zoh_step_from_gradient(p_hat: State, t, params: FlowParams, g: np.ndarray) -> State:
    """ZOH map with the displaced gradient g = grad f(x_hat + a v_hat)
    already in hand: p_hat + t * (v_hat, -2 sqrt(mu) v_hat - sqrt_mu_s g)."""
    t = np.asarray(t, dtype=float)
    if t.ndim > 0:
        t = t[..., np.newaxis]
    return State(x=p_hat.x + t * p_hat.v,
                 v=p_hat.v + t * (-2.0 * params.sqrt_mu * p_hat.v - params.sqrt_mu_s * g))


def zoh_trajectory(p_hat: State, t, params: FlowParams, oracle: ObjectiveOracle) -> State:
    """Hold trajectory p(t) = p_hat + t * X(p_hat): the gradient is frozen at
    x_hat + a v_hat, so the path is affine in t.

    ``t`` may be a scalar or an array; an array adds leading batch axes to
    the result.  Exactly one gradient evaluation either way.
    """
    g = oracle.gradient(p_hat.x + params.a * p_hat.v)
    return zoh_step_from_gradient(p_hat, t, params, g)


def hoh_step_from_gradient(p_hat: State, t, params: FlowParams, g: np.ndarray) -> State:
    """Frozen-gradient exact flow with g = grad f(x_hat + a v_hat) already in
    hand.  e^{-2 sqrt(mu) t} enters via expm1 so the 1 - e^{-2 sqrt(mu) t}
    factors stay fully accurate at tiny t (the trigger root search probes t
    values down to the MIET scale)."""
    sq, sms = params.sqrt_mu, params.sqrt_mu_s
    t = np.asarray(t, dtype=float)
    if t.ndim > 0:
        t = t[..., np.newaxis]
    em1 = np.expm1(-2.0 * sq * t)  # e^{-2 sqrt(mu) t} - 1, cancellation-free
    e = 1.0 + em1
    x = p_hat.x - sms * g * t / (2.0 * sq) - em1 * (sms * g + 2.0 * sq * p_hat.v) / (4.0 * params.mu)
    v = e * p_hat.v + em1 * sms * g / (2.0 * sq)
    return State(x=x, v=v)


def hoh_trajectory(p_hat: State, t, params: FlowParams, oracle: ObjectiveOracle) -> State:
    """Exact solution of the frozen-gradient linear system

        d/dt (x, v) = (v, -2 sqrt(mu) v - (1 + sqrt(mu s)) g),
        g = grad f(x_hat + a v_hat) held constant.

    One gradient evaluation either way; ``t`` may be a scalar or an array.
    """
    g = oracle.gradient(p_hat.x + params.a * p_hat.v)
    return hoh_step_from_gradient(p_hat, t, params, g)


def initial_velocity(x0, params: FlowParams, oracle: ObjectiveOracle) -> np.ndarray:
    """v(0) = -2 sqrt(s) grad f(x0) / (1 + sqrt(mu s))."""
    return -2.0 * math.sqrt(params.s) * oracle.gradient(np.asarray(x0, dtype=float)) / params.sqrt_mu_s


def rk4_reference(field: Callable[[State], State], p0: State, T: float, h: float) -> RunTrace:
    """Classical fixed-step fourth-order Runge-Kutta over [0, T].

    The horizon is rounded to a whole number of steps of size ``h``.  Records
    every step; raises NumericError naming the step index if the state goes
    non-finite.  Fixed-step on purpose: this is a test oracle, and
    determinism matters more than speed.
    """
    if h <= 0 or T < h:
        raise ValueError("need h > 0 and T >= h")
    n_steps = int(round(T / h))
    n = p0.x.shape[-1]
    y = np.concatenate([np.asarray(p0.x, dtype=float), np.asarray(p0.v, dtype=float)])

    def f(z):
        d = field(State(x=z[:n], v=z[n:]))
        return np.concatenate([d.x, d.v])

    trace = RunTrace(algorithm="rk4_reference", metadata={"h": h, "T": T})

    def record(k, t, z, delta):
        trace.records.append(IterationRecord(
            k=k, t=t, delta=delta, x=z[:n].copy(), v=z[n:].copy(),
            a=math.nan, grad_norm=math.nan))

    record(0, 0.0, y, h if n_steps > 0 else 0.0)
    for k in range(n_steps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NumericError(f"rk4_reference: non-finite state at step {k + 1}")
        record(k + 1, (k + 1) * h, y, h if k + 1 < n_steps else 0.0)
    return trace
