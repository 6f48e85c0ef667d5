"""Lyapunov certificate for the heavy-ball flow and its decay residual.

This is the ground truth against which every trigger bound is tested.  It
needs the minimizer, so it is diagnostic-only: algorithm code paths never
evaluate it (the whole point of the triggers is that they do not need x*).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import FlowParams, State, field_hb_displaced
from .objectives import ObjectiveOracle


@dataclass(frozen=True)
class LyapunovContext:
    oracle: ObjectiveOracle
    params: FlowParams
    f_star: float = field(init=False)

    def __post_init__(self):
        if self.oracle.minimizer is None:
            raise ValueError("Lyapunov certificate needs an oracle with a known minimizer")
        object.__setattr__(self, "f_star", float(self.oracle.value(self.oracle.minimizer)))

    @property
    def x_star(self) -> np.ndarray:
        return self.oracle.minimizer


def lyapunov_value(p: State, ctx: LyapunovContext):
    """V(x, v) = (1+sqrt(mu s))(f(x) - f*) + ||v||^2/4 + ||v + 2 sqrt(mu)(x - x*)||^2/4.

    Nonnegative, and zero only at (x*, 0).  Batch axes pass through.
    """
    dx = p.x - ctx.x_star
    shifted = p.v + 2.0 * ctx.params.sqrt_mu * dx
    out = (ctx.params.sqrt_mu_s * (ctx.oracle.value_hook(p.x) - ctx.f_star)
           + 0.25 * np.sum(p.v * p.v, axis=-1)
           + 0.25 * np.sum(shifted * shifted, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


def lyapunov_gradient(p: State, ctx: LyapunovContext) -> State:
    """Gradient of V in (x, v):

        dV/dx = (1+sqrt(mu s)) grad f(x) + sqrt(mu) v + 2 mu (x - x*)
        dV/dv = v + sqrt(mu)(x - x*)
    """
    dx = p.x - ctx.x_star
    sq = ctx.params.sqrt_mu
    return State(
        x=ctx.params.sqrt_mu_s * ctx.oracle.gradient_hook(p.x) + sq * p.v + 2.0 * ctx.params.mu * dx,
        v=p.v + sq * dx)


def decay_residual(p: State, a: float, ctx: LyapunovContext):
    """<grad V(p), X_a(p)> + (sqrt(mu)/4) V(p).

    Nonpositive wherever the continuous-flow decay certificate applies
    (always for a = 0, and for every displacement 0 <= a <= a1*).
    """
    grad = lyapunov_gradient(p, ctx)
    deriv = field_hb_displaced(p, ctx.params.with_a(a), ctx.oracle)
    out = (np.sum(grad.x * deriv.x, axis=-1) + np.sum(grad.v * deriv.v, axis=-1)
           + 0.25 * ctx.params.sqrt_mu * lyapunov_value(p, ctx))
    return float(out) if np.ndim(out) == 0 else out
