"""Trigger bounds certifying Lyapunov decay along hold trajectories, stepsize
root-finding, and the derived admissibility constants.

Eight bound kinds are exposed: {derivative, performance} x {ET, ST} x
{ZOH, HOH}.  A derivative bound upper-bounds (d/dt)V + (sqrt(mu)/4)V along
the hold trajectory from p_hat; a performance bound is its exp-weighted
integral, upper-bounding e^{(sqrt(mu)/4)t}V(p(t)) - V(p_hat).  ST bounds are
explicit quadratics in t (self-triggered: the step is computable from p_hat
alone); ET bounds monitor the trajectory and are sharper.  The chain

    (d/dt)V + (sqrt(mu)/4)V  <=  b_ET(t)  <=  b_ST(t)

holds for every t >= 0 and any displacement a >= 0; the constant term
C(p_hat; a), shared by all eight kinds, is negative whenever a <= a2* and
p_hat is not the rest point, which is what makes positive steps exist.

None of this code reads the minimizer: every quantity is computable from
gradient and value evaluations at p_hat (plus along the trajectory for ET).
"""

from __future__ import annotations

import bisect as _bisect
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .dynamics import FlowParams, State, hoh_step_from_gradient
from .errors import NumericError, TriggerInfeasibleError
from .objectives import ObjectiveOracle

_QUAD_MAX_LEVELS = 40  # interval-halving limit for the ET quadrature
_ROOT_MAX_ITERS = 200


# ---------------------------------------------------------------------------
# derived constants


@dataclass(frozen=True)
class TriggerConstants:
    """Admissibility constants derived from (mu, L, s).

    ``beta`` are the continuous-decay constants and ``a1_star`` the largest
    certified displacement for the continuous flow; ``beta_hat`` and
    ``a2_star`` certify trigger feasibility (C < 0) for the sampled
    implementations.  ``miet`` maps a displacement to the guaranteed minimum
    inter-event time of the derivative/ST trigger.
    """

    mu: float
    lipschitz: float
    s: float
    alpha: float
    beta: tuple[float, float, float, float]
    a1_star: float
    beta_hat: tuple[float, float, float, float, float]
    a2_star: float
    sqrt_mu: float = field(init=False)
    sqrt_mu_s: float = field(init=False)
    mu_s: float = field(init=False)

    def __post_init__(self):
        sms = 1.0 + math.sqrt(self.mu * self.s)
        object.__setattr__(self, "sqrt_mu", math.sqrt(self.mu))
        object.__setattr__(self, "sqrt_mu_s", sms)
        object.__setattr__(self, "mu_s", sms * sms)

    # -- the scalar function minimized in the a1* derivation ----------------
    def g(self, z):
        """g(z) = (beta3 + beta4 z^2) / (beta2 z - beta1) on (beta1/beta2, inf)."""
        b1, b2, b3, b4 = self.beta
        z = np.asarray(z, dtype=float)
        out = (b3 + b4 * z * z) / (b2 * z - b1)
        return float(out) if np.ndim(out) == 0 else out

    def z_root_plus(self) -> float:
        """The critical point of g: (beta1 beta4 + sqrt(beta2^2 beta3 beta4
        + beta1^2 beta4^2)) / (beta2 beta4)."""
        b1, b2, b3, b4 = self.beta
        return (b1 * b4 + math.sqrt(b2 * b2 * b3 * b4 + b1 * b1 * b4 * b4)) / (b2 * b4)

    # -- minimum inter-event time -------------------------------------------
    def eta1(self, a):
        mu, L = self.mu, self.lipschitz
        sq, sms = self.sqrt_mu, self.sqrt_mu_s
        a = np.asarray(a, dtype=float)
        num = 8.0 * a * sms * (a * (mu - 5.0 * L) - 2.0 * L / sq - 3.0) + 13.0
        den = 2.0 * sms * L * (3.0 * a * a * sms * L + 1.0) + 8.0 * mu
        return num / den

    def eta2(self, a):
        mu, L = self.mu, self.lipschitz
        sq, sms, ms = self.sqrt_mu, self.sqrt_mu_s, self.mu_s
        a = np.asarray(a, dtype=float)
        num = -(3.0 * sms * sq * L * (4.0 * a * L - 1.0) - 4.0 * mu * mu * math.sqrt(self.s))
        return num / (3.0 * ms * sq * L * L)

    def nu1(self, a):
        mu, L = self.mu, self.lipschitz
        sq, sms = self.sqrt_mu, self.sqrt_mu_s
        a = np.asarray(a, dtype=float)
        shared = sms * L * (3.0 * a * a * sms * L + 1.0)
        first = (mu * (2.0 * a**3 * sms * L * L + a * sms + 16.0)
                 + 8.0 * sms * L * (2.0 * a * a * sms * L + 1.0)) / (2.0 * sq * (shared + 4.0 * mu))
        second = sms * (a * L * (8.0 * a * L + 1.0) + 4.0) / (shared + 4.0 * mu)
        return first + second

    def nu2(self, a):
        a = np.asarray(a, dtype=float)
        return (a * self.mu + 8.0 * self.sqrt_mu_s + 8.0 * self.sqrt_mu) / (3.0 * self.sqrt_mu_s * self.sqrt_mu)

    def miet(self, a):
        """MIET(a) = -nu + sqrt(nu^2 + eta) with eta = min(eta1, eta2),
        nu = max(nu1, nu2).  Positive on [0, a2_star]."""
        eta = np.minimum(self.eta1(a), self.eta2(a))
        nu = np.maximum(self.nu1(a), self.nu2(a))
        out = -nu + np.sqrt(nu * nu + eta)
        return float(out) if np.ndim(out) == 0 else out

    def default_tau(self) -> float:
        """Stepsize floor for the adaptive algorithms: 0.99 times the grid
        minimum of MIET over a 1024-point grid on [0, a2_star]."""
        grid = np.linspace(0.0, self.a2_star, 1024)
        return 0.99 * float(np.min(self.miet(grid)))


def constants_from(oracle: ObjectiveOracle, params: FlowParams,
                   alpha: float = 0.9) -> TriggerConstants:
    """Compute the admissibility constants for an oracle and flow parameters.

    alpha in (0, 1) backs a2* off its supremum; the default 0.9 keeps it
    close while leaving slack.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    mu, L, s = params.mu, params.lipschitz, params.s
    sq, sms = params.sqrt_mu, params.sqrt_mu_s

    beta1 = sms * mu
    beta2 = sms * L / sq
    beta3 = 13.0 * sq / 16.0
    beta4 = (4.0 * mu * mu * math.sqrt(s) + 3.0 * L * sq * sms) / (8.0 * L * L)
    a1_star = (2.0 / beta2**2) * (beta1 * beta4
                                  + math.sqrt(beta2**2 * beta3 * beta4 + beta1**2 * beta4**2))

    bh1 = sms * (1.5 * sq + L)
    bh2 = 1.5 * sq * sms
    bh3 = beta3
    bh4 = beta4
    bh5 = sms * (2.5 * sq * L - 0.5 * mu * sq)
    a2_star = alpha * min((-bh1 + math.sqrt(bh1 * bh1 + 4.0 * bh5 * bh3)) / (2.0 * bh5),
                          bh4 / bh2)

    return TriggerConstants(
        mu=mu, lipschitz=L, s=s, alpha=alpha,
        beta=(beta1, beta2, beta3, beta4), a1_star=a1_star,
        beta_hat=(bh1, bh2, bh3, bh4, bh5), a2_star=a2_star)


# ---------------------------------------------------------------------------
# shared per-(p_hat, a) quantities

class _Shared(NamedTuple):
    a: float
    x: np.ndarray
    v: np.ndarray
    gx: np.ndarray       # grad f(x_hat)
    gax: np.ndarray      # grad f(x_hat + a v_hat)
    fx: float
    dfa: float           # f(x_hat + a v_hat) - f(x_hat)
    nv2: float           # ||v_hat||^2
    ngx2: float          # ||grad f(x_hat)||^2
    ng2: float           # ||grad f(x_hat + a v_hat)||^2
    gax_v: float         # <grad f(x_hat + a v_hat), v_hat>
    gx_v: float          # <grad f(x_hat), v_hat>
    w2: float            # ||2 sqrt(mu) v_hat + sqrt_mu_s grad f(x_hat + a v_hat)||^2


def _shared(p_hat: State, a: float, params: FlowParams, oracle: ObjectiveOracle,
            gx: Optional[np.ndarray] = None, need_fx: bool = True) -> _Shared:
    # need_fx=False skips the value evaluations; only valid for ST bounds at
    # a = 0, where neither C nor the coefficients reference f
    x, v = p_hat.x, p_hat.v
    if gx is None:
        gx = oracle.gradient_hook(x)
    fx = float(oracle.value_hook(x)) if need_fx else 0.0
    if a == 0.0:
        gax, dfa = gx, 0.0
    else:
        xa = x + a * v
        gax = oracle.gradient_hook(xa)
        dfa = float(oracle.value_hook(xa)) - fx
    nv2 = float(v @ v)
    ngx2 = float(gx @ gx)
    if a == 0.0:
        ng2, gax_v = ngx2, float(gx @ v)
        gx_v = gax_v
    else:
        ng2 = float(gax @ gax)
        gax_v = float(gax @ v)
        gx_v = float(gx @ v)
    sq, sms = params.sqrt_mu, params.sqrt_mu_s
    w2 = 4.0 * params.mu * nv2 + 4.0 * sq * sms * gax_v + sms * sms * ng2
    return _Shared(a, x, v, gx, gax, fx, dfa, nv2, ngx2, ng2, gax_v, gx_v, w2)


def _constant_term(sh: _Shared, params: FlowParams) -> float:
    """C(p_hat; a), the t = 0 value shared by all derivative bounds."""
    mu, L = params.mu, params.lipschitz
    sq, sms = params.sqrt_mu, params.sqrt_mu_s
    a = sh.a
    av = a * math.sqrt(sh.nv2)  # ||a v_hat||
    return (-13.0 * sq / 16.0 * sh.nv2
            - mu * mu * math.sqrt(params.s) / 2.0 * sh.ngx2 / (L * L)
            + sms * (-3.0 * sq / (8.0 * L) * sh.ngx2
                     - sq * sh.dfa
                     + sq * math.sqrt(sh.ngx2) * av
                     - mu * sq / 2.0 * av * av
                     - (sh.gax_v - sh.gx_v)
                     + sq * a * sh.gax_v))


def _zoh_st_coeffs(sh: _Shared, params: FlowParams, C: float) -> tuple[float, float, float]:
    """(c2, c1, c0) of the ZOH derivative/ST quadratic."""
    mu, L = params.mu, params.lipschitz
    sq, sms = params.sqrt_mu, params.sqrt_mu_s
    a_st = 2.0 * mu * sh.nv2 + sms * (L * sh.nv2 + 2.0 * sq * sh.gax_v + sms * sh.ng2)
    b_lin = sq / 4.0 * (-sq * sh.nv2
                        + sms * (sh.gx_v - sh.gax_v - sq / L * sh.ng2 + sq * sh.a * sh.gax_v))
    b_quad = sq / 16.0 * sh.w2 + sq * sms / 4.0 * (L / 2.0 * sh.nv2 + sms / 4.0 * sh.ng2)
    return b_quad, a_st + b_lin, C


def _hoh_st_coeffs(sh: _Shared, params: FlowParams, C: float) -> tuple[float, float, float]:
    """(c2, c1, c0) of the HOH derivative/ST quadratic (norm-product bounds)."""
    mu, L = params.mu, params.lipschitz
    sq, sms, ms = params.sqrt_mu, params.sqrt_mu_s, params.mu_s
    nw = math.sqrt(sh.w2)
    ng = math.sqrt(sh.ng2)
    ngx = math.sqrt(sh.ngx2)
    nv = math.sqrt(sh.nv2)
    a_lin = nw * (sq * nv + L * sms / (2.0 * sq) * nv + 1.5 * sms * ng) \
        + ms / 2.0 * ng * (L / sq * nv + ng)
    a_quad = nw * ((L * sms / (2.0 * sq) + sq) * nw + L * ms / (2.0 * sq) * ng)
    b_lin = sq * sms / 4.0 * (sms / (2.0 * sq) * ng * ngx
                              + 0.5 * nw * (ngx / sq + nv / sms)
                              - sq * sh.ng2 / L
                              + (sh.a * sq - 0.5) * sh.gax_v)
    b_quad = ((10.0 * mu * mu + L * L * sms) / (32.0 * mu * sq) * sh.w2
              + ms * (4.0 * mu * mu + L * L * sms) / (32.0 * mu * sq) * sh.ng2
              + sms * (4.0 * mu * mu + L * L * sms) / (16.0 * mu * sq) * nw * ng)
    d_st = nw * (sms * ngx + sq * nv)
    return a_quad + b_quad, a_lin + b_lin + d_st, C


def _zoh_et_evaluator(sh: _Shared, params: FlowParams, C: float,
                      oracle: ObjectiveOracle) -> Callable:
    """ZOH derivative/ET bound as a function of t (scalar or array).

    Each evaluation monitors the frozen-velocity ray x_hat + t v_hat: one
    gradient and one value there.
    """
    mu, L = params.mu, params.lipschitz
    sq, sms = params.sqrt_mu, params.sqrt_mu_s

    def ev(t):
        t = np.asarray(t, dtype=float)
        ts = t[..., np.newaxis] if t.ndim > 0 else t
        xt = sh.x + ts * sh.v
        gxt = oracle.gradient_hook(xt)
        fxt = oracle.value_hook(xt)
        a_et = 2.0 * mu * t * sh.nv2 + sms * (np.sum((gxt - sh.gx) * sh.v, axis=-1)
                                              + 2.0 * t * sq * sh.gax_v + t * sms * sh.ng2)
        b_et = (sq * t * t / 16.0 * sh.w2 - t * mu / 4.0 * sh.nv2
                + sq * sms / 4.0 * (fxt - sh.fx - t * sh.gax_v
                                    + t * t * sms / 4.0 * sh.ng2
                                    - t * sq / L * sh.ng2
                                    + t * sq * sh.a * sh.gax_v))
        out = a_et + b_et + C
        return float(out) if np.ndim(out) == 0 else out

    return ev


def _hoh_et_evaluator(sh: _Shared, params: FlowParams, C: float,
                      oracle: ObjectiveOracle) -> Callable:
    """HOH derivative/ET bound as a function of t (scalar or array).

    Monitors the frozen-gradient exact trajectory (x(t), v(t)); one gradient
    and one value at x(t) per evaluation.  Uses the exact identity
    v(t) - v_hat + 2 sqrt(mu)(x(t) - x_hat) = -sqrt_mu_s * t * g, which
    collapses two of the bound's quadratic terms.
    """
    L = params.lipschitz
    sq, sms = params.sqrt_mu, params.sqrt_mu_s

    def ev(t):
        t = np.asarray(t, dtype=float)
        pt = hoh_step_from_gradient(State(sh.x, sh.v), t, params, sh.gax)
        xt, vt = pt.x, pt.v
        gxt = oracle.gradient_hook(xt)
        fxt = oracle.value_hook(xt)
        dv = vt - sh.v
        dx = xt - sh.x
        a_et = (sms * (np.sum((gxt - sh.gx) * vt, axis=-1)
                       - np.sum(dv * sh.gax, axis=-1)
                       - sq * np.sum(dx * sh.gax, axis=-1))
                - sq * np.sum(dv * vt, axis=-1))
        # |v(t) - v_hat + 2 sqrt(mu)(x(t)-x_hat)|^2 = mu_s t^2 |g|^2 exactly
        b_et = sq / 4.0 * (sms * (fxt - sh.fx)
                           - sq * sms * t * sh.ng2 / L
                           + sq * sms * t * sh.a * sh.gax_v
                           + 0.25 * (np.sum(vt * vt, axis=-1) - sh.nv2)
                           + 0.25 * sms * sms * t * t * sh.ng2
                           - 0.5 * sms * t * sh.gax_v)
        d_et = np.sum((sms * sh.gx - sq * sh.v) * dv, axis=-1)
        out = a_et + b_et + d_et + C
        return float(out) if np.ndim(out) == 0 else out

    return ev


# ---------------------------------------------------------------------------
# the bound object


class StepResult(NamedTuple):
    step: float
    capped: bool  # True when no sign change was found before t_max


@dataclass
class StepBound:
    """One trigger bound at a fixed (p_hat, a).

    ``constant_term`` is C(p_hat; a) for every kind, including performance
    kinds (whose own value at t = 0 is 0); the adaptive algorithms test it
    for feasibility.  ``st_coeffs`` always holds the derivative/ST quadratic
    of the same hold, which seeds the root brackets for the other kinds.
    Performance/ET instances carry a quadrature cache of cumulative panel
    integrals, so a bound with that cache is single-consumer.
    """

    trigger: str  # "derivative" | "performance"
    mode: str     # "ET" | "ST"
    hold: str     # "ZOH" | "HOH"
    constant_term: float
    st_coeffs: tuple[float, float, float]
    kappa: float  # sqrt(mu)/4, the exp weight of the performance integral
    et_eval: Optional[Callable] = None
    anchor: Optional["_Shared"] = None  # p_hat quantities; run loops reuse the gradients
    _checkpoints: list = field(default_factory=list, repr=False)

    def __call__(self, t):
        if self.mode == "ST":
            if self.trigger == "derivative":
                c2, c1, c0 = self.st_coeffs
                t = np.asarray(t, dtype=float)
                out = (c2 * t + c1) * t + c0
                return float(out) if np.ndim(out) == 0 else out
            return _exp_poly_integral(self.st_coeffs, self.kappa, t)
        if self.trigger == "derivative":
            return self.et_eval(t)
        return self._performance_et(t)

    # -- performance/ET: cached integral of e^{kappa z} * et_eval(z) --------
    def _performance_et(self, t):
        if np.ndim(t) > 0:
            return np.array([self._performance_et(float(ti)) for ti in np.asarray(t).ravel()]
                            ).reshape(np.shape(t))
        t = float(t)
        if t == 0.0:
            return 0.0
        keys = [c[0] for c in self._checkpoints]
        i = _bisect.bisect_right(keys, t) - 1
        t0, acc = (0.0, 0.0) if i < 0 else self._checkpoints[i]
        if t != t0:
            acc += _adaptive_simpson(
                lambda z: np.exp(self.kappa * z) * self.et_eval(z), t0, t)
            _bisect.insort(self._checkpoints, (t, acc))
        return acc

    def describe(self) -> dict:
        """Diagnostic record for the verbose per-step dump."""
        return {
            "trigger": self.trigger, "mode": self.mode, "hold": self.hold,
            "constant_term": self.constant_term,
            "st_coeffs": list(self.st_coeffs),
        }


def _adaptive_simpson(f, lo: float, hi: float) -> float:
    """Composite Simpson with uniform interval halving on [lo, hi], stopping
    when successive sums agree to 1e-12 * (1 + unsigned mass).

    The tolerance is scaled by the integral of |f|, not the signed result:
    at a performance-trigger root the signed integral cancels to ~0 by
    definition while the integrand stays large, so a result-scaled
    tolerance would sit below the summation roundoff floor and never be
    met.  The integrand is evaluated in batches (f must accept arrays);
    each refinement only evaluates the new midpoints.
    """
    if hi == lo:
        return 0.0
    vals = f(np.array([lo, 0.5 * (lo + hi), hi]))
    h = 0.5 * (hi - lo)
    prev = h / 3.0 * (vals[0] + 4.0 * vals[1] + vals[2])
    # refine: interleave midpoints until two successive composite sums agree
    for _level in range(_QUAD_MAX_LEVELS):
        m = vals.size - 1  # current panel count (as node gaps)
        h *= 0.5
        new_t = lo + (hi - lo) * (np.arange(m) + 0.5) / m
        new_vals = f(new_t)
        merged = np.empty(2 * m + 1)
        merged[0::2] = vals
        merged[1::2] = new_vals
        vals = merged
        cur = h / 3.0 * (vals[0] + vals[-1] + 4.0 * np.sum(vals[1::2]) + 2.0 * np.sum(vals[2:-1:2]))
        av = np.abs(vals)
        mass = h / 3.0 * (av[0] + av[-1] + 4.0 * np.sum(av[1::2]) + 2.0 * np.sum(av[2:-1:2]))
        if abs(cur - prev) <= 1e-12 * (1.0 + mass):
            return cur
        prev = cur
    raise NumericError(f"quadrature did not converge in {_QUAD_MAX_LEVELS} halvings "
                       f"on [{lo}, {hi}]")


def _exp_poly_integral(coeffs, kappa: float, t):
    """int_0^t e^{kappa z} (c2 z^2 + c1 z + c0) dz.

    Closed form via the e^{kappa z} z^n antiderivatives for kappa*t >= 1;
    below that the closed form cancels catastrophically, so a short power
    series (exact to machine precision in < 40 terms) takes over.
    """
    if np.ndim(t) > 0:
        return np.array([_exp_poly_integral(coeffs, kappa, float(ti))
                         for ti in np.asarray(t).ravel()]).reshape(np.shape(t))
    c2, c1, c0 = coeffs
    t = float(t)
    kt = kappa * t
    if kt < 1.0:
        i0 = i1 = i2 = 0.0
        term = 1.0  # kappa^j / j!
        tp = t      # t^{j+1}
        for j in range(40):
            i0 += term * tp / (j + 1)
            i1 += term * tp * t / (j + 2)
            i2 += term * tp * t * t / (j + 3)
            term *= kappa / (j + 1)
            tp *= t
            if term * tp <= 1e-17 * abs(i0) + 1e-300:
                break
    else:
        e = math.exp(kt)
        i0 = (e - 1.0) / kappa
        i1 = (e * (kt - 1.0) + 1.0) / (kappa * kappa)
        i2 = (e * (kt * (kt - 2.0) + 2.0) - 2.0) / (kappa ** 3)
    return c2 * i2 + c1 * i1 + c0 * i0


# ---------------------------------------------------------------------------
# bound constructors


def _build(p_hat: State, a: float, params: FlowParams, oracle: ObjectiveOracle,
           trigger: str, mode: str, hold: str,
           gx: Optional[np.ndarray] = None) -> StepBound:
    sh = _shared(p_hat, a, params, oracle, gx=gx,
                 need_fx=(mode == "ET" or a != 0.0))
    C = _constant_term(sh, params)
    if hold == "ZOH":
        st = _zoh_st_coeffs(sh, params, C)
    else:
        st = _hoh_st_coeffs(sh, params, C)
    et = None
    if mode == "ET":
        if hold == "ZOH":
            et = _zoh_et_evaluator(sh, params, C, oracle)
        else:
            et = _hoh_et_evaluator(sh, params, C, oracle)
    return StepBound(trigger=trigger, mode=mode, hold=hold, constant_term=C,
                     st_coeffs=st, kappa=params.sqrt_mu / 4.0, et_eval=et,
                     anchor=sh)


def zoh_bound_derivative_ST(p_hat, a, params, oracle) -> StepBound:
    """Quadratic upper bound on (d/dt)V + (sqrt(mu)/4)V along the ZOH ray,
    computable from p_hat alone (gradients at x_hat and x_hat + a v_hat)."""
    return _build(p_hat, a, params, oracle, "derivative", "ST", "ZOH")


def zoh_bound_derivative_ET(p_hat, a, params, oracle) -> StepBound:
    """Trajectory-monitoring upper bound on (d/dt)V + (sqrt(mu)/4)V along the
    ZOH ray; each evaluation costs one gradient and one value at x_hat + t v_hat."""
    return _build(p_hat, a, params, oracle, "derivative", "ET", "ZOH")


def zoh_bound_performance_ST(p_hat, a, params, oracle) -> StepBound:
    """Closed-form exp-weighted integral of the ZOH derivative/ST quadratic."""
    return _build(p_hat, a, params, oracle, "performance", "ST", "ZOH")


def zoh_bound_performance_ET(p_hat, a, params, oracle) -> StepBound:
    """Adaptive-quadrature exp-weighted integral of the ZOH derivative/ET bound."""
    return _build(p_hat, a, params, oracle, "performance", "ET", "ZOH")


def hoh_bound_derivative_ST(p_hat, a, params, oracle) -> StepBound:
    """Quadratic upper bound on (d/dt)V + (sqrt(mu)/4)V along the exact
    frozen-gradient trajectory."""
    return _build(p_hat, a, params, oracle, "derivative", "ST", "HOH")


def hoh_bound_derivative_ET(p_hat, a, params, oracle) -> StepBound:
    return _build(p_hat, a, params, oracle, "derivative", "ET", "HOH")


def hoh_bound_performance_ST(p_hat, a, params, oracle) -> StepBound:
    return _build(p_hat, a, params, oracle, "performance", "ST", "HOH")


def hoh_bound_performance_ET(p_hat, a, params, oracle) -> StepBound:
    return _build(p_hat, a, params, oracle, "performance", "ET", "HOH")


def make_bound(p_hat: State, a: float, params: FlowParams, oracle: ObjectiveOracle,
               *, trigger: str, mode: str, hold: str,
               gx: Optional[np.ndarray] = None) -> StepBound:
    """Dispatch to one of the eight bound constructors by kind.

    ``gx`` optionally passes a precomputed grad f(x_hat), sparing the run
    loops (which already hold it for the stopping test) one evaluation.
    """
    if trigger not in ("derivative", "performance"):
        raise ValueError(f"unknown trigger {trigger!r}")
    if mode not in ("ET", "ST"):
        raise ValueError(f"unknown mode {mode!r}")
    if hold not in ("ZOH", "HOH"):
        raise ValueError(f"unknown hold {hold!r}")
    return _build(p_hat, a, params, oracle, trigger, mode, hold, gx=gx)


# ---------------------------------------------------------------------------
# stepsize root-finding


def default_t_max(params: FlowParams) -> float:
    """Generous step ceiling 10/sqrt(mu): the bounds are eventually
    increasing, so brackets past this only occur on degenerate states."""
    return 10.0 / params.sqrt_mu


def _derivative_st_root(coeffs, t_max: float) -> StepResult:
    c2, c1, c0 = coeffs  # c0 < 0 checked by caller; c2 >= 0 structurally
    if c2 <= 0.0:
        if c1 <= 0.0:
            return StepResult(t_max, True)
        root = -c0 / c1
    elif c1 <= 0.0:
        root = (-c1 + math.sqrt(c1 * c1 - 4.0 * c2 * c0)) / (2.0 * c2)
    else:
        # avoid cancellation between -c1 and the discriminant root
        root = -2.0 * c0 / (c1 + math.sqrt(c1 * c1 - 4.0 * c2 * c0))
    if root > t_max:
        return StepResult(t_max, True)
    return StepResult(root, False)


def _expand_then_bisect(f, lo: float, t_max: float,
                        fprime: Optional[Callable] = None) -> StepResult:
    """First sign change of f at or past lo, where f(lo) <= 0.

    With ``fprime`` given, bisection steps are replaced by Newton steps
    whenever the Newton iterate stays inside the bracket (the performance
    bounds are convex and increasing past the derivative root, so Newton
    converges in a handful of iterations; the bracket keeps it safe).
    """
    flo = f(lo)
    if flo == 0.0:
        return StepResult(lo, False)
    hi = lo
    while True:
        if hi >= t_max:
            return StepResult(t_max, True)
        hi = min(2.0 * hi, t_max)
        fhi = f(hi)
        if fhi > 0.0:
            break
        lo = hi
    t = 0.5 * (lo + hi)
    for _ in range(_ROOT_MAX_ITERS):
        if hi - lo < 1e-14 * (1.0 + hi):
            break
        ft = f(t)
        if ft == 0.0:
            return StepResult(t, False)
        if ft > 0.0:
            hi = t
        else:
            lo = t
        t_next = None
        if fprime is not None:
            fp = fprime(t)
            if fp > 0.0:
                cand = t - ft / fp
                if lo < cand < hi:
                    t_next = cand
        if t_next is not None and abs(t_next - t) < 1e-15 * (1.0 + t):
            return StepResult(t_next, False)
        t = t_next if t_next is not None else 0.5 * (lo + hi)
    return StepResult(0.5 * (lo + hi), False)


def step_size(bound: StepBound, t_max: Optional[float] = None) -> StepResult:
    """First positive root of the bound: the certified stepsize from p_hat.

    Derivative/ST roots come from the quadratic formula (the coefficients
    have exactly one sign change); every other kind brackets from the
    corresponding ST step (a valid lower bound, since the ET/performance
    bounds sit below their ST/derivative counterparts) and bisects to width
    1e-14 * (1 + t).  A missing sign change before t_max returns t_max with
    ``capped`` set.
    """
    if t_max is None:
        t_max = 2.5 / bound.kappa  # 10/sqrt(mu)
    if bound.constant_term >= 0.0:
        raise TriggerInfeasibleError(
            f"bound is {bound.constant_term:.3e} >= 0 at t = 0; shrink a")
    d_st = _derivative_st_root(bound.st_coeffs, t_max)
    if bound.trigger == "derivative" and bound.mode == "ST":
        return d_st
    if d_st.capped:
        # the ST quadratic stays negative through t_max, so the sharper
        # bounds and their integrals do too
        return d_st
    if bound.trigger == "derivative":
        return _expand_then_bisect(bound.et_eval, d_st.step, t_max)
    c2, c1, c0 = bound.st_coeffs
    kappa = bound.kappa
    p_st = _expand_then_bisect(
        lambda t: _exp_poly_integral(bound.st_coeffs, kappa, t), d_st.step, t_max,
        fprime=lambda t: math.exp(kappa * t) * ((c2 * t + c1) * t + c0))
    if bound.mode == "ST" or p_st.capped:
        return p_st
    return _expand_then_bisect(
        bound._performance_et, p_st.step, t_max,
        fprime=lambda t: math.exp(kappa * t) * bound.et_eval(t))
