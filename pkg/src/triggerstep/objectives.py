"""Strongly convex objective oracles with certified curvature constants.

Every oracle carries a strong-convexity modulus ``mu`` and a gradient
Lipschitz constant ``lipschitz`` that are true bounds (not empirical fits),
since the stepsize certificates downstream are only valid for true bounds.
Evaluation hooks accept arrays with arbitrary leading batch axes; the last
axis is the coordinate axis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidObjectiveError, NumericError

# Fixed seed for the shipped regularized-logistic benchmark dataset.
DEFAULT_DATASET_SEED = 7


@dataclass(frozen=True)
class ObjectiveOracle:
    """A mu-strongly convex objective with L-Lipschitz gradient.

    Attributes
    ----------
    n : int
        Problem dimension.
    mu : float
        Strong-convexity modulus, 0 < mu <= lipschitz.
    lipschitz : float
        Gradient Lipschitz constant.
    minimizer : ndarray or None
        The unique minimizer when known; diagnostics only.  Algorithm code
        paths never read it.
    """

    n: int
    mu: float
    lipschitz: float
    value_hook: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    gradient_hook: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    minimizer: Optional[np.ndarray] = None

    def __post_init__(self):
        if not 0 < self.mu <= self.lipschitz:
            raise InvalidObjectiveError(
                f"need 0 < mu <= L, got mu={self.mu}, L={self.lipschitz}")

    def value(self, x) -> float | np.ndarray:
        """f(x).  Returns a scalar for a single point, an array for a batch."""
        out = self.value_hook(np.asarray(x, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def gradient(self, x) -> np.ndarray:
        """grad f(x), same shape as ``x``."""
        return self.gradient_hook(np.asarray(x, dtype=float))


def make_quadratic(diag) -> ObjectiveOracle:
    """Build the oracle for f(x) = sum_i d_i x_i^2 with positive diagonal d.

    The Hessian is 2*diag(d), so mu = 2*min(d) and L = 2*max(d) exactly,
    and the minimizer is the origin.
    """
    d = np.asarray(diag, dtype=float)
    if d.ndim != 1 or d.size == 0 or not np.all(d > 0):
        raise InvalidObjectiveError("diag must be a 1-d vector of positive reals")

    def value(x):
        return np.sum(d * x * x, axis=-1)

    def gradient(x):
        return 2.0 * d * x

    return ObjectiveOracle(
        n=d.size,
        mu=2.0 * float(d.min()),
        lipschitz=2.0 * float(d.max()),
        value_hook=value,
        gradient_hook=gradient,
        minimizer=np.zeros(d.size),
    )


@dataclass(frozen=True)
class LogisticDataset:
    """Ten labeled feature vectors for the regularized logistic benchmark.

    ``features`` is (10, 4) with entries in [-5, 5]; ``labels`` is (10,)
    with entries in {-1, +1}.  ``regularization`` is the coefficient of
    ||x||^2 in the objective and is fixed at 1/2.
    """

    features: np.ndarray
    labels: np.ndarray
    seed: int
    regularization: float = 0.5

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        labs = np.asarray(self.labels, dtype=int)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)
        if feats.shape != (10, 4):
            raise InvalidObjectiveError(f"features must be (10, 4), got {feats.shape}")
        if labs.shape != (10,):
            raise InvalidObjectiveError(f"labels must be (10,), got {labs.shape}")
        if np.any(np.abs(feats) > 5.0):
            raise InvalidObjectiveError("feature entries must lie in [-5, 5]")
        if not np.all(np.isin(labs, (-1, 1))):
            raise InvalidObjectiveError("labels must be -1 or +1")
        if self.regularization != 0.5:
            raise InvalidObjectiveError("regularization coefficient is fixed at 1/2")


_MASK64 = (1 << 64) - 1


def _splitmix64(seed: int):
    """SplitMix64 stream: 64-bit state, golden-gamma increment, two xor-shift
    multiplies per output.  Pinned here (rather than platform RNG) so datasets
    are bit-reproducible across machines; the README documents the constants.
    """
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def generate_dataset(seed: int) -> LogisticDataset:
    """Draw the 10-sample dataset for a seed: features uniform on [-5, 5]^4
    (row-major order, 40 draws), then 10 label draws from the low bit."""
    stream = _splitmix64(seed)
    feats = np.empty((10, 4))
    for i in range(10):
        for j in range(4):
            u = (next(stream) >> 11) * 2.0**-53  # uniform in [0, 1)
            feats[i, j] = -5.0 + 10.0 * u
    labs = np.array([1 if next(stream) & 1 else -1 for _ in range(10)])
    return LogisticDataset(features=feats, labels=labs, seed=seed)


def save_dataset(dataset: LogisticDataset, path) -> None:
    payload = {
        "seed": dataset.seed,
        "features": [[float(v) for v in row] for row in dataset.features],
        "labels": [int(v) for v in dataset.labels],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset(path) -> LogisticDataset:
    with open(path) as fh:
        payload = json.load(fh)
    return LogisticDataset(
        features=np.asarray(payload["features"], dtype=float),
        labels=np.asarray(payload["labels"], dtype=int),
        seed=int(payload["seed"]),
    )


def _sigmoid(t: np.ndarray) -> np.ndarray:
    # branch on sign so neither exp overflows
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def lipschitz_estimate(dataset: LogisticDataset) -> float:
    """Gradient Lipschitz bound 1 + lambda_max(Z^T Z)/4 for the logistic oracle.

    Each per-sample Hessian is sigma'(.)*z_i z_i^T with sigma' <= 1/4, so the
    logistic part is dominated by Z^T Z / 4 and the regularizer adds the
    identity.  lambda_max comes from power iteration to relative tolerance
    1e-10 (at most 10000 iterations).
    """
    G = dataset.features.T @ dataset.features
    # a start vector with nonzero image; all-zero images mean G = 0
    q = None
    for cand in [np.ones(4), *np.eye(4)]:
        if np.linalg.norm(G @ cand) > 0:
            q = cand / np.linalg.norm(cand)
            break
    if q is None:
        return 1.0
    lam = float(q @ (G @ q))
    for _ in range(10000):
        z = G @ q
        q = z / np.linalg.norm(z)
        lam_new = float(q @ (G @ q))
        if abs(lam_new - lam) <= 1e-10 * max(1.0, abs(lam_new)):
            return 1.0 + lam_new / 4.0
        lam = lam_new
    raise NumericError("power iteration did not converge within 10000 iterations")


def make_logistic(dataset: LogisticDataset) -> ObjectiveOracle:
    """Build the oracle for f(x) = sum_i log(1 + exp(-y_i <z_i, x>)) + ||x||^2 / 2.

    The regularizer makes f 1-strongly convex; ``lipschitz`` comes from
    :func:`lipschitz_estimate`.  The minimizer has no closed form and is
    computed once by :func:`minimizer_oracle` and cached on the oracle.
    """
    Z = dataset.features
    y = dataset.labels.astype(float)

    def value(x):
        margins = y * (x @ Z.T)  # (..., 10)
        return np.sum(np.logaddexp(0.0, -margins), axis=-1) + 0.5 * np.sum(x * x, axis=-1)

    def gradient(x):
        margins = y * (x @ Z.T)
        sig = _sigmoid(-margins)  # (..., 10)
        return -(sig * y) @ Z + x

    base = ObjectiveOracle(
        n=4, mu=1.0, lipschitz=lipschitz_estimate(dataset),
        value_hook=value, gradient_hook=gradient, minimizer=None)
    x_star = minimizer_oracle(base)
    return ObjectiveOracle(
        n=4, mu=1.0, lipschitz=base.lipschitz,
        value_hook=value, gradient_hook=gradient, minimizer=x_star)


def minimizer_oracle(oracle: ObjectiveOracle, x0=None) -> np.ndarray:
    """Locate the minimizer by plain gradient descent with stepsize 1/L.

    Runs until ||grad f|| <= 1e-12 * max(1, ||grad f(0)||); guaranteed to get
    there for strongly convex f.  Deliberately simple so it stays independent
    of the algorithms under test.
    """
    x = np.zeros(oracle.n) if x0 is None else np.asarray(x0, dtype=float).copy()
    tol = 1e-12 * max(1.0, float(np.linalg.norm(oracle.gradient(np.zeros(oracle.n)))))
    h = 1.0 / oracle.lipschitz
    for _ in range(10**7):
        g = oracle.gradient(x)
        if np.linalg.norm(g) <= tol:
            return x
        x = x - h * g
    raise NumericError("gradient descent did not reach the minimizer tolerance "
                       "within 1e7 iterations")


def check_gradient(oracle: ObjectiveOracle, x) -> float:
    """Max relative error of the analytic gradient against central differences.

    Uses step 1e-6 * (1 + ||x||) per coordinate; the error of coordinate i is
    scaled by max(1, |analytic_i|).
    """
    x = np.asarray(x, dtype=float)
    h = 1e-6 * (1.0 + float(np.linalg.norm(x)))
    ana = oracle.gradient(x)
    num = np.empty_like(ana)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        num[i] = (oracle.value(x + e) - oracle.value(x - e)) / (2.0 * h)
    return float(np.max(np.abs(num - ana) / np.maximum(1.0, np.abs(ana))))
