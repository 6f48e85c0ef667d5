"""Shared fixtures: benchmark oracles and the certified reference runs.

The full runs are session-scoped and lazily built, so each test module (and
each acceptance criterion) pays only for the runs it actually uses, while
runs shared between criteria are executed once.  Every run fixture records
its wall time in trace.metadata["wall_time"], which the acceptance tests
charge against their runtime budgets.
"""

import warnings

import numpy as np
import pytest

from triggerstep.algorithms import (AlgoConfig, run_adaptive_dg,
                                    run_adaptive_hoh, run_displaced_gradient,
                                    run_heavy_ball_discrete, run_nesterov)
from triggerstep.dynamics import FlowParams, State, initial_velocity
from triggerstep.objectives import (DEFAULT_DATASET_SEED, generate_dataset,
                                    make_logistic, make_quadratic)
from triggerstep.triggers import constants_from

BENCH_DIAG = (0.01, 100.0)
# Adaptive-rate pair used across the reference runs: gentle growth with a
# decisive shrink, so the displacement does not camp at the feasibility
# boundary where stepsizes collapse.
R_I, R_D = 1.05, 0.1


@pytest.fixture(scope="session")
def quad_oracle():
    return make_quadratic(np.array(BENCH_DIAG))


@pytest.fixture(scope="session")
def quad_params(quad_oracle):
    return FlowParams.from_oracle(quad_oracle)


@pytest.fixture(scope="session")
def quad_consts(quad_oracle, quad_params):
    return constants_from(quad_oracle, quad_params)


@pytest.fixture(scope="session")
def quad_p0(quad_oracle, quad_params):
    x0 = np.full(quad_oracle.n, 50.0)
    return State(x0, initial_velocity(x0, quad_params, quad_oracle))


@pytest.fixture(scope="session")
def logi_oracle():
    return make_logistic(generate_dataset(DEFAULT_DATASET_SEED))


@pytest.fixture(scope="session")
def logi_params(logi_oracle):
    return FlowParams.from_oracle(logi_oracle)


@pytest.fixture(scope="session")
def logi_consts(logi_oracle, logi_params):
    return constants_from(logi_oracle, logi_params)


@pytest.fixture(scope="session")
def logi_p0(logi_oracle, logi_params):
    x0 = np.full(logi_oracle.n, 50.0)
    return State(x0, initial_velocity(x0, logi_params, logi_oracle))


def _fixed(p0, oracle, **kw):
    # a above a2* warns by design on the event-triggered benchmark runs
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_displaced_gradient(p0, AlgoConfig(**kw), oracle)


# -- quadratic reference runs -------------------------------------------------

@pytest.fixture(scope="session")
def q_alg1_d(quad_p0, quad_oracle, quad_consts):
    return _fixed(quad_p0, quad_oracle, trigger="derivative", mode="ST",
                  hold="ZOH", a0=quad_consts.a2_star)


@pytest.fixture(scope="session")
def q_alg1_p(quad_p0, quad_oracle):
    return _fixed(quad_p0, quad_oracle, trigger="performance", mode="ET",
                  hold="ZOH", a0=0.1)


@pytest.fixture(scope="session")
def q_adg(quad_p0, quad_oracle, quad_consts):
    cfg = AlgoConfig(trigger="derivative", mode="ST", hold="ZOH",
                     a0=quad_consts.a2_star, r_i=R_I, r_d=R_D)
    return run_adaptive_dg(quad_p0, cfg, quad_oracle)


@pytest.fixture(scope="session")
def q_ahoh(quad_p0, quad_oracle):
    cfg = AlgoConfig(trigger="derivative", mode="ET", hold="HOH",
                     a0=0.1, r_i=R_I, r_d=R_D)
    return run_adaptive_hoh(quad_p0, cfg, quad_oracle)


@pytest.fixture(scope="session")
def q_hoh_d(quad_p0, quad_oracle):
    return _fixed(quad_p0, quad_oracle, trigger="derivative", mode="ET",
                  hold="HOH", a0=0.1)


@pytest.fixture(scope="session")
def q_hoh_p(quad_p0, quad_oracle):
    return _fixed(quad_p0, quad_oracle, trigger="performance", mode="ET",
                  hold="HOH", a0=0.1)


@pytest.fixture(scope="session")
def q_nesterov(quad_oracle):
    return run_nesterov(np.full(quad_oracle.n, 50.0), quad_oracle)


@pytest.fixture(scope="session")
def q_heavy_ball(quad_oracle):
    return run_heavy_ball_discrete(np.full(quad_oracle.n, 50.0), quad_oracle)


# -- logistic reference runs --------------------------------------------------

@pytest.fixture(scope="session")
def l_alg1_d(logi_p0, logi_oracle, logi_consts):
    return _fixed(logi_p0, logi_oracle, trigger="derivative", mode="ST",
                  hold="ZOH", a0=logi_consts.a2_star)


@pytest.fixture(scope="session")
def l_alg1_p(logi_p0, logi_oracle, logi_consts):
    return _fixed(logi_p0, logi_oracle, trigger="performance", mode="ST",
                  hold="ZOH", a0=logi_consts.a2_star)


@pytest.fixture(scope="session")
def l_adg(logi_p0, logi_oracle, logi_consts):
    cfg = AlgoConfig(trigger="derivative", mode="ST", hold="ZOH",
                     a0=logi_consts.a2_star, r_i=R_I, r_d=R_D)
    return run_adaptive_dg(logi_p0, cfg, logi_oracle)


@pytest.fixture(scope="session")
def l_ahoh(logi_p0, logi_oracle):
    cfg = AlgoConfig(trigger="derivative", mode="ET", hold="HOH",
                     a0=0.025, r_i=R_I, r_d=R_D)
    return run_adaptive_hoh(logi_p0, cfg, logi_oracle)


@pytest.fixture(scope="session")
def l_hoh_d(logi_p0, logi_oracle):
    return _fixed(logi_p0, logi_oracle, trigger="derivative", mode="ET",
                  hold="HOH", a0=0.025)


@pytest.fixture(scope="session")
def l_hoh_p(logi_p0, logi_oracle):
    return _fixed(logi_p0, logi_oracle, trigger="performance", mode="ET",
                  hold="HOH", a0=0.025)


@pytest.fixture(scope="session")
def l_nesterov(logi_oracle):
    return run_nesterov(np.full(logi_oracle.n, 50.0), logi_oracle)


@pytest.fixture(scope="session")
def l_heavy_ball(logi_oracle):
    return run_heavy_ball_discrete(np.full(logi_oracle.n, 50.0), logi_oracle)
