"""Invariant suite behavior, including fault injection."""

import numpy as np

from triggerstep.dynamics import FlowParams
from triggerstep.objectives import ObjectiveOracle, make_quadratic
from triggerstep.verify import (check_miet, check_step_orderings,
                                check_trigger_soundness, run_all_checks)


def _with_mu(base, mu):
    return ObjectiveOracle(n=base.n, mu=mu, lipschitz=base.lipschitz,
                           value_hook=base.value_hook,
                           gradient_hook=base.gradient_hook,
                           minimizer=base.minimizer)


def test_all_checks_pass_quick(quad_oracle, quad_params,
                               logi_oracle, logi_params):
    for oracle, params in ((quad_oracle, quad_params),
                           (logi_oracle, logi_params)):
        for res in run_all_checks(oracle, params, seed=0, scale=0.1):
            assert res.passed, res.line()


def test_doubled_mu_breaks_soundness():
    # claiming twice the true curvature must be caught; a mildly conditioned
    # quadratic makes the violation reachable by uniform state sampling (on
    # the benchmark quadratic the 1e4 condition number hides the weak
    # direction from moderate sample counts)
    base = make_quadratic(np.array([0.5, 1.0]))
    bad = _with_mu(base, 2.0 * base.mu)
    params = FlowParams.from_oracle(bad)
    res = check_trigger_soundness(bad, params, np.random.default_rng(0),
                                  n_states=50)
    assert not res.passed
    assert "exceeds bound" in res.detail
    # the honest oracle passes the identical check
    good_params = FlowParams.from_oracle(base)
    res_good = check_trigger_soundness(base, good_params,
                                       np.random.default_rng(0), n_states=50)
    assert res_good.passed, res_good.detail


def test_rest_point_states_are_skipped(quad_oracle, quad_params):
    class RestRng:
        def uniform(self, lo, hi, size=None):
            return np.zeros(size)

    res = check_trigger_soundness(quad_oracle, quad_params, RestRng(),
                                  n_states=3)
    assert res.passed
    assert "skips" in res.detail and "0 rest-point" not in res.detail


def test_orderings_and_miet_small_counts(quad_oracle, quad_params):
    assert check_step_orderings(quad_oracle, quad_params,
                                np.random.default_rng(4), n_states=10).passed
    assert check_miet(quad_oracle, quad_params,
                      np.random.default_rng(5), n_states=20).passed


def test_check_result_line_format(quad_oracle, quad_params):
    res = check_miet(quad_oracle, quad_params, np.random.default_rng(6),
                     n_states=5)
    line = res.line()
    assert line.startswith("[PASS]") and "MIET" in line
