"""Exact, series, regenerative and batch-means variance routes.

The two-state closed form a b (2 - a - b) / (a + b)^3 anchors the
exact computations; simulation estimators are checked against it
within bootstrap standard errors.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regen_bernstein import (
    collect_excursions,
    make_two_state,
    mean_excursion_value,
    resolve_functional,
    sample_path,
    sigma_inf_from_excursions,
    sigma_mrv_batch,
    sigma_mrv_cov_series,
    sigma_mrv_exact,
    sigma_mrv_regenerative,
    two_state_sigma_mrv,
)
from regen_bernstein._rng import substream


def close(got, want, rel=1e-12):
    return got == pytest.approx(want, rel=rel, abs=1e-300)


# hand: a=b=1/2 gives (1/4)(1)/1, a=b=1/4 gives (1/16)(3/2)/(1/8)
def test_exact_symmetric_half():
    chain = make_two_state(0.5, 0.5)
    assert close(sigma_mrv_exact(chain, "indicator_centered"), 0.25)
    assert close(two_state_sigma_mrv(0.5, 0.5), 0.25)


def test_exact_symmetric_quarter():
    chain = make_two_state(0.25, 0.25)
    assert close(sigma_mrv_exact(chain, "indicator_centered"), 0.75)
    assert close(two_state_sigma_mrv(0.25, 0.25), 0.75)


@given(st.floats(min_value=0.05, max_value=0.95),
       st.floats(min_value=0.05, max_value=0.95))
@settings(max_examples=40, deadline=None)
def test_closed_form_matches_fundamental_matrix(a, b):
    chain = make_two_state(a, b)
    assert close(sigma_mrv_exact(chain, "indicator_centered"),
                 two_state_sigma_mrv(a, b), rel=1e-9)


@pytest.mark.parametrize("a,b", [(0.5, 0.5), (0.25, 0.25), (0.7, 0.2),
                                 (0.6, 0.4)])
def test_cov_series_agrees_with_fundamental_matrix(a, b):
    # two algorithmically unrelated routes to the same number: a linear
    # solve against a truncated autocovariance sum
    chain = make_two_state(a, b)
    exact = sigma_mrv_exact(chain, "indicator_centered")
    series = sigma_mrv_cov_series(chain, "indicator_centered")
    assert close(series, exact, rel=1e-9)


def test_cov_series_lagged_terms_vanish_when_rows_match():
    # a + b = 1 makes the chain iid, every lagged covariance is 0 and
    # the variance collapses to pi_1 (1 - pi_1) = a b
    chain = make_two_state(0.3, 0.7)
    assert close(sigma_mrv_cov_series(chain, "indicator_centered"), 0.21)
    assert close(two_state_sigma_mrv(0.3, 0.7), 0.21)


def test_zero_functional_gives_zero():
    chain = make_two_state(0.5, 0.5)
    f = np.zeros(2)
    assert sigma_mrv_exact(chain, f) == 0.0
    assert sigma_mrv_cov_series(chain, f) == 0.0


def test_exact_requires_tabulated_values():
    from regen_bernstein import make_singular_mod1
    chain = make_singular_mod1()
    with pytest.raises(ValueError, match="tabulated"):
        sigma_mrv_exact(chain, "cos2pi")


def test_excursion_plug_in_iid_unit_variance():
    rng = np.random.default_rng(11)
    chi = rng.standard_normal(40000)
    est = sigma_inf_from_excursions(chi, seed=11)
    assert est.se is not None and est.se > 0.0
    assert abs(est.value - 1.0) <= 4.0 * est.se


def test_excursion_plug_in_difference_process_vanishes():
    # chi_i = Z_i - Z_{i+1} is 1-dependent with E chi^2 = 2 Var Z and
    # adjacent product -Var Z, so the plug-in must cancel to 0
    rng = np.random.default_rng(12)
    z = rng.standard_normal(40001)
    chi = z[:-1] - z[1:]
    est = sigma_inf_from_excursions(chi, seed=12)
    assert abs(est.raw_value) <= 4.0 * est.se
    assert est.value >= 0.0


def test_excursion_plug_in_needs_two():
    with pytest.raises(ValueError, match="at least 2"):
        sigma_inf_from_excursions(np.array([1.0]))


def test_link_between_excursion_and_path_variance():
    # sigma2_inf = sigma2_mrv * mean gap, probed on the two-state chain
    # where the left side is estimated and the right side exact
    chain = make_two_state(0.5, 0.5)
    chi, gaps = collect_excursions(chain, "indicator_centered", 30000, 21)
    est = sigma_inf_from_excursions(chi, seed=21)
    want = sigma_mrv_exact(chain, "indicator_centered") * chain.mean_gap()
    assert abs(est.value - want) <= 4.0 * est.se


def test_regenerative_estimate_recovers_quarter():
    chain = make_two_state(0.5, 0.5)
    chi, gaps = collect_excursions(chain, "indicator_centered", 30000, 22)
    est = sigma_mrv_regenerative(chi, gaps, seed=22)
    assert abs(est.value - 0.25) <= 4.0 * est.se
    assert close(est.detail["mean_gap"], float(np.mean(gaps)))


def test_regenerative_alignment_errors():
    with pytest.raises(ValueError, match="aligned"):
        sigma_mrv_regenerative(np.zeros(5), np.ones(4))
    with pytest.raises(ValueError, match="at least 2"):
        sigma_mrv_regenerative(np.zeros(1), np.ones(1))
    with pytest.raises(ValueError, match="positive"):
        sigma_mrv_regenerative(np.zeros(3), np.zeros(3))


def test_batch_means_long_run():
    chain = make_two_state(0.5, 0.5)
    n = 1_000_000
    rng = substream(31, 1, 0)
    path = sample_path(chain, 0, n, rng)
    fvals = resolve_functional(chain, "indicator_centered").values[path]
    est = sigma_mrv_batch(fvals, int(np.sqrt(n)))
    assert abs(est.value - 0.25) <= 0.1 * 0.25


def test_batch_means_cumulative_route_identical():
    rng = np.random.default_rng(32)
    series = rng.standard_normal(5000)
    sums = np.concatenate([[0.0], np.cumsum(series)])
    direct = sigma_mrv_batch(series, 50)
    via_sums = sigma_mrv_batch(sums, 50, cumulative=True)
    assert direct.value == via_sums.value
    assert direct.n_samples == via_sums.n_samples == 100


def test_batch_means_guards():
    with pytest.raises(ValueError, match="positive"):
        sigma_mrv_batch(np.zeros(100), 0)
    with pytest.raises(ValueError, match="20 batches"):
        sigma_mrv_batch(np.zeros(100), 10)


def test_mean_excursion_value_cases():
    assert mean_excursion_value(0.0, 0.5, 0.5, 2) == 0.0
    assert close(mean_excursion_value(1.0, 1.0, 0.5, 1), 2.0)
    # mod-1 setting: m=2, delta=1/2, pi(C)=1 gives the mean gap 4
    assert close(mean_excursion_value(1.0, 0.5, 1.0, 2), 4.0)


def test_mean_excursion_value_guards():
    with pytest.raises(ValueError, match="delta"):
        mean_excursion_value(1.0, 0.0, 0.5, 1)
    with pytest.raises(ValueError, match="pi_C"):
        mean_excursion_value(1.0, 0.5, 1.5, 1)
    with pytest.raises(ValueError, match="positive integer"):
        mean_excursion_value(1.0, 0.5, 0.5, 0)
