import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from pydantic import ValidationError

import _errors
from analysis._config import Choice, Functional_Pair, describe, parse_pair
from analysis._functionals import evaluate, sign_history
from analysis._series import Return_Series, pool

RETURNS = [0.1, -0.2, 0.0, 0.3]


def _sample(*series):
    return pool([Return_Series(id=f"s{i}", returns=r) for i, r in enumerate(series)])


def test_choice1_pairs_lag_with_current():
    pairs = evaluate(Functional_Pair(kind=Choice.choice1), _sample([1.0, 2.0, 3.0]))
    assert_array_equal(pairs.h_values, [1.0, 2.0])
    assert_array_equal(pairs.f_values, [2.0, 3.0])
    assert pairs.label == "choice1:lag1-identity"


def test_choice2_indicators_zero_is_not_positive():
    pairs = evaluate(Functional_Pair(kind=Choice.choice2), _sample(RETURNS))
    assert_array_equal(pairs.h_values, [1, 0, 0])
    assert_array_equal(pairs.f_values, [0, 0, 1])


def test_choice2_literal_lag_reading():
    pairs = evaluate(Functional_Pair(kind=Choice.choice2, f_uses_lag=True), _sample(RETURNS))
    assert_array_equal(pairs.f_values, pairs.h_values)
    assert pairs.label.endswith(":f-lag")


def test_choice3_finite_depth_values():
    # signs 1, 0, 1, 1
    pairs = evaluate(Functional_Pair(kind=Choice.choice3, depth=2), _sample([0.1, -0.1, 0.2, 0.3]))
    assert_allclose(pairs.h_values, [0.25, 0.5])
    assert_array_equal(pairs.f_values, [1, 1])


def test_choice3_depth_one_halves_choice2():
    returns = np.random.default_rng(3).standard_normal(200)
    c2 = evaluate(Functional_Pair(kind=Choice.choice2), _sample(returns))
    c3 = evaluate(Functional_Pair(kind=Choice.choice3, depth=1), _sample(returns))
    assert_array_equal(c3.h_values, 0.5 * c2.h_values)
    assert_array_equal(c3.f_values, c2.f_values)


def test_unbounded_history_matches_direct_sum():
    signs = (np.random.default_rng(5).standard_normal(30) > 0).astype(float)
    start = 20
    h = sign_history(signs, math.inf, start)
    direct = [sum(0.5**k * signs[t - k] for k in range(1, t + 1)) for t in range(start, 30)]
    assert_allclose(h, direct, rtol=0, atol=1e-14)


def test_mixed_uses_raw_current_return():
    returns = [0.1, -0.1, 0.2, 0.3]
    pairs = evaluate(Functional_Pair(kind=Choice.mixed, depth=2), _sample(returns))
    assert_allclose(pairs.h_values, [0.25, 0.5])
    assert_array_equal(pairs.f_values, [0.2, 0.3])


def test_histories_stop_at_series_boundaries():
    pairs = evaluate(Functional_Pair(kind=Choice.choice1), _sample([1.0, 2.0, 3.0], [10.0, 20.0]))
    assert pairs.count == 3
    assert (3.0, 10.0) not in set(zip(pairs.h_values, pairs.f_values))


def test_short_series_contribute_nothing():
    pair = Functional_Pair(kind=Choice.choice3, depth=3)
    pairs = evaluate(pair, _sample([0.1, 0.2], [0.1, -0.1, 0.2, 0.3, 0.1]))
    assert pairs.count == 2
    with pytest.raises(_errors.NotEnough):
        evaluate(pair, _sample([0.1, 0.2, 0.3]))


def test_unbounded_needs_twenty_returns_of_history():
    pair = parse_pair("choice3:d=inf")
    assert pair.min_history == 20
    pairs = evaluate(pair, _sample(np.linspace(-1, 1, 25)))
    assert pairs.count == 5


@pytest.mark.parametrize("text", ["choice2", "choice3:d=4", "choice3:d=inf", "mixed:d=inf"])
def test_sign_functionals_ignore_positive_scaling(text):
    returns = np.random.default_rng(11).standard_normal(500)
    pair = parse_pair(text)
    base = evaluate(pair, _sample(returns))
    scaled = evaluate(pair, _sample(returns * 37.5))
    assert_array_equal(base.h_values, scaled.h_values)
    if pair.kind is not Choice.mixed:
        assert_array_equal(base.f_values, scaled.f_values)


def test_parse_pair_and_describe():
    assert parse_pair("choice1") == Functional_Pair(kind=Choice.choice1)
    assert parse_pair("choice3").is_unbounded
    assert parse_pair("Choice3:d=5").depth == 5
    assert describe(parse_pair("mixed:d=3")) == "mixed:sign-exp-identity:d=3"
    assert parse_pair("choice3:sign-exp:d=inf") == parse_pair("choice3:d=inf")
    with pytest.raises(_errors.Unparseable):
        parse_pair("choice9")


@pytest.mark.parametrize("text", ["choice2:bogus", "choice3:d=inf:sign-lag1", "choice1:f_lag"])
def test_parse_pair_rejects_unknown_segments(text):
    with pytest.raises(_errors.Unparseable, match="unknown segment"):
        parse_pair(text)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": Choice.choice3},
        {"kind": Choice.choice1, "depth": 2},
        {"kind": Choice.choice3, "depth": 0},
        {"kind": Choice.choice3, "depth": 2.5},
        {"kind": Choice.choice1, "f_uses_lag": True},
    ],
)
def test_invalid_pairs(kwargs):
    with pytest.raises(ValidationError):
        Functional_Pair(**kwargs)


# ECFmatch
