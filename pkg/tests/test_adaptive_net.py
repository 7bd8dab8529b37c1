import json
from collections import Counter
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gamma_at, hat
from relucache.adaptive_net import (AdaptiveNet, approximate, build_adaptive,
                                    check_mod3_identity, eval_adaptive, eval_formula,
                                    mod3_forms)
from relucache.cache import GammaCode, tooth
from relucache.errors import AssignmentError, DomainError, ParameterError
from relucache.pwl import PwlFunction, UnitBallSpec, make_unit_ball_function, sup_dist


def corpus(seed, K=37):
    return make_unit_ball_function(UnitBallSpec("pwl-random", pieces=K, seed=seed))


def formula_oracle(f, net, xs):
    """Interpolant plus rescaled profile, from node lists and step digits only."""
    T = net.T
    nodes = np.arange(T + 1) / T
    f1 = np.interp(xs, nodes, f(nodes))
    t = np.minimum(np.floor(T * xs), T - 1).astype(int)
    out = np.empty_like(xs)
    for k, (x, tk) in enumerate(zip(xs, t)):
        out[k] = f1[k] + gamma_at(net.assignment.gamma_of_t[tk].steps, T * x - tk) / T
    return out


def test_zero_function_net():
    f = PwlFunction([0, 1], [0.0, 0.0])
    net = build_adaptive(f, 6, 2)
    assert net.h == 0.0 and all(w == 0.0 for w in net.w)
    assert all(g.is_zero for g in net.assignment.gamma_of_t)
    assert np.all(eval_adaptive(net, np.linspace(0, 1, 50)) == 0.0)


def test_abs_example_weights():
    f = PwlFunction([0, F(1, 2), 1], [0.25, -0.25, 0.25])
    net = build_adaptive(f, 2, 3)
    assert net.w == (-1.0, 2.0)
    assert net.h == 0.25
    assert sup_dist(net.approximant.f2, PwlFunction([0, 1], [0.0, 0.0])) == 0.0
    for t in range(3):
        assert sum(w * max(t / 2 - s / 2, 0) for s, w in enumerate(net.w)) + net.h == f.at(F(t, 2))


def test_sawtooth_target_reuses_one_code():
    T, m = 4, 2
    # Slope-1 teeth of height 1/(2T); the residual is half a tent on every
    # interval and rounds up to the full tent profile.
    nodes = [F(k, 2 * T) for k in range(2 * T + 1)]
    vals = [1 / (2 * T) if k % 2 else 0.0 for k in range(2 * T + 1)]
    f = PwlFunction(nodes, vals)
    net = build_adaptive(f, T, m)
    assert net.gamma_used == (GammaCode((1, -1)),)
    xs = np.linspace(0, 1, 1001)
    f1 = net.approximant.f1(xs)
    t = np.minimum(np.floor(T * xs), T - 1)
    np.testing.assert_allclose(eval_formula(net.approximant, xs) - f1,
                               hat(2 * (T * xs - t) - 1) / T, atol=1e-14)
    assert sup_dist(f, net.approximant.as_pwl()) == pytest.approx(1 / (2 * T))


@pytest.mark.parametrize("seed,T,m", [(0, 8, 1), (1, 16, 2), (2, 32, 2), (3, 64, 3),
                                      (4, 30, 5), (5, 7, 4)])
def test_three_views_of_the_approximant_agree(seed, T, m):
    f = corpus(seed, K=97)
    net = build_adaptive(f, T, m)
    xs = np.random.default_rng(seed).uniform(0, 1, 10_000)
    a = eval_adaptive(net, xs)
    b = eval_formula(net.approximant, xs)
    assert np.max(np.abs(a - b)) <= 1e-10
    assert np.max(np.abs(b - formula_oracle(f, net, xs))) <= 1e-12
    assert np.max(np.abs(b - net.approximant.as_pwl()(xs))) <= 1e-12


@pytest.mark.parametrize("rule", ["nearest", "floor"])
def test_equivalence_with_nonzero_codes_at_large_m(rule):
    # Steep corpus functions at m = 5 leave nonzero profiles on many intervals.
    # The floor rule can miss the interval bound, so take the first seed it accepts.
    for seed in range(11, 40):
        try:
            net = build_adaptive(corpus(seed, K=120), 24, 5, rule=rule)
            break
        except AssignmentError:
            continue
    assert sum(not g.is_zero for g in net.gamma_used) >= 2
    xs = np.linspace(0, 1, 5001)
    assert np.max(np.abs(eval_adaptive(net, xs) - eval_formula(net.approximant, xs))) <= 1e-10


@pytest.mark.parametrize("seed", range(4))
def test_endpoints_reproduce_f(seed):
    f = corpus(seed)
    net = build_adaptive(f, 20, 3)
    ts = np.arange(20) / 20
    np.testing.assert_allclose(eval_adaptive(net, ts), f(ts), atol=1e-10)


def test_right_endpoint_taken_from_last_interval():
    f = corpus(7)
    net = build_adaptive(f, 9, 2)
    assert eval_formula(net.approximant, 1.0) == pytest.approx(f.at(1), abs=1e-12)
    assert eval_adaptive(net, 1.0) == pytest.approx(f.at(1), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 40), st.integers(1, 4))
def test_error_bound(seed, T, m):
    f = corpus(seed, K=53)
    approx = approximate(f, T, m)
    assert sup_dist(f, approx.as_pwl()) <= 2 / (T * m) + 1e-12
    xs = np.linspace(0, 1, 10_001)
    assert np.max(np.abs(f(xs) - eval_formula(approx, xs))) <= 2 / (T * m) + 1e-9


def test_tooth_support():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        T = int(rng.integers(1, 50))
        t = int(rng.integers(0, T))
        x = rng.uniform(0, 1)
        if not ((t - 1) / T <= x <= (t + 1) / T):
            assert tooth(T * x - t) == 0.0


def test_group_accounting():
    f = corpus(5, K=211)
    net = build_adaptive(f, 40, 3)
    groups = net.groups()
    assert len(groups) <= 3 * len(net.gamma_used)
    assert sum(len(ts) for ts in groups.values()) == 40


def test_mod3_identity_and_case_coverage():
    f = corpus(6, K=211)
    net = build_adaptive(f, 32, 5)
    cases = Counter()
    xs = np.random.default_rng(0).uniform(0, 1, 300)
    assert all(check_mod3_identity(net, x, cases=cases) for x in xs)
    assert set(cases) == {1, 2, 3}


def test_mod3_case_values():
    f = corpus(6, K=211)
    net = build_adaptive(f, 32, 5)
    T = net.T
    t0 = 10
    x = (t0 + 0.37) / T
    for g, i, outside, inside, case in mod3_forms(net, x):
        if case == 1 or case == 2:
            assert outside == inside == pytest.approx(0.0, abs=1e-12)
        else:
            assert g == net.assignment.gamma_of_t[t0] and i == t0 % 3
            assert inside == pytest.approx(gamma_at(g.steps, 0.37), abs=1e-10)


def test_callable_target_is_snapshotted():
    approx = approximate(lambda x: np.sin(2 * np.pi * x) / (2 * np.pi), 16, 2)
    xs = np.linspace(0, 1, 2001)
    err = np.max(np.abs(np.sin(2 * np.pi * xs) / (2 * np.pi) - eval_formula(approx, xs)))
    assert err <= 2 / 32


def test_target_outside_ball_rejected():
    steep = PwlFunction([0, F(1, 2), 1], [0.0, 0.9, 0.0])
    with pytest.raises(ParameterError, match="Lipschitz"):
        build_adaptive(steep, 4, 2)
    with pytest.raises(ParameterError):
        approximate(corpus(0), 0, 2)


def test_domain_checked():
    net = build_adaptive(corpus(0), 4, 2)
    with pytest.raises(DomainError):
        eval_adaptive(net, 1.2)
    with pytest.raises(DomainError):
        eval_formula(net.approximant, -0.1)


def test_round_trip_preserves_evaluation():
    net = build_adaptive(corpus(8, K=97), 18, 4)
    back = AdaptiveNet.from_dict(json.loads(json.dumps(net.to_dict())))
    xs = np.linspace(0, 1, 777)
    assert np.array_equal(eval_adaptive(back, xs), eval_adaptive(net, xs))
    with pytest.raises(ParameterError):
        AdaptiveNet.from_dict({"format": "nope"})
    data = net.to_dict()
    data["coefficients"] = {}
    with pytest.raises(ParameterError):
        AdaptiveNet.from_dict(data)
