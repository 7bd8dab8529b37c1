import json

import numpy as np
import pytest

from oracles import naive_forward
from relucache.adaptive_net import build_adaptive, eval_adaptive, eval_formula
from relucache.embed import (EXACT_LINEAR, STRICT_RELU, WIDTH, choose_params, depth_bound,
                             embed_standard, n_min, param_formula)
from relucache.errors import InfeasibleBudget, ParameterError
from relucache.pwl import PwlFunction, UnitBallSpec, make_unit_ball_function
from relucache.relu_net import (Network, StandardShape, forward, standard_weight_count,
                                validate_standard, weight_count)


def corpus(seed, K=97):
    return make_unit_ball_function(UnitBallSpec("pwl-random", pieces=K, seed=seed))


@pytest.fixture(scope="module")
def net_16_2():
    return build_adaptive(corpus(1), 16, 2)


@pytest.fixture(scope="module")
def net_rich():
    # K = 120 at T = 24, m = 5 uses several nonzero profiles.
    return build_adaptive(corpus(0, K=120), 24, 5)


# --- depth accounting -------------------------------------------------------------

def test_depth_bound_examples():
    assert depth_bound(4, 3, 2) == 72
    assert depth_bound(1, 1, 1) == 24


def test_depth_bound_monotone():
    base = depth_bound(5, 3, 4)
    assert depth_bound(6, 3, 4) > base
    assert depth_bound(5, 4, 4) > base
    assert depth_bound(5, 3, 5) > base


def test_param_formula_values():
    assert param_formula(729) == (91, 3)
    assert param_formula(80) == (10, 1)
    assert param_formula(81) == (10, 2)
    assert param_formula(6561) == (820, 4)


def test_budget_729_is_infeasible_in_worst_case():
    with pytest.raises(InfeasibleBudget) as err:
        choose_params(729)
    assert depth_bound(91, 3, 27) == 1206
    assert err.value.n_min == n_min(None)
    # With one profile in use, the same budget fits.
    assert choose_params(729, gamma_count=1) == (91, 3)


@pytest.mark.parametrize("N", [1, 8, 0])
def test_budget_with_m_zero_is_parameter_error(N):
    with pytest.raises(ParameterError):
        choose_params(N)


def fits(N, count):
    T, m = N // 8, 0
    while 9 ** (m + 1) <= N:
        m += 1
    if T < 1 or m < 1:
        return False
    c = 3 ** m if count is None else count
    return 7 * T + 3 * (m + 4) * c + 2 <= N


@pytest.mark.parametrize("count", [1, 2, 3, 5, 10, None])
def test_n_min_matches_scan(count):
    limit = 60_000
    bad = [N for N in range(1, limit) if not fits(N, count)]
    assert n_min(count) == bad[-1] + 1
    for N in (n_min(count), n_min(count) + 1, n_min(count) + 1000):
        choose_params(N, count)


def test_worst_case_n_min_guarantee():
    N = n_min(None)
    T, m = choose_params(N)
    assert 7 * T + 3 * (m + 4) * 3 ** m + 2 <= N


# --- equivalence ---------------------------------------------------------------------

def test_zero_function_embeds_to_zero():
    net = build_adaptive(PwlFunction([0, 1], [0.0, 0.0]), 2, 1)
    xs = np.linspace(0, 1, 1000)
    for mode in (EXACT_LINEAR, STRICT_RELU):
        assert np.max(np.abs(forward(embed_standard(net, mode).network, xs))) <= 1e-15


def test_exact_linear_matches_adaptive(net_16_2):
    emb = embed_standard(net_16_2, EXACT_LINEAR)
    xs = np.linspace(0, 1, 10_000)
    assert np.max(np.abs(forward(emb.network, xs) - eval_adaptive(net_16_2, xs))) <= 1e-12
    assert emb.certificate is None
    assert emb.network.identity_regime


def test_strict_relu_matches_and_has_no_linear_units(net_16_2):
    emb = embed_standard(net_16_2, STRICT_RELU)
    xs = np.linspace(0, 1, 10_000)
    assert np.max(np.abs(forward(emb.network, xs) - eval_adaptive(net_16_2, xs))) <= 1e-9
    assert all(layer.relu.all() for layer in emb.network.layers)
    assert not emb.network.identity_regime
    report = validate_standard(emb.network, StandardShape(WIDTH, emb.network.depth))
    assert report.ok, str(report)


@pytest.mark.parametrize("mode", [EXACT_LINEAR, STRICT_RELU])
@pytest.mark.parametrize("prune", [False, True])
def test_rich_cache_equivalence(net_rich, mode, prune):
    emb = embed_standard(net_rich, mode, prune_zero=prune)
    xs = np.linspace(0, 1, 10_000)
    tol = 1e-10 if mode == EXACT_LINEAR else 1e-9
    assert np.max(np.abs(forward(emb.network, xs) - eval_formula(net_rich.approximant, xs))) <= tol


def test_forward_agrees_with_unit_by_unit_oracle(net_16_2):
    net = embed_standard(net_16_2, STRICT_RELU).network
    layers = [(l.weights, l.bias, l.relu) for l in net.layers]
    for x in (0.0, 0.123, 0.5, 0.999, 1.0):
        want = naive_forward(layers, net.output_weights, net.output_bias, x)
        assert forward(net, x) == pytest.approx(want, abs=1e-12)


def test_unknown_mode_rejected(net_16_2):
    with pytest.raises(ParameterError):
        embed_standard(net_16_2, "fast")


# --- structure -----------------------------------------------------------------------

@pytest.mark.parametrize("prune", [False, True])
def test_segment_spans_and_depth(net_rich, prune):
    emb = embed_standard(net_rich, STRICT_RELU, prune_zero=prune)
    plan, net = emb.plan, emb.network
    T, m = net_rich.T, net_rich.m
    groups = net_rich.groups()
    expected = [("f1", T + 2)]
    for (g, i), ts in groups.items():
        if prune and g.is_zero:
            continue
        expected += [("f2-stage1", 6 * len(ts) + 2), ("f2-stage2", m + 2)]
    assert [(s.kind, s.span) for s in plan.segments] == expected
    starts = np.cumsum([0] + [s.span for s in plan.segments[:-1]])
    assert [s.start for s in plan.segments] == list(starts)
    assert net.depth == plan.depth <= depth_bound(T, m, len(net_rich.gamma_used)) == plan.bound
    assert all(w == WIDTH for w in net.widths)
    assert weight_count(net) == standard_weight_count(WIDTH, net.depth)
    assert weight_count(net) == 25 * (net.depth - 1) + 5 * (net.depth + 2) + 1


def test_depth_reaches_bound_when_every_group_present():
    # Sawtooth-like target: every t gets the same code, so all three groups exist.
    T = 9
    f = make_unit_ball_function(UnitBallSpec.parse("named-analytic:sawtooth:pieces=18"))
    net = build_adaptive(f, T, 2)
    assert len(net.groups()) == 3 * len(net.gamma_used)
    emb = embed_standard(net, EXACT_LINEAR)
    assert emb.network.depth == depth_bound(T, 2, len(net.gamma_used))


def test_zero_code_pruning_only_changes_depth(net_16_2):
    full = embed_standard(net_16_2, STRICT_RELU, prune_zero=False)
    pruned = embed_standard(net_16_2, STRICT_RELU, prune_zero=True)
    assert pruned.network.depth < full.network.depth
    xs = np.linspace(0, 1, 2000)
    assert np.max(np.abs(forward(full.network, xs) - forward(pruned.network, xs))) <= 1e-9


def test_padding_units_are_inert(net_16_2):
    net = embed_standard(net_16_2, STRICT_RELU).network
    padding = 0
    for l, layer in enumerate(net.layers):
        outgoing = net.layers[l + 1].weights if l + 1 < net.depth else net.output_weights[None, :]
        unused = ~layer.weights.any(axis=1) & ~outgoing.any(axis=0)
        padding += int(unused.sum())
        assert np.all(layer.bias[unused] == 0.0)
        assert np.all(layer.relu[unused])
    assert padding > 0


# --- certificate -------------------------------------------------------------------------

def test_certificate_sound_on_random_points(net_rich):
    emb = embed_standard(net_rich, STRICT_RELU)
    cert = emb.certificate
    xs = np.random.default_rng(0).uniform(0, 1, 100_000)
    assert cert.check(emb.network, xs)
    assert cert.min_margin(emb.network, xs) >= 1.0 - 1e-9
    assert np.all(cert.intercept[cert.identity] >= 1.0)
    assert np.all(cert.intercept == np.round(cert.intercept))
    assert np.all(cert.lo <= cert.hi)


def test_interval_bounds_contain_sampled_preactivations(net_rich):
    logical = embed_standard(net_rich, EXACT_LINEAR).network
    cert = embed_standard(net_rich, STRICT_RELU).certificate
    state = np.random.default_rng(1).uniform(0, 1, (20_000, 1))
    for l, layer in enumerate(logical.layers):
        pre = state @ layer.weights.T + layer.bias
        assert np.all(pre.min(axis=0) >= cert.lo[l])
        assert np.all(pre.max(axis=0) <= cert.hi[l])
        state = np.where(layer.relu, np.maximum(pre, 0.0), pre)


# --- serialization ------------------------------------------------------------------

def test_plan_and_network_serialize(net_16_2):
    emb = embed_standard(net_16_2, STRICT_RELU, prune_zero=True)
    plan = emb.plan.to_dict()
    assert plan["depth"] == emb.network.depth
    assert [s["span"] for s in plan["segments"]] == [s.span for s in emb.plan.segments]
    assert "f1" in emb.plan.table()
    back = Network.from_dict(json.loads(json.dumps(emb.network.to_dict())))
    xs = np.linspace(0, 1, 300)
    assert np.array_equal(forward(back, xs), forward(emb.network, xs))
    assert back.meta["depth_convention"] == "hidden layers only"
