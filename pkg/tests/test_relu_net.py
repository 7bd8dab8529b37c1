import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_param_count, naive_forward
from relucache.errors import DomainError, StructureError
from relucache.relu_net import (LINEAR, RELU, Layer, Network, StandardShape, Unit, forward,
                                standard_weight_count, validate_standard, weight_count)


def dense_net(M, N, rng, relu_frac=1.0, scale=1.0):
    layers, fan_in = [], 1
    for _ in range(N):
        layers.append(Layer(rng.normal(size=(M, fan_in)) * scale, rng.normal(size=M) * scale,
                            rng.random(M) < relu_frac))
        fan_in = M
    return Network(layers, rng.normal(size=M), float(rng.normal()))


def single_unit(w, h, out_w=1.0, out_h=0.0):
    return Network([Layer([[w]], [h], [True])], [out_w], out_h)


def test_identity_on_unit_interval():
    assert forward(single_unit(1.0, 0.0), 0.7) == 0.7


def test_negative_preactivation_clipped():
    assert forward(single_unit(1.0, -0.5), 0.25) == 0.0


def test_two_unit_tooth():
    # phi(2x - 1) = relu(2x) - 2 relu(2x - 1) on [0, 1]
    net = Network([Layer([[2.0], [2.0]], [0.0, -1.0], [True, True])], [1.0, -2.0], 0.0)
    assert forward(net, 0.5) == 1.0
    np.testing.assert_allclose(forward(net, np.array([0.0, 0.25, 1.0])), [0.0, 0.5, 0.0])


def test_linear_mode_passes_negative_values():
    net = Network([Layer([[1.0]], [-0.5], [False])], [1.0], 0.0)
    assert forward(net, 0.25) == -0.25


def test_array_shape_preserved_and_domain_checked():
    net = single_unit(1.0, 0.0)
    assert forward(net, np.zeros((2, 3))).shape == (2, 3)
    with pytest.raises(DomainError):
        forward(net, 1.5)
    with pytest.raises(DomainError):
        net(np.array([-0.1]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 12), st.integers(0, 2 ** 31), st.floats(0, 1))
def test_forward_matches_unit_by_unit_oracle(M, N, seed, x):
    net = dense_net(M, N, np.random.default_rng(seed), relu_frac=0.7)
    layers = [(l.weights, l.bias, l.relu) for l in net.layers]
    want = naive_forward(layers, net.output_weights, net.output_bias, x)
    assert forward(net, x) == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_zero_weights_return_output_bias_exactly():
    layers = [Layer(np.zeros((5, 1)), np.zeros(5), np.ones(5))] + \
             [Layer(np.zeros((5, 5)), np.zeros(5), np.ones(5)) for _ in range(6)]
    net = Network(layers, np.zeros(5), 0.3125)
    assert np.all(forward(net, np.linspace(0, 1, 9)) == 0.3125)


def test_forward_is_piecewise_linear():
    rng = np.random.default_rng(4)
    net = dense_net(4, 5, rng)
    xs = np.linspace(0, 1, 20001)
    y = forward(net, xs)
    slopes = np.diff(y) / np.diff(xs)
    # Between kinks, consecutive slopes agree; a kink changes at most a few cells.
    same = np.isclose(slopes[1:], slopes[:-1], rtol=1e-6, atol=1e-6)
    assert same.mean() > 0.99


# --- weight counting -------------------------------------------------------------

@pytest.mark.parametrize("M,N,nu", [(5, 9, 256), (5, 1, 16), (1, 1, 4)])
def test_standard_counts(M, N, nu):
    assert standard_weight_count(M, N) == nu == StandardShape(M, N).nu


@pytest.mark.parametrize("M", range(1, 7))
@pytest.mark.parametrize("N", range(1, 21))
def test_dense_count_equals_formula(M, N):
    net = dense_net(M, N, np.random.default_rng(M * 100 + N))
    assert weight_count(net) == standard_weight_count(M, N) == dense_param_count(M, N)


# --- validation --------------------------------------------------------------------

def test_conforming_net_validates():
    net = dense_net(5, 4, np.random.default_rng(0))
    report = validate_standard(net, StandardShape(5, 4))
    assert report.ok, str(report)
    assert "conforming" in str(report)


def test_narrow_layer_reported():
    rng = np.random.default_rng(1)
    layers = [Layer(rng.normal(size=(5, 1)), np.zeros(5), np.ones(5)),
              Layer(rng.normal(size=(4, 5)), np.zeros(4), np.ones(4)),
              Layer(rng.normal(size=(5, 4)), np.zeros(5), np.ones(5))]
    report = validate_standard(Network(layers, np.ones(5), 0.0), StandardShape(5, 3))
    assert any(v.startswith("layer width") for v in report.violations)
    assert any(v.startswith("weight count") for v in report.violations)
    nu_msg = [v for v in report.violations if v.startswith("weight count")][0]
    assert str(weight_count(Network(layers, np.ones(5), 0.0))) in nu_msg
    assert str(standard_weight_count(5, 3)) in nu_msg


def test_depth_mismatch_and_linear_units_reported():
    rng = np.random.default_rng(2)
    net = dense_net(5, 3, rng, relu_frac=0.0)
    report = validate_standard(net, StandardShape(5, 4))
    assert any(v.startswith("depth") for v in report.violations)
    assert any(v.startswith("activation") for v in report.violations)
    net.identity_regime = True
    report = validate_standard(net, StandardShape(5, 3))
    assert report.ok


# --- structure ---------------------------------------------------------------------

def test_width_mismatch_is_structural_error():
    with pytest.raises(StructureError):
        Network([Layer(np.ones((3, 1)), np.zeros(3), np.ones(3)),
                 Layer(np.ones((2, 4)), np.zeros(2), np.ones(2))], np.ones(2), 0.0)
    with pytest.raises(StructureError):
        Network([Layer(np.ones((3, 1)), np.zeros(3), np.ones(3))], np.ones(2), 0.0)
    with pytest.raises(StructureError):
        Network([], [], 0.0)
    with pytest.raises(StructureError):
        Layer(np.ones((3, 1)), np.zeros(2), np.ones(3))


def test_units_round_trip_and_mode_check():
    layer = Layer([[1.0], [2.0]], [0.5, -0.5], [True, False])
    units = layer.units()
    assert units[1] == Unit((2.0,), -0.5, LINEAR)
    again = Layer.from_units(units)
    assert np.array_equal(again.weights, layer.weights)
    assert np.array_equal(again.relu, layer.relu)
    with pytest.raises(StructureError):
        Unit((1.0,), 0.0, "tanh")
    with pytest.raises(StructureError):
        Layer.from_units([Unit((1.0,), 0.0, RELU), Unit((1.0, 2.0), 0.0, RELU)])


def test_json_round_trip_is_bit_exact():
    net = dense_net(5, 6, np.random.default_rng(9), relu_frac=0.5)
    net.meta["note"] = "x"
    back = Network.from_dict(json.loads(json.dumps(net.to_dict())))
    for a, b in zip(net.layers, back.layers):
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.bias, b.bias)
        assert np.array_equal(a.relu, b.relu)
    assert np.array_equal(net.output_weights, back.output_weights)
    assert net.output_bias == back.output_bias and back.meta == {"note": "x"}
    xs = np.linspace(0, 1, 101)
    assert np.array_equal(forward(net, xs), forward(back, xs))


def test_foreign_document_rejected():
    with pytest.raises(StructureError):
        Network.from_dict({"format": "other"})
