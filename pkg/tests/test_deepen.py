import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import PROPERTY, cube_points, random_shallow
from narrownet.affine import AffineMap, MaxAffineFn
from narrownet.deepen import (
    ShallowNet,
    certified_shift,
    deepen,
    dump_shallow,
    load_shallow,
    shallow_from_dict,
)
from narrownet.errors import ParseError, ValidationError
from narrownet.net import Activation, Layer, ReluNet, eval_batch, net_to_dict, trace_batch


def test_single_neuron_identity():
    s = ShallowNet(MaxAffineFn([[1.0]], [0.0]), [1.0], 0.0)
    net = deepen(s)
    assert net.hidden_width == 3
    assert len(net.layers) == 3 and net.relu_depth == 3
    xs = np.linspace(0, 1, 51)[:, None]
    np.testing.assert_allclose(eval_batch(net, xs)[:, 0], xs[:, 0], rtol=0, atol=1e-15)


def test_random_shallow_d2():
    rng = np.random.default_rng(17)
    s = random_shallow(rng, 2, 3)
    net = deepen(s)
    assert net.hidden_width == 4
    xs = cube_points(rng, 2)
    assert np.max(np.abs(eval_batch(net, xs)[:, 0] - s.evaluate(xs))) <= 1e-9


def test_nonnegative_coefficients_give_unit_shift():
    rng = np.random.default_rng(5)
    s = ShallowNet(MaxAffineFn(rng.normal(size=(4, 2)), rng.normal(size=4)), rng.random(4), 0.3)
    assert certified_shift(s) == 1.0
    assert float(deepen(s).provenance["shift"]) == 1.0


def test_shift_formula():
    s = ShallowNet(MaxAffineFn([[1.0, 2.0], [-1.0, 0.0]], [0.5, -2.0]), [-2.0, -1.0], 0.0)
    # hi of piece 0 is 3.5, hi of piece 1 is -2 (clipped to 0)
    assert certified_shift(s) == 1.0 + 2.0 * 3.5


def test_linear_output_shallow():
    rng = np.random.default_rng(6)
    s = ShallowNet(MaxAffineFn(rng.normal(size=(5, 3)), rng.normal(size=5)), rng.normal(size=5), -1.0,
                   output_relu=False)
    net = deepen(s)
    assert net.layers[-1].activation is Activation.LINEAR
    xs = cube_points(rng, 3)
    assert np.max(np.abs(eval_batch(net, xs)[:, 0] - s.evaluate(xs))) <= 1e-9


def test_compact_file_roundtrip():
    s = random_shallow(np.random.default_rng(2), 2, 4)
    back = load_shallow(dump_shallow(s))
    np.testing.assert_array_equal(back.coeffs, s.coeffs)
    np.testing.assert_array_equal(back.hidden.slopes, s.hidden.slopes)
    assert back.bias == s.bias


def test_two_layer_net_file_accepted():
    rng = np.random.default_rng(3)
    hidden = AffineMap(rng.normal(size=(4, 2)), rng.normal(size=4))
    out = AffineMap(rng.normal(size=(1, 4)), [0.2])
    net = ReluNet(2, (Layer(hidden), Layer(out)))
    s = load_shallow(json.dumps(net_to_dict(net)))
    xs = cube_points(rng, 2, 100)
    np.testing.assert_allclose(s.evaluate(xs), eval_batch(net, xs)[:, 0], rtol=0, atol=1e-12)


def test_three_layer_net_file_rejected():
    net = ReluNet(1, tuple(Layer(AffineMap.identity(1)) for _ in range(3)))
    with pytest.raises(ValidationError):
        load_shallow(json.dumps(net_to_dict(net)))


def test_compact_file_errors():
    with pytest.raises(ParseError):
        shallow_from_dict({"pieces": [{"a": [1.0], "b": 0}], "coeffs": "x", "bias": 0})
    with pytest.raises(ValidationError):
        shallow_from_dict({"pieces": [{"a": [1.0], "b": 0}], "coeffs": [1.0, 2.0], "bias": 0})


@pytest.mark.property
@PROPERTY
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 5), n=st.integers(1, 32))
def test_equivalence_and_prefix_positivity(seed, d, n):
    rng = np.random.default_rng(seed)
    s = random_shallow(rng, d, n)
    net = deepen(s)
    assert net.hidden_width == d + 2
    assert net.relu_depth == n + 2 and len(net.layers) == n + 2
    xs = cube_points(rng, d, 2000)
    assert np.max(np.abs(eval_batch(net, xs)[:, 0] - s.evaluate(xs))) <= 1e-9
    pre = trace_batch(net, xs, pre=True)
    for layer in pre[:-1]:
        assert layer[:, d + 1].min() > 0
