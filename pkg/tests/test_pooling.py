import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hdriqa.display import decompose, plan_windows
from hdriqa.errors import ArgumentError
from hdriqa.pooling import (AggregationConfig, aggregate, center_crop, pool_exposure,
                            well_exposedness)

import oracles

EPS = 1e-5


def stack_of(*values):
    return [np.full((2, 2, 3), v) for v in values]


class TestWellExposedness:
    def test_single_exposure(self):
        wf = well_exposedness(stack_of(0.5))
        np.testing.assert_array_equal(wf.weights, 1.0)

    def test_one_good_window(self):
        wf = well_exposedness(stack_of(1.0, 0.5, 0.0))
        expected = np.array([EPS, 1.0, EPS]) / (1 + 2 * EPS)
        np.testing.assert_allclose(wf.weights[:, 0, 0], expected, rtol=1e-15)

    def test_no_good_window(self):
        wf = well_exposedness(stack_of(1.0, 0.95, 0.05))
        np.testing.assert_allclose(wf.weights, 1 / 3, rtol=1e-15)

    def test_interval_inclusive(self):
        wf = well_exposedness(stack_of(0.1, 0.9, 0.0999, 0.9001))
        np.testing.assert_array_equal(wf.raw[:, 0, 0], [1.0, 1.0, EPS, EPS])

    def test_max_channel(self):
        img = np.zeros((1, 1, 3))
        img[0, 0] = [0.05, 0.5, 0.95]
        assert well_exposedness([img]).raw[0, 0, 0] == EPS
        img[0, 0] = [0.05, 0.5, 0.2]
        assert well_exposedness([img]).raw[0, 0, 0] == 1.0

    def test_empty(self):
        with pytest.raises(ArgumentError):
            well_exposedness([])

    def test_normalized_on_real_stack(self, scene):
        wf = well_exposedness(decompose(scene, plan_windows(scene)))
        assert set(np.unique(wf.raw)) <= {EPS, 1.0}
        np.testing.assert_allclose(wf.weights.sum(axis=0), 1.0, atol=1e-9)
        cropped = wf.cropped(5)
        np.testing.assert_allclose(cropped.weights.sum(axis=0), 1.0, atol=1e-9)
        np.testing.assert_array_equal(cropped.weights, wf.weights[:, 5:-5, 5:-5])


class TestPool:
    def test_uniform_weights_give_mean(self, rng):
        q = rng.uniform(size=(5, 7))
        assert pool_exposure(q, np.full(q.shape, 0.3)) == pytest.approx(q.mean(), abs=1e-15)

    def test_two_pixels(self):
        a, b = 0.7, -0.2
        got = pool_exposure(np.array([[a, b]]), np.array([[1.0, EPS]]))
        assert got == pytest.approx((a + EPS * b) / (1 + EPS), abs=1e-16)

    def test_scalar_oracle(self, rng):
        q = rng.normal(size=(6, 6))
        w = rng.uniform(size=(6, 6))
        assert pool_exposure(q, w) == pytest.approx(oracles.pool_scalar(q, w), abs=1e-12)

    def test_center_crop(self, rng):
        q = rng.normal(size=(4, 4))
        w = rng.uniform(size=(14, 14))
        assert pool_exposure(q, w) == pytest.approx(oracles.pool_scalar(q, w[5:-5, 5:-5]), abs=1e-12)
        with pytest.raises(ArgumentError):
            center_crop(w, (5, 4))

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (4, 5), elements=st.floats(-1, 1)),
           arrays(np.float64, (4, 5), elements=st.floats(1e-3, 1)),
           st.floats(1e-3, 1e3))
    def test_scale_invariance(self, q, w, s):
        assert pool_exposure(q, w * s) == pytest.approx(pool_exposure(q, w), abs=1e-12)


class TestAggregate:
    def test_uniform(self):
        assert aggregate([1.0, 2.0, 3.0]) == pytest.approx(2.0, abs=1e-15)

    def test_degenerate(self):
        assert aggregate([4.0, 5.0, 6.0], AggregationConfig((1.0, 0.0, 0.0))) == 4.0

    def test_dot(self):
        cfg = AggregationConfig((0.5, 0.3, 0.2))
        assert aggregate([10.0, 20.0, 30.0], cfg) == pytest.approx(17.0, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ArgumentError):
            aggregate([1.0, 2.0], AggregationConfig((0.5, 0.3, 0.2)))

    def test_validation(self):
        with pytest.raises(ArgumentError):
            AggregationConfig((0.5, 0.6))
        with pytest.raises(ArgumentError):
            AggregationConfig((1.5, -0.5))

    def test_parse_renormalizes(self):
        cfg = AggregationConfig.parse("0.3333333,0.3333333,0.3333334")
        assert sum(cfg.global_weights) == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(ArgumentError):
            AggregationConfig.parse("a,b")
        assert AggregationConfig.parse(None).global_weights is None

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=6), st.data())
    def test_bounded_and_linear(self, q, data):
        g = np.array(data.draw(st.lists(st.floats(0.01, 1), min_size=len(q), max_size=len(q))))
        cfg = AggregationConfig(tuple(g / g.sum()))
        val = aggregate(q, cfg)
        assert min(q) - 1e-9 <= val <= max(q) + 1e-9
        # derivative with respect to each Q^(k) equals G^(k)
        for k in range(len(q)):
            bumped = list(q)
            bumped[k] += 1.0
            assert aggregate(bumped, cfg) - val == pytest.approx(cfg.global_weights[k], abs=1e-9)
