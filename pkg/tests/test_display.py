import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hdriqa.display import (DisplayModel, WindowPlan, decompose, forward_display,
                            inverse_display, plan_windows, window_count)
from hdriqa.errors import ArgumentError, DegenerateInputError

import oracles
from conftest import two_level_scene

B = 1.0 / 128.0
MODEL = DisplayModel()


def const(value, shape=(1, 1, 3)):
    return np.full(shape, value, dtype=np.float64)


class TestDisplayModel:
    def test_defaults(self):
        assert MODEL.gamma == 2.2
        assert MODEL.black_level == B
        assert (MODEL.l_min, MODEL.l_max) == (1.0, 200.0)
        assert MODEL.window_size_stops() == pytest.approx(7.64, abs=5e-3)

    @pytest.mark.parametrize("kwargs", [
        {"gamma": 0}, {"black_level": 0}, {"black_level": 1}, {"l_min": 0}, {"l_min": 300},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ArgumentError):
            DisplayModel(**kwargs)


class TestInverseDisplay:
    def test_black_level_maps_to_zero(self):
        assert inverse_display(const(B), 1.0).data[0, 0, 0] == 0.0

    def test_unit_maps_to_one(self):
        assert inverse_display(const(1.0), 1.0).data[0, 0, 0] == 1.0

    def test_midpoint_matches_high_precision_oracle(self):
        hv = (1 + B) / 2
        got = inverse_display(const(hv), 1.0).data[0, 0, 0]
        assert got == pytest.approx(oracles.inverse_display_scalar(hv), abs=1e-12)
        assert got == pytest.approx(0.72974, abs=1e-5)

    def test_matches_oracle_on_random_products(self, rng):
        h = rng.uniform(0, 3, (6, 6, 3))
        v = 0.37
        got = inverse_display(h, v).data
        for idx in np.ndindex(h.shape):
            assert got[idx] == pytest.approx(oracles.inverse_display_scalar(h[idx] * v), abs=1e-12)

    def test_channels_independent(self):
        h = np.array([[[0.2, 0.5, 0.9]]])
        got = inverse_display(h, 1.0).data[0, 0]
        for c in range(3):
            assert got[c] == inverse_display(const(h[0, 0, c]), 1.0).data[0, 0, 0]

    @pytest.mark.parametrize("v", [0.0, -1.0, float("inf")])
    def test_bad_exposure(self, v):
        with pytest.raises(ArgumentError):
            inverse_display(const(1.0), v)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (4, 4, 3), elements=st.floats(0, 1e6)),
           st.floats(1e-6, 1e6), st.floats(1.0, 4.0))
    def test_range_and_monotone_in_v(self, h, v, factor):
        lo = inverse_display(h, v).data
        hi = inverse_display(h, v * factor).data
        assert lo.min() >= 0 and lo.max() <= 1
        assert np.all(hi >= lo)

    def test_monotone_in_radiance(self):
        h = np.linspace(0, 2, 300).reshape(10, 10, 3)
        out = inverse_display(h, 1.0).data.ravel()
        assert np.all(np.diff(out) >= 0)


class TestForwardDisplay:
    def test_white(self):
        assert forward_display(const(1.0), scale=False).data[0, 0, 0] == 1.0
        assert forward_display(const(1.0)).data[0, 0, 0] == 200.0

    def test_black(self):
        assert forward_display(const(0.0), scale=False).data[0, 0, 0] == B

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (5, 5, 3), elements=st.floats(0, 1)))
    def test_pre_scale_range(self, p):
        out = forward_display(p, scale=False).data
        assert out.min() >= B and out.max() <= 1.0

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (5, 5, 3), elements=st.floats(0, 1)))
    def test_round_trip_identity(self, p):
        lum = forward_display(p, MODEL)
        back = inverse_display(lum, 1.0 / MODEL.l_max, MODEL).data
        assert np.max(np.abs(back - p)) <= 1e-6


class TestPlanWindows:
    def test_eight_stops_gives_three_windows(self):
        plan = plan_windows(two_level_scene(-6.0, 8.0))
        assert plan.count == 3
        assert plan.l0 == -6.0 and plan.l1 == 2.0
        np.testing.assert_allclose(plan.endpoints, [-6 + 8 / 3, -6 + 16 / 3, 2.0], atol=1e-12)

    def test_first_exposure(self):
        plan = plan_windows(two_level_scene(0.0, 8.0))
        assert plan.exposures[0] == pytest.approx(0.15749, abs=1e-5)
        assert plan.exposures[0] == 2.0 ** -(8.0 / 3.0)

    @pytest.mark.parametrize("stops", [0.5, 1.0, 2.0, 8.0 / 3.0])
    def test_narrow_range_single_window(self, stops):
        plan = plan_windows(two_level_scene(-3.0, stops))
        assert plan.count == 1
        assert plan.endpoints[0] == pytest.approx(-3.0 + 8.0 / 3.0, abs=1e-12)

    def test_count_formula_matches_enumeration(self):
        for stops in np.arange(0.5, 24.01, 0.25):
            assert window_count(0.0, stops) == oracles.window_count_scalar(0.0, stops), stops

    @pytest.mark.parametrize("stops", [2.0, 8.0 / 3.0, 5.0, 8.0, 12.0, 16.0])
    def test_plan_invariants(self, stops):
        plan = plan_windows(two_level_scene(-4.0, stops))
        e = np.array(plan.endpoints)
        np.testing.assert_allclose(np.diff(e), 8.0 / 3.0, atol=1e-12)
        np.testing.assert_allclose(np.diff(np.log2(plan.exposures)), -8.0 / 3.0, atol=1e-12)
        assert all(v == 2.0 ** -x for v, x in zip(plan.exposures, plan.endpoints))
        assert e[-1] >= plan.l1 - 1e-8

    def test_robust_to_outliers(self):
        img = two_level_scene(-4.0, 8.0, size=64)
        img[0, 0] = 2.0 ** 20  # one hot pixel
        img[-1, -1] = 2.0 ** -25  # one dead-ish pixel
        plan = plan_windows(img)
        assert (plan.l0, plan.l1) == (-4.0, 4.0)

    def test_zero_pixels_ignored(self):
        img = two_level_scene(-2.0, 4.0)
        img[:4] = 0.0
        assert plan_windows(img).l0 == -2.0

    def test_all_zero(self):
        with pytest.raises(DegenerateInputError):
            plan_windows(np.zeros((4, 4, 3)))

    def test_plan_records_shape(self):
        assert plan_windows(two_level_scene(0, 4, size=8)).shape == (8, 8)


class TestDecompose:
    def test_single_window_is_single_call(self):
        img = two_level_scene(-1.0, 2.0)
        plan = plan_windows(img)
        stack = decompose(img, plan)
        assert len(stack) == 1
        np.testing.assert_array_equal(stack[0].data, inverse_display(img, plan.exposures[0]).data)

    def test_brighter_for_smaller_k(self, scene):
        stack = decompose(scene, plan_windows(scene))
        for a, b in zip(stack.images, stack.images[1:]):
            assert np.all(a.data >= b.data)

    def test_ramp_saturation_bands(self):
        # 8-stop ramp, one pixel per 1/64 stop
        log_lum = np.linspace(-8.0, 0.0, 513)
        ramp = np.repeat((2.0 ** log_lum)[None, :, None], 3, axis=2)
        plan = plan_windows(ramp)
        stack = decompose(ramp, plan)
        assert plan.count == 3
        for k, (v, im) in enumerate(stack):
            saturated = im.data[0, :, 0] == 1.0
            expected = np.array([x * v >= 1.0 for x in ramp[0, :, 0]])
            np.testing.assert_array_equal(saturated, expected)
            # window k clips everything above its endpoint
            above = log_lum > plan.endpoints[k] + 1e-9
            assert np.all(saturated[above])
        # window 1 clips the top two thirds, window 2 the top third, window 3 almost nothing
        frac = [np.mean(im.data[0, :, 0] == 1.0) for im in stack.images]
        assert frac[0] == pytest.approx(2 / 3, abs=0.01)
        assert frac[1] == pytest.approx(1 / 3, abs=0.01)
        assert frac[2] <= 0.01

    def test_dimension_mismatch(self):
        plan = plan_windows(two_level_scene(0, 4, size=8))
        with pytest.raises(ArgumentError):
            decompose(two_level_scene(0, 4, size=10), plan)

    def test_from_exposures(self):
        plan = WindowPlan.from_exposures([0.25, 1.0])
        assert plan.exposures == (1.0, 0.25)
        assert plan.endpoints == (0.0, 2.0)
