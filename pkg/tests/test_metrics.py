import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from lstcn.metrics import mae, persistence_forecast
from lstcn.numerics import ShapeError

unit_floats = st.floats(min_value=0, max_value=1, allow_nan=False)


class TestMae:
    def test_identical_is_zero(self):
        m = np.random.default_rng(0).uniform(size=(4, 3))
        assert mae(m, m) == 0.0

    def test_constant_offset(self):
        actual = np.random.default_rng(1).uniform(size=(5, 2))
        assert mae(actual + 0.1, actual) == pytest.approx(0.1, abs=1e-12)

    @given(
        hnp.arrays(np.float64, (3, 4), elements=unit_floats),
        hnp.arrays(np.float64, (3, 4), elements=unit_floats),
    )
    @settings(max_examples=40)
    def test_symmetric_and_nonnegative(self, a, b):
        assert mae(a, b) == mae(b, a) >= 0.0

    @given(hnp.arrays(np.float64, (2, 3), elements=unit_floats))
    def test_zero_iff_equal(self, a):
        assert mae(a, a) == 0.0
        bumped = a.copy()
        bumped[0, 0] += 0.5
        assert mae(bumped, a) > 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            mae(np.ones((2, 2)), np.ones((2, 3)))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mae(np.ones((0, 2)), np.ones((0, 2)))


class TestPersistence:
    def test_univariate_repeats_last(self):
        out = persistence_forecast(np.array([[0.2, 0.9]]), 1)
        np.testing.assert_array_equal(out, [[0.9, 0.9]])

    def test_multivariate_repeats_last_step_block(self):
        # N=2, L=2 window (f0@s1, f1@s1, f0@s2, f1@s2)
        out = persistence_forecast(np.array([[1.0, 2.0, 3.0, 4.0]]), 2)
        np.testing.assert_array_equal(out, [[3.0, 4.0, 3.0, 4.0]])

    def test_horizon_one_is_identity(self):
        x = np.random.default_rng(2).uniform(size=(4, 3))
        np.testing.assert_array_equal(persistence_forecast(x, 3), x)

    def test_constant_series_scores_zero(self):
        x = np.full((5, 6), 0.4)
        assert mae(persistence_forecast(x, 2), x) == 0.0

    def test_width_must_divide(self):
        with pytest.raises(ShapeError):
            persistence_forecast(np.ones((2, 5)), 2)
