import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torusrd.errors import GridMismatch
from torusrd.metrics import field_from_config, l1_norm, sup_distance

configs = st.lists(st.integers(0, 200), min_size=2, max_size=32)


class TestInterpolation:
    def test_two_site_example(self):
        f = field_from_config(np.array([2, 4]), 2)
        assert f(0.0) == 1.0
        assert f(0.5) == 2.0
        assert f(0.25) == 1.5
        assert f(0.75) == 1.5  # wraps back toward knot 0

    def test_constant_field(self):
        f = field_from_config(np.full(8, 5), 5)
        x = np.linspace(0.0, 1.0, 97)
        assert np.allclose([f(v) for v in x], 1.0, rtol=0, atol=0)

    def test_sup_at_knot(self):
        f = field_from_config(np.array([0, 10, 0, 0]), 10)
        assert f.sup() == 1.0
        assert f(0.25) == 1.0

    @settings(max_examples=50, deadline=None)
    @given(configs, st.floats(0.0, 1.0))
    def test_values_within_knot_range(self, eta, x):
        f = field_from_config(np.array(eta), 3)
        v = f(x)
        assert min(f.knots) - 1e-12 <= v <= max(f.knots) + 1e-12


class TestSupDistance:
    def test_exact_match_is_zero(self):
        f = field_from_config(np.full(4, 7), 7)
        assert sup_distance(f, np.ones(4)) == 0.0
        assert sup_distance(f, np.ones(16)) == 0.0

    def test_two_site_example(self):
        f = field_from_config(np.array([2, 4]), 2)
        assert sup_distance(f, np.ones(2)) == 1.0

    def test_incommensurable_grids_rejected(self):
        f = field_from_config(np.array([1, 1, 1]), 1)
        with pytest.raises(GridMismatch):
            sup_distance(f, np.ones(4))

    @settings(max_examples=30, deadline=None)
    @given(configs)
    def test_distance_to_own_knots_zero(self, eta):
        f = field_from_config(np.array(eta), 4)
        assert sup_distance(f, np.array(eta) / 4.0) == 0.0


class TestL1Norm:
    def test_examples(self):
        assert l1_norm(field_from_config(np.full(6, 3), 3)) == 1.0
        assert l1_norm(field_from_config(np.array([2, 4]), 2)) == 1.5
        assert l1_norm(field_from_config(np.array([0, 10, 0, 0]), 10)) == 0.25

    @settings(max_examples=50, deadline=None)
    @given(configs, st.integers(1, 50))
    def test_equals_total_over_ell_n(self, eta, ell):
        eta = np.array(eta)
        f = field_from_config(eta, ell)
        assert l1_norm(f) == pytest.approx(eta.sum() / (ell * len(eta)), rel=1e-15)
