from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from chaotrng.dynamics import iterate_orbit
from chaotrng.maps import (
    MapKind,
    NonIdealParams,
    OutOfDomain,
    PiecewiseAffineMap,
    make_bernoulli,
    make_generalized_zigzag,
    make_nonideal,
    make_nonideal_zigzag,
    make_tent,
    make_zigzag,
    map_from_name,
)

m_values = st.floats(-2.99, 2.99).filter(lambda m: abs(m) > 1e-3)


class TestPiecewiseAffineMap:
    def test_rejects_gap_between_segments(self):
        with pytest.raises(ValueError, match="contiguous"):
            PiecewiseAffineMap(((0, 0.4, 2, 0), (0.5, 1, -2, 2)), (0, 1))

    def test_rejects_partial_cover(self):
        with pytest.raises(ValueError, match="cover"):
            PiecewiseAffineMap(((0, 0.5, 2, 0),), (0, 1))

    @pytest.mark.parametrize("slope", [0.0, np.inf, np.nan])
    def test_rejects_bad_slope(self, slope):
        with pytest.raises(ValueError, match="slope"):
            PiecewiseAffineMap(((0, 1, slope, 0),), (0, 1))

    def test_default_guard_is_tenth_of_width(self):
        assert make_zigzag().guard == pytest.approx(0.2)
        assert make_tent().guard == pytest.approx(0.1)

    def test_json_roundtrip(self):
        fmap = make_nonideal(0.02, -0.01)[0]
        back = PiecewiseAffineMap.from_json(fmap.to_json())
        assert back.same_segments(fmap)
        assert back.kind is fmap.kind
        assert back.meta == fmap.meta

    def test_json_document_fields(self):
        d = make_tent().to_dict()
        assert d["kind"] == "tent"
        assert d["domain"] == [0.0, 1.0]
        assert d["segments"] == [[0.0, 0.5, 2.0, 0.0], [0.5, 1.0, -2.0, 2.0]]

    def test_segments_own_upper_endpoint(self):
        # x = 1/2 belongs to the rising branch of the tent
        assert make_tent()(0.5) == 1.0
        # Bernoulli: 0 belongs to the left branch (2x + 1)
        assert make_bernoulli()(0.0) == 1.0


class TestEvaluate:
    @pytest.mark.parametrize("x, y", [(0.3, 0.6), (0.5, 1.0), (0.25, 0.5), (0.75, 0.5)])
    def test_tent_values(self, x, y):
        assert make_tent()(x) == pytest.approx(y)

    @pytest.mark.parametrize("x, y", [(-0.5, 0.0), (0.5, 0.0), (0.9, 0.8)])
    def test_bernoulli_values(self, x, y):
        assert make_bernoulli()(x) == pytest.approx(y)

    def test_zigzag_guard_extrapolation(self):
        assert make_zigzag()(1.02) == pytest.approx(0.04)

    def test_tent_guard_extrapolation_diverges(self):
        tent = make_tent()
        y = tent(1.02)
        assert y == pytest.approx(-0.04)
        assert tent(y) == pytest.approx(-0.08)

    def test_beyond_guard_raises(self):
        with pytest.raises(OutOfDomain) as info:
            make_tent()(1.2)
        assert info.value.x == pytest.approx(1.2)
        assert info.value.guard == pytest.approx(0.1)

    def test_nan_raises(self):
        with pytest.raises(OutOfDomain):
            make_tent()(np.nan)

    def test_vectorized_matches_scalar(self):
        fmap = make_generalized_zigzag(2.5)
        xs = np.linspace(-1, 1, 101)
        np.testing.assert_allclose(fmap(xs), [fmap(float(x)) for x in xs])


class TestGeneralizedZigzag:
    @pytest.mark.parametrize("m, x, y", [(-2, 0.25, -0.5), (-2, 0.75, -0.5), (1.5, 0.5, 0.75)])
    def test_branch_values(self, m, x, y):
        assert make_generalized_zigzag(m)(x) == pytest.approx(y)

    @pytest.mark.parametrize("m", [-3.0, 3.0, 0.0, 3.5])
    def test_rejects_out_of_range(self, m):
        with pytest.raises(ValueError):
            make_generalized_zigzag(m)

    def test_kind_only_for_minus_two(self):
        assert make_generalized_zigzag(-2.0).kind is MapKind.ZIGZAG
        assert make_generalized_zigzag(2.0).kind is MapKind.CUSTOM

    def test_breakpoints_at_inverse_slope(self):
        np.testing.assert_allclose(make_generalized_zigzag(2.5).breakpoints, [-1, -0.4, 0.4, 1])

    def test_small_slope_single_segment(self):
        assert len(make_generalized_zigzag(0.5).segments) == 1

    @given(m_values)
    def test_origin_fixed(self, m):
        assert make_generalized_zigzag(m)(0.0) == 0.0

    @given(m_values, st.floats(-1, 1))
    def test_matches_closed_form(self, m, x):
        a = 1 / abs(m)
        if x <= -a:
            expect = -m * (x + 2 / abs(m))
        elif x <= a:
            expect = m * x
        else:
            expect = -m * (x - 2 / abs(m))
        assert make_generalized_zigzag(m)(x) == pytest.approx(expect, abs=1e-12)

    @given(st.floats(-2.0, -1.0001), st.floats(-1, 1).filter(lambda x: abs(x) > 1e-6))
    def test_sign_alternation(self, m, x):
        y = make_generalized_zigzag(m)(x)
        if y != 0:
            assert np.sign(y) == -np.sign(x)

    @given(st.floats(-2.0, 2.0).filter(lambda m: abs(m) > 1e-3), st.floats(-1, 1))
    def test_image_stays_in_domain(self, m, x):
        assert -1 <= make_generalized_zigzag(m)(x) <= 1


class TestNonIdeal:
    def test_ideal_equals_tent(self):
        fmap, params = make_nonideal(0.0, 0.0)
        assert fmap.same_segments(make_tent())
        assert (params.x_b, params.delta_o, params.x_t1, params.x_t2) == (0.5, 0.0, 0.25, 0.75)

    def test_breakpoint_exact(self):
        _, params = make_nonideal(0.05, 0.0)
        assert params.x_b == pytest.approx(1 / 2.1, abs=1e-15)
        assert params.delta_o == pytest.approx(-0.05)

    def test_preimages_by_bisection(self):
        fmap, params = make_nonideal(0.02, 0.03)
        assert params.delta_o == pytest.approx(-0.05)
        x_t1 = brentq(lambda x: 2 * 1.02 * x - params.x_b, 0, params.x_b, xtol=1e-15)
        x_t2 = brentq(lambda x: 1 - 2 * 1.03 * (x - params.x_b) - params.x_b, params.x_b, 1, xtol=1e-15)
        assert params.x_t1 == pytest.approx(x_t1, abs=1e-12)
        assert params.x_t2 == pytest.approx(x_t2, abs=1e-12)

    @given(st.floats(-0.2, 0.2), st.floats(-0.2, 0.2))
    def test_preimage_invariant(self, dg1, dg2):
        fmap, p = make_nonideal(dg1, dg2)
        assert 0 < p.x_t1 < p.x_b < p.x_t2 < 1
        assert fmap(p.x_t1) == pytest.approx(p.x_b, abs=1e-12)
        assert fmap(p.x_t2) == pytest.approx(p.x_b, abs=1e-12)
        assert p.delta_o == -(dg1 + dg2)

    @pytest.mark.parametrize("dg1, dg2", [(0.25, 0), (0, -0.3)])
    def test_rejects_large_deltas(self, dg1, dg2):
        with pytest.raises(ValueError):
            make_nonideal(dg1, dg2)

    def test_fold_when_endpoint_negative(self):
        fmap, params = make_nonideal(0.03, 0.02)
        assert params.endpoint < 0
        assert len(fmap.segments) == 3
        assert fmap(1.0) == pytest.approx(-params.endpoint)

    def test_no_fold_when_endpoint_positive(self):
        fmap, params = make_nonideal(-0.03, -0.02)
        assert params.endpoint > 0
        assert len(fmap.segments) == 2

    @given(st.floats(-0.2, 0.2), st.floats(-0.2, 0.2), st.floats(-1, 1))
    def test_zigzag_form_magnitude(self, dg1, dg2, x):
        tent_form = make_nonideal(dg1, dg2)[0]
        zz = make_nonideal_zigzag(dg1, dg2)[0]
        assert abs(zz(x)) == pytest.approx(tent_form(abs(x)), abs=1e-12)

    def test_params_from_deltas(self):
        assert NonIdealParams.from_deltas(0.01, 0.02) == make_nonideal(0.01, 0.02)[1]


class TestMagnitudeEquivalence:
    def test_zigzag_orbit_is_tent_orbit_in_magnitude(self):
        x0 = 0.2137
        zz = iterate_orbit(make_zigzag(), x0, 10_000)
        tent = iterate_orbit(make_tent(), x0, 10_000)
        np.testing.assert_allclose(np.abs(zz), tent, atol=1e-12)


class TestMapFromName:
    @pytest.mark.parametrize("name, kind", [("zigzag", MapKind.ZIGZAG), ("tent", MapKind.TENT),
                                            ("bernoulli", MapKind.BERNOULLI), ("nonideal", MapKind.ZIGZAG)])
    def test_kinds(self, name, kind):
        assert map_from_name(name).kind is kind

    def test_unknown(self):
        with pytest.raises(ValueError):
            map_from_name("logistic")
