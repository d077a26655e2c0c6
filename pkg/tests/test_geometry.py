"""Section geometry: the skew return map, cusp separation, observable, boxes."""

import math
import random

import pytest
from hypothesis import given, settings as hyp_settings, strategies as st
from mpmath import mpf

from lorenzhist import (
    BigReal,
    BoxRegion,
    BoxSpec,
    SigmaPoint,
    box_membership,
    cusp_disjointness_margin,
    eval_beta,
    find_period2,
    observable_g,
    return_map,
)
from lorenzhist.errors import DomainError


class TestBeta:
    def test_corner_value(self, map_params):
        assert eval_beta(1.0, 1.0, map_params) == pytest.approx(0.25, abs=1e-15)

    def test_cusp_vertex_limit(self, map_params):
        # as x -> 0+ the image approaches y = 1/2 (vertex of the cusp)
        for k in range(4, 14):
            x = 10.0 ** -k
            assert eval_beta(x, 0.3, map_params) == pytest.approx(0.5, abs=2 * x ** 2)
        tiny = BigReal.from_str("1e-80", 512)
        assert eval_beta(tiny, -0.9, map_params) == 0.5

    def test_odd_symmetry(self, map_params):
        rng = random.Random(3)
        for _ in range(200):
            x = rng.uniform(-1, 1) or 0.5
            y = rng.uniform(-1, 1)
            assert eval_beta(-x, -y, map_params) == pytest.approx(
                -eval_beta(x, y, map_params), abs=1e-16
            )

    @hyp_settings(max_examples=80, deadline=None)
    @given(
        st.floats(min_value=-1, max_value=1),
        st.floats(min_value=-1, max_value=1),
        st.floats(min_value=-1, max_value=1),
    )
    def test_y_contraction(self, x, y1, y2):
        if x == 0.0:
            return
        b1 = eval_beta(x, y1)
        b2 = eval_beta(x, y2)
        assert abs(b1 - b2) <= 0.25 * abs(y1 - y2) + 1e-15
        assert abs(b1) <= 0.5 + 1e-15

    def test_domain_error(self):
        with pytest.raises(DomainError):
            eval_beta(0.0, 0.3)


class TestReturnMap:
    def test_corner(self, map_params):
        z = return_map(SigmaPoint.make(1.0, 1.0))
        assert z.x.value == mpf(0.95)
        assert z.y == pytest.approx(0.25, abs=1e-15)

    def test_mirrored_corner(self, map_params):
        z = return_map(SigmaPoint.make(-1.0, -1.0))
        assert z.x.value == -mpf(0.95)
        assert z.y == pytest.approx(-0.25, abs=1e-15)

    def test_skew_product_structure(self):
        # the x-image does not depend on y
        a = return_map(SigmaPoint.make(0.37, -0.8))
        b = return_map(SigmaPoint.make(0.37, 0.45))
        assert a.x.value == b.x.value


class TestCuspMargin:
    def test_positive_for_defaults(self, map_params):
        margin = cusp_disjointness_margin(map_params, grid=10_000)
        assert margin > 0.0
        assert margin == pytest.approx(0.25, abs=5e-4)

    def test_bad_contraction_fails_near_apex(self, map_params):
        # regression guard: y-half-width 1/2 breaks disjointness
        assert cusp_disjointness_margin(map_params, grid=10_000, y_factor=0.5) <= 0.0

    def test_direct_slice_oracle(self, map_params):
        # independent check: sample the two slices through eval_beta itself
        from lorenzhist.map1d import branch_inverse
        worst = math.inf
        for i in range(2001):
            u = -0.95 + 1.9 * i / 2000
            xp = branch_inverse(BigReal.from_number(u, 64), +1).float_approx()
            xn = branch_inverse(BigReal.from_number(u, 64), -1).float_approx()
            inf_plus = min(eval_beta(xp, -1.0), eval_beta(xp, 1.0))
            sup_minus = max(eval_beta(xn, -1.0), eval_beta(xn, 1.0))
            worst = min(worst, inf_plus - sup_minus)
        formula = cusp_disjointness_margin(map_params, grid=2000)
        assert worst == pytest.approx(formula, abs=1e-9)

    def test_symmetry_of_slices(self, map_params):
        # the separation computed at abscissa u from the positive side
        # equals the one at -u from the negative side
        from lorenzhist.map1d import branch_inverse

        def sep(u: float) -> float:
            xp = branch_inverse(BigReal.from_number(u, 64), +1).float_approx()
            xn = branch_inverse(BigReal.from_number(u, 64), -1).float_approx()
            return min(eval_beta(xp, -1.0), eval_beta(xp, 1.0)) - max(
                eval_beta(xn, -1.0), eval_beta(xn, 1.0)
            )

        for u in (0.9, 0.5, 0.1, -0.3, -0.77):
            assert sep(u) == pytest.approx(sep(-u), abs=1e-14)


class TestObservable:
    def test_plateau_center(self, box):
        assert observable_g((0.0, 0.0, 0.0), box) == 1.0

    def test_support_boundary(self, box):
        assert observable_g((2 * box.eta, 0.0, 0.0), box) == 0.0

    def test_half_value(self, box):
        assert observable_g((1.5 * box.eta, 0.0, 0.5 * box.eta), box) == pytest.approx(0.5)

    def test_range_and_levels(self, box):
        rng = random.Random(11)
        for _ in range(20_000):
            s = (rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0, 1))
            g = observable_g(s, box)
            assert 0.0 <= g <= 1.0
            region = box_membership(s, box)
            if region is BoxRegion.INSIDE_PI_ETA:
                assert g == 1.0
            elif region is BoxRegion.OUTSIDE:
                # outside Pi(2*eta) the observable vanishes
                if all(
                    abs(c) > 2 * box.eta for c in (s[0], s[1])
                ) or s[2] > 2 * box.eta:
                    assert g == 0.0

    def test_tiny_bigreal_x_inside(self, box):
        x = BigReal.from_str("1e-200", 1024)
        assert observable_g((x, 0.0, 0.01), box) == 1.0


class TestBoxMembership:
    def test_origin(self, box):
        assert box_membership((0.0, 0.0, 0.0), box) is BoxRegion.INSIDE_PI_ETA

    def test_shell(self, box):
        assert (
            box_membership((1.5 * box.eta, 0.0, 0.0), box)
            is BoxRegion.INSIDE_PI_2ETA_ONLY
        )

    def test_outside(self, box):
        assert box_membership((0.5, 0.0, 0.5), box) is BoxRegion.OUTSIDE

    def test_box_invariants(self, map_params):
        with pytest.raises(ValueError):
            BoxSpec(eta=0.06)  # 2*eta > 0.1
        p2 = find_period2(map_params, 64).float_approx()
        BoxSpec(eta=0.04).validate_against_period2(p2)
        with pytest.raises(ValueError):
            BoxSpec(eta=0.05).validate_against_period2(0.09)


class TestVertexCondition:
    def test_return_map_vertices(self, map_params):
        # along x = 10^-k the return map approaches (-1, 1/2); mirrored on
        # the other side
        for k in (6, 9, 12):
            z = return_map(SigmaPoint.make(10.0 ** -k, 0.7, 96))
            assert z.x.float_approx() == pytest.approx(-1.0, abs=1e-3)
            assert z.y == pytest.approx(0.5, abs=1e-9)
            w = return_map(SigmaPoint.make(-(10.0 ** -k), -0.7, 96))
            assert w.x.float_approx() == pytest.approx(1.0, abs=1e-3)
            assert w.y == pytest.approx(-0.5, abs=1e-9)
