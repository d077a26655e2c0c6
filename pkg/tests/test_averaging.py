"""Observable integrals, the average curve, and the oscillation detector."""

import math

import pytest

from lorenzhist import (
    SigmaPoint,
    TimeAverageSeries,
    average_series,
    build_orbit,
    detect_historic,
    find_period2,
    integrate_g,
    time_average,
    time_in_region,
)
from lorenzhist.errors import HorizonError

LN = math.log


def descent_orbit(x, flow_params, map_params, horizon=30.0, bits=192, y=0.0):
    return build_orbit(SigmaPoint.make(x, y, bits), horizon, flow_params, map_params)


class TestIntegrateG:
    def test_zero_off_support(self, map_params, flow_params, box):
        # the periodic orbit never meets the support
        p2 = find_period2(map_params, 96)
        orbit = build_orbit(SigmaPoint(p2, 0.0), 100.0, flow_params, map_params)
        assert integrate_g(orbit, 50.0, box) == 0.0

    def test_plateau_contribution_exact(self, map_params, flow_params, box):
        # a stretch fully inside the eta-box contributes its duration exactly
        orbit = descent_orbit(1e-9, flow_params, map_params)
        t_in = LN(1.0 / box.eta) / flow_params.nu       # z reaches eta
        t_out = LN(box.eta / 1e-9) / flow_params.lam    # |x| reaches eta
        shoulder = LN(2.0) / flow_params.nu             # z from 2*eta to eta
        a, b = t_in + 0.5, t_out - 0.5
        inner = integrate_g(orbit, b, box) - integrate_g(orbit, a, box)
        assert (b - a) * (1 - 1e-12) <= inner <= (b - a) * (1 + 1e-12) + shoulder

    def test_bracketed_by_box_times(self, map_params, flow_params, box):
        orbit = descent_orbit(1e-6, flow_params, map_params)
        t = 16.0
        lo = time_in_region(orbit, box.eta, t)
        hi = time_in_region(orbit, 2 * box.eta, t)
        mid = integrate_g(orbit, t, box)
        assert lo - 1e-9 <= mid <= hi + 1e-9

    def test_monotone_in_time(self, map_params, flow_params, box):
        orbit = descent_orbit(1e-5, flow_params, map_params)
        vals = [integrate_g(orbit, t, box) for t in [0.5 * k for k in range(1, 50)]]
        assert all(b >= a - 1e-13 for a, b in zip(vals, vals[1:]))

    def test_horizon_error(self, map_params, flow_params, box):
        orbit = descent_orbit(0.05, flow_params, map_params, horizon=3.0)
        with pytest.raises(HorizonError):
            integrate_g(orbit, orbit.horizon + 1.0, box)


class TestTimeAverage:
    def test_range(self, map_params, flow_params, box):
        orbit = descent_orbit(1e-7, flow_params, map_params)
        for t in (0.5, 3.0, 10.0, 20.0):
            assert 0.0 <= time_average(orbit, t, box) <= 1.0

    def test_periodic_tail_scaling(self, map_params, flow_params, box):
        # frozen numerator on the tail: A(t2)/A(t1) = t1/t2 exactly
        from lorenzhist.witness import WitnessSettings, construct_witness
        res = construct_witness(
            0.33, 3, 0.2, WitnessSettings(mode="strict", precision_override=192)
        )
        orbit = res.orbit
        t_tail = res.certificate.tau4
        a1 = time_average(orbit, 2.0 * t_tail, box)
        a2 = time_average(orbit, 4.0 * t_tail, box)
        assert a1 * 2.0 * t_tail == pytest.approx(a2 * 4.0 * t_tail, rel=1e-14)

    def test_continuity_at_boundaries(self, map_params, flow_params, box):
        orbit = descent_orbit(1e-5, flow_params, map_params)
        for seg in orbit.segments[:8]:
            t = seg.t0
            if t <= 0.05:
                continue
            left = time_average(orbit, t - 1e-7, box)
            right = time_average(orbit, t + 1e-7, box)
            assert left == pytest.approx(right, abs=1e-5)

    def test_guard_at_zero(self, map_params, flow_params, box):
        orbit = descent_orbit(0.05, flow_params, map_params, horizon=3.0)
        with pytest.raises(ValueError):
            time_average(orbit, 0.0, box)


class TestAverageSeries:
    def test_event_times_only(self, map_params, flow_params, box):
        orbit = descent_orbit(1e-4, flow_params, map_params, horizon=20.0)
        ser = average_series(orbit, 0, box, horizon=20.0)
        assert len(ser.samples) > 0
        assert ser.horizon() <= 20.0

    def test_grid_refinement_stability(self, map_params, flow_params, box):
        orbit = descent_orbit(1e-4, flow_params, map_params, horizon=20.0)
        s1 = average_series(orbit, 100, box, horizon=20.0)
        s2 = average_series(orbit, 200, box, horizon=20.0)
        common = set(s1.times()) & set(s2.times())
        v1 = dict(s1.samples)
        v2 = dict(s2.samples)
        assert common
        for t in common:
            assert v1[t] == pytest.approx(v2[t], abs=1e-9)

    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            TimeAverageSeries(samples=((1.0, 0.5), (1.0, 0.6)))
        with pytest.raises(ValueError):
            TimeAverageSeries(samples=((1.0, 1.5),))


class TestDetectHistoric:
    def test_constant_series_none(self):
        ser = TimeAverageSeries(samples=tuple((float(t), 0.4) for t in range(1, 20)))
        assert detect_historic(ser, 1.0, 0.01) is None

    def test_degenerate_threshold(self):
        ser = TimeAverageSeries(samples=((1.0, 0.4), (2.0, 0.4), (3.0, 0.5)))
        out = detect_historic(ser, 1.0, 0.0)
        assert out is not None

    def test_witness_series_oscillates(self, box):
        from lorenzhist.witness import WitnessSettings, construct_witness
        res = construct_witness(
            0.33, 10, 0.1, WitnessSettings(mode="strict", precision_override=256)
        )
        ser = res.series(grid=400)
        pair = detect_historic(ser, float(res.certificate.N), 0.5)
        assert pair is not None
        t_hi, t_lo = pair
        assert t_hi >= res.certificate.N and t_lo >= res.certificate.N
