"""Hybrid semiflow: linear pieces, exit times, returns, orbits, bookkeeping."""

import math
import random

import pytest
from mpmath import mpf

from lorenzhist import (
    BigReal,
    FlowParams,
    SigmaPoint,
    State3,
    advance_one_return,
    build_orbit,
    elapsed_time,
    exit_and_descent_times,
    find_period2,
    linear_flow,
    return_map,
    time_in_region,
)
from lorenzhist.errors import DomainError
from lorenzhist.semiflow import (
    LinearSegment,
    OutsideSegment,
    PeriodicTail,
    build_orbit_from_records,
    orbit_csv_lines,
)

LN = math.log


class TestLinearFlow:
    def test_identity_at_zero(self, flow_params):
        s = State3.make(0.01, 0.5, 1.0)
        out = linear_flow(s, 0.0, flow_params)
        assert out.x.value == s.x.value and out.y == s.y and out.z == s.z

    def test_exponential_example(self, flow_params):
        # (0.01, 1, 1) flowed for ln 10 with rates (1, 2, 1)
        out = linear_flow(State3.make(0.01, 1.0, 1.0), LN(10.0), flow_params)
        assert out.x.float_approx() == pytest.approx(0.1, rel=1e-14)
        assert out.y == pytest.approx(0.01, rel=1e-13)
        assert out.z == pytest.approx(0.1, rel=1e-14)

    def test_slab_exit_error(self, flow_params):
        with pytest.raises(DomainError):
            linear_flow(State3.make(0.05, 0.0, 1.0), 2.0, flow_params)

    def test_semigroup(self, flow_params):
        rng = random.Random(5)
        for _ in range(50):
            x = rng.uniform(1e-6, 0.01)
            s = State3.make(x, rng.uniform(-1, 1), rng.uniform(0.1, 1.0))
            t1 = rng.uniform(0, 1.0)
            t2 = rng.uniform(0, LN(0.1 / x) - t1)
            a = linear_flow(linear_flow(s, t1, flow_params), t2, flow_params)
            b = linear_flow(s, t1 + t2, flow_params)
            assert abs(a.x.float_approx() - b.x.float_approx()) <= abs(
                b.x.float_approx()
            ) * 2.0 ** -40
            assert a.y == pytest.approx(b.y, rel=2.0 ** -40, abs=1e-300)
            assert a.z == pytest.approx(b.z, rel=2.0 ** -40)


class TestDescentTimes:
    def test_top_face_time(self, flow_params, box):
        dt = exit_and_descent_times(BigReal.from_number(1e-6, 96), flow_params, box.eta)
        assert dt.t_top == pytest.approx(LN(25.0), abs=1e-12)

    def test_side_time_zero_at_eta(self, flow_params, box):
        dt = exit_and_descent_times(BigReal.from_number(box.eta, 96), flow_params, box.eta)
        assert dt.t_side == pytest.approx(0.0, abs=1e-12)

    def test_top_entry_condition(self, flow_params, box):
        # crossing the top face requires |x| small when z reaches eta
        deep = exit_and_descent_times(BigReal.from_number(1e-4, 96), flow_params, box.eta)
        assert deep.y2_exists
        shallow = exit_and_descent_times(BigReal.from_number(0.01, 96), flow_params, box.eta)
        assert not shallow.y2_exists

    def test_tiny_bigreal_descent(self, flow_params, box):
        x = BigReal.from_str("1e-52", 256)
        dt = exit_and_descent_times(x, flow_params, box.eta)
        # t_side = (log eta - log|x|) / lam at double fidelity
        assert dt.t_side == pytest.approx(LN(box.eta) + 52 * LN(10.0), rel=1e-12)


class TestAdvanceOneReturn:
    def test_outside_only_for_periodic_point(self, map_params, flow_params):
        p2 = find_period2(map_params, 96)
        segs, nxt, dur = advance_one_return(SigmaPoint(p2, 0.0), flow_params, map_params)
        assert len(segs) == 1 and isinstance(segs[0], OutsideSegment)
        assert dur == pytest.approx(1.0)
        assert abs((nxt.x + p2).value) < mpf(2) ** -80  # lands at -p2

    def test_slab_then_outside(self, map_params, flow_params):
        segs, nxt, dur = advance_one_return(
            SigmaPoint.make(0.05, 0.0, 96), flow_params, map_params
        )
        assert isinstance(segs[0], LinearSegment) and isinstance(segs[1], OutsideSegment)
        assert segs[0].duration == pytest.approx(LN(2.0), abs=1e-12)
        assert dur == pytest.approx(1.0 + LN(2.0), abs=1e-12)

    def test_return_time_bound(self, map_params, flow_params, box):
        # full-return time is bounded by C for crossings with |x| >= eta
        C = flow_params.outside_time_bound(box.eta)
        rng = random.Random(9)
        for _ in range(100):
            x = rng.uniform(box.eta, 1.0) * (1 if rng.random() < 0.5 else -1)
            _, _, dur = advance_one_return(
                SigmaPoint.make(x, 0.0, 96), flow_params, map_params
            )
            assert dur <= C + 1e-12


class TestBuildOrbit:
    def test_zero_horizon(self, map_params, flow_params):
        orbit = build_orbit(SigmaPoint.make(0.4, 0.0, 96), 0.0, flow_params, map_params)
        assert orbit.segments == ()

    def test_periodic_tail_immediate(self, map_params, flow_params):
        p2 = find_period2(map_params, 96)
        orbit = build_orbit(SigmaPoint(p2, 0.0), 100.0, flow_params, map_params)
        assert isinstance(orbit.tail, PeriodicTail)
        assert orbit.tail.t0 == 0.0
        assert orbit.tail.period == pytest.approx(2.0)
        assert orbit.horizon == math.inf

    def test_crossings_match_return_map(self, map_params, flow_params):
        # semiflow section crossings against direct return-map iteration
        rng = random.Random(123)
        checked = 0
        while checked < 10:
            x0 = rng.uniform(-1, 1)
            if abs(x0) < 1e-3:
                continue
            z = SigmaPoint.make(x0, rng.uniform(-1, 1), 128)
            orbit = build_orbit(z, 9.0, flow_params, map_params)
            cur = z
            for ref in orbit.xs:
                assert abs(ref.float_approx() - cur.x.float_approx()) <= 1e-9
                cur = return_map(cur, map_params, s=flow_params.s_ratio)
            checked += 1

    def test_gamma_hit_error(self, map_params, flow_params):
        from lorenzhist.errors import GammaHitError
        with pytest.raises(GammaHitError):
            build_orbit(SigmaPoint.make(0.0, 0.0, 64), 1.0, flow_params, map_params)


class TestTimeBookkeeping:
    def _descent_orbit(self, x, flow_params, map_params, horizon=30.0, bits=192):
        return build_orbit(SigmaPoint.make(x, 0.0, bits), horizon, flow_params, map_params)

    def test_elapsed_zero_and_monotone(self, map_params, flow_params):
        orbit = self._descent_orbit(1e-5, flow_params, map_params)
        assert elapsed_time(orbit, 0, 0) == 0.0
        ts = orbit.event_times()
        assert all(b > a for a, b in zip(ts, ts[1:]))

    def test_time_in_region_bounded_by_elapsed(self, map_params, flow_params, box):
        orbit = self._descent_orbit(1e-6, flow_params, map_params)
        for t in (1.0, 5.0, 12.0, 20.0):
            assert 0.0 <= time_in_region(orbit, box.eta, t) <= t

    def test_box_time_closed_form(self, map_params, flow_params, box):
        # descent entered below eta^2: time inside the eta-box equals
        # log(eta/|x0|)/lam - log(1/eta)/nu
        x0 = 1e-6
        orbit = self._descent_orbit(x0, flow_params, map_params)
        expected = (LN(box.eta / x0) / flow_params.lam
                    - LN(1.0 / box.eta) / flow_params.nu)
        got = time_in_region(orbit, box.eta, 14.0)  # whole descent < 14
        assert got == pytest.approx(expected, abs=1e-9)

    def test_outside_time_per_return_bound(self, map_params, flow_params, box):
        # instantiation of the bounded-outside-time constant
        C = flow_params.outside_time_bound(box.eta)
        assert C == pytest.approx(1.0 + LN(25.0) + LN(2.5), abs=1e-12)
        rng = random.Random(21)
        for _ in range(50):
            x = rng.uniform(1e-9, 1.0) * (1 if rng.random() < 0.5 else -1)
            orbit = build_orbit(
                SigmaPoint.make(x, 0.0, 128), 0.5, flow_params, map_params
            )
            first_return = orbit.segments[-1].t0 + orbit.segments[-1].duration
            inside = time_in_region(orbit, box.eta, first_return)
            assert first_return - inside <= C + 1e-9


class TestEventTimeLaw:
    def test_closed_form_vs_numeric_event(self, flow_params, box):
        # top-face hit: closed form against a numeric root of z(t) = eta
        from scipy.optimize import brentq
        rng = random.Random(77)
        for _ in range(100):
            z0 = rng.uniform(0.5, 1.0)
            t_num = brentq(
                lambda t: z0 * math.exp(-flow_params.nu * t) - box.eta,
                0.0, 50.0, xtol=1e-14,
            )
            t_closed = LN(z0 / box.eta) / flow_params.nu
            assert abs(t_num - t_closed) <= 1e-9


class TestOrbitCsv:
    def test_schema_and_rows(self, map_params, flow_params):
        orbit = build_orbit(SigmaPoint.make(0.05, 0.1, 96), 5.0, flow_params, map_params)
        lines = orbit_csv_lines(orbit, {"x0": 0.05})
        header = [l for l in lines if l.startswith("#")]
        assert any("schema = lhw-orbit-1" in h for h in header)
        assert lines[len(header)] == "t_start,t_end,kind,x_entry,y_entry,z_entry"
        kinds = [l.split(",")[2] for l in lines[len(header) + 1:]]
        assert set(kinds) <= {"linear", "outside", "periodic"}

    def test_records_builder_matches_direct(self, map_params, flow_params):
        # building from records reproduces the directly built orbit times
        z = SigmaPoint.make(0.07, 0.2, 96)
        direct = build_orbit(z, 8.0, flow_params, map_params)
        recs = [(c.sign_x, c.log_abs_x) for c in direct.crossings]
        rebuilt = build_orbit_from_records(
            recs, z.y, flow_params, map_params, start_x=z.x
        )
        for a, b in zip(direct.crossings, rebuilt.crossings):
            assert a.t == pytest.approx(b.t, abs=1e-12)
            assert a.y == pytest.approx(b.y, abs=1e-12)
