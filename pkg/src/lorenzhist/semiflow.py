"""Hybrid semiflow: closed-form linear descent, opaque timed excursions.

Inside the slab |x| <= 0.1 the flow is exactly linear (x grows at rate
lambda, y and z decay at rates mu > nu), so every quantity on a descent
segment has a closed form in the entry state.  Outside the slab the orbit is
represented only by a fixed travel time and its landing point on the section,
which is the return map of the previous crossing; those excursions never meet
the observable's support, so integrals over them vanish exactly.

Once a section crossing lands exactly on the period-two coordinate (possible
only by construction), the orbit carries a symbolic periodic tail: no further
floating iteration, hence no shadowing drift over arbitrarily long horizons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .bigreal import BigReal
from .errors import DomainError, GammaHitError, HorizonError
from .geometry import SigmaPoint, eval_beta
from .map1d import DEFAULT_MAP, MapParams, eval_alpha, find_period2

LN = math.log


@dataclass(frozen=True)
class FlowParams:
    """Rates of the linear field, the outside travel time, and slab width."""

    lam: float = 1.0
    mu: float = 2.0
    nu: float = 1.0
    t_out: float = 1.0
    x_side: float = 0.1

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.mu > self.nu > 0:
            raise ValueError("rates must satisfy mu > nu > 0")
        if not self.t_out > 0:
            raise ValueError("t_out must be positive")
        if self.x_side != 0.1:
            raise ValueError("slab half-width is fixed at 0.1")

    @property
    def s_ratio(self) -> float:
        """Contraction exponent mu/lambda used by the return map's y part."""
        return self.mu / self.lam

    def outside_time_bound(self, eta: float) -> float:
        """Uniform bound C on time spent outside Pi(eta) per full return.

        One return contributes the outside travel time plus the slab time not
        inside Pi(eta); whether or not the descent enters the box, the slab
        part is at most log(x_side/eta)/lambda + log(1/eta)/nu.
        """
        return self.t_out + LN(self.x_side / eta) / self.lam + LN(1.0 / eta) / self.nu


DEFAULT_FLOW = FlowParams()


@dataclass(frozen=True)
class State3:
    """A flow state; x is arbitrary precision, y and z are tame doubles."""

    x: BigReal
    y: float
    z: float

    @staticmethod
    def make(x, y: float, z: float, precision_bits: int = 64) -> "State3":
        if not isinstance(x, BigReal):
            x = BigReal.from_number(x, precision_bits)
        return State3(x, float(y), float(z))


@dataclass(frozen=True)
class LinearSegment:
    """Descent through the slab, entered on the section (z = 1) or as a
    continuation; all coordinates evolve by exact exponentials."""

    t0: float
    duration: float
    sign_x: int
    log_abs_x: float  # natural log of |x| at entry; finite
    y_entry: float
    z_entry: float = 1.0
    kind: str = field(default="linear", repr=False)


@dataclass(frozen=True)
class OutsideSegment:
    """Timed excursion outside the slab; disjoint from the observable box."""

    t0: float
    duration: float
    kind: str = field(default="outside", repr=False)


@dataclass(frozen=True)
class PeriodicTail:
    """Symbolic period-two tail from an exact section hit; extends the
    horizon to infinity and never meets the observable support."""

    t0: float
    period: float
    section_x: float  # +-(period-two coordinate), double echo
    kind: str = field(default="periodic", repr=False)


@dataclass(frozen=True)
class SectionCrossing:
    """Lightweight record of one section crossing."""

    t: float
    sign_x: int
    log_abs_x: float
    y: float


@dataclass(frozen=True)
class HybridOrbit:
    start: SigmaPoint
    segments: tuple
    crossings: tuple[SectionCrossing, ...]
    tail: Optional[PeriodicTail]
    horizon: float
    flow: FlowParams
    map_params: MapParams
    xs: Optional[tuple[BigReal, ...]] = None  # section coords when small

    def segment_times(self) -> list[float]:
        return [s.t0 for s in self.segments]

    def event_times(self) -> list[float]:
        ts = [s.t0 for s in self.segments]
        end = self.segments[-1].t0 + self.segments[-1].duration if self.segments else 0.0
        ts.append(end)
        return ts


# ---------------------------------------------------------------------------
# Closed-form pieces.
# ---------------------------------------------------------------------------

def linear_flow(s: State3, t: float, fp: FlowParams = DEFAULT_FLOW) -> State3:
    """Flow a state for time t inside the slab.

    (x, y, z) -> (x e^{lam t}, y e^{-mu t}, z e^{-nu t}); raises if the
    x-coordinate leaves the slab during [0, t].
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    log_exit = s.x.log_abs() + fp.lam * t
    if log_exit > LN(fp.x_side) + 1e-12:
        raise DomainError("trajectory exits the slab before time t")
    growth = math.exp(fp.lam * t)
    return State3(s.x * growth, s.y * math.exp(-fp.mu * t), s.z * math.exp(-fp.nu * t))


@dataclass(frozen=True)
class DescentTimes:
    t_top: float   # z reaches eta
    t_side: float  # |x| reaches eta
    t_slab: float  # |x| reaches the slab boundary
    y2_exists: bool  # the descent crosses the top face of Pi(eta)


def exit_and_descent_times(
    x0: BigReal, fp: FlowParams = DEFAULT_FLOW, eta: float = 0.04
) -> DescentTimes:
    """Characteristic times of a descent entered on the section at |x0|.

    From z = 1: the top face z = eta is met at log(1/eta)/nu; the side face
    |x| = eta at log(eta/|x0|)/lambda; the slab boundary at
    log(x_side/|x0|)/lambda.  The top-face crossing exists iff |x| is still
    inside the box when z gets there.
    """
    la = x0.log_abs()
    if not la <= LN(fp.x_side) + 1e-12:
        raise ValueError("descent times need |x0| <= slab half-width")
    if la == float("-inf"):
        raise DomainError("x0 = 0 lies on the stable manifold")
    t_top = LN(1.0 / eta) / fp.nu
    t_side = (LN(eta) - la) / fp.lam
    t_slab = (LN(fp.x_side) - la) / fp.lam
    y2 = la + fp.lam * t_top <= LN(eta) + 1e-12
    return DescentTimes(t_top=t_top, t_side=t_side, t_slab=t_slab, y2_exists=y2)


def advance_one_return(
    z: SigmaPoint, fp: FlowParams = DEFAULT_FLOW, p: MapParams = DEFAULT_MAP,
    t0: float = 0.0,
) -> tuple[list, SigmaPoint, float]:
    """Segments and landing point of one full return from the section.

    Inside the slab: a linear descent of duration log(x_side/|x|)/lambda,
    then the outside excursion; otherwise the excursion alone.  The landing
    point is the return map of the crossing.
    """
    if z.x.sign() == 0:
        raise DomainError("return undefined on the x = 0 line")
    la = z.x.log_abs()
    segments = []
    t = t0
    if la <= LN(fp.x_side):
        dur = (LN(fp.x_side) - la) / fp.lam
        if dur > 0:
            segments.append(
                LinearSegment(
                    t0=t, duration=dur, sign_x=z.x.sign(),
                    log_abs_x=la, y_entry=z.y, z_entry=1.0,
                )
            )
            t += dur
    segments.append(OutsideSegment(t0=t, duration=fp.t_out))
    t += fp.t_out
    nxt = SigmaPoint(eval_alpha(z.x, p), eval_beta(z.x, z.y, p, s=fp.s_ratio))
    return segments, nxt, t - t0


KEEP_COORDS_LIMIT = 4096


def build_orbit(
    z: SigmaPoint,
    horizon: float,
    fp: FlowParams = DEFAULT_FLOW,
    p: MapParams = DEFAULT_MAP,
    max_returns: int = 1_000_000,
) -> HybridOrbit:
    """Assemble the orbit of a section point out to a time horizon.

    Iterates full returns; if a crossing lands exactly on the period-two
    coordinate (equality of the arbitrary-precision values, which only a
    constructed point achieves), a symbolic periodic tail replaces further
    iteration and the horizon becomes infinite.
    """
    prec = z.x.precision_bits
    p2 = find_period2(p, prec)
    segments: list = []
    crossings: list[SectionCrossing] = []
    xs: list[BigReal] = [z.x]
    cur = z
    t = 0.0
    tail = None
    n = 0
    while t < horizon:
        if cur.x.sign() == 0:
            raise GammaHitError(t)
        crossings.append(
            SectionCrossing(t=t, sign_x=cur.x.sign(), log_abs_x=cur.x.log_abs(), y=cur.y)
        )
        if abs(cur.x) == p2:
            tail = _make_tail(t, cur, p2, fp)
            segments.append(tail)
            break
        segs, nxt, dur = advance_one_return(cur, fp, p, t0=t)
        segments.extend(segs)
        t += dur
        cur = nxt
        xs.append(cur.x)
        n += 1
        if n > max_returns:
            raise HorizonError(f"exceeded {max_returns} returns before the horizon")
    return HybridOrbit(
        start=z,
        segments=tuple(segments),
        crossings=tuple(crossings),
        tail=tail,
        horizon=math.inf if tail is not None else max(t, horizon),
        flow=fp,
        map_params=p,
        xs=tuple(xs) if len(xs) <= KEEP_COORDS_LIMIT else None,
    )


def _make_tail(t: float, cur: SigmaPoint, p2: BigReal, fp: FlowParams) -> PeriodicTail:
    # the period-two coordinate may sit inside the slab for exotic params;
    # the per-hop duration then includes the linear piece
    hop = fp.t_out + max(0.0, (LN(fp.x_side) - p2.log_abs()) / fp.lam)
    return PeriodicTail(
        t0=t, period=2.0 * hop, section_x=float(cur.x.sign()) * p2.float_approx()
    )


def build_orbit_from_records(
    records: Sequence[tuple[int, float]],
    y0: float,
    fp: FlowParams = DEFAULT_FLOW,
    p: MapParams = DEFAULT_MAP,
    tail_at: Optional[int] = None,
    start_x: Optional[BigReal] = None,
    horizon: Optional[float] = None,
) -> HybridOrbit:
    """Assemble an orbit from precomputed crossing records (sign, log|x|).

    The y coordinate evolves by the return map's contraction; when tail_at
    is given, a symbolic periodic tail is attached at that crossing index
    (used by constructions that pin the coordinate to the periodic point
    exactly).  records must cover every crossing up to the tail or horizon.
    """
    segments: list = []
    crossings: list[SectionCrossing] = []
    t = 0.0
    y = y0
    ln_side = LN(fp.x_side)
    tail = None
    for k, (sign, la) in enumerate(records):
        if tail_at is not None and k == tail_at:
            hop = fp.t_out + max(0.0, (ln_side - la) / fp.lam)
            tail = PeriodicTail(t0=t, period=2.0 * hop,
                                section_x=sign * math.exp(la))
            crossings.append(SectionCrossing(t=t, sign_x=sign, log_abs_x=la, y=y))
            segments.append(tail)
            break
        crossings.append(SectionCrossing(t=t, sign_x=sign, log_abs_x=la, y=y))
        if la <= ln_side:
            dur = (ln_side - la) / fp.lam
            if dur > 0:
                segments.append(LinearSegment(
                    t0=t, duration=dur, sign_x=sign, log_abs_x=la,
                    y_entry=y, z_entry=1.0,
                ))
                t += dur
        segments.append(OutsideSegment(t0=t, duration=fp.t_out))
        t += fp.t_out
        # y update: beta from log-magnitude (underflow of |x|^s is harmless)
        arg = fp.s_ratio * la
        xs_pow = math.exp(arg) if arg > -745.0 else 0.0
        y = xs_pow * y * 0.25 + sign * (1.0 - xs_pow) / 2.0
        if horizon is not None and t >= horizon and tail_at is None:
            break
    start_point = SigmaPoint(
        start_x if start_x is not None
        else BigReal.from_number(records[0][0] * math.exp(records[0][1]), 64),
        y0,
    )
    return HybridOrbit(
        start=start_point,
        segments=tuple(segments),
        crossings=tuple(crossings),
        tail=tail,
        horizon=math.inf if tail is not None else t,
        flow=fp,
        map_params=p,
        xs=None,
    )


# ---------------------------------------------------------------------------
# Time bookkeeping.
# ---------------------------------------------------------------------------

def elapsed_time(orbit: HybridOrbit, a: int, b: int) -> float:
    """Time between two orbit events (segment boundaries, by index)."""
    ts = orbit.event_times()
    if not (0 <= a < len(ts) and 0 <= b < len(ts)):
        raise IndexError("event index out of range")
    return abs(ts[b] - ts[a])


def _segment_box_window(
    seg: LinearSegment, eta_box: float, fp: FlowParams
) -> tuple[float, float]:
    """Intersection [t_in, t_out] of a linear segment with the box
    [-eta, eta]^2 x [0, eta], in segment-local time; empty -> (0, -1)."""
    ln_eta = LN(eta_box)
    # entry by z (decaying) and |y| (decaying); exit by |x| (growing)
    t_z = max(0.0, (LN(seg.z_entry) - ln_eta) / fp.nu) if seg.z_entry > eta_box else 0.0
    if abs(seg.y_entry) > eta_box:
        t_y = (LN(abs(seg.y_entry)) - ln_eta) / fp.mu
    else:
        t_y = 0.0
    if seg.log_abs_x > ln_eta:
        return (0.0, -1.0)
    t_x = (ln_eta - seg.log_abs_x) / fp.lam
    t_in = max(t_z, t_y, 0.0)
    t_out = min(t_x, seg.duration)
    return (t_in, t_out)


def time_in_region(orbit: HybridOrbit, eta_box: float, up_to: float) -> float:
    """Time spent inside the box of scale eta_box before `up_to`.

    Closed form on linear segments; outside excursions and the periodic
    tail contribute zero by the model's support separation.
    """
    if up_to < 0:
        raise ValueError("up_to must be nonnegative")
    total = 0.0
    for seg in orbit.segments:
        if seg.t0 >= up_to:
            break
        if not isinstance(seg, LinearSegment):
            continue
        t_in, t_out = _segment_box_window(seg, eta_box, orbit.flow)
        t_out = min(t_out, up_to - seg.t0)
        if t_out > t_in:
            total += t_out - t_in
    return total


# ---------------------------------------------------------------------------
# CSV export.
# ---------------------------------------------------------------------------

def orbit_csv_lines(orbit: HybridOrbit, header_meta: Optional[dict] = None) -> list[str]:
    """Orbit dump rows: t_start, t_end, kind, x_entry, y_entry, z_entry.

    Doubles are written with 17 significant digits; arbitrary-precision
    section coordinates (when retained) are written in full decimal, and the
    header flags which convention applies.
    """
    lines = []
    meta = dict(header_meta or {})
    meta.setdefault("schema", "lhw-orbit-1")
    meta.setdefault("bigreal_x", orbit.xs is not None)
    for k in sorted(meta):
        lines.append(f"# {k} = {meta[k]}")
    lines.append("t_start,t_end,kind,x_entry,y_entry,z_entry")
    xi = 0
    for seg in orbit.segments:
        if isinstance(seg, LinearSegment):
            if orbit.xs is not None and xi < len(orbit.xs):
                x_str = orbit.xs[xi].to_decimal_string()
            else:
                x_str = _fmt(seg.sign_x * math.exp(seg.log_abs_x))
            lines.append(
                f"{_fmt(seg.t0)},{_fmt(seg.t0 + seg.duration)},linear,"
                f"{x_str},{_fmt(seg.y_entry)},{_fmt(seg.z_entry)}"
            )
        elif isinstance(seg, OutsideSegment):
            lines.append(
                f"{_fmt(seg.t0)},{_fmt(seg.t0 + seg.duration)},outside,,,"
            )
        else:
            lines.append(
                f"{_fmt(seg.t0)},inf,periodic,{_fmt(seg.section_x)},,"
            )
        if isinstance(seg, OutsideSegment):
            xi += 1
    return lines


def _fmt(v: float) -> str:
    return format(v, ".17g")
