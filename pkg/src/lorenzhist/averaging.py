"""Time integrals of the observable along hybrid orbits, and the average curve.

The observable vanishes on outside excursions and on periodic tails, so the
integral only accumulates on linear descent segments.  There the integrand is
a product of tent profiles composed with exponentials: piecewise smooth with
kinks exactly where |x|, |y| or z crosses eta or 2*eta.  Those crossing times
are solved in closed form and adaptive Simpson handles each smooth piece.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Optional

from .errors import HorizonError
from .geometry import BoxSpec
from .semiflow import FlowParams, HybridOrbit, LinearSegment

LN2 = math.log(2.0)

QUAD_ABS_TOL = 1e-10


def _w_of_logratio(a: float) -> float:
    """Tent profile evaluated at e^a: 1 for a <= 0, 2 - e^a up to ln 2, 0 after."""
    if a <= 0.0:
        return 1.0
    if a >= LN2:
        return 0.0
    return 2.0 - math.exp(a)


def _segment_integrand(seg: LinearSegment, fp: FlowParams, eta: float):
    """g along the segment as a function of local time, overflow-safe."""
    ln_eta = math.log(eta)
    ax0 = seg.log_abs_x - ln_eta
    ay0 = (math.log(abs(seg.y_entry)) - ln_eta) if seg.y_entry != 0.0 else -math.inf
    az0 = (math.log(seg.z_entry) - ln_eta) if seg.z_entry > 0.0 else -math.inf

    def g(t: float) -> float:
        wx = _w_of_logratio(ax0 + fp.lam * t)
        if wx == 0.0:
            return 0.0
        wy = _w_of_logratio(ay0 - fp.mu * t) if ay0 != -math.inf else 1.0
        wz = _w_of_logratio(az0 - fp.nu * t) if az0 != -math.inf else 1.0
        return wx * wy * wz

    return g


def _kink_times(seg: LinearSegment, fp: FlowParams, eta: float, t_hi: float) -> list[float]:
    """Local times in (0, t_hi) where a tent factor changes piece."""
    ln_eta = math.log(eta)
    ts = []
    for mult in (0.0, LN2):  # crossings of eta and 2*eta
        # |x| grows: a_x(t) = 0 or ln2
        t = (ln_eta + mult - seg.log_abs_x) / fp.lam
        if 0.0 < t < t_hi:
            ts.append(t)
        if seg.y_entry != 0.0:
            t = (math.log(abs(seg.y_entry)) - ln_eta - mult) / fp.mu
            if 0.0 < t < t_hi:
                ts.append(t)
        if seg.z_entry > 0.0:
            t = (math.log(seg.z_entry) - ln_eta - mult) / fp.nu
            if 0.0 < t < t_hi:
                ts.append(t)
    return sorted(set(ts))


def _adaptive_simpson(g, a: float, b: float, tol: float) -> float:
    fa, fb = g(a), g(b)
    m = 0.5 * (a + b)
    fm = g(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_rec(g, a, b, fa, fb, m, fm, whole, tol, 50)

def _simpson_rec(g, a, b, fa, fb, m, fm, whole, tol, depth) -> float:
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = g(lm), g(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    half = 0.5 * tol
    return (
        _simpson_rec(g, a, m, fa, fm, lm, flm, left, half, depth - 1)
        + _simpson_rec(g, m, b, fm, fb, rm, frm, right, half, depth - 1)
    )


def integrate_segment_g(
    seg: LinearSegment, fp: FlowParams, b: BoxSpec, up_to_local: Optional[float] = None
) -> float:
    """Integral of g over one linear segment (or its initial part)."""
    t_hi = seg.duration if up_to_local is None else min(up_to_local, seg.duration)
    if t_hi <= 0.0:
        return 0.0
    # |x| only grows, so a segment entered outside the support stays outside
    if seg.log_abs_x >= math.log(2.0 * b.eta):
        return 0.0
    g = _segment_integrand(seg, fp, b.eta)
    cuts = [0.0] + _kink_times(seg, fp, b.eta, t_hi) + [t_hi]
    total = 0.0
    for a, c in zip(cuts, cuts[1:]):
        if c - a <= 0:
            continue
        ga, gc = g(a), g(0.5 * (a + c))
        if ga == 0.0 and gc == 0.0 and g(c) == 0.0:
            continue
        if ga == 1.0 and gc == 1.0 and g(c) == 1.0:
            total += c - a  # plateau piece, exact
            continue
        total += _adaptive_simpson(g, a, c, QUAD_ABS_TOL)
    return total


@dataclass
class _OrbitIntegralCache:
    boundaries: list[float]
    cumulative: list[float]  # integral of g up to each boundary


def _cache_for(orbit: HybridOrbit, b: BoxSpec) -> _OrbitIntegralCache:
    # cached on the orbit object itself, keyed by the box scale
    store = getattr(orbit, "_g_caches", None)
    if store is None:
        store = {}
        object.__setattr__(orbit, "_g_caches", store)
    cache = store.get(b.eta)
    if cache is not None:
        return cache
    bounds = [0.0]
    cum = [0.0]
    total = 0.0
    for seg in orbit.segments:
        end = seg.t0 + seg.duration if not _is_tail(seg) else seg.t0
        if isinstance(seg, LinearSegment):
            total += integrate_segment_g(seg, orbit.flow, b)
        bounds.append(end)
        cum.append(total)
        if _is_tail(seg):
            break
    cache = _OrbitIntegralCache(boundaries=bounds, cumulative=cum)
    store[b.eta] = cache
    return cache


def _is_tail(seg) -> bool:
    return getattr(seg, "kind", "") == "periodic"


def integrate_g(orbit: HybridOrbit, t: float, b: BoxSpec) -> float:
    """Integral of g over [0, t] along the orbit.

    Exact zero on outside excursions and the periodic tail; within-tolerance
    quadrature on descent segments.  Monotone nondecreasing in t.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t > orbit.horizon + 1e-9:
        raise HorizonError(f"t = {t} beyond orbit horizon {orbit.horizon}")
    cache = _cache_for(orbit, b)
    i = bisect_left(cache.boundaries, t)
    if i >= len(cache.boundaries):
        return cache.cumulative[-1]
    if cache.boundaries[i] == t:
        return cache.cumulative[i]
    # t falls inside segment i-1
    base = cache.cumulative[max(i - 1, 0)]
    seg = orbit.segments[max(i - 1, 0)] if i - 1 < len(orbit.segments) else None
    if isinstance(seg, LinearSegment):
        base += integrate_segment_g(seg, orbit.flow, b, up_to_local=t - seg.t0)
    return base


def time_average(orbit: HybridOrbit, t: float, b: BoxSpec) -> float:
    """A(t) = (1/t) * integral of g over [0, t]; in [0, 1]."""
    if t <= 0:
        raise ValueError("time average needs t > 0")
    return integrate_g(orbit, t, b) / t


@dataclass(frozen=True)
class TimeAverageSeries:
    """Sampled average curve; times strictly increasing, values in [0, 1]."""

    samples: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ts = [s[0] for s in self.samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("sample times must be strictly increasing")
        if any(not 0.0 <= a <= 1.0 + 1e-12 for _, a in self.samples):
            raise ValueError("averages must lie in [0, 1]")

    def times(self) -> list[float]:
        return [t for t, _ in self.samples]

    def values(self) -> list[float]:
        return [a for _, a in self.samples]

    def horizon(self) -> float:
        return self.samples[-1][0]


def average_series(
    orbit: HybridOrbit, grid: int, b: BoxSpec, horizon: Optional[float] = None
) -> TimeAverageSeries:
    """Average curve sampled at all event and box-crossing times plus a
    uniform grid of the requested size."""
    end = horizon
    if end is None:
        end = orbit.horizon if math.isfinite(orbit.horizon) else orbit.segments[-1].t0 * 5.0
    times = set()
    for seg in orbit.segments:
        if seg.t0 > 0.0:
            times.add(seg.t0)
        if _is_tail(seg):
            break
        seg_end = seg.t0 + seg.duration
        if 0.0 < seg_end <= end:
            times.add(seg_end)
        if isinstance(seg, LinearSegment):
            for tk in _kink_times(seg, orbit.flow, b.eta, seg.duration):
                if 0.0 < seg.t0 + tk <= end:
                    times.add(seg.t0 + tk)
    for i in range(1, grid + 1):
        times.add(end * i / grid)
    times = sorted(t for t in times if 0.0 < t <= end)
    samples = tuple((t, min(1.0, max(0.0, time_average(orbit, t, b)))) for t in times)
    return TimeAverageSeries(samples=samples)


def detect_historic(
    series: TimeAverageSeries, tau: float, delta: float
) -> Optional[tuple[float, float]]:
    """First pair of sample times >= tau whose averages differ by >= delta.

    Returns (time of the larger average, time of the smaller), or None.
    A None result is a value, not an error.
    """
    best_hi: Optional[tuple[float, float]] = None
    best_lo: Optional[tuple[float, float]] = None
    for t, a in series.samples:
        if t < tau:
            continue
        if best_hi is None or a > best_hi[1]:
            best_hi = (t, a)
        if best_lo is None or a < best_lo[1]:
            best_lo = (t, a)
        if best_hi is not None and best_lo is not None:
            if best_hi[1] - best_lo[1] >= delta:
                return (best_hi[0], best_lo[0])
    return None


def series_csv_lines(series: TimeAverageSeries, header_meta: Optional[dict] = None) -> list[str]:
    """CSV rows `t,A` with 17 significant digits and a parameter header."""
    lines = []
    meta = dict(header_meta or {})
    meta.setdefault("schema", "lhw-series-1")
    for k in sorted(meta):
        lines.append(f"# {k} = {meta[k]}")
    lines.append("t,A")
    for t, a in series.samples:
        lines.append(f"{format(t, '.17g')},{format(a, '.17g')}")
    return lines
