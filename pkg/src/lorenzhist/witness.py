"""Constructs and verifies neighborhoods with certified average separation.

Given a base point, a time threshold N and a scale eps, the construction
produces an open product neighborhood on the section together with two times
tau0 < tau1, both at least N, such that the running time average of the bump
observable is at least 3/4 at tau0 and at most 1/5 at tau1 along the center
orbit, with a gap of at least 1/2 at a 3x3 grid of sampled neighbors.  The
certificate records every quantity needed for independent re-verification.

The chain of stages: pick the exponent sigma from the outside-time bound;
iterate the eps-interval until its image covers 0; pull a target interval of
scale eps^sigma back into it; locate a preimage of the period-two point
inside the target by breadth-first covering; refine so no intermediate image
meets 0; pull everything back to the base scale; assemble the orbit with an
exact periodic tail and integrate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from mpmath import mpf, workprec

from .bigreal import BigInterval, BigReal
from .errors import ConstructionError, PreimageNotFoundError
from .geometry import BoxSpec, SigmaPoint
from .map1d import (
    DEFAULT_MAP,
    Itinerary,
    MapParams,
    alpha_mpf,
    branch_inverse_mpf,
    find_period2,
    find_preimage_in,
    log2_alpha_prime_float,
    n0_ceiling,
    pullback_interval,
    refine_J1,
    smallest_n0,
)
from .semiflow import (
    DEFAULT_FLOW,
    FlowParams,
    HybridOrbit,
    build_orbit_from_records,
    exit_and_descent_times,
    time_in_region,
)
from .averaging import (
    TimeAverageSeries,
    average_series,
    integrate_segment_g,
    time_average,
)
from .semiflow import LinearSegment

LN2 = math.log(2.0)
SCHEMA_VERSION = "lhw-1"


@dataclass(frozen=True)
class WitnessSettings:
    """Knobs of the construction; defaults reproduce the headline runs."""

    map_params: MapParams = DEFAULT_MAP
    flow_params: FlowParams = DEFAULT_FLOW
    box: BoxSpec = BoxSpec()
    mode: str = "strict"          # 'strict' or 'relaxed'
    margin: float = 3.0           # >= 1.1; forced to 3 in strict mode
    precision_override: Optional[int] = None
    n_max_preimage: int = 400_000
    max_shrinks: int = 24
    shadow_ratio: Optional[float] = None  # e.g. 0.22 when deepening
    shadow_prefix_hint: Optional[tuple[float, float]] = None  # (time, integral)
    sample_grid: int = 3

    def __post_init__(self):
        if self.mode not in ("strict", "relaxed"):
            raise ValueError("mode must be 'strict' or 'relaxed'")
        if self.mode == "relaxed" and not self.margin >= 1.1:
            raise ValueError("relaxed margin must be >= 1.1")

    @property
    def effective_margin(self) -> float:
        return 3.0 if self.mode == "strict" else self.margin


@dataclass(frozen=True)
class SampleRecord:
    """One sampled neighbor and its averages at the shared times."""

    x_dec: str
    x_bits: int
    y: float
    a0: float
    a1: float

    @property
    def gap(self) -> float:
        return self.a0 - self.a1


@dataclass(frozen=True)
class WitnessCertificate:
    schema: str
    x0: float
    y0_in: float
    N: int
    eps: float
    mode: str
    margin: float
    sigma: float
    n0: int
    n1: int
    J0: BigInterval
    J1: BigInterval
    K: BigInterval
    q: BigReal
    y0: SigmaPoint
    neighborhood_x: BigInterval
    neighborhood_y: tuple[float, float]
    tau0: float
    tau1: float
    tau4: float
    A0: float
    A1: float
    C_used: float
    precision_bits: int
    working_bits: int
    mirrored: bool
    samples: tuple[SampleRecord, ...]
    audit_tau_y1y2: float
    audit_tau_y2y3: float
    audit_outside_n0: float
    audit_margin_ratio: float   # tau_y2y3 / (outside_n0 + tau_y1y2)
    audit_inside_ratio: float   # tau0 / time inside Pi(eta) up to tau0
    residual_log2: float        # forward residual bound at the tail anchor
    map_rho: float
    map_c: float
    flow_lam: float
    flow_mu: float
    flow_nu: float
    flow_t_out: float
    eta: float
    eps_log2: float = 0.0            # log2(eps); authoritative for tiny eps
    x0_exact: Optional[BigReal] = None  # exact center when x0 is not a double
    eps_exact: Optional[BigReal] = None  # exact eps when below double range
    tail_shadow_bits: float = 0.0    # extra ball bits from the tail shadow

    def center_gap(self) -> float:
        return self.A0 - self.A1

    def min_sample_gap(self) -> float:
        return min(s.gap for s in self.samples)


@dataclass(frozen=True)
class WitnessResult:
    """Certificate plus in-memory artifacts (orbit, series) for callers."""

    certificate: WitnessCertificate
    orbit: HybridOrbit
    settings: WitnessSettings

    def series(self, grid: int = 400) -> TimeAverageSeries:
        return average_series(
            self.orbit, grid, self.settings.box, horizon=self.certificate.tau1
        )


class EpsScale:
    """An eps that may be far below double underflow.

    Carries the natural log of 1/eps (a tame double) plus an exact handle
    for constructing eps^sigma and the base interval at working precision.
    """

    def __init__(self, eps):
        if isinstance(eps, BigReal):
            if not eps.sign() > 0:
                raise ValueError("eps must be positive")
            self.log_inv = -eps.log_abs()
            self._big = eps
            self.float_value = eps.to_float()[0]
        else:
            eps = float(eps)
            if not 0.0 < eps:
                raise ValueError("eps must be positive")
            self.log_inv = -math.log(eps)
            self._big = None
            self.float_value = eps
        if not self.log_inv > 0.0:
            raise ValueError("eps must lie in (0, 1)")

    @property
    def log2(self) -> float:
        return -self.log_inv / LN2

    def as_mpf(self, prec: int) -> mpf:
        with workprec(prec):
            if self._big is not None:
                return mpf(self._big.value)
            return mpf(self.float_value)

    def ln_mpf(self, prec: int) -> mpf:
        from mpmath import log as mp_log
        with workprec(prec):
            return mp_log(self.as_mpf(prec))

    def exact_big(self) -> Optional[BigReal]:
        return self._big


def _sigma_from_logs(
    N: int, log_inv_eps: float, fp: FlowParams, b: BoxSpec, C: float, margin: float
) -> float:
    rhs = max(
        float(N),
        2.0 * margin * C * log_inv_eps / LN2
        + (margin + 1.0) * math.log(1.0 / b.eta) / fp.nu,
    )
    ln_eta = math.log(b.eta)
    return max(
        1.0,
        (fp.lam * rhs - ln_eta) / log_inv_eps,
        2.0 * (-ln_eta) / log_inv_eps,
        (1.0 + fp.lam / fp.nu) * (-ln_eta) / log_inv_eps,
    )


def choose_sigma(
    N: int,
    eps,
    fp: FlowParams = DEFAULT_FLOW,
    b: BoxSpec = BoxSpec(),
    C: Optional[float] = None,
    margin: float = 3.0,
) -> float:
    """Smallest admissible descent exponent.

    Requires (1/lambda)(sigma log(1/eps) + log eta) to dominate both N and
    2*margin*C*log(1/eps)/log 2 + (margin+1)*log(1/eta)/nu, plus the
    top-face entry condition eps^sigma <= eta^2 (and its general-rate form),
    and sigma >= 1.
    """
    scale = EpsScale(eps)
    if not (isinstance(eps, BigReal) or 0.0 < float(eps) < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    if C is None:
        C = fp.outside_time_bound(b.eta)
    return _sigma_from_logs(N, scale.log_inv, fp, b, C, margin)


# ---------------------------------------------------------------------------
# Internal: scheduled-precision forward iteration and sample integration.
# ---------------------------------------------------------------------------

def _forward_records(
    x: mpf,
    steps: int,
    suffix_bits: list[float],
    base_bits: int,
    p: MapParams,
) -> tuple[list[tuple[int, float]], mpf]:
    """Iterate the 1D map `steps` times, recording (sign, ln|x|) per step.

    The working precision at step k is base_bits plus the remaining
    amplification, so rounding injected at any step stays below the target
    resolution at the end of the leg.
    """
    records: list[tuple[int, float]] = []
    cur = x
    for k in range(steps):
        prec = base_bits + int(suffix_bits[k]) + 96 if suffix_bits else base_bits
        with workprec(max(prec, 64)):
            b = BigReal(cur, max(prec, 64))
            records.append((b.sign(), b.log_abs()))
            cur = alpha_mpf(cur, p)
    return records, cur


class _RunningAverages:
    """Incremental integral of g along a streamed orbit, with checkpoints.

    Feeds one return at a time (a possible linear descent plus the outside
    hop); maintains one y per requested y-start.  Values of the integral at
    the checkpoint times are captured as they are passed.
    """

    def __init__(self, fp: FlowParams, box: BoxSpec, y_starts: list[float],
                 checkpoints: list[float]):
        self.fp = fp
        self.box = box
        self.ys = list(y_starts)
        self.checks = sorted(checkpoints)
        self.t = 0.0
        self.totals = [0.0] * len(y_starts)
        self.captured: list[list[Optional[float]]] = [
            [None] * len(self.checks) for _ in y_starts
        ]
        self.ln_side = math.log(fp.x_side)
        self.ln_supp = math.log(2.0 * box.eta)

    def _capture(self, t_end: float, partial_fn=None):
        for ci, tc in enumerate(self.checks):
            if self.t < tc <= t_end:
                for yi in range(len(self.ys)):
                    extra = partial_fn(tc - self.t, yi) if partial_fn else 0.0
                    self.captured[yi][ci] = self.totals[yi] + extra

    def feed_return(self, sign: int, ln_x: float):
        fp = self.fp
        if ln_x <= self.ln_side:
            dur = (self.ln_side - ln_x) / fp.lam
            if dur > 0:
                segs = [
                    LinearSegment(t0=self.t, duration=dur, sign_x=sign,
                                  log_abs_x=ln_x, y_entry=y, z_entry=1.0)
                    for y in self.ys
                ]
                if ln_x < self.ln_supp:
                    def partial(up_to, yi):
                        return integrate_segment_g(
                            segs[yi], fp, self.box, up_to_local=up_to)
                    self._capture(self.t + dur, partial)
                    for yi in range(len(self.ys)):
                        self.totals[yi] += integrate_segment_g(segs[yi], fp, self.box)
                else:
                    self._capture(self.t + dur)
                self.t += dur
        self._capture(self.t + fp.t_out)
        self.t += fp.t_out
        # y update through the return
        arg = fp.s_ratio * ln_x
        xs_pow = math.exp(arg) if arg > -745.0 else 0.0
        self.ys = [xs_pow * y * 0.25 + sign * (1.0 - xs_pow) / 2.0 for y in self.ys]

    def done(self) -> bool:
        return all(v is not None for row in self.captured for v in row)


def _sample_averages(
    x_sample: mpf,
    hp_steps: int,
    suffix_bits: list[float],
    base_bits: int,
    tail_prec: int,
    p2_hi: mpf,
    tau0: float,
    tau1: float,
    y_starts: list[float],
    p: MapParams,
    fp: FlowParams,
    box: BoxSpec,
    known_records: Optional[list[tuple[int, float]]] = None,
) -> list[tuple[float, float]]:
    """Averages A(tau0), A(tau1) for one sampled x and several y starts.

    Three legs: the arbitrary-precision leg to the tail index (scheduled
    precision; skipped when the caller already has its crossing records),
    a tail-shadow leg at offset-resolving precision until the orbit
    separates from the period-two cycle by a double-visible amount, then
    plain doubles to the horizon.
    """
    acc = _RunningAverages(fp, box, y_starts, [tau0, tau1])
    cur = x_sample
    if known_records is not None:
        for sign, ln_x in known_records[:hp_steps]:
            acc.feed_return(sign, ln_x)
            if acc.t > tau1 and acc.done():
                break
        # the known center lands exactly on the anchor; the exact periodic
        # tail never meets the support, so remaining checkpoints freeze
        for yi in range(len(y_starts)):
            for ci in range(len(acc.checks)):
                if acc.captured[yi][ci] is None:
                    acc.captured[yi][ci] = acc.totals[yi]
        return [
            (acc.captured[yi][0] / tau0, acc.captured[yi][1] / tau1)
            for yi in range(len(y_starts))
        ]
    for k in range(hp_steps):
        prec = base_bits + int(suffix_bits[k]) + 96 if suffix_bits else base_bits
        with workprec(max(prec, 64)):
            b = BigReal(cur, max(prec, 64))
            acc.feed_return(b.sign(), b.log_abs())
            cur = alpha_mpf(cur, p)
        if acc.t > tau1 and acc.done():
            break
    # tail-shadow leg: resolve the offset from the cycle until it is
    # double-visible, then drop to floats
    guard = 0
    with workprec(tail_prec):
        cur = mpf(cur)
        while acc.t <= tau1 and guard < 10_000_000:
            dist = abs(abs(cur) - p2_hi)
            if dist > mpf(2.0) ** -40:
                break
            b = BigReal(cur, tail_prec)
            acc.feed_return(b.sign(), b.log_abs())
            cur = alpha_mpf(cur, p)
            guard += 1
    x_f = float(cur)
    while acc.t <= tau1:
        if x_f == 0.0:
            raise ConstructionError("sample orbit hit the section line exactly")
        sign = 1 if x_f > 0 else -1
        acc.feed_return(sign, math.log(abs(x_f)))
        if x_f > 0:
            x_f = (1.0 + p.c) * x_f ** p.rho - 1.0
        else:
            x_f = 1.0 - (1.0 + p.c) * (-x_f) ** p.rho
    out = []
    for yi in range(len(y_starts)):
        g0, g1 = acc.captured[yi][0], acc.captured[yi][1]
        if g0 is None or g1 is None:
            raise ConstructionError("sample integration missed a checkpoint")
        out.append((g0 / tau0, g1 / tau1))
    return out


# ---------------------------------------------------------------------------
# Construction.
# ---------------------------------------------------------------------------

def construct_witness(
    x0,
    N: int,
    eps,
    settings: WitnessSettings = WitnessSettings(),
    y0: float = 0.0,
    y_halfwidth: Optional[float] = None,
) -> WitnessResult:
    p = settings.map_params
    fp = settings.flow_params
    box = settings.box
    scale = EpsScale(eps)
    if not isinstance(eps, BigReal) and not 0.0 < float(eps) < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if isinstance(x0, BigReal):
        x0_big = x0
        x0_float = x0.float_approx()
    else:
        x0_big = None
        x0_float = float(x0)
    if x0_float == 0.0 and (x0_big is None or x0_big.sign() == 0):
        raise ValueError("x0 = 0 lies on the section's singular line")
    if not -1.0 <= x0_float <= 1.0:
        raise ValueError("x0 must lie in [-1, 1]")
    if not abs(y0) < 1.0:
        raise ValueError("y0 must lie in (-1, 1)")
    if N < 1:
        raise ValueError("N must be a positive integer")
    p2_probe = find_period2(p, 64)
    box.validate_against_period2(p2_probe.float_approx())

    margin = settings.effective_margin
    C = fp.outside_time_bound(box.eta)
    sigma = _sigma_from_logs(N, scale.log_inv, fp, box, C, margin)
    log2_inv_eps = -scale.log2

    # -- phase 0: cheap pre-pass for n0 and the lap amplification ---------
    prec_pre = max(192, int(math.ceil(log2_inv_eps)) + 160)
    I_pre = _base_interval(x0_big, x0_float, scale, prec_pre)
    n0, images_pre, it0 = smallest_n0(I_pre, p)
    amp0_steps = [
        float(images_pre[k + 1].length().log2_abs() - images_pre[k].length().log2_abs())
        for k in range(n0)
    ]
    amp0 = sum(amp0_steps)
    declared = settings.precision_override or (
        int(math.ceil(sigma * log2_inv_eps)) + int(math.ceil(max(amp0, 0.0))) + 64
    )

    # -- phase 1: covering search at declared precision -------------------
    P1 = declared + 64
    I1 = _base_interval(x0_big, x0_float, scale, P1)
    n0_1, images1, it0_1 = smallest_n0(I1, p)
    if n0_1 != n0 or it0_1.signs != it0.signs:
        n0, it0 = n0_1, it0_1  # the higher-precision pass wins
        amp0_steps = [
            float(images1[k + 1].length().log2_abs() - images1[k].length().log2_abs())
            for k in range(n0)
        ]
        amp0 = sum(amp0_steps)
    K1, mirrored = _target_interval(images1[-1], scale, sigma, P1)
    p2_P1 = find_period2(p, P1)
    target_P1 = -p2_P1 if mirrored else p2_P1
    try:
        pre = find_preimage_in(target_P1, K1, p, n_max=settings.n_max_preimage)
    except PreimageNotFoundError:
        pre = find_preimage_in(target_P1, K1, p, n_max=4 * settings.n_max_preimage)
    n1 = pre.n1

    # -- phase 2: full-precision pullback ---------------------------------
    # when a tail shadow is requested, the anchor residual (hence the
    # working precision) must additionally cover the shadow depth, which is
    # only measured later; estimate it up front and retry if it was short
    amp_total = amp0 + pre.amp_bits
    ball_est = 0.0
    if settings.shadow_ratio is not None:
        ball_est = _shadow_bits_estimate(
            sigma, scale.log_inv, n0, pre, settings.shadow_ratio,
            settings.shadow_prefix_hint, fp, box, p,
        )
    working = declared + int(math.ceil(max(amp_total, 0.0) + ball_est)) + 128
    p2_hi = find_period2(p, working)
    anchor = (-p2_hi).value if mirrored else p2_hi.value
    it_full = it0 + pre.itinerary
    suffix = _suffix_bits(amp0_steps, pre.path_log2, p)

    records, x_chain = _pullback_records(
        anchor, it_full, suffix, declared + int(math.ceil(ball_est)), p, keep={0, n0}
    )
    y0x = x_chain[0]
    q2 = x_chain[n0]

    K = _target_at(scale, sigma, mirrored, working)
    J0 = pullback_interval(K, it0, p) if n0 > 0 else K
    q_big = BigReal(q2, working)
    J1, r_ball = refine_J1(
        q_big, n1, K, p,
        itinerary=pre.itinerary,
        piece_image=BigInterval(
            BigReal.from_number(pre.piece_image.lo.value, working),
            BigReal.from_number(pre.piece_image.hi.value, working),
        ),
        target=BigReal(anchor, working),
    )
    W_full = pullback_interval(J1, it0, p) if n0 > 0 else J1
    y0x_big = BigReal(y0x, working)
    if not W_full.contains_interior(y0x_big):
        raise ConstructionError("pullback center escaped its neighborhood")

    # -- center orbit with exact periodic tail ----------------------------
    tail_sign = -1 if mirrored else 1
    records_tail = records + [(tail_sign, float(p2_hi.log_abs()))]
    orbit = build_orbit_from_records(
        records_tail, y0, fp, p, tail_at=n0 + n1, start_x=y0x_big
    )
    T_n0 = orbit.crossings[n0].t
    dt = exit_and_descent_times(q_big, fp, box.eta)
    if not dt.y2_exists:
        raise ConstructionError("descent misses the top face; sigma too small")
    tau0 = T_n0 + dt.t_side
    tau4 = orbit.tail.t0
    tau1 = 5.0 * tau4
    if not (tau1 > tau0 > float(N)):
        raise ConstructionError("time ordering tau1 > tau0 > N failed")

    inside_eta_tau0 = time_in_region(orbit, box.eta, tau0)
    outside_n0 = T_n0 - time_in_region(orbit, box.eta, T_n0)
    tau_y1y2 = dt.t_top
    tau_y2y3 = dt.t_side - dt.t_top
    audit_margin_ratio = tau_y2y3 / (outside_n0 + tau_y1y2)
    audit_inside_ratio = tau0 / inside_eta_tau0

    A0 = time_average(orbit, tau0, box)
    A1 = time_average(orbit, tau1, box)
    bound0 = margin / (margin + 1.0)
    if A0 < bound0 - 1e-9:
        raise ConstructionError(f"center average {A0} below the bound {bound0}")
    if A1 > 0.2 + 1e-12:
        raise ConstructionError(f"tail average {A1} above 1/5")

    # -- optional tail-shadow shrink (used by deepening) -------------------
    # neighbors must keep following the periodic tail until the running
    # average has sunk below the requested ratio; the neighborhood is cut
    # to a ball whose image at the anchor is exponentially small in the
    # required shadow length
    W = W_full
    ball_bits = 0.0
    if settings.shadow_ratio is not None:
        g4 = A1 * tau1
        t_dep = g4 / settings.shadow_ratio
        hop = orbit.tail.period / 2.0
        extra_returns = max(0.0, (t_dep - tau4) / hop)
        lyap_tail = log2_alpha_prime_float(math.log2(p2_hi.float_approx()), p)
        ball_bits = extra_returns * lyap_tail + 24.0
        if ball_bits > ball_est:
            raise ConstructionError(
                f"shadow estimate too small: need {ball_bits:.0f} bits, "
                f"reserved {ball_est:.0f}"
            )
        with workprec(working):
            h = mpf(2.0) ** (-(mpf(ball_bits) + mpf(amp_total) + 32))
            W_centered = BigInterval(
                BigReal(y0x - h, working), BigReal(y0x + h, working)
            )
        try:
            W = W_centered.intersect(W_full)
        except ValueError:
            W = W_centered

    # -- sampling loop -----------------------------------------------------
    if y_halfwidth is not None:
        ry = y_halfwidth
    else:
        ry = 0.45 * min(scale.float_value if scale.float_value > 0 else 1.0,
                        1.0 - abs(y0))
    y_lo, y_hi = y0 - ry, y0 + ry
    y_samples = [y0 - 0.9 * ry, y0, y0 + 0.9 * ry]
    tail_prec = int(ball_bits) + 160
    samples: tuple[SampleRecord, ...] = ()
    Wx = W
    for attempt in range(settings.max_shrinks):
        try:
            samples = _run_samples(
                Wx, y_samples, records, suffix, declared, tail_prec,
                p2_hi, tau0, tau1, n0 + n1, p, fp, box, center_x=y0x_big,
            )
        except ConstructionError:
            samples = ()
        if samples and min(s.gap for s in samples) >= 0.5:
            break
        Wx = _shrink_toward(Wx, y0x_big, 16.0)
        samples = ()
    if not samples:
        raise ConstructionError(
            f"no neighborhood with gap >= 1/2 after {settings.max_shrinks} shrinks"
        )

    cert = WitnessCertificate(
        schema=SCHEMA_VERSION,
        x0=x0_float,
        y0_in=y0,
        N=N,
        eps=scale.float_value,
        mode=settings.mode,
        margin=margin,
        sigma=sigma,
        n0=n0,
        n1=n1,
        J0=J0,
        J1=J1,
        K=K,
        q=q_big,
        y0=SigmaPoint(y0x_big, y0),
        neighborhood_x=Wx,
        neighborhood_y=(y_lo, y_hi),
        tau0=tau0,
        tau1=tau1,
        tau4=tau4,
        A0=A0,
        A1=A1,
        C_used=C,
        precision_bits=declared,
        working_bits=working,
        mirrored=mirrored,
        samples=samples,
        audit_tau_y1y2=tau_y1y2,
        audit_tau_y2y3=tau_y2y3,
        audit_outside_n0=outside_n0,
        audit_margin_ratio=audit_margin_ratio,
        audit_inside_ratio=audit_inside_ratio,
        residual_log2=-(declared + 32.0),
        map_rho=p.rho,
        map_c=p.c,
        flow_lam=fp.lam,
        flow_mu=fp.mu,
        flow_nu=fp.nu,
        flow_t_out=fp.t_out,
        eta=box.eta,
        eps_log2=scale.log2,
        x0_exact=x0_big,
        eps_exact=scale.exact_big(),
        tail_shadow_bits=ball_bits,
    )
    return WitnessResult(certificate=cert, orbit=orbit, settings=settings)


def _base_interval(x0_big, x0_float: float, scale: EpsScale, prec: int) -> BigInterval:
    with workprec(prec):
        center = x0_big.value if x0_big is not None else mpf(x0_float)
        r = scale.as_mpf(prec)
        lo = center - r
        hi = center + r
        lo = lo if lo > -1 else mpf(-1)
        hi = hi if hi < 1 else mpf(1)
    return BigInterval(BigReal(lo, prec), BigReal(hi, prec))


def _eps_sigma_mpf(scale: EpsScale, sigma: float, prec: int) -> mpf:
    from mpmath import exp as mp_exp
    with workprec(prec):
        return mp_exp(mpf(sigma) * scale.ln_mpf(prec))


def _target_at(scale: EpsScale, sigma: float, mirrored: bool, prec: int) -> BigInterval:
    eps_sigma = _eps_sigma_mpf(scale, sigma, prec)
    with workprec(prec):
        if mirrored:
            return BigInterval(BigReal(-eps_sigma, prec), BigReal(-eps_sigma / 2, prec))
        return BigInterval(BigReal(eps_sigma / 2, prec), BigReal(eps_sigma, prec))


def _target_interval(final_image: BigInterval, scale: EpsScale, sigma: float, prec: int):
    """The scale-eps^sigma interval covered by the final interval image.

    The image contains 0 and has length at least 2*eps >= 2*eps^sigma, so
    one side reaches past eps^sigma; the side with more room wins (a
    symmetric rule, so mirrored inputs give exactly mirrored certificates;
    the map's oddness makes the mirrored construction exact).
    """
    eps_sigma = _eps_sigma_mpf(scale, sigma, prec)
    with workprec(prec):
        pos_ok = final_image.hi.value >= eps_sigma
        neg_ok = final_image.lo.value <= -eps_sigma
        if pos_ok and (not neg_ok or final_image.hi.value >= -final_image.lo.value):
            return _target_at(scale, sigma, False, prec), False
        if neg_ok:
            return _target_at(scale, sigma, True, prec), True
    raise ConstructionError("covering image reaches neither target side")


def _suffix_bits(
    amp0_steps: list[float], path_log2: tuple[float, ...], p: MapParams
) -> list[float]:
    """Remaining log2 amplification after each step of the combined lap."""
    per_step = list(amp0_steps) + [
        log2_alpha_prime_float(l2, p) for l2 in path_log2[:-1]
    ]
    suffix = [0.0] * (len(per_step) + 1)
    for i in range(len(per_step) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + max(per_step[i], 0.0)
    return suffix


def _pullback_records(
    anchor: mpf,
    it_full: Itinerary,
    suffix: list[float],
    declared: int,
    p: MapParams,
    keep: set[int],
) -> tuple[list[tuple[int, float]], dict[int, mpf]]:
    """Pull the anchor back through the whole lap with scheduled precision.

    Returns per-step (sign, ln|x|) records (forward order) and the chain
    values at the requested indices (memory stays bounded: the full chain
    at working precision would be large for deep laps).
    """
    n = len(it_full)
    signs = tuple(it_full)
    records: list[Optional[tuple[int, float]]] = [None] * n
    chain: dict[int, mpf] = {}
    cur = anchor
    if n in keep:
        chain[n] = cur
    for k in range(n - 1, -1, -1):
        prec = declared + int(suffix[k]) + 128
        with workprec(prec):
            cur = branch_inverse_mpf(cur, signs[k], p)
            b = BigReal(cur, prec)
            if b.sign() != signs[k]:
                raise ConstructionError("pullback left its branch")
            records[k] = (signs[k], b.log_abs())
            if k in keep:
                chain[k] = cur
    return [r for r in records if r is not None], chain


def _shadow_bits_estimate(
    sigma: float,
    log_inv_eps: float,
    n0: int,
    pre,
    ratio: float,
    hint: Optional[tuple[float, float]],
    fp: FlowParams,
    box: BoxSpec,
    p: MapParams,
) -> float:
    """Upper estimate of the tail-shadow depth in bits.

    The departure from the periodic tail must wait until the running
    average G/t has sunk below `ratio`; the needed extra returns follow
    from the orbit's integral G and time tau4 at the anchor.  The descent
    and the preimage leg are priced exactly from the covering path; the
    pre-descent prefix comes from the caller's hint (the previous chain
    level) or a coarse allowance.
    """
    p2f = find_period2(p, 64).float_approx()
    lyap = log2_alpha_prime_float(math.log2(p2f), p)
    hop = fp.t_out + max(0.0, math.log(fp.x_side / p2f) / fp.lam)
    ln2eta = math.log(2.0 * box.eta)
    ln_side = math.log(fp.x_side)
    descent = (sigma * log_inv_eps + math.log(box.eta)) / fp.lam
    leg_time = 0.0
    leg_g = 0.0
    for l2 in pre.path_log2[:-1]:
        ln_x = l2 * LN2
        leg_time += fp.t_out + max(0.0, (ln_side - ln_x) / fp.lam)
        if ln_x < ln2eta:
            leg_g += (ln2eta - ln_x) * (1.0 / fp.lam + 1.0 / fp.nu) + 1.0
    if hint is not None:
        t_pre, g_pre = hint
    else:
        t_pre, g_pre = n0 * (fp.t_out + 1.0), 130.0
    tau4_lo = 0.98 * (t_pre + descent + leg_time)
    g_hi = 1.02 * (g_pre + descent + leg_g) + 50.0
    extra = max(0.0, (g_hi / ratio - tau4_lo) / hop)
    return extra * lyap + 384.0


def _shrink_toward(W: BigInterval, center: BigReal, factor: float) -> BigInterval:
    prec = max(W.precision_bits, center.precision_bits)
    with workprec(prec):
        lo = center.value + (W.lo.value - center.value) / factor
        hi = center.value + (W.hi.value - center.value) / factor
    if not lo < hi:
        raise ConstructionError("neighborhood shrank to a point")
    return BigInterval(BigReal(lo, prec), BigReal(hi, prec))


def _run_samples(
    Wx: BigInterval,
    y_samples: list[float],
    center_records: list[tuple[int, float]],
    suffix: list[float],
    declared: int,
    tail_prec: int,
    p2_hi: BigReal,
    tau0: float,
    tau1: float,
    hp_steps: int,
    p: MapParams,
    fp: FlowParams,
    box: BoxSpec,
    center_x: Optional[BigReal] = None,
) -> tuple[SampleRecord, ...]:
    out: list[SampleRecord] = []
    prec = Wx.precision_bits
    xs = [Wx.lo, center_x if center_x is not None else Wx.midpoint(), Wx.hi]
    for i, xb in enumerate(xs):
        known = center_records if (i == 1 and center_x is not None) else None
        pairs = _sample_averages(
            xb.value, hp_steps, suffix, declared, tail_prec, p2_hi.value,
            tau0, tau1, y_samples, p, fp, box, known_records=known,
        )
        for y, (a0, a1) in zip(y_samples, pairs):
            out.append(SampleRecord(
                x_dec=xb.to_decimal_string(), x_bits=prec, y=y, a0=a0, a1=a1,
            ))
    return tuple(out)


# ---------------------------------------------------------------------------
# Verification.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    checks: tuple[CheckOutcome, ...]

    def failures(self) -> list[CheckOutcome]:
        return [c for c in self.checks if not c.passed]


def _settings_from_certificate(cert: WitnessCertificate) -> WitnessSettings:
    return WitnessSettings(
        map_params=MapParams(rho=cert.map_rho, c=cert.map_c),
        flow_params=FlowParams(
            lam=cert.flow_lam, mu=cert.flow_mu, nu=cert.flow_nu, t_out=cert.flow_t_out
        ),
        box=BoxSpec(eta=cert.eta),
        mode=cert.mode,
        margin=cert.margin if cert.mode == "relaxed" else 3.0,
    )


REPRO_TOL = 1e-8


def verify_certificate(
    cert: WitnessCertificate,
    settings: Optional[WitnessSettings] = None,
    resimulate_samples: bool = True,
) -> VerificationReport:
    """Independent re-check of a certificate from its base point alone.

    Recomputes the constants, re-iterates the orbit of the recorded center
    (not trusting the stored intermediate quantities), snaps the periodic
    tail at the recorded index after checking the anchor residual, rebuilds
    the averages, and re-derives every certified inequality.  Optionally
    re-simulates the recorded neighborhood samples.
    """
    if settings is None:
        settings = _settings_from_certificate(cert)
    p = settings.map_params
    fp = settings.flow_params
    box = settings.box
    checks: list[CheckOutcome] = []

    def check(name: str, ok: bool, detail: str = ""):
        checks.append(CheckOutcome(name=name, passed=bool(ok), detail=detail))

    margin = cert.margin
    C = fp.outside_time_bound(box.eta)
    check("C_used reproduction", abs(C - cert.C_used) <= 1e-12 * max(1.0, abs(C)),
          f"recomputed {C}, stored {cert.C_used}")
    log_inv_eps = -cert.eps_log2 * LN2 if cert.eps_log2 != 0.0 else math.log(1.0 / cert.eps)
    sigma = _sigma_from_logs(cert.N, log_inv_eps, fp, box, C, margin)
    check("sigma reproduction", abs(sigma - cert.sigma) <= 1e-9 * max(1.0, sigma),
          f"recomputed {sigma}, stored {cert.sigma}")
    check("sigma >= 1", cert.sigma >= 1.0)
    ln_eps_sigma = -cert.sigma * log_inv_eps
    top_face = ln_eps_sigma <= (1.0 + fp.lam / fp.nu) * math.log(box.eta) + 1e-9
    check("top-face entry condition", top_face,
          f"log eps^sigma = {ln_eps_sigma}")
    n0_bound = int(math.ceil(2.0 * log_inv_eps / LN2))
    check("n0 covering bound", cert.n0 <= n0_bound,
          f"n0 = {cert.n0}, bound = {n0_bound}")

    # containments
    prec_c = max(cert.working_bits, 192)
    with workprec(prec_c):
        x0_c = cert.x0_exact.value if cert.x0_exact is not None else mpf(cert.x0)
        eps_c = cert.eps_exact.value if cert.eps_exact is not None else mpf(cert.eps)
        slack = mpf(2.0) ** (-cert.precision_bits // 2)
        check("J0 inside the eps-interval",
              cert.J0.lo.value >= x0_c - eps_c - slack
              and cert.J0.hi.value <= x0_c + eps_c + slack)
        check("neighborhood inside the eps-ball",
              cert.neighborhood_x.lo.value > x0_c - eps_c
              and cert.neighborhood_x.hi.value < x0_c + eps_c)
    check("J1 inside the target interval", cert.J1.is_subset_of(cert.K))
    check("q interior to J1", cert.J1.contains_interior(cert.q))
    check("center interior to neighborhood",
          cert.neighborhood_x.contains_interior(cert.y0.x))

    # re-iterate the center orbit
    hp_steps = cert.n0 + cert.n1
    records, residual_log2 = _reiterate_center(
        cert.y0.x.value, hp_steps, cert.working_bits, p
    )
    check("tail anchor residual", residual_log2 <= -64.0,
          f"log2 residual = {residual_log2}")
    p2_hi = find_period2(p, cert.working_bits)
    tail_sign = -1 if cert.mirrored else 1
    records_tail = records + [(tail_sign, float(p2_hi.log_abs()))]
    orbit = build_orbit_from_records(
        records_tail, cert.y0_in, fp, p, tail_at=hp_steps, start_x=cert.y0.x
    )
    T_n0 = orbit.crossings[cert.n0].t
    # descent times from the recorded crossing magnitude
    ln_q = records[cert.n0][1]
    t_top = math.log(1.0 / box.eta) / fp.nu
    t_side = (math.log(box.eta) - ln_q) / fp.lam
    tau0 = T_n0 + t_side
    tau4 = orbit.tail.t0
    tau1 = 5.0 * tau4
    check("tau0 reproduction", abs(tau0 - cert.tau0) <= REPRO_TOL * max(1.0, cert.tau0),
          f"recomputed {tau0}, stored {cert.tau0}")
    check("tau1 reproduction", abs(tau1 - cert.tau1) <= REPRO_TOL * max(1.0, cert.tau1),
          f"recomputed {tau1}, stored {cert.tau1}")
    check("tau0 >= N", tau0 >= cert.N, f"tau0 = {tau0}")
    check("tau1 >= N", tau1 >= cert.N, f"tau1 = {tau1}")
    check("tau1 > tau0 > N", tau1 > tau0 > cert.N)

    A0 = time_average(orbit, tau0, box)
    A1 = time_average(orbit, tau1, box)
    check("A0 reproduction", abs(A0 - cert.A0) <= REPRO_TOL,
          f"recomputed {A0}, stored {cert.A0}")
    check("A1 reproduction", abs(A1 - cert.A1) <= REPRO_TOL,
          f"recomputed {A1}, stored {cert.A1}")
    bound0 = margin / (margin + 1.0)
    check("A0 >= margin bound", A0 >= bound0 - 1e-8,
          f"A0 = {A0}, bound = {bound0}")
    check("A1 <= 1/5", A1 <= 0.2 + 1e-8, f"A1 = {A1}")
    check("center gap >= margin gap", A0 - A1 >= bound0 - 0.2 - 1e-8,
          f"gap = {A0 - A1}")

    # audits
    outside_n0 = T_n0 - time_in_region(orbit, box.eta, T_n0)
    ratio = (t_side - t_top) / (outside_n0 + t_top)
    check("factor-margin audit", ratio >= margin - 1e-9,
          f"ratio = {ratio}, margin = {margin}")
    check("audit reproduction",
          abs(ratio - cert.audit_margin_ratio) <= 1e-6 * max(1.0, ratio))
    inside = time_in_region(orbit, box.eta, tau0)
    check("inside-ratio audit", tau0 / inside <= (margin + 1.0) / margin + 1e-9,
          f"tau0/inside = {tau0 / inside}")

    if resimulate_samples:
        suffix = _suffix_from_records(records, p)
        min_gap = math.inf
        seen = set()
        for s in cert.samples:
            key = s.x_dec
            if key in seen:
                continue
            seen.add(key)
            xb = BigReal.from_str(s.x_dec, s.x_bits)
            ys = sorted({t.y for t in cert.samples})
            pairs = _sample_averages(
                xb.value, hp_steps, suffix, cert.precision_bits,
                int(cert.tail_shadow_bits) + 160, p2_hi.value,
                tau0, tau1, ys, p, fp, box,
            )
            for (a0, a1) in pairs:
                min_gap = min(min_gap, a0 - a1)
        check("sample gaps >= 1/2", min_gap >= 0.5 - 1e-8,
              f"min gap = {min_gap}")
        stored_min = cert.min_sample_gap()
        check("stored sample gaps >= 1/2", stored_min >= 0.5 - 1e-9,
              f"stored min gap = {stored_min}")
    else:
        stored_min = cert.min_sample_gap()
        check("stored sample gaps >= 1/2", stored_min >= 0.5 - 1e-9,
              f"stored min gap = {stored_min}")

    return VerificationReport(
        passed=all(c.passed for c in checks), checks=tuple(checks)
    )


def _reiterate_center(
    x: mpf, steps: int, working_bits: int, p: MapParams
) -> tuple[list[tuple[int, float]], float]:
    """Forward iteration with an on-the-fly decreasing precision schedule.

    The amplification consumed so far is deducted from the working
    precision, mirroring the construction's suffix schedule.
    """
    records: list[tuple[int, float]] = []
    consumed = 0.0
    cur = x
    for _ in range(steps):
        prec = max(128, working_bits - int(consumed) + 64)
        with workprec(prec):
            b = BigReal(cur, prec)
            ln_ax = b.log_abs()
            records.append((b.sign(), ln_ax))
            consumed += max(0.0, log2_alpha_prime_float(ln_ax / LN2, p))
            cur = alpha_mpf(cur, p)
    p2 = find_period2(p, max(128, working_bits - int(consumed) + 64))
    with workprec(p2.precision_bits):
        resid = abs(abs(cur) - p2.value)
        resid_log2 = BigReal(resid, p2.precision_bits).log2_abs() if resid != 0 else -1e9
    return records, float(resid_log2)


def _suffix_from_records(records: list[tuple[int, float]], p: MapParams) -> list[float]:
    per_step = [
        max(0.0, log2_alpha_prime_float(ln / LN2, p)) for _, ln in records
    ]
    suffix = [0.0] * (len(per_step) + 1)
    for i in range(len(per_step) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + per_step[i]
    return suffix


# ---------------------------------------------------------------------------
# Deepening and the dense cover.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OscillationRecord:
    """Alternating attainments of the high and low thresholds."""

    high_threshold: float
    low_threshold: float
    times: tuple[float, ...]
    values: tuple[float, ...]
    high_count: int
    low_count: int


@dataclass(frozen=True)
class DeepeningChain:
    levels: tuple[WitnessCertificate, ...]
    oscillation: OscillationRecord

    def __post_init__(self):
        for a, b in zip(self.levels, self.levels[1:]):
            if not (b.N == 2 * a.N):
                raise ValueError("deepening must double N per level")


def fp_hop(fp: FlowParams, p2f: float) -> float:
    """Per-return duration on the periodic tail."""
    return fp.t_out + max(0.0, math.log(fp.x_side / p2f) / fp.lam)


def _oscillation_scan(
    orbit: HybridOrbit,
    box: BoxSpec,
    probe_times: list[float],
    high: float,
    low: float,
) -> OscillationRecord:
    """Alternation count of the average curve over the probe times."""
    times, values = [], []
    state = "want_high"
    hi_count = lo_count = 0
    for t in sorted(set(probe_times)):
        a = time_average(orbit, t, box)
        if state == "want_high" and a >= high:
            times.append(t); values.append(a)
            hi_count += 1
            state = "want_low"
        elif state == "want_low" and a <= low:
            times.append(t); values.append(a)
            lo_count += 1
            state = "want_high"
    return OscillationRecord(
        high_threshold=high, low_threshold=low,
        times=tuple(times), values=tuple(values),
        high_count=hi_count, low_count=lo_count,
    )


def deepen(
    seed: WitnessResult,
    levels: int,
    settings: Optional[WitnessSettings] = None,
    shadow_ratio: float = 0.22,
    osc_high: float = 0.70,
    osc_low: float = 0.25,
    probe_grid: int = 4000,
) -> DeepeningChain:
    """Nested chain of certificates with doubling N and shrinking eps.

    Level k+1 re-runs the construction from the center of level k's
    neighborhood with eps = half its radius and twice its N; neighborhoods
    are additionally shrunk (shadow_ratio) so deeper centers keep following
    each periodic tail until the running average has sunk, which is what
    makes the final center's average curve rise and fall once per level.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if settings is None:
        settings = seed.settings
    if seed.certificate.tail_shadow_bits == 0.0 and levels > 1:
        # the seed was built without the tail-shadow shrink; rebuild it at
        # the same (x0, N, eps) so deeper centers hold its low visit
        c0 = seed.certificate
        seed = construct_witness(
            c0.x0_exact if c0.x0_exact is not None else c0.x0,
            c0.N,
            c0.eps_exact if c0.eps_exact is not None else c0.eps,
            replace(seed.settings, shadow_ratio=shadow_ratio),
            y0=c0.y0_in,
        )
    chain = [seed]
    ry = abs(seed.certificate.neighborhood_y[1] - seed.certificate.neighborhood_y[0]) / 2.0
    p2f = find_period2(settings.map_params, 64).float_approx()
    lyap_tail = log2_alpha_prime_float(math.log2(p2f), settings.map_params)
    for _ in range(levels - 1):
        prev = chain[-1].certificate
        nb = prev.neighborhood_x
        center = nb.midpoint()
        eps_next = nb.length() / 4  # half the previous radius, exact
        ry = ry / 4.0
        hop = fp_hop(settings.flow_params, p2f)
        t_pre = prev.tau4 + (prev.tail_shadow_bits / lyap_tail) * hop + 40.0
        g_pre = prev.A1 * prev.tau1
        deeper_settings = replace(
            settings,
            mode="relaxed",
            margin=max(settings.margin if settings.mode == "relaxed" else 1.1, 1.1),
            shadow_ratio=shadow_ratio,
            shadow_prefix_hint=(t_pre, g_pre),
            precision_override=None,
        )
        result = construct_witness(
            center, 2 * prev.N, eps_next, deeper_settings,
            y0=prev.y0_in, y_halfwidth=ry,
        )
        if not result.certificate.neighborhood_x.is_subset_of(nb):
            raise ConstructionError("deepening lost the nesting invariant")
        chain.append(result)

    last = chain[-1]
    horizon = last.certificate.tau1
    probe_times = [horizon * i / probe_grid for i in range(1, probe_grid + 1)]
    for res in chain:
        c = res.certificate
        # the low point sits just before the next level departs the tail
        t_low = c.A1 * c.tau1 / max(shadow_ratio + 0.01, 0.05)
        probe_times.extend(
            t for t in (c.tau0, c.tau1, t_low, t_low * 0.98) if t <= horizon
        )
    osc = _oscillation_scan(last.orbit, settings.box, probe_times, osc_high, osc_low)
    return DeepeningChain(
        levels=tuple(r.certificate for r in chain), oscillation=osc
    )


def dense_cover(
    N: int,
    m: int,
    grid_x: int,
    settings: WitnessSettings = WitnessSettings(),
    y0: float = 0.0,
) -> tuple[list[WitnessResult], list[tuple[int, float, str]]]:
    """One certificate per grid point at scale eps = 1/(m+1).

    The grid runs over the section's x-range avoiding the singular line;
    per-point failures are collected, not raised, and the run continues.
    """
    if grid_x < 1:
        raise ValueError("grid_x must be >= 1")
    eps = 1.0 / (m + 1)
    results: list[WitnessResult] = []
    failures: list[tuple[int, float, str]] = []
    for i in range(grid_x):
        x_i = (2 * i + 1) / grid_x - 1.0
        if x_i == 0.0:
            x_i += eps / 7.0
        try:
            results.append(construct_witness(x_i, N, eps, settings, y0=y0))
        except Exception as exc:  # failures reported, run continues
            failures.append((i, x_i, f"{type(exc).__name__}: {exc}"))
    return results, failures


# ---------------------------------------------------------------------------
# Serialization (schema lhw-1): decimal strings for all 1D coordinates.
# ---------------------------------------------------------------------------

def _big_to_json(x: BigReal) -> dict:
    return {"dec": x.to_decimal_string(), "bits": x.precision_bits}


def _big_from_json(d: dict) -> BigReal:
    return BigReal.from_str(d["dec"], int(d["bits"]))


def _interval_to_json(iv: BigInterval) -> dict:
    return {"lo": _big_to_json(iv.lo), "hi": _big_to_json(iv.hi)}


def _interval_from_json(d: dict) -> BigInterval:
    return BigInterval(_big_from_json(d["lo"]), _big_from_json(d["hi"]))


def certificate_to_json(cert: WitnessCertificate) -> str:
    doc = {
        "schema": cert.schema,
        "x0": cert.x0,
        "y0_in": cert.y0_in,
        "N": cert.N,
        "eps": cert.eps,
        "mode": cert.mode,
        "margin": cert.margin,
        "sigma": cert.sigma,
        "n0": cert.n0,
        "n1": cert.n1,
        "J0": _interval_to_json(cert.J0),
        "J1": _interval_to_json(cert.J1),
        "K": _interval_to_json(cert.K),
        "q": _big_to_json(cert.q),
        "y0": {"x": _big_to_json(cert.y0.x), "y": cert.y0.y},
        "neighborhood_x": _interval_to_json(cert.neighborhood_x),
        "neighborhood_y": list(cert.neighborhood_y),
        "tau0": cert.tau0,
        "tau1": cert.tau1,
        "tau4": cert.tau4,
        "A0": cert.A0,
        "A1": cert.A1,
        "C_used": cert.C_used,
        "precision_bits": cert.precision_bits,
        "working_bits": cert.working_bits,
        "mirrored": cert.mirrored,
        "samples": [
            {"x_dec": s.x_dec, "x_bits": s.x_bits, "y": s.y, "a0": s.a0, "a1": s.a1}
            for s in cert.samples
        ],
        "audit": {
            "tau_y1y2": cert.audit_tau_y1y2,
            "tau_y2y3": cert.audit_tau_y2y3,
            "outside_n0": cert.audit_outside_n0,
            "margin_ratio": cert.audit_margin_ratio,
            "inside_ratio": cert.audit_inside_ratio,
        },
        "residual_log2": cert.residual_log2,
        "eps_log2": cert.eps_log2,
        "x0_exact": _big_to_json(cert.x0_exact) if cert.x0_exact is not None else None,
        "eps_exact": _big_to_json(cert.eps_exact) if cert.eps_exact is not None else None,
        "tail_shadow_bits": cert.tail_shadow_bits,
        "params": {
            "rho": cert.map_rho,
            "c": cert.map_c,
            "lam": cert.flow_lam,
            "mu": cert.flow_mu,
            "nu": cert.flow_nu,
            "t_out": cert.flow_t_out,
            "eta": cert.eta,
        },
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def certificate_from_json(text: str) -> WitnessCertificate:
    d = json.loads(text)
    if d.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported certificate schema {d.get('schema')!r}")
    pr = d["params"]
    return WitnessCertificate(
        schema=d["schema"],
        x0=float(d["x0"]),
        y0_in=float(d["y0_in"]),
        N=int(d["N"]),
        eps=float(d["eps"]),
        mode=d["mode"],
        margin=float(d["margin"]),
        sigma=float(d["sigma"]),
        n0=int(d["n0"]),
        n1=int(d["n1"]),
        J0=_interval_from_json(d["J0"]),
        J1=_interval_from_json(d["J1"]),
        K=_interval_from_json(d["K"]),
        q=_big_from_json(d["q"]),
        y0=SigmaPoint(_big_from_json(d["y0"]["x"]), float(d["y0"]["y"])),
        neighborhood_x=_interval_from_json(d["neighborhood_x"]),
        neighborhood_y=tuple(d["neighborhood_y"]),
        tau0=float(d["tau0"]),
        tau1=float(d["tau1"]),
        tau4=float(d["tau4"]),
        A0=float(d["A0"]),
        A1=float(d["A1"]),
        C_used=float(d["C_used"]),
        precision_bits=int(d["precision_bits"]),
        working_bits=int(d["working_bits"]),
        mirrored=bool(d["mirrored"]),
        samples=tuple(
            SampleRecord(
                x_dec=s["x_dec"], x_bits=int(s["x_bits"]), y=float(s["y"]),
                a0=float(s["a0"]), a1=float(s["a1"]),
            )
            for s in d["samples"]
        ),
        audit_tau_y1y2=float(d["audit"]["tau_y1y2"]),
        audit_tau_y2y3=float(d["audit"]["tau_y2y3"]),
        audit_outside_n0=float(d["audit"]["outside_n0"]),
        audit_margin_ratio=float(d["audit"]["margin_ratio"]),
        audit_inside_ratio=float(d["audit"]["inside_ratio"]),
        residual_log2=float(d["residual_log2"]),
        map_rho=float(pr["rho"]),
        map_c=float(pr["c"]),
        flow_lam=float(pr["lam"]),
        flow_mu=float(pr["mu"]),
        flow_nu=float(pr["nu"]),
        flow_t_out=float(pr["t_out"]),
        eta=float(pr["eta"]),
        eps_log2=float(d.get("eps_log2", 0.0)),
        x0_exact=_big_from_json(d["x0_exact"]) if d.get("x0_exact") else None,
        eps_exact=_big_from_json(d["eps_exact"]) if d.get("eps_exact") else None,
        tail_shadow_bits=float(d.get("tail_shadow_bits", 0.0)),
    )
