"""The one-dimensional expanding interval map and its orbit machinery.

The map is the odd, piecewise-monotone family

    f(x) = sign(x) * ((1 + c) * |x|^rho - 1),      x in [-1, 1] \\ {0},

with defaults rho = 3/4, c = 0.95.  On (0, 1] it rises from -1 to c < 1 with
derivative (1+c)*rho*|x|^(rho-1) > sqrt(2) that blows up at 0, and f(-x) =
-f(x).  Both monotone branches invert in closed form, which the interval
pullbacks below rely on.

Everything here is pure: parameters and values are immutable, so concurrent
read-only use is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

from mpmath import cbrt, mpf, sqrt, workprec

from .bigreal import BigInterval, BigReal
from .errors import (
    BranchRangeError,
    ConstructionError,
    DegenerateIntervalError,
    DomainError,
    PrecisionExhaustedError,
    PreimageNotFoundError,
    StableManifoldError,
)

SQRT2 = math.sqrt(2.0)

# Fixed seed point for the recorded generic orbit (arbitrary, non-periodic;
# kept constant so every run records the same empirical average).
GENERIC_SEED = 0.1234567891234


@dataclass(frozen=True)
class MapParams:
    """Exponent and apex value of the interval map.

    Validity needs 0.5 < rho < 1, 0 < c < 1 and (1+c)*rho > sqrt(2); the last
    condition makes the derivative exceed sqrt(2) everywhere on (0, 1].
    """

    rho: float = 0.75
    c: float = 0.95

    def __post_init__(self):
        if not 0.5 < self.rho < 1.0:
            raise ValueError(f"rho must be in (0.5, 1), got {self.rho}")
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"c must be in (0, 1), got {self.c}")
        if not (1.0 + self.c) * self.rho > SQRT2:
            raise ValueError(
                f"(1+c)*rho = {(1.0 + self.c) * self.rho} must exceed sqrt(2)"
            )

    @property
    def fast_rho(self) -> bool:
        # rho = 3/4 admits a sqrt/cbrt evaluation path, much cheaper than a
        # general power at high precision.
        return self.rho == 0.75

    def min_derivative(self) -> float:
        """Infimum of the derivative, attained at |x| = 1."""
        return (1.0 + self.c) * self.rho


DEFAULT_MAP = MapParams()


@dataclass(frozen=True)
class Itinerary:
    """Branch labels of an orbit segment: sign k is the sign of iterate k."""

    signs: tuple[int, ...] = ()

    def __post_init__(self):
        if any(s not in (-1, 1) for s in self.signs):
            raise ValueError("itinerary signs must be +1 or -1")

    def __len__(self):
        return len(self.signs)

    def __iter__(self):
        return iter(self.signs)

    def __add__(self, other: "Itinerary") -> "Itinerary":
        return Itinerary(self.signs + other.signs)

    def symbols(self) -> str:
        return "".join("+" if s > 0 else "-" for s in self.signs)

    @staticmethod
    def from_symbols(text: str) -> "Itinerary":
        return Itinerary(tuple(1 if ch == "+" else -1 for ch in text))


# ---------------------------------------------------------------------------
# Raw mpf kernels.  All take and return mpf at the caller's working precision.
# ---------------------------------------------------------------------------

def _pow_rho(ax: mpf, p: MapParams) -> mpf:
    if p.fast_rho:
        return sqrt(ax * sqrt(ax))
    return ax ** mpf(p.rho)


def _pow_inv_rho(u: mpf, p: MapParams) -> mpf:
    if p.fast_rho:
        return u * cbrt(u)
    return u ** (1 / mpf(p.rho))


def alpha_mpf(x: mpf, p: MapParams) -> mpf:
    if x == 0:
        raise DomainError("map undefined at x = 0")
    one_plus_c = 1 + mpf(p.c)
    if x > 0:
        return one_plus_c * _pow_rho(x, p) - 1
    return 1 - one_plus_c * _pow_rho(-x, p)


def alpha_prime_mpf(x: mpf, p: MapParams) -> mpf:
    if x == 0:
        raise DomainError("derivative undefined at x = 0")
    ax = abs(x)
    return (1 + mpf(p.c)) * mpf(p.rho) * _pow_rho(ax, p) / ax


def branch_inverse_mpf(z: mpf, sign: int, p: MapParams) -> mpf:
    one_plus_c = 1 + mpf(p.c)
    if sign > 0:
        if not -1 < z <= p.c:
            raise BranchRangeError(f"{z} outside positive-branch image (-1, c]")
        u = (z + 1) / one_plus_c
        return _pow_inv_rho(u, p)
    if not -p.c <= z < 1:
        raise BranchRangeError(f"{z} outside negative-branch image [-c, 1)")
    u = (1 - z) / one_plus_c
    return -_pow_inv_rho(u, p)


def alpha_float(x: float, p: MapParams = DEFAULT_MAP) -> float:
    """Double-precision evaluation, for cheap long orbits away from 0."""
    if x == 0.0:
        raise DomainError("map undefined at x = 0")
    if x > 0:
        return (1.0 + p.c) * x ** p.rho - 1.0
    return 1.0 - (1.0 + p.c) * (-x) ** p.rho


def log2_alpha_prime_float(log2_abs_x: float, p: MapParams = DEFAULT_MAP) -> float:
    """log2 of the derivative from log2|x| alone (robust for tiny |x|)."""
    return math.log2((1.0 + p.c) * p.rho) + (p.rho - 1.0) * log2_abs_x


# ---------------------------------------------------------------------------
# Public operations on BigReal / BigInterval.
# ---------------------------------------------------------------------------

def eval_alpha(x: BigReal, p: MapParams = DEFAULT_MAP) -> BigReal:
    """One application of the map at the operand's precision."""
    with workprec(x.precision_bits):
        return BigReal(alpha_mpf(x.value, p), x.precision_bits)


def alpha_derivative(x: BigReal, p: MapParams = DEFAULT_MAP) -> BigReal:
    with workprec(x.precision_bits):
        return BigReal(alpha_prime_mpf(x.value, p), x.precision_bits)


def branch_inverse(z: BigReal, sign: int, p: MapParams = DEFAULT_MAP) -> BigReal:
    """Preimage of z on the monotone branch of the given sign."""
    with workprec(z.precision_bits):
        return BigReal(branch_inverse_mpf(z.value, sign, p), z.precision_bits)


def iterate_with_itinerary(
    x: BigReal, n: int, p: MapParams = DEFAULT_MAP
) -> tuple[list[BigReal], Itinerary]:
    """Forward orbit of length n+1 together with its branch labels.

    Raises StableManifoldError at the first k with iterate exactly 0.
    """
    prec = x.precision_bits
    orbit = [x]
    signs = []
    cur = x.value
    with workprec(prec):
        for k in range(n):
            if cur == 0:
                raise StableManifoldError(k)
            signs.append(1 if cur > 0 else -1)
            cur = alpha_mpf(cur, p)
            orbit.append(BigReal(cur, prec))
    return orbit, Itinerary(tuple(signs))


def find_period2(p: MapParams = DEFAULT_MAP, precision_bits: int = 64) -> BigReal:
    """The positive point of the symmetric period-two orbit.

    Solves (1+c) t^rho + t - 1 = 0 on (0, 1); the solution q satisfies
    f(q) = -q and hence f(f(q)) = q with q not fixed.  Bisection at double
    precision seeds a Newton iteration with doubled precision per step.
    """
    lo, hi = 1e-12, 1.0 - 1e-12

    def g(t: float) -> float:
        return (1.0 + p.c) * t ** p.rho + t - 1.0

    if not (g(lo) < 0 < g(hi)):  # cannot happen for valid MapParams
        raise ConstructionError("no period-2 root bracket in (0, 1)")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    root = mpf(0.5 * (lo + hi))

    prec = 60
    one_plus_c = None
    while True:
        prec = min(prec * 2, precision_bits + 32)
        with workprec(prec + 16):
            one_plus_c = 1 + mpf(p.c)
            t_rho = _pow_rho(root, p)
            f_val = one_plus_c * t_rho + root - 1
            f_der = one_plus_c * mpf(p.rho) * t_rho / root + 1
            root = root - f_val / f_der
        if prec >= precision_bits + 32:
            break
    # one polishing step at final precision
    with workprec(precision_bits + 32):
        t_rho = _pow_rho(root, p)
        f_val = one_plus_c * t_rho + root - 1
        f_der = one_plus_c * mpf(p.rho) * t_rho / root + 1
        root = root - f_val / f_der
        root = mpf(root)
    return BigReal(root, precision_bits + 32).with_precision(precision_bits)


def n0_ceiling(eps: float) -> int:
    """The a-priori bound ceil(2 log(1/eps) / log 2) on the covering index."""
    return int(math.ceil(2.0 * math.log(1.0 / eps) / math.log(2.0)))


def smallest_n0(
    I: BigInterval, p: MapParams = DEFAULT_MAP
) -> tuple[int, list[BigInterval], Itinerary]:
    """Iterate an interval until its image contains 0.

    Returns (n0, [I, f(I), ..., f^n0(I)], itinerary).  While 0 stays outside,
    the whole interval sits in one monotone branch, so images are endpoint
    images and f^n0 restricted to I is monotone.  Expansion > sqrt(2) forces
    n0 <= ceil(2 log(1/eps)/log 2) for eps = len(I)/2.
    """
    prec = I.precision_bits
    # effective eps = len(I)/2, handled in log scale (it can underflow)
    log2_half_len = I.length().log2_abs() - 1.0
    cap = int(math.ceil(2.0 * (-log2_half_len))) + 8
    images = [I]
    signs = []
    lo, hi = I.lo.value, I.hi.value
    with workprec(prec):
        n0 = 0
        while not (lo <= 0 <= hi):
            if n0 > cap:  # violates the expansion bound; should be impossible
                raise ConstructionError(
                    f"interval failed to cover 0 within {cap} iterations"
                )
            signs.append(1 if lo > 0 else -1)
            lo, hi = alpha_mpf(lo, p), alpha_mpf(hi, p)
            images.append(
                BigInterval(BigReal(lo, prec), BigReal(hi, prec))
            )
            n0 += 1
    return n0, images, Itinerary(tuple(signs))


def pullback_interval(
    target: BigInterval, it: Itinerary, p: MapParams = DEFAULT_MAP
) -> BigInterval:
    """Pull an interval back through a monotone lap.

    Applying the branch inverses named by the itinerary (last step first)
    yields the subinterval J with f^{|it|}(J) = target endpoint-wise.  Each
    intermediate must stay inside its branch or BranchRangeError is raised.
    """
    prec = target.precision_bits
    lo, hi = target.lo.value, target.hi.value
    with workprec(prec):
        for sign in reversed(tuple(it)):
            lo = branch_inverse_mpf(lo, sign, p)
            hi = branch_inverse_mpf(hi, sign, p)
            if not (lo < hi):
                raise DegenerateIntervalError("pullback collapsed the interval")
            if (lo > 0) != (sign > 0) or (hi > 0) != (sign > 0):
                raise BranchRangeError("pullback left the expected branch")
    return BigInterval(BigReal(lo, prec), BigReal(hi, prec))


@dataclass(frozen=True)
class PreimageResult:
    """Outcome of the breadth-first preimage search.

    path_log2 and path_signs describe the forward orbit of q up to the
    target: entry k holds log2|f^k(q)| and its sign.  amp_bits is the total
    log2 expansion along the path, which downstream code adds to its working
    precision so the forward residual stays at the declared scale.
    """

    n1: int
    q: BigReal
    itinerary: Itinerary
    piece_image: BigInterval
    amp_bits: float
    path_signs: tuple[int, ...]
    path_log2: tuple[float, ...]


def find_preimage_in(
    target: BigReal,
    K: BigInterval,
    p: MapParams = DEFAULT_MAP,
    n_max: int = 100_000,
) -> PreimageResult:
    """Minimal-depth preimage of a point inside a given interval.

    Breadth-first search over the inverse-branch tree, organized forward:
    the monotone pieces of f^n restricted to K are advanced together, each
    piece being one branch of the tree (pieces whose branch is infeasible
    never appear, which is the per-depth pruning).  The first depth at which
    some piece's image interior contains the target yields q by pulling the
    target back through that piece's itinerary.

    The search is exhaustive per depth, so n1 is minimal.  Splitting happens
    when a piece's image straddles 0; limit values f(0-) = 1, f(0+) = -1
    close the child hulls, and interior membership makes the over-cover
    harmless.
    """
    prec = K.precision_bits
    t = target.value
    if not -1 < t < 1:
        raise ValueError("target must lie in (-1, 1)")
    pieces: list[tuple[mpf, mpf, tuple[int, ...]]] = [(K.lo.value, K.hi.value, ())]
    with workprec(prec):
        one = mpf(1)
        for depth in range(1, n_max + 1):
            nxt: list[tuple[mpf, mpf, tuple[int, ...]]] = []
            for lo, hi, it in pieces:
                if lo <= 0 <= hi:
                    if lo < 0:
                        nxt.append((alpha_mpf(lo, p), one, it + (-1,)))
                    if hi > 0:
                        nxt.append((-one, alpha_mpf(hi, p), it + (1,)))
                else:
                    s = 1 if lo > 0 else -1
                    nxt.append((alpha_mpf(lo, p), alpha_mpf(hi, p), it + (s,)))
            for lo, hi, it in nxt:
                if lo < t < hi:
                    found = _materialize_preimage(t, it, K, p, prec, (lo, hi))
                    if found is not None:
                        return found
            pieces = nxt
    raise PreimageNotFoundError(n_max)


def _materialize_preimage(
    t: mpf,
    it: tuple[int, ...],
    K: BigInterval,
    p: MapParams,
    prec: int,
    image: tuple[mpf, mpf],
) -> Optional[PreimageResult]:
    """Pull the target back through one piece; None if rounding pushes q
    onto the boundary of K.

    The returned q is re-pulled at the search precision plus the measured
    lap amplification, so forward re-iteration reproduces the target well
    below the search resolution (backward steps are contractions)."""
    with workprec(prec):
        cur = t
        log2_rev = [float(BigReal(cur, prec).log2_abs())]
        for sign in reversed(it):
            cur = branch_inverse_mpf(cur, sign, p)
            log2_rev.append(BigReal(cur, prec).log2_abs())
        if not (K.lo.value < cur < K.hi.value):
            return None
    path_signs = tuple(it)
    path_log2 = tuple(reversed(log2_rev))
    amp_bits = sum(log2_alpha_prime_float(l2, p) for l2 in path_log2[:-1])
    prec2 = prec + int(math.ceil(max(amp_bits, 0.0))) + 32
    with workprec(prec2):
        q = mpf(t)
        for sign in reversed(it):
            q = branch_inverse_mpf(q, sign, p)
    return PreimageResult(
        n1=len(it),
        q=BigReal(q, prec2),
        itinerary=Itinerary(path_signs),
        piece_image=BigInterval(
            BigReal(image[0], prec), BigReal(image[1], prec)
        ),
        amp_bits=amp_bits,
        path_signs=path_signs,
        path_log2=path_log2,
    )


def refine_J1(
    q: BigReal,
    n1: int,
    K: BigInterval,
    p: MapParams = DEFAULT_MAP,
    itinerary: Optional[Itinerary] = None,
    piece_image: Optional[BigInterval] = None,
    target: Optional[BigReal] = None,
) -> tuple[BigInterval, BigReal]:
    """Closed subinterval of K around q whose n1-th image is a ball at the
    target with every intermediate image clear of 0.

    Pulls back a ball around the target through q's monotone lap, halving the
    radius until the pullback fits strictly inside K.  Branch membership of
    every intermediate (checked by pullback_interval) certifies that no
    image among steps 1..n1 meets 0.  Returns (J1, ball_radius_used).
    """
    if itinerary is None or piece_image is None or target is None:
        raise ValueError("refine_J1 needs the itinerary, piece image and target")
    prec = K.precision_bits
    with workprec(prec):
        t = target.value
        r = min(t - piece_image.lo.value, piece_image.hi.value - t) / 2
        if r <= 0:
            raise DegenerateIntervalError("target on the lap-image boundary")
        for _ in range(prec + 8):
            ball = BigInterval(
                BigReal(t - r, prec), BigReal(t + r, prec)
            )
            try:
                J1 = pullback_interval(ball, itinerary, p)
            except (BranchRangeError, DegenerateIntervalError):
                r = r / 4
                continue
            if J1.is_interior_subset_of(K) and J1.contains_interior(q):
                return J1, BigReal(r, prec)
            r = r / 4
    raise DegenerateIntervalError(
        "ball shrank below working precision before fitting inside K"
    )


def birkhoff_average(
    x: BigReal,
    h: Callable[[float], float],
    n: int,
    p: MapParams = DEFAULT_MAP,
) -> float:
    """(1/(n+1)) * sum of h over the first n+1 orbit points.

    The observable is evaluated in double precision; the orbit is advanced at
    the precision of x (a plain float path is used when x is double-grade).
    """
    if x.precision_bits <= 53:
        cur = x.float_approx()
        total = 0.0
        for k in range(n + 1):
            total += h(cur)
            if k < n:
                if cur == 0.0:
                    raise StableManifoldError(k + 1)
                cur = alpha_float(cur, p)
        return total / (n + 1)
    prec = x.precision_bits
    total = 0.0
    with workprec(prec):
        cur = x.value
        for k in range(n + 1):
            total += h(float(cur))
            if k < n:
                if cur == 0:
                    raise StableManifoldError(k + 1)
                cur = alpha_mpf(cur, p)
    return total / (n + 1)




# ---------------------------------------------------------------------------
# Recorded generic orbit and the alternating-block construction.
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4)
def record_generic_orbit(p: MapParams, n: int, seed: float = GENERIC_SEED) -> tuple:
    """Double-precision forward orbit of the fixed seed (cached)."""
    vals = [0.0] * n
    x = seed
    for i in range(n):
        vals[i] = x
        x = alpha_float(x, p)
    return tuple(vals)


@lru_cache(maxsize=4)
def empirical_square_average(
    p: MapParams, n: int = 1_000_000, seed: float = GENERIC_SEED
) -> float:
    """Recorded Monte Carlo average of h(t) = t^2 along the generic orbit."""
    x = seed
    total = 0.0
    for _ in range(n + 1):
        total += x * x
        x = alpha_float(x, p)
    return total / (n + 1)


@dataclass(frozen=True)
class HistoricPrefix:
    """Result of the alternating-block construction.

    partials[i] is the running average of h(t) = t^2 over the first i+1
    orbit points of x0.  block_ends / block_targets mark the design indices
    at which the running average is pulled toward its alternating targets
    (the recorded generic average and the squared period-two point).
    """

    x0: BigReal
    partials: tuple[float, ...]
    block_ends: tuple[int, ...]
    block_targets: tuple[float, ...]
    block_lengths: tuple[int, ...]
    p2_square: float
    m_hat: float
    itinerary_symbols: str = field(repr=False, default="")

    def visit_errors(self) -> tuple[float, ...]:
        return tuple(
            abs(self.partials[i] - t)
            for i, t in zip(self.block_ends, self.block_targets)
        )

    def oscillation_amplitude(self) -> float:
        """Smallest swing of the running average between consecutive
        pinned visits."""
        vals = [self.partials[i] for i in self.block_ends]
        return min(abs(b - a) for a, b in zip(vals, vals[1:]))


def _window_for_prepend(
    center: float, radius: float, prev_sign: int, p: MapParams, prec: int
) -> BigInterval:
    # image of the + branch is (-1, c]; of the - branch is [-c, 1)
    if prev_sign > 0:
        lo, hi = -1.0, p.c
    else:
        lo, hi = -p.c, 1.0
    lo = max(lo + 1e-15, center - radius)
    hi = min(hi - 1e-15, center + radius)
    if not lo < hi:
        raise ConstructionError("degenerate bridge window")
    return BigInterval.from_floats(lo, hi, prec)


def historic_prefix_1d(
    delta: float,
    blocks: int,
    p: MapParams = DEFAULT_MAP,
    base_len: int = 1,
    growth: int = 9,
    bridge_ball: float = 0.1,
    precision_cap: int = 4_000_000,
) -> HistoricPrefix:
    """A point whose partial Birkhoff averages of t^2 oscillate.

    The design alternates generic-orbit blocks (running average pulled
    toward the recorded empirical value) with period-two shadowing blocks
    (pulled toward the squared periodic point).  Each block is `growth`
    times the total block length before it, so the running average lands
    within roughly a tenth of the target gap at every block end; short
    covering bridges (a few steps each) join the blocks.  The final block
    sits exactly on the period-two cycle, so the expensive arbitrary-
    precision pullback only traverses the pre-tail prefix: the returned
    point carries enough bits for its true orbit to realize the whole
    design, including the tail, to far below double precision.

    Partial averages are computed from the realized orbit values (pullback
    intermediates), not from the idealized design.
    """
    if blocks < 1:
        raise ValueError("blocks must be >= 1")
    if base_len < 1:
        raise ValueError("base_len must be >= 1")
    p2 = find_period2(p, 64)
    p2f = p2.float_approx()
    p2_sq = p2f * p2f
    m_hat = empirical_square_average(p)
    gap = abs(p2_sq - m_hat)
    if not delta < gap:
        raise ValueError(
            f"delta = {delta} must be below the target separation {gap:.4f}"
        )

    # Block plan: G1 B1 G2 B2 ... Gb Bb; bridges are junction overhead and
    # are excluded from the dominance rule (they are a few steps each).
    lengths: list[int] = []
    tot = 0
    for _ in range(2 * blocks):
        L = max(base_len, growth * tot)
        lengths.append(L)
        tot += L
    g_lens = lengths[0::2]
    b_lens = lengths[1::2]

    lyap_p2 = log2_alpha_prime_float(math.log2(p2f), p)
    n_rec = max(200_000, 12 * max(g_lens) + 1000)
    generic = record_generic_orbit(p, n_rec)
    lyap_gen = _mean_log2_derivative(generic[:50_000], p)

    est_bits = sum(b_lens) * lyap_p2 * 1.05 + sum(g_lens) * lyap_gen * 1.25 + 4096
    if est_bits > precision_cap:
        raise PrecisionExhaustedError(
            f"design needs ~{int(est_bits)} bits (cap {precision_cap})",
            achieved=_blocks_within_cap(precision_cap, base_len, growth, lyap_gen, lyap_p2),
            required_bits=int(est_bits),
        )

    # Generic segments whose t^2 mean matches the recorded average, ending
    # away from 0 so the block joins glue safely.
    prefix_sq = [0.0]
    for v in generic:
        prefix_sq.append(prefix_sq[-1] + v * v)
    g_offsets = [
        _best_offset(prefix_sq, generic, L, m_hat) for L in g_lens
    ]

    # True high-precision orbits for the generic blocks (sign sources and
    # glue anchors for the pullback).
    g_orbits: list[list[mpf]] = []
    g_bits: list[float] = []
    for L, off in zip(g_lens, g_offsets):
        gp = int(L * lyap_gen * 1.25) + 256
        vals = [mpf(0)] * L
        bits = 0.0
        with workprec(gp):
            x = mpf(generic[off])
            for i in range(L):
                vals[i] = x
                bits += log2_alpha_prime_float(math.log2(abs(generic[off + i])), p)
                x = alpha_mpf(x, p)
        g_orbits.append(vals)
        g_bits.append(bits)

    # ---- backward realization ----------------------------------------
    # segments_rev collects (role, forward h list, forward symbols) from the
    # end of the design toward the front.
    segments_rev: list[tuple[str, list[float], str]] = []

    suffix_bits = b_lens[-1] * lyap_p2 + 192.0
    anchor_prec = int(suffix_bits) + 64
    p2_hi = find_period2(p, anchor_prec)
    cur: mpf = p2_hi.value
    segments_rev.append(
        ("B", [p2_sq] * b_lens[-1], _cycle_symbols(b_lens[-1]))
    )

    for k in range(blocks - 1, -1, -1):
        if k < blocks - 1:
            # bridge from the exit of interior block B_k into the suffix,
            # then pull back through B_k shadowing the cycle.
            Lb = b_lens[k]
            exit_sign_parity = Lb  # value after the block is cycle index Lb
            exit_val = p2f if exit_sign_parity % 2 == 0 else -p2f
            prev_sign = 1 if Lb % 2 == 1 else -1  # sign of last block value
            cur, bseg = _prepend_bridge(
                cur, exit_val, prev_sign, bridge_ball, p, int(suffix_bits) + 256
            )
            segments_rev.append(bseg)
            suffix_bits += _segment_bits(bseg, p)
            cur, hseg = _prepend_cycle_block(
                cur, Lb, p, int(suffix_bits) + 256
            )
            segments_rev.append(hseg)
            suffix_bits += Lb * lyap_p2

        # bridge from the end of G_k into what follows
        vals = g_orbits[k]
        wp = int(suffix_bits) + 256
        with workprec(wp):
            exit_val = float(alpha_mpf(vals[-1], p))
        prev_sign = 1 if vals[-1] > 0 else -1
        cur, bseg = _prepend_bridge(cur, exit_val, prev_sign, bridge_ball, p, wp)
        segments_rev.append(bseg)
        suffix_bits += _segment_bits(bseg, p)

        # pull back through G_k, recording realized values
        wp = int(suffix_bits + g_bits[k]) + 256
        h_rev: list[float] = []
        sym_rev: list[str] = []
        with workprec(wp):
            for v in reversed(vals):
                s = 1 if v > 0 else -1
                cur = branch_inverse_mpf(cur, s, p)
                f = float(cur)
                if (f > 0) != (v > 0):
                    raise ConstructionError("generic-block pullback detached")
                h_rev.append(f * f)
                sym_rev.append("+" if s > 0 else "-")
        segments_rev.append(("G", list(reversed(h_rev)), "".join(reversed(sym_rev))))
        suffix_bits += g_bits[k]

    x0 = BigReal(cur, int(suffix_bits) + 192)

    # ---- forward assembly ---------------------------------------------
    h_values: list[float] = []
    symbols: list[str] = []
    block_ends: list[int] = []
    block_targets: list[float] = []
    block_lengths: list[int] = []
    for role, hs, syms in reversed(segments_rev):
        h_values.extend(hs)
        symbols.append(syms)
        if role in ("G", "B"):
            block_ends.append(len(h_values) - 1)
            block_targets.append(m_hat if role == "G" else p2_sq)
            block_lengths.append(len(hs))

    partials: list[float] = []
    running = 0.0
    for i, hv in enumerate(h_values):
        running += hv
        partials.append(running / (i + 1))

    result = HistoricPrefix(
        x0=x0,
        partials=tuple(partials),
        block_ends=tuple(block_ends),
        block_targets=tuple(block_targets),
        block_lengths=tuple(block_lengths),
        p2_square=p2_sq,
        m_hat=m_hat,
        itinerary_symbols="".join(symbols),
    )
    if result.oscillation_amplitude() < delta:
        raise ConstructionError(
            f"achieved oscillation {result.oscillation_amplitude():.4f} "
            f"below requested delta {delta}"
        )
    return result


def _prepend_bridge(
    cur: mpf,
    exit_center: float,
    prev_sign: int,
    radius: float,
    p: MapParams,
    prec: int,
) -> tuple[mpf, tuple[str, list[float], str]]:
    """Covering bridge from a window around `exit_center` to the exact
    suffix anchor `cur`; returns (new anchor, bridge segment record)."""
    W0 = _window_for_prepend(exit_center, radius, prev_sign, p, prec)
    res = find_preimage_in(BigReal(cur, prec), W0, p, n_max=2000)
    h = [
        (s * 2.0 ** l2) ** 2
        for s, l2 in zip(res.path_signs, res.path_log2[:-1])
    ]
    syms = "".join("+" if s > 0 else "-" for s in res.path_signs)
    return res.q.value, ("bridge", h, syms)


def _prepend_cycle_block(
    cur: mpf, length: int, p: MapParams, prec: int
) -> tuple[mpf, tuple[str, list[float], str]]:
    """Pull the anchor back through an alternating (period-two) lap,
    recording realized values; the sequence contracts onto the cycle."""
    h_rev: list[float] = []
    with workprec(prec):
        for i in range(length - 1, -1, -1):
            s = 1 if i % 2 == 0 else -1
            cur = branch_inverse_mpf(cur, s, p)
            if (cur > 0) != (s > 0):
                raise ConstructionError("cycle-block pullback left its branch")
            f = float(cur)
            h_rev.append(f * f)
    return cur, ("B", list(reversed(h_rev)), _cycle_symbols(length))


def _segment_bits(seg: tuple[str, list[float], str], p: MapParams) -> float:
    bits = 0.0
    for hv in seg[1]:
        if hv > 0:
            bits += log2_alpha_prime_float(0.5 * math.log2(hv), p)
    return bits


def _cycle_symbols(length: int) -> str:
    return "".join("+" if i % 2 == 0 else "-" for i in range(length))


def _mean_log2_derivative(vals: Sequence[float], p: MapParams) -> float:
    total = 0.0
    for v in vals:
        total += log2_alpha_prime_float(math.log2(abs(v)), p)
    return total / len(vals)


def _best_offset(
    prefix_sq: list[float], generic: tuple, L: int, m_hat: float
) -> int:
    """Offset of the length-L generic segment whose t^2 mean is closest to
    the recorded average, among segments ending well away from 0."""
    n = len(generic)
    best, best_err = 0, float("inf")
    limit = n - L - 2
    step = max(1, limit // 20000)
    for off in range(0, limit, step):
        tail_ok = all(abs(generic[off + L - 1 - j]) >= 0.2 for j in range(min(3, L)))
        if not tail_ok:
            continue
        mean = (prefix_sq[off + L] - prefix_sq[off]) / L
        err = abs(mean - m_hat)
        if err < best_err:
            best, best_err = off, err
    return best


def _blocks_within_cap(
    cap: int, base_len: int, growth: int, lyap_gen: float, lyap_p2: float
) -> int:
    total, bits, achieved = 0, 0.0, 0
    lyap = max(lyap_gen, lyap_p2)
    for k in range(64):
        L = max(base_len, growth * total)
        bits += L * lyap * 1.15
        total += L
        if bits > cap:
            break
        if k % 2 == 1:
            achieved += 1
    return achieved
