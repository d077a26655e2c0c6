"""The 2D return map on the section square, the box family, and the observable.

The return map is the skew product (x, y) -> (f(x), beta(x, y)) on the square
[-1,1]^2 minus its middle vertical line.  beta contracts the y direction by a
factor 1/4 and sends the two half-squares to disjoint cusps whose vertices sit
on the opposite vertical edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

from .bigreal import BigReal
from .errors import DomainError
from .map1d import DEFAULT_MAP, MapParams, eval_alpha

XNumber = Union[BigReal, float]


def _log_abs(x: XNumber) -> float:
    if isinstance(x, BigReal):
        return x.log_abs()
    if x == 0.0:
        return float("-inf")
    return math.log(abs(x))


def _sign(x: XNumber) -> int:
    if isinstance(x, BigReal):
        return x.sign()
    return 1 if x > 0 else (-1 if x < 0 else 0)


@dataclass(frozen=True)
class SigmaPoint:
    """A point of the cross-section square (x may be arbitrarily tiny)."""

    x: BigReal
    y: float

    def __post_init__(self):
        if abs(self.y) > 1.0:
            raise ValueError(f"|y| must be <= 1, got {self.y}")
        if self.x < -1 or self.x > 1:
            raise ValueError("|x| must be <= 1")

    @staticmethod
    def make(x: Union[float, str, BigReal], y: float, precision_bits: int = 64) -> "SigmaPoint":
        if not isinstance(x, BigReal):
            x = BigReal.from_number(x, precision_bits)
        return SigmaPoint(x, float(y))


@dataclass(frozen=True)
class BoxSpec:
    """Scale of the box pair around the equilibrium.

    Pi(eta) = [-eta, eta]^2 x [0, eta]; the observable plateau lives on it and
    the support on Pi(2*eta).  Validity: 2*eta <= 0.1 keeps Pi(2*eta) inside
    the linear slab, and 2*eta below the period-two coordinate keeps the
    periodic tail clear of the support.
    """

    eta: float = 0.04

    def __post_init__(self):
        if not 0.0 < self.eta:
            raise ValueError("eta must be positive")
        if not 2.0 * self.eta <= 0.1:
            raise ValueError(f"2*eta = {2 * self.eta} must be <= 0.1")

    def validate_against_period2(self, x_per2: float) -> None:
        if not 2.0 * self.eta < x_per2:
            raise ValueError(
                f"2*eta = {2 * self.eta} must be below the period-2 point {x_per2}"
            )


class BoxRegion(Enum):
    INSIDE_PI_ETA = "inside_Pi_eta"
    INSIDE_PI_2ETA_ONLY = "inside_Pi_2eta_only"
    OUTSIDE = "outside"


def tent_profile(t: float) -> float:
    """1 on [0,1], linear down to 0 on [1,2], 0 beyond."""
    if t <= 1.0:
        return 1.0
    if t >= 2.0:
        return 0.0
    return 2.0 - t


def eval_beta(
    x: XNumber,
    y: float,
    p: MapParams = DEFAULT_MAP,
    s: float = 2.0,
    y_factor: float = 0.25,
) -> float:
    """Second component of the return map.

    beta(x, y) = |x|^s * y * y_factor + sign(x) * (1 - |x|^s) / 2, with
    s = mu/lambda from the flow linearization.  |beta| <= 1/2 and the
    y-derivative is y_factor, so the default 1/4 is a y-contraction.  As
    x -> 0+ the value tends to 1/2: the cusp vertex of the positive
    half-square image is (-1, 1/2), and oddly for the other side.
    """
    sgn = _sign(x)
    if sgn == 0:
        raise DomainError("beta undefined on the x = 0 line")
    la = _log_abs(x)
    # |x|^s via exp of s*log|x|; harmless underflow to 0 for tiny |x|
    arg = s * la
    xs = math.exp(arg) if arg > -745.0 else 0.0
    return xs * y * y_factor + sgn * (1.0 - xs) / 2.0


def return_map(
    z: SigmaPoint,
    p: MapParams = DEFAULT_MAP,
    s: float = 2.0,
) -> SigmaPoint:
    """One application of the section return map."""
    if z.x.sign() == 0:
        raise DomainError("return map undefined on the x = 0 line")
    return SigmaPoint(eval_alpha(z.x, p), eval_beta(z.x, z.y, p, s=s))


def cusp_disjointness_margin(
    p: MapParams = DEFAULT_MAP,
    s: float = 2.0,
    grid: int = 10_000,
    y_factor: float = 0.25,
) -> float:
    """Minimal vertical separation of the two cusp images.

    At a common abscissa u (attained by both half-square images for
    |u| <= c), the positive-side slice is centered at (1 - x^s)/2 with
    half-width y_factor * x^s, where x is the positive-branch preimage of u;
    mirrored for the negative side.  The separation reduces to

        1 - (1/2 + y_factor) * (x^s + x'^s),

    so with y_factor = 1/4 disjointness is x^s + x'^s < 4/3 along matched
    branch preimages.  Positive return value certifies disjoint cusps.
    """
    inv_exp = 1.0 / p.rho
    one_plus_c = 1.0 + p.c
    coeff = 0.5 + y_factor
    worst = math.inf
    for i in range(grid + 1):
        u = -p.c + 2.0 * p.c * i / grid
        x_pos = ((u + 1.0) / one_plus_c) ** inv_exp
        x_neg = ((1.0 - u) / one_plus_c) ** inv_exp
        margin = 1.0 - coeff * (x_pos ** s + x_neg ** s)
        if margin < worst:
            worst = margin
    return worst


def _abs_x(x: XNumber) -> float:
    # BigReal magnitudes go through the log (underflow to 0 is harmless
    # there: it means deep inside every box scale)
    if isinstance(x, BigReal):
        la = x.log_abs()
        return math.exp(la) if la > -745.0 else 0.0
    return abs(x)


def observable_g(state, b: BoxSpec) -> float:
    """The bump observable: 1 on Pi(eta), supported in Pi(2*eta).

    g(x, y, z) = w(|x|/eta) * w(|y|/eta) * w(z/eta) with the tent profile w;
    continuous, in [0, 1], and exactly meeting the plateau and support
    conditions.  Accepts any object with x, y, z attributes or a 3-tuple.
    """
    x, y, z = _unpack(state)
    wx = tent_profile(_abs_x(x) / b.eta)
    wy = tent_profile(abs(y) / b.eta)
    wz = tent_profile(max(z, 0.0) / b.eta)
    return wx * wy * wz


def box_membership(state, b: BoxSpec) -> BoxRegion:
    """Classify a state against the nested boxes (consistent with g)."""
    x, y, z = _unpack(state)
    ax, ay, az = _abs_x(x), abs(y), z
    if az < 0.0:
        return BoxRegion.OUTSIDE
    if ax <= b.eta and ay <= b.eta and az <= b.eta:
        return BoxRegion.INSIDE_PI_ETA
    if ax <= 2 * b.eta and ay <= 2 * b.eta and az <= 2 * b.eta:
        return BoxRegion.INSIDE_PI_2ETA_ONLY
    return BoxRegion.OUTSIDE


def _unpack(state):
    if hasattr(state, "x"):
        return state.x, state.y, state.z
    x, y, z = state
    return x, y, z
