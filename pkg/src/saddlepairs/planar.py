"""Planar geometry of holonomy vectors.

Holonomy vectors live in R^2.  Exact vectors (int or Fraction components, as
produced by origami tracing) are compared exactly; float vectors are compared
with a relative tolerance of ``FLOAT_TOL``.

The renormalization window is the trapezoid ``T = {1/2 <= y <= 1, |x| <= y}``;
``g_t = diag(e^t, e^-t)`` and ``r_theta`` is the counterclockwise rotation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import List, Optional, Tuple, Union

import numpy as np

from .errors import InvalidFiber, NonPositiveTolerance, ZeroVector

Scalar = Union[int, Fraction, float]

FLOAT_TOL = 1e-12
DEFAULT_ARC_TOL = 1e-10
TWO_PI = 2.0 * math.pi


def _is_exact(value) -> bool:
    return isinstance(value, Rational)


@dataclass(frozen=True)
class PlanarVector:
    """A holonomy vector ``x + iy``."""

    x: Scalar
    y: Scalar

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite vector ({self.x}, {self.y})")

    @property
    def exact(self) -> bool:
        return _is_exact(self.x) and _is_exact(self.y)

    def norm2(self) -> Scalar:
        return self.x * self.x + self.y * self.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def arg(self) -> float:
        return math.atan2(self.y, self.x)

    def is_zero(self) -> bool:
        return self.x == 0 and self.y == 0

    def __add__(self, other: "PlanarVector") -> "PlanarVector":
        return PlanarVector(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "PlanarVector") -> "PlanarVector":
        return PlanarVector(self.x - other.x, self.y - other.y)

    def __neg__(self) -> "PlanarVector":
        return PlanarVector(-self.x, -self.y)

    def scaled(self, factor: Scalar) -> "PlanarVector":
        return PlanarVector(self.x * factor, self.y * factor)

    def as_float(self) -> Tuple[float, float]:
        return float(self.x), float(self.y)


def vec(x: Scalar, y: Scalar) -> PlanarVector:
    return PlanarVector(x, y)


def wedge(z: PlanarVector, w: PlanarVector) -> Scalar:
    """Virtual area ``|z ^ w| = |xv - yu|``."""
    return abs(z.x * w.y - z.y * w.x)


@dataclass(frozen=True)
class LinearMap2:
    """Row-major 2x2 real matrix acting on column vectors."""

    a: Scalar
    b: Scalar
    c: Scalar
    d: Scalar

    @property
    def det(self) -> Scalar:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> Scalar:
        return self.a + self.d

    def transpose(self) -> "LinearMap2":
        return LinearMap2(self.a, self.c, self.b, self.d)

    def inverse(self) -> "LinearMap2":
        det = self.det
        if det == 0:
            raise ZeroDivisionError("singular matrix")
        if all(_is_exact(e) for e in (self.a, self.b, self.c, self.d)):
            det = Fraction(det)
            inv = [self.d / det, -self.b / det, -self.c / det, self.a / det]
            inv = [int(e) if e.denominator == 1 else e for e in inv]
            return LinearMap2(*inv)
        return LinearMap2(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def __matmul__(self, other):
        if isinstance(other, LinearMap2):
            return compose(self, other)
        if isinstance(other, PlanarVector):
            return apply(self, other)
        return NotImplemented

    def entries(self) -> Tuple[Scalar, Scalar, Scalar, Scalar]:
        return self.a, self.b, self.c, self.d


IDENTITY = LinearMap2(1, 0, 0, 1)


def gt(t: float) -> LinearMap2:
    """Teichmuller geodesic flow matrix ``diag(e^t, e^-t)``."""
    return LinearMap2(math.exp(t), 0.0, 0.0, math.exp(-t))


def rtheta(theta: float) -> LinearMap2:
    c, s = math.cos(theta), math.sin(theta)
    return LinearMap2(c, -s, s, c)


def apply(m: LinearMap2, z: PlanarVector) -> PlanarVector:
    return PlanarVector(m.a * z.x + m.b * z.y, m.c * z.x + m.d * z.y)


def compose(m: LinearMap2, n: LinearMap2) -> LinearMap2:
    """Matrix product ``m @ n`` (apply ``n`` first)."""
    return LinearMap2(
        m.a * n.a + m.b * n.c,
        m.a * n.b + m.b * n.d,
        m.c * n.a + m.d * n.c,
        m.c * n.b + m.d * n.d,
    )


def largest_eigenvalue_det1(trace: float) -> float:
    """Largest eigenvalue of a determinant-one matrix with real spectrum."""
    half = trace / 2.0
    return half + math.sqrt(max(half * half - 1.0, 0.0))


def operator_norm(m: LinearMap2) -> float:
    """Largest singular value, ``sqrt(lambda_max(M^T M))``."""
    a, b, c, d = (float(e) for e in m.entries())
    # M^T M = [[a^2 + c^2, ab + cd], [ab + cd, b^2 + d^2]]
    p = a * a + c * c
    r = b * b + d * d
    q = a * b + c * d
    trace = p + r
    det_m = a * d - b * c
    if abs(det_m - 1.0) <= 1e-12 or abs(det_m + 1.0) <= 1e-12:
        lam = largest_eigenvalue_det1(trace)
    else:
        half = trace / 2.0
        lam = half + math.sqrt(max((p - r) ** 2 / 4.0 + q * q, 0.0))
    return math.sqrt(lam)


def theta_z(z: PlanarVector) -> float:
    """Rotation angle making ``z`` point straight up: ``pi/2 - arg z``."""
    return math.pi / 2.0 - z.arg()


# --------------------------------------------------------------------------
# derived constants and thresholds


@dataclass(frozen=True)
class DerivedConstants:
    rhoA: float
    rhoHatA: float
    eps0: float


def derived_constants(A: float) -> DerivedConstants:
    rho = 8.0 * A + 16.0 * A * A
    rho_hat = math.sqrt(2.0) * math.sqrt(1.0 + rho) + 2.0 * A
    return DerivedConstants(rhoA=rho, rhoHatA=rho_hat, eps0=8.0 * math.pi * rho_hat)


@dataclass(frozen=True)
class Thresholds:
    """Radii bounding the renormalization regions at time ``t``."""

    t: float
    bottom: float  # e^t / 2
    full_arc: float  # sqrt(cosh(2t)/2)
    top: float  # e^t
    outer: float  # sqrt(2 cosh(2t))
    main_ratio: float  # (1 + e^-4t)^-1/2

    @classmethod
    def at(cls, t: float) -> "Thresholds":
        return cls(
            t=t,
            bottom=math.exp(t) / 2.0,
            full_arc=math.sqrt(math.cosh(2.0 * t) / 2.0),
            top=math.exp(t),
            outer=math.sqrt(2.0 * math.cosh(2.0 * t)),
            main_ratio=1.0 / math.sqrt(1.0 + math.exp(-4.0 * t)),
        )


def large_set_ratio(t: float, A: float) -> float:
    """Bound ``|w| <= sqrt(1 + rho_A e^-4t) |z|`` valid wherever the arc is positive."""
    return math.sqrt(1.0 + derived_constants(A).rhoA * math.exp(-4.0 * t))


def required_radius(t: float, A: float) -> float:
    """Smallest enumeration radius capturing every pair with positive arc."""
    return Thresholds.at(t).outer * large_set_ratio(t, A)


def auto_radius(t: float, A: float) -> float:
    """Default enumeration radius: required radius plus a unit margin."""
    return required_radius(t, A) + 1.0


# --------------------------------------------------------------------------
# scalar predicates shared by every counting path


def wedge_within(z: PlanarVector, w: PlanarVector, A: float) -> bool:
    area = wedge(z, w)
    if z.exact and w.exact:
        return area <= A
    return float(area) <= A + FLOAT_TOL * z.norm() * w.norm()


def norm_le(w: PlanarVector, z: PlanarVector) -> bool:
    """``|w| <= |z|``."""
    if z.exact and w.exact:
        return w.norm2() <= z.norm2()
    return float(w.norm2()) <= float(z.norm2()) * (1.0 + FLOAT_TOL)


def _in_shell(z: PlanarVector, lo: float, hi: float, lo_closed: bool = False) -> bool:
    r2 = float(z.norm2())
    above = r2 >= lo * lo if lo_closed else r2 > lo * lo
    return above and r2 <= hi * hi


def in_desired_set(z: PlanarVector, w: PlanarVector, A: float) -> bool:
    """``w in D_A(z)``: ``|w ^ z| <= A`` and ``|w| <= |z|``."""
    return wedge_within(z, w, A) and norm_le(w, z)


# --------------------------------------------------------------------------
# regions


class RegionTag(enum.Enum):
    Trapezoid = "trapezoid"
    FiberedRA = "fibered_ra"
    MainMt = "main"
    Err1 = "err1"
    Err2 = "err2"
    Err3 = "err3"
    Err4 = "err4"
    LargeLA = "large"
    DAnnulus = "d_annulus"


PAIR_REGIONS = (RegionTag.MainMt, RegionTag.Err1, RegionTag.Err2, RegionTag.Err3, RegionTag.Err4)


@dataclass(frozen=True)
class Region:
    tag: RegionTag
    t: float = 0.0
    A: float = 0.0
    R1: float = 0.0
    R2: float = 0.0

    def __post_init__(self):
        if self.A < 0:
            raise ValueError("A must be nonnegative")
        if self.tag is RegionTag.DAnnulus and not self.R1 < self.R2:
            raise ValueError("DAnnulus needs R1 < R2")

    @property
    def single_argument(self) -> bool:
        return self.tag is RegionTag.Trapezoid

    def support_radius(self) -> float:
        """Radius of a ball containing both coordinates of the region."""
        th = Thresholds.at(self.t)
        if self.tag is RegionTag.Trapezoid:
            return th.outer
        if self.tag is RegionTag.DAnnulus:
            return self.R2
        if self.tag in (RegionTag.MainMt, RegionTag.Err1, RegionTag.Err2):
            return th.top
        if self.tag in (RegionTag.Err3, RegionTag.Err4, RegionTag.LargeLA):
            return required_radius(self.t, self.A)
        return math.inf


def in_trapezoid(z: PlanarVector) -> bool:
    x, y = z.x, z.y
    return 0.5 <= y <= 1 and abs(x) <= y


def contains(region: Region, z: PlanarVector, w: Optional[PlanarVector] = None) -> bool:
    """Membership of ``z`` (or the pair ``(z, w)``) in ``region``.

    Shells in ``|z|`` are half-open ``(lo, hi]`` so that adjacent shells tile
    the plane; all other inequalities follow the printed definitions.
    """
    tag = region.tag
    if tag is RegionTag.Trapezoid:
        return in_trapezoid(apply(gt(region.t), z) if region.t else z)
    if w is None:
        raise ValueError(f"{tag.value} is a pair region; w is required")
    A, t = region.A, region.t

    if tag is RegionTag.FiberedRA:
        if z.y == 0:
            raise InvalidFiber("R_A(z) needs Im z != 0")
        if not wedge_within(z, w, A):
            return False
        if z.exact and w.exact:
            return abs(w.y) <= abs(z.y)
        return abs(float(w.y)) <= abs(float(z.y)) * (1.0 + FLOAT_TOL)

    if tag is RegionTag.DAnnulus:
        return _in_shell(z, region.R1, region.R2) and in_desired_set(z, w, A)

    th = Thresholds.at(t)
    if tag is RegionTag.LargeLA:
        if not _in_shell(z, th.bottom, th.outer, lo_closed=True):
            return False
        if not wedge_within(z, w, A):
            return False
        return float(w.norm2()) <= float(z.norm2()) * large_set_ratio(t, A) ** 2

    if tag in (RegionTag.MainMt, RegionTag.Err2):
        if not (_in_shell(z, th.full_arc, th.top) and in_desired_set(z, w, A)):
            return False
        short = float(w.norm2()) < float(z.norm2()) * th.main_ratio ** 2
        return short if tag is RegionTag.MainMt else not short

    if tag is RegionTag.Err1:
        return _in_shell(z, th.bottom, th.full_arc) and in_desired_set(z, w, A)

    if tag is RegionTag.Err3:
        return float(z.norm2()) > th.top ** 2 and arc_measure_pair(z, w, t, A) > 0

    if tag is RegionTag.Err4:
        if not _in_shell(z, th.bottom, th.top, lo_closed=True) or norm_le(w, z):
            return False
        return arc_measure_pair(z, w, t, A) > 0

    raise ValueError(f"unknown region {tag}")


def classify_pair(z: PlanarVector, w: PlanarVector, t: float, A: float,
                  arc: Optional[float] = None) -> Optional[RegionTag]:
    """Region of the decomposition containing ``(z, w)``, or None.

    Equivalent to testing ``contains`` against the five regions, but computes
    the arc at most once.
    """
    th = Thresholds.at(t)
    r2 = float(z.norm2())
    if th.bottom ** 2 < r2 <= th.top ** 2 and in_desired_set(z, w, A):
        if r2 <= th.full_arc ** 2:
            return RegionTag.Err1
        if float(w.norm2()) < r2 * th.main_ratio ** 2:
            return RegionTag.MainMt
        return RegionTag.Err2
    if arc is None:
        arc = arc_measure_pair(z, w, t, A)
    if arc <= 0:
        return None
    if r2 > th.top ** 2:
        return RegionTag.Err3
    return RegionTag.Err4


# --------------------------------------------------------------------------
# arc measures


def _arc_offsets(radius: float, t: float) -> List[Tuple[float, float]]:
    """Offsets ``delta`` from ``theta_z`` with ``g_t r_(theta_z + delta) z in T``.

    On the circle of radius ``radius`` the point at angle ``pi/2 + delta`` lies
    in ``g_-t T`` iff ``|delta| <= arctan(e^-2t)`` (the slanted edges) and
    ``e^t/2 <= radius cos(delta) <= e^t`` (bottom and top edges).
    """
    e_t = math.exp(t)
    if radius <= e_t / 2.0:
        return []
    half_width = math.atan(math.exp(-2.0 * t))
    upper = min(math.acos(e_t / (2.0 * radius)), half_width)
    lower = math.acos(e_t / radius) if radius > e_t else 0.0
    if upper <= lower:
        return []
    if lower == 0.0:
        return [(-upper, upper)]
    return [(-upper, -lower), (lower, upper)]


def arc_measure_single(z: PlanarVector, t: float) -> float:
    """``|Theta_t(z)|``: measure of ``{theta : g_t r_theta z in T}``."""
    if z.is_zero():
        raise ZeroVector("arc measure of the zero vector")
    return sum(hi - lo for lo, hi in _arc_offsets(z.norm(), t))


def arc_intervals(z: PlanarVector, t: float) -> List[Tuple[float, float]]:
    """The set ``Theta_t(z)`` as absolute angle intervals (not reduced mod 2pi)."""
    base = theta_z(z)
    return [(base + lo, base + hi) for lo, hi in _arc_offsets(z.norm(), t)]


def _im_rotated(v: Tuple[float, float], theta: float) -> float:
    return v[0] * math.sin(theta) + v[1] * math.cos(theta)


def _nonneg_part(v: Tuple[float, float], lo: float, hi: float, tol: float):
    """Sub-interval of ``[lo, hi]`` where ``Im(r_theta v) >= 0``.

    ``Im(r_theta v)`` is a sinusoid with zeros spaced by pi; intervals here are
    shorter than pi, so there is at most one sign change, located by bisection.
    """
    f_lo, f_hi = _im_rotated(v, lo), _im_rotated(v, hi)
    if f_lo >= 0 and f_hi >= 0:
        return lo, hi, 0
    if f_lo < 0 and f_hi < 0:
        return None, None, 0
    a, b = lo, hi
    rising = f_lo < 0
    while b - a > tol:
        mid = 0.5 * (a + b)
        nonneg = _im_rotated(v, mid) >= 0
        if nonneg == rising:
            b = mid
        else:
            a = mid
    root = 0.5 * (a + b)
    return (root, hi, 1) if rising else (lo, root, 1)


def arc_measure_pair_detail(z: PlanarVector, w: PlanarVector, t: float, A: float,
                            tol: float = DEFAULT_ARC_TOL) -> Tuple[float, int]:
    """Arc measure ``|Theta_t(z, w)|`` and the number of bisected endpoints."""
    if tol <= 0:
        raise NonPositiveTolerance(f"tolerance must be positive, got {tol}")
    if z.is_zero():
        raise ZeroVector("arc measure of the zero vector")
    if not wedge_within(z, w, A):
        return 0.0, 0
    zf, wf = z.as_float(), w.as_float()
    diff = (zf[0] - wf[0], zf[1] - wf[1])
    total = (zf[0] + wf[0], zf[1] + wf[1])
    measure, crossings = 0.0, 0
    for lo, hi in arc_intervals(z, t):
        # |Im r w| <= Im r z  <=>  Im r(z - w) >= 0 and Im r(z + w) >= 0
        a1, b1, c1 = _nonneg_part(diff, lo, hi, tol)
        if a1 is None:
            continue
        a2, b2, c2 = _nonneg_part(total, lo, hi, tol)
        crossings += c1 + c2
        if a2 is None:
            continue
        left, right = max(a1, a2), min(b1, b2)
        if right > left:
            measure += right - left
    return measure, crossings


def arc_measure_pair(z: PlanarVector, w: PlanarVector, t: float, A: float,
                     tol: float = DEFAULT_ARC_TOL) -> float:
    """``|Theta_t(z, w)|``: measure of ``{theta : g_t r_theta (z, w) in R_A(T)}``."""
    return arc_measure_pair_detail(z, w, t, A, tol)[0]


# --------------------------------------------------------------------------
# vectorized membership for oracles and Monte Carlo checks


def fibered_trapezoid_mask(z: PlanarVector, w: PlanarVector, t: float, A: float,
                           thetas: np.ndarray) -> np.ndarray:
    """Pointwise indicator of ``g_t r_theta (z, w) in R_A(T)`` over ``thetas``.

    Evaluates the defining inequalities directly on the transformed
    coordinates; used as the sampling oracle for the closed-form arcs.
    """
    zx, zy = z.as_float()
    wx, wy = w.as_float()
    c, s = np.cos(thetas), np.sin(thetas)
    et, emt = math.exp(t), math.exp(-t)
    X = et * (zx * c - zy * s)
    Y = emt * (zx * s + zy * c)
    U = et * (wx * c - wy * s)
    V = emt * (wx * s + wy * c)
    in_t = (Y >= 0.5) & (Y <= 1.0) & (np.abs(X) <= Y)
    area = np.abs(X * V - Y * U)
    return in_t & (np.abs(V) <= np.abs(Y)) & (area <= A + 1e-9 * max(1.0, A))
