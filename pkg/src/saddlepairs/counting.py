"""Counting functions over holonomy sets.

All counts reduce to one primitive: for a set of ``z`` indices, list every
``w`` with ``|z ^ w| <= A`` under a norm cap.  Points are bucketed into
dyadic radial shells and sorted by angle; since ``|z ^ w| = |z||w| |sin dphi|``
only two angular windows per shell can contain partners.  Candidates are then
filtered with the same exact predicates as :mod:`saddlepairs.planar`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .enumeration import HolonomySet, holonomy_set
from .errors import (EnumerationRadiusTooSmall, InsufficientRadii, NonPositiveTolerance,
                     RadiusExceedsEnumeration)
from .planar import (FLOAT_TOL, PAIR_REGIONS, DEFAULT_ARC_TOL, PlanarVector, RegionTag,
                     Thresholds, arc_measure_pair_detail, classify_pair, large_set_ratio,
                     required_radius)
from .surface import Surface

TWO_PI = 2.0 * math.pi
_ANGLE_MARGIN = 1e-7
_CHUNK = 2048


class PairIndex:
    """Angular/radial index over the vectors of a holonomy set."""

    def __init__(self, xy: np.ndarray, exact: bool):
        self.xy = xy
        self.exact = exact
        self.n = len(xy)
        if exact:
            self.r2 = xy[:, 0] * xy[:, 0] + xy[:, 1] * xy[:, 1]
        else:
            self.r2 = xy[:, 0] ** 2 + xy[:, 1] ** 2
        xf = xy.astype(np.float64)
        self.r = np.sqrt(self.r2.astype(np.float64))
        self.phi = np.mod(np.arctan2(xf[:, 1], xf[:, 0]), TWO_PI)
        self.shells = []
        if self.n == 0:
            return
        level = np.floor(np.log2(self.r)).astype(np.int64)
        for k in np.unique(level):
            members = np.nonzero(level == k)[0]
            order = members[np.argsort(self.phi[members], kind="stable")]
            phis = self.phi[order]
            self.shells.append((
                float(2.0 ** k),
                float(self.r[members].max()),
                np.concatenate([phis, phis + TWO_PI]),
                np.concatenate([order, order]),
            ))

    def wedge_ok(self, i: np.ndarray, j: np.ndarray, A: float) -> np.ndarray:
        zx, zy = self.xy[i, 0], self.xy[i, 1]
        wx, wy = self.xy[j, 0], self.xy[j, 1]
        area = np.abs(zx * wy - zy * wx)
        if self.exact:
            return area <= A
        return area <= A + FLOAT_TOL * self.r[i] * self.r[j]

    def norm_le(self, j: np.ndarray, i: np.ndarray) -> np.ndarray:
        """``|w_j| <= |z_i|`` with the shared tolerance convention."""
        if self.exact:
            return self.r2[j] <= self.r2[i]
        return self.r2[j] <= self.r2[i] * (1.0 + FLOAT_TOL)

    def _windows(self, zi: np.ndarray, A: float, rmax: np.ndarray):
        """Candidate (i, j) pairs from angular windows, over all shells."""
        out_i, out_j = [], []
        rz = self.r[zi]
        pz = self.phi[zi]
        for rlo, rhi, phis, idx in self.shells:
            live = rlo <= rmax
            if not live.any():
                continue
            zs, rzs, pzs = zi[live], rz[live], pz[live]
            bound = A + FLOAT_TOL * rzs * rhi + 1e-12
            s = bound / (rzs * rlo)
            # wide windows: scanning the shell is cheaper and avoids overlap
            whole = s >= 0.5
            npts = len(phis) // 2
            if whole.any():
                zw = zs[whole]
                out_i.append(np.repeat(zw, npts))
                out_j.append(np.tile(idx[:npts], len(zw)))
            part = ~whole
            if not part.any():
                continue
            zs, pzs = zs[part], pzs[part]
            half = np.arcsin(s[part]) + _ANGLE_MARGIN
            for centre in (pzs, np.mod(pzs + math.pi, TWO_PI)):
                lo = centre - half
                hi = centre + half
                wrap = lo < 0
                lo = np.where(wrap, lo + TWO_PI, lo)
                hi = np.where(wrap, hi + TWO_PI, hi)
                a = np.searchsorted(phis, lo, side="left")
                b = np.searchsorted(phis, hi, side="right")
                counts = b - a
                total = int(counts.sum())
                if total == 0:
                    continue
                rep_i = np.repeat(zs, counts)
                starts = np.repeat(a, counts)
                offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
                out_i.append(rep_i)
                out_j.append(idx[starts + offsets])
        if not out_i:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        return np.concatenate(out_i), np.concatenate(out_j)

    def pairs(self, zi: np.ndarray, A: float, rmax: Optional[np.ndarray] = None):
        """All ``(i, j)`` with ``i`` in ``zi`` and ``|z_i ^ w_j| <= A``.

        ``rmax`` (per ``i``) lets whole shells beyond a known norm cap be
        skipped; it is a pruning hint, not a filter.
        """
        zi = np.asarray(zi, dtype=np.int64)
        if rmax is None:
            rmax = np.full(len(zi), np.inf)
        parts_i, parts_j = [], []
        for start in range(0, len(zi), _CHUNK):
            sl = slice(start, start + _CHUNK)
            ci, cj = self._windows(zi[sl], A, rmax[sl])
            keep = self.wedge_ok(ci, cj, A)
            parts_i.append(ci[keep])
            parts_j.append(cj[keep])
        if not parts_i:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        return np.concatenate(parts_i), np.concatenate(parts_j)


def _index(lam: HolonomySet) -> PairIndex:
    cache = lam.__dict__.get("_pair_index")
    if cache is None:
        cache = PairIndex(lam.xy, lam.exact)
        object.__setattr__(lam, "_pair_index", cache)
    return cache


def _check_radius(lam: HolonomySet, R: float) -> None:
    if R > lam.radius * (1.0 + 1e-12):
        raise RadiusExceedsEnumeration(f"R = {R} exceeds enumeration radius {lam.radius}")


def _ball(idx: PairIndex, R: float, lo: Optional[float] = None) -> np.ndarray:
    """Indices with ``lo < |z| <= R``."""
    r2 = idx.r2.astype(np.float64)
    mask = r2 <= R * R
    if lo is not None:
        mask &= r2 > lo * lo
    return np.nonzero(mask)[0]


def _weighted(lam: HolonomySet, i: np.ndarray, j: np.ndarray, include_equal: bool) -> int:
    wts = lam.weights
    total = int(np.sum(wts[i] * wts[j]))
    if not include_equal:
        diag = i == j
        # a vector paired with itself: drop the m pairs of a connection with itself
        total -= int(np.sum(wts[i[diag]]))
    return total


def count_single(lam: HolonomySet, R: float) -> int:
    """``N(omega, R)``: holonomy vectors of length at most ``R``."""
    _check_radius(lam, R)
    idx = _index(lam)
    sel = _ball(idx, R)
    return int(lam.weights[sel].sum())


def _pairs_under(lam: HolonomySet, R: float, A: float, lo: Optional[float] = None):
    idx = _index(lam)
    zi = _ball(idx, R, lo)
    i, j = idx.pairs(zi, A, idx.r[zi])
    keep = idx.norm_le(j, i)
    return i[keep], j[keep]


def count_pairs(lam: HolonomySet, R: float, A: float, include_equal: bool = True) -> int:
    """``N_A(omega, R)``: ordered pairs with ``|z ^ w| <= A`` and ``|w| <= |z| <= R``."""
    _check_radius(lam, R)
    if A < 0:
        raise ValueError("A must be nonnegative")
    i, j = _pairs_under(lam, R, A)
    return _weighted(lam, i, j, include_equal)


def count_pairs_annulus(lam: HolonomySet, R: float, A: float, include_equal: bool = True) -> int:
    """``N_A^*(omega, R)``: as :func:`count_pairs` with ``z`` in the shell ``R/2 < |z| <= R``."""
    _check_radius(lam, R)
    if A < 0:
        raise ValueError("A must be nonnegative")
    i, j = _pairs_under(lam, R, A, lo=R / 2.0)
    return _weighted(lam, i, j, include_equal)


def count_parallel(lam: HolonomySet, R: float, include_equal: bool = False,
                   include_opposite: bool = True) -> int:
    """``N_0(omega, R)``: ordered pairs with ``z ^ w = 0`` and ``|z| <= |w| <= R``.

    ``include_opposite=False`` also drops ``w = -z``, leaving only pairs that
    are parallel for a reason other than orientation reversal.
    """
    _check_radius(lam, R)
    idx = _index(lam)
    wi = _ball(idx, R)
    # roles swapped: index the longer vector w, search partners z with |z| <= |w|
    j, i = idx.pairs(wi, 0.0, idx.r[wi])
    keep = idx.norm_le(i, j)
    i, j = i[keep], j[keep]
    if not include_opposite:
        xy = idx.xy
        if idx.exact:
            opp = (xy[i, 0] == -xy[j, 0]) & (xy[i, 1] == -xy[j, 1])
        else:
            scale = np.maximum(1.0, idx.r[i])
            opp = np.hypot(xy[i, 0] + xy[j, 0], xy[i, 1] + xy[j, 1]) <= 1e-9 * scale
        i, j = i[~opp], j[~opp]
    return _weighted(lam, i, j, include_equal)


# --------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class PairCountReport:
    R: float
    A: float
    N: int
    N_A: int
    N_A_star: int
    N_0: int

    @property
    def normalized_N_A(self) -> float:
        return self.N_A / self.R ** 2

    @property
    def normalized_N_0(self) -> float:
        return self.N_0 / self.R ** 2

    def to_dict(self) -> dict:
        d = asdict(self)
        d["normalized_N_A"] = self.normalized_N_A
        d["normalized_N_0"] = self.normalized_N_0
        return d


def pair_count_report(lam: HolonomySet, R: float, A: float, include_equal: bool = True,
                      parallel_include_equal: bool = False,
                      include_opposite: bool = True) -> PairCountReport:
    return PairCountReport(
        R=R, A=A,
        N=count_single(lam, R),
        N_A=count_pairs(lam, R, A, include_equal),
        N_A_star=count_pairs_annulus(lam, R, A, include_equal),
        N_0=count_parallel(lam, R, parallel_include_equal, include_opposite),
    )


@dataclass(frozen=True)
class ErrorDecomposition:
    t: float
    A: float
    m_t: float
    e1: float
    e2: float
    e3: float
    e4: float
    N_A_star: int
    circle_average: float
    residual: float
    positive_arc_pairs: int
    region_counts: Dict[str, int] = field(default_factory=dict)
    tol: float = DEFAULT_ARC_TOL

    @property
    def pi_e2t_average(self) -> float:
        return math.pi * math.exp(2.0 * self.t) * self.circle_average

    @property
    def residual_bound(self) -> float:
        return 2.0 * self.tol * math.pi * math.exp(2.0 * self.t) * self.positive_arc_pairs

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pi_e2t_average"] = self.pi_e2t_average
        d["residual_bound"] = self.residual_bound
        return d


def minimum_decomposition_radius(t: float, A: float) -> float:
    """Enumeration radius required before decomposing at time ``t``."""
    return max(math.exp(t) * math.sqrt(2.0) + 1.0, required_radius(t, A))


@dataclass(frozen=True)
class PairArc:
    i: int
    j: int
    arc: float
    crossings: int


def positive_arc_candidates(lam: HolonomySet, t: float, A: float):
    """Index pairs that can have positive arc or lie in ``D_A(e^t/2, e^t)``.

    If ``g_t r_theta (z, w)`` lies in ``R_A(T)`` then ``|z|^2 <= 2 cosh 2t``
    and ``|w|^2 <= (1 + rho_A e^-4t) |z|^2``; both bounds are applied with a
    small relative margin and the exact arc decides the rest.
    """
    th = Thresholds.at(t)
    idx = _index(lam)
    zi = _ball(idx, th.outer * (1.0 + 1e-9), lo=th.bottom * (1.0 - 1e-12))
    cap = idx.r[zi] * large_set_ratio(t, A) * (1.0 + 1e-9)
    i, j = idx.pairs(zi, A, cap)
    keep = idx.r[j] <= cap[np.searchsorted(zi, i)]
    return i[keep], j[keep]


def error_decomposition(lam: HolonomySet, t: float, A: float, tol: float = DEFAULT_ARC_TOL) -> ErrorDecomposition:
    """Split ``N_A^*(e^t) - pi e^2t (A_t h_A)`` into the main and error terms."""
    if tol <= 0:
        raise NonPositiveTolerance(f"tolerance must be positive, got {tol}")
    need = minimum_decomposition_radius(t, A)
    if lam.radius < need:
        raise EnumerationRadiusTooSmall(
            f"enumeration radius {lam.radius} below {need} needed at t={t}, A={A}")
    e2t = math.exp(2.0 * t)
    half_e2t = 0.5 * e2t  # pi e^2t / (2 pi)
    i, j = positive_arc_candidates(lam, t, A)
    vecs = lam.vectors
    wts = lam.weights
    sums: Dict[RegionTag, List[float]] = {tag: [] for tag in PAIR_REGIONS}
    counts = {tag.value: 0 for tag in PAIR_REGIONS}
    arcs: List[float] = []
    n_star = 0
    positive = 0
    for a, b in zip(i.tolist(), j.tolist()):
        z, w = vecs[a], vecs[b]
        arc, _ = arc_measure_pair_detail(z, w, t, A, tol)
        tag = classify_pair(z, w, t, A, arc)
        if tag is None:
            continue
        mult = int(wts[a] * wts[b])
        indicator = 1 if tag in (RegionTag.MainMt, RegionTag.Err1, RegionTag.Err2) else 0
        sums[tag].append(mult * (indicator - half_e2t * arc))
        counts[tag.value] += mult
        n_star += mult * indicator
        arcs.append(mult * arc)
        if arc > 0:
            positive += mult
    circle_average = math.fsum(arcs) / TWO_PI
    parts = {tag: math.fsum(v) for tag, v in sums.items()}
    total = math.fsum(parts.values())
    residual = abs(n_star - math.pi * e2t * circle_average - total)
    return ErrorDecomposition(
        t=t, A=A,
        m_t=parts[RegionTag.MainMt], e1=parts[RegionTag.Err1], e2=parts[RegionTag.Err2],
        e3=parts[RegionTag.Err3], e4=parts[RegionTag.Err4],
        N_A_star=n_star, circle_average=circle_average, residual=residual,
        positive_arc_pairs=positive, region_counts=counts, tol=tol,
    )


# --------------------------------------------------------------------------
# growth


@dataclass(frozen=True)
class GrowthFit:
    radii: Tuple[float, ...]
    ratios: Tuple[float, ...]
    mean: float
    coefficient_of_variation: float
    counts: Tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return asdict(self)


def growth_fit(radii: Sequence[float], counts: Sequence[float]) -> GrowthFit:
    """Ratios ``count / R^2`` with mean and (sample) coefficient of variation."""
    ratios = np.array([c / (r * r) for r, c in zip(radii, counts)], dtype=np.float64)
    mean = float(ratios.mean()) if len(ratios) else 0.0
    if len(ratios) > 1 and mean != 0:
        cv = float(ratios.std(ddof=1) / abs(mean))
    else:
        cv = 0.0
    return GrowthFit(tuple(float(r) for r in radii), tuple(float(x) for x in ratios), mean, cv,
                     tuple(counts))


def check_radii(radii: Sequence[float], minimum: int = 3) -> List[float]:
    radii = [float(r) for r in radii]
    if len(radii) < minimum:
        raise InsufficientRadii(f"need at least {minimum} radii, got {len(radii)}")
    if any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise InsufficientRadii(f"radii must be positive and strictly increasing: {radii}")
    return radii


def estimate_cA(surface: Surface, A: float, radii: Sequence[float], include_equal: bool = True,
                dedupe: bool = True) -> GrowthFit:
    """``N_A(omega, R) / R^2`` over ``radii``; reports only, asserts no limit."""
    radii = check_radii(radii)
    lam = holonomy_set(surface, radii[-1], dedupe=dedupe)
    return growth_fit(radii, [count_pairs(lam, R, A, include_equal) for R in radii])


# --------------------------------------------------------------------------
# serialization

REPORT_COLUMNS = ("R", "A", "N", "N_A", "N_A_star", "N_0", "ratio")


def reports_to_csv(reports: Sequence[PairCountReport], header_comment: Optional[str] = None) -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in reports:
        writer.writerow([format(r.R, ".17g"), format(r.A, ".17g"), r.N, r.N_A, r.N_A_star, r.N_0,
                         format(r.normalized_N_A, ".17g")])
    return buf.getvalue()


def decomposition_to_json(d: ErrorDecomposition) -> str:
    return json.dumps(d.to_dict(), sort_keys=True)
