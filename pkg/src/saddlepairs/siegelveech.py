"""Siegel-Veech transforms of region indicators and their circle averages.

The circle average of a transform is computed by swapping the sum over
holonomy pairs with the integral over ``theta``: only finitely many pairs have
a positive arc, and each arc is known in closed form up to bisection.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional, Union

import numpy as np

from .counting import _index, count_pairs_annulus, positive_arc_candidates
from .enumeration import HolonomySet, holonomy_set
from .errors import EnumerationRadiusTooSmall, NonPositiveTolerance, SupportNotCovered
from .planar import (DEFAULT_ARC_TOL, Region, arc_measure_pair, auto_radius, contains,
                     required_radius)
from .surface import Surface

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TransformRequest:
    region: Region
    surface: Surface
    radius: float

    def __post_init__(self):
        need = self.region.support_radius()
        if self.radius < need:
            raise SupportNotCovered(
                f"enumeration radius {self.radius} does not cover support radius {need} "
                f"of {self.region.tag.value}")


def _holonomies_for(source: Union[Surface, HolonomySet], t: float, A: float) -> HolonomySet:
    """Enumerate at the default radius, or check a supplied set covers every positive arc."""
    if isinstance(source, HolonomySet):
        need = required_radius(t, A)
        if source.radius < need:
            raise EnumerationRadiusTooSmall(
                f"holonomy set radius {source.radius} below required {need} at t={t}, A={A}")
        return source
    return holonomy_set(source, auto_radius(t, A))


def sv_transform(req: TransformRequest, lam: Optional[HolonomySet] = None) -> int:
    """Number of holonomy vectors (or ordered pairs) inside ``req.region``."""
    if lam is None:
        lam = holonomy_set(req.surface, req.radius)
    region = req.region
    vecs = lam.vectors
    weights = lam.weights
    if region.single_argument:
        return int(sum(int(m) for v, m in zip(vecs, weights) if contains(region, v)))
    idx = _index(lam)
    support = region.support_radius()
    zi = np.nonzero(idx.r <= support * (1.0 + 1e-12))[0]
    # every pair region bounds |z ^ w| by A
    i, j = idx.pairs(zi, region.A)
    total = 0
    for a, b in zip(i.tolist(), j.tolist()):
        if contains(region, vecs[a], vecs[b]):
            total += int(weights[a] * weights[b])
    return total


def circle_average_transform(source: Union[Surface, HolonomySet], t: float, A: float,
                             tol: float = DEFAULT_ARC_TOL) -> float:
    """``(A_t h_A^)(omega) = (1/2pi) sum over pairs of |Theta_t(z, w)|``."""
    if tol <= 0:
        raise NonPositiveTolerance(f"tolerance must be positive, got {tol}")
    lam = _holonomies_for(source, t, A)
    vecs = lam.vectors
    weights = lam.weights
    i, j = positive_arc_candidates(lam, t, A)
    arcs = [int(weights[a] * weights[b]) * arc_measure_pair(vecs[a], vecs[b], t, A, tol)
            for a, b in zip(i.tolist(), j.tolist())]
    return math.fsum(arcs) / TWO_PI


@dataclass(frozen=True)
class ApproximationReport:
    t: float
    A: float
    N_A_star: int
    circle_average: float
    pi_e2t_average: float
    normalized_error: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def approximation_report(source: Union[Surface, HolonomySet], t: float, A: float,
                         tol: float = DEFAULT_ARC_TOL) -> ApproximationReport:
    lam = _holonomies_for(source, t, A)
    n_star = count_pairs_annulus(lam, math.exp(t), A)
    avg = circle_average_transform(lam, t, A, tol)
    scaled = math.pi * math.exp(2.0 * t) * avg
    return ApproximationReport(t=t, A=A, N_A_star=n_star, circle_average=avg,
                               pi_e2t_average=scaled,
                               normalized_error=abs(n_star - scaled) / math.exp(2.0 * t))


def approximation_error(source: Union[Surface, HolonomySet], t: float, A: float,
                        tol: float = DEFAULT_ARC_TOL) -> float:
    """``|N_A^*(omega, e^t) - pi e^2t (A_t h_A^)(omega)| / e^2t``."""
    return approximation_report(source, t, A, tol).normalized_error
