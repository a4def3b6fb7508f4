"""Parallel-pair constants for lattice surfaces from cusp data.

Holonomies of a lattice surface split into finitely many orbits, one family
per cusp.  Within a cusp the ``m`` parallel saddle connection lengths
``l_1 >= ... >= l_m`` give ratios ``r_j = l_1 / l_j`` and orbit counts grow
like ``c_1 r_j^2 R^2``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .counting import GrowthFit, _ball, _index, check_radii, count_parallel, growth_fit
from .enumeration import HolonomySet, holonomy_set
from .errors import ConfigError, EmptyCusps, NonDescendingLengths
from .surface import Surface


class Convention(enum.Enum):
    AsPrinted = "as-printed"
    OrderedPairs = "ordered-pairs"


@dataclass(frozen=True)
class Cusp:
    c1: float
    lengths: Tuple[float, ...]

    @property
    def ratios(self) -> Tuple[float, ...]:
        return tuple(self.lengths[0] / l for l in self.lengths)


@dataclass(frozen=True)
class CuspData:
    cusps: Tuple[Cusp, ...]

    def scaled(self, i: int, factor: float) -> "CuspData":
        """Rescale every length of cusp ``i``."""
        cusps = list(self.cusps)
        c = cusps[i]
        cusps[i] = Cusp(c.c1, tuple(l * factor for l in c.lengths))
        return CuspData(tuple(cusps))


def cusp_data_new(cusps: Sequence[dict]) -> CuspData:
    if not cusps:
        raise EmptyCusps("cusp data needs at least one cusp")
    out = []
    for k, c in enumerate(cusps):
        try:
            c1 = float(c["c1"])
            lengths = tuple(float(l) for l in c["lengths"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"cusp {k}: expected {{'c1': real, 'lengths': [reals]}} ({exc})") from exc
        if not c1 > 0:
            raise ConfigError(f"cusp {k}: c1 must be positive, got {c1}")
        if not lengths:
            raise EmptyCusps(f"cusp {k}: lengths must be nonempty")
        if any(not l > 0 or not math.isfinite(l) for l in lengths):
            raise ConfigError(f"cusp {k}: lengths must be positive and finite")
        for j in range(1, len(lengths)):
            if lengths[j] > lengths[j - 1]:
                raise NonDescendingLengths(
                    f"cusp {k}: lengths[{j}] = {lengths[j]} exceeds lengths[{j - 1}] = {lengths[j - 1]}")
        ratio = lengths[0] / lengths[-1]
        if not math.isfinite(ratio * ratio):
            raise ConfigError(f"cusp {k}: length ratio {lengths[0]} / {lengths[-1]} overflows")
        out.append(Cusp(c1, lengths))
    return CuspData(tuple(out))


def load_cusp_data(source: Union[str, Path, dict]) -> CuspData:
    if isinstance(source, dict):
        doc = source
    else:
        try:
            doc = json.loads(Path(source).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "cusps" not in doc:
        raise ConfigError("cusp file must be an object with a 'cusps' list")
    return cusp_data_new(doc["cusps"])


def lattice_constant(data: CuspData, convention: Convention = Convention.OrderedPairs) -> float:
    """Growth constant ``c`` of ``N_0(omega, R) ~ c R^2`` from cusp data.

    ``AsPrinted``: sum_i c1 sum_{j=1}^{m-1} (j - 1) r_j^2.
    ``OrderedPairs``: sum_i c1 sum_{j=1}^{m} (m - j) r_j^2, which counts for
    each shorter vector the longer parallel partners in its cusp.
    """
    convention = Convention(convention)
    total = []
    for cusp in data.cusps:
        r2 = [r * r for r in cusp.ratios]
        m = len(r2)
        if convention is Convention.AsPrinted:
            inner = math.fsum((j - 1) * r2[j - 1] for j in range(1, m))
        else:
            inner = math.fsum((m - j) * r2[j - 1] for j in range(1, m + 1))
        total.append(cusp.c1 * inner)
    return math.fsum(total)


def parallel_growth(surface: Union[Surface, HolonomySet], radii: Sequence[float],
                    include_equal: bool = False, include_opposite: bool = True) -> GrowthFit:
    """``N_0(omega, R) / R^2`` per radius."""
    radii = check_radii(radii, minimum=1)
    lam = surface if isinstance(surface, HolonomySet) else holonomy_set(surface, radii[-1])
    return growth_fit(radii, [count_parallel(lam, R, include_equal, include_opposite) for R in radii])


def min_positive_wedge(lam: HolonomySet, R: Optional[float] = None, cap: float = 1.0) -> Optional[float]:
    """Smallest nonzero ``|z ^ w|`` over pairs in ``Lambda(R)``, searched below ``cap``.

    Returns None when no pair has virtual area in ``(0, cap]``.  Lattice
    surfaces have a positive minimum (no small virtual triangles).
    """
    idx = _index(lam)
    zi = _ball(idx, lam.radius if R is None else R)
    i, j = idx.pairs(zi, cap)
    inside = np.isin(j, zi)
    i, j = i[inside], j[inside]
    xy = idx.xy
    area = np.abs(xy[i, 0] * xy[j, 1] - xy[i, 1] * xy[j, 0]).astype(np.float64)
    if not idx.exact:
        area[area <= 1e-12 * idx.r[i] * idx.r[j]] = 0.0
    positive = area[area > 0]
    return float(positive.min()) if positive.size else None
