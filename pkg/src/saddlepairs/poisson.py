"""Planar Poisson process baseline.

Samples are drawn from numpy's Philox counter-based generator; trial ``k`` of
a run seeded with ``s`` uses the stream ``SeedSequence([s, k])``, so trials are
independent of scheduling and reproducible across machines.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, stats

from .counting import GrowthFit, PairIndex, check_radii, growth_fit
from .errors import ConfigError, NonPositiveParams, OverlappingCells
from .planar import PlanarVector

GENERATOR = "numpy Philox(SeedSequence([seed, trial]))"


def rng_for(seed: int, trial: int = 0) -> np.random.Generator:
    if seed < 0 or trial < 0:
        raise ConfigError("seed and trial index must be nonnegative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


@dataclass(frozen=True, eq=False)
class PoissonSample:
    intensity: float
    window_radius: float
    xy: np.ndarray
    seed: int
    trial: int = 0

    def __len__(self) -> int:
        return len(self.xy)

    @cached_property
    def points(self) -> Tuple[PlanarVector, ...]:
        return tuple(PlanarVector(float(x), float(y)) for x, y in self.xy)


def _positive(**params) -> None:
    for name, value in params.items():
        if not value > 0 or not math.isfinite(value):
            raise NonPositiveParams(f"{name} must be positive and finite, got {value}")


def sample(rho: float, r: float, seed: int, trial: int = 0) -> PoissonSample:
    """Poisson process of intensity ``rho`` restricted to the disk of radius ``r``."""
    _positive(rho=rho, r=r)
    rng = rng_for(seed, trial)
    k = int(rng.poisson(rho * math.pi * r * r))
    u = rng.random(k)
    phi = rng.random(k) * (2.0 * math.pi)
    rad = r * np.sqrt(u)
    xy = np.column_stack([rad * np.cos(phi), rad * np.sin(phi)])
    return PoissonSample(rho, r, xy, seed, trial)


# --------------------------------------------------------------------------
# cell counts

Box = Tuple[float, float, float, float]  # x0, y0, x1, y1


def _check_cells(cells: Sequence[Box]) -> List[Box]:
    out = []
    for k, c in enumerate(cells):
        if len(c) != 4:
            raise ConfigError(f"cell {k}: expected (x0, y0, x1, y1)")
        x0, y0, x1, y1 = map(float, c)
        if x1 < x0 or y1 < y0:
            raise ConfigError(f"cell {k}: corners out of order")
        out.append((x0, y0, x1, y1))
    for a in range(len(out)):
        for b in range(a + 1, len(out)):
            p, q = out[a], out[b]
            if min(p[2], q[2]) > max(p[0], q[0]) and min(p[3], q[3]) > max(p[1], q[1]):
                raise OverlappingCells(f"cells {a} and {b} overlap")
    return out


def _cell_counts(xy: np.ndarray, cells: Sequence[Box]) -> List[int]:
    x, y = xy[:, 0], xy[:, 1]
    return [int(np.count_nonzero((x >= x0) & (x < x1) & (y >= y0) & (y < y1)))
            for x0, y0, x1, y1 in cells]


@dataclass(frozen=True)
class CellTest:
    cell: Box
    area: float
    mean: float
    expected_mean: float
    p_zero: float
    expected_p_zero: float
    chi2: float
    dof: int
    p_value: float


@dataclass(frozen=True)
class CellCountReport:
    trials: int
    window_radius: float
    cells: Tuple[CellTest, ...]
    correlations: Tuple[Tuple[int, int, float], ...]

    def passes(self, significance: float = 0.01) -> bool:
        return all(c.p_value >= significance for c in self.cells)

    def to_dict(self) -> dict:
        return asdict(self)


def poisson_chi_square(counts: np.ndarray, mean: float, min_expected: float = 5.0):
    """Goodness of fit of integer ``counts`` to Poisson(``mean``), pooling sparse bins."""
    n = len(counts)
    if mean == 0:
        stat = 0.0 if np.all(counts == 0) else math.inf
        return stat, 0, 1.0 if stat == 0 else 0.0
    kmax = int(max(counts.max(), stats.poisson.ppf(1 - 1e-12, mean))) + 1
    observed = np.bincount(counts, minlength=kmax + 1)[: kmax + 1].astype(float)
    probs = stats.poisson.pmf(np.arange(kmax + 1), mean)
    probs[-1] += stats.poisson.sf(kmax, mean)
    expected = probs * n
    # pool adjacent bins left to right until each holds enough expected mass; the
    # remainder joins the last bin
    bins_o, bins_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            bins_o.append(acc_o)
            bins_e.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if bins_e:
            bins_o[-1] += acc_o
            bins_e[-1] += acc_e
        else:
            bins_o.append(acc_o)
            bins_e.append(acc_e)
    o, e = np.array(bins_o), np.array(bins_e)
    dof = len(o) - 1
    if dof < 1:
        return 0.0, 0, 1.0
    stat = float(np.sum((o - e) ** 2 / e))
    return stat, dof, float(stats.chi2.sf(stat, dof))


def cell_count_test(rho: float, cells: Sequence[Box], trials: int, seed: int,
                    window_radius: Optional[float] = None) -> CellCountReport:
    """Compare joint cell counts with independent Poisson(rho * area) marginals."""
    _positive(rho=rho, trials=trials)
    boxes = _check_cells(cells)
    reach = max(math.hypot(x, y) for b in boxes for x in (b[0], b[2]) for y in (b[1], b[3]))
    r = window_radius if window_radius is not None else max(reach, 1e-9)
    if r < reach:
        raise ConfigError(f"cells extend to radius {reach}, beyond window radius {r}")
    table = np.array([_cell_counts(sample(rho, r, seed, k).xy, boxes) for k in range(trials)],
                     dtype=np.int64).reshape(trials, len(boxes))
    tests = []
    for c, box in enumerate(boxes):
        area = (box[2] - box[0]) * (box[3] - box[1])
        counts = table[:, c]
        stat, dof, p = poisson_chi_square(counts, rho * area)
        tests.append(CellTest(box, area, float(counts.mean()), rho * area,
                              float(np.mean(counts == 0)), math.exp(-rho * area), stat, dof, p))
    corr = []
    for a in range(len(boxes)):
        for b in range(a + 1, len(boxes)):
            x, y = table[:, a].astype(float), table[:, b].astype(float)
            if x.std() == 0 or y.std() == 0:
                corr.append((a, b, 0.0))
            else:
                corr.append((a, b, float(np.corrcoef(x, y)[0, 1])))
    return CellCountReport(trials, r, tuple(tests), tuple(corr))


# --------------------------------------------------------------------------
# pair counts


def count_pairs_xy(xy: np.ndarray, R: float, A: float, include_equal: bool = False) -> int:
    """``N_A`` over a float point set: ordered pairs, ``|w| <= |z| <= R``, ``|z ^ w| <= A``."""
    idx = PairIndex(np.asarray(xy, dtype=np.float64), exact=False)
    zi = np.nonzero(idx.r <= R)[0]
    i, j = idx.pairs(zi, A, idx.r[zi])
    keep = idx.norm_le(j, i)
    if not include_equal:
        keep &= i != j
    return int(np.count_nonzero(keep))


def strip_disk_area(r: float, h: float) -> float:
    """Area of ``{|w| <= r, |w_perp| <= h}``: a disk cut by a centred strip of half-width ``h``."""
    if h >= r:
        return math.pi * r * r
    return 2.0 * (h * math.sqrt(r * r - h * h) + r * r * math.asin(h / r))


def pair_volume_quad(A: float, R: float) -> float:
    """``vol D_A(R)`` by one-dimensional quadrature over ``|z|``."""
    if A == 0:
        return 0.0
    f = lambda r: 2.0 * math.pi * r * strip_disk_area(r, A / r) if r > 0 else 0.0
    knot = math.sqrt(A)  # below this the strip covers the whole disk
    pts = [knot] if 0 < knot < R else None
    val, _ = integrate.quad(f, 0.0, R, points=pts, limit=200, epsabs=0, epsrel=1e-12)
    return val


@dataclass(frozen=True)
class VolumeEstimate:
    A: float
    R: float
    volume: float
    standard_error: float
    samples: int


def pair_volume_mc(A: float, R: float, samples: int = 10 ** 7, seed: int = 0,
                   chunk: int = 10 ** 6) -> VolumeEstimate:
    """Hit-or-miss Monte Carlo for ``vol{(z, w): |w| <= |z| <= R, |z ^ w| <= A}``."""
    _positive(R=R, samples=samples)
    if A < 0:
        raise NonPositiveParams("A must be nonnegative")
    rng = rng_for(seed, 2 ** 32 - 1)
    hits = 0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        rz = R * np.sqrt(rng.random(m))
        pz = rng.random(m) * (2 * math.pi)
        rw = R * np.sqrt(rng.random(m))
        pw = rng.random(m) * (2 * math.pi)
        wedge = np.abs(rz * rw * np.sin(pw - pz))
        hits += int(np.count_nonzero((rw <= rz) & (wedge <= A)))
        done += m
    box = (math.pi * R * R) ** 2
    p = hits / samples
    return VolumeEstimate(A, R, box * p, box * math.sqrt(p * (1 - p) / samples), samples)


@dataclass(frozen=True)
class PoissonGrowthFit(GrowthFit):
    predicted: Tuple[float, ...] = ()
    ratio_to_prediction: Tuple[float, ...] = ()
    standard_errors: Tuple[float, ...] = ()
    trials: int = 0
    generator: str = GENERATOR


def _trial_counts(args) -> List[Tuple[int, int]]:
    rho, A, radii, seed, trial = args
    pts = sample(rho, radii[-1], seed, trial).xy
    idx = PairIndex(pts, exact=False)
    out = []
    for R in radii:
        zi = np.nonzero(idx.r <= R)[0]
        i, j = idx.pairs(zi, A, idx.r[zi])
        keep = idx.norm_le(j, i) & (i != j)
        out.append((len(zi), int(np.count_nonzero(keep))))
    return out


def trial_table(rho: float, A: float, radii: Sequence[float], trials: int, seed: int,
                workers: int = 1) -> List[Tuple[int, float, int, int]]:
    """Rows ``(trial, R, N, N_A)``; trial ``k`` uses stream ``k`` at the largest radius."""
    _positive(rho=rho, trials=trials)
    if A < 0:
        raise NonPositiveParams("A must be nonnegative")
    radii = [float(r) for r in radii]
    jobs = [(rho, A, radii, seed, k) for k in range(trials)]
    if workers > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_trial = list(pool.map(_trial_counts, jobs, chunksize=max(1, trials // (4 * workers))))
    else:
        per_trial = [_trial_counts(j) for j in jobs]
    return [(k, R, n, na) for k, counts in enumerate(per_trial) for R, (n, na) in zip(radii, counts)]


def summarize_pair_table(rho: float, A: float, radii: Sequence[float],
                         table: Sequence[Tuple[int, float, int, int]], trials: int, seed: int,
                         volume_samples: int = 10 ** 7) -> PoissonGrowthFit:
    radii = [float(r) for r in radii]
    na = np.zeros((trials, len(radii)))
    col = {R: c for c, R in enumerate(radii)}
    for k, R, _, n_a in table:
        na[k, col[R]] = n_a
    means = na.mean(axis=0)
    ses = na.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros(len(radii))
    base = growth_fit(radii, list(means))
    predicted = [rho * rho * pair_volume_mc(A, R, volume_samples, seed).volume / (R * R) for R in radii]
    ratio = [e / p if p > 0 else (1.0 if e == 0 else math.inf) for e, p in zip(base.ratios, predicted)]
    return PoissonGrowthFit(
        radii=base.radii, ratios=base.ratios, mean=base.mean,
        coefficient_of_variation=base.coefficient_of_variation,
        counts=tuple(float(m) for m in means),
        predicted=tuple(predicted), ratio_to_prediction=tuple(ratio),
        standard_errors=tuple(float(s / (R * R)) for s, R in zip(ses, radii)),
        trials=trials,
    )


def poisson_pair_growth(rho: float, A: float, radii: Sequence[float], trials: int, seed: int,
                        volume_samples: int = 10 ** 7, workers: int = 1) -> PoissonGrowthFit:
    """Mean ``N_A / R^2`` over trials against ``rho^2 vol D_A(R) / R^2``."""
    radii = check_radii(radii, minimum=1)
    table = trial_table(rho, A, radii, trials, seed, workers)
    return summarize_pair_table(rho, A, radii, table, trials, seed, volume_samples)


@dataclass(frozen=True)
class IntensityCheck:
    R: float
    trials: int
    mean_ratio: float
    standard_error: float


def intensity_check(rho: float, R: float, trials: int, seed: int) -> IntensityCheck:
    """Mean of ``N(Lambda, R) / (pi R^2)`` over trials, with its standard error."""
    _positive(rho=rho, R=R, trials=trials)
    ratios = np.array([len(sample(rho, R, seed, k)) / (math.pi * R * R) for k in range(trials)])
    se = float(ratios.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return IntensityCheck(R, trials, float(ratios.mean()), se)
