"""Acceptance criteria 1-10, one recorded pass/fail line each (see conftest)."""

import math
import time

import numpy as np

from oracles import brute_pairs_numpy, brute_parallel_numpy, primitive_vectors
from saddlepairs.counting import (count_pairs, count_pairs_annulus, count_parallel, error_decomposition,
                                  growth_fit, minimum_decomposition_radius)
from saddlepairs.enumeration import holonomy_set
from saddlepairs.lattice import Convention, cusp_data_new, lattice_constant
from saddlepairs.planar import (PlanarVector, RegionTag, Thresholds, apply, arc_measure_pair,
                                classify_pair, compose, gt, operator_norm, rtheta)
from saddlepairs.poisson import cell_count_test, intensity_check, poisson_pair_growth
from saddlepairs.siegelveech import approximation_error
from saddlepairs.surface import S_MATRIX, T_MATRIX, l_origami, sl2z_act, torus

AREAS = (0, 0.5, 1, 2)


def test_criterion_01_torus_oracle(criterion):
    detail = []
    ok = True
    for R in (10, 50, 100):
        start = time.perf_counter()
        lam = holonomy_set(torus(), R)
        elapsed = time.perf_counter() - start
        same = {(v.x, v.y) for v in lam.vectors} == primitive_vectors(R)
        ok &= same and (R < 100 or elapsed < 10)
        detail.append(f"R={R}: {len(lam)} vectors, equal={same}, {elapsed:.2f}s")
    criterion(1, ok, "; ".join(detail))


def test_criterion_02_pair_count_oracles(criterion):
    start = time.perf_counter()
    checks = mismatches = 0
    cases = [(torus(), (2, 10, 30, 50)), (l_origami(), (3, 10, 30))]
    for surface, radii in cases:
        lam = holonomy_set(surface, max(radii))
        xy = [(v.x, v.y) for v in lam.vectors]
        for R in radii:
            for A in AREAS:
                for eq in (True, False):
                    pairs = count_pairs(lam, R, A, eq) == brute_pairs_numpy(xy, R, A, eq)
                    shell = count_pairs_annulus(lam, R, A, eq) == brute_pairs_numpy(xy, R, A, eq, lo=R / 2)
                    checks += 2
                    mismatches += (not pairs) + (not shell)
            for eq in (True, False):
                for opp in (True, False):
                    checks += 1
                    mismatches += count_parallel(lam, R, eq, opp) != brute_parallel_numpy(xy, R, eq, opp)
    elapsed = time.perf_counter() - start
    criterion(2, mismatches == 0 and elapsed < 60,
              f"{checks} exact comparisons, {mismatches} mismatches, {elapsed:.1f}s (limit 60s)")


def _random_pair(rng):
    t = rng.uniform(1.0, 3.0)
    A = rng.uniform(0.0, 2.0)
    th = Thresholds.at(t)
    rz = rng.uniform(th.bottom, th.outer)
    phi = rng.uniform(0, 2 * math.pi)
    z = (rz * math.cos(phi), rz * math.sin(phi))
    # w near the line of z so the wedge constraint is often active
    a = rng.uniform(-1.0, 1.0)
    b = rng.uniform(-1.5 * A - 0.1, 1.5 * A + 0.1) / (rz * rz)
    w = (a * z[0] - b * z[1], a * z[1] + b * z[0])
    return PlanarVector(*z), PlanarVector(*w), t, A


def _theta_grid_estimate(z, w, t, A, cos, sin):
    """Fraction of theta samples with g_t r_theta (z, w) in R_A(T), times 2 pi."""
    et, emt = math.exp(t), math.exp(-t)
    X = et * (z.x * cos - z.y * sin)
    Y = emt * (z.x * sin + z.y * cos)
    V = emt * (w.x * sin + w.y * cos)
    if abs(z.x * w.y - z.y * w.x) > A:
        return 0.0
    hit = (Y >= 0.5) & (Y <= 1.0) & (np.abs(X) <= Y) & (np.abs(V) <= Y)
    return 2 * math.pi * np.count_nonzero(hit) / len(cos)


def test_criterion_03_arc_measure(criterion):
    rng = np.random.default_rng(20240603)
    n = 10 ** 6
    # randomly shifted uniform theta grid
    theta = (np.arange(n) + rng.uniform()) * (2 * math.pi / n)
    cos, sin = np.cos(theta), np.sin(theta)
    worst = 0.0
    outside = positive = 0
    for _ in range(1000):
        z, w, t, A = _random_pair(rng)
        exact = arc_measure_pair(z, w, t, A)
        est = _theta_grid_estimate(z, w, t, A, cos, sin)
        p = exact / (2 * math.pi)
        se = 2 * math.pi * math.sqrt(p * (1 - p) / n)
        positive += exact > 0
        dev = abs(exact - est)
        if dev > 3 * se:
            outside += 1
        if se > 0:
            worst = max(worst, dev / se)
    full_bad = 0
    max_err = 0.0
    made = 0
    while made < 1000:
        t = rng.uniform(1.0, 4.0)
        A = rng.uniform(0.1, 2.0)
        th = Thresholds.at(t)
        rz = rng.uniform(th.full_arc, th.top)
        phi = rng.uniform(0, 2 * math.pi)
        z = PlanarVector(rz * math.cos(phi), rz * math.sin(phi))
        rw = rz * th.main_ratio * math.sqrt(rng.uniform())
        psi = rng.uniform(0, 2 * math.pi)
        w = PlanarVector(rw * math.cos(psi), rw * math.sin(psi))
        if classify_pair(z, w, t, A) is not RegionTag.MainMt:
            continue
        made += 1
        err = abs(arc_measure_pair(z, w, t, A) - 2 * math.atan(math.exp(-2 * t)))
        max_err = max(max_err, err)
        full_bad += err > 1e-8
    ok = outside == 0 and full_bad == 0
    criterion(3, ok, f"MC: {outside}/1000 pairs beyond 3 SE ({positive} with positive arc, worst {worst:.2f} SE); "
                     f"main-region pairs: {full_bad}/1000 off by > 1e-8 (max {max_err:.1e})")


def test_criterion_04_operator_norm_bound(criterion):
    rng = np.random.default_rng(4)
    n = 10 ** 5
    start = time.perf_counter()
    t = 1.0 + rng.exponential(2.0, n)
    s = t + rng.uniform(0.0, math.log(2.0), n)
    psi = rng.uniform(-1.0, 1.0, n) * math.pi * np.exp(-2 * t)
    worst = 0.0
    violations = 0
    for ti, si, pi in zip(t.tolist(), s.tolist(), psi.tolist()):
        norm = operator_norm(compose(compose(gt(si), rtheta(pi)), gt(-ti)))
        worst = max(worst, norm)
        violations += norm > 8 * math.pi
    elapsed = time.perf_counter() - start
    criterion(4, violations == 0 and elapsed < 5,
              f"{n} samples, {violations} violations, max norm {worst:.3f} <= 8pi, {elapsed:.2f}s (limit 5s)")


def test_criterion_05_decomposition_identity(criterion):
    tol = 1e-10
    rows = []
    ok = True
    for name, surface in (("torus", torus()), ("l3", l_origami())):
        for t in (2.0, 2.5, 3.0):
            start = time.perf_counter()
            lam = holonomy_set(surface, minimum_decomposition_radius(t, 1.0))
            d = error_decomposition(lam, t, 1.0, tol)
            elapsed = time.perf_counter() - start
            bound = 2 * tol * math.pi * math.exp(2 * t) * d.positive_arc_pairs
            ok &= d.residual <= bound and elapsed < 120
            rows.append(f"{name} t={t}: {d.residual:.1e} <= {bound:.1e} ({elapsed:.1f}s)")
    criterion(5, ok, "; ".join(rows))


def test_criterion_06_error_trend(criterion):
    ts = (2.5, 3.0, 3.5)
    errs = [approximation_error(l_origami(), t, 1.0) for t in ts]
    ok = all(errs[k + 1] <= 1.1 * errs[k] for k in range(len(errs) - 1))
    criterion(6, ok, "normalized errors " + ", ".join(f"t={t}: {e:.3e}" for t, e in zip(ts, errs)))


def test_criterion_07_quadratic_growth(criterion):
    radii = (20.0, 40.0, 80.0, 160.0)
    parts = []
    ok = True
    # as a set of vectors, and weighted by saddle connection multiplicity
    for label, dedupe in (("set", True), ("multiplicity", False)):
        lam = holonomy_set(l_origami(), radii[-1], dedupe=dedupe)
        fit = growth_fit(radii, [count_pairs(lam, R, 1.0) for R in radii])
        ok &= fit.coefficient_of_variation < 0.15 and min(fit.ratios) > 0
        parts.append(f"{label}: N_A/R^2 = " + ", ".join(f"{q:.4f}" for q in fit.ratios)
                     + f", CV {fit.coefficient_of_variation:.4f}")
    criterion(7, ok, "; ".join(parts) + " (limit 0.15)")


def test_criterion_08_poisson(criterion):
    cells = [(-2.0, -2.0, 0.0, 0.0), (0.0, 0.0, 1.5, 1.0), (1.0, -3.0, 3.0, -1.0)]
    rep = cell_count_test(1.0, cells, trials=10_000, seed=8)
    chk = intensity_check(1.0, 50.0, trials=1000, seed=8)
    fit = poisson_pair_growth(1.0, 1.0, [20.0, 40.0], trials=200, seed=8, volume_samples=10 ** 7)
    cells_ok = rep.passes(0.01)
    intensity_ok = abs(chk.mean_ratio - 1.0) <= 3 * chk.standard_error
    growth_ok = all(abs(r - 1.0) <= 0.10 for r in fit.ratio_to_prediction)
    pvals = ", ".join(f"{c.p_value:.3f}" for c in rep.cells)
    criterion(8, cells_ok and intensity_ok and growth_ok,
              f"cell p-values {pvals} (>= 0.01); N/piR^2 = {chk.mean_ratio:.5f} +- {chk.standard_error:.5f}; "
              f"pair growth / volume prediction = " + ", ".join(f"{r:.4f}" for r in fit.ratio_to_prediction))


def test_criterion_09_lattice_constant(criterion):
    examples = [
        ([{"c1": 1, "lengths": [3.0]}], 0.0, 0.0),
        ([{"c1": 1, "lengths": [2.0, 1.0]}], 0.0, 1.0),
        ([{"c1": 1, "lengths": [1.0, 1.0]}, {"c1": 1, "lengths": [1.0, 1.0]}], 0.0, 2.0),
    ]
    exact = all(lattice_constant(cusp_data_new(c), Convention.AsPrinted) == a
                and lattice_constant(cusp_data_new(c), Convention.OrderedPairs) == b
                for c, a, b in examples)
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(200):
        cusps = [{"c1": float(rng.uniform(0.1, 5)),
                  "lengths": sorted(rng.uniform(0.1, 10, rng.integers(1, 6)).tolist(), reverse=True)}
                 for _ in range(rng.integers(1, 4))]
        data = cusp_data_new(cusps)
        i = int(rng.integers(len(cusps)))
        factor = float(10 ** rng.uniform(-3, 3))
        for conv in Convention:
            a = lattice_constant(data, conv)
            b = lattice_constant(data.scaled(i, factor), conv)
            worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    criterion(9, exact and worst <= 1e-12,
              f"hand examples exact={exact}; max relative change under rescaling {worst:.1e} (limit 1e-12)")


def test_criterion_10_equivariance(criterion):
    R = 20.0
    rows = []
    ok = True
    for name, surface in (("torus", torus()), ("l3", l_origami())):
        for label, m in (("T", T_MATRIX), ("S", S_MATRIX)):
            source = holonomy_set(surface, R / operator_norm(m.inverse()))
            target = holonomy_set(sl2z_act(m, surface), R)
            image = {apply(m, v) for v in source.vectors}
            contained = image <= target.as_set()
            ok &= contained
            rows.append(f"{name}/{label}: {len(image)} -> {len(target)} {'contained' if contained else 'NOT contained'}")
    criterion(10, ok, "; ".join(rows))
