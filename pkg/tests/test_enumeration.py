import csv
import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import primitive_vectors
from saddlepairs.enumeration import (CSV_COLUMNS, connections_to_csv, holonomy_set,
                                     homologous, saddle_connections, second_systole,
                                     shortest_connection, systole)
from saddlepairs.errors import DegenerateNearHit, RadiusNonPositive
from saddlepairs.planar import LinearMap2, PlanarVector, apply
from saddlepairs.surface import (l_origami, parallelogram_l, torus, two_square_torus,
                                 unit_square_torus)


def _as_tuples(lam):
    return {(v.x, v.y) for v in lam.vectors}


@pytest.mark.parametrize("R", [2, 10, 50])
def test_torus_matches_primitive_vectors(R):
    assert _as_tuples(holonomy_set(torus(), R)) == primitive_vectors(R)


def test_l3_small_radius():
    assert len(saddle_connections(l_origami(), 0.5)) == 0
    lam = holonomy_set(l_origami(), 1, dedupe=False)
    assert lam.as_set() == {PlanarVector(1, 0), PlanarVector(-1, 0), PlanarVector(0, 1), PlanarVector(0, -1)}
    assert all(lam.multiplicity(v) == 3 for v in lam.vectors)


def test_l3_holonomies_are_primitive_vectors():
    # every corner of the L is its single zero, so the holonomy set is Z^2 primitive
    assert _as_tuples(holonomy_set(l_origami(), 25)) == primitive_vectors(25)


def test_radius_must_be_positive():
    with pytest.raises(RadiusNonPositive):
        saddle_connections(torus(), 0)
    with pytest.raises(RadiusNonPositive):
        holonomy_set(l_origami(), -1.0)


@pytest.mark.parametrize("s", [torus(), l_origami(), two_square_torus()])
def test_reversal_closure(s):
    scs = saddle_connections(s, 8)
    keys = {(sc.holonomy, sc.start) for sc in scs}
    for sc in scs:
        rev = sc.reversed()
        assert rev.holonomy == -sc.holonomy
        assert (rev.holonomy, rev.start) in keys
        assert rev.homology_fingerprint == tuple(-c for c in sc.homology_fingerprint)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 12), st.floats(0.0, 8))
def test_monotone_in_radius(r1, dr):
    small = holonomy_set(l_origami(), r1, dedupe=False)
    large = holonomy_set(l_origami(), r1 + dr, dedupe=False)
    assert small.as_set() <= large.as_set()
    assert all(small.multiplicity(v) == large.multiplicity(v) for v in small.vectors)
    assert large.restrict(r1).as_set() == small.as_set()


def test_systoles():
    assert systole(torus()) == 1
    assert systole(l_origami()) == 1
    assert second_systole(l_origami()) == 1
    sc = shortest_connection(l_origami())
    assert sc.length == 1


def test_homologous_connections():
    scs = [sc for sc in saddle_connections(l_origami(), 1) if sc.holonomy == PlanarVector(1, 0)]
    # the three horizontal unit connections: two bound the long cylinder, one the short
    classes = {sc.homology_fingerprint for sc in scs}
    assert len(scs) == 3 and len(classes) == 2
    for a in scs:
        assert homologous(a, a)
        assert homologous(a, a.reversed())
        assert not homologous(a, a.reversed(), up_to_sign=False)


def test_fingerprint_respects_holonomy():
    # distinct holonomies cannot share a class
    scs = saddle_connections(l_origami(), 6)
    seen = {}
    for sc in scs:
        prev = seen.setdefault(sc.homology_fingerprint, sc.holonomy)
        assert prev == sc.holonomy


def test_exact_l_polygon_matches_origami():
    poly = parallelogram_l((1.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.0, 1.0))
    a = holonomy_set(poly, 15, dedupe=False)
    b = holonomy_set(l_origami(), 15, dedupe=False)
    assert len(a.as_set()) == len(b.as_set()) == 440
    got = {(round(v.x), round(v.y)): a.multiplicity(v) for v in a.vectors}
    assert all(abs(v.x - round(v.x)) < 1e-9 and abs(v.y - round(v.y)) < 1e-9 for v in a.vectors)
    assert got == {(v.x, v.y): b.multiplicity(v) for v in b.vectors}


def test_sheared_l_is_image_of_origami():
    m = LinearMap2(1.0, 0.3, 0.0, 1.0)
    poly = parallelogram_l((1.0, 0.0), (1.0, 0.0), (0.3, 1.0), (0.3, 1.0))
    R = 8.0
    got = holonomy_set(poly, R).xy
    want = [apply(m, v) for v in holonomy_set(l_origami(), R * 1.4).vectors]
    want = np.array([(v.x, v.y) for v in want if v.norm() <= R])
    assert got.shape == want.shape
    dist = np.sqrt(((got[:, None, :] - want[None, :, :]) ** 2).sum(-1))
    assert dist.min(1).max() < 1e-9 and dist.min(0).max() < 1e-9


def test_unit_square_polygon_matches_torus():
    got = {(round(v.x), round(v.y)) for v in holonomy_set(unit_square_torus(), 12).vectors}
    assert got == primitive_vectors(12)


def test_generic_l_has_simple_cylinders():
    poly = parallelogram_l((1.0, 0.0), (math.sqrt(2) - 0.4, 0.0731), (0.17, 1.0), (0.0413, math.sqrt(3) - 0.5))
    lam = holonomy_set(poly, 10, dedupe=False)
    assert len(lam) > 0
    assert set(int(m) for m in lam.multiplicities) <= {1, 2}
    xy = lam.xy
    dist = np.sqrt(((xy[:, None, :] + xy[None, :, :]) ** 2).sum(-1))
    partner = dist.argmin(1)
    assert dist.min(1).max() < 1e-9
    assert (np.asarray(lam.multiplicities)[partner] == np.asarray(lam.multiplicities)).all()


def test_near_hit_raises_or_warns():
    poly = parallelogram_l((1.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1e-11, 1.0))
    with pytest.raises(DegenerateNearHit):
        saddle_connections(poly, 3)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        assert saddle_connections(poly, 3, near_hit="warn")
    assert caught


def test_deduplication_weights():
    lam = holonomy_set(l_origami(), 4, dedupe=False)
    dd = holonomy_set(l_origami(), 4, dedupe=True)
    assert lam.as_set() == dd.as_set()
    assert (dd.weights == 1).all()
    assert lam.weights.sum() == len(saddle_connections(l_origami(), 4))


def test_csv_output():
    scs = saddle_connections(l_origami(), 1.5)
    text = connections_to_csv(scs)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert tuple(rows[0].keys()) == CSV_COLUMNS
    assert len(rows) == len(scs)
    assert {(int(r["x"]), int(r["y"])) for r in rows} == {(v.holonomy.x, v.holonomy.y) for v in scs}
