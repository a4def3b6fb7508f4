import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saddlepairs.counting import count_parallel, count_single
from saddlepairs.enumeration import holonomy_set
from saddlepairs.errors import ConfigError, EmptyCusps, NonDescendingLengths
from saddlepairs.lattice import (Convention, cusp_data_new, lattice_constant, load_cusp_data,
                                 min_positive_wedge, parallel_growth)
from saddlepairs.surface import l_origami, parallelogram_l, torus

HAND = [
    ({"cusps": [{"c1": 1, "lengths": [3.0]}]}, 0.0, 0.0),
    ({"cusps": [{"c1": 1, "lengths": [2.0, 1.0]}]}, 0.0, 1.0),
    ({"cusps": [{"c1": 1, "lengths": [1.0, 1.0]}, {"c1": 1, "lengths": [1.0, 1.0]}]}, 0.0, 2.0),
]

lengths = st.lists(st.floats(0.01, 100.0), min_size=1, max_size=6).map(lambda xs: sorted(xs, reverse=True))
cusps = st.lists(st.builds(lambda c, l: {"c1": c, "lengths": l}, st.floats(0.01, 10.0), lengths),
                 min_size=1, max_size=4)


@pytest.mark.parametrize("doc, printed, ordered", HAND)
def test_hand_examples(doc, printed, ordered):
    data = load_cusp_data(doc)
    assert lattice_constant(data, Convention.AsPrinted) == printed
    assert lattice_constant(data, Convention.OrderedPairs) == ordered
    assert lattice_constant(data, "ordered-pairs") == ordered


def test_hand_formula_three_lengths():
    # c1 = 2, r = (1, 2, 4): as printed 2 * (0*1 + 1*4), ordered pairs 2 * (2*1 + 1*4 + 0*16)
    data = cusp_data_new([{"c1": 2.0, "lengths": [4.0, 2.0, 1.0]}])
    assert lattice_constant(data, Convention.AsPrinted) == 8.0
    assert lattice_constant(data, Convention.OrderedPairs) == 12.0


def test_validation():
    with pytest.raises(EmptyCusps):
        cusp_data_new([])
    with pytest.raises(EmptyCusps):
        cusp_data_new([{"c1": 1, "lengths": []}])
    with pytest.raises(NonDescendingLengths):
        cusp_data_new([{"c1": 1, "lengths": [1.0, 2.0]}])
    with pytest.raises(ConfigError):
        cusp_data_new([{"c1": -1, "lengths": [1.0]}])
    with pytest.raises(ConfigError):
        load_cusp_data({"nope": []})
    with pytest.raises(ConfigError):
        cusp_data_new([{"c1": 1, "lengths": [1.0, 5e-324]}])


def test_load_from_file(tmp_path):
    path = tmp_path / "cusps.json"
    path.write_text(json.dumps(HAND[2][0]))
    assert lattice_constant(load_cusp_data(str(path))) == 2.0
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_cusp_data(str(path))


@settings(max_examples=100, deadline=None)
@given(cusps, st.floats(1e-3, 1e3), st.data())
def test_scale_invariance(doc, factor, data):
    cd = cusp_data_new(doc)
    i = data.draw(st.integers(0, len(cd.cusps) - 1))
    for conv in Convention:
        a = lattice_constant(cd, conv)
        b = lattice_constant(cd.scaled(i, factor), conv)
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a))
        assert a >= 0


@settings(max_examples=100, deadline=None)
@given(cusps, st.floats(0.0, 1.0, exclude_min=True), st.data())
def test_appending_shorter_length_never_decreases(doc, shrink, data):
    cd = cusp_data_new(doc)
    i = data.draw(st.integers(0, len(doc) - 1))
    longer = [dict(c) for c in doc]
    longer[i] = {"c1": doc[i]["c1"], "lengths": list(doc[i]["lengths"]) + [doc[i]["lengths"][-1] * shrink]}
    try:
        extended = cusp_data_new(longer)
    except ConfigError:
        # ratio too extreme to represent
        return
    before = lattice_constant(cd, Convention.OrderedPairs)
    after = lattice_constant(extended, Convention.OrderedPairs)
    assert after >= before


def test_parallel_growth_torus_tracks_single_count():
    radii = [10.0, 20.0, 40.0]
    fit = parallel_growth(torus(), radii)
    lam = holonomy_set(torus(), 40)
    assert fit.ratios == tuple(count_single(lam, R) / R ** 2 for R in radii)


def test_parallel_growth_l3_positive_and_stable():
    fit = parallel_growth(l_origami(), [20.0, 40.0, 80.0])
    assert min(fit.ratios) > 0
    assert fit.coefficient_of_variation < 0.05


def test_parallel_growth_generic_surface_is_zero():
    poly = parallelogram_l((1.0, 0.0), (math.sqrt(2) - 0.4, 0.0731), (0.17, 1.0), (0.0413, math.sqrt(3) - 0.5))
    fit = parallel_growth(poly, [4.0, 8.0, 12.0], include_opposite=False)
    assert fit.ratios == (0.0, 0.0, 0.0)


def test_min_positive_wedge():
    # integer holonomies: the smallest nonzero wedge is 1
    assert min_positive_wedge(holonomy_set(l_origami(), 10)) == 1.0
    assert min_positive_wedge(holonomy_set(torus(), 10), cap=0.5) is None
