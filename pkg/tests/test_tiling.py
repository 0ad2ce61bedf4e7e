"""Representation conversions and the counting oracles."""

import numpy as np
import pytest

from tiling_lab.lattice import BoundaryHeight, Domain, build_hexagon
from tiling_lab.rng import Rng
from tiling_lab.tiling import (
    ConversionError,
    HeightFunction,
    Tiling,
    WalkEnsemble,
    bridge_count,
    enumerate_tilings,
    height_from_tiling,
    height_from_walks,
    macmahon_count,
    tiling_from_height,
    tiling_to_json,
    walks_from_height,
)


def all_extensions(abc):
    dom, h = build_hexagon(*abc)
    count, it = enumerate_tilings(dom, h)
    return dom, h, count, list(it)


def test_hexagon_counts_vs_macmahon():
    # two independent algorithms: row-transfer DP vs the product formula
    assert macmahon_count(1, 1, 1) == 2
    assert macmahon_count(2, 2, 2) == 20
    for abc in [(1, 1, 1), (2, 2, 2), (2, 1, 3), (3, 2, 1)]:
        dom, h = build_hexagon(*abc)
        count, _ = enumerate_tilings(dom, h)
        assert count == macmahon_count(*abc)


def test_enumeration_yields_distinct_valid_extensions():
    dom, h, count, exts = all_extensions((2, 2, 2))
    assert count == 20 and len(exts) == 20
    keys = {tuple(e.values) for e in exts}
    assert len(keys) == 20
    for e in exts:
        assert e.matches_boundary(h)


def test_height_tiling_roundtrip_on_enumeration():
    dom, h, _, exts = all_extensions((2, 1, 2))
    for e in exts:
        t = tiling_from_height(e)
        back = height_from_tiling(t, h0=e.values[_anchor_index(dom)])
        assert np.array_equal(back.values, e.values)


def _anchor_index(dom):
    anchor = min((y, x) for x, y in dom.vertices[dom.boundary_mask])
    return dom.index(anchor[1], anchor[0])


def test_111_two_height_functions_differ_at_center():
    dom, h, count, exts = all_extensions((1, 1, 1))
    assert count == 2
    a, b = exts
    diff = np.nonzero(a.values != b.values)[0]
    assert len(diff) == 1
    assert abs(int(a.values[diff[0]] - b.values[diff[0]])) == 1
    assert not dom.boundary_mask[diff[0]]
    # each tiling of the unit hexagon uses exactly 3 lozenges
    for e in exts:
        assert len(tiling_from_height(e).lozenges) == 3


def test_walk_roundtrips_on_enumeration():
    for abc in [(2, 2, 2), (3, 1, 2)]:
        dom, h, _, exts = all_extensions(abc)
        for e in exts:
            w = walks_from_height(e)
            assert w.m == abc[0]
            back = height_from_walks(w, dom)
            assert np.array_equal(back.values, e.values)


def test_frozen_walks():
    # all walkers jump every step: the brick-wall trapezoid
    pos = np.array([[0, 1, 2], [1, 2, 3]])
    w = WalkEnsemble(pos)
    assert np.array_equal(np.diff(w.positions, axis=1), np.ones((2, 2), dtype=int))
    # all stay
    w2 = WalkEnsemble(np.array([[4, 4, 4]]))
    assert w2.span == 2


def test_walk_validation():
    with pytest.raises(ConversionError):
        WalkEnsemble(np.array([[0, 2]]))  # step of 2
    with pytest.raises(ConversionError):
        WalkEnsemble(np.array([[0, 1], [0, 1]]))  # collision


def test_height_validation_names_edge():
    dom, h = build_hexagon(1, 1, 1)
    _, _, _, exts = all_extensions((1, 1, 1))
    vals = exts[0].values.copy()
    vals[~dom.boundary_mask] += 5
    with pytest.raises(ConversionError):
        HeightFunction(dom, vals)


def test_height_from_walks_count_mismatch():
    dom, h = build_hexagon(2, 2, 2)
    with pytest.raises(ConversionError):
        height_from_walks(WalkEnsemble(np.array([[0, 0, 0, 0, 0]])), dom)


def test_tiling_must_cover():
    dom, _ = build_hexagon(1, 1, 1)
    with pytest.raises(ConversionError):
        Tiling(dom, ((0, 0, 3),))  # covers 2 of the 6 faces


def test_flow_conservation():
    # total number of right-jumps is fixed by the boundary alone
    dom, h, _, exts = all_extensions((2, 2, 2))
    totals = set()
    for e in exts:
        w = walks_from_height(e)
        totals.add(int((np.diff(w.positions, axis=1) == 1).sum()))
    assert len(totals) == 1


def test_bridge_count_single_walker_binomial():
    from math import comb

    for T, k in [(1, 0), (4, 2), (7, 7), (6, 0)]:
        dp, lgv = bridge_count([0], [k], T)
        assert dp == lgv == comb(T, k)


def test_bridge_count_m2_oracle():
    # (0,1) -> (0,1) in one step: only both-stay survives; the three legal
    # one-step moves from (0,1) are {00, 01, 11} (10 collides)
    dp, lgv = bridge_count([0, 1], [0, 1], 1)
    assert dp == lgv == 1
    moves = [(e & 1, e >> 1) for e in range(4)]
    legal = [(e1, e2) for e1, e2 in moves if 0 + e1 != 1 + e2]
    assert len(legal) == 3


def test_bridge_count_unreachable_zero():
    dp, lgv = bridge_count([0, 1], [5, 6], 2)  # needs 5 jumps in 2 steps
    assert dp == lgv == 0
    dp, lgv = bridge_count([0, 5], [3, 4], 3)  # forced crossing
    assert dp == lgv == 0


def test_bridge_count_matches_hexagon_enumeration():
    # hexagon (a,b,c) = bridges packed(0..a-1) -> packed(b..b+a-1) in b+c steps
    for a, b, c in [(2, 2, 2), (3, 2, 1), (2, 1, 3)]:
        dp, lgv = bridge_count(list(range(a)), list(range(b, b + a)), b + c)
        assert dp == lgv == macmahon_count(a, b, c)


def test_enumerate_cap():
    from tiling_lab.tiling import TooLargeError

    dom, h = build_hexagon(4, 4, 4)
    with pytest.raises(TooLargeError):
        enumerate_tilings(dom, h, cap=10)


def test_tiling_json():
    _, _, _, exts = all_extensions((1, 1, 1))
    doc = tiling_to_json(tiling_from_height(exts[0]))
    assert '"type":' in doc and doc.count('"x":') == 3
