"""Domains, boundary data, envelopes, admissibility."""

import json

import numpy as np
import pytest
from fractions import Fraction

from tiling_lab.lattice import (
    BoundaryHeight,
    Domain,
    LatticeError,
    StripSpec,
    build_hexagon,
    build_strip,
    domain_from_json,
    domain_to_json,
    is_admissible_boundary,
    min_max_extensions,
)
from tiling_lab.tiling import enumerate_tilings


def test_hexagon_111_shape():
    dom, h = build_hexagon(1, 1, 1)
    assert dom.n_vertices == 7
    assert len(dom.faces) == 6
    assert len(dom.boundary_cycle) == 6
    assert int(dom.boundary_mask.sum()) == 6
    # single interior vertex with full neighborhood
    assert len(dom.interior_idx) == 1
    assert h.values[(0, 0)] == 0 and h.values[(1, 0)] == 1


def test_hexagon_112_corner_height():
    # corner height equals the sum of side steps by the height rules
    dom, h = build_hexagon(1, 1, 2)
    assert max(h.values.values()) == 1
    dom2, h2 = build_hexagon(2, 1, 1)
    assert max(h2.values.values()) == 2


@pytest.mark.parametrize("abc", [(1, 1, 1), (2, 2, 2), (2, 1, 3)])
def test_hexagon_boundary_is_admissible(abc):
    dom, h = build_hexagon(*abc)
    assert is_admissible_boundary(dom, h)


def test_perturbed_boundary_inadmissible():
    dom, h = build_hexagon(2, 2, 2)
    vals = dict(h.values)
    v = next(iter(vals))
    vals[v] += 3
    assert not is_admissible_boundary(dom, BoundaryHeight(dom, vals))


def test_admissibility_iff_positive_count():
    # the envelope criterion agrees with the enumeration oracle
    dom, h = build_hexagon(2, 1, 2)
    assert is_admissible_boundary(dom, h)
    count, _ = enumerate_tilings(dom, h)
    assert count > 0
    bad = dict(h.values)
    # lower an east-side value: breaks the constant-m east boundary
    target = [v for v in bad if v[0] == dom.row_hi[v[1]]][0]
    bad[target] -= 1
    hb = BoundaryHeight(dom, bad)
    count_bad, _ = enumerate_tilings(dom, hb)
    assert is_admissible_boundary(dom, hb) == (count_bad > 0)


def test_no_interior_domain_admissible_iff_legal():
    # two-row strip: every vertex is on the boundary
    dom = Domain({0: (0, 2), 1: (0, 2)})
    assert len(dom.interior_idx) == 0
    good = {(0, 0): 0, (1, 0): 0, (2, 0): 1, (0, 1): 0, (1, 1): 0, (2, 1): 1}
    assert is_admissible_boundary(dom, BoundaryHeight(dom, good))
    bad = dict(good)
    bad[(2, 1)] = 2  # north increment of 2 somewhere on the cycle
    assert not is_admissible_boundary(dom, BoundaryHeight(dom, bad))


def test_envelopes_order_and_validity():
    dom, h = build_hexagon(3, 2, 2)
    hmin, hmax = min_max_extensions(dom, h)
    assert np.all(hmin <= hmax)
    assert np.any(hmin < hmax)  # not frozen


def test_strip_brick_wall_frozen():
    # packed south and north on the same side: unique tiling
    spec = StripSpec(0, 0, Fraction(5), 0, Fraction(3), 1, 2)
    south = [0, 1, 2, 2, 2, 2]
    dom, h = build_strip(spec, south=south, north=south)
    hmin, hmax = min_max_extensions(dom, h)
    assert np.array_equal(hmin, hmax)
    count, _ = enumerate_tilings(dom, h)
    assert count == 1


def test_strip_trapezoid_default_profiles():
    # single-sided trapezoid with packed north boundary is a legal domain
    spec = StripSpec(0, 1, Fraction(4), 0, Fraction(2), 2, 4)
    dom, h = build_strip(spec)
    assert is_admissible_boundary(dom, h)
    # west boundary identically 0 and east identically m
    T = spec.rows_t
    for y in range(T + 1):
        lo, hi = spec.row_range(y)
        assert h.values[(lo, y)] == 0
        assert h.values[(hi, y)] == spec.m


def test_strip_spec_validation():
    with pytest.raises(LatticeError):
        StripSpec(0, 1, 1, 0, 2, 2, 1)  # a(t) > b(t) at t = 2
    with pytest.raises(LatticeError):
        StripSpec(Fraction(1, 3), 0, 2, 0, 1, 2, 1)  # n*a0 not integral
    with pytest.raises(LatticeError):
        StripSpec(0, 0, 1, 0, 1, 2, 5)  # m does not fit


def test_bad_supplied_profile_rejected():
    spec = StripSpec(0, 0, Fraction(4), 0, Fraction(2), 1, 2)
    with pytest.raises(LatticeError):
        build_strip(spec, south=[0, 2, 2, 2, 2])  # increment 2
    with pytest.raises(LatticeError):
        build_strip(spec, south=[0, 1, 1, 1, 1])  # does not reach m


def test_json_roundtrip():
    dom, h = build_hexagon(2, 1, 2)
    text = domain_to_json(dom, h)
    dom2, h2 = domain_from_json(text)
    assert dom2.n_vertices == dom.n_vertices
    assert dom2.faces == dom.faces
    assert h2.values == h.values
    assert domain_to_json(dom2, h2) == text
    # stable ordering: vertices sorted lexicographically by (y, x)
    vs = json.loads(text)["vertices"]
    assert vs == sorted(vs, key=lambda v: (v[1], v[0]))
