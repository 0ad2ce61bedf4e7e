"""Property-based checks over randomized inputs (hypothesis)."""

import numpy as np
from hypothesis import given, settings, strategies as st

from tiling_lab.continuum import (
    Characteristic,
    Slope,
    complex_to_slope,
    slope_to_complex,
    stieltjes,
    surface_tension,
)
from tiling_lab.lattice import build_hexagon, min_max_extensions
from tiling_lab.rng import Rng
from tiling_lab.sampler import ParticleConfig, cftp_sample
from tiling_lab.tiling import (
    height_from_tiling,
    height_from_walks,
    tiling_from_height,
    walks_from_height,
)

interior_props = st.tuples(
    st.floats(0.02, 0.96), st.floats(0.02, 0.96)
).filter(lambda p: p[0] + p[1] < 0.98)


@given(interior_props)
def test_slope_complex_inverse_pair(p):
    p1, p2 = p
    sl = Slope(1 - p1, -p2)
    f = slope_to_complex(sl)
    assert f.imag < 0
    back = complex_to_slope(f)
    assert abs(back.s - sl.s) < 1e-11 and abs(back.t - sl.t) < 1e-11


@given(interior_props)
def test_surface_tension_positive_inside(p):
    p1, p2 = p
    assert surface_tension(Slope(1 - p1, -p2)) > 0


@given(st.integers(0, 2**63 - 1), st.text(st.characters(min_codepoint=33, max_codepoint=126), max_size=12))
@settings(max_examples=30)
def test_rng_stream_reproducible(seed, name):
    a = Rng(seed).derive(name).fresh_generator().random(3)
    b = Rng(seed).derive(name).fresh_generator().random(3)
    assert np.array_equal(a, b)


@given(
    st.sets(st.integers(-20, 20), min_size=1, max_size=8),
    st.integers(1, 16),
    st.complex_numbers(min_magnitude=60, max_magnitude=200, allow_nan=False, allow_infinity=False),
)
@settings(max_examples=60)
def test_stieltjes_mass_and_conjugation(ks, n, z):
    c = ParticleConfig(n, sorted(ks))
    m = stieltjes(c, z)
    # total mass m/(n z) at large |z|; the next term carries the positions
    spread = float(np.max(np.abs(c.rescaled()))) + 1.0
    assert abs(m - c.m / (n * z)) < 6 * (c.m / n) * spread / abs(z) ** 2 + 1e-12
    assert abs(stieltjes(c, np.conj(z)) - np.conj(m)) < 1e-12


@given(st.integers(0, 10**6))
@settings(max_examples=15, deadline=None)
def test_roundtrips_on_random_samples(seed):
    dom, h = build_hexagon(3, 2, 2)
    s = cftp_sample(dom, h, Rng(seed))
    w = walks_from_height(s)
    assert np.array_equal(height_from_walks(w, dom).values, s.values)
    t = tiling_from_height(s)
    anchor = min((y, x) for x, y in dom.vertices[dom.boundary_mask])
    h0 = int(s.values[dom.index(anchor[1], anchor[0])])
    assert np.array_equal(height_from_tiling(t, h0).values, s.values)


def test_envelopes_sandwich_every_sample():
    dom, h = build_hexagon(3, 3, 2)
    hmin, hmax = min_max_extensions(dom, h)
    for k in range(25):
        s = cftp_sample(dom, h, Rng(99).derive(f"k:{k}"))
        assert np.all(hmin <= s.values) and np.all(s.values <= hmax)


@given(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
@settings(max_examples=50)
def test_characteristic_imaginary_monotone(f0):
    if abs(f0 + 1) < 1e-3 or f0.imag > 0:
        return
    ch = Characteristic(0.3 + 1.0j, f0)
    zs = ch.trajectory(np.linspace(0, 2, 9))
    assert np.all(np.diff(zs.imag) <= 1e-12)
