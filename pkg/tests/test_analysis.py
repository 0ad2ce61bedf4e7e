"""Concentration reports, edge statistics, exclusion, loop-equation checks."""

from fractions import Fraction

import numpy as np
import pytest

from tiling_lab.analysis import (
    AnalysisError,
    TrapezoidLimit,
    arctic_boundary,
    contour_drift_prediction,
    delta_along_characteristic,
    drift_check,
    edge_fluctuation_fit,
    exact_drift,
    fit_exponent,
    frozen_map,
    height_deviation,
    interval_exclusion,
    martingale_moment_check,
)
from tiling_lab.continuum import ContinuumField, stieltjes
from tiling_lab.lattice import StripSpec, build_hexagon, build_strip
from tiling_lab.rng import Rng
from tiling_lab.sampler import ParticleConfig, cftp_sample, step_distribution, trapezoid_trajectory
from tiling_lab.tiling import enumerate_tilings


def trap_spec(n, m, b0=1):
    return StripSpec(0, 1, Fraction(b0), 0, Fraction(b0) - Fraction(m, n), n, m)


def spread_config(spec):
    width = spec.width(0)
    gap = width // spec.m
    start = (width - gap * (spec.m - 1) - 1) // 2
    return ParticleConfig(spec.n, start + gap * np.arange(spec.m))


# --------------------------------------------------------------------------
# Height deviation / frozen map / arctic boundary
# --------------------------------------------------------------------------


def frozen_strip_samples():
    spec = StripSpec(0, 0, Fraction(5), 0, Fraction(3), 1, 2)
    south = [0, 1, 2, 2, 2, 2]
    dom, h = build_strip(spec, south=south, north=south)
    _, it = enumerate_tilings(dom, h)
    exts = list(it)
    assert len(exts) == 1
    return dom, exts


def test_height_deviation_frozen_zero():
    dom, exts = frozen_strip_samples()
    # exact limit field: the frozen height itself on a fine grid
    q = 8
    xs = np.arange(5 * q + 1) / q
    ts = np.arange(3 * q + 1) / q
    X, T = np.meshgrid(xs, ts, indexing="ij")
    vals = np.minimum(np.maximum(X, 0), 2.0)
    F = ContinuumField(0, 0, 1 / q, 1 / q, vals, np.ones_like(vals, bool))
    rep = height_deviation(exts * 3, F, n=1)
    assert rep.sup_deviation < 1e-9
    assert np.all(rep.deviation_field < 1e-9)


def test_height_deviation_vs_own_mean_is_fluctuation():
    dom, hb = build_hexagon(2, 2, 2)
    _, it = enumerate_tilings(dom, hb)
    samples = list(it)
    mean = np.mean([s.values for s in samples], axis=0)
    # wrap the mean as a one-cell-accurate field over the lattice grid
    q = 1
    nx = int(dom.row_hi.max()) + 1
    nt = dom.y_max + 1
    vals = np.full((nx + 1, nt + 1), np.nan)
    mask = np.zeros((nx + 1, nt + 1), bool)
    for i, (x, y) in enumerate(dom.vertices):
        vals[x, y] = mean[i]
        mask[x, y] = True
    F = ContinuumField(0, 0, 1.0, 1.0, vals, mask)
    rep = height_deviation(samples, F, n=1)
    fluct = max(np.max(np.abs(s.values - mean)) for s in samples)
    assert abs(rep.sup_deviation - fluct) < 1e-9


def test_frozen_map_frozen_and_center():
    dom, exts = frozen_strip_samples()
    score = frozen_map(exts * 2)
    assert np.all(score == 0)

    domh, hb = build_hexagon(2, 2, 2)
    _, it = enumerate_tilings(domh, hb)
    samples = list(it)
    sc = frozen_map(samples)
    # increments along the fixed south/north boundary rows never vary
    corners = [domh.index(*v) for v in [(0, 0), (2, 0), (2, 4), (4, 4)]]
    center = domh.index(2, 2)
    assert all(sc[c] == 0 for c in corners)
    assert sc[center] > 0

    with pytest.raises(AnalysisError):
        frozen_map(samples[:1])


def test_arctic_boundary_disk_fixture():
    dom, _ = build_hexagon(12, 12, 12)
    # synthetic liquid score: 1 inside the inscribed-ellipse analogue
    score = np.zeros(dom.n_vertices)
    cx, cy, r2 = 12.0, 12.0, 36.0
    for i, (x, y) in enumerate(dom.vertices):
        u, v = x - cx, y - cy
        if u * u - u * v + v * v < r2:
            score[i] = 1.0
    prof = arctic_boundary(dom, score, threshold=0.5)
    for row, xl, xr in zip(prof.rows, prof.left, prof.right):
        v = row - cy
        disc = r2 - 0.75 * v * v
        if disc < 1:
            continue
        exl = cx + v / 2 - np.sqrt(disc)
        exr = cx + v / 2 + np.sqrt(disc)
        if np.isfinite(xl):
            assert abs(xl - exl) <= 1.0
            assert abs(xr - exr) <= 1.0

    frozen = arctic_boundary(dom, np.zeros(dom.n_vertices), threshold=0.5)
    assert np.all(~np.isfinite(frozen.left))
    whole = arctic_boundary(dom, score + 1.0, threshold=0.5)
    base, lo, hi = dom.row_slice(12)
    i = np.searchsorted(whole.rows, 12)
    assert whole.left[i] == lo and whole.right[i] == hi


# --------------------------------------------------------------------------
# Exponent fits
# --------------------------------------------------------------------------


def test_fit_exponent_synthetic_gaussian_edges():
    rng = np.random.default_rng(4)
    ns = [16, 32, 64, 128]
    table = {}
    for label in ("r1", "r2", "r3"):
        stds = []
        for n in ns:
            draws = rng.normal(0.0, n ** (2 / 3), size=20000)
            stds.append(float(draws.std(ddof=1)))
        table[label] = stds
    fit = fit_exponent(ns, table)
    assert abs(fit.slope - 2 / 3) < 0.02


def test_fit_exponent_constant_std():
    ns = [16, 32, 64]
    table = {"r": [3.0, 3.0, 3.0]}
    fit = fit_exponent(ns, table)
    assert abs(fit.slope) < 1e-12


def test_edge_fluctuation_fit_requires_data():
    dom, hb = build_hexagon(2, 2, 2)
    s = cftp_sample(dom, hb, Rng(1))
    with pytest.raises(AnalysisError):
        edge_fluctuation_fit({16: [s] * 100, 32: [s] * 100})


# --------------------------------------------------------------------------
# Trapezoid limit data and interval exclusion
# --------------------------------------------------------------------------


def test_trapezoid_limit_edges_at_t0():
    spec = trap_spec(32, 8)
    c0 = spread_config(spec)
    lim = TrapezoidLimit(spec, c0)
    e1, e2 = lim.edges(0.0)
    x = c0.rescaled()
    assert x[0] - 0.05 < e1 <= x[0] + 1e-6
    assert x[-1] - 1e-6 <= e2 < x[-1] + 1.0 / spec.n + 0.05


def test_interval_exclusion_counts_and_monotonicity():
    spec = trap_spec(32, 8)
    c0 = spread_config(spec)
    lim = TrapezoidLimit(spec, c0)
    t = 0.25
    lo, hi = lim.enlarged_interval(t, delta_knob=0.02)
    inside = ParticleConfig(
        32, np.round(np.linspace(lo + 0.02, hi - 0.05, 8) * 32).astype(int)
    )
    assert interval_exclusion(inside, t, lim, 0.02) == 0
    # plant one particle 2*tau outside the right edge
    tau = lim.tau(t, 0.02)
    k_out = int(np.ceil((hi + 2 * tau) * 32))
    planted = ParticleConfig(32, np.sort(np.append(inside.positions[:-1], k_out)))
    assert interval_exclusion(planted, t, lim, 0.02) == 1
    # enlarging tau never increases violations
    v = [interval_exclusion(planted, t, lim, d) for d in (0.01, 0.03, 0.05, 0.08)]
    assert all(a >= b for a, b in zip(v, v[1:]))


def test_exclusion_holds_on_sampled_trajectories():
    spec = trap_spec(32, 8)
    c0 = spread_config(spec)
    lim = TrapezoidLimit(spec, c0)
    bad = 0
    total = 0
    for k in range(10):
        w = trapezoid_trajectory(c0, spec, Rng(21).derive(f"c:{k}"))
        for j in range(0, w.span + 1, 4):
            cfg = ParticleConfig(32, w.positions[:, j])
            total += 1
            bad += interval_exclusion(cfg, j / 32, lim, 0.05) > 0
    assert bad <= total * 0.05


# --------------------------------------------------------------------------
# Loop-equation diagnostics
# --------------------------------------------------------------------------


def test_drift_m1_closed_form():
    spec = trap_spec(16, 1, b0=Fraction(1, 4))
    # m=1 kernel: P(jump) = (b - 1/n - x)/(b - a - 1/n)
    c = ParticleConfig(16, [2])
    x = 2 / 16
    a, b = 0.0, 0.25
    p = (b - 1 / 16 - x) / (b - a - 1 / 16)
    z = 0.8 + 0.5j
    hand = p * (1 / (z - x - 1 / 16) - 1 / (z - x))
    assert abs(exact_drift(c, 0.0, spec, z) - hand) < 1e-14
    pred = contour_drift_prediction(c, z, a, b, margin=0.12)
    assert abs(pred - hand) < 1.5 / 16  # remainder is O(1/n)


def test_drift_check_agreement_and_conjugation():
    spec = trap_spec(24, 6)
    c0 = spread_config(spec)
    z = 1.35 + 0.45j
    chk = drift_check(spec, c0, 0.0, z, 40000, Rng(7))
    assert abs(chk.mc_mean - chk.contour_value) <= max(3 * chk.mc_stderr, 5.0 / 24)
    conj = drift_check(spec, c0, 0.0, np.conj(z), 40000, Rng(7))
    assert abs(conj.mc_mean - np.conj(chk.mc_mean)) < 1e-15
    assert abs(conj.contour_value - np.conj(chk.contour_value)) < 1e-9


def test_drift_check_rejects_near_support():
    spec = trap_spec(24, 6)
    c0 = spread_config(spec)
    with pytest.raises(AnalysisError):
        drift_check(spec, c0, 0.0, 0.5 + 0.02j, 100, Rng(1))


def test_martingale_p1_is_variance_and_m1_closed_form():
    spec = trap_spec(16, 1, b0=Fraction(1, 4))
    c = ParticleConfig(16, [2])
    z = 0.8 + 0.5j
    mom, var = martingale_moment_check(spec, c, 0.0, z, 200000, Rng(3), p_order=1)
    assert mom == var
    # closed form: two outcomes with P(jump) = p
    n = 16
    x = 2 / 16
    p = (0.25 - 1 / 16 - x) / (0.25 - 1 / 16)
    inc = np.log((z - x - 1 / n) / (z - x - 2 / n)) - np.log((z - x) / (z - x - 1 / n))
    true_var = p * (1 - p) * abs(inc) ** 2
    assert abs(var - true_var) < 0.05 * true_var


def test_martingale_variance_scales_like_n_cubed():
    z = 1.4 + 0.5j
    vs = []
    for n in (16, 32, 64):
        spec = trap_spec(n, n // 4)
        c0 = spread_config(spec)
        _, var = martingale_moment_check(spec, c0, 0.0, z, 50000, Rng(8), p_order=1)
        vs.append(var)
    slope = np.polyfit(np.log([16, 32, 64]), np.log(vs), 1)[0]
    assert abs(slope + 3.0) < 0.3


def test_delta_frozen_is_zero_and_mass_decay():
    # fully packed configurations have exactly telescoping Stieltjes sums,
    # so Delta vanishes identically at fixed z (the slope degenerates to
    # f = -1 there, so no characteristic transport is involved)
    n = 16
    packed = ParticleConfig(n, np.arange(4, 12))
    z = 1.5 + 0.8j
    m_exact = np.log((z - 4 / 16) / (z - 12 / 16))
    assert abs(stieltjes(packed, z) - m_exact) < 1e-13

    spec = trap_spec(32, 8)
    c0 = spread_config(spec)
    w = trapezoid_trajectory(c0, spec, Rng(12))
    # far seed: total masses agree, so |Delta_t| <= C (m/n) / |z_t|^2
    times, zs, deltas, trunc = delta_along_characteristic(w, 30 + 10j, spec, c0)
    assert len(times) >= 0.6 * (w.span + 1)  # truncates only near final time
    far = np.abs(zs) >= 5.0
    assert np.all(np.abs(deltas[far]) <= 6.0 * (8 / 32) / np.abs(zs[far]) ** 2)


def test_delta_along_characteristic_moderate():
    spec = trap_spec(32, 8)
    c0 = spread_config(spec)
    w = trapezoid_trajectory(c0, spec, Rng(13))
    times, zs, deltas, trunc = delta_along_characteristic(w, 0.5 + 0.6j, spec, c0)
    assert len(times) == w.span + 1 or trunc
    # stopping-time shape: |Delta_t(z_t)| <= C / (n Im z_t) along the path
    assert np.all(np.abs(deltas) <= 2.0 / (32 * np.imag(zs)))
