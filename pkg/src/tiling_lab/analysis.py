"""Empirical verification of the concentration phenomena.

Four experiment families, all reading their predictions from the continuum
layer and their randomness from seeded samplers:

* height concentration: sup_v |H(v) - n H*(v/n)| across sampled tilings,
  with the exact-equality check outside the enlarged liquid region;
* arctic edge statistics: per-sample, per-row edge positions, their
  sample-to-sample standard deviation, and the growth exponent of that
  deviation in n (the "n^{1/3} in rescaled units = n^{2/3} lattice units"
  signature, away from tangency and cusp rows);
* frozen-interval exclusion: no particles outside the tau-enlarged interval
  I_t^+ around the limiting edges E_1(t), E_2(t);
* loop-equation diagnostics for the trapezoid kernel: the one-step drift of
  sum_i 1/(z - x_i) against the contour integral (1/2 pi i) oint log B(w)
  dw/(w - z)^2 with B = (f+1)(z - a), and the scaling in n of the centered
  moments of the martingale increment of the integrated Stieltjes transform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .continuum import ContinuumField, stieltjes, trapezoid_slope
from .lattice import StripSpec
from .rng import Rng
from .sampler import ParticleConfig, step_distribution
from .tiling import HeightFunction, WalkEnsemble, walks_from_height


class AnalysisError(ValueError):
    pass


# --------------------------------------------------------------------------
# Height concentration
# --------------------------------------------------------------------------


@dataclass
class ConcentrationReport:
    n: int
    sample_count: int
    sup_deviation: float
    deviation_field: np.ndarray  # per-vertex max |H - n H*| across samples
    mean_deviation_field: np.ndarray  # per-vertex |mean H - n H*|
    frozen_mismatch_count: int

    def __post_init__(self):
        assert self.sup_deviation >= float(np.max(self.deviation_field)) - 1e-9
        assert self.frozen_mismatch_count >= 0


def height_deviation(
    samples: list[HeightFunction],
    Hstar: ContinuumField,
    n: int,
    frozen_margin: float | None = None,
) -> ConcentrationReport:
    """Deviations of sampled heights from the scaled limit shape.

    Hstar lives at continuum scale; predictions at a vertex v are
    n * Hstar(v / n) by bilinear interpolation.  When ``frozen_margin`` is
    given, vertices whose rescaled position is farther than that from the
    liquid region (classified on Hstar's own grid) are checked for exact
    equality H = round(n H*), and the count of failures is reported.
    """
    if not samples:
        raise AnalysisError("need at least one sample")
    dom = samples[0].domain
    for s in samples:
        if s.domain is not dom:
            raise AnalysisError("samples must share one domain")
    xs = dom.vertices[:, 0] / n
    ts = dom.vertices[:, 1] / n
    pred = n * np.real(Hstar.interp(xs, ts))
    if np.any(~np.isfinite(pred)):
        raise AnalysisError("limit-shape grid does not cover the domain")

    stack = np.stack([s.values for s in samples])
    dev = np.abs(stack - pred[None, :])
    dev_field = dev.max(axis=0)
    mean_field = np.abs(stack.mean(axis=0) - pred)

    frozen_mismatch = 0
    if frozen_margin is not None:
        frozen = _frozen_vertices(Hstar, xs, ts, frozen_margin)
        if frozen.any():
            rounded = np.rint(pred[frozen])
            frozen_mismatch = int((stack[:, frozen] != rounded[None, :]).sum())
    return ConcentrationReport(
        n=n,
        sample_count=len(samples),
        sup_deviation=float(dev.max()),
        deviation_field=dev_field,
        mean_deviation_field=mean_field,
        frozen_mismatch_count=frozen_mismatch,
    )


def _liquid_cells(Hstar: ContinuumField):
    s, t, act = Hstar.cell_slopes()
    return act & (np.minimum.reduce([1 - s, -t, s + t]) > 1e-3)


def _dilate(mask: np.ndarray, k: int) -> np.ndarray:
    """Chebyshev dilation of a boolean grid by k cells."""
    from scipy.ndimage import maximum_filter

    if k <= 0:
        return mask
    return maximum_filter(mask.astype(np.uint8), size=2 * k + 1).astype(bool)


def _cell_lookup(Hstar: ContinuumField, cells: np.ndarray, xs, ts):
    """Value of a per-cell boolean at each rescaled vertex position."""
    ix = np.clip(
        np.floor((xs - Hstar.x0) / Hstar.hx - 0.0).astype(int), 0, cells.shape[0] - 1
    )
    it = np.clip(
        np.floor((ts - Hstar.t0) / Hstar.ht - 0.0).astype(int), 0, cells.shape[1] - 1
    )
    return cells[ix, it]


def _frozen_vertices(Hstar: ContinuumField, xs, ts, margin: float):
    """Vertices farther than margin (Chebyshev) from any liquid cell."""
    k = int(np.ceil(margin / Hstar.hx))
    near_liquid = _dilate(_liquid_cells(Hstar), k)
    return ~_cell_lookup(Hstar, near_liquid, xs, ts)


def interior_liquid_vertices(Hstar: ContinuumField, xs, ts, margin: float):
    """Vertices farther than margin (Chebyshev) inside the liquid region."""
    k = int(np.ceil(margin / Hstar.hx))
    near_frozen = _dilate(~_liquid_cells(Hstar), k)
    return ~_cell_lookup(Hstar, near_frozen, xs, ts)


# --------------------------------------------------------------------------
# Frozen/liquid maps and the arctic boundary
# --------------------------------------------------------------------------


def frozen_map(samples: list[HeightFunction]) -> np.ndarray:
    """Per-vertex liquid score: empirical variance of the local increments.

    For each vertex the east-increment indicator H(x+1,y) - H(x,y) is
    averaged over samples (vertices without an east neighbor use the height
    itself); deterministic vertices score exactly 0.
    """
    if len(samples) < 2:
        raise AnalysisError("need at least two samples")
    dom = samples[0].domain
    stack = np.stack([s.values for s in samples]).astype(float)
    score = np.zeros(dom.n_vertices)
    for y in range(dom.y_min, dom.y_max + 1):
        base, lo, hi = dom.row_slice(y)
        row = stack[:, base : base + hi - lo + 1]
        inc = np.diff(row, axis=1)
        var = inc.var(axis=0)
        score[base : base + hi - lo] += var
        score[base + 1 : base + hi - lo + 1] += var
    return score


@dataclass
class EdgeProfile:
    rows: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        both = np.isfinite(self.left) & np.isfinite(self.right)
        assert np.all(self.left[both] <= self.right[both] + 1e-9)


def arctic_boundary(dom, score: np.ndarray, threshold: float) -> EdgeProfile:
    """Per-row first/last crossings of the liquid score, with sub-lattice
    linear interpolation; rows with no liquid nodes yield NaN entries."""
    rows, lefts, rights = [], [], []
    for y in range(dom.y_min, dom.y_max + 1):
        base, lo, hi = dom.row_slice(y)
        vals = score[base : base + hi - lo + 1]
        above = np.nonzero(vals > threshold)[0]
        rows.append(y)
        if not len(above):
            lefts.append(np.nan)
            rights.append(np.nan)
            continue
        i = above[0]
        if i == 0:
            xl = lo
        else:
            frac = (threshold - vals[i - 1]) / (vals[i] - vals[i - 1])
            xl = lo + i - 1 + frac
        j = above[-1]
        if j == len(vals) - 1:
            xr = hi
        else:
            frac = (threshold - vals[j + 1]) / (vals[j] - vals[j + 1])
            xr = lo + j + 1 - frac
        lefts.append(xl)
        rights.append(xr)
    return EdgeProfile(np.array(rows), np.array(lefts), np.array(rights))


# --------------------------------------------------------------------------
# Edge fluctuations
# --------------------------------------------------------------------------


def edge_samples_hexagon(samples: list[HeightFunction]):
    """(rows, left edges, right edges) arrays shaped (n_samples, n_rows).

    Middle-band hexagon rows have void frozen regions on both sides, so the
    per-sample edges are the extreme walker positions.
    """
    dom = samples[0].domain
    lefts, rights = [], []
    for s in samples:
        w = walks_from_height(s)
        lefts.append(w.positions[0])
        rights.append(w.positions[-1])
    rows = np.arange(dom.y_min, dom.y_max + 1)
    return rows, np.array(lefts, dtype=float), np.array(rights, dtype=float)


@dataclass
class ExponentFit:
    slope: float
    intercept: float
    ci_halfwidth: float  # 95% half-width on the slope
    points: list  # (n, row-label, std) triples actually used


def fit_exponent(ns, std_table) -> ExponentFit:
    """Common-slope least squares of log(std) on log(n) with one intercept
    per matched row label; std_table maps row label -> list of stds per n."""
    rows = sorted(std_table)
    X, Y, G = [], [], []
    pts = []
    for gi, r in enumerate(rows):
        for n, s in zip(ns, std_table[r]):
            if not np.isfinite(s) or s <= 0:
                continue
            X.append(np.log(n))
            Y.append(np.log(s))
            G.append(gi)
            pts.append((int(n), r, float(s)))
    if len(set(G)) < 1 or len(X) < 3:
        raise AnalysisError("insufficient data for an exponent fit")
    X = np.array(X)
    Y = np.array(Y)
    G = np.array(G)
    ng = G.max() + 1
    A = np.zeros((len(X), ng + 1))
    A[np.arange(len(X)), G] = 1.0
    A[:, -1] = X
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = Y - A @ coef
    dof = max(len(X) - (ng + 1), 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    half = 1.96 * float(np.sqrt(cov[-1, -1]))
    return ExponentFit(float(coef[-1]), float(coef[:-1].mean()), half, pts)


def edge_fluctuation_fit(
    ensembles: dict[int, list[HeightFunction]],
    rel_rows=(0.75, 0.85, 0.95, 1.05, 1.15, 1.25),
) -> ExponentFit:
    """Exponent of per-row edge std (lattice units) vs n on matched rows.

    ``ensembles`` maps n to samples of the (n, n, n) hexagon.  The relative
    rows default to the middle band t/n in [0.75, 1.25]: away from the wall
    tangencies at t = n/2 and 3n/2, and hexagons have no cusps.  Left and
    right edges enter as separate matched series.
    """
    ns = sorted(ensembles)
    if len(ns) < 3 or any(len(v) < 100 for v in ensembles.values()):
        raise AnalysisError("need >= 3 ladder points with >= 100 samples each")
    table: dict[str, list[float]] = {}
    for n in ns:
        rows, L, R = edge_samples_hexagon(ensembles[n])
        for rho in rel_rows:
            t = int(round(rho * n))
            idx = np.searchsorted(rows, t)
            table.setdefault(f"L@{rho}", []).append(float(L[:, idx].std(ddof=1)))
            table.setdefault(f"R@{rho}", []).append(float(R[:, idx].std(ddof=1)))
    return fit_exponent(ns, table)


# --------------------------------------------------------------------------
# Trapezoid limit data and interval exclusion
# --------------------------------------------------------------------------


@dataclass
class TrapezoidLimit:
    """Limiting edges E_1(t), E_2(t) of the trapezoid bridge model, computed
    from the t=0 slope by transporting the two real gap arcs along the
    characteristics and locating the fold points."""

    spec: StripSpec
    c0: ParticleConfig

    def __post_init__(self):
        self.a0 = float(self.spec.a0)
        self.b0 = float(self.spec.b0)
        x = self.c0.rescaled()
        self.gap_left = (self.a0, float(x[0]))
        self.gap_right = (float(x[-1]) + 1.0 / self.spec.n, self.b0)

    def _zt_real(self, u: float, t: float) -> float:
        f, _ = trapezoid_slope(self.c0, complex(u), self.a0, self.b0)
        return float((u + t * f / (f + 1)).real)

    def edges(self, t: float, grid: int = 400) -> tuple[float, float]:
        """E_1(t) = max of z_t over the left gap, E_2(t) = min over the right."""
        out = []
        for (lo, hi), pick in ((self.gap_left, max), (self.gap_right, min)):
            eps = (hi - lo) * 1e-6
            us = np.linspace(lo + eps, hi - eps, grid)
            vals = [self._zt_real(u, t) for u in us]
            out.append(float(pick(vals)))
        return out[0], out[1]

    def tau(self, t: float, delta_knob: float) -> float:
        """Distance function tau = n^(-2/3+6d) |t - t_i|^(2/3) v n^(-1+10d).

        Both edge curves end at the final-time corner, so the tangency times
        t_i are t_max for this geometry.
        """
        n = self.spec.n
        ti = float(self.spec.t_max)
        main = n ** (-2 / 3 + 6 * delta_knob) * abs(t - ti) ** (2 / 3)
        floor = n ** (-1 + 10 * delta_knob)
        return max(main, floor)

    def enlarged_interval(self, t: float, delta_knob: float):
        e1, e2 = self.edges(t)
        tau = self.tau(t, delta_knob)
        return e1 - tau, e2 + tau


def interval_exclusion(
    c: ParticleConfig, t: float, limit: TrapezoidLimit, delta_knob: float
) -> int:
    """Number of particles outside I_t^+ (both gap regions here are voids,
    so hole-counting inside saturated segments does not apply)."""
    lo, hi = limit.enlarged_interval(t, delta_knob)
    x = c.rescaled()
    return int(np.sum((x < lo) | (x > hi)))


# --------------------------------------------------------------------------
# Loop-equation diagnostics
# --------------------------------------------------------------------------


@dataclass
class DriftCheck:
    z: complex
    mc_mean: complex
    mc_stderr: float
    contour_value: complex
    draws: int
    z_score: float

    def __post_init__(self):
        assert self.mc_stderr >= 0


def _contour_points(a: float, b: float, margin: float, k: int):
    """Axis-aligned ellipse around [a, b] with the given clearance."""
    cx = (a + b) / 2
    rx = (b - a) / 2 + margin
    ry = margin
    th = 2 * np.pi * (np.arange(k) + 0.5) / k
    w = cx + rx * np.cos(th) + 1j * ry * np.sin(th)
    dw = (-rx * np.sin(th) + 1j * ry * np.cos(th)) * (2 * np.pi / k)
    return w, dw


def contour_drift_prediction(
    c: ParticleConfig,
    z: complex,
    a: float,
    b: float,
    margin: float = 0.15,
    tol: float = 1e-9,
) -> complex:
    """(1/2 pi i) oint log B(w) dw / (w - z)^2 on an ellipse enclosing [a, b]
    but not z; the trapezoid rule is doubled from 512 points until stable."""
    if abs(z.imag) < margin * 1.05 and a - margin * 1.05 < z.real < b + margin * 1.05:
        raise AnalysisError("z too close to the contour")
    prev = None
    k = 512
    while k <= 2**17:
        w, dw = _contour_points(a, b, margin, k)
        if np.min(np.abs(w - z)) < 0.02:
            raise AnalysisError("contour passes within 0.02 of z")
        _, B = trapezoid_slope(c, w, a, b)
        val = complex(np.sum(np.log(B) / (w - z) ** 2 * dw) / (2j * np.pi))
        if prev is not None and abs(val - prev) < tol:
            return val
        prev = val
        k *= 2
    return prev


def drift_check(
    spec: StripSpec,
    c: ParticleConfig,
    t: float,
    z: complex,
    sample_count: int,
    rng: Rng,
) -> DriftCheck:
    """Monte Carlo mean of sum_i [1/(z - x_i') - 1/(z - x_i)] over one-step
    draws from the trapezoid kernel at fixed c, versus the contour integral
    of log B(w)/(w - z)^2; B is built from the explicit slope of c itself.
    """
    a = float(spec.a_of(t))
    b = float(spec.b_of(t))
    x = c.rescaled()
    if min(abs(z - xi) for xi in x) < 0.1 or not (
        abs(z.imag) >= 0.1 or z.real < a - 0.1 or z.real > b + 0.1
    ):
        raise AnalysisError("z must stay >= 0.1 away from the support")

    E, p = step_distribution(c, t, spec)
    n = spec.n
    vals = (1.0 / (z - (x[None, :] + E / n)) - 1.0 / (z - x[None, :])).sum(axis=1)

    gen = rng.generator()
    idx = gen.choice(len(p), size=sample_count, p=p)
    draws = vals[idx]
    mc = complex(draws.mean())
    stderr = float(
        np.sqrt((draws.real.var(ddof=1) + draws.imag.var(ddof=1)) / sample_count)
    )
    pred = contour_drift_prediction(c, z, a, b)
    z_score = abs(mc - pred) / stderr if stderr > 0 else np.inf
    return DriftCheck(z, mc, stderr, pred, sample_count, z_score)


def exact_drift(c: ParticleConfig, t, spec: StripSpec, z: complex) -> complex:
    """The kernel expectation summed exactly over all 2^m moves (oracle)."""
    E, p = step_distribution(c, t, spec)
    x = c.rescaled()
    vals = (1.0 / (z - (x[None, :] + E / spec.n)) - 1.0 / (z - x[None, :])).sum(axis=1)
    return complex((p * vals).sum())


def martingale_moment_check(
    spec: StripSpec,
    c: ParticleConfig,
    t: float,
    z: complex,
    sample_count: int,
    rng: Rng,
    p_order: int = 1,
):
    """Empirical centered 2p-th moment of the one-step increment of the
    integrated Stieltjes transform m(z) = sum_i log((z-x_i)/(z-x_i-1/n)).

    Returns (moment, variance); at p = 1 the two coincide.  The variance at
    fixed z away from the support scales like n^{-3}.
    """
    E, prob = step_distribution(c, t, spec)
    x = c.rescaled()
    n = spec.n
    new = x[None, :] + E / n
    m_new = np.log((z - new) / (z - new - 1.0 / n)).sum(axis=1)
    m_old = np.log((z - x) / (z - x - 1.0 / n)).sum()
    inc = m_new - m_old

    gen = rng.generator()
    idx = gen.choice(len(prob), size=sample_count, p=prob)
    draws = inc[idx]
    centered = draws - draws.mean()
    moment = float(np.mean(np.abs(centered) ** (2 * p_order)))
    variance = float(np.mean(np.abs(centered) ** 2))
    return moment, variance


def delta_along_characteristic(
    traj: WalkEnsemble,
    u: complex,
    spec: StripSpec,
    c0: ParticleConfig,
):
    """Delta_t(z_t) = m_t(z_t) - m*_t(z_t) along the characteristic seeded at
    u (Im u > 0), with f_0 the explicit slope of the initial configuration
    and m*_t read off the transported slope via f = ((b-z)/(z-a)) e^{m}.

    Returns (times, deltas, truncated_flag); the series stops early when the
    characteristic enters the excluded support neighborhood.
    """
    if u.imag <= 0:
        raise AnalysisError("seed u must lie in the upper half-plane")
    a0, b0 = float(spec.a0), float(spec.b0)
    f0, _ = trapezoid_slope(c0, u, a0, b0)
    n = spec.n
    times, zs, deltas = [], [], []
    truncated = False
    for j in range(traj.span + 1):
        t = j / n
        zt = u + t * f0 / (f0 + 1)
        at = float(spec.a_of(t))
        bt = float(spec.b_of(t))
        cfg = ParticleConfig(n, traj.positions[:, j])
        xs = cfg.rescaled()
        near_band = zt.imag < 0.01 and at - 0.05 < zt.real < bt + 0.05
        if min(abs(zt - xi) for xi in xs) < 0.05 or abs(zt - at) < 0.05 or near_band:
            truncated = True
            break
        m_emp = stieltjes(cfg, zt)
        # m*_t from the slope decomposition f = ((b-z)/(z-a)) e^{m}
        m_star = np.log(f0 * (zt - at) / (bt - zt))
        deltas.append(complex(m_emp - m_star))
        times.append(t)
        zs.append(zt)
    return np.array(times), np.array(zs), np.array(deltas), truncated
