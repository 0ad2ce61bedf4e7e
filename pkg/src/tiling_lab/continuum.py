"""The analytic layer: surface tension, entropy maximization, complex slope.

Slopes and proportions
----------------------
A continuum height function H(x, t) arising from tilings has gradient
(s, t) = (dH/dx, dH/dt) with s in [0,1], t in [-1,0]; the local fractions of
the three lozenge types are

    p1 = 1 - s      (type 1, east increment 0)
    p2 = -t         (type 2, right-jumps)
    p3 = s + t      (type 3, standing walkers)

The admissible slope set T-bar is exactly {all proportions >= 0}; its
interior carries the liquid slopes.  The surface tension is the symmetric
Lobachevsky sum

    sigma(s, t) = (1/pi) * [L(pi p1) + L(pi p2) + L(pi p3)],

with L(x) = -int_0^x log|2 sin z| dz, and the entropy functional is the
integral of sigma over the domain; random tilings concentrate around its
unique maximizer.

Complex slope
-------------
For a liquid slope the complex slope f is the unique point of the open lower
half-plane with arg* f = -pi*s and arg*(f + 1) = pi*t, where arg* maps the
closed lower half-plane onto [-pi, 0].  Equivalently the triangle (0, -1, f)
has angles (pi p1, pi p2, pi p3) at those vertices, which gives the closed
form

    f = [sin(pi p2) / sin(pi p3)] * exp(-i pi s).

f is transported unchanged along the straight characteristics
z_t(u) = u + t f0(u)/(f0(u)+1) and solves d_t f + (f/(f+1)) d_x f = 0.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from .sampler import ParticleConfig


class ContinuumError(ValueError):
    pass


# --------------------------------------------------------------------------
# Lobachevsky function
# --------------------------------------------------------------------------

_M = np.arange(1, 32)
_CL2_COEF = zeta(2 * _M) / (_M * (2 * _M + 1))


def _clausen(theta):
    """Cl2 on [0, pi] via the zeta power series (absolute error < 1e-14).

    Cl2(t) = t - t log t + t * sum_{m>=1} zeta(2m)/(m(2m+1)) (t/2pi)^(2m).
    """
    theta = np.asarray(theta, dtype=float)
    r = (theta / (2 * np.pi)) ** 2
    acc = np.zeros_like(theta)
    rk = np.ones_like(theta)
    for c in _CL2_COEF:
        rk = rk * r
        acc += c * rk
    with np.errstate(divide="ignore", invalid="ignore"):
        main = theta - theta * np.log(theta)
    return np.where(theta > 0, main + theta * acc, 0.0)


def lobachevsky(x):
    """L(x) = -int_0^x log|2 sin z| dz, odd and pi-periodic; vectorized."""
    x = np.asarray(x, dtype=float)
    r = np.mod(x, np.pi)  # L(x + pi) = L(x)
    fold = r > np.pi / 2
    r = np.where(fold, np.pi - r, r)  # L(pi - r) = -L(r)
    vals = 0.5 * _clausen(2.0 * r)
    vals = np.where(fold, -vals, vals)
    return vals if vals.ndim else float(vals)


# --------------------------------------------------------------------------
# Slopes and surface tension
# --------------------------------------------------------------------------

SLOPE_TOL = 1e-12


@dataclass(frozen=True)
class Slope:
    """A gradient (s, t) = (dH/dx, dH/dt) with its tile proportions."""

    s: float
    t: float
    proportions: tuple = field(init=False)

    def __post_init__(self):
        p = (1.0 - self.s, -self.t, self.s + self.t)
        if min(p) < -SLOPE_TOL or max(p) > 1 + SLOPE_TOL:
            raise ContinuumError(f"slope ({self.s}, {self.t}) outside the gradient set")
        object.__setattr__(self, "proportions", p)

    @property
    def interior(self) -> bool:
        return min(self.proportions) > 0.0


def _sigma_props(p1, p2, p3):
    return (
        lobachevsky(np.pi * p1) + lobachevsky(np.pi * p2) + lobachevsky(np.pi * p3)
    ) / np.pi


def surface_tension(sl: Slope) -> float:
    """sigma = (1/pi) sum of L(pi * proportion); 0 exactly on the frozen boundary."""
    p1, p2, p3 = (max(p, 0.0) for p in sl.proportions)
    return float(_sigma_props(p1, p2, p3))


def _sigma_st(s, t):
    """sigma on arrays of slopes, with proportions clipped into [0, 1]."""
    p1 = np.clip(1.0 - s, 0.0, 1.0)
    p2 = np.clip(-t, 0.0, 1.0)
    p3 = np.clip(s + t, 0.0, 1.0)
    return _sigma_props(p1, p2, p3)


def _dsigma_st(s, t):
    """(dsigma/ds, dsigma/dt) = (log(sin pi p1 / sin pi p3), log(sin pi p2 / sin pi p3))."""
    tiny = 1e-300
    l1 = np.log(np.maximum(np.sin(np.pi * np.clip(1.0 - s, 0, 1)), tiny))
    l2 = np.log(np.maximum(np.sin(np.pi * np.clip(-t, 0, 1)), tiny))
    l3 = np.log(np.maximum(np.sin(np.pi * np.clip(s + t, 0, 1)), tiny))
    return l1 - l3, l2 - l3


def _sincot(p):
    """cot(pi p) clipped for p in (0, 1); huge at the endpoints."""
    sp = np.sin(np.pi * np.clip(p, 1e-12, 1 - 1e-12))
    return np.cos(np.pi * np.clip(p, 1e-12, 1 - 1e-12)) / sp


# --------------------------------------------------------------------------
# Grid fields
# --------------------------------------------------------------------------


@dataclass
class ContinuumField:
    """Values on a uniform rectangular (x, t) grid with an activity mask.

    values[ix, it] sits at (x0 + ix*hx, t0 + it*ht); masked-off nodes carry
    no meaning.
    """

    x0: float
    t0: float
    hx: float
    ht: float
    values: np.ndarray
    mask: np.ndarray  # True where the node is active

    def __post_init__(self):
        self.values = np.asarray(self.values)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.hx <= 0 or self.ht <= 0:
            raise ContinuumError("mesh must be positive")
        if self.values.shape != self.mask.shape or self.values.ndim != 2:
            raise ContinuumError("values and mask must be matching 2-d arrays")

    @property
    def nx(self):
        return self.values.shape[0]

    @property
    def nt(self):
        return self.values.shape[1]

    def xs(self):
        return self.x0 + self.hx * np.arange(self.nx)

    def ts(self):
        return self.t0 + self.ht * np.arange(self.nt)

    def interp(self, x, t):
        """Mask-aware bilinear interpolation at (x, t).

        Cells with all four corners active give plain bilinear values.  At
        the boundary of the masked region the weights of inactive corners
        are dropped and the rest renormalized (an O(mesh) boundary
        extension); points with no active corner weight come back NaN.
        """
        fx = (np.asarray(x, dtype=float) - self.x0) / self.hx
        ft = (np.asarray(t, dtype=float) - self.t0) / self.ht
        # snap to exact grid nodes so float dust cannot weight a masked corner
        fx = np.where(np.abs(fx - np.rint(fx)) < 1e-9, np.rint(fx), fx)
        ft = np.where(np.abs(ft - np.rint(ft)) < 1e-9, np.rint(ft), ft)
        ix = np.clip(np.floor(fx).astype(int), 0, self.nx - 2)
        it = np.clip(np.floor(ft).astype(int), 0, self.nt - 2)
        ax = fx - ix
        at = ft - it
        v = self.values
        m = self.mask
        num = None
        den = None
        for vv, mm, w in (
            (v[ix, it], m[ix, it], (1 - ax) * (1 - at)),
            (v[ix + 1, it], m[ix + 1, it], ax * (1 - at)),
            (v[ix, it + 1], m[ix, it + 1], (1 - ax) * at),
            (v[ix + 1, it + 1], m[ix + 1, it + 1], ax * at),
        ):
            wa = np.where(mm & np.isfinite(vv.real if np.iscomplexobj(vv) else vv), w, 0.0)
            term = np.where(wa == 0, 0.0 * w, vv * wa)
            num = term if num is None else num + term
            den = wa if den is None else den + wa
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(den > 1e-12, num / np.maximum(den, 1e-300), np.nan)
        return out

    def cell_slopes(self):
        """Per-cell averaged gradient (s, t) and the active-cell mask."""
        H = np.real(self.values)
        s = (H[1:, :-1] - H[:-1, :-1] + H[1:, 1:] - H[:-1, 1:]) / (2 * self.hx)
        t = (H[:-1, 1:] - H[:-1, :-1] + H[1:, 1:] - H[1:, :-1]) / (2 * self.ht)
        act = self.mask[:-1, :-1] & self.mask[1:, :-1] & self.mask[:-1, 1:] & self.mask[1:, 1:]
        return s, t, act

    def to_csv(self) -> str:
        lines = [
            f"# x0={self.x0!r} t0={self.t0!r} hx={self.hx!r} ht={self.ht!r}",
            f"# nx={self.nx} nt={self.nt}",
            "x,t,re,im,mask",
        ]
        xs, ts = self.xs(), self.ts()
        vals = self.values.astype(complex)
        for ix in range(self.nx):
            for it in range(self.nt):
                v = vals[ix, it]
                lines.append(
                    f"{xs[ix]:.12g},{ts[it]:.12g},{v.real:.17g},{v.imag:.17g},"
                    f"{int(self.mask[ix, it])}"
                )
        return "\n".join(lines) + "\n"


def field_from_csv(text: str) -> ContinuumField:
    import re

    lines = text.strip().splitlines()
    hdr = dict(re.findall(r"(\w+)=([^\s]+)", lines[0] + " " + lines[1]))
    nx, nt = int(hdr["nx"]), int(hdr["nt"])
    vals = np.zeros((nx, nt), dtype=complex)
    mask = np.zeros((nx, nt), dtype=bool)
    body = [ln for ln in lines if not ln.startswith("#") and not ln.startswith("x,")]
    for i, ln in enumerate(body):
        _, _, re_, im_, mk = ln.split(",")
        ix, it = divmod(i, nt)
        vals[ix, it] = float(re_) + 1j * float(im_)
        mask[ix, it] = mk == "1"
    return ContinuumField(
        float(hdr["x0"]), float(hdr["t0"]), float(hdr["hx"]), float(hdr["ht"]), vals, mask
    )


def entropy(F: ContinuumField, slope_tol: float = 1e-7) -> float:
    """Midpoint-rule integral of sigma(grad H) over the active cells.

    Raises (naming the cell) when an active cell's slope leaves T-bar by
    more than slope_tol; violations below the tolerance are projected back,
    so exactly-frozen cells contribute 0 by continuity.
    """
    s, t, act = F.cell_slopes()
    p_min = np.minimum.reduce([1.0 - s, -t, s + t])
    bad = act & (p_min < -slope_tol)
    if np.any(bad):
        ix, it = np.argwhere(bad)[0]
        raise ContinuumError(
            f"cell ({ix},{it}) slope ({s[ix, it]:.6f},{t[ix, it]:.6f}) outside T-bar"
        )
    s = np.where(act, s, 0.5)
    t = np.where(act, t, -0.25)
    return float((np.where(act, _sigma_st(s, t), 0.0)).sum() * F.hx * F.ht)


# --------------------------------------------------------------------------
# Entropy maximization
# --------------------------------------------------------------------------


@dataclass
class GridRegion:
    """Row-convex region at grid resolution 1/q: node rows (inclusive ix
    ranges per it) plus a boundary-height callable h(x, t)."""

    q: int
    rows: dict
    boundary_height: object
    x0: float = 0.0
    t0: float = 0.0

    def node_xy(self, ix, it):
        return self.x0 + ix / self.q, self.t0 + it / self.q


def hexagon_region(a: int, b: int, c: int, q: int) -> GridRegion:
    """The (a, b, c) hexagon at continuum scale with mesh 1/q."""

    def h_of(x, t):
        if t <= 0:
            return min(x, float(a))
        if t >= b + c:
            return min(max(x - b, 0.0), float(a))
        if x <= max(0.0, t - c) + 1e-12:
            return 0.0
        return float(a)

    rows = {
        it: (max(0, it - c * q), min(a * q + it, (a + b) * q))
        for it in range(0, (b + c) * q + 1)
    }
    return GridRegion(q, rows, h_of)


@dataclass
class MaximizeResult:
    field: ContinuumField
    residual: float
    iterations: int
    entropy: float


class MaximizeError(RuntimeError):
    def __init__(self, msg, residual):
        super().__init__(msg)
        self.residual = residual


def _region_mask(region: GridRegion):
    its = sorted(region.rows)
    it0, it1 = its[0], its[-1]
    ix0 = min(region.rows[i][0] for i in its)
    ix1 = max(region.rows[i][1] for i in its)
    nx, nt = ix1 - ix0 + 1, it1 - it0 + 1
    mask = np.zeros((nx, nt), dtype=bool)
    for it in its:
        lo, hi = region.rows[it]
        mask[lo - ix0 : hi - ix0 + 1, it - it0] = True
    return mask, ix0, it0


def _boundary_nodes(mask):
    """Active nodes missing part of their (E,W,N,S,NE,SW) neighborhood."""
    nx, nt = mask.shape
    pad = np.zeros((nx + 2, nt + 2), dtype=bool)
    pad[1:-1, 1:-1] = mask
    full = (
        pad[2:, 1:-1] & pad[:-2, 1:-1] & pad[1:-1, 2:] & pad[1:-1, :-2]
        & pad[2:, 2:] & pad[:-2, :-2]
    )
    return mask & ~full


def _admissible_envelopes(mask, pinned, H0, h):
    """Float Lipschitz-cone envelopes on the grid (step h), Jacobi relaxation."""
    BIG = 1e18
    nx, nt = mask.shape

    def relax(maximal):
        H = np.where(pinned, H0, BIG if maximal else -BIG)
        H = np.where(mask, H, np.nan)
        free = mask & ~pinned
        for _ in range(2 * (nx + nt) + 8):
            P = np.pad(H, 1, constant_values=np.nan)
            E, W = P[2:, 1:-1], P[:-2, 1:-1]
            N, S = P[1:-1, 2:], P[1:-1, :-2]
            NE, SW = P[2:, 2:], P[:-2, :-2]
            if maximal:
                cand = np.fmin.reduce([E, W + h, N + h, S, NE, SW + h])
                new = np.fmin(H, cand)
            else:
                cand = np.fmax.reduce([E - h, W, N, S - h, NE - h, SW])
                new = np.fmax(H, cand)
            new = np.where(free, new, H)
            if np.allclose(new[mask], H[mask], rtol=0, atol=0, equal_nan=True):
                break
            H = new
        return H

    lo, hi = relax(False), relax(True)
    if np.any((hi - lo)[mask & ~pinned] < -1e-9):
        raise ContinuumError("boundary data admits no admissible extension")
    return lo, hi


def maximize_entropy(
    region: GridRegion,
    mesh: float | None = None,
    tol: float = 1e-7,
    max_sweeps: int = 800,
    prop_clamp: float = 1e-9,
    coarsest_q: int = 6,
) -> MaximizeResult:
    """Discrete maximizer of the entropy functional over admissible fields.

    Concave maximization by block-coordinate ascent.  Nodes are grouped in
    four independent color classes ((ix mod 2, it mod 2)); a class update
    solves every node's 1-d concave problem simultaneously by bisection on
    the analytic derivative of its local 4-cell entropy, constrained so every
    touched cell keeps all proportions >= prop_clamp.  The total entropy is
    nondecreasing across sweeps (asserted).  Initialization is the mean of
    the admissible envelopes, refined through a mesh-doubling ladder that
    ends at the requested resolution.

    Returns the field together with the final sweep residual sup|dH|.
    """
    if mesh is not None and abs(mesh - 1.0 / region.q) > 1e-12:
        raise ContinuumError("mesh must equal 1/region.q")
    qs = [region.q]
    while qs[-1] % 2 == 0 and qs[-1] // 2 >= coarsest_q:
        qs.append(qs[-1] // 2)
    qs.reverse()

    prev = None
    out = None
    for q in qs:
        sub = _coarsen_region(region, q)
        if q == region.q:
            level_tol, level_sweeps = tol, max_sweeps
        elif q <= 16:
            # very coarse levels are nearly free: converge them hard
            level_tol, level_sweeps = min(tol, 1e-9), 4000
        else:
            # intermediate levels only seed the next refinement; their
            # residual error is smoothed out there
            level_tol, level_sweeps = max(tol, 1e-7), min(400, max_sweeps)
        out = _solve_level(sub, prev, level_tol, level_sweeps, prop_clamp)
        prev = out
    field, residual, iters, ent = out
    if residual > tol:
        raise MaximizeError(
            f"no convergence after {iters} sweeps (residual {residual:.3e})", residual
        )
    return MaximizeResult(field, residual, iters, ent)


def _coarsen_region(region: GridRegion, q: int) -> GridRegion:
    if q == region.q:
        return region
    step = region.q // q
    rows = {}
    for it, (lo, hi) in region.rows.items():
        if it % step:
            continue
        rows[it // step] = (-(-lo // step), hi // step)
    return GridRegion(q, rows, region.boundary_height, region.x0, region.t0)


def _solve_level(region, init, tol, max_sweeps, prop_clamp):
    q = region.q
    h = 1.0 / q
    mask, ix0, it0 = _region_mask(region)
    nx, nt = mask.shape
    pinned = _boundary_nodes(mask)

    H0 = np.zeros((nx, nt))
    for ix, it in np.argwhere(pinned):
        x, t = region.node_xy(ix + ix0, it + it0)
        H0[ix, it] = region.boundary_height(x, t)

    lo_env, hi_env = _admissible_envelopes(mask, pinned, H0, h)
    H = 0.5 * (lo_env + hi_env)
    if init is not None:
        prev_field = init[0]
        xs = region.x0 + (np.arange(nx) + ix0) / q
        ts = region.t0 + (np.arange(nt) + it0) / q
        X, T = np.meshgrid(xs, ts, indexing="ij")
        Hi = np.real(prev_field.interp(X, T))
        good = mask & ~pinned & np.isfinite(Hi)
        H = np.where(good, np.clip(Hi, lo_env, hi_env), H)
    H = np.where(mask, H, np.nan)
    H[pinned] = H0[pinned]

    act = mask[:-1, :-1] & mask[1:, :-1] & mask[:-1, 1:] & mask[1:, 1:]

    free = np.argwhere(mask & ~pinned)
    classes = []
    for cx in (0, 1):
        for ct in (0, 1):
            sel = free[(free[:, 0] % 2 == cx) & (free[:, 1] % 2 == ct)]
            if len(sel):
                classes.append((sel[:, 0], sel[:, 1]))

    # cells incident to a node: (cell origin offset, sign of v in s, in t)
    corner = ((-1, -1, +1, +1), (0, -1, -1, +1), (-1, 0, +1, -1), (0, 0, -1, -1))

    def gather_cells(ixs, its, v0):
        cells = []
        for dix, dit, sgn_s, sgn_t in corner:
            cx = np.clip(ixs + dix, 0, nx - 2)
            ct_ = np.clip(its + dit, 0, nt - 2)
            ok = (
                (ixs + dix >= 0) & (its + dit >= 0)
                & (ixs + dix < nx - 1) & (its + dit < nt - 1)
                & act[cx, ct_]
            )
            s_all = (H[cx + 1, ct_] - H[cx, ct_] + H[cx + 1, ct_ + 1] - H[cx, ct_ + 1]) / (2 * h)
            t_all = (H[cx, ct_ + 1] - H[cx, ct_] + H[cx + 1, ct_ + 1] - H[cx + 1, ct_]) / (2 * h)
            cs = sgn_s / (2 * h)
            ct = sgn_t / (2 * h)
            s_rest = np.where(ok, s_all - cs * v0, 0.0)
            t_rest = np.where(ok, t_all - ct * v0, 0.0)
            cells.append((ok, s_rest, t_rest, cs, ct))
        return cells

    def feasible_interval(cells, v0):
        lo = np.full(v0.shape, -np.inf)
        hi = np.full(v0.shape, np.inf)
        for ok, s_rest, t_rest, cs, ct in cells:
            # linear constraints coef*v <= bound from the proportion clamps
            constraints = (
                (cs, (1.0 - prop_clamp) - s_rest),           # s  <= 1 - eps
                (ct, -prop_clamp - t_rest),                  # t  <= -eps
                (-(cs + ct), s_rest + t_rest - prop_clamp),  # s+t >= eps
            )
            for coef, bound in constraints:
                if coef > 0:
                    hi = np.minimum(hi, np.where(ok, bound / coef, np.inf))
                elif coef < 0:
                    lo = np.maximum(lo, np.where(ok, bound / coef, -np.inf))
        return lo, hi

    def repair_pass():
        """Project nodes toward cell feasibility (used after prolongation,
        before the monotone ascent; no entropy bookkeeping here)."""
        moved = 0.0
        for ixs, its in classes:
            v0 = H[ixs, its]
            cells = gather_cells(ixs, its, v0)
            lo, hi = feasible_interval(cells, v0)
            empty = lo > hi
            v = np.clip(v0, np.minimum(lo, hi), np.maximum(lo, hi))
            v = np.where(empty, 0.5 * (lo + hi), v)
            H[ixs, its] = v
            if len(v):
                moved = max(moved, float(np.max(np.abs(v - v0))))
        return moved

    for _ in range(80):
        if repair_pass() < 1e-14:
            break

    def class_update(ixs, its):
        v0 = H[ixs, its]
        cells = gather_cells(ixs, its, v0)
        lo, hi = feasible_interval(cells, v0)
        # collapsed interval (numerically frozen node): keep the old value
        bad = lo > hi
        lo = np.where(bad, v0, lo)
        hi = np.where(bad, v0, hi)

        def gprime(v, with_second=False):
            g = np.zeros(v.shape)
            g2 = np.zeros(v.shape) if with_second else None
            for ok, s_rest, t_rest, cs, ct in cells:
                s = np.where(ok, s_rest + cs * v, 0.5)
                t = np.where(ok, t_rest + ct * v, -0.25)
                ds, dt = _dsigma_st(s, t)
                g += np.where(ok, cs * ds + ct * dt, 0.0)
                if with_second:
                    # d2 sigma: sigma_ss = -pi(cot pi p1 + cot pi p3),
                    # sigma_st = -pi cot pi p3, sigma_tt = -pi(cot pi p2 + cot pi p3)
                    c1 = _sincot(1.0 - s)
                    c2 = _sincot(-t)
                    c3 = _sincot(s + t)
                    sss = -np.pi * (c1 + c3)
                    sst = -np.pi * c3
                    stt = -np.pi * (c2 + c3)
                    g2 += np.where(ok, cs * cs * sss + 2 * cs * ct * sst + ct * ct * stt, 0.0)
            return (g, g2) if with_second else g

        def gvalue(v):
            g = np.zeros(v.shape)
            for ok, s_rest, t_rest, cs, ct in cells:
                s = np.where(ok, s_rest + cs * v, 0.5)
                t = np.where(ok, t_rest + ct * v, -0.25)
                g += np.where(ok, _sigma_st(s, t), 0.0)
            return g

        # safeguarded Newton on the monotone-decreasing g'; bisection bracket
        ga = gprime(lo)
        gb = gprime(hi)
        v_new = np.where(ga <= 0, lo, np.where(gb >= 0, hi, v0))
        active = (ga > 0) & (gb < 0)
        aa = lo.copy()
        bb = hi.copy()
        v = np.clip(v0, lo, hi)
        for it_no in range(18):
            g, g2 = gprime(v, with_second=True)
            aa = np.where(active & (g > 0), v, aa)
            bb = np.where(active & (g <= 0), v, bb)
            with np.errstate(divide="ignore", invalid="ignore"):
                nstep = v - g / g2
            inside = np.isfinite(nstep) & (nstep > aa) & (nstep < bb)
            use_newton = inside & (it_no % 3 != 2)  # periodic bisection safety
            v = np.where(active, np.where(use_newton, nstep, 0.5 * (aa + bb)), v)
        v_new = np.where(active, v, v_new)
        # monotone guard: never move a node downhill (entropy must not drop)
        worse = gvalue(v_new) < gvalue(v0)
        v_new = np.where(worse, v0, v_new)
        H[ixs, its] = v_new
        return float(np.max(np.abs(v_new - v0))) if len(v_new) else 0.0

    def total_entropy():
        Hs = np.nan_to_num(H)
        s = (Hs[1:, :-1] - Hs[:-1, :-1] + Hs[1:, 1:] - Hs[:-1, 1:]) / (2 * h)
        t = (Hs[:-1, 1:] - Hs[:-1, :-1] + Hs[1:, 1:] - Hs[1:, :-1]) / (2 * h)
        s = np.where(act, s, 0.5)
        t = np.where(act, t, -0.25)
        return float(np.where(act, _sigma_st(s, t), 0.0).sum() * h * h)

    ent_prev = total_entropy()
    residual = 0.0
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        residual = 0.0
        for ixs, its in classes:
            residual = max(residual, class_update(ixs, its))
        ent_now = total_entropy()
        assert ent_now >= ent_prev - 1e-9, "entropy decreased during ascent"
        ent_prev = ent_now
        if residual < tol:
            break

    field = ContinuumField(
        region.x0 + ix0 / q, region.t0 + it0 / q, h, h, H.copy(), mask.copy()
    )
    return field, residual, sweeps, ent_prev


# --------------------------------------------------------------------------
# Complex slope, characteristics, Stieltjes transforms
# --------------------------------------------------------------------------


def arg_star(z, tol: float = 1e-9):
    """The angle in [-pi, 0] of a point of the closed lower half-plane."""
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag > tol * np.maximum(1.0, np.abs(z))):
        raise ContinuumError("arg* is defined on the closed lower half-plane")
    ang = np.angle(z)
    ang = np.where(z.imag >= 0, np.where(z.real >= 0, 0.0, -np.pi), ang)
    return ang if ang.ndim else float(ang)


def slope_to_complex(sl: Slope) -> complex:
    """The complex slope of a strictly liquid gradient.

    Post-condition (checked on return): arg* f = -pi s and
    arg*(f+1) = pi t, both to 1e-12.
    """
    if not sl.interior:
        raise ContinuumError("complex slope degenerates on the frozen boundary")
    _, p2, p3 = sl.proportions
    f = (np.sin(np.pi * p2) / np.sin(np.pi * p3)) * np.exp(-1j * np.pi * sl.s)
    assert abs(arg_star(f) + np.pi * sl.s) < 1e-12
    assert abs(arg_star(f + 1) - np.pi * sl.t) < 1e-12
    return complex(f)


def complex_to_slope(f) -> Slope:
    """Read (s, t) off a complex slope; inverse of slope_to_complex."""
    return Slope(-arg_star(f) / np.pi, arg_star(np.asarray(f, dtype=complex) + 1) / np.pi)


def characteristic(u, f0, t):
    """z_t(u) = u + t f0/(f0+1); exact, and linear in t."""
    f0 = np.asarray(f0, dtype=complex)
    if np.any(f0 == -1):
        raise ContinuumError("characteristic undefined at f0 = -1")
    out = np.asarray(u, dtype=complex) + np.asarray(t) * f0 / (f0 + 1)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class Characteristic:
    """The straight characteristic through seed u with slope f0 there.

    Im z_t is nonincreasing in t whenever Im f0 <= 0 (checked), which is how
    trajectories seeded in the upper half-plane sink toward the support.
    """

    u: complex
    f0: complex

    def __post_init__(self):
        if self.f0 == -1:
            raise ContinuumError("characteristic undefined at f0 = -1")

    @property
    def velocity(self) -> complex:
        return self.f0 / (self.f0 + 1)

    def at(self, t):
        return characteristic(self.u, self.f0, t)

    def trajectory(self, times) -> np.ndarray:
        ts = np.asarray(times, dtype=float)
        zs = np.asarray(characteristic(self.u, self.f0, ts))
        if self.f0.imag <= 0 and len(ts) > 1 and np.all(np.diff(ts) >= 0):
            assert np.all(np.diff(zs.imag) <= 1e-12), "Im z_t must be nonincreasing"
        return zs


def stieltjes(c: ParticleConfig, z):
    """m(z) = sum_i [log(z - x_i) - log(z - x_i - 1/n)].

    The exact Stieltjes transform of the indicator density
    sum_i 1[x_i, x_i + 1/n]; each summand uses the principal branch of
    log((z - x_i)/(z - x_i - 1/n)), which is analytic off its own support
    interval, so m is continuous off the support.
    """
    z = np.asarray(z, dtype=complex)
    x = c.rescaled()
    zz = z[..., None] if z.ndim else z[None]
    ratio = (zz - x) / (zz - x - 1.0 / c.n)
    if np.any((ratio.imag == 0) & (ratio.real <= 0)):
        raise ContinuumError("z lies on a support interval")
    out = np.log(ratio).sum(axis=-1)
    return out if z.ndim else complex(out)


def trapezoid_slope(c: ParticleConfig, z, a: float, b: float):
    """Explicit complex slope of the trapezoid bridge model,

        f(z) = [(b - z)/(z - a)] * exp(m(z)),

    returned together with B(z) = (f(z) + 1)(z - a).  Valid for z off the
    particle support and off {a, b}.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z == a):
        raise ContinuumError("pole of the trapezoid slope at z = a")
    m = stieltjes(c, z) if z.ndim else np.asarray(stieltjes(c, z))
    f = (b - z) / (z - a) * np.exp(m)
    B = (f + 1) * (z - a)
    if z.ndim:
        return f, B
    return complex(f), complex(B)


def characteristic_field(
    f0,
    x0: float,
    t0: float,
    hx: float,
    ht: float,
    nx: int,
    nt: int,
    df0=None,
    newton_tol: float = 1e-12,
) -> ContinuumField:
    """Solve f(z, t) = f0(z - t f/(f+1)) on a grid by Newton continuation.

    This constructs the method-of-characteristics solution of the complex
    Burgers equation with initial slope f0 to Newton accuracy, so its
    residual under burgers_residual is pure discretization error.
    """
    if df0 is None:
        d = 1e-6

        def df0(u):
            return (f0(u + d) - f0(u - d)) / (2 * d)

    xs = x0 + hx * np.arange(nx)
    vals = np.empty((nx, nt), dtype=complex)
    f = np.asarray(f0(xs + 0j), dtype=complex).copy()
    for it in range(nt):
        t = t0 + ht * it
        if t != 0.0:
            for _ in range(80):
                u = xs - t * f / (f + 1)
                step = (f - f0(u)) / (1 + t * df0(u) / (f + 1) ** 2)
                f = f - step
                if np.max(np.abs(step)) < newton_tol:
                    break
            else:
                raise ContinuumError("characteristic Newton solve did not converge")
        vals[:, it] = f
    return ContinuumField(x0, t0, hx, ht, vals, np.ones((nx, nt), dtype=bool))


def burgers_residual(F: ContinuumField) -> ContinuumField:
    """Central-difference residual of d_t f + (f/(f+1)) d_x f per node.

    Nodes whose 4-point stencil leaves the mask are masked off in the result.
    """
    f = F.values.astype(complex)
    if np.any(F.mask & (f == -1)):
        raise ContinuumError("f = -1 on an active node")
    res = np.full_like(f, np.nan)
    ok = np.zeros(F.mask.shape, dtype=bool)
    ok[1:-1, 1:-1] = (
        F.mask[1:-1, 1:-1]
        & F.mask[2:, 1:-1]
        & F.mask[:-2, 1:-1]
        & F.mask[1:-1, 2:]
        & F.mask[1:-1, :-2]
    )
    fx = (f[2:, 1:-1] - f[:-2, 1:-1]) / (2 * F.hx)
    ft = (f[1:-1, 2:] - f[1:-1, :-2]) / (2 * F.ht)
    mid = f[1:-1, 1:-1]
    res[1:-1, 1:-1] = ft + mid / (mid + 1) * fx
    res[~ok] = np.nan
    return ContinuumField(F.x0, F.t0, F.hx, F.ht, res, ok)


def _arg_star_grid(z):
    """arg* on arrays, clipping stray positive imaginary parts to the axis."""
    z = np.asarray(z, dtype=complex)
    zc = np.where(z.imag > 0, z.real + 0j, z)
    ang = np.angle(zc)
    on_axis = zc.imag == 0
    ang = np.where(on_axis & (zc.real < 0), -np.pi, ang)
    ang = np.where(on_axis & (zc.real >= 0), 0.0, ang)
    return ang


def slope_fields_from_complex(fF: ContinuumField):
    """(s, t) node fields read off a complex-slope field via arg*."""
    f = fF.values.astype(complex)
    s = np.where(fF.mask, -_arg_star_grid(f) / np.pi, np.nan)
    t = np.where(fF.mask, _arg_star_grid(f + 1) / np.pi, np.nan)
    return s, t


def limit_height_from_slope(
    fF: ContinuumField, anchor: float = 0.0, curl_tol: float = 1e-6
) -> ContinuumField:
    """Integrate grad H* = (-arg* f / pi, arg*(f+1) / pi) over the grid.

    The gradient must be curl-free up to curl_tol (checked; the error names
    the worst plaquette).  Integration is trapezoid-rule summation along a
    BFS tree from the first active node, hence path-independent up to the
    checked curl.
    """
    s, t = slope_fields_from_complex(fF)
    act = fF.mask[:-1, :-1] & fF.mask[1:, :-1] & fF.mask[:-1, 1:] & fF.mask[1:, 1:]
    ds_dt = (s[:-1, 1:] + s[1:, 1:] - s[:-1, :-1] - s[1:, :-1]) / (2 * fF.ht)
    dt_dx = (t[1:, :-1] + t[1:, 1:] - t[:-1, :-1] - t[:-1, 1:]) / (2 * fF.hx)
    curl = np.where(act, ds_dt - dt_dx, 0.0)
    if act.any():
        worst = float(np.max(np.abs(curl)))
        if worst > curl_tol:
            ix, it = np.unravel_index(np.argmax(np.abs(curl)), curl.shape)
            raise ContinuumError(
                f"slope field not integrable: |curl|={worst:.3e} at cell ({ix},{it})"
            )

    nx, nt = fF.values.shape
    H = np.full((nx, nt), np.nan)
    start = tuple(np.argwhere(fF.mask)[0])
    H[start] = anchor
    dq = deque([start])
    while dq:
        ix, it = dq.popleft()
        for dx, dt_ in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            jx, jt = ix + dx, it + dt_
            if 0 <= jx < nx and 0 <= jt < nt and fF.mask[jx, jt] and np.isnan(H[jx, jt]):
                if dx:
                    H[jx, jt] = H[ix, it] + dx * fF.hx * 0.5 * (s[ix, it] + s[jx, jt])
                else:
                    H[jx, jt] = H[ix, it] + dt_ * fF.ht * 0.5 * (t[ix, it] + t[jx, jt])
                dq.append((jx, jt))
    return ContinuumField(fF.x0, fF.t0, fF.hx, fF.ht, H, fF.mask.copy())
