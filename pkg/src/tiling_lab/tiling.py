"""Tilings, height functions, and non-intersecting Bernoulli walks.

Three equivalent encodings of the same object and the validated conversions
between them, plus brute-force counting oracles (row-transfer DP and the
Lindstrom-Gessel-Viennot determinant) used to cross-check everything else.

The type <-> height-increment convention is frozen in one table below,
transcribed from the three lozenge pictures; every conversion reads only this
table.  A lozenge is two triangular faces glued along one interior edge:

    type 1: faces down(x,y) + up(x,y+1), interior EAST edge, increment 0
            (all four vertices share one height)
    type 2: faces up(x,y) + down(x+1,y), interior NORTH edge, increment -1
            (a right-jump of a walker)
    type 3: faces up(x,y) + down(x,y),   interior DIAGONAL edge, increment +1
            (a walker standing still)

On every edge that is NOT interior to a lozenge the increments are the
defaults east:+1, north:0, diagonal:0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .lattice import (
    BoundaryHeight,
    Domain,
    LatticeError,
    height_edges_legal,
)

# (interior edge direction, increment on it) per lozenge type
LOZENGE_TABLE = {
    1: ("east", 0),
    2: ("north", -1),
    3: ("diag", 1),
}


class ConversionError(ValueError):
    """A representation violates its invariants; the message names a witness."""


@dataclass(frozen=True)
class HeightFunction:
    """Integer heights over all vertices of a domain."""

    domain: Domain
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.int64)
        if vals.shape != (self.domain.n_vertices,):
            raise ConversionError("height array has wrong length")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        ok, edge = height_edges_legal(self.domain, vals)
        if not ok:
            raise ConversionError(f"illegal height increment on edge {edge}")

    def at(self, x: int, y: int) -> int:
        return int(self.values[self.domain.index(x, y)])

    def boundary_restriction(self) -> dict:
        dom = self.domain
        return {
            (int(x), int(y)): int(self.values[dom.index(x, y)])
            for x, y in dom.vertices[dom.boundary_mask]
        }

    def matches_boundary(self, h: BoundaryHeight) -> bool:
        return self.boundary_restriction() == {
            (int(a), int(b)): v for (a, b), v in h.values.items()
        }


@dataclass(frozen=True)
class Tiling:
    """A lozenge tiling: list of (anchor x, anchor y, type) triples.

    Every face of the domain is covered exactly once.  When the boundary
    height data leaves gaps in a boundary row (general walk entrance/exit
    configurations), the tiles along that row are clipped by the boundary:
    such a lozenge covers one in-domain face, and its other half hangs over
    the notched boundary, exactly as in the jagged walk-ensemble pictures.
    """

    domain: Domain
    lozenges: tuple

    def __post_init__(self):
        domain_faces = set(self.domain.faces)
        covered = {}
        for x, y, typ in self.lozenges:
            if typ not in LOZENGE_TABLE:
                raise ConversionError(f"unknown lozenge type {typ}")
            inside = 0
            for f in _lozenge_faces(x, y, typ):
                if f in domain_faces:
                    inside += 1
                    if f in covered:
                        raise ConversionError(f"face {f} covered twice")
                    covered[f] = (x, y, typ)
            if inside == 0:
                raise ConversionError(f"lozenge ({x},{y},{typ}) lies outside the domain")
        if set(covered) != domain_faces:
            missing = domain_faces - set(covered)
            raise ConversionError(
                f"lozenges do not tile the face set (missing={sorted(missing)[:3]})"
            )
        object.__setattr__(self, "lozenges", tuple(sorted(self.lozenges)))

    def clipped_lozenges(self) -> tuple:
        """The boundary-clipped tiles (only one half inside the domain)."""
        domain_faces = set(self.domain.faces)
        return tuple(
            (x, y, typ)
            for x, y, typ in self.lozenges
            if sum(f in domain_faces for f in _lozenge_faces(x, y, typ)) == 1
        )


def _lozenge_faces(x, y, typ):
    if typ == 1:
        return ((x, y, "down"), (x, y + 1, "up"))
    if typ == 2:
        return ((x, y, "up"), (x + 1, y, "down"))
    return ((x, y, "up"), (x, y, "down"))


@dataclass(frozen=True)
class WalkEnsemble:
    """m non-intersecting Bernoulli walks: positions[i, t] = x_i(t)."""

    positions: np.ndarray = field(repr=False)
    t0: int = 0  # time label of column 0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.int64)
        if pos.ndim != 2:
            raise ConversionError("positions must be an m x (T+1) matrix")
        steps = np.diff(pos, axis=1)
        if pos.shape[1] > 1 and not np.all((steps == 0) | (steps == 1)):
            raise ConversionError("walk steps must lie in {0, 1}")
        if pos.shape[0] > 1 and not np.all(np.diff(pos, axis=0) > 0):
            raise ConversionError("walks must be strictly ordered (non-intersecting)")
        pos = pos.copy()
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def m(self) -> int:
        return self.positions.shape[0]

    @property
    def span(self) -> int:
        return self.positions.shape[1] - 1

    def to_csv(self) -> str:
        lines = ["i,t,x"]
        for i in range(self.m):
            for t in range(self.span + 1):
                lines.append(f"{i},{self.t0 + t},{self.positions[i, t]}")
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Conversions
# --------------------------------------------------------------------------


def tiling_from_height(h: HeightFunction) -> Tiling:
    """Read the lozenge decomposition off a height function.

    Each face has exactly one incident edge carrying a non-default increment
    pattern; that edge is the face's gluing edge and determines its lozenge.
    """
    dom = h.domain
    H = h.values
    lozenges = set()
    for f in dom.faces:
        x, y, kind = f
        if kind == "up":  # vertices (x,y), (x+1,y), (x+1,y+1)
            d_east = H[dom.index(x + 1, y)] - H[dom.index(x, y)]
            d_north = H[dom.index(x + 1, y + 1)] - H[dom.index(x + 1, y)]
            if d_east == 0:
                lozenges.add((x, y - 1, 1))  # glued below along east edge
            elif d_north == -1:
                lozenges.add((x, y, 2))
            else:
                lozenges.add((x, y, 3))
        else:  # vertices (x,y), (x,y+1), (x+1,y+1)
            d_north = H[dom.index(x, y + 1)] - H[dom.index(x, y)]
            d_east = H[dom.index(x + 1, y + 1)] - H[dom.index(x, y + 1)]
            if d_east == 0:
                lozenges.add((x, y, 1))
            elif d_north == -1:
                lozenges.add((x - 1, y, 2))
            else:
                lozenges.add((x, y, 3))
    return Tiling(dom, tuple(sorted(lozenges)))


def height_from_tiling(t: Tiling, h0: int = 0) -> HeightFunction:
    """Integrate the increment table over the domain, anchored at the
    lexicographically smallest boundary vertex with value h0."""
    dom = t.domain
    interior_edge = {}  # oriented lattice edge -> forced increment
    for x, y, typ in t.lozenges:
        direction, inc = LOZENGE_TABLE[typ]
        if direction == "east":  # east edge (x, y+1) -> (x+1, y+1)
            interior_edge[((x, y + 1), (x + 1, y + 1))] = inc
        elif direction == "north":  # north edge (x+1, y) -> (x+1, y+1)
            interior_edge[((x + 1, y), (x + 1, y + 1))] = inc
        else:  # diagonal edge (x, y) -> (x+1, y+1)
            interior_edge[((x, y), (x + 1, y + 1))] = inc

    default = {"east": 1, "north": 0, "diag": 0}
    H = np.full(dom.n_vertices, np.iinfo(np.int64).min, dtype=np.int64)
    anchor = tuple(min((y, x) for x, y in dom.vertices[dom.boundary_mask])[::-1])
    H[dom.index(*anchor)] = h0

    # BFS over directed face edges, checking consistency across cycles
    edges = []
    for f in dom.faces:
        vs = dom.face_vertices(f)
        for a, b in ((vs[0], vs[1]), (vs[1], vs[2]), (vs[0], vs[2])):
            edges.append((a, b))
    adj: dict[tuple, list] = {}
    for a, b in set(edges):
        dx, dy = b[0] - a[0], b[1] - a[1]
        kind = {(1, 0): "east", (0, 1): "north", (1, 1): "diag"}[(dx, dy)]
        inc = interior_edge.get((a, b), default[kind])
        adj.setdefault(a, []).append((b, inc))
        adj.setdefault(b, []).append((a, -inc))

    stack = [anchor]
    while stack:
        v = stack.pop()
        hv = H[dom.index(*v)]
        for w, inc in adj.get(v, ()):
            iw = dom.index(*w)
            if H[iw] == np.iinfo(np.int64).min:
                H[iw] = hv + inc
                stack.append(w)
            elif H[iw] != hv + inc:
                raise ConversionError(f"inconsistent tiling near edge {v}-{w}")
    if np.any(H == np.iinfo(np.int64).min):
        raise ConversionError("domain face complex is disconnected")
    return HeightFunction(dom, H)


def walks_from_height(h: HeightFunction) -> WalkEnsemble:
    """Particle positions per row: x_i(t) are the x with H(x+1,t) = H(x,t)+1."""
    dom = h.domain
    rows = []
    m = None
    for y in range(dom.y_min, dom.y_max + 1):
        base, lo, hi = dom.row_slice(y)
        row = h.values[base : base + (hi - lo + 1)]
        xs = lo + np.nonzero(np.diff(row) == 1)[0]
        if m is None:
            m = len(xs)
        elif len(xs) != m:
            raise ConversionError(
                f"row {y} has {len(xs)} particles, expected {m} (bad boundary)"
            )
        rows.append(xs)
    if m == 0:
        raise ConversionError("height function carries no particles")
    return WalkEnsemble(np.stack(rows, axis=1), t0=dom.y_min)


def height_from_walks(w: WalkEnsemble, dom: Domain) -> HeightFunction:
    """Inverse of walks_from_height: row-integrate the particle indicators,
    anchoring each row at the west boundary value 0... read from row starts.

    The west end of every row carries the height of the domain's west
    boundary, which for walk-compatible domains is the running count of
    walkers strictly left of it: zero.
    """
    if w.span != dom.y_max - dom.y_min:
        raise ConversionError("walk span does not match the domain's rows")
    H = np.empty(dom.n_vertices, dtype=np.int64)
    for t in range(w.span + 1):
        y = dom.y_min + t
        base, lo, hi = dom.row_slice(y)
        xs = w.positions[:, t]
        if len(xs) and (xs[0] < lo or xs[-1] > hi - 1):
            raise ConversionError(f"walker outside row {y} of the domain")
        row = np.zeros(hi - lo + 2, dtype=np.int64)
        np.add.at(row, xs - lo + 1, 1)
        H[base : base + (hi - lo + 1)] = np.cumsum(row)[:-1]
    return HeightFunction(dom, H)


# --------------------------------------------------------------------------
# Enumeration oracles
# --------------------------------------------------------------------------


class TooLargeError(RuntimeError):
    """Estimated enumeration state space exceeds the caller's cap."""


def _row_particle_data(dom: Domain, h: BoundaryHeight):
    """Per-row (x_lo, width, m_row) implied by the boundary heights."""
    data = []
    for y in range(dom.y_min, dom.y_max + 1):
        _, lo, hi = dom.row_slice(y)
        west = h.values[(lo, y)]
        east = h.values[(hi, y)]
        data.append((lo, hi - lo, east - west))
    return data


def _row_profile_config(dom: Domain, h: BoundaryHeight, y: int):
    """Particle positions encoded by the boundary profile along row y,
    or None if the profile has an illegal increment."""
    _, lo, hi = dom.row_slice(y)
    prof = [h.values[(x, y)] for x in range(lo, hi + 1)]
    for u, v in zip(prof, prof[1:]):
        if v - u not in (0, 1):
            return None
    return tuple(lo + i for i, (u, v) in enumerate(zip(prof, prof[1:])) if v - u == 1)


def enumerate_tilings(dom: Domain, h: BoundaryHeight, cap: int = 2_000_000):
    """Exact count of height functions extending h, by row-transfer DP.

    The DP state is a row's height profile, encoded as its set of unit-rise
    positions; the profile's endpoints are pinned by the boundary data, so a
    row with west height w and east height e carries exactly e - w rises.
    Transitions check every inter-row face edge (north increments in {-1,0},
    diagonal increments in {0,1}), which correctly handles boundary data that
    injects or absorbs walkers through non-constant side heights.

    Returns (count, iterator): an exact big integer, and a lazy iterator over
    every extension as a HeightFunction.  Raises TooLargeError when the
    estimated configuration space exceeds ``cap``; an inadmissible boundary
    yields count 0.
    """
    from itertools import combinations

    rows = _row_particle_data(dom, h)
    if any(m < 0 or m > width for _, width, m in rows):
        return 0, iter(())

    est = sum(comb(width, m) for _, width, m in rows)
    if est > cap:
        raise TooLargeError(f"estimated state space {est} exceeds cap {cap}")

    south = _row_profile_config(dom, h, dom.y_min)
    north = _row_profile_config(dom, h, dom.y_max)
    if south is None or north is None:
        return 0, iter(())

    T = dom.y_max - dom.y_min

    # inter-row face edges, per row pair: (north xs, diagonal xs)
    inter = [(set(), set()) for _ in range(T)]
    for x, y, kind in dom.faces:
        t = y - dom.y_min
        if kind == "up":  # north edge at x+1, diagonal from x
            inter[t][0].add(x + 1)
            inter[t][1].add(x)
        else:  # down: north edge at x, diagonal from x
            inter[t][0].add(x)
            inter[t][1].add(x)

    def profile(t, cfg):
        """Height at every column of row t, as a dict x -> height."""
        lo, width, _ = rows[t]
        rises = set(cfg)
        cur = h.values[(lo, dom.y_min + t)]
        out = {}
        for x in range(lo, lo + width + 1):
            out[x] = cur
            if x in rises:
                cur += 1
        return out

    def compatible(t, Pa, Pb):
        north_xs, diag_xs = inter[t]
        for x in north_xs:
            if Pb[x] - Pa[x] not in (-1, 0):
                return False
        for x in diag_xs:
            if Pb[x + 1] - Pa[x] not in (0, 1):
                return False
        return True

    layer_states = []
    for t in range(T + 1):
        lo, width, m = rows[t]
        if t == 0:
            cfgs = [south]
        elif t == T:
            cfgs = [north]
        else:
            cfgs = [tuple(lo + i for i in c) for c in combinations(range(width), m)]
        layer_states.append([(cfg, profile(t, cfg)) for cfg in cfgs])

    counts: list[dict] = [dict() for _ in range(T + 1)]
    counts[0][south] = 1
    profiles = [dict(layer_states[t]) for t in range(T + 1)]
    for t in range(1, T + 1):
        cur = counts[t]
        prev = counts[t - 1]
        for cfg, P in layer_states[t]:
            total = 0
            for pcfg, c in prev.items():
                if compatible(t - 1, profiles[t - 1][pcfg], P):
                    total += c
            if total:
                cur[cfg] = total
    count = counts[T].get(north, 0)

    def walk_all():
        if count == 0:
            return

        def rec(t, cfg, suffix):
            if t == 0:
                if cfg == south:
                    yield [south] + suffix
                return
            for pcfg in counts[t - 1]:
                if compatible(t - 1, profiles[t - 1][pcfg], profiles[t][cfg]):
                    yield from rec(t - 1, pcfg, [cfg] + suffix)

        for path in rec(T, north, []):
            H = np.empty(dom.n_vertices, dtype=np.int64)
            for t, cfg in enumerate(path):
                base, lo, hi = dom.row_slice(dom.y_min + t)
                P = profiles[t][cfg]
                H[base : base + hi - lo + 1] = [P[x] for x in range(lo, hi + 1)]
            yield HeightFunction(dom, H)

    return count, walk_all()


def macmahon_count(a: int, b: int, c: int) -> int:
    """Boxed plane partition product formula, computed exactly.

    prod_{i<=a} prod_{j<=b} prod_{k<=c} (i+j+k-1)/(i+j+k-2), assembled as a
    single integer via factorials of the hyperplane sums to avoid rationals.
    """
    num = 1
    den = 1
    for i in range(1, a + 1):
        for j in range(1, b + 1):
            num *= i + j + c - 1
            den *= i + j - 1
    # the product over k telescopes: prod_k (i+j+k-1)/(i+j+k-2)
    #   = (i+j+c-1)! / (i+j-1)! * (i+j-2)! / (i+j+c-2)!  -- handled above
    q, r = divmod(num, den)
    assert r == 0
    return q


def bridge_count(start, end, T: int, cap: int = 5_000_000):
    """Number of non-intersecting Bernoulli bridge families start -> end.

    Computed two independent ways and returned as (dp, lgv): a direct DP over
    particle configurations, and the Lindstrom-Gessel-Viennot determinant of
    binomial coefficients det[C(T, end_j - start_i)], evaluated exactly over
    the integers by fraction-free elimination.
    """
    start = tuple(int(v) for v in start)
    end = tuple(int(v) for v in end)
    if len(start) != len(end):
        raise ValueError("start and end must have the same particle count")
    if any(b <= a for a, b in zip(start, start[1:])) or any(
        b <= a for a, b in zip(end, end[1:])
    ):
        raise ValueError("configurations must be strictly increasing")
    m = len(start)

    # --- LGV determinant over exact integers
    M = [[comb(T, end[j] - start[i]) if 0 <= end[j] - start[i] <= T else 0
          for j in range(m)] for i in range(m)]
    lgv = _int_det(M)

    # --- DP over configurations
    span = max(end) - min(start) + 1
    if comb(span, m) * (T + 1) > cap:
        raise TooLargeError("bridge DP state space exceeds cap")
    frontier = {start: 1}
    for t in range(T):
        nxt: dict[tuple, int] = {}
        for cfg, c in frontier.items():
            for e in range(1 << m):
                new = tuple(cfg[i] + ((e >> i) & 1) for i in range(m))
                if all(u < v for u, v in zip(new, new[1:])) and all(
                    new[i] <= end[i] <= new[i] + (T - t - 1) for i in range(m)
                ):
                    nxt[new] = nxt.get(new, 0) + c
        frontier = nxt
    dp = frontier.get(end, 0)
    return dp, lgv


def _int_det(M) -> int:
    """Bareiss fraction-free determinant of an integer matrix."""
    A = [row[:] for row in M]
    n = len(A)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for r in range(k + 1, n):
                if A[r][k] != 0:
                    A[k], A[r] = A[r], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


# --------------------------------------------------------------------------
# Export
# --------------------------------------------------------------------------


def tiling_to_json(t: Tiling) -> str:
    import json

    return json.dumps(
        {"lozenges": [{"x": int(x), "y": int(y), "type": int(k)} for x, y, k in t.lozenges]},
        separators=(",", ":"),
    )
