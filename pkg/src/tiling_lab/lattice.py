"""Triangular-lattice domains and boundary height data.

The lattice has vertex set Z^2 and edges in the directions (1,0), (0,1) and
(1,1); its faces are the unit triangles {(x,y),(x+1,y),(x+1,y+1)} ("up") and
{(x,y),(x,y+1),(x+1,y+1)} ("down").  A height function H assigns an integer
to every vertex subject to

    H(x+1, y)   - H(x, y) in {0, 1}     (east edge)
    H(x, y+1)   - H(x, y) in {-1, 0}    (north edge)
    H(x+1, y+1) - H(x, y) in {0, 1}     (diagonal edge)

All domains built here are row-convex (each row y occupies one contiguous
x-interval), which covers hexagons and strips and makes vertex indexing O(1).
Everything in this module is exact integer arithmetic; rational strip data is
carried as integers pre-scaled by n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import json

import numpy as np

# Neighbor offsets, paired with the height increment range along the
# connecting edge, oriented away from the center vertex c:
#   E  = (+1, 0):  H(E)  - H(c) in {0, 1}
#   W  = (-1, 0):  H(c)  - H(W) in {0, 1}
#   N  = (0, +1):  H(N)  - H(c) in {-1, 0}
#   S  = (0, -1):  H(c)  - H(S) in {-1, 0}
#   NE = (+1,+1):  H(NE) - H(c) in {0, 1}
#   SW = (-1,-1):  H(c)  - H(SW) in {0, 1}
NEIGHBOR_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1))


class LatticeError(ValueError):
    """Raised for malformed domains or boundary data."""


@dataclass(frozen=True)
class StripSpec:
    """A strip (double-sided trapezoid) domain at lattice scale n.

    The continuum strip is {(x,t): a(t) <= x <= b(t), 0 <= t <= t_max} with
    a(t) = a0 + a_slope*t and b(t) = b0 + b_slope*t; the lattice domain is its
    n-fold dilation.  a0, b0, t_max are rationals with n*a0, n*b0, n*t_max
    integral; m is the walker count (east boundary height).
    """

    a0: Fraction
    a_slope: int
    b0: Fraction
    b_slope: int
    t_max: Fraction
    n: int
    m: int

    def __post_init__(self):
        object.__setattr__(self, "a0", Fraction(self.a0))
        object.__setattr__(self, "b0", Fraction(self.b0))
        object.__setattr__(self, "t_max", Fraction(self.t_max))
        if self.a_slope not in (0, 1) or self.b_slope not in (0, 1):
            raise LatticeError("boundary slopes must lie in {0, 1}")
        if self.n < 1 or self.m < 1:
            raise LatticeError("n and m must be positive")
        for name in ("a0", "b0", "t_max"):
            if (getattr(self, name) * self.n).denominator != 1:
                raise LatticeError(f"n*{name} must be an integer")
        if self.t_max <= 0:
            raise LatticeError("t_max must be positive")
        if self.a_of(0) > self.b_of(0) or self.a_of(self.t_max) > self.b_of(self.t_max):
            raise LatticeError("need a(t) <= b(t) on [0, t_max]")
        if self.m > self.width(0) or self.m > self.width(self.t_max):
            raise LatticeError("m walkers do not fit in the strip")

    def a_of(self, t) -> Fraction:
        return self.a0 + self.a_slope * Fraction(t)

    def b_of(self, t) -> Fraction:
        return self.b0 + self.b_slope * Fraction(t)

    def width(self, t) -> int:
        """Lattice width n*(b(t) - a(t)) of row n*t."""
        return int(self.n * (self.b_of(t) - self.a_of(t)))

    # Integer row data of the dilated domain.
    @property
    def rows_t(self) -> int:
        return int(self.n * self.t_max)

    def row_range(self, y: int) -> tuple[int, int]:
        lo = int(self.n * self.a0) + self.a_slope * y
        hi = int(self.n * self.b0) + self.b_slope * y
        return lo, hi


class Domain:
    """A row-convex, simply connected induced subgraph of the lattice.

    Vertices are ordered lexicographically by (y, x); per-row contiguity makes
    the index of (x, y) computable in O(1).  Faces, the cyclic boundary, and
    the interior update tables used by the samplers are precomputed once.
    """

    def __init__(self, rows: dict[int, tuple[int, int]]):
        if not rows:
            raise LatticeError("empty domain")
        ys = sorted(rows)
        if ys != list(range(ys[0], ys[-1] + 1)):
            raise LatticeError("rows must form a contiguous y-interval")
        self.y_min, self.y_max = ys[0], ys[-1]
        self.row_lo = np.array([rows[y][0] for y in ys], dtype=np.int64)
        self.row_hi = np.array([rows[y][1] for y in ys], dtype=np.int64)
        if np.any(self.row_hi < self.row_lo):
            raise LatticeError("each row needs at least one vertex")

        counts = self.row_hi - self.row_lo + 1
        self.row_base = np.concatenate(([0], np.cumsum(counts)))[:-1]
        self.n_vertices = int(counts.sum())

        vx = np.concatenate(
            [np.arange(lo, hi + 1) for lo, hi in zip(self.row_lo, self.row_hi)]
        )
        vy = np.concatenate(
            [np.full(hi - lo + 1, y) for y, (lo, hi) in zip(ys, zip(self.row_lo, self.row_hi))]
        )
        self.vertices = np.column_stack([vx, vy]).astype(np.int64)
        self.vertices.setflags(write=False)

        self._build_faces()
        self._build_boundary()
        self._build_interior_tables()
        self._check_invariants()

    # --- indexing -------------------------------------------------------

    def contains(self, x: int, y: int) -> bool:
        if y < self.y_min or y > self.y_max:
            return False
        r = y - self.y_min
        return self.row_lo[r] <= x <= self.row_hi[r]

    def index(self, x: int, y: int) -> int:
        if not self.contains(x, y):
            raise KeyError((x, y))
        r = y - self.y_min
        return int(self.row_base[r] + (x - self.row_lo[r]))

    def index_arr(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        r = y - self.y_min
        return self.row_base[r] + (x - self.row_lo[r])

    def row_slice(self, y: int) -> tuple[int, int, int]:
        """(first index, x_lo, x_hi) of row y."""
        r = y - self.y_min
        return int(self.row_base[r]), int(self.row_lo[r]), int(self.row_hi[r])

    # --- construction helpers -------------------------------------------

    def _build_faces(self):
        faces = []
        for y in range(self.y_min, self.y_max + 1):
            r = y - self.y_min
            for x in range(self.row_lo[r], self.row_hi[r] + 1):
                # up face {(x,y),(x+1,y),(x+1,y+1)}
                if self.contains(x + 1, y) and self.contains(x + 1, y + 1):
                    faces.append((x, y, "up"))
                # down face {(x,y),(x,y+1),(x+1,y+1)}
                if self.contains(x, y + 1) and self.contains(x + 1, y + 1):
                    faces.append((x, y, "down"))
        self.faces = tuple(faces)

    @staticmethod
    def face_vertices(face) -> tuple[tuple[int, int], ...]:
        x, y, kind = face
        if kind == "up":
            return ((x, y), (x + 1, y), (x + 1, y + 1))
        return ((x, y), (x, y + 1), (x + 1, y + 1))

    def _build_boundary(self):
        # boundary vertices: adjacent to at least one exterior vertex
        bmask = np.zeros(self.n_vertices, dtype=bool)
        for i, (x, y) in enumerate(self.vertices):
            for dx, dy in NEIGHBOR_OFFSETS:
                if not self.contains(x + dx, y + dy):
                    bmask[i] = True
                    break
        self.boundary_mask = bmask
        self.boundary_mask.setflags(write=False)

        # boundary edges of the face complex: incident to exactly one face
        edge_count: dict[tuple, int] = {}
        for f in self.faces:
            vs = self.face_vertices(f)
            for a, b in ((vs[0], vs[1]), (vs[1], vs[2]), (vs[0], vs[2])):
                e = (a, b) if a <= b else (b, a)
                edge_count[e] = edge_count.get(e, 0) + 1
        self.n_edges = len(edge_count)
        nbrs: dict[tuple, list] = {}
        for (a, b), c in edge_count.items():
            if c == 1:
                nbrs.setdefault(a, []).append(b)
                nbrs.setdefault(b, []).append(a)

        cycle_vertices = set(nbrs)
        mask_vertices = {tuple(v) for v in self.vertices[bmask]}
        if cycle_vertices != mask_vertices:
            raise LatticeError("boundary trace inconsistent; domain not simply connected")
        for v, ns in nbrs.items():
            if len(ns) != 2:
                raise LatticeError("boundary is not a single cycle")

        start = min(nbrs)
        cyc = [start]
        prev, cur = None, start
        while True:
            a, b = nbrs[cur]
            nxt = b if a == prev else a
            if nxt == start:
                break
            cyc.append(nxt)
            prev, cur = cur, nxt
        # orient counterclockwise (positive shoelace area), deterministic
        area2 = sum(
            cyc[i][0] * cyc[(i + 1) % len(cyc)][1] - cyc[(i + 1) % len(cyc)][0] * cyc[i][1]
            for i in range(len(cyc))
        )
        if area2 < 0:
            cyc = [cyc[0]] + cyc[:0:-1]
        self.boundary_cycle = tuple(cyc)

    def _build_interior_tables(self):
        interior = np.nonzero(~self.boundary_mask)[0]
        self.interior_idx = interior
        vx = self.vertices[interior, 0]
        vy = self.vertices[interior, 1]
        nb = np.empty((len(interior), 6), dtype=np.int64)
        for k, (dx, dy) in enumerate(NEIGHBOR_OFFSETS):
            nb[:, k] = self.index_arr(vx + dx, vy + dy)
        self.interior_neighbors = nb
        # 3-coloring: neighbors along (1,0),(0,1),(1,1) all change (x+y) mod 3
        colors = (vx + vy) % 3
        self.color_classes = tuple(np.nonzero(colors == c)[0] for c in range(3))
        for arr in (self.interior_idx, self.interior_neighbors):
            arr.setflags(write=False)

    def _check_invariants(self):
        # Euler characteristic of the open 2-complex: V - E + F = 1
        if self.n_vertices - self.n_edges + len(self.faces) != 1:
            raise LatticeError("Euler check failed; domain not simply connected")
        # interior vertices have their full hexagonal neighborhood of faces
        for i in self.interior_idx[: min(64, len(self.interior_idx))]:
            x, y = self.vertices[i]
            for dx, dy in NEIGHBOR_OFFSETS:
                assert self.contains(x + dx, y + dy)

    # --- misc -------------------------------------------------------------

    @property
    def bounding_box(self) -> tuple[int, int, int, int]:
        return (
            int(self.row_lo.min()),
            self.y_min,
            int(self.row_hi.max()),
            self.y_max,
        )

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"Domain(V={self.n_vertices}, F={len(self.faces)}, "
            f"rows {self.y_min}..{self.y_max})"
        )


@dataclass(frozen=True)
class BoundaryHeight:
    """Integer heights on a domain's boundary vertices.

    Legality of the data (height rules along boundary edges, extendability to
    the interior) is decided by :func:`is_admissible_boundary`, not here, so
    that inadmissible boundaries can be represented and queried.
    """

    domain: Domain
    values: dict = field(repr=False)

    def __post_init__(self):
        vals = {(int(x), int(y)): int(v) for (x, y), v in self.values.items()}
        object.__setattr__(self, "values", vals)
        bset = {tuple(v) for v in self.domain.vertices[self.domain.boundary_mask]}
        if set(vals) != bset:
            raise LatticeError("boundary height must be defined exactly on the boundary")

    def as_array(self) -> np.ndarray:
        """Heights embedded over all vertices (non-boundary entries = 0)."""
        out = np.zeros(self.domain.n_vertices, dtype=np.int64)
        for (x, y), h in self.values.items():
            out[self.domain.index(x, y)] = h
        return out


def _edge_increment_legal(a, b, ha, hb) -> bool:
    """Height-rule check for a single lattice edge between vertices a and b."""
    (xa, ya), (xb, yb) = a, b
    if (xb - xa, yb - ya) in ((1, 0), (1, 1)):
        return hb - ha in (0, 1)
    if (xa - xb, ya - yb) in ((1, 0), (1, 1)):
        return ha - hb in (0, 1)
    if (xb - xa, yb - ya) == (0, 1):
        return hb - ha in (-1, 0)
    if (xa - xb, ya - yb) == (0, 1):
        return ha - hb in (-1, 0)
    raise LatticeError(f"{a} and {b} are not lattice neighbors")


# --------------------------------------------------------------------------
# Builders
# --------------------------------------------------------------------------


def build_hexagon(a: int, b: int, c: int) -> tuple[Domain, BoundaryHeight]:
    """The a x b x c hexagon with corners (0,0), (a,0), (a+b,b), (a+b,b+c),
    (b,b+c), (0,c), and its unique boundary height function anchored so the
    lexicographically smallest boundary vertex (0,0) has height 0.

    The east boundary carries the constant height a (= walker count m); rows
    y = 0 .. b+c each hold exactly a walkers.
    """
    if min(a, b, c) < 1:
        raise LatticeError("hexagon sides must be positive")
    rows = {y: (max(0, y - c), min(a + y, a + b)) for y in range(b + c + 1)}
    dom = Domain(rows)

    def h_of(x, y):
        if y == 0:
            return x
        if y == b + c:
            return x - b
        if x == max(0, y - c):  # west / NW side
            return 0
        return a  # east / SE side

    vals = {tuple(v): h_of(*v) for v in dom.vertices[dom.boundary_mask]}
    return dom, BoundaryHeight(dom, vals)


def _packed_profile(width: int, m: int, against_east: bool) -> list[int]:
    """Height profile 0..m across a row of `width` steps, rises packed
    against one end."""
    if m > width:
        raise LatticeError("profile does not fit in the row")
    if against_east:
        flat = width - m
        return [0] * (flat + 1) + list(range(1, m + 1))
    return list(range(m + 1)) + [m] * (width - m)


def build_strip(
    spec: StripSpec,
    south: list[int] | None = None,
    north: list[int] | None = None,
) -> tuple[Domain, BoundaryHeight]:
    """The lattice strip n*D with west boundary height 0 and east height m.

    ``south`` / ``north`` are full height profiles along rows y=0 and y=T
    (length = row width + 1, starting at 0 and ending at m, increments in
    {0,1}).  Defaults: south packed against the west end, north packed
    against the east end (the trapezoid's "tightly packed ending data").
    """
    T = spec.rows_t
    rows = {y: spec.row_range(y) for y in range(T + 1)}
    dom = Domain(rows)

    def check_profile(p, width, name):
        if len(p) != width + 1:
            raise LatticeError(f"{name} profile has wrong length")
        if p[0] != 0 or p[-1] != spec.m:
            raise LatticeError(f"{name} profile must run from 0 to m")
        for u, v in zip(p, p[1:]):
            if v - u not in (0, 1):
                raise LatticeError(f"{name} profile has an illegal increment")

    lo0, hi0 = rows[0]
    loT, hiT = rows[T]
    south = south if south is not None else _packed_profile(hi0 - lo0, spec.m, False)
    north = north if north is not None else _packed_profile(hiT - loT, spec.m, True)
    check_profile(south, hi0 - lo0, "south")
    check_profile(north, hiT - loT, "north")

    vals = {}
    for v in dom.vertices[dom.boundary_mask]:
        x, y = int(v[0]), int(v[1])
        lo, hi = rows[y]
        if y == 0:
            vals[(x, y)] = south[x - lo]
        elif y == T:
            vals[(x, y)] = north[x - lo]
        elif x == lo:
            vals[(x, y)] = 0
        else:
            vals[(x, y)] = spec.m
    return dom, BoundaryHeight(dom, vals)


# --------------------------------------------------------------------------
# Envelopes and admissibility
# --------------------------------------------------------------------------

_BIG = np.int64(1) << 40


def _relax(dom: Domain, h: BoundaryHeight, maximal: bool) -> np.ndarray | None:
    """Pointwise extremal extension of h by cone-constraint relaxation.

    Iterates the Lipschitz-cone bounds to a fixpoint (Bellman-Ford style,
    O(V * diam)).  Returns None when the boundary data admits no extension.
    """
    H = np.full(dom.n_vertices, _BIG if maximal else -_BIG, dtype=np.int64)
    for (x, y), val in h.values.items():
        H[dom.index(x, y)] = val

    ids = dom.interior_idx
    nb = dom.interior_neighbors
    if len(ids):
        for _ in range(4 * (dom.n_vertices + 1)):
            E, W, N, S, NE, SW = (H[nb[:, k]] for k in range(6))
            if maximal:
                new = np.minimum.reduce([E, W + 1, N + 1, S, NE, SW + 1])
            else:
                new = np.maximum.reduce([E - 1, W, N, S - 1, NE - 1, SW])
            if np.array_equal(new, H[ids]):
                break
            H[ids] = new
        else:  # pragma: no cover - relaxation always stabilizes
            raise LatticeError("envelope relaxation failed to stabilize")

    if np.any(np.abs(H) >= _BIG // 2):
        return None
    return H


def height_edges_legal(dom: Domain, H: np.ndarray) -> tuple[bool, tuple | None]:
    """Check every face edge of the domain against the height rules.

    Returns (ok, witness) where witness names one violating edge.
    """
    seen = set()
    for f in dom.faces:
        vs = dom.face_vertices(f)
        for a, b in ((vs[0], vs[1]), (vs[1], vs[2]), (vs[0], vs[2])):
            e = (a, b) if a <= b else (b, a)
            if e in seen:
                continue
            seen.add(e)
            ha = H[dom.index(*e[0])]
            hb = H[dom.index(*e[1])]
            if not _edge_increment_legal(e[0], e[1], ha, hb):
                return False, e
    return True, None


def min_max_extensions(
    dom: Domain, h: BoundaryHeight
) -> tuple[np.ndarray, np.ndarray] | None:
    """(minimal, maximal) height extensions of h, or None if inadmissible."""
    hmax = _relax(dom, h, maximal=True)
    hmin = _relax(dom, h, maximal=False)
    if hmax is None or hmin is None:
        return None
    if np.any(hmax < hmin):
        return None
    for H in (hmin, hmax):
        ok, _ = height_edges_legal(dom, H)
        if not ok:
            return None
    return hmin, hmax


def is_admissible_boundary(dom: Domain, h: BoundaryHeight) -> bool:
    """True iff h extends to at least one legal height function on dom."""
    return min_max_extensions(dom, h) is not None


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def domain_to_json(dom: Domain, h: BoundaryHeight) -> str:
    """JSON document with stable (y, x)-lexicographic ordering."""
    doc = {
        "vertices": [[int(x), int(y)] for x, y in dom.vertices],
        "faces": [[int(x), int(y), kind] for x, y, kind in dom.faces],
        "boundary": [
            {"v": [int(x), int(y)], "h": int(h.values[(x, y)])}
            for x, y in dom.boundary_cycle
        ],
    }
    return json.dumps(doc, separators=(",", ":"))


def domain_from_json(text: str) -> tuple[Domain, BoundaryHeight]:
    doc = json.loads(text)
    rows: dict[int, list[int]] = {}
    for x, y in doc["vertices"]:
        rows.setdefault(y, []).append(x)
    row_ranges = {}
    for y, xs in rows.items():
        xs.sort()
        if xs != list(range(xs[0], xs[-1] + 1)):
            raise LatticeError("serialized domain is not row-convex")
        row_ranges[y] = (xs[0], xs[-1])
    dom = Domain(row_ranges)
    if [[int(x), int(y), k] for x, y, k in dom.faces] != doc["faces"]:
        raise LatticeError("face set mismatch in serialized domain")
    vals = {tuple(rec["v"]): int(rec["h"]) for rec in doc["boundary"]}
    return dom, BoundaryHeight(dom, vals)
