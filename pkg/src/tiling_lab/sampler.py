"""Uniform sampling of tilings.

Two routes:

* Height-function heat-bath (Glauber) dynamics, whose stationary law is
  uniform over all height functions with the given boundary data, upgraded to
  an exact sampler by monotone coupling-from-the-past.  The grand coupling
  reuses one uniform variate per site per sweep, so two chains started from
  ordered states stay ordered forever; the extreme states are the min/max
  boundary-height envelopes.

* For single-sided trapezoids (non-intersecting Bernoulli bridges with
  tightly packed ending data) the one-step transition law is available in
  closed form,

      P(e) ~ [V(x + e/n) / V(x)] * prod_i (b(t)-1/n-x_i)^{e_i} (x_i-a(t))^{1-e_i},

  with V the Vandermonde product; it is sampled exactly by enumerating
  {0,1}^m in log-space (collisions carry weight zero through the Vandermonde
  ratio, and the wall factors force a jump at x=a(t) and a stay at
  x=b(t)-1/n).

A full sweep updates the three color classes (x+y) mod 3 in order; each class
is an independent set, so the class update is an exact heat-bath block move
and the uniform measure is stationary for every sub-step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import Domain, BoundaryHeight, StripSpec, min_max_extensions
from .rng import Rng
from .tiling import HeightFunction


class SamplerError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# Heat-bath sweeps
# --------------------------------------------------------------------------


def _local_bounds(H: np.ndarray, nb: np.ndarray):
    """Allowed height interval [lo, hi] per interior vertex, given neighbors.

    Neighbor column order is (E, W, N, S, NE, SW); see lattice.NEIGHBOR_OFFSETS.
    """
    E = H[nb[:, 0]]
    W = H[nb[:, 1]]
    N = H[nb[:, 2]]
    S = H[nb[:, 3]]
    NE = H[nb[:, 4]]
    SW = H[nb[:, 5]]
    lo = np.maximum.reduce([E - 1, W, N, S - 1, NE - 1, SW])
    hi = np.minimum.reduce([E, W + 1, N + 1, S, NE, SW + 1])
    return lo, hi


def _sweep_inplace(dom: Domain, H: np.ndarray, uniforms: np.ndarray) -> None:
    """One heat-bath sweep over the 3 color classes using given uniforms."""
    nb = dom.interior_neighbors
    ids = dom.interior_idx
    for cls in dom.color_classes:
        lo, hi = _local_bounds(H, nb[cls])
        u = uniforms[cls]
        H[ids[cls]] = lo + ((u >= 0.5) & (hi > lo))


def heat_bath_update(h: HeightFunction, vertex: tuple[int, int], u: float) -> HeightFunction:
    """Single-site heat-bath move (exposed for detailed-balance checks)."""
    dom = h.domain
    i = dom.index(*vertex)
    if dom.boundary_mask[i]:
        raise SamplerError("cannot resample a boundary vertex")
    k = np.nonzero(dom.interior_idx == i)[0][0]
    H = h.values.copy()
    lo, hi = _local_bounds(H, dom.interior_neighbors[k : k + 1])
    H[i] = lo[0] + (1 if (u >= 0.5 and hi[0] > lo[0]) else 0)
    return HeightFunction(dom, H)


def glauber_sweep(h: HeightFunction, rng: Rng, sweeps: int = 1) -> HeightFunction:
    """Advance the uniform-stationary heat-bath chain by whole sweeps."""
    dom = h.domain
    H = h.values.copy()
    gen = rng.generator()
    n_int = len(dom.interior_idx)
    for _ in range(sweeps):
        _sweep_inplace(dom, H, gen.random(n_int))
    return HeightFunction(dom, H)


@dataclass(frozen=True)
class CouplingPair:
    """Two height functions on one domain with pointwise ordering lo <= hi."""

    lo: HeightFunction
    hi: HeightFunction

    def __post_init__(self):
        if self.lo.domain is not self.hi.domain:
            raise SamplerError("coupled chains must share a domain")
        if np.any(self.lo.values > self.hi.values):
            raise SamplerError("coupling order violated at input")


def coupled_sweep(pair: CouplingPair, rng: Rng, sweeps: int = 1) -> CouplingPair:
    """Advance both chains with the same sites and uniforms (grand coupling)."""
    dom = pair.lo.domain
    A = pair.lo.values.copy()
    B = pair.hi.values.copy()
    gen = rng.generator()
    n_int = len(dom.interior_idx)
    for _ in range(sweeps):
        u = gen.random(n_int)
        _sweep_inplace(dom, A, u)
        _sweep_inplace(dom, B, u)
    return CouplingPair(HeightFunction(dom, A), HeightFunction(dom, B))


def envelope_pair(dom: Domain, h: BoundaryHeight) -> CouplingPair:
    """The extreme states of the monotone chain: min and max extensions."""
    ext = min_max_extensions(dom, h)
    if ext is None:
        raise SamplerError("boundary data admits no height function")
    hmin, hmax = ext
    return CouplingPair(HeightFunction(dom, hmin), HeightFunction(dom, hmax))


def cftp_sample(
    dom: Domain,
    h: BoundaryHeight,
    rng: Rng,
    max_log2_horizon: int = 24,
) -> HeightFunction:
    """Exact uniform sample by monotone coupling-from-the-past.

    Sweeps at past time -j reuse the stream derived as "sweep:<j>", so
    extending the horizon keeps all previously used randomness fixed, as
    Propp-Wilson requires.  Raises SamplerError with the attempted horizon
    if min and max chains have not coalesced by 2**max_log2_horizon sweeps.
    """
    pair = envelope_pair(dom, h)
    if np.array_equal(pair.lo.values, pair.hi.values):
        return pair.lo  # frozen domain: unique tiling, immediately

    n_int = len(dom.interior_idx)
    horizon = 1
    while horizon <= (1 << max_log2_horizon):
        A = pair.lo.values.copy()
        B = pair.hi.values.copy()
        for j in range(horizon, 0, -1):
            u = rng.derive(f"sweep:{j}").fresh_generator().random(n_int)
            _sweep_inplace(dom, A, u)
            _sweep_inplace(dom, B, u)
        if np.array_equal(A, B):
            return HeightFunction(dom, A)
        horizon *= 2
    raise SamplerError(f"no coalescence within 2^{max_log2_horizon} sweeps")


# --------------------------------------------------------------------------
# Exact trapezoid bridge kernel
# --------------------------------------------------------------------------

ENUMERATION_CAP = 20  # particles; the weight table is 2^m wide


@dataclass(frozen=True)
class ParticleConfig:
    """Strictly increasing particle positions k_i on (1/n) Z (x_i = k_i/n)."""

    n: int
    positions: np.ndarray = field(repr=False)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.int64).copy()
        if pos.ndim != 1 or (len(pos) > 1 and np.any(np.diff(pos) <= 0)):
            raise SamplerError("positions must be strictly increasing")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def m(self) -> int:
        return len(self.positions)

    def rescaled(self) -> np.ndarray:
        return self.positions / self.n


_LOG_ZERO = -1.0e30  # finite stand-in for log 0; keeps 0*log(0) out of matmuls


def _safe_log(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.where(v > 0, np.log(np.maximum(v, 1e-300)), _LOG_ZERO)


def _step_log_weights(k: np.ndarray, ka: int, kb: int) -> tuple[np.ndarray, np.ndarray]:
    """Log-weights of all 2^m one-step moves from integer positions k.

    ka, kb are the walls n*a(t), n*b(t).  Factor layout per move e:
      prod_i (kb - 1 - k_i)^{e_i} (k_i - ka)^{1-e_i}
      * prod_{i<j} (k_j - k_i + e_j - e_i) / (k_j - k_i)
    All factors are nonnegative; vanishing ones (collisions, wall contact)
    carry _LOG_ZERO and drop out of the normalized distribution exactly.
    """
    m = len(k)
    if m > ENUMERATION_CAP:
        raise SamplerError(f"m={m} exceeds the enumeration cap {ENUMERATION_CAP}")
    E = ((np.arange(1 << m)[:, None] >> np.arange(m)[None, :]) & 1).astype(np.int8)

    log_jump = _safe_log(kb - 1 - k)
    log_stay = _safe_log(k - ka)
    logw = E @ log_jump + (1 - E) @ log_stay

    for i in range(m):
        d = k[i + 1 :] - k[i]
        if not len(d):
            continue
        logd = _safe_log(d)
        table = np.stack([_safe_log(d - 1) - logd, np.zeros(len(d)), _safe_log(d + 1) - logd])
        delta = E[:, i + 1 :] - E[:, i : i + 1]  # in {-1, 0, 1}
        logw += np.take_along_axis(table, (delta + 1).astype(np.int64), axis=0).sum(axis=1)
    return logw, E


def trapezoid_step(
    c: ParticleConfig, t, spec: StripSpec, rng: Rng
) -> ParticleConfig:
    """One exact draw from the explicit bridge kernel at time t (in [0,t_max))."""
    ka = int(spec.n * spec.a_of(t))
    kb = int(spec.n * spec.b_of(t))
    k = c.positions
    if k[0] < ka or k[-1] > kb - 1:
        raise SamplerError("configuration outside the strip at this time")
    logw, E = _step_log_weights(k, ka, kb)
    wmax = logw.max()
    if wmax < _LOG_ZERO / 2:
        raise AssertionError("all one-step weights vanished on legal input")
    p = np.exp(logw - wmax)
    p /= p.sum()
    idx = rng.generator().choice(len(p), p=p)
    return ParticleConfig(spec.n, k + E[idx].astype(np.int64))


def step_distribution(c: ParticleConfig, t, spec: StripSpec):
    """The full (move, probability) table of the kernel; used by tests."""
    ka = int(spec.n * spec.a_of(t))
    kb = int(spec.n * spec.b_of(t))
    logw, E = _step_log_weights(c.positions, ka, kb)
    w = np.exp(logw - logw.max())
    return E, w / w.sum()


def packed_config(spec: StripSpec, t) -> ParticleConfig:
    """m particles packed against the west wall at time t."""
    ka = int(spec.n * spec.a_of(t))
    return ParticleConfig(spec.n, np.arange(ka, ka + spec.m))


def spread_config(spec: StripSpec) -> ParticleConfig:
    """m particles evenly spread and centered in the initial row."""
    width = spec.width(0)
    gap = width // spec.m
    start = int(spec.n * spec.a_of(0)) + (width - gap * (spec.m - 1) - 1) // 2
    return ParticleConfig(spec.n, start + gap * np.arange(spec.m))


def glauber_chain_samples(
    dom: Domain,
    h: BoundaryHeight,
    rng: Rng,
    count: int,
    burn_in: int,
    thinning: int,
) -> list[HeightFunction]:
    """One long heat-bath chain: burn in, then record every ``thinning``-th
    sweep.  Emits an autocorrelation diagnostic of the total height."""
    state = envelope_pair(dom, h).lo
    gen = rng.generator()
    n_int = len(dom.interior_idx)
    H = state.values.copy()
    for _ in range(burn_in):
        _sweep_inplace(dom, H, gen.random(n_int))
    out = []
    totals = []
    for _ in range(count):
        for _ in range(thinning):
            _sweep_inplace(dom, H, gen.random(n_int))
        out.append(HeightFunction(dom, H.copy()))
        totals.append(int(H.sum()))
    if len(totals) > 3:
        t = np.asarray(totals, dtype=float)
        d = t - t.mean()
        var = float(d @ d)
        rho1 = float(d[:-1] @ d[1:]) / var if var > 0 else 0.0
        if rho1 > 0.5:
            import warnings

            warnings.warn(
                f"lag-1 autocorrelation {rho1:.2f} of the total height is high; "
                "consider a larger thinning interval",
                stacklevel=2,
            )
    return out


def ensemble(
    dom: Domain,
    h: BoundaryHeight,
    rng: Rng,
    count: int,
    method: str = "cftp",
    burn_in: int | None = None,
    thinning: int | None = None,
    chains: int = 1,
    threads: int = 1,
) -> list[HeightFunction]:
    """A seeded ensemble of uniform samples, by CFTP or thinned Glauber
    chains.  Chains draw from independent named streams, so the output is
    identical for any thread count."""
    if method == "cftp":
        def one(k):
            return cftp_sample(dom, h, rng.derive(f"chain:{k}"))

        jobs = list(range(count))
    elif method == "glauber":
        if burn_in is None:
            burn_in = 20 * dom.n_vertices
        if thinning is None:
            thinning = max(1, (dom.y_max - dom.y_min) * 2)
        per = -(-count // chains)

        def one(k):
            return glauber_chain_samples(
                dom, h, rng.derive(f"chain:{k}"), per, burn_in, thinning
            )

        jobs = list(range(chains))
    else:
        raise SamplerError(f"unknown sampling method {method!r}")

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(one, jobs))
    else:
        results = [one(k) for k in jobs]
    if method == "cftp":
        return results
    flat = [s for chunk in results for s in chunk]
    return flat[:count]


def trapezoid_trajectory(c0: ParticleConfig, spec: StripSpec, rng: Rng):
    """Run the kernel over t = 0 .. t_max; returns the m x (T+1) position matrix.

    The shrinking walls squeeze the particles so the final configuration is
    exactly the packed one (a(t_max), a(t_max)+1/n, ...); this is asserted.
    """
    from .tiling import WalkEnsemble

    T = spec.rows_t
    pos = np.empty((c0.m, T + 1), dtype=np.int64)
    pos[:, 0] = c0.positions
    c = c0
    for j in range(T):
        t = spec.t_max * j / T  # = j/n as a Fraction
        c = trapezoid_step(c, t, spec, rng.derive(f"step:{j}"))
        pos[:, j + 1] = c.positions
    ka_end = int(spec.n * spec.a_of(spec.t_max))
    assert np.array_equal(
        c.positions, np.arange(ka_end, ka_end + spec.m)
    ), "trajectory did not end tightly packed"
    return WalkEnsemble(pos)
