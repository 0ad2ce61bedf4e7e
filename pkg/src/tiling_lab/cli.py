"""Config-driven experiment harness.

Subcommands:
    sample          write tilings (JSON), walks (CSV) and SVG renders
    limit-shape     solve the entropy maximizer; write H* and arctic CSVs
    concentration   height-deviation experiment over the n-ladder
    edge-scaling    edge-fluctuation exponent over the n-ladder
    drift           one-step drift identity vs the contour prediction

Flags: --config PATH, --seed U64 (override), --out DIR (override),
--threads N (fallback: env TILING_LAB_THREADS).  Exit codes: 0 success,
2 config error, 3 runtime error.

The config is a flat ``key = value`` text file ('#' comments); unknown keys
are hard errors, and every random quantity derives from the single seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis, continuum, render, sampler, tiling
from .lattice import StripSpec, build_hexagon, build_strip
from .rng import Rng


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    domain: str = "hexagon"
    hexagon_a: int = 2
    hexagon_b: int = 2
    hexagon_c: int = 2
    strip_a0: Fraction = Fraction(0)
    strip_a_slope: int = 1
    strip_b0: Fraction = Fraction(1)
    strip_b_slope: int = 0
    strip_n: int = 16
    strip_m: int = 4
    method: str = "cftp"  # cftp | glauber | bridge
    burn_in: int = 0  # 0: sampler default
    thinning: int = 0  # 0: sampler default
    chains: int = 4
    seed: int = 1
    mesh_q: int = 96
    n_ladder: tuple = (16, 32, 64)
    samples: int = 200
    z_points: tuple = (complex(1.3, 0.4),)
    delta_knob: float = 0.1
    out_dir: str = "out"

    def __post_init__(self):
        if self.domain not in ("hexagon", "strip"):
            raise ConfigError(f"unknown domain {self.domain!r}")
        if self.method not in ("cftp", "glauber", "bridge"):
            raise ConfigError(f"unknown method {self.method!r}")
        if list(self.n_ladder) != sorted(set(self.n_ladder)):
            raise ConfigError("n_ladder must be strictly increasing")
        if self.samples < 1 or self.mesh_q < 4:
            raise ConfigError("samples and mesh_q must be positive")

    @property
    def strip_t_max(self) -> Fraction:
        # packed ending data: t_max = b0 - a0 - m/n
        return self.strip_b0 - self.strip_a0 - Fraction(self.strip_m, self.strip_n)


_PARSERS = {
    "domain": str,
    "method": str,
    "out_dir": str,
    "hexagon_a": int,
    "hexagon_b": int,
    "hexagon_c": int,
    "strip_a_slope": int,
    "strip_b_slope": int,
    "strip_n": int,
    "strip_m": int,
    "burn_in": int,
    "thinning": int,
    "chains": int,
    "seed": int,
    "mesh_q": int,
    "samples": int,
    "strip_a0": Fraction,
    "strip_b0": Fraction,
    "delta_knob": float,
    "n_ladder": lambda s: tuple(int(v) for v in s.split(",") if v.strip()),
    "z_points": lambda s: tuple(complex(v) for v in s.split(";") if v.strip()),
}


def parse_config(text: str) -> ExperimentConfig:
    kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in kwargs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            kwargs[key] = _PARSERS[key](val)
        except ConfigError:
            raise
        except Exception as e:
            raise ConfigError(f"line {lineno}: bad value for {key}: {e}") from e
    return ExperimentConfig(**kwargs)


def serialize_config(cfg: ExperimentConfig) -> str:
    out = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if f.name == "n_ladder":
            v = ",".join(str(x) for x in v)
        elif f.name == "z_points":
            v = ";".join(_fmt_complex(z) for z in v)
        out.append(f"{f.name} = {v}")
    return "\n".join(out) + "\n"


def _fmt_complex(z: complex) -> str:
    return f"{z.real:g}{z.imag:+g}j"


# --------------------------------------------------------------------------
# Shared plumbing
# --------------------------------------------------------------------------


def _build_domain(cfg: ExperimentConfig, n: int | None = None):
    if cfg.domain == "hexagon":
        if n is not None:
            return build_hexagon(n, n, n)
        return build_hexagon(cfg.hexagon_a, cfg.hexagon_b, cfg.hexagon_c)
    spec = _strip_spec(cfg, n)
    return build_strip(spec)


def _strip_spec(cfg: ExperimentConfig, n: int | None = None) -> StripSpec:
    scale = Fraction(n, cfg.strip_n) if n is not None else 1
    nn = n if n is not None else cfg.strip_n
    return StripSpec(
        cfg.strip_a0,
        cfg.strip_a_slope,
        cfg.strip_b0,
        cfg.strip_b_slope,
        cfg.strip_t_max,
        nn,
        int(cfg.strip_m * scale),
    )


_spread_config = sampler.spread_config


def _write(path: Path, text: str) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return hashlib.sha256(text.encode()).hexdigest()


def _hexagon_hstar(cfg: ExperimentConfig):
    region = continuum.hexagon_region(1, 1, 1, cfg.mesh_q)
    return continuum.maximize_entropy(region, tol=3e-6, max_sweeps=300)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_sample(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    rng = Rng(cfg.seed)
    hashes = {}
    timings = {}
    t0 = time.time()
    if cfg.method == "bridge":
        if cfg.domain != "strip" or cfg.strip_a_slope != 1 or cfg.strip_b_slope != 0:
            raise ConfigError("method=bridge needs a strip with slopes (1, 0)")
        spec = _strip_spec(cfg)
        c0 = _spread_config(spec)
        dom, h = build_strip(
            spec, south=_profile_from_config(spec, c0), north=None
        )
        for k in range(cfg.samples):
            w = sampler.trapezoid_trajectory(c0, spec, rng.derive(f"chain:{k}"))
            hf = tiling.height_from_walks(w, dom)
            hashes.update(_emit_sample(out, k, hf))
    else:
        dom, h = _build_domain(cfg)
        samples = sampler.ensemble(
            dom,
            h,
            rng,
            cfg.samples,
            method=cfg.method,
            burn_in=cfg.burn_in or None,
            thinning=cfg.thinning or None,
            chains=cfg.chains,
            threads=threads,
        )
        for k, hf in enumerate(samples):
            hashes.update(_emit_sample(out, k, hf))
    timings["sample_s"] = time.time() - t0
    return {"hashes": hashes, "timings": timings}


def _profile_from_config(spec: StripSpec, c: sampler.ParticleConfig) -> list[int]:
    lo, hi = spec.row_range(0)
    prof = [0]
    rises = set(int(v) for v in c.positions)
    for x in range(lo, hi):
        prof.append(prof[-1] + (1 if x in rises else 0))
    return prof


def _emit_sample(out: Path, k: int, hf) -> dict:
    t = tiling.tiling_from_height(hf)
    w = tiling.walks_from_height(hf)
    return {
        f"tiling_{k:04d}.json": _write(out / f"tiling_{k:04d}.json", tiling.tiling_to_json(t)),
        f"walks_{k:04d}.csv": _write(out / f"walks_{k:04d}.csv", w.to_csv()),
        f"tiling_{k:04d}.svg": _write(out / f"tiling_{k:04d}.svg", render.render_svg(t)),
    }


def cmd_limit_shape(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    if cfg.domain != "hexagon":
        raise ConfigError("limit-shape currently solves hexagon domains")
    a, b, c = cfg.hexagon_a, cfg.hexagon_b, cfg.hexagon_c
    res = continuum.maximize_entropy(
        continuum.hexagon_region(a, b, c, cfg.mesh_q), tol=3e-6, max_sweeps=300
    )
    res_half = continuum.maximize_entropy(
        continuum.hexagon_region(a, b, c, cfg.mesh_q // 2), tol=3e-6, max_sweeps=300
    )
    hashes = {"hstar.csv": _write(out / "hstar.csv", res.field.to_csv())}

    s, t, act = res.field.cell_slopes()
    liquid = act & (np.minimum.reduce([1 - s, -t, s + t]) > 1e-6)
    lines = ["t,x_left,x_right"]
    for it in range(liquid.shape[1]):
        cols = np.nonzero(liquid[:, it])[0]
        if not len(cols):
            continue
        tv = res.field.t0 + (it + 0.5) * res.field.ht
        xl = res.field.x0 + (cols[0] + 0.5) * res.field.hx
        xr = res.field.x0 + (cols[-1] + 0.5) * res.field.hx
        lines.append(f"{tv:.8f},{xl:.8f},{xr:.8f}")
    hashes["arctic.csv"] = _write(out / "arctic.csv", "\n".join(lines) + "\n")
    return {
        "hashes": hashes,
        "entropy": res.entropy,
        "entropy_half_mesh": res_half.entropy,
        "entropy_mesh_change": abs(res.entropy - res_half.entropy),
        "residual": res.residual,
    }


def _ladder_ensembles(cfg: ExperimentConfig, rng: Rng, threads: int):
    out = {}
    for n in cfg.n_ladder:
        dom, h = build_hexagon(n, n, n)
        out[n] = sampler.ensemble(
            dom,
            h,
            rng.derive(f"n:{n}"),
            cfg.samples,
            method="glauber",
            burn_in=cfg.burn_in or None,
            thinning=cfg.thinning or None,
            chains=cfg.chains,
            threads=threads,
        )
    return out


def cmd_concentration(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    rng = Rng(cfg.seed)
    hstar = _hexagon_hstar(cfg)
    ensembles = _ladder_ensembles(cfg, rng, threads)
    rows = ["n,interior_sup_median,sup_deviation,frozen_mismatches"]
    table = {"sup": []}
    for n, samples in ensembles.items():
        rep = analysis.height_deviation(samples, hstar.field, n, frozen_margin=0.18)
        dom = samples[0].domain
        xs = dom.vertices[:, 0] / n
        ts = dom.vertices[:, 1] / n
        interior = analysis.interior_liquid_vertices(hstar.field, xs, ts, 0.15)
        per_sample = [
            float(np.max(np.abs(s.values[interior] - n * np.real(hstar.field.interp(xs[interior], ts[interior])))))
            for s in samples
        ]
        med = float(np.median(per_sample))
        table["sup"].append(med)
        rows.append(f"{n},{med:.6f},{rep.sup_deviation:.6f},{rep.frozen_mismatch_count}")
    fit = analysis.fit_exponent(list(ensembles), table)
    hashes = {"concentration.csv": _write(out / "concentration.csv", "\n".join(rows) + "\n")}
    return {
        "hashes": hashes,
        "exponent": fit.slope,
        "exponent_ci": fit.ci_halfwidth,
        "points": fit.points,
    }


def cmd_edge_scaling(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    rng = Rng(cfg.seed)
    ensembles = _ladder_ensembles(cfg, rng, threads)
    fit = analysis.edge_fluctuation_fit(ensembles)
    rows = ["n,row,std"] + [f"{n},{r},{s:.6f}" for n, r, s in fit.points]
    hashes = {"edge_scaling.csv": _write(out / "edge_scaling.csv", "\n".join(rows) + "\n")}
    return {"hashes": hashes, "exponent": fit.slope, "exponent_ci": fit.ci_halfwidth}


def cmd_drift(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    rng = Rng(cfg.seed)
    spec = _strip_spec(cfg)
    c0 = _spread_config(spec)
    checks = []
    for i, z in enumerate(cfg.z_points):
        chk = analysis.drift_check(
            spec, c0, 0.0, z, cfg.samples, rng.derive(f"z:{i}")
        )
        checks.append(
            {
                "z": _fmt_complex(chk.z),
                "mc_mean": _fmt_complex(chk.mc_mean),
                "mc_stderr": chk.mc_stderr,
                "contour": _fmt_complex(chk.contour_value),
                "abs_error": abs(chk.mc_mean - chk.contour_value),
                "budget": max(3 * chk.mc_stderr, 5.0 / spec.n),
            }
        )
    return {"checks": checks, "pass": all(c["abs_error"] <= c["budget"] for c in checks)}


COMMANDS = {
    "sample": cmd_sample,
    "limit-shape": cmd_limit_shape,
    "concentration": cmd_concentration,
    "edge-scaling": cmd_edge_scaling,
    "drift": cmd_drift,
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="tiling-lab", description=__doc__)
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default=None)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args(argv)

    try:
        cfg = parse_config(Path(args.config).read_text())
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out_dir = args.out
    except (ConfigError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("TILING_LAB_THREADS", "1"))

    out = Path(cfg.out_dir)
    t0 = time.time()
    try:
        result = COMMANDS[args.command](cfg, out, threads)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # runtime failure
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3

    manifest = {
        "command": args.command,
        "seed": cfg.seed,
        "config": serialize_config(cfg),
        "result": _jsonable(result),
    }
    primary = json.dumps(manifest, sort_keys=True)
    manifest["wall_time_s"] = time.time() - t0  # excluded from the hash
    manifest["primary_sha256"] = hashlib.sha256(primary.encode()).hexdigest()
    _write(out / f"{args.command}_manifest.json", json.dumps(manifest, indent=2, sort_keys=True))
    print(json.dumps(_jsonable(result), sort_keys=True, default=str))
    return 0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return _fmt_complex(obj)
    return obj


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
