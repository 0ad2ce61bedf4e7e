"""CLI config handling, command outputs, SVG rendering, RNG streams."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from tiling_lab.cli import (
    ConfigError,
    ExperimentConfig,
    cmd_drift,
    cmd_sample,
    main,
    parse_config,
    serialize_config,
)
from tiling_lab.lattice import build_hexagon
from tiling_lab.render import render_svg
from tiling_lab.rng import Rng
from tiling_lab.tiling import Tiling, enumerate_tilings, tiling_from_height


def test_rng_streams():
    a = Rng(42).derive("chain:0").fresh_generator().random(5)
    b = Rng(42).derive("chain:0").fresh_generator().random(5)
    c = Rng(42).derive("chain:1").fresh_generator().random(5)
    d = Rng(43).derive("chain:0").fresh_generator().random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
    # deriving does not perturb the parent
    r = Rng(7)
    x1 = r.derive("a").fresh_generator().random()
    _ = r.derive("b")
    x2 = r.derive("a").fresh_generator().random()
    assert x1 == x2


def test_render_svg_golden_and_empty():
    dom, h = build_hexagon(1, 1, 1)
    _, it = enumerate_tilings(dom, h)
    exts = list(it)
    svgs = [render_svg(tiling_from_height(e)) for e in exts]
    for s in svgs:
        assert s.count("<polygon") == 3  # 3 rhombi per unit-hexagon tiling
        assert s.startswith("<?xml")
    # deterministic byte-for-byte
    assert render_svg(tiling_from_height(exts[0])) == svgs[0]
    empty = render_svg(Tiling(_EmptyDomain(), ()))
    assert "<svg" in empty and "<polygon" not in empty


class _EmptyDomain:
    faces = ()


def test_config_roundtrip_and_unknown_key():
    cfg = ExperimentConfig(seed=9, n_ladder=(8, 16), z_points=(1.5 + 0.5j, 2 - 1j))
    text = serialize_config(cfg)
    cfg2 = parse_config(text)
    assert cfg2 == cfg
    assert serialize_config(cfg2) == text
    with pytest.raises(ConfigError):
        parse_config("bogus_key = 3\n")
    with pytest.raises(ConfigError):
        parse_config("seed = 1\nseed = 2\n")
    with pytest.raises(ConfigError):
        parse_config("n_ladder = 32,16\n")


def test_cmd_sample_deterministic(tmp_path):
    cfg = parse_config(
        "domain = hexagon\nhexagon_a = 2\nhexagon_b = 2\nhexagon_c = 2\n"
        "method = cftp\nsamples = 5\nseed = 7\n"
    )
    r1 = cmd_sample(cfg, tmp_path / "a", threads=1)
    r2 = cmd_sample(cfg, tmp_path / "b", threads=1)
    assert r1["hashes"] == r2["hashes"]
    assert (tmp_path / "a" / "tiling_0000.json").exists()
    assert (tmp_path / "a" / "walks_0000.csv").read_text().startswith("i,t,x")
    assert (tmp_path / "a" / "tiling_0000.svg").read_text().count("<polygon") > 0


def test_cmd_sample_bridge_method(tmp_path):
    cfg = parse_config(
        "domain = strip\nstrip_n = 8\nstrip_m = 2\nmethod = bridge\n"
        "samples = 3\nseed = 5\n"
    )
    out = cmd_sample(cfg, tmp_path, threads=1)
    assert len(out["hashes"]) == 9


def test_cmd_sample_bridge_rejects_bad_domain(tmp_path):
    cfg = parse_config("domain = hexagon\nmethod = bridge\nsamples = 1\n")
    with pytest.raises(ConfigError):
        cmd_sample(cfg, tmp_path, threads=1)


def test_cmd_drift_runs(tmp_path):
    cfg = parse_config(
        "domain = strip\nstrip_n = 16\nstrip_m = 4\nsamples = 20000\nseed = 3\n"
        "z_points = 1.4+0.5j\n"
    )
    out = cmd_drift(cfg, tmp_path, threads=1)
    assert out["pass"] is True


def test_main_exit_codes(tmp_path):
    cfgfile = tmp_path / "c.cfg"
    cfgfile.write_text("domain = hexagon\nhexagon_a = 2\nsamples = 2\nmethod = cftp\n")
    code = main(["sample", "--config", str(cfgfile), "--out", str(tmp_path / "o")])
    assert code == 0
    assert (tmp_path / "o" / "sample_manifest.json").exists()
    man = json.loads((tmp_path / "o" / "sample_manifest.json").read_text())
    assert "primary_sha256" in man and "wall_time_s" in man

    bad = tmp_path / "bad.cfg"
    bad.write_text("no_such_key = 1\n")
    assert main(["sample", "--config", str(bad)]) == 2
    assert main(["sample", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_console_entry_point(tmp_path):
    cfgfile = tmp_path / "c.cfg"
    cfgfile.write_text("domain = hexagon\nsamples = 1\nmethod = cftp\n")
    proc = subprocess.run(
        [sys.executable, "-m", "tiling_lab.cli", "sample", "--config", str(cfgfile),
         "--out", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
