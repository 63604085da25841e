"""Config parsing, run artifacts, and command line behavior."""

import contextlib
import io
import json
import os
import re

import numpy as np
import pytest

from carnot_heat import cli
from carnot_heat.algebra import build_structure
from carnot_heat.config import (ExperimentConfig, RunManifest, format_sig,
                                resolve_output_dir, write_csv)
from carnot_heat.errors import ConfigError
from carnot_heat.grid import load_grid
from carnot_heat.kernel import heisenberg_center_slice, sample_kernel
from carnot_heat.schrodinger import free_evolve


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
    return code, out.getvalue(), err.getvalue()


def only_run_dir(base, command):
    names = [d for d in os.listdir(base) if d.startswith(command + "-")]
    assert len(names) == 1
    name = names[0]
    suffix = name[len(command) + 1:]
    assert re.fullmatch(r"[0-9a-f]{10}", suffix)
    return os.path.join(base, name)


# ---------------------------------------------------------------- config


def test_config_typed_parsing():
    text = """
# comment only line
n = 1
m = 3
t = 0.5          # trailing comment
counts = 9, 9, 17
spacings = 0.4,0.4,0.08
suite = geometry
eta = 1.0,0.0
seed = 7
"""
    cfg = ExperimentConfig.from_text(text)
    assert cfg.values["n"] == 1 and isinstance(cfg.values["n"], int)
    assert cfg.values["m"] == 3
    assert cfg.values["t"] == 0.5
    assert cfg.values["counts"] == (9, 9, 17)
    assert cfg.values["spacings"] == (0.4, 0.4, 0.08)
    assert cfg.values["eta"] == (1.0, 0.0)
    assert cfg.values["suite"] == "geometry"
    assert cfg.get("absent", 5) == 5
    assert cfg.require_seed() == 7


def test_config_rejects_malformed_lines():
    with pytest.raises(ConfigError, match="line 2: expected key = value"):
        ExperimentConfig.from_text("t = 0.5\njust words\n")
    with pytest.raises(ConfigError, match="line 1: unknown key 'bogus'"):
        ExperimentConfig.from_text("bogus = 1\n")
    with pytest.raises(ConfigError, match="line 3: tolerance must be"):
        ExperimentConfig.from_text("n = 1\nm = 1\ntolerance = -1e-3\n")
    with pytest.raises(ConfigError, match="must be positive"):
        ExperimentConfig.from_text("rel_tol = 0\n")
    with pytest.raises(ConfigError, match="bad value for n"):
        ExperimentConfig.from_text("n = abc\n")
    with pytest.raises(ConfigError, match="seed is mandatory"):
        ExperimentConfig.from_text("n = 1\n").require_seed()


def test_config_hash_canonical():
    a = ExperimentConfig.from_text("n = 1\nt = 0.5\n")
    b = ExperimentConfig.from_text("# reordered with noise\nt=0.5\n\nn =  1\n")
    c = ExperimentConfig.from_text("n = 1\nt = 0.25\n")
    assert re.fullmatch(r"[0-9a-f]{64}", a.hash)
    assert a.hash == b.hash
    assert a.hash != c.hash


# ------------------------------------------------------- csv and manifest


def test_write_csv_bytes(tmp_path):
    path = tmp_path / "out.csv"
    write_csv(path, ["a", "b", "flag", "name"],
              [(1.0 / 3.0, 2, True, "row")])
    raw = path.read_bytes()
    assert raw == (b"a,b,flag,name\r\n"
                   b"3.3333333333333331e-01,2,True,row\r\n")
    assert format_sig(np.pi) == "3.1415926535897931e+00"


def test_manifest_schema(tmp_path):
    man = RunManifest("deadbeef")
    man.start("work")
    man.stop("work")
    man.add_file("/somewhere/out.csv")
    path = tmp_path / "manifest.json"
    man.write(path)
    text = path.read_text()
    assert text.endswith("\n")
    payload = json.loads(text)
    assert set(payload) == {"config_hash", "version", "timings", "files"}
    assert payload["config_hash"] == "deadbeef"
    assert payload["version"] == "1.0.0"
    assert payload["files"] == ["/somewhere/out.csv"]
    assert payload["timings"]["work"] >= 0.0


def test_resolve_output_dir_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("CARNOT_HEAT_OUT", str(tmp_path))
    assert resolve_output_dir("flagged") == str(tmp_path)
    monkeypatch.delenv("CARNOT_HEAT_OUT")
    assert resolve_output_dir("flagged") == "flagged"
    assert resolve_output_dir(None) == "carnot-heat-runs"


# ----------------------------------------------------------------- cli


def test_cli_distance_point_artifacts(tmp_path, monkeypatch):
    monkeypatch.setenv("CARNOT_HEAT_OUT", str(tmp_path))
    code, out, err = run_cli(["distance", "--x", "3,0", "--z", "0"])
    assert code == 0 and err == ""
    run_dir = only_run_dir(tmp_path, "distance")
    csv_path = os.path.join(run_dir, "distance.csv")
    assert out == ("wrote %s\nwrote %s\n"
                   % (csv_path, os.path.join(run_dir, "manifest.json")))
    raw = open(csv_path, "rb").read()
    lines = raw.split(b"\r\n")
    assert lines[0] == b"x_norm,z_norm,theta,d,ratio"
    fields = lines[1].decode().split(",")
    # pure horizontal point: d equals |x|, quadratic ratio is 1
    assert float(fields[0]) == 3.0
    assert float(fields[3]) == pytest.approx(3.0, rel=1e-12)
    assert float(fields[4]) == pytest.approx(1.0, rel=1e-12)
    payload = json.load(open(os.path.join(run_dir, "manifest.json")))
    assert payload["files"] == [csv_path]
    assert run_dir.endswith(payload["config_hash"][:10])


def test_cli_distance_center_point(tmp_path, monkeypatch):
    monkeypatch.setenv("CARNOT_HEAT_OUT", str(tmp_path))
    code, out, _ = run_cli(["distance", "--x", "0,0", "--z", "1"])
    assert code == 0
    run_dir = only_run_dir(tmp_path, "distance")
    row = open(os.path.join(run_dir, "distance.csv")).readlines()[1]
    fields = row.split(",")
    # pure center point: d = sqrt(4 pi |z|), ratio hits pi
    assert float(fields[3]) == pytest.approx(np.sqrt(4.0 * np.pi), rel=1e-12)
    assert float(fields[4]) == pytest.approx(np.pi, rel=1e-10)


def test_cli_distance_stdout_mode(monkeypatch):
    monkeypatch.delenv("CARNOT_HEAT_OUT", raising=False)
    code, out, _ = run_cli(["distance", "--x", "1,0", "--z", "0.25"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "x_norm,z_norm,theta,d,ratio"
    assert len(lines) == 2 and lines[1].count(",") == 4


def test_cli_distance_sampled_deterministic(tmp_path, monkeypatch):
    monkeypatch.setenv("CARNOT_HEAT_OUT", str(tmp_path))
    code, _, _ = run_cli(["distance", "--samples", "40", "--seed", "3"])
    assert code == 0
    run_dir = only_run_dir(tmp_path, "distance")
    csv_path = os.path.join(run_dir, "distance.csv")
    first = open(csv_path, "rb").read()
    assert first.count(b"\r\n") == 41
    code, _, _ = run_cli(["distance", "--samples", "40", "--seed", "3"])
    assert code == 0
    assert open(csv_path, "rb").read() == first
    ratios = [float(line.split(b",")[4]) for line in
              first.split(b"\r\n")[1:41]]
    assert min(ratios) >= np.pi / 4.0 - 1e-12
    assert max(ratios) <= np.pi + 1e-12


def test_cli_distance_sweep_endpoints(tmp_path, monkeypatch):
    monkeypatch.setenv("CARNOT_HEAT_OUT", str(tmp_path))
    code, _, _ = run_cli(["distance", "--sweep-theta", "17"])
    assert code == 0
    run_dir = only_run_dir(tmp_path, "distance")
    with open(os.path.join(run_dir, "distance.csv"), newline="") as fh:
        rows = fh.read().split("\r\n")
    first = rows[1].split(",")
    last = rows[17].split(",")
    assert float(first[1]) == 0.0
    assert float(first[4]) == pytest.approx(1.0, rel=1e-12)
    assert float(last[4]) == pytest.approx(np.pi, rel=1e-5)


def test_cli_kernel_point_value(monkeypatch):
    monkeypatch.delenv("CARNOT_HEAT_OUT", raising=False)
    code, out, _ = run_cli(["kernel", "--t", "1", "--at", "0,0"])
    assert code == 0
    assert float(out.strip()) == pytest.approx(1.0 / (32.0 * np.pi),
                                               rel=1e-12)


def test_cli_kernel_grid_roundtrip(tmp_path, monkeypatch):
    monkeypatch.setenv("CARNOT_HEAT_OUT", str(tmp_path))
    code, out, _ = run_cli(["kernel", "--t", "0.5", "--counts", "9,9,9",
                            "--spacings", "0.5,0.5,0.25"])
    assert code == 0
    run_dir = only_run_dir(tmp_path, "kernel")
    grid_path = os.path.join(run_dir, "kernel.htgf")
    assert "wrote %s" % grid_path in out
    f = load_grid(grid_path)
    assert f.counts == (9, 9, 9)
    assert f.spacings == (0.5, 0.5, 0.25)
    peak = float(np.real(f.values[4, 4, 4]))
    want = 1.0 / (32.0 * np.pi * 0.25)
    assert peak == pytest.approx(want, rel=1e-10)
    payload = json.load(open(os.path.join(run_dir, "manifest.json")))
    assert grid_path in payload["files"]


def test_cli_evolve_from_config(tmp_path, monkeypatch):
    monkeypatch.setenv("CARNOT_HEAT_OUT", str(tmp_path))
    cfg_path = tmp_path / "evolve.cfg"
    cfg_path.write_text(
        "n = 1\nm = 1\nbase_time = 0.4\ncounts = 15,15,9\n"
        "spacings = 0.4,0.4,0.2\nt = 0.05\neps = 0.6\n")
    code, out, err = run_cli(["evolve", "--config", str(cfg_path)])
    assert code == 0, err
    run_dir = only_run_dir(tmp_path, "evolve")
    got = load_grid(os.path.join(run_dir, "evolved.htgf"))
    s = build_structure(1, 1)
    u0 = sample_kernel(s, 0.4, (15, 15, 9), (0.4, 0.4, 0.2))
    want = free_evolve(u0, 0.05, eps=0.6)
    assert got.counts == want.counts
    assert np.allclose(got.values, want.values, rtol=0, atol=1e-13)


def test_cli_schoenberg_fit_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("CARNOT_HEAT_OUT", str(tmp_path))
    code, out, _ = run_cli(["schoenberg", "fit", "--x-norm", "0",
                            "--n", "1"])
    assert code == 0
    head = out.splitlines()[0]
    match = re.fullmatch(
        r"fit x_norm=0 n=1: residual=(\S+) kkt=(\S+) atoms=(\d+)", head)
    assert match
    assert float(match.group(1)) <= 1e-12
    assert float(match.group(2)) <= 1e-10
    assert int(match.group(3)) >= 10
    run_dir = only_run_dir(tmp_path, "schoenberg")
    cache = [f for f in os.listdir(run_dir) if f.startswith("measure-")]
    assert len(cache) == 1
    assert re.fullmatch(r"measure-[0-9a-f]{16}\.csv", cache[0])
    csv_path = os.path.join(run_dir, cache[0])
    raw = open(csv_path, "rb").read()
    assert raw.startswith(b"tau,weight,x_norm,n,m,residual\r\n")
    code, _, _ = run_cli(["schoenberg", "fit", "--x-norm", "0", "--n", "1"])
    assert code == 0
    assert open(csv_path, "rb").read() == raw


def test_cli_schoenberg_reconstruct(monkeypatch):
    monkeypatch.delenv("CARNOT_HEAT_OUT", raising=False)
    code, out, _ = run_cli(["schoenberg", "reconstruct", "--x-norm", "0",
                            "--n", "1", "--z", "0,1"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "z,value"
    z0 = [float(v) for v in lines[1].split(",")]
    z1 = [float(v) for v in lines[2].split(",")]
    assert z0[1] == pytest.approx(1.0 / (32.0 * np.pi), rel=1e-10)
    assert z1[1] == pytest.approx(heisenberg_center_slice(1.0, 1.0),
                                  rel=1e-8)


def test_cli_schoenberg_counterexample(monkeypatch):
    monkeypatch.delenv("CARNOT_HEAT_OUT", raising=False)
    code, out, _ = run_cli(["schoenberg", "counterexample",
                            "--cutoff", "1.0"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "z,slice,kernel,ratio"
    ratios = [float(line.split(",")[3]) for line in lines[1:]]
    assert all(r > 0 for r in ratios)
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert ratios[0] < 1.0


def test_cli_sharpness_artifacts(tmp_path, monkeypatch):
    monkeypatch.setenv("CARNOT_HEAT_OUT", str(tmp_path))
    code, _, err = run_cli(["sharpness", "--eps", "0.3", "--T", "1.0"])
    assert code == 0, err
    run_dir = only_run_dir(tmp_path, "sharpness")
    with open(os.path.join(run_dir, "sharpness.csv"), newline="") as fh:
        rows = fh.read().split("\r\n")
    assert rows[0] == "eps,T,a2,b2,product,ratio,fit_rms"
    fields = [float(v) for v in rows[1].split(",")]
    assert fields[0] == pytest.approx(0.3)
    assert fields[4] == pytest.approx(fields[2] * fields[3], rel=1e-12)
    assert fields[5] > 1.0


def test_cli_verify_geometry_suite(monkeypatch):
    monkeypatch.delenv("CARNOT_HEAT_OUT", raising=False)
    code, out, _ = run_cli(["verify", "--suite", "geometry"])
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 3
    assert all(" PASS " in line for line in lines)
    assert lines[0].startswith("distance_bounds PASS min=")


def test_cli_usage_errors_exit_two(monkeypatch):
    monkeypatch.delenv("CARNOT_HEAT_OUT", raising=False)
    code, _, err = run_cli(["kernel"])
    assert code == 2
    assert "usage error: --t is required" in err
    code, _, err = run_cli(["distance", "--samples", "10"])
    assert code == 2
    assert "--seed is mandatory" in err
    code, _, err = run_cli(["evolve", "--t", "0.05"])
    assert code == 2
    code, _, err = run_cli(["distance", "--x", "1,0,0", "--z", "1"])
    assert code == 2
    assert "even number" in err
    code, _, err = run_cli(["nonsense"])
    assert code == 2
    code, _, err = run_cli(["verify", "--suite", "nope"])
    assert code == 2


def test_cli_domain_errors_exit_one(tmp_path, monkeypatch):
    monkeypatch.delenv("CARNOT_HEAT_OUT", raising=False)
    code, _, err = run_cli(["kernel", "--t", "1", "--t-imag", "2",
                            "--at", "0,5"])
    assert code == 1
    assert "error type=QuadratureError" in err
    bad = tmp_path / "bad.cfg"
    bad.write_text("n = 1\nbogus_key = 3\n")
    code, _, err = run_cli(["distance", "--config", str(bad)])
    assert code == 1
    assert "error type=ConfigError" in err
    assert "unknown key 'bogus_key'" in err
