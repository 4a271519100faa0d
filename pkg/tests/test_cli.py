from __future__ import annotations

import json
import subprocess
import sys

import pytest

from folner.cli import config_hash, main
from folner.experiments import builtin_config


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_list_includes_catalog_ids(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in ("be_rate_ma1_z1", "sbm_triangle_r2", "entropy_bernoulli"):
        assert name in out


def test_list_json(capsys):
    assert main(["list", "--json"]) == 0
    entries = json.loads(capsys.readouterr().out)
    ids = {e["id"] for e in entries}
    assert {"be_rate_ma1_z1", "sbm_triangle_r2", "entropy_bernoulli"} <= ids
    assert all(e["anchor"] for e in entries)


def test_unknown_flag_exits_64():
    with pytest.raises(SystemExit) as exc:
        main(["list", "--bogus"])
    assert exc.value.code == 64


def test_module_entry_point_usage_error():
    proc = subprocess.run([sys.executable, "-m", "folner", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode == 64


def test_empty_grid_is_config_invalid(tmp_path, capsys):
    cfg = builtin_config("clt_ma1_z1")
    cfg["n_grid"] = []
    assert main(["run", _write(tmp_path, cfg), "--out", str(tmp_path / "out")]) == 64
    assert "n_grid" in capsys.readouterr().err


def test_growth_condition_is_config_invalid(tmp_path, capsys):
    cfg = builtin_config("randomized_wor_ma1")
    cfg["k_n"] = 2 * 200 + 1
    assert main(["run", _write(tmp_path, cfg), "--out", str(tmp_path / "out")]) == 64
    assert "k_n" in capsys.readouterr().err


def test_missing_seed_is_config_invalid(tmp_path, capsys):
    cfg = builtin_config("clt_ma1_z1")
    del cfg["seeds"]
    assert main(["run", _write(tmp_path, cfg), "--out", str(tmp_path / "out")]) == 64
    assert "seeds" in capsys.readouterr().err


def test_clt_config_passes(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "clt_ma1_z1", "--out", str(out)]) == 0
    report = json.loads((out / "clt_ma1_z1" / "report.json").read_text())
    assert report["status"] == "PASS"
    manifest = json.loads((out / "clt_ma1_z1" / "manifest.json").read_text())
    assert manifest["files"] == ["report.json", "values.csv", "manifest.json"]
    assert manifest["config_hash"] == config_hash(builtin_config("clt_ma1_z1"))


def test_skip_only_exits_2(tmp_path):
    assert main(["run", "entropy_uniform", "--out", str(tmp_path)]) == 2


def test_csv_byte_identical_across_runs_and_workers(tmp_path):
    cfg = builtin_config("randomized_poisson_ma1")
    cfg["R"] = 600
    path = _write(tmp_path, cfg)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", path, "--out", str(a), "--workers", "1"]) in (0, 1)
    assert main(["run", path, "--out", str(b), "--workers", "4"]) in (0, 1)
    first = (a / cfg["experiment"] / "values.csv").read_bytes()
    assert first == (b / cfg["experiment"] / "values.csv").read_bytes()
    main(["run", path, "--out", str(a), "--workers", "3"])
    assert (a / cfg["experiment"] / "values.csv").read_bytes() == first
    assert first.splitlines()[0] == b"replicate,n,scheme,value,count,seed"
    assert len(first.splitlines()) == 601


def test_config_hash_ignores_key_order():
    cfg = builtin_config("clt_ma1_z2")
    shuffled = dict(reversed(list(cfg.items())))
    shuffled["model"] = dict(reversed(list(cfg["model"].items())))
    assert config_hash(cfg) == config_hash(shuffled)
    changed = dict(cfg, R=cfg["R"] + 1)
    assert config_hash(changed) != config_hash(cfg)


def test_reproducibility_mismatch_is_failure(tmp_path, capsys):
    cfg = builtin_config("clt_iid_gauss")
    path = _write(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["run", path, "--out", str(out)]) == 0
    manifest_path = out / cfg["experiment"] / "manifest.json"
    manifest = json.loads(manifest_path.read_text())
    manifest["values_sha256"] = "0" * 64
    manifest_path.write_text(json.dumps(manifest))
    capsys.readouterr()
    assert main(["run", path, "--out", str(out), "--json"]) == 1
    summary = json.loads(capsys.readouterr().out)
    assert summary[0]["status"] == "FAIL"
