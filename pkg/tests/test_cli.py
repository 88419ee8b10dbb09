import json

import pytest

from cdimlab import cli
from cdimlab.manifest import file_sha256
from cdimlab.modulus import ModulusNotConverged

SEG = ["--kind", "segment", "--spacing", "1e-3"]


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = cli.main([argv[0], *argv[1:], "-o", str(out)])
    return code, out


def load(out, name):
    return json.loads((out / name).read_text())


def test_gen_writes_cloud_and_manifest(tmp_path):
    code, out = run(tmp_path, "gen", *SEG)
    assert code == 0
    man = load(out, "manifest.json")
    assert man["status"] == "ok" and set(man["artifacts"]) == {"cloud.csv", "cloud.json", "cloud.svg"}
    for name, digest in man["artifacts"].items():
        assert file_sha256(out / name) == digest
    assert load(out, "cloud.json")["manifest_hash"] == man["manifest_hash"]
    assert load(out, "cloud.json")["n_points"] == 1001


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"command": "probe", "shape": {"kind": "cantor", "spacing": 1e-4,
                                                             "params": {"level": 4}},
                               "params": {"n_pairs": 30}}))
    code, out = run(tmp_path, "probe", "disconnect", "--config", str(cfg), "--set", "eps=0.2")
    assert code == 0
    probe = load(out, "probe.json")
    assert probe["params"] == {"eps": 0.2, "n_pairs": 30}
    assert probe["n_checked"] + probe["n_below_fidelity"] <= 30
    assert load(out, "manifest.json")["config"]["shape"]["params"] == {"level": 4}


@pytest.mark.parametrize("argv", [
    ["modulus", *SEG, "--set", "lam=2"],
    ["modulus", *SEG, "--set", "a=4", "--set", "certificate=true", "--set", "k=2"],
    ["modulus", *SEG, "--set", "bogus=1"],
    ["qdim", *SEG, "--set", "p_grid=[]"],
    ["gen", "--kind", "hexagon", "--spacing", "0.1"],
    ["gen", "--kind", "segment"],
])
def test_validation_errors_exit_2(tmp_path, argv):
    code, out = run(tmp_path, *argv)
    assert code == cli.EXIT_VALIDATION
    assert load(out, "error.json")["exit_code"] == 2


def test_fidelity_violation_exits_2_with_manifest(tmp_path):
    code, out = run(tmp_path, "modulus", *SEG, "--set", "a=4", "--set", "k=4", "--set", "lam=2",
                    "--heuristic-ack")
    assert code == 2
    assert "fidelity" in load(out, "error.json")["message"]
    assert load(out, "manifest.json")["status"] == "error"


def test_modulus_run(tmp_path):
    code, out = run(tmp_path, "modulus", *SEG, "--set", "a=4", "--set", "lam=2", "--set", "k=2",
                    "--set", "write_edges=true", "--set", "certificate=true", "--heuristic-ack")
    assert code == 0
    doc = load(out, "modulus.json")
    assert doc["heuristic"] and not doc["empty"]
    vals = [r["value"] for r in doc["results"]]
    assert vals == sorted(vals, reverse=True)
    assert all(r["certificate"]["admissible"] for r in doc["results"])
    assert (out / "edges.csv").read_text().startswith("u,v\n")


def test_not_converged_exits_3(tmp_path, monkeypatch):
    def stuck(*a, **k):
        raise ModulusNotConverged("round cap", 0.5, 0.75, 7)

    monkeypatch.setattr(cli, "modulus_p", stuck)
    code, out = run(tmp_path, "modulus", *SEG, "--set", "a=4", "--set", "lam=2", "--set", "k=2",
                    "--heuristic-ack")
    assert code == cli.EXIT_NOT_CONVERGED
    err = load(out, "error.json")
    assert (err["lower"], err["upper"], err["iterations"]) == (0.5, 0.75, 7)
    assert "modulus.json" in load(out, "manifest.json")["artifacts"]


def test_uws_run(tmp_path):
    code, out = run(tmp_path, "uws", "--kind", "circle", "--spacing", "2e-4", "--set", "r_grid=[0.2]",
                    "--set", "eps_grid=[0.05]", "--set", "n_centers=2")
    assert code == 0
    rep = load(out, "uws_report.json")
    assert rep["empirical_constant"] == 2 and rep["n_queries"] == 2
    assert (out / "uws_query_001.svg").exists()


def test_qdim_run(tmp_path, monkeypatch):
    monkeypatch.setenv("CDIMLAB_THREADS", "1")
    code, out = run(tmp_path, "qdim", "--kind", "cantor", "--spacing", "1e-4", "--shape-param", "level=5",
                    "--set", "k_grid=[2,3,4]", "--set", "m_grid=[1]", "--set", "p_grid=[1,2]")
    assert code == 0
    est = load(out, "estimate.json")
    # the k = 4 families are empty, so every row contains a zero and decays
    assert est["QN_bracket"] == [0.0, 1.0]
    assert (out / "table.csv").read_text().startswith("p,k,value,argmax_m,argmax_x_index\n")
    assert (out / "chart.svg").exists()


def test_bad_thread_count(tmp_path, monkeypatch):
    monkeypatch.setenv("CDIMLAB_THREADS", "zero")
    code, _ = run(tmp_path, "qdim", "--kind", "cantor", "--spacing", "1e-4", "--shape-param", "level=5",
                  "--set", "k_grid=[2,3,4]", "--set", "m_grid=[1]")
    assert code == 2


def test_tangent_run_is_deterministic(tmp_path):
    argv = ["tangent", "--kind", "circle", "--spacing", "1e-4", "--set", "n_centers=3",
            "--set", "lam_grid=[0.1,0.05]", "--set", "export_windows=true"]
    code, out = run(tmp_path / "a", *argv)
    code2, out2 = run(tmp_path / "b", *argv)
    assert code == code2 == 0
    first, second = load(out, "manifest.json"), load(out2, "manifest.json")
    assert first["artifacts"] == second["artifacts"]
    assert first["manifest_hash"] == second["manifest_hash"]
    assert "window_0_1.json" in first["artifacts"]
    rows = (out / "tangent_sweep.csv").read_text().splitlines()
    assert len(rows) == 1 + 3 * 2 and all(r.endswith(",1") for r in rows[1:])
