import json

import numpy as np
import pytest

from hopflink.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_helicity_spectral(capsys):
    code, doc, _ = run(capsys, "helicity", "--field", "abc:1,1,1,k=1", "--box", "6.2831853",
                       "--mode", "spectral")
    assert code == 0
    assert doc["result"]["chi"] == pytest.approx(744.15, abs=0.01)
    assert doc["config"]["box_cm"] == 6.2831853
    assert len(doc["config_hash"]) == 64 and doc["seed"] == 0


def test_graph_check_builtin(capsys, tmp_path):
    code, doc, _ = run(capsys, "graph-check", "--builtin", "--csv", str(tmp_path / "t.csv"))
    assert code == 0 and len(doc["result"]["rows"]) == 8
    assert len((tmp_path / "t.csv").read_text().splitlines()) == 9


def test_graph_check_edge_list(capsys, tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("1 2\n1 2\n1 2\n")
    code, doc, _ = run(capsys, "graph-check", "--edges", str(p))
    assert code == 0 and doc["result"]["bounded"] is False
    p.write_text("1 1\n")
    code, _, err = run(capsys, "graph-check", "--edges", str(p))
    assert code == 2 and json.loads(err)["exit_code"] == 2


def test_spectrum_fit(capsys, tmp_path):
    code, doc, _ = run(capsys, "spectrum", "--alpha", "0.5", "--shells", "1..12", "--pol", "right",
                       "--fit", "helicity", "--csv", str(tmp_path / "s.csv"),
                       "--ensemble-out", str(tmp_path / "e.json"))
    assert code == 0
    assert doc["result"]["fit"]["slope"] == pytest.approx(0.0, abs=0.3)
    assert (tmp_path / "s.csv").read_text().startswith("k,value")
    modes = json.loads((tmp_path / "e.json").read_text())["modes"]
    assert {"kx", "ky", "kz", "re", "im"} <= set(modes[0])
    # the exported table is a valid field spec
    code, doc2, _ = run(capsys, "helicity", "--field", f"ensemble:{tmp_path / 'e.json'}")
    assert code == 0 and doc2["result"]["chi"] == pytest.approx(doc["result"]["chi"], rel=1e-12)


def test_link_hopf(capsys):
    code, doc, _ = run(capsys, "link", "--curves", "hopf")
    assert code == 0 and abs(abs(doc["result"]["linking"]) - 1) < 1e-3


def test_lambda_rotation(capsys, tmp_path):
    code, doc, _ = run(capsys, "lambda", "--field", "rotation", "--pairs", "10",
                       "--csv", str(tmp_path / "d.csv"))
    assert code == 0
    assert np.abs(doc["result"]["values"]).max() < 1e-5
    assert len((tmp_path / "d.csv").read_text().splitlines()) == 11


def test_lambda_schedule(capsys):
    code, doc, _ = run(capsys, "lambda", "--field", "rotation", "--x1", "0.8,0,0",
                       "--x2", "0.4,0,0.3", "--schedule", "6.283185307179586,12.566370614359172,"
                       "25.132741228718345")
    assert code == 0 and abs(doc["result"]["value"]) < 1e-6


def test_local_formula(capsys):
    code, doc, _ = run(capsys, "local-formula", "--smax", "2", "--a", "0,0.1,0.3,1",
                       "--samples", "500")
    assert code == 0
    table = doc["result"]["table"]
    assert [r["a"] for r in table] == [0, 0.1, 0.3, 1]
    main_term = doc["result"]["terms"]["0,0"]["value"]
    assert table[0]["partial_sums"] == [main_term] * 3


def test_bound_and_quad(capsys):
    code, doc, _ = run(capsys, "bound", "--samples", "500", "--seed", "3")
    assert code == 0 and doc["result"]["delta2_bound"] > 0 and doc["seed"] == 3
    code, doc, _ = run(capsys, "quad", "--field", "rotation", "--pairs", "4")
    assert code == 0 and doc["result"]["chi2"] < 1e-9


def test_trace_csv(capsys, tmp_path):
    code, doc, _ = run(capsys, "trace", "--field", "rotation", "--x0", "1,0,0", "--T",
                       "6.283185307179586", "--csv", str(tmp_path / "l.csv"), "--reverse")
    assert code == 0
    assert np.allclose(doc["result"]["end"], [1, 0, 0], atol=1e-6)
    assert (tmp_path / "l.csv").read_text().startswith("t,x,y,z,Bx,By,Bz")


def test_report(capsys):
    code, doc, _ = run(capsys, "report", "--field", "rotation", "--pairs", "3", "--samples", "300")
    assert code == 0
    r = doc["result"]
    assert {"chi", "chi2", "dispersion", "delta2_bound", "energy", "meta"} <= set(r)


def test_dry_run_every_command(capsys):
    for cmd in ("trace", "link", "lambda", "helicity", "quad", "bound", "local-formula",
                "spectrum", "graph-check", "report"):
        code, doc, _ = run(capsys, cmd, "--dry-run")
        assert code == 0 and doc["result"] == {"dry_run": True}, cmd


def test_exit_codes(capsys, tmp_path):
    code, _, err = run(capsys, "helicity", "--field", "bogus:1")
    assert code == 2 and json.loads(err)["error"] == "ConfigError"
    code, _, err = run(capsys, "helicity", "--field", "rotation")
    assert code == 4
    code, _, err = run(capsys, "trace", "--field", "rotation", "--x0", "0,0,0.5", "--T", "1")
    assert code == 3 and json.loads(err)["error"] == "StagnationError"
    code, _, _ = run(capsys, "helicity", "--T", "-1")
    assert code == 2


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"field": "abc:1,1,1,k=1", "n_samples": 300, "seed": 5}))
    code, doc, _ = run(capsys, "bound", "--config", str(cfg))
    assert code == 0 and doc["config"]["n_samples"] == 300 and doc["seed"] == 5
    code, doc, _ = run(capsys, "bound", "--config", str(cfg), "--seed", "6")
    assert doc["seed"] == 6
    cfg.write_text(json.dumps({"bogus_key": 1}))
    code, _, _ = run(capsys, "bound", "--config", str(cfg))
    assert code == 2


def test_byte_reproducible(tmp_path):
    outs = []
    for name in ("a.json", "b.json"):
        p = tmp_path / name
        assert main(["lambda", "--pairs", "3", "--T", "10", "--seed", "4", "--out", str(p)]) == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    p = tmp_path / "c.json"
    main(["lambda", "--pairs", "3", "--T", "10", "--seed", "4", "--workers", "2", "--out", str(p)])
    a, c = json.loads(outs[0]), json.loads(p.read_bytes())
    assert a["result"] == c["result"]
