"""End-to-end command runs, in process, against temp directories.

Everything here uses the sphere with tiny grids so the whole module
stays in the seconds range; the numerical content of the outputs is
covered by the per-module tests, so these assert on exit codes, file
layout, provenance, and byte-level reproducibility.
"""

import json
import os

import pytest

from revspec.cli import main
from revspec.config import load_config
from revspec.serialize import config_hash, read_json

SPEC_CFG = {
    "surface": {"family": "sphere", "params": []},
    "observable": {"builtin": "cos2s"},
    "numerics": {"h": [0.3], "N": 200, "m_max": 3},
    "spectrum": {"kind": "rotational", "rect": [0.5, 1.5, -1.0, 1.0]},
    "lattice": {"E_lo": 0.5, "E_hi": 1.5},
    "window": {"F0": -0.25, "C": 1.2, "E_center": 1.0},
}

COUNT_CFG = {
    "surface": {"family": "sphere", "params": []},
    "observable": {"builtin": "cos2s"},
    "numerics": {"h": [0.3, 0.25, 0.2], "N": 200, "m_max": 4},
    "spectrum": {"kind": "rotational", "rect": [0.5, 1.5, -1.0, 1.0]},
    "window": {"F0": -0.25, "C": 1.2, "E_center": 1.0},
}


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def data_lines(path):
    return [l for l in path.read_text().splitlines()
            if l and not l.startswith("#")]


def test_spectrum_files_and_reproducibility(tmp_path):
    cfgp = write_cfg(tmp_path, SPEC_CFG)
    out1 = tmp_path / "o1"
    assert main(["spectrum", "--config", cfgp, "--out", str(out1)]) == 0
    csv1, json1 = out1 / "spectrum.csv", out1 / "spectrum.json"
    assert csv1.exists() and json1.exists()
    assert any(l.startswith("# written: ") for l in
               csv1.read_text().splitlines())
    doc = read_json(json1)
    assert doc["format"] == "spectrum/1"
    assert doc["provenance"]["config_hash"] == config_hash(
        load_config(cfgp).effective)
    lam_im = doc["payload"]["eigenvalues_im"]
    assert len(lam_im) > 0
    assert all(-1.0 <= v <= 1.0 for v in lam_im)
    # the data rows carry one line per eigenvalue plus the header
    assert len(data_lines(csv1)) == len(lam_im) + 1

    out2, out3 = tmp_path / "o2", tmp_path / "o3"
    for out in (out2, out3):
        assert main(["spectrum", "--config", cfgp, "--out", str(out),
                     "--no-timestamp"]) == 0
    assert (out2 / "spectrum.csv").read_bytes() == \
        (out3 / "spectrum.csv").read_bytes()
    assert (out2 / "spectrum.json").read_bytes() == \
        (out3 / "spectrum.json").read_bytes()
    assert "# written" not in (out2 / "spectrum.csv").read_text()


def test_lattice_then_match(tmp_path):
    cfgp = write_cfg(tmp_path, SPEC_CFG)
    out = tmp_path / "o"
    assert main(["spectrum", "--config", cfgp, "--out", str(out)]) == 0
    assert main(["lattice", "--config", cfgp, "--out", str(out)]) == 0
    ldoc = read_json(out / "lattice.json")
    assert ldoc["payload"]["entries"], "lattice came out empty"

    mcfg = dict(SPEC_CFG)
    mcfg["match"] = {"spectrum_file": str(out / "spectrum.json"),
                     "lattice_file": str(out / "lattice.json")}
    mcfgp = write_cfg(tmp_path, mcfg, "match.json")
    assert main(["match", "--config", mcfgp, "--out", str(out)]) == 0
    mdoc = read_json(out / "match.json")
    assert mdoc["payload"]["n_matched"] > 0
    assert "window" in mdoc["payload"]
    assert len(data_lines(out / "match.csv")) == \
        mdoc["payload"]["n_matched"] + 1


def test_match_refuses_mixed_hashes(tmp_path):
    cfgp = write_cfg(tmp_path, SPEC_CFG)
    out_a = tmp_path / "a"
    assert main(["spectrum", "--config", cfgp, "--out", str(out_a)]) == 0
    other = dict(SPEC_CFG)
    other["lattice"] = {"E_lo": 0.5, "E_hi": 1.4}
    otherp = write_cfg(tmp_path, other, "other.json")
    out_b = tmp_path / "b"
    assert main(["lattice", "--config", otherp, "--out", str(out_b)]) == 0

    mcfg = dict(SPEC_CFG)
    mcfg["match"] = {"spectrum_file": str(out_a / "spectrum.json"),
                     "lattice_file": str(out_b / "lattice.json")}
    mcfgp = write_cfg(tmp_path, mcfg, "match.json")
    out_m = tmp_path / "m"
    assert main(["match", "--config", mcfgp, "--out", str(out_m)]) == 1
    err = json.loads((out_m / "error.json").read_text())
    assert err["error"]["type"] == "HashMismatch"
    assert "config_hash" in err["error"]["message"]
    assert not (out_m / "match.csv").exists()


def test_config_problems_exit_2(tmp_path):
    out = tmp_path / "o"
    rc = main(["spectrum", "--config", str(tmp_path / "absent.json"),
               "--out", str(out)])
    assert rc == 2
    assert json.loads((out / "error.json").read_text())["error"][
        "type"] == "ConfigError"
    bad = write_cfg(tmp_path, {"numerics": {"h": []}}, "bad.json")
    assert main(["spectrum", "--config", bad, "--out", str(out)]) == 2


def test_numerical_failure_exit_1(tmp_path):
    cfg = dict(SPEC_CFG)
    cfg["numerics"] = {"h": [0.3], "N": 150, "m_max": 3}
    cfgp = write_cfg(tmp_path, cfg)
    out = tmp_path / "o"
    assert main(["spectrum", "--config", cfgp, "--out", str(out)]) == 1
    err = json.loads((out / "error.json").read_text())
    assert err["error"]["type"] == "DomainError"
    assert not (out / "spectrum.csv").exists()
    # a successful rerun into the same directory clears the record
    good = write_cfg(tmp_path, SPEC_CFG, "good.json")
    assert main(["spectrum", "--config", good, "--out", str(out)]) == 0
    assert not (out / "error.json").exists()
    assert (out / "spectrum.csv").exists()


def test_count_scaling_thread_invariance(tmp_path):
    cfgp = write_cfg(tmp_path, COUNT_CFG)
    out1, out4 = tmp_path / "t1", tmp_path / "t4"
    assert main(["count-scaling", "--config", cfgp, "--out", str(out1),
                 "--no-timestamp", "--threads", "1"]) == 0
    assert main(["count-scaling", "--config", cfgp, "--out", str(out4),
                 "--no-timestamp", "--threads", "4"]) == 0
    assert (out1 / "counts.csv").read_bytes() == \
        (out4 / "counts.csv").read_bytes()
    assert (out1 / "scaling.json").read_bytes() == \
        (out4 / "scaling.json").read_bytes()
    rows = [l.split(",") for l in data_lines(out1 / "counts.csv")[1:]]
    assert len(rows) == 3
    eps = [float(r[0]) for r in rows]
    assert eps == sorted(eps, reverse=True)
    assert all(int(r[2]) > 0 for r in rows)


def test_scan_classical_output(tmp_path):
    cfg = {
        "surface": {"family": "sphere", "params": []},
        "observable": {"builtin": "cos2s"},
        "numerics": {"T": 2.0, "n_starts": 8},
        "scan": {"a_lo": 0.2, "a_hi": 0.7, "n": 6},
    }
    cfgp = write_cfg(tmp_path, cfg)
    out = tmp_path / "o"
    assert main(["scan-classical", "--config", cfgp, "--out",
                 str(out)]) == 0
    doc = read_json(out / "scan.json")
    rows = doc["payload"]["rows"]
    assert len(rows) == 6
    for r in rows:
        # every sphere torus is the closed equator class
        assert abs(r["omega"] - 1.0) < 1e-6
        assert r["rotation_class"]["kind"] == "rational"
        assert (r["rotation_class"]["m"], r["rotation_class"]["n"]) == (1, 1)
        # q_avg is the quadrature torus average, exact for the sphere;
        # the short-T kernel interval need not have settled near it yet
        assert abs(r["q_avg"] + r["a"] ** 2) < 1e-6
        assert r["qinf_lo"] <= r["qinf_hi"]
    assert len(data_lines(out / "scan.csv")) == 7


def test_good_values_verdict_rows(tmp_path):
    cfg = {
        "surface": {"family": "sphere", "params": []},
        "observable": {"builtin": "cos2s"},
        "numerics": {"T": 3.0, "n_starts": 8},
        "scan": {"a_lo": 0.1, "a_hi": 0.9, "n": 33},
        "good_values": {"F0": [0.5, -0.25]},
    }
    cfgp = write_cfg(tmp_path, cfg)
    out = tmp_path / "o"
    assert main(["good-values", "--config", cfgp, "--out", str(out)]) == 0
    rows = [l.split(",") for l in data_lines(out / "verdicts.csv")[1:]]
    assert [r[0] for r in rows] == ["0.5", "-0.25"]
    # far above every interval: good; on the torus-average curve: not
    assert rows[0][1] == "1" and rows[0][2] == ""
    assert rows[1][1] == "0" and rows[1][2] != ""
    vdoc = read_json(out / "verdicts.json")
    conds = vdoc["payload"]["verdicts"][0]["conditions"]
    assert [c["ok"] for c in conds] == [True] * 4


def test_spectrum_2d_kind(tmp_path):
    cfg = dict(SPEC_CFG)
    cfg["numerics"] = {"h": [0.3], "N": 200, "M_theta": 2}
    cfg["spectrum"] = {"kind": "2d", "rect": [0.5, 1.5, -1.0, 1.0]}
    cfgp = write_cfg(tmp_path, cfg)
    out = tmp_path / "o"
    assert main(["spectrum", "--config", cfgp, "--out", str(out)]) == 0
    doc = read_json(out / "spectrum.json")
    re_vals = doc["payload"]["eigenvalues_re"]
    im_vals = doc["payload"]["eigenvalues_im"]
    assert len(re_vals) > 0
    assert all(0.5 <= v <= 1.5 for v in re_vals)
    assert all(-1.0 <= v <= 1.0 for v in im_vals)


def test_normalform_synthetic(tmp_path):
    cfg = {
        "numerics": {"h": [0.1]},
        "normalform": {"source": "synthetic", "center": [0.45, 0.35],
                       "span": [0.1, 0.1], "shape": [9, 7], "N": 2,
                       "lie_order": 3},
    }
    cfgp = write_cfg(tmp_path, cfg)
    out = tmp_path / "o"
    assert main(["normalform", "--config", cfgp, "--out", str(out)]) == 0
    red = read_json(out / "reduction.json")["payload"]
    assert red["order"] == 2
    assert red["final_residual"] < red["initial_residual"]
    sym = read_json(out / "symbols.json")["payload"]
    assert set(sym) == {"p", "q", "reduced"}
    assert sym["reduced"]["modes"]


def test_toeplitz_bench(tmp_path):
    cfg = {"toeplitz": {"kind": "gauss", "R": 1.0, "amp": 1.0,
                        "width": 0.5, "harmonic": 0, "h": [0.2, 0.1]}}
    cfgp = write_cfg(tmp_path, cfg)
    out = tmp_path / "o"
    assert main(["toeplitz-bench", "--config", cfgp, "--out",
                 str(out)]) == 0
    rows = [l.split(",") for l in data_lines(out / "toeplitz.csv")[1:]]
    assert len(rows) == 2
    for r in rows:
        assert float(r[5]) < 1e-6   # rel_trace_defect
        assert float(r[6]) < 1e-8   # positivity_defect


def test_output_dir_from_config(tmp_path):
    dest = tmp_path / "nested" / "results"
    cfg = dict(COUNT_CFG)
    cfg["output_dir"] = str(dest)
    cfgp = write_cfg(tmp_path, cfg)
    assert main(["count-scaling", "--config", cfgp,
                 "--no-timestamp"]) == 0
    assert (dest / "counts.csv").exists()


def test_argparse_surface():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    with pytest.raises(SystemExit):
        main([])
