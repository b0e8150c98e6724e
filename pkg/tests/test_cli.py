import csv
import io
import json
import os

import pytest

from tcpengset.cli import main, parse_duration
from tcpengset.harness import acceptance_hash
from tcpengset.model import buffer_rule

SMALL = "100M10M2M-R50-W44-B50-F12-E-N60-Nc200"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_model_worked_example(capsys):
    code, out, _ = run(capsys, "model", "10M2M-R50-W44-F12-N134", "--off", "1s")
    rec = json.loads(out)
    assert code == 0
    assert rec["h_kbps"] == pytest.approx(154.9, abs=0.05)
    assert rec["ON_ms"] == pytest.approx(929.6, abs=0.05)
    for key in ("flights", "m", "n", "ON0_ms", "s", "P_j", "h1", "h2", "rho0", "rho", "Q", "eta"):
        assert key in rec


def test_model_flags_match_label(capsys):
    _, a, _ = run(capsys, "model", "100M10M2M-R50-W44-F12-N82")
    _, b, _ = run(capsys, "model", "--c1", "100M", "--c2", "10M", "--c3", "2M", "--rtt0", "50ms",
                  "--wr", "44", "--size", "12", "--n", "82")
    assert json.loads(a)["h"] == json.loads(b)["h"]


def test_model_load_target_solves_n(capsys):
    code, out, _ = run(capsys, "model", "100M10M2M-R50-W44-B200-F12", "--rho0", "1.0")
    rec = json.loads(out)
    assert code == 0 and rec["N"] == 82 and rec["rho0"] >= 1.0


def test_model_csv_is_one_record(capsys):
    _, out, _ = run(capsys, "model", "100M10M2M-R50-W44-F12-N82", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1 and float(rows[0]["N"]) == 82


def test_buffer_rule_matches_library(capsys):
    code, out, _ = run(capsys, "buffer-rule", "--capacity", "10M")
    rec = json.loads(out)
    br = buffer_rule(10e6)
    assert code == 0
    assert rec["raw"] == pytest.approx(br.raw) and rec["recommended"] == br.recommended


def test_dist_describe_knee(capsys):
    _, out, _ = run(capsys, "dist", "describe", "--kind", "ep", "--mean", "12")
    rec = json.loads(out)
    assert rec["B"] == pytest.approx(6.174, abs=1e-3)
    assert rec["k"] == pytest.approx(17.2, abs=0.05)


def test_dist_sample_is_seeded(capsys):
    _, a, _ = run(capsys, "dist", "sample", "--kind", "e", "--mean", "12", "--count", "5", "--seed", "3")
    _, b, _ = run(capsys, "dist", "sample", "--kind", "e", "--mean", "12", "--count", "5", "--seed", "3")
    assert a == b and len(json.loads(a)["samples"]) == 5


@pytest.mark.parametrize("text,value", [("1s", 1.0), ("50ms", 0.05), ("250us", 250e-6), ("2", 2.0)])
def test_parse_duration(text, value):
    assert parse_duration(text) == pytest.approx(value)


def test_bad_label_token_exits_2(capsys):
    code, _, err = run(capsys, "model", "100M10M2M-R50-Q7-F12-N3")
    assert code == 2 and "Q7" in err


def test_flag_overrides_label(capsys):
    _, a, _ = run(capsys, "model", "100M10M2M-R50-W44-F12-N3", "--wr", "12")
    _, b, _ = run(capsys, "model", "100M10M2M-R50-W12-F12-N3")
    assert json.loads(a)["h"] == json.loads(b)["h"]


def test_config_label_conflict_exits_2(capsys, tmp_path):
    cfg = tmp_path / "sc.json"
    cfg.write_text(json.dumps({"W_R": 12}))
    code, _, err = run(capsys, "model", "100M10M2M-R50-W44-F12-N3", "--config", str(cfg))
    assert code == 2 and "W_R" in err


def test_rtt0_and_delay_are_exclusive(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["model", "10M2M-R50-W44-F12-N3", "--rtt0", "50ms", "--delay", "40ms"])
    assert exc.value.code == 2


def test_unwritable_out_dir_exits_2(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "model", "10M2M-R50-W44-F12-N3", "--out", str(blocker / "sub"))
    assert code == 2 and "output directory" in err


def test_out_dir_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("TCPENGSET_OUT", str(tmp_path))
    code, out, _ = run(capsys, "model", "10M2M-R50-W44-F12-N3")
    assert code == 0
    assert os.path.exists(tmp_path / "model.json")
    assert out.strip() == str(tmp_path / "model.json")


def test_version_has_acceptance_fingerprint(capsys):
    code, out, _ = run(capsys, "--version")
    rec = json.loads(out)
    assert code == 0 and rec["acceptance_hash"] == acceptance_hash() and rec["version"]


def test_simulate_seed_determinism(capsys):
    _, a, _ = run(capsys, "simulate", SMALL, "--seed", "5")
    _, b, _ = run(capsys, "simulate", SMALL, "--seed", "5")
    _, c, _ = run(capsys, "simulate", SMALL, "--seed", "6")
    assert a == b and a != c
    assert json.loads(a)["completed"] >= 200


def test_simulate_writes_tables_and_trace(capsys, tmp_path):
    trace = tmp_path / "trace.txt"
    code, out, _ = run(capsys, "simulate", SMALL, "--out", str(tmp_path / "o"), "--format", "csv",
                       "--trace", str(trace))
    assert code == 0
    written = out.split()
    assert written and all(os.path.exists(p) for p in written)
    assert trace.read_text().startswith("t_ns conn kind")


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "sc.json"
    cfg.write_text(json.dumps({"label": "100M10M2M-R50-W44-F12-E", "N": 82}))
    _, a, _ = run(capsys, "model", "--config", str(cfg))
    _, b, _ = run(capsys, "model", "100M10M2M-R50-W44-F12-E-N82")
    assert json.loads(a)["h"] == json.loads(b)["h"]


def test_compare_model_only(capsys):
    code, out, _ = run(capsys, "compare", "100M10M2M-R50-W44-B200-F12-E-N82", "--model-only")
    rep = json.loads(out)
    assert code == 0 and rep["measured"] == {} and len(rep["occupancy"]) == 83


def test_sweep_model_only_csv(capsys):
    code, out, _ = run(capsys, "sweep", "100M10M2M-R50-W44-F12-E", "--axis", "rho0", "--values", "0.4,1.0",
                       "--model-only", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [int(r["N"]) for r in rows][-1] == 82


def test_tables_table5(capsys):
    code, out, _ = run(capsys, "tables", "table5")
    assert code == 0 and len(json.loads(out)) == 3


def test_acceptance_quick_reports_each_criterion(capsys):
    code, out, err = run(capsys, "acceptance", "--quick")
    lines = [l for l in err.splitlines() if l.startswith(("PASS", "FAIL"))]
    assert len(lines) == 11
    assert code == (1 if any(l.startswith("FAIL") for l in lines) else 0)
    summary = json.loads(out)
    assert len(summary["criteria"]) == 11
    assert summary["passed"] + summary["failed"] == 11


def test_acceptance_unknown_criterion(capsys):
    code, _, _ = run(capsys, "acceptance", "--only", "99")
    assert code == 2
