import hashlib
import json
import subprocess
import sys

from conftest import CORPUS, ROOT

from bhlcheck import __version__, cli

PRIORS_STATED = str(CORPUS / "ttest_priors_stated.swl")
PRIORS_MISSING = str(CORPUS / "ttest_priors_missing.swl")
REPEATED_MIN = str(CORPUS / "repeated_test_min.swl")
DISJ_SUM = str(CORPUS / "drugs_disjunctive_sum.swl")


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, _ = run(capsys, "verify", "--format", "json", *argv)
    return code, json.loads(out)


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "verify", PRIORS_STATED)[0] == cli.EXIT_OK
    assert run(capsys, "verify", PRIORS_MISSING)[0] == cli.EXIT_FAIL
    assert run(capsys, "verify", str(CORPUS / "errors" / "kind_mismatch.swl"))[0] == cli.EXIT_FRONTEND
    assert run(capsys, "verify", str(tmp_path / "missing.swl"))[0] == cli.EXIT_IO


def test_json_report_fields(capsys):
    code, doc = report(capsys, REPEATED_MIN)
    assert code == 1
    assert doc["schema"] == cli.REPORT_SCHEMA and doc["version"] == __version__
    assert doc["input"]["sha256"] == hashlib.sha256((CORPUS / "repeated_test_min.swl").read_bytes()).hexdigest()
    assert doc["verdict"] == "fail"
    (fn,) = doc["functions"]
    vc8 = next(v for v in fn["vcs"] if v["id"] == 8)
    assert vc8["status"] == "failed"
    assert "compose_pvs gives (Leq (p1 +. p2))" in vc8["detail"]
    assert all("wall_time_ms" not in v for v in fn["vcs"])
    proved = [v for v in fn["vcs"] if v["status"] == "proved"]
    assert all(v["trace_length"] == len(v["trace"]) > 0 for v in proved)


def test_json_deterministic_across_jobs(capsys):
    docs = [report(capsys, DISJ_SUM, "--jobs", str(j))[1] for j in (1, 4, 1)]
    assert docs[0] == docs[1] == docs[2]


def test_timings_flag(capsys):
    _, doc = report(capsys, PRIORS_STATED, "--timings")
    assert all(v["wall_time_ms"] >= 0 for v in doc["functions"][0]["vcs"])


def test_json_frontend_error(capsys):
    code, doc = report(capsys, str(CORPUS / "errors" / "unresolved_dataset.swl"))
    assert code == 2 and doc["verdict"] == "error"
    assert doc["diagnostics"][0]["code"] == "E002"


def test_depth_from_environment(monkeypatch):
    monkeypatch.setenv("BHL_DEPTH", "3")
    assert cli.build_parser().parse_args(["verify", PRIORS_STATED]).depth == 3
    assert cli.build_parser().parse_args(["verify", PRIORS_STATED, "--depth", "5"]).depth == 5
    monkeypatch.setenv("BHL_DEPTH", "junk")
    assert cli.build_parser().parse_args(["verify", PRIORS_STATED]).depth == 12


def test_emit_smt(capsys, tmp_path):
    run(capsys, "verify", PRIORS_STATED, "--emit-smt", str(tmp_path))
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files == [f"vc_p_{i}.smt2" for i in range(5)]
    assert "(check-sat)" in (tmp_path / "vc_p_4.smt2").read_text()


def test_explain_proved_and_failed(capsys):
    code, out, _ = run(capsys, "explain", PRIORS_STATED, "4")
    assert code == 0 and "status: proved" in out and "trace: [" in out
    code, out, _ = run(capsys, "explain", PRIORS_MISSING, "2")
    assert code == 1 and "missing:" in out and "Possible (mean t_n <' 1.0)" in out
    assert "ttest_priors_missing.swl:6:9" in out


def test_explain_unknown_vc(capsys):
    code, _, err = run(capsys, "explain", PRIORS_STATED, "99")
    assert code == 2 and "no VC with id 99" in err
    assert run(capsys, "explain", PRIORS_STATED, "x")[0] == 2


def test_demo_refuses_unverified(capsys, tmp_path):
    csv = tmp_path / "d.csv"
    csv.write_text("d\n1.2\n0.8\n1.9\n1.4\n")
    code, _, err = run(capsys, "demo", PRIORS_MISSING, str(csv))
    assert code == cli.EXIT_REFUSED and "refusing" in err
    code, out, _ = run(capsys, "demo", PRIORS_MISSING, str(csv), "--force")
    assert code == 0 and out.startswith("WARNING")
    code, out, _ = run(capsys, "demo", PRIORS_STATED, str(csv))
    assert code == 0 and "WARNING" not in out and "ttest_1samp" in out


def test_demo_data_errors(capsys, tmp_path):
    csv = tmp_path / "d.csv"
    csv.write_text("other\n1\n2\n")
    assert run(capsys, "demo", PRIORS_STATED, str(csv))[0] == cli.EXIT_IO
    assert run(capsys, "demo", PRIORS_STATED, str(tmp_path / "nope.csv"))[0] == cli.EXIT_IO


def test_specs_command(capsys):
    code, out, _ = run(capsys, "specs")
    assert code == 0 and json.loads(out)["schema"] == "bhlcheck-specs/1"


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "bhlcheck", "verify", "corpus/repeated_test_sum.swl"],
        cwd=ROOT,
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip().endswith("verdict: PASS (10 of 10 VCs proved)")
