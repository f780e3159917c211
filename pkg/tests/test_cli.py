"""Command-line surface: argument validation, output shapes, exit codes,
determinism, and the self-test corruption switch.

Everything runs in-process through main(argv) so coverage tools see it
and no subprocess startup cost is paid.
"""

import json

import mpmath
import pytest
from mpmath import mpf

from lfcheck import cli

CHARLIER = ["--family", "charlier", "--b", "0.5", "--eta", "1"]
MEIXNER_SWEEP = ["sweep", "--family", "meixner", "--a", "2.5", "--b", "0.4",
                 "--prec", "256"]


def test_decimal_digits_tracks_bits():
    assert cli.decimal_digits(128) == 41
    assert cli.decimal_digits(256) == 80
    assert cli.decimal_digits(512) == 157
    assert cli.decimal_digits(1024) == 311


def test_compute_csv_stdout(capsys):
    rc = cli.main(["compute", *CHARLIER, "--n", "10"])
    out = capsys.readouterr().out
    assert rc == 0
    lines = out.strip().split("\n")
    assert lines[0] == "n,beta,gamma,H,p1,provenance"
    assert len(lines) == 11
    rows = [l.split(",") for l in lines[1:]]
    assert [r[0] for r in rows] == [str(n) for n in range(10)]
    assert all(r[5] == "MomentRoute" for r in rows)
    # gamma_0 is identically zero; beta_0 carries the full precision
    assert rows[0][2] == "0.0"
    assert rows[0][1].startswith("0.5373147207")
    assert len(rows[0][1]) >= 150


def test_compute_json_shape(capsys):
    rc = cli.main(["compute", *CHARLIER, "--n", "4", "--format", "json"])
    doc = json.loads(capsys.readouterr().out)
    assert rc == 0
    assert sorted(doc) == ["config", "rows"]
    assert len(doc["rows"]) == 4
    assert sorted(doc["rows"][0]) == ["H", "beta", "gamma", "n", "p1",
                                      "provenance"]
    cfg = doc["config"]
    assert cfg["prec_bits"] == 512
    assert cfg["family"] == "charlier"
    assert cfg["truncation_indices"] == {"moments": 64}


def test_route_both_writes_two_agreeing_files(tmp_path):
    out = tmp_path / "tab.csv"
    rc = cli.main(["compute", *CHARLIER, "--n", "8", "--route", "both",
                   "--out", str(out)])
    assert rc == 0
    moments = (tmp_path / "tab.moments.csv").read_text().strip().split("\n")
    lf = (tmp_path / "tab.lf.csv").read_text().strip().split("\n")
    assert len(moments) == len(lf) == 9
    assert moments[1].split(",")[5] == "MomentRoute"
    assert lf[1].split(",")[5] == "LFRoute-Charlier-Main"
    with mpmath.workprec(512):
        for lm, ll in zip(moments[1:], lf[1:]):
            fm, fl = lm.split(","), ll.split(",")
            assert fm[0] == fl[0]
            for i in (1, 2, 3, 4):
                a, b = mpf(fm[i]), mpf(fl[i])
                if a == b == 0:
                    continue
                assert abs(a - b) / max(abs(a), abs(b)) < 1e-100


def test_compute_is_byte_deterministic(tmp_path):
    out = tmp_path / "tab.csv"
    argv = ["compute", *CHARLIER, "--n", "8", "--route", "both",
            "--out", str(out)]
    cli.main(argv)
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    cli.main(argv)
    second = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    assert first == second
    assert sorted(first) == ["tab.lf.csv", "tab.moments.csv"]


def test_compute_variant_selection(tmp_path):
    out = tmp_path / "sva.csv"
    rc = cli.main(["compute", *CHARLIER, "--n", "6", "--route", "lf",
                   "--variant", "Charlier-SVA", "--out", str(out)])
    assert rc == 0
    rows = out.read_text().strip().split("\n")[1:]
    assert all(r.split(",")[5] == "LFRoute-Charlier-SVA" for r in rows)


def test_breakdown_reports_partial_table(tmp_path, capsys):
    # 128 bits cannot push the factorization to depth 40
    out = tmp_path / "bk.json"
    rc = cli.main(["compute", *CHARLIER, "--n", "40", "--prec", "128",
                   "--format", "json", "--out", str(out)])
    err = capsys.readouterr().err
    assert rc == 3
    assert "breakdown at index 21" in err
    doc = json.loads(out.read_text())
    assert doc["config"]["breakdown_index"] == 21
    assert len(doc["rows"]) == 20
    assert doc["rows"][-1]["n"] == 19


def test_verify_routes_passes(tmp_path):
    out = tmp_path / "v.json"
    rc = cli.main(["verify", *CHARLIER, "--suite", "routes", "--n", "8",
                   "--prec", "256", "--out", str(out)])
    assert rc == 0
    report = json.loads(out.read_text())
    assert {e["identity"] for e in report} == {
        "route_equivalence_Charlier-Main",
        "route_equivalence_Charlier-SVA",
    }
    for e in report:
        assert e["verdict"] == "pass"
        assert e["gating"] is True
        assert e["tolerance"] == "1e-30"
        assert len(e["per_n"]) > 0
        assert e["config"]["out"] == str(out)
        assert e["params"]["eta"] == "1"


def test_verify_is_deterministic_modulo_runtime(tmp_path):
    out = tmp_path / "v.json"
    argv = ["verify", *CHARLIER, "--suite", "routes", "--n", "8",
            "--prec", "256", "--out", str(out)]
    cli.main(argv)
    first = json.loads(out.read_text())
    cli.main(argv)
    second = json.loads(out.read_text())
    for e in first + second:
        e.pop("runtime_ms")
    assert first == second


def test_sabotage_flags_exactly_the_corrupted_route(tmp_path):
    out = tmp_path / "v.json"
    rc = cli.main(["verify", *CHARLIER, "--suite", "routes", "--n", "8",
                   "--prec", "256", "--sabotage", "--out", str(out)])
    assert rc == 1
    report = json.loads(out.read_text())
    verdicts = {e["identity"]: e["verdict"] for e in report}
    assert verdicts == {
        "route_equivalence_Charlier-Main": "fail",
        "route_equivalence_Charlier-SVA": "pass",
    }
    flagged = next(e for e in report if e["verdict"] == "fail")
    seen = float(flagged["max_residual"])
    assert 2.0 ** -22 <= seen <= 2.0 ** -18


def test_verify_all_suites_smoke(tmp_path):
    out = tmp_path / "all.json"
    rc = cli.main(["verify", *CHARLIER, "--suite", "all", "--n", "10",
                   "--prec", "256", "--out", str(out)])
    assert rc == 0
    report = json.loads(out.read_text())
    ids = {e["identity"] for e in report}
    assert "eq:Pearson" in ids
    assert "route_equivalence_Charlier-Main" in ids
    assert "eq:smet_vanassche" in ids
    assert "psi_two_route_agreement" in ids
    assert "eq:Toda_system" in ids
    assert "eq:ode_gamma_2" in ids
    for e in report:
        assert e["verdict"] == ("pass" if e["gating"] else "info"), \
            e["identity"]
    tols = {e["identity"]: e["tolerance"] for e in report}
    assert tols["eq:P_shift_sigma"] == "1e-28"
    assert tols["eq:Toda_system"] == "1e-8"
    assert tols["eq:Pearson"] == "1e-30"


def test_sweep_stdout_rows(capsys):
    rc = cli.main([*MEIXNER_SWEEP, "--eta-min", "0.2", "--eta-max", "0.6",
                   "--eta-steps", "3", "--n", "5"])
    out = capsys.readouterr().out
    assert rc == 0
    lines = out.strip().split("\n")
    assert lines[0] == "eta,n,beta,gamma"
    assert len(lines) == 1 + 3 * 5
    rows = [l.split(",") for l in lines[1:]]
    assert len({r[0] for r in rows}) == 3
    gamma3 = [float(r[3]) for r in rows if r[1] == "3"]
    assert gamma3 == sorted(gamma3) and len(gamma3) == 3


def test_sweep_zero_steps_writes_header_only(capsys):
    rc = cli.main([*MEIXNER_SWEEP, "--eta-min", "0.2", "--eta-max", "0.6",
                   "--eta-steps", "0", "--n", "5"])
    out = capsys.readouterr().out
    assert rc == 0
    assert out == "eta,n,beta,gamma\n"


def test_sweep_continues_past_invalid_node(capsys):
    rc = cli.main(["sweep", "--family", "charlier", "--b", "0.5",
                   "--eta-min", "0", "--eta-max", "0.5", "--eta-steps", "3",
                   "--n", "4", "--prec", "256"])
    cap = capsys.readouterr()
    assert rc == 0
    assert "sweep node eta=0.0 failed" in cap.err
    # the bad node is dropped, the other two still produce rows
    assert len(cap.out.strip().split("\n")) == 1 + 2 * 4


@pytest.mark.parametrize("argv,fragment", [
    (["compute", "--eta", "1"], "--family is required"),
    (["compute", "--family", "charlier", "--b", "0.5"], "--eta is required"),
    (["sweep", "--family", "charlier", "--b", "0.5"],
     "sweep requires --eta-min, --eta-max, --eta-steps"),
    (["compute", *CHARLIER, "--variant", "Meixner-Main"],
     "does not apply to charlier"),
    (["verify", *CHARLIER, "--suite", "pearson", "--sabotage"],
     "needs the routes suite"),
    (["verify", *CHARLIER, "--suite", "routes", "--n", "4", "--sabotage"],
     "needs --n > 5"),
    (["compute", *CHARLIER, "--prec", "64"],
     "precision below 128 bits is not supported"),
    (["compute", *CHARLIER, "--route", "both"], "--out is required"),
    (["compute", *CHARLIER, "--variant", "bogus"], "unknown variant"),
    (["compute", *CHARLIER, "--n", "-1"], "--n must be nonnegative"),
    (["compute", "--family", "charlier", "--b", "-2", "--eta", "1"],
     "b > -1 violated"),
])
def test_config_errors_exit_two(capsys, argv, fragment):
    rc = cli.main(argv)
    cap = capsys.readouterr()
    assert rc == 2
    assert fragment in cap.err
    assert cap.err.startswith("lfcheck: error:")


def test_env_precision_fallback(monkeypatch, capsys):
    monkeypatch.setenv("LFCHECK_PREC_BITS", "abc")
    assert cli.main(["compute", *CHARLIER, "--n", "2"]) == 2
    assert "LFCHECK_PREC_BITS must be an integer" in capsys.readouterr().err

    monkeypatch.setenv("LFCHECK_PREC_BITS", "96")
    assert cli.main(["compute", *CHARLIER, "--n", "2"]) == 2
    capsys.readouterr()

    monkeypatch.setenv("LFCHECK_PREC_BITS", "256")
    rc = cli.main(["compute", *CHARLIER, "--n", "2", "--format", "json"])
    doc = json.loads(capsys.readouterr().out)
    assert rc == 0
    assert doc["config"]["prec_bits"] == 256

    # an explicit flag beats the environment
    monkeypatch.setenv("LFCHECK_PREC_BITS", "96")
    rc = cli.main(["compute", *CHARLIER, "--n", "2", "--prec", "256"])
    assert rc == 0
    capsys.readouterr()
