import io
import json
from fractions import Fraction as F

import pytest

from conftest import SYSTEMS_DIR
from ctxlab.cli import run_cli
from ctxlab.contextuality import decide_contextual
from ctxlab.generators import GeneratorSpec, gen_system, pr_box
from ctxlab.io import Report, parse_hvm, parse_system, serialize_system, verdict_to_dict

PR = str(SYSTEMS_DIR / "pr-box.sys")
CLASSICAL = str(SYSTEMS_DIR / "classical-corr.sys")
INCONSISTENT = str(SYSTEMS_DIR / "inconsistent-contextual.sys")


def run(*argv):
    out = io.StringIO()
    report, code = run_cli(list(argv), stdout=out)
    return report, code, out.getvalue()


def test_decide_pr_box_identity_exit_10():
    report, code, text = run("decide", PR, "--rule", "identity")
    assert code == 10 and report.exit_code == 10
    assert report.verdicts[0]["status"] == "Contextual"
    assert report.certificates
    assert Report.from_text(text) == report.from_dict(report.to_dict())


def test_decide_noncontextual_exit_0():
    report, code, _ = run("decide", CLASSICAL, "--traditional")
    assert code == 0 and report.verdicts[0]["status"] == "Noncontextual"


def test_verify_equivalence_random_file(tmp_path):
    path = tmp_path / "random.sys"
    path.write_text(serialize_system(gen_system(GeneratorSpec(seed=3, max_contexts=4))))
    report, code, _ = run("verify-equivalence", str(path), "--rule", "comonotonic")
    assert code == 0
    assert report.details["disagreements"] == 0 and report.verdicts[0]["agree"]


def test_verify_equivalence_batch_parallel():
    serial, code, _ = run("verify-equivalence", "--count", "12", "--seed", "4")
    parallel, code2, _ = run("verify-equivalence", "--count", "12", "--seed", "4", "--jobs", "2")
    assert code == code2 == 0
    strip = lambda rows: [{k: v for k, v in r.items() if k != "seconds"} for r in rows]
    assert strip(serial.verdicts) == strip(parallel.verdicts)


def test_consistency_is_informational():
    report, code, _ = run("consistency", INCONSISTENT)
    assert code == 0
    assert report.details["consistently_connected"] is False
    assert ["q1", "c1", "c2"] in report.details["violations"]


def test_text_and_json_agree():
    _, _, text = run("decide", PR, "--format", "text")
    _, _, js = run("decide", PR, "--format", "json")
    a, b = Report.from_text(text).to_dict(), Report.from_json(js).to_dict()
    for r in (a, b):
        r["timing"], r["command"] = {}, []
        for v in r["verdicts"]:
            v.pop("seconds")
    assert a == b


def test_cli_matches_library():
    report, _, _ = run("decide", INCONSISTENT, "--format", "json")
    direct = verdict_to_dict(decide_contextual(parse_system(open(INCONSISTENT).read())))
    got = report.verdicts[0]
    got.pop("seconds"), direct.pop("seconds")
    assert json.loads(json.dumps(got)) == json.loads(json.dumps(direct))


def test_input_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.sys"
    bad.write_text("[contents]\n1 : 0 1\n[contexts]\na : 1\n[bunches]\ncontext a\n0 : 1/0\n")
    report, code, _ = run("decide", str(bad))
    assert code == 2 and "line 7" in report.details["error"]
    assert run("decide", str(tmp_path / "missing.sys"))[1] == 2
    assert run("decide", INCONSISTENT, "--traditional")[1] == 2
    assert run("decide", INCONSISTENT, "--rule", "identity")[1] == 2
    assert run("gen", "bell-state")[1] == 2


def test_guard_exit_3():
    report, code, _ = run("decide", PR, "--full", "--max-columns", "10")
    assert code == 3 and "guard" in report.details["error"]
    assert run("oracle", PR, "--max-assignments", "10")[1] == 3


def test_oracle_command():
    assert run("oracle", PR, "--rule", "identity")[1] == 10
    assert run("oracle", CLASSICAL)[1] == 0


def test_constrained_decision():
    report, code, _ = run("decide", str(SYSTEMS_DIR / "constrained-classical.sys"), "--constrained")
    assert code == 0 and report.verdicts[0]["rule"] == "constrained"


def test_validate_and_marginals():
    report, code, _ = run("validate", str(SYSTEMS_DIR / "constrained-classical.sys"))
    assert code == 0 and report.details["constraint_contents"] == ["1", "2"]
    report, code, _ = run("marginals", PR)
    assert report.details["connections"]["1"]["4"] == {"0": F(1, 2), "1": F(1, 2)}


def test_consistify_writes_file(tmp_path):
    out = tmp_path / "cons.sys"
    report, code, _ = run("consistify", PR, "--out", str(out))
    assert code == 0 and report.details["consistently_connected"]
    cons = parse_system(out.read_text())
    assert len(cons.contents) == 8 and len(cons.contexts) == 8
    assert run("decide", str(out), "--traditional")[1] == 10


def test_hvm_command(tmp_path):
    out = tmp_path / "model.hvm"
    report, code, _ = run("hvm", CLASSICAL, "--rule", "identity", "--out", str(out))
    assert code == 0 and report.details["reproduces"]
    assert not parse_hvm(out.read_text()).context_dependent
    report, code, _ = run("hvm", PR)
    assert code == 10 and report.details["diagnostic"]


def test_gen_command(tmp_path):
    _, code, text = run("gen", "pr-box")
    assert code == 0 and parse_system(text) == pr_box()
    out = tmp_path / "r.sys"
    run("gen", "--seed", "9", "--consistency", "consistent", "--out", str(out))
    spec = GeneratorSpec(seed=9, consistency="consistent")
    assert out.read_text() == serialize_system(gen_system(spec))


def test_report_command(tmp_path):
    report, code, _ = run("report", "--count", "6", "--grid", "4", "--out", str(tmp_path))
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["corpus.csv", "corpus.png", "noise_sweep.csv", "noise_sweep.png"]
    assert report.details["noise_boundary"] == ["3/4"]
    assert (tmp_path / "noise_sweep.png").read_bytes()[:4] == b"\x89PNG"


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        run_cli(["decide"])
    assert exc.value.code == 2
