import json

import pytest

from alignkit import __version__
from alignkit.cli import main
from alignkit.worlds import builtin_scenario, emit_spec, input_digest, list_scenarios


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _json(capsys, *argv):
    code, out, _ = _run(capsys, *argv)
    return code, json.loads(out)


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(["--version"])
    assert exc_info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_scenario_list_and_emit(capsys):
    code, out, _ = _run(capsys, "scenario", "list")
    assert code == 0
    assert out.splitlines() == list_scenarios()

    code, out, _ = _run(capsys, "scenario", "emit", "cat-dog")
    assert code == 0
    assert out == emit_spec(builtin_scenario("cat-dog"))


def test_emitted_spec_validates(capsys, tmp_path):
    path = tmp_path / "temp-color.json"
    assert main(["scenario", "emit", "temp-color", "--out", str(path)]) == 0

    code, report = _json(capsys, "validate", "--spec", str(path))
    assert code == 0
    assert report["command"] == "validate"
    assert report["input_digest"] == input_digest(builtin_scenario("temp-color"))
    validation = report["sections"]["validation"]
    assert validation["valid"] is True
    assert validation["scms"]["factors"]["order"] == ["temp", "color"]


def test_invalid_spec_exits_with_input_error(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"version": 1,', encoding="utf-8")
    code, out, err = _run(capsys, "validate", "--spec", str(path))

    assert code == 2
    assert "error: syntax at line 1" in err
    validation = json.loads(out)["sections"]["validation"]
    assert validation["valid"] is False
    assert validation["diagnostics"][0]["kind"] == "syntax"


def test_unknown_scenario(capsys):
    code, out, err = _run(capsys, "align", "--scenario", "mnist")
    assert code == 2
    assert out == ""
    assert err.startswith("error: unknown scenario")


def test_missing_input(capsys):
    code, _, err = _run(capsys, "joint")
    assert code == 2
    assert "missing input" in err


def test_joint_and_intervene(capsys):
    code, report = _json(capsys, "joint", "--scenario", "temp-color", "--scm", "machine")
    assert code == 0
    joint = report["sections"]["joint"]
    assert joint["scope"] == ["m_celsius", "m_hue", "m_fahrenheit"]
    assert sum(e["p"]["value"] for e in joint["entries"]) == pytest.approx(1.0)

    code, report = _json(capsys, "intervene", "--scenario", "pass-abstraction", "--do", "H1=1", "--query", "H2")
    assert code == 0
    section = report["sections"]["interventional"]
    assert section["intervention"] == "do(H1=1)"
    assert [e["p"]["value"] for e in section["entries"]] == pytest.approx([0.1, 0.9])


def test_bad_intervention_text(capsys):
    code, _, err = _run(capsys, "intervene", "--scenario", "pass-abstraction", "--do", "H1")
    assert code == 2
    assert "invalid intervention" in err


def test_disentangle_verdicts(capsys):
    code, report = _json(capsys, "disentangle", "--scenario", "shuffle-toy", "--assert-disentangled")
    assert code == 0
    empida = report["sections"]["empida"]
    assert empida["factors"] == ["G1", "G2"]
    assert empida["verdict"]["verdict"] is True
    assert empida["matrix"][0][0] == pytest.approx(0.0, abs=1e-12)

    code, report = _json(
        capsys, "disentangle", "--scenario", "identity-toy", "--content", "G1", "--target", "M1"
    )
    assert code == 0
    assert report["sections"]["content_style"]["separated"] is True


def test_disentangle_csv(capsys):
    code, out, _ = _run(capsys, "disentangle", "--scenario", "identity-toy", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "factor,M1,M2"
    assert lines[1].startswith("G1,")
    assert len(lines) == 3


def test_align_exit_codes(capsys):
    code, report = _json(capsys, "align", "--scenario", "identity-toy", "--assert-aligned")
    assert code == 0
    assert report["sections"]["alignment"]["aligned"] is True
    assert report["sections"]["block_alignment"]["aligned"] is True

    code, report = _json(capsys, "align", "--scenario", "shuffle-toy", "--assert-aligned")
    assert code == 1
    assert report["sections"]["alignment"]["d1_ok"] is True
    assert report["sections"]["alignment"]["aligned"] is False


def test_align_with_dci(capsys):
    code, report = _json(capsys, "align", "--scenario", "identity-toy", "--dci-lambda", "0")
    assert code == 0
    assert report["sections"]["isolation"]["ok"] is True
    dci = report["sections"]["alignment"]["dci"]
    assert dci["informativeness"]["value"] == pytest.approx(1.0, abs=1e-6)


def test_leakage_threshold(capsys):
    code, report = _json(
        capsys, "leakage", "--scenario", "cat-dog", "--keep", "fur,tail", "--assert-leakage-below", "1e-6"
    )
    assert code == 0
    leakage = report["sections"]["leakage"]
    assert leakage["lambda"]["value"] <= 1e-6
    assert leakage["keep"] == ["fur", "tail"]
    assert report["sections"]["style"] == ["g_snout"]

    code, report = _json(capsys, "leakage", "--scenario", "cat-dog", "--assert-leakage-below", "0.1")
    assert code == 1
    assert report["sections"]["leakage"]["lambda"]["value"] == pytest.approx(0.4946, abs=1e-4)


def test_leakage_needs_a_label(capsys):
    code, _, err = _run(capsys, "leakage", "--scenario", "identity-toy")
    assert code == 2
    assert "missing role" in err


def test_leakage_without_convergence_exits_with_numerical_error(capsys):
    code, out, err = _run(capsys, "leakage", "--scenario", "dsprites-ood", "--max-iter", "1", "--tol", "0")
    assert code == 3
    assert "error: not converged" in err
    leakage = json.loads(out)["sections"]["leakage"]
    assert leakage["converged"] is False
    assert leakage["iterations"] == 1


def test_repeated_coordinates_are_input_errors(capsys):
    code, out, err = _run(capsys, "leakage", "--scenario", "cat-dog", "--keep", "fur,fur")
    assert code == 2
    assert out == ""
    assert err.startswith("error: repeated coordinates")

    code, out, err = _run(capsys, "intervene", "--scenario", "pass-abstraction", "--do", "H1=1", "--query", "H2,H2")
    assert code == 2
    assert out == ""
    assert err.startswith("error: repeated variables")


def test_abstraction_exit_codes(capsys):
    code, report = _json(capsys, "abstraction", "--scenario", "pass-abstraction", "--assert-commutes")
    assert code == 0
    assert report["sections"]["abstraction"]["overall"] is True

    code, report = _json(capsys, "abstraction", "--scenario", "fail-abstraction", "--assert-commutes")
    assert code == 1
    worst = report["sections"]["abstraction"]["worst"]
    assert worst["tv_discrepancy"]["value"] == pytest.approx(0.4)
    assert worst["tv_discrepancy"]["sig12"] == "0.4"


SCENARIO_COMMANDS = {
    "identity-toy": ["align", "--dci-lambda", "0"],
    "shuffle-toy": ["align"],
    "onehot-toy": ["align"],
    "dsprites-toy": ["leakage"],
    "dsprites-ood": ["leakage"],
    "cat-dog": ["leakage", "--keep", "fur,tail"],
    "temp-color": ["disentangle"],
    "fail-abstraction": ["abstraction"],
    "pass-abstraction": ["abstraction"],
}


def test_every_scenario_has_a_report_command():
    assert sorted(SCENARIO_COMMANDS) == sorted(list_scenarios())


@pytest.mark.parametrize("name", list_scenarios())
def test_reports_are_byte_identical(tmp_path, name):
    command, *extra = SCENARIO_COMMANDS[name]
    first, second = tmp_path / "a" / "report.json", tmp_path / "b" / "report.json"
    for path in (first, second):
        assert main([command, "--scenario", name, *extra, "--out", str(path)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_timings_are_opt_in(capsys):
    _, report = _json(capsys, "joint", "--scenario", "identity-toy")
    assert "timings" not in report
    _, report = _json(capsys, "joint", "--scenario", "identity-toy", "--timings")
    assert "joint" in report["timings"]
