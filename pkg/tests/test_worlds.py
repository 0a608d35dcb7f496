import copy
import csv
import io
import json

import pytest

from alignkit.errors import InputError, SpecError, UnknownScenarioError
from alignkit.worlds import (
    Report,
    WorldSpec,
    build_world,
    builtin_scenario,
    emit_spec,
    input_digest,
    list_scenarios,
    load_world,
    parse_spec,
    render_csv,
    render_json,
)

MINIMAL = {
    "version": 1,
    "name": "copy-b",
    "domains": {"b": {"values": [0, 1]}},
    "scms": {
        "f": {
            "variables": [
                {"name": "A", "domain": "b", "cpt": [[0.5, 0.5]]},
                {"name": "B", "domain": "b", "parents": ["A"], "cpt": [[0.9, 0.1], [0.2, 0.8]]},
            ]
        }
    },
    "channels": {
        "alpha": {
            "sources": [{"name": "A", "domain": "b"}, {"name": "B", "domain": "b"}],
            "targets": [{"name": "M", "domain": "b"}],
            "map": [[0], [1], [0], [1]],
        }
    },
    "scenario": {"factor_scm": "f", "alpha": "alpha", "interpretable": ["B"]},
}


def _doc(**patch):
    doc = copy.deepcopy(MINIMAL)
    for path, value in patch.items():
        node = doc
        *head, last = path.split("__")
        for key in head:
            node = node[int(key)] if isinstance(node, list) else node[key]
        node[last] = value
    return json.dumps(doc)


def _diagnostics(text):
    with pytest.raises(SpecError) as exc_info:
        parse_spec(text)
    return exc_info.value.diagnostics


def test_minimal_spec_resolves():
    world = load_world(_doc())
    sys = world.gm_system()
    assert sys.factors == ("A", "B")
    assert sys.targets == ("M",)
    assert world.scm().names == ("A", "B")
    assert world.block_structure() is None


def test_builtin_catalogue():
    names = list_scenarios()
    assert names == [
        "identity-toy",
        "shuffle-toy",
        "onehot-toy",
        "dsprites-toy",
        "dsprites-ood",
        "cat-dog",
        "temp-color",
        "fail-abstraction",
        "pass-abstraction",
    ]
    with pytest.raises(UnknownScenarioError) as exc_info:
        builtin_scenario("mnist")
    assert exc_info.value.available == names


@pytest.mark.parametrize("name", list_scenarios())
def test_builtins_validate_and_round_trip(name):
    spec = builtin_scenario(name)
    text = emit_spec(spec)
    reparsed = parse_spec(text)

    assert reparsed == spec
    assert emit_spec(reparsed) == text
    assert parse_spec(text.encode("utf-8")) == spec
    assert input_digest(reparsed) == input_digest(spec)


def test_digests_differ_between_worlds():
    assert input_digest(builtin_scenario("identity-toy")) != input_digest(builtin_scenario("shuffle-toy"))


def test_spec_from_path(tmp_path):
    path = tmp_path / "world.json"
    path.write_text(_doc(), encoding="utf-8")
    assert parse_spec(path).name == "copy-b"
    with pytest.raises(InputError):
        parse_spec(tmp_path / "missing.json")


def test_syntax_errors_carry_line_and_column():
    (diag,) = _diagnostics('{\n  "version": 1,\n  oops\n}')
    assert diag.kind == "syntax"
    assert diag.location == "line 3, column 3"


def test_non_utf8_bytes():
    (diag,) = _diagnostics(b'{"name": "\xff"}')
    assert diag.kind == "syntax"


def test_schema_errors():
    diags = _diagnostics(json.dumps({"version": 2, "bogus": True}))
    assert {d.kind for d in diags} == {"schema"}
    assert {d.location for d in diags} == {"version", "bogus"}

    (diag,) = _diagnostics(_doc(channels__alpha__table=[[1.0, 0.0]] * 4))
    assert diag.location == "channels.alpha"
    assert "exactly one" in diag.message


def test_unknown_domain_is_a_reference_error():
    (diag,) = _diagnostics(_doc(scms__f__variables__0__domain="tern"))
    assert diag.kind == "reference"
    assert diag.location == "scms.f.variables[0].domain"


def test_row_mass_is_reported_with_its_location():
    (diag,) = _diagnostics(_doc(scms__f__variables__0__cpt=[[0.5, 0.51]]))
    assert diag.kind == "invariant"
    assert diag.location == "scms.f.cpts.A.rows[0]"
    assert "1.01" in diag.message


def test_all_problems_are_reported_together():
    doc = json.loads(_doc(scms__f__variables__0__cpt=[[0.5, 0.51]]))
    doc["channels"]["alpha"]["map"][0] = [7]
    diags = _diagnostics(json.dumps(doc))
    assert [d.location for d in diags] == ["scms.f.cpts.A.rows[0]", "channels.alpha"]
    assert "7" in diags[1].message


def test_scenario_references_and_bindings():
    (diag,) = _diagnostics(_doc(scenario__factor_scm="g"))
    assert (diag.kind, diag.location) == ("reference", "scenario.factor_scm")

    (diag,) = _diagnostics(_doc(scenario__interpretable=["Z"]))
    assert (diag.kind, diag.location) == ("binding", "scenario.interpretable")

    doc = json.loads(_doc())
    doc["blocks"] = {"b": {"source_partition": [[0], [1]], "target_partition": [[0], [1]], "pi": [0, 1]}}
    doc["scenario"]["blocks"] = "b"
    (diag,) = _diagnostics(json.dumps(doc))
    assert (diag.kind, diag.location) == ("binding", "scenario.blocks")


def test_missing_roles():
    world = build_world(builtin_scenario("identity-toy"))
    with pytest.raises(InputError) as exc_info:
        world.leakage_scenario()
    assert exc_info.value.reason == "missing role"
    with pytest.raises(InputError):
        world.abstraction_case()


def test_abstraction_case_defaults_to_singletons():
    spec = builtin_scenario("pass-abstraction")
    spec = spec.model_copy(update={"scenario": spec.scenario.model_copy(update={"blocks": None})})
    case = build_world(spec).abstraction_case()
    assert case.blocks.pi == [0, 1]


def test_world_spec_defaults():
    spec = WorldSpec()
    assert spec.version == 1
    assert emit_spec(spec) == '{\n  "version": 1,\n  "domains": {},\n  "scms": {},\n  "channels": {},\n  "blocks": {},\n  "distributions": {},\n  "scenario": {}\n}\n'


def test_json_report_decorates_named_floats():
    report = Report(
        version="0.1.0",
        command="demo",
        sections={"demo": {"score": 0.1, "values": [0.25, 0.5], "flag": True}},
    )
    document = json.loads(render_json(report))
    assert document["tool"] == "alignkit"
    assert document["sections"]["demo"]["score"] == {"value": 0.1, "sig12": "0.1"}
    assert document["sections"]["demo"]["values"] == [0.25, 0.5]
    assert document["sections"]["demo"]["flag"] is True
    assert "timings" not in document


def test_csv_report_shapes():
    matrix = Report(
        version="0.1.0",
        command="disentangle",
        sections={"empida": {"factors": ["G1"], "targets": ["M1", "M2"], "matrix": [[0.0, 0.5]]}},
    )
    rows = list(csv.reader(io.StringIO(render_csv(matrix))))
    assert rows == [["factor", "M1", "M2"], ["G1", "0.0", "0.5"]]

    flat = Report(version="0.1.0", command="leakage", sections={"leakage": {"lambda": 0.25, "keep": ["a", "b"]}})
    rows = list(csv.reader(io.StringIO(render_csv(flat))))
    assert rows == [["key", "value"], ["leakage.lambda", "0.25"], ["leakage.keep", "a b"]]
