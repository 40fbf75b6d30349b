import json
import subprocess
import sys

import numpy as np
import pytest

from histkit.cli import main
from histkit.queries import evaluate
from histkit.scenario_file import ScenarioError, dump_scenario, parse_scenario, scenario_document
from histkit.scenarios import DEMOS, three_box


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    return code, json.loads(out)


def test_demo_spin_half(capsys):
    code, rep = run_json(capsys, "demo", "spin-half")
    assert code == 0 and rep["status"] == "pass"
    probs = rep["result"]["results"][0]["result"]["probabilities"]
    assert probs["z_up"] == pytest.approx(0.5, abs=1e-12)
    assert probs["z_down"] == pytest.approx(0.5, abs=1e-12)
    assert rep["tolerances"]["eps_decoherence"] == 1e-9
    assert "version" in rep and "elapsed_s" in rep


@pytest.mark.parametrize("name", [*DEMOS, "ks"])
def test_demos_pass(capsys, name):
    code, _, _ = run(capsys, "demo", name)
    assert code == 0


def test_export_then_check(tmp_path, capsys):
    path = tmp_path / "two-slit.json"
    assert run(capsys, "export-demo", "two-slit", "-o", str(path))[0] == 0
    code, rep = run_json(capsys, "check", str(path), "--family", "twotimes")
    assert code == 1 and rep["result"]["passed"] is False
    assert run(capsys, "check", str(path), "--family", "t1")[0] == 0
    assert run(capsys, "check", str(path), "--family", "t1t2", "--mode", "weak")[0] == 0


def test_color(capsys):
    code, rep = run_json(capsys, "color", "--rays", "cabello18.rays")
    assert code == 1 and rep["result"]["sat"] is False
    assert rep["result"]["stats"]["nodes"] > 0
    code, rep = run_json(capsys, "color", "--rays", "cabello18", "--mode", "exhaustive")
    assert code == 1
    code, rep = run_json(capsys, "color", "--rays", "spin1-chain", "--enumerate")
    assert code == 0 and rep["result"]["homomorphism"]["passed"]
    assert rep["result"]["solution_count"] > 0


def test_color_user_file(tmp_path, capsys):
    path = tmp_path / "t.rays"
    path.write_text("ray a 1 0 0\nray b 0 1 0\nray c 0 0 1\nbasis a b c\n")
    code, rep = run_json(capsys, "color", "--rays", str(path), "--enumerate")
    assert code == 0 and rep["result"]["solution_count"] == 3


def test_prob_and_implies(tmp_path, capsys):
    path = tmp_path / "tb.json"
    path.write_text(dump_scenario(three_box()))
    code, rep = run_json(capsys, "prob", str(path), "--family", "fam1", "--history", "@1:10;@2:10")
    assert code == 0 and rep["result"]["p"] == pytest.approx(1 / 9, abs=1e-12)
    code, rep = run_json(capsys, "prob", str(path), "--family", "fam1")
    assert sum(rep["result"]["probabilities"].values()) == pytest.approx(1.0)
    code, rep = run_json(capsys, "implies", str(path), "--family", "fam1", "--a", "@2:10", "--b", "@1:10;@2:10")
    assert code == 0 and rep["result"]["verdict"] == "holds"
    code, rep = run_json(capsys, "implies", str(path), "--family", "fam1", "--a", "@2:10", "--b", "@1:01;@2:10")
    assert code == 1 and rep["result"]["verdict"] == "fails"


def test_usage_and_contract_errors(tmp_path, capsys):
    assert run(capsys, "demo", "nonsense")[0] == 2
    assert run(capsys)[0] == 2
    code, out, err = run(capsys, "check", "two-slit", "--family", "ghost")
    assert code == 2 and "ghost" in err
    code, out, err = run(capsys, "prob", "three-box", "--family", "fam1", "--history", "@1:Z")
    assert code == 2 and "'Z'" in err
    assert run(capsys, "check", str(tmp_path / "missing.json"), "--family", "x")[0] == 2
    assert run(capsys, "color", "--rays", "nowhere.rays")[0] == 2


def test_single_family_violation_exit(capsys):
    code, out, err = run(capsys, "implies", "three-box", "--family", "fam1", "--a", "@2:10",
                         "--b", "@1:10;@2:10", "--b-family", "fam2", "--format", "json")
    rep = json.loads(out)
    assert code == 2
    assert rep["error"] == "SingleFamilyViolation"
    assert "not a coarse-graining of family 'fam1'" in err


def test_eps_flag_and_env(capsys, monkeypatch):
    monkeypatch.setenv("HISTKIT_EPS_DECOHERENCE", "1e-5")
    code, rep = run_json(capsys, "demo", "spin-half")
    assert rep["tolerances"]["eps_decoherence"] == 1e-5
    code, rep = run_json(capsys, "demo", "spin-half", "--eps", "1e-7")
    assert rep["tolerances"]["eps_decoherence"] == 1e-7
    code, rep = run_json(capsys, "demo", "spin-half", "--eps", "-1")
    assert code == 2


@pytest.mark.parametrize("name", list(DEMOS))
def test_round_trip_bit_identical(name):
    s = DEMOS[name]()
    text = dump_scenario(s)
    back = parse_scenario(text)
    assert json.dumps(evaluate(back)) == json.dumps(evaluate(s))
    assert dump_scenario(back) == text


def test_mask_spec_in_file_matches_hand_built():
    s = parse_scenario(dump_scenario(three_box()))
    from histkit.queries import parse_mask_spec
    h = parse_mask_spec("@1:10;@2:10", s.family("fam1"))
    phi = np.array([1, 1, -1]) / np.sqrt(3)
    assert np.allclose(h.projectors[0], np.diag([1, 0, 0]))
    assert np.allclose(h.projectors[1], np.outer(phi, phi))


def minimal_doc():
    return {
        "dimension": 3,
        "state": {"density": [[1 / 3, 0, 0], [0, 1 / 3, 0], [0, 0, 1 / 3]]},
        "decompositions": {"d": {"members": [
            {"label": "a", "diagonal": [1, 0, 0]},
            {"label": "b", "diagonal": [0, 1, 0]},
            {"label": "c", "diagonal": [0, 0, 1]}]}},
        "families": {"f": {"slices": [1.0], "decompositions": ["d"]}},
    }


def test_negative_control_residual():
    doc = minimal_doc()
    doc["decompositions"]["d"]["members"][2]["diagonal"] = [0, 0, 0.9]
    with pytest.raises(ScenarioError, match=r"decompositions\.d.*completeness residual 0\.1,.*threshold 1e-10"):
        parse_scenario(json.dumps(doc))


def test_parse_validation_messages():
    doc = minimal_doc()
    doc["state"] = {"density": [[0.5, 0, 0], [0, 0.5, 0], [0, 0, 0.5]]}
    with pytest.raises(ScenarioError, match=r"state\.density.*trace defect 0\.5"):
        parse_scenario(json.dumps(doc))
    doc = minimal_doc()
    doc["families"]["f"]["dynamics"] = [[[1, 0, 0], [0, 1, 0], [0, 0, 2]]]
    with pytest.raises(ScenarioError, match=r"families\.f\.dynamics\[0\]: unitarity residual 3"):
        parse_scenario(json.dumps(doc))
    doc = minimal_doc()
    doc["dynamics"] = {"hamiltonian": [[0, 1, 0], [0, 0, 0], [0, 0, 0]]}
    with pytest.raises(ScenarioError, match="hermiticity residual 1"):
        parse_scenario(json.dumps(doc))
    doc = minimal_doc()
    doc["families"]["f"]["decompositions"] = ["zz"]
    with pytest.raises(ScenarioError, match="'zz'"):
        parse_scenario(json.dumps(doc))
    with pytest.raises(ScenarioError, match="JSON"):
        parse_scenario("{nope")


def test_span_and_complex_literals():
    doc = minimal_doc()
    doc["state"] = {"vector": [1, [0, 1], 0]}
    doc["decompositions"]["d"]["members"] = [
        {"label": "ab", "span": [[1, 0, 0], [0, 1, 0]]},
        {"label": "c", "projector": [[0, 0, 0], [0, 0, 0], [0, 0, 1]]}]
    s = parse_scenario(json.dumps(doc))
    assert np.allclose(s.initial_state[0, 1], -0.5j)
    assert s.family("f").decomps[0].labels == ("ab", "c")


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "histkit.cli", "demo", "spin-half", "--format", "json"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["status"] == "pass"
