import json
import subprocess
import sys

import pytest

from kripke_blend.cli import main
from kripke_blend.frames import Frame

FORK_JSON = json.dumps(Frame.fork(2).to_json())


@pytest.fixture
def fork_file(tmp_path):
    path = tmp_path / "fork.json"
    path.write_text(FORK_JSON)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def run_json(capsys, *argv):
    code, out = run(capsys, *argv, "--format", "json")
    return code, json.loads(out.out)


def test_dejongh_certificate(capsys):
    code, out = run_json(capsys, "dejongh", "--logic", "ipc", "--formula", "p | ~p", "--bound", "4")
    assert code == 0
    assert out["verdict"] == "certificate"
    assert out["correspondence"]["ok"]
    assert out["failing_node"] == 0


def test_dejongh_theorem(capsys):
    code, out = run_json(capsys, "dejongh", "--logic", "ipc", "--formula", "p -> p", "--bound", "3")
    assert code == 0 and out["verdict"] == "not-refuted-up-to-bound"


def test_valid_countermodel(capsys, fork_file):
    code, out = run_json(capsys, "valid", "--frame", fork_file, "--formula", "(p->q)|(q->p)")
    assert code == 0
    assert out["verdict"] == "countermodel"
    assert out["countermodel"]["node"] == 0


def test_blend_budget_error(capsys, fork_file):
    code, out = run(capsys, "blend", "--frame", fork_file, "--universes", "3,4", "--rank", "9")
    assert code == 2
    assert "budget" in out.err


def test_budget_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("KRIPKE_BLEND_BUDGET", "10")
    code, _ = run(capsys, "blend", "--frame", "fork:2", "--universes", "2,2", "--rank", "3")
    assert code == 2
    monkeypatch.delenv("KRIPKE_BLEND_BUDGET")
    code, out = run_json(capsys, "blend", "--frame", "fork:2", "--universes", "2,2", "--rank", "2")
    assert code == 0


def test_blend_sizes(capsys):
    code, out = run_json(capsys, "blend", "--frame", "fork:2", "--universes", "2,2", "--rank", "2",
                         "--formula", "exists x . forall y in x . bot")
    assert code == 0
    assert out["domain_sizes"] == {"0": [0, 1, 5], "1": [0, 1, 2], "2": [0, 1, 2]}
    assert out["condition_violations"] == 0 and out["truth_set"] == [0, 1, 2]


def test_usage_errors(capsys):
    assert main(["no-such-verb"]) == 2
    assert main(["parse"]) == 2
    assert main(["parse", "--formula", "p &"]) == 2
    assert main(["frame", "--frame", "parents:-,-"]) == 2
    assert main(["chi", "--frame", "fork:2", "--universes", "2,2"]) == 2
    capsys.readouterr()


@pytest.mark.parametrize("argv", [
    ["parse", "--formula", "p -> q | r"],
    ["parse", "--set", "--formula", "forall x in y . x = x"],
    ["frame", "--frame", "chain:3"],
    ["force", "--frame", "fork:2", "--valuation", '{"p": [1]}', "--formula", "p | ~p"],
    ["axiom", "--logic", "bd(2)"],
    ["logic-member", "--logic", "lc", "--formula", "(p -> q) | (q -> p)", "--bound", "4"],
    ["universe", "--k", "3", "--formula", "exists x . forall y . ~ y in x"],
    ["psi", "--n", "3"],
    ["psi", "--n", "6", "--frame", "fork:2", "--check"],
    ["chi", "--frame", "fork:2"],
    ["faithful", "--frame", "fork:2", "--valuation", '{"p": [1], "q": [1, 2]}'],
    ["izf-check", "--frame", "fork:2", "--universes", "3,3", "--rank", "3", "--axiom", "pairing"],
    ["em-demo"],
])
def test_verbs_succeed(capsys, argv):
    code, out = run(capsys, *argv)
    assert code == 0, out.err
    assert out.out.strip()
    code, out = run_json(capsys, *argv)
    assert code == 0


def test_failed_verdict_exit_code(capsys):
    code, _ = run(capsys, "izf-check", "--frame", "fork:2", "--universes", "3,3", "--rank", "3",
                  "--axiom", "separation", "--formula", "x in b")
    assert code == 0
    code, out = run_json(capsys, "logic-member", "--logic", "ipc", "--formula", "p | ~p", "--bound", "3")
    assert code == 0 and out["verdict"] == "countermodel"


def test_json_is_byte_stable():
    argv = [sys.executable, "-m", "kripke_blend.cli", "dejongh", "--logic", "lc",
            "--formula", "((p -> q) -> p) -> p", "--format", "json", "--seed", "3"]
    first = subprocess.run(argv, capture_output=True, check=True).stdout
    second = subprocess.run(argv, capture_output=True, check=True).stdout
    assert first == second and first.startswith(b"{")


def test_selftest_subset(capsys):
    code, out = run(capsys, "selftest", "--only", "9", "2")
    assert code == 0
    assert "[PASS]  9." in out.out and "2/2 criteria passed" in out.out
