import json
import subprocess
import sys

import pytest

from tilekit.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    assert code == 0, err
    return json.loads(out)


def test_tile_digit(capsys):
    code, out, _ = run(capsys, "tile-digit", "--base", "4", "--digits", "0,1,8,9")
    assert code == 0
    assert "verdict: ACCEPT" in out and "blocking: [2,16]" in out
    doc = run_json(capsys, "tile-digit", "--base", "4", "--digits", "0,1,4,5")
    assert doc["verdict"] == "REJECT" and doc["certificate"]["uncovered_path"] == [4, 16]
    assert set(doc) == {"command", "inputs", "verdict", "certificate", "elapsed_ms"}


def test_integer_tile(capsys):
    doc = run_json(capsys, "integer-tile", "--digits", "0,1,4,5")
    assert doc["verdict"] == "YES"
    assert doc["certificate"]["complement"] == [0, 2] and doc["certificate"]["period"] == 8
    doc = run_json(capsys, "integer-tile", "--digits", "0,1,2,4")
    assert doc["verdict"] == "NO" and doc["certificate"]["reason"] == "T1 fails"


def test_spectrum_singleton(capsys):
    doc = run_json(capsys, "spectrum", "--digits", "0")
    assert doc["certificate"]["full"] == [] and doc["certificate"]["prime_power"] == []
    code, out, _ = run(capsys, "spectrum", "--digits", "0")
    assert "full: []" in out and "prime_power: []" in out


def test_count(capsys):
    doc = run_json(capsys, "count", "--base", "4", "--digits", "0,1,4,5", "--K", "3")
    assert doc["verdict"] == "FAIL(k=2)" and doc["certificate"]["counts"] == [4, 12]
    doc = run_json(capsys, "count", "--matrix", "2,0;0,2", "--digits", "0,0;1,0;0,1;1,1", "--K", "2")
    assert doc["verdict"] == "PASS(2)" and doc["certificate"]["counts"] == [4, 16]


def test_kernel(capsys):
    doc = run_json(capsys, "kernel", "--type", "II", "--p", "2", "--q", "3", "--m", "2", "--n", "1", "--ell", "1", "--notation", "p2q")
    assert doc["certificate"]["blocking_nodes"] == [2, 3, 6, 12, 16, 48]
    assert doc["certificate"]["canonical"] == [0, 1, 8, 9, 16, 17, 24, 25, 32, 33, 40, 41]
    doc = run_json(capsys, "kernel", "--type", "pq", "--p", "2", "--q", "3", "--n", "2")
    assert doc["certificate"]["polynomial"] == "Phi_2(x) Phi_9(x^4)"


def test_phi_tree(capsys):
    code, out, _ = run(capsys, "phi-tree", "--base", "4", "--depth", "2")
    assert code == 0
    assert out.splitlines()[1:] == ["2", "  8", "4", "  16"]


def test_classify_and_construct_round_trip(capsys, tmp_path):
    digits = "0,1,8,9,16,17,24,25,32,33,40,41"
    code, report, _ = run(capsys, "classify", "--base", "12", "--digits", digits, "--json")
    assert code == 0
    doc = json.loads(report)
    assert doc["verdict"] == "ACCEPT" and doc["certificate"]["order"] == 2
    chain_file = tmp_path / "chain.json"
    chain_file.write_text(report)
    built = run_json(capsys, "construct", "--chain-file", str(chain_file))
    assert built["certificate"]["digits"] == doc["certificate"]["chain"]["result"]
    assert json.dumps(built["certificate"]["chain"], sort_keys=True) == json.dumps(doc["certificate"]["chain"], sort_keys=True)

    # a bare chain document and the text format give the same set
    bare = tmp_path / "bare.json"
    bare.write_text(json.dumps(built["certificate"]["chain"]))
    assert run_json(capsys, "construct", "--chain-file", str(bare))["certificate"]["digits"] == built["certificate"]["digits"]
    code, text, _ = run(capsys, "construct", "--chain-file", str(chain_file))
    chain_txt = tmp_path / "chain.txt"
    chain_txt.write_text(text[text.index("base 12"):])
    again = run_json(capsys, "construct", "--chain-file", str(chain_txt))
    assert again["certificate"]["digits"] == built["certificate"]["digits"]
    assert again["certificate"]["form"] == "order-k" and again["verdict"] == "ACCEPT"


def test_deterministic_output(capsys):
    args = ("classify", "--base", "6", "--digits", "0,1,12,13,24,25")
    first = run(capsys, *args)
    assert first == run(capsys, *args)


@pytest.mark.parametrize(
    "argv,flag",
    [
        (["tile-digit", "--base", "4", "--digits", "0,1,2"], "--digits"),
        (["tile-digit", "--base", "4", "--digits", "0,x"], "--digits"),
        (["tile-digit", "--base", "1", "--digits", "0"], "--base"),
        (["classify", "--base", "30", "--digits", ",".join(map(str, range(30)))], "--base"),
        (["kernel", "--type", "II", "--p", "2", "--q", "3", "--alpha", "2", "--n", "1", "--m", "0", "--ell", "5"], "--ell"),
        (["construct", "--chain-file", "/nonexistent/chain.txt"], "--chain-file"),
        (["count", "--digits", "0,1"], "--base"),
        (["tile-digit", "--digits", "0,1"], "--base"),
    ],
)
def test_usage_errors_name_the_flag(capsys, argv, flag):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert flag in err


@pytest.mark.parametrize(
    "text",
    [
        "base 12\nstage E={0,1} l=0 n=3\nstage E={0,2,4,6,8,10} l=0\n",
        "base 4\nstage E={0,1} l=0\nstage E={0,1} l=0\n",
        "base 6\nstage E={0,1} l=0\nstage E={0,3,6} l=0\n",
    ],
)
def test_invalid_chain_is_a_usage_error(capsys, tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    code, _, err = run(capsys, "construct", "--chain-file", str(path))
    assert code == 2 and "--chain-file" in err


def test_budget_error_exit_code(capsys, monkeypatch):
    monkeypatch.setenv("TILEKIT_BUDGET_MB", "0.01")
    code, _, err = run(capsys, "count", "--base", "4", "--digits", "0,1,2,3", "--K", "9")
    assert code == 3 and "budget" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "tilekit", "tile-digit", "--base", "4", "--digits", "0,1,8,9", "--json"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["certificate"]["blocking"] == [2, 16]
