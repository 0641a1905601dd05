import json
import subprocess
import sys

import jsonschema
import pytest

from tpmke.cli import load_schema, main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_builtin(capsys, tmp_path):
    out = tmp_path / "t.jsonl"
    code, stdout, _ = run(["simulate", "--scenario", "um-handshake", "--seed", "3", "--out", str(out)], capsys)
    assert code == 0 and "equal" in stdout
    schema = load_schema("transcript-event")
    for line in out.read_text().splitlines():
        jsonschema.validate(json.loads(line), schema)


def test_simulate_json_and_determinism(capsys, tmp_path):
    paths = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
    outs = []
    for p in paths:
        code, stdout, _ = run(["simulate", "--scenario", "mixed-backing", "--seed", "8",
                               "--out", str(p), "--format", "json"], capsys)
        assert code == 0
        outs.append(stdout)
    assert outs[0] == outs[1]
    assert paths[0].read_bytes() == paths[1].read_bytes()
    doc = json.loads(outs[0])
    assert doc["consistent"] and len(doc["sessions"]) == 3


def test_simulate_profile_override(capsys):
    code, stdout, _ = run(["simulate", "--scenario", "sm2-handshake", "--seed", "1",
                           "--profile", "software-mixed", "--curve", "P-256"], capsys)
    assert code == 0


def test_simulate_malformed_scenario(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"parties": [{"id": "a", "backing": "quantum"}], "script": []}')
    code, _, err = run(["simulate", "--scenario", str(bad), "--seed", "1"], capsys)
    assert code == 2 and "invalid scenario" in err
    bad.write_text("{not json")
    assert run(["simulate", "--scenario", str(bad), "--seed", "1"], capsys)[0] == 2
    assert run(["simulate", "--scenario", "no-such-thing", "--seed", "1"], capsys)[0] == 2


def test_simulate_scenario_referencing_unknown_party(capsys, tmp_path):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({
        "parties": [{"id": "a", "backing": "software"}],
        "script": [{"op": "handshake", "scheme": "UM", "initiator": "a", "responder": "ghost"}]}))
    assert run(["simulate", "--scenario", str(f), "--seed", "1"], capsys)[0] == 2


def test_simulate_requires_seed(capsys):
    with pytest.raises(SystemExit) as e:
        main(["simulate"])
    assert e.value.code == 2


def test_attack_default_matrix(capsys, tmp_path):
    out = tmp_path / "m.json"
    code, _, err = run(["attack", "--seed", "0", "--out", str(out)], capsys)
    assert code == 0, err
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, load_schema("matrix"))
    assert doc["diff"] == [] and len(doc["rows"]) == 10


def test_attack_single_filter_table(capsys):
    code, stdout, _ = run(["attack", "--seed", "0", "--attack", "um-kci", "--format", "table"], capsys)
    assert code == 0
    assert len(stdout.strip().splitlines()) == 3


def test_attack_unknown_name(capsys):
    assert run(["attack", "--seed", "0", "--attack", "nope"], capsys)[0] == 2
    assert run(["attack", "--seed", "0", "--profile", "nope"], capsys)[0] == 2


def test_attack_mismatch_exits_one(capsys, monkeypatch):
    from tpmke import adversary
    patched = {k: dict(v) for k, v in adversary.EXPECTED_MATRIX.items()}
    patched["um-kci"]["software-mixed"] = "failed:keys-differ"
    monkeypatch.setattr(adversary, "EXPECTED_MATRIX", patched)
    code, _, err = run(["attack", "--seed", "0", "--attack", "um-kci"], capsys)
    assert code == 1 and "um-kci @ software-mixed" in err


def test_entropy_toy_no_gate(capsys, tmp_path):
    out, running = tmp_path / "e.csv", tmp_path / "r.csv"
    code, _, _ = run(["entropy", "--curve", "toy", "--n", "2048", "--depth", "12",
                      "--out", str(out), "--running", str(running)], capsys)
    assert code == 0
    assert out.read_text().startswith("curve,function,estimator")
    assert len(running.read_text().splitlines()) == 1 + 3 * 2


def test_entropy_json_validates(capsys):
    code, stdout, _ = run(["entropy", "--curve", "toy", "--n", "1024", "--depth", "8",
                           "--format", "json"], capsys)
    assert code == 0
    jsonschema.validate(json.loads(stdout), load_schema("entropy-report"))


def test_entropy_usage_errors(capsys):
    assert run(["entropy", "--curve", "P-999"], capsys)[0] == 2
    assert run(["entropy", "--curve", "toy", "--function", "md5"], capsys)[0] == 2
    assert run(["entropy", "--curve", "toy", "--n", "1"], capsys)[0] == 2


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tpmke.cli", "attack", "--seed", "1",
                           "--attack", "xu-1", "--format", "table"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "xu-1" in proc.stdout
