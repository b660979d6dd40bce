import json
import shutil
import subprocess

import pytest

from dragonshare.chessboard import PartitionAllocation
from dragonshare.core import Cut
from dragonshare.cli import EXIT_INCONCLUSIVE, EXIT_INVALID, EXIT_OK, EXIT_VERIFY, SEED_ENV, main
from dragonshare.scenarios import piece_values
from dragonshare.valuations import ValuationProfile, random_profile


@pytest.fixture
def write(tmp_path):
    def _write(name, obj):
        path = tmp_path / name
        path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(path)
    return _write


def solve(write, tmp_path, cfg, name="out.json"):
    out = tmp_path / name
    code = main(["solve", "--config", write("cfg.json", cfg), "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_piece_grab_uniform(write, tmp_path):
    cfg = {"scenario": "piece-grab", "r": 2, "profile": ValuationProfile.uniform(1).to_json()}
    code, doc = solve(write, tmp_path, cfg)
    assert code == EXIT_OK and doc["status"] == "ok"
    assert doc["cut"][0] == pytest.approx(0.5, abs=1e-9)
    assert doc["classical"]["cut"] == pytest.approx([0.5], abs=1e-9)
    assert doc["params"]["seed"] == doc["seed"] == 42


def test_profile_by_path(write, tmp_path):
    write("prof.json", ValuationProfile.uniform(1).to_json())
    code, doc = solve(write, tmp_path, {"scenario": "kkm", "profile": "prof.json"})
    assert code == EXIT_OK and doc["cut"] == pytest.approx([0.5], abs=1e-9)


def test_lemma_violation(write, tmp_path, capsys):
    code, doc = solve(write, tmp_path, {"scenario": "lemma", "family": {"n": 3, "sets": [[1, 2], [1, 2]]}})
    assert code == EXIT_INVALID and doc == {"status": "violated", "witness": [1, 2]}
    assert "witness [1, 2]" in capsys.readouterr().err


def test_lemma_subcommand(write, capsys):
    assert main(["lemma", "--in", write("fam.json", {"n": 3, "sets": [[1, 2], [2, 3]]})]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["edges"] == [[1, 2], [2, 3]]


def test_malformed_json(write, capsys):
    assert main(["solve", "--config", write("cfg.json", "{not json")]) == EXIT_INVALID
    assert "invalid JSON at line 1" in capsys.readouterr().err


def test_player_count_checked(write, tmp_path):
    cfg = {"scenario": "piece-grab", "r": 3, "profile": ValuationProfile.uniform(1).to_json()}
    assert solve(write, tmp_path, cfg)[0] == EXIT_INVALID


def test_inconclusive_search(write, tmp_path):
    cfg = {"scenario": "kkm", "profile": random_profile(1, 3).to_json(), "params": {"budget": 50, "tol": 1e-30}}
    code, doc = solve(write, tmp_path, cfg)
    assert code == EXIT_INCONCLUSIVE and doc["status"] == "inconclusive"
    assert doc["best"]["residual"] > 0


def test_seed_from_environment(write, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(SEED_ENV, "7")
    cfg = {"scenario": "piece-grab", "profile": ValuationProfile.uniform(1).to_json()}
    code, doc = solve(write, tmp_path, cfg)
    assert code == EXIT_OK and doc["seed"] == 7
    assert "seed 7" in capsys.readouterr().err


def test_bad_seed_in_environment(write, tmp_path, monkeypatch):
    monkeypatch.setenv(SEED_ENV, "x")
    cfg = {"scenario": "piece-grab", "profile": ValuationProfile.uniform(1).to_json()}
    assert solve(write, tmp_path, cfg)[0] == EXIT_INVALID


class TestVerify:
    @pytest.fixture
    def result(self, write, tmp_path):
        prof = random_profile(2, 2, "signed").to_json()
        code, doc = solve(write, tmp_path, {"scenario": "piece-grab", "profile": prof})
        assert code == EXIT_OK
        return doc, write("prof.json", prof)

    def test_passing_result(self, result, write, capsys):
        doc, prof = result
        assert main(["verify", "--result", write("res.json", doc), "--profile", prof]) == EXIT_OK
        assert "min margin" in capsys.readouterr().err

    def test_tampered_assignment(self, result, write, capsys):
        doc, prof = result
        vals = piece_values(ValuationProfile.from_json(json.loads(open(prof).read())),
                            PartitionAllocation(Cut(tuple(doc["cut"])), tuple(doc["alloc"])))
        # swap the two players' boxes in the outcome where the swap hurts someone most
        def loss(o):
            m = o["assignment"]["map"]
            return min(vals[m["2"] - 1, 0] - vals[:, 0].max(), vals[m["1"] - 1, 1] - vals[:, 1].max())

        k = min(range(len(doc["outcomes"])), key=lambda i: loss(doc["outcomes"][i]))
        assert loss(doc["outcomes"][k]) < -1e-6
        m = doc["outcomes"][k]["assignment"]["map"]
        m["1"], m["2"] = m["2"], m["1"]
        assert main(["verify", "--result", write("bad.json", doc), "--profile", prof]) == EXIT_VERIFY
        assert f"outcome dragon={doc['outcomes'][k]['dragon']}" in capsys.readouterr().err

    def test_exact_ties_pass_at_zero_tolerance(self, write, tmp_path):
        prof = ValuationProfile.uniform(1).to_json()
        code, doc = solve(write, tmp_path, {"scenario": "piece-grab", "profile": prof})
        assert code == EXIT_OK
        args = ["verify", "--result", write("res.json", doc), "--profile", write("p.json", prof), "--tol", "0"]
        assert main(args) == EXIT_OK

    def test_profile_taken_from_config(self, result, write, tmp_path):
        doc, prof = result
        cfg = write("c.json", {"scenario": "piece-grab", "profile": "prof.json"})
        assert main(["verify", "--result", write("res.json", doc), "--profile", cfg]) == EXIT_OK


def test_rerun_is_byte_identical(write, tmp_path):
    cfg = {"scenario": "player-swallow", "profile": random_profile(4, 3, "signed").to_json()}
    path = write("cfg.json", cfg)
    outs = []
    for k in range(2):
        out = tmp_path / f"o{k}.json"
        assert main(["solve", "--config", path, "--out", str(out)]) == EXIT_OK
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


@pytest.mark.skipif(shutil.which("dragonshare") is None, reason="console script not installed")
def test_console_script(write):
    cfg = write("cfg.json", {"scenario": "piece-grab", "profile": ValuationProfile.uniform(1).to_json()})
    proc = subprocess.run(["dragonshare", "solve", "--config", cfg], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["status"] == "ok"
