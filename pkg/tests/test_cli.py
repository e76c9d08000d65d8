import json

import numpy as np
import pytest

from relax_eisner.cli import main, ordered_map, worker_count

from test_fileio import CONLLU


@pytest.fixture
def files(tmp_path):
    zero = tmp_path / "zero.json"
    zero.write_text('{"n":2,"weights":[[0,0,0],[0,0,0],[0,0,0]]}')
    peaked = tmp_path / "peaked.json"
    peaked.write_text('{"n":2,"weights":[[0,0,10],[0,0,0],[0,10,0]]}')
    gold = tmp_path / "gold.conllu"
    gold.write_text(CONLLU * 3)
    pred = tmp_path / "pred.conllu"
    pred.write_text(CONLLU.replace("\t2\tnsubj", "\t0\tnsubj").replace("\t0\troot", "\t1\troot") + CONLLU * 2)
    return {"zero": str(zero), "peaked": str(peaked), "gold": str(gold), "pred": str(pred)}


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_logz(capsys, files):
    code, out = run(capsys, "logz", "--weights", files["zero"])
    assert code == 0 and out.out.strip() == "1.09861229"


def test_parse_hard_and_soft(capsys, files):
    code, out = run(capsys, "parse", "--hard", "--weights", files["peaked"])
    assert code == 0 and out.out.strip() == "2 0"
    code, out = run(capsys, "parse", "--tau", "0.5", "--weights", files["peaked"])
    doc = json.loads(out.out)
    assert doc["n"] == 2 and doc["tau"] == 0.5 and doc["matrix"][0][2] == 1


def test_sample_is_replayable(capsys, files):
    _, a = run(capsys, "sample", "--weights", files["zero"], "--seed", "4")
    _, b = run(capsys, "sample", "--weights", files["zero"], "--seed", "4")
    assert a.out == b.out and json.loads(a.out)["seed"] == 4
    code, out = run(capsys, "sample", "--weights", files["zero"], "--seed", "4", "--hard")
    assert code == 0 and len(out.out.split()) == 2


def test_marginals_entropy_oracle(capsys, files):
    _, out = run(capsys, "marginals", "--weights", files["zero"])
    assert json.loads(out.out)["matrix"][0][1] == pytest.approx(2 / 3, abs=1e-9)
    _, out = run(capsys, "entropy", "--weights", files["zero"])
    assert out.out.strip() == "1.09861229"
    _, out = run(capsys, "entropy", "--kl", "--weights", files["zero"])
    assert abs(float(out.out)) < 1e-10
    code, out = run(capsys, "oracle", "--weights", files["peaked"], "--samples", "200")
    lines = dict(line.split(" ", 1) for line in out.out.strip().splitlines())
    assert code == 0 and lines["count"] == "3" and lines["best"] == "2 0" and lines["score"] == "20"
    assert 0 <= float(lines["perturb_tv"]) <= 1


def test_gradcheck(capsys):
    code, out = run(capsys, "gradcheck", "--n", "5", "--seed", "7", "--tau", "1")
    rel = float(out.out.split("max_rel_err")[1])
    assert code == 0 and rel < 1e-5


def test_conll(capsys, files):
    code, out = run(capsys, "conll", "stats", "--file", files["gold"])
    assert code == 0 and "sentences 3" in out.out and "projective_rate 1" in out.out
    code, out = run(capsys, "conll", "uas", "--pred", files["pred"], "--gold", files["gold"])
    assert code == 0 and "uas 0.666666667" in out.out


def test_demo_and_elbo(capsys, files):
    code, out = run(capsys, "demo", "recover", "--n", "4", "--seed", "2")
    assert code == 0 and "recovered 1/1" in out.out
    code, out = run(capsys, "elbo", "--weights", files["peaked"], "--seed", "1")
    assert code == 0 and out.out.startswith("elbo ")


def test_bench_runs(capsys):
    code, out = run(capsys, "bench", "--sizes", "4,8", "--repeat", "2")
    assert code in (0, 1) and "ratio 4->8" in out.out


def test_exit_codes(capsys, files, tmp_path):
    assert run(capsys, "logz", "--bogus")[0] == 2
    assert run(capsys, "nosuch")[0] == 2
    assert run(capsys, "gradcheck", "--n", "0", "--seed", "1", "--tau", "1")[0] == 2
    assert run(capsys, "parse", "--tau", "-1", "--weights", files["zero"])[0] == 2
    assert run(capsys, "logz", "--weights", str(tmp_path / "missing.json"))[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"n":2,"weights":[[0,0],[0,0,0],[0,0,0]]}')
    code, out = run(capsys, "logz", "--weights", str(bad))
    assert code == 1 and "row 0" in out.err


def test_ordered_map_preserves_order(monkeypatch):
    monkeypatch.setenv("RELAX_EISNER_THREADS", "4")
    assert worker_count() >= 1
    assert ordered_map(lambda x: x * x, range(50)) == [x * x for x in range(50)]
    monkeypatch.setenv("RELAX_EISNER_THREADS", "1")
    assert worker_count() == 1


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "relax_eisner", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "gradcheck" in proc.stdout
