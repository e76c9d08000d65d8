import json

import numpy as np
import pytest

from relax_eisner.fileio import FormatError, dumps_matrix_record, load_weights, read_conllu, save_weights
from relax_eisner.trees import ShapeError

CONLLU = """# sent_id = 1
# text = Dogs bark
1\tDogs\tdog\tNOUN\t_\t_\t2\tnsubj\t_\t_
2\tbark\tbark\tVERB\t_\t_\t0\troot\t_\t_

"""


def test_load_basic(tmp_path):
    f = tmp_path / "w.json"
    f.write_text('{"n":1,"weights":[[0,2.5],[0,0]]}')
    w = load_weights(f)
    assert w[0, 1] == 2.5 and w[1, 1] == -1e9 and w[0, 0] == -1e9


def test_load_errors(tmp_path):
    f = tmp_path / "w.json"
    f.write_text('{"n":2,"weights":[[0,1,2],[0,1],[0,1,2]]}')
    with pytest.raises(FormatError, match="row 1"):
        load_weights(f)
    f.write_text('{"n":2,"weights":[[0,1,2],[0,1,2]]}')
    with pytest.raises(ShapeError):
        load_weights(f)
    f.write_text('{"n":1,\n"weights": [[0,1],[0,0]')
    with pytest.raises(FormatError, match="line 2"):
        load_weights(f)
    f.write_text('{"n":0,"weights":[[0]]}')
    with pytest.raises(FormatError):
        load_weights(f)


def test_save_load_roundtrip(tmp_path, rng):
    w = rng.standard_normal((6, 6))
    w[np.eye(6, dtype=bool)] = -1e9
    w[:, 0] = -1e9
    f = tmp_path / "w.json"
    save_weights(f, w)
    assert np.array_equal(load_weights(f), w)


def test_matrix_record_is_json():
    doc = json.loads(dumps_matrix_record({"n": 1, "tau": 0.5, "seed": 3}, "matrix", [[0, 1 / 3], [0, 0]]))
    assert doc["tau"] == 0.5 and doc["seed"] == 3 and doc["matrix"][0][1] == 0.333333333


def test_conllu_fixture(tmp_path):
    f = tmp_path / "a.conllu"
    f.write_text(CONLLU)
    (s,) = read_conllu(f)
    assert s.tokens == ["Dogs", "bark"] and s.gold_heads == [2, 0]


def test_conllu_comments_only(tmp_path):
    f = tmp_path / "a.conllu"
    f.write_text("# nothing\n# here\n")
    assert read_conllu(f) == []


def test_conllu_skips_ranges_and_empty_nodes(tmp_path):
    f = tmp_path / "a.conllu"
    f.write_text(
        "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "1\tde\t_\t_\t_\t_\t0\t_\t_\t_\n"
        "2\tel\t_\t_\t_\t_\t1\t_\t_\t_\n"
        "2.1\tx\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "3\tgato\t_\t_\t_\t_\t1\t_\t_\t_\n"
    )
    (s,) = read_conllu(f)
    assert s.tokens == ["de", "el", "gato"] and s.gold_heads == [0, 1, 1]


def test_conllu_errors(tmp_path):
    f = tmp_path / "a.conllu"
    f.write_text("1\tx\t_\n")
    with pytest.raises(FormatError, match=":1:"):
        read_conllu(f)
    f.write_text("1\tx\t_\t_\t_\t_\t0\t_\t_\t_\n2\ty\t_\t_\t_\t_\t7\t_\t_\t_\n")
    with pytest.raises(FormatError, match="'y'"):
        read_conllu(f)
