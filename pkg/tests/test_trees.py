import numpy as np
import pytest

from relax_eisner.trees import (
    DomainError,
    ShapeError,
    arcs_to_matrix,
    check_weights,
    heads_to_matrix,
    is_projective,
    is_valid_tree,
    mask_weights,
    matrix_to_heads,
    tree_score,
    uas,
    valid_arc_mask,
)


def test_heads_roundtrip():
    heads = np.array([2, 0, 2, 3])
    t = heads_to_matrix(heads)
    assert t.shape == (5, 5)
    assert np.array_equal(matrix_to_heads(t), heads)
    assert np.array_equal(t, arcs_to_matrix([(2, 1), (0, 2), (2, 3), (3, 4)], 4))


def test_valid_tree_rejects_cycles_and_root_heads():
    assert is_valid_tree(heads_to_matrix([0, 1, 2]))
    assert not is_valid_tree(heads_to_matrix([2, 1, 0]))  # 1 <-> 2 cycle
    t = heads_to_matrix([0, 1])
    t[1, 0] = 1
    assert not is_valid_tree(t)
    t = heads_to_matrix([0, 1])
    t[0, 2] = 1
    assert not is_valid_tree(t)  # two heads for word 2


def test_projectivity():
    assert is_projective(heads_to_matrix([2, 0, 2]))
    # arcs 2->4 and 1->3 cross
    assert not is_projective(heads_to_matrix([0, 4, 1, 1]))
    assert is_projective(heads_to_matrix([3, 1, 0]))
    # 3 -> 1 spans word 2, which is the head of 3
    assert not is_projective(heads_to_matrix([3, 0, 2]))


def test_mask_and_checks():
    mask = valid_arc_mask(2)
    assert mask.sum() == 4 and not mask[:, 0].any() and not mask.diagonal().any()
    w = mask_weights(np.ones((3, 3)))
    assert w[1, 1] == -1e9 and w[0, 1] == 1
    with pytest.raises(ShapeError):
        check_weights(np.zeros((2, 3)))
    with pytest.raises(ShapeError):
        check_weights(np.zeros((1, 1)))
    with pytest.raises(DomainError):
        check_weights(np.array([[0, np.nan], [0, 0]]))


def test_score_and_uas():
    w = np.arange(9.0).reshape(3, 3)
    assert tree_score(heads_to_matrix([2, 0]), w) == w[2, 1] + w[0, 2]
    assert uas([2, 0, 2], [2, 0, 1]) == pytest.approx(2 / 3)
    with pytest.raises(ShapeError):
        uas([0], [0, 1])
