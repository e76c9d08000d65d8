import numpy as np
import pytest

from relax_eisner.backward import backward_buffers, backward_relaxed, grad_check, marginals, marginals_jvp
from relax_eisner.chart import log_partition, relaxed_eisner
from relax_eisner.oracle import oracle_marginals
from relax_eisner.trees import ShapeError, tree_score

from conftest import random_weights


def soft_loss(G, tau):
    return lambda w: float(np.sum(G * relaxed_eisner(w, tau).tree))


def test_n1_gradient_is_zero():
    p = relaxed_eisner(np.array([[0.0, 0.4], [0.0, 0.0]]), 1.0)
    assert np.array_equal(backward_relaxed(p.chart, p.contrib, np.ones((2, 2))), np.zeros((2, 2)))


def test_gradient_matches_finite_differences(rng):
    for _ in range(15):
        n = int(rng.integers(2, 7))
        tau = float(rng.choice([0.5, 1.0, 2.0]))
        w, G = random_weights(rng, n), random_weights(rng, n)
        p = relaxed_eisner(w, tau)
        rep = grad_check(soft_loss(G, tau), backward_relaxed(p.chart, p.contrib, G), w)
        assert rep.passed(1e-5), rep


@pytest.mark.xfail(
    strict=True,
    reason="the chart keeps the root on the left, so at zero weights the three n=2 "
    "derivations get weights 1/2, 1/4, 1/4 and the soft tree is not swap-symmetric",
)
def test_swap_symmetry():
    perm = np.array([0, 2, 1])
    G = np.array([[0.0, 0.7, 0.7], [0.0, 0.0, -1.3], [0.0, -1.3, 0.0]])
    assert np.array_equal(G[np.ix_(perm, perm)], G)
    p = relaxed_eisner(np.zeros((3, 3)), 1.0)
    dW = backward_relaxed(p.chart, p.contrib, G)
    assert np.max(np.abs(dW[np.ix_(perm, perm)] - dW)) < 1e-12


def test_zero_weight_derivation_weights():
    t = relaxed_eisner(np.zeros((3, 3)), 1.0).tree
    # chain 0->1->2 with 1/2, chain 0->2->1 with 1/4, star with 1/4
    assert np.allclose(t, [[0, 0.75, 0.5], [0, 0, 0.5], [0, 0.25, 0]], atol=1e-15)


def test_marginals_are_swap_symmetric():
    perm = np.array([0, 2, 1])
    mu = marginals(np.zeros((3, 3)))
    assert np.max(np.abs(mu[np.ix_(perm, perm)] - mu)) < 1e-12


def test_backward_validates_inputs():
    p = relaxed_eisner(np.zeros((3, 3)), 1.0)
    with pytest.raises(ShapeError):
        backward_relaxed(p.chart, p.contrib, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        backward_relaxed(p.chart, p.contrib, np.full((3, 3), np.nan))
    _, lchart = log_partition(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        backward_relaxed(lchart, p.contrib, np.zeros((3, 3)))


def test_buffers_are_exposed():
    p = relaxed_eisner(np.eye(4), 1.0)
    buf = backward_buffers(p.chart, p.contrib, np.ones((4, 4)))
    assert buf.dc.shape == (4, 4, 4) and buf.db.shape == p.chart.b.shape


def test_marginal_examples(rng):
    assert marginals(np.zeros((2, 2)))[0, 1] == pytest.approx(1.0, abs=1e-15)
    assert marginals(np.zeros((3, 3)))[0, 1] == pytest.approx(2 / 3, abs=1e-15)
    for n in range(1, 7):
        w = random_weights(rng, n, 2.0)
        assert np.max(np.abs(marginals(w) - oracle_marginals(w))) < 1e-8


def test_logz_gradient_finite_differences(rng):
    for n in range(2, 7):
        w = random_weights(rng, n)
        rep = grad_check(lambda x: log_partition(x)[0], marginals(w), w)
        assert rep.passed(1e-6), rep


def test_jvp_matches_finite_differences(rng):
    w, v = random_weights(rng, 5), random_weights(rng, 5)
    mu, mu_dot = marginals_jvp(w, v)
    h = 1e-5
    numeric = (marginals(w + h * v) - marginals(w - h * v)) / (2 * h)
    assert np.allclose(mu, marginals(w), atol=1e-14)
    assert np.max(np.abs(mu_dot - numeric)) < 1e-8


def test_grad_check_linear_function_is_exact(rng):
    T = relaxed_eisner(random_weights(rng, 4), 1.0).tree
    w = random_weights(rng, 4)
    rep = grad_check(lambda x: tree_score(T, x), T, w)
    assert rep.max_rel_err < 1e-9


def test_grad_check_names_bad_coordinate():
    def f(w):
        return np.inf if w[1, 2] > 0.5 else 0.0

    with pytest.raises(FloatingPointError, match=r"\(1, 2\)"):
        grad_check(f, np.zeros((3, 3)), np.full((3, 3), 0.5))
