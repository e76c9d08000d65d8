"""Command-line interface.

Exit codes: 0 on success, 1 when an input fails validation (or a checked
property does not hold), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .backward import grad_check, backward_relaxed, marginals
from .bench import BUDGET_N80, RATIO_TARGET, RATIO_TOL, run_bench
from .chart import hard_eisner, log_partition, relaxed_eisner
from .demo import random_projective_tree, recover
from .elbo import StubDecoder, tree_entropy, tree_kl_to_uniform, unsup_elbo_estimate
from .fileio import FormatError, dumps_matrix_record, fmt, load_weights, read_conllu
from .oracle import enumerate_projective, oracle_best, oracle_logZ
from .stochastic import GaussianParams, child_seed, make_rng, perturb_and_parse_hard, perturb_and_parse_relaxed
from .trees import DomainError, ShapeError, heads_to_matrix, is_projective, is_valid_tree, matrix_to_heads

THREADS_ENV = "RELAX_EISNER_THREADS"


def _heads_line(t) -> str:
    return " ".join(str(h) for h in matrix_to_heads(t))


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return v


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _sizes(text: str) -> list[int]:
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"sizes must be comma-separated integers, got {text!r}")
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError("sizes must be positive")
    return sizes


def worker_count() -> int:
    cap = os.environ.get(THREADS_ENV)
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


def ordered_map(fn, items):
    """``map`` over a thread pool; results come back in input order."""
    items = list(items)
    workers = min(worker_count(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def cmd_parse(args) -> int:
    w = load_weights(args.weights)
    n = w.shape[0] - 1
    if args.hard:
        print(_heads_line(hard_eisner(w)[0]))
    else:
        tree = relaxed_eisner(w, args.tau).tree
        print(dumps_matrix_record({"n": n, "tau": args.tau}, "matrix", tree))
    return 0


def cmd_sample(args) -> int:
    w = load_weights(args.weights)
    n = w.shape[0] - 1
    if args.hard:
        print(_heads_line(perturb_and_parse_hard(w, args.seed)))
    else:
        tree = perturb_and_parse_relaxed(w, args.tau, args.seed).tree
        print(dumps_matrix_record({"n": n, "tau": args.tau, "seed": args.seed}, "matrix", tree))
    return 0


def cmd_logz(args) -> int:
    print(fmt(log_partition(load_weights(args.weights))[0]))
    return 0


def cmd_marginals(args) -> int:
    w = load_weights(args.weights)
    print(dumps_matrix_record({"n": w.shape[0] - 1}, "matrix", marginals(w)))
    return 0


def cmd_entropy(args) -> int:
    w = load_weights(args.weights)
    print(fmt(tree_kl_to_uniform(w) if args.kl else tree_entropy(w)))
    return 0


def _perturb_tv(w, samples: int, seed: int) -> float:
    ts = enumerate_projective(w.shape[0] - 1)
    index = {tuple(h): k for k, h in enumerate(ts.heads)}
    counts = np.zeros(len(ts))
    for s in range(samples):
        counts[index[tuple(matrix_to_heads(perturb_and_parse_hard(w, child_seed(seed, s))))]] += 1
    scores = w[ts.heads, np.arange(1, ts.n + 1)[None, :]].sum(axis=1)
    p = np.exp(scores - oracle_logZ(w))
    return float(0.5 * np.abs(counts / samples - p).sum())


def cmd_oracle(args) -> int:
    w = load_weights(args.weights)
    n = w.shape[0] - 1
    best = oracle_best(w)
    print(f"count {len(enumerate_projective(n))}")
    print(f"logz {fmt(oracle_logZ(w))}")
    print(f"best {_heads_line(best.tree)}")
    print(f"score {fmt(best.score)}")
    print(f"tied {'yes' if best.tied else 'no'}")
    if args.samples:
        if n > 4:
            raise DomainError("sampler bias is only reported for n <= 4")
        print(f"perturb_tv {fmt(_perturb_tv(w, args.samples, args.seed))}")
    return 0


def cmd_gradcheck(args) -> int:
    worst_abs = worst_rel = 0.0
    for trial in range(args.trials):
        rng = make_rng(child_seed(args.seed, trial))
        w = rng.standard_normal((args.n + 1, args.n + 1))
        G = rng.standard_normal((args.n + 1, args.n + 1))
        p = relaxed_eisner(w, args.tau)
        grad = backward_relaxed(p.chart, p.contrib, G)
        rep = grad_check(lambda x: float(np.sum(G * relaxed_eisner(x, args.tau).tree)), grad, w, h=args.h)
        worst_abs = max(worst_abs, rep.max_abs_err)
        worst_rel = max(worst_rel, rep.max_rel_err)
    print(f"trials {args.trials}")
    print(f"max_abs_err {fmt(worst_abs)}")
    print(f"max_rel_err {fmt(worst_rel)}")
    return 0 if worst_rel < args.rtol else 1


def _heads_of(sent):
    return np.asarray(sent.gold_heads, dtype=np.int64)


def _sentence_flags(sent) -> tuple[bool, bool]:
    t = heads_to_matrix(_heads_of(sent))
    valid = is_valid_tree(t)
    return valid, valid and is_projective(t)


def cmd_conll_stats(args) -> int:
    sents = read_conllu(args.file)
    flags = ordered_map(_sentence_flags, sents)
    count = len(sents)
    valid = sum(v for v, _ in flags)
    proj = sum(p for _, p in flags)
    print(f"sentences {count}")
    print(f"tokens {sum(s.n for s in sents)}")
    print(f"invalid_trees {count - valid}")
    print(f"projective_rate {fmt(proj / count if count else 0.0)}")
    return 0


def cmd_conll_uas(args) -> int:
    pred, gold = read_conllu(args.pred), read_conllu(args.gold)
    if len(pred) != len(gold):
        raise ShapeError(f"{len(pred)} predicted sentences but {len(gold)} gold sentences")

    def score(pair):
        k, (p, g) = pair
        if p.n != g.n:
            raise ShapeError(f"sentence {k}: {p.n} predicted tokens but {g.n} gold tokens")
        return int(np.sum(_heads_of(p) == _heads_of(g))), g.n

    results = ordered_map(score, enumerate(zip(pred, gold)))
    correct = sum(c for c, _ in results)
    total = sum(t for _, t in results)
    print(f"sentences {len(gold)}")
    print(f"tokens {total}")
    print(f"uas {fmt(correct / total if total else 0.0)}")
    return 0


def cmd_demo_recover(args) -> int:
    hits = 0
    for trial in range(args.trials):
        target = random_projective_tree(args.n, child_seed(args.seed, 0, trial))
        res = recover(target, child_seed(args.seed, 1, trial), steps=args.steps, lr=args.lr, tau=args.tau)
        hits += res.recovered
        if args.trials == 1:
            print(f"target {_heads_line(target)}")
            print(f"parse {_heads_line(hard_eisner(res.weights)[0])}")
            print(f"steps {res.steps}")
            print(f"overlap {fmt(res.overlap)}")
    print(f"recovered {hits}/{args.trials}")
    return 0


def cmd_bench(args) -> int:
    report = run_bench(args.sizes, tau=args.tau, seed=args.seed, repeat=args.repeat)
    print("n ms_per_sentence sentences_per_second")
    for row in report.rows:
        print(f"{row.n} {fmt(row.seconds * 1e3)} {fmt(row.per_second)}")
    lo, hi = RATIO_TARGET * (1 - RATIO_TOL), RATIO_TARGET * (1 + RATIO_TOL)
    for a, b, r in report.ratios():
        status = "ok" if lo <= r <= hi else "FAIL"
        print(f"ratio {a}->{b} {fmt(r)} {status}")
    if any(r.n == 80 for r in report.rows):
        print(f"budget n=80 {'ok' if report.budget_ok() else 'FAIL'} (limit {fmt(BUDGET_N80 * 1e3)} ms)")
    return 0 if report.scaling_ok() and report.budget_ok() else 1


def cmd_elbo(args) -> int:
    w = load_weights(args.weights)
    rng = make_rng(child_seed(args.seed, 2))
    decoder = StubDecoder(rng.standard_normal(w.shape), rng.standard_normal(args.dim), 0.0)
    gparams = GaussianParams(np.zeros(args.dim), np.ones(args.dim))
    est = unsup_elbo_estimate(w, gparams, decoder, args.tau, args.seed, args.beta_z, args.beta_t)
    print(f"elbo {fmt(est.value)}")
    print(f"grad_norm {fmt(float(np.linalg.norm(est.dW)))}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relax-eisner", description="Differentiable projective dependency parsing.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="hard or relaxed parse of a weight file")
    p.add_argument("--weights", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--tau", type=_positive, default=1.0)
    g.add_argument("--hard", action="store_true")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("sample", help="perturb-and-parse sample")
    p.add_argument("--weights", required=True)
    p.add_argument("--seed", type=_u64, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--tau", type=_positive, default=1.0)
    g.add_argument("--hard", action="store_true")
    p.set_defaults(func=cmd_sample)

    for name, func, text in [
        ("logz", cmd_logz, "log-partition function"),
        ("marginals", cmd_marginals, "arc marginals"),
        ("entropy", cmd_entropy, "entropy of the tree distribution"),
    ]:
        p = sub.add_parser(name, help=text)
        p.add_argument("--weights", required=True)
        if name == "entropy":
            p.add_argument("--kl", action="store_true", help="print the KL divergence to the uniform prior instead")
        p.set_defaults(func=func)

    p = sub.add_parser("oracle", help="brute-force enumeration (n <= 8)")
    p.add_argument("--weights", required=True)
    p.add_argument("--samples", type=int, default=0, help="also report sampler TV distance (n <= 4)")
    p.add_argument("--seed", type=_u64, default=0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gradcheck", help="finite-difference check of the relaxed backward pass")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=_u64, required=True)
    p.add_argument("--tau", type=_positive, required=True)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--h", type=_positive, default=1e-5)
    p.add_argument("--rtol", type=_positive, default=1e-5)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("conll", help="CoNLL-U utilities")
    csub = p.add_subparsers(dest="conll_command", required=True)
    q = csub.add_parser("stats", help="sentence count and projectivity rate")
    q.add_argument("--file", required=True)
    q.set_defaults(func=cmd_conll_stats)
    q = csub.add_parser("uas", help="unlabeled attachment score")
    q.add_argument("--pred", required=True)
    q.add_argument("--gold", required=True)
    q.set_defaults(func=cmd_conll_uas)

    p = sub.add_parser("demo", help="demonstrations")
    dsub = p.add_subparsers(dest="demo_command", required=True)
    q = dsub.add_parser("recover", help="recover a random target tree by gradient ascent")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--seed", type=_u64, required=True)
    q.add_argument("--steps", type=int, default=500)
    q.add_argument("--lr", type=_positive, default=0.5)
    q.add_argument("--tau", type=_positive, default=1.0)
    q.add_argument("--trials", type=int, default=1)
    q.set_defaults(func=cmd_demo_recover)

    p = sub.add_parser("bench", help="time forward+backward and check cubic scaling")
    p.add_argument("--sizes", type=_sizes, default=[10, 20, 40, 80])
    p.add_argument("--tau", type=_positive, default=1.0)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--repeat", type=int, default=7)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("elbo", help="single-sample unsupervised ELBO with a random linear decoder")
    p.add_argument("--weights", required=True)
    p.add_argument("--seed", type=_u64, required=True)
    p.add_argument("--tau", type=_positive, default=1.0)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--beta-z", type=float, default=0.01)
    p.add_argument("--beta-t", type=float, default=0.0)
    p.set_defaults(func=cmd_elbo)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    for name in ("n", "trials", "steps", "repeat", "dim", "samples"):
        v = getattr(args, name, None)
        if v is not None and v < (0 if name == "samples" else 1):
            parser.print_usage(sys.stderr)
            print(f"relax-eisner: error: --{name} must be positive", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except (FormatError, ShapeError, DomainError, ValueError, OSError) as exc:
        print(f"relax-eisner: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
