"""Acceptance suite: one test per criterion, each reporting a single PASS/FAIL line.

The lines are printed as the tests run (visible with ``-s``) and repeated in
the terminal summary by ``conftest.pytest_terminal_summary``.
"""

import logging
import math
import time
from fractions import Fraction

import numpy as np
import pytest

import mevolve.evolve as evolve_module
from mevolve.augment import (
    AugmentationInfeasible,
    AugmentConfig,
    Mapping,
    edit_budget,
    plan_edits,
    weighted_sample_without_replacement,
)
from mevolve.cli import main
from mevolve.datasets import LabeledDataset, load_pool, load_tu_dataset, save_pool
from mevolve.evolve import EvolveConfig, m_evolve, run_experiment
from mevolve.filtration import (
    ConfusionMatrix,
    FilterResult,
    confusion_matrix,
    label_reliability,
    optimize_threshold,
)
from mevolve.graph import Graph, find_paths, has_length_l_path, ra_matrix, ra_score
from mevolve.models import GraphModel, ModelConfig, laplacian_spectrum, softmax_loss_and_grad, spectral_embed

from .conftest import DATA_DIR, random_graph
from .test_cli import toy_dir  # noqa: F401  (fixture)
from .test_datasets import random_pool

RESULTS: dict[int, str] = {}


def report(n: int, ok: bool, detail: str) -> None:
    line = f"acceptance {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


# --- 1. dataset statistics table ------------------------------------------------

TABLE = {
    "MUTAG": ["188", "2", "17.93~(10/28)", "19.79~(10/33)", "66.5"],
    "PTC_MR": ["344", "2", "14.29~(3/64)", "14.69~(2/71)", "55.8"],
    "ENZYMES": ["600", "6", "32.63~(3/125)", "62.14~(3/149)", "16.7"],
}


def test_criterion_01_dataset_table(capsys):
    start = time.perf_counter()
    notes, ok = [], True
    for name, cells in TABLE.items():
        status = main(["stats", name, "--data-dir", str(DATA_DIR)])
        out, err = capsys.readouterr()
        if status != 0:
            ok = False
            notes.append(f"{name}: dataset files missing under {DATA_DIR}")
            continue
        got = out.splitlines()[1].split()[1:]
        if got != cells:
            ok = False
            notes.append(f"{name}: got {got}, expected {cells}")
        else:
            notes.append(f"{name}: all cells match")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 30
    with capsys.disabled():
        report(1, ok, "; ".join(notes) + f" ({elapsed:.1f}s)")


# --- 2. augmentation invariants ---------------------------------------------------

BETAS = (0.05, 0.1, 0.15, 0.2, 0.25)


def _plan_violations(g: Graph, cfg: AugmentConfig, plan) -> list[str]:
    out = []
    k = edit_budget(g.m, cfg.beta)
    adds, dels = plan.additions, plan.deletions
    motif = cfg.mapping in (Mapping.MOTIF_RANDOM, Mapping.MOTIF_SIMILARITY)
    # motif mappings drop an (addition, deletion) pair whose path is used up, so they may fall short of k
    if len(adds) != len(dels) or len(adds) > k or (not motif and len(adds) != k):
        out.append(f"budget {len(adds)}/{len(dels)} against {k}")
    if len(set(adds)) != len(adds) or len(set(dels)) != len(dels):
        out.append("duplicate edit")
    if any(u == v for u, v in adds):
        out.append("self-loop added")
    if any(g.has_edge(u, v) for u, v in adds):
        out.append("existing edge added")
    if not all(g.has_edge(u, v) for u, v in dels):
        out.append("missing edge deleted")
    h = g.with_edits(adds, dels)
    if h.m != g.m or h.n != g.n:
        out.append("edge or vertex count changed")
    if any(u >= v for u, v in h.edges):
        out.append("non-canonical edge in result")
    if motif:
        l = cfg.motif_length
        if not all(has_length_l_path(g, u, v, l) for u, v in adds):
            out.append("motif addition without a length-l path")
        elif not all(any(e in p.edges for p in find_paths(g, a[0], a[1], l)) for a, e in zip(adds, dels)):
            out.append("motif deletion off the closed path")
    return out


def test_criterion_02_augmentation_invariants():
    rng = np.random.default_rng(2024)
    graphs = [random_graph(rng, 5, 60) for _ in range(1000)]
    start = time.perf_counter()
    cases = infeasible = short = 0
    violations = []
    logging.disable(logging.WARNING)
    try:
        for mapping in Mapping:
            for beta in BETAS:
                cfg = AugmentConfig(mapping=mapping, beta=beta)
                for i, g in enumerate(graphs):
                    cases += 1
                    outcome, plans = [], []
                    for _ in range(2):
                        try:
                            plans.append(plan_edits(g, cfg, np.random.default_rng(i)))
                            outcome.append((plans[-1].additions, plans[-1].deletions))
                        except AugmentationInfeasible as exc:
                            outcome.append(("infeasible", exc.side))
                    if outcome[0] != outcome[1]:
                        violations.append((mapping.value, beta, i, "non-deterministic"))
                    if outcome[0][0] != "infeasible":
                        for v in _plan_violations(g, cfg, plans[0]):
                            violations.append((mapping.value, beta, i, v))
                        short += len(plans[0].additions) < edit_budget(g.m, beta)
                    else:
                        infeasible += 1
    finally:
        logging.disable(logging.NOTSET)
    elapsed = time.perf_counter() - start
    ok = not violations and elapsed < 60
    detail = (f"{cases} cases, {len(violations)} violations, {infeasible} infeasible and {short} shortened by "
              f"motif collisions (reported, not violations), "
              f"{elapsed:.1f}s")
    if violations:
        detail += f"; first: {violations[0]}"
    report(2, ok, detail)


# --- 3. RA oracle ---------------------------------------------------------------


def brute_force_ra(n, edges, i, j):
    adj = [set() for _ in range(n)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return sum(1.0 / len(adj[z]) for z in range(n) if z in adj[i] and z in adj[j])


def test_criterion_03_ra_oracle():
    rng = np.random.default_rng(3)
    worst, pairs = 0.0, 0
    for _ in range(200):
        g = random_graph(rng, 2, 12)
        edges = list(g.edges)
        ra = ra_matrix(g)
        for i in range(g.n):
            for j in range(i + 1, g.n):
                expected = brute_force_ra(g.n, edges, i, j)
                worst = max(worst, abs(ra_score(g, i, j) - expected), abs(ra[i, j] - expected))
                pairs += 1
    report(3, worst <= 1e-12, f"{pairs} pairs on 200 graphs, max abs error {worst:.2e}")


# --- 4. sampling law ----------------------------------------------------------------


def test_criterion_04_sampling_law():
    rng = np.random.default_rng(4)
    trials = 100_000
    tables, worst, failures = 0, 0.0, []
    for t in range(24):
        size = int(rng.integers(2, 11))
        w = rng.gamma(1.0, size=size)
        w[rng.random(size) < 0.15] = 0.0
        if w.sum() == 0:
            w[0] = 1.0
        p = w / w.sum()
        items = list(range(size))
        draw_rng = np.random.default_rng(1000 + t)
        counts = np.bincount(
            [weighted_sample_without_replacement(items, w, 1, draw_rng)[0] for _ in range(trials)], minlength=size
        )
        sigma = np.sqrt(trials * p * (1 - p))
        dev = np.abs(counts - trials * p)
        bad = dev > 3 * sigma
        if bad.any():
            failures.append((t, np.flatnonzero(bad).tolist()))
        positive = sigma > 0
        if positive.any():
            worst = max(worst, float(np.max(dev[positive] / sigma[positive])))
        tables += 1
    report(4, not failures, f"{tables} tables x {trials} draws, worst deviation {worst:.2f} sigma, "
                            f"out-of-bound cells: {failures or 'none'}")


# --- 5. threshold oracle --------------------------------------------------------------

GRID = np.linspace(0.0, 1.0, 10_000)


def test_criterion_05_threshold_oracle():
    rng = np.random.default_rng(5)
    mismatched, theta_agree = [], 0
    for s in range(500):
        size = int(rng.integers(1, 61))
        r = GRID[rng.integers(0, len(GRID), size)]
        g = rng.choice([-1, 1], size)
        scores = np.count_nonzero((GRID[:, None] - r[None, :]) * g[None, :] > 0, axis=1)
        best = int(np.argmin(scores))
        t = optimize_threshold(r, g)
        if t.objective != int(scores[best]):
            mismatched.append(s)
        theta_agree += t.theta == GRID[best]
    report(5, not mismatched, f"500 record sets, objective mismatches: {len(mismatched)}, "
                              f"minimising theta identical in {theta_agree}/500")


# --- 6. filtration arithmetic ------------------------------------------------------------


def test_criterion_06_filtration_arithmetic():
    rng = np.random.default_rng(6)
    row_err = 0.0
    for _ in range(200):
        k = int(rng.integers(2, 8))
        labels = np.concatenate([np.arange(k), rng.integers(0, k, 50)])
        q = confusion_matrix(rng.dirichlet(np.ones(k) * 0.5, len(labels)), labels, k)
        row_err = max(row_err, float(np.abs(q.rows.sum(axis=1) - 1).max()))
    lo, hi = math.inf, -math.inf
    for _ in range(100_000):
        k = int(rng.integers(2, 6))
        p, qrow = rng.dirichlet(np.ones(k) * 0.5, 2)
        r = label_reliability(p, 0, ConfusionMatrix(qrow[None, :], np.array([1])))
        lo, hi = min(lo, r), max(hi, r)
    q = confusion_matrix([[0.9, 0.1], [0.1, 0.9]], [0, 1])
    hand = label_reliability([0.9, 0.1], 0, q)
    # exact rational value of the binary inputs, rounded once
    exact = float(Fraction(0.9) * Fraction(0.9) + Fraction(0.1) * Fraction(0.1))
    ok = row_err <= 1e-9 and lo >= 0.0 and hi <= 1.0 and hand == exact and abs(hand - 0.82) <= math.ulp(0.82)
    report(6, ok, f"row-sum error {row_err:.1e}; reliability range [{lo:.4f}, {hi:.4f}] on 1e5 pairs; "
                  f"hand example {hand!r} (correctly rounded 0.9*0.9+0.1*0.1)")


# --- 7. numerical checks ------------------------------------------------------------------


def _fd_grad(f, x, h=1e-5):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        up = f()
        x[idx] = old - h
        down = f()
        x[idx] = old
        g[idx] = (up - down) / (2 * h)
    return g


def test_criterion_07_numerical_checks():
    rng = np.random.default_rng(7)
    grad_rel = 0.0
    for _ in range(20):
        k, dim = int(rng.integers(2, 6)), int(rng.integers(1, 9))
        X, y = rng.normal(size=(15, dim)), rng.integers(0, k, 15)
        W, b = rng.normal(size=(dim, k)), rng.normal(size=k)
        loss = lambda: softmax_loss_and_grad(W, b, X, y, 0.01)[0]  # noqa: E731
        _, gW, gb = softmax_loss_and_grad(W, b, X, y, 0.01)
        a = np.concatenate([gW.ravel(), gb])
        n = np.concatenate([_fd_grad(loss, W).ravel(), _fd_grad(loss, b)])
        grad_rel = max(grad_rel, np.linalg.norm(a - n) / max(np.linalg.norm(a) + np.linalg.norm(n), 1e-12))
    trace_err = perm_err = 0.0
    for _ in range(100):
        g = random_graph(rng, 1, 60)
        trace_err = max(trace_err, abs(laplacian_spectrum(g).sum() - 2 * g.m))
        perm = rng.permutation(g.n)
        h = Graph(g.n, [(perm[u], perm[v]) for u, v in g.edges])
        perm_err = max(perm_err, float(np.abs(spectral_embed(h) - spectral_embed(g)).max()))
    ok = grad_rel < 1e-5 and trace_err <= 1e-6 and perm_err <= 1e-6
    report(7, ok, f"gradient relative error {grad_rel:.1e}; eigenvalue-sum error {trace_err:.1e}; "
                  f"permutation error {perm_err:.1e}")


# --- 8. end-to-end directional reproduction --------------------------------------------------


@pytest.mark.slow
def test_criterion_08_end_to_end_mutag():
    if not (DATA_DIR / "MUTAG").is_dir():
        report(8, False, f"MUTAG files missing under {DATA_DIR}")
    d = load_tu_dataset(DATA_DIR, "MUTAG")
    start = time.perf_counter()
    results = {}
    logging.disable(logging.WARNING)
    try:
        for mapping in (Mapping.MOTIF_SIMILARITY, Mapping.RANDOM, Mapping.VERTEX_SIMILARITY, Mapping.MOTIF_RANDOM):
            cfg = EvolveConfig(augment=AugmentConfig(mapping=mapping), model=ModelConfig(classifier="knn"), trials=10)
            results[mapping] = run_experiment(d, cfg)
    finally:
        logging.disable(logging.NOTSET)
    elapsed = time.perf_counter() - start
    main_run = results[Mapping.MOTIF_SIMILARITY]
    ok = main_run.mean_evolved >= main_run.mean_original and 0.0 <= main_run.mean_rimp <= 0.10 and elapsed < 600
    others = ", ".join(f"{m.value} {100 * r.mean_rimp:+.2f}%" for m, r in results.items() if m is not Mapping.MOTIF_SIMILARITY)
    report(8, ok, f"motif_similarity: original {main_run.mean_original:.4f}, evolved {main_run.mean_evolved:.4f}, "
                  f"mean RIMP {100 * main_run.mean_rimp:+.2f}% (target [0%, 10%]); {others}; {elapsed:.0f}s")


# --- 9. loop-logic oracle ------------------------------------------------------------------


def _accept_all(pool, model, q, theta):
    return FilterResult(pool, pool.subset([]), np.ones(len(pool)), np.ones(len(pool), dtype=bool))


def test_criterion_09_loop_doubling(monkeypatch):
    monkeypatch.setattr(evolve_module, "filter_pool", _accept_all)
    rng = np.random.default_rng(9)
    graphs = [random_graph(rng, 6, 14) for _ in range(24)]
    d = LabeledDataset(graphs, [i % 2 for i in range(24)], 2)
    train, val = d.subset(range(16)), d.subset(range(16, 24))
    factory = lambda: GraphModel.from_config(ModelConfig(embedding_dim=8, knn_k=3))  # noqa: E731
    traces = {}
    for T in (1, 2, 3):
        res = m_evolve(train, val, EvolveConfig(iterations=T), seed=T, model_factory=factory,
                       mapping=lambda g, cfg, r: g)
        traces[T] = [it.train_size for it in res.report.iterations]
    ok = all(traces[T] == [16 * 2**t for t in range(1, T + 1)] for T in traces)
    report(9, ok, f"|D_train|=16, train sizes per T: {traces}")


# --- 10. round trips ---------------------------------------------------------------------------


def test_criterion_10_round_trips(tmp_path, toy_dir, capsys):  # noqa: F811
    rng = np.random.default_rng(10)
    pool_failures = 0
    for i in range(100):
        pool = random_pool(rng)
        path = tmp_path / f"p{i}.pool"
        save_pool(pool, path)
        pool_failures += load_pool(path) != pool
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    args = ["evolve", "TOY", "--data-dir", str(toy_dir), "--iterations", "2", "--trials", "3", "--knn-k", "1",
            "--dims", "8", "--seed", "11"]
    status = [main(args + ["--report", str(a)]), main(args + ["--report", str(b)])]
    capsys.readouterr()
    identical = a.read_bytes() == b.read_bytes()
    ok = pool_failures == 0 and status == [0, 0] and identical
    with capsys.disabled():
        report(10, ok, f"pool round-trip failures {pool_failures}/100; CLI reports byte-identical: {identical}")
