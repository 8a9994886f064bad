"""End-to-end acceptance checks.  Each test prints one PASS/FAIL line and
asserts the same condition at its pinned tolerance."""

import math
import time

import numpy as np
import pytest

from active_search.batch import (
    FictionalOracle,
    batch_ens_objective_exact,
    batch_ens_objective_sampled,
    sample_joint_labels,
    sequential_simulation_batch,
)
from active_search.data import Dataset
from active_search.ens import ens_select
from active_search.exact import (
    action_value,
    optimal_expected_utility,
    optimal_p_at_least_one,
    p_at_least_one,
    policy_expected_utility,
)
from active_search.graph import NeighborGraph, build_knn_graph
from active_search.harness.experiment import ExperimentConfig, cumulative_at, run_experiment, terminal_counts
from active_search.harness.stats import paired_t_test, spearman, t_cdf
from active_search.harness.tables import adaptivity_ratio_table
from active_search.model import KnnModel, SearchState
from active_search.myopic import one_step_select

from conftest import ACCEPTANCE_LINES, random_model

TOY = dict(dataset="toy", k=50, gamma=1.0, prior=0.1, initial="closest-to-center", budget=200)


def report(number, ok, detail):
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def knn_instance(rng, n, metric):
    if metric == "euclidean-unit":
        ds = Dataset(rng.random((n, int(rng.integers(1, 4)))), (rng.random(n) < 0.3).astype(int))
    else:
        fps = [np.unique(rng.integers(0, 40, size=int(rng.integers(1, 10)))) for _ in range(n)]
        ds = Dataset(fps, (rng.random(n) < 0.3).astype(int))
    k = int(rng.integers(1, min(12, n - 1) + 1))
    model = KnnModel(build_knn_graph(ds, k, metric), gamma=float(rng.uniform(0.2, 2.0)),
                     prior=float(rng.uniform(0.02, 0.5)))
    for x in rng.choice(n, size=int(rng.integers(1, max(2, n // 10))), replace=False):
        model.observe(int(x), int(ds.truth[x]))
    return model


@pytest.fixture(scope="module")
def toy_runs():
    cache = {}

    def get(policy, budget, reps):
        key = (policy, budget, reps)
        if key not in cache:
            cache[key] = run_experiment(ExperimentConfig(policy=policy, replications=reps,
                                                         **{**TOY, "budget": budget}))
        return cache[key]
    return get


def test_criterion_01_final_query_degeneracy():
    rng = np.random.default_rng(101)
    t0, agree = time.perf_counter(), 0
    for i in range(200):
        model = knn_instance(rng, int(rng.integers(20, 201)), ("euclidean-unit", "jaccard-weighted")[i % 2])
        agree += ens_select(model, SearchState(1))[0] == one_step_select(model)
    elapsed = time.perf_counter() - t0
    assert report(1, agree == 200 and elapsed < 60, f"{agree}/200 identical picks in {elapsed:.1f}s")


def test_criterion_02_conditional_independence_optimality():
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 9))
        model = KnnModel(NeighborGraph.empty(n), gamma=float(rng.uniform(0.2, 2.0)), prior=rng.uniform(0.01, 0.99, n))
        state = SearchState(int(rng.integers(1, min(4, n) + 1)))
        ens_value = policy_expected_utility(model, state, lambda m, s: [ens_select(m, s)[0]])
        worst = max(worst, abs(ens_value - optimal_expected_utility(model, state).expected_utility))
    assert report(2, worst <= 1e-9, f"max |ENS - optimal| = {worst:.2e} over 50 instances")


def test_criterion_03_second_to_last_optimality():
    rng = np.random.default_rng(103)
    worst = 0.0
    for i in range(50):
        model = knn_instance(rng, int(rng.integers(4, 11)), ("euclidean-unit", "jaccard-weighted")[i % 2])
        state = SearchState(2)
        best = optimal_expected_utility(model, state).expected_utility
        x = ens_select(model, state)[0]
        worst = max(worst, abs(action_value(model, state, [x]) - best))
    assert report(3, worst <= 1e-9, f"max gap to optimal action value = {worst:.2e} over 50 instances")


def test_criterion_04_pruning_soundness():
    rng = np.random.default_rng(104)
    t0, agree, worst, pruned = time.perf_counter(), 0, 0.0, []
    for i in range(100):
        n = int(rng.integers(20, 2001))
        model = knn_instance(rng, n, ("euclidean-unit", "jaccard-weighted")[i % 2])
        state = SearchState(int(rng.integers(1, min(300, model.unlabeled().size) + 1)))
        a, ea, _ = ens_select(model, state, pruning=False)
        b, eb, stats = ens_select(model, state, pruning=True)
        agree += a == b
        worst = max(worst, abs(ea.score - eb.score))
        pruned.append(stats.fraction_pruned)
    elapsed = time.perf_counter() - t0
    ok = agree == 100 and worst <= 1e-12
    assert report(4, ok, f"{agree}/100 identical, max score diff {worst:.1e}, "
                         f"mean pruned fraction {np.mean(pruned):.3f} ({elapsed:.0f}s)")


def test_criterion_05_greedy_one_minus_inverse_e():
    rng = np.random.default_rng(105)
    ok, worst_ratio = 0, math.inf
    for i in range(50):
        model = knn_instance(rng, int(rng.integers(6, 16)), ("euclidean-unit", "jaccard-weighted")[i % 2])
        b = 2 + i % 2
        batch = sequential_simulation_batch(model, SearchState(b, b), "one-step", FictionalOracle("always-0"), b)
        got = p_at_least_one(model, batch)
        best = optimal_p_at_least_one(model, b)[1]
        ok += got >= (1 - 1 / math.e) * best
        worst_ratio = min(worst_ratio, got / best)
    assert report(5, ok == 50, f"{ok}/50 instances meet the bound; worst ratio {worst_ratio:.4f}")


def test_criterion_06_batch_ens_monte_carlo_convergence():
    rng = np.random.default_rng(106)
    sizes, repeats = [2, 8, 32, 128], 200
    variances = np.zeros((20, len(sizes)))
    within = 0
    for inst in range(20):
        model = random_model(rng, 12, k=4, n_obs=2)
        state = SearchState(6, 2)
        batch = [int(x) for x in rng.choice(model.unlabeled(), 2, replace=False)]
        exact = batch_ens_objective_exact(model, state, batch)
        for j, n in enumerate(sizes):
            est = [batch_ens_objective_sampled(model, state, batch, sample_joint_labels(model, batch, rng, n))
                   for _ in range(repeats)]
            variances[inst, j] = np.var(est, ddof=1)
        samples = sample_joint_labels(model, batch, rng, 4096)
        per_sample = [batch_ens_objective_sampled(model, state, batch, [s]) for s in samples]
        se = np.std(per_sample, ddof=1) / math.sqrt(len(per_sample))
        within += abs(np.mean(per_sample) - exact) <= 3 * se + 1e-12
    slope = np.polyfit(np.log(sizes), np.log(variances.mean(axis=0)), 1)[0]
    ok = -1.3 <= slope <= -0.7 and within == 20
    assert report(6, ok, f"log-log variance slope {slope:.3f}; {within}/20 within 3 SE at N=4096")


def test_criterion_07_toy_nonmyopia(toy_runs):
    ens = np.mean(list(terminal_counts(toy_runs("ens", 200, 100)).values()))
    two = np.mean(list(terminal_counts(toy_runs("two-step", 200, 100)).values()))
    assert report(7, ens - two >= 20, f"ENS {ens:.2f} vs two-step {two:.2f}, difference {ens - two:.2f} "
                                      "(threshold 20)")


def test_criterion_08_budget_adaptation(toy_runs):
    full = toy_runs("ens", 200, 100)
    full = [r for r in full if r.replication < 50]
    parts, ok = [], True
    for tau in (50, 100):
        short = cumulative_at(toy_runs("ens", tau, 50), tau)
        long = cumulative_at(full, tau)
        reps = sorted(short)
        res = paired_t_test([short[r] for r in reps], [long[r] for r in reps])
        ok &= res.mean_difference > 0 and res.p_greater < 0.05
        parts.append(f"tau={tau}: +{res.mean_difference:.2f}, p={res.p_greater:.1e}")
    assert report(8, ok, "; ".join(parts))


def test_criterion_09_batch_degradation_trend():
    runs = {}
    for b in (1, 5, 10, 25, 50):
        cfg = ExperimentConfig(policy="batch-ens:16", budget=100, dataset="synthetic", k=20, prior=0.05,
                               batch_size=b, replications=20, initial="random-target")
        runs[b] = run_experiment(cfg)
    ratios = dict(adaptivity_ratio_table({"batch-ens:16": runs}))
    rho = spearman([10, 25, 50], [ratios[b] for b in (10, 25, 50)])
    detail = ", ".join(f"b={b}: {r:.3f}" for b, r in ratios.items())
    assert report(9, rho > 0, f"Spearman {rho:.2f} on b in 10,25,50; ratios {detail}")


def test_criterion_10_statistics_oracle():
    spot = t_cdf(3.182, 3)
    res = paired_t_test([1, 2, 3, 4], [0, 0, 0, 0])
    ok = abs(spot - 0.975) <= 1e-3 and abs(res.t_statistic - 3.873) <= 1e-3 and abs(res.p_two_sided - 0.0305) <= 1e-3
    assert report(10, ok, f"P(T3 <= 3.182) = {spot:.4f}; t = {res.t_statistic:.4f}, p = {res.p_two_sided:.4f}")
