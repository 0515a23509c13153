"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``criterion N: PASS|FAIL`` line (collected into the pytest
terminal summary) and then asserts.  Tolerances and runtime limits are fixed
constants below.  Seeds are fixed in advance; runs are not searched.
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, random_batch
from simtreerank.cli import main
from simtreerank.core import Dataset, derive_rng, derive_seed
from simtreerank.experiments import ExperimentSpec, run_experiment, summarize
from simtreerank.forest import train_forest
from simtreerank.leafrank import LeafConfig, fit_split, positive_fraction
from simtreerank.pairs import pairs_from_raw
from simtreerank.roc import RocCurve, auc, concordance_auc, roc_from_scores, sup_dist
from simtreerank.synth import draw_pairs, gen_ground_truth, optimal_roc, oracle_score, sample_pairs
from simtreerank.treerank import empirical_auc, empirical_roc, lambda_measure, prune, train, validation_auc

SEED = 0
AUC_IDENTITY_TOL = 1e-12
ROC_EQUIV_TOL = 1e-12
INCREMENT_TOL = 1e-10
ORACLE_AUC_RANGE = (0.93, 0.99)
ORACLE_AUC_REF, ORACLE_AUC_TOL = 0.96, 0.03
ORACLE_SUP_TOL = 0.015
TABLE_RUNS = 40


def record(n, ok, detail, elapsed, limit):
    within = elapsed < limit
    status = "PASS" if ok and within else "FAIL"
    line = f"criterion {n}: {status}  {detail}  [{elapsed:.1f}s, limit {limit}s]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line
    assert within, line


def means(spec):
    rows = run_experiment(spec, workers=None)
    return {r[spec.param]: r for r in summarize(rows, spec.param)}


def test_01_symmetry_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    x, xp = rng.random((2, 10_000, 3))
    bad = []
    for variant in ("diag", "minmax"):
        b = random_batch(rng, n=500, q=3, transform=variant)
        tree = train(b, 4, LeafConfig("tree", 3))
        data = Dataset(rng.random((60, 3)), rng.integers(1, 4, 60))
        forest = train_forest(data, variant, n_trees=3, depth=4, pairs_per_tree=800, seed=SEED, workers=1)
        for name, model in (("tree", tree), ("forest", forest)):
            if not np.array_equal(model.score_pairs(x, xp), model.score_pairs(xp, x)):
                bad.append(f"{name}/{variant}")
    gt = gen_ground_truth(3, seed=SEED)
    if not np.array_equal(oracle_score(gt, x, xp), oracle_score(gt, xp, x)):
        bad.append("oracle")
    record(1, not bad, f"swap-asymmetric scorers: {bad or 'none'} on 10^4 pairs",
           time.perf_counter() - t0, 5)


def test_02_auc_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 2)
    worst = 0.0
    for i in range(100):
        b = random_batch(rng, n=int(rng.integers(20, 120)), transform=("diag", "minmax")[i % 2])
        fam = ("stump", "tree", "straddle")[i % 3] if i % 2 else ("stump", "tree")[i % 2]
        t = train(b, int(rng.integers(1, 5)), LeafConfig(fam, 3, min_rows=2))
        worst = max(worst, abs(empirical_auc(t) - auc(empirical_roc(t))))
    record(2, worst <= AUC_IDENTITY_TOL, f"max |1/2 + 1/2 sum(lambda) - trapezoid AUC| = {worst:.2e}",
           time.perf_counter() - t0, 30)


def test_03_roc_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 3)
    worst_curve = 0.0
    for i in range(50):
        b = random_batch(rng, n=int(rng.integers(30, 300)))
        t = train(b, int(rng.integers(1, 5)), LeafConfig("tree", 2, min_rows=2))
        # compare knot by knot: both curves have vertical segments, and alphas
        # summed in different orders may differ by an ulp at a jump
        tree_knots = empirical_roc(t).reduced(ROC_EQUIV_TOL).knots
        score_knots = roc_from_scores(t.score_features(b.features), b.z).reduced(ROC_EQUIV_TOL).knots
        if tree_knots.shape != score_knots.shape:
            worst_curve = np.inf
            continue
        worst_curve = max(worst_curve, float(np.abs(tree_knots - score_knots).max()))
    worst_auc = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 201))
        s = rng.integers(0, 12, n).astype(float)
        z = np.where(rng.random(n) < 0.5, 1, -1)
        z[:2] = (1, -1)
        worst_auc = max(worst_auc, abs(auc(roc_from_scores(s, z)) - concordance_auc(s, z)))
    ok = worst_curve <= ROC_EQUIV_TOL and worst_auc <= ROC_EQUIV_TOL
    record(3, ok, f"max curve gap {worst_curve:.2e}, max AUC-vs-concordance gap {worst_auc:.2e}",
           time.perf_counter() - t0, 30)


def test_04_auc_increment_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 4)
    worst, n_splits = 0.0, 0
    for _ in range(50):
        b = random_batch(rng, n=int(rng.integers(40, 200)))
        t = train(b, 3, LeafConfig("tree", 2, min_rows=2))
        for r in t.history:
            d, k = r.d, r.k
            before = RocCurve(np.r_[t.alpha[d + 1][:2 * k + 1], t.alpha[d][k + 1:]],
                              np.r_[t.beta[d + 1][:2 * k + 1], t.beta[d][k + 1:]])
            after = RocCurve(np.r_[t.alpha[d + 1][:2 * k + 2], t.alpha[d][k + 1:]],
                             np.r_[t.beta[d + 1][:2 * k + 2], t.beta[d][k + 1:]])
            if r.neg_cell == 0 or r.pos_cell == 0:
                continue
            lam = (r.pos_cell - r.pos_left) / r.pos_cell + r.neg_left / r.neg_cell
            predicted = 0.5 * r.neg_cell * r.pos_cell * (1 - lam)
            worst = max(worst, abs((auc(after) - auc(before)) - predicted))
            n_splits += 1
    record(4, worst <= INCREMENT_TOL and n_splits > 0,
           f"max increment error {worst:.2e} over {n_splits} node visits", time.perf_counter() - t0, 30)


def test_05_lambda_optimal_stumps():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 5)
    worst = 0.0
    for _ in range(100):
        # a random cell inside a larger batch, so the knot spans are not trivial
        b = random_batch(rng, n=400)
        F, z = b.features, b.z
        cell = np.flatnonzero(rng.random(len(z)) < rng.uniform(0.1, 0.5))[:200]
        if not (np.any(z[cell] == 1) and np.any(z[cell] == -1)):
            continue
        rate_pos = np.where(z == 1, 1.0 / b.n_plus, 0.0)
        rate_neg = np.where(z == -1, 1.0 / b.n_minus, 0.0)
        d_alpha, d_beta = rate_neg[cell].sum(), rate_pos[cell].sum()
        knots_a, knots_b = np.array([0.3, 0.3 + d_alpha]), np.array([0.2, 0.2 + d_beta])
        lam = lambda rows: lambda_measure(knots_a, knots_b, 0, rate_pos[rows].sum(), rate_neg[rows].sum())
        clf = fit_split(F[cell], z[cell], positive_fraction(z[cell]), "stump")
        got = lam(cell[clf.predict_many(F[cell]) == 1])
        best = max(lam(cell), lam(cell[:0]))
        for f in range(F.shape[1]):
            v = np.unique(F[cell, f])
            for thr in (v[:-1] + v[1:]) / 2:
                left = F[cell, f] <= thr
                best = max(best, lam(cell[left]), lam(cell[~left]))
        worst = max(worst, best - got)
    record(5, worst <= 1e-12, f"max shortfall of stump lambda vs exhaustive optimum {worst:.2e}",
           time.perf_counter() - t0, 30)


def test_06_synthetic_oracle():
    t0 = time.perf_counter()
    gt = gen_ground_truth(3, q=3, delta=0.01, p_plus=0.5, seed=derive_seed(SEED, "gt"))
    star = optimal_roc(gt)
    a_star = auc(star)
    x, xp, z, _ = draw_pairs(gt, 100_000, derive_rng(SEED, "test"))
    dev = sup_dist(roc_from_scores(oracle_score(gt, x, xp), z), star)
    ok = (ORACLE_AUC_RANGE[0] <= a_star <= ORACLE_AUC_RANGE[1]
          and abs(a_star - ORACLE_AUC_REF) <= ORACLE_AUC_TOL and dev <= ORACLE_SUP_TOL)
    record(6, ok, f"AUC* = {a_star:.5f}; oracle sup-distance on 10^5 test pairs = {dev:.4f} "
           f"(tolerance {ORACLE_SUP_TOL})", time.perf_counter() - t0, 60)


@pytest.mark.slow
def test_07_model_bias_trend():
    t0 = time.perf_counter()
    m = means(ExperimentSpec("model-bias", runs=TABLE_RUNS, seed=SEED))
    d = [m[k]["mean_dinf"] for k in (1, 2, 3, 8)]
    ok = (abs(d[0] - 0.65) <= 0.15 and d[0] >= d[1] >= d[2] and d[0] - d[2] >= 0.1
          and d[3] <= d[2] + 0.05)
    record(7, ok, "mean Dinf at D=1,2,3,8: " + ", ".join(f"{v:.3f}" for v in d),
           time.perf_counter() - t0, 900)


@pytest.mark.slow
def test_08_class_asymmetry_trend():
    t0 = time.perf_counter()
    m = means(ExperimentSpec("class-asymmetry", runs=TABLE_RUNS, seed=SEED, values=(0.5, 1e-3)))
    lo, hi = m[0.5]["mean_d1"], m[1e-3]["mean_d1"]
    record(8, hi - lo >= 0.2, f"mean D1 at p+=0.5: {lo:.3f}, at p+=1e-3: {hi:.3f}",
           time.perf_counter() - t0, 900)


@pytest.mark.slow
def test_09_model_complexity_trend():
    t0 = time.perf_counter()
    m = means(ExperimentSpec("model-complexity", runs=TABLE_RUNS, seed=SEED, values=(1, 2, 3)))
    d = [m[k]["mean_dinf"] for k in (1, 2, 3)]
    ok = d[0] < d[1] < d[2] and d[0] <= 0.15 and abs(d[2] - 0.30) <= 0.15
    record(9, ok, "mean Dinf at D_gt=1,2,3: " + ", ".join(f"{v:.3f}" for v in d),
           time.perf_counter() - t0, 900)


@pytest.mark.slow
def test_10_depth_schedule():
    t0 = time.perf_counter()
    m = means(ExperimentSpec("depth-schedule", runs=10, seed=SEED))
    d = [m[k]["mean_dinf"] for k in (1118, 2236, 4472, 8944)]
    ok = all(a >= b for a, b in zip(d, d[1:]))
    record(10, ok, "mean Dinf at n_train=1118,2236,4472,8944: " + ", ".join(f"{v:.3f}" for v in d),
           time.perf_counter() - t0, 1200)


def test_11_pruning():
    t0 = time.perf_counter()
    worse = []
    for run in range(20):
        gt = gen_ground_truth(3, seed=derive_seed(SEED, "prune-gt", run))
        tr = sample_pairs(gt, 30, derive_seed(SEED, "prune-train", run), purpose="train")
        va = sample_pairs(gt, 10_000, derive_seed(SEED, "prune-val", run), purpose="validation")
        tree = train(tr, 4, LeafConfig("tree", 5, min_rows=2))
        before, after = validation_auc(tree, va), validation_auc(prune(tree, va), va)
        if after < before:
            worse.append(run)
    record(11, not worse, f"runs where pruning lowered validation AUC: {worse or 'none'} of 20",
           time.perf_counter() - t0, 60)


def test_12_determinism(tmp_path):
    t0 = time.perf_counter()
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        assert main(["reproduce", "--runs", "2", "--seed", "7", "--out", str(d)]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))})
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    record(12, ok, f"{len(outs[0])} CSV files byte-identical across reruns: {ok}",
           time.perf_counter() - t0, 120)
