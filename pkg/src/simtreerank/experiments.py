"""Seeded synthetic benchmarks: generate, train, compare with ROC*.

All blocks share q = 3, delta = 0.01, 100,000 test pairs and
n_train = 150 * (5/4)^(D_gt^2) training pairs unless a block varies one of them.
The learner defaults to stump splits on the diag features, which carve exactly
the axis-aligned cells the ground truth is built from.  Trials are keyed by
(seed, run) and the parameters that shape the data, so settings that only
change the learner (e.g. the tree depth) see identical data.
"""

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import derive_seed
from .forest import default_workers
from .leafrank import LeafConfig
from .roc import auc, l1_dist, roc_from_scores, sup_dist
from .synth import gen_ground_truth, optimal_roc, sample_pairs
from .treerank import default_depth, train

EXPERIMENTS = {
    "class-asymmetry": ("p_plus", (0.5, 1e-1, 1e-3, 2e-4)),
    "model-complexity": ("gt_depth", (1, 2, 3, 4)),
    "model-bias": ("depth", (1, 2, 3, 8)),
    "depth-schedule": ("n_train", (1118, 2236, 4472, 8944)),
}


def n_train_rule(gt_depth):
    return int(round(150 * 1.25 ** (gt_depth**2)))


@dataclass(frozen=True)
class Setting:
    gt_depth: int = 3
    depth: int = 3
    p_plus: float = 0.5
    n_train: int = None
    n_test: int = 100_000
    q: int = 3
    delta: float = 0.01
    transform: str = "diag"
    leaf: LeafConfig = field(default_factory=lambda: LeafConfig("stump", 1))

    @property
    def train_size(self):
        return self.n_train if self.n_train is not None else n_train_rule(self.gt_depth)


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    runs: int = 40
    seed: int = 0
    values: tuple = None
    base: Setting = field(default_factory=Setting)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {tuple(EXPERIMENTS)}")
        if self.runs < 1:
            raise ValueError("runs must be positive")

    @property
    def param(self):
        return EXPERIMENTS[self.experiment][0]

    @property
    def grid(self):
        return self.values if self.values is not None else EXPERIMENTS[self.experiment][1]

    def setting(self, value):
        if self.experiment == "model-complexity":
            return replace(self.base, gt_depth=int(value), depth=int(value))
        if self.experiment == "model-bias":
            return replace(self.base, depth=int(value))
        if self.experiment == "depth-schedule":
            return replace(self.base, n_train=int(value), depth=default_depth(int(value)))
        return replace(self.base, p_plus=float(value))


def run_trial(setting, seed, run):
    """One generate/train/evaluate repetition; returns the deviation metrics."""
    s = setting
    gt = gen_ground_truth(s.gt_depth, s.q, s.delta, s.p_plus,
                          seed=derive_seed(seed, "gt", s.gt_depth, run))
    data_key = (s.gt_depth, round(s.p_plus * 1e9), run)
    train_batch = sample_pairs(gt, s.train_size, derive_seed(seed, "train", *data_key),
                               s.transform, purpose="train")
    test_batch = sample_pairs(gt, s.n_test, derive_seed(seed, "test", *data_key),
                              s.transform, purpose="test")
    roc_star = optimal_roc(gt)
    n_plus = train_batch.n_plus
    if n_plus == 0 or train_batch.n_minus == 0:
        # nothing to rank against: a constant similarity
        scores = np.zeros(len(test_batch))
    else:
        tree = train(train_batch, s.depth, s.leaf)
        scores = tree.score_features(test_batch.features)
    roc = roc_from_scores(scores, test_batch.z)
    return {"d1": l1_dist(roc, roc_star), "dinf": sup_dist(roc, roc_star),
            "auc": auc(roc), "auc_star": auc(roc_star), "n_plus_train": n_plus}


def _trial_job(args):
    setting, seed, run = args
    return run_trial(setting, seed, run)


def run_experiment(spec, workers=None):
    """All trials of an experiment, ordered by (grid value, run)."""
    jobs, keys = [], []
    for value in spec.grid:
        st = spec.setting(value)
        for run in range(spec.runs):
            jobs.append((st, spec.seed, run))
            keys.append((value, run))
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_job, jobs, chunksize=1))
    else:
        results = [_trial_job(j) for j in jobs]
    return [{"experiment": spec.experiment, spec.param: v, "run": r, **res}
            for (v, r), res in zip(keys, results)]


def summarize(rows, param):
    """Mean and normal-approximation 95% CI half-width per grid value."""
    out = []
    values = list(dict.fromkeys(r[param] for r in rows))
    for v in values:
        group = [r for r in rows if r[param] == v]
        rec = {param: v, "runs": len(group)}
        for metric in ("d1", "dinf"):
            a = np.array([r[metric] for r in group])
            sd = a.std(ddof=1) if len(a) > 1 else 0.0
            rec[f"mean_{metric}"] = float(a.mean())
            rec[f"ci_{metric}"] = float(1.96 * sd / math.sqrt(len(a)))
        out.append(rec)
    return out


def format_table(summary, param):
    head = {"p_plus": "p_+", "gt_depth": "D_gt", "depth": "D", "n_train": "n_train"}[param]
    buf = io.StringIO()
    buf.write(f"{head:>10}  {'D1(s_D, s*)':>20}  {'Dinf(s_D, s*)':>20}\n")
    for rec in summary:
        d1 = f"{rec['mean_d1']:.2f} (+-{rec['ci_d1']:.2f})"
        di = f"{rec['mean_dinf']:.2f} (+-{rec['ci_dinf']:.2f})"
        buf.write(f"{rec[param]!s:>10}  {d1:>20}  {di:>20}\n")
    return buf.getvalue()


def _write_csv(path, rows):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


def reproduce(spec, out_dir, workers=None):
    """Run one experiment block and write per-run CSV, summary CSV and table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = run_experiment(spec, workers)
    summary = summarize(rows, spec.param)
    _write_csv(out / f"{spec.experiment}_runs.csv", rows)
    _write_csv(out / f"{spec.experiment}_summary.csv", summary)
    table = format_table(summary, spec.param)
    (out / f"{spec.experiment}_table.txt").write_text(table, encoding="utf-8")
    return summary, table
