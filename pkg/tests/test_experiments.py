import numpy as np
import pytest

from simtreerank.experiments import (EXPERIMENTS, ExperimentSpec, Setting, format_table,
                                     n_train_rule, run_experiment, run_trial, summarize)


def test_train_size_rule():
    assert [n_train_rule(d) for d in (1, 2, 3)] == [188, 366, 1118]


def test_default_blocks():
    assert EXPERIMENTS["class-asymmetry"][1] == (0.5, 1e-1, 1e-3, 2e-4)
    assert EXPERIMENTS["model-complexity"][1] == (1, 2, 3, 4)
    assert EXPERIMENTS["model-bias"][1] == (1, 2, 3, 8)
    s = ExperimentSpec("model-complexity").setting(2)
    assert (s.gt_depth, s.depth, s.train_size, s.n_test, s.q, s.delta) == (2, 2, 366, 100_000, 3, 0.01)
    with pytest.raises(ValueError):
        ExperimentSpec("mnist")


def test_learner_only_settings_share_data():
    base = Setting(n_test=3000)
    a = run_trial(base, 0, 1)
    b = run_trial(Setting(n_test=3000, depth=1), 0, 1)
    assert a["auc_star"] == b["auc_star"]
    assert a["n_plus_train"] == b["n_plus_train"]


def test_trial_metrics_sane():
    r = run_trial(Setting(n_test=5000), 4, 0)
    assert 0 <= r["d1"] <= r["dinf"] <= 1
    assert r["auc"] <= r["auc_star"] + 0.02


def test_single_class_training_falls_back():
    setting = Setting(p_plus=2e-3, n_train=20, n_test=20_000)
    r = next(r for r in (run_trial(setting, 0, run) for run in range(10)) if r["n_plus_train"] == 0)
    assert r["auc"] == 0.5


def test_summary_ci():
    rows = [{"depth": 1, "d1": v, "dinf": 2 * v} for v in (0.1, 0.2, 0.3)]
    s = summarize(rows, "depth")[0]
    assert s["mean_d1"] == pytest.approx(0.2)
    assert s["ci_dinf"] == pytest.approx(1.96 * np.std([0.2, 0.4, 0.6], ddof=1) / np.sqrt(3))
    assert "D1(s_D, s*)" in format_table([s], "depth")


def test_parallel_matches_serial():
    spec = ExperimentSpec("model-bias", runs=2, seed=1, values=(1, 2), base=Setting(n_test=2000))
    assert run_experiment(spec, workers=1) == run_experiment(spec, workers=2)
