"""Command-line front end: simtreerank <command> [flags]."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .core import derive_rng, derive_seed, load_dataset, load_model, save_model
from .experiments import EXPERIMENTS, ExperimentSpec, Setting, n_train_rule, reproduce
from .forest import DEFAULT_PAIRS_PER_TREE, DEFAULT_TREES, subsample, train_forest
from .leafrank import FAMILIES, LeafConfig
from .pairs import build_pairs, is_pair_csv, load_pairs, read_pair_csv, write_pair_csv
from .plot import write_svg
from .roc import auc, l1_dist, read_roc_csv, roc_from_scores, sup_dist, write_roc_csv
from .synth import SyntheticModel, draw_pairs, gen_ground_truth, optimal_roc
from .transform import VARIANTS, SymmetricTransform, apply
from .treerank import SimilarityTree, prune, train

PROG = "simtreerank"


class CliError(Exception):
    pass


# ------------------------------------------------------------------ helpers

def _leaf(args):
    depth = 1 if args.leaf_family == "stump" and args.leaf_depth is None else args.leaf_depth
    return LeafConfig(args.leaf_family, 5 if depth is None else depth, args.min_rows)


def _read_batch(path, transform, label_column, budget=None, seed=0):
    """A PairBatch from a pair CSV (has z) or a labeled dataset CSV."""
    if not Path(path).exists():
        raise CliError(f"{path}: no such file")
    if is_pair_csv(path):
        batch = load_pairs(path, transform)
        return subsample(batch, budget, derive_seed(seed, "pair-rows"))
    data = load_dataset(path, label_column)
    return build_pairs(data, transform, budget, seed)


def _model_scores(model, path):
    """Scores of a loaded model on a pair CSV, plus the labels."""
    x, xp, F, z = _read_pair_file(path)
    if x is not None:
        if x.shape[1] != model.q:
            raise CliError(f"{path}: pairs have dimension {x.shape[1]}, model expects {model.q}")
        return np.asarray(model.score_pairs(x, xp)), z
    if F.shape[1] != 2 * model.q:
        raise CliError(f"{path}: expected {2 * model.q} f_i columns, found {F.shape[1]}")
    return np.asarray(model.score_features(F)), z


def _read_pair_file(path):
    if not Path(path).exists():
        raise CliError(f"{path}: no such file")
    return read_pair_csv(path)


def _dump_json(doc, path=None):
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


# ----------------------------------------------------------------- commands

def cmd_gen(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    gt = gen_ground_truth(args.gt_depth, args.dim, args.delta, args.p_plus,
                          seed=derive_seed(args.seed, "gt"))
    n_train = args.n_train if args.n_train is not None else n_train_rule(args.gt_depth)
    t = SymmetricTransform("diag", args.dim)
    for name, n in (("train", n_train), ("test", args.n_test)):
        x, xp, z, _ = draw_pairs(gt, n, derive_rng(args.seed, name))
        write_pair_csv(out / f"{name}.csv", x, xp, z, apply(t, x, xp) if args.features else None)
    save_model(gt, out / "ground_truth.json")
    print(f"wrote {out / 'train.csv'} ({n_train} pairs), {out / 'test.csv'} ({args.n_test} pairs), "
          f"{out / 'ground_truth.json'}")


def cmd_train(args):
    batch = _read_batch(args.input, args.transform, args.label_column, args.pairs_budget, args.seed)
    tree = train(batch, args.depth, _leaf(args))
    tree.metadata.update(seed=str(args.seed), transform=batch.transform)
    save_model(tree, args.model)
    print(f"trained depth-{tree.depth} tree with {len(tree.splits)} splits on {len(batch)} pairs "
          f"-> {args.model}")


def cmd_train_forest(args):
    if is_pair_csv(args.input):
        source = load_pairs(args.input, args.transform)
    else:
        source = load_dataset(args.input, args.label_column)
    forest = train_forest(source, args.transform, args.trees, args.depth, args.pairs_per_tree,
                          _leaf(args), args.seed, args.workers)
    save_model(forest, args.model)
    print(f"trained forest of {len(forest.trees)} trees -> {args.model}")


def cmd_prune(args):
    tree = load_model(args.model)
    if not isinstance(tree, SimilarityTree):
        raise CliError(f"{args.model}: only single trees can be pruned")
    batch = _read_batch(args.validation, tree.transform, args.label_column)
    if batch.dim != 2 * tree.q:
        raise CliError(f"{args.validation}: pair dimension does not match the model")
    pruned = prune(tree, batch)
    out = args.out or args.model
    save_model(pruned, out)
    print(f"pruned {len(tree.splits) - len(pruned.splits)} of {len(tree.splits)} splits -> {out}")


def cmd_score(args):
    model = load_model(args.model)
    s, _ = _model_scores(model, args.input)
    fh = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        fh.write("score\n")
        integral = np.issubdtype(s.dtype, np.integer)
        for v in s:
            fh.write(f"{int(v)}\n" if integral else f"{float(v)!r}\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_eval(args):
    model = load_model(args.model)
    metrics = args.metrics.split(",") if args.metrics else (
        ["auc", "d1", "d_inf"] if args.ground_truth else ["auc"])
    unknown = set(metrics) - {"auc", "d1", "d_inf"}
    if unknown:
        raise CliError(f"unknown metric(s): {', '.join(sorted(unknown))}")
    if ({"d1", "d_inf"} & set(metrics)) and not args.ground_truth:
        raise CliError("d1 and d_inf need --ground-truth")
    s, z = _model_scores(model, args.test)
    roc = roc_from_scores(s, z)
    if args.roc_out:
        roc_path = Path(args.roc_out)
    elif args.out:
        roc_path = Path(args.out).with_name(Path(args.out).stem + "_roc.csv")
    else:
        roc_path = Path(args.model).with_name(Path(args.model).stem + "_roc.csv")
    write_roc_csv(roc, roc_path)
    report = {"n_test": int(len(z)), "roc_csv": str(roc_path)}
    if "auc" in metrics:
        report["auc"] = auc(roc)
    if args.ground_truth:
        gt = load_model(args.ground_truth)
        if not isinstance(gt, SyntheticModel):
            raise CliError(f"{args.ground_truth}: not a synthetic ground-truth model")
        star = optimal_roc(gt)
        report["auc_star"] = auc(star)
        if "d1" in metrics:
            report["d1"] = l1_dist(roc, star)
        if "d_inf" in metrics:
            report["d_inf"] = sup_dist(roc, star)
    _dump_json(report, args.out)


def cmd_reproduce(args):
    if args.runs < 2:
        raise CliError("reproduce needs --runs >= 2 for confidence intervals")
    names = list(EXPERIMENTS) if args.experiment == "all" else [args.experiment]
    base = Setting(n_test=args.n_test, leaf=_leaf(args))
    for name in names:
        spec = ExperimentSpec(name, args.runs, args.seed, base=base)
        _, table = reproduce(spec, args.out, args.workers)
        print(f"[{name}] runs={args.runs} seed={args.seed}")
        print(table, end="")


def cmd_plot(args):
    if not args.curves:
        raise CliError("plot needs at least one ROC csv")
    labels = args.labels.split(",") if args.labels else [Path(p).stem for p in args.curves]
    if len(labels) != len(args.curves):
        raise CliError("--labels must name every curve")
    curves = []
    for p in args.curves:
        if not Path(p).exists():
            raise CliError(f"{p}: no such file")
        curves.append(read_roc_csv(p))
    write_svg(curves, labels, args.out)
    print(f"wrote {args.out}")


# ------------------------------------------------------------------- parser

def _add_leaf_flags(p, family="tree", depth=None):
    p.add_argument("--leaf-family", choices=FAMILIES, default=family)
    p.add_argument("--leaf-depth", type=int, default=depth,
                   help="LeafRank tree depth (default 5, or 1 for stumps)")
    p.add_argument("--min-rows", type=int, default=8, help="smallest node LeafRank/TreeRank will split")


def build_parser():
    ap = argparse.ArgumentParser(prog=PROG, description="Tree-based similarity learning by ROC optimization.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="draw a synthetic ground truth and train/test pairs")
    p.add_argument("--gt-depth", type=int, default=3)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--p-plus", type=float, default=0.5)
    p.add_argument("--n-train", type=int, default=None, help="default 150*(5/4)^(gt_depth^2)")
    p.add_argument("--n-test", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--features", action="store_true", help="also write diag features f_1..f_2q")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="grow one similarity tree")
    p.add_argument("--input", required=True, help="pair CSV (with z) or labeled dataset CSV")
    p.add_argument("--label-column", default="label")
    p.add_argument("--depth", type=int, default=None, help="default round(sqrt(log n_pairs))")
    p.add_argument("--transform", choices=VARIANTS, default="diag")
    p.add_argument("--pairs-budget", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", required=True)
    _add_leaf_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("train-forest", help="grow a ranking forest on pair subsamples")
    p.add_argument("--input", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--trees", type=int, default=DEFAULT_TREES)
    p.add_argument("--depth", type=int, default=15)
    p.add_argument("--pairs-per-tree", type=int, default=DEFAULT_PAIRS_PER_TREE)
    p.add_argument("--transform", choices=VARIANTS, default="diag")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None, help="default $SIMTREERANK_WORKERS or CPU count")
    p.add_argument("--model", required=True)
    _add_leaf_flags(p)
    p.set_defaults(func=cmd_train_forest)

    p = sub.add_parser("prune", help="merge leaves while validation AUC does not drop")
    p.add_argument("--model", required=True)
    p.add_argument("--validation", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--out", default=None, help="default: overwrite --model")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("score", help="score pairs with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None, help="default stdout")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="test-set ROC, AUC and distances to ROC*")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--ground-truth", default=None)
    p.add_argument("--metrics", default=None, help="comma list of auc,d1,d_inf")
    p.add_argument("--roc-out", default=None)
    p.add_argument("--out", default=None, help="JSON report path (always echoed to stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("reproduce", help="run the synthetic benchmark blocks")
    p.add_argument("--experiment", choices=("all", *EXPERIMENTS), default="all")
    p.add_argument("--runs", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-test", type=int, default=100_000)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default="results")
    _add_leaf_flags(p, family="stump")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("plot", help="overlay ROC csv files in one SVG")
    p.add_argument("curves", nargs="*")
    p.add_argument("--labels", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        args.func(args)
    except CliError as exc:
        if args.command == "plot" and not args.curves:
            ap.error(str(exc))
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
