"""Command-line entry points for simulation, features, and learning.

Every subcommand prints stable ``key=value`` lines on stdout and writes any
bulk output (patterns, CSV tables, model files) to the paths given by its
flags.  Failures surface as a one-line ``error: ...`` diagnostic on stderr and
a nonzero exit code.  All randomness is controlled through ``--seed`` flags or
the config file's master seed.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from . import config as config_mod
from . import pipeline, storage
from .features import DegenerateFeatureError, RdhConfig, compute_rdh
from .reactions import GmParams, gm_equilibrium, gm_model
from .resistance import ResistanceSolver, build_pattern_graph
from .grid import TorusGrid
from .simulate import coefficient_of_variation, simulate
from .stability import turing_check

__all__ = ["main"]

_KERNEL_CHOICES = ("chi2", "chi2exp", "wasserstein")


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _emit(key: str, value) -> None:
    print(f"{key}={_fmt(value)}")


def _parse_params(raw: str) -> GmParams:
    parts = [tok.strip() for tok in raw.split(",")]
    if len(parts) != 5:
        raise ValueError(f"--params needs five comma-separated values a,b,c,delta,s, got {raw!r}")
    a, b, c, delta, s = (float(tok) for tok in parts)
    return GmParams(a=a, b=b, c=c, delta=delta, s=s)


def _parse_node(raw: str, side: int) -> int:
    parts = [tok.strip() for tok in raw.split(",")]
    if len(parts) != 2:
        raise ValueError(f"--node needs a row,col pair, got {raw!r}")
    row, col = int(parts[0]), int(parts[1])
    if not (0 <= row < side and 0 <= col < side):
        raise ValueError(f"node ({row}, {col}) outside a {side}x{side} grid")
    return row * side + col


def _load_run_config(path) -> config_mod.RunConfig:
    if path is None:
        return config_mod.default_config()
    return config_mod.load_config(path)


def _cmd_simulate(args) -> int:
    cfg = _load_run_config(args.config)
    params = _parse_params(args.params)
    pattern = simulate(params, TorusGrid(args.grid), cfg.sim, args.seed)
    storage.write_pattern(args.out, pattern)
    _emit("converged", pattern.converged)
    _emit("elapsed_time", pattern.elapsed_time)
    _emit("out", args.out)
    return 0


def _cmd_stability(args) -> int:
    params = _parse_params(args.params)
    u_star = np.array(gm_equilibrium(params))
    report = turing_check(gm_model(params), u_star)
    _emit("turing", report.turing)
    _emit("ode_stable", report.ode_stable)
    _emit("q2_star", report.q2_star)
    _emit("max_growth", report.max_growth)
    if args.dispersion_out:
        with open(args.dispersion_out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["q2", "growth"])
            for q2, g in zip(report.q2_grid, report.growth):
                writer.writerow([repr(float(q2)), repr(float(g))])
        _emit("dispersion_out", args.dispersion_out)
    return 0


def _cmd_dataset_generate(args) -> int:
    cfg = _load_run_config(args.config)
    master_seed = cfg.master_seed if args.seed is None else args.seed
    dataset = pipeline.generate_dataset(
        cfg.plan, cfg.sim, master_seed=master_seed, out_dir=args.out,
        jobs=args.jobs, extras=cfg.extras, bins=cfg.bins, spacing=cfg.spacing,
        epsilon_weight=cfg.epsilon_weight, species=cfg.species,
    )
    _emit("records", len(dataset.records))
    _emit("attempts", dataset.attempts)
    _emit("degenerate", sum(1 for r in dataset.records if r.degenerate))
    for radius in dataset.plan.radii:
        _emit(f"r_max_{_fmt(float(radius))}", dataset.r_max[radius])
    _emit("out", args.out)
    return 0


def _cmd_features(args) -> int:
    pattern = storage.read_pattern(args.pattern)
    if args.features_mode == "resistance-map":
        node = _parse_node(args.node, pattern.grid.side)
        # the map reports per-node values, so keep the pattern's own labels
        graph = build_pattern_graph(pattern, args.species, args.epsilon_weight,
                                    canonical=False)
        solver = ResistanceSolver.from_graph(graph)
        m = pattern.grid.node_count
        values = solver.pair_resistances(np.full(m, node), np.arange(m))
        side = pattern.grid.side
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row", "col", "resistance"])
            for w in range(m):
                writer.writerow([w // side, w % side, repr(float(values[w]))])
        _emit("node", args.node)
        _emit("out", args.out)
        return 0

    if coefficient_of_variation(pattern, args.species) < 1e-3:
        raise DegenerateFeatureError(
            "pattern is spatially homogeneous; resistance histogram undefined"
        )
    graph = build_pattern_graph(pattern, args.species, args.epsilon_weight)
    cfg = RdhConfig(radius=args.radius, r_max=args.rmax, bins=args.bins,
                    spacing=args.spacing)
    rdh = compute_rdh(graph, cfg)
    for k, mass in enumerate(rdh.values, start=1):
        _emit(f"bin_{k}", mass)
    c_m = n_c = None
    if args.extras:
        from .features import connected_components_high, maximal_concentration
        c_m = maximal_concentration(pattern, args.species)
        n_c = connected_components_high(pattern, args.species)
        _emit("c_m", c_m)
        _emit("n_c", n_c)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "radius"]
                            + [f"bin_{k}" for k in range(1, args.bins + 1)]
                            + ["c_m", "n_c"])
            row = [0, repr(float(args.radius))]
            row.extend(repr(float(v)) for v in rdh.values)
            row.append("" if c_m is None else repr(float(c_m)))
            row.append("" if n_c is None else str(int(n_c)))
            writer.writerow(row)
        _emit("out", args.out)
    return 0


def _format_architecture(arch) -> str:
    return "linear" if not arch else "x".join(str(w) for w in arch)


def _cmd_train(args) -> int:
    cfg = _load_run_config(args.config)
    dataset = storage.load_dataset(args.dataset)
    kernel_kind = args.kernel or cfg.kernel_kind
    bundled, result, (tr, va, te) = pipeline.train_model(
        dataset, args.method, args.target, radius=args.radius,
        split_seed=args.seed, kernel_kind=kernel_kind,
        gamma_grid=cfg.gamma_grid, lambda_grid=cfg.lambda_grid,
        gamma_out_grid=cfg.gamma_out_grid, epsilon_tube=cfg.epsilon_tube,
        eps_reg=cfg.eps_reg, architectures=cfg.architectures,
        schedule=cfg.schedule(), seed=args.seed, refine=args.refine,
    )
    storage.write_model(args.out, bundled)
    _emit("method", args.method)
    _emit("target", args.target)
    _emit("radius", bundled.recipe.radius)
    _emit("n_train", len(tr))
    _emit("n_val", len(va))
    _emit("n_test", len(te))
    for key, value in result.best.items():
        if key == "architecture":
            _emit("architecture", _format_architecture(value))
        elif value is not None:
            _emit(key, value)
    _emit("val_nrmse", result.val_nrmse)
    _emit("out", args.out)
    return 0


def _cmd_predict(args) -> int:
    model = storage.read_model(args.model)
    pattern = storage.read_pattern(args.pattern)
    if coefficient_of_variation(pattern, model.recipe.species) < 1e-3:
        raise DegenerateFeatureError(
            "pattern is spatially homogeneous; resistance histogram undefined"
        )
    row = pipeline.recipe_features(pattern, model.recipe)
    preds = pipeline.predict_with(model.core, row[None, :])
    scaled = np.atleast_2d(preds)[0] * model.target_max
    for name, value in zip(model.target_names, np.atleast_1d(scaled)):
        _emit(name, value)
    return 0


def _cmd_evaluate(args) -> int:
    model = storage.read_model(args.model)
    dataset = storage.load_dataset(args.dataset)
    score, pick, preds, y_eval = pipeline.evaluate_model(model, dataset, args.split)
    _emit("split", args.split)
    _emit("n", len(pick))
    _emit("nrmse", score)
    if args.out:
        usable = dataset.usable_records()
        preds2 = np.atleast_2d(np.asarray(preds, dtype=float))
        if preds2.shape[0] == 1 and len(pick) == 1:
            pass
        elif preds2.shape[0] != len(pick):
            preds2 = preds2.T
        true2 = np.atleast_2d(np.asarray(y_eval, dtype=float))
        if true2.shape[0] != len(pick):
            true2 = true2.T
        names = model.target_names
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id"] + [f"true_{n}" for n in names]
                            + [f"pred_{n}" for n in names] + ["rmse_normalized"])
            for k, rec_idx in enumerate(pick):
                record = usable[rec_idx]
                truth = true2[k] * model.target_max
                guess = preds2[k] * model.target_max
                row_err = float(np.sqrt(np.mean((preds2[k] - true2[k]) ** 2)))
                writer.writerow([record.index]
                                + [repr(float(v)) for v in truth]
                                + [repr(float(v)) for v in guess]
                                + [repr(row_err)])
        _emit("out", args.out)
    return 0


def _dataset_features(dataset, radius):
    if radius is None:
        radius = dataset.plan.radii[0]
    if radius not in dataset.r_max:
        raise ValueError(f"dataset has no histograms at radius {radius}")
    records = dataset.usable_records()
    return records, dataset.feature_matrix(radius, records=records)


def _cmd_cluster(args) -> int:
    dataset = storage.load_dataset(args.dataset)
    records, X = _dataset_features(dataset, args.radius)
    labels = pipeline.cluster_patterns(X, args.threshold)
    _emit("n_patterns", len(records))
    _emit("n_components", int(labels.max()) + 1 if len(labels) else 0)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "component"])
        for record, label in zip(records, labels):
            writer.writerow([record.index, int(label)])
    _emit("out", args.out)
    return 0


def _cmd_embed(args) -> int:
    dataset = storage.load_dataset(args.dataset)
    records, X = _dataset_features(dataset, args.radius)
    coords = pipeline.embed_2d(X)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "x", "y"])
        for record, (x, y) in zip(records, coords):
            writer.writerow([record.index, repr(float(x)), repr(float(y))])
    _emit("n_patterns", len(records))
    _emit("out", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="turinglearn",
        description="Simulate reaction-diffusion patterns and learn parameters back from them.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="increase log verbosity (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one parameter set to (near) steady state")
    p.add_argument("--params", required=True, metavar="a,b,c,delta,s")
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None, help="config file overriding integrator settings")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("stability", help="classify an equilibrium and report the dispersion scan")
    p.add_argument("--params", required=True, metavar="a,b,c,delta,s")
    p.add_argument("--dispersion-out", default=None)
    p.set_defaults(func=_cmd_stability)

    p = sub.add_parser("dataset", help="dataset-level operations")
    dataset_sub = p.add_subparsers(dest="dataset_cmd", required=True)
    g = dataset_sub.add_parser("generate", help="sample, simulate, and featurize a corpus")
    g.add_argument("--config", default=None)
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=None, help="override the config master seed")
    g.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    g.set_defaults(func=_cmd_dataset_generate)

    p = sub.add_parser("features", help="histogram features of one stored pattern")
    p.add_argument("--pattern")
    p.add_argument("--radius", type=float, default=8.0)
    p.add_argument("--bins", type=int, default=12)
    p.add_argument("--rmax", type=float, default=None)
    p.add_argument("--spacing", type=int, default=1)
    p.add_argument("--epsilon-weight", type=float, default=0.003)
    p.add_argument("--species", type=int, default=0)
    p.add_argument("--extras", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_features, features_mode=None)
    feat_sub = p.add_subparsers(dest="features_mode")
    r = feat_sub.add_parser("resistance-map",
                            help="resistance from one node to every node, as CSV")
    r.add_argument("--pattern", required=True)
    r.add_argument("--node", required=True, metavar="row,col")
    r.add_argument("--epsilon-weight", type=float, default=0.003)
    r.add_argument("--species", type=int, default=0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=_cmd_features)

    p = sub.add_parser("train", help="fit one regressor on a dataset directory")
    p.add_argument("--method", required=True, choices=("svr", "ovk", "ffnn"))
    p.add_argument("--dataset", required=True)
    p.add_argument("--target", required=True, choices=("a", "b", "c", "delta", "all"))
    p.add_argument("--out", required=True)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--kernel", choices=_KERNEL_CHOICES, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--refine", action="store_true",
                   help="second, finer sweep around the grid winner")
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="denormalized parameter estimates for one pattern")
    p.add_argument("--model", required=True)
    p.add_argument("--pattern", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="error of a stored model on its dataset split")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.add_argument("--out", default=None, help="per-record error CSV")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("cluster", help="group patterns by histogram distance")
    p.add_argument("--dataset", required=True)
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("embed", help="rank-2 spectral coordinates of the histogram matrix")
    p.add_argument("--dataset", required=True)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_embed)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "command", None) == "features" and args.features_mode is None:
        if not args.pattern:
            print("error: --pattern is required", file=sys.stderr)
            return 1
        if args.rmax is None:
            print("error: --rmax is required (the dataset-wide histogram cutoff)",
                  file=sys.stderr)
            return 1
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError, ArithmeticError, KeyError, TypeError) as exc:
        message = str(exc) or type(exc).__name__
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
