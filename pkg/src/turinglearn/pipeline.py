"""End-to-end experiment protocol: sample, simulate, featurize, learn.

A sampling plan fixes which kinetic parameters vary and over which ranges.
Draws are rejection-sampled on the pattern-formation criterion so every
retained parameter set actually produces a pattern, then simulated to (near)
steady state, turned into resistance histograms with a dataset-wide cutoff,
and finally fed to one of three regressors (support vector, operator-valued
kernel, or feed-forward network) under a shared train/validation/test
protocol with max-normalized targets.
"""

from __future__ import annotations

import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .features import (
    DegenerateFeatureError,
    RdhConfig,
    collect_resistance_samples,
    compute_rdh,
    connected_components_high,
    maximal_concentration,
    r_max_from_dataset,
)
from .grid import TorusGrid
from .kernels import (
    KernelSpec,
    cross_divergence,
    gram_from_divergence,
    pairwise_divergence,
    wasserstein_sq,
)
from .nn import FfnnModel, TrainSchedule, ffnn_predict, ffnn_train
from .ovk import OvkModel, ovk_predict, ovk_train
from .reactions import GmParams, gm_equilibrium, gm_model
from .resistance import ResistanceSolver, build_pattern_graph
from .simulate import PatternField, SimConfig, coefficient_of_variation, simulate
from .stability import turing_check
from .svr import SvrModel, TrainingError, svr_predict, svr_train

__all__ = [
    "PARAM_NAMES",
    "GAMMA_GRID",
    "LAMBDA_GRID",
    "SamplingPlan",
    "single_parameter_plan",
    "four_parameter_plan",
    "DatasetRecord",
    "Dataset",
    "generate_dataset",
    "split_dataset",
    "normalize_targets",
    "nrmse",
    "GridSearchResult",
    "grid_search",
    "predict_with",
    "FeatureRecipe",
    "TrainedModel",
    "recipe_features",
    "train_model",
    "evaluate_model",
    "averaged_nrmse",
    "cluster_patterns",
    "embed_2d",
]

log = logging.getLogger(__name__)

PARAM_NAMES = ("a", "b", "c", "delta", "s")
GAMMA_GRID = tuple(float(2.0 ** k) for k in range(-6, 7))
LAMBDA_GRID = tuple(float(10.0 ** k) for k in range(-6, 2))

_CV_FLOOR = 1e-3          # below this a pattern counts as homogeneous
_REJECTION_CAP = 50       # max draws per requested record


@dataclass(frozen=True)
class SamplingPlan:
    """Which parameters vary, their ranges, and the dataset geometry."""

    ranges: dict
    fixed: dict
    count: int
    grid_side: int = 64
    radii: tuple = (8.0,)

    def __post_init__(self):
        names = set(self.ranges) | set(self.fixed)
        if names != set(PARAM_NAMES) or set(self.ranges) & set(self.fixed):
            raise ValueError("ranges and fixed must partition the five parameters")
        for name, (lo, hi) in self.ranges.items():
            if not lo < hi:
                raise ValueError(f"empty range for {name}: [{lo}, {hi}]")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not self.radii:
            raise ValueError("at least one histogram radius is required")

    @property
    def target_names(self) -> tuple:
        return tuple(n for n in PARAM_NAMES if n in self.ranges)


def single_parameter_plan(count: int, grid_side: int = 64, radii: tuple = (8.0,)) -> SamplingPlan:
    """Vary the saturation parameter only, everything else held fixed."""
    return SamplingPlan(
        ranges={"c": (0.0, 1.15)},
        fixed={"a": 0.02, "b": 1.0, "delta": 100.0, "s": 0.25},
        count=count,
        grid_side=grid_side,
        radii=tuple(float(r) for r in radii),
    )


def four_parameter_plan(count: int, grid_side: int = 64, radii: tuple = (8.0,)) -> SamplingPlan:
    """Vary a, b, c, and delta jointly; the diffusion scale stays fixed."""
    return SamplingPlan(
        ranges={"a": (0.01, 0.7), "b": (0.4, 2.0), "c": (0.02, 7.0), "delta": (20.0, 200.0)},
        fixed={"s": 0.4},
        count=count,
        grid_side=grid_side,
        radii=tuple(float(r) for r in radii),
    )


@dataclass(frozen=True)
class DatasetRecord:
    """One accepted draw: parameters, run metadata, and extracted features."""

    index: int
    params: GmParams
    seed: int
    converged: bool
    degenerate: bool
    rdh: dict                  # radius -> bin-mass vector; empty when degenerate
    c_m: float | None = None
    n_c: int | None = None
    path: str = ""


@dataclass(frozen=True)
class Dataset:
    """A generated (or reloaded) corpus with its shared histogram cutoffs."""

    plan: SamplingPlan
    master_seed: int
    records: list
    r_max: dict                # radius -> cutoff
    attempts: int
    sim_config: SimConfig = field(default_factory=SimConfig)
    bins: int = 12
    spacing: int = 1
    epsilon_weight: float = 0.003
    species: int = 0
    extras: bool = False

    @property
    def target_names(self) -> tuple:
        return self.plan.target_names

    def usable_records(self) -> list:
        return [r for r in self.records if not r.degenerate]

    def raw_targets(self, records=None) -> np.ndarray:
        records = self.usable_records() if records is None else records
        names = self.target_names
        return np.array([[getattr(r.params, n) for n in names] for r in records])

    def target_max(self) -> np.ndarray:
        return self.raw_targets().max(axis=0)

    def feature_matrix(self, radius: float, extras: bool = False,
                       records=None) -> np.ndarray:
        records = self.usable_records() if records is None else records
        rows = []
        for r in records:
            if radius not in r.rdh:
                raise KeyError(f"record {r.index} has no histogram at radius {radius}")
            row = np.asarray(r.rdh[radius], dtype=float)
            if extras:
                if r.c_m is None or r.n_c is None:
                    raise ValueError(f"record {r.index} has no extra features")
                row = np.concatenate([row, [r.c_m, float(r.n_c)]])
            rows.append(row)
        return np.array(rows)


def _draw_params(plan: SamplingPlan, rng: np.random.Generator) -> GmParams:
    values = dict(plan.fixed)
    for name in PARAM_NAMES:
        if name in plan.ranges:
            lo, hi = plan.ranges[name]
            values[name] = float(rng.uniform(lo, hi))
    return GmParams(**values)


def _is_pattern_forming(params: GmParams) -> bool:
    try:
        u_star = np.array(gm_equilibrium(params))
    except ArithmeticError:
        return False
    return turing_check(gm_model(params), u_star).turing


def _simulate_record(args) -> PatternField:
    params, grid_side, config, seed = args
    return simulate(params, TorusGrid(grid_side), config, seed)


def generate_dataset(
    plan: SamplingPlan,
    config: SimConfig = SimConfig(),
    master_seed: int = 0,
    out_dir: str | os.PathLike | None = None,
    jobs: int = 1,
    extras: bool = False,
    bins: int = 12,
    spacing: int = 1,
    epsilon_weight: float = 0.003,
    species: int = 0,
) -> Dataset:
    """Produce a full dataset: draws, simulations, histograms, and files.

    Parameter draws are rejection-sampled on the pattern-formation check, with
    at most 50 draws per requested record.  Every accepted record carries a
    seed spawned deterministically from ``master_seed``, so results do not
    depend on the number of worker processes.  Patterns whose final state is
    homogeneous (coefficient of variation below 1e-3) are kept in the manifest
    but flagged and excluded from feature extraction.

    When ``out_dir`` is given, pattern files, the manifest, the feature table,
    and a metadata file are written there.
    """
    seq = np.random.SeedSequence(master_seed)
    param_entropy, seed_entropy = seq.spawn(2)
    param_rng = np.random.default_rng(param_entropy)
    seed_rng = np.random.default_rng(seed_entropy)

    accepted: list[GmParams] = []
    seeds: list[int] = []
    attempts = 0
    cap = _REJECTION_CAP * plan.count
    while len(accepted) < plan.count:
        if attempts >= cap:
            raise RuntimeError(
                f"rejection sampling exhausted {cap} draws with only "
                f"{len(accepted)} pattern-forming parameter sets"
            )
        candidate = _draw_params(plan, param_rng)
        attempts += 1
        if _is_pattern_forming(candidate):
            accepted.append(candidate)
            seeds.append(int(seed_rng.integers(2 ** 63)))
    log.info("accepted %d of %d draws", plan.count, attempts)

    tasks = [(p, plan.grid_side, config, s) for p, s in zip(accepted, seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            fields = list(pool.map(_simulate_record, tasks, chunksize=1))
    else:
        fields = [_simulate_record(t) for t in tasks]

    if out_dir is not None:
        from . import storage
        os.makedirs(os.path.join(out_dir, "patterns"), exist_ok=True)

    records: list[DatasetRecord] = []
    nondegenerate: list[int] = []
    with tempfile.TemporaryDirectory(prefix="rdh_samples_") as spool:
        sample_paths: dict[tuple[int, float], str] = {}
        for idx, (params, seed, pattern) in enumerate(zip(accepted, seeds, fields)):
            rel_path = os.path.join("patterns", f"pattern_{idx:04d}.tpat")
            if out_dir is not None:
                storage.write_pattern(os.path.join(out_dir, rel_path), pattern)
            degenerate = coefficient_of_variation(pattern, species) < _CV_FLOOR
            if degenerate:
                log.warning("record %d is homogeneous; skipping feature extraction", idx)
            else:
                nondegenerate.append(idx)
                graph = build_pattern_graph(pattern, species, epsilon_weight)
                solver = ResistanceSolver.from_graph(graph)
                for radius in plan.radii:
                    samples = collect_resistance_samples(graph, radius, spacing, solver)
                    path = os.path.join(spool, f"{idx}_{radius}.npy")
                    np.save(path, samples)
                    sample_paths[(idx, radius)] = path
                del solver
            records.append(DatasetRecord(
                index=idx, params=params, seed=seed, converged=pattern.converged,
                degenerate=degenerate, rdh={}, path=rel_path,
            ))
            log.info("record %d/%d simulated and measured", idx + 1, plan.count)

        if not nondegenerate:
            raise DegenerateFeatureError("every simulated pattern was homogeneous")
        r_max = {
            radius: r_max_from_dataset(
                np.load(sample_paths[(idx, radius)]) for idx in nondegenerate
            )
            for radius in plan.radii
        }

        final_records: list[DatasetRecord] = []
        for idx, record in enumerate(records):
            if record.degenerate:
                final_records.append(record)
                continue
            rdh = {}
            for radius in plan.radii:
                cfg = RdhConfig(radius=radius, r_max=r_max[radius], bins=bins, spacing=spacing)
                samples = np.load(sample_paths[(idx, radius)])
                rdh[radius] = compute_rdh(None, cfg, samples=samples).values
            c_m = n_c = None
            if extras:
                pattern = fields[idx]
                c_m = maximal_concentration(pattern, species)
                n_c = connected_components_high(pattern, species)
            final_records.append(replace(record, rdh=rdh, c_m=c_m, n_c=n_c))

    dataset = Dataset(
        plan=plan, master_seed=master_seed, records=final_records,
        r_max=r_max, attempts=attempts, sim_config=config,
        bins=bins, spacing=spacing, epsilon_weight=epsilon_weight,
        species=species, extras=extras,
    )
    if out_dir is not None:
        from . import storage
        storage.write_dataset_tables(dataset, out_dir)
    return dataset


def split_dataset(n: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Disjoint 60/20/20 index split (rounded), seeded and order-free."""
    if n < 5:
        raise ValueError(f"need at least 5 records to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(0.6 * n))
    n_val = int(round(0.2 * n))
    if n_train + n_val >= n:
        n_val = max(1, n - n_train - 1)
    return perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]


def normalize_targets(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale every target column by its maximum; returns (scaled, maxima)."""
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    maxima = raw.max(axis=0)
    if np.any(maxima <= 0):
        raise ValueError("target normalization needs positive column maxima")
    return raw / maxima, maxima


def nrmse(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Root mean squared error divided by the mean target value.

    Targets must be nonnegative with positive mean; both arguments are
    flattened, so vector targets average over components as well as samples.
    """
    predictions = np.asarray(predictions, dtype=float).ravel()
    targets = np.asarray(targets, dtype=float).ravel()
    if predictions.shape != targets.shape:
        raise ValueError(f"shape mismatch: {predictions.shape} vs {targets.shape}")
    if np.any(targets < 0):
        raise ValueError("targets must be nonnegative")
    mean = float(np.mean(targets))
    if mean <= 0:
        raise ValueError("mean target must be positive for a relative error")
    return float(np.sqrt(np.mean((predictions - targets) ** 2)) / mean)


@dataclass(frozen=True)
class GridSearchResult:
    """Winner of a hyperparameter sweep plus the full score table."""

    method: str
    best: dict
    model: object
    val_nrmse: float
    table: list


def _svr_candidates(kernel_kind, gamma_grid, lambda_grid):
    gammas = [None] if kernel_kind == "chi2" else list(gamma_grid)
    for lam in lambda_grid:
        for gamma in gammas:
            yield lam, gamma


def grid_search(
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_val: np.ndarray,
    y_val: np.ndarray,
    method: str,
    kernel_kind: str = "wasserstein",
    gamma_grid=GAMMA_GRID,
    lambda_grid=LAMBDA_GRID,
    gamma_out_grid=None,
    epsilon_tube: float = 0.01,
    eps_reg: float = 1e-4,
    architectures=None,
    schedule: TrainSchedule | None = None,
    seed: int = 0,
    refine: bool = False,
) -> GridSearchResult:
    """Exhaustive sweep with deterministic tie-breaking.

    Candidates are visited with the regularization weight ascending, then the
    kernel width(s); on equal validation error the earlier candidate wins, so
    ties resolve to the smallest lambda and then the smallest gamma.  With
    ``refine`` a second pass scans a half-decade-spaced local grid around the
    winner.  A support-vector candidate whose training cannot reach its KKT
    certificate is recorded with an infinite validation error and skipped; if
    every candidate fails, :class:`TrainingError` propagates.
    """
    if method == "svr":
        y_train = np.asarray(y_train, dtype=float).ravel()
        y_val = np.asarray(y_val, dtype=float).ravel()
        D_train = pairwise_divergence(kernel_kind, X_train)
        D_cross = cross_divergence(kernel_kind, X_val, X_train)

        def score(lam, gamma):
            gram = gram_from_divergence(kernel_kind, D_train, gamma)
            try:
                model = svr_train(X_train, y_train, KernelSpec(kernel_kind, gamma), lam,
                                  epsilon_tube, gram=gram)
            except TrainingError as error:
                # an ill-conditioned corner of the grid (tiny lambda with a
                # near-singular gram) can stall below certificate accuracy;
                # record the candidate as untrainable and keep sweeping
                log.warning("skipping lambda=%g gamma=%s: %s", lam, gamma, error)
                return np.inf, None
            preds = gram_from_divergence(kernel_kind, D_cross, gamma) @ model.alphas
            return nrmse(preds, y_val), model

        table = []
        best = None
        for lam, gamma in _svr_candidates(kernel_kind, gamma_grid, lambda_grid):
            val, model = score(lam, gamma)
            table.append(({"lambda": lam, "gamma": gamma}, val))
            if model is not None and (best is None or val < best[0]):
                best = (val, {"lambda": lam, "gamma": gamma}, model)
        if best is None:
            raise TrainingError("every hyperparameter candidate failed to train")
        if refine and kernel_kind != "chi2":
            lam0, gamma0 = best[1]["lambda"], best[1]["gamma"]
            for lam in (lam0 * 10 ** -0.5, lam0, lam0 * 10 ** 0.5):
                for gamma in (gamma0 * 2 ** -0.5, gamma0, gamma0 * 2 ** 0.5):
                    val, model = score(lam, gamma)
                    table.append(({"lambda": lam, "gamma": gamma}, val))
                    if model is not None and val < best[0]:
                        best = (val, {"lambda": lam, "gamma": gamma}, model)
        return GridSearchResult("svr", best[1], best[2], best[0], table)

    if method == "ovk":
        Y_train = np.atleast_2d(np.asarray(y_train, dtype=float))
        Y_val = np.atleast_2d(np.asarray(y_val, dtype=float))
        if gamma_out_grid is None:
            gamma_out_grid = gamma_grid
        D_train = pairwise_divergence(kernel_kind, X_train)
        gammas_in = [None] if kernel_kind == "chi2" else list(gamma_grid)
        table = []
        best = None
        for lam in lambda_grid:
            for gamma_in in gammas_in:
                gram = gram_from_divergence(kernel_kind, D_train, gamma_in)
                for gamma_out in gamma_out_grid:
                    model = ovk_train(X_train, Y_train, KernelSpec(kernel_kind, gamma_in),
                                      gamma_out, lam, eps_reg, gram=gram)
                    preds = np.array([ovk_predict(model, x) for x in X_val])
                    val = nrmse(preds, Y_val)
                    hyper = {"lambda": lam, "gamma": gamma_in, "gamma_out": gamma_out}
                    table.append((hyper, val))
                    if best is None or val < best[0]:
                        best = (val, hyper, model)
        return GridSearchResult("ovk", best[1], best[2], best[0], table)

    if method == "ffnn":
        Y_train = np.atleast_2d(np.asarray(y_train, dtype=float))
        Y_val = np.atleast_2d(np.asarray(y_val, dtype=float))
        if architectures is None:
            architectures = [(), (2,), (20,), (5, 10), (10, 10), (20, 20)]
        table = []
        best = None
        for arch in architectures:
            model = ffnn_train(X_train, Y_train, X_val, Y_val, hidden=tuple(arch),
                               schedule=schedule, seed=seed)
            preds = ffnn_predict(model, X_val)
            val = nrmse(preds, Y_val)
            table.append(({"architecture": tuple(arch)}, val))
            if best is None or val < best[0]:
                best = (val, {"architecture": tuple(arch)}, model)
        return GridSearchResult("ffnn", best[1], best[2], best[0], table)

    raise ValueError(f"unknown method {method!r}; expected svr, ovk, or ffnn")


def predict_with(model, X: np.ndarray) -> np.ndarray:
    """Batch predictions for any of the three model families."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if isinstance(model, SvrModel):
        return np.asarray(svr_predict(model, X))
    if isinstance(model, OvkModel):
        return np.array([ovk_predict(model, x) for x in X])
    if isinstance(model, FfnnModel):
        return ffnn_predict(model, X)
    raise TypeError(f"unsupported model type {type(model).__name__}")


@dataclass(frozen=True)
class FeatureRecipe:
    """Everything needed to featurize a new pattern the way a model expects."""

    radius: float
    bins: int
    r_max: float
    spacing: int
    epsilon_weight: float
    species: int
    extras: bool


@dataclass(frozen=True)
class TrainedModel:
    """A fitted regressor bundled with its feature recipe and target scaling."""

    method: str
    core: object
    recipe: FeatureRecipe
    target_names: tuple
    target_max: np.ndarray
    split_seed: int


def recipe_features(pattern: PatternField, recipe: FeatureRecipe) -> np.ndarray:
    """Feature vector of one pattern under a trained model's recipe."""
    graph = build_pattern_graph(pattern, recipe.species, recipe.epsilon_weight)
    cfg = RdhConfig(radius=recipe.radius, r_max=recipe.r_max,
                    bins=recipe.bins, spacing=recipe.spacing)
    row = compute_rdh(graph, cfg).values
    if recipe.extras:
        row = np.concatenate([
            row,
            [maximal_concentration(pattern, recipe.species),
             float(connected_components_high(pattern, recipe.species))],
        ])
    return row


def train_model(
    dataset: Dataset,
    method: str,
    target: str,
    radius: float | None = None,
    split_seed: int = 0,
    **grid_kwargs,
) -> tuple[TrainedModel, GridSearchResult, tuple]:
    """Split, sweep, and bundle one model for a dataset.

    ``target`` is one varying parameter name or "all"; the support vector
    route only handles a single target.  Returns the bundled model, the sweep
    result, and the (train, val, test) index triple into the usable records.
    """
    usable = dataset.usable_records()
    if radius is None:
        radius = dataset.plan.radii[0]
    if radius not in dataset.r_max:
        raise ValueError(f"dataset has no histograms at radius {radius}")
    names = dataset.target_names
    if target == "all":
        columns = list(range(len(names)))
    elif target in names:
        columns = [names.index(target)]
    else:
        raise ValueError(f"target must be one of {names + ('all',)}, got {target!r}")
    if method == "svr" and len(columns) != 1:
        raise ValueError("the support vector route predicts a single target; pick one")

    X = dataset.feature_matrix(radius, extras=dataset.extras)
    raw = dataset.raw_targets()[:, columns]
    y_norm, maxima = normalize_targets(raw)
    if method == "svr":
        y_norm = y_norm[:, 0]
    tr, va, te = split_dataset(len(usable), split_seed)
    result = grid_search(X[tr], y_norm[tr], X[va], y_norm[va], method, **grid_kwargs)
    recipe = FeatureRecipe(
        radius=float(radius), bins=dataset.bins, r_max=float(dataset.r_max[radius]),
        spacing=dataset.spacing, epsilon_weight=dataset.epsilon_weight,
        species=dataset.species, extras=dataset.extras,
    )
    bundled = TrainedModel(
        method=method, core=result.model, recipe=recipe,
        target_names=tuple(names[k] for k in columns),
        target_max=maxima, split_seed=split_seed,
    )
    return bundled, result, (tr, va, te)


def evaluate_model(model: TrainedModel, dataset: Dataset, split: str = "test"):
    """NRMSE of a bundled model on one split of its dataset.

    The split is reconstructed from the seed stored in the model, so the
    evaluated records are exactly those held out at training time.  Returns
    (nrmse, record indices, normalized predictions, normalized targets).
    """
    usable = dataset.usable_records()
    if model.recipe.radius not in dataset.r_max:
        raise ValueError(f"dataset has no histograms at radius {model.recipe.radius}")
    stored = float(dataset.r_max[model.recipe.radius])
    if abs(stored - model.recipe.r_max) > 1e-9 * max(1.0, abs(stored)):
        raise ValueError(
            f"histogram cutoff mismatch: model expects r_max = {model.recipe.r_max}, "
            f"dataset has {stored}"
        )
    names = dataset.target_names
    try:
        columns = [names.index(t) for t in model.target_names]
    except ValueError:
        raise ValueError(
            f"model targets {model.target_names} not all present in dataset targets {names}"
        ) from None
    X = dataset.feature_matrix(model.recipe.radius, extras=model.recipe.extras)
    raw = dataset.raw_targets()[:, columns]
    y_norm = raw / model.target_max
    tr, va, te = split_dataset(len(usable), model.split_seed)
    pick = {"train": tr, "val": va, "test": te}.get(split)
    if pick is None:
        raise ValueError(f"split must be train, val, or test, got {split!r}")
    preds = predict_with(model.core, X[pick])
    if model.method == "svr":
        y_eval = y_norm[pick, 0]
    else:
        y_eval = y_norm[pick]
    return nrmse(preds, y_eval), pick, preds, y_eval


def averaged_nrmse(
    X: np.ndarray,
    y: np.ndarray,
    subset_size: int,
    method: str,
    seed: int = 0,
    **grid_kwargs,
) -> tuple[float, list]:
    """Mean test error over disjoint subsets of the sample pool.

    The pool is permuted once, cut into ``len(X) // subset_size`` disjoint
    subsets of the requested size (a single run for sizes above 500), and the
    full split / sweep / test protocol runs on each.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if subset_size > len(X):
        raise ValueError(f"subset size {subset_size} exceeds pool of {len(X)}")
    n_subsets = 1 if subset_size > 500 else max(1, len(X) // subset_size)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(X))
    runs = []
    for k in range(n_subsets):
        idx = perm[k * subset_size:(k + 1) * subset_size]
        tr, va, te = split_dataset(len(idx), seed + k + 1)
        result = grid_search(X[idx[tr]], y[idx[tr]], X[idx[va]], y[idx[va]],
                             method, seed=seed + k + 1, **grid_kwargs)
        preds = predict_with(result.model, X[idx[te]])
        runs.append(nrmse(preds, y[idx[te]]))
    return float(np.mean(runs)), runs


def cluster_patterns(features: np.ndarray, threshold: float = 0.05) -> np.ndarray:
    """Group histograms by thresholded squared Wasserstein distance.

    Two patterns are neighbours when their distance is at most ``threshold``;
    clusters are the connected components of that graph, labelled by
    decreasing size (ties by smallest member index).
    """
    features = np.atleast_2d(np.asarray(features, dtype=float))
    n = features.shape[0]
    if not threshold >= 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    tails, heads = [], []
    for i in range(n):
        for j in range(i + 1, n):
            if wasserstein_sq(features[i], features[j]) <= threshold:
                tails.append(i)
                heads.append(j)
    adjacency = coo_matrix((np.ones(len(tails)), (tails, heads)), shape=(n, n))
    _, raw_labels = connected_components(adjacency, directed=False)
    order = {}
    sizes = np.bincount(raw_labels)
    first_member = [int(np.argmax(raw_labels == k)) for k in range(len(sizes))]
    ranking = sorted(range(len(sizes)), key=lambda k: (-sizes[k], first_member[k]))
    for new, old in enumerate(ranking):
        order[old] = new
    return np.array([order[k] for k in raw_labels])


def embed_2d(features: np.ndarray) -> np.ndarray:
    """Rank-2 spectral coordinates of the histogram matrix (no centering).

    Rows are projected on the two leading right singular vectors and scaled
    by the singular values.  Signs are fixed so each axis has its largest
    loading positive; a rank-1 matrix gets a zero second coordinate.
    """
    features = np.atleast_2d(np.asarray(features, dtype=float))
    U, S, Vt = np.linalg.svd(features, full_matrices=False)
    coords = np.zeros((features.shape[0], 2))
    for axis in range(min(2, len(S))):
        if S[axis] <= 1e-12 * S[0]:
            log.warning("histogram matrix is effectively rank %d; axis %d zeroed",
                        axis, axis)
            break
        column = U[:, axis] * S[axis]
        loading = Vt[axis]
        if loading[int(np.argmax(np.abs(loading)))] < 0:
            column = -column
        coords[:, axis] = column
    return coords
