"""Histogram features summarizing a simulated pattern.

The central feature is the resistance histogram: for every node of a chosen
sub-lattice, the effective resistance to every node within a toroidal radius
is collected, and the resulting value multiset is binned on a fixed interval
[0, r_max) shared by the whole dataset.  Because edge weights only depend on
which side of the spatial mean each node falls on, the histogram is unchanged
under translations, 90-degree rotations, and affine changes of the value
scale, which is exactly what makes it a useful pattern descriptor.

Two scalar companions are provided: the location of the right-most mode of the
concentration histogram, and the number of connected high-concentration
clusters (spot count) of the thresholded pattern.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .resistance import PatternGraph, ResistanceSolver
from .simulate import PatternField

__all__ = [
    "RdhConfig",
    "Rdh",
    "DegenerateFeatureError",
    "collect_resistance_samples",
    "compute_rdh",
    "r_max_from_dataset",
    "maximal_concentration",
    "connected_components_high",
]


class DegenerateFeatureError(ValueError):
    """A pattern too uniform (or a cutoff too small) to yield a histogram."""


@dataclass(frozen=True)
class RdhConfig:
    """Binning geometry for resistance histograms.

    ``r_max`` is a dataset-level cutoff: values at or above it are discarded
    before normalization, so histograms from different patterns share their
    support.  ``spacing`` subsamples the source nodes to every t-th row and
    column.
    """

    radius: float
    r_max: float
    bins: int = 12
    spacing: int = 1

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be > 0, got {self.radius}")
        if not (np.isfinite(self.r_max) and self.r_max > 0):
            raise ValueError(f"r_max must be finite and > 0, got {self.r_max}")
        if self.bins < 1:
            raise ValueError(f"bins must be >= 1, got {self.bins}")
        if self.spacing < 1:
            raise ValueError(f"spacing must be >= 1, got {self.spacing}")


@dataclass(frozen=True)
class Rdh:
    """A normalized resistance histogram: nonnegative masses summing to 1."""

    values: np.ndarray
    r_max: float
    radius: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("histogram masses must be one-dimensional")
        if np.any(values < 0) or not np.isclose(values.sum(), 1.0, atol=1e-9):
            raise ValueError("histogram masses must be nonnegative and sum to 1")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@lru_cache(maxsize=32)
def _disc_offsets(side: int, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """All (di, dj) displacement pairs within toroidal distance ``radius``."""
    shifts = np.arange(side)
    folded = np.minimum(shifts, side - shifts)
    dist2 = folded[:, None] ** 2 + folded[None, :] ** 2
    di, dj = np.nonzero(dist2 <= radius * radius)
    di.setflags(write=False)
    dj.setflags(write=False)
    return di, dj


def collect_resistance_samples(
    graph: PatternGraph,
    radius: float,
    spacing: int = 1,
    solver: ResistanceSolver | None = None,
) -> np.ndarray:
    """The resistance value multiset feeding quantiles and histograms.

    For every source node on the sub-lattice with the given spacing, the
    resistance to every node within the toroidal radius is computed, the
    source itself included (contributing zero).  Ordered pairs are collected,
    so for spacing 1 each unordered pair appears twice; that constant
    multiplicity cancels under normalization.
    """
    n = graph.grid.side
    if spacing < 1 or n % spacing:
        raise ValueError(f"spacing must be >= 1 and divide the grid side {n}")
    if solver is None:
        solver = ResistanceSolver.from_graph(graph)
    di_all, dj_all = _disc_offsets(n, radius)
    rows, cols = np.meshgrid(np.arange(0, n, spacing), np.arange(0, n, spacing), indexing="ij")
    src = (rows * n + cols).ravel()
    src_rows, src_cols = rows.ravel(), cols.ravel()
    out = np.empty(len(di_all) * len(src))
    for k in range(len(di_all)):
        tgt = ((src_rows + int(di_all[k])) % n) * n + (src_cols + int(dj_all[k])) % n
        out[k * len(src):(k + 1) * len(src)] = solver.pair_resistances(src, tgt)
    return out


def compute_rdh(
    graph: PatternGraph,
    config: RdhConfig,
    solver: ResistanceSolver | None = None,
    samples: np.ndarray | None = None,
) -> Rdh:
    """Bin the resistance multiset into a normalized histogram.

    Bins partition [0, r_max) uniformly; values >= r_max are discarded before
    normalization.  ``samples`` may carry a previously collected multiset for
    this graph and configuration to avoid recomputing the solve.

    Raises
    ------
    DegenerateFeatureError
        If every collected value falls at or beyond ``r_max``.
    """
    if samples is None:
        samples = collect_resistance_samples(graph, config.radius, config.spacing, solver)
    samples = np.asarray(samples, dtype=float)
    kept = samples[samples < config.r_max]
    if kept.size == 0:
        raise DegenerateFeatureError(
            f"no resistance values below r_max = {config.r_max}; histogram undefined"
        )
    idx = np.floor(kept * (config.bins / config.r_max)).astype(np.intp)
    np.clip(idx, 0, config.bins - 1, out=idx)
    counts = np.bincount(idx, minlength=config.bins).astype(float)
    return Rdh(values=counts / kept.size, r_max=config.r_max, radius=config.radius)


def r_max_from_dataset(samples_per_pattern, quantile: float = 0.99) -> float:
    """Dataset-level histogram cutoff: max over patterns of a high quantile.

    Each element of ``samples_per_pattern`` is one pattern's resistance
    multiset; its ``quantile`` (linear interpolation) is taken, and the
    largest such value across the dataset becomes the shared cutoff.
    """
    per_pattern = [float(np.quantile(np.asarray(s, dtype=float), quantile))
                   for s in samples_per_pattern]
    if not per_pattern:
        raise ValueError("need at least one pattern to fix the histogram cutoff")
    return max(per_pattern)


def maximal_concentration(pattern: PatternField, species: int = 0, bins: int = 25) -> float:
    """Center of the right-most local maximum of the concentration histogram.

    The species values are binned uniformly between their minimum and maximum;
    a bin is a local maximum when its count is >= both neighbours (one-sided
    at the boundary).  For a constant field the value itself is returned.
    """
    values = pattern.species[species]
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi == lo:
        return lo
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    padded = np.concatenate([[-1.0], counts.astype(float), [-1.0]])
    is_peak = (padded[1:-1] >= padded[:-2]) & (padded[1:-1] >= padded[2:])
    k = int(np.nonzero(is_peak)[0].max())
    return float(0.5 * (edges[k] + edges[k + 1]))


def connected_components_high(pattern: PatternField, species: int = 0) -> int:
    """Number of connected clusters of at-least-mean concentration.

    The subgraph induced by nodes with value >= the spatial mean keeps only
    edges between two such nodes; isolated high nodes count as clusters of
    their own.  Returns 0 when no node reaches the mean.
    """
    n = pattern.grid.side
    values = pattern.species[species].reshape(n, n)
    high = values >= np.mean(values)
    n_high = int(np.count_nonzero(high))
    if n_high == 0:
        return 0
    m = pattern.grid.node_count
    idx = np.arange(m).reshape(n, n)
    tails, heads = [], []
    for axis in (0, 1):
        both = high & np.roll(high, -1, axis=axis)
        tails.append(idx[both])
        heads.append(np.roll(idx, -1, axis=axis)[both])
    tails = np.concatenate(tails)
    heads = np.concatenate(heads)
    adjacency = coo_matrix(
        (np.ones(len(tails)), (tails, heads)), shape=(m, m)
    )
    n_comp, _ = connected_components(adjacency, directed=False)
    # low nodes have no incident edges and show up as singleton components
    return int(n_comp - (m - n_high))
