"""Pattern graphs and effective resistance between their nodes.

A simulated field is turned into a weighted graph on the torus grid: every
node keeps its four neighbours, and an edge gets weight 1 when both endpoints
lie on the same side of the field's spatial mean, and a small weight
``epsilon_weight`` otherwise.  Effective resistance on that graph then probes
the shape of the level set rather than the raw values: two nodes deep inside
the same plateau are connected by many unit-weight paths and have small
resistance, while crossing a boundary costs roughly 1/epsilon.

With ``L`` the weighted graph Laplacian and ``J`` the all-ones matrix, the
gram matrix ``K = (J + L)^{-1}`` exists for connected graphs and gives

    R(v, w) = K_vv + K_ww - 2 K_vw

which coincides with the usual Moore-Penrose formula because ``J`` and ``L``
act on complementary subspaces.  ``J + L`` is symmetric positive definite, so
a Cholesky factorization is computed once per graph; single pairs trigger two
triangular solves, bulk queries invert the factor in place.

Dense factorizations are not equivariant in floating point: permuting the
nodes perturbs every resistance by roughly the factorization's rounding
error, which is enough to move knife-edge values across histogram bin
boundaries.  Feature extraction therefore canonicalizes the node labeling
over the torus symmetry group (see :func:`build_pattern_graph`), making the
computed values bit-identical for all symmetric copies of a pattern.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lapack

from .grid import TorusGrid
from .simulate import PatternField

__all__ = [
    "PatternGraph",
    "ResistanceSolver",
    "build_pattern_graph",
    "resistance",
]


@dataclass(frozen=True)
class PatternGraph:
    """Weighted 4-neighbour graph on a torus derived from one species field.

    ``weights`` has shape (2, m): row 0 holds the weight of each node's edge to
    its right neighbour, row 1 to the neighbour below (both wrapping).  Every
    edge therefore appears exactly once.
    """

    grid: TorusGrid
    weights: np.ndarray
    epsilon_weight: float
    mean_concentration: float

    def __post_init__(self):
        m = self.grid.node_count
        if self.weights.shape != (2, m):
            raise ValueError(f"weights must have shape (2, {m}), got {self.weights.shape}")
        if not np.all(self.weights > 0):
            raise ValueError("edge weights must be strictly positive")

    def laplacian(self) -> np.ndarray:
        """Assemble the dense weighted graph Laplacian (m x m)."""
        n = self.grid.side
        m = self.grid.node_count
        nodes = np.arange(m)
        idx = nodes.reshape(n, n)
        right = np.roll(idx, -1, axis=1).ravel()
        down = np.roll(idx, -1, axis=0).ravel()
        L = np.zeros((m, m))
        for targets, w in ((right, self.weights[0]), (down, self.weights[1])):
            L[nodes, targets] -= w
            L[targets, nodes] -= w
            L[nodes, nodes] += w
            L[targets, targets] += w
        return L

    def edge_list(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (tail, head, weight) arrays, one entry per undirected edge."""
        n = self.grid.side
        nodes = np.arange(self.grid.node_count)
        idx = nodes.reshape(n, n)
        right = np.roll(idx, -1, axis=1).ravel()
        down = np.roll(idx, -1, axis=0).ravel()
        tails = np.concatenate([nodes, nodes])
        heads = np.concatenate([right, down])
        return tails, heads, self.weights.ravel().copy()


def _dihedral_variants(mask: np.ndarray):
    yield mask
    for k in range(1, 4):
        yield np.rot90(mask, k)
    flipped = mask[:, ::-1]
    yield flipped
    for k in range(1, 4):
        yield np.rot90(flipped, k)


def _canonical_high_mask(high: np.ndarray) -> np.ndarray:
    """Relabel a level-set mask to a canonical representative of its orbit.

    The orbit runs over all torus symmetries: cyclic translations composed
    with the dihedral point group.  Each candidate relabeling is normalized by
    its corner bit (which also identifies a mask with its complement) and the
    lexicographically smallest bit string wins.  Two patterns related by any
    of these symmetries, or by reflecting values through their mean, thus
    yield one identical mask, and every float computed downstream from it is
    bit-for-bit reproducible across the whole symmetry class.
    """
    n = high.shape[0]
    width = max(n * n // 8, 1)
    best = None
    for variant in _dihedral_variants(high):
        tiled = np.tile(variant, (2, 2))
        windows = np.lib.stride_tricks.sliding_window_view(tiled, (n, n))[:n, :n]
        normalized = windows ^ windows[:, :, :1, :1]
        packed = np.packbits(normalized.reshape(n * n, n * n), axis=1).tobytes()
        for i in range(n * n):
            candidate = packed[i * width:(i + 1) * width]
            if best is None or candidate < best:
                best = candidate
    bits = np.unpackbits(np.frombuffer(best, dtype=np.uint8), count=n * n)
    return bits.astype(bool).reshape(n, n)


def build_pattern_graph(
    pattern: PatternField,
    species: int = 0,
    epsilon_weight: float = 0.003,
    canonical: bool = True,
) -> PatternGraph:
    """Assign edge weights by the same-side-of-mean rule.

    Nodes with value >= the spatial mean count as high; an edge keeps weight 1
    when both endpoints are high or both are low, and drops to
    ``epsilon_weight`` when the edge crosses the level set.

    With ``canonical`` (the default) the node labeling is canonicalized over
    the torus symmetry group first, so translated, rotated, reflected, shifted,
    rescaled, or mean-inverted copies of a pattern produce bit-identical
    graphs, and with them bit-identical resistance histograms.  Pass
    ``canonical=False`` to keep the pattern's own node labels, as per-node
    reporting (a resistance map) must.
    """
    if not 0 <= species < pattern.species.shape[0]:
        raise IndexError(f"species index {species} out of range")
    if not 0 < epsilon_weight <= 1:
        raise ValueError(f"epsilon_weight must lie in (0, 1], got {epsilon_weight}")
    n = pattern.grid.side
    values = pattern.species[species].reshape(n, n)
    mean = float(np.mean(values))
    high = values >= mean
    if canonical:
        high = _canonical_high_mask(high)
    same_right = high == np.roll(high, -1, axis=1)
    same_down = high == np.roll(high, -1, axis=0)
    weights = np.where(
        np.stack([same_right.ravel(), same_down.ravel()]), 1.0, epsilon_weight
    )
    return PatternGraph(pattern.grid, weights, epsilon_weight, mean)


class ResistanceSolver:
    """Effective-resistance queries against one fixed weighted Laplacian.

    Parameters
    ----------
    laplacian : ndarray, shape (m, m)
        Symmetric weighted graph Laplacian of a connected graph.  The solver
        factors ``laplacian + 1`` (the all-ones matrix added elementwise) once.
    """

    def __init__(self, laplacian: np.ndarray):
        laplacian = np.asarray(laplacian, dtype=float)
        if laplacian.ndim != 2 or laplacian.shape[0] != laplacian.shape[1]:
            raise ValueError("laplacian must be a square matrix")
        self.size = laplacian.shape[0]
        self._factor = cho_factor(laplacian + 1.0, lower=True)
        self._columns: dict[int, np.ndarray] = {}
        self._gram_lower: np.ndarray | None = None

    @classmethod
    def from_graph(cls, graph: PatternGraph) -> "ResistanceSolver":
        return cls(graph.laplacian())

    def column(self, v: int) -> np.ndarray:
        """One column of the gram matrix K, solved lazily and cached."""
        if not 0 <= v < self.size:
            raise IndexError(f"node id {v} outside graph with {self.size} nodes")
        col = self._columns.get(v)
        if col is None:
            rhs = np.zeros(self.size)
            rhs[v] = 1.0
            col = cho_solve(self._factor, rhs)
            self._columns[v] = col
        return col

    def resistance(self, v: int, w: int) -> float:
        """R(v, w) from two gram columns; zero for v == w."""
        if v == w:
            self.column(v)  # still validates the index
            return 0.0
        col_v = self.column(v)
        col_w = self.column(w)
        return float(col_v[v] + col_w[w] - col_v[w] - col_w[v])

    def gram_lower(self) -> np.ndarray:
        """Full gram matrix with only the lower triangle populated.

        Computed from the Cholesky factor in place (LAPACK dpotri) and cached;
        entries with row < col are unspecified.  Bulk pair queries index it as
        ``K[max(v, w), min(v, w)]``.
        """
        if self._gram_lower is None:
            inv, info = lapack.dpotri(self._factor[0], lower=1)
            if info != 0:
                raise ArithmeticError(f"gram inversion failed (dpotri info {info})")
            self._gram_lower = inv
        return self._gram_lower

    def pair_resistances(self, tails: np.ndarray, heads: np.ndarray) -> np.ndarray:
        """Vectorized R(tails[i], heads[i]) via the full gram inverse."""
        K = self.gram_lower()
        diag = np.diagonal(K)
        lo = np.minimum(tails, heads)
        hi = np.maximum(tails, heads)
        return diag[tails] + diag[heads] - 2.0 * K[hi, lo]


def resistance(graph: PatternGraph, v: int, w: int) -> float:
    """Effective resistance between two nodes of a pattern graph.

    Convenience wrapper that factors the graph on every call; for repeated
    queries build a :class:`ResistanceSolver` once instead.
    """
    return ResistanceSolver.from_graph(graph).resistance(v, w)
