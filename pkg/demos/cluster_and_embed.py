"""Histogram geometry: grouping patterns and charting them in 2-D.

Patterns simulated at three well-separated saturation levels are reduced
to resistance histograms, grouped by thresholded transport distance, and
projected to two spectral coordinates.  The printout shows which group
each saturation level landed in and an ASCII scatter of the projection.
"""

import numpy as np

from turinglearn import (
    GmParams,
    RdhConfig,
    SimConfig,
    TorusGrid,
    build_pattern_graph,
    cluster_patterns,
    collect_resistance_samples,
    compute_rdh,
    embed_2d,
    r_max_from_dataset,
    simulate,
)

C_LEVELS = (0.1, 0.6, 1.1)
SEEDS = range(4)
SIDE = 32
RADIUS = 6.0
# transport distances shrink with grid side and sampling radius, so this
# small-scale demo needs a wider neighbour threshold than the full-scale
# default of 0.05
THRESHOLD = 1.7


def main():
    print(f"simulating {len(C_LEVELS) * len(SEEDS)} patterns "
          f"at c in {C_LEVELS} ...")
    patterns, labels = [], []
    for c in C_LEVELS:
        params = GmParams(a=0.02, b=1.0, c=c, delta=100.0, s=0.25)
        for seed in SEEDS:
            patterns.append(simulate(params, TorusGrid(SIDE), SimConfig(), seed=seed))
            labels.append(c)

    graphs = [build_pattern_graph(p) for p in patterns]
    samples = [collect_resistance_samples(g, RADIUS) for g in graphs]
    config = RdhConfig(radius=RADIUS, r_max=r_max_from_dataset(samples), bins=12)
    X = np.stack([compute_rdh(g, config, samples=s).values
                  for g, s in zip(graphs, samples)])

    components = cluster_patterns(X, threshold=THRESHOLD)
    print("\ncluster membership (component: saturation values):")
    for component in np.unique(components):
        members = [labels[i] for i in np.flatnonzero(components == component)]
        print(f"  {component}: {members}")

    coords = embed_2d(X)
    print("\n2-D embedding (rows y, columns x; digits index the c levels):")
    span = coords.max(axis=0) - coords.min(axis=0)
    span[span == 0] = 1.0
    cells = np.round(18 * (coords - coords.min(axis=0)) / span).astype(int)
    canvas = [[" "] * 20 for _ in range(19)]
    for (x, y), c in zip(cells, labels):
        canvas[18 - y][x] = str(C_LEVELS.index(c))
    for row in canvas:
        print("  |" + "".join(row))
    print("  +" + "-" * 20)
    for k, c in enumerate(C_LEVELS):
        print(f"  {k} = c {c}")


if __name__ == "__main__":
    main()
