"""Simulate steady patterns at a few saturation levels and save them.

Each run integrates the reaction-diffusion system to steady state, prints
a coarse ASCII rendering of the activator field (high cells as '#'), and
writes the full state to a pattern file that `read_pattern` or the CLI can
load back bit for bit.
"""

import argparse
import pathlib

import numpy as np

from turinglearn import GmParams, SimConfig, TorusGrid, coefficient_of_variation, simulate
from turinglearn.storage import write_pattern

BASE = dict(a=0.02, b=1.0, delta=100.0, s=0.25)


def render(values: np.ndarray, width: int = 32) -> str:
    side = values.shape[0]
    step = max(1, side // width)
    coarse = values[::step, ::step]
    high = coarse >= values.mean()
    return "\n".join("".join("#" if cell else "." for cell in row) for row in high)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--side", type=int, default=64, help="grid side length")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="gallery", help="output directory")
    args = parser.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = TorusGrid(args.side)

    for c in (0.1, 0.5, 0.9):
        params = GmParams(c=c, **BASE)
        pattern = simulate(params, grid, SimConfig(), seed=args.seed)
        cv = coefficient_of_variation(pattern)
        print(f"c = {c}: elapsed t = {pattern.elapsed_time:.0f}, "
              f"converged = {pattern.converged}, activator CV = {cv:.3f}")
        print(render(pattern.species[0].reshape(args.side, args.side)))
        path = out / f"pattern_c{c:.2f}.tpat"
        write_pattern(path, pattern)
        print(f"saved to {path}\n")


if __name__ == "__main__":
    main()
