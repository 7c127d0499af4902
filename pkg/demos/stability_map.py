"""Chart where patterns form in the saturation / diffusion-ratio plane.

For each (c, delta) pair the script classifies the uniform equilibrium and
prints an ASCII map: '#' marks a pattern-forming regime, '.' a stable one,
'x' an equilibrium that is already unstable without any diffusion.  It then
walks the dispersion curve of one pattern-forming point so the finite
fastest-growing wavenumber is visible in numbers.
"""

import numpy as np

from turinglearn import GmParams, dispersion, gm_equilibrium, gm_model, turing_check

C_VALUES = np.linspace(0.05, 1.55, 11)
DELTA_VALUES = (10.0, 20.0, 40.0, 80.0, 160.0)
FIXED = dict(a=0.02, b=1.0, s=0.25)


def classify(c: float, delta: float) -> str:
    params = GmParams(c=float(c), delta=float(delta), **FIXED)
    report = turing_check(gm_model(params), gm_equilibrium(params))
    if report.turing:
        return "#"
    return "." if report.ode_stable else "x"


def main():
    print("pattern formation map (rows: delta, columns: c)")
    print(" " * 13 + "".join(f"{c:<5.2f}" for c in C_VALUES))
    for delta in DELTA_VALUES:
        row = "".join(f"{classify(c, delta):<5}" for c in C_VALUES)
        print(f"delta {delta:5.0f}  {row}")
    print()
    print("legend: # pattern forming, . stable, x unstable reaction alone")
    print()

    params = GmParams(c=0.45, delta=80.0, **FIXED)
    model = gm_model(params)
    u_star = gm_equilibrium(params)
    report = turing_check(model, u_star)
    print(f"dispersion at c={params.c}, delta={params.delta}:")
    print(f"  fastest-growing q^2 = {report.q2_star:.4f}")
    print(f"  peak growth rate    = {report.max_growth:.4f}")
    print()
    print("  q^2     growth")
    for q2 in np.linspace(0.05, 2.0, 14):
        rate = dispersion(model, u_star, float(q2))
        bar = "+" * max(0, int(40 * rate)) if rate > 0 else ""
        print(f"  {q2:5.2f}  {rate:+8.4f}  {bar}")


if __name__ == "__main__":
    main()
