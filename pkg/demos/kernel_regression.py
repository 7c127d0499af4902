"""Recover the saturation parameter from resistance histograms alone.

A small end-to-end run: sample saturation values, simulate each pattern,
extract histograms, sweep the support-vector hyperparameters on a
validation split, and report test error with a true-versus-predicted
table.  Sizes are kept small so the whole run takes well under a minute;
the same code path scales to the full study settings.
"""

from turinglearn import SimConfig, evaluate_model, generate_dataset, single_parameter_plan, train_model

COUNT = 24
GRID_SIDE = 32
RADIUS = 6.0


def main():
    plan = single_parameter_plan(count=COUNT, grid_side=GRID_SIDE, radii=(RADIUS,))
    config = SimConfig(t_final=600.0, check_interval=100.0)
    print(f"generating {COUNT} patterns on a {GRID_SIDE}x{GRID_SIDE} grid ...")
    dataset = generate_dataset(plan, config, master_seed=7)
    usable = dataset.usable_records()
    print(f"{len(usable)} usable records ({dataset.attempts} parameter draws)")

    model, sweep, (tr, va, te) = train_model(
        dataset, "svr", target="c", kernel_kind="wasserstein", epsilon_tube=0.01,
    )
    print(f"split sizes: train {len(tr)}, val {len(va)}, test {len(te)}")
    print(f"best hyperparameters: {sweep.best}  (val NRMSE {sweep.val_nrmse:.3f})")

    test_error, picked, preds, truth = evaluate_model(model, dataset, "test")
    c_max = float(model.target_max[0])
    print(f"test NRMSE: {test_error:.3f}\n")
    print("  true c   predicted c")
    for t, p in zip(truth, preds):
        print(f"  {t * c_max:7.3f}  {p * c_max:10.3f}")


if __name__ == "__main__":
    main()
