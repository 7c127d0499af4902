"""Round-trip and corruption tests for the on-disk formats."""

import dataclasses
import struct

import numpy as np
import pytest

from turinglearn.grid import TorusGrid
from turinglearn.kernels import KernelSpec
from turinglearn.nn import FfnnModel, ffnn_predict
from turinglearn.ovk import OvkModel
from turinglearn.pipeline import (
    Dataset,
    DatasetRecord,
    FeatureRecipe,
    TrainedModel,
    generate_dataset,
    single_parameter_plan,
)
from turinglearn.reactions import GmParams
from turinglearn.simulate import PatternField, SimConfig, simulate
from turinglearn.storage import (
    load_dataset,
    read_features_csv,
    read_manifest,
    read_model,
    read_pattern,
    write_dataset_tables,
    write_features_csv,
    write_manifest,
    write_model,
    write_pattern,
)
from turinglearn.svr import SvrModel, svr_predict


def sample_pattern(side=5, seed=0):
    rng = np.random.default_rng(seed)
    return PatternField(
        grid=TorusGrid(side),
        species=rng.uniform(0.1, 3.0, size=(2, side * side)),
        params=GmParams(a=0.17, b=1.3, c=0.42, delta=87.5, s=0.31),
        elapsed_time=123.456,
        converged=True,
    )


def sample_recipe():
    return FeatureRecipe(radius=8.0, bins=12, r_max=8.82983944724481,
                         spacing=1, epsilon_weight=0.003, species=0,
                         extras=False)


# ---------------------------------------------------------------------------
# pattern files


def test_pattern_round_trip_is_exact(tmp_path):
    pattern = sample_pattern()
    path = tmp_path / "one.tpat"
    write_pattern(path, pattern)

    loaded = read_pattern(path)
    assert loaded.grid.side == pattern.grid.side
    assert loaded.params == pattern.params
    assert loaded.elapsed_time == pattern.elapsed_time
    assert loaded.converged is True
    assert np.array_equal(loaded.species, pattern.species)

    # writing the loaded copy reproduces the file byte for byte
    again = tmp_path / "two.tpat"
    write_pattern(again, loaded)
    assert path.read_bytes() == again.read_bytes()


def test_pattern_preserves_the_convergence_flag(tmp_path):
    pattern = dataclasses.replace(sample_pattern(), converged=False)
    path = tmp_path / "p.tpat"
    write_pattern(path, pattern)
    assert read_pattern(path).converged is False


def test_pattern_rejects_foreign_files(tmp_path):
    path = tmp_path / "junk.tpat"
    path.write_bytes(b"GIF89a not a pattern at all")
    with pytest.raises(ValueError, match="bad magic"):
        read_pattern(path)


def test_pattern_rejects_truncation(tmp_path):
    path = tmp_path / "p.tpat"
    write_pattern(path, sample_pattern())
    blob = path.read_bytes()
    clipped = tmp_path / "clipped.tpat"
    clipped.write_bytes(blob[:-16])
    with pytest.raises(ValueError, match="truncated"):
        read_pattern(clipped)


def test_pattern_rejects_unknown_versions(tmp_path):
    path = tmp_path / "p.tpat"
    write_pattern(path, sample_pattern())
    blob = bytearray(path.read_bytes())
    blob[4:8] = struct.pack("<I", 99)
    bumped = tmp_path / "bumped.tpat"
    bumped.write_bytes(bytes(blob))
    with pytest.raises(ValueError, match="version"):
        read_pattern(bumped)


# ---------------------------------------------------------------------------
# csv tables


def make_records():
    rng = np.random.default_rng(3)
    records = []
    for i in range(4):
        degenerate = i == 2
        hist = rng.dirichlet(np.ones(5))
        records.append(DatasetRecord(
            index=i,
            params=GmParams(a=0.02, b=1.0, c=0.1 + 0.3 * i, delta=100.0, s=0.25),
            seed=900 + i,
            converged=i != 1,
            degenerate=degenerate,
            rdh={} if degenerate else {4.0: hist},
            c_m=None if degenerate else float(rng.uniform(0.5, 1.0)),
            n_c=None if degenerate else int(rng.integers(1, 9)),
            path=f"patterns/pattern_{i:04d}.tpat",
        ))
    return records


def test_manifest_round_trip(tmp_path):
    records = make_records()
    path = tmp_path / "manifest.csv"
    write_manifest(path, records)
    rows = read_manifest(path)
    assert len(rows) == 4
    for record, row in zip(records, rows):
        assert row["id"] == record.index
        assert row["params"] == record.params
        assert row["seed"] == record.seed
        assert row["converged"] == record.converged
        assert row["path"] == record.path


def test_manifest_header_is_checked(tmp_path):
    path = tmp_path / "manifest.csv"
    path.write_text("id,alpha,beta\n1,2,3\n")
    with pytest.raises(ValueError, match="header"):
        read_manifest(path)


def test_features_round_trip_skips_degenerate_records(tmp_path):
    records = make_records()
    path = tmp_path / "features.csv"
    write_features_csv(path, records, radii=(4.0,), bins=5)
    table = read_features_csv(path)
    assert set(table) == {0, 1, 3}
    for record in records:
        if record.degenerate:
            continue
        entry = table[record.index]
        assert np.array_equal(entry["rdh"][4.0], record.rdh[4.0])
        assert entry["c_m"] == record.c_m
        assert entry["n_c"] == record.n_c


def test_features_blank_extras_read_back_as_none(tmp_path):
    record = dataclasses.replace(make_records()[0], c_m=None, n_c=None)
    path = tmp_path / "features.csv"
    write_features_csv(path, [record], radii=(4.0,), bins=5)
    entry = read_features_csv(path)[record.index]
    assert entry["c_m"] is None
    assert entry["n_c"] is None


def test_features_header_is_checked(tmp_path):
    path = tmp_path / "features.csv"
    path.write_text("id,radius,bin_1\n")
    with pytest.raises(ValueError, match="header"):
        read_features_csv(path)


def test_features_multiple_radii(tmp_path):
    rng = np.random.default_rng(5)
    record = dataclasses.replace(
        make_records()[0],
        rdh={4.0: rng.dirichlet(np.ones(5)), 8.0: rng.dirichlet(np.ones(5))},
    )
    path = tmp_path / "features.csv"
    write_features_csv(path, [record], radii=(4.0, 8.0), bins=5)
    entry = read_features_csv(path)[record.index]
    assert set(entry["rdh"]) == {4.0, 8.0}
    for radius in (4.0, 8.0):
        assert np.array_equal(entry["rdh"][radius], record.rdh[radius])


# ---------------------------------------------------------------------------
# dataset directories


def test_dataset_tables_round_trip_without_simulation(tmp_path):
    plan = single_parameter_plan(count=4, grid_side=16, radii=(4.0,))
    ds = Dataset(plan=plan, master_seed=11, records=make_records(),
                 r_max={4.0: 3.141592653589793}, attempts=9,
                 sim_config=SimConfig(t_final=60.0, check_interval=20.0),
                 bins=5, spacing=1, epsilon_weight=0.003, species=0,
                 extras=True)
    write_dataset_tables(ds, tmp_path)
    loaded = load_dataset(tmp_path)

    assert loaded.plan == ds.plan
    assert loaded.master_seed == ds.master_seed
    assert loaded.attempts == ds.attempts
    assert loaded.r_max == ds.r_max
    assert loaded.sim_config == ds.sim_config
    assert (loaded.bins, loaded.spacing, loaded.species) == (5, 1, 0)
    assert loaded.epsilon_weight == ds.epsilon_weight
    assert loaded.extras is True
    assert len(loaded.records) == len(ds.records)
    for a, b in zip(ds.records, loaded.records):
        assert a.params == b.params
        assert a.seed == b.seed
        assert a.converged == b.converged
        assert a.degenerate == b.degenerate
        assert a.path == b.path
        assert a.c_m == b.c_m and a.n_c == b.n_c
        assert set(a.rdh) == set(b.rdh)
        for radius in a.rdh:
            assert np.array_equal(a.rdh[radius], b.rdh[radius])


def test_generated_directory_loads_back(tmp_path):
    plan = single_parameter_plan(count=2, grid_side=16, radii=(4.0,))
    config = SimConfig(t_final=60.0, check_interval=20.0)
    ds = generate_dataset(plan, config, master_seed=42, out_dir=tmp_path)

    assert (tmp_path / "manifest.csv").exists()
    assert (tmp_path / "features.csv").exists()
    assert (tmp_path / "meta.txt").exists()
    pattern_files = sorted((tmp_path / "patterns").glob("*.tpat"))
    assert len(pattern_files) == 2

    loaded = load_dataset(tmp_path)
    assert loaded.r_max == ds.r_max
    for a, b in zip(ds.records, loaded.records):
        assert a.params == b.params
        assert a.degenerate == b.degenerate
        for radius in a.rdh:
            assert np.array_equal(a.rdh[radius], b.rdh[radius])

    # the stored pattern file reproduces the simulated state exactly
    record = ds.records[0]
    stored = read_pattern(tmp_path / record.path)
    fresh = simulate(record.params, TorusGrid(16), config, record.seed)
    assert np.array_equal(stored.species, fresh.species)
    assert stored.converged == fresh.converged


def test_load_dataset_requires_metadata(tmp_path):
    with pytest.raises(ValueError, match="meta.txt"):
        load_dataset(tmp_path)


# ---------------------------------------------------------------------------
# model bundles


def svr_bundle():
    rng = np.random.default_rng(7)
    core = SvrModel(kernel=KernelSpec("wasserstein", 2.0),
                    alphas=rng.normal(size=6),
                    inputs=rng.dirichlet(np.ones(5), size=6),
                    lam=0.1, epsilon_tube=0.01, kkt=3.2e-9, objective=1.25)
    return TrainedModel(method="svr", core=core, recipe=sample_recipe(),
                        target_names=("c",), target_max=np.array([1.15]),
                        split_seed=3)


def test_svr_model_round_trip(tmp_path):
    bundle = svr_bundle()
    path = tmp_path / "model.tmod"
    write_model(path, bundle)
    loaded = read_model(path)

    assert loaded.method == "svr"
    assert loaded.recipe == bundle.recipe
    assert loaded.target_names == ("c",)
    assert np.array_equal(loaded.target_max, bundle.target_max)
    assert loaded.split_seed == 3

    core = loaded.core
    assert core.kernel == bundle.core.kernel
    assert (core.lam, core.epsilon_tube) == (0.1, 0.01)
    assert core.kkt == bundle.core.kkt
    assert core.objective == bundle.core.objective
    assert np.array_equal(core.alphas, bundle.core.alphas)
    assert np.array_equal(core.inputs, bundle.core.inputs)

    # predictions agree bit for bit since every float survived
    X = np.random.default_rng(9).dirichlet(np.ones(5), size=3)
    assert np.array_equal(svr_predict(core, X), svr_predict(bundle.core, X))

    again = tmp_path / "again.tmod"
    write_model(again, loaded)
    assert path.read_bytes() == again.read_bytes()


def test_widthless_kernel_round_trips_as_none(tmp_path):
    bundle = svr_bundle()
    core = dataclasses.replace(bundle.core, kernel=KernelSpec("chi2", None))
    bundle = dataclasses.replace(bundle, core=core)
    path = tmp_path / "model.tmod"
    write_model(path, bundle)
    assert read_model(path).core.kernel == KernelSpec("chi2", None)


def test_ovk_model_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    core = OvkModel(input_kernel=KernelSpec("chi2exp", 1.0), gamma_out=2.0,
                    lam=0.5, eps_reg=1e-4,
                    inputs=rng.dirichlet(np.ones(4), size=5),
                    targets=rng.uniform(size=(5, 2)),
                    coupling=rng.normal(size=(5, 5)),
                    output_map=rng.normal(size=(5, 5)),
                    solver_residual=4.5e-11)
    bundle = TrainedModel(method="ovk", core=core, recipe=sample_recipe(),
                          target_names=("a", "b"),
                          target_max=np.array([0.7, 2.0]), split_seed=0)
    path = tmp_path / "model.tmod"
    write_model(path, bundle)
    loaded = read_model(path)

    assert loaded.method == "ovk"
    assert loaded.target_names == ("a", "b")
    got = loaded.core
    assert got.input_kernel == core.input_kernel
    assert (got.gamma_out, got.lam, got.eps_reg) == (2.0, 0.5, 1e-4)
    assert got.solver_residual == core.solver_residual
    for name in ("inputs", "targets", "coupling", "output_map"):
        assert np.array_equal(getattr(got, name), getattr(core, name))


def test_ffnn_model_round_trip(tmp_path):
    rng = np.random.default_rng(10)
    params = [rng.normal(size=(3, 4)), rng.normal(size=4),
              rng.normal(size=(4, 2)), rng.normal(size=2)]
    core = FfnnModel(params=params, input_dim=3, hidden=(4,), output_dim=2,
                     best_val_loss=0.0123)
    bundle = TrainedModel(method="ffnn", core=core, recipe=sample_recipe(),
                          target_names=("a", "b"),
                          target_max=np.array([0.7, 2.0]), split_seed=1)
    path = tmp_path / "model.tmod"
    write_model(path, bundle)
    loaded = read_model(path)

    got = loaded.core
    assert (got.input_dim, got.hidden, got.output_dim) == (3, (4,), 2)
    assert got.best_val_loss == core.best_val_loss
    assert len(got.params) == 4
    for a, b in zip(got.params, core.params):
        assert np.array_equal(a, b)
    X = rng.normal(size=(6, 3))
    assert np.array_equal(ffnn_predict(got, X), ffnn_predict(core, X))


def test_linear_network_round_trips(tmp_path):
    rng = np.random.default_rng(12)
    core = FfnnModel(params=[rng.normal(size=(5, 1)), rng.normal(size=1)],
                     input_dim=5, hidden=(), output_dim=1, best_val_loss=0.5)
    bundle = TrainedModel(method="ffnn", core=core, recipe=sample_recipe(),
                          target_names=("c",), target_max=np.array([1.0]),
                          split_seed=0)
    path = tmp_path / "lin.tmod"
    write_model(path, bundle)
    assert read_model(path).core.hidden == ()


def test_model_rejects_foreign_files(tmp_path):
    path = tmp_path / "junk.tmod"
    path.write_bytes(b"\x00" * 64)
    with pytest.raises(ValueError, match="bad magic"):
        read_model(path)


def test_model_rejects_truncation_and_trailing_bytes(tmp_path):
    path = tmp_path / "model.tmod"
    write_model(path, svr_bundle())
    blob = path.read_bytes()

    clipped = tmp_path / "clipped.tmod"
    clipped.write_bytes(blob[:-4])
    with pytest.raises(ValueError, match="truncated"):
        read_model(clipped)

    padded = tmp_path / "padded.tmod"
    padded.write_bytes(blob + b"\x00")
    with pytest.raises(ValueError, match="trailing"):
        read_model(padded)


def test_model_rejects_unknown_method_tags(tmp_path):
    path = tmp_path / "model.tmod"
    write_model(path, svr_bundle())
    blob = bytearray(path.read_bytes())
    blob[8] = 77
    weird = tmp_path / "weird.tmod"
    weird.write_bytes(bytes(blob))
    with pytest.raises(ValueError, match="method tag"):
        read_model(weird)


def test_write_model_checks_the_core_type(tmp_path):
    bundle = svr_bundle()
    mismatched = dataclasses.replace(
        bundle,
        core=FfnnModel(params=[], input_dim=1, hidden=(), output_dim=1),
    )
    with pytest.raises(TypeError):
        write_model(tmp_path / "bad.tmod", mismatched)
    with pytest.raises(ValueError):
        write_model(tmp_path / "bad.tmod",
                    dataclasses.replace(bundle, method="tree"))
