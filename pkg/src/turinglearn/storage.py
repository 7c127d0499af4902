"""On-disk formats: pattern binaries, dataset tables, and model bundles.

Pattern files (magic ``TPAT``) are little-endian throughout:

    offset  0   4 bytes   magic "TPAT"
    offset  4   uint32    format version, currently 1
    offset  8   uint32    grid side n
    offset 12   uint32    species count N
    offset 16   5 float64 kinetic parameters a, b, c, delta, s
    offset 56   float64   elapsed model time
    offset 64   uint8     converged flag (0 or 1)
    offset 65   N*n*n float64   field values, species-major, row-major nodes

Model files (magic ``TMOD``, version 1) start with a shared header:

    4 bytes magic, uint32 version, uint8 method tag (1 svr, 2 ovk, 3 ffnn),
    feature recipe (float64 radius, uint32 bins, float64 r_max, uint32
    spacing, float64 epsilon_weight, uint32 species, uint8 extras flag),
    uint32 target count, then per target a uint8 name length and the ascii
    name, then one float64 normalization maximum per target, then an int64
    split seed.

The method-specific payloads follow:

    svr:   uint8 kernel tag (1 chi2, 2 chi2exp, 3 wasserstein), float64 gamma
           (NaN when the kernel takes none), float64 lambda, epsilon_tube,
           kkt residual, objective; uint32 n, uint32 d; n float64 dual
           coefficients; n*d float64 training inputs.
    ovk:   uint8 kernel tag, float64 gamma (NaN when absent), gamma_out,
           lambda, eps_reg, solver residual; uint32 n, d_in, d_out; inputs
           (n*d_in), targets (n*d_out), coupling (n*n), output map (n*n),
           all float64.
    ffnn:  uint32 input_dim, output_dim, hidden-layer count, then one uint32
           width per hidden layer; float64 best validation loss; then the
           flattened float64 parameters, alternating each layer's weight
           matrix (fan_in*fan_out, row-major) and bias vector.

Dataset directories hold ``patterns/*.tpat``, ``manifest.csv`` (header
``id,a,b,c,delta,s,seed,converged,path``), ``features.csv`` (header
``id,radius,bin_1..bin_B,c_m,n_c``, extras blank when not computed; degenerate
records have no feature rows), and ``meta.txt`` in the config format.
"""

from __future__ import annotations

import csv
import math
import os
import struct

import numpy as np

from .config import (
    format_value,
    parse_bool,
    parse_sections,
    plan_from_entries,
    plan_to_entries,
    serialize_sections,
    sim_from_entries,
    sim_to_entries,
)
from .grid import TorusGrid
from .kernels import KernelSpec
from .nn import FfnnModel
from .ovk import OvkModel
from .pipeline import Dataset, DatasetRecord, FeatureRecipe, TrainedModel
from .reactions import GmParams
from .simulate import PatternField
from .svr import SvrModel

__all__ = [
    "write_pattern",
    "read_pattern",
    "write_manifest",
    "read_manifest",
    "write_features_csv",
    "read_features_csv",
    "write_dataset_tables",
    "load_dataset",
    "write_model",
    "read_model",
]

_PATTERN_MAGIC = b"TPAT"
_MODEL_MAGIC = b"TMOD"
_VERSION = 1
_PATTERN_HEADER = struct.Struct("<4sIII5ddB")
_METHOD_TAGS = {"svr": 1, "ovk": 2, "ffnn": 3}
_METHOD_NAMES = {v: k for k, v in _METHOD_TAGS.items()}
_KERNEL_TAGS = {"chi2": 1, "chi2exp": 2, "wasserstein": 3}
_KERNEL_NAMES = {v: k for k, v in _KERNEL_TAGS.items()}

MANIFEST_HEADER = ["id", "a", "b", "c", "delta", "s", "seed", "converged", "path"]


def _f64_bytes(array: np.ndarray) -> bytes:
    return np.ascontiguousarray(array, dtype="<f8").tobytes()


def write_pattern(path, pattern: PatternField) -> None:
    """Serialize one simulated state; the write→read round trip is exact."""
    n = pattern.grid.side
    species = np.asarray(pattern.species, dtype=float)
    p = pattern.params
    header = _PATTERN_HEADER.pack(
        _PATTERN_MAGIC, _VERSION, n, species.shape[0],
        p.a, p.b, p.c, p.delta, p.s,
        float(pattern.elapsed_time), 1 if pattern.converged else 0,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(_f64_bytes(species))


def read_pattern(path) -> PatternField:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _PATTERN_HEADER.size or blob[:4] != _PATTERN_MAGIC:
        raise ValueError(f"{path}: not a pattern file (bad magic)")
    magic, version, n, n_species, a, b, c, delta, s, elapsed, conv = \
        _PATTERN_HEADER.unpack_from(blob)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported pattern version {version}")
    expected = _PATTERN_HEADER.size + 8 * n_species * n * n
    if len(blob) != expected:
        raise ValueError(f"{path}: truncated pattern file ({len(blob)} of {expected} bytes)")
    data = np.frombuffer(blob, dtype="<f8", offset=_PATTERN_HEADER.size)
    return PatternField(
        grid=TorusGrid(n),
        species=data.reshape(n_species, n * n).copy(),
        params=GmParams(a=a, b=b, c=c, delta=delta, s=s),
        elapsed_time=elapsed,
        converged=bool(conv),
    )


def write_manifest(path, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for r in records:
            p = r.params
            writer.writerow([
                r.index, repr(p.a), repr(p.b), repr(p.c), repr(p.delta), repr(p.s),
                r.seed, format_value(r.converged), r.path.replace(os.sep, "/"),
            ])


def read_manifest(path) -> list:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MANIFEST_HEADER:
            raise ValueError(f"{path}: unexpected manifest header {header}")
        rows = []
        for row in reader:
            rows.append({
                "id": int(row[0]),
                "params": GmParams(a=float(row[1]), b=float(row[2]), c=float(row[3]),
                                   delta=float(row[4]), s=float(row[5])),
                "seed": int(row[6]),
                "converged": parse_bool(row[7]),
                "path": row[8],
            })
    return rows


def _features_header(bins: int) -> list:
    return ["id", "radius"] + [f"bin_{k}" for k in range(1, bins + 1)] + ["c_m", "n_c"]


def write_features_csv(path, records, radii, bins: int) -> None:
    """One row per usable record and radius; extras columns may be blank."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_features_header(bins))
        for r in records:
            if r.degenerate:
                continue
            for radius in radii:
                row = [r.index, repr(float(radius))]
                row.extend(repr(float(v)) for v in r.rdh[radius])
                row.append("" if r.c_m is None else repr(float(r.c_m)))
                row.append("" if r.n_c is None else str(int(r.n_c)))
                writer.writerow(row)


def read_features_csv(path) -> dict:
    """Feature rows keyed by record id: histograms per radius plus extras."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if (header is None or header[:2] != ["id", "radius"]
                or header[-2:] != ["c_m", "n_c"] or len(header) < 5):
            raise ValueError(f"{path}: unexpected features header {header}")
        bins = len(header) - 4
        table: dict[int, dict] = {}
        for row in reader:
            rec = table.setdefault(int(row[0]), {"rdh": {}, "c_m": None, "n_c": None})
            radius = float(row[1])
            rec["rdh"][radius] = np.array([float(v) for v in row[2:2 + bins]])
            if row[2 + bins]:
                rec["c_m"] = float(row[2 + bins])
            if row[3 + bins]:
                rec["n_c"] = int(row[3 + bins])
    return table


def _meta_sections(dataset: Dataset) -> dict:
    generation = {
        "master_seed": str(dataset.master_seed),
        "attempts": str(dataset.attempts),
        "bins": str(dataset.bins),
        "spacing": str(dataset.spacing),
        "epsilon_weight": repr(dataset.epsilon_weight),
        "species": str(dataset.species),
        "extras": format_value(dataset.extras),
    }
    for radius in dataset.plan.radii:
        generation[f"r_max_{repr(float(radius))}"] = repr(float(dataset.r_max[radius]))
    return {
        "plan": plan_to_entries(dataset.plan),
        "sim": sim_to_entries(dataset.sim_config),
        "generation": generation,
    }


def write_dataset_tables(dataset: Dataset, out_dir) -> None:
    """Write manifest.csv, features.csv, and meta.txt for a dataset directory."""
    os.makedirs(out_dir, exist_ok=True)
    write_manifest(os.path.join(out_dir, "manifest.csv"), dataset.records)
    write_features_csv(os.path.join(out_dir, "features.csv"), dataset.records,
                       dataset.plan.radii, dataset.bins)
    with open(os.path.join(out_dir, "meta.txt"), "w", encoding="utf-8") as fh:
        fh.write(serialize_sections(_meta_sections(dataset)))


def load_dataset(directory) -> Dataset:
    """Rebuild a Dataset from a directory written by ``generate_dataset``."""
    meta_path = os.path.join(directory, "meta.txt")
    if not os.path.exists(meta_path):
        raise ValueError(f"{directory}: not a dataset directory (no meta.txt)")
    with open(meta_path, "r", encoding="utf-8") as fh:
        sections = parse_sections(fh.read())
    for needed in ("plan", "sim", "generation"):
        if needed not in sections:
            raise ValueError(f"{meta_path}: missing [{needed}] section")
    plan = plan_from_entries(sections["plan"])
    sim = sim_from_entries(sections["sim"])
    gen = sections["generation"]
    r_max = {}
    for key, raw in gen.items():
        if key.startswith("r_max_"):
            r_max[float(key[len("r_max_"):])] = float(raw)

    manifest = read_manifest(os.path.join(directory, "manifest.csv"))
    features = read_features_csv(os.path.join(directory, "features.csv"))
    records = []
    for row in manifest:
        feat = features.get(row["id"])
        records.append(DatasetRecord(
            index=row["id"], params=row["params"], seed=row["seed"],
            converged=row["converged"], degenerate=feat is None,
            rdh={} if feat is None else feat["rdh"],
            c_m=None if feat is None else feat["c_m"],
            n_c=None if feat is None else feat["n_c"],
            path=row["path"],
        ))
    return Dataset(
        plan=plan, master_seed=int(gen["master_seed"]), records=records,
        r_max=r_max, attempts=int(gen["attempts"]), sim_config=sim,
        bins=int(gen["bins"]), spacing=int(gen["spacing"]),
        epsilon_weight=float(gen["epsilon_weight"]), species=int(gen["species"]),
        extras=parse_bool(gen["extras"]),
    )


class _Reader:
    """Sequential little-endian decoder over one bytes object."""

    def __init__(self, blob: bytes, label: str):
        self.blob = blob
        self.offset = 0
        self.label = label

    def unpack(self, fmt: str):
        fmt = "<" + fmt
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.blob):
            raise ValueError(f"{self.label}: truncated model file")
        values = struct.unpack_from(fmt, self.blob, self.offset)
        self.offset += size
        return values

    def floats(self, count: int) -> np.ndarray:
        size = 8 * count
        if self.offset + size > len(self.blob):
            raise ValueError(f"{self.label}: truncated model file")
        out = np.frombuffer(self.blob, dtype="<f8", count=count, offset=self.offset).copy()
        self.offset += size
        return out

    def done(self) -> None:
        if self.offset != len(self.blob):
            raise ValueError(f"{self.label}: {len(self.blob) - self.offset} trailing bytes")


def _gamma_byte(gamma) -> float:
    return math.nan if gamma is None else float(gamma)


def _core_payload(method: str, core) -> list:
    parts = []
    if method == "svr":
        if not isinstance(core, SvrModel):
            raise TypeError("svr bundle must carry an SvrModel")
        n, d = core.inputs.shape
        parts.append(struct.pack(
            "<B5d II", _KERNEL_TAGS[core.kernel.kind], _gamma_byte(core.kernel.gamma),
            core.lam, core.epsilon_tube, core.kkt, core.objective, n, d,
        ))
        parts.append(_f64_bytes(core.alphas))
        parts.append(_f64_bytes(core.inputs))
    elif method == "ovk":
        if not isinstance(core, OvkModel):
            raise TypeError("ovk bundle must carry an OvkModel")
        n, d_in = core.inputs.shape
        d_out = core.targets.shape[1]
        parts.append(struct.pack(
            "<B5d III", _KERNEL_TAGS[core.input_kernel.kind],
            _gamma_byte(core.input_kernel.gamma), core.gamma_out, core.lam,
            core.eps_reg, core.solver_residual, n, d_in, d_out,
        ))
        for array in (core.inputs, core.targets, core.coupling, core.output_map):
            parts.append(_f64_bytes(array))
    elif method == "ffnn":
        if not isinstance(core, FfnnModel):
            raise TypeError("ffnn bundle must carry an FfnnModel")
        parts.append(struct.pack("<III", core.input_dim, core.output_dim, len(core.hidden)))
        for width in core.hidden:
            parts.append(struct.pack("<I", width))
        parts.append(struct.pack("<d", float(core.best_val_loss)))
        for p in core.params:
            parts.append(_f64_bytes(p))
    else:
        raise ValueError(f"unknown method {method!r}")
    return parts


def write_model(path, model: TrainedModel) -> None:
    """Serialize a bundled model; formats are documented in the module header."""
    if model.method not in _METHOD_TAGS:
        raise ValueError(f"unknown method {model.method!r}")
    recipe = model.recipe
    parts = [
        struct.pack("<4sIB", _MODEL_MAGIC, _VERSION, _METHOD_TAGS[model.method]),
        struct.pack("<dIdIdIB", recipe.radius, recipe.bins, recipe.r_max,
                    recipe.spacing, recipe.epsilon_weight, recipe.species,
                    1 if recipe.extras else 0),
        struct.pack("<I", len(model.target_names)),
    ]
    for name in model.target_names:
        encoded = name.encode("ascii")
        parts.append(struct.pack("<B", len(encoded)))
        parts.append(encoded)
    parts.append(_f64_bytes(np.asarray(model.target_max, dtype=float)))
    parts.append(struct.pack("<q", model.split_seed))
    parts.extend(_core_payload(model.method, model.core))
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def _read_core(method: str, reader: _Reader):
    if method == "svr":
        tag, gamma, lam, eps_tube, kkt, objective, n, d = reader.unpack("B5dII")
        alphas = reader.floats(n)
        inputs = reader.floats(n * d).reshape(n, d)
        spec = KernelSpec(_KERNEL_NAMES[tag], None if math.isnan(gamma) else gamma)
        return SvrModel(kernel=spec, alphas=alphas, inputs=inputs, lam=lam,
                        epsilon_tube=eps_tube, kkt=kkt, objective=objective)
    if method == "ovk":
        tag, gamma, gamma_out, lam, eps_reg, res, n, d_in, d_out = reader.unpack("B5dIII")
        inputs = reader.floats(n * d_in).reshape(n, d_in)
        targets = reader.floats(n * d_out).reshape(n, d_out)
        coupling = reader.floats(n * n).reshape(n, n)
        output_map = reader.floats(n * n).reshape(n, n)
        spec = KernelSpec(_KERNEL_NAMES[tag], None if math.isnan(gamma) else gamma)
        return OvkModel(input_kernel=spec, gamma_out=gamma_out, lam=lam,
                        eps_reg=eps_reg, inputs=inputs, targets=targets,
                        coupling=coupling, output_map=output_map, solver_residual=res)
    input_dim, output_dim, n_hidden = reader.unpack("III")
    hidden = tuple(reader.unpack("I")[0] for _ in range(n_hidden))
    (best_val,) = reader.unpack("d")
    params = []
    sizes = [input_dim, *hidden, output_dim]
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        params.append(reader.floats(fan_in * fan_out).reshape(fan_in, fan_out))
        params.append(reader.floats(fan_out))
    return FfnnModel(params=params, input_dim=input_dim, hidden=hidden,
                     output_dim=output_dim, best_val_loss=best_val)


def read_model(path) -> TrainedModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 9 or blob[:4] != _MODEL_MAGIC:
        raise ValueError(f"{path}: not a model file (bad magic)")
    reader = _Reader(blob, str(path))
    _, version, method_tag = reader.unpack("4sIB")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported model version {version}")
    method = _METHOD_NAMES.get(method_tag)
    if method is None:
        raise ValueError(f"{path}: unknown method tag {method_tag}")
    radius, bins, r_max, spacing, eps_w, species, extras = reader.unpack("dIdIdIB")
    recipe = FeatureRecipe(radius=radius, bins=bins, r_max=r_max, spacing=spacing,
                           epsilon_weight=eps_w, species=species, extras=bool(extras))
    (n_targets,) = reader.unpack("I")
    names = []
    for _ in range(n_targets):
        (length,) = reader.unpack("B")
        raw = reader.blob[reader.offset:reader.offset + length]
        if len(raw) != length:
            raise ValueError(f"{path}: truncated model file")
        reader.offset += length
        names.append(raw.decode("ascii"))
    target_max = reader.floats(n_targets)
    (split_seed,) = reader.unpack("q")
    core = _read_core(method, reader)
    reader.done()
    return TrainedModel(method=method, core=core, recipe=recipe,
                        target_names=tuple(names), target_max=target_max,
                        split_seed=int(split_seed))
