"""Line-based configuration: ``key=value`` entries under ``[section]`` headers.

The format is deliberately tiny: blank lines and ``#`` comments are skipped,
every other line is either a section header or one assignment inside the
current section.  Parsing a serialized config yields the same values back
(floats go through ``repr`` and therefore survive exactly).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .nn import TrainSchedule
from .pipeline import (
    GAMMA_GRID,
    LAMBDA_GRID,
    PARAM_NAMES,
    SamplingPlan,
    single_parameter_plan,
)
from .simulate import SimConfig

__all__ = [
    "parse_sections",
    "serialize_sections",
    "RunConfig",
    "default_config",
    "config_from_text",
    "config_to_text",
    "load_config",
    "save_config",
]

_SIM_FIELDS = ("h", "eps_inner", "eps_outer", "t_final", "check_interval",
               "noise_amplitude", "max_inner_iters", "max_halvings")
_DEFAULT_ARCHITECTURES = ((), (2,), (20,), (5, 10), (10, 10), (20, 20))


def parse_sections(text: str) -> dict:
    """Parse config text into ``{section: {key: raw string value}}``."""
    sections: dict[str, dict[str, str]] = {}
    current: dict[str, str] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise ValueError(f"line {lineno}: empty section header")
            current = sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        if current is None:
            raise ValueError(f"line {lineno}: assignment before any [section] header")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        current[key] = value.strip()
    return sections


def serialize_sections(sections: dict) -> str:
    lines = []
    for name, entries in sections.items():
        lines.append(f"[{name}]")
        for key, value in entries.items():
            lines.append(f"{key}={value}")
        lines.append("")
    return "\n".join(lines)


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_float_tuple(raw: str) -> tuple:
    return tuple(float(tok) for tok in raw.split(",") if tok.strip())


def _format_float_tuple(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def _parse_architectures(raw: str) -> tuple:
    archs = []
    for token in raw.split(";"):
        token = token.strip()
        if not token:
            continue
        if token == "linear":
            archs.append(())
        else:
            archs.append(tuple(int(w) for w in token.split("x")))
    if not archs:
        raise ValueError("architectures must list at least one entry")
    return tuple(archs)


def _format_architectures(archs) -> str:
    return ";".join("linear" if not a else "x".join(str(w) for w in a) for a in archs)


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a full experiment, with the defaults used throughout."""

    plan: SamplingPlan = field(default_factory=lambda: single_parameter_plan(100))
    sim: SimConfig = field(default_factory=SimConfig)
    bins: int = 12
    spacing: int = 1
    epsilon_weight: float = 0.003
    species: int = 0
    extras: bool = False
    kernel_kind: str = "wasserstein"
    gamma_grid: tuple = GAMMA_GRID
    lambda_grid: tuple = LAMBDA_GRID
    gamma_out_grid: tuple = GAMMA_GRID
    epsilon_tube: float = 0.01
    eps_reg: float = 1e-4
    architectures: tuple = _DEFAULT_ARCHITECTURES
    max_steps: int = 0          # 0 means pick from the training-set size
    patience: int = 0
    master_seed: int = 0

    def schedule(self) -> TrainSchedule | None:
        """Explicit network schedule, or None to defer to the size-based one."""
        if self.max_steps and self.patience:
            return TrainSchedule(self.max_steps, self.patience)
        return None


def default_config() -> RunConfig:
    return RunConfig()


def plan_to_entries(plan: SamplingPlan) -> dict:
    entries = {
        "count": str(plan.count),
        "grid_side": str(plan.grid_side),
        "radii": _format_float_tuple(plan.radii),
    }
    for name in PARAM_NAMES:
        if name in plan.ranges:
            lo, hi = plan.ranges[name]
            entries[f"range_{name}"] = f"{repr(float(lo))},{repr(float(hi))}"
    for name in PARAM_NAMES:
        if name in plan.fixed:
            entries[f"fixed_{name}"] = repr(float(plan.fixed[name]))
    return entries


def plan_from_entries(entries: dict) -> SamplingPlan:
    ranges = {}
    fixed = {}
    count = grid_side = None
    radii = (8.0,)
    for key, raw in entries.items():
        if key == "count":
            count = int(raw)
        elif key == "grid_side":
            grid_side = int(raw)
        elif key == "radii":
            radii = _parse_float_tuple(raw)
        elif key.startswith("range_"):
            lo, hi = _parse_float_tuple(raw)
            ranges[key[len("range_"):]] = (lo, hi)
        elif key.startswith("fixed_"):
            fixed[key[len("fixed_"):]] = float(raw)
        else:
            raise ValueError(f"unknown plan key {key!r}")
    if count is None:
        raise ValueError("plan section needs a count")
    return SamplingPlan(ranges=ranges, fixed=fixed, count=count,
                        grid_side=grid_side or 64, radii=radii)


def sim_to_entries(sim: SimConfig) -> dict:
    return {name: format_value(getattr(sim, name)) for name in _SIM_FIELDS}


def sim_from_entries(entries: dict) -> SimConfig:
    base = SimConfig()
    kwargs = {}
    for key, raw in entries.items():
        if key not in _SIM_FIELDS:
            raise ValueError(f"unknown sim key {key!r}")
        current = getattr(base, key)
        kwargs[key] = int(raw) if isinstance(current, int) else float(raw)
    return replace(base, **kwargs)


def config_to_text(cfg: RunConfig) -> str:
    sections = {
        "plan": plan_to_entries(cfg.plan),
        "sim": sim_to_entries(cfg.sim),
        "features": {
            "bins": str(cfg.bins),
            "spacing": str(cfg.spacing),
            "epsilon_weight": repr(cfg.epsilon_weight),
            "species": str(cfg.species),
            "extras": format_value(cfg.extras),
        },
        "kernels": {
            "kind": cfg.kernel_kind,
            "gamma_grid": _format_float_tuple(cfg.gamma_grid),
            "lambda_grid": _format_float_tuple(cfg.lambda_grid),
            "gamma_out_grid": _format_float_tuple(cfg.gamma_out_grid),
            "epsilon_tube": repr(cfg.epsilon_tube),
            "eps_reg": repr(cfg.eps_reg),
        },
        "nn": {
            "architectures": _format_architectures(cfg.architectures),
            "max_steps": str(cfg.max_steps),
            "patience": str(cfg.patience),
        },
        "run": {"master_seed": str(cfg.master_seed)},
    }
    return serialize_sections(sections)


def config_from_text(text: str) -> RunConfig:
    sections = parse_sections(text)
    known = {"plan", "sim", "features", "kernels", "nn", "run"}
    unknown = set(sections) - known
    if unknown:
        raise ValueError(f"unknown config section(s): {sorted(unknown)}")
    cfg = default_config()
    kwargs: dict = {}
    if "plan" in sections:
        kwargs["plan"] = plan_from_entries(sections["plan"])
    if "sim" in sections:
        kwargs["sim"] = sim_from_entries(sections["sim"])
    feats = sections.get("features", {})
    for key, raw in feats.items():
        if key in ("bins", "spacing", "species"):
            kwargs[key] = int(raw)
        elif key == "epsilon_weight":
            kwargs[key] = float(raw)
        elif key == "extras":
            kwargs[key] = parse_bool(raw)
        else:
            raise ValueError(f"unknown features key {key!r}")
    kern = sections.get("kernels", {})
    for key, raw in kern.items():
        if key == "kind":
            kwargs["kernel_kind"] = raw
        elif key in ("gamma_grid", "lambda_grid", "gamma_out_grid"):
            kwargs[key] = _parse_float_tuple(raw)
        elif key in ("epsilon_tube", "eps_reg"):
            kwargs[key] = float(raw)
        else:
            raise ValueError(f"unknown kernels key {key!r}")
    nn = sections.get("nn", {})
    for key, raw in nn.items():
        if key == "architectures":
            kwargs["architectures"] = _parse_architectures(raw)
        elif key in ("max_steps", "patience"):
            kwargs[key] = int(raw)
        else:
            raise ValueError(f"unknown nn key {key!r}")
    run = sections.get("run", {})
    for key, raw in run.items():
        if key == "master_seed":
            kwargs["master_seed"] = int(raw)
        else:
            raise ValueError(f"unknown run key {key!r}")
    return replace(cfg, **kwargs)


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_text(fh.read())


def save_config(path, cfg: RunConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config_to_text(cfg))
