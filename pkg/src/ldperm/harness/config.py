"""Flat key = value experiment configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from ldperm.harness.data import GENERATORS
from ldperm.losses import CATALOG

MODE_ALIASES = {
    "paper": "paper_faithful",
    "paper_faithful": "paper_faithful",
    "calibrated": "calibrated",
    "zero": "zero",
}
PIPELINES = ("auto", "hinge", "genlin", "reduction")
DEFAULT_BETA = 0.25
DEFAULT_EPSILONS = (0.5, 1.0, 2.0, 4.0)


class ConfigError(ValueError):
    """Raised with every violated field listed in ``problems``."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid experiment config:\n  - " + "\n  - ".join(self.problems))


@dataclass
class ExperimentConfig:
    loss: str = "hinge"
    n: int = 1000
    p: int = 5
    epsilon: float | None = None
    delta: float = 1e-5
    degree: int | None = None
    alpha: float | None = None
    beta: float | None = None
    mode: str = "calibrated"
    seeds: list[int] = field(default_factory=lambda: [0])
    dataset: str = "separable_svm"
    out_dir: str = "results"
    margin: float = 0.3
    data_seed: int = 0
    iterations: int | None = None
    step_scale: float = 1.0
    averaging: str = "uniform_tail"
    pipeline: str = "auto"
    theory: bool = False
    baseline_tol: float = 1e-4
    pilot_size: int = 200
    degree_ceiling: int = 1024

    @property
    def smoothing_beta(self) -> float:
        if self.beta is not None:
            return self.beta
        if self.alpha is not None:
            return self.alpha / 4.0
        return DEFAULT_BETA

    @property
    def resolved_pipeline(self) -> str:
        if self.pipeline != "auto":
            return self.pipeline
        return "hinge" if self.loss == "hinge" else "genlin"

    def validate(self, supplied: set[str] | None = None) -> "ExperimentConfig":
        problems = []
        supplied = supplied if supplied is not None else set()
        if self.loss not in CATALOG:
            problems.append(f"loss: {self.loss!r} not in {sorted(CATALOG)}")
        if self.n < 1:
            problems.append("n: must be >= 1")
        if self.p < 1:
            problems.append("p: must be >= 1")
        if self.mode not in MODE_ALIASES:
            problems.append(f"mode: {self.mode!r} not in {sorted(MODE_ALIASES)}")
        elif MODE_ALIASES[self.mode] == "zero":
            if "epsilon" in supplied or self.epsilon is not None:
                problems.append("mode: zero-noise mode cannot be combined with an epsilon budget")
        elif self.epsilon is None:
            problems.append("epsilon: required unless mode = zero")
        elif not self.epsilon > 0:
            problems.append("epsilon: must be positive")
        if not 0 < self.delta < 1:
            problems.append("delta: must lie in (0, 1)")
        if self.theory:
            if self.alpha is None:
                problems.append("alpha: required when theory = true")
        elif self.degree is None:
            problems.append("degree: required (or set theory = true with alpha)")
        if self.degree is not None and self.degree < 1:
            problems.append("degree: must be >= 1")
        if self.alpha is not None and not self.alpha > 0:
            problems.append("alpha: must be positive")
        if not 0 < self.smoothing_beta <= 1:
            problems.append("beta: must lie in (0, 1]")
        if not self.seeds:
            problems.append("seeds: need at least one seed")
        if self.dataset not in GENERATORS and not Path(self.dataset).is_file():
            problems.append(f"dataset: {self.dataset!r} is neither a generator {GENERATORS} nor a file")
        if not 0 <= self.margin < 0.5:
            problems.append("margin: must lie in [0, 0.5)")
        if self.iterations is not None and self.iterations < 1:
            problems.append("iterations: must be >= 1")
        if not self.step_scale > 0:
            problems.append("step_scale: must be positive")
        if self.averaging not in ("last", "uniform_tail"):
            problems.append("averaging: must be last or uniform_tail")
        if self.pipeline not in PIPELINES:
            problems.append(f"pipeline: {self.pipeline!r} not in {PIPELINES}")
        elif self.pipeline == "reduction" and self.loss != "abs":
            problems.append("pipeline: the plus-function reduction only applies to loss = abs")
        elif self.pipeline == "hinge" and self.loss != "hinge":
            problems.append("pipeline: the hinge pipeline only applies to loss = hinge")
        if not self.baseline_tol > 0:
            problems.append("baseline_tol: must be positive")
        if self.pilot_size < 2:
            problems.append("pilot_size: must be >= 2")
        if problems:
            raise ConfigError(problems)
        return self

    @property
    def privacy_mode(self) -> str:
        return MODE_ALIASES[self.mode]


_INT_KEYS = {"n", "p", "degree", "data_seed", "iterations", "pilot_size", "degree_ceiling"}
_FLOAT_KEYS = {"epsilon", "delta", "alpha", "beta", "margin", "step_scale", "baseline_tol"}
_BOOL_KEYS = {"theory"}


def _coerce(key: str, raw: str):
    if key == "seeds":
        return [int(tok) for tok in raw.replace(",", " ").split()]
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _BOOL_KEYS:
        low = raw.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"not a boolean: {raw!r}")
        return low in ("true", "1", "yes")
    return raw


def parse_config(text: str) -> tuple[ExperimentConfig, set[str]]:
    """Parse ``key = value`` lines; ``#`` starts a comment. Returns config and supplied keys."""
    known = {f.name for f in fields(ExperimentConfig)}
    values, problems = {}, []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            problems.append(f"line {lineno}: expected key = value")
            continue
        key, raw = (part.strip() for part in line.split(sep, 1))
        if key not in known:
            problems.append(f"{key}: unknown key")
            continue
        try:
            values[key] = _coerce(key, raw)
        except ValueError as exc:
            problems.append(f"{key}: {exc}")
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(**values), set(values)


def load_config(path) -> ExperimentConfig:
    cfg, supplied = parse_config(Path(path).read_text())
    return cfg.validate(supplied)


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(cfg):
        val = getattr(cfg, f.name)
        if val is None:
            continue
        if f.name == "seeds":
            val = ",".join(str(s) for s in val)
        elif isinstance(val, bool):
            val = "true" if val else "false"
        lines.append(f"{f.name} = {val}")
    return "\n".join(lines) + "\n"
