"""Experiment configuration: one immutable, JSON-serializable record per run."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

from ..datagen import DataDistribution
from ..hypothesis import concept_class_from_dict

SCHEMA_VERSION = 1
KINDS = ("cover-rate", "learn-curve", "scaling", "reduction", "audit")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    concept_class: dict = field(default_factory=lambda: {"kind": "threshold"})
    distribution: dict = field(default_factory=lambda: {
        "marginal": {"kind": "uniform"},
        "labeling": {"kind": "realizable", "target": {"class_id": "threshold", "params": [0.5]}},
    })
    alphas: tuple = (0.1,)
    betas: tuple = (0.05,)
    epsilons: tuple = (1.0,)
    trials: int = 100
    seed: int = 0
    out: str | None = None
    # kind-specific knobs, echoed into the output
    params: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        for name in ("alphas", "betas", "epsilons"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema version {self.schema_version}")
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if not (self.alphas and self.betas and self.epsilons):
            raise ConfigError("alpha, beta and epsilon grids must be nonempty")
        if any(not 0 < a < 1 for a in self.alphas) or any(not 0 < b < 1 for b in self.betas):
            raise ConfigError("alphas and betas must lie in (0, 1)")
        if any(not e > 0 for e in self.epsilons):
            raise ConfigError("epsilons must be positive")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trial count must be a positive integer")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        try:
            concept_class_from_dict(self.concept_class)
            DataDistribution.from_dict(self.distribution)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad class or distribution description: {exc}") from exc

    @property
    def concept(self):
        return concept_class_from_dict(self.concept_class)

    @property
    def data(self) -> DataDistribution:
        return DataDistribution.from_dict(self.distribution)

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("alphas", "betas", "epsilons"):
            d[name] = list(d[name])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config fields {sorted(extra)}")
        if "kind" not in d:
            raise ConfigError("config needs a kind")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def threshold_target(t=0.5):
    return {"class_id": "threshold", "params": [t]}


def interval_target(a=0.3, b=0.6):
    return {"class_id": "interval", "params": [a, b]}


def default_config(kind: str) -> ExperimentConfig:
    """The desk-scale instance each subcommand runs when no config is given."""
    uniform = {"kind": "uniform"}
    if kind == "cover-rate":
        return ExperimentConfig(kind, alphas=(0.05, 0.1, 0.2), betas=(0.05,), trials=1000)
    if kind == "learn-curve":
        return ExperimentConfig(
            kind,
            distribution={"marginal": uniform, "labeling": {"kind": "noisy", "target": threshold_target(), "eta": 0.2}},
            alphas=(0.1,), betas=(0.1,), epsilons=(1.0,), trials=500,
        )
    if kind == "scaling":
        return ExperimentConfig(
            kind,
            alphas=(0.2, 0.1, 0.05, 0.025), betas=(0.1,), epsilons=(1.0,), trials=200,
            params={"success_fraction": 0.9, "erm_trials": 200, "erm_eta": 0.3, "erm_alpha_max": 0.05},
        )
    if kind == "reduction":
        return ExperimentConfig(
            kind, alphas=(0.0005,), betas=(1 / 18,), epsilons=(1.0,), trials=64,
            params={"n_pub": 2, "completion_runs": 10_000, "mixture_draws": 1_000_000},
        )
    if kind == "audit":
        return ExperimentConfig(
            kind, epsilons=(0.1, 1.0, 5.0), trials=1,
            params={"n": 6, "atoms": [0.125, 0.375, 0.625, 0.875], "public_points": [0.25, 0.5, 0.75],
                    "candidates": 8, "empirical_trials": 0},
        )
    raise ConfigError(f"unknown experiment kind {kind!r}")

