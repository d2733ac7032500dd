"""Experiment configuration and run manifest.

One flat JSON config per run; the CLI only picks the file and applies
scalar ``--set`` overrides, so a config file fully determines a run.
Unknown keys are rejected anywhere in the document.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace

from .errors import ConfigInvalid
from .params import ModelParams, TimeGrid, validate_params

__all__ = ["ExperimentConfig", "RunManifest", "EXPERIMENT_TAGS"]

EXPERIMENT_TAGS = (
    "simulate",
    "verify-main",
    "regime-check",
    "transform-roundtrip",
    "converge-right",
    "converge-left",
    "dist-test",
)


@dataclass(frozen=True)
class BinConfig:
    n_geometric: int = 24
    n_uniform: int = 64
    switch_frac: float = 0.1


@dataclass(frozen=True)
class KsConfig:
    n_samples: int = 100000
    k_values: tuple[float, ...] = (0.25, 0.5, 1.0)
    b_values: tuple[float, ...] = (0.0, 0.5)
    dt_values: tuple[float, ...] = (0.1, 1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    tag: str
    a: float = 0.5
    b: float = 0.5
    sigma: float = 2.0
    x0: float = 1.0
    horizon: float = 1.0
    steps: int = 2**16
    scheme: str = "full_truncation_euler"
    replications: int = 1
    seed: int = 20260809
    eps_ladder: tuple[float, ...] = (1e-3, 1e-4, 1e-5)
    delta_ladder: tuple[float, ...] = (0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625)
    bins: BinConfig = field(default_factory=BinConfig)
    ks: KsConfig = field(default_factory=KsConfig)
    floor: float = 0.1
    eval_times: int = 17
    increments_file: str | None = None
    output_dir: str = "out"

    def __post_init__(self):
        if self.tag not in EXPERIMENT_TAGS:
            raise ConfigInvalid(f"unknown experiment tag {self.tag!r}; choose from {EXPERIMENT_TAGS}")
        if self.scheme not in ("full_truncation_euler", "exact_transition"):
            raise ConfigInvalid(f"unknown scheme {self.scheme!r}")
        if self.replications < 1:
            raise ConfigInvalid("replications must be >= 1")
        if self.eval_times < 2:
            raise ConfigInvalid("eval_times must be >= 2")
        validate_params(self.params)

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.a, self.b, self.sigma, self.x0)

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid.uniform(self.horizon, self.steps)

    # -- JSON round trip ---------------------------------------------------

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["eps_ladder"] = list(self.eps_ladder)
        d["delta_ladder"] = list(self.delta_ladder)
        d["ks"]["k_values"] = list(self.ks.k_values)
        d["ks"]["b_values"] = list(self.ks.b_values)
        d["ks"]["dt_values"] = list(self.ks.dt_values)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigInvalid("config must be a JSON object")
        allowed = set(cls.__dataclass_fields__)
        unknown = set(raw) - allowed
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
        kw = dict(raw)
        if "bins" in kw:
            kw["bins"] = _sub(BinConfig, kw["bins"], "bins")
        if "ks" in kw:
            kw["ks"] = _sub(KsConfig, kw["ks"], "ks")
        for key in ("eps_ladder", "delta_ladder"):
            if key in kw:
                kw[key] = tuple(float(v) for v in kw[key])
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc
        return cls.from_json_dict(raw)

    def apply_overrides(self, pairs: list[str]) -> "ExperimentConfig":
        """Apply CLI --set key=value overrides of scalar fields (dotted for subsections)."""
        cfg_dict = self.to_json_dict()
        for pair in pairs:
            if "=" not in pair:
                raise ConfigInvalid(f"--set expects key=value, got {pair!r}")
            key, _, value = pair.partition("=")
            try:
                parsed = json.loads(value)
            except json.JSONDecodeError:
                parsed = value
            target = cfg_dict
            parts = key.split(".")
            for part in parts[:-1]:
                if part not in target or not isinstance(target[part], dict):
                    raise ConfigInvalid(f"unknown config section {part!r} in {key!r}")
                target = target[part]
            if parts[-1] not in target:
                raise ConfigInvalid(f"unknown config key {key!r}")
            target[parts[-1]] = parsed
        return ExperimentConfig.from_json_dict(cfg_dict)

    def sha256(self) -> str:
        canon = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _sub(cls, raw, name):
    if isinstance(raw, cls):
        return raw
    if not isinstance(raw, dict):
        raise ConfigInvalid(f"{name} must be an object")
    allowed = set(cls.__dataclass_fields__)
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigInvalid(f"unknown keys in {name}: {sorted(unknown)}")
    kw = dict(raw)
    for key, val in kw.items():
        if isinstance(val, list):
            kw[key] = tuple(val)
    return cls(**kw)


@dataclass(frozen=True)
class RunManifest:
    config_sha256: str
    code_version: str
    started_utc: str
    finished_utc: str
    outputs: tuple[dict, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "config_sha256": self.config_sha256,
                "code_version": self.code_version,
                "started_utc": self.started_utc,
                "finished_utc": self.finished_utc,
                "outputs": list(self.outputs),
            },
            indent=2,
            sort_keys=True,
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        raw = json.loads(text)
        return cls(
            raw["config_sha256"],
            raw["code_version"],
            raw["started_utc"],
            raw["finished_utc"],
            tuple(raw["outputs"]),
        )
