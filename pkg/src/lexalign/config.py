"""Pipeline configuration: JSON round-trip and per-role gateway construction.

Each LLM role (embed, rerank, extract, complete, standardize, judge, refine)
can point at its own provider; anything unspecified falls back to the
"default" provider, and mock mode forces the deterministic offline provider
everywhere regardless of the configured kind.
"""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Mapping

from .evaluation import PRESETS, WeightVector
from .gateway import HttpProvider, LlmGateway, ProviderConfig, Recorder, RetryPolicy
from .mockllm import MockProvider, load_mock_rules

ROLES = ("default", "embed", "rerank", "extract", "complete", "standardize",
         "judge", "refine")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProviderSpec:
    kind: str = "mock"            # "mock" | "http"
    model_id: str = "mock-model"
    base_url: str = ""
    api_key_env: str | None = None
    max_in_flight: int = 4
    max_attempts: int = 3
    base_backoff: float = 0.5
    timeout_s: float = 60.0
    rules_path: str | None = None  # mock fixture rules (JSON list)

    def __post_init__(self) -> None:
        if self.kind not in ("mock", "http"):
            raise ConfigError(f"provider kind must be mock or http, got {self.kind!r}")
        if self.kind == "http" and not self.base_url:
            raise ConfigError("http providers need a base_url")
        if self.max_in_flight < 1 or self.max_attempts < 1:
            raise ConfigError("max_in_flight and max_attempts must be >= 1")


@dataclass(frozen=True)
class AlignSpec:
    threshold: float = 0.5
    max_attempts: int = 3
    k: int = 3
    text_window: int = 480

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("align threshold must be within [0, 1]")
        if self.max_attempts < 1 or self.k < 1 or self.text_window < 1:
            raise ConfigError("align max_attempts, k, and text_window must be >= 1")


@dataclass(frozen=True)
class PipelineConfig:
    corpus_dir: str
    output_dir: str = "runs"
    seed: int = 0
    mock: bool = True
    strict_review: bool = False
    weight_preset: str = "table8-fit"
    weights: Mapping[str, float] | None = None
    sample_max: int = 100
    align: AlignSpec = field(default_factory=AlignSpec)
    temperatures: Mapping[str, float] = field(default_factory=dict)
    extra_metrics: Mapping[str, str] = field(default_factory=dict)
    max_workers: int = 4
    providers: Mapping[str, ProviderSpec] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.corpus_dir:
            raise ConfigError("corpus_dir is required")
        if self.weights is None and self.weight_preset not in PRESETS:
            raise ConfigError(f"unknown weight preset {self.weight_preset!r}; "
                              f"known: {sorted(PRESETS)}")
        if self.weights is not None:
            WeightVector.from_mapping(self.weights)  # validates names and the sum
        if self.sample_max < 1:
            raise ConfigError("sample_max must be >= 1")
        if self.max_workers < 1:
            raise ConfigError("max_workers must be >= 1")
        unknown_roles = set(self.providers) - set(ROLES)
        if unknown_roles:
            raise ConfigError(f"unknown provider roles: {sorted(unknown_roles)}")
        unknown_temps = set(self.temperatures) - set(ROLES)
        if unknown_temps:
            raise ConfigError(f"unknown temperature roles: {sorted(unknown_temps)}")

    def weight_vector(self) -> WeightVector:
        if self.weights is not None:
            return WeightVector.from_mapping(self.weights)
        return PRESETS[self.weight_preset]

    def temperature(self, role: str) -> float:
        if role in self.temperatures:
            return float(self.temperatures[role])
        return float(self.temperatures.get("default", 0.0))


def _from_mapping(cls: type, data: Mapping[str, Any], where: str) -> Any:
    fields = {f for f in cls.__dataclass_fields__}  # type: ignore[attr-defined]
    unknown = set(data) - fields
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    return cls(**data)


def config_from_dict(data: Mapping[str, Any]) -> PipelineConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("config root must be an object")
    payload = dict(data)
    if "align" in payload and payload["align"] is not None:
        payload["align"] = _from_mapping(AlignSpec, payload["align"], "align")
    if "providers" in payload and payload["providers"] is not None:
        payload["providers"] = {
            role: _from_mapping(ProviderSpec, spec, f"providers.{role}")
            for role, spec in payload["providers"].items()
        }
    return _from_mapping(PipelineConfig, payload, "config")


def config_to_dict(config: PipelineConfig) -> dict[str, Any]:
    out = asdict(config)
    out["weights"] = dict(config.weights) if config.weights is not None else None
    out["temperatures"] = dict(config.temperatures)
    out["extra_metrics"] = dict(config.extra_metrics)
    out["providers"] = {role: asdict(spec) for role, spec in config.providers.items()}
    return out


def load_config(path: str | Path) -> PipelineConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def save_config(config: PipelineConfig, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(config_to_dict(config), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8")


def default_config(corpus_dir: str, **overrides: Any) -> PipelineConfig:
    return replace(PipelineConfig(corpus_dir=corpus_dir), **overrides)


def resolve_spec(config: PipelineConfig, role: str) -> ProviderSpec:
    if role not in ROLES:
        raise ConfigError(f"unknown role {role!r}")
    spec = config.providers.get(role) or config.providers.get("default") or ProviderSpec()
    if config.mock and spec.kind != "mock":
        spec = replace(spec, kind="mock", base_url="")
    return spec


def build_gateway(config: PipelineConfig, role: str, *,
                  recorder: Recorder | None = None,
                  sleeper: Callable[[float], None] = time.sleep) -> LlmGateway:
    spec = resolve_spec(config, role)
    provider_config = ProviderConfig(
        model_id=spec.model_id,
        base_url=spec.base_url,
        api_key_env=spec.api_key_env,
        max_in_flight=spec.max_in_flight,
        retry=RetryPolicy(max_attempts=spec.max_attempts, base_backoff=spec.base_backoff),
        timeout_s=spec.timeout_s,
    )
    if spec.kind == "mock":
        rules = tuple(load_mock_rules(spec.rules_path)) if spec.rules_path else ()
        provider: Any = MockProvider(seed=config.seed, rules=rules)
    else:
        provider = HttpProvider(provider_config)
    return LlmGateway(provider, provider_config, sleeper=sleeper, recorder=recorder)
