"""Run configuration: model parameters, prompts and budgets.

Loaded from a TOML file; every key is optional. See README for the layout.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from finmcp.errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SYSTEM_PROMPT_TEMPLATE = (
    "You are a helpful assistant. If you receive a question without any indication of time "
    "period, always assume it to refer to {default_fiscal_year}. Always limit tool executions "
    "to {period_budget} fiscal periods prior to the reference one."
)


@dataclass(frozen=True)
class ModelParams:
    max_completion_tokens: int
    seed: int = 17
    temperature: float = 0.01
    top_p: float = 0.15

    def as_request(self) -> dict[str, Any]:
        return {
            "max_completion_tokens": self.max_completion_tokens,
            "seed": self.seed,
            "temperature": self.temperature,
            "top_p": self.top_p,
        }


@dataclass(frozen=True)
class Endpoint:
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4o-mini"
    api_key_env: str = "OPENAI_API_KEY"
    timeout_s: float = 120.0


@dataclass(frozen=True)
class RunConfig:
    generator: ModelParams = ModelParams(max_completion_tokens=2048)
    evaluator: ModelParams = ModelParams(max_completion_tokens=4096)
    default_fiscal_year: str = "FY2023"
    period_budget: int = 5
    max_rounds: int = 16
    system_prompt: str | None = None
    model_endpoint: Endpoint = field(default_factory=Endpoint)
    evaluator_endpoint: Endpoint | None = None
    max_model_retries: int = 3
    retry_backoff_s: float = 1.0
    judge_seeds: tuple[int, int] = (17, 18)
    clock: str = "wall"

    @property
    def resolved_system_prompt(self) -> str:
        if self.system_prompt is not None:
            return self.system_prompt
        return SYSTEM_PROMPT_TEMPLATE.format(
            default_fiscal_year=self.default_fiscal_year, period_budget=self.period_budget
        )

    @property
    def judge_endpoint(self) -> Endpoint:
        return self.evaluator_endpoint or self.model_endpoint

    def with_overrides(self, **kwargs: Any) -> "RunConfig":
        return replace(self, **kwargs)

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "RunConfig":
        base = cls()
        unknown = set(data) - {"generator", "evaluator", "endpoint", "evaluator_endpoint", "agent"}
        if unknown:
            raise ConfigError(f"unknown tables: {', '.join(sorted(unknown))}")
        kwargs: dict[str, Any] = {}
        try:
            if "generator" in data:
                kwargs["generator"] = replace(base.generator, **data["generator"])
            if "evaluator" in data:
                kwargs["evaluator"] = replace(base.evaluator, **data["evaluator"])
            if "endpoint" in data:
                kwargs["model_endpoint"] = Endpoint(**data["endpoint"])
            if "evaluator_endpoint" in data:
                kwargs["evaluator_endpoint"] = Endpoint(**data["evaluator_endpoint"])
        except TypeError as exc:  # unknown key inside a table
            raise ConfigError(str(exc)) from None
        agent = dict(data.get("agent", {}))
        if "judge_seeds" in agent:
            seeds = tuple(agent.pop("judge_seeds"))
            if len(seeds) != 2:
                raise ConfigError("judge_seeds needs exactly two seeds")
            kwargs["judge_seeds"] = seeds
        known = {"default_fiscal_year", "period_budget", "max_rounds", "system_prompt",
                 "max_model_retries", "retry_backoff_s", "clock"}
        unknown = set(agent) - known
        if unknown:
            raise ConfigError(f"unknown [agent] keys: {', '.join(sorted(unknown))}")
        kwargs.update(agent)
        cfg = replace(base, **kwargs)
        if cfg.max_rounds < 1:
            raise ConfigError("max_rounds must be at least 1")
        if cfg.clock not in ("wall", "logical"):
            raise ConfigError(f"clock must be wall or logical, not {cfg.clock!r}")
        return cfg

    @classmethod
    def load(cls, path: Path | str | None) -> "RunConfig":
        if path is None:
            return cls()
        with open(path, "rb") as fh:
            return cls.from_mapping(tomllib.load(fh))
