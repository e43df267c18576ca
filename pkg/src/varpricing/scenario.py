"""Scenario files: a type distribution, two cost functions and numeric settings.

Example::

    {
      "distribution": {"kind": "uniform", "theta_max": 1.0},
      "costs": [{"provider": 1, "poly": [0.0125, 0.0, 1.0]},
                {"provider": 2, "poly": [0.2, 0.0, 0.25]}],
      "settings": {"grid_step": 0.001, "epsilon": 0.0001, "oracle_steps": 201,
                   "nonnegative_prices": true},
      "innovative": [true, true]
    }

Only ``distribution`` and ``costs`` are required.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .cost import CostFunction, cost_from_config
from .distribution import TypeDistribution, Uniform, distribution_from_config


class ScenarioError(ValueError):
    """Malformed scenario; the message starts with the offending field path."""


@dataclass(frozen=True)
class Settings:
    grid_step: float = 1e-3
    epsilon: float = 1e-4
    oracle_steps: int = 201
    nonnegative_prices: bool = True

    def to_config(self) -> dict:
        return {"grid_step": self.grid_step, "epsilon": self.epsilon, "oracle_steps": self.oracle_steps,
                "nonnegative_prices": self.nonnegative_prices}


@dataclass(frozen=True)
class Scenario:
    distribution: TypeDistribution
    c1: CostFunction
    c2: CostFunction
    settings: Settings = field(default_factory=Settings)
    innovative: tuple[bool, bool] = (True, True)

    def to_config(self) -> dict:
        return {
            "distribution": self.distribution.to_config(),
            "costs": [self.c1.to_config(), self.c2.to_config()],
            "settings": self.settings.to_config(),
            "innovative": list(self.innovative),
        }

    def digest(self) -> str:
        """sha256 of the canonical JSON form; stable across key order and whitespace."""
        text = json.dumps(self.to_config(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def example_scenario() -> Scenario:
    """Uniform types on [0, 1]; provider 1 cheap on low types, provider 2 flatter."""
    return Scenario(Uniform(1.0), CostFunction((0.0125, 0.0, 1.0), 1), CostFunction((0.2, 0.0, 0.25), 2))


def _positive(value, path: str, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{path}: expected a number, got {value!r}")
    if integer and (int(value) != value or value < 2):
        raise ScenarioError(f"{path}: expected an integer >= 2, got {value!r}")
    if not value > 0 or value != value or value == float("inf"):
        raise ScenarioError(f"{path}: must be positive and finite, got {value!r}")
    return int(value) if integer else float(value)


def scenario_from_config(config: dict) -> Scenario:
    if not isinstance(config, dict):
        raise ScenarioError("scenario: expected a JSON object")
    unknown = set(config) - {"distribution", "costs", "settings", "innovative"}
    if unknown:
        raise ScenarioError(f"{sorted(unknown)[0]}: unknown field")
    if "distribution" not in config:
        raise ScenarioError("distribution: missing")
    try:
        d = distribution_from_config(config["distribution"])
    except (ValueError, TypeError) as exc:
        msg = str(exc)
        raise ScenarioError(msg if msg.startswith("distribution") else f"distribution: {msg}") from exc
    costs = config.get("costs")
    if not isinstance(costs, list) or len(costs) != 2:
        raise ScenarioError("costs: expected a list of two cost objects")
    parsed = {}
    for k, spec in enumerate(costs):
        try:
            c = cost_from_config(spec, d.theta_max)
        except (ValueError, TypeError) as exc:
            msg = str(exc).removeprefix("cost")
            raise ScenarioError(f"costs[{k}]{msg if msg.startswith('.') else ': ' + msg.strip()}") from exc
        if c.label in parsed:
            raise ScenarioError(f"costs[{k}].provider: duplicate provider {c.label}")
        if c.label not in (1, 2):
            raise ScenarioError(f"costs[{k}].provider: must be 1 or 2")
        parsed[c.label] = c
    raw = config.get("settings", {})
    if not isinstance(raw, dict):
        raise ScenarioError("settings: expected an object")
    defaults = Settings()
    unknown = set(raw) - set(defaults.to_config())
    if unknown:
        raise ScenarioError(f"settings.{sorted(unknown)[0]}: unknown field")
    nonneg = raw.get("nonnegative_prices", defaults.nonnegative_prices)
    if not isinstance(nonneg, bool):
        raise ScenarioError("settings.nonnegative_prices: expected true or false")
    settings = Settings(
        grid_step=_positive(raw.get("grid_step", defaults.grid_step), "settings.grid_step"),
        epsilon=_positive(raw.get("epsilon", defaults.epsilon), "settings.epsilon"),
        oracle_steps=_positive(raw.get("oracle_steps", defaults.oracle_steps), "settings.oracle_steps", True),
        nonnegative_prices=nonneg,
    )
    if settings.grid_step >= d.theta_max:
        raise ScenarioError("settings.grid_step: must be smaller than theta_max")
    innov = config.get("innovative", [True, True])
    if not (isinstance(innov, list) and len(innov) == 2 and all(isinstance(x, bool) for x in innov)):
        raise ScenarioError("innovative: expected a list of two booleans")
    return Scenario(d, parsed[1], parsed[2], settings, (innov[0], innov[1]))


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"scenario: cannot read {path}: {exc.strerror}") from exc
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return scenario_from_config(config)
