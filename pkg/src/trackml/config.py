"""Pipeline configuration read from an INI-style file.

Example::

    [run]
    seed = 7
    jobs = 2
    out = results

    [data]
    path = table2.csv
    target = both

    [sade]
    population_size = 50
    max_generations = 300
    runs = 5

    [evaluate]
    models = rforest, lm, svm, nn
    ratios = 50-50, 60-40, 70-30, 80-20
    k = 10

    [model.rforest]
    n_estimators = 500

Command-line flags override any value given here.
"""
from __future__ import annotations

import ast
import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .evaluation import RATIOS, parse_ratio
from .models import MODEL_KINDS
from .sade import SadeConfig

SADE_KEYS = ("population_size", "max_generations", "learning_period", "scale_factor",
             "mutation_rate", "crossover_rate")


class ConfigError(ValueError):
    pass


def _literal(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _list(text: str) -> list:
    return [item.strip() for item in text.split(",") if item.strip()]


@dataclass
class PipelineConfig:
    data: Optional[str] = None
    target: str = "both"
    seed: int = 0
    jobs: int = 1
    out: Optional[str] = None
    sade: dict = field(default_factory=dict)
    runs: int = 5
    models: list = field(default_factory=lambda: list(MODEL_KINDS))
    model_params: dict = field(default_factory=dict)
    ratios: list = field(default_factory=lambda: list(RATIOS))
    k: int = 10

    def sade_config(self, seed: int) -> SadeConfig:
        return SadeConfig(**self.sade, seed=seed)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    cfg = PipelineConfig()
    if parser.has_section("run"):
        run = parser["run"]
        cfg.seed = run.getint("seed", cfg.seed)
        cfg.jobs = run.getint("jobs", cfg.jobs)
        cfg.out = run.get("out", cfg.out)
    if parser.has_section("data"):
        data = parser["data"]
        cfg.data = data.get("path", cfg.data)
        cfg.target = data.get("target", cfg.target)
    if parser.has_section("sade"):
        for key, value in parser["sade"].items():
            if key == "runs":
                cfg.runs = int(value)
            elif key in SADE_KEYS:
                cfg.sade[key] = _literal(value)
            else:
                raise ConfigError(f"unknown [sade] option {key!r}")
    if parser.has_section("evaluate"):
        ev = parser["evaluate"]
        if "models" in ev:
            cfg.models = _list(ev["models"])
        if "ratios" in ev:
            cfg.ratios = [parse_ratio(r) for r in _list(ev["ratios"])]
        cfg.k = ev.getint("k", cfg.k)
    for section in parser.sections():
        if section.startswith("model."):
            kind = section.split(".", 1)[1]
            if kind not in MODEL_KINDS:
                raise ConfigError(f"unknown model section [{section}]")
            cfg.model_params[kind] = {k: _literal(v) for k, v in parser[section].items()}
    unknown = [m for m in cfg.models if m not in MODEL_KINDS]
    if unknown:
        raise ConfigError(f"unknown model kinds: {unknown}")
    return cfg
