"""Search configuration and the two built-in hyperparameter profiles."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .errors import ConfigError
from .tree import ARITY, DEFAULT_COMPLEXITY, SPLITS, TERMINALS

MUTATIONS = ("toggle_on", "toggle_off", "subtree", "point", "delete", "insert")

CLINICAL_FUNCTIONS = ("add", "sub", "mul", "div", "ceil", "floor", "pow", "log",
                      "min", "max", "split")
SRBENCH_FUNCTIONS = ("add", "sub", "mul", "div", "sin", "cos", "tanh", "exp", "log",
                     "sqrt", "pow", "split")


def expand_functions(names) -> tuple[str, ...]:
    """Resolve the ``split`` alias into both split kinds and validate names."""
    out: list[str] = []
    for name in names:
        expanded = SPLITS if name == "split" else (name,)
        for kind in expanded:
            if kind not in ARITY or kind in TERMINALS or kind == "logistic":
                raise ConfigError(f"unknown function {kind!r}")
            if kind not in out:
                out.append(kind)
    return tuple(out)


@dataclass
class SearchConfig:
    """Every knob of a search run. Defaults are the clinical profile."""

    pop_size: int = 500
    max_gens: int = 100
    max_depth: int = 12
    max_size: int = 100
    lm_iterations: int = 10
    functions: tuple[str, ...] = CLINICAL_FUNCTIONS
    mutation_weights: dict[str, float] = field(
        default_factory=lambda: {m: 1.0 for m in MUTATIONS})
    crossover_prob: float = 0.5
    split_seeded_init: bool = True
    objectives: tuple[str, ...] = ("loss", "complexity")
    seed: int = 0
    task: str = "regression"
    validation_fraction: float = 0.25
    complexity: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_COMPLEXITY))
    split_criterion: str = "weighted"
    simplify: bool = True
    simplify_tol: float = 1e-6
    simplify_q: float = 1e-8
    time_limit: float | None = None

    def __post_init__(self) -> None:
        self.functions = expand_functions(self.functions)
        self.objectives = tuple(self.objectives)
        if self.pop_size < 2 or self.pop_size % 2:
            raise ConfigError("pop_size must be even and >= 2")
        if self.max_gens < 1:
            raise ConfigError("max_gens must be >= 1")
        if self.max_depth < 1 or self.max_size < 1:
            raise ConfigError("max_depth and max_size must be >= 1")
        if self.lm_iterations < 1:
            raise ConfigError("lm_iterations must be >= 1")
        unknown = set(self.mutation_weights) - set(MUTATIONS)
        if unknown:
            raise ConfigError(f"unknown mutations {sorted(unknown)}")
        if sum(self.mutation_weights.values()) <= 0 or min(self.mutation_weights.values()) < 0:
            raise ConfigError("mutation weights must be non-negative with a positive sum")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ConfigError("crossover_prob must lie in [0, 1]")
        if self.task not in ("regression", "classification"):
            raise ConfigError(f"unknown task {self.task!r}")
        if self.task == "classification" and self.max_size < 2:
            raise ConfigError("classification needs max_size >= 2 for the logistic root")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction must lie in [0, 1)")
        if self.split_criterion not in ("per_count", "weighted"):
            raise ConfigError(f"unknown split criterion {self.split_criterion!r}")
        if set(self.objectives) - {"loss", "complexity", "size"} or len(self.objectives) < 1:
            raise ConfigError(f"bad objectives {self.objectives}")
        missing = (set(self.functions) | set(TERMINALS) | {"logistic"}) - set(self.complexity)
        if missing:
            raise ConfigError(f"complexity table lacks {sorted(missing)}")

    @property
    def uses_splits(self) -> bool:
        return any(f in SPLITS for f in self.functions)

    def replace(self, **changes) -> SearchConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["functions"] = list(self.functions)
        d["objectives"] = list(self.objectives)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> SearchConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        data = dict(data)
        for key in ("functions", "objectives"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


PROFILES: dict[str, dict] = {
    "clinical": {},
    "srbench": {
        "pop_size": 1000, "max_gens": 100, "max_depth": 10, "max_size": 128,
        "functions": SRBENCH_FUNCTIONS, "split_seeded_init": False,
    },
}


def profile(name: str, **overrides) -> SearchConfig:
    try:
        base = dict(PROFILES[name])
    except KeyError:
        raise ConfigError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None
    base.update(overrides)
    return SearchConfig(**base)
