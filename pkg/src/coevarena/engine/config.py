"""Run configuration for the alternating coevolutionary loop."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..grammar import GenotypeLimits, MappingConfig

ATTACKER = "attacker"
DEFENDER = "defender"
ROLES = (ATTACKER, DEFENDER)

AGGREGATIONS = ("mean", "max", "min", "median")
SOLUTION_CONCEPTS = ("meu", "best-worst", "pareto")
ADMISSION_RULES = ("best-of-generation", "pareto-nondominated")


def opposite(role: str) -> str:
    return DEFENDER if role == ATTACKER else ATTACKER


@dataclass(frozen=True)
class SelectionScheme:
    """tournament(k) or truncation(fraction)."""

    kind: str
    size: int = 3
    fraction: float = 0.5

    def __post_init__(self):
        if self.kind == "tournament":
            if self.size < 1:
                raise ValueError("tournament size must be >= 1")
        elif self.kind == "truncation":
            if not 0.0 < self.fraction <= 1.0:
                raise ValueError("truncation fraction must be in (0, 1]")
        else:
            raise ValueError(f"unknown selection scheme {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "SelectionScheme":
        kind, _, arg = text.strip().partition(":")
        if kind == "tournament":
            return cls("tournament", size=int(arg) if arg else 3)
        if kind == "truncation":
            return cls("truncation", fraction=float(arg) if arg else 0.5)
        raise ValueError(f"unknown selection scheme {text!r}")

    def render(self) -> str:
        if self.kind == "tournament":
            return f"tournament:{self.size}"
        return f"truncation:{self.fraction}"


@dataclass(frozen=True)
class CompetitionStructure:
    """How attackers and defenders are paired each half-generation.

    one-vs-one   max(N_att, N_def) pairs, random bijection with reuse
    all-vs-all   N_att * N_def pairs
    tournament   rounds independent one-vs-one rounds
    spatial      M x M toroidal grid, c x c Moore neighborhood per cell
    """

    kind: str
    rounds: int = 1
    grid_side: int = 0
    neighborhood: int = 3

    def __post_init__(self):
        if self.kind not in ("one-vs-one", "all-vs-all", "tournament", "spatial"):
            raise ValueError(f"unknown competition structure {self.kind!r}")
        if self.kind == "tournament" and self.rounds < 1:
            raise ValueError("tournament rounds must be >= 1")
        if self.kind == "spatial":
            if self.grid_side < 1:
                raise ValueError("spatial grid side must be >= 1")
            if self.neighborhood < 1 or self.neighborhood % 2 == 0:
                raise ValueError("spatial neighborhood must be odd and >= 1")

    @classmethod
    def parse(cls, text: str) -> "CompetitionStructure":
        kind, _, arg = text.strip().partition(":")
        if kind in ("one-vs-one", "all-vs-all"):
            return cls(kind)
        if kind == "tournament":
            return cls("tournament", rounds=int(arg) if arg else 1)
        if kind == "spatial":
            side, _, hood = arg.partition("x")
            return cls("spatial", grid_side=int(side), neighborhood=int(hood) if hood else 3)
        raise ValueError(f"unknown competition structure {text!r}")

    def render(self) -> str:
        if self.kind == "tournament":
            return f"tournament:{self.rounds}"
        if self.kind == "spatial":
            return f"spatial:{self.grid_side}x{self.neighborhood}"
        return self.kind


@dataclass(frozen=True)
class EvolutionConfig:
    generations: int = 10
    attacker_population: int = 16
    defender_population: int = 16
    mutation_rate: float = 0.1
    crossover_rate: float = 0.8
    selection: SelectionScheme = field(default_factory=lambda: SelectionScheme("tournament", size=3))
    structure: CompetitionStructure = field(default_factory=lambda: CompetitionStructure("one-vs-one"))
    aggregation: str = "mean"
    solution_concept: str = "meu"
    archive_capacity: int = 16
    archive_admission: str = "best-of-generation"
    secondary_weight: float = 0.2
    invalid_fitness: float = -1e18
    master_seed: int = 0
    limits: GenotypeLimits = field(default_factory=GenotypeLimits)
    mapping: MappingConfig = field(default_factory=MappingConfig)

    def __post_init__(self):
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.attacker_population < 1 or self.defender_population < 1:
            raise ValueError("population sizes must be >= 1")
        for name in ("mutation_rate", "crossover_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"unknown aggregation {self.aggregation!r}")
        if self.solution_concept not in SOLUTION_CONCEPTS:
            raise ValueError(f"unknown solution concept {self.solution_concept!r}")
        if self.archive_capacity < 0:
            raise ValueError("archive capacity must be >= 0")
        if self.archive_admission not in ADMISSION_RULES:
            raise ValueError(f"unknown archive admission rule {self.archive_admission!r}")
        if self.secondary_weight < 0.0:
            raise ValueError("secondary_weight must be >= 0")
        if self.master_seed < 0:
            raise ValueError("master_seed must be >= 0")

    def with_seed(self, seed: int) -> "EvolutionConfig":
        return replace(self, master_seed=seed)

    def population_size(self, role: str) -> int:
        return self.attacker_population if role == ATTACKER else self.defender_population

    def to_dict(self) -> dict:
        return {
            "generations": self.generations,
            "attacker_population": self.attacker_population,
            "defender_population": self.defender_population,
            "mutation_rate": self.mutation_rate,
            "crossover_rate": self.crossover_rate,
            "selection": self.selection.render(),
            "structure": self.structure.render(),
            "aggregation": self.aggregation,
            "solution_concept": self.solution_concept,
            "archive_capacity": self.archive_capacity,
            "archive_admission": self.archive_admission,
            "secondary_weight": self.secondary_weight,
            "invalid_fitness": self.invalid_fitness,
            "master_seed": self.master_seed,
            "min_length": self.limits.min_length,
            "max_length": self.limits.max_length,
            "codon_max": self.limits.codon_max,
            "max_wraps": self.mapping.max_wraps,
            "codon_policy": self.mapping.codon_policy,
            "max_derivation_steps": self.mapping.max_derivation_steps,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvolutionConfig":
        return cls(
            generations=int(data["generations"]),
            attacker_population=int(data["attacker_population"]),
            defender_population=int(data["defender_population"]),
            mutation_rate=float(data["mutation_rate"]),
            crossover_rate=float(data["crossover_rate"]),
            selection=SelectionScheme.parse(data["selection"]),
            structure=CompetitionStructure.parse(data["structure"]),
            aggregation=data["aggregation"],
            solution_concept=data["solution_concept"],
            archive_capacity=int(data["archive_capacity"]),
            archive_admission=data["archive_admission"],
            secondary_weight=float(data["secondary_weight"]),
            invalid_fitness=float(data["invalid_fitness"]),
            master_seed=int(data["master_seed"]),
            limits=GenotypeLimits(
                min_length=int(data["min_length"]),
                max_length=int(data["max_length"]),
                codon_max=int(data["codon_max"]),
            ),
            mapping=MappingConfig(
                max_wraps=int(data["max_wraps"]),
                codon_policy=data["codon_policy"],
                max_derivation_steps=int(data["max_derivation_steps"]),
            ),
        )
