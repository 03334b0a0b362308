from .archive import Archive, ArchiveEntry
from .config import (
    ATTACKER,
    DEFENDER,
    ROLES,
    CompetitionStructure,
    EvolutionConfig,
    SelectionScheme,
    opposite,
)
from .fitness import DimensionMismatch, MissingOutcomes, assign_fitness, dominates, pareto_front
from .loop import Champion, HalfStepStats, RunRecord, run_alternating
from .pairing import Population, StructureMismatch, pair
from .variation import crossover, mutate, select

__all__ = [
    "ATTACKER",
    "DEFENDER",
    "ROLES",
    "Archive",
    "ArchiveEntry",
    "Champion",
    "CompetitionStructure",
    "DimensionMismatch",
    "EvolutionConfig",
    "HalfStepStats",
    "MissingOutcomes",
    "Population",
    "RunRecord",
    "SelectionScheme",
    "StructureMismatch",
    "assign_fitness",
    "crossover",
    "dominates",
    "mutate",
    "opposite",
    "pair",
    "pareto_front",
    "run_alternating",
    "select",
]
