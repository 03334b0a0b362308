"""The shared currency between the evolution engine and its environments.

One engagement pits a single attack strategy against a single defense
strategy. The environment scores each side on its own objective; by
convention every reported score is the quantity that side wants HIGH, so the
engine can select both roles by maximizing their own aggregated score. In a
zero-sum environment defender_score == -attacker_score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Protocol, runtime_checkable

import numpy as np

from .grammar import Strategy


@dataclass(frozen=True)
class EngagementOutcome:
    attacker_id: int
    defender_id: int
    generation: int
    attacker_score: float
    defender_score: float
    costs: dict[str, float] = field(default_factory=dict)
    telemetry: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.attacker_score) or not math.isfinite(self.defender_score):
            raise ValueError("engagement scores must be finite")

    def score_for(self, role: str) -> float:
        return self.attacker_score if role == "attacker" else self.defender_score

    def cost_for(self, role: str) -> float:
        return float(self.costs.get(f"{role}_cost", 0.0))

    def with_identity(self, attacker_id: int, defender_id: int, generation: int) -> "EngagementOutcome":
        return replace(self, attacker_id=attacker_id, defender_id=defender_id, generation=generation)


@runtime_checkable
class EngagementEnvironment(Protocol):
    """What the engine needs from an engagement simulator.

    engage must be a pure function of its arguments and the seed material in
    ``rng`` (an unspawned numpy SeedSequence). thread_safe declares whether
    concurrent calls are allowed.
    """

    environment_id: str
    thread_safe: bool

    def engage(self, attack: Strategy, defense: Strategy, rng: np.random.SeedSequence) -> EngagementOutcome:
        ...


class InterpretError(Exception):
    """A sentence is not in the language an environment expects.

    This signals a grammar/environment mismatch, i.e. a configuration bug,
    not a bad individual.
    """


class ScenarioError(Exception):
    """A scenario file is malformed or violates its invariants."""
