"""Competition structures: who engages whom within one half-generation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grammar import Genotype
from .config import CompetitionStructure


class StructureMismatch(Exception):
    """Population sizes violate the chosen structure's invariants."""


@dataclass(frozen=True)
class Population:
    role: str
    members: tuple[Genotype, ...]
    generation: int

    def __post_init__(self):
        if self.role not in ("attacker", "defender"):
            raise ValueError(f"unknown role {self.role!r}")
        if not self.members:
            raise ValueError("population cannot be empty")

    def __len__(self) -> int:
        return len(self.members)


def _round_one_vs_one(n_att: int, n_def: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    # Both sides shuffled; the smaller side is re-shuffled and reused until
    # the larger side is covered exactly once.
    total = max(n_att, n_def)

    def column(n: int) -> list[int]:
        ids: list[int] = []
        while len(ids) < total:
            ids.extend(int(i) for i in rng.permutation(n))
        return ids[:total]

    return list(zip(column(n_att), column(n_def)))


def pair(
    structure: CompetitionStructure,
    attackers: Population,
    defenders: Population,
    rng: np.random.Generator,
) -> list[tuple[int, int]]:
    """Return the (attacker index, defender index) pairs for one half-generation.

    Exact pair counts: one-vs-one max(N_att, N_def); all-vs-all N_att * N_def;
    tournament(r) r * max(N_att, N_def); spatial(M, c) M^2 * c^2.
    """
    n_att, n_def = len(attackers), len(defenders)
    if structure.kind == "one-vs-one":
        return _round_one_vs_one(n_att, n_def, rng)
    if structure.kind == "all-vs-all":
        return [(a, d) for a in range(n_att) for d in range(n_def)]
    if structure.kind == "tournament":
        pairs: list[tuple[int, int]] = []
        for _ in range(structure.rounds):
            pairs.extend(_round_one_vs_one(n_att, n_def, rng))
        return pairs
    if structure.kind == "spatial":
        side = structure.grid_side
        if n_att != side * side or n_def != side * side:
            raise StructureMismatch(
                f"spatial({side},{structure.neighborhood}) needs both populations "
                f"of size {side * side}, got {n_att} and {n_def}"
            )
        reach = structure.neighborhood // 2
        offsets = range(-reach, reach + 1)
        pairs = []
        for x in range(side):
            for y in range(side):
                attacker = x * side + y
                for dx in offsets:
                    for dy in offsets:
                        defender = ((x + dx) % side) * side + ((y + dy) % side)
                        pairs.append((attacker, defender))
        return pairs
    raise StructureMismatch(f"unknown structure kind {structure.kind!r}")
