"""Selection and the variable-length variation operators."""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from ..grammar import Genotype, GenotypeLimits
from .config import SelectionScheme
from .pairing import Population


def _fitness_list(fitnesses, n: int) -> list[float]:
    if isinstance(fitnesses, Mapping):
        return [fitnesses[i] for i in range(n)]
    return list(fitnesses)


def select(
    population: Population,
    fitnesses,
    scheme: SelectionScheme,
    rng: np.random.Generator,
    minimize: bool = False,
) -> Population:
    """Pick len(population) parents with replacement.

    tournament(k): best of k i.i.d. uniform draws. truncation(f): uniform over
    the best ceil(f*N). Ties always go to the lowest index.
    """
    n = len(population)
    fit = _fitness_list(fitnesses, n)
    sign = 1.0 if minimize else -1.0

    def better(i: int, j: int) -> int:
        return i if (sign * fit[i], i) < (sign * fit[j], j) else j

    parents: list[Genotype] = []
    if scheme.kind == "tournament":
        for _ in range(n):
            draws = [int(d) for d in rng.integers(0, n, size=scheme.size)]
            winner = draws[0]
            for other in draws[1:]:
                winner = better(winner, other)
            parents.append(population.members[winner])
    else:
        keep = math.ceil(scheme.fraction * n)
        elite = sorted(range(n), key=lambda i: (sign * fit[i], i))[:keep]
        for _ in range(n):
            parents.append(population.members[elite[int(rng.integers(0, keep))]])
    return Population(role=population.role, members=tuple(parents), generation=population.generation)


def mutate(
    genotype: Genotype,
    mutation_rate: float,
    rng: np.random.Generator,
    limits: GenotypeLimits,
) -> Genotype:
    """Per-codon uniform resets, then possibly one insert-or-delete length step.

    A length step blocked by the min/max bound is a no-op, not a forced
    opposite step.
    """
    if mutation_rate <= 0.0:
        return genotype
    codons = list(genotype.codons)
    for i in range(len(codons)):
        if rng.random() < mutation_rate:
            codons[i] = int(rng.integers(0, limits.codon_max))
    if rng.random() < mutation_rate:
        if rng.random() < 0.5:
            if len(codons) < limits.max_length:
                position = int(rng.integers(0, len(codons) + 1))
                codons.insert(position, int(rng.integers(0, limits.codon_max)))
        else:
            if len(codons) > limits.min_length:
                position = int(rng.integers(0, len(codons)))
                del codons[position]
    return Genotype(tuple(codons))


def crossover(
    parent_a: Genotype,
    parent_b: Genotype,
    crossover_rate: float,
    rng: np.random.Generator,
    limits: GenotypeLimits,
) -> tuple[Genotype, Genotype]:
    """One-point crossover with independent cut points in each parent.

    Cut pairs whose children would leave [min_length, max_length] are
    resampled up to 100 times, after which the parents come back unchanged.
    """
    if rng.random() >= crossover_rate:
        return parent_a, parent_b
    a, b = parent_a.codons, parent_b.codons
    for _ in range(100):
        cut_a = int(rng.integers(0, len(a) + 1))
        cut_b = int(rng.integers(0, len(b) + 1))
        len_first = cut_a + len(b) - cut_b
        len_second = cut_b + len(a) - cut_a
        if (
            limits.min_length <= len_first <= limits.max_length
            and limits.min_length <= len_second <= limits.max_length
        ):
            return Genotype(a[:cut_a] + b[cut_b:]), Genotype(b[:cut_b] + a[cut_a:])
    return parent_a, parent_b
