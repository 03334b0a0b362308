"""The alternating two-population coevolutionary loop.

Each generation runs two half-steps. A half-step evolves one role against the
frozen opposing population: select parents, cross over, mutate, map genotypes
to sentences, pair per the competition structure, engage, and aggregate the
outcomes into fitness. The previous champion (incumbent) is re-evaluated
against the same frozen opponents and swapped in for the worst newcomer when
it is strictly better, so the best fitness against a fixed opponent set never
worsens between consecutive generations.

Every engagement is logged. Identical config and master seed reproduce the
log byte for byte.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

from ..engagement import EngagementEnvironment, EngagementOutcome
from ..grammar import Genotype, Grammar, MappingFailure, Strategy, map_genotype, random_genotype
from . import rng as streams
from .archive import Archive, ArchiveEntry
from .config import ATTACKER, DEFENDER, EvolutionConfig, opposite
from .fitness import aggregate, assign_fitness, pareto_front
from .pairing import Population, pair
from .variation import crossover, mutate, select

CANDIDATE = "candidate"
INCUMBENT = "incumbent"


@dataclass(frozen=True)
class Champion:
    role: str
    index: int
    genotype: Genotype
    sentence: tuple[str, ...] | None
    fitness: float
    concept: str
    concept_score: float


@dataclass(frozen=True)
class HalfStepStats:
    generation: int
    phase: str
    best_id: int
    best_fitness: float
    mean_fitness: float
    fitness_variance: float
    incumbent_fitness: float | None
    best_genotype: Genotype
    best_sentence: tuple[str, ...] | None
    best_cost: float | None


@dataclass
class RunRecord:
    run_id: str
    master_seed: int
    environment_id: str
    config: EvolutionConfig
    best_attacker: Champion
    best_defender: Champion
    half_steps: list[HalfStepStats] = field(default_factory=list)
    engagements: list[dict] = field(default_factory=list)
    archive_entries: list[ArchiveEntry] = field(default_factory=list)

    def trajectory(self, role: str) -> list[tuple[int, float]]:
        return [(s.generation, s.best_fitness) for s in self.half_steps if s.phase == role]


def _best_index(fitness: dict[int, float], n: int) -> int:
    return max(range(n), key=lambda i: (fitness[i], -i))


def _worst_index(fitness: dict[int, float], n: int) -> int:
    return min(range(n), key=lambda i: (fitness[i], i))


def _sentence_text(strategy: Strategy | None) -> str | None:
    return strategy.text if strategy is not None else None


class _AlternatingRun:
    def __init__(self, cfg, grammars, environment, run_id):
        self.cfg = cfg
        self.grammars = grammars
        self.environment = environment
        self.run_id = run_id
        self.seed = cfg.master_seed
        self.populations: dict[str, Population] = {}
        self.strategies: dict[str, list[Strategy | None]] = {}
        self.fitness: dict[str, dict[int, float] | None] = {ATTACKER: None, DEFENDER: None}
        self.outcomes: dict[str, dict[int, list[EngagementOutcome]]] = {ATTACKER: {}, DEFENDER: {}}
        self.log: list[dict] = []
        self.half_steps: list[HalfStepStats] = []
        self.archive = Archive(cfg.archive_capacity, cfg.archive_admission)

    def initialize(self):
        for role in (ATTACKER, DEFENDER):
            members = tuple(
                random_genotype(
                    streams.generator(self.seed, "init", role, i),
                    self.cfg.limits.min_length,
                    self.cfg.limits.max_length,
                    self.cfg.limits.codon_max,
                )
                for i in range(self.cfg.population_size(role))
            )
            self.populations[role] = Population(role=role, members=members, generation=0)
            self.strategies[role] = [self._map(role, member) for member in members]

    def _map(self, role: str, genotype: Genotype) -> Strategy | None:
        try:
            return map_genotype(genotype, self.grammars[role], self.cfg.mapping)
        except MappingFailure:
            return None

    def _engage(self, attack: Strategy, defense: Strategy, *key) -> EngagementOutcome:
        return self.environment.engage(attack, defense, streams.seed_sequence(self.seed, *key))

    def _record(self, generation, phase, kind, pair_index, outcome, att_geno, att_strat, def_geno, def_strat):
        self.log.append(
            {
                "record": "engagement",
                "run": self.run_id,
                "generation": generation,
                "phase": phase,
                "kind": kind,
                "pair_index": pair_index,
                "attacker_id": outcome.attacker_id,
                "defender_id": outcome.defender_id,
                "attacker_genotype": list(att_geno.codons),
                "attacker_sentence": _sentence_text(att_strat),
                "defender_genotype": list(def_geno.codons),
                "defender_sentence": _sentence_text(def_strat),
                "attacker_score": outcome.attacker_score,
                "defender_score": outcome.defender_score,
                "costs": dict(outcome.costs),
                "telemetry": dict(outcome.telemetry),
            }
        )

    def _variation(self, generation, role, parents):
        n = self.cfg.population_size(role)
        children: list[Genotype] = []
        for slot in range(0, n - 1, 2):
            first, second = crossover(
                parents[slot],
                parents[slot + 1],
                self.cfg.crossover_rate,
                streams.generator(self.seed, "cross", generation, role, slot),
                self.cfg.limits,
            )
            children.extend((first, second))
        if len(children) < n:
            children.append(parents[n - 1])
        return [
            mutate(
                child,
                self.cfg.mutation_rate,
                streams.generator(self.seed, "mutate", generation, role, i),
                self.cfg.limits,
            )
            for i, child in enumerate(children)
        ]

    def half_step(self, generation: int, role: str):
        cfg = self.cfg
        opp = opposite(role)
        n = cfg.population_size(role)
        previous = self.populations[role]
        previous_fitness = self.fitness[role]

        incumbent_index = incumbent_geno = incumbent_strat = None
        if previous_fitness is None:
            parents = list(previous.members)
        else:
            incumbent_index = _best_index(previous_fitness, n)
            incumbent_geno = previous.members[incumbent_index]
            incumbent_strat = self.strategies[role][incumbent_index]
            parents = list(
                select(
                    previous,
                    previous_fitness,
                    cfg.selection,
                    streams.generator(self.seed, "select", generation, role),
                ).members
            )

        children = self._variation(generation, role, parents)
        child_strategies = [self._map(role, child) for child in children]

        candidates = Population(role=role, members=tuple(children), generation=generation)
        if role == ATTACKER:
            att_pop, def_pop = candidates, self.populations[opp]
            att_strats, def_strats = child_strategies, self.strategies[opp]
        else:
            att_pop, def_pop = self.populations[opp], candidates
            att_strats, def_strats = self.strategies[opp], child_strategies

        pairs = pair(cfg.structure, att_pop, def_pop, streams.generator(self.seed, "pair", generation, role))
        outcomes: list[EngagementOutcome] = []
        for k, (ai, di) in enumerate(pairs):
            attack, defense = att_strats[ai], def_strats[di]
            if attack is None or defense is None:
                continue
            outcome = self._engage(attack, defense, "engage", generation, role, k)
            outcome = outcome.with_identity(ai, di, generation)
            outcomes.append(outcome)
            self._record(
                generation, role, CANDIDATE, k, outcome,
                att_pop.members[ai], attack, def_pop.members[di], defense,
            )

        fitness = assign_fitness(
            outcomes, cfg.aggregation, role, secondary_weight=cfg.secondary_weight
        )
        per_individual: dict[int, list[EngagementOutcome]] = {}
        for outcome in outcomes:
            own = outcome.attacker_id if role == ATTACKER else outcome.defender_id
            per_individual.setdefault(own, []).append(outcome)
        for i in range(n):
            fitness.setdefault(i, cfg.invalid_fitness)

        # Elitism: re-evaluate the incumbent against every valid frozen
        # opponent and swap it in for the worst newcomer if strictly better.
        incumbent_fitness = None
        if incumbent_strat is not None and previous_fitness is not None:
            incumbent_outcomes = []
            for j, opponent in enumerate(self.strategies[opp]):
                if opponent is None:
                    continue
                if role == ATTACKER:
                    outcome = self._engage(incumbent_strat, opponent, "elite", generation, role, j)
                    outcome = outcome.with_identity(incumbent_index, j, generation)
                    self._record(
                        generation, role, INCUMBENT, j, outcome,
                        incumbent_geno, incumbent_strat,
                        self.populations[opp].members[j], opponent,
                    )
                else:
                    outcome = self._engage(opponent, incumbent_strat, "elite", generation, role, j)
                    outcome = outcome.with_identity(j, incumbent_index, generation)
                    self._record(
                        generation, role, INCUMBENT, j, outcome,
                        self.populations[opp].members[j], opponent,
                        incumbent_geno, incumbent_strat,
                    )
                incumbent_outcomes.append(outcome)
            if incumbent_outcomes:
                incumbent_fitness = aggregate(
                    [
                        o.score_for(role) - cfg.secondary_weight * o.cost_for(role)
                        for o in incumbent_outcomes
                    ],
                    cfg.aggregation,
                )
                worst = _worst_index(fitness, n)
                if incumbent_fitness > fitness[worst]:
                    children[worst] = incumbent_geno
                    child_strategies[worst] = incumbent_strat
                    fitness[worst] = incumbent_fitness
                    per_individual[worst] = incumbent_outcomes

        self.populations[role] = Population(role=role, members=tuple(children), generation=generation)
        self.strategies[role] = child_strategies
        self.fitness[role] = fitness
        self.outcomes[role] = per_individual

        values = [fitness[i] for i in range(n)]
        best = _best_index(fitness, n)
        best_strategy = child_strategies[best]
        best_outcomes = per_individual.get(best, [])
        best_cost = (
            statistics.fmean([o.cost_for(role) for o in best_outcomes]) if best_outcomes else None
        )
        self.half_steps.append(
            HalfStepStats(
                generation=generation,
                phase=role,
                best_id=best,
                best_fitness=fitness[best],
                mean_fitness=statistics.fmean(values),
                fitness_variance=statistics.pvariance(values),
                incumbent_fitness=incumbent_fitness,
                best_genotype=children[best],
                best_sentence=best_strategy.sentence if best_strategy else None,
                best_cost=best_cost,
            )
        )
        if fitness[best] > cfg.invalid_fitness:
            self.archive.admit(
                ArchiveEntry(
                    genotype=children[best],
                    role=role,
                    generation=generation,
                    score=fitness[best],
                    cost=best_cost if best_cost is not None else 0.0,
                    sentence=best_strategy.sentence if best_strategy else None,
                )
            )

    def champion(self, role: str) -> Champion:
        cfg = self.cfg
        n = cfg.population_size(role)
        fitness = self.fitness[role]
        per_individual = self.outcomes[role]
        evaluated = sorted(per_individual)

        def effective(outcome):
            return outcome.score_for(role) - cfg.secondary_weight * outcome.cost_for(role)

        if not evaluated:
            index, score = 0, cfg.invalid_fitness
        elif cfg.solution_concept == "best-worst":
            scored = {i: min(effective(o) for o in per_individual[i]) for i in evaluated}
            index = max(evaluated, key=lambda i: (scored[i], -i))
            score = scored[index]
        elif cfg.solution_concept == "pareto":
            points = [
                (
                    statistics.fmean([o.score_for(role) for o in per_individual[i]]),
                    statistics.fmean([o.cost_for(role) for o in per_individual[i]]),
                )
                for i in evaluated
            ]
            front = pareto_front(points, ("max", "min"))
            index = evaluated[front[0]]
            score = points[front[0]][0]
        else:  # meu
            scored = {i: statistics.fmean([effective(o) for o in per_individual[i]]) for i in evaluated}
            index = max(evaluated, key=lambda i: (scored[i], -i))
            score = scored[index]

        strategy = self.strategies[role][index]
        return Champion(
            role=role,
            index=index,
            genotype=self.populations[role].members[index],
            sentence=strategy.sentence if strategy else None,
            fitness=fitness[index],
            concept=cfg.solution_concept,
            concept_score=score,
        )


def run_alternating(
    cfg: EvolutionConfig,
    attack_grammar: Grammar,
    defense_grammar: Grammar,
    environment: EngagementEnvironment,
    run_id: str | None = None,
) -> RunRecord:
    """Run the full alternating loop and return the complete run record."""
    if cfg.structure.kind == "spatial":
        side = cfg.structure.grid_side
        if cfg.attacker_population != side * side or cfg.defender_population != side * side:
            from .pairing import StructureMismatch

            raise StructureMismatch(
                f"spatial structure needs both populations of size {side * side}"
            )
    if run_id is None:
        run_id = f"run-s{cfg.master_seed}"
    state = _AlternatingRun(
        cfg,
        {ATTACKER: attack_grammar, DEFENDER: defense_grammar},
        environment,
        run_id,
    )
    state.initialize()
    for generation in range(1, cfg.generations + 1):
        state.half_step(generation, ATTACKER)
        state.half_step(generation, DEFENDER)
    return RunRecord(
        run_id=run_id,
        master_seed=cfg.master_seed,
        environment_id=environment.environment_id,
        config=cfg,
        best_attacker=state.champion(ATTACKER),
        best_defender=state.champion(DEFENDER),
        half_steps=state.half_steps,
        engagements=state.log,
        archive_entries=list(state.archive.entries),
    )
