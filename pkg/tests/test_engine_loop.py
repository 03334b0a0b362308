import json

import pytest

from coevarena.engine import (
    Archive,
    ArchiveEntry,
    CompetitionStructure,
    EvolutionConfig,
    StructureMismatch,
    run_alternating,
)
from coevarena.grammar import Genotype, GenotypeLimits, MappingConfig, parse_bnf

from conftest import ScriptedEnvironment, hash_score

# Non-recursive, so every genotype maps: loop-shape assertions stay clean of
# invalid individuals. The invalid-individual test builds its own grammar.
ATTACK_GRAMMAR = parse_bnf(
    "<attack> ::= <word> | <word> <word> | <word> <word> <word>\n"
    "<word> ::= jab | hook | feint | wait"
)
DEFENSE_GRAMMAR = parse_bnf(
    "<defense> ::= <word> | <word> <word> | <word> <word> <word>\n"
    "<word> ::= block | dodge | parry | brace"
)
RECURSIVE_ATTACK_GRAMMAR = parse_bnf(
    "<attack> ::= <word> | <word> <attack>\n<word> ::= jab | hook | feint | wait"
)
RECURSIVE_DEFENSE_GRAMMAR = parse_bnf(
    "<defense> ::= <word> | <word> <defense>\n<word> ::= block | dodge | parry | brace"
)


def config(**overrides) -> EvolutionConfig:
    base = dict(
        generations=3,
        attacker_population=4,
        defender_population=4,
        mutation_rate=0.2,
        crossover_rate=0.7,
        master_seed=9,
        limits=GenotypeLimits(min_length=4, max_length=16, codon_max=64),
        archive_capacity=8,
    )
    base.update(overrides)
    return EvolutionConfig(**base)


def run(cfg, environment=None):
    return run_alternating(
        cfg, ATTACK_GRAMMAR, DEFENSE_GRAMMAR, environment or ScriptedEnvironment(hash_score)
    )


class TestLoopShape:
    def test_t1_n1_is_exactly_two_half_step_engagements(self):
        record = run(config(generations=1, attacker_population=1, defender_population=1))
        assert len(record.engagements) == 2
        assert [(e["generation"], e["phase"], e["kind"]) for e in record.engagements] == [
            (1, "attacker", "candidate"),
            (1, "defender", "candidate"),
        ]

    def test_candidate_engagement_counts_per_structure(self):
        cases = [
            (CompetitionStructure("one-vs-one"), 4),
            (CompetitionStructure("all-vs-all"), 16),
            (CompetitionStructure("tournament", rounds=2), 8),
            (CompetitionStructure("spatial", grid_side=2, neighborhood=1), 4),
        ]
        for structure, expected in cases:
            record = run(config(structure=structure))
            candidates = [e for e in record.engagements if e["kind"] == "candidate"]
            per_half_step = {}
            for engagement in candidates:
                key = (engagement["generation"], engagement["phase"])
                per_half_step[key] = per_half_step.get(key, 0) + 1
            assert set(per_half_step.values()) == {expected}, structure.kind

    def test_incumbent_records_start_at_generation_two(self):
        record = run(config(generations=3))
        incumbents = [e for e in record.engagements if e["kind"] == "incumbent"]
        assert incumbents
        assert all(e["generation"] >= 2 for e in incumbents)
        # re-evaluation runs against the whole frozen opponent population
        by_half_step = {}
        for engagement in incumbents:
            key = (engagement["generation"], engagement["phase"])
            by_half_step.setdefault(key, []).append(engagement)
        assert set(by_half_step) == {(g, r) for g in (2, 3) for r in ("attacker", "defender")}
        assert all(len(group) == 4 for group in by_half_step.values())

    def test_half_steps_cover_both_roles_every_generation(self):
        record = run(config(generations=4))
        assert [(s.generation, s.phase) for s in record.half_steps] == [
            (g, role) for g in range(1, 5) for role in ("attacker", "defender")
        ]

    def test_spatial_structure_requires_square_populations(self):
        cfg = config(structure=CompetitionStructure("spatial", grid_side=3, neighborhood=1))
        with pytest.raises(StructureMismatch):
            run(cfg)


class TestDeterminism:
    def test_identical_seed_gives_identical_record(self):
        first = run(config(generations=4, master_seed=21))
        second = run(config(generations=4, master_seed=21))
        assert json.dumps(first.engagements, sort_keys=True) == json.dumps(
            second.engagements, sort_keys=True
        )
        assert first.best_attacker == second.best_attacker
        assert first.half_steps == second.half_steps

    def test_different_seed_differs(self):
        first = run(config(generations=4, master_seed=21))
        second = run(config(generations=4, master_seed=22))
        assert first.engagements != second.engagements


class TestDegenerateEnvironment:
    def test_constant_zero_environment(self):
        record = run(config(generations=3), ScriptedEnvironment(lambda a, d: 0.0))
        for step in record.half_steps:
            assert step.best_fitness == 0.0
            assert step.fitness_variance == 0.0
        assert record.best_attacker.fitness == 0.0
        assert record.best_defender.fitness == 0.0
        again = run(config(generations=3), ScriptedEnvironment(lambda a, d: 0.0))
        assert again.best_attacker.index == record.best_attacker.index


class TestElitism:
    def test_best_never_worse_than_reevaluated_incumbent(self):
        record = run(config(generations=20, master_seed=5))
        checked = 0
        for step in record.half_steps:
            if step.incumbent_fitness is not None:
                assert step.best_fitness >= step.incumbent_fitness
                checked += 1
        assert checked >= 30

    def test_solution_concepts_all_run(self):
        for concept in ("meu", "best-worst", "pareto"):
            record = run(config(solution_concept=concept))
            assert record.best_attacker.concept == concept


class TestInvalidIndividuals:
    def test_mapping_failures_get_sentinel_fitness(self):
        # wraps forbidden and tiny genotypes: the recursive alternative often
        # strands the derivation, producing invalid individuals.
        cfg = config(
            generations=3,
            attacker_population=8,
            defender_population=8,
            limits=GenotypeLimits(min_length=1, max_length=8, codon_max=64),
            mapping=MappingConfig(max_wraps=0, max_derivation_steps=50),
        )
        record = run_alternating(
            cfg, RECURSIVE_ATTACK_GRAMMAR, RECURSIVE_DEFENSE_GRAMMAR, ScriptedEnvironment(hash_score)
        )
        means = [step.mean_fitness for step in record.half_steps]
        assert record.engagements  # some pairs still engaged
        assert any(f <= cfg.invalid_fitness / 16 for f in means)  # sentinel dragged means down
        assert any(step.best_fitness > cfg.invalid_fitness for step in record.half_steps)


class TestArchive:
    def test_loop_archives_champions(self):
        record = run(config(generations=4, archive_capacity=6))
        assert 0 < len(record.archive_entries) <= 6
        roles = {entry.role for entry in record.archive_entries}
        assert roles == {"attacker", "defender"}

    def test_best_of_generation_evicts_oldest(self):
        archive = Archive(capacity=2, admission="best-of-generation")
        for generation in range(4):
            archive.admit(
                ArchiveEntry(
                    genotype=Genotype((generation,)),
                    role="attacker",
                    generation=generation,
                    score=float(generation),
                    cost=0.0,
                )
            )
        assert [entry.generation for entry in archive.entries] == [2, 3]

    def test_pareto_admission_keeps_front_only(self):
        archive = Archive(capacity=10, admission="pareto-nondominated")
        points = [(1.0, 1.0), (2.0, 2.0), (3.0, 1.0), (2.5, 0.5), (0.5, 0.1)]
        for generation, (score, cost) in enumerate(points):
            archive.admit(
                ArchiveEntry(
                    genotype=Genotype((generation,)),
                    role="attacker",
                    generation=generation,
                    score=score,
                    cost=cost,
                )
            )
        from coevarena.engine import dominates

        objectives = [entry.objectives() for entry in archive.entries]
        for i, p in enumerate(objectives):
            for j, q in enumerate(objectives):
                if i != j:
                    assert not dominates(p, q, ("max", "min"))

    def test_zero_capacity_archive_stays_empty(self):
        record = run(config(archive_capacity=0))
        assert record.archive_entries == []
