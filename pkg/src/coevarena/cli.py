"""Experiment runner: load configs, execute runs, manage the results store,
and drive the decision-support stage.

Subcommands: run, establo, inspect, validate-grammar. The store root comes
from --store, else the COEVARENA_STORE environment variable, else the config
file's [experiment] store entry.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from configparser import ConfigParser
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import establo as establo_mod
from .engagement import InterpretError, ScenarioError
from .engine.config import EvolutionConfig, SelectionScheme, CompetitionStructure
from .engine.loop import run_alternating
from .engine.pairing import StructureMismatch
from .envs import ENVIRONMENTS, load_environment
from .grammar import GenotypeLimits, GrammarError, MappingConfig, load_grammar
from .store import (
    FORMAT_VERSION,
    CorruptRecord,
    EmptyStore,
    ResultsStore,
    UnknownRun,
    sha256_file,
)

STORE_ENV_VAR = "COEVARENA_STORE"


class ConfigError(Exception):
    """An experiment config is unusable; the message names the bad field."""


@dataclass
class ExperimentConfig:
    environment: str
    attack_grammar: Path
    defense_grammar: Path
    scenario: Path
    store: Path | None
    repetitions: int
    seed: int
    algorithm_label: str
    evolution: EvolutionConfig


def _get(parser: ConfigParser, section: str, option: str, cast, default=None):
    if not parser.has_option(section, option):
        if default is not None:
            return default
        raise ConfigError(f"config [{section}] {option}: missing required entry")
    raw = parser.get(section, option)
    try:
        return cast(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"config [{section}] {option}: bad value {raw!r} ({exc})") from exc


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    parser = ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise ConfigError(f"config file not found: {path}")
    base = path.parent

    def resolve(section, option):
        value = _get(parser, section, option, str)
        resolved = (base / value).resolve() if not Path(value).is_absolute() else Path(value)
        if not resolved.exists():
            raise ConfigError(f"config [{section}] {option}: file not found: {resolved}")
        return resolved

    environment = _get(parser, "experiment", "environment", str)
    if environment not in ENVIRONMENTS:
        raise ConfigError(
            f"config [experiment] environment: unknown {environment!r}, known: {sorted(ENVIRONMENTS)}"
        )
    store_value = _get(parser, "experiment", "store", str, default="")
    store = None
    if store_value:
        store = (base / store_value).resolve() if not Path(store_value).is_absolute() else Path(store_value)

    repetitions = _get(parser, "experiment", "repetitions", int, default=1)
    if repetitions < 1:
        raise ConfigError("config [experiment] repetitions: must be >= 1")
    seed = _get(parser, "experiment", "seed", int, default=0)
    if seed < 0:
        raise ConfigError("config [experiment] seed: must be >= 0")

    try:
        evolution = EvolutionConfig(
            generations=_get(parser, "evolution", "generations", int, default=10),
            attacker_population=_get(parser, "evolution", "attacker_population", int, default=16),
            defender_population=_get(parser, "evolution", "defender_population", int, default=16),
            mutation_rate=_get(parser, "evolution", "mutation_rate", float, default=0.1),
            crossover_rate=_get(parser, "evolution", "crossover_rate", float, default=0.8),
            selection=_get(
                parser, "evolution", "selection", SelectionScheme.parse,
                default=SelectionScheme("tournament", size=3),
            ),
            structure=_get(
                parser, "evolution", "structure", CompetitionStructure.parse,
                default=CompetitionStructure("one-vs-one"),
            ),
            aggregation=_get(parser, "evolution", "aggregation", str, default="mean"),
            solution_concept=_get(parser, "evolution", "solution_concept", str, default="meu"),
            archive_capacity=_get(parser, "evolution", "archive_capacity", int, default=16),
            archive_admission=_get(
                parser, "evolution", "archive_admission", str, default="best-of-generation"
            ),
            secondary_weight=_get(parser, "evolution", "secondary_weight", float, default=0.2),
            invalid_fitness=_get(parser, "evolution", "invalid_fitness", float, default=-1e18),
            master_seed=seed,
            limits=GenotypeLimits(
                min_length=_get(parser, "genotype", "min_length", int, default=8),
                max_length=_get(parser, "genotype", "max_length", int, default=64),
                codon_max=_get(parser, "genotype", "codon_max", int, default=2**16),
            ),
            mapping=MappingConfig(
                max_wraps=_get(parser, "mapping", "max_wraps", int, default=2),
                codon_policy=_get(parser, "mapping", "codon_policy", str, default="consume-on-choice"),
                max_derivation_steps=_get(
                    parser, "mapping", "max_derivation_steps", int, default=10_000
                ),
            ),
        )
    except ValueError as exc:
        raise ConfigError(f"config [evolution]: {exc}") from exc

    return ExperimentConfig(
        environment=environment,
        attack_grammar=resolve("experiment", "attack_grammar"),
        defense_grammar=resolve("experiment", "defense_grammar"),
        scenario=resolve("experiment", "scenario"),
        store=store,
        repetitions=repetitions,
        seed=seed,
        algorithm_label=_get(parser, "experiment", "algorithm_label", str, default="alternating"),
        evolution=evolution,
    )


def make_run_id(cfg: ExperimentConfig, seed: int) -> str:
    config_echo = cfg.evolution.to_dict()
    config_echo.pop("master_seed")
    payload = json.dumps(
        {
            "environment": cfg.environment,
            "algorithm_label": cfg.algorithm_label,
            "config": config_echo,
            "attack_grammar": sha256_file(cfg.attack_grammar),
            "defense_grammar": sha256_file(cfg.defense_grammar),
            "scenario": sha256_file(cfg.scenario),
        },
        sort_keys=True,
    )
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()[:10]
    return f"{digest}-s{seed}"


def _resolve_store(args, cfg: ExperimentConfig | None = None) -> Path:
    if getattr(args, "store", None):
        return Path(args.store)
    env_value = os.environ.get(STORE_ENV_VAR)
    if env_value:
        return Path(env_value)
    if cfg is not None and cfg.store is not None:
        return cfg.store
    raise ConfigError(
        f"no store given: pass --store, set {STORE_ENV_VAR}, or add store to [experiment]"
    )


def cmd_run(args) -> int:
    cfg = load_experiment_config(args.config)
    store = ResultsStore(_resolve_store(args, cfg))
    base_seed = args.seed if args.seed is not None else cfg.seed
    if base_seed < 0:
        raise ConfigError("--seed must be >= 0")
    attack_grammar = load_grammar(cfg.attack_grammar)
    defense_grammar = load_grammar(cfg.defense_grammar)
    for repetition in range(cfg.repetitions):
        seed = base_seed + repetition
        environment = load_environment(cfg.environment, cfg.scenario)
        record = run_alternating(
            cfg.evolution.with_seed(seed),
            attack_grammar,
            defense_grammar,
            environment,
            run_id=make_run_id(cfg, seed),
        )
        manifest = {
            "format_version": FORMAT_VERSION,
            "run_id": record.run_id,
            "seed": seed,
            "environment": cfg.environment,
            "algorithm_label": cfg.algorithm_label,
            "config": record.config.to_dict(),
            "attack_grammar": {"path": str(cfg.attack_grammar), "sha256": sha256_file(cfg.attack_grammar)},
            "defense_grammar": {"path": str(cfg.defense_grammar), "sha256": sha256_file(cfg.defense_grammar)},
            "scenario": {"path": str(cfg.scenario), "sha256": sha256_file(cfg.scenario)},
            "created_at": datetime.now(timezone.utc).isoformat(),
        }
        dir_name = store.add_run(
            record, manifest, cfg.attack_grammar, cfg.defense_grammar, cfg.scenario
        )
        if not args.quiet:
            print(f"{dir_name}")
            for champion in (record.best_attacker, record.best_defender):
                sentence = " ".join(champion.sentence) if champion.sentence else "<invalid>"
                print(f"  {champion.role} best [{champion.fitness:.6g}] {sentence!r}")
    return 0


def cmd_establo(args) -> int:
    store = ResultsStore(_resolve_store(args))
    runs = store.load_all()
    environments = {run.manifest["environment"] for run in runs}
    if len(environments) != 1:
        raise ConfigError(f"store mixes environments {sorted(environments)}; establo needs one")
    environment_id = environments.pop()

    compendium = establo_mod.build_compendium(runs, args.filter, args.stride)
    if not compendium:
        raise EmptyStore("compendium is empty after filtering")
    entries_by_id = {entry.entry_id: entry for entry in compendium}

    contexts: list[tuple[str, Path]] = []
    if args.scenario:
        for scenario in args.scenario:
            scenario_path = Path(scenario)
            if not scenario_path.exists():
                raise ConfigError(f"--scenario: file not found: {scenario_path}")
            contexts.append((scenario_path.stem, scenario_path))
    else:
        hashes = {run.manifest["scenario"]["sha256"] for run in runs}
        if len(hashes) != 1:
            raise ConfigError(
                "runs use different scenarios; pass --scenario to pick evaluation contexts"
            )
        contexts.append(("same-run", runs[0].resolve_path(runs[0].manifest["scenario"]["path"])))

    rankings = []
    matrices = []
    for label, scenario_path in contexts:
        environment = load_environment(environment_id, scenario_path)
        matrix = establo_mod.cross_tournament(compendium, environment, args.seed, label)
        matrices.append(matrix)
        rankings.extend(establo_mod.rank(matrix))
    written = establo_mod.emit_report(rankings, matrices, args.out, entries_by_id)
    if not args.quiet:
        print((Path(args.out) / "summary.txt").read_text(encoding="utf-8"), end="")
        print(f"wrote {len(written)} report files to {args.out}")
    return 0


def cmd_inspect(args) -> int:
    store = ResultsStore(_resolve_store(args))
    run = store.load(args.run)
    manifest = run.manifest
    completed = max((step["generation"] for step in run.half_steps), default=0)
    print(f"run         {manifest['run_id']}  (dir {run.run_dir.name})")
    print(f"environment {manifest['environment']}")
    print(f"seed        {manifest['seed']}")
    print(f"algorithm   {manifest['algorithm_label']}")
    print(f"generations {completed} of {manifest['config']['generations']} completed")
    for role in ("attacker", "defender"):
        steps = [s for s in run.half_steps if s["phase"] == role]
        if not steps:
            continue
        best = max(steps, key=lambda s: (s["best_fitness"], -s["generation"]))
        sentence = " ".join(best["best_sentence"]) if best["best_sentence"] else "<invalid>"
        print(f"best {role}: g{best['generation']} fitness {best['best_fitness']:.6g} {sentence!r}")
    print("trajectory (generation phase best_fitness mean variance):")
    for step in run.half_steps:
        print(
            f"  {step['generation']:4d} {step['phase']:8s} "
            f"{step['best_fitness']:.6g} {step['mean_fitness']:.6g} {step['fitness_variance']:.6g}"
        )
    return 0


def cmd_validate_grammar(args) -> int:
    grammar = load_grammar(args.grammar)
    alternatives = sum(len(alts) for alts in grammar.productions.values())
    print(
        f"OK: start <{grammar.start}>, {len(grammar.nonterminals)} nonterminals, "
        f"{len(grammar.terminals)} terminals, {alternatives} alternatives"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coevarena",
        description="Coevolve grammar-defined attack and defense strategies in engagement simulators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="execute configured runs and persist them")
    run_parser.add_argument("--config", required=True, help="experiment config file")
    run_parser.add_argument("--seed", type=int, default=None, help="override the base seed")
    run_parser.add_argument("--store", default=None, help="results store root")
    run_parser.add_argument("--quiet", action="store_true")
    run_parser.set_defaults(func=cmd_run)

    establo_parser = sub.add_parser("establo", help="tournament and rank cached champions")
    establo_parser.add_argument("--store", default=None, help="results store root")
    establo_parser.add_argument("--filter", default="best-per-generation", choices=establo_mod.FILTERS)
    establo_parser.add_argument("--stride", type=int, default=5)
    establo_parser.add_argument(
        "--scenario", action="append", default=[], help="evaluation scenario (repeatable)"
    )
    establo_parser.add_argument("--seed", type=int, default=0, help="tournament seed")
    establo_parser.add_argument("--out", required=True, help="report output directory")
    establo_parser.add_argument("--quiet", action="store_true")
    establo_parser.set_defaults(func=cmd_establo)

    inspect_parser = sub.add_parser("inspect", help="summarize one stored run")
    inspect_parser.add_argument("run", help="run directory name or run id")
    inspect_parser.add_argument("--store", default=None, help="results store root")
    inspect_parser.set_defaults(func=cmd_inspect)

    validate_parser = sub.add_parser("validate-grammar", help="parse a grammar file and report")
    validate_parser.add_argument("grammar", help="path to a .bnf file")
    validate_parser.set_defaults(func=cmd_validate_grammar)
    return parser


_ERRORS = (
    ConfigError,
    GrammarError,
    ScenarioError,
    InterpretError,
    StructureMismatch,
    CorruptRecord,
    EmptyStore,
    UnknownRun,
    establo_mod.GrammarMismatch,
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
