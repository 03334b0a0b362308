"""Cross-run decision support: filter champions into a compendium, tournament
them all against all, rank under multiple criteria, detect pure Nash cells,
and emit report files.

Per-generation champions are not comparable across runs (each was scored only
against its own opposing population), so this stage replays every compendium
attack against every compendium defense under one fixed scenario and seed
policy, then ranks the rows and columns of the resulting payoff matrix.
"""

from __future__ import annotations

import csv
import json
import re
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .engagement import EngagementEnvironment
from .engine.config import EvolutionConfig
from .engine.rng import seed_sequence
from .grammar import Genotype, Grammar, MappingFailure, Strategy, load_grammar, map_genotype
from .store import StoredRun, verify_file_hash

FILTERS = ("best-per-generation", "best-per-run", "pareto-per-run")
CRITERIA = ("meu", "best-worst", "combined")


class GrammarMismatch(Exception):
    """A recorded genotype no longer re-derives its recorded sentence."""


@dataclass(frozen=True)
class CompendiumEntry:
    entry_id: str
    role: str
    run_id: str
    algorithm: str
    generation: int
    genotype: Genotype
    sentence: tuple[str, ...]
    strategy: Strategy
    fitness: float
    cost: float


@dataclass(frozen=True)
class PayoffMatrix:
    context: str
    attacker_ids: tuple[str, ...]
    defender_ids: tuple[str, ...]
    cells: tuple[tuple[float, ...], ...]  # rows = attackers, columns = defenders

    def row(self, i: int) -> tuple[float, ...]:
        return self.cells[i]

    def column(self, j: int) -> tuple[float, ...]:
        return tuple(row[j] for row in self.cells)


@dataclass(frozen=True)
class RankingRow:
    entry_id: str
    role: str
    context: str
    meu_score: float
    best_worst_score: float
    combined_score: float
    meu_rank: int
    best_worst_rank: int
    combined_rank: int


def _champion_steps(run: StoredRun, role: str) -> list[dict]:
    return [step for step in run.half_steps if step["phase"] == role]


def _select_champions(steps: list[dict], compendium_filter: str, stride: int) -> list[dict]:
    usable = [step for step in steps if step["best_sentence"] is not None]
    if compendium_filter == "best-per-run":
        if not usable:
            return []
        return [max(usable, key=lambda s: (s["best_fitness"], -s["generation"]))]
    strided = [step for step in usable if (step["generation"] - 1) % stride == 0]
    if compendium_filter == "best-per-generation":
        return strided
    if compendium_filter == "pareto-per-run":
        from .engine.fitness import pareto_front

        points = [
            (step["best_fitness"], step["best_cost"] if step["best_cost"] is not None else 0.0)
            for step in strided
        ]
        return [strided[i] for i in pareto_front(points, ("max", "min"))]
    raise ValueError(f"unknown compendium filter {compendium_filter!r}")


def build_compendium(
    runs: Sequence[StoredRun],
    compendium_filter: str = "best-per-generation",
    stride: int = 5,
) -> list[CompendiumEntry]:
    """Filter cached run champions into compendium entries.

    Every entry's genotype is re-derived under the run's grammar and mapping
    settings and must reproduce the recorded sentence (GrammarMismatch
    otherwise). Identical sentences deduplicate to the earliest occurrence.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    entries: list[CompendiumEntry] = []
    seen: dict[tuple[str, tuple[str, ...]], bool] = {}
    for run in runs:
        manifest = run.manifest
        config = EvolutionConfig.from_dict(manifest["config"])
        grammars: dict[str, Grammar] = {}
        for role, key in (("attacker", "attack_grammar"), ("defender", "defense_grammar")):
            path = run.resolve_path(manifest[key]["path"])
            verify_file_hash(path, manifest[key]["sha256"])
            grammars[role] = load_grammar(path)
        for role in ("attacker", "defender"):
            for step in _select_champions(_champion_steps(run, role), compendium_filter, stride):
                genotype = Genotype(tuple(step["best_genotype"]))
                recorded = tuple(step["best_sentence"])
                try:
                    strategy = map_genotype(genotype, grammars[role], config.mapping)
                except MappingFailure as exc:
                    raise GrammarMismatch(
                        f"{manifest['run_id']} {role} g{step['generation']}: "
                        f"recorded genotype no longer maps"
                    ) from exc
                if strategy.sentence != recorded:
                    raise GrammarMismatch(
                        f"{manifest['run_id']} {role} g{step['generation']}: genotype derives "
                        f"{strategy.text!r}, record says {' '.join(recorded)!r}"
                    )
                key = (role, recorded)
                if key in seen:
                    continue
                seen[key] = True
                entries.append(
                    CompendiumEntry(
                        entry_id=f"{manifest['run_id']}:{role}:g{step['generation']:03d}",
                        role=role,
                        run_id=manifest["run_id"],
                        algorithm=manifest.get("algorithm_label", "alternating"),
                        generation=step["generation"],
                        genotype=genotype,
                        sentence=recorded,
                        strategy=strategy,
                        fitness=float(step["best_fitness"]),
                        cost=float(step["best_cost"]) if step["best_cost"] is not None else 0.0,
                    )
                )
    return entries


def cross_tournament(
    entries: Iterable[CompendiumEntry],
    environment: EngagementEnvironment,
    seed: int,
    context: str,
) -> PayoffMatrix:
    """All compendium attacks against all compendium defenses, one scenario.

    Cell (i, j) engages with the stream keyed (seed, "cell", i, j), so cells
    are reproducible individually and in parallel.
    """
    attackers = sorted((e for e in entries if e.role == "attacker"), key=lambda e: e.entry_id)
    defenders = sorted((e for e in entries if e.role == "defender"), key=lambda e: e.entry_id)
    if not attackers or not defenders:
        raise ValueError("cross_tournament needs at least one attacker and one defender entry")
    cells = tuple(
        tuple(
            environment.engage(
                attacker.strategy, defender.strategy, seed_sequence(seed, "cell", i, j)
            ).attacker_score
            for j, defender in enumerate(defenders)
        )
        for i, attacker in enumerate(attackers)
    )
    return PayoffMatrix(
        context=context,
        attacker_ids=tuple(e.entry_id for e in attackers),
        defender_ids=tuple(e.entry_id for e in defenders),
        cells=cells,
    )


def _rank_ids(ids: Sequence[str], scores: Mapping[str, float], higher_is_better: bool) -> dict[str, int]:
    sign = -1.0 if higher_is_better else 1.0
    ordered = sorted(ids, key=lambda i: (sign * scores[i], i))
    return {entry_id: position + 1 for position, entry_id in enumerate(ordered)}


def _rank_side(
    ids: Sequence[str],
    vectors: Mapping[str, Sequence[float]],
    direction: str,
    role: str,
    context: str,
) -> list[RankingRow]:
    maximizing = direction == "max"
    meu = {i: statistics.fmean(vectors[i]) for i in ids}
    best_worst = {i: (min(vectors[i]) if maximizing else max(vectors[i])) for i in ids}
    meu_rank = _rank_ids(ids, meu, maximizing)
    bw_rank = _rank_ids(ids, best_worst, maximizing)
    combined = {i: (meu_rank[i] + bw_rank[i]) / (2 * len(ids)) for i in ids}
    combined_rank = _rank_ids(ids, combined, higher_is_better=False)
    return [
        RankingRow(
            entry_id=i,
            role=role,
            context=context,
            meu_score=meu[i],
            best_worst_score=best_worst[i],
            combined_score=combined[i],
            meu_rank=meu_rank[i],
            best_worst_rank=bw_rank[i],
            combined_rank=combined_rank[i],
        )
        for i in sorted(ids)
    ]


def rank(
    matrix: PayoffMatrix,
    attacker_direction: str = "max",
    defender_direction: str = "min",
) -> list[RankingRow]:
    """Rank both sides under MEU, best-worst, and their combination.

    Cells hold attacker scores, so by default attackers rank by maximizing
    and defenders by minimizing them. best-worst is each entry's worst case
    over its opponents; combined is the mean of the two normalized ranks
    (lower is better). Ties always break by entry id.
    """
    if not matrix.attacker_ids or not matrix.defender_ids:
        raise ValueError("cannot rank an empty payoff matrix")
    attacker_vectors = {
        entry_id: matrix.row(i) for i, entry_id in enumerate(matrix.attacker_ids)
    }
    defender_vectors = {
        entry_id: matrix.column(j) for j, entry_id in enumerate(matrix.defender_ids)
    }
    rows = _rank_side(matrix.attacker_ids, attacker_vectors, attacker_direction, "attacker", matrix.context)
    rows += _rank_side(matrix.defender_ids, defender_vectors, defender_direction, "defender", matrix.context)
    return rows


def pure_nash_pairs(
    matrix: PayoffMatrix,
    attacker_direction: str = "max",
    defender_direction: str = "min",
) -> list[tuple[str, str]]:
    """All cells where both sides are best responses to each other.

    Ties count as best responses: a cell qualifies when it attains the
    attacker's optimum of its column and the defender's optimum of its row.
    """
    if not matrix.attacker_ids or not matrix.defender_ids:
        raise ValueError("cannot scan an empty payoff matrix")
    att_best = [
        (max if attacker_direction == "max" else min)(matrix.column(j))
        for j in range(len(matrix.defender_ids))
    ]
    def_best = [
        (max if defender_direction == "max" else min)(matrix.row(i))
        for i in range(len(matrix.attacker_ids))
    ]
    pairs = []
    for i, attacker_id in enumerate(matrix.attacker_ids):
        for j, defender_id in enumerate(matrix.defender_ids):
            value = matrix.cells[i][j]
            if value == att_best[j] and value == def_best[i]:
                pairs.append((attacker_id, defender_id))
    return pairs


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "-", text).strip("-").lower() or "context"


def emit_report(
    rankings: Sequence[RankingRow],
    matrices: Sequence[PayoffMatrix],
    out_dir: str | Path,
    entries: Mapping[str, CompendiumEntry] | None = None,
) -> list[Path]:
    """Write ranking CSV, payoff CSVs, plot data, and a text summary.

    Re-emission over identical inputs is byte-identical: no timestamps, all
    orderings fixed.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = entries or {}
    written: list[Path] = []

    def algorithm_of(entry_id: str) -> str:
        entry = entries.get(entry_id)
        return entry.algorithm if entry is not None else "unknown"

    def sentence_of(entry_id: str) -> str:
        entry = entries.get(entry_id)
        return " ".join(entry.sentence) if entry is not None else ""

    ranking_path = out / "rankings.csv"
    with ranking_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            [
                "context", "role", "entry_id", "algorithm",
                "meu_score", "meu_rank",
                "best_worst_score", "best_worst_rank",
                "combined_score", "combined_rank",
            ]
        )
        for row in sorted(rankings, key=lambda r: (r.context, r.role, r.combined_rank)):
            writer.writerow(
                [
                    row.context, row.role, row.entry_id, algorithm_of(row.entry_id),
                    repr(row.meu_score), row.meu_rank,
                    repr(row.best_worst_score), row.best_worst_rank,
                    repr(row.combined_score), row.combined_rank,
                ]
            )
    written.append(ranking_path)

    for matrix in matrices:
        matrix_path = out / f"payoff_{_slug(matrix.context)}.csv"
        with matrix_path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["attacker\\defender", *matrix.defender_ids])
            for i, attacker_id in enumerate(matrix.attacker_ids):
                writer.writerow([attacker_id, *(repr(v) for v in matrix.cells[i])])
        written.append(matrix_path)

    # One series per (context, role, source algorithm): entries sorted by
    # combined rank, y = combined score. Feed this to external plotting.
    curves_path = out / "rank_curves.jsonl"
    series_keys = sorted(
        {(r.context, r.role, algorithm_of(r.entry_id)) for r in rankings}
    )
    with curves_path.open("w", encoding="utf-8") as handle:
        for context, role, algorithm in series_keys:
            members = sorted(
                (
                    r
                    for r in rankings
                    if r.context == context and r.role == role and algorithm_of(r.entry_id) == algorithm
                ),
                key=lambda r: r.combined_rank,
            )
            handle.write(
                json.dumps(
                    {
                        "context": context,
                        "role": role,
                        "algorithm": algorithm,
                        "entry_ids": [r.entry_id for r in members],
                        "combined_scores": [r.combined_score for r in members],
                    },
                    sort_keys=True,
                    separators=(",", ":"),
                )
                + "\n"
            )
    written.append(curves_path)

    summary_path = out / "summary.txt"
    lines = []
    for context in sorted({r.context for r in rankings}):
        for role in ("attacker", "defender"):
            group = [r for r in rankings if r.context == context and r.role == role]
            if not group:
                continue
            by_meu = min(group, key=lambda r: r.meu_rank)
            by_bw = min(group, key=lambda r: r.best_worst_rank)
            by_combined = min(group, key=lambda r: r.combined_rank)
            lines.append(f"[{context}] {role}")
            lines.append(f"  top by meu:        {by_meu.entry_id}  {sentence_of(by_meu.entry_id)}")
            lines.append(f"  top by best-worst: {by_bw.entry_id}  {sentence_of(by_bw.entry_id)}")
            lines.append(f"  top by combined:   {by_combined.entry_id}  {sentence_of(by_combined.entry_id)}")
    summary_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(summary_path)
    return written
