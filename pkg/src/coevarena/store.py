"""Directory-per-run results store.

Layout::

    <root>/index.jsonl            one line per run directory
    <root>/<dir>/manifest.json    config echo, seed, file hashes, timestamp
    <root>/<dir>/engagements.jsonl  header line + one record per engagement
    <root>/<dir>/halfsteps.jsonl  per-half-step champion and fitness stats
    <root>/<dir>/archive.json     archived champions
    <root>/<dir>/attack.bnf, defense.bnf, scenario.cfg   verbatim input copies

Runs only ever append. The engagement log and halfsteps files are free of
timestamps, so identical config and seed reproduce them byte for byte; the
manifest carries the only timestamp.
"""

from __future__ import annotations

import hashlib
import json
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .engine.loop import RunRecord

FORMAT_VERSION = 1

STORED_ATTACK_GRAMMAR = "attack.bnf"
STORED_DEFENSE_GRAMMAR = "defense.bnf"
STORED_SCENARIO = "scenario.cfg"


class CorruptRecord(Exception):
    """A stored run is unreadable or fails its integrity checks."""


class EmptyStore(Exception):
    """The store holds no runs."""


class UnknownRun(Exception):
    """No stored run matches the given reference."""


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def verify_file_hash(path: str | Path, expected: str):
    actual = sha256_file(path)
    if actual != expected:
        raise CorruptRecord(f"{path}: sha256 {actual} does not match recorded {expected}")


def _dump(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


@dataclass
class StoredRun:
    run_dir: Path
    manifest: dict
    half_steps: list[dict]

    def resolve_path(self, recorded: str) -> Path:
        """Prefer the verbatim copy inside the run directory."""
        for entry_key, stored in (
            ("attack_grammar", STORED_ATTACK_GRAMMAR),
            ("defense_grammar", STORED_DEFENSE_GRAMMAR),
            ("scenario", STORED_SCENARIO),
        ):
            entry = self.manifest.get(entry_key)
            if entry and entry.get("path") == recorded:
                candidate = self.run_dir / stored
                if candidate.exists():
                    return candidate
        return Path(recorded)

    def engagement_records(self) -> Iterator[dict]:
        path = self.run_dir / "engagements.jsonl"
        with path.open(encoding="utf-8") as handle:
            for line in handle:
                record = json.loads(line)
                if record.get("record") == "engagement":
                    yield record

    def archive_entries(self) -> list[dict]:
        return json.loads((self.run_dir / "archive.json").read_text(encoding="utf-8"))["entries"]


class ResultsStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    @property
    def index_path(self) -> Path:
        return self.root / "index.jsonl"

    def entries(self) -> list[dict]:
        if not self.index_path.exists():
            return []
        lines = self.index_path.read_text(encoding="utf-8").splitlines()
        return [json.loads(line) for line in lines if line.strip()]

    def _unique_dir_name(self, run_id: str) -> str:
        name = run_id
        counter = 2
        while (self.root / name).exists():
            name = f"{run_id}__{counter}"
            counter += 1
        return name

    def add_run(
        self,
        record: RunRecord,
        manifest: dict,
        attack_grammar_path: str | Path,
        defense_grammar_path: str | Path,
        scenario_path: str | Path,
    ) -> str:
        self.root.mkdir(parents=True, exist_ok=True)
        dir_name = self._unique_dir_name(record.run_id)
        run_dir = self.root / dir_name
        run_dir.mkdir()

        shutil.copyfile(attack_grammar_path, run_dir / STORED_ATTACK_GRAMMAR)
        shutil.copyfile(defense_grammar_path, run_dir / STORED_DEFENSE_GRAMMAR)
        shutil.copyfile(scenario_path, run_dir / STORED_SCENARIO)

        (run_dir / "manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )

        with (run_dir / "engagements.jsonl").open("w", encoding="utf-8") as handle:
            handle.write(
                _dump({"record": "header", "format_version": FORMAT_VERSION, "run": record.run_id})
                + "\n"
            )
            for engagement in record.engagements:
                handle.write(_dump(engagement) + "\n")

        with (run_dir / "halfsteps.jsonl").open("w", encoding="utf-8") as handle:
            handle.write(
                _dump({"record": "header", "format_version": FORMAT_VERSION, "run": record.run_id})
                + "\n"
            )
            for step in record.half_steps:
                handle.write(
                    _dump(
                        {
                            "record": "halfstep",
                            "generation": step.generation,
                            "phase": step.phase,
                            "best_id": step.best_id,
                            "best_fitness": step.best_fitness,
                            "mean_fitness": step.mean_fitness,
                            "fitness_variance": step.fitness_variance,
                            "incumbent_fitness": step.incumbent_fitness,
                            "best_genotype": list(step.best_genotype.codons),
                            "best_sentence": list(step.best_sentence)
                            if step.best_sentence is not None
                            else None,
                            "best_cost": step.best_cost,
                        }
                    )
                    + "\n"
                )

        (run_dir / "archive.json").write_text(
            json.dumps(
                {
                    "format_version": FORMAT_VERSION,
                    "entries": [
                        {
                            "role": entry.role,
                            "generation": entry.generation,
                            "score": entry.score,
                            "cost": entry.cost,
                            "genotype": list(entry.genotype.codons),
                            "sentence": list(entry.sentence) if entry.sentence else None,
                        }
                        for entry in record.archive_entries
                    ],
                },
                sort_keys=True,
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )

        with self.index_path.open("a", encoding="utf-8") as handle:
            handle.write(
                _dump(
                    {
                        "dir": dir_name,
                        "run_id": record.run_id,
                        "seed": record.master_seed,
                        "environment": record.environment_id,
                    }
                )
                + "\n"
            )
        return dir_name

    def load(self, run_ref: str) -> StoredRun:
        entries = self.entries()
        match = next((e for e in entries if e["dir"] == run_ref), None)
        if match is None:
            match = next((e for e in entries if e["run_id"] == run_ref), None)
        if match is None:
            raise UnknownRun(f"no run {run_ref!r} in store {self.root}")
        return self._load_dir(match["dir"])

    def load_all(self) -> list[StoredRun]:
        entries = self.entries()
        if not entries:
            raise EmptyStore(f"store {self.root} holds no runs")
        return [self._load_dir(entry["dir"]) for entry in entries]

    def _load_dir(self, dir_name: str) -> StoredRun:
        run_dir = self.root / dir_name
        try:
            manifest = json.loads((run_dir / "manifest.json").read_text(encoding="utf-8"))
            half_steps = []
            for line in (run_dir / "halfsteps.jsonl").read_text(encoding="utf-8").splitlines():
                record = json.loads(line)
                if record.get("record") == "halfstep":
                    half_steps.append(record)
        except (OSError, json.JSONDecodeError) as exc:
            raise CorruptRecord(f"run directory {run_dir} is unreadable: {exc}") from exc
        if manifest.get("format_version") != FORMAT_VERSION:
            raise CorruptRecord(
                f"{run_dir}: format_version {manifest.get('format_version')!r} "
                f"is not {FORMAT_VERSION}"
            )
        return StoredRun(run_dir=run_dir, manifest=manifest, half_steps=half_steps)
