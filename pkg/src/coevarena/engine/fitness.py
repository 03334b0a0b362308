"""Fitness assignment from engagement outcomes, plus Pareto utilities."""

from __future__ import annotations

import statistics
from collections import defaultdict
from typing import Iterable, Sequence

from ..engagement import EngagementOutcome


class MissingOutcomes(Exception):
    """An individual that should have engaged never appears in the outcomes."""

    def __init__(self, ids):
        ids = sorted(ids)
        super().__init__(f"no outcomes recorded for ids {ids}")
        self.ids = ids


class DimensionMismatch(Exception):
    """Outcome vectors disagree on dimensionality."""


_AGGREGATORS = {
    "mean": statistics.fmean,
    "max": max,
    "min": min,
    "median": statistics.median,
}


def aggregate(values: Sequence[float], aggregation: str) -> float:
    return float(_AGGREGATORS[aggregation](values))


def assign_fitness(
    outcomes: Iterable[EngagementOutcome],
    aggregation: str,
    role: str,
    *,
    expected_ids: Iterable[int] | None = None,
    secondary_weight: float = 0.0,
) -> dict[int, float]:
    """Aggregate each individual's engagement scores into one fitness value.

    The score of an outcome is the role's own score minus secondary_weight
    times the role's own cost. With expected_ids given, raises MissingOutcomes
    for any listed individual that never engaged.
    """
    if aggregation not in _AGGREGATORS:
        raise ValueError(f"unknown aggregation {aggregation!r}")
    per_id: dict[int, list[float]] = defaultdict(list)
    for outcome in outcomes:
        own_id = outcome.attacker_id if role == "attacker" else outcome.defender_id
        value = outcome.score_for(role) - secondary_weight * outcome.cost_for(role)
        per_id[own_id].append(value)
    if expected_ids is not None:
        missing = set(expected_ids) - per_id.keys()
        if missing:
            raise MissingOutcomes(missing)
    return {own_id: aggregate(values, aggregation) for own_id, values in per_id.items()}


def _adjusted(point: Sequence[float], directions: Sequence[str]) -> tuple[float, ...]:
    return tuple(v if d == "max" else -v for v, d in zip(point, directions))


def dominates(p: Sequence[float], q: Sequence[float], directions: Sequence[str]) -> bool:
    """True when p is at least as good as q everywhere and better somewhere."""
    ap, aq = _adjusted(p, directions), _adjusted(q, directions)
    return all(x >= y for x, y in zip(ap, aq)) and any(x > y for x, y in zip(ap, aq))


def pareto_front(points: Sequence[Sequence[float]], directions: Sequence[str]) -> list[int]:
    """Indices of the nondominated points, ascending. Duplicates all survive."""
    for direction in directions:
        if direction not in ("max", "min"):
            raise ValueError(f"direction must be 'max' or 'min', got {direction!r}")
    for point in points:
        if len(point) != len(directions):
            raise DimensionMismatch(
                f"point of dimension {len(point)} does not match {len(directions)} directions"
            )
    front = []
    for i, p in enumerate(points):
        if not any(dominates(q, p, directions) for j, q in enumerate(points) if j != i):
            front.append(i)
    return front
