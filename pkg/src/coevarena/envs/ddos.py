"""Discrete-time P2P mission simulator under node-disabling attacks.

Attacks disable servers for time windows; the defense picks a routing
protocol (shortest path, flooding, or a peer-to-peer ring overlay). Each tick
every active task emits one message attempt, which succeeds when the protocol
finds a route over the currently enabled nodes. The attacker scores the
fraction of tasks it disrupted; the defender scores the fraction completed.

The simple languages here are fully deterministic: engage never consumes the
random stream it is handed.
"""

from __future__ import annotations

import re
from collections import deque
from configparser import ConfigParser
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..engagement import EngagementOutcome, InterpretError, ScenarioError
from ..grammar import Strategy

ROUTINGS = ("shortest-path", "flooding", "p2p-ring")

_NODE_TOKEN = re.compile(r"^n(\d+)$")


@dataclass(frozen=True)
class Task:
    source: str
    destination: str
    start: int
    deadline: int
    required_deliveries: int


@dataclass(frozen=True)
class NetworkScenario:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    tasks: tuple[Task, ...]
    horizon: int
    message_cost: float
    node_cost: float
    attack_budget: int

    def __post_init__(self):
        if self.horizon < 1:
            raise ScenarioError("horizon must be >= 1")
        if self.attack_budget < 1:
            raise ScenarioError("attack budget must be >= 1")
        if len(set(self.nodes)) != len(self.nodes) or not self.nodes:
            raise ScenarioError("nodes must be non-empty and unique")
        known = set(self.nodes)
        for a, b in self.edges:
            if a not in known or b not in known or a == b:
                raise ScenarioError(f"bad edge {a}-{b}")
        if not self.tasks:
            raise ScenarioError("scenario needs at least one task")
        for task in self.tasks:
            if task.source not in known or task.destination not in known:
                raise ScenarioError(f"task references unknown node: {task}")
            if not 0 <= task.start <= task.deadline <= self.horizon:
                raise ScenarioError(f"task window out of range: {task}")
            if task.required_deliveries < 1:
                raise ScenarioError(f"task needs >= 1 delivery: {task}")
        if not self._connected():
            raise ScenarioError("graph must be connected at t=0")

    def _connected(self) -> bool:
        adjacency = adjacency_map(self.nodes, self.edges)
        seen = {self.nodes[0]}
        queue = deque(seen)
        while queue:
            for neighbor in adjacency[queue.popleft()]:
                if neighbor not in seen:
                    seen.add(neighbor)
                    queue.append(neighbor)
        return len(seen) == len(self.nodes)


@dataclass(frozen=True)
class DdosAction:
    node: str
    start: int
    duration: int


@dataclass(frozen=True)
class DdosAttack:
    actions: tuple[DdosAction, ...]

    def total_duration(self) -> int:
        return sum(action.duration for action in self.actions)


@dataclass(frozen=True)
class DdosDefense:
    routing: str
    ring_successors: int = 2

    def __post_init__(self):
        if self.routing not in ROUTINGS:
            raise ValueError(f"unknown routing protocol {self.routing!r}")
        if self.ring_successors < 1:
            raise ValueError("ring successor count must be >= 1")


def adjacency_map(nodes, edges) -> dict[str, list[str]]:
    adjacency: dict[str, list[str]] = {node: [] for node in nodes}
    for a, b in edges:
        adjacency[a].append(b)
        adjacency[b].append(a)
    return adjacency


def load_scenario(path: str | Path) -> NetworkScenario:
    parser = ConfigParser()
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise ScenarioError(f"cannot read scenario file {path}")
    try:
        nodes = tuple(parser.get("network", "nodes").split())
        edges = []
        for token in parser.get("network", "edges").split():
            a, dash, b = token.partition("-")
            if not dash:
                raise ScenarioError(f"bad edge token {token!r}")
            edges.append((a, b))
        tasks = []
        for line in parser.get("mission", "tasks").strip().splitlines():
            fields = line.split()
            if len(fields) != 5:
                raise ScenarioError(f"task line needs 'src dst start deadline deliveries': {line!r}")
            tasks.append(
                Task(
                    source=fields[0],
                    destination=fields[1],
                    start=int(fields[2]),
                    deadline=int(fields[3]),
                    required_deliveries=int(fields[4]),
                )
            )
        return NetworkScenario(
            nodes=nodes,
            edges=tuple(edges),
            tasks=tuple(tasks),
            horizon=parser.getint("mission", "horizon"),
            message_cost=parser.getfloat("costs", "message_cost"),
            node_cost=parser.getfloat("costs", "node_cost"),
            attack_budget=parser.getint("costs", "attack_budget"),
        )
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError(f"malformed scenario {path}: {exc}") from exc


def _clamp(value: int, low: int, high: int) -> int:
    return max(low, min(high, value))


def interpret_attack(strategy: Strategy, scenario: NetworkScenario) -> DdosAttack:
    """Turn an attack sentence into concrete disable actions.

    Out-of-range node and tick tokens are clamped into range. Durations are
    trimmed in sentence order so the total never exceeds the scenario budget.
    """
    tokens = strategy.sentence
    if tokens == ("noop",):
        return DdosAttack(actions=())
    actions: list[DdosAction] = []
    remaining = scenario.attack_budget
    i = 0
    while i < len(tokens):
        clause = tokens[i : i + 6]
        if len(clause) != 6 or clause[0] != "disable" or clause[2] != "at" or clause[4] != "for":
            raise InterpretError(f"not an attack clause: {' '.join(clause)!r}")
        node_match = _NODE_TOKEN.match(clause[1])
        if node_match is None:
            raise InterpretError(f"bad node token {clause[1]!r}")
        try:
            tick = int(clause[3])
            duration = int(clause[5])
        except ValueError as exc:
            raise InterpretError(f"bad numeric token in {' '.join(clause)!r}") from exc
        node = scenario.nodes[_clamp(int(node_match.group(1)), 0, len(scenario.nodes) - 1)]
        tick = _clamp(tick, 0, scenario.horizon - 1)
        duration = min(max(duration, 1), remaining)
        if duration > 0:
            actions.append(DdosAction(node=node, start=tick, duration=duration))
            remaining -= duration
        i += 6
    return DdosAttack(actions=tuple(actions))


def interpret_defense(strategy: Strategy, scenario: NetworkScenario) -> DdosDefense:
    tokens = strategy.sentence
    if len(tokens) < 2 or tokens[0] != "route":
        raise InterpretError(f"not a defense sentence: {strategy.text!r}")
    kind = tokens[1]
    if kind == "shortest" and len(tokens) == 2:
        return DdosDefense(routing="shortest-path")
    if kind == "flooding" and len(tokens) == 2:
        return DdosDefense(routing="flooding")
    if kind == "ring" and len(tokens) == 3:
        try:
            successors = int(tokens[2])
        except ValueError as exc:
            raise InterpretError(f"bad successor count {tokens[2]!r}") from exc
        successors = _clamp(successors, 1, max(len(scenario.nodes) - 1, 1))
        return DdosDefense(routing="p2p-ring", ring_successors=successors)
    raise InterpretError(f"not a defense sentence: {strategy.text!r}")


def bfs_route(adjacency, enabled, source, destination) -> int | None:
    """Hop count of a shortest path over enabled nodes, or None."""
    if source not in enabled or destination not in enabled:
        return None
    if source == destination:
        return 0
    distance = {source: 0}
    queue = deque([source])
    while queue:
        node = queue.popleft()
        for neighbor in adjacency[node]:
            if neighbor in enabled and neighbor not in distance:
                distance[neighbor] = distance[node] + 1
                if neighbor == destination:
                    return distance[neighbor]
                queue.append(neighbor)
    return None


def flood(adjacency, enabled, source, destination) -> tuple[bool, int]:
    """Flood the source's enabled component.

    Returns (delivered, enabled edges inside the flooded component). The
    flood cost is paid whether or not the destination was reachable.
    """
    if source not in enabled:
        return False, 0
    component = {source}
    queue = deque([source])
    while queue:
        node = queue.popleft()
        for neighbor in adjacency[node]:
            if neighbor in enabled and neighbor not in component:
                component.add(neighbor)
                queue.append(neighbor)
    edges = 0
    for node in component:
        edges += sum(1 for neighbor in adjacency[node] if neighbor in component)
    edges //= 2
    return destination in component, edges


def ring_route(ring_order, enabled, source, destination, successors) -> int | None:
    """Hop count over the sorted-id ring, or None.

    Every hop goes to one of the node's `successors` clockwise ring neighbors
    and must strictly reduce clockwise distance to the destination (no
    passing). Hops are explored farthest-first with backtracking, so delivery
    is exactly reachability in the progress graph and disabling more nodes
    can never help the mission.
    """
    if source not in enabled or destination not in enabled:
        return None
    if source == destination:
        return 0
    size = len(ring_order)
    position = {node: i for i, node in enumerate(ring_order)}
    target = position[destination]
    memo: dict[str, int | None] = {}

    def search(node: str) -> int | None:
        if node == destination:
            return 0
        if node in memo:
            return memo[node]
        remaining = (target - position[node]) % size
        for jump in range(min(successors, remaining), 0, -1):
            candidate = ring_order[(position[node] + jump) % size]
            if candidate in enabled:
                tail = search(candidate)
                if tail is not None:
                    memo[node] = tail + 1
                    return tail + 1
        memo[node] = None
        return None

    return search(source)


def engage(
    attack: DdosAttack,
    defense: DdosDefense,
    scenario: NetworkScenario,
    rng: np.random.SeedSequence | None = None,
) -> EngagementOutcome:
    """Simulate the mission under attack. Pure and deterministic; rng unused."""
    horizon = scenario.horizon
    disabled_at: list[set[str]] = [set() for _ in range(horizon)]
    for action in attack.actions:
        for t in range(action.start, min(action.start + action.duration, horizon)):
            disabled_at[t].add(action.node)

    adjacency = adjacency_map(scenario.nodes, scenario.edges)
    ring_order = sorted(scenario.nodes)
    all_nodes = set(scenario.nodes)

    deliveries = [0] * len(scenario.tasks)
    completed = [False] * len(scenario.tasks)
    attempts = 0
    total_deliveries = 0
    message_cost_total = 0.0

    for t in range(horizon):
        enabled = all_nodes - disabled_at[t]
        for index, task in enumerate(scenario.tasks):
            if completed[index] or t < task.start or t > task.deadline:
                continue
            attempts += 1
            if defense.routing == "shortest-path":
                hops = bfs_route(adjacency, enabled, task.source, task.destination)
                success = hops is not None
                cost = hops * scenario.message_cost if success else 0.0
            elif defense.routing == "flooding":
                success, flooded = flood(adjacency, enabled, task.source, task.destination)
                cost = flooded * scenario.message_cost
            else:
                hops = ring_route(
                    ring_order, enabled, task.source, task.destination, defense.ring_successors
                )
                success = hops is not None
                cost = hops * scenario.message_cost if success else 0.0
            message_cost_total += cost
            if success:
                deliveries[index] += 1
                total_deliveries += 1
                if deliveries[index] >= task.required_deliveries:
                    completed[index] = True

    disrupted = sum(1 for done in completed if not done)
    attacker_score = disrupted / len(scenario.tasks)
    flood_upper = (
        scenario.message_cost
        * len(scenario.edges)
        * sum(task.deadline - task.start + 1 for task in scenario.tasks)
    )
    return EngagementOutcome(
        attacker_id=-1,
        defender_id=-1,
        generation=-1,
        attacker_score=attacker_score,
        defender_score=1.0 - attacker_score,
        costs={
            "attacker_cost": attack.total_duration() / scenario.attack_budget,
            "defender_cost": message_cost_total / flood_upper if flood_upper > 0 else 0.0,
        },
        telemetry={
            "tasks_total": float(len(scenario.tasks)),
            "tasks_completed": float(len(scenario.tasks) - disrupted),
            "attempts": float(attempts),
            "deliveries": float(total_deliveries),
            "message_cost": message_cost_total,
            "node_cost": len(scenario.nodes) * horizon * scenario.node_cost,
        },
    )


class DdosEnvironment:
    """Engine-facing adapter: interprets sentences, then runs the simulator."""

    environment_id = "ddos"
    thread_safe = True

    def __init__(self, scenario: NetworkScenario):
        self.scenario = scenario
        self._attack_cache: dict[tuple[str, ...], DdosAttack] = {}
        self._defense_cache: dict[tuple[str, ...], DdosDefense] = {}

    @classmethod
    def from_file(cls, path: str | Path) -> "DdosEnvironment":
        return cls(load_scenario(path))

    def engage(self, attack: Strategy, defense: Strategy, rng: np.random.SeedSequence) -> EngagementOutcome:
        if attack.sentence not in self._attack_cache:
            self._attack_cache[attack.sentence] = interpret_attack(attack, self.scenario)
        if defense.sentence not in self._defense_cache:
            self._defense_cache[defense.sentence] = interpret_defense(defense, self.scenario)
        return engage(
            self._attack_cache[attack.sentence],
            self._defense_cache[defense.sentence],
            self.scenario,
            rng,
        )
