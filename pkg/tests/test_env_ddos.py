import itertools

import numpy as np
import pytest

from coevarena.engagement import InterpretError, ScenarioError
from coevarena.envs.ddos import (
    DdosAction,
    DdosAttack,
    DdosDefense,
    DdosEnvironment,
    NetworkScenario,
    Task,
    adjacency_map,
    bfs_route,
    engage,
    flood,
    interpret_attack,
    interpret_defense,
    load_scenario,
    ring_route,
)
from coevarena.grammar import Genotype, Strategy

from conftest import path_scenario
from oracles import components_by_union_find


def strategy(text: str) -> Strategy:
    return Strategy(tuple(text.split()), Genotype((0,)), 0, 0)


SCENARIO = path_scenario()
ALL_DEFENSES = (
    DdosDefense("shortest-path"),
    DdosDefense("flooding"),
    DdosDefense("p2p-ring", ring_successors=1),
    DdosDefense("p2p-ring", ring_successors=2),
)


class TestInterpretAttack:
    def test_single_clause(self):
        attack = interpret_attack(strategy("disable n3 at 0 for 5"), SCENARIO)
        assert attack.actions == (DdosAction("n3", 0, 5),)

    def test_noop_is_empty(self):
        assert interpret_attack(strategy("noop"), SCENARIO).actions == ()

    def test_tick_beyond_horizon_clamps(self):
        attack = interpret_attack(strategy("disable n1 at 99 for 2"), SCENARIO)
        assert attack.actions[0].start == SCENARIO.horizon - 1

    def test_node_index_clamps(self):
        attack = interpret_attack(strategy("disable n97 at 0 for 2"), SCENARIO)
        assert attack.actions[0].node == "n4"

    def test_budget_trims_in_sentence_order(self):
        scenario = path_scenario(budget=10)
        attack = interpret_attack(
            strategy("disable n0 at 0 for 6 disable n1 at 0 for 6 disable n2 at 0 for 6"),
            scenario,
        )
        assert [a.duration for a in attack.actions] == [6, 4]
        assert attack.total_duration() == 10

    def test_garbage_raises(self):
        with pytest.raises(InterpretError):
            interpret_attack(strategy("route shortest"), SCENARIO)
        with pytest.raises(InterpretError):
            interpret_attack(strategy("disable n1 at x for 2"), SCENARIO)


class TestInterpretDefense:
    def test_protocols(self):
        assert interpret_defense(strategy("route shortest"), SCENARIO).routing == "shortest-path"
        assert interpret_defense(strategy("route flooding"), SCENARIO).routing == "flooding"
        ring = interpret_defense(strategy("route ring 3"), SCENARIO)
        assert ring.routing == "p2p-ring"
        assert ring.ring_successors == 3

    def test_successor_count_clamps(self):
        assert interpret_defense(strategy("route ring 99"), SCENARIO).ring_successors == 4

    def test_garbage_raises(self):
        with pytest.raises(InterpretError):
            interpret_defense(strategy("disable n1 at 0 for 2"), SCENARIO)
        with pytest.raises(InterpretError):
            interpret_defense(strategy("route ring"), SCENARIO)


class TestRouting:
    ADJ = adjacency_map(SCENARIO.nodes, SCENARIO.edges)
    ALL = set(SCENARIO.nodes)

    def test_bfs_route_hops(self):
        assert bfs_route(self.ADJ, self.ALL, "n0", "n4") == 4
        assert bfs_route(self.ADJ, self.ALL, "n0", "n0") == 0

    def test_bfs_route_blocked(self):
        assert bfs_route(self.ADJ, self.ALL - {"n2"}, "n0", "n4") is None
        assert bfs_route(self.ADJ, self.ALL - {"n0"}, "n0", "n4") is None

    def test_flood_cost_counts_component_edges(self):
        delivered, edges = flood(self.ADJ, self.ALL, "n0", "n4")
        assert delivered and edges == 4
        delivered, edges = flood(self.ADJ, self.ALL - {"n2"}, "n0", "n4")
        assert not delivered and edges == 1  # n0-n1 only

    def test_ring_route_hop_counts(self):
        order = sorted(self.ALL)
        assert ring_route(order, self.ALL, "n0", "n3", 1) == 3
        assert ring_route(order, self.ALL, "n0", "n3", 2) == 2
        assert ring_route(order, self.ALL, "n0", "n3", 4) == 1

    def test_ring_route_wraps_clockwise(self):
        order = sorted(self.ALL)
        # n3 -> n4 -> n0: clockwise over the wrap point
        assert ring_route(order, self.ALL, "n3", "n0", 1) == 2

    def test_ring_route_skips_disabled_with_farther_successor(self):
        order = sorted(self.ALL)
        assert ring_route(order, self.ALL - {"n1"}, "n0", "n3", 1) is None
        assert ring_route(order, self.ALL - {"n1"}, "n0", "n3", 2) == 2  # n0 -> n2 -> n3

    def test_ring_route_never_passes_destination(self):
        order = sorted(self.ALL)
        # with k=4 a single hop lands exactly on the target, never beyond
        assert ring_route(order, self.ALL, "n0", "n1", 4) == 1


class TestEngage:
    def test_no_attack_completes_everything(self):
        for defense in ALL_DEFENSES:
            outcome = engage(DdosAttack(()), defense, SCENARIO)
            assert outcome.attacker_score == 0.0
            assert outcome.defender_score == 1.0

    def test_total_denial_scores_one(self):
        actions = tuple(DdosAction(n, 0, SCENARIO.horizon) for n in SCENARIO.nodes)
        scenario = path_scenario(budget=1000)
        for defense in ALL_DEFENSES:
            outcome = engage(DdosAttack(actions), defense, scenario)
            assert outcome.attacker_score == 1.0

    def test_path_split_under_flooding_disrupts_long_task(self):
        # disabling n2 splits {n0,n1} from {n3,n4}: the n0->n4 task dies,
        # the n0->n1 task survives -> half the tasks disrupted.
        attack = DdosAttack((DdosAction("n2", 0, SCENARIO.horizon),))
        outcome = engage(attack, DdosDefense("flooding"), SCENARIO)
        assert outcome.attacker_score == 0.5
        components = components_by_union_find(
            SCENARIO.nodes, SCENARIO.edges, set(SCENARIO.nodes) - {"n2"}
        )
        assert not any({"n0", "n4"} <= group for group in components)
        assert any({"n0", "n1"} <= group for group in components)

    def test_constant_sum_primary_scores(self):
        rng = np.random.default_rng(8)
        scenario = path_scenario(budget=1000)
        for _ in range(25):
            count = int(rng.integers(0, 4))
            actions = tuple(
                DdosAction(
                    scenario.nodes[int(rng.integers(0, 5))],
                    int(rng.integers(0, scenario.horizon)),
                    int(rng.integers(1, 6)),
                )
                for _ in range(count)
            )
            defense = ALL_DEFENSES[int(rng.integers(0, len(ALL_DEFENSES)))]
            outcome = engage(DdosAttack(actions), defense, scenario)
            assert outcome.attacker_score + outcome.defender_score == 1.0

    def test_monotone_in_disabled_nodes(self):
        # supersets of whole-horizon disable actions never help delivery
        scenario = path_scenario(budget=10_000)
        for defense in ALL_DEFENSES:
            scores = {}
            for subset_bits in range(32):
                nodes = [scenario.nodes[i] for i in range(5) if subset_bits >> i & 1]
                attack = DdosAttack(
                    tuple(DdosAction(n, 0, scenario.horizon) for n in nodes)
                )
                scores[subset_bits] = engage(attack, defense, scenario).attacker_score
            for small, large in itertools.combinations(range(32), 2):
                if small & large == small:
                    assert scores[small] <= scores[large], (defense.routing, small, large)

    def test_flooding_equals_component_oracle(self):
        rng = np.random.default_rng(77)
        for _ in range(40):
            n = int(rng.integers(4, 9))
            nodes = tuple(f"n{i}" for i in range(n))
            edges = {(nodes[i - 1], nodes[i]) for i in range(1, n)}
            for _ in range(int(rng.integers(0, n))):
                a, b = rng.integers(0, n, size=2)
                if a != b:
                    edge = (nodes[min(a, b)], nodes[max(a, b)])
                    edges.add(edge)
            adjacency = adjacency_map(nodes, tuple(edges))
            disabled = {node for node in nodes if rng.random() < 0.3}
            enabled = set(nodes) - disabled
            components = components_by_union_find(nodes, tuple(edges), enabled)
            for source in nodes:
                for destination in nodes:
                    delivered, _ = flood(adjacency, enabled, source, destination)
                    expected = any(
                        source in group and destination in group for group in components
                    )
                    assert delivered == expected

    def test_pure_function_and_costs(self):
        attack = DdosAttack((DdosAction("n2", 2, 6),))
        first = engage(attack, DdosDefense("flooding"), SCENARIO)
        second = engage(attack, DdosDefense("flooding"), SCENARIO)
        assert first == second
        assert first.costs["attacker_cost"] == 6 / SCENARIO.attack_budget
        assert 0.0 <= first.costs["defender_cost"] <= 1.0

    def test_rng_stream_not_consumed(self):
        seed = np.random.SeedSequence(5)
        engage(DdosAttack(()), DdosDefense("shortest-path"), SCENARIO, seed)
        # an unspawned SeedSequence still spawns the same children afterwards
        assert seed.spawn(1)[0].entropy == np.random.SeedSequence(5).spawn(1)[0].entropy


class TestScenarioLoading:
    def test_small_scenario_round_trip(self, ddos_scenario_file):
        scenario = load_scenario(ddos_scenario_file)
        assert scenario.nodes == ("n0", "n1", "n2", "n3", "n4")
        assert scenario.horizon == 12
        assert len(scenario.tasks) == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError):
            load_scenario(tmp_path / "absent.scenario")

    def test_disconnected_graph_rejected(self):
        with pytest.raises(ScenarioError):
            NetworkScenario(
                nodes=("a", "b", "c"),
                edges=(("a", "b"),),
                tasks=(Task("a", "b", 0, 5, 1),),
                horizon=10,
                message_cost=1.0,
                node_cost=0.0,
                attack_budget=5,
            )

    def test_task_window_validated(self):
        with pytest.raises(ScenarioError):
            NetworkScenario(
                nodes=("a", "b"),
                edges=(("a", "b"),),
                tasks=(Task("a", "b", 8, 4, 1),),
                horizon=10,
                message_cost=1.0,
                node_cost=0.0,
                attack_budget=5,
            )

    def test_environment_adapter(self, ddos_scenario_file):
        environment = DdosEnvironment.from_file(ddos_scenario_file)
        outcome = environment.engage(
            strategy("noop"), strategy("route shortest"), np.random.SeedSequence(0)
        )
        assert outcome.attacker_score == 0.0
