import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from autodidact import curriculum as cur
from autodidact.backends import MockGenerationBackend
from autodidact.errors import InvalidRoadmap, MalformedRoadmap, NodeLocked, UnknownNode

from conftest import FIXED_NOW, make_roadmap


# --- independent oracles ---

def brute_force_available(states: dict[str, str]) -> set[str]:
    return {nid for nid, s in states.items() if s in ("unlocked", "in_progress")}


def brute_force_unlockable(roadmap, states: dict[str, str]) -> set[str]:
    """Every node whose full prerequisite set is passed."""
    passed = {nid for nid, s in states.items() if s == "passed"}
    return {n.id for n in roadmap.nodes if n.prerequisites <= passed}


def random_dag(rng: random.Random, n_nodes: int):
    edges = {"n0": []}
    for i in range(1, n_nodes):
        n_preds = rng.randint(1, min(3, i))
        preds = rng.sample([f"n{j}" for j in range(i)], n_preds)
        edges[f"n{i}"] = preds
    return make_roadmap(edges)


# --- generate_roadmap ---

class TestGenerateRoadmap:
    def test_mock_roadmap_valid(self):
        r = cur.generate_roadmap("Binary Search", None, MockGenerationBackend(seed=7),
                                 seed=7, now=FIXED_NOW)
        assert len(r.nodes) >= 3
        roots = [n for n in r.nodes if not n.prerequisites]
        assert len(roots) == 1
        assert cur.validate_roadmap(r) == []

    def test_deterministic(self):
        a = cur.generate_roadmap("Binary Search", None, MockGenerationBackend(seed=7),
                                 seed=7, now=FIXED_NOW)
        b = cur.generate_roadmap("Binary Search", None, MockGenerationBackend(seed=7),
                                 seed=7, now=FIXED_NOW)
        assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(b.to_json(), sort_keys=True)

    def test_empty_title_rejected(self):
        with pytest.raises(MalformedRoadmap):
            cur.generate_roadmap("", None, MockGenerationBackend(seed=7))

    def test_repair_retry_on_garbage(self):
        class FlakyBackend:
            def __init__(self):
                self.inner = MockGenerationBackend(seed=7)
                self.calls = 0

            def generate(self, req):
                self.calls += 1
                if self.calls == 1:
                    resp = self.inner.generate(req)
                    resp.text = "not json {"
                    return resp
                return self.inner.generate(req)

        backend = FlakyBackend()
        r = cur.generate_roadmap("Graphs", None, backend, seed=7, now=FIXED_NOW)
        assert backend.calls == 2
        assert cur.validate_roadmap(r) == []

    def test_persistent_garbage_fails(self):
        class JunkBackend:
            def generate(self, req):
                from autodidact.backends import GenerationResponse
                return GenerationResponse(text="junk")

        with pytest.raises(MalformedRoadmap):
            cur.generate_roadmap("Graphs", None, JunkBackend())


# --- validate_roadmap ---

class TestValidateRoadmap:
    def test_self_prerequisite(self):
        r = make_roadmap({"a": ["a"]})
        rules = {(v["node_id"], v["rule"]) for v in cur.validate_roadmap(r)}
        assert ("a", "self_prerequisite") in rules

    def test_two_node_cycle(self):
        r = make_roadmap({"a": ["b"], "b": ["a"]})
        rules = {v["rule"] for v in cur.validate_roadmap(r)}
        assert "cycle" in rules

    def test_valid_tree_empty_report(self):
        r = make_roadmap({"a": [], "b": ["a"], "c": ["a"], "d": ["b"], "e": ["b"]})
        assert cur.validate_roadmap(r) == []
        # cross-check with an independent topological sort
        order = []
        remaining = {n.id: set(n.prerequisites) for n in r.nodes}
        while remaining:
            ready = [nid for nid, p in remaining.items() if p <= set(order)]
            assert ready, "topological sort stalled on a valid roadmap"
            order.extend(sorted(ready))
            for nid in ready:
                del remaining[nid]
        assert set(order) == set(r.node_ids())

    def test_unknown_prerequisite(self):
        r = make_roadmap({"a": ["ghost"]})
        rules = {v["rule"] for v in cur.validate_roadmap(r)}
        assert "unknown_prerequisite" in rules

    def test_empty_roadmap(self):
        r = make_roadmap({})
        assert any(v["rule"] == "non_empty" for v in cur.validate_roadmap(r))


# --- initial_progress ---

class TestInitialProgress:
    def test_chain(self):
        r = make_roadmap({"a": [], "b": ["a"], "c": ["b"]})
        p = cur.initial_progress("u", r, now=FIXED_NOW)
        assert p.node_states == {"a": "unlocked", "b": "locked", "c": "locked"}
        assert p.quiz_scores == {}

    def test_diamond(self):
        r = make_roadmap({"a": [], "b": ["a"], "c": ["a"], "d": ["b", "c"]})
        p = cur.initial_progress("u", r, now=FIXED_NOW)
        assert cur.available_nodes(p) == {"a"}

    def test_invalid_roadmap(self):
        with pytest.raises(InvalidRoadmap):
            cur.initial_progress("u", make_roadmap({}))


# --- record_quiz_result ---

class TestRecordQuizResult:
    def test_pass_unlocks_dependent(self):
        r = make_roadmap({"a": [], "b": ["a"]})
        p = cur.initial_progress("u", r, now=FIXED_NOW)
        p = cur.record_quiz_result(p, r, "a", 0.9, 0.7, now=FIXED_NOW)
        assert p.node_states["a"] == "passed"
        assert p.node_states["b"] == "unlocked"
        assert p.node_states["b"] in ("unlocked",)
        assert {"b"} == brute_force_unlockable(r, p.node_states) - {"a"}

    def test_diamond_partial_prereqs_keep_locked(self):
        r = make_roadmap({"a": [], "b": ["a"], "c": ["a"], "d": ["b", "c"]})
        p = cur.initial_progress("u", r, now=FIXED_NOW)
        p = cur.record_quiz_result(p, r, "a", 1.0, 0.7, now=FIXED_NOW)
        p = cur.record_quiz_result(p, r, "b", 1.0, 0.7, now=FIXED_NOW)
        assert p.node_states["d"] == "locked"
        assert "d" not in brute_force_unlockable(r, p.node_states)

    def test_fail_allows_retake(self):
        r = make_roadmap({"a": [], "b": ["a"]})
        p = cur.initial_progress("u", r, now=FIXED_NOW)
        p = cur.record_quiz_result(p, r, "a", 0.5, 0.7, now=FIXED_NOW)
        assert p.node_states["a"] == "unlocked"
        assert p.node_states["b"] == "locked"
        assert p.quiz_scores["a"] == 0.5

    def test_locked_node_rejected(self):
        r = make_roadmap({"a": [], "b": ["a"]})
        p = cur.initial_progress("u", r, now=FIXED_NOW)
        with pytest.raises(NodeLocked):
            cur.record_quiz_result(p, r, "b", 1.0, 0.7)

    def test_unknown_node(self):
        r = make_roadmap({"a": []})
        p = cur.initial_progress("u", r, now=FIXED_NOW)
        with pytest.raises(UnknownNode):
            cur.record_quiz_result(p, r, "zzz", 1.0, 0.7)


# --- available_nodes ---

class TestAvailableNodes:
    def test_fresh_chain(self):
        r = make_roadmap({"a": [], "b": ["a"], "c": ["b"]})
        p = cur.initial_progress("u", r, now=FIXED_NOW)
        assert cur.available_nodes(p) == {"a"}

    def test_all_passed(self):
        r = make_roadmap({"a": [], "b": ["a"]})
        p = cur.initial_progress("u", r, now=FIXED_NOW)
        p = cur.record_quiz_result(p, r, "a", 1.0, 0.7, now=FIXED_NOW)
        p = cur.record_quiz_result(p, r, "b", 1.0, 0.7, now=FIXED_NOW)
        assert cur.available_nodes(p) == set()

    def test_random_dag_matches_brute_force(self):
        rng = random.Random(42)
        r = random_dag(rng, 12)
        p = cur.initial_progress("u", r, now=FIXED_NOW)
        for _ in range(20):
            options = sorted(cur.available_nodes(p))
            if not options:
                break
            node = rng.choice(options)
            p = cur.record_quiz_result(p, r, node, rng.choice([0.4, 1.0]), 0.7,
                                       now=FIXED_NOW)
            assert cur.available_nodes(p) == brute_force_available(p.node_states)


# --- invariants as property tests ---

@settings(max_examples=200, deadline=None)
@given(st.data())
def test_gating_safety_and_unlock_completeness(data):
    rng = random.Random(data.draw(st.integers(0, 10**9)))
    r = random_dag(rng, rng.randint(1, 15))
    p = cur.initial_progress("u", r, now=FIXED_NOW)
    passed_history: set[str] = set()
    for _ in range(rng.randint(0, 25)):
        target = rng.choice(r.node_ids())
        score = rng.choice([0.0, 0.5, 0.7, 1.0])
        try:
            p = cur.record_quiz_result(p, r, target, score, 0.7, now=FIXED_NOW)
        except NodeLocked:
            assert p.node_states[target] == "locked"
            continue
        # gating safety
        passed = {nid for nid, s in p.node_states.items() if s == "passed"}
        for n in r.nodes:
            if p.node_states[n.id] != "locked":
                assert n.prerequisites <= passed or p.node_states[n.id] != "passed"
            if p.node_states[n.id] in ("unlocked", "in_progress", "passed"):
                assert n.prerequisites <= passed
        # monotonicity
        assert passed_history <= passed
        passed_history = passed
        # unlock completeness vs brute-force recomputation
        for nid in brute_force_unlockable(r, p.node_states):
            assert p.node_states[nid] != "locked"
