"""Quarter-graph construction against a brute-force pairwise oracle,
plus leakage auditing and the on-disk round trip."""

from __future__ import annotations

import datetime as dt

import numpy as np
import pytest

from volgraph.dataio.records import CallRecord, Quarter, RelationRecord, Sentence
from volgraph.errors import GraphConstructionError
from volgraph.graphbuild import (
    SIMILARITY_THRESHOLD,
    audit_no_leakage,
    build_quarter_graph,
    date_groups,
    load_graph_dir,
    save_graph_dir,
)

Q = Quarter(2016, 2)


def call(company, date, call_id=None):
    return CallRecord(
        call_id or f"{company}-{Q}",
        company,
        date,
        [Sentence(0, "executive", "presentation", 0, vector=np.zeros(4))],
    )


def oracle_edges(calls, relations, quarter, threshold):
    """Quadratic reference: every ordered company pair, checked directly."""
    ordered = sorted(calls, key=lambda c: (c.call_date, c.company_id))
    idx = {c.company_id: i for i, c in enumerate(ordered)}
    sim = {}
    for r in relations:
        if r.effective_year == quarter.year - 1 and r.similarity > threshold:
            if r.company_a in idx and r.company_b in idx:
                sim[frozenset((r.company_a, r.company_b))] = r.similarity

    edges = {}
    for i, ci in enumerate(ordered):
        edges[(i, i)] = (1.0, 1.0)  # self loop: weight 1, similarity 1
        for j, cj in enumerate(ordered):
            if i == j:
                continue
            key = frozenset((ci.company_id, cj.company_id))
            if key not in sim:
                continue
            gap = (cj.call_date - ci.call_date).days
            if gap >= 0:  # information flows forward (or same-day, both ways)
                edges[(i, j)] = (1.0 / (gap + 1), sim[key])
    return edges


def random_instance(rng, n_companies, quarter=Q):
    companies = [f"C{i:02d}" for i in range(n_companies)]
    start = quarter.start.toordinal()
    end = quarter.end.toordinal()
    calls = [
        call(c, dt.date.fromordinal(int(rng.integers(start, end + 1))))
        for c in companies
    ]
    relations = []
    for i in range(n_companies):
        for j in range(i + 1, n_companies):
            u = rng.random()
            if u < 0.35:
                relations.append(
                    RelationRecord(
                        companies[i],
                        companies[j],
                        quarter.year - 1,
                        float(rng.uniform(0.01, 0.9)),
                    )
                )
            elif u < 0.45:
                # wrong effective year: must be ignored
                relations.append(
                    RelationRecord(
                        companies[i], companies[j], quarter.year, float(rng.uniform(0.2, 0.9))
                    )
                )
    return calls, relations


class TestOracleEquivalence:
    def test_random_instances_match_oracle_exactly(self, rng):
        for trial in range(25):
            n = int(rng.integers(2, 30))
            calls, relations = random_instance(rng, n)
            graph = build_quarter_graph(calls, relations, Q)
            got = {(e.src, e.dst): (e.temporal_weight, e.similarity) for e in graph.edges}
            want = oracle_edges(calls, relations, Q, SIMILARITY_THRESHOLD)
            assert got == want, f"trial {trial}: edge sets differ"

    def test_node_order_is_date_then_company(self, rng):
        calls, relations = random_instance(rng, 12)
        graph = build_quarter_graph(calls, relations, Q)
        keys = [(n.call_date, n.company_id) for n in graph.nodes]
        assert keys == sorted(keys)
        assert [n.node_id for n in graph.nodes] == list(range(12))
        # calls list stays aligned with nodes
        assert all(
            g.call_id == n.call_id for g, n in zip(graph.calls, graph.nodes)
        )


class TestEdgeSemantics:
    def test_every_node_has_self_loop(self):
        calls = [call("A", dt.date(2016, 4, 5)), call("B", dt.date(2016, 5, 2))]
        graph = build_quarter_graph(calls, [], Q)
        self_loops = [e for e in graph.edges if e.src == e.dst]
        assert len(self_loops) == 2
        assert all(e.temporal_weight == 1.0 and e.similarity == 1.0 for e in self_loops)

    def test_related_pair_gets_forward_edge_with_decayed_weight(self):
        calls = [call("A", dt.date(2016, 4, 5)), call("B", dt.date(2016, 4, 12))]
        rel = [RelationRecord("A", "B", 2015, 0.5)]
        graph = build_quarter_graph(calls, rel, Q)
        cross = [e for e in graph.edges if e.src != e.dst]
        assert len(cross) == 1
        e = cross[0]
        assert (e.src, e.dst) == (0, 1)  # A spoke first, so A feeds B
        assert e.day_gap == 7
        assert e.temporal_weight == 1.0 / 8.0
        assert e.similarity == 0.5

    def test_same_day_pair_connects_both_directions(self):
        d = dt.date(2016, 4, 5)
        calls = [call("A", d), call("B", d)]
        rel = [RelationRecord("A", "B", 2015, 0.4)]
        graph = build_quarter_graph(calls, rel, Q)
        cross = {(e.src, e.dst) for e in graph.edges if e.src != e.dst}
        assert cross == {(0, 1), (1, 0)}
        assert all(
            e.temporal_weight == 1.0 for e in graph.edges if e.src != e.dst
        )

    def test_similarity_at_threshold_is_dropped(self):
        calls = [call("A", dt.date(2016, 4, 5)), call("B", dt.date(2016, 4, 6))]
        rel = [RelationRecord("A", "B", 2015, SIMILARITY_THRESHOLD)]
        graph = build_quarter_graph(calls, rel, Q)
        assert all(e.src == e.dst for e in graph.edges)

    def test_relation_from_wrong_year_is_ignored(self):
        calls = [call("A", dt.date(2016, 4, 5)), call("B", dt.date(2016, 4, 6))]
        rel = [RelationRecord("A", "B", 2016, 0.9), RelationRecord("A", "B", 2014, 0.9)]
        graph = build_quarter_graph(calls, rel, Q)
        assert all(e.src == e.dst for e in graph.edges)

    def test_weight_decays_monotonically_with_gap(self):
        base = dt.date(2016, 4, 4)
        weights = []
        for gap in (1, 3, 10, 30):
            calls = [call("A", base), call("B", base + dt.timedelta(days=gap))]
            rel = [RelationRecord("A", "B", 2015, 0.5)]
            graph = build_quarter_graph(calls, rel, Q)
            e = next(e for e in graph.edges if e.src != e.dst)
            assert e.temporal_weight == 1.0 / (gap + 1)
            weights.append(e.temporal_weight)
        assert weights == sorted(weights, reverse=True)

    def test_duplicate_company_rejected(self):
        calls = [call("A", dt.date(2016, 4, 5), "A-1"), call("A", dt.date(2016, 4, 6), "A-2")]
        with pytest.raises(GraphConstructionError, match="duplicate"):
            build_quarter_graph(calls, [], Q)

    def test_call_outside_quarter_rejected(self):
        with pytest.raises(GraphConstructionError, match="outside"):
            build_quarter_graph([call("A", dt.date(2016, 7, 1))], [], Q)

    def test_conflicting_similarities_rejected(self):
        calls = [call("A", dt.date(2016, 4, 5)), call("B", dt.date(2016, 4, 6))]
        rel = [
            RelationRecord("A", "B", 2015, 0.5),
            RelationRecord("B", "A", 2015, 0.6),
        ]
        with pytest.raises(GraphConstructionError, match="conflicting"):
            build_quarter_graph(calls, rel, Q)

    def test_duplicate_relation_rows_with_equal_similarity_are_fine(self):
        calls = [call("A", dt.date(2016, 4, 5)), call("B", dt.date(2016, 4, 6))]
        rel = [RelationRecord("A", "B", 2015, 0.5), RelationRecord("B", "A", 2015, 0.5)]
        graph = build_quarter_graph(calls, rel, Q)
        assert sum(1 for e in graph.edges if e.src != e.dst) == 1

    def test_prefix_closedness(self, rng):
        # building on the first k dates must reproduce exactly the edges
        # among those nodes: later calls never affect earlier structure
        calls, relations = random_instance(rng, 16)
        full = build_quarter_graph(calls, relations, Q)
        dates = sorted({c.call_date for c in calls})
        cutoff = dates[len(dates) // 2]
        early_calls = [c for c in calls if c.call_date <= cutoff]
        sub = build_quarter_graph(early_calls, relations, Q)
        remap = {n.company_id: n.node_id for n in full.nodes}
        sub_edges = {
            (remap[sub.nodes[e.src].company_id], remap[sub.nodes[e.dst].company_id]):
                (e.temporal_weight, e.similarity)
            for e in sub.edges
        }
        early_ids = {remap[c.company_id] for c in early_calls}
        full_restricted = {
            (e.src, e.dst): (e.temporal_weight, e.similarity)
            for e in full.edges
            if e.src in early_ids and e.dst in early_ids
        }
        assert sub_edges == full_restricted


class TestLeakageAudit:
    def test_clean_graph_passes(self, rng):
        calls, relations = random_instance(rng, 20)
        report = audit_no_leakage(build_quarter_graph(calls, relations, Q))
        assert report.ok
        assert report.violations == []

    def test_injected_future_edge_is_flagged(self, rng):
        calls, relations = random_instance(rng, 10)
        graph = build_quarter_graph(calls, relations, Q)
        dates = [n.call_date for n in graph.nodes]
        late = max(range(10), key=lambda i: dates[i])
        early = min(range(10), key=lambda i: dates[i])
        assert dates[late] > dates[early]
        from volgraph.graphbuild import TemporalEdge

        graph.edges.append(
            TemporalEdge(src=late, dst=early, temporal_weight=0.5, similarity=0.3, day_gap=1)
        )
        report = audit_no_leakage(graph)
        assert not report.ok
        assert len(report.violations) >= 1
        assert any(v["src"] == late and v["dst"] == early for v in report.violations)

    def test_corrupted_weight_is_flagged(self, rng):
        calls, relations = random_instance(rng, 10)
        graph = build_quarter_graph(calls, relations, Q)
        cross = [e for e in graph.edges if e.src != e.dst]
        if not cross:
            pytest.skip("instance drew no cross edges")
        cross[0].temporal_weight = 0.123456
        report = audit_no_leakage(graph)
        assert not report.ok


class TestDateGroupsAndSerialization:
    def test_date_groups_partition_nodes_in_order(self, rng):
        calls, relations = random_instance(rng, 15)
        graph = build_quarter_graph(calls, relations, Q)
        groups = date_groups(graph)
        assert [d for d, _ in groups] == sorted({n.call_date for n in graph.nodes})
        flat = [i for _, ids in groups for i in ids]
        assert sorted(flat) == list(range(15))
        for d, ids in groups:
            assert all(graph.nodes[i].call_date == d for i in ids)

    def test_save_load_round_trip(self, tmp_path, small_graph):
        save_graph_dir(small_graph, tmp_path / "g")
        back = load_graph_dir(tmp_path / "g")
        assert back.quarter == small_graph.quarter
        assert len(back.nodes) == len(small_graph.nodes)
        for a, b in zip(small_graph.nodes, back.nodes):
            assert (a.node_id, a.company_id, a.call_id, a.call_date) == (
                b.node_id,
                b.company_id,
                b.call_id,
                b.call_date,
            )
            if a.labels is None:
                assert b.labels is None
            else:
                for tau, v in a.labels.items():
                    assert b.labels[tau] == v  # repr round-trip, bitwise
        assert len(back.edges) == len(small_graph.edges)
        for a, b in zip(small_graph.edges, back.edges):
            assert (a.src, a.dst, a.day_gap) == (b.src, b.dst, b.day_gap)
            assert a.temporal_weight == b.temporal_weight
            assert a.similarity == b.similarity
        # transcripts ride along so prediction works from the directory alone
        for ca, cb in zip(small_graph.calls, back.calls):
            assert ca.call_id == cb.call_id
            assert len(ca.sentences) == len(cb.sentences)
            np.testing.assert_array_equal(ca.sentences[0].vector, cb.sentences[0].vector)

    def test_load_rejects_non_graph_dir(self, tmp_path):
        (tmp_path / "junk").mkdir()
        with pytest.raises(GraphConstructionError):
            load_graph_dir(tmp_path / "junk")
