import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refflow.errors import (
    CycleDetected,
    DanglingEdge,
    DuplicateTaskId,
    MalformedDocument,
)
from refflow.model import (
    InputBinding,
    TaskNode,
    WorkflowDefinition,
    parse_workflow,
    ready_tasks,
    serialize_workflow,
    validate_dag,
)
from .conftest import fig3_document


def make_workflow(edges, n_tasks, sinks=None):
    """Linear helper: tasks t00..t(n-1) with the given (src, dst) edges."""
    ids = [f"t{i:02d}" for i in range(n_tasks)]
    tasks = [
        TaskNode(tid, "s0", "identity",
                 tuple(InputBinding.edge(src) for src, dst in edges if dst == tid)
                 or (InputBinding.literal(b"x"),),
                 "out")
        for tid in ids
    ]
    consumed = {src for src, _ in edges}
    sinks = sinks if sinks is not None else [t for t in ids if t not in consumed]
    return WorkflowDefinition("wf", tuple(tasks), tuple(sinks))


class TestParse:
    def test_fig3_scenario(self):
        defn = parse_workflow(fig3_document())
        assert len(defn.tasks) == 4
        assert sum(len(t.edge_inputs()) for t in defn.tasks) == 3
        assert defn.sinks == ("mine",)

    def test_single_task_is_sink(self):
        doc = json.dumps({"workflow_id": "w", "tasks": [
            {"task_id": "only", "site_id": "a", "service_op": "identity",
             "inputs": [{"literal_b64": "YWJj"}], "output_name": "o"}],
            "sinks": ["only"]})
        defn = parse_workflow(doc)
        assert len(defn.tasks) == 1 and defn.sinks == ("only",)

    def test_dangling_edge(self):
        doc = fig3_document().replace('{"edge": "WS-1"}', '{"edge": "WS-9"}')
        with pytest.raises(DanglingEdge):
            parse_workflow(doc)

    def test_duplicate_task_id(self):
        doc = fig3_document().replace('"WS-2"', '"WS-1"')
        with pytest.raises((DuplicateTaskId, DanglingEdge)):
            parse_workflow(doc)

    @pytest.mark.parametrize("doc", [
        "not json",
        "[]",
        '{"workflow_id": "w"}',
        '{"workflow_id": "w", "tasks": [{"task_id": "t"}], "sinks": []}',
        '{"workflow_id": "w", "tasks": [], "sinks": 3}',
    ])
    def test_malformed(self, doc):
        with pytest.raises(MalformedDocument):
            parse_workflow(doc)

    def test_self_edge_rejected(self):
        with pytest.raises(DanglingEdge):
            make_workflow([("t00", "t00")], 1)

    def test_round_trip(self):
        defn = parse_workflow(fig3_document())
        again = parse_workflow(serialize_workflow(defn))
        assert again.tasks == defn.tasks
        assert again.sinks == defn.sinks


class TestValidateDag:
    def test_fig3_order(self):
        order = validate_dag(parse_workflow(fig3_document()))
        assert order == ["WS-1", "WS-2", "WS-3", "mine"]

    def test_empty_workflow(self):
        assert validate_dag(WorkflowDefinition("w", (), ())) == []

    def test_two_cycle(self):
        with pytest.raises(CycleDetected) as err:
            make_workflow([("t00", "t01"), ("t01", "t00")], 2, sinks=["t01"])
        assert set(err.value.cycle) == {"t00", "t01"}

    def test_edges_point_forward(self):
        defn = parse_workflow(fig3_document())
        order = validate_dag(defn)
        pos = {tid: i for i, tid in enumerate(order)}
        assert sorted(order) == sorted(defn.task_ids())
        for t in defn.tasks:
            for src in t.edge_inputs():
                assert pos[src] < pos[t.task_id]


class TestReadyTasks:
    def test_initially_sources(self):
        defn = parse_workflow(fig3_document())
        assert ready_tasks(defn, set()) == {"WS-1", "WS-2", "WS-3"}

    def test_after_sources(self):
        defn = parse_workflow(fig3_document())
        assert ready_tasks(defn, {"WS-1", "WS-2", "WS-3"}) == {"mine"}

    def test_all_done(self):
        defn = parse_workflow(fig3_document())
        assert ready_tasks(defn, defn.task_ids()) == set()


@st.composite
def random_dags(draw):
    n = draw(st.integers(1, 50))
    edges = []
    for dst in range(1, n):
        for src in draw(st.sets(st.integers(0, dst - 1), max_size=3)):
            edges.append((f"t{src:02d}", f"t{dst:02d}"))
    return make_workflow(edges, n)


@settings(max_examples=60, deadline=None)
@given(random_dags())
def test_progress_property(defn):
    """Repeatedly completing all ready tasks terminates with everything done."""
    completed = set()
    for _ in range(len(defn.tasks) + 1):
        ready = ready_tasks(defn, completed)
        if not ready:
            break
        completed |= ready
    assert completed == defn.task_ids()


@settings(max_examples=60, deadline=None)
@given(random_dags())
def test_topological_order_property(defn):
    order = validate_dag(defn)
    assert sorted(order) == sorted(defn.task_ids())
    pos = {tid: i for i, tid in enumerate(order)}
    for t in defn.tasks:
        for src in t.edge_inputs():
            assert pos[src] < pos[t.task_id]
