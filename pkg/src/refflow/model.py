"""Workflow definitions: tasks, data edges, references and execution modes.

A workflow is a DAG of service-invocation tasks. Each task runs a named
operation at a specific site; its inputs either come from another task's
output (an edge) or are literal bytes baked into the document. All types
here are immutable after construction and safe to share between threads.

Workflow document format (UTF-8 JSON):

    {"workflow_id": str,
     "tasks": [{"task_id": str, "site_id": str, "service_op": str,
                "inputs": [{"edge": str} | {"literal_b64": str}],
                "output_name": str}],
     "sinks": [str]}
"""

from __future__ import annotations

import base64
import binascii
import enum
import json
from dataclasses import dataclass, field

from .errors import CycleDetected, DanglingEdge, DuplicateTaskId, MalformedDocument


class ExecutionMode(enum.Enum):
    PURE_ORCHESTRATION = "pure_orchestration"
    CIRCULATE = "circulate"


@dataclass(frozen=True)
class DataReference:
    """Opaque handle to a payload held at a proxy.

    ref_id is a canonical 36-char UUID, unique per run; size and digest let
    traffic accounting and integrity checks run without touching the payload.
    """

    ref_id: str
    proxy_site: str
    size_bytes: int
    content_digest: str  # 64-hex sha256 of the payload

    def to_json(self) -> dict:
        return {
            "ref_id": self.ref_id,
            "proxy_site": self.proxy_site,
            "size_bytes": self.size_bytes,
            "content_digest": self.content_digest,
        }

    @staticmethod
    def from_json(raw: dict) -> "DataReference":
        return DataReference(
            ref_id=raw["ref_id"],
            proxy_site=raw["proxy_site"],
            size_bytes=int(raw["size_bytes"]),
            content_digest=raw["content_digest"],
        )

    @staticmethod
    def for_payload(ref_id: str, proxy_site: str, payload: bytes) -> "DataReference":
        import hashlib
        return DataReference(ref_id, proxy_site, len(payload),
                             hashlib.sha256(payload).hexdigest())


class BindingKind(enum.Enum):
    EDGE = "edge"
    LITERAL = "literal"


@dataclass(frozen=True)
class InputBinding:
    kind: BindingKind
    source_task: str | None = None
    literal_bytes: bytes | None = None

    def __post_init__(self):
        if self.kind is BindingKind.EDGE:
            if self.source_task is None or self.literal_bytes is not None:
                raise MalformedDocument("edge binding must carry source_task only")
        else:
            if self.literal_bytes is None or self.source_task is not None:
                raise MalformedDocument("literal binding must carry literal_bytes only")

    @staticmethod
    def edge(source_task: str) -> "InputBinding":
        return InputBinding(BindingKind.EDGE, source_task=source_task)

    @staticmethod
    def literal(data: bytes) -> "InputBinding":
        return InputBinding(BindingKind.LITERAL, literal_bytes=data)


@dataclass(frozen=True)
class TaskNode:
    task_id: str
    site_id: str
    service_op: str
    inputs: tuple[InputBinding, ...]
    output_name: str

    def edge_inputs(self) -> list[str]:
        return [b.source_task for b in self.inputs if b.kind is BindingKind.EDGE]


@dataclass(frozen=True)
class WorkflowDefinition:
    workflow_id: str
    tasks: tuple[TaskNode, ...]
    sinks: tuple[str, ...]
    _by_id: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        by_id: dict[str, TaskNode] = {}
        for t in self.tasks:
            if t.task_id in by_id:
                raise DuplicateTaskId(t.task_id)
            by_id[t.task_id] = t
        for t in self.tasks:
            for src in t.edge_inputs():
                if src not in by_id:
                    raise DanglingEdge(f"{t.task_id} reads unknown task {src!r}")
                if src == t.task_id:
                    raise DanglingEdge(f"{t.task_id} reads its own output")
        for s in self.sinks:
            if s not in by_id:
                raise DanglingEdge(f"sink {s!r} is not a task")
        object.__setattr__(self, "_by_id", by_id)
        validate_dag(self)  # acyclicity is part of construction

    def task(self, task_id: str) -> TaskNode:
        return self._by_id[task_id]

    def task_ids(self) -> set[str]:
        return set(self._by_id)


def parse_workflow(document: str) -> WorkflowDefinition:
    """Parse and validate a workflow document.

    Raises MalformedDocument on bad JSON or missing/mistyped fields,
    DanglingEdge / DuplicateTaskId / CycleDetected on referential problems.
    """
    try:
        doc = json.loads(document)
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedDocument("top level must be an object")
    try:
        workflow_id = doc["workflow_id"]
        raw_tasks = doc["tasks"]
        raw_sinks = doc["sinks"]
    except KeyError as exc:
        raise MalformedDocument(f"missing field {exc}") from exc
    if not isinstance(workflow_id, str) or not isinstance(raw_tasks, list) \
            or not isinstance(raw_sinks, list):
        raise MalformedDocument("workflow_id/tasks/sinks have wrong types")

    tasks = []
    for raw in raw_tasks:
        if not isinstance(raw, dict):
            raise MalformedDocument("task entry must be an object")
        try:
            inputs = tuple(_parse_binding(b) for b in raw["inputs"])
            tasks.append(TaskNode(
                task_id=_req_str(raw, "task_id"),
                site_id=_req_str(raw, "site_id"),
                service_op=_req_str(raw, "service_op"),
                inputs=inputs,
                output_name=_req_str(raw, "output_name"),
            ))
        except KeyError as exc:
            raise MalformedDocument(f"task missing field {exc}") from exc
    return WorkflowDefinition(workflow_id, tuple(tasks), tuple(raw_sinks))


def _req_str(raw: dict, key: str) -> str:
    val = raw[key]
    if not isinstance(val, str):
        raise MalformedDocument(f"field {key!r} must be a string")
    return val


def _parse_binding(raw) -> InputBinding:
    if not isinstance(raw, dict):
        raise MalformedDocument("input binding must be an object")
    if "edge" in raw:
        return InputBinding.edge(_req_str(raw, "edge"))
    if "literal_b64" in raw:
        try:
            data = base64.b64decode(_req_str(raw, "literal_b64"), validate=True)
        except (binascii.Error, ValueError) as exc:
            raise MalformedDocument(f"bad literal_b64: {exc}") from exc
        return InputBinding.literal(data)
    raise MalformedDocument("input binding needs 'edge' or 'literal_b64'")


def serialize_workflow(defn: WorkflowDefinition) -> str:
    """Inverse of parse_workflow (structural round-trip)."""
    doc = {
        "workflow_id": defn.workflow_id,
        "tasks": [
            {
                "task_id": t.task_id,
                "site_id": t.site_id,
                "service_op": t.service_op,
                "inputs": [
                    {"edge": b.source_task} if b.kind is BindingKind.EDGE
                    else {"literal_b64": base64.b64encode(b.literal_bytes).decode()}
                    for b in t.inputs
                ],
                "output_name": t.output_name,
            }
            for t in defn.tasks
        ],
        "sinks": list(defn.sinks),
    }
    return json.dumps(doc)


def validate_dag(defn: WorkflowDefinition) -> list[str]:
    """Topological order of the data-edge graph, ties broken by task_id.

    Raises CycleDetected (reporting one cycle) when the graph is not a DAG.
    """
    indeg = {t.task_id: 0 for t in defn.tasks}
    consumers: dict[str, list[str]] = {t.task_id: [] for t in defn.tasks}
    for t in defn.tasks:
        for src in set(t.edge_inputs()):
            indeg[t.task_id] += 1
            consumers[src].append(t.task_id)

    import heapq
    heap = [tid for tid, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order: list[str] = []
    while heap:
        tid = heapq.heappop(heap)
        order.append(tid)
        for nxt in consumers[tid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(heap, nxt)
    if len(order) != len(defn.tasks):
        raise CycleDetected(_find_cycle(defn, set(order)))
    return order


def _find_cycle(defn: WorkflowDefinition, done: set[str]) -> list[str]:
    # Walk producer links among the unfinished tasks until one repeats.
    remaining = defn.task_ids() - done
    node = min(remaining)
    path, seen = [], {}
    while node not in seen:
        seen[node] = len(path)
        path.append(node)
        node = next(s for s in defn.task(node).edge_inputs() if s in remaining)
    return path[seen[node]:]


def ready_tasks(defn: WorkflowDefinition, completed: set[str]) -> set[str]:
    """Tasks not yet completed whose edge producers have all completed."""
    return {
        t.task_id
        for t in defn.tasks
        if t.task_id not in completed
        and all(src in completed for src in t.edge_inputs())
    }
