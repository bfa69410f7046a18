"""Centralized engine: schedules tasks, plans transfers, tracks references.

The engine walks the workflow DAG in dependency order, dispatching
independent tasks concurrently. In reference-passing (circulate) mode it
instructs source proxies to push inputs to the consumer's proxy, invokes
through the consumer's proxy with references only, and materializes sink
outputs once at the end. In pure orchestration mode every output payload
flows back to the engine and needed payloads are re-sent as literals with
each invoke; that pathology is the baseline under study.

Traffic counters split every engine-link frame into payload bytes and
header/framing bytes, so measured payload traffic can be checked
bit-exactly against the analytic traffic model.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
import uuid
from collections import Counter
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field

from .errors import RefflowError, TaskFailed, Unreachable, from_code
from .model import (
    BindingKind,
    DataReference,
    ExecutionMode,
    TaskNode,
    WorkflowDefinition,
    validate_dag,
)
from .transport.framing import Message, MsgType
from .transport.netsim import ENGINE_SITE, Topology, request

DEFAULT_MAX_IN_FLIGHT = 16


@dataclass
class RunReport:
    run_id: str
    mode: ExecutionMode
    makespan_s: float
    engine_payload_bytes: int
    engine_control_bytes: int
    p2p_payload_bytes: int
    message_counts: dict
    task_timeline: list          # (task_id, start_s, end_s) relative to run start
    result_digests: dict         # sink task_id -> 64-hex sha256
    task_output_bytes: dict      # task_id -> output size

    def to_json(self) -> str:
        doc = dict(self.__dict__)
        doc["mode"] = self.mode.value
        doc["task_timeline"] = [list(t) for t in self.task_timeline]
        return json.dumps(doc, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "RunReport":
        doc = json.loads(text)
        doc["mode"] = ExecutionMode(doc["mode"])
        doc["task_timeline"] = [tuple(t) for t in doc["task_timeline"]]
        return RunReport(**doc)


@dataclass
class RunState:
    completed: set = field(default_factory=set)
    in_flight: set = field(default_factory=set)
    ref_of: dict = field(default_factory=dict)       # task_id -> DataReference
    locations: dict = field(default_factory=dict)    # ref_id -> set of sites


def plan_transfers(defn: WorkflowDefinition, task: TaskNode,
                   state: RunState) -> list:
    """Transfer instructions needed before task can run at its site.

    One (source_site, TransferRequest message) per source proxy holding
    needed refs that are not yet at task.site_id, refs grouped by source.
    """
    groups: dict[str, list[DataReference]] = {}
    seen = set()
    for src in task.edge_inputs():
        ref = state.ref_of[src]
        if ref.ref_id in seen:
            continue
        seen.add(ref.ref_id)
        if task.site_id in state.locations.get(ref.ref_id, {ref.proxy_site}):
            continue
        groups.setdefault(ref.proxy_site, []).append(ref)
    return [
        (source, Message(MsgType.TRANSFER_REQUEST, "",
                         {"refs": [r.to_json() for r in refs],
                          "target_site": task.site_id, "sender": ENGINE_SITE}))
        for source, refs in sorted(groups.items())
    ]


def traffic_model(defn: WorkflowDefinition, sizes: dict,
                  mode: ExecutionMode) -> tuple[int, int]:
    """Predicted (engine_payload_bytes, p2p_payload_bytes) for a run.

    Literal workflow inputs ride inside invoke requests in both modes and
    count toward engine payload either way.
    """
    literal_bytes = sum(
        len(b.literal_bytes)
        for t in defn.tasks for b in t.inputs
        if b.kind is BindingKind.LITERAL
    )
    if mode is ExecutionMode.PURE_ORCHESTRATION:
        inbound = sum(sizes[t.task_id] for t in defn.tasks)
        resent = sum(sizes[src] for t in defn.tasks for src in t.edge_inputs())
        return inbound + resent + literal_bytes, 0

    engine = sum(sizes[s] for s in defn.sinks) + literal_bytes
    moved = {
        (src, t.site_id)
        for t in defn.tasks for src in t.edge_inputs()
        if defn.task(src).site_id != t.site_id
    }
    p2p = sum(sizes[src] for src, _ in moved)
    return engine, p2p


class _Counters:
    def __init__(self):
        self.lock = threading.Lock()
        self.engine_payload = 0
        self.engine_control = 0
        self.p2p_payload = 0
        self.messages = Counter()

    def count_frame(self, msg: Message, frame_len: int) -> None:
        with self.lock:
            self.engine_payload += len(msg.payload)
            self.engine_control += frame_len - len(msg.payload)
            self.messages[msg.msg_type.value] += 1


class Engine:
    def __init__(self, topology: Topology,
                 max_in_flight: int = DEFAULT_MAX_IN_FLIGHT):
        self.topology = topology
        self.max_in_flight = max_in_flight

    def execute(self, defn: WorkflowDefinition, mode: ExecutionMode,
                run_id: str | None = None) -> RunReport:
        """Run the workflow once; flush all proxies whether or not it succeeds."""
        run = _Run(self, defn, mode, run_id or str(uuid.uuid4()))
        return run.execute()


class _Run:
    """State of a single execution; engine presents one of these per run."""

    def __init__(self, engine: Engine, defn: WorkflowDefinition,
                 mode: ExecutionMode, run_id: str):
        self.engine = engine
        self.defn = defn
        self.mode = mode
        self.run_id = run_id
        self.state = RunState()
        self.counters = _Counters()
        self.payloads: dict[str, bytes] = {}   # pure mode engine-side copies
        self.timeline: list = []
        self.lock = threading.Lock()
        self.staging: dict[tuple, Future] = {}  # (ref_id, site) -> ack future
        self.t0 = 0.0

    # -- messaging -----------------------------------------------------------

    def _call(self, site: str, msg: Message) -> Message:
        try:
            reply, sent, received = request(self.engine.topology, ENGINE_SITE,
                                            site, msg)
        except OSError as exc:
            raise Unreachable(f"{site}: {exc}") from exc
        self.counters.count_frame(msg, sent)
        self.counters.count_frame(reply, received)
        if reply.msg_type is MsgType.ERROR:
            raise from_code(reply.body.get("code", "Error"),
                            reply.body.get("detail", ""))
        return reply

    # -- task execution ------------------------------------------------------

    def _stage_inputs(self, task: TaskNode) -> None:
        """Push-transfer every non-local input ref; block until all acked.

        Concurrent consumers of the same ref at the same site share one
        transfer via the staging future table, so each (ref, site) pair
        moves (and is counted) exactly once.
        """
        wait_futs = []
        new_groups: dict[str, list[DataReference]] = {}
        with self.lock:
            seen = set()
            for src in task.edge_inputs():
                ref = self.state.ref_of[src]
                if ref.ref_id in seen:
                    continue
                seen.add(ref.ref_id)
                if task.site_id in self.state.locations[ref.ref_id]:
                    continue
                key = (ref.ref_id, task.site_id)
                fut = self.staging.get(key)
                if fut is None:
                    fut = Future()
                    self.staging[key] = fut
                    new_groups.setdefault(ref.proxy_site, []).append(ref)
                wait_futs.append(fut)

        threads = []
        for source, refs in sorted(new_groups.items()):
            threads.append(threading.Thread(
                target=self._issue_transfer,
                args=(source, refs, task.site_id), daemon=True))
            threads[-1].start()
        for t in threads:
            t.join()
        for fut in wait_futs:
            fut.result()  # re-raises transfer failures

    def _issue_transfer(self, source: str, refs, target_site: str) -> None:
        msg = Message(MsgType.TRANSFER_REQUEST, self.run_id,
                      {"refs": [r.to_json() for r in refs],
                       "target_site": target_site, "sender": ENGINE_SITE})
        try:
            self._call(source, msg)
        except Exception as exc:
            with self.lock:
                for ref in refs:
                    self.staging[(ref.ref_id, target_site)].set_exception(exc)
            return
        with self.lock:
            with self.counters.lock:
                self.counters.p2p_payload += sum(r.size_bytes for r in refs)
            for ref in refs:
                self.state.locations[ref.ref_id].add(target_site)
                self.staging[(ref.ref_id, target_site)].set_result(True)

    def _invoke_inputs(self, task: TaskNode) -> tuple[list, bytes]:
        bindings = []
        payload_parts = []
        for b in task.inputs:
            if b.kind is BindingKind.LITERAL:
                bindings.append({"literal": True, "size": len(b.literal_bytes)})
                payload_parts.append(b.literal_bytes)
            elif self.mode is ExecutionMode.CIRCULATE:
                bindings.append({"ref": self.state.ref_of[b.source_task].to_json()})
            else:
                data = self.payloads[b.source_task]
                bindings.append({"literal": True, "size": len(data)})
                payload_parts.append(data)
        return bindings, b"".join(payload_parts)

    def _run_task(self, task_id: str) -> None:
        task = self.defn.task(task_id)
        start = time.monotonic() - self.t0
        if self.mode is ExecutionMode.CIRCULATE:
            self._stage_inputs(task)
        bindings, payload = self._invoke_inputs(task)
        msg = Message(MsgType.INVOKE_REQUEST, self.run_id,
                      {"task_id": task_id, "service_op": task.service_op,
                       "inputs": bindings, "sender": ENGINE_SITE,
                       "return_payload":
                           self.mode is ExecutionMode.PURE_ORCHESTRATION},
                      payload)
        reply = self._call(task.site_id, msg)
        end = time.monotonic() - self.t0

        ref = DataReference.from_json(reply.body["ref"])
        with self.lock:
            self.state.ref_of[task_id] = ref
            self.state.locations[ref.ref_id] = {ref.proxy_site}
            if self.mode is ExecutionMode.PURE_ORCHESTRATION:
                self.payloads[task_id] = reply.payload
            self.timeline.append((task_id, start, end))

    # -- run driver ----------------------------------------------------------

    def execute(self) -> RunReport:
        validate_dag(self.defn)
        self.t0 = time.monotonic()
        try:
            self._run_all_tasks()
            digests = self._collect_results()
            makespan = time.monotonic() - self.t0
        finally:
            self._flush_all()
        self.timeline.sort(key=lambda entry: (entry[1], entry[0]))
        c = self.counters
        return RunReport(
            run_id=self.run_id,
            mode=self.mode,
            makespan_s=makespan,
            engine_payload_bytes=c.engine_payload,
            engine_control_bytes=c.engine_control,
            p2p_payload_bytes=c.p2p_payload,
            message_counts=dict(c.messages),
            task_timeline=list(self.timeline),
            result_digests=digests,
            task_output_bytes={
                tid: ref.size_bytes for tid, ref in self.state.ref_of.items()
            },
        )

    def _run_all_tasks(self) -> None:
        from .model import ready_tasks
        pending: dict[Future, str] = {}
        with ThreadPoolExecutor(max_workers=self.engine.max_in_flight) as pool:
            def launch():
                ready = ready_tasks(self.defn, self.state.completed)
                for tid in sorted(ready - self.state.in_flight):
                    self.state.in_flight.add(tid)
                    pending[pool.submit(self._run_task, tid)] = tid

            launch()
            while pending:
                done, _ = wait(pending, return_when=FIRST_COMPLETED)
                for fut in done:
                    tid = pending.pop(fut)
                    exc = fut.exception()
                    if exc is not None:
                        for f in pending:
                            f.cancel()
                        raise TaskFailed(tid, exc)
                    self.state.in_flight.discard(tid)
                    self.state.completed.add(tid)
                launch()

    def _collect_results(self) -> dict:
        digests = {}
        for sink in self.defn.sinks:
            ref = self.state.ref_of[sink]
            if self.mode is ExecutionMode.CIRCULATE:
                reply = self._call(ref.proxy_site,
                                   Message(MsgType.MATERIALIZE_REQUEST,
                                           self.run_id,
                                           {"ref_id": ref.ref_id,
                                            "sender": ENGINE_SITE}))
                data = reply.payload
            else:
                data = self.payloads[sink]
            digest = hashlib.sha256(data).hexdigest()
            if digest != ref.content_digest:
                raise RefflowError(
                    f"sink {sink} digest mismatch against its reference")
            digests[sink] = digest
        return digests

    def _flush_all(self) -> None:
        for site in self.engine.topology.site_ids:
            try:
                self._call(site, Message(MsgType.FLUSH_REQUEST, self.run_id,
                                         {"sender": ENGINE_SITE}))
            except RefflowError:
                pass  # cleanup is best-effort on an already-failing run
