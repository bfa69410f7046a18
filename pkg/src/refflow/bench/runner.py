"""Benchmark execution: both modes, repeated runs, medians and speedup."""

from __future__ import annotations

import statistics
from dataclasses import dataclass

from ..engine import Engine, RunReport
from ..errors import EquivalenceViolation
from ..model import ExecutionMode, WorkflowDefinition
from ..proxy import start_proxies
from ..transport.netsim import Topology
from .patterns import BenchmarkSpec, build_pattern


@dataclass(frozen=True)
class ModeStats:
    makespan_s: float           # median over repetitions
    engine_payload_bytes: int
    engine_control_bytes: int
    p2p_payload_bytes: int


@dataclass(frozen=True)
class BenchmarkResult:
    spec: BenchmarkSpec
    per_mode: dict              # ExecutionMode -> ModeStats
    speedup: float              # pure makespan / circulate makespan
    result_digests: dict        # sink -> digest (identical across modes)


def load_topology(path: str) -> Topology:
    with open(path, encoding="utf-8") as fh:
        return Topology.from_json(fh.read())


def run_workflow_both_modes(defn: WorkflowDefinition, topology: Topology,
                            repetitions: int) -> dict:
    """Run every mode x repetition over freshly started in-process proxies.

    Returns ExecutionMode -> list[RunReport]. Verifies that sink digests
    agree across every run and that byte counters are identical across
    repetitions of the same mode (they depend only on the traffic model).
    """
    topo, servers = start_proxies(topology)
    try:
        engine = Engine(topo)
        reports: dict = {mode: [] for mode in ExecutionMode}
        for rep in range(repetitions):
            for mode in ExecutionMode:
                reports[mode].append(engine.execute(defn, mode))
    finally:
        for server in servers:
            server.stop()

    baseline = reports[ExecutionMode.PURE_ORCHESTRATION][0]
    for mode, runs in reports.items():
        for report in runs:
            if report.result_digests != baseline.result_digests:
                raise EquivalenceViolation(
                    f"{defn.workflow_id}: sink digests differ between "
                    f"{baseline.mode.value} and {report.mode.value}")
        first = runs[0]
        for report in runs[1:]:
            if (report.engine_payload_bytes, report.p2p_payload_bytes) != \
                    (first.engine_payload_bytes, first.p2p_payload_bytes):
                raise EquivalenceViolation(
                    f"{defn.workflow_id}: byte counters vary across "
                    f"repetitions in {mode.value} mode")
    return reports


def summarize(reports: list[RunReport]) -> ModeStats:
    return ModeStats(
        makespan_s=statistics.median(r.makespan_s for r in reports),
        engine_payload_bytes=reports[0].engine_payload_bytes,
        engine_control_bytes=reports[0].engine_control_bytes,
        p2p_payload_bytes=reports[0].p2p_payload_bytes,
    )


def run_benchmark(spec: BenchmarkSpec,
                  topology: Topology | None = None) -> BenchmarkResult:
    if topology is None:
        topology = load_topology(spec.topology_file)
    defn = build_pattern(spec, topology.site_ids)
    reports = run_workflow_both_modes(defn, topology, spec.repetitions)
    per_mode = {mode: summarize(runs) for mode, runs in reports.items()}
    speedup = (per_mode[ExecutionMode.PURE_ORCHESTRATION].makespan_s
               / per_mode[ExecutionMode.CIRCULATE].makespan_s)
    return BenchmarkResult(
        spec=spec,
        per_mode=per_mode,
        speedup=speedup,
        result_digests=dict(reports[ExecutionMode.CIRCULATE][0].result_digests),
    )
