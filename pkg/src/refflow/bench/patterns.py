"""Canonical benchmark workflow patterns.

pipeline       chain of n tasks on round-robin sites: a generator, then
               size-preserving shuffle stages, ending in a mining stage
               (for n >= 2) so the final result is small.
fan_in         n generator sources on distinct sites feeding one
               collate-and-mine sink.
fan_out        one generator source feeding n mining consumers on distinct
               sites.
fig3_scenario  three laboratory sources (WS-1..WS-3) on distinct sites
               feeding a data-mining sink on a fourth site.

Generator tasks are parameterized to emit roughly payload_mb of matrix
data; sources get disjoint region-id ranges so collation is well defined.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..errors import BadParams, TooFewSites
from ..model import InputBinding, TaskNode, WorkflowDefinition

PATTERNS = ("pipeline", "fan_in", "fan_out", "fig3_scenario")

# Matrix geometry for generated workloads. With 256 genes a region costs
# ~52 wire bytes (packed cells in base64 plus its id in the region list).
N_GENES = 256
DENSITY = 0.25
_BYTES_PER_REGION = 52.0

# Mining thresholds sit above the cell density so the mining stage scans
# the collated matrix but emits a compact rule set; the benchmark subject
# is data movement, not miner throughput.
MINE_PARAMS = {"min_support": 0.4, "min_confidence": 0.5, "max_itemset": 2}


@dataclass(frozen=True)
class BenchmarkSpec:
    pattern: str
    n: int
    payload_mb: float
    topology_file: str
    seed: int
    repetitions: int = 3

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise BadParams(f"unknown pattern {self.pattern!r}")
        if self.n < 1:
            raise BadParams("n must be >= 1")
        if self.payload_mb <= 0:
            raise BadParams("payload_mb must be > 0")
        if self.repetitions < 1:
            raise BadParams("repetitions must be >= 1")

    def label(self) -> str:
        return f"{self.pattern}-n{self.n}-{self.payload_mb:g}MB"


def regions_for_payload(payload_mb: float) -> int:
    return max(1, round(payload_mb * 1e6 / _BYTES_PER_REGION))


def _gen_params(seed: int, n_regions: int, region_offset: int) -> bytes:
    return json.dumps({
        "seed": seed, "n_genes": N_GENES, "n_regions": n_regions,
        "density": DENSITY, "region_offset": region_offset,
    }).encode()


def _mine_params(**overrides) -> bytes:
    return json.dumps({**MINE_PARAMS, **overrides}).encode()


def build_pattern(spec: BenchmarkSpec, site_ids) -> WorkflowDefinition:
    """Construct the workflow for a spec over the given sites."""
    sites = list(site_ids)
    n_regions = regions_for_payload(spec.payload_mb)
    wf_id = spec.label()

    if spec.pattern == "pipeline":
        if not sites:
            raise TooFewSites("pipeline needs at least one site")
        tasks = [TaskNode(
            "stage-001", sites[0], "gen_expression",
            (InputBinding.literal(_gen_params(spec.seed, n_regions, 0)),),
            "matrix")]
        for i in range(2, spec.n + 1):
            prev = f"stage-{i - 1:03d}"
            tid = f"stage-{i:03d}"
            site = sites[(i - 1) % len(sites)]
            if i == spec.n:
                tasks.append(TaskNode(
                    tid, site, "mine_rules",
                    (InputBinding.literal(_mine_params()),
                     InputBinding.edge(prev)), "rules"))
            else:
                tasks.append(TaskNode(
                    tid, site, "shuffle_regions",
                    (InputBinding.literal(json.dumps({"seed": spec.seed + i}).encode()),
                     InputBinding.edge(prev)), "matrix"))
        return WorkflowDefinition(wf_id, tuple(tasks),
                                  (f"stage-{spec.n:03d}",))

    if spec.pattern == "fan_in":
        if len(sites) < spec.n + 1:
            raise TooFewSites(f"fan_in n={spec.n} needs {spec.n + 1} sites")
        tasks = [TaskNode(
            f"src-{i + 1:03d}", sites[i], "gen_expression",
            (InputBinding.literal(
                _gen_params(spec.seed + i, n_regions, i * n_regions)),),
            "matrix") for i in range(spec.n)]
        mine_inputs = (InputBinding.literal(_mine_params()),
                       *(InputBinding.edge(f"src-{i + 1:03d}")
                         for i in range(spec.n)))
        tasks.append(TaskNode("mine", sites[spec.n], "collate_mine",
                              mine_inputs, "rules"))
        return WorkflowDefinition(wf_id, tuple(tasks), ("mine",))

    if spec.pattern == "fan_out":
        if len(sites) < spec.n + 1:
            raise TooFewSites(f"fan_out n={spec.n} needs {spec.n + 1} sites")
        tasks = [TaskNode(
            "src", sites[0], "gen_expression",
            (InputBinding.literal(_gen_params(spec.seed, n_regions, 0)),),
            "matrix")]
        sinks = []
        for i in range(spec.n):
            tid = f"mine-{i + 1:03d}"
            tasks.append(TaskNode(
                tid, sites[i + 1], "mine_rules",
                (InputBinding.literal(
                    _mine_params(min_support=MINE_PARAMS["min_support"] + 0.01 * i)),
                 InputBinding.edge("src")), "rules"))
            sinks.append(tid)
        return WorkflowDefinition(wf_id, tuple(tasks), tuple(sinks))

    # fig3_scenario: three laboratories plus one data-mining site
    if len(sites) < 4:
        raise TooFewSites("fig3_scenario needs 4 sites")
    tasks = [TaskNode(
        f"WS-{i + 1}", sites[i], "gen_expression",
        (InputBinding.literal(
            _gen_params(spec.seed + i, n_regions, i * n_regions)),),
        "matrix") for i in range(3)]
    tasks.append(TaskNode(
        "mine", sites[3], "collate_mine",
        (InputBinding.literal(_mine_params()),
         InputBinding.edge("WS-1"), InputBinding.edge("WS-2"),
         InputBinding.edge("WS-3")), "rules"))
    return WorkflowDefinition(wf_id, tuple(tasks), ("mine",))
