"""Command-line entry points: engine, proxy daemon, benchmark harness."""

from __future__ import annotations

import json

import click

from .bench.patterns import BenchmarkSpec
from .bench.report import emit_report
from .bench.runner import load_topology, run_benchmark
from .engine import Engine
from .model import ExecutionMode, parse_workflow
from .proxy import ProxyServer
from .transport.netsim import uniform_topology
from .workloads.registry import WorkloadRegistry

_MODES = {"pure": ExecutionMode.PURE_ORCHESTRATION,
          "circulate": ExecutionMode.CIRCULATE}


# --- engine -----------------------------------------------------------------

@click.group()
def engine_cli():
    """Workflow engine driving already-running proxies."""


@engine_cli.command("run")
@click.option("--workflow", "workflow_path", required=True,
              type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(sorted(_MODES)), required=True)
@click.option("--topology", "topology_path", required=True,
              type=click.Path(exists=True))
@click.option("--seed", type=int, default=0, show_default=True,
              help="Run identifier seed (engine execution is deterministic).")
@click.option("--report", "report_path", required=True, type=click.Path())
def engine_run(workflow_path, mode, topology_path, seed, report_path):
    """Execute one workflow and write its run report as JSON."""
    with open(workflow_path, encoding="utf-8") as fh:
        defn = parse_workflow(fh.read())
    topology = load_topology(topology_path)
    report = Engine(topology).execute(defn, _MODES[mode],
                                      run_id=f"run-{seed}")
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    click.echo(f"run {report.run_id}: makespan {report.makespan_s:.3f}s, "
               f"engine payload {report.engine_payload_bytes} B, "
               f"p2p payload {report.p2p_payload_bytes} B")


# --- proxy ------------------------------------------------------------------

@click.group()
def proxy_cli():
    """Per-site proxy daemon."""


@proxy_cli.command("serve")
@click.option("--site", required=True)
@click.option("--topology", "topology_path", required=True,
              type=click.Path(exists=True))
@click.option("--workloads", default="all", show_default=True,
              help="'all' or a comma-separated list of operation names.")
def proxy_serve(site, topology_path, workloads):
    """Serve one site's proxy until interrupted."""
    topology = load_topology(topology_path)
    registry = WorkloadRegistry.from_spec(workloads)
    server = ProxyServer(site, topology, registry)
    click.echo(f"proxy {site} listening on port {server.port}")
    try:
        server.start()._thread.join()
    except KeyboardInterrupt:
        server.stop()


# --- bench ------------------------------------------------------------------

@click.group()
def bench_cli():
    """Benchmark harness comparing the two execution modes."""


_spec_options = [
    click.option("--pattern", type=click.Choice(
        ["pipeline", "fan_in", "fan_out", "fig3_scenario"]), required=True),
    click.option("--n", type=int, default=3, show_default=True),
    click.option("--payload-mb", type=float, default=10.0, show_default=True),
    click.option("--topology", "topology_path", required=True,
                 type=click.Path(exists=True)),
    click.option("--seed", type=int, default=42, show_default=True),
    click.option("--reps", type=int, default=3, show_default=True),
]


def _apply(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return wrap


@bench_cli.command("run")
@_apply(_spec_options)
@click.option("--out", "out_dir", required=True, type=click.Path())
def bench_run(pattern, n, payload_mb, topology_path, seed, reps, out_dir):
    """Run one benchmark spec and write reports to OUT."""
    spec = BenchmarkSpec(pattern, n, payload_mb, topology_path, seed, reps)
    result = run_benchmark(spec)
    written = emit_report([result], out_dir)
    click.echo(f"{spec.label()}: speedup {result.speedup:.2f}x")
    for path in written:
        click.echo(f"wrote {path}")


@bench_cli.command("suite")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def bench_suite(config_path, out_dir):
    """Run a JSON list of benchmark specs and write one combined report."""
    with open(config_path, encoding="utf-8") as fh:
        entries = json.load(fh)
    results = []
    for entry in entries:
        spec = BenchmarkSpec(
            pattern=entry["pattern"], n=int(entry["n"]),
            payload_mb=float(entry["payload_mb"]),
            topology_file=entry["topology_file"],
            seed=int(entry.get("seed", 42)),
            repetitions=int(entry.get("repetitions", 3)))
        result = run_benchmark(spec)
        click.echo(f"{spec.label()}: speedup {result.speedup:.2f}x")
        results.append(result)
    for path in emit_report(results, out_dir):
        click.echo(f"wrote {path}")


@bench_cli.command("topology")
@click.option("--sites", "n_sites", type=int, default=4, show_default=True)
@click.option("--profile", type=click.Choice(["wan", "free"]), default="wan",
              show_default=True,
              help="wan: 20 ms / 50 Mbit between sites; free: no cost.")
@click.option("--base-port", type=int, default=7601, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def bench_topology(n_sites, profile, base_port, out_path):
    """Write a topology file for N single-host sites."""
    sites = [f"site-{chr(ord('a') + i)}" for i in range(n_sites)]
    if profile == "wan":
        topo = uniform_topology(sites, 20.0, 50.0, base_port=base_port)
    else:
        topo = uniform_topology(sites, 0.0, 0.0, base_port=base_port)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(topo.to_json() + "\n")
    click.echo(f"wrote {out_path}")
