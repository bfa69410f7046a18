"""Benchmark report emission: CSV, speedup table, rendered figures."""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..errors import BadParams  # noqa: E402
from ..model import ExecutionMode  # noqa: E402
from .runner import BenchmarkResult  # noqa: E402

CSV_COLUMNS = ["pattern", "n", "payload_mb", "mode", "makespan_s",
               "engine_payload_bytes", "p2p_payload_bytes", "speedup"]

_MODE_LABELS = {
    ExecutionMode.PURE_ORCHESTRATION: "pure",
    ExecutionMode.CIRCULATE: "circulate",
}


def emit_report(results: list[BenchmarkResult], out_dir: str) -> list[str]:
    """Write results.csv, summary.txt and figures; returns written paths."""
    if not results:
        raise BadParams("no benchmark results to report")
    os.makedirs(out_dir, exist_ok=True)
    written = [
        _write_csv(results, os.path.join(out_dir, "results.csv")),
        _write_summary(results, os.path.join(out_dir, "summary.txt")),
        _plot_speedup(results, os.path.join(out_dir, "speedup.svg")),
        _plot_traffic(results, os.path.join(out_dir, "traffic.svg")),
    ]
    return written


def _write_csv(results, path) -> str:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for res in results:
            for mode in (ExecutionMode.PURE_ORCHESTRATION,
                         ExecutionMode.CIRCULATE):
                stats = res.per_mode[mode]
                writer.writerow([
                    res.spec.pattern, res.spec.n,
                    repr(res.spec.payload_mb), _MODE_LABELS[mode],
                    repr(stats.makespan_s), stats.engine_payload_bytes,
                    stats.p2p_payload_bytes, repr(res.speedup),
                ])
    return path


def _write_summary(results, path) -> str:
    header = f"{'benchmark':<28} {'pure (s)':>10} {'circulate (s)':>14} {'speedup':>9}"
    lines = [header, "-" * len(header)]
    for res in results:
        pure = res.per_mode[ExecutionMode.PURE_ORCHESTRATION].makespan_s
        circ = res.per_mode[ExecutionMode.CIRCULATE].makespan_s
        lines.append(f"{res.spec.label():<28} {pure:>10.3f} {circ:>14.3f} "
                     f"{res.speedup:>8.2f}x")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _plot_speedup(results, path) -> str:
    labels = [res.spec.label() for res in results]
    speedups = [res.speedup for res in results]
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(results)), 4))
    ax.bar(range(len(results)), speedups, color="#4878cf")
    ax.axhline(1.0, color="grey", linewidth=0.8, linestyle="--")
    ax.set_xticks(range(len(results)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("makespan speedup (pure / reference-passing)")
    ax.set_title("Reference-passing dataflow vs pure orchestration")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def _plot_traffic(results, path) -> str:
    labels = [res.spec.label() for res in results]
    idx = range(len(results))
    pure_engine = [res.per_mode[ExecutionMode.PURE_ORCHESTRATION]
                   .engine_payload_bytes / 1e6 for res in results]
    circ_engine = [res.per_mode[ExecutionMode.CIRCULATE]
                   .engine_payload_bytes / 1e6 for res in results]
    circ_p2p = [res.per_mode[ExecutionMode.CIRCULATE]
                .p2p_payload_bytes / 1e6 for res in results]
    width = 0.28
    fig, ax = plt.subplots(figsize=(max(6, 1.4 * len(results)), 4))
    ax.bar([i - width for i in idx], pure_engine, width,
           label="pure: engine payload", color="#d65f5f")
    ax.bar(list(idx), circ_engine, width,
           label="circulate: engine payload", color="#4878cf")
    ax.bar([i + width for i in idx], circ_p2p, width,
           label="circulate: proxy-to-proxy", color="#6acc65")
    ax.set_xticks(list(idx))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("payload traffic (MB)")
    ax.set_title("Where the bytes travel")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
