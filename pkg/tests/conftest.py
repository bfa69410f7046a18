import json

import pytest

from refflow import Engine, start_proxies
from refflow.transport.netsim import free_topology


def fig3_document() -> str:
    """Three laboratory sources at sites a, b, c feeding a miner at site d."""
    params = lambda seed, off: json.dumps({  # noqa: E731
        "seed": seed, "n_genes": 8, "n_regions": 20,
        "density": 0.5, "region_offset": off})
    mine = json.dumps({"min_support": 0.1, "min_confidence": 0.5,
                       "max_itemset": 2})
    b64 = lambda s: __import__("base64").b64encode(s.encode()).decode()  # noqa: E731
    tasks = [
        {"task_id": f"WS-{i + 1}", "site_id": site, "service_op": "gen_expression",
         "inputs": [{"literal_b64": b64(params(7 + i, 20 * i))}],
         "output_name": "matrix"}
        for i, site in enumerate(["a", "b", "c"])
    ]
    tasks.append({
        "task_id": "mine", "site_id": "d", "service_op": "collate_mine",
        "inputs": [{"literal_b64": b64(mine)},
                   {"edge": "WS-1"}, {"edge": "WS-2"}, {"edge": "WS-3"}],
        "output_name": "rules"})
    return json.dumps({"workflow_id": "fig3", "tasks": tasks, "sinks": ["mine"]})


class Cluster:
    """In-process proxies plus an engine over a zero-cost network."""

    def __init__(self, sites=("a", "b", "c", "d")):
        self.topology, self.servers = start_proxies(free_topology(list(sites)))
        self.engine = Engine(self.topology)

    def proxy(self, site):
        for server in self.servers:
            if server.proxy.site_id == site:
                return server.proxy
        raise KeyError(site)

    def stop(self):
        for server in self.servers:
            server.stop()


@pytest.fixture
def cluster():
    c = Cluster()
    yield c
    c.stop()
