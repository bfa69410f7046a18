"""Reference-passing workflow engine with colocated data-staging proxies.

Centralized control flow, decentralized data flow: the engine exchanges
only control messages and data references with lightweight proxies, while
bulk intermediate data moves proxy-to-proxy on engine instruction.
"""

from .engine import Engine, RunReport, plan_transfers, traffic_model
from .model import (
    DataReference,
    ExecutionMode,
    InputBinding,
    TaskNode,
    WorkflowDefinition,
    parse_workflow,
    ready_tasks,
    serialize_workflow,
    validate_dag,
)
from .proxy import Proxy, ProxyServer, ProxyStore, start_proxies
from .transport.netsim import Topology, free_topology, link_delay, uniform_topology

__all__ = [
    "DataReference",
    "Engine",
    "ExecutionMode",
    "InputBinding",
    "Proxy",
    "ProxyServer",
    "ProxyStore",
    "RunReport",
    "TaskNode",
    "Topology",
    "WorkflowDefinition",
    "free_topology",
    "link_delay",
    "parse_workflow",
    "plan_transfers",
    "ready_tasks",
    "serialize_workflow",
    "start_proxies",
    "traffic_model",
    "uniform_topology",
    "validate_dag",
]

__version__ = "0.1.0"
