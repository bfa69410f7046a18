"""Proxy daemon colocated with a site's services.

A proxy invokes its local service operations, stores their outputs under
fresh references, pushes payloads to peer proxies when the engine says so,
and serves materialization of final results. Payload bytes only ever leave
a proxy toward a peer proxy (push) or, at the very end of a run, toward the
engine (materialize / pass-through mode).

Staging is push-based and engine-instructed: a proxy never pulls a missing
input, it fails with ReferenceNotStaged so transfer-planning bugs surface
loudly.
"""

from __future__ import annotations

import socketserver
import threading
import time
import uuid
from dataclasses import dataclass

from .errors import (
    ReferenceNotFound,
    ReferenceNotStaged,
    RefflowError,
    StoreConflict,
    TargetUnreachable,
)
from .model import DataReference
from .transport.framing import Message, MsgType
from .transport.netsim import Topology, recv_message, request, send_message
from .workloads.registry import WorkloadRegistry

P2P_RETRIES = 3
P2P_BACKOFF_S = 0.1


@dataclass
class _Entry:
    payload: bytes
    run_id: str
    created_at: float


class ProxyStore:
    """Write-once ref_id -> payload map, scoped per run for flushing.

    Duplicate insert of identical bytes is a no-op; of different bytes a
    hard error. Concurrent readers and inserters are safe.
    """

    def __init__(self):
        self._entries: dict[str, _Entry] = {}
        self._lock = threading.Lock()

    def put(self, ref_id: str, payload: bytes, run_id: str) -> None:
        with self._lock:
            existing = self._entries.get(ref_id)
            if existing is not None:
                if existing.payload != payload:
                    raise StoreConflict(ref_id)
                return
            self._entries[ref_id] = _Entry(payload, run_id, time.time())

    def get(self, ref_id: str) -> bytes:
        with self._lock:
            entry = self._entries.get(ref_id)
        if entry is None:
            raise ReferenceNotFound(ref_id)
        return entry.payload

    def __contains__(self, ref_id: str) -> bool:
        with self._lock:
            return ref_id in self._entries

    def flush_run(self, run_id: str) -> int:
        with self._lock:
            victims = [k for k, e in self._entries.items() if e.run_id == run_id]
            for k in victims:
                del self._entries[k]
        return len(victims)

    def refs_for_run(self, run_id: str) -> list[str]:
        with self._lock:
            return [k for k, e in self._entries.items() if e.run_id == run_id]


class Proxy:
    """Protocol logic for one site, independent of the socket server."""

    def __init__(self, site_id: str, topology: Topology,
                 registry: WorkloadRegistry):
        self.site_id = site_id
        self.topology = topology
        self.store = ProxyStore()
        self.registry = registry

    # -- dispatch ------------------------------------------------------------

    def handle(self, msg: Message) -> Message:
        try:
            if msg.msg_type is MsgType.INVOKE_REQUEST:
                return self.handle_invoke(msg)
            if msg.msg_type is MsgType.TRANSFER_REQUEST:
                return self.handle_transfer(msg)
            if msg.msg_type is MsgType.MATERIALIZE_REQUEST:
                return self.handle_materialize(msg)
            if msg.msg_type is MsgType.FLUSH_REQUEST:
                return self.handle_flush(msg)
            raise RefflowError(f"unexpected message {msg.msg_type.value}")
        except RefflowError as exc:
            return Message(MsgType.ERROR, msg.run_id,
                           {"code": exc.code, "detail": str(exc),
                            "sender": self.site_id})

    # -- handlers ------------------------------------------------------------

    def handle_invoke(self, msg: Message) -> Message:
        inputs = []
        cursor = 0
        for binding in msg.body["inputs"]:
            if "ref" in binding:
                ref = DataReference.from_json(binding["ref"])
                if ref.ref_id not in self.store:
                    raise ReferenceNotStaged(
                        f"{ref.ref_id} not staged at {self.site_id}")
                inputs.append(self.store.get(ref.ref_id))
            else:
                size = int(binding["size"])
                inputs.append(msg.payload[cursor:cursor + size])
                cursor += size

        output = self.registry.invoke(msg.body["service_op"], inputs)
        ref = DataReference.for_payload(str(uuid.uuid4()), self.site_id, output)
        self.store.put(ref.ref_id, output, msg.run_id)

        body = {"task_id": msg.body["task_id"], "ref": ref.to_json(),
                "sender": self.site_id}
        payload = output if msg.body.get("return_payload") else b""
        return Message(MsgType.INVOKE_RESPONSE, msg.run_id, body, payload)

    def handle_transfer(self, msg: Message) -> Message:
        refs = [DataReference.from_json(r) for r in msg.body["refs"]]
        target = msg.body["target_site"]

        if msg.payload:
            # inbound push from a peer: store each segment under its ref_id
            cursor = 0
            for ref in refs:
                segment = msg.payload[cursor:cursor + ref.size_bytes]
                cursor += ref.size_bytes
                received = DataReference.for_payload(ref.ref_id, self.site_id,
                                                     segment)
                if received.content_digest != ref.content_digest:
                    raise StoreConflict(
                        f"digest mismatch on transferred ref {ref.ref_id}")
                self.store.put(ref.ref_id, segment, msg.run_id)
            return self._ack(msg, refs)

        if target == self.site_id:
            # self-transfer: everything is already local, nothing moves
            for ref in refs:
                if ref.ref_id not in self.store:
                    raise ReferenceNotFound(ref.ref_id)
            return self._ack(msg, refs)

        payload = b"".join(self.store.get(ref.ref_id) for ref in refs)
        push = Message(MsgType.TRANSFER_REQUEST, msg.run_id,
                       {"refs": [r.to_json() for r in refs],
                        "target_site": target, "sender": self.site_id},
                       payload)
        reply = self._push_with_retry(target, push)
        if reply.msg_type is MsgType.ERROR:
            raise RefflowError(f"peer rejected transfer: {reply.body}")
        return self._ack(msg, refs)

    def _ack(self, msg: Message, refs) -> Message:
        return Message(MsgType.TRANSFER_ACK, msg.run_id,
                       {"refs": [r.ref_id for r in refs],
                        "sender": self.site_id})

    def _push_with_retry(self, target: str, push: Message) -> Message:
        backoff = P2P_BACKOFF_S
        last_exc = None
        for _ in range(P2P_RETRIES):
            try:
                reply, _, _ = request(self.topology, self.site_id, target, push)
                return reply
            except OSError as exc:
                last_exc = exc
                time.sleep(backoff)
                backoff *= 2
        raise TargetUnreachable(f"{target}: {last_exc}")

    def handle_materialize(self, msg: Message) -> Message:
        payload = self.store.get(msg.body["ref_id"])
        return Message(MsgType.MATERIALIZE_RESPONSE, msg.run_id,
                       {"ref_id": msg.body["ref_id"], "sender": self.site_id},
                       payload)

    def handle_flush(self, msg: Message) -> Message:
        self.store.flush_run(msg.run_id)
        return Message(MsgType.FLUSH_ACK, msg.run_id, {"sender": self.site_id})


class ProxyServer:
    """Threaded TCP server wrapping a Proxy; one request per connection."""

    def __init__(self, site_id: str, topology: Topology,
                 registry: WorkloadRegistry | None = None):
        self.proxy = Proxy(site_id, topology,
                           registry if registry is not None else WorkloadRegistry())
        proxy = self.proxy

        class Handler(socketserver.BaseRequestHandler):
            def handle(self):
                try:
                    msg, _ = recv_message(self.request)
                except Exception:
                    return
                reply = proxy.handle(msg)
                sender = msg.body.get("sender", "engine")
                try:
                    send_message(self.request, proxy.topology,
                                 proxy.site_id, sender, reply)
                except OSError:
                    pass

        host, port = topology.addr(site_id)
        self._server = socketserver.ThreadingTCPServer((host, port), Handler)
        self._server.daemon_threads = True
        self._server.allow_reuse_address = True
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    def start(self) -> "ProxyServer":
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        name=f"proxy-{self.proxy.site_id}",
                                        daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def rebind_topology(self, topology: Topology) -> None:
        """Swap in a topology with the final (ephemeral) port assignments."""
        self.proxy.topology = topology


def start_proxies(topology: Topology,
                  registry: WorkloadRegistry | None = None
                  ) -> tuple[Topology, list[ProxyServer]]:
    """Launch one in-process proxy per site; returns the port-patched topology.

    Sites with port 0 in the topology get an ephemeral port, and the patched
    topology is pushed to every proxy so p2p routing works.
    """
    servers = []
    topo = topology
    for site in topology.site_ids:
        server = ProxyServer(site, topo, registry)
        host, _ = topo.addr(site)
        topo = topo.with_addr(site, host, server.port)
        servers.append(server)
    for server in servers:
        server.rebind_topology(topo)
        server.start()
    return topo, servers
