"""Simulated multi-site network: topology, per-link cost model, delivery.

The topology assigns every site a daemon address and a pair of square
matrices (latency, bandwidth) over sites plus the engine. WAN effects are
imposed at send time: before a frame is written to a (loopback) socket the
sender sleeps for the link's latency plus the serialization time of the
frame. Diagonal entries are latency 0 / bandwidth 0, where bandwidth 0 is
the sentinel for "uncapped". No cross-flow contention is modelled.

Topology file (JSON): {"sites": [{"id": str, "addr": "host:port"}],
"latency_ms": [[..]], "bandwidth_mbit": [[..]]} where matrix index order is
row 0 = engine, then the sites in listed order.
"""

from __future__ import annotations

import json
import socket
import time
from dataclasses import dataclass

from ..errors import MalformedDocument, UnknownSite
from .framing import Message, decode, encode, read_frame

ENGINE_SITE = "engine"


@dataclass(frozen=True)
class Topology:
    site_ids: tuple[str, ...]            # excludes the engine
    addrs: dict                          # site_id -> (host, port)
    latency_s: tuple                     # row-major, engine first
    bandwidth_bytes_per_s: tuple         # 0 = uncapped
    _index: dict

    @staticmethod
    def build(site_ids, addrs, latency_ms, bandwidth_mbit) -> "Topology":
        n = len(site_ids) + 1
        if len(latency_ms) != n or len(bandwidth_mbit) != n:
            raise MalformedDocument("matrix dimension must be n_sites + 1")
        for row in list(latency_ms) + list(bandwidth_mbit):
            if len(row) != n:
                raise MalformedDocument("matrices must be square")
            if any(v < 0 for v in row):
                raise MalformedDocument("matrix entries must be non-negative")
        lat = tuple(tuple(v / 1000.0 for v in row) for row in latency_ms)
        bw = tuple(tuple(v * 1e6 / 8.0 for v in row) for row in bandwidth_mbit)
        index = {ENGINE_SITE: 0}
        for i, sid in enumerate(site_ids):
            index[sid] = i + 1
        return Topology(tuple(site_ids), dict(addrs), lat, bw, index)

    @staticmethod
    def from_json(text: str) -> "Topology":
        try:
            doc = json.loads(text)
            sites = [s["id"] for s in doc["sites"]]
            addrs = {}
            for s in doc["sites"]:
                host, port = s["addr"].rsplit(":", 1)
                addrs[s["id"]] = (host, int(port))
            return Topology.build(sites, addrs, doc["latency_ms"],
                                  doc["bandwidth_mbit"])
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedDocument(f"bad topology document: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps({
            "sites": [{"id": s, "addr": f"{self.addrs[s][0]}:{self.addrs[s][1]}"}
                      for s in self.site_ids],
            "latency_ms": [[v * 1000.0 for v in row] for row in self.latency_s],
            "bandwidth_mbit": [[v * 8.0 / 1e6 for v in row]
                               for row in self.bandwidth_bytes_per_s],
        })

    def addr(self, site_id: str):
        try:
            return self.addrs[site_id]
        except KeyError:
            raise UnknownSite(site_id) from None

    def with_addr(self, site_id: str, host: str, port: int) -> "Topology":
        addrs = dict(self.addrs)
        addrs[site_id] = (host, port)
        return Topology(self.site_ids, addrs, self.latency_s,
                        self.bandwidth_bytes_per_s, self._index)

    def link_delay(self, from_site: str, to_site: str, n_bytes: int) -> float:
        """Seconds to deliver n_bytes over the link: latency + serialization."""
        try:
            i, j = self._index[from_site], self._index[to_site]
        except KeyError as exc:
            raise UnknownSite(str(exc)) from None
        delay = self.latency_s[i][j]
        bw = self.bandwidth_bytes_per_s[i][j]
        if bw > 0:
            delay += n_bytes / bw
        return delay


def link_delay(topology: Topology, from_site: str, to_site: str,
               n_bytes: int) -> float:
    return topology.link_delay(from_site, to_site, n_bytes)


def uniform_topology(site_ids, latency_ms: float, bandwidth_mbit: float,
                     host: str = "127.0.0.1", base_port: int = 0) -> Topology:
    """Same cost on every inter-site link, free local links.

    base_port 0 leaves ports unassigned (the harness binds ephemeral ports
    and patches them in via with_addr).
    """
    n = len(site_ids) + 1
    lat = [[0.0 if i == j else latency_ms for j in range(n)] for i in range(n)]
    bw = [[0.0 if i == j else bandwidth_mbit for j in range(n)] for i in range(n)]
    addrs = {sid: (host, base_port + k if base_port else 0)
             for k, sid in enumerate(site_ids)}
    return Topology.build(site_ids, addrs, lat, bw)


def free_topology(site_ids, **kwargs) -> Topology:
    """Zero latency, uncapped bandwidth everywhere."""
    return uniform_topology(site_ids, 0.0, 0.0, **kwargs)


def send_message(sock, topology: Topology, from_site: str, to_site: str,
                 msg: Message) -> int:
    """Encode, apply the link delay, write the frame; returns frame length."""
    frame = encode(msg)
    delay = topology.link_delay(from_site, to_site, len(frame))
    if delay > 0:
        time.sleep(delay)
    sock.sendall(frame)
    return len(frame)


def recv_message(sock) -> tuple[Message, int]:
    """Read one frame; returns (message, frame length)."""
    frame = read_frame(sock)
    return decode(frame), len(frame)


def request(topology: Topology, from_site: str, to_site: str, msg: Message,
            timeout: float = 300.0) -> tuple[Message, int, int]:
    """One request/response exchange with to_site's daemon.

    Returns (response, sent_frame_len, received_frame_len). The response
    leg's delay is applied by the responder.
    """
    host, port = topology.addr(to_site)
    with socket.create_connection((host, port), timeout=timeout) as sock:
        sock.settimeout(timeout)
        sent = send_message(sock, topology, from_site, to_site, msg)
        reply, received = recv_message(sock)
    return reply, sent, received
