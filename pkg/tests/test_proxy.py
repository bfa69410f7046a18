import hashlib
import json

import pytest

from refflow.errors import (
    ReferenceNotFound,
    StoreConflict,
    TargetUnreachable,
)
from refflow.model import DataReference
from refflow.proxy import Proxy, ProxyStore
from refflow.transport.framing import Message, MsgType
from refflow.transport.netsim import free_topology
from refflow.workloads.registry import WorkloadRegistry


def invoke_msg(task_id, op, inputs, payload=b"", run_id="r1",
               return_payload=False):
    return Message(MsgType.INVOKE_REQUEST, run_id,
                   {"task_id": task_id, "service_op": op, "inputs": inputs,
                    "return_payload": return_payload, "sender": "engine"},
                   payload)


class TestProxyStore:
    def test_write_once_idempotent(self):
        store = ProxyStore()
        store.put("ref-1", b"abc", "r1")
        store.put("ref-1", b"abc", "r1")
        assert store.get("ref-1") == b"abc"

    def test_write_once_conflict(self):
        store = ProxyStore()
        store.put("ref-1", b"abc", "r1")
        with pytest.raises(StoreConflict):
            store.put("ref-1", b"xyz", "r1")

    def test_missing_ref(self):
        with pytest.raises(ReferenceNotFound):
            ProxyStore().get("nope")

    def test_flush_scoped_to_run(self):
        store = ProxyStore()
        store.put("ref-1", b"a", "r1")
        store.put("ref-2", b"b", "r1")
        store.put("ref-3", b"c", "r2")
        store.flush_run("r1")
        assert "ref-1" not in store and "ref-2" not in store
        assert store.get("ref-3") == b"c"

    def test_flush_idempotent(self):
        store = ProxyStore()
        assert store.flush_run("unknown") == 0


class TestHandleInvoke:
    def test_circulate_returns_reference_only(self, cluster):
        proxy = cluster.proxy("a")
        reply = proxy.handle(invoke_msg(
            "WS-1", "identity", [{"literal": True, "size": 3}], b"abc"))
        assert reply.msg_type is MsgType.INVOKE_RESPONSE
        assert reply.payload == b""
        ref = DataReference.from_json(reply.body["ref"])
        assert ref.proxy_site == "a"
        assert ref.size_bytes == 3
        assert proxy.store.get(ref.ref_id) == b"abc"
        assert hashlib.sha256(b"abc").hexdigest() == ref.content_digest

    def test_pure_mode_returns_payload(self, cluster):
        proxy = cluster.proxy("a")
        reply = proxy.handle(invoke_msg(
            "t", "identity", [{"literal": True, "size": 3}], b"abc",
            return_payload=True))
        assert reply.payload == b"abc"

    def test_reference_not_staged(self, cluster):
        ref = DataReference.for_payload("0" * 36, "b", b"zz")
        reply = cluster.proxy("a").handle(invoke_msg(
            "t", "identity", [{"ref": ref.to_json()}]))
        assert reply.msg_type is MsgType.ERROR
        assert reply.body["code"] == "ReferenceNotStaged"

    def test_unknown_service_op(self, cluster):
        reply = cluster.proxy("a").handle(invoke_msg("t", "warp", []))
        assert reply.body["code"] == "UnknownServiceOp"

    def test_service_failure_detail_propagated(self, cluster):
        reply = cluster.proxy("a").handle(invoke_msg(
            "t", "gen_expression",
            [{"literal": True, "size": 2}], b"{}"))
        assert reply.body["code"] == "ServiceFailure"
        assert "gen_expression" in reply.body["detail"]


class TestHandleTransfer:
    def _seed_ref(self, proxy, data, run_id="r1"):
        reply = proxy.handle(invoke_msg(
            "seed", "identity", [{"literal": True, "size": len(data)}], data,
            run_id=run_id))
        return DataReference.from_json(reply.body["ref"])

    def test_push_preserves_bytes(self, cluster):
        source, target = cluster.proxy("a"), cluster.proxy("d")
        ref = self._seed_ref(source, b"0123456789")
        reply = source.handle(Message(
            MsgType.TRANSFER_REQUEST, "r1",
            {"refs": [ref.to_json()], "target_site": "d", "sender": "engine"}))
        assert reply.msg_type is MsgType.TRANSFER_ACK
        assert reply.body["refs"] == [ref.ref_id]
        assert target.store.get(ref.ref_id) == b"0123456789"

    def test_unknown_ref(self, cluster):
        ref = DataReference.for_payload("1" * 36, "a", b"zz")
        reply = cluster.proxy("a").handle(Message(
            MsgType.TRANSFER_REQUEST, "r1",
            {"refs": [ref.to_json()], "target_site": "d", "sender": "engine"}))
        assert reply.body["code"] == "ReferenceNotFound"

    def test_self_transfer_noop(self, cluster):
        proxy = cluster.proxy("a")
        ref = self._seed_ref(proxy, b"data")
        before = set(proxy.store.refs_for_run("r1"))
        reply = proxy.handle(Message(
            MsgType.TRANSFER_REQUEST, "r1",
            {"refs": [ref.to_json()], "target_site": "a", "sender": "engine"}))
        assert reply.msg_type is MsgType.TRANSFER_ACK
        assert set(proxy.store.refs_for_run("r1")) == before

    def test_target_unreachable_after_retries(self, monkeypatch):
        import refflow.proxy as proxy_mod
        monkeypatch.setattr(proxy_mod, "P2P_BACKOFF_S", 0.001)
        topo = free_topology(["a", "b"])
        topo = topo.with_addr("b", "127.0.0.1", 1)  # nothing listens there
        proxy = Proxy("a", topo, WorkloadRegistry())
        ref = self._seed_ref(proxy, b"data")
        with pytest.raises(TargetUnreachable):
            proxy.handle_transfer(Message(
                MsgType.TRANSFER_REQUEST, "r1",
                {"refs": [ref.to_json()], "target_site": "b",
                 "sender": "engine"}))


class TestMaterializeAndFlush:
    def test_materialize_matches_digest(self, cluster):
        proxy = cluster.proxy("d")
        reply = proxy.handle(invoke_msg(
            "mine", "identity", [{"literal": True, "size": 5}], b"mined"))
        ref = DataReference.from_json(reply.body["ref"])
        out = proxy.handle(Message(MsgType.MATERIALIZE_REQUEST, "r1",
                                   {"ref_id": ref.ref_id, "sender": "engine"}))
        assert out.msg_type is MsgType.MATERIALIZE_RESPONSE
        assert hashlib.sha256(out.payload).hexdigest() == ref.content_digest
        again = proxy.handle(Message(MsgType.MATERIALIZE_REQUEST, "r1",
                                     {"ref_id": ref.ref_id, "sender": "engine"}))
        assert again.payload == out.payload

    def test_materialize_after_flush(self, cluster):
        proxy = cluster.proxy("d")
        reply = proxy.handle(invoke_msg(
            "t", "identity", [{"literal": True, "size": 1}], b"x"))
        ref = DataReference.from_json(reply.body["ref"])
        proxy.handle(Message(MsgType.FLUSH_REQUEST, "r1", {"sender": "engine"}))
        out = proxy.handle(Message(MsgType.MATERIALIZE_REQUEST, "r1",
                                   {"ref_id": ref.ref_id, "sender": "engine"}))
        assert out.body["code"] == "ReferenceNotFound"

    def test_flush_leaves_other_runs(self, cluster):
        proxy = cluster.proxy("a")
        r1 = proxy.handle(invoke_msg(
            "t", "identity", [{"literal": True, "size": 1}], b"x", run_id="r1"))
        r2 = proxy.handle(invoke_msg(
            "t", "identity", [{"literal": True, "size": 1}], b"y", run_id="r2"))
        proxy.handle(Message(MsgType.FLUSH_REQUEST, "r1", {"sender": "engine"}))
        ref2 = DataReference.from_json(r2.body["ref"])
        assert proxy.store.get(ref2.ref_id) == b"y"
        assert DataReference.from_json(r1.body["ref"]).ref_id not in proxy.store
