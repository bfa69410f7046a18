"""Length-prefixed wire framing for engine<->proxy and proxy<->proxy traffic.

Frame layout: 4-byte big-endian length N, then N bytes consisting of a JSON
header, a single 0x0A separator, and the raw payload (possibly empty). The
header never contains a raw newline (json.dumps emits none), so the first
0x0A splits header from payload unambiguously.

Only InvokeRequest, InvokeResponse, TransferRequest and MaterializeResponse
may carry payload bytes; everything else is control-only. Payload segment
boundaries for multi-part payloads are derived from sizes in the header
(literal input sizes, reference size_bytes), never from in-band prefixes,
so the payload portion of a frame is exactly the raw application bytes.
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass, field

from ..errors import BadHeader, PayloadOnControlMessage, TruncatedFrame


class MsgType(enum.Enum):
    INVOKE_REQUEST = "InvokeRequest"
    INVOKE_RESPONSE = "InvokeResponse"
    TRANSFER_REQUEST = "TransferRequest"
    TRANSFER_ACK = "TransferAck"
    MATERIALIZE_REQUEST = "MaterializeRequest"
    MATERIALIZE_RESPONSE = "MaterializeResponse"
    FLUSH_REQUEST = "FlushRequest"
    FLUSH_ACK = "FlushAck"
    ERROR = "Error"


PAYLOAD_CAPABLE = {
    MsgType.INVOKE_REQUEST,
    MsgType.INVOKE_RESPONSE,
    MsgType.TRANSFER_REQUEST,
    MsgType.MATERIALIZE_RESPONSE,
}

_SEP = b"\x0a"
_LEN = struct.Struct(">I")


@dataclass(frozen=True)
class Message:
    msg_type: MsgType
    run_id: str
    body: dict = field(default_factory=dict)
    payload: bytes = b""


def encode(msg: Message) -> bytes:
    """Serialize a message to one frame. decode(encode(m)) == m."""
    if msg.payload and msg.msg_type not in PAYLOAD_CAPABLE:
        raise PayloadOnControlMessage(
            f"{msg.msg_type.value} may not carry payload bytes")
    header = dict(msg.body)
    header["msg_type"] = msg.msg_type.value
    header["run_id"] = msg.run_id
    header_bytes = json.dumps(header, separators=(",", ":"), sort_keys=True).encode()
    body = header_bytes + _SEP + msg.payload
    return _LEN.pack(len(body)) + body


def decode(data: bytes) -> Message:
    """Parse one complete frame back into a Message."""
    if len(data) < 4:
        raise TruncatedFrame("frame shorter than length prefix")
    (n,) = _LEN.unpack_from(data)
    if len(data) < 4 + n:
        raise TruncatedFrame(f"declared {n} bytes, got {len(data) - 4}")
    body = data[4:4 + n]
    sep = body.find(_SEP)
    if sep < 0:
        raise BadHeader("missing header separator")
    try:
        header = json.loads(body[:sep].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BadHeader(f"invalid header JSON: {exc}") from exc
    if not isinstance(header, dict):
        raise BadHeader("header must be an object")
    try:
        msg_type = MsgType(header.pop("msg_type"))
    except (KeyError, ValueError) as exc:
        raise BadHeader(f"unknown msg_type: {exc}") from exc
    run_id = header.pop("run_id", "")
    payload = body[sep + 1:]
    if payload and msg_type not in PAYLOAD_CAPABLE:
        raise BadHeader(f"{msg_type.value} may not carry payload bytes")
    return Message(msg_type, run_id, header, payload)


def frame_length(msg: Message) -> int:
    """Exact on-wire length of encode(msg), including the 4-byte prefix."""
    return len(encode(msg))


def read_frame(sock) -> bytes:
    """Read exactly one frame from a socket; returns the full frame bytes."""
    prefix = _read_exact(sock, 4)
    (n,) = _LEN.unpack(prefix)
    return prefix + _read_exact(sock, n)


def _read_exact(sock, n: int) -> bytes:
    chunks = []
    got = 0
    while got < n:
        chunk = sock.recv(min(n - got, 1 << 20))
        if not chunk:
            raise TruncatedFrame(f"connection closed after {got}/{n} bytes")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)
