from .framing import Message, MsgType, decode, encode, frame_length
from .netsim import ENGINE_SITE, Topology, free_topology, link_delay, uniform_topology

__all__ = [
    "ENGINE_SITE",
    "Message",
    "MsgType",
    "Topology",
    "decode",
    "encode",
    "frame_length",
    "free_topology",
    "link_delay",
    "uniform_topology",
]
