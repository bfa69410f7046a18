"""Byte-level service operations that proxies register at startup.

Every operation is a pure function from an ordered list of input byte
strings to output bytes; parameter-taking operations expect a JSON params
document as their first input (injected as a literal workflow input).
Purity is load-bearing: mode equivalence of the engine relies on identical
bytes in producing identical bytes out.
"""

from __future__ import annotations

import json
from typing import Callable

from ..errors import BadParams, ServiceFailure, UnknownServiceOp
from .compose import compose_pattern
from .expression import ExpressionMatrix, collate, gen_expression, shuffle_regions
from .rules import mine_rules, rules_to_bytes

ServiceOp = Callable[[list[bytes]], bytes]


def _params(inputs: list[bytes]) -> tuple[dict, list[bytes]]:
    if not inputs:
        raise BadParams("missing params input")
    try:
        params = json.loads(inputs[0].decode())
    except (ValueError, UnicodeDecodeError) as exc:
        raise BadParams(f"bad params JSON: {exc}") from exc
    return params, inputs[1:]


def op_identity(inputs: list[bytes]) -> bytes:
    return b"".join(inputs)


def op_gen_expression(inputs: list[bytes]) -> bytes:
    params, rest = _params(inputs)
    if rest:
        raise BadParams("gen_expression takes no data inputs")
    m = gen_expression(
        seed=int(params["seed"]),
        n_genes=int(params["n_genes"]),
        n_regions=int(params["n_regions"]),
        density=float(params["density"]),
        region_offset=int(params.get("region_offset", 0)),
    )
    return m.to_bytes()


def op_collate(inputs: list[bytes]) -> bytes:
    parts = [ExpressionMatrix.from_bytes(b) for b in inputs]
    return collate(parts).to_bytes()


def op_mine_rules(inputs: list[bytes]) -> bytes:
    params, rest = _params(inputs)
    if not rest:
        raise BadParams("mine_rules needs at least one matrix input")
    matrix = collate([ExpressionMatrix.from_bytes(b) for b in rest])
    rules = mine_rules(
        matrix,
        min_support=float(params["min_support"]),
        min_confidence=float(params["min_confidence"]),
        max_itemset=int(params["max_itemset"]),
    )
    return rules_to_bytes(rules)


def op_compose_pattern(inputs: list[bytes]) -> bytes:
    params, rest = _params(inputs)
    if len(rest) != 1:
        raise BadParams("compose_pattern takes exactly one matrix input")
    matrix = ExpressionMatrix.from_bytes(rest[0])
    result = compose_pattern(matrix, set(params["target"]),
                             int(params["max_leaves"]))
    return result.to_bytes()


def op_shuffle_regions(inputs: list[bytes]) -> bytes:
    params, rest = _params(inputs)
    if len(rest) != 1:
        raise BadParams("shuffle_regions takes exactly one matrix input")
    matrix = ExpressionMatrix.from_bytes(rest[0])
    return shuffle_regions(matrix, int(params["seed"])).to_bytes()


BUILTIN_OPS: dict[str, ServiceOp] = {
    "identity": op_identity,
    "gen_expression": op_gen_expression,
    "collate": op_collate,
    "mine_rules": op_mine_rules,
    "collate_mine": op_mine_rules,  # collation is implicit for multi-part input
    "compose_pattern": op_compose_pattern,
    "shuffle_regions": op_shuffle_regions,
}


class WorkloadRegistry:
    """Name -> operation table a proxy serves."""

    def __init__(self, ops: dict[str, ServiceOp] | None = None):
        self._ops = dict(ops if ops is not None else BUILTIN_OPS)

    @staticmethod
    def from_spec(spec: str) -> "WorkloadRegistry":
        """Build from a CLI spec: 'all' or a comma-separated op-name list."""
        if spec == "all":
            return WorkloadRegistry()
        ops = {}
        for name in spec.split(","):
            name = name.strip()
            if name not in BUILTIN_OPS:
                raise UnknownServiceOp(name)
            ops[name] = BUILTIN_OPS[name]
        return WorkloadRegistry(ops)

    def register(self, name: str, op: ServiceOp) -> None:
        self._ops[name] = op

    def invoke(self, name: str, inputs: list[bytes]) -> bytes:
        try:
            op = self._ops[name]
        except KeyError:
            raise UnknownServiceOp(name) from None
        try:
            return op(inputs)
        except Exception as exc:
            raise ServiceFailure(f"{name}: {exc}") from exc
