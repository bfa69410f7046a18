from .compose import CompositionResult, ExpressionTree, compose_pattern, jaccard
from .expression import ExpressionMatrix, collate, gen_expression, shuffle_regions
from .registry import BUILTIN_OPS, WorkloadRegistry
from .rules import AssociationRule, mine_rules, rules_from_bytes, rules_to_bytes

__all__ = [
    "AssociationRule",
    "BUILTIN_OPS",
    "CompositionResult",
    "ExpressionMatrix",
    "ExpressionTree",
    "WorkloadRegistry",
    "collate",
    "compose_pattern",
    "gen_expression",
    "jaccard",
    "mine_rules",
    "rules_from_bytes",
    "rules_to_bytes",
    "shuffle_regions",
]
