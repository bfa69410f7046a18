"""Association-rule mining over expression matrices.

Transactions are spatial regions, items are genes. Frequent itemsets come
from levelwise apriori search with subset pruning; every rule A => B with
|A u B| <= max_itemset passing the support and confidence thresholds is
emitted, sorted by (lift desc, support desc, lexicographic rule) so output
is deterministic.

    support(A=>B)    = count(A u B) / n_regions
    confidence(A=>B) = count(A u B) / count(A)
    lift(A=>B)       = confidence / (count(B) / n_regions)
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ..errors import BadParams
from .expression import ExpressionMatrix


@dataclass(frozen=True)
class AssociationRule:
    antecedent: frozenset
    consequent: frozenset
    support: float
    confidence: float
    lift: float

    def __post_init__(self):
        if not self.antecedent or not self.consequent:
            raise BadParams("antecedent and consequent must be non-empty")
        if self.antecedent & self.consequent:
            raise BadParams("antecedent and consequent must be disjoint")

    def sort_key(self):
        return (-self.lift, -self.support,
                tuple(sorted(self.antecedent)), tuple(sorted(self.consequent)))

    def to_json(self) -> dict:
        return {
            "antecedent": sorted(self.antecedent),
            "consequent": sorted(self.consequent),
            "support": self.support,
            "confidence": self.confidence,
            "lift": self.lift,
        }


def rules_to_bytes(rules: list[AssociationRule]) -> bytes:
    return json.dumps([r.to_json() for r in rules],
                      separators=(",", ":")).encode()


def rules_from_bytes(data: bytes) -> list[AssociationRule]:
    return [
        AssociationRule(frozenset(r["antecedent"]), frozenset(r["consequent"]),
                        r["support"], r["confidence"], r["lift"])
        for r in json.loads(data.decode())
    ]


def mine_rules(m: ExpressionMatrix, min_support: float, min_confidence: float,
               max_itemset: int) -> list[AssociationRule]:
    if not 0.0 < min_support <= 1.0:
        raise BadParams("min_support must lie in (0, 1]")
    if not 0.0 < min_confidence <= 1.0:
        raise BadParams("min_confidence must lie in (0, 1]")
    if max_itemset < 2:
        raise BadParams("max_itemset must be >= 2")

    n = len(m.regions)
    counts = _frequent_itemsets(m, min_support, max_itemset)

    rules = []
    for itemset, count in counts.items():
        if len(itemset) < 2:
            continue
        support = count / n
        for r in range(1, len(itemset)):
            for ante in combinations(sorted(itemset), r):
                antecedent = frozenset(ante)
                consequent = itemset - antecedent
                # subsets of a frequent itemset are frequent, so both counts exist
                confidence = count / counts[antecedent]
                if confidence < min_confidence:
                    continue
                lift = confidence / (counts[consequent] / n)
                rules.append(AssociationRule(antecedent, consequent,
                                             support, confidence, lift))
    rules.sort(key=AssociationRule.sort_key)
    return rules


def _frequent_itemsets(m: ExpressionMatrix, min_support: float,
                       max_itemset: int) -> dict:
    """Map frozenset(genes) -> transaction count, for all frequent itemsets."""
    n = len(m.regions)
    threshold = min_support * n
    cells = m.cells

    counts: dict = {}
    columns: dict = {}  # itemset -> bool vector of supporting regions
    level = []
    for j, gene in enumerate(m.genes):
        col = cells[:, j]
        cnt = int(np.count_nonzero(col))
        if cnt >= threshold:
            key = frozenset([gene])
            counts[key] = cnt
            columns[key] = col
            level.append(key)

    k = 1
    while level and k < max_itemset:
        level_set = set(level)
        next_level = []
        seen = set()
        ordered = sorted(level, key=lambda s: tuple(sorted(s)))
        for a, b in combinations(ordered, 2):
            cand = a | b
            if len(cand) != k + 1 or cand in seen:
                continue
            seen.add(cand)
            # apriori pruning: all k-subsets must be frequent
            if any(cand - {g} not in level_set for g in cand):
                continue
            col = columns[a] & columns[b]
            cnt = int(np.count_nonzero(col))
            if cnt >= threshold:
                counts[cand] = cnt
                columns[cand] = col
                next_level.append(cand)
        level = next_level
        k += 1
    return counts
