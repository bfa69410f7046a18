"""Greedy composition of gene-expression patterns against a target region set.

The search builds a binary expression tree whose leaves are genes and whose
internal nodes apply union / intersect / subtract to region sets. It starts
from the single gene closest to the target (Jaccard), widens to the best
two-leaf tree over all ordered gene pairs and ops (exhaustive at this size;
a greedy step here can strand the search on a seed gene the optimal pair
does not contain), then repeatedly tries every (op, unused gene) extension
of the current tree, keeping the one that improves similarity most, until
max_leaves or no strict improvement. Ties break by op order (union,
intersect, subtract), then gene name, so the result is deterministic.
Jaccard of two empty sets is defined as 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import BadParams
from .expression import ExpressionMatrix

OPS = ("union", "intersect", "subtract")


@dataclass(frozen=True)
class ExpressionTree:
    op: str | None = None          # None for a leaf
    gene: str | None = None        # set for a leaf
    left: "ExpressionTree | None" = None
    right: "ExpressionTree | None" = None

    @staticmethod
    def leaf(gene: str) -> "ExpressionTree":
        return ExpressionTree(gene=gene)

    @staticmethod
    def node(op: str, left: "ExpressionTree", right: "ExpressionTree") -> "ExpressionTree":
        if op not in OPS:
            raise BadParams(f"unknown op {op!r}")
        return ExpressionTree(op=op, left=left, right=right)

    def n_leaves(self) -> int:
        if self.gene is not None:
            return 1
        return self.left.n_leaves() + self.right.n_leaves()

    def evaluate(self, m: ExpressionMatrix) -> np.ndarray:
        """Boolean region vector of the composed pattern."""
        if self.gene is not None:
            return m.cells[:, m.genes.index(self.gene)]
        lhs = self.left.evaluate(m)
        rhs = self.right.evaluate(m)
        if self.op == "union":
            return lhs | rhs
        if self.op == "intersect":
            return lhs & rhs
        return lhs & ~rhs

    def to_json(self) -> dict:
        if self.gene is not None:
            return {"gene": self.gene}
        return {"op": self.op, "left": self.left.to_json(),
                "right": self.right.to_json()}

    @staticmethod
    def from_json(raw: dict) -> "ExpressionTree":
        if "gene" in raw:
            return ExpressionTree.leaf(raw["gene"])
        return ExpressionTree.node(raw["op"],
                                   ExpressionTree.from_json(raw["left"]),
                                   ExpressionTree.from_json(raw["right"]))


@dataclass(frozen=True)
class CompositionResult:
    expression_tree: ExpressionTree
    similarity: float

    def to_bytes(self) -> bytes:
        return json.dumps({"tree": self.expression_tree.to_json(),
                           "similarity": self.similarity},
                          separators=(",", ":")).encode()

    @staticmethod
    def from_bytes(data: bytes) -> "CompositionResult":
        doc = json.loads(data.decode())
        return CompositionResult(ExpressionTree.from_json(doc["tree"]),
                                 doc["similarity"])


def jaccard(a: np.ndarray, b: np.ndarray) -> float:
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(a & b)) / union


def compose_pattern(m: ExpressionMatrix, target: set, max_leaves: int) -> CompositionResult:
    if max_leaves < 1:
        raise BadParams("max_leaves must be >= 1")
    unknown = set(target) - set(m.regions)
    if unknown:
        raise BadParams(f"target regions not in matrix: {sorted(unknown)[:5]}")

    region_index = {r: i for i, r in enumerate(m.regions)}
    target_vec = np.zeros(len(m.regions), dtype=bool)
    for r in target:
        target_vec[region_index[r]] = True

    # seed with the best single gene, ties by name
    best_gene = min(m.genes,
                    key=lambda g: (-jaccard(m.cells[:, m.genes.index(g)], target_vec), g))
    tree = ExpressionTree.leaf(best_gene)
    pattern = m.cells[:, m.genes.index(best_gene)]
    score = jaccard(pattern, target_vec)
    used = {best_gene}

    if max_leaves >= 2 and len(m.genes) >= 2:
        best_pair = None  # ((-score, op_idx, gx, gy), tree, vector, score)
        for op_idx, op in enumerate(OPS):
            for gx in m.genes:
                for gy in m.genes:
                    if gy == gx:
                        continue
                    candidate = ExpressionTree.node(
                        op, ExpressionTree.leaf(gx), ExpressionTree.leaf(gy))
                    vec = candidate.evaluate(m)
                    s = jaccard(vec, target_vec)
                    if s <= score:
                        continue
                    key = (-s, op_idx, gx, gy)
                    if best_pair is None or key < best_pair[0]:
                        best_pair = (key, candidate, vec, s)
        if best_pair is not None:
            _, tree, pattern, score = best_pair
            used = {tree.left.gene, tree.right.gene}

    while len(used) < max_leaves and len(used) < len(m.genes):
        best_ext = None  # (score gain key, op_idx, gene, vector)
        for op_idx, op in enumerate(OPS):
            for gene in sorted(set(m.genes) - used):
                candidate = ExpressionTree.node(op, tree, ExpressionTree.leaf(gene))
                vec = candidate.evaluate(m)
                s = jaccard(vec, target_vec)
                if s <= score:
                    continue
                key = (-s, op_idx, gene)
                if best_ext is None or key < best_ext[0]:
                    best_ext = (key, op, gene, vec, s)
        if best_ext is None:
            break
        _, op, gene, pattern, score = best_ext
        tree = ExpressionTree.node(op, tree, ExpressionTree.leaf(gene))
        used.add(gene)

    return CompositionResult(tree, score)
