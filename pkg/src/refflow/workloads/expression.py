"""Boolean gene-expression matrices: generation, collation, wire form.

Regions play the role of transactions and genes the role of items. Cells
are binarized (expressed / not expressed). The wire form is JSON with the
cell matrix bit-packed row-major, each row padded to a whole byte:

    {"genes": [...], "regions": [...], "cells": "<base64>"}
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np

from ..errors import BadParams, DuplicateRegion, GeneMismatch, MalformedDocument


@dataclass(frozen=True)
class ExpressionMatrix:
    genes: tuple[str, ...]
    regions: tuple[str, ...]
    cells: np.ndarray  # bool, shape (n_regions, n_genes)

    def __post_init__(self):
        if self.cells.shape != (len(self.regions), len(self.genes)):
            raise BadParams("cell matrix shape must be regions x genes")
        if len(set(self.genes)) != len(self.genes):
            raise BadParams("gene names must be unique")
        if len(set(self.regions)) != len(self.regions):
            raise BadParams("region ids must be unique")
        self.cells.setflags(write=False)

    def __eq__(self, other):
        return (isinstance(other, ExpressionMatrix)
                and self.genes == other.genes
                and self.regions == other.regions
                and np.array_equal(self.cells, other.cells))

    def gene_regions(self, gene: str) -> frozenset:
        """Set of region ids where the gene is expressed."""
        col = self.genes.index(gene)
        idx = np.nonzero(self.cells[:, col])[0]
        return frozenset(self.regions[i] for i in idx)

    def to_bytes(self) -> bytes:
        packed = np.packbits(self.cells, axis=1)
        return json.dumps({
            "genes": list(self.genes),
            "regions": list(self.regions),
            "cells": base64.b64encode(packed.tobytes()).decode(),
        }, separators=(",", ":")).encode()

    @staticmethod
    def from_bytes(data: bytes) -> "ExpressionMatrix":
        try:
            doc = json.loads(data.decode())
            genes = tuple(doc["genes"])
            regions = tuple(doc["regions"])
            raw = base64.b64decode(doc["cells"])
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedDocument(f"bad matrix document: {exc}") from exc
        row_bytes = (len(genes) + 7) // 8
        if len(raw) != row_bytes * len(regions):
            raise MalformedDocument("cell data length mismatch")
        packed = np.frombuffer(raw, dtype=np.uint8).reshape(len(regions), row_bytes)
        cells = np.unpackbits(packed, axis=1)[:, :len(genes)].astype(bool)
        return ExpressionMatrix(genes, regions, cells)


def gen_expression(seed: int, n_genes: int, n_regions: int, density: float,
                   region_offset: int = 0) -> ExpressionMatrix:
    """Deterministic synthetic matrix; each cell true with probability density.

    region_offset shifts the generated region ids (r000, r001, ...) so that
    matrices produced by different sources have disjoint region sets and can
    be collated.
    """
    if n_genes < 1 or n_regions < 1:
        raise BadParams("n_genes and n_regions must be >= 1")
    if not 0.0 < density < 1.0:
        raise BadParams("density must lie in (0, 1)")
    if region_offset < 0:
        raise BadParams("region_offset must be >= 0")
    rng = np.random.Generator(np.random.PCG64(seed))
    # float32 draws: half the memory traffic, same determinism for fixed seed
    cells = rng.random((n_regions, n_genes), dtype=np.float32) < np.float32(density)
    genes = tuple(f"g{i:03d}" for i in range(n_genes))
    regions = tuple(f"r{region_offset + i:03d}" for i in range(n_regions))
    return ExpressionMatrix(genes, regions, cells)


def collate(parts: list[ExpressionMatrix]) -> ExpressionMatrix:
    """Row-concatenate matrices over an identical gene list."""
    if not parts:
        raise BadParams("nothing to collate")
    genes = parts[0].genes
    for p in parts[1:]:
        if p.genes != genes:
            raise GeneMismatch("parts disagree on the gene list")
    regions: list[str] = []
    seen = set()
    for p in parts:
        for r in p.regions:
            if r in seen:
                raise DuplicateRegion(r)
            seen.add(r)
        regions.extend(p.regions)
    if len(parts) == 1:
        return parts[0]
    cells = np.concatenate([p.cells for p in parts], axis=0)
    return ExpressionMatrix(genes, tuple(regions), cells)


def shuffle_regions(m: ExpressionMatrix, seed: int) -> ExpressionMatrix:
    """Deterministic row permutation; a cheap size-preserving pipeline stage."""
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(len(m.regions))
    return ExpressionMatrix(m.genes,
                            tuple(m.regions[i] for i in perm),
                            m.cells[perm].copy())
