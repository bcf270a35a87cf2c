"""Weighted undirected graphs: construction, validation, and file ingestion."""

from __future__ import annotations

import csv
import hashlib
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

logger = logging.getLogger(__name__)

# Fraction of malformed route rows tolerated before ingestion aborts.
MALFORMED_ROW_LIMIT = 0.10


class GraphIngestError(ValueError):
    """An input file could not be turned into a valid graph."""


@dataclass(frozen=True)
class EdgeListRecord:
    """One undirected edge record; duplicates aggregate by weight summation."""

    src: str
    dst: str
    weight: float = 1.0


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable weighted undirected graph.

    ``adjacency`` is symmetric, nonnegative and has a zero diagonal. Nodes
    are addressed by dense integer index internally and by string label
    externally. ``meta`` carries ingestion provenance (weighting rule,
    warning counts) and never participates in equality.
    """

    labels: tuple[str, ...]
    adjacency: sp.csr_array
    meta: Mapping[str, object] = field(default_factory=dict, compare=False, repr=False)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def edge_count(self) -> int:
        return self.adjacency.nnz // 2

    @cached_property
    def degrees(self) -> np.ndarray:
        """Weighted degree vector, degrees[u] = sum_v adjacency[u, v]."""
        d = np.asarray(self.adjacency.sum(axis=1)).ravel()
        d.setflags(write=False)
        return d

    @cached_property
    def neighbor_counts(self) -> np.ndarray:
        """Number of distinct neighbors per node (routing-table entries)."""
        c = np.diff(self.adjacency.indptr)
        c.setflags(write=False)
        return c

    @property
    def total_degree(self) -> float:
        """Sum of weighted degrees; equals twice the total edge weight."""
        return float(self.degrees.sum())

    @cached_property
    def _label_index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def index_of(self, node: str | int) -> int:
        """Resolve a node given as external label or internal index."""
        if isinstance(node, str):
            try:
                return self._label_index[node]
            except KeyError:
                raise KeyError(f"unknown node label {node!r}") from None
        idx = int(node)
        if not 0 <= idx < self.n:
            raise KeyError(f"node index {idx} out of range for n={self.n}")
        return idx

    def neighbors(self, u: int) -> np.ndarray:
        return self.adjacency.indices[self.adjacency.indptr[u]:self.adjacency.indptr[u + 1]]

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[EdgeListRecord | tuple],
        meta: Mapping[str, object] | None = None,
    ) -> "Graph":
        """Build a graph from edge records, aggregating duplicates by sum.

        Labels are interned in first-appearance order (src before dst, in
        record order). Self-loops and negative weights are rejected.
        """
        index: dict[str, int] = {}
        weights: dict[tuple[int, int], float] = {}
        for rec in edges:
            if not isinstance(rec, EdgeListRecord):
                rec = EdgeListRecord(*rec)
            if rec.src == rec.dst:
                raise GraphIngestError(f"self-loop edge on node {rec.src!r}")
            if rec.weight < 0:
                raise GraphIngestError(
                    f"negative weight {rec.weight} on edge {rec.src!r}-{rec.dst!r}"
                )
            i = index.setdefault(rec.src, len(index))
            j = index.setdefault(rec.dst, len(index))
            key = (i, j) if i < j else (j, i)
            weights[key] = weights.get(key, 0.0) + rec.weight
        if not weights:
            raise GraphIngestError("no edges")
        n = len(index)
        rows, cols, data = [], [], []
        for (i, j), w in weights.items():
            if w == 0.0:
                continue
            rows += [i, j]
            cols += [j, i]
            data += [w, w]
        adj = sp.csr_array(
            sp.coo_array((data, (rows, cols)), shape=(n, n), dtype=np.float64)
        )
        adj.sum_duplicates()
        adj.sort_indices()
        labels = tuple(sorted(index, key=index.get))
        g = cls(labels=labels, adjacency=adj, meta=dict(meta or {}))
        g.validate()
        return g

    def validate(self) -> None:
        """Check structural invariants; raises GraphIngestError on violation."""
        a = self.adjacency
        if (a != a.T).nnz != 0:
            raise GraphIngestError("adjacency is not symmetric")
        if a.nnz and a.data.min() < 0:
            raise GraphIngestError("adjacency has negative weights")
        if np.any(a.diagonal() != 0):
            raise GraphIngestError("adjacency has nonzero diagonal")
        if np.any(self.degrees <= 0):
            bad = self.labels[int(np.argmin(self.degrees))]
            raise GraphIngestError(f"isolated node {bad!r}")


def _parse_edge_line(fields: list[str], default_weight: float, lineno: int) -> EdgeListRecord:
    if len(fields) < 2 or len(fields) > 3:
        raise GraphIngestError(
            f"line {lineno}: expected 'src dst [weight]', got {len(fields)} fields"
        )
    weight = default_weight
    if len(fields) == 3:
        try:
            weight = float(fields[2])
        except ValueError:
            raise GraphIngestError(
                f"line {lineno}: weight {fields[2]!r} is not a number"
            ) from None
    if weight < 0:
        raise GraphIngestError(f"line {lineno}: negative weight {weight}")
    if fields[0] == fields[1]:
        raise GraphIngestError(f"line {lineno}: self-loop on node {fields[0]!r}")
    return EdgeListRecord(fields[0], fields[1], weight)


def load_edge_list(
    path: str | Path,
    format: str = "tsv",
    default_weight: float = 1.0,
) -> Graph:
    """Load a graph from a tsv (whitespace) or csv edge list.

    One edge per line as ``src dst [weight]``; lines starting with '#' and
    blank lines are ignored; duplicate records aggregate by summation.
    """
    path = Path(path)
    if format not in ("tsv", "csv"):
        raise GraphIngestError(f"unknown edge list format {format!r}")
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if format == "csv":
                fields = [f.strip() for f in next(csv.reader([line]))]
            else:
                fields = line.split()
            records.append(_parse_edge_line(fields, default_weight, lineno))
    meta = {"source_format": format, "source_path": str(path)}
    return Graph.from_edges(records, meta=meta)


def load_capacity_table(path: str | Path) -> dict[str, float]:
    """Read a two-column CSV mapping equipment code to seat capacity."""
    table: dict[str, float] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            if len(row) < 2:
                raise GraphIngestError(
                    f"capacity table line {lineno}: expected 'code,capacity'"
                )
            try:
                table[row[0].strip()] = float(row[1])
            except ValueError:
                raise GraphIngestError(
                    f"capacity table line {lineno}: capacity {row[1]!r} is not a number"
                ) from None
    return table


def load_openflights(
    routes_path: str | Path,
    equipment_capacity_path: str | Path | None = None,
) -> Graph:
    """Build an undirected airport graph from an OpenFlights routes file.

    Each route record adds the capacity of its first listed equipment code
    (1 when no capacity table is supplied or the code is unknown) to the
    undirected edge weight between the two airports, so directed route
    pairs merge into a single edge. Rows with missing columns or airport
    codes are skipped and counted; more than 10% malformed rows aborts.
    """
    routes_path = Path(routes_path)
    capacity = (
        load_capacity_table(equipment_capacity_path)
        if equipment_capacity_path is not None
        else None
    )
    weights: dict[tuple[str, str], float] = {}
    order: dict[str, int] = {}
    total = malformed = unknown_equipment = 0
    with open(routes_path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            total += 1
            if len(row) < 5:
                malformed += 1
                continue
            src = row[2].strip()
            dst = row[4].strip()
            if not src or not dst or src == r"\N" or dst == r"\N" or src == dst:
                malformed += 1
                continue
            w = 1.0
            if capacity is not None:
                codes = row[8].split() if len(row) > 8 else []
                if codes and codes[0] in capacity:
                    w = capacity[codes[0]]
                else:
                    unknown_equipment += 1
            order.setdefault(src, len(order))
            order.setdefault(dst, len(order))
            key = (src, dst) if src < dst else (dst, src)
            weights[key] = weights.get(key, 0.0) + w
    if total == 0 or not weights:
        raise GraphIngestError(f"no edges in routes file {routes_path}")
    if malformed > MALFORMED_ROW_LIMIT * total:
        raise GraphIngestError(
            f"{malformed}/{total} route rows malformed (missing columns or "
            f"airport codes) in {routes_path}"
        )
    if malformed:
        logger.warning("skipped %d/%d malformed route rows", malformed, total)
    if unknown_equipment:
        logger.warning(
            "%d route rows had unknown equipment codes (capacity 1 assumed)",
            unknown_equipment,
        )
    records = [
        EdgeListRecord(src, dst, w)
        for (src, dst), w in sorted(weights.items(), key=lambda kv: (order[kv[0][0]], order[kv[0][1]]))
    ]
    meta = {
        "source_format": "openflights",
        "source_path": str(routes_path),
        "weighting_rule": (
            "sum over route records of first-listed equipment capacity"
            if capacity is not None
            else "route record count"
        ),
        "route_rows": total,
        "malformed_rows": malformed,
        "unknown_equipment_records": unknown_equipment,
    }
    return Graph.from_edges(records, meta=meta)


def restrict_to_component(g: Graph, anchor: str | int) -> Graph:
    """Induced subgraph on the connected component containing ``anchor``.

    Idempotent; label order of retained nodes is preserved. Dropped node
    count is logged.
    """
    a = g.index_of(anchor)
    n_comp, assignment = connected_components(g.adjacency, directed=False)
    if n_comp == 1:
        return g
    keep = np.flatnonzero(assignment == assignment[a])
    dropped = g.n - keep.size
    logger.info(
        "restricting to component of %r: dropped %d of %d nodes",
        g.labels[a], dropped, g.n,
    )
    sub = g.adjacency[keep, :][:, keep]
    labels = tuple(g.labels[i] for i in keep)
    meta = dict(g.meta)
    meta["dropped_nodes"] = int(meta.get("dropped_nodes", 0)) + dropped
    return Graph(labels=labels, adjacency=sp.csr_array(sub), meta=meta)


def write_edge_list(g: Graph, path: str | Path) -> None:
    """Write the canonical edge list: one 'src<TAB>dst<TAB>weight' line per
    undirected edge, sorted by label pair. Re-ingesting reproduces the
    same adjacency and the same canonical bytes."""
    coo = g.adjacency.tocoo()
    lines = []
    for i, j, w in zip(coo.row, coo.col, coo.data):
        a, b = g.labels[i], g.labels[j]
        if a < b:
            lines.append((a, b, repr(float(w))))
    lines.sort()
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for src, dst, w in lines:
            fh.write(f"{src}\t{dst}\t{w}\n")
    tmp.replace(path)


def file_sha256(path: str | Path) -> str:
    """Content hash used for artifact provenance."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
