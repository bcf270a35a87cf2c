"""Reference navigation policies: unbiased random walk and shortest-path routing."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .graph import Graph

ROW_SUM_TOL = 1e-12
PREDECESSOR_REL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Policy:
    """Row-stochastic transition kernel over graph nodes.

    Non-target rows are supported on graph edges only; target rows are
    absorbing self-loops.
    """

    kernel: sp.csr_array
    targets: frozenset[int]

    @property
    def n(self) -> int:
        return self.kernel.shape[0]

    def row(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor indices and probabilities of row u."""
        lo, hi = self.kernel.indptr[u], self.kernel.indptr[u + 1]
        return self.kernel.indices[lo:hi], self.kernel.data[lo:hi]


def validate_policy(policy: Policy, g: Graph, tol: float = ROW_SUM_TOL) -> None:
    """Assert row-stochasticity and support containment in graph edges."""
    k = policy.kernel
    row_sums = np.asarray(k.sum(axis=1)).ravel()
    if np.max(np.abs(row_sums - 1.0)) > tol:
        u = int(np.argmax(np.abs(row_sums - 1.0)))
        raise ValueError(f"policy row {u} sums to {row_sums[u]!r}")
    if k.nnz and (k.data.min() < 0 or k.data.max() > 1 + tol):
        raise ValueError("policy entries outside [0, 1]")
    coo = k.tocoo()
    adj = g.adjacency
    for u, v, p in zip(coo.row, coo.col, coo.data):
        if p == 0.0:
            continue
        if u in policy.targets:
            if v != u:
                raise ValueError(f"target row {u} is not absorbing")
        elif adj[u, v] == 0.0:
            raise ValueError(f"policy mass on non-edge ({u}, {v})")


def urw_kernel(g: Graph, target: str | int) -> Policy:
    """Unbiased random walk kernel with an absorbing target row.

    Non-target rows are adjacency[u, v] / degree[u]; the target row is a
    unit self-loop.
    """
    t = g.index_of(target)
    coo = g.adjacency.tocoo()
    keep = coo.row != t
    rows = np.append(coo.row[keep], t)
    cols = np.append(coo.col[keep], t)
    data = np.append(coo.data[keep] / g.degrees[coo.row[keep]], 1.0)
    kernel = sp.csr_array(sp.coo_array((data, (rows, cols)), shape=(g.n, g.n)))
    kernel.sort_indices()
    return Policy(kernel=kernel, targets=frozenset([t]))


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Single-target shortest-path data under inverse-weight edge lengths.

    ``dist`` is the weighted distance (edge length 1/adjacency weight),
    ``hops`` the breadth-first hop count on the unweighted topology, and
    ``path_hops`` the fewest edges among minimum-weight paths. The
    predecessor set of u holds the neighbors that start some shortest
    path from u to the target.
    """

    target: int
    dist: np.ndarray
    hops: np.ndarray
    path_hops: np.ndarray
    predecessors: tuple[tuple[int, ...], ...]


def _bfs_hops(g: Graph, t: int) -> np.ndarray:
    hops = np.full(g.n, -1, dtype=np.int64)
    hops[t] = 0
    frontier = [t]
    while frontier:
        nxt = []
        for u in frontier:
            for v in g.neighbors(u):
                if hops[v] < 0:
                    hops[v] = hops[u] + 1
                    nxt.append(v)
        frontier = nxt
    return hops


def shortest_paths(g: Graph, target: str | int) -> DistanceField:
    """Exact single-target Dijkstra with shortest-path predecessor sets.

    Edge lengths are the inverted adjacency weights, so heavier edges are
    shorter. Predecessor membership uses relative tolerance 1e-9 to admit
    floating-point ties.
    """
    t = g.index_of(target)
    n = g.n
    adj = g.adjacency
    dist = np.full(n, np.inf)
    dist[t] = 0.0
    heap: list[tuple[float, int]] = [(0.0, t)]
    done = np.zeros(n, dtype=bool)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        lo, hi = adj.indptr[u], adj.indptr[u + 1]
        for v, w in zip(adj.indices[lo:hi], adj.data[lo:hi]):
            nd = d + 1.0 / w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    if not done.all():
        missing = g.labels[int(np.flatnonzero(~done)[0])]
        raise RuntimeError(
            f"node {missing!r} cannot reach the target; restrict the graph "
            "to the target's component first"
        )

    preds: list[tuple[int, ...]] = []
    for u in range(n):
        if u == t:
            preds.append(())
            continue
        lo, hi = adj.indptr[u], adj.indptr[u + 1]
        here = []
        for v, w in zip(adj.indices[lo:hi], adj.data[lo:hi]):
            via = 1.0 / w + dist[v]
            if abs(dist[u] - via) <= PREDECESSOR_REL_TOL * max(dist[u], via):
                here.append(int(v))
        if not here:
            raise RuntimeError(f"empty predecessor set at non-target node {u}")
        preds.append(tuple(here))

    # Fewest edges among minimum-weight paths: dynamic program over the
    # predecessor DAG in increasing distance order.
    path_hops = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    path_hops[t] = 0
    for u in np.argsort(dist, kind="stable"):
        if u == t:
            continue
        path_hops[u] = 1 + min(path_hops[v] for v in preds[u])

    return DistanceField(
        target=t,
        dist=dist,
        hops=_bfs_hops(g, t),
        path_hops=path_hops,
        predecessors=tuple(preds),
    )


def sp_policy(g: Graph, target: str | int, field: DistanceField | None = None) -> Policy:
    """Shortest-path routing policy: uniform over the predecessor set.

    The target row is an absorbing self-loop.
    """
    t = g.index_of(target)
    if field is None:
        field = shortest_paths(g, t)
    elif field.target != t:
        raise ValueError("distance field was computed for a different target")
    rows, cols, data = [t], [t], [1.0]
    for u in range(g.n):
        if u == t:
            continue
        pset = field.predecessors[u]
        share = 1.0 / len(pset)
        for v in pset:
            rows.append(u)
            cols.append(v)
            data.append(share)
    kernel = sp.csr_array(sp.coo_array((data, (rows, cols)), shape=(g.n, g.n)))
    kernel.sort_indices()
    return Policy(kernel=kernel, targets=frozenset([t]))


def distance_csv_rows(field: DistanceField, labels: Sequence[str]) -> list[tuple]:
    """Per-node rows (label, dist, hops, path_hops) for CSV export."""
    return [
        (labels[u], float(field.dist[u]), int(field.hops[u]), int(field.path_hops[u]))
        for u in range(len(labels))
    ]
