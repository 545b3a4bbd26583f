"""Base communication topology and the graph analytics scheduling relies on."""

from __future__ import annotations

from collections import deque
from pathlib import Path

import numpy as np


class Topology:
    """Immutable undirected graph on nodes 0..n-1, no self-loops, no multi-edges.

    Edges are kept as sorted (i, j) pairs with i < j; neighbor lists are sorted
    by node index. The dense adjacency matrix is precomputed and marked
    read-only, so instances can be shared freely across threads.
    """

    def __init__(self, n, edges=()):
        n = int(n)
        if n < 1:
            raise ValueError(f"node count must be >= 1, got {n}")
        dedup = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
            dedup.add((i, j) if i < j else (j, i))
        self.n = n
        self.edges = tuple(sorted(dedup))
        nbrs = [[] for _ in range(n)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        self.neighbors = tuple(tuple(sorted(v)) for v in nbrs)
        adj = np.zeros((n, n))
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = 1.0
        adj.setflags(write=False)
        self._adj = adj

    @property
    def adjacency(self) -> np.ndarray:
        """Dense symmetric 0/1 adjacency matrix with zero diagonal (read-only)."""
        return self._adj

    @property
    def degrees(self) -> np.ndarray:
        return self._adj.sum(axis=1)

    def laplacian(self) -> np.ndarray:
        """Degree matrix minus adjacency; symmetric with zero row sums."""
        return np.diag(self.degrees) - self._adj

    def is_connected(self) -> bool:
        """True iff breadth-first search from node 0 reaches every node."""
        seen = {0}
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for w in self.neighbors[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == self.n

    def auxiliary_graph(self) -> "Topology":
        """Conflict graph for simultaneous broadcasting.

        On top of the base edges, every pair of nodes with at least one common
        neighbor gets an edge: if both transmitted in the same slot their
        packets would collide at the shared neighbor.
        """
        conflict = set(self.edges)
        for v in range(self.n):
            nbrs = self.neighbors[v]
            for a in range(len(nbrs)):
                for b in range(a + 1, len(nbrs)):
                    conflict.add((nbrs[a], nbrs[b]))
        return Topology(self.n, conflict)

    def __eq__(self, other):
        return (
            isinstance(other, Topology)
            and self.n == other.n
            and self.edges == other.edges
        )

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        return f"Topology(n={self.n}, edges={len(self.edges)})"


def betweenness_centrality(t: Topology) -> np.ndarray:
    """Shortest-path betweenness, normalized so the entries sum to one.

    Exact accumulation over BFS shortest-path DAGs; endpoints do not count
    toward their own paths, and multiple shortest paths split credit
    fractionally. When every raw score is zero (complete graphs), the uniform
    vector is returned instead, since an all-zero importance vector cannot
    seed scheduling probabilities.
    """
    if not t.is_connected():
        raise ValueError("betweenness centrality requires a connected topology")
    n = t.n
    raw = np.zeros(n)
    for source in range(n):
        dist = [-1] * n
        sigma = [0.0] * n
        preds = [[] for _ in range(n)]
        dist[source] = 0
        sigma[source] = 1.0
        order = []
        queue = deque([source])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in t.neighbors[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += (sigma[v] / sigma[w]) * (1.0 + delta[w])
            if w != source:
                raw[w] += delta[w]
    total = raw.sum()
    if total <= 0.0:
        return np.full(n, 1.0 / n)
    return raw / total


def load_topology(path) -> Topology:
    """Read a topology file: first line ``n``, then one ``i j`` edge per line.

    Lines starting with ``#`` and blank lines are ignored.
    """
    text = Path(path).read_text()
    entries = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.append(line)
    if not entries:
        raise ValueError(f"no content in topology file {path}")
    n = int(entries[0])
    edges = []
    for line in entries[1:]:
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"malformed edge line {line!r} in {path}")
        edges.append((int(parts[0]), int(parts[1])))
    return Topology(n, edges)


def save_topology(t: Topology, path) -> None:
    """Write the plain-text format understood by :func:`load_topology`."""
    lines = [str(t.n)]
    lines.extend(f"{i} {j}" for i, j in t.edges)
    Path(path).write_text("\n".join(lines) + "\n")
