"""Viewing graph: point-cloud frames as nodes, relative rigid motions on edges.

Edges are stored once under the canonical orientation i < j; the measurement
on (i, j) maps frame-j points into frame i, and querying the reversed pair
returns the exact inverse.  Neighbor iteration is ascending everywhere so
spanning trees, cycles and shortest paths are reproducible.
"""

from __future__ import annotations

from collections import deque
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .se3 import Pose, invert


class DisconnectedGraph(ValueError):
    """Raised when an operation requires a connected viewing graph."""


def _points(cloud) -> np.ndarray:
    pts = getattr(cloud, "points", cloud)
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected an (N, 3) point array, got shape {pts.shape}")
    if pts.shape[0] == 0:
        raise ValueError("empty point cloud")
    return pts


class ViewingGraph:
    """Undirected graph of frames with one measured rigid motion per edge."""

    def __init__(
        self,
        node_count: int,
        edges: Iterable[tuple],
    ) -> None:
        if node_count < 1:
            raise ValueError("node_count must be positive")
        self.node_count = int(node_count)
        self._meas: dict[tuple[int, int], Pose] = {}
        self._weight: dict[tuple[int, int], float] = {}
        for item in edges:
            i, j = int(item[0]), int(item[1])
            pose = item[2] if len(item) > 2 and item[2] is not None else Pose.identity()
            weight = float(item[3]) if len(item) > 3 else 1.0
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise ValueError(f"edge ({i}, {j}) out of range")
            if i > j:
                i, j = j, i
                pose = invert(pose)
            if (i, j) in self._meas:
                raise ValueError(f"duplicate edge ({i}, {j})")
            self._meas[(i, j)] = pose
            self._weight[(i, j)] = weight
        self._adj: list[list[int]] = [[] for _ in range(self.node_count)]
        for (i, j) in self._meas:
            self._adj[i].append(j)
            self._adj[j].append(i)
        for nbrs in self._adj:
            nbrs.sort()

    # -- structure ---------------------------------------------------------

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted(self._meas)

    @property
    def n_edges(self) -> int:
        return len(self._meas)

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self._meas

    def neighbors(self, i: int) -> list[int]:
        return self._adj[i]

    def degree(self, i: int) -> int:
        return len(self._adj[i])

    def is_connected(self) -> bool:
        if self.node_count == 1:
            return True
        seen = [False] * self.node_count
        seen[0] = True
        queue = deque([0])
        count = 1
        while queue:
            v = queue.popleft()
            for w in self._adj[v]:
                if not seen[w]:
                    seen[w] = True
                    count += 1
                    queue.append(w)
        return count == self.node_count

    def ensure_connected(self) -> None:
        if not self.is_connected():
            raise DisconnectedGraph(
                f"viewing graph with {self.node_count} nodes and "
                f"{self.n_edges} edges is not connected"
            )

    # -- measurements ------------------------------------------------------

    def measurement(self, i: int, j: int) -> Pose:
        """Motion mapping frame-j points into frame i; inverted for reversed queries."""
        key = (min(i, j), max(i, j))
        pose = self._meas[key]
        return pose if i < j else invert(pose)

    def weight(self, i: int, j: int) -> float:
        return self._weight[(min(i, j), max(i, j))]

    def with_measurements(
        self,
        mapping: "Mapping[tuple[int, int], Pose] | Callable[[int, int, Pose], Pose]",
    ) -> "ViewingGraph":
        """New graph with the same edges and replaced measurements.

        ``mapping`` is either a dict keyed by canonical edge or a function
        ``(i, j, old) -> new`` called per canonical edge.
        """
        items = []
        for (i, j) in self.edges:
            old = self._meas[(i, j)]
            if callable(mapping):
                new = mapping(i, j, old)
            else:
                new = mapping.get((i, j), old)
            items.append((i, j, new, self._weight[(i, j)]))
        return ViewingGraph(self.node_count, items)


def build_by_centroid(clouds: Sequence, threshold: float = 0.2) -> ViewingGraph:
    """Connect frames whose cloud centroids are closer than ``threshold`` meters.

    Measurements are left as identity placeholders until pairwise
    registration fills them.  Raises DisconnectedGraph if the resulting
    graph does not connect all frames.
    """
    if len(clouds) < 2:
        raise ValueError("need at least 2 clouds")
    centroids = np.array([_points(c).mean(axis=0) for c in clouds])
    n = len(clouds)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if float(np.linalg.norm(centroids[i] - centroids[j])) < threshold:
                edges.append((i, j))
    g = ViewingGraph(n, edges)
    g.ensure_connected()
    return g


def _voxel_set(points: np.ndarray, voxel: float) -> set:
    keys = np.floor(points / voxel).astype(np.int64)
    return set(map(tuple, keys))


def build_by_iou(
    clouds: Sequence, threshold: float = 0.5, voxel: float = 0.05
) -> ViewingGraph:
    """Connect frames whose occupied-voxel IOU exceeds ``threshold``."""
    if len(clouds) < 2:
        raise ValueError("need at least 2 clouds")
    if voxel <= 0:
        raise ValueError("voxel size must be positive")
    if not 0.0 < threshold < 1.0:
        raise ValueError("IOU threshold must lie in (0, 1)")
    voxels = [_voxel_set(_points(c), voxel) for c in clouds]
    n = len(clouds)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            inter = len(voxels[i] & voxels[j])
            union = len(voxels[i] | voxels[j])
            if union > 0 and inter / union > threshold:
                edges.append((i, j))
    g = ViewingGraph(n, edges)
    g.ensure_connected()
    return g


def k_cliques(g: ViewingGraph, k: int) -> list[tuple[int, ...]]:
    """All vertex subsets of size k inducing complete subgraphs, sorted."""
    if k < 3:
        raise ValueError("k must be at least 3")
    result: list[tuple[int, ...]] = []

    def extend(clique: tuple[int, ...], candidates: list[int]) -> None:
        if len(clique) == k:
            result.append(clique)
            return
        for idx, v in enumerate(candidates):
            nxt = [w for w in candidates[idx + 1 :] if g.has_edge(v, w)]
            if len(clique) + 1 + len(nxt) >= k:
                extend(clique + (v,), nxt)

    extend((), list(range(g.node_count)))
    return result


def bfs_parents(g: ViewingGraph, source: int) -> tuple[list[int], list[int]]:
    """BFS distances and parents from ``source``.

    Among equally short predecessors the smallest-id one is chosen, so the
    tree (and every shortest path derived from it) is deterministic.
    """
    dist = [-1] * g.node_count
    parent = [-1] * g.node_count
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in g.neighbors(v):
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                parent[w] = v
                queue.append(w)
    # Re-pick parents as the smallest-id neighbor on the previous level.
    for v in range(g.node_count):
        if v == source or dist[v] < 0:
            continue
        parent[v] = min(w for w in g.neighbors(v) if dist[w] == dist[v] - 1)
    return dist, parent


def shortest_path(g: ViewingGraph, u: int, v: int) -> list[int]:
    """Vertex list of the deterministic BFS shortest path from u to v."""
    dist, parent = bfs_parents(g, u)
    if dist[v] < 0:
        raise DisconnectedGraph(f"no path between {u} and {v}")
    path = [v]
    while path[-1] != u:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def fundamental_cycles(g: ViewingGraph) -> list[list[int]]:
    """One closed vertex loop per non-tree edge of the BFS tree rooted at 0.

    Each loop starts and ends at the same vertex and covers its defining
    non-tree edge exactly once; the list has E - V + 1 entries.
    """
    g.ensure_connected()
    dist, parent = bfs_parents(g, 0)
    tree = {(min(v, parent[v]), max(v, parent[v])) for v in range(g.node_count) if parent[v] >= 0}
    loops: list[list[int]] = []
    for (i, j) in g.edges:
        if (i, j) in tree:
            continue
        # Climb to the common ancestor of i and j.
        pi, pj = [i], [j]
        a, b = i, j
        while a != b:
            if dist[a] >= dist[b]:
                a = parent[a]
                pi.append(a)
            else:
                b = parent[b]
                pj.append(b)
        loop = pi + pj[-2::-1]  # i .. lca .. j
        loop.append(i)  # close with the non-tree edge (j, i)
        loops.append(loop)
    return loops
