"""2-cell embedding of a viewing graph on a closed oriented surface.

A rotation system (a cyclic order of edges around every vertex) determines
the embedding: each edge carries two opposite halfedges, the successor of a
halfedge arriving at v along the k-th incident edge is the halfedge leaving
v along the (k+1)-th, and the orbits of that successor map are the faces.
The genus follows from Euler's formula V - E + F = 2 - 2g.

Triangulation fans every long face from a corner whose vertex occurs exactly
once on the face walk.  Fan diagonals may duplicate an existing vertex pair
(the surface is a multigraph mesh; downstream assembly is keyed per unique
pair).  Two degenerate cases get auxiliary vertices: faces of length <= 2
(they occur at degree-1 vertices) are repaired by splitting one of their
edges with a midpoint, whose two halves carry half the parent edge-field
value; faces on which every vertex repeats (high-genus walks that traverse
all their edges twice) are stellar-subdivided from a face-center vertex
anchored to their lowest corner, since no fan base exists.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import ViewingGraph

ORIGIN_GRAPH = "graph"
ORIGIN_DIAGONAL = "diagonal"
ORIGIN_SPLIT = "split"

ORDER_ASCENDING = "ascending"
ORDER_SEEDED_RANDOM = "random"


@dataclass
class HalfedgeSurface:
    """Halfedge mesh produced by embedding (and optionally triangulating) a graph."""

    n_vertices: int
    n_frames: int
    src: list[int]
    dst: list[int]
    twin: list[int]
    nxt: list[int]
    he_edge: list[int]
    edge_pairs: list[tuple[int, int]]
    edge_origin: list[str]
    faces: list[list[int]] = field(default_factory=list)
    face_of: list[int] = field(default_factory=list)
    genus: int = 0
    triangulated: bool = False
    # Auxiliary midpoint vertex -> the canonical pair whose edge it splits.
    split_parent: dict[int, tuple[int, int]] = field(default_factory=dict)
    # Auxiliary face-center vertex -> the corner vertex it is anchored to
    # (edge-field values reach the center through that corner at no cost).
    center_anchor: dict[int, int] = field(default_factory=dict)

    # -- derived views -------------------------------------------------------

    @property
    def n_halfedges(self) -> int:
        return len(self.src)

    @property
    def n_edges(self) -> int:
        return len(self.edge_pairs)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    def unique_pairs(self) -> list[tuple[int, int]]:
        return sorted(set(self.edge_pairs))

    def face_vertices(self, face_id: int) -> list[int]:
        return [self.src[h] for h in self.faces[face_id]]

    def vertex_neighbors(self) -> list[list[int]]:
        """Per-vertex sorted unique neighbors over surface edges."""
        nbrs: list[set[int]] = [set() for _ in range(self.n_vertices)]
        for (a, b) in self.edge_pairs:
            nbrs[a].add(b)
            nbrs[b].add(a)
        return [sorted(s) for s in nbrs]

    def split_vertex_of(self, i: int, j: int) -> "int | None":
        """Auxiliary midpoint that replaced the pair (i, j), if any."""
        key = (min(i, j), max(i, j))
        for m, pair in self.split_parent.items():
            if pair == key:
                return m
        return None

    # -- validity ------------------------------------------------------------

    def validate(self) -> None:
        """Check the halfedge invariants; raises AssertionError on violation."""
        n = self.n_halfedges
        assert sorted(self.twin) == list(range(n)), "twin is not a permutation"
        assert sorted(self.nxt) == list(range(n)), "next is not a permutation"
        for h in range(n):
            assert self.twin[self.twin[h]] == h
            assert self.src[h] == self.dst[self.twin[h]]
            assert self.dst[h] == self.src[self.nxt[h]], "faces are not edge-connected"
        seen = [0] * n
        for f, cycle in enumerate(self.faces):
            for idx, h in enumerate(cycle):
                seen[h] += 1
                assert self.face_of[h] == f
                assert self.nxt[h] == cycle[(idx + 1) % len(cycle)]
        assert all(c == 1 for c in seen), "faces do not partition the halfedges"
        chi = self.euler_characteristic()
        assert chi == 2 - 2 * self.genus, f"Euler characteristic {chi} vs genus {self.genus}"
        if self.triangulated:
            assert all(len(c) == 3 for c in self.faces), "non-triangle face"


def _trace_faces(nxt: list[int]) -> tuple[list[list[int]], list[int]]:
    n = len(nxt)
    face_of = [-1] * n
    faces: list[list[int]] = []
    for h0 in range(n):
        if face_of[h0] >= 0:
            continue
        cycle = []
        h = h0
        while face_of[h] < 0:
            face_of[h] = len(faces)
            cycle.append(h)
            h = nxt[h]
        faces.append(cycle)
    return faces, face_of


def _genus_from_euler(v: int, e: int, f: int) -> int:
    chi = v - e + f
    if (2 - chi) % 2 != 0:
        raise AssertionError(f"odd Euler defect: V={v} E={e} F={f}")
    g = (2 - chi) // 2
    if g < 0:
        raise AssertionError(f"negative genus from V={v} E={e} F={f}")
    return g


def embed(
    g: ViewingGraph,
    order: str = ORDER_ASCENDING,
    seed: "int | None" = None,
) -> HalfedgeSurface:
    """Embed the viewing graph on a closed oriented surface via a rotation system.

    ``order`` picks the cyclic edge order at every vertex: ``"ascending"``
    (by neighbor id, the reproducible default) or ``"random"`` (shuffled by a
    generator seeded with ``seed``).  Any connected graph embeds; no attempt
    is made to minimize the genus.
    """
    g.ensure_connected()
    if g.node_count < 3:
        raise ValueError("embedding needs at least 3 vertices")
    edges = g.edges
    edge_index = {pair: e for e, pair in enumerate(edges)}

    src: list[int] = []
    dst: list[int] = []
    twin: list[int] = []
    he_edge: list[int] = []
    for e, (i, j) in enumerate(edges):
        src += [i, j]
        dst += [j, i]
        twin += [2 * e + 1, 2 * e]
        he_edge += [e, e]

    rng = np.random.default_rng(seed) if order == ORDER_SEEDED_RANDOM else None
    if order not in (ORDER_ASCENDING, ORDER_SEEDED_RANDOM):
        raise ValueError(f"unknown embedding order {order!r}")

    def out_halfedge(v: int, w: int) -> int:
        e = edge_index[(min(v, w), max(v, w))]
        return 2 * e if v < w else 2 * e + 1

    nxt = [-1] * len(src)
    for v in range(g.node_count):
        ring = list(g.neighbors(v))
        if rng is not None:
            rng.shuffle(ring)
        n = len(ring)
        for k, w in enumerate(ring):
            # Halfedge arriving at v along edge (v, w) continues along the
            # next edge of the cyclic order, leaving v.
            h_in = twin[out_halfedge(v, w)]
            nxt[h_in] = out_halfedge(v, ring[(k + 1) % n])

    faces, face_of = _trace_faces(nxt)
    genus = _genus_from_euler(g.node_count, len(edges), len(faces))
    s = HalfedgeSurface(
        n_vertices=g.node_count,
        n_frames=g.node_count,
        src=src,
        dst=dst,
        twin=twin,
        nxt=nxt,
        he_edge=he_edge,
        edge_pairs=list(edges),
        edge_origin=[ORIGIN_GRAPH] * len(edges),
        faces=faces,
        face_of=face_of,
        genus=genus,
    )
    return s


def _split_edge(s: HalfedgeSurface, h: int) -> None:
    """Split the edge under halfedge ``h`` with an auxiliary midpoint vertex.

    ``h: u->v`` becomes ``h: u->m`` followed by a new ``h2: m->v``; the twin
    ``ht: v->u`` becomes ``ht: v->m`` followed by ``ht2: m->u``.  Halfedges
    that pointed to ``h``/``ht`` still start at ``u``/``v``, so no other
    pointers move.  The midpoint remembers the pair it split so edge-field
    values can be derived (half of the parent value on each half).
    """
    e = s.he_edge[h]
    ht = s.twin[h]
    u, v = s.src[h], s.dst[h]
    m = s.n_vertices
    s.n_vertices += 1
    s.split_parent[m] = s.edge_pairs[e]

    h2 = len(s.src)
    ht2 = h2 + 1
    e2 = len(s.edge_pairs)
    half_origin = ORIGIN_SPLIT if s.edge_origin[e] == ORIGIN_GRAPH else s.edge_origin[e]

    s.src += [m, m]
    s.dst += [v, u]
    s.twin += [ht, h]
    s.nxt += [s.nxt[h], s.nxt[ht]]
    s.he_edge += [e2, e]
    s.edge_pairs.append((min(m, v), max(m, v)))
    s.edge_origin.append(half_origin)
    s.edge_pairs[e] = (min(u, m), max(u, m))
    s.edge_origin[e] = half_origin

    s.dst[h] = m
    s.dst[ht] = m
    s.twin[h] = ht2
    s.twin[ht] = h2
    s.nxt[h] = h2
    s.nxt[ht] = ht2
    s.he_edge[ht] = e2


def triangulate(s: HalfedgeSurface) -> HalfedgeSurface:
    """Fan-triangulate every face; returns a new surface, genus preserved."""
    t = HalfedgeSurface(
        n_vertices=s.n_vertices,
        n_frames=s.n_frames,
        src=list(s.src),
        dst=list(s.dst),
        twin=list(s.twin),
        nxt=list(s.nxt),
        he_edge=list(s.he_edge),
        edge_pairs=list(s.edge_pairs),
        edge_origin=list(s.edge_origin),
        split_parent=dict(s.split_parent),
        center_anchor=dict(s.center_anchor),
    )

    while True:
        faces, face_of = _trace_faces(t.nxt)
        # Degenerate faces first: splitting one may lengthen a neighbor face.
        target = next((c for c in faces if len(c) < 3), None)
        if target is None:
            target = next((c for c in faces if len(c) > 3), None)
        if target is None:
            t.faces, t.face_of = faces, face_of
            break
        if len(target) <= 2:
            _split_edge(t, target[0])
            continue
        corners = [t.src[h] for h in target]
        counts: dict[int, int] = {}
        for c in corners:
            counts[c] = counts.get(c, 0) + 1
        unique = [c for c in corners if counts[c] == 1]
        if not unique:
            # Every vertex repeats on this walk (both halfedges of each of its
            # edges may lie on it), so no fan base exists; subdivide from a
            # new face-center vertex instead.
            _center_split(t, target, corners)
            continue
        base_vertex = min(unique)
        base_pos = corners.index(base_vertex)
        walk = target[base_pos:] + target[:base_pos]
        cs = corners[base_pos:] + corners[:base_pos]
        _fan_face(t, walk, cs)

    t.genus = _genus_from_euler(t.n_vertices, t.n_edges, t.n_faces)
    if t.genus != s.genus:
        raise AssertionError(
            f"triangulation changed the genus: {s.genus} -> {t.genus}"
        )
    t.triangulated = True
    return t


def _fan_face(t: HalfedgeSurface, walk: list[int], corners: list[int]) -> None:
    """Fan the face with boundary ``walk`` from corners[0] (which occurs once)."""
    n = len(walk)
    c0 = corners[0]
    # diag_out[i]: halfedge c0 -> corners[i]; diag_in[i]: corners[i] -> c0.
    diag_out: dict[int, int] = {}
    diag_in: dict[int, int] = {}
    for i in range(2, n - 1):
        ci = corners[i]
        e = len(t.edge_pairs)
        t.edge_pairs.append((min(c0, ci), max(c0, ci)))
        t.edge_origin.append(ORIGIN_DIAGONAL)
        h_out = len(t.src)
        h_in = h_out + 1
        t.src += [c0, ci]
        t.dst += [ci, c0]
        t.twin += [h_in, h_out]
        t.nxt += [-1, -1]
        t.he_edge += [e, e]
        diag_out[i] = h_out
        diag_in[i] = h_in
    # Triangle (c0, c_i, c_{i+1}) has boundary: out-edge to c_i, walk[i], in-edge from c_{i+1}.
    for i in range(1, n - 1):
        first = walk[0] if i == 1 else diag_out[i]
        last = walk[n - 1] if i == n - 2 else diag_in[i + 1]
        t.nxt[first] = walk[i]
        t.nxt[walk[i]] = last
        t.nxt[last] = first


def _center_split(t: HalfedgeSurface, walk: list[int], corners: list[int]) -> None:
    """Stellar-subdivide the face ``walk`` from a new center vertex.

    One edge per corner occurrence (parallel edges when a corner repeats),
    one triangle per boundary halfedge; the center is anchored to the lowest
    corner for edge-field value derivation.
    """
    n = len(walk)
    x = t.n_vertices
    t.n_vertices += 1
    t.center_anchor[x] = min(corners)
    out = []  # out[i]: x -> corners[i]
    inc = []  # inc[i]: corners[i] -> x
    for i in range(n):
        e = len(t.edge_pairs)
        ci = corners[i]
        t.edge_pairs.append((min(x, ci), max(x, ci)))
        t.edge_origin.append(ORIGIN_DIAGONAL)
        h_out = len(t.src)
        h_in = h_out + 1
        t.src += [x, ci]
        t.dst += [ci, x]
        t.twin += [h_in, h_out]
        t.nxt += [-1, -1]
        t.he_edge += [e, e]
        out.append(h_out)
        inc.append(h_in)
    # Triangle i: x -> c_i -> c_{i+1} -> x.
    for i in range(n):
        j = (i + 1) % n
        t.nxt[out[i]] = walk[i]
        t.nxt[walk[i]] = inc[j]
        t.nxt[inc[j]] = out[i]


def homology_basis(s: HalfedgeSurface) -> list[list[int]]:
    """Tree-cotree basis: 2*genus closed vertex loops generating first homology.

    A BFS spanning tree is grown on the 1-skeleton, a BFS cotree on the dual
    graph avoiding tree edges; each of the 2g leftover edges closes one loop
    through the tree.
    """
    if not s.triangulated:
        raise ValueError("homology basis requires a triangulated surface")
    # Spanning tree over edge ids (parallel pairs keep the smallest id edge).
    incident: list[list[tuple[int, int]]] = [[] for _ in range(s.n_vertices)]
    for e, (a, b) in enumerate(s.edge_pairs):
        incident[a].append((b, e))
        incident[b].append((a, e))
    for lst in incident:
        lst.sort()
    parent = [-1] * s.n_vertices
    parent_edge = [-1] * s.n_vertices
    dist = [-1] * s.n_vertices
    dist[0] = 0
    queue = [0]
    in_tree = [False] * s.n_edges
    while queue:
        nxt_queue = []
        for v in queue:
            for (w, e) in incident[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    parent[w] = v
                    parent_edge[w] = e
                    in_tree[e] = True
                    nxt_queue.append(w)
        queue = nxt_queue

    # Dual cotree over faces using non-tree edges.
    edge_faces: list[list[int]] = [[] for _ in range(s.n_edges)]
    for h in range(s.n_halfedges):
        edge_faces[s.he_edge[h]].append(s.face_of[h])
    in_cotree = [False] * s.n_edges
    face_seen = [False] * s.n_faces
    face_seen[0] = True
    queue = [0]
    while queue:
        nxt_queue = []
        for f in queue:
            for h in s.faces[f]:
                e = s.he_edge[h]
                if in_tree[e] or in_cotree[e]:
                    continue
                other = s.face_of[s.twin[h]]
                if not face_seen[other]:
                    face_seen[other] = True
                    in_cotree[e] = True
                    nxt_queue.append(other)
        queue = nxt_queue

    leftovers = [
        e for e in range(s.n_edges) if not in_tree[e] and not in_cotree[e]
    ]
    if len(leftovers) != 2 * s.genus:
        raise AssertionError(
            f"tree-cotree leftover count {len(leftovers)} != 2g = {2 * s.genus}"
        )

    loops: list[list[int]] = []
    for e in leftovers:
        a, b = s.edge_pairs[e]
        # Tree path a -> b, then the leftover edge closes b -> a.
        pa, pb = [a], [b]
        x, y = a, b
        while x != y:
            if dist[x] >= dist[y]:
                x = parent[x]
                pa.append(x)
            else:
                y = parent[y]
                pb.append(y)
        loop = pa + pb[-2::-1]
        loop.append(a)
        loops.append(loop)
    return loops
