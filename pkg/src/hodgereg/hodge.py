"""Twist-valued 1-forms on an embedded surface and their exact/residual split.

A 1-form assigns a 6-vector to every oriented surface edge, antisymmetric
under orientation reversal, keyed by unordered vertex pair (parallel edges
share one value).  The exact component df of a form is recovered by solving
the Poisson equation: the vertex operator sum_j w_ij (f_j - f_i) applied to
an unknown potential f must match the weighted divergence of the form at
every vertex, with the potential pinned to zero at vertex 0.  Under the
constant unit-length metric every corner angle is 60 degrees, so each
triangle incident to a pair contributes cot(60)/2 = 1/(2*sqrt(3)) to its
weight; weights enter both sides of the equation, so any global rescaling
leaves the solution unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph import ViewingGraph, bfs_parents
from .se3 import Chart
from .surface import ORIGIN_GRAPH, HalfedgeSurface

# Per-triangle contribution to an incident pair's weight: cot(60 deg) / 2.
TRIANGLE_WEIGHT = 1.0 / (2.0 * math.sqrt(3.0))


class NoPath(ValueError):
    """No connecting path in the viewing graph (impossible when connected)."""


class SolverDiverged(RuntimeError):
    """The Poisson solve failed to reach the required relative residual."""


class LieOneForm:
    """Mapping from canonically oriented vertex pairs (i < j) to 6-vectors."""

    def __init__(self, chart: Chart = Chart.SE3_LOG, values: "dict | None" = None):
        self.chart = Chart.parse(chart)
        self._values: dict[tuple[int, int], np.ndarray] = {}
        if values:
            for (i, j), v in values.items():
                self.set_value(i, j, v)

    def set_value(self, i: int, j: int, vec: np.ndarray) -> None:
        """Store the value of the form on the oriented edge i -> j."""
        v = np.asarray(vec, dtype=float).reshape(6)
        if i == j:
            raise ValueError("no self-loop edges")
        if i < j:
            self._values[(i, j)] = v.copy()
        else:
            self._values[(j, i)] = -v

    def value(self, i: int, j: int) -> np.ndarray:
        """Value on the oriented edge i -> j; reversed queries are negated."""
        if i < j:
            return self._values[(i, j)].copy()
        return -self._values[(j, i)]

    def has(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self._values

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self._values)

    def items(self):
        for pair in self.pairs():
            yield pair, self._values[pair].copy()

    def copy(self) -> "LieOneForm":
        return LieOneForm(self.chart, dict(self._values))

    def map_values(self, fn) -> "LieOneForm":
        """New form with fn applied to every canonical value."""
        out = LieOneForm(self.chart)
        for pair, v in self._values.items():
            out._values[pair] = np.asarray(fn(v), dtype=float).reshape(6)
        return out

    def combine(self, other: "LieOneForm", a: float = 1.0, b: float = 1.0) -> "LieOneForm":
        """Pairwise linear combination a*self + b*other (same pair sets)."""
        if self.chart is not other.chart:
            raise ValueError("cannot combine forms in different charts")
        if set(self._values) != set(other._values):
            raise ValueError("forms are defined on different edge sets")
        out = LieOneForm(self.chart)
        for pair, v in self._values.items():
            out._values[pair] = a * v + b * other._values[pair]
        return out


@dataclass
class VertexPotential:
    """Per-vertex 6-vector potential, gauge-pinned to zero at the root."""

    values: np.ndarray  # (n_vertices, 6)
    gauge_root: int
    n_frames: int

    def frame_values(self) -> np.ndarray:
        """Potentials of the original frames (auxiliary vertices dropped)."""
        return self.values[: self.n_frames].copy()


@dataclass
class PoissonSystem:
    """Assembled sparse system: weights, vertex operator, and 6 right-hand sides."""

    weights: dict[tuple[int, int], float]
    laplacian: sp.csr_matrix
    rhs: np.ndarray  # (n_vertices, 6)


@dataclass
class HodgeSplit:
    """Result of extracting the exact component of a form."""

    potential: VertexPotential
    exact: LieOneForm
    residual: LieOneForm
    system: PoissonSystem


def _path_sum(form0: LieOneForm, g: ViewingGraph, u: int, v: int) -> np.ndarray:
    path = _bfs_path(g, u, v)
    total = np.zeros(6)
    for a, b in zip(path[:-1], path[1:]):
        total += form0.value(a, b)
    return total


def _bfs_path(g: ViewingGraph, u: int, v: int) -> list[int]:
    dist, parent = bfs_parents(g, u)
    if dist[v] < 0:
        raise NoPath(f"no path between {u} and {v}")
    path = [v]
    while path[-1] != u:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def extend_form(g: ViewingGraph, s: HalfedgeSurface, form0: LieOneForm) -> LieOneForm:
    """Extend a form given on graph edges to every surface edge.

    Graph edges keep their values.  Any other pair receives the integral of
    the form along the deterministic shortest connecting path: BFS in the
    graph between frames, with auxiliary midpoints entered and left through
    their split chain at half the parent edge's value.  Ties break toward
    ascending vertex ids.
    """
    n_f = s.n_frames

    # Anchors: for any surface vertex, the frame vertices it can reach
    # through split chains, with the lead value and hop cost of doing so.
    anchor_cache: dict[int, list[tuple[int, np.ndarray, float]]] = {}

    def half_value(m: int, end: int) -> np.ndarray:
        """Value oriented m -> end, where end is a parent endpoint of aux m."""
        pa, pb = s.split_parent[m]
        parent = oriented_value(pa, pb)
        return -0.5 * parent if end == pa else 0.5 * parent

    def anchors(u: int) -> list[tuple[int, np.ndarray, float]]:
        if u < n_f:
            return [(u, np.zeros(6), 0.0)]
        if u in anchor_cache:
            return anchor_cache[u]
        found: list[tuple[int, np.ndarray, float]] = []
        if u in s.split_parent:
            for end in s.split_parent[u]:
                lead = half_value(u, end)
                for (x, sub, cost) in anchors(end):
                    found.append((x, lead + sub, 0.5 + cost))
        else:
            # Face-center vertex: reached through its anchor corner at value 0.
            for (x, sub, cost) in anchors(s.center_anchor[u]):
                found.append((x, sub, 0.5 + cost))
        anchor_cache[u] = found
        return found

    dist_cache: dict[int, list[int]] = {}

    def dist_from(x: int) -> list[int]:
        if x not in dist_cache:
            dist_cache[x] = bfs_parents(g, x)[0]
        return dist_cache[x]

    def oriented_value(u: int, v: int) -> np.ndarray:
        if u < n_f and v < n_f:
            if g.has_edge(u, v):
                return form0.value(u, v)
            return _path_sum(form0, g, u, v)
        best = None
        for (x, lead_u, cost_u) in anchors(u):
            for (y, lead_v, cost_v) in anchors(v):
                d = dist_from(x)[y]
                if d < 0:
                    continue
                key = (cost_u + d + cost_v, x, y)
                if best is None or key < best[0]:
                    mid = np.zeros(6) if x == y else _path_sum(form0, g, x, y)
                    best = (key, lead_u + mid - lead_v)
        if best is None:
            raise NoPath(f"no anchored path between surface vertices {u} and {v}")
        return best[1]

    out = LieOneForm(form0.chart)
    for (a, b) in s.unique_pairs():
        out.set_value(a, b, oriented_value(a, b))
    return out


def cotangent_weights(s: HalfedgeSurface) -> dict[tuple[int, int], float]:
    """Per-pair weights under the constant unit-length metric.

    Every incident triangle contributes 1/(2*sqrt(3)); an interior edge with
    two triangles gets 1/sqrt(3).  Parallel edges accumulate onto the same
    unordered pair.
    """
    if not s.triangulated:
        raise ValueError("cotangent weights require a triangulated surface")
    weights: dict[tuple[int, int], float] = {}
    for cycle in s.faces:
        for h in cycle:
            a, b = s.src[h], s.dst[h]
            key = (min(a, b), max(a, b))
            weights[key] = weights.get(key, 0.0) + TRIANGLE_WEIGHT
    return weights


def coboundary(
    s: HalfedgeSurface,
    weights: dict[tuple[int, int], float],
    form: LieOneForm,
) -> np.ndarray:
    """Weighted divergence of a form: per vertex, sum_j w_ij * form(i -> j)."""
    b = np.zeros((s.n_vertices, 6))
    for (i, j), w in weights.items():
        v = form.value(i, j)
        b[i] += w * v
        b[j] -= w * v
    return b


def build_poisson_system(
    s: HalfedgeSurface,
    form: LieOneForm,
    weights: "dict[tuple[int, int], float] | None" = None,
) -> PoissonSystem:
    """Assemble the vertex operator and the 6 right-hand-side columns."""
    if weights is None:
        weights = cotangent_weights(s)
    n = s.n_vertices
    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    for (i, j), w in weights.items():
        rows += [i, j]
        cols += [j, i]
        vals += [w, w]
        diag[i] -= w
        diag[j] -= w
    rows += list(range(n))
    cols += list(range(n))
    vals += list(diag)
    lap = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    rhs = coboundary(s, weights, form)
    return PoissonSystem(weights=dict(weights), laplacian=lap, rhs=rhs)


def solve_exact(
    s: HalfedgeSurface,
    form: LieOneForm,
    weights: "dict[tuple[int, int], float] | None" = None,
    method: str = "direct",
    rtol: float = 1e-10,
    maxiter: "int | None" = None,
) -> HodgeSplit:
    """Extract the exact component of a form on a connected triangulated surface.

    Solves the Poisson equation for each of the 6 twist coordinates against
    one factorization, with the potential gauged to zero at vertex 0, and
    returns (potential, df, residual) where df(i, j) = f_j - f_i and
    residual = form - df.  The solve must reach a backward relative error
    ||Af - b|| / (||A|| ||f|| + ||b||) of at most ``rtol``; SolverDiverged
    otherwise (e.g. when the iterative method hits its cap).
    """
    system = build_poisson_system(s, form, weights)
    n = s.n_vertices
    f = np.zeros((n, 6))
    b = system.rhs
    if float(np.abs(b).max(initial=0.0)) > 0.0:
        # Reduced system without the pinned vertex; negated so it is positive
        # definite for a connected surface.
        a_red = (-system.laplacian[1:, 1:]).tocsc()
        b_red = -b[1:]
        if method == "direct":
            lu = spla.splu(a_red)
            f[1:] = lu.solve(b_red)
        elif method == "cg":
            cap = maxiter if maxiter else 10 * n
            for c in range(6):
                x, info = spla.cg(a_red, b_red[:, c], rtol=1e-12, atol=0.0, maxiter=cap)
                f[1:, c] = x
                if info > 0:
                    break  # residual check below decides
        else:
            raise ValueError(f"unknown solver method {method!r}")
        # Backward relative error of the reduced system actually solved (the
        # pinned row is implied by compatibility, which antisymmetry of the
        # form guarantees); robust when the rhs is already near zero.
        res = a_red @ f[1:] - b_red
        scale = (
            float(abs(a_red).sum(axis=1).max()) * float(np.linalg.norm(f))
            + float(np.linalg.norm(b_red))
        )
        rel = float(np.linalg.norm(res)) / scale
        if rel > rtol:
            raise SolverDiverged(
                f"Poisson solve relative residual {rel:.3e} exceeds rtol={rtol:.1e}"
            )

    exact = LieOneForm(form.chart)
    residual = LieOneForm(form.chart)
    for (i, j) in form.pairs():
        d = f[j] - f[i]
        exact.set_value(i, j, d)
        residual.set_value(i, j, form.value(i, j) - d)
    potential = VertexPotential(values=f, gauge_root=0, n_frames=s.n_frames)
    return HodgeSplit(potential=potential, exact=exact, residual=residual, system=system)


def exactness_check(s: HalfedgeSurface, form: LieOneForm) -> float:
    """Max over triangles of the sup-norm of the oriented boundary sum."""
    if not s.triangulated:
        raise ValueError("exactness check requires a triangulated surface")
    worst = 0.0
    for cycle in s.faces:
        total = np.zeros(6)
        for h in cycle:
            total += form.value(s.src[h], s.dst[h])
        worst = max(worst, float(np.abs(total).max()))
    return worst


def loop_sum(form: LieOneForm, loop: list[int]) -> np.ndarray:
    """Integral of the form along a closed vertex loop."""
    total = np.zeros(6)
    for a, b in zip(loop[:-1], loop[1:]):
        total += form.value(a, b)
    return total


def form_value_between(
    form: LieOneForm, s: "HalfedgeSurface | None", u: int, v: int
) -> np.ndarray:
    """Form value on (u, v), resolving pairs replaced by midpoint splits."""
    if form.has(u, v):
        return form.value(u, v)
    if s is not None:
        m = s.split_vertex_of(u, v)
        if m is not None:
            return form_value_between(form, s, u, m) + form_value_between(form, s, m, v)
    raise KeyError(f"form has no value between {u} and {v}")
