"""File formats: pose-graph text, TUM trajectories, PLY/XYZ clouds, reports, config.

Quaternions are stored in (x, y, z, w) order everywhere; unit norm is
enforced on load within 1e-6.  All parse failures raise :class:`ParseError`
naming the file, line, and field.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

import numpy as np

from .graph import ViewingGraph
from .icp import PointCloud
from .pipeline import Trajectory
from .se3 import Pose, quat_to_rot, rot_to_quat

QUAT_NORM_TOL = 1e-6


class ParseError(ValueError):
    """A structured parse failure: file, line number, and field name."""

    def __init__(self, path: str, line_no: int, field: str, message: str):
        super().__init__(f"{path}:{line_no}: {field}: {message}")
        self.path = path
        self.line_no = line_no
        self.field = field


def _parse_floats(path: str, line_no: int, tokens: list[str], names: list[str]) -> list[float]:
    out = []
    for tok, name in zip(tokens, names):
        try:
            out.append(float(tok))
        except ValueError:
            raise ParseError(path, line_no, name, f"not a number: {tok!r}") from None
    return out


def _check_quat(path: str, line_no: int, q: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(q))
    if abs(n - 1.0) > QUAT_NORM_TOL:
        raise ParseError(path, line_no, "quaternion", f"norm {n:.8f} is not 1")
    return q / n


# -- pose-graph text format ----------------------------------------------------
# One record per line:
#   VERTEX_SE3:QUAT id tx ty tz qx qy qz qw
#   EDGE_SE3:QUAT i j tx ty tz qx qy qz qw


def load_pose_graph(path: str) -> tuple[ViewingGraph, "Trajectory | None"]:
    """Read a pose-graph file; returns the graph and the vertex poses, if any."""
    vertices: dict[int, Pose] = {}
    edges: list[tuple[int, int, Pose]] = []
    max_id = -1
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            tag = tokens[0]
            if tag == "VERTEX_SE3:QUAT":
                if len(tokens) != 9:
                    raise ParseError(path, line_no, "record", "expected 9 fields")
                try:
                    vid = int(tokens[1])
                except ValueError:
                    raise ParseError(path, line_no, "id", f"not an integer: {tokens[1]!r}") from None
                vals = _parse_floats(path, line_no, tokens[2:], ["tx", "ty", "tz", "qx", "qy", "qz", "qw"])
                q = _check_quat(path, line_no, np.array(vals[3:]))
                if vid in vertices:
                    raise ParseError(path, line_no, "id", f"duplicate vertex {vid}")
                vertices[vid] = Pose(quat_to_rot(q), np.array(vals[:3]))
                max_id = max(max_id, vid)
            elif tag == "EDGE_SE3:QUAT":
                if len(tokens) != 10:
                    raise ParseError(path, line_no, "record", "expected 10 fields")
                try:
                    i, j = int(tokens[1]), int(tokens[2])
                except ValueError:
                    raise ParseError(path, line_no, "ids", "edge endpoints must be integers") from None
                vals = _parse_floats(path, line_no, tokens[3:], ["tx", "ty", "tz", "qx", "qy", "qz", "qw"])
                q = _check_quat(path, line_no, np.array(vals[3:]))
                edges.append((i, j, Pose(quat_to_rot(q), np.array(vals[:3]))))
                max_id = max(max_id, i, j)
            else:
                raise ParseError(path, line_no, "tag", f"unknown record type {tag!r}")
    if max_id < 0:
        raise ParseError(path, 0, "file", "no records found")
    node_count = max_id + 1
    try:
        graph = ViewingGraph(node_count, edges)
    except ValueError as exc:
        raise ParseError(path, 0, "edges", str(exc)) from None
    traj = None
    if vertices:
        missing = [v for v in range(node_count) if v not in vertices]
        if missing:
            raise ParseError(path, 0, "vertices", f"missing vertex records for {missing}")
        traj = Trajectory(poses=[vertices[v] for v in range(node_count)])
    return graph, traj


def _pose_fields(pose: Pose) -> str:
    q = rot_to_quat(pose.rotation)
    t = pose.translation
    return (
        f"{t[0]:.12g} {t[1]:.12g} {t[2]:.12g} "
        f"{q[0]:.17g} {q[1]:.17g} {q[2]:.17g} {q[3]:.17g}"
    )


def save_pose_graph(path: str, graph: ViewingGraph, traj: "Trajectory | None" = None) -> None:
    with open(path, "w") as fh:
        if traj is not None:
            for vid, pose in enumerate(traj.poses):
                fh.write(f"VERTEX_SE3:QUAT {vid} {_pose_fields(pose)}\n")
        for (i, j) in graph.edges:
            fh.write(f"EDGE_SE3:QUAT {i} {j} {_pose_fields(graph.measurement(i, j))}\n")


# -- TUM trajectory format ------------------------------------------------------
# timestamp tx ty tz qx qy qz qw; the timestamp is the frame index as a real.


def save_tum(path: str, traj: Trajectory) -> None:
    with open(path, "w") as fh:
        for idx, pose in enumerate(traj.poses):
            fh.write(f"{float(idx):.6f} {_pose_fields(pose)}\n")


def load_tum(path: str) -> Trajectory:
    poses = []
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) != 8:
                raise ParseError(path, line_no, "record", "expected 8 fields")
            vals = _parse_floats(path, line_no, tokens, ["timestamp", "tx", "ty", "tz", "qx", "qy", "qz", "qw"])
            q = _check_quat(path, line_no, np.array(vals[4:]))
            poses.append(Pose(quat_to_rot(q), np.array(vals[1:4])))
    if not poses:
        raise ParseError(path, 0, "file", "no trajectory records found")
    return Trajectory(poses=poses)


# -- point clouds ----------------------------------------------------------------


def load_xyz(path: str) -> PointCloud:
    """Whitespace-separated x y z [nx ny nz] per line."""
    pts, nrm = [], []
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) not in (3, 6):
                raise ParseError(path, line_no, "record", "expected 3 or 6 fields")
            vals = _parse_floats(path, line_no, tokens, ["x", "y", "z", "nx", "ny", "nz"][: len(tokens)])
            pts.append(vals[:3])
            if len(tokens) == 6:
                nrm.append(vals[3:])
    if not pts:
        raise ParseError(path, 0, "file", "no points found")
    if nrm and len(nrm) != len(pts):
        raise ParseError(path, 0, "normals", "some lines carry normals and others do not")
    return PointCloud(np.array(pts), np.array(nrm) if nrm else None)


def save_xyz(path: str, cloud: PointCloud) -> None:
    with open(path, "w") as fh:
        for i, p in enumerate(cloud.points):
            line = f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g}"
            if cloud.normals is not None:
                n = cloud.normals[i]
                line += f" {n[0]:.9g} {n[1]:.9g} {n[2]:.9g}"
            fh.write(line + "\n")


def load_ply(path: str) -> PointCloud:
    """ASCII PLY with x y z and optional nx ny nz vertex properties."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError(path, 1, "magic", "not a PLY file")
    n_vertex = None
    props: list[str] = []
    header_end = None
    for idx, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0] == "format":
            if tokens[1] != "ascii":
                raise ParseError(path, idx, "format", "only ascii PLY is supported")
        elif tokens[0] == "element":
            if tokens[1] == "vertex":
                n_vertex = int(tokens[2])
            elif n_vertex is not None and props:
                pass  # later elements are ignored
        elif tokens[0] == "property" and n_vertex is not None:
            props.append(tokens[-1])
        elif tokens[0] == "end_header":
            header_end = idx
            break
    if n_vertex is None or header_end is None:
        raise ParseError(path, 1, "header", "missing vertex element or end_header")
    for needed in ("x", "y", "z"):
        if needed not in props:
            raise ParseError(path, header_end, "property", f"missing vertex property {needed}")
    has_normals = all(p in props for p in ("nx", "ny", "nz"))
    col = {name: props.index(name) for name in props}
    pts = np.zeros((n_vertex, 3))
    nrm = np.zeros((n_vertex, 3)) if has_normals else None
    for row in range(n_vertex):
        line_no = header_end + 1 + row
        if line_no > len(lines):
            raise ParseError(path, line_no, "vertex", "fewer vertex rows than declared")
        tokens = lines[line_no - 1].split()
        if len(tokens) < len(props):
            raise ParseError(path, line_no, "vertex", "too few columns")
        vals = _parse_floats(path, line_no, tokens, props)
        pts[row] = [vals[col["x"]], vals[col["y"]], vals[col["z"]]]
        if has_normals:
            nrm[row] = [vals[col["nx"]], vals[col["ny"]], vals[col["nz"]]]
    return PointCloud(pts, nrm)


def save_ply(path: str, cloud: PointCloud) -> None:
    has_normals = cloud.normals is not None
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {len(cloud)}\n")
        fh.write("property float x\nproperty float y\nproperty float z\n")
        if has_normals:
            fh.write("property float nx\nproperty float ny\nproperty float nz\n")
        fh.write("end_header\n")
        for i, p in enumerate(cloud.points):
            line = f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g}"
            if has_normals:
                n = cloud.normals[i]
                line += f" {n[0]:.9g} {n[1]:.9g} {n[2]:.9g}"
            fh.write(line + "\n")


# -- reports and debug dumps ------------------------------------------------------

REPORT_COLUMNS = "scene,metric_graph,iteration,mean_score,D_fundamental,D_homology,runtime_ms"


def save_report_csv(path: str, rows: list[dict]) -> None:
    """Evaluation report, 6-decimal values, one row per scene/metric/iteration."""
    with open(path, "w") as fh:
        fh.write(REPORT_COLUMNS + "\n")
        for row in rows:
            fh.write(
                f"{row['scene']},{row['metric_graph']},{row['iteration']},"
                f"{row['mean_score']:.6f},{row['D_fundamental']:.6f},"
                f"{row['D_homology']:.6f},{row['runtime_ms']:.6f}\n"
            )


def save_sparse_system(path: str, matrix) -> None:
    """Coordinate (row, col, value) text dump of a sparse matrix."""
    coo = matrix.tocoo()
    with open(path, "w") as fh:
        fh.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v:.17g}\n")


def save_surface_off(path: str, surface) -> None:
    """OFF-style dump of a triangulated surface, positions by spectral layout.

    Combinatorial data only; coordinates are synthesized from the three
    lowest nontrivial eigenvectors of the vertex adjacency Laplacian purely
    for inspection.
    """
    n = surface.n_vertices
    lap = np.zeros((n, n))
    for (a, b) in surface.unique_pairs():
        lap[a, b] -= 1.0
        lap[b, a] -= 1.0
        lap[a, a] += 1.0
        lap[b, b] += 1.0
    _, vecs = np.linalg.eigh(lap)
    coords = vecs[:, 1:4] if n >= 4 else np.pad(vecs[:, 1:], ((0, 0), (0, 4 - n)))
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{n} {surface.n_faces} {surface.n_edges}\n")
        for v in range(n):
            fh.write(f"{coords[v, 0]:.6f} {coords[v, 1]:.6f} {coords[v, 2]:.6f}\n")
        for fidx in range(surface.n_faces):
            vs = surface.face_vertices(fidx)
            fh.write(f"{len(vs)} " + " ".join(str(v) for v in vs) + "\n")


# -- run configuration --------------------------------------------------------------


@dataclass
class RunConfig:
    """Pipeline configuration; a key=value text file plus flag overrides."""

    chart: str = "se3_log"
    iterations: int = 3
    graph_metric: str = "centroid"
    centroid_threshold: float = 0.2
    iou_threshold: float = 0.5
    voxel: float = 0.05
    embed_order: str = "ascending"
    seed: int = 0
    solver: str = "direct"
    solver_rtol: float = 1e-10
    solver_maxiter: int = 0
    sigma: float = 0.05
    normals_k: int = 12

    def validate(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        for name in ("centroid_threshold", "iou_threshold", "voxel", "solver_rtol", "sigma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.iou_threshold >= 1.0:
            raise ValueError("iou_threshold must lie in (0, 1)")
        if self.graph_metric not in ("centroid", "iou"):
            raise ValueError(f"unknown graph_metric {self.graph_metric!r}")
        if self.embed_order not in ("ascending", "random"):
            raise ValueError(f"unknown embed_order {self.embed_order!r}")
        if self.solver not in ("direct", "cg"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.normals_k < 3:
            raise ValueError("normals_k must be >= 3")


def load_config(path: "str | None" = None, overrides: "dict | None" = None) -> RunConfig:
    """Config from file and overrides; HODGE_SEED in the environment wins the seed."""
    known = {f.name: f.type for f in fields(RunConfig)}
    cfg = RunConfig()

    def assign(key: str, value: str, where: str, line_no: int) -> None:
        if key not in known:
            raise ParseError(where, line_no, key, "unknown configuration key")
        current = getattr(cfg, key)
        try:
            if isinstance(current, bool):
                parsed = value.strip().lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                parsed = int(value)
            elif isinstance(current, float):
                parsed = float(value)
            else:
                parsed = value.strip()
        except ValueError:
            raise ParseError(where, line_no, key, f"bad value {value!r}") from None
        setattr(cfg, key, parsed)

    if path is not None:
        with open(path) as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ParseError(path, line_no, "line", "expected key=value")
                key, value = line.split("=", 1)
                assign(key.strip(), value, path, line_no)
    if overrides:
        for key, value in overrides.items():
            if value is not None:
                assign(key, str(value), "<flags>", 0)
    env_seed = os.environ.get("HODGE_SEED")
    if env_seed is not None:
        assign("seed", env_seed, "<env HODGE_SEED>", 0)
    cfg.validate()
    return cfg
