"""Pairwise registration front end: normals, point-to-plane ICP, edge scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .se3 import Pose, Twist, compose, pose_exp


class DegenerateNeighborhood(ValueError):
    """Neighborhood covariance has rank < 2; no stable normal exists."""


class NoConvergence(RuntimeError):
    """ICP hit the iteration cap; carries the last estimate and RMS."""

    def __init__(self, pose: Pose, rms: float):
        super().__init__(f"ICP did not converge; last point-to-plane RMS {rms:.6g}")
        self.pose = pose
        self.rms = rms


@dataclass(frozen=True)
class PointCloud:
    """Points in meters with optional unit normals, matched 1:1."""

    points: np.ndarray
    normals: "np.ndarray | None" = None

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must be (N, 3), got {pts.shape}")
        object.__setattr__(self, "points", pts)
        if self.normals is not None:
            nrm = np.asarray(self.normals, dtype=float)
            if nrm.shape != pts.shape:
                raise ValueError("normals must match points 1:1")
            lengths = np.linalg.norm(nrm, axis=1)
            if np.any(np.abs(lengths - 1.0) > 1e-6):
                raise ValueError("normals must have unit norm")
            object.__setattr__(self, "normals", nrm)

    def __len__(self) -> int:
        return self.points.shape[0]

    def transformed(self, pose: Pose) -> "PointCloud":
        normals = None if self.normals is None else self.normals @ pose.rotation.T
        return PointCloud(pose.apply(self.points), normals)


class NnIndex:
    """Exact nearest-neighbor index (k-d tree) over a cloud's points."""

    def __init__(self, points: np.ndarray):
        self._points = np.asarray(points, dtype=float)
        self._tree = cKDTree(self._points)

    def query(self, points: np.ndarray, k: int = 1):
        """Distances and indices of the k nearest stored points."""
        return self._tree.query(np.asarray(points, dtype=float), k=k)


def estimate_normals(cloud: PointCloud, k: int = 12) -> PointCloud:
    """Per-point normals from the smallest-covariance direction of k neighbors.

    Normals are oriented toward the origin viewpoint (n . p <= 0) for
    determinism; points whose neighborhood is collinear raise
    DegenerateNeighborhood.
    """
    if k < 3:
        raise ValueError("k must be at least 3")
    pts = cloud.points
    if len(pts) < k:
        raise ValueError(f"cloud of {len(pts)} points is smaller than k={k}")
    index = NnIndex(pts)
    _, nbrs = index.query(pts, k=k)
    blocks = pts[nbrs]  # (N, k, 3)
    centered = blocks - blocks.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered)
    evals, evecs = np.linalg.eigh(cov)
    degenerate = evals[:, 1] <= 1e-12 * np.maximum(evals[:, 2], 1e-300)
    if np.any(degenerate):
        i = int(np.argmax(degenerate))
        raise DegenerateNeighborhood(
            f"collinear neighborhood around point {i}; covariance rank < 2"
        )
    normals = evecs[:, :, 0]
    dots = np.einsum("ij,ij->i", normals, pts)
    normals[dots > 0.0] *= -1.0
    # Viewpoint in the tangent plane: canonicalize by the last nonzero component.
    for i in np.nonzero(dots == 0.0)[0]:
        nz = np.nonzero(normals[i])[0]
        if nz.size and normals[i, nz[-1]] < 0:
            normals[i] = -normals[i]
    return PointCloud(pts.copy(), normals)


def _correspondences(src_pts: np.ndarray, dst: PointCloud, index: NnIndex):
    dist, idx = index.query(src_pts)
    cutoff = 3.0 * float(np.median(dist))
    keep = dist <= max(cutoff, 0.0)
    return src_pts[keep], dst.points[idx[keep]], dst.normals[idx[keep]]


def _plane_rms(p: np.ndarray, q: np.ndarray, n: np.ndarray) -> float:
    r = np.einsum("ij,ij->i", n, p - q)
    return float(np.sqrt(np.mean(r * r)))


def icp_point_to_plane(
    src: PointCloud,
    dst: PointCloud,
    init: "Pose | None" = None,
    max_iter: int = 50,
    tol: float = 1e-10,
) -> tuple[Pose, float]:
    """Point-to-plane ICP; returns the motion mapping src into dst's frame.

    Each iteration matches transformed source points to their nearest
    destination points, rejects pairs beyond 3x the median distance, solves
    the linearized point-to-plane least squares for a twist increment, and
    applies it only if the RMS does not increase (halving the step
    otherwise).  Stops when the increment norm drops below ``tol``; raises
    NoConvergence with the last estimate after ``max_iter`` iterations.
    """
    if dst.normals is None:
        raise ValueError("destination cloud needs normals")
    if len(src) == 0 or len(dst) == 0:
        raise ValueError("clouds must be non-empty")
    pose = init if init is not None else Pose.identity()
    index = NnIndex(dst.points)

    moved = pose.apply(src.points)
    p, q, n = _correspondences(moved, dst, index)
    rms = _plane_rms(p, q, n)
    for _ in range(max_iter):
        # Rows: [ (p x n)^T, n^T ] x = -n . (p - q), x = (phi, t).
        a = np.hstack([np.cross(p, n), n])
        b = -np.einsum("ij,ij->i", n, p - q)
        x, *_ = np.linalg.lstsq(a, b, rcond=None)
        step = 1.0
        for _ in range(12):
            candidate = compose(pose_exp(Twist(step * x[:3], step * x[3:])), pose)
            moved = candidate.apply(src.points)
            p2, q2, n2 = _correspondences(moved, dst, index)
            rms2 = _plane_rms(p2, q2, n2)
            if rms2 <= rms + 1e-15:
                break
            step *= 0.5
        else:
            raise NoConvergence(pose, rms)
        pose, rms = candidate, rms2
        p, q, n = p2, q2, n2
        if float(np.linalg.norm(step * x)) < tol:
            return pose, rms
    raise NoConvergence(pose, rms)


def point_to_plane_score(
    a: PointCloud, b: PointCloud, m: Pose, sigma: float = 0.05
) -> float:
    """Alignment score in (0, 1]: exp(-mean |n_q . (M p - q)| / sigma).

    Points of ``a`` are mapped by ``m`` and matched to nearest neighbors in
    ``b``; higher is better, 1 means exact coincidence.
    """
    if b.normals is None:
        raise ValueError("cloud b needs normals")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    moved = m.apply(a.points)
    index = NnIndex(b.points)
    _, idx = index.query(moved)
    dist = np.abs(np.einsum("ij,ij->i", b.normals[idx], moved - b.points[idx]))
    return float(np.exp(-float(dist.mean()) / sigma))
