"""Scikit-learn style estimator wrapping the full registration pipeline.

``HodgeRegistration`` treats a list of roughly pre-aligned point clouds as a
dataset: ``fit`` builds the viewing graph, measures pairwise motions with
point-to-plane ICP, and solves for globally consistent corrective poses;
``transform`` applies those poses, returning clouds whose relative motions
compose to the identity around every loop of the viewing graph.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .graph import build_by_centroid, build_by_iou
from .icp import NoConvergence, PointCloud, estimate_normals, icp_point_to_plane
from .pipeline import fuse, register
from .se3 import Chart


def check_clouds(X) -> list[np.ndarray]:
    """Validate a sequence of (N_i, 3) float arrays; returns float64 copies."""
    if isinstance(X, np.ndarray) and X.ndim == 2:
        raise ValueError(
            "expected a sequence of point clouds, got a single 2-d array; "
            "wrap it in a list if you really have one cloud"
        )
    clouds = []
    for idx, item in enumerate(X):
        arr = np.asarray(getattr(item, "points", item), dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"cloud {idx} must be (N, 3), got {arr.shape}")
        if arr.shape[0] < 3:
            raise ValueError(f"cloud {idx} has fewer than 3 points")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"cloud {idx} contains non-finite values")
        clouds.append(arr)
    if len(clouds) < 3:
        raise ValueError("need at least 3 clouds to register")
    return clouds


class HodgeRegistration(BaseEstimator, TransformerMixin):
    """Globally consistent registration of roughly pre-aligned point clouds.

    Parameters
    ----------
    graph_metric : {"centroid", "iou"}, default="centroid"
        Pairing rule for the viewing graph.
    centroid_threshold : float, default=0.2
        Edge when centroids are closer than this many meters.
    iou_threshold : float, default=0.5
        Edge when the occupied-voxel IOU exceeds this value.
    voxel : float, default=0.05
        Voxel size for the IOU metric.
    iterations : int, default=3
        Number of decompose-and-update passes.
    chart : {"se3_log", "so3_plus_t"}, default="se3_log"
        Twist parametrization used by the solve.
    normals_k : int, default=12
        Neighborhood size for normal estimation.
    icp_max_iter : int, default=30
        Iteration cap for each pairwise ICP run.
    refine_with_icp : bool, default=True
        Measure edges with point-to-plane ICP; when False, edges keep the
        identity measurement implied by the input placements (useful when
        the inputs are already locally registered).

    Attributes
    ----------
    trajectory_ : Trajectory
        Corrective pose per cloud (frame -> world), frame 0 anchored.
    graph_ : ViewingGraph
        The viewing graph with measured relative motions.
    surface_ : HalfedgeSurface
        The triangulated embedding used by the solve.
    records_ : list of IterationRecord
        Per-pass loop-deviation report.
    """

    def __init__(
        self,
        graph_metric: str = "centroid",
        centroid_threshold: float = 0.2,
        iou_threshold: float = 0.5,
        voxel: float = 0.05,
        iterations: int = 3,
        chart: str = "se3_log",
        normals_k: int = 12,
        icp_max_iter: int = 30,
        refine_with_icp: bool = True,
    ):
        self.graph_metric = graph_metric
        self.centroid_threshold = centroid_threshold
        self.iou_threshold = iou_threshold
        self.voxel = voxel
        self.iterations = iterations
        self.chart = chart
        self.normals_k = normals_k
        self.icp_max_iter = icp_max_iter
        self.refine_with_icp = refine_with_icp

    def fit(self, X, y=None):
        """Build the viewing graph over ``X`` and solve for consistent poses.

        ``X`` is a sequence of (N_i, 3) arrays in a shared world frame
        (rough placements, e.g. odometry output).
        """
        clouds = check_clouds(X)
        Chart.parse(self.chart)
        if self.graph_metric == "centroid":
            graph = build_by_centroid(clouds, self.centroid_threshold)
        elif self.graph_metric == "iou":
            graph = build_by_iou(clouds, self.iou_threshold, self.voxel)
        else:
            raise ValueError(f"unknown graph_metric {self.graph_metric!r}")

        if self.refine_with_icp:
            with_normals = [
                estimate_normals(PointCloud(c), k=min(self.normals_k, len(c)))
                for c in clouds
            ]
            measured = {}
            for (i, j) in graph.edges:
                # Measurement maps frame-j points into frame i; with clouds
                # already placed in world, the frames coincide with the
                # placements and ICP starts from the identity.
                try:
                    pose, _ = icp_point_to_plane(
                        PointCloud(clouds[j]),
                        with_normals[i],
                        max_iter=self.icp_max_iter,
                    )
                except NoConvergence as exc:
                    pose = exc.pose  # soft failure: still usable as a measurement
                measured[(i, j)] = pose
            graph = graph.with_measurements(measured)

        result = register(graph, iterations=self.iterations, chart=self.chart)
        self.graph_ = graph
        self.surface_ = result.surface
        self.trajectory_ = result.trajectory
        self.records_ = result.records
        self.n_clouds_ = len(clouds)
        return self

    def transform(self, X):
        """Apply the fitted corrective poses to ``X``; returns a list of arrays."""
        check_is_fitted(self, "trajectory_")
        clouds = check_clouds(X)
        if len(clouds) != self.n_clouds_:
            raise ValueError(
                f"expected {self.n_clouds_} clouds as fitted, got {len(clouds)}"
            )
        return [
            pose.apply(cloud)
            for pose, cloud in zip(self.trajectory_.poses, clouds)
        ]

    def fused(self, X) -> np.ndarray:
        """Transformed clouds concatenated into one point set."""
        check_is_fitted(self, "trajectory_")
        return fuse(check_clouds(X), self.trajectory_)
