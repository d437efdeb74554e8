"""Globally consistent pose-graph registration via discrete Hodge decomposition.

Relative rigid motions on a viewing graph are lifted to a twist-valued
1-form on a surface embedding of the graph; a sparse Poisson solve extracts
the exact component, whose application to the absolute poses closes every
loop.  See :class:`hodgereg.estimator.HodgeRegistration` for the high-level
entry point and the ``hodgereg`` CLI for file-based workflows.
"""

from .estimator import HodgeRegistration, check_clouds
from .graph import (
    DisconnectedGraph,
    ViewingGraph,
    build_by_centroid,
    build_by_iou,
    fundamental_cycles,
    k_cliques,
)
from .hodge import (
    LieOneForm,
    NoPath,
    PoissonSystem,
    SolverDiverged,
    VertexPotential,
    cotangent_weights,
    coboundary,
    exactness_check,
    extend_form,
    solve_exact,
)
from .icp import (
    DegenerateNeighborhood,
    NnIndex,
    NoConvergence,
    PointCloud,
    estimate_normals,
    icp_point_to_plane,
    point_to_plane_score,
)
from .pipeline import (
    Trajectory,
    chain_poses,
    fuse,
    hodge_iteration,
    initial_form,
    register,
)
from .se3 import (
    AngleAtPi,
    Chart,
    Pose,
    Twist,
    compose,
    exp_rot,
    frobenius_dev,
    hat,
    invert,
    log_rot,
    pose_exp,
    pose_log,
    vee,
)
from .surface import HalfedgeSurface, embed, homology_basis, triangulate
from .synth import (
    OpenLoop,
    SyntheticScene,
    evaluate,
    generate_loop_scene,
    loop_deviation,
    measurement_graph,
    perturb_measurements,
)

__version__ = "0.1.0"

__all__ = [
    "AngleAtPi",
    "Chart",
    "DegenerateNeighborhood",
    "DisconnectedGraph",
    "HalfedgeSurface",
    "HodgeRegistration",
    "LieOneForm",
    "NnIndex",
    "NoConvergence",
    "NoPath",
    "OpenLoop",
    "PointCloud",
    "PoissonSystem",
    "Pose",
    "SolverDiverged",
    "SyntheticScene",
    "Trajectory",
    "Twist",
    "VertexPotential",
    "ViewingGraph",
    "build_by_centroid",
    "build_by_iou",
    "chain_poses",
    "check_clouds",
    "coboundary",
    "compose",
    "cotangent_weights",
    "embed",
    "estimate_normals",
    "evaluate",
    "exactness_check",
    "exp_rot",
    "extend_form",
    "frobenius_dev",
    "fundamental_cycles",
    "fuse",
    "generate_loop_scene",
    "hat",
    "hodge_iteration",
    "homology_basis",
    "icp_point_to_plane",
    "initial_form",
    "invert",
    "k_cliques",
    "log_rot",
    "loop_deviation",
    "measurement_graph",
    "perturb_measurements",
    "point_to_plane_score",
    "pose_exp",
    "pose_log",
    "register",
    "solve_exact",
    "triangulate",
    "vee",
]
