"""Rigid-motion (SE(3)) and rotation (SO(3)) arithmetic on plain numpy arrays.

Conventions used across the package:

- A ``Pose`` (R, t) maps points of its own frame into the parent frame,
  ``p_parent = R @ p_local + t``.  The relative motion stored on a graph
  edge (i, j) maps frame-j points into frame i.
- A ``Twist`` is the 6-vector (phi, t): ``phi`` is an axis-angle rotation
  vector in radians, ``t`` a translation-like part in meters.
- Two charts relate poses and twists.  ``Chart.SE3_LOG`` is the group
  logarithm (translation premultiplied by the inverse left Jacobian), so
  ``pose_exp(-x) == invert(pose_exp(x))`` holds exactly.  ``Chart.SO3_PLUS_T``
  keeps the raw translation next to the rotation log; it is cheaper but only
  first-order compatible with composition.
- Rotation logs are principal-branch only: angles at (or numerically
  indistinguishable from) pi raise :class:`AngleAtPi` instead of picking an
  arbitrary axis.

All functions are pure and never mutate their arguments.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

# Below this rotation angle the closed-form coefficients are replaced by
# second-order Taylor expansions to avoid catastrophic cancellation.
SMALL_ANGLE = 1e-7

# trace(R) must exceed -1 by this margin, i.e. the angle must be strictly
# below pi, for the principal log to have a well-defined axis.
_PI_TRACE_MARGIN = 1e-9


class AngleAtPi(ValueError):
    """Raised when a rotation angle is too close to pi for a principal log."""


class ChartMismatch(ValueError):
    """Raised when twists from different charts are combined."""


class Chart(enum.Enum):
    """Parametrization of rigid motions by 6-vectors."""

    SE3_LOG = "se3_log"
    SO3_PLUS_T = "so3_plus_t"

    @classmethod
    def parse(cls, name: "str | Chart") -> "Chart":
        if isinstance(name, Chart):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown chart {name!r}; expected 'se3_log' or 'so3_plus_t'"
            ) from None


def hat(phi: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix of a 3-vector, so that ``hat(a) @ x == cross(a, x)``."""
    p = np.asarray(phi, dtype=float).reshape(3)
    return np.array(
        [
            [0.0, -p[2], p[1]],
            [p[2], 0.0, -p[0]],
            [-p[1], p[0], 0.0],
        ]
    )


def vee(m: np.ndarray) -> np.ndarray:
    """Inverse of :func:`hat` on skew-symmetric matrices."""
    m = np.asarray(m, dtype=float)
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def exp_rot(phi: np.ndarray) -> np.ndarray:
    """Rodrigues exponential: rotation matrix for an axis-angle vector."""
    p = np.asarray(phi, dtype=float).reshape(3)
    theta = math.sqrt(float(p @ p))
    k = hat(p)
    if theta < SMALL_ANGLE:
        return np.eye(3) + k + 0.5 * (k @ k)
    a = k / theta
    return np.eye(3) + math.sin(theta) * a + (1.0 - math.cos(theta)) * (a @ a)


def rotation_angle(r: np.ndarray) -> float:
    """Principal rotation angle in [0, pi]."""
    tr = float(np.trace(np.asarray(r, dtype=float)))
    return math.acos(min(1.0, max(-1.0, 0.5 * (tr - 1.0))))


def log_rot(r: np.ndarray) -> np.ndarray:
    """Principal-branch axis-angle vector of a rotation matrix.

    Raises :class:`AngleAtPi` when the angle is within tolerance of pi,
    where the axis is ambiguous.
    """
    r = np.asarray(r, dtype=float)
    tr = float(np.trace(r))
    if tr <= -1.0 + _PI_TRACE_MARGIN:
        raise AngleAtPi(
            f"rotation angle within {math.sqrt(_PI_TRACE_MARGIN):.1e} of pi; "
            "principal log is ambiguous"
        )
    theta = math.acos(min(1.0, max(-1.0, 0.5 * (tr - 1.0))))
    w = vee(0.5 * (r - r.T))
    if theta < SMALL_ANGLE:
        return w
    return (theta / math.sin(theta)) * w


def left_jacobian(phi: np.ndarray) -> np.ndarray:
    """SO(3) left Jacobian V(phi); relates SE(3)-log translation to raw translation."""
    p = np.asarray(phi, dtype=float).reshape(3)
    theta2 = float(p @ p)
    k = hat(p)
    if theta2 < SMALL_ANGLE * SMALL_ANGLE:
        return np.eye(3) + 0.5 * k + (k @ k) / 6.0
    theta = math.sqrt(theta2)
    return (
        np.eye(3)
        + ((1.0 - math.cos(theta)) / theta2) * k
        + ((theta - math.sin(theta)) / (theta2 * theta)) * (k @ k)
    )


def left_jacobian_inv(phi: np.ndarray) -> np.ndarray:
    """Closed-form inverse of :func:`left_jacobian`."""
    p = np.asarray(phi, dtype=float).reshape(3)
    theta2 = float(p @ p)
    k = hat(p)
    if theta2 < SMALL_ANGLE * SMALL_ANGLE:
        return np.eye(3) - 0.5 * k + (k @ k) / 12.0
    theta = math.sqrt(theta2)
    coeff = (1.0 - 0.5 * theta * math.sin(theta) / (1.0 - math.cos(theta))) / theta2
    return np.eye(3) - 0.5 * k + coeff * (k @ k)


@dataclass(frozen=True)
class Pose:
    """A rigid motion: rotation matrix plus translation vector."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"expected 4x4 homogeneous matrix, got {m.shape}")
        if not np.allclose(m[3], [0.0, 0.0, 0.0, 1.0], atol=1e-9):
            raise ValueError("homogeneous matrix must have bottom row (0, 0, 0, 1)")
        return cls(m[:3, :3], m[:3, 3])

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map points (3,) or (N, 3) from this pose's frame into the parent frame."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            return self.rotation @ pts + self.translation
        return pts @ self.rotation.T + self.translation

    def validate(self, tol: float = 1e-9) -> None:
        """Check the rotation-matrix invariants (orthonormal, det +1)."""
        r = self.rotation
        if not np.allclose(r @ r.T, np.eye(3), atol=tol):
            raise ValueError("rotation is not orthonormal")
        if abs(float(np.linalg.det(r)) - 1.0) > tol:
            raise ValueError("rotation has determinant != 1")


@dataclass(frozen=True)
class Twist:
    """Lie-algebra coordinates (phi, t) of a rigid motion in a fixed chart."""

    phi: np.ndarray
    t: np.ndarray
    chart: Chart = Chart.SE3_LOG

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=float).reshape(3))
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float).reshape(3))

    @classmethod
    def zero(cls, chart: Chart = Chart.SE3_LOG) -> "Twist":
        return cls(np.zeros(3), np.zeros(3), chart)

    @classmethod
    def from_vec(cls, v: np.ndarray, chart: Chart = Chart.SE3_LOG) -> "Twist":
        v = np.asarray(v, dtype=float).reshape(6)
        return cls(v[:3], v[3:], chart)

    @property
    def vec(self) -> np.ndarray:
        return np.concatenate([self.phi, self.t])

    def _check_chart(self, other: "Twist") -> None:
        if self.chart is not other.chart:
            raise ChartMismatch(
                f"cannot combine twists from charts {self.chart.value} and {other.chart.value}"
            )

    def __neg__(self) -> "Twist":
        return Twist(-self.phi, -self.t, self.chart)

    def __add__(self, other: "Twist") -> "Twist":
        self._check_chart(other)
        return Twist(self.phi + other.phi, self.t + other.t, self.chart)

    def __sub__(self, other: "Twist") -> "Twist":
        self._check_chart(other)
        return Twist(self.phi - other.phi, self.t - other.t, self.chart)


def pose_log(p: Pose, chart: Chart = Chart.SE3_LOG) -> Twist:
    """Chart coordinates of a pose; inverse of :func:`pose_exp`.

    Requires the rotation angle to be strictly below pi (AngleAtPi otherwise).
    """
    phi = log_rot(p.rotation)
    if chart is Chart.SE3_LOG:
        t = left_jacobian_inv(phi) @ p.translation
    else:
        t = p.translation.copy()
    return Twist(phi, t, chart)


def pose_exp(x: Twist) -> Pose:
    """Pose for chart coordinates; inverse of :func:`pose_log` on its domain."""
    r = exp_rot(x.phi)
    if x.chart is Chart.SE3_LOG:
        t = left_jacobian(x.phi) @ x.t
    else:
        t = x.t.copy()
    return Pose(r, t)


def compose(a: Pose, b: Pose) -> Pose:
    """Homogeneous-matrix product a * b (apply b first, then a)."""
    return Pose(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def invert(p: Pose) -> Pose:
    rt = p.rotation.T
    return Pose(rt, -(rt @ p.translation))


def frobenius_dev(p: Pose) -> float:
    """Frobenius distance of the 4x4 homogeneous form from the identity."""
    dr = p.rotation - np.eye(3)
    return math.sqrt(float(np.sum(dr * dr)) + float(p.translation @ p.translation))


# Quaternions are stored in (x, y, z, w) order throughout the package.


def rot_to_quat(r: np.ndarray) -> np.ndarray:
    """Unit quaternion (x, y, z, w) for a rotation matrix (Shepperd's method)."""
    r = np.asarray(r, dtype=float)
    tr = float(np.trace(r))
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        w = 0.25 * s
        x = (r[2, 1] - r[1, 2]) / s
        y = (r[0, 2] - r[2, 0]) / s
        z = (r[1, 0] - r[0, 1]) / s
    elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
        s = math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
        w = (r[2, 1] - r[1, 2]) / s
        x = 0.25 * s
        y = (r[0, 1] + r[1, 0]) / s
        z = (r[0, 2] + r[2, 0]) / s
    elif r[1, 1] > r[2, 2]:
        s = math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
        w = (r[0, 2] - r[2, 0]) / s
        x = (r[0, 1] + r[1, 0]) / s
        y = 0.25 * s
        z = (r[1, 2] + r[2, 1]) / s
    else:
        s = math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
        w = (r[1, 0] - r[0, 1]) / s
        x = (r[0, 2] + r[2, 0]) / s
        y = (r[1, 2] + r[2, 1]) / s
        z = 0.25 * s
    q = np.array([x, y, z, w])
    return q / float(np.linalg.norm(q))


def quat_to_rot(q: np.ndarray) -> np.ndarray:
    """Rotation matrix for a quaternion (x, y, z, w); normalizes its input."""
    q = np.asarray(q, dtype=float).reshape(4)
    n = float(np.linalg.norm(q))
    if n < 1e-12:
        raise ValueError("quaternion norm is near zero")
    x, y, z, w = q / n
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )
