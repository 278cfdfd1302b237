"""Serial-arm kinematics: DH chains, Jacobians, and Cartesian-axis dynamics.

The toolkit treats the manipulator as a set of identified joint-level
velocity transfer functions.  This module maps those joint dynamics into a
single Cartesian axis at a nominal posture: the Jacobian and its
pseudoinverse give the contribution weight of each joint, and the weighted
parallel combination yields the end-point transfer function.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

from .tf_core import IDENTITY_TF, RationalTF

__all__ = [
    "DHTable",
    "JointConfig",
    "Pose",
    "CartesianTF",
    "DEFAULT_JOINT_LIMITS",
    "forward_kinematics",
    "jacobian",
    "pseudoinverse",
    "cartesian_tf",
    "identity_joint_tfs",
]

N_JOINTS = 7

# Symmetric position limits in radians, odd joints then even joints alternating.
DEFAULT_JOINT_LIMITS = np.array([2.967, 2.094, 2.967, 2.094, 2.967, 2.094, 2.967])

# Cartesian axis names to row/column indices of the 6x7 geometric Jacobian.
AXIS_INDEX = {"x": 0, "y": 1, "z": 2, "rx": 3, "ry": 4, "rz": 5}


def _vec7(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size != N_JOINTS:
        raise ValueError(f"{name} must have {N_JOINTS} entries, got {arr.size}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class DHTable:
    """Classical Denavit-Hartenberg parameters for a 7-joint revolute chain.

    Link transform convention: Rz(theta) Tz(d) Tx(a) Rx(alpha), applied in
    that order, with theta = q_i + theta_offset_i.
    """

    d: np.ndarray
    a: np.ndarray
    alpha: np.ndarray
    theta_offset: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "d", _vec7(self.d, "d"))
        object.__setattr__(self, "a", _vec7(self.a, "a"))
        object.__setattr__(self, "alpha", _vec7(self.alpha, "alpha"))
        object.__setattr__(self, "theta_offset", _vec7(self.theta_offset, "theta_offset"))
        for arr in (self.d, self.a, self.alpha, self.theta_offset):
            arr.setflags(write=False)

    @classmethod
    def from_csv(cls, path) -> "DHTable":
        """Load from CSV with columns joint,d_m,a_m,alpha_rad,theta_offset_rad."""
        rows = {}
        with open(path, "r", encoding="utf-8") as fh:
            filtered = (ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#"))
            reader = csv.DictReader(filtered)
            for rec in reader:
                try:
                    idx = int(rec["joint"])
                    rows[idx] = (
                        float(rec["d_m"]),
                        float(rec["a_m"]),
                        float(rec["alpha_rad"]),
                        float(rec["theta_offset_rad"]),
                    )
                except (KeyError, TypeError, ValueError) as exc:
                    raise ValueError(f"bad DH row in {path}: {rec!r}") from exc
        if sorted(rows) != list(range(1, N_JOINTS + 1)):
            raise ValueError(f"DH table in {path} must define joints 1..{N_JOINTS}")
        cols = np.array([rows[i] for i in range(1, N_JOINTS + 1)])
        return cls(d=cols[:, 0], a=cols[:, 1], alpha=cols[:, 2], theta_offset=cols[:, 3])

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("joint,d_m,a_m,alpha_rad,theta_offset_rad\n")
            for i in range(N_JOINTS):
                fh.write(
                    f"{i + 1},{self.d[i]:.17g},{self.a[i]:.17g},"
                    f"{self.alpha[i]:.17g},{self.theta_offset[i]:.17g}\n"
                )

    @classmethod
    def iiwa7_r800(cls) -> "DHTable":
        """Built-in table for the 7 kg payload, 800 mm reach arm with tool plate."""
        ref = resources.files("admitforge.data").joinpath("iiwa7_r800_dh.csv")
        with resources.as_file(ref) as path:
            return cls.from_csv(path)


@dataclass(frozen=True, eq=False)
class JointConfig:
    """Joint position vector checked against symmetric position limits."""

    theta: np.ndarray
    limits: np.ndarray = field(default_factory=lambda: DEFAULT_JOINT_LIMITS.copy())

    def __post_init__(self):
        object.__setattr__(self, "theta", _vec7(self.theta, "theta"))
        object.__setattr__(self, "limits", _vec7(self.limits, "limits"))
        for i in range(N_JOINTS):
            if abs(self.theta[i]) > self.limits[i]:
                raise ValueError(
                    f"joint {i + 1} position {self.theta[i]:.4f} rad exceeds "
                    f"limit +/-{self.limits[i]:.4f} rad"
                )
        self.theta.setflags(write=False)
        self.limits.setflags(write=False)


@dataclass(frozen=True, eq=False)
class Pose:
    """End-point position (m) and rotation matrix in the base frame."""

    position: np.ndarray
    rotation: np.ndarray


@dataclass(frozen=True, eq=False)
class CartesianTF:
    """End-point transfer function on one Cartesian axis with its joint weights."""

    tf: RationalTF
    weights: np.ndarray
    row: str
    col: str


def _link_transform(theta: float, d: float, a: float, alpha: float) -> np.ndarray:
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _frames(dh: DHTable, config: JointConfig) -> list[np.ndarray]:
    """Cumulative base-to-frame transforms, one per joint."""
    frames = []
    T = np.eye(4)
    theta = config.theta + dh.theta_offset
    for i in range(N_JOINTS):
        T = T @ _link_transform(theta[i], dh.d[i], dh.a[i], dh.alpha[i])
        frames.append(T)
    return frames


def forward_kinematics(dh: DHTable, config: JointConfig) -> Pose:
    T = _frames(dh, config)[-1]
    return Pose(position=T[:3, 3].copy(), rotation=T[:3, :3].copy())


def jacobian(dh: DHTable, config: JointConfig) -> np.ndarray:
    """Geometric Jacobian (6x7): linear velocity rows then angular rows."""
    frames = _frames(dh, config)
    p_end = frames[-1][:3, 3]
    J = np.zeros((6, N_JOINTS))
    z_prev = np.array([0.0, 0.0, 1.0])
    p_prev = np.zeros(3)
    for i in range(N_JOINTS):
        J[:3, i] = np.cross(z_prev, p_end - p_prev)
        J[3:, i] = z_prev
        z_prev = frames[i][:3, 2]
        p_prev = frames[i][:3, 3]
    return J


def pseudoinverse(J: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudoinverse, truncating singular values < 1e-10 * s_max."""
    J = np.asarray(J, dtype=float)
    return np.linalg.pinv(J, rcond=1e-10)


def identity_joint_tfs() -> tuple[RationalTF, ...]:
    return (IDENTITY_TF,) * N_JOINTS


def cartesian_tf(
    dh: DHTable,
    config: JointConfig,
    joint_tfs: Sequence[RationalTF],
    row: str = "x",
    col: str = "x",
) -> CartesianTF:
    """Map joint velocity dynamics into one Cartesian axis at a fixed posture.

    With joint responses T_i, the axis response is sum_i k_i T_i where
    k_i = J[row, i] * Jpinv[i, col].  For an exact joint-space model the
    weights sum to (J Jpinv)[row, col], which is 1 on a reachable axis.

    Branches whose weight is below 1e-12 of the largest are left out of the
    transfer function (they would only inject roundoff-sized coefficients);
    the returned weights array keeps the raw values.
    """
    if row not in AXIS_INDEX or col not in AXIS_INDEX:
        raise ValueError(f"axis names must be one of {sorted(AXIS_INDEX)}")
    joint_tfs = tuple(joint_tfs)
    if len(joint_tfs) != N_JOINTS:
        raise ValueError(f"need {N_JOINTS} joint transfer functions, got {len(joint_tfs)}")
    J = jacobian(dh, config)
    Jp = pseudoinverse(J)
    r, c = AXIS_INDEX[row], AXIS_INDEX[col]
    weights = J[r, :] * Jp[:, c]
    cutoff = 1e-12 * np.max(np.abs(weights))
    total = None
    for k, tf in zip(weights, joint_tfs):
        if abs(k) <= cutoff:
            continue
        term = k * tf
        total = term if total is None else total + term
    if total is None:
        total = RationalTF.constant(0.0)
    return CartesianTF(tf=total, weights=weights, row=row, col=col)
