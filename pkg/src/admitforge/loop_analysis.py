"""Closed-loop stability analysis of the admittance-controlled interaction.

The loop couples the robot velocity response G, the rendered admittance Y,
a force low-pass filter H, and the equivalent load impedance Z feeding the
measured interaction force back.  The characteristic polynomial is formed
from raw numerator/denominator products with no cancellation, so hidden
unstable modes stay visible.  Stability over the virtual (m, b) plane is
judged at every corner of the load uncertainty box; a cell is robust only
when all corners are stable.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .impedance import AdmittanceParams, ImpedanceParams, admittance_tf, impedance_tf
from .tf_core import Polynomial, RationalTF, is_hurwitz

__all__ = [
    "LoopModel",
    "ParameterGrid",
    "StabilityMap",
    "char_poly",
    "robust_verdict",
    "stability_map",
    "boundary_trace",
    "VERDICT_STABLE",
    "VERDICT_UNSTABLE",
    "VERDICT_ERROR",
]

VERDICT_STABLE = 1
VERDICT_UNSTABLE = 0
VERDICT_ERROR = -1


def _is_velocity_impedance(tf: RationalTF) -> bool:
    den = tf.den.coeffs
    return den.size == 2 and den[0] == 1.0 and den[1] == 0.0


@dataclass(frozen=True, eq=False)
class LoopModel:
    """One fully specified interaction loop.

    G: robot axis velocity response, Y: rendered admittance, H: force
    filter, Zeq: equivalent load impedance (must have denominator s, the
    velocity-to-force form).
    """

    G: RationalTF
    Y: RationalTF
    H: RationalTF
    Zeq: RationalTF

    def __post_init__(self):
        if not _is_velocity_impedance(self.Zeq):
            raise ValueError("Zeq must be a velocity-to-force impedance with denominator s")


def char_poly(model: LoopModel) -> Polynomial:
    """Characteristic polynomial D_G D_Y D_H D_Z + N_G N_Y N_H N_Z."""
    dd = model.G.den * model.Y.den * model.H.den * model.Zeq.den
    nn = model.G.num * model.Y.num * model.H.num * model.Zeq.num
    p = dd + nn
    if p.is_zero or p.degree < 1:
        raise ValueError("degenerate loop: characteristic polynomial is constant")
    return p


def robust_verdict(
    G: RationalTF,
    H: RationalTF,
    Y: RationalTF,
    corners: Sequence[ImpedanceParams],
    margin: float = 0.0,
) -> tuple[bool, list[bool]]:
    """Stability at every load corner; robust means all corners stable."""
    corners = list(corners)
    if not corners:
        raise ValueError("need at least one impedance corner")
    per_corner = []
    for corner in corners:
        model = LoopModel(G=G, Y=Y, H=H, Zeq=impedance_tf(corner))
        per_corner.append(is_hurwitz(char_poly(model), margin))
    return all(per_corner), per_corner


@dataclass(frozen=True, eq=False)
class ParameterGrid:
    """Virtual mass/damping evaluation grid, strictly increasing positive axes."""

    m_values: np.ndarray
    b_values: np.ndarray
    m_spacing: str = "logarithmic"
    b_spacing: str = "linear"

    def __post_init__(self):
        for attr, spacing in (("m_values", self.m_spacing), ("b_values", self.b_spacing)):
            vals = np.atleast_1d(np.asarray(getattr(self, attr), dtype=float)).ravel()
            if vals[0] <= 0.0:
                raise ValueError(f"{attr} must be strictly positive")
            if vals.size > 1 and np.any(np.diff(vals) <= 0.0):
                raise ValueError(f"{attr} must be strictly increasing")
            if spacing not in ("linear", "logarithmic"):
                raise ValueError(f"unknown spacing {spacing!r}")
            object.__setattr__(self, attr, vals)
            vals.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.m_values.size, self.b_values.size

    @classmethod
    def build(
        cls,
        m_lo: float,
        m_hi: float,
        n_m: int,
        b_lo: float,
        b_hi: float,
        n_b: int,
        m_spacing: str = "logarithmic",
        b_spacing: str = "linear",
    ) -> "ParameterGrid":
        def axis(lo, hi, n, spacing):
            if n < 1 or lo <= 0 or hi < lo:
                raise ValueError("grid axis needs n >= 1 and 0 < lo <= hi")
            if n == 1:
                return np.array([lo])
            if spacing == "logarithmic":
                return np.logspace(np.log10(lo), np.log10(hi), n)
            return np.linspace(lo, hi, n)

        return cls(
            m_values=axis(m_lo, m_hi, n_m, m_spacing),
            b_values=axis(b_lo, b_hi, n_b, b_spacing),
            m_spacing=m_spacing,
            b_spacing=b_spacing,
        )

    @classmethod
    def default(cls) -> "ParameterGrid":
        return cls.build(0.1, 100.0, 60, 1.0, 2000.0, 200)


@dataclass(frozen=True, eq=False)
class StabilityMap:
    """Per-cell, per-corner stability verdicts over a parameter grid.

    verdicts[i, j, c] is 1 stable / 0 unstable / -1 error for
    (m_values[i], b_values[j], corners[c]); robust[i, j] is the AND over
    corners of verdict == stable.
    """

    grid: ParameterGrid
    corners: tuple[ImpedanceParams, ...]
    verdicts: np.ndarray
    robust: np.ndarray
    margin: float = 0.0

    def __post_init__(self):
        n_m, n_b = self.grid.shape
        v = np.asarray(self.verdicts, dtype=np.int8)
        r = np.asarray(self.robust, dtype=bool)
        if v.shape != (n_m, n_b, len(self.corners)):
            raise ValueError("verdict array shape does not match grid and corners")
        if r.shape != (n_m, n_b):
            raise ValueError("robust array shape does not match grid")
        object.__setattr__(self, "corners", tuple(self.corners))
        object.__setattr__(self, "verdicts", v)
        object.__setattr__(self, "robust", r)

    def to_csv(self, path) -> None:
        corner_text = "; ".join(
            f"{c.mass:.12g},{c.damping:.12g},{c.stiffness:.12g}" for c in self.corners
        )
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# stability map: 1 stable, 0 unstable, -1 error\n")
            fh.write(f"# margin: {self.margin:.12g}\n")
            fh.write(f"# m_spacing: {self.grid.m_spacing}\n")
            fh.write(f"# b_spacing: {self.grid.b_spacing}\n")
            fh.write(f"# corners (m_eq,b_eq,k_eq): {corner_text}\n")
            cols = ",".join(f"corner_{c}" for c in range(len(self.corners)))
            fh.write(f"m,b,{cols},robust\n")
            for i, m in enumerate(self.grid.m_values):
                for j, b in enumerate(self.grid.b_values):
                    verdicts = ",".join(str(int(v)) for v in self.verdicts[i, j])
                    fh.write(f"{m:.12g},{b:.12g},{verdicts},{int(self.robust[i, j])}\n")

    @classmethod
    def from_csv(cls, path) -> "StabilityMap":
        margin = 0.0
        m_spacing, b_spacing = "logarithmic", "linear"
        corners: list[ImpedanceParams] = []
        header: list[str] = []
        rows: list[list[str]] = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    body = line[1:].strip()
                    if body.startswith("margin:"):
                        margin = float(body.split(":", 1)[1])
                    elif body.startswith("m_spacing:"):
                        m_spacing = body.split(":", 1)[1].strip()
                    elif body.startswith("b_spacing:"):
                        b_spacing = body.split(":", 1)[1].strip()
                    elif body.startswith("corners"):
                        for part in body.split(":", 1)[1].split(";"):
                            m_eq, b_eq, k_eq = (float(x) for x in part.split(","))
                            corners.append(ImpedanceParams(m_eq, b_eq, k_eq))
                    continue
                if not header:
                    header = line.split(",")
                    continue
                rows.append(line.split(","))
        if not corners or not rows:
            raise ValueError(f"not a stability map CSV: {path}")
        m_vals = sorted({float(r[0]) for r in rows})
        b_vals = sorted({float(r[1]) for r in rows})
        grid = ParameterGrid(np.array(m_vals), np.array(b_vals), m_spacing, b_spacing)
        index_m = {v: i for i, v in enumerate(m_vals)}
        index_b = {v: j for j, v in enumerate(b_vals)}
        verdicts = np.full((len(m_vals), len(b_vals), len(corners)), VERDICT_ERROR, np.int8)
        robust = np.zeros((len(m_vals), len(b_vals)), bool)
        for r in rows:
            i, j = index_m[float(r[0])], index_b[float(r[1])]
            verdicts[i, j, :] = [int(x) for x in r[2:-1]]
            robust[i, j] = bool(int(r[-1]))
        return cls(grid=grid, corners=tuple(corners), verdicts=verdicts,
                   robust=robust, margin=margin)


def _map_column(
    G: RationalTF,
    H: RationalTF,
    m: float,
    b_values: np.ndarray,
    corner_tfs: Sequence[RationalTF | None],
    margin: float,
) -> np.ndarray:
    out = np.empty((b_values.size, len(corner_tfs)), np.int8)
    for j, b in enumerate(b_values):
        Y = admittance_tf(AdmittanceParams(m, b))
        for c, Zeq in enumerate(corner_tfs):
            if Zeq is None:
                out[j, c] = VERDICT_ERROR
                continue
            try:
                stable = is_hurwitz(char_poly(LoopModel(G=G, Y=Y, H=H, Zeq=Zeq)), margin)
            except (ValueError, np.linalg.LinAlgError):
                out[j, c] = VERDICT_ERROR
            else:
                out[j, c] = VERDICT_STABLE if stable else VERDICT_UNSTABLE
    return out


def stability_map(
    G: RationalTF,
    H: RationalTF,
    grid: ParameterGrid,
    corners: Sequence[ImpedanceParams],
    margin: float = 0.0,
    workers: int = 0,
) -> StabilityMap:
    """Evaluate robust_verdict on every grid cell.

    Cells where polynomial assembly or rooting fails get the error verdict
    and are never robust.  workers > 1 splits the m-axis across threads;
    results are identical to the serial path.
    """
    corners = tuple(corners)
    if not corners:
        raise ValueError("need at least one impedance corner")
    corner_tfs: list[RationalTF | None] = []
    for corner in corners:
        try:
            corner_tfs.append(impedance_tf(corner))
        except ValueError:
            corner_tfs.append(None)
    n_m, n_b = grid.shape
    verdicts = np.empty((n_m, n_b, len(corners)), np.int8)

    def run(i: int) -> None:
        verdicts[i] = _map_column(G, H, grid.m_values[i], grid.b_values, corner_tfs, margin)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(n_m)))
    else:
        for i in range(n_m):
            run(i)
    robust = np.all(verdicts == VERDICT_STABLE, axis=2)
    return StabilityMap(grid=grid, corners=corners, verdicts=verdicts,
                        robust=robust, margin=margin)


def boundary_trace(smap: StabilityMap) -> list[np.ndarray]:
    """Minimum stable damping versus mass, one (n, 2) polyline per corner.

    Masses whose whole damping column is unstable for that corner are
    skipped, so polylines may be shorter than the mass axis.
    """
    curves = []
    for c in range(len(smap.corners)):
        pts = []
        stable = smap.verdicts[:, :, c] == VERDICT_STABLE
        for i, m in enumerate(smap.grid.m_values):
            js = np.flatnonzero(stable[i])
            if js.size:
                pts.append((m, smap.grid.b_values[js[0]]))
        curves.append(np.array(pts).reshape(-1, 2))
    return curves
