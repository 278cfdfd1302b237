"""Allowable-region construction and controller parameter selection.

A cell of the virtual (m, b) plane is allowable when it is robustly stable
across every load corner and its transparency cost evaluated cleanly.  The
selection policies then pick one cell: plain cost minimization, or cost
minimization restricted to cells that stay allowable under a parameter
margin (damping reduced by delta_b, mass increased by delta_m).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .impedance import AdmittanceParams
from .loop_analysis import ParameterGrid, StabilityMap
from .transparency import CostMap

__all__ = ["AllowableRegion", "superimpose", "select"]


def _grids_equal(a: ParameterGrid, b: ParameterGrid) -> bool:
    return (
        np.array_equal(a.m_values, b.m_values)
        and np.array_equal(a.b_values, b.b_values)
        and a.m_spacing == b.m_spacing
        and a.b_spacing == b.b_spacing
    )


@dataclass(frozen=True, eq=False)
class AllowableRegion:
    """Robustly stable cells with their transparency costs.

    allowed[i, j] marks (m_values[i], b_values[j]); cost is NaN exactly
    where a cell is not allowed.  The source maps ride along as provenance.
    """

    grid: ParameterGrid
    allowed: np.ndarray
    cost: np.ndarray
    stability: StabilityMap
    transparency: CostMap

    def __post_init__(self):
        a = np.asarray(self.allowed, dtype=bool)
        c = np.asarray(self.cost, dtype=float)
        if a.shape != self.grid.shape or c.shape != self.grid.shape:
            raise ValueError("allowed/cost shape does not match grid")
        if not np.array_equal(np.isfinite(c), a):
            raise ValueError("cost must be finite exactly on allowed cells")
        object.__setattr__(self, "allowed", a)
        object.__setattr__(self, "cost", c)

    @property
    def is_empty(self) -> bool:
        return not bool(self.allowed.any())

    def contains(self, m: float, b: float) -> bool:
        """True when the nearest grid cell to (m, b) is allowed."""
        i = int(np.argmin(np.abs(self.grid.m_values - m)))
        j = int(np.argmin(np.abs(self.grid.b_values - b)))
        return bool(self.allowed[i, j])

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# allowable region: robust stability AND finite transparency cost\n")
            fh.write(f"# m_spacing: {self.grid.m_spacing}\n")
            fh.write(f"# b_spacing: {self.grid.b_spacing}\n")
            fh.write("m,b,allowed,cost\n")
            for i, m in enumerate(self.grid.m_values):
                for j, b in enumerate(self.grid.b_values):
                    c = self.cost[i, j]
                    c_txt = f"{c:.12g}" if np.isfinite(c) else ""
                    fh.write(f"{m:.12g},{b:.12g},{int(self.allowed[i, j])},{c_txt}\n")


def superimpose(stab: StabilityMap, cmap: CostMap) -> AllowableRegion:
    """Intersect robust stability with clean cost cells on one shared grid."""
    if not _grids_equal(stab.grid, cmap.grid):
        raise ValueError("stability and cost maps were computed on different grids")
    allowed = stab.robust & np.isfinite(cmap.cost)
    cost = np.where(allowed, cmap.cost, np.nan)
    return AllowableRegion(
        grid=stab.grid, allowed=allowed, cost=cost, stability=stab, transparency=cmap
    )


def _margin_allowed(region: AllowableRegion, delta_b: float, delta_m: float) -> np.ndarray:
    """Cells whose whole [m, m+delta_m] x [b-delta_b, b] grid neighborhood is allowed."""
    m_vals, b_vals = region.grid.m_values, region.grid.b_values
    out = np.zeros_like(region.allowed)
    for i, m in enumerate(m_vals):
        i_hi = int(np.searchsorted(m_vals, m + delta_m, side="right"))
        for j, b in enumerate(b_vals):
            j_lo = int(np.searchsorted(b_vals, b - delta_b, side="left"))
            out[i, j] = bool(region.allowed[i:i_hi, j_lo:j + 1].all())
    return out


def select(
    region: AllowableRegion,
    policy: str = "min-cost",
    delta_b: float = 0.0,
    delta_m: float = 0.0,
) -> AdmittanceParams:
    """Pick the allowed cell of smallest cost.

    Ties break toward smaller damping, then smaller mass (both favor
    transparency).  The min-cost-with-margin policy first drops cells that
    would leave the region if b fell by delta_b or m rose by delta_m,
    checked over every grid cell in that rectangle.
    """
    if policy == "min-cost":
        feasible = region.allowed
    elif policy == "min-cost-with-margin":
        if delta_b < 0.0 or delta_m < 0.0:
            raise ValueError("margins must be nonnegative")
        feasible = _margin_allowed(region, delta_b, delta_m)
    else:
        raise ValueError(f"unknown selection policy {policy!r}")
    idx = np.argwhere(feasible)
    if idx.size == 0:
        raise ValueError("no feasible cell: region is empty under this policy")
    best = None
    best_key = None
    for i, j in idx:
        key = (region.cost[i, j], region.grid.b_values[j], region.grid.m_values[i])
        if best_key is None or key < best_key:
            best_key = key
            best = (i, j)
    i, j = best
    return AdmittanceParams(mass=float(region.grid.m_values[i]),
                            damping=float(region.grid.b_values[j]))
