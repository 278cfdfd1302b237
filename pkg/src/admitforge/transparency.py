"""Transparency metrics: displayed impedance, parasitic impedance, cost maps.

The operator should feel the environment, not the device.  What the closed
loop actually displays is Z_disp = (1 + GYH Ze)/(GYH); the parasitic part
Z_disp - Ze = 1/(GYH) depends only on robot, admittance, and filter, so a
scalar cost can rank admittance parameters without reference to the
environment: a weighted sum of log parasitic magnitude over a frequency
grid, weighted toward the band where human motion lives.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .impedance import AdmittanceParams, ImpedanceParams, admittance_tf
from .loop_analysis import ParameterGrid
from .tf_core import FrequencyGrid, RationalTF, butterworth, format_tf, freq_response

__all__ = [
    "TransparencySpec",
    "CostMap",
    "displayed_impedance",
    "parasitic_magnitude",
    "cost",
    "cost_map",
    "default_weight",
    "default_grid",
]

# Loop gains with magnitude at or below this are treated as vanishing.
_GAIN_EPS = 1e-14


def default_weight() -> RationalTF:
    """Weight source emphasizing the band of voluntary human motion."""
    return butterworth(5, 5.0)


def default_grid() -> FrequencyGrid:
    return FrequencyGrid.log_spaced_hz(0.01, 30.0, 100)


@dataclass(frozen=True, eq=False)
class TransparencySpec:
    """Weight source, evaluation grid, and optional desired impedance.

    z_desired is advisory metadata for reports; the cost never reads it
    (the desired impedance cancels out of the parasitic term).  None means
    the desired impedance is the environment impedance itself.
    """

    weight: RationalTF
    grid: FrequencyGrid
    z_desired: ImpedanceParams | None = None

    def __post_init__(self):
        # Unit DC gain keeps cost values comparable across weight choices,
        # but scaled or zero weights are legitimate (cost is linear in the
        # weight), so deviation only warns.
        dc = abs(freq_response(self.weight, 0.0))
        if abs(dc - 1.0) > 1e-9:
            warnings.warn(f"weight DC gain is {dc:.6g}, not 1; "
                          "costs will be scaled accordingly")

    @classmethod
    def default(cls) -> "TransparencySpec":
        return cls(weight=default_weight(), grid=default_grid())


def _loop_gain(G: RationalTF, Y: RationalTF, H: RationalTF, omega):
    return freq_response(G, omega) * freq_response(Y, omega) * freq_response(H, omega)


def _check_gain(mag, omega) -> None:
    bad = np.atleast_1d(np.asarray(mag)) < _GAIN_EPS
    if np.any(bad):
        w = np.atleast_1d(np.asarray(omega, dtype=float))[bad].flat[0]
        raise ValueError(f"loop gain vanishes at omega={float(w):g} rad/s")


def displayed_impedance(G: RationalTF, Y: RationalTF, H: RationalTF, Ze: RationalTF, omega):
    """Closed-loop impedance felt at the end point: (1 + GYH Ze)/(GYH) at jw."""
    gyh = _loop_gain(G, Y, H, omega)
    _check_gain(np.abs(gyh), omega)
    return (1.0 + gyh * freq_response(Ze, omega)) / gyh


def parasitic_magnitude(G: RationalTF, Y: RationalTF, H: RationalTF, omega):
    """|Z_disp - Z_desired| = 1/|G Y H| at jw; scalar or array like omega."""
    gyh = _loop_gain(G, Y, H, omega)
    mag = np.abs(gyh)
    _check_gain(mag, omega)
    out = 1.0 / mag
    if np.ndim(omega) == 0:
        return float(out)
    return out


def _weight_samples(spec: TransparencySpec) -> np.ndarray:
    return np.abs(freq_response(spec.weight, spec.grid.points))


def _cost_from_gh(gh: np.ndarray, w_samples: np.ndarray, Y: RationalTF, omega: np.ndarray) -> float:
    """Shared cost kernel: cost() and cost_map() both route through here so a
    single-cell map is bit-identical to the direct call."""
    gyh = gh * freq_response(Y, omega)
    mag = np.abs(gyh)
    _check_gain(mag, omega)
    dz = 1.0 / mag
    return float(np.sum(w_samples * np.log10(dz)))


def cost(G: RationalTF, H: RationalTF, Y: RationalTF, spec: TransparencySpec) -> float:
    """Weighted log parasitic cost C = sum_k |W(jw_k)| log10 |dZ(jw_k)|."""
    omega = spec.grid.points
    gh = freq_response(G, omega) * freq_response(H, omega)
    return _cost_from_gh(gh, _weight_samples(spec), Y, omega)


@dataclass(frozen=True, eq=False)
class CostMap:
    """Per-cell transparency cost over a parameter grid; NaN marks cell errors."""

    grid: ParameterGrid
    cost: np.ndarray
    spec: TransparencySpec

    def __post_init__(self):
        c = np.asarray(self.cost, dtype=float)
        if c.shape != self.grid.shape:
            raise ValueError("cost array shape does not match grid")
        object.__setattr__(self, "cost", c)

    def to_csv(self, path) -> None:
        n_w = len(self.spec.grid)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# transparency cost map, log base 10\n")
            fh.write(f"# weight: {format_tf(self.spec.weight)}\n")
            fh.write(
                f"# omega grid: {n_w} {self.spec.grid.spacing} points "
                f"[{self.spec.grid.omega_lo:.12g}, {self.spec.grid.omega_hi:.12g}] rad/s\n"
            )
            fh.write(f"# m_spacing: {self.grid.m_spacing}\n")
            fh.write(f"# b_spacing: {self.grid.b_spacing}\n")
            fh.write("m,b,cost\n")
            for i, m in enumerate(self.grid.m_values):
                for j, b in enumerate(self.grid.b_values):
                    fh.write(f"{m:.12g},{b:.12g},{self.cost[i, j]:.12g}\n")

    @classmethod
    def from_csv(cls, path, spec: TransparencySpec | None = None) -> "CostMap":
        m_spacing, b_spacing = "logarithmic", "linear"
        rows = []
        header = None
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    body = line[1:].strip()
                    if body.startswith("m_spacing:"):
                        m_spacing = body.split(":", 1)[1].strip()
                    elif body.startswith("b_spacing:"):
                        b_spacing = body.split(":", 1)[1].strip()
                    continue
                if header is None:
                    header = line
                    continue
                m, b, c = line.split(",")
                rows.append((float(m), float(b), float(c)))
        if not rows:
            raise ValueError(f"not a cost map CSV: {path}")
        m_vals = sorted({r[0] for r in rows})
        b_vals = sorted({r[1] for r in rows})
        grid = ParameterGrid(np.array(m_vals), np.array(b_vals), m_spacing, b_spacing)
        costs = np.full(grid.shape, np.nan)
        im = {v: i for i, v in enumerate(m_vals)}
        ib = {v: j for j, v in enumerate(b_vals)}
        for m, b, c in rows:
            costs[im[m], ib[b]] = c
        return cls(grid=grid, cost=costs, spec=spec or TransparencySpec.default())


def cost_map(
    G: RationalTF,
    H: RationalTF,
    grid: ParameterGrid,
    spec: TransparencySpec,
    workers: int = 0,
) -> CostMap:
    """Evaluate cost() on every grid cell; failed cells hold NaN.

    workers > 1 splits the m-axis across threads with identical results.
    """
    omega = spec.grid.points
    gh = freq_response(G, omega) * freq_response(H, omega)
    w_samples = _weight_samples(spec)
    n_m, n_b = grid.shape
    out = np.full((n_m, n_b), np.nan)

    def run(i: int) -> None:
        m = grid.m_values[i]
        for j, b in enumerate(grid.b_values):
            try:
                Y = admittance_tf(AdmittanceParams(m, b))
                out[i, j] = _cost_from_gh(gh, w_samples, Y, omega)
            except (ValueError, FloatingPointError):
                pass

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(n_m)))
    else:
        for i in range(n_m):
            run(i)
    return CostMap(grid=grid, cost=out, spec=spec)
