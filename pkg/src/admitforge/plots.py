"""Figure rendering for the report outputs.

Each helper draws one figure from toolkit result objects and saves it to a
file next to the delimited data, using the non-interactive backend so the
CLI works headless.  Figures are diagnostic companions to the CSVs, not a
replacement for them.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .design import AllowableRegion
from .loop_analysis import StabilityMap, boundary_trace
from .robot_ident import FRFDataset
from .sim_oracle import SimResult
from .tf_core import RationalTF, freq_response
from .transparency import CostMap

__all__ = [
    "save_stability_figure",
    "save_cost_figure",
    "save_allowable_figure",
    "save_frf_figure",
    "save_bode_figure",
    "save_sim_figure",
]

_DPI = 150


def _finish(fig, path) -> str:
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return str(path)


def _grid_axes(ax, grid) -> None:
    if grid.m_spacing == "logarithmic":
        ax.set_xscale("log")
    if grid.b_spacing == "logarithmic":
        ax.set_yscale("log")
    ax.set_xlabel("virtual mass m [kg]")
    ax.set_ylabel("virtual damping b [Ns/m]")


def save_stability_figure(smap: StabilityMap, path) -> str:
    """Robust region shading with per-corner minimum-damping boundaries."""
    fig, ax = plt.subplots(figsize=(7, 5))
    mm, bb = np.meshgrid(smap.grid.m_values, smap.grid.b_values, indexing="ij")
    ax.pcolormesh(
        mm, bb, smap.robust.astype(float), cmap="Greys", vmin=0.0, vmax=1.6,
        shading="nearest",
    )
    for corner, curve in zip(smap.corners, boundary_trace(smap)):
        if curve.size == 0:
            continue
        label = f"m_eq={corner.mass:g}, b_eq={corner.damping:g}"
        ax.plot(curve[:, 0], curve[:, 1], lw=1.5, label=label)
    _grid_axes(ax, smap.grid)
    k_values = sorted({c.stiffness for c in smap.corners})
    ax.set_title(f"Robust stability map, k_eq = {', '.join(f'{k:g}' for k in k_values)} N/m")
    ax.legend(fontsize=8, loc="upper left")
    return _finish(fig, path)


def save_cost_figure(cmap: CostMap, path) -> str:
    fig, ax = plt.subplots(figsize=(7, 5))
    mm, bb = np.meshgrid(cmap.grid.m_values, cmap.grid.b_values, indexing="ij")
    pcm = ax.pcolormesh(mm, bb, cmap.cost, cmap="viridis", shading="nearest")
    fig.colorbar(pcm, ax=ax, label="parasitic impedance cost")
    _grid_axes(ax, cmap.grid)
    ax.set_title("Transparency cost map")
    return _finish(fig, path)


def save_allowable_figure(region: AllowableRegion, path) -> str:
    fig, ax = plt.subplots(figsize=(7, 5))
    mm, bb = np.meshgrid(region.grid.m_values, region.grid.b_values, indexing="ij")
    shaded = np.where(region.allowed, region.cost, np.nan)
    pcm = ax.pcolormesh(mm, bb, shaded, cmap="viridis", shading="nearest")
    fig.colorbar(pcm, ax=ax, label="cost over allowed cells")
    _grid_axes(ax, region.grid)
    ax.set_title("Allowable controller parameters")
    return _finish(fig, path)


def save_frf_figure(dataset: FRFDataset, path, fit: RationalTF | None = None) -> str:
    fig, (ax_g, ax_p) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    f = dataset.freq_hz
    ax_g.loglog(f, dataset.gain, "o", ms=4, label="measured")
    ax_p.semilogx(f, np.degrees(dataset.phase_rad), "o", ms=4, label="measured")
    if fit is not None:
        f_dense = np.logspace(np.log10(f[0]), np.log10(f[-1]), 300)
        resp = freq_response(fit, 2.0 * np.pi * f_dense)
        ax_g.loglog(f_dense, np.abs(resp), "-", lw=1.2, label="fit")
        ax_p.semilogx(f_dense, np.degrees(np.angle(resp)), "-", lw=1.2, label="fit")
    ax_g.set_ylabel("gain")
    ax_p.set_ylabel("phase [deg]")
    ax_p.set_xlabel("frequency [Hz]")
    ax_g.legend(fontsize=8)
    ax_g.set_title(f"Joint {dataset.joint_index} frequency response")
    return _finish(fig, path)


def save_bode_figure(tf: RationalTF, path, margin_deg: float | None = None) -> str:
    fig, (ax_g, ax_p) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    w = np.logspace(-2, 3, 600)
    resp = freq_response(tf, w)
    ax_g.loglog(w, np.abs(resp), lw=1.2)
    ax_g.axhline(1.0, color="gray", lw=0.8, ls="--")
    ax_p.semilogx(w, np.degrees(np.angle(resp)), lw=1.2)
    ax_g.set_ylabel("magnitude")
    ax_p.set_ylabel("phase [deg]")
    ax_p.set_xlabel("frequency [rad/s]")
    title = "Axis response"
    if margin_deg is not None:
        title += f" (phase margin {margin_deg:.1f} deg)"
    ax_g.set_title(title)
    return _finish(fig, path)


def save_sim_figure(result: SimResult, path, verdict: str | None = None) -> str:
    fig, (ax_v, ax_f) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax_v.plot(result.t, result.v, lw=1.0)
    ax_f.plot(result.t, result.f_int, lw=1.0, color="tab:red")
    ax_v.set_ylabel("velocity [m/s]")
    ax_f.set_ylabel("interaction force [N]")
    ax_f.set_xlabel("time [s]")
    title = "Loop simulation"
    if verdict:
        title += f" ({verdict})"
    if result.diverged:
        title += " [diverged]"
    ax_v.set_title(title)
    return _finish(fig, path)
