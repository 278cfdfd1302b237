"""Shared fixtures and independent oracles for the test suite.

The reference joint models and the nominal posture are frozen here as
literals; tests never read them back out of the package data files, so a
regression in those files shows up as a mismatch instead of propagating
into the expected values.
"""

from __future__ import annotations

import os

import numpy as np
import pytest

from admitforge.impedance import ImpedanceParams
from admitforge.kinematics import DHTable, JointConfig, cartesian_tf, identity_joint_tfs
from admitforge.loop_analysis import ParameterGrid, stability_map
from admitforge.tf_core import Polynomial, RationalTF, butterworth
from admitforge.transparency import TransparencySpec, cost_map

# Reference second-order joint velocity responses (reference -> actual).
JOINT2_NUM = [25.69, 749.3]
JOINT2_DEN = [1.0, 29.04, 752.7]
JOINT4_NUM = [65.99, 1679.0]
JOINT4_DEN = [1.0, 72.97, 1723.0]
JOINT6_NUM = [63.77, 6564.0]
JOINT6_DEN = [1.0, 95.39, 6513.0]

# Nominal task posture in radians.
THETA_NOM = np.array([0.0, np.pi / 3, 0.0, -np.pi / 4, 0.0, 5 * np.pi / 12, 0.0])

# Axis weights the characterization is expected to reproduce.
EXPECTED_WEIGHTS = {2: -0.1896, 4: 1.6550, 6: -0.4654}


def make_tf(num, den) -> RationalTF:
    return RationalTF(Polynomial(num), Polynomial(den))


@pytest.fixture(autouse=True)
def scrub_env(monkeypatch):
    """Keep ambient ADMITFORGE_* variables out of every test."""
    for name in [n for n in os.environ if n.startswith("ADMITFORGE_")]:
        monkeypatch.delenv(name)


@pytest.fixture(scope="session")
def joint_tfs_246():
    return {
        2: make_tf(JOINT2_NUM, JOINT2_DEN),
        4: make_tf(JOINT4_NUM, JOINT4_DEN),
        6: make_tf(JOINT6_NUM, JOINT6_DEN),
    }


@pytest.fixture(scope="session")
def g_axis(joint_tfs_246):
    """Characterized x-axis response from the built-in DH table."""
    tfs = list(identity_joint_tfs())
    for idx, tf in joint_tfs_246.items():
        tfs[idx - 1] = tf
    ctf = cartesian_tf(DHTable.iiwa7_r800(), JointConfig(THETA_NOM), tfs, "x", "x")
    return ctf


@pytest.fixture(scope="session")
def h_filter():
    return butterworth(2, 5.0)


@pytest.fixture(scope="session")
def corners_17000():
    return [
        ImpedanceParams(m, b, 17000.0) for m in (0.0, 5.0) for b in (0.0, 41.0)
    ]


@pytest.fixture(scope="session")
def corners_401():
    return [
        ImpedanceParams(m, b, 401.0) for m in (0.0, 5.0) for b in (0.0, 41.0)
    ]


@pytest.fixture(scope="session")
def default_maps(g_axis, h_filter, corners_17000):
    """Stability and cost maps over the default grid, shared across tests."""
    grid = ParameterGrid.default()
    smap = stability_map(g_axis.tf, h_filter, grid, corners_17000, workers=4)
    cmap = cost_map(g_axis.tf, h_filter, grid, TransparencySpec.default(), workers=4)
    return smap, cmap


def routh_hurwitz(coeffs) -> bool:
    """Independent strict-stability oracle via the Routh array.

    Returns True iff all roots lie strictly in the open left half-plane.
    Exact zero pivots (marginal cases) report False, matching the strict
    convention.  Random float coefficients never hit the special cases.
    """
    c = np.asarray(coeffs, dtype=float)
    c = np.trim_zeros(c, "f")
    if c.size == 0:
        raise ValueError("zero polynomial")
    if c[0] < 0:
        c = -c
    n = c.size - 1
    if n == 0:
        return True
    # A sign change or zero anywhere among the coefficients already rules
    # out strict Hurwitz for real polynomials.
    if np.any(c <= 0):
        return False
    rows = [c[0::2].copy(), c[1::2].copy()]
    if rows[1].size == 0:
        rows[1] = np.array([0.0])
    first_col = [rows[0][0], rows[1][0]]
    prev, cur = rows[0], rows[1]
    for _ in range(n - 1):
        if cur[0] == 0.0:
            return False
        width = prev.size - 1
        nxt = np.zeros(max(width, 1))
        # Routh entry: (cur[0]*prev[k+1] - prev[0]*cur[k+1]) / cur[0]
        for k in range(width):
            a = prev[k + 1] if k + 1 < prev.size else 0.0
            b = cur[k + 1] if k + 1 < cur.size else 0.0
            nxt[k] = (cur[0] * a - prev[0] * b) / cur[0]
        first_col.append(nxt[0])
        prev, cur = cur, nxt
    return all(v > 0.0 for v in first_col[:-1]) and first_col[-1] > 0.0


def random_stable_tf(rng: np.random.Generator, max_order: int = 3,
                     pole_range=(-100.0, -0.5)) -> RationalTF:
    """Random strictly stable transfer function with bounded gain spread."""
    n = int(rng.integers(1, max_order + 1))
    poles = []
    while len(poles) < n:
        if n - len(poles) >= 2 and rng.random() < 0.5:
            re = rng.uniform(*pole_range)
            im = rng.uniform(0.5, 50.0)
            poles += [complex(re, im), complex(re, -im)]
        else:
            poles.append(complex(rng.uniform(*pole_range), 0.0))
    den = np.real(np.poly(np.array(poles[:n])))
    num = rng.uniform(-1.0, 1.0, size=int(rng.integers(1, n + 1)))
    if abs(num[0]) < 1e-3:
        num[0] = 1e-3
    # Normalize to unit gain at 1 rad/s so products stay well scaled.
    tf = make_tf(num, den)
    g1 = abs(np.polyval(num, 1j) / np.polyval(den, 1j))
    return make_tf(num / g1, den)
