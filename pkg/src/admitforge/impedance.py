"""Mechanical impedance and admittance models of the coupled load.

The controller renders a virtual admittance 1/(ms + b).  The human arm and
the environment each contribute a mass-damper-spring impedance; because the
two act on the same motion, their equivalent is the componentwise sum of
parameters.  Uncertain parameters are handled through interval bounds whose
corner combinations feed the robust stability analysis.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Mapping, Sequence

from .tf_core import Polynomial, RationalTF

__all__ = [
    "AdmittanceParams",
    "ImpedanceParams",
    "ImpedanceBounds",
    "admittance_tf",
    "impedance_tf",
    "equivalent",
    "corner_set",
    "default_bounds",
]

AXES = ("mass", "damping", "stiffness")


@dataclass(frozen=True)
class AdmittanceParams:
    """Virtual mass (kg) and damping (Ns/m) rendered by the controller."""

    mass: float
    damping: float

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ValueError(f"virtual mass must be positive, got {self.mass}")
        if self.damping <= 0.0:
            raise ValueError(f"virtual damping must be positive, got {self.damping}")


@dataclass(frozen=True)
class ImpedanceParams:
    """Mass-damper-spring impedance parameters; all nonnegative."""

    mass: float
    damping: float
    stiffness: float

    def __post_init__(self):
        for name in AXES:
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")


@dataclass(frozen=True)
class ImpedanceBounds:
    """Interval bounds (lo, hi) per impedance axis."""

    mass: tuple[float, float]
    damping: tuple[float, float]
    stiffness: tuple[float, float]

    def __post_init__(self):
        for name in AXES:
            lo, hi = getattr(self, name)
            if lo < 0.0 or hi < lo:
                raise ValueError(f"bad {name} bounds ({lo}, {hi}): need 0 <= lo <= hi")
            object.__setattr__(self, name, (float(lo), float(hi)))


def default_bounds() -> ImpedanceBounds:
    """Operator-arm and drilling-task ranges used throughout the toolkit."""
    return ImpedanceBounds(mass=(0.0, 5.0), damping=(0.0, 41.0), stiffness=(401.0, 17000.0))


def admittance_tf(params: AdmittanceParams) -> RationalTF:
    """Y(s) = 1 / (m s + b), mapping force to velocity."""
    return RationalTF(Polynomial([1.0]), Polynomial([params.mass, params.damping]))


def impedance_tf(params: ImpedanceParams) -> RationalTF:
    """Z(s) = (m s^2 + b s + k) / s, mapping velocity to force."""
    if params.mass == 0.0 and params.damping == 0.0 and params.stiffness == 0.0:
        raise ValueError("degenerate impedance: all parameters are zero")
    return RationalTF(
        Polynomial([params.mass, params.damping, params.stiffness]),
        Polynomial([1.0, 0.0]),
    )


def equivalent(human: ImpedanceParams, environment: ImpedanceParams) -> ImpedanceParams:
    """Componentwise sum: both impedances act on the same end-point motion."""
    return ImpedanceParams(
        mass=human.mass + environment.mass,
        damping=human.damping + environment.damping,
        stiffness=human.stiffness + environment.stiffness,
    )


def corner_set(
    bounds: ImpedanceBounds,
    vary: Sequence[str] = ("mass", "damping"),
    pinned: Mapping[str, float] | None = None,
) -> list[ImpedanceParams]:
    """Corner combinations of the bound intervals.

    Every axis named in ``vary`` contributes its (lo, hi) endpoints to a
    Cartesian product; each remaining axis takes the value supplied in
    ``pinned``.  Corners come out in a fixed order: axes iterate as
    (mass, damping, stiffness), lo before hi.
    """
    vary = tuple(vary)
    if not vary:
        raise ValueError("corner_set needs at least one varied axis")
    for name in vary:
        if name not in AXES:
            raise ValueError(f"unknown impedance axis {name!r}")
    if len(set(vary)) != len(vary):
        raise ValueError("duplicate axis in vary")
    pinned = dict(pinned or {})
    choices = []
    for name in AXES:
        if name in vary:
            lo, hi = getattr(bounds, name)
            choices.append((lo, hi) if hi > lo else (lo,))
        else:
            if name not in pinned:
                raise ValueError(f"axis {name!r} is not varied and has no pinned value")
            choices.append((float(pinned[name]),))
    return [ImpedanceParams(m, b, k) for m, b, k in product(*choices)]
