"""Admittance-controller design toolkit for force-coupled robot tasks.

Pipeline: identify joint dynamics from frequency sweeps, synthesize the
Cartesian axis response through the manipulator Jacobian, map robust
stability and transparency cost over the virtual (mass, damping) plane,
intersect them into the allowable region, select parameters, and
cross-check any cell with a time-domain simulation oracle.
"""

from .tf_core import (
    FrequencyGrid,
    Polynomial,
    RationalTF,
    butterworth,
    combine,
    format_tf,
    freq_response,
    is_hurwitz,
    parse_tf,
    phase_margin,
    poly_roots,
)
from .impedance import (
    AdmittanceParams,
    ImpedanceBounds,
    ImpedanceParams,
    admittance_tf,
    corner_set,
    default_bounds,
    equivalent,
    impedance_tf,
)
from .kinematics import (
    DHTable,
    JointConfig,
    cartesian_tf,
    forward_kinematics,
    jacobian,
    pseudoinverse,
)
from .robot_ident import (
    FRFDataset,
    FitError,
    SweepSpec,
    TimeSeries,
    extract_frf,
    fit_rational,
    generate_sweep,
)
from .loop_analysis import (
    LoopModel,
    ParameterGrid,
    StabilityMap,
    boundary_trace,
    char_poly,
    robust_verdict,
    stability_map,
)
from .transparency import (
    CostMap,
    TransparencySpec,
    cost,
    cost_map,
    displayed_impedance,
    parasitic_magnitude,
)
from .design import AllowableRegion, select, superimpose
from .sim_oracle import (
    SimResult,
    StateSpace,
    assemble_loop,
    classify,
    simulate_loop,
    to_statespace,
)
from .config import ConfigError, ToolkitConfig, load_config

__version__ = "0.1.0"
