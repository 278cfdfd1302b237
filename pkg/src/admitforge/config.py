"""Layered toolkit configuration: packaged defaults, user file, environment.

The format is INI: flat key = value pairs under named sections.  A user
file overrides the packaged defaults key by key, and environment variables
of the form ADMITFORGE_<SECTION>_<KEY> override both.  Paths may use the
"builtin:" scheme to reach files shipped with the package; other relative
paths resolve against the user config file's directory.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .impedance import ImpedanceBounds, ImpedanceParams, corner_set
from .kinematics import DHTable, JointConfig, identity_joint_tfs
from .loop_analysis import ParameterGrid
from .tf_core import FrequencyGrid, RationalTF, butterworth, read_tf
from .transparency import TransparencySpec

__all__ = ["ConfigError", "ToolkitConfig", "load_config", "ENV_PREFIX"]

ENV_PREFIX = "ADMITFORGE_"


class ConfigError(Exception):
    """Bad configuration: missing file, unknown key, or unparsable value."""


def _data_root() -> Path:
    return Path(str(resources.files("admitforge").joinpath("data")))


def _builtin_path(name: str) -> Path:
    root = _data_root()
    known = {
        "iiwa7_r800": root / "iiwa7_r800_dh.csv",
        "joint_tf": root / "joint_tf",
    }
    if name not in known:
        raise ConfigError(f"unknown builtin resource {name!r}; have {sorted(known)}")
    return known[name]


@dataclass(frozen=True, eq=False)
class ToolkitConfig:
    """Typed access to the merged configuration."""

    parser: configparser.ConfigParser = field(repr=False)
    base_dir: Path

    def _get(self, section: str, key: str) -> str:
        try:
            return self.parser.get(section, key)
        except (configparser.NoSectionError, configparser.NoOptionError) as exc:
            raise ConfigError(f"missing configuration key [{section}] {key}") from exc

    def _float(self, section: str, key: str) -> float:
        raw = self._get(section, key)
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from exc

    def _int(self, section: str, key: str) -> int:
        raw = self._get(section, key)
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r} is not an integer") from exc

    def resolve_path(self, section: str, key: str) -> Path:
        raw = self._get(section, key)
        if raw.startswith("builtin:"):
            return _builtin_path(raw[len("builtin:"):])
        path = Path(raw)
        if not path.is_absolute():
            path = self.base_dir / path
        return path

    # robot section

    def dh_table(self) -> DHTable:
        path = self.resolve_path("robot", "dh_table")
        try:
            return DHTable.from_csv(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load DH table from {path}: {exc}") from exc

    def theta_nom(self) -> JointConfig:
        raw = self._get("robot", "theta_nom")
        try:
            values = np.array([float(tok) for tok in raw.split()])
        except ValueError as exc:
            raise ConfigError(f"[robot] theta_nom = {raw!r} is not 7 numbers") from exc
        try:
            return JointConfig(theta=values)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def joint_tfs(self) -> tuple[RationalTF, ...]:
        """Per-joint models from joint<i>.tf files; absent joints are identity."""
        directory = self.resolve_path("robot", "joint_tf_dir")
        tfs = list(identity_joint_tfs())
        for i in range(1, 8):
            path = directory / f"joint{i}.tf"
            if path.exists():
                try:
                    tfs[i - 1] = read_tf(path)
                except ValueError as exc:
                    raise ConfigError(f"bad joint transfer function {path}: {exc}") from exc
        return tuple(tfs)

    def axis(self) -> tuple[str, str]:
        return self._get("robot", "axis_row"), self._get("robot", "axis_col")

    def identify_orders(self) -> tuple[int, int]:
        return self._int("robot", "num_order"), self._int("robot", "den_order")

    # filter section

    def filter_tf(self) -> RationalTF:
        try:
            return butterworth(self._int("filter", "order"), self._float("filter", "cutoff_hz"))
        except ValueError as exc:
            raise ConfigError(f"bad filter settings: {exc}") from exc

    # impedance section

    def bounds(self) -> ImpedanceBounds:
        try:
            return ImpedanceBounds(
                mass=(self._float("impedance", "m_lo"), self._float("impedance", "m_hi")),
                damping=(self._float("impedance", "b_lo"), self._float("impedance", "b_hi")),
                stiffness=(self._float("impedance", "k_lo"), self._float("impedance", "k_hi")),
            )
        except ValueError as exc:
            raise ConfigError(f"bad impedance bounds: {exc}") from exc

    def k_pinned(self) -> float:
        return self._float("impedance", "k_pinned")

    def corners(self) -> list[ImpedanceParams]:
        """Mass/damping extreme corners at the pinned stiffness."""
        return corner_set(
            self.bounds(), vary=("mass", "damping"), pinned={"stiffness": self.k_pinned()}
        )

    # grid section

    def grid(self) -> ParameterGrid:
        try:
            return ParameterGrid.build(
                self._float("grid", "m_min"),
                self._float("grid", "m_max"),
                self._int("grid", "m_count"),
                self._float("grid", "b_min"),
                self._float("grid", "b_max"),
                self._int("grid", "b_count"),
                self._get("grid", "m_spacing"),
                self._get("grid", "b_spacing"),
            )
        except ValueError as exc:
            raise ConfigError(f"bad grid settings: {exc}") from exc

    # transparency section

    def transparency_spec(self) -> TransparencySpec:
        try:
            weight = butterworth(
                self._int("transparency", "weight_order"),
                self._float("transparency", "weight_cutoff_hz"),
            )
            grid = FrequencyGrid.log_spaced_hz(
                self._float("transparency", "f_min_hz"),
                self._float("transparency", "f_max_hz"),
                self._int("transparency", "points"),
            )
            return TransparencySpec(weight=weight, grid=grid)
        except ValueError as exc:
            raise ConfigError(f"bad transparency settings: {exc}") from exc

    # oracle section

    def oracle_dt(self) -> float:
        return self._float("oracle", "dt")

    def oracle_duration(self) -> float:
        return self._float("oracle", "duration")

    def oracle_pulse(self) -> tuple[float, float]:
        return (
            self._float("oracle", "pulse_amplitude"),
            self._float("oracle", "pulse_width"),
        )


def load_config(path: str | Path | None = None, env: dict | None = None) -> ToolkitConfig:
    """Merge packaged defaults, optional user file, and environment overrides.

    Referenced robot files are checked for existence here so a bad path
    fails at load time, not in the middle of a pipeline.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    default_path = _data_root() / "default.cfg"
    with open(default_path, "r", encoding="utf-8") as fh:
        parser.read_file(fh)
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
        base_dir = path.resolve().parent
    env = os.environ if env is None else env
    for name, value in env.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):]
        if "_" not in rest:
            raise ConfigError(f"malformed override {name}: expected {ENV_PREFIX}SECTION_KEY")
        section, key = rest.split("_", 1)
        section, key = section.lower(), key.lower()
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value)
    cfg = ToolkitConfig(parser=parser, base_dir=base_dir)
    for section, key in (("robot", "dh_table"), ("robot", "joint_tf_dir")):
        target = cfg.resolve_path(section, key)
        if not target.exists():
            raise ConfigError(f"[{section}] {key}: no such file or directory: {target}")
    return cfg
