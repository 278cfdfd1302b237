"""Joint-level frequency-response identification.

Workflow: drive one joint at a time with fixed-frequency sinusoidal velocity
references, correlate reference and measured series against sin/cos at the
excitation frequency to get one FRF point per sweep, then fit a low-order
rational transfer function to the collected points.  The fit is linearized
least squares for the initial guess refined by damped Gauss-Newton, and the
returned model is forced stable by reflecting any right-half-plane
denominator roots before a final numerator refit.
"""

from __future__ import annotations

import csv
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .tf_core import Polynomial, RationalTF, poly_roots

__all__ = [
    "SweepSpec",
    "TimeSeries",
    "FRFDataset",
    "FitResult",
    "FitError",
    "generate_sweep",
    "extract_frf",
    "fit_rational",
    "sweep_filename",
    "parse_sweep_filename",
    "write_sweep_csv",
    "read_sweep_csv",
]


class FitError(ValueError):
    """Model fitting failed; carries the last iterate when one exists."""

    def __init__(self, message: str, last_iterate: RationalTF | None = None):
        super().__init__(message)
        self.last_iterate = last_iterate


@dataclass(frozen=True, eq=False)
class SweepSpec:
    """Single-joint sinusoidal excitation plan.

    frequencies are in Hz, amplitude is the position reference amplitude in
    rad, duration_per_freq in seconds, sample_rate in Hz.  Records shorter
    than two periods of the slowest frequency only get a warning (long
    low-frequency records are expensive to acquire and one whole period
    still yields an FRF point); below one period extraction is impossible
    and construction fails.
    """

    joint_index: int
    frequencies: np.ndarray
    amplitude: float
    duration_per_freq: float
    sample_rate: float
    freq_min: float = 0.01
    freq_max: float = 20.0

    def __post_init__(self):
        freqs = np.atleast_1d(np.asarray(self.frequencies, dtype=float)).ravel()
        if freqs.size == 0:
            raise ValueError("sweep needs at least one frequency")
        object.__setattr__(self, "frequencies", freqs)
        self.frequencies.setflags(write=False)
        if not 1 <= self.joint_index <= 7:
            raise ValueError(f"joint_index must be in 1..7, got {self.joint_index}")
        if self.amplitude < 0.0:
            raise ValueError("sweep amplitude must be nonnegative")
        if np.any(freqs < self.freq_min) or np.any(freqs > self.freq_max):
            raise ValueError(
                f"sweep frequencies must lie in [{self.freq_min}, {self.freq_max}] Hz"
            )
        f_lo, f_hi = freqs.min(), freqs.max()
        periods = self.duration_per_freq * f_lo
        if periods < 1.0:
            raise ValueError(
                f"duration {self.duration_per_freq} s too short: need >= "
                f"{1.0 / f_lo:.6g} s (one period of the slowest frequency {f_lo} Hz)"
            )
        if periods < 2.0 - 1e-9:
            warnings.warn(
                f"duration {self.duration_per_freq} s holds only {periods:.3g} periods "
                f"of {f_lo} Hz; two or more are recommended"
            )
        if self.sample_rate < 20.0 * f_hi:
            raise ValueError(
                f"sample rate {self.sample_rate} Hz too low: need >= "
                f"{20.0 * f_hi:.6g} Hz (20x the fastest frequency {f_hi} Hz)"
            )


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled signal."""

    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if t.size != v.size or t.size < 2:
            raise ValueError("time series needs matching t/values with >= 2 samples")
        dt = np.diff(t)
        if np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-6, atol=1e-12):
            raise ValueError("time series must be uniformly sampled")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


@dataclass(frozen=True, eq=False)
class FRFDataset:
    """Gain/phase samples of one joint's response, sorted by frequency."""

    joint_index: int
    freq_hz: np.ndarray
    gain: np.ndarray
    phase_rad: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freq_hz, dtype=float).ravel()
        g = np.asarray(self.gain, dtype=float).ravel()
        p = np.asarray(self.phase_rad, dtype=float).ravel()
        if not (f.size == g.size == p.size) or f.size == 0:
            raise ValueError("FRF arrays must be nonempty and the same length")
        if np.any(np.diff(f) <= 0):
            raise ValueError("FRF frequencies must be strictly increasing")
        if np.any(g <= 0):
            raise ValueError("FRF gains must be positive")
        object.__setattr__(self, "freq_hz", f)
        object.__setattr__(self, "gain", g)
        object.__setattr__(self, "phase_rad", p)

    def __len__(self):
        return self.freq_hz.size

    def response(self) -> np.ndarray:
        return self.gain * np.exp(1j * self.phase_rad)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("freq_hz,gain,phase_rad\n")
            for f, g, p in zip(self.freq_hz, self.gain, self.phase_rad):
                fh.write(f"{f:.12g},{g:.12g},{p:.12g}\n")

    @classmethod
    def from_csv(cls, path, joint_index: int) -> "FRFDataset":
        f, g, p = [], [], []
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.DictReader(ln for ln in fh if not ln.startswith("#"))
            for rec in reader:
                f.append(float(rec["freq_hz"]))
                g.append(float(rec["gain"]))
                p.append(float(rec["phase_rad"]))
        return cls(joint_index=joint_index, freq_hz=f, gain=g, phase_rad=p)


@dataclass(frozen=True, eq=False)
class FitResult:
    """Fitted model plus diagnostics from the iterative refinement."""

    tf: RationalTF
    relative_cost: float
    iterations: int
    residuals: np.ndarray = field(repr=False)


def generate_sweep(spec: SweepSpec) -> list[TimeSeries]:
    """Reference position series, one per sweep frequency."""
    if spec.amplitude == 0.0:
        warnings.warn("sweep amplitude is zero: reference carries no excitation")
    out = []
    n = int(round(spec.duration_per_freq * spec.sample_rate))
    t = np.arange(n) / spec.sample_rate
    for f in spec.frequencies:
        out.append(TimeSeries(t=t, values=spec.amplitude * np.sin(2.0 * np.pi * f * t)))
    return out


def _sinusoid_fit(values: np.ndarray, t: np.ndarray, f: float) -> tuple[float, float]:
    """Amplitude and phase of the component at f Hz, least squares on sin/cos/1."""
    wt = 2.0 * np.pi * f * t
    basis = np.column_stack([np.sin(wt), np.cos(wt), np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(basis, values, rcond=None)
    a, b = coef[0], coef[1]
    return float(np.hypot(a, b)), float(np.arctan2(b, a))


def extract_frf(
    reference: TimeSeries,
    actual: TimeSeries,
    f: float,
    trim_fraction: float = 0.25,
) -> tuple[float, float]:
    """One FRF point (gain, phase in rad) at excitation frequency f Hz.

    Both series are cut to the same window: the initial trim_fraction is
    dropped to let transients settle, then the largest whole number of
    periods of f that fits is kept.  Each series is correlated against
    sin/cos at f over that window; gain is the amplitude ratio and phase the
    difference, wrapped to (-pi, pi].
    """
    if f <= 0.0:
        raise ValueError("excitation frequency must be positive")
    if not 0.0 <= trim_fraction < 1.0:
        raise ValueError("trim_fraction must be in [0, 1)")
    if reference.t.size != actual.t.size or abs(reference.dt - actual.dt) > 1e-12:
        raise ValueError("reference and actual series must share the sampling grid")
    dt = reference.dt
    n = reference.t.size
    start = int(round(n * trim_fraction))
    avail = (n - start) * dt
    period = 1.0 / f
    n_periods = int(np.floor(avail / period))
    if n_periods < 1:
        raise ValueError(
            f"window after trim holds no whole period of {f} Hz "
            f"({avail:.6g} s available, period {period:.6g} s)"
        )
    m = int(round(n_periods * period / dt))
    sl = slice(start, min(start + m, n))
    t_win = reference.t[sl]
    amp_ref, ph_ref = _sinusoid_fit(reference.values[sl], t_win, f)
    amp_act, ph_act = _sinusoid_fit(actual.values[sl], t_win, f)
    if amp_ref < 1e-9:
        raise ValueError(f"reference series carries no excitation at {f} Hz")
    gain = amp_act / amp_ref
    phase = ph_act - ph_ref
    phase = (phase + np.pi) % (2.0 * np.pi) - np.pi
    if phase == -np.pi:
        phase = np.pi
    return gain, float(phase)


def _tf_from_theta(theta: np.ndarray, nb: int, na: int) -> RationalTF:
    num = theta[: nb + 1]
    den = np.concatenate([[1.0], theta[nb + 1:]])
    return RationalTF(Polynomial(num), Polynomial(den))


def _stack_ri(arr: np.ndarray) -> np.ndarray:
    return np.concatenate([arr.real, arr.imag], axis=0)


def _levy_init(s: np.ndarray, target: np.ndarray, nb: int, na: int) -> np.ndarray:
    """Linearized least squares: minimize |N(s) - F D(s)| over coefficients."""
    cols = []
    for i in range(nb, -1, -1):
        cols.append(s**i)
    for i in range(na - 1, -1, -1):
        cols.append(-target * s**i)
    A = np.column_stack(cols) if cols else np.zeros((s.size, 0))
    rhs = target * s**na
    sol, *_ = np.linalg.lstsq(_stack_ri(A), _stack_ri(rhs), rcond=None)
    return sol


def _refit_numerator(s: np.ndarray, target: np.ndarray, den: Polynomial, nb: int) -> Polynomial:
    dv = den(s)
    A = np.column_stack([s**i / dv for i in range(nb, -1, -1)])
    sol, *_ = np.linalg.lstsq(_stack_ri(A), _stack_ri(target), rcond=None)
    return Polynomial(sol)


def fit_rational(
    data: FRFDataset,
    num_order: int,
    den_order: int,
    max_iter: int = 200,
    tol: float = 1e-10,
) -> FitResult:
    """Fit num/den orders (nb, na) to FRF data by complex least squares.

    Cost is the unweighted sum of squared complex residuals between model
    and data.  relative_cost in the result is that sum divided by the sum
    of squared data magnitudes.  The denominator is kept monic.  Right
    half-plane denominator roots of the converged model are reflected into
    the left half-plane and the numerator refit; if the model still is not
    strictly stable the fit fails.
    """
    nb, na = int(num_order), int(den_order)
    if nb < 0 or na < 0 or nb > na:
        raise ValueError("need 0 <= num_order <= den_order")
    n_par = (nb + 1) + na
    if len(data) < n_par:
        raise ValueError(
            f"{len(data)} FRF points cannot determine {n_par} coefficients"
        )
    s = 2j * np.pi * data.freq_hz
    target = data.response()
    norm = float(np.sum(np.abs(target) ** 2))

    theta = _levy_init(s, target, nb, na)

    def residuals(th: np.ndarray) -> np.ndarray:
        num = np.polyval(th[: nb + 1], s)
        den = np.polyval(np.concatenate([[1.0], th[nb + 1:]]), s)
        return num / den - target

    res = residuals(theta)
    cost = float(np.sum(np.abs(res) ** 2))
    iterations = 0
    for iterations in range(1, max_iter + 1):
        num_v = np.polyval(theta[: nb + 1], s)
        den_v = np.polyval(np.concatenate([[1.0], theta[nb + 1:]]), s)
        cols = [s**i / den_v for i in range(nb, -1, -1)]
        cols += [-(num_v / den_v**2) * s**i for i in range(na - 1, -1, -1)]
        Jm = _stack_ri(np.column_stack(cols))
        step, *_ = np.linalg.lstsq(Jm, -_stack_ri(res), rcond=None)
        scale = 1.0
        for _ in range(30):
            cand = theta + scale * step
            res_c = residuals(cand)
            cost_c = float(np.sum(np.abs(res_c) ** 2))
            if cost_c <= cost:
                break
            scale *= 0.5
        else:
            cand, res_c, cost_c = theta, res, cost
        converged = abs(cost - cost_c) <= tol * max(cost, 1e-300)
        theta, res, cost = cand, res_c, cost_c
        if converged:
            break
    else:
        raise FitError(
            f"fit did not converge within {max_iter} iterations "
            f"(relative cost {cost / max(norm, 1e-300):.3e})",
            last_iterate=_tf_from_theta(theta, nb, na),
        )

    tf = _tf_from_theta(theta, nb, na)
    if na >= 1:
        roots = poly_roots(tf.den)
        if np.any(roots.real >= 0.0):
            roots = np.where(roots.real > 0.0, -np.conj(roots), roots)
            den = Polynomial(np.real(np.poly(roots)))
            num = _refit_numerator(s, target, den, nb)
            tf = RationalTF(num, den)
            res = tf.num(s) / tf.den(s) - target
            cost = float(np.sum(np.abs(res) ** 2))
            if np.any(poly_roots(tf.den).real >= 0.0):
                raise FitError("fitted model is not strictly stable", last_iterate=tf)
    return FitResult(
        tf=tf,
        relative_cost=cost / max(norm, 1e-300),
        iterations=iterations,
        residuals=res.copy(),
    )


# Sweep log naming: one CSV per joint and excitation frequency.
_SWEEP_RE = re.compile(r"^joint(?P<joint>[1-7])_f(?P<hz>[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\.csv$")


def sweep_filename(joint_index: int, f_hz: float) -> str:
    return f"joint{joint_index}_f{f_hz:g}.csv"


def parse_sweep_filename(name: str) -> tuple[int, float] | None:
    m = _SWEEP_RE.match(name)
    if m is None:
        return None
    return int(m.group("joint")), float(m.group("hz"))


def write_sweep_csv(path, reference: TimeSeries, actual: TimeSeries) -> None:
    if reference.t.size != actual.t.size:
        raise ValueError("reference and actual series must share the sampling grid")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,ref,actual\n")
        for t, r, a in zip(reference.t, reference.values, actual.values):
            fh.write(f"{t:.12g},{r:.12g},{a:.12g}\n")


def read_sweep_csv(path) -> tuple[TimeSeries, TimeSeries]:
    t, ref, act = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(ln for ln in fh if not ln.startswith("#"))
        for rec in reader:
            t.append(float(rec["t"]))
            ref.append(float(rec["ref"]))
            act.append(float(rec["actual"]))
    t = np.asarray(t)
    return TimeSeries(t, np.asarray(ref)), TimeSeries(t, np.asarray(act))
