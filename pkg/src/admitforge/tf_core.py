"""Polynomial and rational transfer-function algebra for continuous-time SISO systems.

Coefficients are stored highest degree first (the ``numpy.polyval``
convention).  Rational transfer functions keep a monic denominator and are
never simplified: pole-zero cancellation can hide unstable modes, so
assembled products retain every factor.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Polynomial",
    "RationalTF",
    "FrequencyGrid",
    "poly_roots",
    "freq_response",
    "combine",
    "butterworth",
    "phase_margin",
    "is_hurwitz",
    "format_tf",
    "parse_tf",
    "read_tf",
    "write_tf",
]

# Denominator magnitudes below this at an evaluation point count as a pole.
_POLE_EPS = 1e-14


def _as_coeff_array(coeffs) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(coeffs, dtype=float)).ravel()
    if arr.size == 0:
        raise ValueError("polynomial needs at least one coefficient")
    if not np.isfinite(arr).all():
        raise ValueError("polynomial coefficients must be finite")
    nz = np.flatnonzero(arr)
    if nz.size == 0:
        return np.zeros(1)
    return arr[nz[0]:].copy()


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Real polynomial; ``coeffs[0]`` multiplies the highest power of s.

    Leading zeros are trimmed on construction, so ``degree`` always refers
    to the first nonzero coefficient.  The zero polynomial is stored as a
    single zero coefficient with degree 0.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _as_coeff_array(self.coeffs))
        self.coeffs.setflags(write=False)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0.0

    def __call__(self, s):
        return np.polyval(self.coeffs, s)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return Polynomial(np.convolve(self.coeffs, other.coeffs))
        if isinstance(other, (int, float)):
            return Polynomial(self.coeffs * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial([float(other)])
        if not isinstance(other, Polynomial):
            return NotImplemented
        n = max(self.coeffs.size, other.coeffs.size)
        a = np.zeros(n)
        b = np.zeros(n)
        a[n - self.coeffs.size:] = self.coeffs
        b[n - other.coeffs.size:] = other.coeffs
        return Polynomial(a + b)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __repr__(self):
        return f"Polynomial({np.array2string(self.coeffs, separator=', ')})"


def poly_roots(p: Polynomial) -> np.ndarray:
    """All complex roots of ``p`` via the companion-matrix eigenproblem."""
    if p.is_zero or p.degree == 0:
        raise ValueError("roots are undefined for constant polynomials")
    return np.roots(p.coeffs)


def _coerce_poly(value) -> Polynomial:
    if isinstance(value, Polynomial):
        return value
    return Polynomial(value)


@dataclass(frozen=True, eq=False)
class RationalTF:
    """Ratio of two real polynomials in s, stored with a monic denominator."""

    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        num = _coerce_poly(self.num)
        den = _coerce_poly(self.den)
        if den.is_zero:
            raise ValueError("transfer function denominator is zero")
        lead = den.coeffs[0]
        object.__setattr__(self, "num", Polynomial(num.coeffs / lead))
        object.__setattr__(self, "den", Polynomial(den.coeffs / lead))

    @classmethod
    def constant(cls, gain: float) -> "RationalTF":
        return cls(Polynomial([float(gain)]), Polynomial([1.0]))

    @property
    def relative_degree(self) -> int:
        return self.den.degree - self.num.degree

    @property
    def is_proper(self) -> bool:
        return self.num.is_zero or self.num.degree <= self.den.degree

    def __call__(self, s):
        """Raw pointwise evaluation; use freq_response for guarded jw-axis use."""
        return self.num(s) / self.den(s)

    def __mul__(self, other):
        if isinstance(other, RationalTF):
            return combine(self, other, "series")
        if isinstance(other, (int, float)):
            return RationalTF(self.num * float(other), self.den)
        return NotImplemented

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = RationalTF.constant(other)
        if not isinstance(other, RationalTF):
            return NotImplemented
        return combine(self, other, "parallel")

    __radd__ = __add__

    def __neg__(self):
        return RationalTF(-self.num, self.den)

    def __repr__(self):
        return f"RationalTF({format_tf(self)!r})"


IDENTITY_TF = RationalTF(Polynomial([1.0]), Polynomial([1.0]))


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Strictly increasing positive evaluation frequencies in rad/s."""

    points: np.ndarray
    spacing: str = "logarithmic"

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.points, dtype=float)).ravel()
        if pts.size < 2:
            raise ValueError("frequency grid needs at least two points")
        if pts[0] <= 0.0:
            raise ValueError("frequency grid must be strictly positive")
        if np.any(np.diff(pts) <= 0.0):
            raise ValueError("frequency grid must be strictly increasing")
        if self.spacing not in ("linear", "logarithmic"):
            raise ValueError(f"unknown grid spacing {self.spacing!r}")
        object.__setattr__(self, "points", pts)
        self.points.setflags(write=False)

    @property
    def omega_lo(self) -> float:
        return float(self.points[0])

    @property
    def omega_hi(self) -> float:
        return float(self.points[-1])

    def __len__(self):
        return self.points.size

    @classmethod
    def log_spaced_hz(cls, f_lo: float, f_hi: float, n: int) -> "FrequencyGrid":
        if f_lo <= 0.0 or f_hi <= f_lo:
            raise ValueError("need 0 < f_lo < f_hi")
        pts = 2.0 * np.pi * np.logspace(np.log10(f_lo), np.log10(f_hi), n)
        return cls(pts, "logarithmic")

    @classmethod
    def linear_spaced_hz(cls, f_lo: float, f_hi: float, n: int) -> "FrequencyGrid":
        if f_lo <= 0.0 or f_hi <= f_lo:
            raise ValueError("need 0 < f_lo < f_hi")
        return cls(2.0 * np.pi * np.linspace(f_lo, f_hi, n), "linear")


def freq_response(tf: RationalTF, omega):
    """Evaluate tf(jw).

    omega may be a scalar or array of nonnegative frequencies in rad/s.
    Raises if any point sits on a pole (|den| < 1e-14 there).
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0.0):
        raise ValueError("evaluation frequencies must be nonnegative")
    s = 1j * w
    den_vals = tf.den(s)
    bad = np.abs(den_vals) < _POLE_EPS
    if np.any(bad):
        w_bad = w if w.ndim == 0 else w[bad].flat[0]
        raise ValueError(f"pole on the evaluation axis near omega={float(w_bad):g} rad/s")
    resp = tf.num(s) / den_vals
    if w.ndim == 0:
        return complex(resp)
    return resp


def combine(a: RationalTF, b: RationalTF, mode: str) -> RationalTF:
    """Interconnect two transfer functions without cancellation.

    series:   a*b
    parallel: a+b
    feedback: a/(1 + a*b), i.e. b sits in a negative feedback path around a.
    """
    if mode == "series":
        return RationalTF(a.num * b.num, a.den * b.den)
    if mode == "parallel":
        return RationalTF(a.num * b.den + b.num * a.den, a.den * b.den)
    if mode == "feedback":
        return RationalTF(a.num * b.den, a.den * b.den + a.num * b.num)
    raise ValueError(f"unknown combination mode {mode!r}")


def butterworth(order: int, cutoff_hz: float) -> RationalTF:
    """All-pole low-pass with unit DC gain and -3 dB point at cutoff_hz."""
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= 10:
        raise ValueError("butterworth order must be an integer in [1, 10]")
    if cutoff_hz <= 0.0:
        raise ValueError("butterworth cutoff must be positive")
    wc = 2.0 * np.pi * cutoff_hz
    k = np.arange(1, order + 1)
    poles = wc * np.exp(1j * np.pi * (2 * k + order - 1) / (2 * order))
    den = np.real(np.poly(poles))
    # Numerator equals the constant denominator coefficient so the DC gain
    # is exactly one.
    return RationalTF(Polynomial([den[-1]]), Polynomial(den))


def _gain_error(tf: RationalTF, w: float) -> float:
    s = 1j * w
    return float(np.abs(tf.num(s)) - np.abs(tf.den(s)))


def phase_margin(tf: RationalTF, w_lo: float = 1e-3, w_hi: float = 1e4) -> float:
    """Smallest phase margin in degrees over all gain crossovers of tf.

    Crossovers are bracketed on a 2000-point log grid in [w_lo, w_hi] rad/s
    and refined by bisection to 1e-6 relative accuracy.  Systems whose gain
    never crosses unity raise a ValueError.
    """
    w = np.logspace(np.log10(w_lo), np.log10(w_hi), 2000)
    s = 1j * w
    err = np.abs(tf.num(s)) - np.abs(tf.den(s))
    err = np.where(np.isfinite(err), err, np.inf)
    margins = []
    for i in np.flatnonzero(np.sign(err[:-1]) * np.sign(err[1:]) < 0):
        lo, hi = w[i], w[i + 1]
        f_lo = err[i]
        while (hi - lo) > 1e-6 * hi:
            mid = 0.5 * (lo + hi)
            f_mid = _gain_error(tf, mid)
            if f_mid == 0.0:
                lo = hi = mid
                break
            if (f_lo < 0) == (f_mid < 0):
                lo, f_lo = mid, f_mid
            else:
                hi = mid
        wc = 0.5 * (lo + hi)
        phase = np.degrees(np.angle(freq_response(tf, wc)))
        margins.append(180.0 + phase)
    # A grid point landing exactly on unity gain still counts.
    for i in np.flatnonzero(err == 0.0):
        phase = np.degrees(np.angle(freq_response(tf, float(w[i]))))
        margins.append(180.0 + phase)
    if not margins:
        raise ValueError("no gain crossover in the scanned frequency range")
    return min(margins)


def is_hurwitz(p: Polynomial, margin: float = 0.0) -> bool:
    """True when every root of p satisfies Re(root) < -margin (strict)."""
    if margin < 0.0:
        raise ValueError("stability margin must be nonnegative")
    roots = poly_roots(p)
    return bool(np.all(roots.real < -margin))


def format_tf(tf: RationalTF) -> str:
    """Render as ``num: c_n ... c_0 / den: d_m ... d_0`` (round-trip exact).

    repr emits the shortest decimal that parses back to the same float, so
    files stay readable without losing a bit.
    """
    num = " ".join(repr(float(c)) for c in tf.num.coeffs)
    den = " ".join(repr(float(c)) for c in tf.den.coeffs)
    return f"num: {num} / den: {den}"


_TF_RE = re.compile(r"^\s*num\s*:\s*(?P<num>[^/]+?)\s*/\s*den\s*:\s*(?P<den>.+?)\s*$")


def parse_tf(text: str) -> RationalTF:
    m = _TF_RE.match(text)
    if m is None:
        raise ValueError(f"cannot parse transfer function from {text!r}")
    try:
        num = [float(tok) for tok in m.group("num").split()]
        den = [float(tok) for tok in m.group("den").split()]
    except ValueError as exc:
        raise ValueError(f"bad coefficient in {text!r}") from exc
    return RationalTF(Polynomial(num), Polynomial(den))


def read_tf(path) -> RationalTF:
    """Read a transfer function from a text file, skipping '#' comment lines."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                return parse_tf(line)
    raise ValueError(f"no transfer function line found in {path}")


def write_tf(path, tf: RationalTF, header: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        fh.write(format_tf(tf) + "\n")
