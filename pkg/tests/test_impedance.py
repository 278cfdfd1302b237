import numpy as np
import pytest

from admitforge.impedance import (
    AdmittanceParams,
    ImpedanceBounds,
    ImpedanceParams,
    admittance_tf,
    corner_set,
    default_bounds,
    equivalent,
    impedance_tf,
)
from admitforge.tf_core import combine, freq_response


def test_admittance_tf_coefficients():
    tf = admittance_tf(AdmittanceParams(20.0, 900.0))
    assert np.allclose(tf.num.coeffs, [1.0 / 20.0])
    assert np.allclose(tf.den.coeffs, [1.0, 45.0])


def test_admittance_dc_gain():
    tf = admittance_tf(AdmittanceParams(20.0, 1500.0))
    assert freq_response(tf, 0.0) == pytest.approx(1.0 / 1500.0, rel=1e-14)


def test_admittance_pole_location():
    tf = admittance_tf(AdmittanceParams(50.0, 900.0))
    assert np.allclose(tf.den.coeffs, [1.0, 18.0])


def test_admittance_requires_positive_parameters():
    with pytest.raises(ValueError):
        AdmittanceParams(0.0, 900.0)
    with pytest.raises(ValueError):
        AdmittanceParams(20.0, 0.0)
    with pytest.raises(ValueError):
        AdmittanceParams(-1.0, 900.0)


def test_impedance_tf_stiffness_only():
    tf = impedance_tf(ImpedanceParams(0.0, 0.0, 100.0))
    assert np.allclose(tf.num.coeffs, [100.0])
    assert np.allclose(tf.den.coeffs, [1.0, 0.0])


def test_impedance_tf_full():
    tf = impedance_tf(ImpedanceParams(5.0, 41.0, 401.0))
    assert np.allclose(tf.num.coeffs, [5.0, 41.0, 401.0])
    assert np.allclose(tf.den.coeffs, [1.0, 0.0])


def test_impedance_damping_magnitude():
    tf = impedance_tf(ImpedanceParams(0.0, 10.0, 0.0))
    assert abs(freq_response(tf, 1.0)) == pytest.approx(10.0, rel=1e-14)


def test_impedance_rejects_degenerate():
    with pytest.raises(ValueError, match="degenerate impedance"):
        impedance_tf(ImpedanceParams(0.0, 0.0, 0.0))


def test_impedance_rejects_negative():
    with pytest.raises(ValueError):
        ImpedanceParams(-1.0, 0.0, 100.0)


def test_equivalent_componentwise_sum():
    a = ImpedanceParams(5.0, 41.0, 401.0)
    b = ImpedanceParams(0.0, 0.0, 16599.0)
    eq = equivalent(a, b)
    assert (eq.mass, eq.damping, eq.stiffness) == (5.0, 41.0, 17000.0)


def test_equivalent_matches_parallel_combination():
    # Summing parameters must agree with parallel interconnection of the
    # individual impedance transfer functions at every frequency.
    rng = np.random.default_rng(5)
    for _ in range(50):
        a = ImpedanceParams(*rng.uniform(0.1, 50.0, size=3))
        b = ImpedanceParams(*rng.uniform(0.1, 50.0, size=3))
        direct = impedance_tf(equivalent(a, b))
        par = combine(impedance_tf(a), impedance_tf(b), "parallel")
        for w in rng.uniform(0.01, 200.0, size=4):
            assert freq_response(direct, float(w)) == pytest.approx(
                freq_response(par, float(w)), rel=1e-12
            )


def test_default_bounds_values():
    bounds = default_bounds()
    assert bounds.mass == (0.0, 5.0)
    assert bounds.damping == (0.0, 41.0)
    assert bounds.stiffness == (401.0, 17000.0)


def test_bounds_ordering_validated():
    with pytest.raises(ValueError):
        ImpedanceBounds(mass=(5.0, 0.0), damping=(0.0, 41.0), stiffness=(401.0, 17000.0))


def test_corner_set_mass_damping():
    corners = corner_set(default_bounds(), vary=("mass", "damping"),
                         pinned={"stiffness": 17000.0})
    assert len(corners) == 4
    tuples = [(c.mass, c.damping, c.stiffness) for c in corners]
    assert tuples == [
        (0.0, 0.0, 17000.0),
        (0.0, 41.0, 17000.0),
        (5.0, 0.0, 17000.0),
        (5.0, 41.0, 17000.0),
    ]


def test_corner_set_single_axis():
    corners = corner_set(default_bounds(), vary=("stiffness",),
                         pinned={"mass": 2.0, "damping": 10.0})
    tuples = [(c.mass, c.damping, c.stiffness) for c in corners]
    assert tuples == [(2.0, 10.0, 401.0), (2.0, 10.0, 17000.0)]


def test_corner_set_collapsed_interval_deduplicates():
    bounds = ImpedanceBounds(mass=(3.0, 3.0), damping=(0.0, 41.0),
                             stiffness=(401.0, 17000.0))
    corners = corner_set(bounds, vary=("mass", "damping"),
                         pinned={"stiffness": 401.0})
    assert len(corners) == 2
    assert all(c.mass == 3.0 for c in corners)


def test_corner_set_cardinality_property():
    rng = np.random.default_rng(13)
    for _ in range(30):
        lohis = []
        for _axis in range(3):
            lo = float(rng.uniform(0.0, 10.0))
            hi = lo if rng.random() < 0.3 else lo + float(rng.uniform(0.1, 10.0))
            lohis.append((lo, hi))
        bounds = ImpedanceBounds(mass=lohis[0], damping=lohis[1],
                                 stiffness=lohis[2])
        corners = corner_set(bounds, vary=("mass", "damping", "stiffness"))
        expect = 1
        for lo, hi in lohis:
            expect *= 1 if lo == hi else 2
        assert len(corners) == expect
        assert len({(c.mass, c.damping, c.stiffness) for c in corners}) == expect


def test_corner_set_requires_vary_axes():
    with pytest.raises(ValueError):
        corner_set(default_bounds(), vary=())


def test_corner_set_requires_pins_for_fixed_axes():
    with pytest.raises(ValueError):
        corner_set(default_bounds(), vary=("mass",), pinned={"damping": 1.0})
