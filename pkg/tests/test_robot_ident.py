import numpy as np
import pytest
from scipy import signal

from conftest import JOINT2_DEN, JOINT2_NUM, make_tf

from admitforge.robot_ident import (
    FitError,
    FRFDataset,
    SweepSpec,
    TimeSeries,
    extract_frf,
    fit_rational,
    generate_sweep,
    parse_sweep_filename,
    read_sweep_csv,
    sweep_filename,
    write_sweep_csv,
)
from admitforge.tf_core import freq_response, poly_roots


def lsim_response(num, den, ref: TimeSeries) -> TimeSeries:
    """Independent time-domain oracle for joint tracking records."""
    _, y, _ = signal.lsim((num, den), U=ref.values, T=ref.t)
    return TimeSeries(ref.t, y)


# ---------------------------------------------------------------------------
# SweepSpec


def test_sweep_spec_accepts_reference_plan():
    spec = SweepSpec(joint_index=2, frequencies=np.array([0.05, 1.0, 20.0]),
                     amplitude=0.1, duration_per_freq=45.0, sample_rate=500.0)
    assert spec.frequencies.shape == (3,)


def test_sweep_spec_joint_index_range():
    with pytest.raises(ValueError):
        SweepSpec(0, np.array([1.0]), 0.1, 10.0, 500.0)
    with pytest.raises(ValueError):
        SweepSpec(8, np.array([1.0]), 0.1, 10.0, 500.0)


def test_sweep_spec_frequency_band():
    with pytest.raises(ValueError):
        SweepSpec(2, np.array([0.001]), 0.1, 2000.0, 500.0)
    with pytest.raises(ValueError):
        SweepSpec(2, np.array([25.0]), 0.1, 10.0, 1000.0)


def test_sweep_spec_sample_rate_floor():
    with pytest.raises(ValueError, match="sample rate"):
        SweepSpec(2, np.array([20.0]), 0.1, 10.0, 300.0)


def test_sweep_spec_subperiod_duration_rejected():
    with pytest.raises(ValueError, match="one period"):
        SweepSpec(2, np.array([0.05]), 0.1, 15.0, 500.0)


def test_sweep_spec_short_duration_warns():
    # 180 s at 0.01 Hz is 1.8 periods: usable for extraction, but flagged.
    with pytest.warns(UserWarning):
        SweepSpec(2, np.array([0.01]), 0.1, 180.0, 500.0)


def test_sweep_spec_exact_two_periods_silent():
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("error")
        SweepSpec(2, np.array([1.0]), 0.1, 2.0, 500.0)


# ---------------------------------------------------------------------------
# generate_sweep / extract_frf


def test_generate_sweep_sampling():
    spec = SweepSpec(2, np.array([1.0]), 0.1, 2.0, 1000.0)
    series = generate_sweep(spec)
    assert len(series) == 1
    ref = series[0]
    assert ref.t.size == 2000
    assert ref.values[250] == pytest.approx(0.1, rel=1e-12)  # sin at t=0.25 s


def test_generate_sweep_zero_amplitude_warns():
    spec = SweepSpec(2, np.array([1.0]), 0.0, 4.0, 500.0)
    with pytest.warns(UserWarning, match="no excitation"):
        generate_sweep(spec)


def test_extract_frf_identity():
    spec = SweepSpec(2, np.array([2.0]), 0.1, 4.0, 500.0)
    ref = generate_sweep(spec)[0]
    gain, phase = extract_frf(ref, ref, 2.0)
    assert gain == pytest.approx(1.0, rel=1e-9)
    assert phase == pytest.approx(0.0, abs=1e-9)


def test_extract_frf_known_lag():
    # Shifting the sinusoid by tau delays phase by -2*pi*f*tau.
    f, tau = 1.0, 0.1
    t = np.arange(0, 8.0, 1e-3)
    ref = TimeSeries(t, np.sin(2 * np.pi * f * t))
    act = TimeSeries(t, np.sin(2 * np.pi * f * (t - tau)))
    gain, phase = extract_frf(ref, act, f)
    assert gain == pytest.approx(1.0, rel=1e-6)
    assert phase == pytest.approx(-2 * np.pi * f * tau, abs=1e-6)


def test_extract_frf_matches_analytic_response():
    tf = make_tf(JOINT2_NUM, JOINT2_DEN)
    for f in (0.2, 1.0, 5.0):
        spec = SweepSpec(2, np.array([f]), 0.1, max(20.0, 4.0 / f), 1000.0)
        ref = generate_sweep(spec)[0]
        act = lsim_response(JOINT2_NUM, JOINT2_DEN, ref)
        gain, phase = extract_frf(ref, act, f)
        expected = freq_response(tf, 2 * np.pi * f)
        assert gain == pytest.approx(abs(expected), rel=2e-3)
        assert phase == pytest.approx(np.angle(expected), abs=2e-3)


def test_extract_frf_amplitude_invariance():
    rng = np.random.default_rng(41)
    t = np.arange(0, 6.0, 1e-3)
    ref_v = np.sin(2 * np.pi * 1.5 * t)
    act_v = 0.7 * np.sin(2 * np.pi * 1.5 * t - 0.4) + 0.01 * rng.standard_normal(t.size)
    base = extract_frf(TimeSeries(t, ref_v), TimeSeries(t, act_v), 1.5)
    for c in (0.1, 3.0, 42.0):
        scaled = extract_frf(TimeSeries(t, c * ref_v), TimeSeries(t, c * act_v), 1.5)
        assert scaled[0] == pytest.approx(base[0], rel=1e-12)
        assert scaled[1] == pytest.approx(base[1], abs=1e-12)


def test_extract_frf_requires_excitation():
    t = np.arange(0, 4.0, 1e-3)
    ref = TimeSeries(t, np.zeros(t.size))
    with pytest.raises(ValueError, match="no excitation"):
        extract_frf(ref, ref, 1.0)


def test_extract_frf_requires_whole_period():
    t = np.arange(0, 1.0, 1e-3)
    ref = TimeSeries(t, np.sin(2 * np.pi * 0.9 * t))
    with pytest.raises(ValueError, match="whole period"):
        extract_frf(ref, ref, 0.9)


# ---------------------------------------------------------------------------
# fit_rational


def exact_frf(num, den, freqs):
    tf = make_tf(num, den)
    resp = np.array([freq_response(tf, 2 * np.pi * f) for f in freqs])
    return FRFDataset(2, np.asarray(freqs), np.abs(resp), np.angle(resp))


def test_fit_recovers_exact_model():
    freqs = np.logspace(np.log10(0.01), np.log10(20.0), 30)
    data = exact_frf(JOINT2_NUM, JOINT2_DEN, freqs)
    result = fit_rational(data, 1, 2)
    assert np.allclose(result.tf.num.coeffs, JOINT2_NUM, rtol=1e-6)
    assert np.allclose(result.tf.den.coeffs, JOINT2_DEN, rtol=1e-6)
    assert result.relative_cost < 1e-12


def test_fit_constant_gain():
    freqs = np.array([0.1, 1.0, 10.0])
    data = FRFDataset(3, freqs, np.full(3, 2.0), np.zeros(3))
    result = fit_rational(data, 0, 0)
    assert result.tf.num.coeffs == pytest.approx([2.0], rel=1e-9)


def test_fit_round_trip_property():
    rng = np.random.default_rng(59)
    freqs = np.logspace(np.log10(0.01), np.log10(20.0), 25)
    for _ in range(20):
        wn = rng.uniform(5.0, 60.0)
        zeta = rng.uniform(0.4, 1.2)
        den = [1.0, 2 * zeta * wn, wn * wn]
        num = [rng.uniform(5.0, 80.0), rng.uniform(0.8, 1.2) * wn * wn]
        data = exact_frf(num, den, freqs)
        result = fit_rational(data, 1, 2)
        assert np.allclose(result.tf.num.coeffs, num, rtol=1e-5)
        assert np.allclose(result.tf.den.coeffs, den, rtol=1e-5)


def test_fit_dc_gain_under_gain_noise():
    rng = np.random.default_rng(61)
    freqs = np.logspace(np.log10(0.01), np.log10(20.0), 40)
    dc = JOINT2_NUM[-1] / JOINT2_DEN[-1]
    for _ in range(20):
        data = exact_frf(JOINT2_NUM, JOINT2_DEN, freqs)
        noisy = FRFDataset(
            2, data.freq_hz,
            data.gain * (1.0 + 0.01 * rng.standard_normal(len(data))),
            data.phase_rad,
        )
        result = fit_rational(noisy, 1, 2)
        fitted_dc = freq_response(result.tf, 0.0).real
        assert fitted_dc == pytest.approx(dc, rel=0.05)
        assert result.relative_cost < 1e-2


def test_fit_reflects_unstable_data_to_stable_model():
    # Data from a right-half-plane model: the returned fit must still be
    # strictly stable, at the price of a nonzero residual.
    freqs = np.logspace(np.log10(0.1), np.log10(20.0), 30)
    data = exact_frf([1.0, 5.0], [1.0, -2.0, 100.0], freqs)
    result = fit_rational(data, 1, 2)
    assert np.all(poly_roots(result.tf.den).real < 0.0)
    assert result.relative_cost > 1e-6


def test_fit_nonconvergence_reports_last_iterate():
    rng = np.random.default_rng(67)
    freqs = np.logspace(np.log10(0.01), np.log10(20.0), 40)
    data = exact_frf(JOINT2_NUM, JOINT2_DEN, freqs)
    noisy = FRFDataset(
        2, data.freq_hz,
        data.gain * (1.0 + 0.05 * rng.standard_normal(len(data))),
        data.phase_rad,
    )
    with pytest.raises(FitError) as info:
        fit_rational(noisy, 1, 2, max_iter=1, tol=0.0)
    assert info.value.last_iterate is not None


def test_fit_requires_enough_points():
    data = FRFDataset(2, np.array([1.0, 2.0]), np.array([1.0, 0.5]),
                      np.array([0.0, -0.3]))
    with pytest.raises(ValueError, match="cannot determine"):
        fit_rational(data, 1, 2)


def test_fit_order_validation():
    data = exact_frf(JOINT2_NUM, JOINT2_DEN, np.logspace(-1, 1, 10))
    with pytest.raises(ValueError):
        fit_rational(data, 3, 2)


# ---------------------------------------------------------------------------
# File formats


def test_sweep_filename_round_trip():
    for joint, f in [(2, 0.05), (4, 1.0), (6, 12.5), (7, 20.0)]:
        name = sweep_filename(joint, f)
        assert parse_sweep_filename(name) == (joint, f)


def test_parse_sweep_filename_rejects_noise():
    for name in ["joint2.csv", "joint9_f1.csv", "joint2_f1.txt", "readme.md"]:
        assert parse_sweep_filename(name) is None


def test_sweep_csv_round_trip(tmp_path):
    spec = SweepSpec(4, np.array([1.0]), 0.1, 3.0, 200.0)
    ref = generate_sweep(spec)[0]
    act = TimeSeries(ref.t, 0.9 * ref.values)
    path = tmp_path / sweep_filename(4, 1.0)
    write_sweep_csv(path, ref, act)
    ref2, act2 = read_sweep_csv(path)
    assert np.allclose(ref2.t, ref.t, atol=1e-10)
    assert np.allclose(ref2.values, ref.values, atol=1e-10)
    assert np.allclose(act2.values, act.values, atol=1e-10)


def test_frf_csv_round_trip(tmp_path):
    freqs = np.array([0.1, 1.0, 10.0])
    data = FRFDataset(6, freqs, np.array([1.0, 0.9, 0.4]),
                      np.array([-0.1, -0.8, -2.4]))
    path = tmp_path / "joint6_frf.csv"
    data.to_csv(path)
    back = FRFDataset.from_csv(path, joint_index=6)
    assert np.allclose(back.freq_hz, data.freq_hz)
    assert np.allclose(back.gain, data.gain)
    assert np.allclose(back.phase_rad, data.phase_rad)


def test_frf_dataset_validation():
    with pytest.raises(ValueError):
        FRFDataset(2, np.array([1.0, 1.0]), np.array([1.0, 1.0]),
                   np.array([0.0, 0.0]))
    with pytest.raises(ValueError):
        FRFDataset(2, np.array([1.0, 2.0]), np.array([1.0, -0.5]),
                   np.array([0.0, 0.0]))


def test_timeseries_requires_uniform_grid():
    with pytest.raises(ValueError):
        TimeSeries(np.array([0.0, 0.1, 0.3]), np.zeros(3))
