import math

import numpy as np
import numpy.testing as npt
import pytest

from floquet_sensor.hamiltonian import (
    Constant,
    Cosine,
    Frame,
    HamiltonianSpec,
    PauliTerm,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    build_fds_prime,
    build_lab_fds,
    build_lab_ods,
    effective_coefficients,
    effective_hamiltonian,
    kick_operator,
    kick_vector,
    quasi_energy_shift,
    to_signal_rotating,
)
from floquet_sensor.params import (
    ControlErrorParams,
    FloquetDriveParams,
    SensorParams,
    SignalParams,
    angular_to_mhz,
    mhz_to_angular,
)

TP = 2.0 * math.pi


def paper_sensor():
    return SensorParams()


def paper_signal(sensor, amp_mhz=0.5, delta_mhz=0.5):
    return SignalParams.from_detuning(
        sensor, mhz_to_angular(amp_mhz), mhz_to_angular(delta_mhz)
    )


def paper_drive(k=5, phases=None):
    return FloquetDriveParams(
        mhz_to_angular(1.0), mhz_to_angular(36.54), harmonics=k, phases=phases
    )


# ---------------------------------------------------------------- parameters

def test_sensor_defaults_give_paper_resonance():
    s = paper_sensor()
    assert angular_to_mhz(s.omega_0) == pytest.approx(1470.0)
    assert s.gamma_e_cyclic == pytest.approx(28.0)


def test_sensor_rejects_nonpositive_resonance():
    with pytest.raises(ValueError):
        SensorParams(D=mhz_to_angular(100.0), gamma_e=mhz_to_angular(2.8), B0=500.0)


def test_signal_invariants():
    with pytest.raises(ValueError):
        SignalParams(omega_s_amp=-1.0, omega_s_freq=1.0)
    with pytest.raises(ValueError):
        SignalParams(omega_s_amp=1.0, omega_s_freq=0.0)


def test_drive_validity_ratio():
    d = paper_drive(k=5)
    ratio = d.validity_ratio(mhz_to_angular(0.5), mhz_to_angular(0.5))
    assert ratio == pytest.approx(36.54)
    assert d.is_valid(mhz_to_angular(0.5), mhz_to_angular(0.5))
    assert not d.is_valid(mhz_to_angular(5.0), 0.0)
    assert math.isinf(FloquetDriveParams(0.0, 1.0).validity_ratio(0.0, 0.0))


def test_perturbed_drive_errors():
    d = paper_drive(k=1)
    with pytest.raises(ValueError):
        d.perturbed(ControlErrorParams(amp_error=-2.0 * d.omega_F_amp))
    p = d.perturbed(ControlErrorParams(amp_error=0.5, freq_error=-1.0))
    assert p.omega_F_amp == pytest.approx(d.omega_F_amp + 0.5)
    assert p.omega_F_freq == pytest.approx(d.omega_F_freq - 1.0)


def test_drive_phase_count_checked():
    with pytest.raises(ValueError):
        FloquetDriveParams(1.0, 10.0, harmonics=3, phases=(0.0,))


# ------------------------------------------------------------------ builders

def test_lab_ods_coefficients():
    sensor = paper_sensor()
    signal = paper_signal(sensor)
    spec = build_lab_ods(sensor, signal)
    assert spec.frame is Frame.LAB
    cx, cy, cz = spec.coefficients(0.0)
    assert cz == pytest.approx(-0.5 * sensor.omega_0)
    assert cx == pytest.approx(signal.omega_s_amp)
    assert cy == 0.0
    # half a carrier period flips the signal term
    cx_pi, _, _ = spec.coefficients(math.pi / signal.omega_s_freq)
    assert cx_pi == pytest.approx(-signal.omega_s_amp, rel=1e-9)


def test_lab_ods_zero_signal_is_bare_sensor():
    sensor = paper_sensor()
    signal = SignalParams(0.0, sensor.omega_0)
    spec = build_lab_ods(sensor, signal)
    npt.assert_allclose(spec.matrix(1.234), -0.5 * sensor.omega_0 * SIGMA_Z)


def test_rotating_frame_resonant_ods_is_pure_drive():
    sensor = paper_sensor()
    signal = paper_signal(sensor, delta_mhz=0.0)
    rot = to_signal_rotating(build_lab_ods(sensor, signal), signal)
    for t in (0.0, 0.37, 2.0):
        npt.assert_allclose(
            rot.matrix(t), 0.5 * signal.omega_s_amp * SIGMA_X, atol=1e-12
        )


def test_rotating_frame_zero_amplitudes_leave_detuning():
    sensor = paper_sensor()
    signal = SignalParams(0.0, sensor.omega_0 + mhz_to_angular(0.5))
    rot = to_signal_rotating(build_lab_ods(sensor, signal), signal)
    npt.assert_allclose(rot.matrix(0.8), 0.5 * mhz_to_angular(0.5) * SIGMA_Z)


def test_rotating_frame_fds_k1_matches_drive_pair():
    sensor = paper_sensor()
    signal = paper_signal(sensor)
    drive = paper_drive(k=1)
    rot = build_fds_prime(sensor, signal, drive)
    delta = signal.detuning(sensor)
    for t in (0.0, 0.1, 0.777):
        expected = (
            0.5 * delta * SIGMA_Z
            + 0.5 * signal.omega_s_amp * SIGMA_X
            + 2.0 * drive.omega_F_amp * math.cos(drive.omega_F_freq * t) * SIGMA_X
            + 2.0 * drive.omega_F_amp * math.sin(drive.omega_F_freq * t) * SIGMA_Y
        )
        npt.assert_allclose(rot.matrix(t), expected, atol=1e-10)


def test_rotating_frame_rejects_wrong_frame():
    sensor = paper_sensor()
    signal = paper_signal(sensor)
    rot = to_signal_rotating(build_lab_ods(sensor, signal), signal)
    with pytest.raises(ValueError):
        to_signal_rotating(rot, signal)


def test_rwa_off_keeps_counter_rotating_terms():
    sensor = paper_sensor()
    signal = paper_signal(sensor)
    full = to_signal_rotating(build_lab_ods(sensor, signal), signal, apply_rwa=False)
    # RWA-off spec carries a component at twice the carrier
    assert full.max_frequency() == pytest.approx(2.0 * signal.omega_s_freq)
    # and the rotating-frame matrix matches the analytic expansion
    amp = signal.omega_s_amp
    ws = signal.omega_s_freq
    delta = signal.detuning(sensor)
    for t in (0.0, 0.21):
        expected = (
            0.5 * delta * SIGMA_Z
            + 0.5 * amp * (1.0 + math.cos(2.0 * ws * t)) * SIGMA_X
            + 0.5 * amp * math.sin(2.0 * ws * t) * SIGMA_Y
        )
        npt.assert_allclose(full.matrix(t), expected, atol=1e-8)


def test_fds_prime_zero_errors_matches_composition():
    sensor = paper_sensor()
    signal = paper_signal(sensor)
    drive = paper_drive(k=5)
    direct = build_fds_prime(sensor, signal, drive)
    composed = to_signal_rotating(build_lab_fds(sensor, signal, drive), signal)
    for t in np.linspace(0.0, 0.3, 7):
        npt.assert_allclose(direct.matrix(t), composed.matrix(t), atol=1e-12)


def test_fds_prime_cancelling_amp_error_reduces_to_ods():
    sensor = paper_sensor()
    signal = paper_signal(sensor)
    drive = paper_drive(k=3)
    errors = ControlErrorParams(amp_error=-drive.omega_F_amp)
    reduced = build_fds_prime(sensor, signal, drive, errors)
    plain = to_signal_rotating(build_lab_ods(sensor, signal), signal)
    for t in (0.0, 0.456):
        npt.assert_allclose(reduced.matrix(t), plain.matrix(t), atol=1e-12)


def test_fds_prime_k5_has_five_harmonic_pairs():
    sensor = paper_sensor()
    spec = build_fds_prime(sensor, paper_signal(sensor), paper_drive(k=5))
    freqs = sorted(
        {
            round(term.envelope.frequency, 6)
            for term in spec.terms
            if isinstance(term.envelope, Cosine)
        }
    )
    expected = [round(l * mhz_to_angular(36.54), 6) for l in range(1, 6)]
    assert freqs == expected


# ----------------------------------------------------- kick operator / shift

def test_kick_zero_amplitude():
    drv = FloquetDriveParams(0.0, mhz_to_angular(36.54), harmonics=2)
    npt.assert_allclose(kick_operator(drv, 0.3), np.zeros((2, 2)))


def test_kick_periodicity():
    drv = paper_drive(k=3)
    rng = np.random.default_rng(5)
    for t in rng.uniform(0.0, 2.0, 8):
        npt.assert_allclose(
            kick_operator(drv, t + drv.period), kick_operator(drv, t), atol=1e-12
        )


def test_kick_value_k1_t0():
    drv = paper_drive(k=1)
    expected = -(2.0 * drv.omega_F_amp / drv.omega_F_freq) * SIGMA_Y
    npt.assert_allclose(kick_operator(drv, 0.0), expected, atol=1e-14)


def test_kick_is_hermitian():
    drv = paper_drive(k=5, phases=(0.3, 1.0, 2.0, 4.0, 0.1))
    k = kick_operator(drv, 0.77)
    npt.assert_allclose(k, k.conj().T, atol=1e-14)


def test_kick_tone_phases_shift_kick_axis():
    drv = paper_drive(k=1, phases=(math.pi / 2.0,))
    vec = kick_vector(drv, 0.0)
    npt.assert_allclose(
        vec, [2.0 * drv.omega_F_amp / drv.omega_F_freq, 0.0, 0.0], atol=1e-14
    )


def test_quasi_energy_shift_values():
    # independent summation oracle
    def oracle(k, omf_mhz=36.54, amp_mhz=1.0):
        return 8.0 * sum(amp_mhz**2 / l for l in range(1, k + 1)) / omf_mhz

    for k in (1, 2, 5, 9):
        drv = paper_drive(k=k)
        assert angular_to_mhz(quasi_energy_shift(drv)) == pytest.approx(
            oracle(k), rel=1e-12
        )
    assert angular_to_mhz(quasi_energy_shift(paper_drive(1))) == pytest.approx(
        0.2189381, abs=1e-6
    )
    assert angular_to_mhz(quasi_energy_shift(paper_drive(5))) == pytest.approx(
        0.4999088, abs=1e-6
    )
    assert quasi_energy_shift(FloquetDriveParams(0.0, 1.0)) == 0.0


def test_quasi_energy_shift_monotone_in_harmonics():
    shifts = [quasi_energy_shift(paper_drive(k)) for k in range(1, 8)]
    assert all(b > a for a, b in zip(shifts, shifts[1:]))


def test_shift_equals_effective_detuning_gap():
    # algebraic identity: Delta - 2 * (effective sigma_z coefficient) = shift
    rng = np.random.default_rng(11)
    sensor = paper_sensor()
    for _ in range(10):
        signal = SignalParams.from_detuning(
            sensor, rng.uniform(0.0, 5.0), rng.uniform(-3.0, 3.0)
        )
        drive = FloquetDriveParams(
            rng.uniform(0.0, 8.0), rng.uniform(50.0, 400.0), int(rng.integers(1, 6))
        )
        _, cz = effective_coefficients(sensor, signal, drive)
        gap = signal.detuning(sensor) - 2.0 * cz
        assert gap == pytest.approx(quasi_energy_shift(drive), abs=1e-12)


def test_effective_hamiltonian_matrix():
    sensor = paper_sensor()
    signal = paper_signal(sensor)
    # zero drive -> plain rotating-frame matrix
    none = FloquetDriveParams(0.0, mhz_to_angular(36.54))
    npt.assert_allclose(
        effective_hamiltonian(sensor, signal, none),
        0.5 * signal.omega_s_amp * SIGMA_X + 0.5 * signal.detuning(sensor) * SIGMA_Z,
        atol=1e-12,
    )
    # k=1 sigma_z coefficient
    d1 = paper_drive(k=1)
    h1 = effective_hamiltonian(sensor, signal, d1)
    cz = 0.5 * signal.detuning(sensor) - 4.0 * d1.omega_F_amp**2 / d1.omega_F_freq
    assert h1[0, 0].real == pytest.approx(cz, rel=1e-12)
    # paper k=5 design point nearly cancels the detuning
    h5 = effective_hamiltonian(sensor, signal, paper_drive(5))
    residual = 2.0 * h5[0, 0].real
    assert angular_to_mhz(residual) == pytest.approx(9.12e-5, rel=0.01)


def test_effective_hamiltonian_warns_when_drive_too_slow():
    sensor = paper_sensor()
    signal = paper_signal(sensor, amp_mhz=5.0)
    slow = FloquetDriveParams(mhz_to_angular(1.0), mhz_to_angular(10.0))
    with pytest.warns(UserWarning):
        effective_hamiltonian(sensor, signal, slow)


# ---------------------------------------------------------------- invariants

def test_spec_evaluation_is_hermitian():
    rng = np.random.default_rng(3)
    for _ in range(20):
        terms = []
        for _ in range(int(rng.integers(1, 6))):
            axis = "xyz"[int(rng.integers(3))]
            if rng.random() < 0.4:
                terms.append(PauliTerm(axis, Constant(rng.normal())))
            else:
                terms.append(
                    PauliTerm(
                        axis,
                        Cosine(rng.normal(), rng.uniform(0, 50), rng.uniform(-3, 3)),
                    )
                )
        spec = HamiltonianSpec(Frame.SIGNAL_ROTATING, tuple(terms))
        for t in rng.uniform(0.0, 10.0, 5):
            h = spec.matrix(t)
            npt.assert_allclose(h, h.conj().T, atol=1e-14)


def test_with_z_offset():
    spec = HamiltonianSpec(
        Frame.SIGNAL_ROTATING, (PauliTerm("x", Constant(1.0)),)
    )
    shifted = spec.with_z_offset(0.25)
    npt.assert_allclose(shifted.matrix(0.0), SIGMA_X + 0.25 * SIGMA_Z)
    assert spec.with_z_offset(0.0) is spec
