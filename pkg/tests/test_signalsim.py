import numpy as np
import pytest

from kkphase.errors import NonHermitianInput, Undersampled, WindowMismatch
from kkphase.signals import TimeSignal
from kkphase.signalsim import (
    ExcitationPulse,
    compare_responses,
    default_window,
    direct_time_response,
    spectrum_route_response,
)
from kkphase.statesim import modal_lsim

KAPPA = 0.5e6


def paper_pulse(center_hz=300e6, sigma_s=3e-9):
    return ExcitationPulse(family="gaussian_cosine", center_hz=center_hz, sigma_s=sigma_s)


class TestExcitationPulse:
    def test_causal_at_machine_level(self):
        p = paper_pulse()
        peak = np.max(np.abs(p.sample(np.linspace(0, 10 * p.sigma_s, 4000))))
        assert abs(p.sample(np.array([0.0]))[0]) <= 1e-12 * peak

    def test_short_delay_rejected(self):
        with pytest.raises(ValueError):
            ExcitationPulse(family="gaussian_cosine", center_hz=1e8, sigma_s=1e-9,
                            delay_s=3e-9)

    def test_band_edge_and_check(self):
        p = paper_pulse(center_hz=300e6, sigma_s=3e-9)
        edge = p.band_edge_hz()
        assert 300e6 < edge < 500e6
        p.check_band(500e6)
        with pytest.raises(ValueError):
            p.check_band(350e6)

    def test_double_exponential(self):
        p = ExcitationPulse(family="double_exponential", alpha=1e7, beta=8e7)
        t = np.linspace(0, 1e-6, 1000)
        vals = p.sample(t)
        assert vals[0] == 0.0
        assert np.max(vals) > 0
        assert p.band_edge_hz() > 8e7 / (2 * np.pi)

    def test_gaussian_derivative_zero_mean(self):
        p = ExcitationPulse(family="gaussian_derivative", sigma_s=2e-9)
        t = np.linspace(0, 40e-9, 20001)
        assert abs(np.trapezoid(p.sample(t), t)) < 1e-12 * np.max(np.abs(p.sample(t))) * 40e-9

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            ExcitationPulse(family="square")


class TestDirectRoute:
    def test_zero_drive_zero_output(self, example1):
        _, _, ssm, _ = example1
        pulse = ExcitationPulse(family="gaussian_cosine", center_hz=300e6,
                                sigma_s=3e-9, amplitude=0.0)
        y = direct_time_response(ssm, pulse, t_end=100e-9, dt=0.05e-9)
        assert np.all(y.values == 0.0)

    def test_linearity(self, example1):
        _, _, ssm, _ = example1
        p1 = paper_pulse()
        p3 = ExcitationPulse(family="gaussian_cosine", center_hz=300e6,
                             sigma_s=3e-9, amplitude=3.0)
        y1 = direct_time_response(ssm, p1, t_end=100e-9, dt=0.05e-9)
        y3 = direct_time_response(ssm, p3, t_end=100e-9, dt=0.05e-9)
        assert np.allclose(y3.values, 3.0 * y1.values, rtol=1e-12, atol=1e-12 * np.max(np.abs(y1.values)))

    def test_undersampled_guard(self, example1):
        _, _, ssm, _ = example1
        with pytest.raises(Undersampled):
            direct_time_response(ssm, paper_pulse(), t_end=100e-9, dt=1e-9)

    def test_post_pulse_energy_conservation(self, example1):
        # lossless modes: omega^2 u^2 + v^2 per mode is constant once the
        # drive has decayed; the exact stepper must preserve it
        _, _, ssm, _ = example1
        pulse = paper_pulse()
        dt = 0.05e-9
        t_pulse_end = pulse.delay_s + 10 * pulse.sigma_s
        n1 = int(t_pulse_end / dt) + 1
        t1 = np.arange(n1) * dt
        _, state1 = modal_lsim(ssm.omegas, ssm.b_entries, ssm.c_entries,
                               pulse.sample(t1), dt)
        e1 = ssm.omegas**2 * state1[0] ** 2 + state1[1] ** 2
        n2 = 20000
        t2 = t1[-1] + np.arange(n2) * dt
        _, state2 = modal_lsim(ssm.omegas, ssm.b_entries, ssm.c_entries,
                               pulse.sample(t2), dt, initial_state=state1)
        e2 = ssm.omegas**2 * state2[0] ** 2 + state2[1] ** 2
        active = e1 > 1e-12 * np.max(e1)
        assert np.allclose(e2[active], e1[active], rtol=1e-8)


class TestSpectrumRoute:
    def test_route_equivalence_exact_phase(self, example1):
        _, _, ssm, tf = example1
        pulse = paper_pulse()
        t_end = default_window(tf.omegas) + pulse.delay_s
        dt = 1.0 / (40.0 * 500e6)
        direct = direct_time_response(ssm, pulse, t_end, dt)
        spectral = spectrum_route_response(tf, pulse, t_end, dt, KAPPA)
        m = compare_responses(direct, spectral)
        assert m["rel_linf"] < 0.01

    def test_output_is_real_and_same_grid(self, example1):
        _, _, _, tf = example1
        y = spectrum_route_response(tf, paper_pulse(), 100e-9, 0.05e-9, KAPPA)
        assert y.values.dtype == np.float64
        assert y.times[0] == 0.0

    def test_two_sided_hermitian_accepted(self, example1):
        _, _, _, tf = example1
        pulse = paper_pulse()
        t_end, dt = 50e-9, 0.05e-9
        n_fft = 1 << int(np.ceil(np.log2((t_end + np.log(1e8) / KAPPA) / dt + 1)))
        om = 2 * np.pi * np.fft.fftfreq(n_fft, dt)
        from kkphase.tfcore import eval_modal

        h = eval_modal(tf, KAPPA + 1j * om)
        y = spectrum_route_response(tf, pulse, t_end, dt, KAPPA, transfer_two_sided=h)
        ref = spectrum_route_response(tf, pulse, t_end, dt, KAPPA)
        assert np.allclose(y.values, ref.values, rtol=1e-9, atol=1e-12 * np.max(np.abs(ref.values)))

    def test_two_sided_non_hermitian_rejected(self, example1):
        _, _, _, tf = example1
        pulse = paper_pulse()
        t_end, dt = 50e-9, 0.05e-9
        n_fft = 1 << int(np.ceil(np.log2((t_end + np.log(1e8) / KAPPA) / dt + 1)))
        om = 2 * np.pi * np.fft.fftfreq(n_fft, dt)
        from kkphase.tfcore import eval_modal

        h = eval_modal(tf, KAPPA + 1j * om)
        h[5] += 1e-3 * np.max(np.abs(h)) * 1j
        with pytest.raises(NonHermitianInput):
            spectrum_route_response(tf, pulse, t_end, dt, KAPPA, transfer_two_sided=h)

    def test_undamped_system_requires_kappa(self, example1):
        _, _, _, tf = example1
        with pytest.raises(ValueError):
            spectrum_route_response(tf, paper_pulse(), 50e-9, 0.05e-9, kappa=0.0)


class TestCompareResponses:
    def test_identical_signals(self):
        t = np.linspace(0, 1, 500)
        a = TimeSignal(times=t, values=np.sin(20 * t) * np.exp(-t))
        m = compare_responses(a, a)
        assert m["rel_linf"] == 0.0
        assert m["rel_l2"] == 0.0
        assert m["peak_ratio"] == 1.0
        assert m["envelope_correlation"] == pytest.approx(1.0)

    def test_sign_flip(self):
        t = np.linspace(0, 1, 500)
        a = TimeSignal(times=t, values=np.sin(20 * t) * np.exp(-t))
        b = TimeSignal(times=t, values=-a.values)
        m = compare_responses(a, b)
        assert m["peak_ratio"] == 1.0
        assert m["envelope_correlation"] == pytest.approx(1.0)
        assert m["rel_linf"] == pytest.approx(2 * np.max(np.abs(a.values)) / np.max(np.abs(a.values)))

    def test_resampling_path(self):
        t1 = np.linspace(0, 1, 800)
        t2 = np.linspace(0, 1, 1100)
        a = TimeSignal(times=t1, values=np.sin(30 * t1))
        b = TimeSignal(times=t2, values=np.sin(30 * t2))
        m = compare_responses(a, b)
        assert m["rel_linf"] < 0.05

    def test_window_mismatch(self):
        a = TimeSignal(times=np.linspace(0, 1, 100), values=np.ones(100))
        b = TimeSignal(times=np.linspace(5, 6, 100), values=np.ones(100))
        with pytest.raises(WindowMismatch):
            compare_responses(a, b)
