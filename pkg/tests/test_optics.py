import logging
import math

import numpy as np
import pytest

from inducedfringes import (
    ComplexField1D,
    DomainError,
    GridMismatchError,
    OpticalConfig,
    SamplingError,
    camera_radius_to_angles,
    check_energy_conservation,
    defocus_to_distance,
    displaced_lens_field,
    field_mismatch,
    fresnel_propagate,
    gaussian_field,
    propagation_phase,
    signal_angle_to_idler_angle,
)
from inducedfringes.optics import kernel_test_field

import oracles

NM = 1e-9


class TestEnergyConservation:
    def test_bench_wavelengths(self):
        assert check_energy_conservation(810 * NM, 1550 * NM, 532 * NM)

    def test_degenerate(self):
        assert check_energy_conservation(810 * NM, 810 * NM, 405 * NM)

    def test_wrong_pump(self):
        assert not check_energy_conservation(810 * NM, 1550 * NM, 600 * NM)

    @pytest.mark.parametrize("bad", [0.0, -1e-9])
    def test_non_positive(self, bad):
        with pytest.raises(DomainError):
            check_energy_conservation(bad, 1550 * NM, 532 * NM)


class TestOpticalConfig:
    def test_defaults(self, cfg):
        assert cfg.lambda_eq == pytest.approx(423.29032e-9, rel=1e-7)

    def test_rejects_energy_violation(self):
        with pytest.raises(DomainError, match="energy"):
            OpticalConfig(lambda_p=600 * NM)

    def test_signal_must_be_shorter(self):
        with pytest.raises(DomainError):
            OpticalConfig(lambda_s=1550 * NM, lambda_i=810 * NM)

    def test_rejects_negative_focal_length(self):
        with pytest.raises(DomainError):
            OpticalConfig(f_c=-0.1)


def test_field_needs_eight_samples():
    with pytest.raises(DomainError):
        ComplexField1D(np.ones(7), 1e-6, 0.0)
    with pytest.raises(DomainError):
        ComplexField1D(np.ones(8), 0.0, 0.0)


class TestAngles:
    def test_axial(self, cfg):
        assert signal_angle_to_idler_angle(0.0, cfg) == 0.0

    def test_ten_mrad(self, cfg):
        assert signal_angle_to_idler_angle(10e-3, cfg) == pytest.approx(19.1358e-3, abs=1e-7)

    def test_sign_preserved(self, cfg):
        assert signal_angle_to_idler_angle(-5e-3, cfg) == pytest.approx(-9.5679e-3, abs=1e-7)

    def test_non_paraxial(self, cfg):
        with pytest.raises(DomainError):
            signal_angle_to_idler_angle(0.25, cfg)

    def test_camera_radius(self, cfg):
        assert camera_radius_to_angles(0.0, cfg) == (0.0, 0.0)
        ts, ti = camera_radius_to_angles(1e-3, cfg)
        assert ts == pytest.approx(6.6667e-3, abs=1e-7)
        assert ti == pytest.approx(12.7572e-3, abs=1e-7)
        assert camera_radius_to_angles(2e-3, cfg)[0] == pytest.approx(2 * ts, rel=1e-15)

    def test_camera_radius_composes(self, cfg):
        ts, ti = camera_radius_to_angles(1.7e-3, cfg)
        assert ti == pytest.approx(signal_angle_to_idler_angle(ts, cfg), rel=1e-15)

    def test_negative_radius(self, cfg):
        with pytest.raises(DomainError):
            camera_radius_to_angles(-1e-3, cfg)


class TestDefocusDistance:
    def test_zero(self):
        assert defocus_to_distance(0.0, 0.1) == 0.0

    def test_at_focal_length(self):
        assert defocus_to_distance(0.1, 0.1) == pytest.approx(0.05, rel=1e-15)

    def test_bench_value_warns(self, caplog):
        with caplog.at_level(logging.WARNING, logger="inducedfringes.optics"):
            d = defocus_to_distance(0.025, 0.1)
        assert d == pytest.approx(23.5294e-3, abs=1e-7)
        assert "0.0625" in caplog.text

    def test_within_bound_is_quiet(self, caplog):
        with caplog.at_level(logging.WARNING, logger="inducedfringes.optics"):
            defocus_to_distance(0.02, 0.1)
        assert caplog.text == ""

    def test_backward(self):
        assert defocus_to_distance(-0.01, 0.1) == -defocus_to_distance(0.01, 0.1)


class TestPropagationPhase:
    def test_axial(self):
        assert propagation_phase(0.0, 0.017, 1550 * NM) == 0.0

    def test_bench_value(self):
        # 12.7572 mrad is the idler angle for rho = 1 mm at f_c = 150 mm
        assert propagation_phase(12.7572e-3, 0.017, 1550 * NM) == pytest.approx(5.6076, abs=1e-4)

    def test_even(self):
        assert propagation_phase(-3e-3, 0.01, 1550 * NM) == propagation_phase(3e-3, 0.01, 1550 * NM)


K_I = 2 * np.pi / (1550 * NM)


class TestKernels:
    def test_small_defocus_matches_fresnel(self):
        f = 0.1
        delta = f * 1e-2  # delta**2 / f**2 = 1e-4
        u0 = kernel_test_field(100e-6, delta, f, K_I)
        a = displaced_lens_field(u0, delta, f, K_I)
        b = fresnel_propagate(u0, defocus_to_distance(delta, f), K_I)
        assert field_mismatch(a, b) < 1e-3

    def test_linearity(self):
        u0 = kernel_test_field(100e-6, 0.01, 0.1, K_I)
        c = 0.7 * np.exp(0.3j)
        a = displaced_lens_field(u0, 0.01, 0.1, K_I, normalize=False)
        b = displaced_lens_field(u0.scaled(c), 0.01, 0.1, K_I, normalize=False)
        np.testing.assert_allclose(b.samples, c * a.samples, rtol=1e-12, atol=1e-12 * np.abs(a.samples).max())

    def test_symmetric_input_symmetric_output(self):
        u0 = gaussian_field(100e-6, 1025, 2e-3)
        out = np.abs(displaced_lens_field(u0, 0.01, 0.1, K_I).samples)
        np.testing.assert_allclose(out, out[::-1], rtol=1e-9, atol=1e-12 * out.max())

    def test_zero_delta(self):
        with pytest.raises(DomainError):
            displaced_lens_field(gaussian_field(1e-4, 64, 2e-3), 0.0, 0.1, K_I)

    def test_aliased_grid(self):
        with pytest.raises(SamplingError):
            displaced_lens_field(gaussian_field(1e-4, 16, 2e-3), 0.01, 0.1, K_I)
        with pytest.raises(SamplingError):
            fresnel_propagate(gaussian_field(1e-4, 16, 2e-3), 0.01, K_I)

    def test_fresnel_identity(self):
        u0 = gaussian_field(1e-4, 64, 2e-3)
        out = fresnel_propagate(u0, 0.0, K_I)
        np.testing.assert_array_equal(out.samples, u0.samples)

    def test_fresnel_beam_expansion_and_power(self):
        waist, d = 100e-6, 0.02
        u0 = gaussian_field(waist, 1024, 2.4e-3)
        out = fresnel_propagate(u0, d, K_I, normalize=False)
        intensity = np.abs(out.samples) ** 2
        x = out.coords
        radius = 2 * math.sqrt(np.sum(intensity * x**2) / np.sum(intensity))
        assert radius == pytest.approx(oracles.gaussian_beam_radius(waist, d, K_I), rel=0.01)
        assert out.power == pytest.approx(u0.power, rel=0.01)

    def test_test_field_sample_limit(self):
        with pytest.raises(SamplingError):
            kernel_test_field(100e-6, 1e-3, 0.1, K_I, max_samples=600)


class TestFieldMismatch:
    def test_identical(self):
        u = gaussian_field(1e-4, 64, 1e-3)
        assert field_mismatch(u, u) == 0.0

    def test_global_phase(self):
        u = gaussian_field(1e-4, 64, 1e-3)
        assert field_mismatch(u, u.scaled(np.exp(1j * np.pi / 3))) < 1e-15

    def test_tilt_is_detected(self):
        a = gaussian_field(1e-4, 256, 1e-3)
        b = gaussian_field(1e-4, 256, 1e-3, tilt=1.0)
        assert field_mismatch(a, b) > 0.1

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatchError):
            field_mismatch(gaussian_field(1e-4, 64, 1e-3), gaussian_field(1e-4, 65, 1e-3))

    def test_zero_reference(self):
        u = gaussian_field(1e-4, 64, 1e-3)
        with pytest.raises(DomainError):
            field_mismatch(u.scaled(0.0), u)
