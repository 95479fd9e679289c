import numpy as np
import pytest

from inducedfringes import (
    CameraModel,
    DomainError,
    FringeImage,
    IdlerTransfer,
    ImageFormatError,
    OpticalConfig,
    add_shot_noise,
    phase_scan,
    read_image,
    render_image,
    write_image,
)
from inducedfringes.imaging import sidecar_path

from conftest import rendered

SMALL = CameraModel(width_px=64, height_px=64, pixel_pitch=80e-6, exposure_counts=400.0)


class TestCameraModel:
    def test_default_center(self):
        assert CameraModel().center_px == (256.0, 256.0)

    @pytest.mark.parametrize("kwargs", [
        {"width_px": 32}, {"pixel_pitch": 0.0}, {"envelope_radius": -1.0}, {"exposure_counts": -1.0},
    ])
    def test_invariants(self, kwargs):
        with pytest.raises(DomainError):
            CameraModel(**kwargs)

    def test_image_shape_checked(self, cam):
        with pytest.raises(DomainError):
            FringeImage(np.zeros((10, 10)), cam)
        with pytest.raises(DomainError):
            FringeImage(-np.ones(cam.shape), cam)


class TestRender:
    def test_bright_spot_is_envelope(self, cfg, amp, cam):
        img = render_image(cfg, amp, IdlerTransfer.uniform(), cam)
        x, y = cam.axes()
        expected = cam.exposure_counts * cam.envelope(np.hypot(x[None, :], y[:, None]))
        np.testing.assert_allclose(img.intensities, expected, rtol=1e-12)

    def test_dark_frame(self, cfg, amp, cam):
        bright = render_image(cfg, amp, IdlerTransfer.uniform(), cam).intensities
        dark = render_image(cfg, amp, IdlerTransfer.uniform(phi0=np.pi), cam).intensities
        assert dark.max() < 1e-9 * bright.max()

    def test_field_of_view_limit(self, amp):
        with pytest.raises(DomainError, match="paraxial"):
            render_image(OpticalConfig(f_c=0.02), amp, IdlerTransfer.uniform(), CameraModel())

    def test_metadata(self):
        meta = rendered(0.017).metadata
        assert meta["d_m"] == 0.017
        assert meta["phase_kind"] == "defocus"
        assert meta["seed"] is None

    def test_rings_are_rotationally_symmetric(self):
        img = rendered(0.017).intensities
        c = 256
        # pixel offsets sharing a radius without being lattice mirrors
        pairs = [((0, 25), (15, 20)), ((0, 65), (33, 56)), ((0, 100), (60, 80)), ((0, 125), (44, 117))]
        for (a, b), (e, f) in pairs:
            assert abs(img[c + a, c + b] - img[c + e, c + f]) < 1e-9 * img.max()
        np.testing.assert_allclose(img, img.T, rtol=0, atol=1e-9 * img.max())

    def test_tilt_fringes_are_straight(self, cfg, amp, cam):
        uniform = IdlerTransfer.uniform()
        tilt = IdlerTransfer.tilt((0.1e-3, 0.0))
        ratio = render_image(cfg, amp, tilt, cam).intensities / render_image(cfg, amp, uniform, cam).intensities
        assert np.ptp(ratio, axis=0).max() < 1e-9 * ratio.max()
        row = ratio[256]
        assert np.ptp(row) > 0.8
        # maxima spaced by f_c lambda_s / s on the camera
        peaks = np.nonzero((row[1:-1] > row[:-2]) & (row[1:-1] > row[2:]))[0]
        period = np.median(np.diff(peaks)) * cam.pixel_pitch
        assert period == pytest.approx(cfg.f_c * cfg.lambda_s / 0.1e-3, rel=0.02)

    def test_envelope_cancels_between_phases(self, cfg, amp):
        t = IdlerTransfer.defocus(0.013)
        cams = [CameraModel(), CameraModel(envelope_radius=4e-3)]
        ratios = [render_image(cfg, amp, t.replace(phi0=1.0), c).intensities
                  / render_image(cfg, amp, t, c).intensities for c in cams]
        np.testing.assert_allclose(ratios[0], ratios[1], rtol=1e-10)


class TestShotNoise:
    def test_zero_exposure(self, cfg, amp):
        cam = CameraModel(width_px=64, height_px=64, exposure_counts=0.0)
        img = add_shot_noise(render_image(cfg, amp, IdlerTransfer.uniform(), cam), 3)
        assert not img.intensities.any()

    def test_deterministic(self):
        a = add_shot_noise(rendered(0.013), 11)
        b = add_shot_noise(rendered(0.013), 11)
        c = add_shot_noise(rendered(0.013), 12)
        np.testing.assert_array_equal(a.intensities, b.intensities)
        assert not np.array_equal(a.intensities, c.intensities)
        assert a.metadata["seed"] == 11

    def test_mean_converges(self, cfg, amp):
        clean = render_image(cfg, amp, IdlerTransfer.defocus(0.013), SMALL)
        mean = np.mean([add_shot_noise(clean, s).intensities for s in range(100)], axis=0)
        bound = 5 * np.sqrt(clean.intensities) / np.sqrt(100)
        assert np.all(np.abs(mean - clean.intensities) <= np.maximum(bound, 5 / 100))


class TestPhaseScan:
    def test_count_and_contrast(self, cfg, amp, cam):
        frames = phase_scan(cfg, amp, IdlerTransfer.uniform(), cam, [0.0, np.pi])
        assert len(frames) == 2
        assert frames[1].intensities.sum() / frames[0].intensities.sum() < 1e-6

    def test_simultaneous_transition(self, cfg, amp):
        phis = np.array([0.0, np.pi / 2, np.pi, 3 * np.pi / 2])
        stack = np.array([f.intensities for f in phase_scan(cfg, amp, IdlerTransfer.uniform(), SMALL, phis)])
        # per pixel I = A + B cos(phi0 - p); recover p from the four-step projection
        p = np.arctan2(np.tensordot(np.sin(phis), stack, 1), np.tensordot(np.cos(phis), stack, 1))
        assert np.ptp(p) < 1e-6

    def test_defocus_rings_move(self, cfg, amp, cam):
        frames = phase_scan(cfg, amp, IdlerTransfer.defocus(0.017), cam, [0.0, np.pi / 2, np.pi])
        centre = [f.intensities[256, 256] for f in frames]
        assert centre[0] > centre[1] > centre[2]


class TestImageFiles:
    def test_round_trip(self, tmp_path):
        img = add_shot_noise(rendered(0.017), 5)
        path = write_image(img, tmp_path / "frame.pgm")
        back = read_image(path)
        step = img.intensities.max() / 65535
        assert np.max(np.abs(back.intensities - img.intensities)) <= step
        assert back.metadata["d_m"] == 0.017
        assert back.metadata["phi0_rad"] == 0.0
        assert back.metadata["seed"] == 5
        assert back.camera == img.camera

    def test_layout(self, tmp_path):
        path = write_image(rendered(0.009), tmp_path / "f.pgm")
        data = path.read_bytes()
        assert data.startswith(b"P5\n512 512\n65535\n")
        assert len(data) == len(b"P5\n512 512\n65535\n") + 2 * 512 * 512
        assert sidecar_path(path).name == "f.pgm.meta"

    def test_truncated(self, tmp_path):
        path = write_image(rendered(0.009), tmp_path / "f.pgm")
        path.write_bytes(path.read_bytes()[:5000])
        with pytest.raises(ImageFormatError, match="byte offset 17"):
            read_image(path)

    def test_truncated_header(self, tmp_path):
        path = write_image(rendered(0.009), tmp_path / "f.pgm")
        path.write_bytes(b"P5\n512")
        with pytest.raises(ImageFormatError, match="header truncated"):
            read_image(path)

    def test_bad_magic(self, tmp_path):
        path = write_image(rendered(0.009), tmp_path / "f.pgm")
        path.write_bytes(b"P2" + path.read_bytes()[2:])
        with pytest.raises(ImageFormatError, match="magic"):
            read_image(path)

    def test_missing_sidecar(self, tmp_path):
        path = write_image(rendered(0.009), tmp_path / "f.pgm")
        sidecar_path(path).unlink()
        with pytest.raises(ImageFormatError, match="missing"):
            read_image(path)

    def test_malformed_sidecar_line(self, tmp_path):
        path = write_image(rendered(0.009), tmp_path / "f.pgm")
        meta = sidecar_path(path)
        meta.write_text(meta.read_text() + "d_m = [oops\n")
        with pytest.raises(ImageFormatError, match=r"\.meta:\d+"):
            read_image(path)

    def test_deterministic_bytes(self, tmp_path):
        a = write_image(add_shot_noise(rendered(0.013), 9), tmp_path / "a.pgm")
        b = write_image(add_shot_noise(rendered(0.013), 9), tmp_path / "b.pgm")
        assert a.read_bytes() == b.read_bytes()
        assert sidecar_path(a).read_bytes() == sidecar_path(b).read_bytes()
