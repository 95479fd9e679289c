"""Camera frames of the signal interference pattern, and their on-disk format.

The camera sits in the back focal plane of a lens of focal length
``f_c``, so the pixel at transverse position ``r`` (measured from the
optical axis) records signal mode ``q_s = k_s r / f_c``. A Gaussian
envelope models the finite angular spread of the signal beam.

Image files are 16-bit binary PGM (``P5``) with a ``<image>.meta``
sidecar of ``key = value`` lines; values are JSON literals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ._io import atomic_write_bytes, atomic_write_text
from .biphoton import signal_mode_grid
from .exceptions import DomainError, ImageFormatError
from .optics import PARAXIAL_LIMIT

__all__ = [
    "CameraModel",
    "FringeImage",
    "render_image",
    "add_shot_noise",
    "phase_scan",
    "write_image",
    "read_image",
    "sidecar_path",
]

PGM_MAX = 65535
FORMAT_VERSION = 1


@dataclass(frozen=True)
class CameraModel:
    """Sensor geometry plus the signal envelope it records.

    Pixel ``(row, col)`` is centred at ``((col - cx) * pitch, (row - cy) * pitch)``
    relative to the optical axis, where ``center_px = (cx, cy)`` defaults to
    ``(width_px / 2, height_px / 2)``.
    """

    width_px: int = 512
    height_px: int = 512
    pixel_pitch: float = 20e-6
    center_px: Optional[tuple] = None
    envelope_radius: float = 2.5e-3
    exposure_counts: float = 4000.0

    def __post_init__(self):
        if self.width_px < 64 or self.height_px < 64:
            raise DomainError("camera must be at least 64 x 64 pixels")
        if not self.pixel_pitch > 0:
            raise DomainError("pixel pitch must be positive")
        if not self.envelope_radius > 0:
            raise DomainError("envelope radius must be positive")
        if not self.exposure_counts >= 0:
            raise DomainError("exposure counts must be non-negative")
        if self.center_px is None:
            object.__setattr__(self, "center_px", (self.width_px / 2, self.height_px / 2))
        else:
            object.__setattr__(self, "center_px", tuple(float(c) for c in self.center_px))

    @property
    def shape(self):
        return (self.height_px, self.width_px)

    def axes(self):
        """Physical x (per column) and y (per row) pixel coordinates in metres."""
        cx, cy = self.center_px
        x = (np.arange(self.width_px) - cx) * self.pixel_pitch
        y = (np.arange(self.height_px) - cy) * self.pixel_pitch
        return x, y

    def envelope(self, rho):
        return np.exp(-2 * np.square(rho) / self.envelope_radius**2)


@dataclass(eq=False)
class FringeImage:
    intensities: np.ndarray
    camera: CameraModel
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.intensities = np.asarray(self.intensities, dtype=float)
        if self.intensities.shape != self.camera.shape:
            raise DomainError(
                f"image shape {self.intensities.shape} does not match camera {self.camera.shape}"
            )
        if np.any(self.intensities < 0):
            raise DomainError("intensities must be non-negative")


def _generation_metadata(cfg, amp, transfer):
    return {
        "amplitude_kind": amp.kind,
        "pump_waist_m": amp.pump_waist,
        "phase_kind": transfer.phase_kind,
        "d_m": float(transfer.defocus_distance),
        "tilt_x_m": transfer.tilt_gradient[0],
        "tilt_y_m": transfer.tilt_gradient[1],
        "phi0_rad": float(transfer.phi0),
        "transmission": float(transfer.transmission),
        "lambda_s_m": cfg.lambda_s,
        "lambda_i_m": cfg.lambda_i,
        "lambda_p_m": cfg.lambda_p,
        "f_c_m": cfg.f_c,
        "seed": None,
    }


def render_image(cfg, amp, transfer, cam):
    """Noise-free camera frame for one source and idler transfer.

    Each pixel holds ``exposure * envelope(rho) * I(q_s) / (2 W(q_s))`` so a
    fully constructive, visibility-one pixel at the envelope centre reads
    ``exposure_counts``.
    """
    x, y = cam.axes()
    rho_max = np.hypot(np.max(np.abs(x)), np.max(np.abs(y)))
    theta_s = rho_max / cfg.f_c
    if theta_s * cfg.lambda_i / cfg.lambda_s >= PARAXIAL_LIMIT:
        raise DomainError(
            f"camera field of view reaches idler angle {theta_s * cfg.lambda_i / cfg.lambda_s:.3g} rad, "
            f"beyond the paraxial limit {PARAXIAL_LIMIT}"
        )
    scale = cfg.k_s / cfg.f_c
    modes = signal_mode_grid(x * scale, y * scale, amp, transfer, cfg)
    env = cam.envelope(np.hypot(x[None, :], y[:, None]))
    frame = cam.exposure_counts * env * modes.mean_intensity / (2 * modes.background)
    return FringeImage(np.maximum(frame, 0.0), cam, _generation_metadata(cfg, amp, transfer))


def add_shot_noise(img, seed):
    """Replace each pixel by a Poisson draw with the pixel value as mean.

    Uses a counter-based Philox generator keyed by ``seed``.
    """
    rng = np.random.Generator(np.random.Philox(int(seed)))
    counts = rng.poisson(img.intensities).astype(float)
    meta = dict(img.metadata)
    meta["seed"] = int(seed)
    return FringeImage(counts, img.camera, meta)


def phase_scan(cfg, amp, transfer, cam, phi0_values):
    return [render_image(cfg, amp, transfer.replace(phi0=float(p)), cam) for p in phi0_values]


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.name + ".meta")


def _camera_items(cam):
    return {
        "camera.width_px": cam.width_px,
        "camera.height_px": cam.height_px,
        "camera.pixel_pitch_m": cam.pixel_pitch,
        "camera.center_x_px": cam.center_px[0],
        "camera.center_y_px": cam.center_px[1],
        "camera.envelope_radius_m": cam.envelope_radius,
        "camera.exposure_counts": cam.exposure_counts,
    }


def write_image(img, path):
    """Write ``img`` as a 16-bit PGM plus ``<path>.meta`` sidecar.

    Intensities are divided by their maximum (stored as ``intensity_scale``)
    and rounded to 16 bits.
    """
    path = Path(path)
    scale = float(np.max(img.intensities)) if img.intensities.size else 0.0
    if scale > 0:
        q = np.rint(img.intensities / scale * PGM_MAX)
    else:
        q = np.zeros_like(img.intensities)
    h, w = img.intensities.shape
    header = f"P5\n{w} {h}\n{PGM_MAX}\n".encode("ascii")
    atomic_write_bytes(path, header + q.astype(">u2").tobytes())

    items = {"format_version": FORMAT_VERSION, "intensity_scale": scale}
    items.update(_camera_items(img.camera))
    for key in sorted(img.metadata):
        items[key] = img.metadata[key]
    lines = [f"{k} = {json.dumps(v)}" for k, v in items.items()]
    atomic_write_text(sidecar_path(path), "\n".join(lines) + "\n")
    return path


def _read_pgm(path):
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError(f"{path}: header truncated at byte offset {pos}")
        tokens.append((data[start:pos], start))
    pos += 1  # single whitespace byte after maxval
    magic, offset = tokens[0]
    if magic != b"P5":
        raise ImageFormatError(f"{path}: bad magic {magic!r} at byte offset {offset}, expected b'P5'")
    try:
        w, h, maxval = (int(tok) for tok, _ in tokens[1:])
    except ValueError:
        bad = next(off for tok, off in tokens[1:] if not tok.isdigit())
        raise ImageFormatError(f"{path}: non-integer header field at byte offset {bad}") from None
    if maxval != PGM_MAX:
        raise ImageFormatError(f"{path}: maxval {maxval} at byte offset {tokens[3][1]}, expected {PGM_MAX}")
    expected = 2 * w * h
    payload = data[pos:]
    if len(payload) != expected:
        raise ImageFormatError(
            f"{path}: pixel data at byte offset {pos} holds {len(payload)} bytes, expected {expected}"
        )
    return np.frombuffer(payload, dtype=">u2").reshape(h, w).astype(float)


def _read_sidecar(path):
    meta_path = sidecar_path(path)
    if not meta_path.exists():
        raise ImageFormatError(f"{path}: metadata sidecar {meta_path} is missing")
    items = {}
    for lineno, raw in enumerate(meta_path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ImageFormatError(f"{meta_path}:{lineno}: expected 'key = value'")
        try:
            items[key.strip()] = json.loads(value.strip())
        except json.JSONDecodeError as exc:
            raise ImageFormatError(f"{meta_path}:{lineno}: cannot parse value ({exc.msg})") from None
    return items


def read_image(path):
    """Inverse of :func:`write_image`."""
    q = _read_pgm(path)
    items = _read_sidecar(path)
    try:
        scale = float(items.pop("intensity_scale"))
        items.pop("format_version", None)
        cam = CameraModel(
            width_px=int(items.pop("camera.width_px")),
            height_px=int(items.pop("camera.height_px")),
            pixel_pitch=float(items.pop("camera.pixel_pitch_m")),
            center_px=(float(items.pop("camera.center_x_px")), float(items.pop("camera.center_y_px"))),
            envelope_radius=float(items.pop("camera.envelope_radius_m")),
            exposure_counts=float(items.pop("camera.exposure_counts")),
        )
    except KeyError as exc:
        raise ImageFormatError(f"{sidecar_path(path)}: missing key {exc.args[0]!r}") from None
    if cam.shape != q.shape:
        raise ImageFormatError(f"{path}: pixel dimensions {q.shape[::-1]} disagree with sidecar camera size")
    return FringeImage(q / PGM_MAX * scale, cam, items)

