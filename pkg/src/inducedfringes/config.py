"""Flat ``key = value`` run configuration with unit-suffixed keys.

Example file::

    # bench defaults
    optical.lambda_s_nm = 810
    optical.lambda_i_nm = 1550
    optical.lambda_p_nm = 532
    optical.pump_waist_um = 250
    transfer.kind = defocus
    transfer.d_mm = 17

Every key is optional; omitted keys take the defaults listed in
:data:`KEYS`. Parsing is strict: unknown keys, unparsable values and
violated physical invariants raise :class:`ConfigError` naming the key and
the line it came from. Internally everything is converted to SI.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .biphoton import (
    IdlerTransfer,
    make_correlated_amplitude,
    make_separable_amplitude,
    matched_separable_amplitude,
)
from .exceptions import ConfigError
from .imaging import CameraModel
from .optics import OpticalConfig, defocus_to_distance

__all__ = ["CONFIG_ENV_VAR", "KEYS", "AnalysisSettings", "RunConfig", "parse_config", "parse_config_text"]

CONFIG_ENV_VAR = "INDUCEDFRINGES_CONFIG"

_FLOAT, _INT, _WORD, _SEED, _PATH = "float", "int", "word", "seed", "path"

# key -> (value type, default, units per SI unit)
KEYS = {
    "optical.lambda_s_nm": (_FLOAT, 810.0, 1e9),
    "optical.lambda_i_nm": (_FLOAT, 1550.0, 1e9),
    "optical.lambda_p_nm": (_FLOAT, 532.0, 1e9),
    "optical.f_c_mm": (_FLOAT, 150.0, 1e3),
    "optical.f_idler_mm": (_FLOAT, 100.0, 1e3),
    "optical.pump_waist_um": (_FLOAT, 250.0, 1e6),
    "camera.width_px": (_INT, 512, 1),
    "camera.height_px": (_INT, 512, 1),
    "camera.pixel_pitch_um": (_FLOAT, 20.0, 1e6),
    "camera.center_x_px": (_FLOAT, None, 1),
    "camera.center_y_px": (_FLOAT, None, 1),
    "camera.envelope_radius_mm": (_FLOAT, 2.5, 1e3),
    "camera.exposure_counts": (_FLOAT, 4000.0, 1),
    "transfer.kind": (_WORD, "defocus", None),
    "transfer.transmission": (_FLOAT, 1.0, 1),
    "transfer.phi0_deg": (_FLOAT, 0.0, "deg"),
    "transfer.d_mm": (_FLOAT, 17.0, 1e3),
    "transfer.delta_mm": (_FLOAT, None, 1e3),
    "transfer.tilt_x_mm": (_FLOAT, 0.0, 1e3),
    "transfer.tilt_y_mm": (_FLOAT, 0.0, 1e3),
    "amplitude.kind": (_WORD, "correlated_gaussian", None),
    "amplitude.signal_width_per_m": (_FLOAT, None, 1),
    "amplitude.idler_width_per_m": (_FLOAT, None, 1),
    "analysis.bin_width_um": (_FLOAT, None, 1e6),
    "analysis.smooth_half_width": (_INT, 2, 1),
    "analysis.prominence": (_FLOAT, 0.05, 1),
    "analysis.center_search_px": (_FLOAT, 3.0, 1),
    "analysis.center_step_px": (_FLOAT, 0.1, 1),
    "run.noise_seed": (_SEED, None, None),
    "run.output_dir": (_PATH, "out", None),
}

_POSITIVE = [k for k in KEYS if k.startswith("optical.")] + [
    "camera.pixel_pitch_um",
    "camera.envelope_radius_mm",
    "amplitude.signal_width_per_m",
    "amplitude.idler_width_per_m",
    "analysis.bin_width_um",
    "analysis.prominence",
    "analysis.center_search_px",
    "analysis.center_step_px",
]
_ALTERNATIVES = {"transfer.d_mm": "transfer.delta_mm", "transfer.delta_mm": "transfer.d_mm"}
_TRANSFER_KINDS = ("uniform", "tilt", "defocus")
_AMPLITUDE_KINDS = ("correlated_gaussian", "separable_gaussian")


@dataclass(frozen=True)
class AnalysisSettings:
    bin_width: Optional[float] = None
    smooth_half_width: int = 2
    prominence: float = 0.05
    center_search_px: float = 3.0
    center_step_px: float = 0.1


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run configuration (SI units)."""

    optical: OpticalConfig
    camera: CameraModel
    transfer: IdlerTransfer
    amplitude_kind: str = "correlated_gaussian"
    signal_width: Optional[float] = None
    idler_width: Optional[float] = None
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)
    noise_seed: Optional[int] = None
    output_dir: Path = Path("out")

    def amplitude(self):
        """Build the joint amplitude this configuration selects."""
        if self.amplitude_kind == "correlated_gaussian":
            return make_correlated_amplitude(self.optical.pump_waist)
        if self.signal_width is None and self.idler_width is None:
            return matched_separable_amplitude(self.optical, self.camera.envelope_radius)
        return make_separable_amplitude(self.signal_width, self.idler_width)

    def with_transfer(self, **changes):
        return _replace(self, transfer=self.transfer.replace(**changes))


def _replace(cfg, **changes):
    values = {name: getattr(cfg, name) for name in cfg.__dataclass_fields__}
    values.update(changes)
    return RunConfig(**values)


def _convert(key, raw, where):
    kind = KEYS[key][0]
    text = raw.strip()
    try:
        if kind == _FLOAT:
            value = float(text)
            if not math.isfinite(value):
                raise ValueError
            return value
        if kind == _INT:
            return int(text)
        if kind == _SEED:
            if text.lower() in ("none", ""):
                return None
            seed = int(text)
            if seed < 0:
                raise ValueError
            return seed
    except ValueError:
        raise ConfigError(f"{where}: {key}: cannot parse {text!r} as {kind}") from None
    if not text:
        raise ConfigError(f"{where}: {key}: empty value")
    return text


def _parse_lines(text, source):
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        where = f"{source}:{lineno}"
        if not sep:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        if key not in KEYS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"{where}: {key} already set on {entries[key][1]}")
        entries[key] = (_convert(key, value, where), where)
    return entries


def _apply_overrides(entries, overrides):
    entries = dict(entries)
    for item in overrides or ():
        key, sep, value = item.partition("=")
        key = key.strip()
        where = f"override {item!r}"
        if not sep:
            raise ConfigError(f"{where}: expected KEY=VALUE")
        if key not in KEYS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        entries.pop(key, None)
        # the two ways of setting the defocus distance replace each other
        entries.pop(_ALTERNATIVES.get(key), None)
        entries[key] = (_convert(key, value, where), where)
    return entries


class _Values:
    """Typed accessor that remembers where each value came from."""

    def __init__(self, entries):
        self.entries = entries

    def get(self, key):
        if key in self.entries:
            return self.entries[key][0]
        return KEYS[key][1]

    def si(self, key):
        value = self.get(key)
        per_si = KEYS[key][2]
        if value is None:
            return None
        return math.radians(value) if per_si == "deg" else value / per_si

    def where(self, key):
        return self.entries[key][1] if key in self.entries else "default"

    def fail(self, keys, message):
        # blame the most recently set key among those involved
        order = list(self.entries)
        chosen = [k for k in keys if k in self.entries]
        key = max(chosen, key=order.index) if chosen else keys[0]
        raise ConfigError(f"{self.where(key)}: {key}: {message}")

    def positive(self, key):
        value = self.get(key)
        if value is not None and not value > 0:
            self.fail([key], f"must be positive, got {value!r}")


def _build(values):
    for key in _POSITIVE:
        values.positive(key)

    optical_keys = [k for k in KEYS if k.startswith("optical.")]
    try:
        optical = OpticalConfig(
            lambda_s=values.si("optical.lambda_s_nm"),
            lambda_i=values.si("optical.lambda_i_nm"),
            lambda_p=values.si("optical.lambda_p_nm"),
            f_c=values.si("optical.f_c_mm"),
            f_idler=values.si("optical.f_idler_mm"),
            pump_waist=values.si("optical.pump_waist_um"),
        )
    except ValueError as exc:
        values.fail(optical_keys, str(exc))

    cx, cy = values.get("camera.center_x_px"), values.get("camera.center_y_px")
    if (cx is None) != (cy is None):
        values.fail(["camera.center_x_px", "camera.center_y_px"], "set both center coordinates or neither")
    try:
        camera = CameraModel(
            width_px=values.get("camera.width_px"),
            height_px=values.get("camera.height_px"),
            pixel_pitch=values.si("camera.pixel_pitch_um"),
            center_px=None if cx is None else (cx, cy),
            envelope_radius=values.si("camera.envelope_radius_mm"),
            exposure_counts=values.get("camera.exposure_counts"),
        )
    except ValueError as exc:
        values.fail([k for k in KEYS if k.startswith("camera.")], str(exc))

    kind = values.get("transfer.kind")
    if kind not in _TRANSFER_KINDS:
        values.fail(["transfer.kind"], f"expected one of {', '.join(_TRANSFER_KINDS)}, got {kind!r}")
    d = values.si("transfer.d_mm")
    if values.get("transfer.delta_mm") is not None:
        if "transfer.d_mm" in values.entries:
            values.fail(["transfer.delta_mm"], "give either transfer.d_mm or transfer.delta_mm, not both")
        d = defocus_to_distance(values.si("transfer.delta_mm"), optical.f_idler)
    if kind == "defocus" and not d > 0:
        values.fail(["transfer.d_mm", "transfer.delta_mm"], f"defocus distance must be positive, got {d!r} m")
    try:
        transfer = IdlerTransfer(
            transmission=values.get("transfer.transmission"),
            phase_kind=kind,
            phi0=values.si("transfer.phi0_deg"),
            tilt_gradient=(values.si("transfer.tilt_x_mm"), values.si("transfer.tilt_y_mm")),
            defocus_distance=d if kind == "defocus" else 0.0,
        )
    except ValueError as exc:
        values.fail(["transfer.transmission"], str(exc))

    amp_kind = values.get("amplitude.kind")
    if amp_kind not in _AMPLITUDE_KINDS:
        values.fail(["amplitude.kind"], f"expected one of {', '.join(_AMPLITUDE_KINDS)}, got {amp_kind!r}")
    sw, iw = values.get("amplitude.signal_width_per_m"), values.get("amplitude.idler_width_per_m")
    if (sw is None) != (iw is None):
        values.fail(["amplitude.signal_width_per_m", "amplitude.idler_width_per_m"],
                    "set both separable widths or neither")
    if sw is not None and amp_kind != "separable_gaussian":
        values.fail(["amplitude.signal_width_per_m"], "widths apply only to amplitude.kind = separable_gaussian")

    smooth = values.get("analysis.smooth_half_width")
    if smooth < 0:
        values.fail(["analysis.smooth_half_width"], f"must be non-negative, got {smooth}")
    if values.get("analysis.prominence") >= 1:
        values.fail(["analysis.prominence"], "must be below 1")
    bin_width = values.si("analysis.bin_width_um")
    if bin_width is not None and bin_width < camera.pixel_pitch / 2:
        values.fail(["analysis.bin_width_um"], "must be at least half the pixel pitch")
    analysis = AnalysisSettings(
        bin_width=bin_width,
        smooth_half_width=smooth,
        prominence=values.get("analysis.prominence"),
        center_search_px=values.get("analysis.center_search_px"),
        center_step_px=values.get("analysis.center_step_px"),
    )

    return RunConfig(
        optical=optical,
        camera=camera,
        transfer=transfer,
        amplitude_kind=amp_kind,
        signal_width=sw,
        idler_width=iw,
        analysis=analysis,
        noise_seed=values.get("run.noise_seed"),
        output_dir=Path(values.get("run.output_dir")),
    )


def parse_config_text(text, source="<config>", overrides=None):
    """Parse configuration text; ``overrides`` are ``KEY=VALUE`` strings applied last."""
    entries = _apply_overrides(_parse_lines(text, source), overrides)
    return _build(_Values(entries))


def parse_config(path=None, overrides=None):
    """Read and validate a configuration file.

    With ``path=None`` the file named by the ``INDUCEDFRINGES_CONFIG``
    environment variable is used, and pure defaults if that is unset too.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    if path is None:
        return parse_config_text("", overrides=overrides)
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config_text(text, str(path), overrides)
