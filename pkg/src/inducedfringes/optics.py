"""Interferometer geometry and scalar paraxial propagation kernels.

All quantities are SI (metres, radians, rad/m). Kernels are evaluated by
direct summation over the input grid rather than by FFT, which keeps the
sampling requirements explicit and the results easy to audit at the
problem sizes used here (a few thousand samples).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, GridMismatchError, SamplingError

logger = logging.getLogger(__name__)

__all__ = [
    "PARAXIAL_LIMIT",
    "DEFOCUS_VALIDITY_LIMIT",
    "OpticalConfig",
    "ComplexField1D",
    "check_energy_conservation",
    "signal_angle_to_idler_angle",
    "camera_radius_to_angles",
    "defocus_to_distance",
    "defocus_ratio",
    "propagation_phase",
    "gaussian_field",
    "displaced_lens_field",
    "fresnel_propagate",
    "field_mismatch",
    "kernel_test_field",
]

PARAXIAL_LIMIT = 0.2  # rad
DEFOCUS_VALIDITY_LIMIT = 0.06  # largest delta**2 / f**2 for which the 4f defocus acts as free space

_CHUNK = 256


def check_energy_conservation(lambda_s, lambda_i, lambda_p, rtol=1e-3):
    """Return True if the three wavelengths satisfy 1/lp = 1/ls + 1/li.

    The comparison is relative to ``1/lambda_p`` with tolerance ``rtol``.
    """
    for name, value in (("lambda_s", lambda_s), ("lambda_i", lambda_i), ("lambda_p", lambda_p)):
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value!r}")
    inv_p = 1.0 / lambda_p
    return bool(abs(inv_p - 1.0 / lambda_s - 1.0 / lambda_i) / inv_p <= rtol)


@dataclass(frozen=True)
class OpticalConfig:
    """Physical parameters of the two-crystal interferometer.

    Defaults reproduce the bench: 532 nm pump, 810 nm signal, 1550 nm idler
    and a 250 um pump waist. The two focal lengths are not known from the
    experiment and are free configuration.

    Parameters
    ----------
    lambda_s, lambda_i, lambda_p : float
        Wavelengths of the photon pair and the pump (m).
    f_c : float
        Focal length of the lens in front of the camera (m).
    f_idler : float
        Focal length of the 4f lenses in the idler arm (m).
    pump_waist : float
        Gaussian pump waist at the crystals (m).
    """

    lambda_s: float = 810e-9
    lambda_i: float = 1550e-9
    lambda_p: float = 532e-9
    f_c: float = 0.150
    f_idler: float = 0.100
    pump_waist: float = 250e-6

    def __post_init__(self):
        for name in ("lambda_s", "lambda_i", "lambda_p", "f_c", "f_idler", "pump_waist"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be a positive finite length, got {value!r}")
        if not check_energy_conservation(self.lambda_s, self.lambda_i, self.lambda_p):
            raise DomainError(
                "wavelengths violate energy conservation: "
                f"1/{self.lambda_p:g} != 1/{self.lambda_s:g} + 1/{self.lambda_i:g}"
            )
        if not self.lambda_s < self.lambda_i:
            raise DomainError("the detected signal must be the shorter wavelength (lambda_s < lambda_i)")

    @property
    def k_s(self):
        return 2 * np.pi / self.lambda_s

    @property
    def k_i(self):
        return 2 * np.pi / self.lambda_i

    @property
    def lambda_eq(self):
        return self.lambda_s**2 / self.lambda_i


@dataclass(frozen=True, eq=False)
class ComplexField1D:
    """A complex scalar field sampled on a uniform 1D grid.

    ``samples[j]`` is the amplitude at ``origin + j * spacing``.
    """

    samples: np.ndarray
    spacing: float
    origin: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.ndim != 1 or samples.size < 8:
            raise DomainError("a field needs a 1D array of at least 8 samples")
        if not self.spacing > 0:
            raise DomainError(f"spacing must be positive, got {self.spacing!r}")
        object.__setattr__(self, "samples", samples)

    @property
    def coords(self):
        return self.origin + self.spacing * np.arange(self.samples.size)

    @property
    def power(self):
        return float(np.sum(np.abs(self.samples) ** 2) * self.spacing)

    def scaled(self, c):
        return ComplexField1D(self.samples * c, self.spacing, self.origin)


def gaussian_field(waist, n_samples, extent, tilt=0.0):
    """Centred Gaussian ``exp(-x**2/waist**2 + i*tilt*x/waist)`` on ``n_samples`` points
    spanning ``extent``."""
    spacing = extent / (n_samples - 1)
    origin = -extent / 2
    x = origin + spacing * np.arange(n_samples)
    return ComplexField1D(np.exp(-(x / waist) ** 2 + 1j * tilt * x / waist), spacing, origin)


def signal_angle_to_idler_angle(theta_s, cfg):
    """Idler angle partnered with a signal angle, ``theta_s * lambda_i / lambda_s``."""
    theta_s = np.asarray(theta_s, dtype=float)
    if np.any(np.abs(theta_s) >= PARAXIAL_LIMIT):
        raise DomainError(f"signal angle outside the paraxial range |theta| < {PARAXIAL_LIMIT} rad")
    out = theta_s * cfg.lambda_i / cfg.lambda_s
    return float(out) if out.ndim == 0 else out


def camera_radius_to_angles(rho, cfg):
    """Map a radius on the camera to the (signal, idler) angle pair imaged there."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise DomainError("camera radius must be non-negative")
    theta_s = rho / cfg.f_c
    theta_i = theta_s * cfg.lambda_i / cfg.lambda_s
    if theta_s.ndim == 0:
        return float(theta_s), float(theta_i)
    return theta_s, theta_i


def defocus_ratio(delta, f_idler):
    return (delta / f_idler) ** 2


def defocus_to_distance(delta, f_idler):
    """Free-space distance equivalent to displacing a 4f lens by ``delta``.

    Returns ``f**2 * delta / (f**2 + delta**2)``. A warning is logged when
    ``delta**2/f**2`` exceeds the range where the equivalence is accurate.
    """
    if not f_idler > 0:
        raise DomainError(f"f_idler must be positive, got {f_idler!r}")
    ratio = defocus_ratio(delta, f_idler)
    if ratio > DEFOCUS_VALIDITY_LIMIT:
        logger.warning(
            "defocus ratio delta^2/f^2 = %.4g exceeds %.2g; free-space equivalence is approximate",
            ratio,
            DEFOCUS_VALIDITY_LIMIT,
        )
    return _equivalent_distance(delta, f_idler)


def _equivalent_distance(delta, f_idler):
    return f_idler**2 * delta / (f_idler**2 + delta**2)


def propagation_phase(theta_i, d, lambda_i):
    """Paraxial phase picked up by an idler plane wave at angle ``theta_i`` over distance ``d``."""
    return 2 * np.pi / lambda_i * d * np.square(theta_i) / 2


def _check_kernel_sampling(field, inv_distance, k):
    # phase derivative of exp(i k (x - xi)^2 / 2z) w.r.t. xi is k |x - xi| / z
    extent = field.spacing * (field.samples.size - 1)
    step = k * extent * field.spacing * abs(inv_distance)
    if step >= np.pi:
        raise SamplingError(
            f"kernel phase advances {step:.3g} rad per sample at the grid edge (must be < pi); "
            "refine the grid or shrink its extent"
        )


def _quadratic_kernel_transform(field, k, c_out, c_cross, c_in):
    """Evaluate ``sum_xi u(xi) exp(ik/2 [c_out x^2 - 2 c_cross x xi + c_in xi^2]) dxi`` on the input grid."""
    x = field.coords
    weighted = field.samples * np.exp(0.5j * k * c_in * x**2) * field.spacing
    out = np.empty_like(field.samples)
    for start in range(0, x.size, _CHUNK):
        xs = x[start:start + _CHUNK]
        kernel = np.exp(-1j * k * c_cross * np.outer(xs, x))
        out[start:start + _CHUNK] = kernel @ weighted
    out *= np.exp(0.5j * k * c_out * x**2)
    return out


def _match_power(out, reference):
    p = np.sum(np.abs(out) ** 2)
    if p == 0:
        return out
    return out * np.sqrt(np.sum(np.abs(reference) ** 2) / p)


def displaced_lens_field(u0, delta, f_idler, k, normalize=True):
    """Field at the output plane of a 4f system whose first lens is displaced by ``delta``.

    The transform is known only up to a constant factor; with ``normalize``
    the output is scaled to carry the input power.
    """
    if delta == 0:
        raise DomainError("displaced-lens kernel is singular at delta = 0")
    if not f_idler > 0:
        raise DomainError("f_idler must be positive")
    _check_kernel_sampling(u0, 1.0 / delta, k)
    out = _quadratic_kernel_transform(
        u0, k, c_out=1.0 / delta + delta / f_idler**2, c_cross=1.0 / delta, c_in=1.0 / delta
    )
    out *= np.sqrt(k / (2j * np.pi * delta))
    if normalize:
        out = _match_power(out, u0.samples)
    return ComplexField1D(out, u0.spacing, u0.origin)


def fresnel_propagate(u0, d, k, normalize=True):
    """Fresnel propagation over distance ``d`` by direct quadrature on the input grid.

    ``d = 0`` returns a copy of the input. Without ``normalize`` the physical
    prefactor ``sqrt(k / (2 pi i d))`` is applied, so the output power equals
    the input power only to the extent that the grid captures the beam.
    """
    if d == 0:
        return ComplexField1D(u0.samples.copy(), u0.spacing, u0.origin)
    _check_kernel_sampling(u0, 1.0 / d, k)
    c = 1.0 / d
    out = _quadratic_kernel_transform(u0, k, c_out=c, c_cross=c, c_in=c)
    out *= np.sqrt(k / (2j * np.pi * d))
    if normalize:
        out = _match_power(out, u0.samples)
    return ComplexField1D(out, u0.spacing, u0.origin)


def field_mismatch(a, b):
    """Relative L2 distance between two fields after the best global complex rescaling of ``b``.

    Returns ``min_c ||a - c b|| / ||a||``, which is insensitive to global
    phase and amplitude.
    """
    if (
        a.samples.size != b.samples.size
        or not np.isclose(a.spacing, b.spacing, rtol=1e-12, atol=0)
        or not np.isclose(a.origin, b.origin, rtol=1e-12, atol=1e-15)
    ):
        raise GridMismatchError("fields are sampled on different grids")
    norm_a = np.linalg.norm(a.samples)
    if norm_a == 0:
        raise DomainError("reference field is identically zero")
    bb = np.vdot(b.samples, b.samples).real
    c = np.vdot(b.samples, a.samples) / bb if bb > 0 else 0.0
    return float(np.linalg.norm(a.samples - c * b.samples) / norm_a)


def kernel_test_field(waist, delta, f_idler, k, max_samples=4096):
    """Gaussian test beam on a grid fine enough for both defocus kernels at ``delta``.

    The grid spans at least ten waists and holds the beam expanded over
    ``|delta|``; the sample count is set so the kernel chirp advances by
    at most two thirds of pi per sample.
    """
    if delta == 0:
        raise DomainError("delta must be non-zero")
    z_r = k * waist**2 / 2
    d = _equivalent_distance(delta, f_idler)
    extent = max(10 * waist, 8 * waist * np.hypot(1.0, delta / z_r))
    n = int(np.ceil(1.5 * k * extent**2 / (np.pi * min(abs(d), abs(delta))))) + 1
    n = max(n, 512)
    if n > max_samples:
        raise SamplingError(
            f"delta = {delta:g} m needs {n} samples for an unaliased kernel (limit {max_samples})"
        )
    return gaussian_field(waist, n, extent)
