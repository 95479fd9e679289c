"""Two-crystal biphoton state and the signal-mode interference it produces.

A signal mode ``q_s`` detected on the camera receives contributions from
both crystals. Crystal 2's contribution carries the idler-arm phase of
whichever idler mode ``q_i`` accompanied the signal photon, so the
interference term is a weighted average of ``exp(i phi(q_i))`` over the
idler modes allowed by the joint amplitude ``C(q_s, q_i)``::

    W(q_s) = integral |C(q_s, q_i)|^2 dq_i
    Z(q_s) = integral |C(q_s, q_i)|^2 exp(i [phi(q_i) + phi0]) dq_i
    I(q_s) = W + 2 t / (1 + t^2) * Re Z

``t`` is the amplitude transmission of the idler arm. The singles level
``W`` does not depend on ``t`` or on the phase map.

For Gaussian amplitudes and the built-in phase maps the
two-dimensional integrals factor into products of one-dimensional ones,
which is what makes rendering full camera frames cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import DegenerateStateError, DomainError, SamplingError, TruncationError
from .optics import PARAXIAL_LIMIT, OpticalConfig, propagation_phase

__all__ = [
    "JointAmplitude",
    "IdlerTransfer",
    "ModeIntensityResult",
    "MomentumWindow",
    "make_correlated_amplitude",
    "make_separable_amplitude",
    "make_custom_amplitude",
    "matched_separable_amplitude",
    "transfer_phase",
    "visibility_factor",
    "signal_mode_intensity",
    "signal_mode_grid",
    "predicted_extrema_radii",
    "equivalent_wavelength",
]

DEFAULT_POINTS = 129
WINDOW_SIGMAS = 8.0
EDGE_WEIGHT_LIMIT = 1e-3
MAX_PHASE_STEP = np.pi / 4
MAX_POINTS_1D = 1 << 15
MAX_POINTS_2D = 1025


@dataclass(frozen=True, eq=False)
class JointAmplitude:
    """Transverse-momentum biphoton amplitude ``C(q_s, q_i)``.

    ``evaluator`` takes arrays of shape ``(..., 2)`` for both arguments.
    ``axis_evaluator`` is set for amplitudes that factor into identical
    per-axis terms; it is what enables the separable quadrature.
    """

    kind: str
    evaluator: Callable
    pump_waist: Optional[float] = None
    signal_width: Optional[float] = None
    idler_width: Optional[float] = None
    axis_evaluator: Optional[Callable] = field(default=None, repr=False)

    def __call__(self, q_s, q_i):
        return self.evaluator(np.asarray(q_s, dtype=float), np.asarray(q_i, dtype=float))

    def idler_center(self, q_s):
        """Centre of ``|C(q_s, .)|**2`` as a function of the idler momentum."""
        q_s = np.asarray(q_s, dtype=float)
        if self.kind == "correlated_gaussian":
            return -q_s
        if self.kind == "separable_gaussian":
            return np.zeros_like(q_s)
        raise DomainError("custom amplitudes need an explicit integration window")

    def idler_spread(self):
        """Standard deviation of ``|C|**2`` along one idler axis."""
        if self.kind == "correlated_gaussian":
            return 1.0 / self.pump_waist
        if self.kind == "separable_gaussian":
            return self.idler_width / np.sqrt(2.0)
        raise DomainError("custom amplitudes need an explicit integration window")


def make_correlated_amplitude(pump_waist):
    """Momentum-anticorrelated amplitude from a Gaussian pump, ``exp(-w**2 |q_s + q_i|**2 / 4)``."""
    if not pump_waist > 0:
        raise DomainError(f"pump waist must be positive, got {pump_waist!r}")
    w2 = pump_waist**2

    def axis(qs, qi):
        return np.exp(-w2 * (qs + qi) ** 2 / 4)

    def evaluator(q_s, q_i):
        s = q_s + q_i
        return np.exp(-w2 * np.sum(s * s, axis=-1) / 4).astype(complex)

    return JointAmplitude("correlated_gaussian", evaluator, pump_waist=pump_waist, axis_evaluator=axis)


def make_separable_amplitude(signal_width, idler_width):
    """Uncorrelated product amplitude ``C_s(q_s) C_i(q_i)`` with Gaussian factors."""
    if not (signal_width > 0 and idler_width > 0):
        raise DomainError("momentum widths must be positive")
    a_s = 1.0 / (2 * signal_width**2)
    a_i = 1.0 / (2 * idler_width**2)

    def axis(qs, qi):
        return np.exp(-a_s * qs**2 - a_i * qi**2)

    def evaluator(q_s, q_i):
        return np.exp(-a_s * np.sum(q_s * q_s, axis=-1) - a_i * np.sum(q_i * q_i, axis=-1)).astype(complex)

    return JointAmplitude(
        "separable_gaussian",
        evaluator,
        signal_width=signal_width,
        idler_width=idler_width,
        axis_evaluator=axis,
    )


def make_custom_amplitude(evaluator):
    return JointAmplitude("custom", evaluator)


def matched_separable_amplitude(cfg, envelope_radius):
    """Separable amplitude whose marginals match a correlated source seen through a camera envelope.

    The signal marginal reproduces a Gaussian of 1/e**2 radius
    ``envelope_radius`` on the camera; the idler marginal has the same
    momentum width, as anticorrelation demands.
    """
    q_env = cfg.k_s * envelope_radius / cfg.f_c
    width = q_env / np.sqrt(2.0)
    return make_separable_amplitude(width, width)


@dataclass(frozen=True, eq=False)
class IdlerTransfer:
    """Amplitude transmission and phase applied to the idler between the crystals.

    ``phase_kind`` selects the spatial phase map: ``uniform`` (none),
    ``tilt`` (``tilt_gradient . q_i``), ``defocus`` (free-space propagation
    over ``defocus_distance``) or ``custom`` (``custom_map(q_i)``). The
    offset ``phi0`` is added in every case.
    """

    transmission: float = 1.0
    phase_kind: str = "uniform"
    phi0: float = 0.0
    tilt_gradient: tuple = (0.0, 0.0)
    defocus_distance: float = 0.0
    custom_map: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.transmission <= 1.0:
            raise DomainError(f"transmission must lie in [0, 1], got {self.transmission!r}")
        if self.phase_kind not in ("uniform", "tilt", "defocus", "custom"):
            raise DomainError(f"unknown phase kind {self.phase_kind!r}")
        if self.phase_kind == "custom" and self.custom_map is None:
            raise DomainError("custom phase kind needs custom_map")
        object.__setattr__(self, "tilt_gradient", tuple(float(v) for v in self.tilt_gradient))
        if len(self.tilt_gradient) != 2:
            raise DomainError("tilt_gradient must be a 2-vector")

    @classmethod
    def uniform(cls, phi0=0.0, transmission=1.0):
        return cls(transmission=transmission, phase_kind="uniform", phi0=phi0)

    @classmethod
    def tilt(cls, gradient, phi0=0.0, transmission=1.0):
        return cls(transmission=transmission, phase_kind="tilt", phi0=phi0, tilt_gradient=tuple(gradient))

    @classmethod
    def defocus(cls, distance, phi0=0.0, transmission=1.0):
        return cls(transmission=transmission, phase_kind="defocus", phi0=phi0, defocus_distance=distance)

    @classmethod
    def custom(cls, phase_map, phi0=0.0, transmission=1.0):
        return cls(transmission=transmission, phase_kind="custom", phi0=phi0, custom_map=phase_map)

    def replace(self, **changes):
        values = dict(
            transmission=self.transmission,
            phase_kind=self.phase_kind,
            phi0=self.phi0,
            tilt_gradient=self.tilt_gradient,
            defocus_distance=self.defocus_distance,
            custom_map=self.custom_map,
        )
        values.update(changes)
        return IdlerTransfer(**values)

    @property
    def separable(self):
        return self.phase_kind != "custom"

    def axis_phase(self, q, axis, cfg):
        """Spatial phase contributed by one momentum axis (``phi0`` excluded)."""
        if self.phase_kind == "uniform":
            return np.zeros_like(q)
        if self.phase_kind == "tilt":
            return self.tilt_gradient[axis] * q
        if self.phase_kind == "defocus":
            return propagation_phase(q * cfg.lambda_i / (2 * np.pi), self.defocus_distance, cfg.lambda_i)
        raise DomainError("custom phase maps do not factor by axis")


def _check_paraxial_idler(q_i, cfg):
    theta = np.max(np.abs(q_i)) * cfg.lambda_i / (2 * np.pi) if np.size(q_i) else 0.0
    if theta >= PARAXIAL_LIMIT:
        raise DomainError(f"idler momentum outside the paraxial range (theta_i = {theta:.3g} rad)")


def transfer_phase(transfer, q_i, cfg):
    """Total idler-arm phase for transverse idler momenta ``q_i`` (shape ``(..., 2)``)."""
    q_i = np.asarray(q_i, dtype=float)
    norm = np.sqrt(np.sum(q_i * q_i, axis=-1))
    _check_paraxial_idler(norm, cfg)
    if transfer.phase_kind == "uniform":
        phase = np.zeros_like(norm)
    elif transfer.phase_kind == "tilt":
        phase = q_i @ np.asarray(transfer.tilt_gradient)
    elif transfer.phase_kind == "defocus":
        phase = propagation_phase(norm * cfg.lambda_i / (2 * np.pi), transfer.defocus_distance, cfg.lambda_i)
    else:
        phase = np.asarray(transfer.custom_map(q_i), dtype=float)
    phase = transfer.phi0 + phase
    return float(phase) if np.ndim(phase) == 0 else phase


def visibility_factor(transmission):
    """Visibility reduction ``2t / (1 + t**2)`` from partial idler transmission."""
    return 2 * transmission / (1 + transmission**2)


@dataclass(frozen=True)
class MomentumWindow:
    """Square idler-momentum integration window, ``center +- half_width`` on both axes."""

    center: tuple
    half_width: float
    points: int = DEFAULT_POINTS


@dataclass(frozen=True, eq=False)
class ModeIntensityResult:
    """Detected intensity and fringe parameters of one signal mode (or a grid of them).

    ``background`` is the phase-averaged singles level ``W``; the intensity
    at the configured ``phi0`` is ``mean_intensity``.
    """

    mean_intensity: np.ndarray
    visibility: np.ndarray
    fringe_phase: np.ndarray
    background: np.ndarray


def _trapezoid_weights(n, step):
    w = np.full(n, step)
    w[0] = w[-1] = step / 2
    return w


def _axis_integrals(q_signal, amp, transfer, cfg, half_width, points):
    """Per-axis (W, Z) for a 1D array of signal momenta; excludes phi0 and transmission."""
    q_signal = np.asarray(q_signal, dtype=float)
    centers = amp.idler_center(q_signal)
    n = points
    while True:
        u = np.linspace(-1.0, 1.0, n)
        grid = centers[:, None] + half_width * u[None, :]
        phase = transfer.axis_phase(grid, 0, cfg)
        step_max = np.max(np.abs(np.diff(phase, axis=1))) if n > 1 else 0.0
        if step_max <= MAX_PHASE_STEP:
            break
        if n >= MAX_POINTS_1D:
            raise SamplingError(
                f"idler phase advances {step_max:.3g} rad per quadrature step even with {n} points"
            )
        n = min(2 * (n - 1) + 1, MAX_POINTS_1D)
    _check_paraxial_idler(grid, cfg)
    weight = np.abs(amp.axis_evaluator(q_signal[:, None], grid)) ** 2
    peak = weight.max(axis=1)
    if np.any(peak <= 0):
        raise DegenerateStateError("joint amplitude vanishes over the integration window")
    edge = np.maximum(weight[:, 0], weight[:, -1]) / peak
    if np.any(edge >= EDGE_WEIGHT_LIMIT):
        raise TruncationError(f"integration window truncates the amplitude (edge weight {edge.max():.2g})")
    w = _trapezoid_weights(n, 2 * half_width / (n - 1))
    big_w = weight @ w
    big_z = (weight * np.exp(1j * phase)) @ w
    return big_w, big_z


def _axis_integrals_for(transfer, axis):
    # tilt phase differs per axis; present each axis as axis 0 to _axis_integrals
    if transfer.phase_kind == "tilt":
        g = transfer.tilt_gradient[axis]
        return transfer.replace(tilt_gradient=(g, 0.0))
    return transfer


def _default_half_width(amp):
    return WINDOW_SIGMAS * amp.idler_spread()


def _separable_grid(qs_x, qs_y, amp, transfer, cfg, half_width, points):
    ux, inv_x = np.unique(qs_x, return_inverse=True)
    uy, inv_y = np.unique(qs_y, return_inverse=True)
    corner = np.hypot(np.max(np.abs(amp.idler_center(ux))), np.max(np.abs(amp.idler_center(uy)))) + half_width
    _check_paraxial_idler(corner, cfg)
    wx, zx = _axis_integrals(ux, amp, _axis_integrals_for(transfer, 0), cfg, half_width, points)
    wy, zy = _axis_integrals(uy, amp, _axis_integrals_for(transfer, 1), cfg, half_width, points)
    wx, zx = wx[inv_x], zx[inv_x]
    wy, zy = wy[inv_y], zy[inv_y]
    big_w = wy[:, None] * wx[None, :]
    big_z = zy[:, None] * zx[None, :]
    return big_w, big_z


def _direct_point(q_s, amp, transfer, cfg, window):
    center = np.asarray(window.center, dtype=float)
    n = window.points
    while True:
        u = center[:, None] + window.half_width * np.linspace(-1.0, 1.0, n)[None, :]
        qi = np.stack(np.meshgrid(u[0], u[1], indexing="xy"), axis=-1)
        phase = transfer_phase(transfer, qi, cfg) - transfer.phi0
        steps = max(
            np.max(np.abs(np.diff(phase, axis=0))),
            np.max(np.abs(np.diff(phase, axis=1))),
        )
        if steps <= MAX_PHASE_STEP:
            break
        if n >= MAX_POINTS_2D:
            raise SamplingError(f"idler phase advances {steps:.3g} rad per quadrature step even with {n}x{n} points")
        n = min(2 * (n - 1) + 1, MAX_POINTS_2D)
    weight = np.abs(amp(np.broadcast_to(q_s, qi.shape), qi)) ** 2
    peak = weight.max()
    if not peak > 0:
        raise DegenerateStateError("joint amplitude vanishes over the integration window")
    edge = max(weight[0].max(), weight[-1].max(), weight[:, 0].max(), weight[:, -1].max()) / peak
    if edge >= EDGE_WEIGHT_LIMIT:
        raise TruncationError(f"integration window truncates the amplitude (edge weight {edge:.2g})")
    w = _trapezoid_weights(n, 2 * window.half_width / (n - 1))
    w2 = np.outer(w, w)
    big_w = np.sum(weight * w2)
    big_z = np.sum(weight * np.exp(1j * phase) * w2)
    return big_w, big_z


def _finish(big_w, big_z, transfer):
    t = transfer.transmission
    z = big_z * np.exp(1j * transfer.phi0)
    factor = visibility_factor(t)
    mean = big_w + factor * z.real
    vis = factor * np.abs(z) / big_w
    phase = np.angle(z)
    return ModeIntensityResult(
        mean_intensity=np.maximum(mean, 0.0),
        visibility=np.clip(vis, 0.0, 1.0),
        fringe_phase=phase,
        background=big_w,
    )


def _scalarize(result):
    return ModeIntensityResult(*(float(np.asarray(v)) for v in
                                 (result.mean_intensity, result.visibility, result.fringe_phase, result.background)))


def signal_mode_intensity(q_s, amp, transfer, cfg, window=None, method="auto"):
    """Interference of a single signal mode ``q_s``.

    Parameters
    ----------
    q_s : array_like, shape (2,)
        Transverse signal wavevector (rad/m).
    amp : JointAmplitude
    transfer : IdlerTransfer
    cfg : OpticalConfig
    window : MomentumWindow, optional
        Idler integration window. Defaults to eight standard deviations of
        ``|C(q_s, .)|**2`` around its centre, 129 points per axis. The
        point count is raised automatically when the phase map would
        otherwise be undersampled.
    method : {"auto", "separable", "direct"}
        ``direct`` always performs the full 2D quadrature.

    Returns
    -------
    ModeIntensityResult
        With scalar fields.
    """
    q_s = np.asarray(q_s, dtype=float).reshape(2)
    if method not in ("auto", "separable", "direct"):
        raise ValueError(f"unknown method {method!r}")
    can_factor = amp.axis_evaluator is not None and transfer.separable
    if method == "separable" and not can_factor:
        raise DomainError("amplitude or phase map does not factor by axis")
    use_separable = can_factor and method != "direct"
    if window is None:
        half_width = _default_half_width(amp)
        window = MomentumWindow(tuple(amp.idler_center(q_s)), half_width)
    if use_separable:
        centered = np.allclose(window.center, amp.idler_center(q_s), rtol=0, atol=1e-9 * window.half_width)
        if not centered:
            use_separable = False
    if use_separable:
        big_w, big_z = _separable_grid(q_s[:1], q_s[1:], amp, transfer, cfg, window.half_width, window.points)
        return _scalarize(_finish(big_w[0, 0], big_z[0, 0], transfer))
    big_w, big_z = _direct_point(q_s, amp, transfer, cfg, window)
    return _scalarize(_finish(big_w, big_z, transfer))


def signal_mode_grid(qs_x, qs_y, amp, transfer, cfg, points=DEFAULT_POINTS, half_width=None):
    """Evaluate every signal mode on the mesh ``qs_x`` (columns) by ``qs_y`` (rows).

    Uses the separable quadrature when possible and falls back to per-mode
    2D quadrature otherwise. Array fields have shape ``(len(qs_y), len(qs_x))``.
    """
    qs_x = np.asarray(qs_x, dtype=float)
    qs_y = np.asarray(qs_y, dtype=float)
    if half_width is None:
        half_width = _default_half_width(amp)
    if amp.axis_evaluator is not None and transfer.separable:
        big_w, big_z = _separable_grid(qs_x, qs_y, amp, transfer, cfg, half_width, points)
        return _finish(big_w, big_z, transfer)
    big_w = np.empty((qs_y.size, qs_x.size))
    big_z = np.empty((qs_y.size, qs_x.size), dtype=complex)
    for iy, qy in enumerate(qs_y):
        for ix, qx in enumerate(qs_x):
            q = np.array([qx, qy])
            window = MomentumWindow(tuple(amp.idler_center(q)), half_width, points)
            big_w[iy, ix], big_z[iy, ix] = _direct_point(q, amp, transfer, cfg, window)
    return _finish(big_w, big_z, transfer)


def equivalent_wavelength(cfg, lambda_i=None):
    """``lambda_s**2 / lambda_i``, from an :class:`OpticalConfig` or two wavelengths."""
    if isinstance(cfg, OpticalConfig):
        lambda_s, lambda_i = cfg.lambda_s, cfg.lambda_i
    else:
        lambda_s = cfg
    if not (lambda_s > 0 and lambda_i is not None and lambda_i > 0):
        raise DomainError("wavelengths must be positive")
    return lambda_s**2 / lambda_i


def predicted_extrema_radii(d, phi, cfg, n_list):
    """Camera radii of fringe maxima (integer ``n``) and minima (half-integer ``n``).

    Solves ``d rho**2 / (2 f_c**2) + phi_len = n lambda_eq`` for ``rho``.
    ``phi`` is the fringe phase offset in radians; it enters as the length
    ``phi_len = phi / (2 pi) * lambda_eq``, so that ``phi = phi0`` of the
    idler transfer reproduces the forward model's ring positions. Orders
    whose radius would be imaginary are dropped.

    Returns
    -------
    list of (n, rho) tuples
    """
    if not d > 0:
        raise DomainError(f"propagation distance must be positive, got {d!r}")
    lam = equivalent_wavelength(cfg)
    phi_len = phi / (2 * np.pi) * lam
    out = []
    for n in n_list:
        radicand = (n * lam - phi_len) * 2 * cfg.f_c**2 / d
        if radicand >= 0:
            out.append((n, float(np.sqrt(radicand))))
    return out
