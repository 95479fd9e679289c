"""Ring extraction and equivalent-wavelength estimation from fringe images.

Pipeline per image: :func:`estimate_center` -> :func:`radial_profile` ->
:func:`find_extrema` -> :func:`fit_parabola`. Across images taken at
several propagation distances, :func:`fit_equivalent_wavelength`
regresses the parabola coefficient ``a`` on ``d`` and converts the slope
through ``a = d / (2 f_c**2 lambda_eq)``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._io import atomic_write_text
from .exceptions import (
    AmbiguousExtremaError,
    DomainError,
    FitError,
    InsufficientFringesError,
    NoCenterError,
    UnphysicalSlopeError,
)

__all__ = [
    "RadialProfile",
    "Extremum",
    "ExtremaSet",
    "ParabolicFit",
    "WavelengthEstimate",
    "ImageAnalysis",
    "estimate_center",
    "radial_profile",
    "find_extrema",
    "fit_parabola",
    "fit_equivalent_wavelength",
    "analyze_image",
    "EXTREMA_COLUMNS",
    "FIT_COLUMNS",
    "ESTIMATE_COLUMNS",
    "write_extrema_csv",
    "write_fits_csv",
    "write_estimate_csv",
]

EXTREMA_COLUMNS = ("d_mm", "n", "kind", "rho_m", "sigma_m")
FIT_COLUMNS = ("d_mm", "a_per_m2", "phi_prime", "residual_rms")
ESTIMATE_COLUMNS = ("lambda_eq_m", "sigma_m", "slope", "intercept")


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Azimuthally averaged intensity.

    ``valid`` flags bins that received at least one pixel; empty bins carry
    zero intensity and must not be used.
    """

    radii: np.ndarray
    mean_intensity: np.ndarray
    counts_per_bin: np.ndarray
    center_used: tuple
    center_px: tuple
    bin_width: float

    @property
    def valid(self):
        return self.counts_per_bin > 0


class Extremum(NamedTuple):
    order: float
    radius: float
    kind: str
    uncertainty: float


@dataclass(frozen=True, eq=False)
class ExtremaSet:
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        radii = self.radii
        if np.any(np.diff(radii) <= 0) or np.any(np.diff(self.orders) <= 0):
            raise AmbiguousExtremaError("extrema must have strictly increasing radius and order")
        for e in self.entries:
            if (e.kind == "max") != (float(e.order).is_integer()):
                raise AmbiguousExtremaError(f"order {e.order} is inconsistent with kind {e.kind!r}")

    def __len__(self):
        return len(self.entries)

    @property
    def orders(self):
        return np.array([e.order for e in self.entries], dtype=float)

    @property
    def radii(self):
        return np.array([e.radius for e in self.entries], dtype=float)

    @property
    def uncertainties(self):
        return np.array([e.uncertainty for e in self.entries], dtype=float)

    @property
    def kinds(self):
        return [e.kind for e in self.entries]


@dataclass(frozen=True, eq=False)
class ParabolicFit:
    """Least-squares solution of ``n = a rho**2 + phi_prime``."""

    a: float
    phi_prime: float
    residual_rms: float
    covariance: np.ndarray
    n_points: int

    @property
    def sigma_a(self):
        return float(np.sqrt(self.covariance[0, 0]))


@dataclass(frozen=True)
class WavelengthEstimate:
    lambda_eq: float
    sigma: float
    slope: float
    slope_sigma: float
    intercept: float
    intercept_sigma: float
    n_points: int


@dataclass(frozen=True, eq=False)
class ImageAnalysis:
    center_px: tuple
    profile: RadialProfile
    extrema: ExtremaSet
    fit: ParabolicFit


def _check_nontrivial(img):
    data = img.intensities
    peak = float(np.max(data)) if data.size else 0.0
    if not peak > 0 or np.ptp(data) <= 1e-12 * peak:
        raise NoCenterError("image has no intensity structure to locate a centre")


def _centroid(data):
    total = data.sum()
    rows, cols = np.indices(data.shape)
    return float((cols * data).sum() / total), float((rows * data).sum() / total)


def _nonuniformity(data, cols, rows, cx, cy, bin_px=0.5):
    # spread of pixel values about the azimuthal mean, interpolated in radius
    r = np.hypot(cols - cx, rows - cy)
    idx = (r / bin_px).astype(int)
    counts = np.bincount(idx)
    sums = np.bincount(idx, weights=data)
    keep = counts > 0
    centres = (np.nonzero(keep)[0] + 0.5) * bin_px
    profile = sums[keep] / counts[keep]
    model = np.interp(r, centres, profile)
    return float(np.sum((data - model) ** 2))


def estimate_center(img, search_px=3.0, step_px=0.1, region_radius=None):
    """Locate the centre of a circular fringe pattern in pixel coordinates ``(x, y)``.

    Starts from the intensity centroid and moves the centre within
    ``+-search_px`` to make the pattern as azimuthally uniform as
    possible. The search runs on a whole-pixel grid first and then on a
    ``step_px`` grid within one pixel of the best whole-pixel position.

    Parameters
    ----------
    img : FringeImage
    search_px : float
        Half-width of the search box around the centroid.
    step_px : float
        Final grid resolution.
    region_radius : float, optional
        Radius (m) of the disc used to score candidates; defaults to 1.2
        envelope radii, clipped to the sensor.
    """
    _check_nontrivial(img)
    data = img.intensities
    cam = img.camera
    cx0, cy0 = _centroid(data)
    if region_radius is None:
        region_radius = 1.2 * cam.envelope_radius
    h, w = data.shape
    r_px = min(region_radius / cam.pixel_pitch, cx0 - search_px, cy0 - search_px,
               w - 1 - cx0 - search_px, h - 1 - cy0 - search_px)
    if r_px < 8:
        raise NoCenterError("centroid lies too close to the sensor edge")
    rows, cols = np.indices(data.shape)
    mask = np.hypot(cols - cx0, rows - cy0) <= r_px
    sub, c_sub, r_sub = data[mask], cols[mask].astype(float), rows[mask].astype(float)

    def search(xc, yc, half, step):
        offsets = np.arange(-half, half + step / 2, step)
        best = None
        for dy in offsets:
            for dx in offsets:
                score = _nonuniformity(sub, c_sub, r_sub, xc + dx, yc + dy)
                if best is None or score < best[0]:
                    best = (score, xc + dx, yc + dy)
        return best

    coarse = search(cx0, cy0, np.floor(search_px), 1.0)
    fine = search(coarse[1], coarse[2], min(1.0, search_px), step_px)
    if coarse[0] == 0 and fine[0] == 0:
        raise NoCenterError("pattern is azimuthally uniform about every candidate centre")
    return float(fine[1]), float(fine[2])


def radial_profile(img, center, bin_width=None):
    """Bin pixels by distance from ``center`` (pixel coordinates) and average each bin.

    ``bin_width`` is in metres and defaults to one pixel pitch.
    """
    cam = img.camera
    if bin_width is None:
        bin_width = cam.pixel_pitch
    if bin_width < cam.pixel_pitch / 2:
        raise DomainError("bin width must be at least half a pixel pitch")
    cx, cy = (float(c) for c in center)
    h, w = img.intensities.shape
    if not (0 <= cx <= w - 1 and 0 <= cy <= h - 1):
        raise DomainError(f"centre ({cx:.2f}, {cy:.2f}) px lies outside the image")
    rows, cols = np.indices(img.intensities.shape)
    r = np.hypot(cols - cx, rows - cy) * cam.pixel_pitch
    idx = np.floor(r / bin_width).astype(int).ravel()
    counts = np.bincount(idx)
    sums = np.bincount(idx, weights=img.intensities.ravel())
    mean = np.zeros_like(sums)
    np.divide(sums, counts, out=mean, where=counts > 0)
    radii = (np.arange(counts.size) + 0.5) * bin_width
    return RadialProfile(
        radii=radii,
        mean_intensity=mean,
        counts_per_bin=counts,
        center_used=(cx * cam.pixel_pitch, cy * cam.pixel_pitch),
        center_px=(cx, cy),
        bin_width=bin_width,
    )


def _gaussian_envelope(rho, amplitude, radius):
    return amplitude * np.exp(-2 * rho**2 / radius**2)


def _smooth(values, half_width, mirror=True):
    if half_width <= 0:
        return values.copy()
    k = 2 * half_width + 1
    # mirror about rho = 0 where a radial profile is even
    head = values[half_width:0:-1] if mirror else np.repeat(values[0], half_width)
    padded = np.concatenate([head, values, np.repeat(values[-1], half_width)])
    return np.convolve(padded, np.ones(k) / k, mode="valid")


def _sign_changes(values):
    slope = np.sign(np.diff(values))
    idx = np.nonzero(slope[:-1] * slope[1:] < 0)[0] + 1
    return idx, slope[idx - 1] > 0


def _fit_envelope_radius(rho, values, seed, smooth_half_width):
    """Refine the envelope 1/e**2 radius starting from ``seed``.

    After dividing by the seed Gaussian, the mean of each adjacent
    max/min pair estimates the residual envelope at the pair's midpoint.
    A residual Gaussian is a straight line in ``log(level)`` versus
    ``rho**2``; its slope corrects the seed.
    """
    m = _smooth(values / _gaussian_envelope(rho, 1.0, seed), smooth_half_width)
    idx, _ = _sign_changes(m)
    if idx.size < 3:
        return seed
    levels = 0.5 * (m[idx[:-1]] + m[idx[1:]])
    u = (0.5 * (rho[idx[:-1]] + rho[idx[1:]])) ** 2
    if np.any(levels <= 0) or np.ptp(u) == 0:
        return seed
    slope = np.polyfit(u, np.log(levels), 1)[0]
    inv_r2 = 1 / seed**2 - slope / 2
    return float(1 / np.sqrt(inv_r2)) if inv_r2 > 0 else seed


def _drop_weak_pairs(heights, prominence, neighbourhood):
    """Mask of extrema surviving removal of weak adjacent max/min pairs.

    The weakest swing between neighbouring extrema is removed (both ends)
    while it is below ``prominence`` times the largest swing within
    ``neighbourhood`` swings of it. Removing pairs preserves alternation.
    """
    alive = list(range(heights.size))
    while len(alive) >= 2:
        h = heights[alive]
        swings = np.abs(np.diff(h))
        ratios = np.empty_like(swings)
        for j in range(swings.size):
            lo, hi = max(0, j - neighbourhood), min(swings.size, j + neighbourhood + 1)
            local = swings[lo:hi].max()
            ratios[j] = swings[j] / local if local > 0 else 1.0
        j = int(np.argmin(ratios))
        if ratios[j] >= prominence:
            break
        del alive[j:j + 2]
    keep = np.zeros(heights.size, dtype=bool)
    keep[alive] = True
    return keep


def _first_order(kind, phi0):
    # smallest order of this kind lying beyond the central phase phi0 / 2 pi
    start = phi0 / (2 * np.pi)
    if kind == "max":
        return float(np.floor(start) + 1)
    return float(np.floor(start - 0.5) + 1.5)


def find_extrema(profile, envelope_radius, phi0=0.0, smooth_half_width=2, prominence=0.05,
                 max_radius=None, neighbourhood=3):
    """Locate ring maxima and minima in a radial profile and number them.

    The profile is divided by a fitted Gaussian envelope, smoothed by a
    moving average of ``2 * smooth_half_width + 1`` bins and scanned for
    sign changes of its slope. An extremum is kept if its swing to the
    adjacent extrema is at least ``prominence`` times the largest swing
    among its ``neighbourhood`` neighbours on either side. Positions are
    refined by a three-point parabola.

    Orders count outward in steps of one half, starting from the
    smallest order of the innermost extremum's kind beyond ``phi0 / 2 pi``
    (maxima carry integer orders). Orders are assumed to grow with
    radius, i.e. a positive propagation distance.

    Parameters
    ----------
    profile : RadialProfile
    envelope_radius : float
        Seed for the envelope fit (m).
    phi0 : float
        Expected fringe phase offset (rad).
    max_radius : float, optional
        Outer limit of the analysis; defaults to ``envelope_radius``.

    Returns
    -------
    ExtremaSet
    """
    if max_radius is None:
        max_radius = envelope_radius
    use = profile.valid & (profile.radii <= max_radius)
    rho = profile.radii[use]
    values = profile.mean_intensity[use]
    if rho.size < 2 * smooth_half_width + 5:
        raise InsufficientFringesError("profile is too short to contain a fringe period")
    peak = float(values.max())
    if not peak > 0:
        raise InsufficientFringesError("profile carries no intensity")
    radius = _fit_envelope_radius(rho, values, envelope_radius, smooth_half_width)
    # fringes are periodic in u = rho**2; resample there before smoothing
    du = rho[-1] ** 2 / (rho.size - 1)
    u = du * np.arange(rho.size)
    normalized = np.interp(u, rho**2, values / _gaussian_envelope(rho, 1.0, radius))
    modulation = _smooth(normalized, smooth_half_width, mirror=False)

    change, rising = _sign_changes(modulation)
    if change.size == 0:
        raise InsufficientFringesError("no extrema found in profile")
    kinds = np.where(rising, "max", "min")
    keep = _drop_weak_pairs(modulation[change], prominence, neighbourhood)
    change, kinds = change[keep], kinds[keep]
    if change.size < 3:
        raise InsufficientFringesError(f"found {change.size} extrema, need at least 3")
    if np.any(kinds[1:] == kinds[:-1]):
        raise AmbiguousExtremaError("maxima and minima do not alternate after thresholding")

    entries = []
    order = _first_order(kinds[0], phi0)
    for k, kind in zip(change, kinds):
        y0, y1, y2 = modulation[k - 1], modulation[k], modulation[k + 1]
        denom = y0 - 2 * y1 + y2
        offset = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        u_k = u[k] + float(np.clip(offset, -0.5, 0.5)) * du
        r_k = float(np.sqrt(u_k))
        # half a u-sample, expressed as a radius uncertainty
        entries.append(Extremum(order, r_k, str(kind), du / (4 * r_k)))
        order += 0.5
    return ExtremaSet(entries)


def fit_parabola(ex):
    """Weighted linear least squares of order ``n`` against ``rho**2``.

    Radius uncertainties are propagated to ``rho**2`` and through the
    slope to order units. The covariance is scaled up by the reduced
    chi-square when the scatter exceeds the stated uncertainties.
    """
    if len(ex) < 3:
        raise FitError(f"need at least 3 extrema for a parabolic fit, got {len(ex)}")
    n = ex.orders
    rho2 = ex.radii**2
    if np.ptp(rho2) == 0:
        raise FitError("all extrema share one radius")
    design = np.column_stack([rho2, np.ones_like(rho2)])
    a0 = np.linalg.lstsq(design, n, rcond=None)[0][0]
    sigma_rho2 = 2 * ex.radii * ex.uncertainties
    sigma_n = np.abs(a0) * sigma_rho2
    weighted = np.all(sigma_n > 0)
    weights = 1 / sigma_n**2 if weighted else np.ones_like(n)
    sw = np.sqrt(weights)
    coef, *_ = np.linalg.lstsq(design * sw[:, None], n * sw, rcond=None)
    resid = n - design @ coef
    dof = n.size - 2
    normal = design.T @ (design * weights[:, None])
    cov = np.linalg.inv(normal)
    chi2_red = float(np.sum(weights * resid**2) / dof)
    cov = cov * (max(1.0, chi2_red) if weighted else chi2_red)
    return ParabolicFit(
        a=float(coef[0]),
        phi_prime=float(coef[1]),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        covariance=cov,
        n_points=int(n.size),
    )


def fit_equivalent_wavelength(pairs, f_c):
    """Regress parabola coefficients on propagation distance and convert the slope.

    Parameters
    ----------
    pairs : sequence of (d, ParabolicFit)
    f_c : float
        Camera lens focal length (m).

    Returns
    -------
    WavelengthEstimate
        ``lambda_eq = 1 / (2 f_c**2 slope)``. The intercept is free and
        reported; a value far from zero signals a biased extraction.
    """
    pairs = list(pairs)
    d = np.array([p[0] for p in pairs], dtype=float)
    a = np.array([p[1].a for p in pairs], dtype=float)
    sig = np.array([p[1].sigma_a for p in pairs], dtype=float)
    if np.unique(d).size < 2:
        raise FitError("need at least two distinct propagation distances")
    weighted = bool(np.all(np.isfinite(sig)) and np.all(sig > 0))
    weights = 1 / sig**2 if weighted else np.ones_like(a)
    design = np.column_stack([d, np.ones_like(d)])
    sw = np.sqrt(weights)
    coef, *_ = np.linalg.lstsq(design * sw[:, None], a * sw, rcond=None)
    slope, intercept = (float(c) for c in coef)
    resid = a - design @ coef
    dof = d.size - 2
    cov = np.linalg.inv(design.T @ (design * weights[:, None]))
    if dof > 0:
        chi2_red = float(np.sum(weights * resid**2) / dof)
        cov = cov * (max(1.0, chi2_red) if weighted else chi2_red)
    elif not weighted:
        cov = np.zeros_like(cov)
    if not slope > 0:
        raise UnphysicalSlopeError(f"slope of a(d) is {slope:.4g}; must be positive")
    slope_sigma = float(np.sqrt(cov[0, 0]))
    lam = 1 / (2 * f_c**2 * slope)
    return WavelengthEstimate(
        lambda_eq=lam,
        sigma=lam * slope_sigma / slope,
        slope=slope,
        slope_sigma=slope_sigma,
        intercept=intercept,
        intercept_sigma=float(np.sqrt(cov[1, 1])),
        n_points=int(d.size),
    )


def analyze_image(img, phi0=None, bin_width=None, smooth_half_width=2, prominence=0.05,
                  search_px=3.0, step_px=0.1, max_radius=None):
    """Run the whole extraction chain on one image.

    ``phi0`` defaults to the image metadata (``phi0_rad``), else zero.
    """
    if phi0 is None:
        phi0 = float(img.metadata.get("phi0_rad") or 0.0)
    center = estimate_center(img, search_px=search_px, step_px=step_px)
    profile = radial_profile(img, center, bin_width)
    extrema = find_extrema(profile, img.camera.envelope_radius, phi0=phi0,
                           smooth_half_width=smooth_half_width, prominence=prominence,
                           max_radius=max_radius)
    return ImageAnalysis(center, profile, extrema, fit_parabola(extrema))


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _num(x):
    return repr(float(x))


def _mm(d):
    # metres -> mm without exposing binary noise such as 13.000000000000002
    return repr(round(float(d) * 1e3, 9))


def write_extrema_csv(path, items):
    """``items`` is a sequence of ``(d, ExtremaSet)`` with ``d`` in metres."""
    rows = []
    for d, ex in items:
        for e in ex.entries:
            rows.append([_mm(d), _num(e.order), e.kind, _num(e.radius), _num(e.uncertainty)])
    atomic_write_text(path, _csv_text(EXTREMA_COLUMNS, rows))


def write_fits_csv(path, items):
    """``items`` is a sequence of ``(d, ParabolicFit)`` with ``d`` in metres."""
    rows = [[_mm(d), _num(f.a), _num(f.phi_prime), _num(f.residual_rms)] for d, f in items]
    atomic_write_text(path, _csv_text(FIT_COLUMNS, rows))


def write_estimate_csv(path, est):
    rows = [[_num(est.lambda_eq), _num(est.sigma), _num(est.slope), _num(est.intercept)]]
    atomic_write_text(path, _csv_text(ESTIMATE_COLUMNS, rows))
