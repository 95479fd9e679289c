"""Simulation and analysis of signal fringes controlled through an undetected idler beam.

Two down-conversion crystals share their idler path; the detected signal
beams interfere only to the extent the idler modes overlap. Manipulating
the idler (phase offset, tilt, defocus, attenuation) therefore shapes the
signal interference pattern on a camera in the Fourier plane. Defocusing
the idler by ``d`` produces rings whose squared radii are spaced by
``2 f_c**2 lambda_eq / d`` with the equivalent wavelength
``lambda_eq = lambda_s**2 / lambda_i``.

Modules
-------
optics
    Configuration, angle relations, 1D defocus kernels.
biphoton
    Joint amplitudes and the per-mode interference they produce.
imaging
    Camera frames and their PGM + sidecar file format.
analysis
    Ring extraction and the equivalent-wavelength regression.
config, cli
    Flat config files and the ``inducedfringes`` command.
"""

from .analysis import (
    ExtremaSet,
    Extremum,
    ParabolicFit,
    RadialProfile,
    WavelengthEstimate,
    analyze_image,
    estimate_center,
    find_extrema,
    fit_equivalent_wavelength,
    fit_parabola,
    radial_profile,
)
from .biphoton import (
    IdlerTransfer,
    JointAmplitude,
    ModeIntensityResult,
    MomentumWindow,
    equivalent_wavelength,
    make_correlated_amplitude,
    make_custom_amplitude,
    make_separable_amplitude,
    matched_separable_amplitude,
    predicted_extrema_radii,
    signal_mode_grid,
    signal_mode_intensity,
    transfer_phase,
    visibility_factor,
)
from .config import RunConfig, parse_config
from .exceptions import *  # noqa: F401,F403
from .imaging import CameraModel, FringeImage, add_shot_noise, phase_scan, read_image, render_image, write_image
from .optics import (
    ComplexField1D,
    OpticalConfig,
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

__version__ = "0.1.0"
