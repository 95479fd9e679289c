"""Closed-form references, written without importing the package.

The correlated Gaussian joint amplitude gives ``|C|^2 = exp(-w^2 |q_s + q_i|^2 / 2)``,
a Gaussian in ``q_i`` centred on ``-q_s`` with variance ``1/w^2`` per axis.
Weighting a quadratic idler phase ``alpha |q_i|^2`` against it is a complex
Gaussian integral that factors by axis:

    int exp(-A x^2 + B x) dx = sqrt(pi / A) exp(B^2 / (4 A)),   Re A > 0.
"""

import cmath
import math

TWO_PI = 2 * math.pi


def defocus_alpha(d, lambda_i):
    """Coefficient of ``|q_i|^2`` in the free-space phase ``(2 pi / lambda_i) d theta^2 / 2``."""
    return d * lambda_i / (4 * math.pi)


def _axis_integral(q_s, pump_waist, alpha):
    var = 1.0 / pump_waist**2
    mu = -q_s
    a = 1 / (2 * var) - 1j * alpha
    b = mu / var
    z = cmath.sqrt(math.pi / a) * cmath.exp(b * b / (4 * a) - mu * mu / (2 * var))
    w = math.sqrt(2 * math.pi * var)
    return z, w


def correlated_defocus_mode(q_s, pump_waist, d, lambda_i):
    """Visibility and fringe phase (at ``phi0 = 0``, ``t = 1``) of signal mode ``q_s = (qx, qy)``."""
    alpha = defocus_alpha(d, lambda_i)
    zx, wx = _axis_integral(q_s[0], pump_waist, alpha)
    zy, wy = _axis_integral(q_s[1], pump_waist, alpha)
    z = zx * zy
    return abs(z) / (wx * wy), cmath.phase(z)


def effective_ring_coefficient(d, pump_waist, f_c, lambda_s, lambda_i):
    """Ring coefficient ``a`` (orders per m^2 on the camera) including finite-waist shrinkage.

    Completing the square in the oracle integral gives a fringe phase
    ``alpha |q_s|^2 / (1 + 4 alpha^2 / w^4)`` plus a constant.
    """
    alpha = defocus_alpha(d, lambda_i)
    k_s = TWO_PI / lambda_s
    shrink = 1 / (1 + 4 * alpha**2 / pump_waist**4)
    return alpha * shrink * (k_s / f_c) ** 2 / TWO_PI


def gaussian_beam_radius(waist, z, k):
    """1/e^2 intensity radius of a Gaussian beam after distance ``z``."""
    z_r = k * waist**2 / 2
    return waist * math.sqrt(1 + (z / z_r) ** 2)


def ring_radius(n, d, f_c, lambda_s, lambda_i, phase=0.0):
    """Camera radius where ``d rho^2 / (2 f_c^2) = (n - phase / 2 pi) lambda_s^2 / lambda_i``."""
    lam = lambda_s**2 / lambda_i
    return math.sqrt((n - phase / TWO_PI) * lam * 2 * f_c**2 / d)
