"""Steady-state Gaussian fluctuations and the large-N spin-squeezing parameter.

Pipeline: rotate to the frame whose z-axis follows the mean-field fixed
point, map the transverse fluctuations onto a single bosonic mode, keep the
quadratic part of the generator, and solve the linear steady-state equations
for the second moments <a^2> and <a^+ a>.  The squeezing parameter then
follows from the transverse variances,

    xi^2 = 1 + 2 <a^+ a> - 2 |<a^2>|,

which is independent of N (the large-N limit).  The quadratic Hamiltonian is
H = b1 a^2 + b1* a^+2 + b2 a^+ a with

    b1 = e^{-2 i phi}/4 [ Vx (cos th cos ph + i sin ph)^2
                          - Vy (cos ph + i cos th sin ph)^2 ]
    b2 = 1/8 [ Vx + Vy + 3 (Vx + Vy) cos 2th - 8 W sin th cos ph
               + 6 (Vy - Vx) sin^2 th cos 2ph ]

and the dissipative part follows from expressing the collective lowering
operator in the rotated frame.  This machinery is specific to collective
decay; the independent-decay down-polarized result is exposed only through
the closed form ``xi2_closed_form("pm", ...)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import CriticalDivergenceError, InvalidParameterError
from .meanfield import general_fixed_point
from .params import Model, ModelParams, critical_drive

_COLLECTIVE = (Model.COLLECTIVE_XY, Model.DRIVEN, Model.GENERAL)


@dataclass(frozen=True)
class SteadyAngles:
    """Spherical angles of the mean-field fixed point; theta in [0, pi]."""

    theta: float
    phi: float


@dataclass(frozen=True)
class QuadraticCoeffs:
    b1: complex
    b2: float


@dataclass(frozen=True)
class SecondMoments:
    a_sq: complex  # <a^2>; <a^+2> is its conjugate
    n_occ: float  # <a^+ a>


def _require_collective(params: ModelParams, what: str):
    if params.model not in _COLLECTIVE:
        raise InvalidParameterError(f"{what} requires a collective-decay model")


def steady_angles(params: ModelParams) -> SteadyAngles:
    """Angles (theta, phi) with (sin th cos ph, sin th sin ph, cos th) equal
    to the mean-field fixed point.  At the down-polarized pole (theta = pi)
    the azimuth is fixed to phi = 0 by convention."""
    _require_collective(params, "steady_angles")
    point = general_fixed_point(params)  # raises NoFixedPointError past Omega_c
    theta = math.acos(max(-1.0, min(1.0, point.z)))
    if math.hypot(point.x, point.y) < 1e-14:
        return SteadyAngles(math.pi if point.z < 0 else 0.0, 0.0)
    return SteadyAngles(theta, math.atan2(point.y, point.x))


def quad_coeffs(params: ModelParams, angles: SteadyAngles) -> QuadraticCoeffs:
    """Coefficients of the quadratic bosonic Hamiltonian in the rotated frame."""
    _require_collective(params, "quad_coeffs")
    th, ph = angles.theta, angles.phi
    vx, vy, om = params.vx, params.vy, params.omega
    b1 = (cmath.exp(-2j * ph) / 4.0) * (
        vx * (math.cos(th) * math.cos(ph) + 1j * math.sin(ph)) ** 2
        - vy * (math.cos(ph) + 1j * math.cos(th) * math.sin(ph)) ** 2
    )
    b2 = 0.125 * (
        vx
        + vy
        + 3.0 * (vx + vy) * math.cos(2.0 * th)
        - 8.0 * om * math.sin(th) * math.cos(ph)
        + 6.0 * (-vx + vy) * math.sin(th) ** 2 * math.cos(2.0 * ph)
    )
    return QuadraticCoeffs(b1, b2)


def moment_equations(params: ModelParams, angles: SteadyAngles):
    """Linear system A x = rhs for x = (Re<a^2>, Im<a^2>, <a^+ a>).

    Setting the moment equations of motion to zero and splitting into real
    and imaginary parts gives, with b1 = p + iq, G = gamma_c cos(theta),
    F = (gamma_c/4) sin^2(theta)::

        [  G    2 b2  -4q ] [u]   [ 2q - F cos 2phi      ]
        [ -2b2   G    -4p ] [v] = [ 2p - F sin 2phi      ]
        [ -4q  -4p     G  ] [n]   [ -gamma_c cos^4(th/2) ]
    """
    coeffs = quad_coeffs(params, angles)
    p, q = coeffs.b1.real, coeffs.b1.imag
    b2 = coeffs.b2
    gc = params.gamma_c
    th, ph = angles.theta, angles.phi
    g_damp = gc * math.cos(th)
    f_src = 0.25 * gc * math.sin(th) ** 2
    a = np.array(
        [
            [g_damp, 2.0 * b2, -4.0 * q],
            [-2.0 * b2, g_damp, -4.0 * p],
            [-4.0 * q, -4.0 * p, g_damp],
        ]
    )
    rhs = np.array(
        [
            2.0 * q - f_src * math.cos(2.0 * ph),
            2.0 * p - f_src * math.sin(2.0 * ph),
            -gc * math.cos(0.5 * th) ** 4,
        ]
    )
    return a, rhs


COND_LIMIT = 1e12


def moment_steady_state(params: ModelParams) -> SecondMoments:
    """Steady second moments of the fluctuation mode.

    Raises :class:`CriticalDivergenceError` when the linear system is
    effectively singular (condition number above 1e12) or produces an
    unphysical negative occupation; both signal the critical point, where
    the fluctuations diverge.
    """
    angles = steady_angles(params)
    a, rhs = moment_equations(params, angles)
    if np.linalg.cond(a) > COND_LIMIT:
        raise CriticalDivergenceError(
            "moment system is singular: fluctuations diverge at the critical point"
        )
    u, v, n = np.linalg.solve(a, rhs)
    if n < -1e-9:
        raise CriticalDivergenceError(f"negative occupation {n}: past criticality")
    return SecondMoments(complex(u, v), float(n))


def xi2_from_moments(moments: SecondMoments) -> float:
    return 1.0 + 2.0 * moments.n_occ - 2.0 * abs(moments.a_sq)


def xi2_analytic(params: ModelParams) -> float:
    """Large-N squeezing parameter from the solved Gaussian moments."""
    return xi2_from_moments(moment_steady_state(params))


CLOSED_FORM_VARIANTS = ("pm", "driven", "driven_vx0", "driven_vx_inf")


def xi2_closed_form(variant: str, params: ModelParams) -> float:
    """Printed closed forms of the squeezing parameter.

    ``pm``            gamma / (gamma + 2|V|) for the XY models in the
                      down-polarized phase, |V| <= gamma/2 (identical for
                      independent and collective decay).
    ``driven``        the full driven-model expression for Omega < gamma_c/2.
    ``driven_vx0``    sqrt(1 - 4 Omega^2/gamma_c^2), the Vx = 0 limit.
    ``driven_vx_inf`` half of the Vx = 0 form, the Vx -> infinity limit.
    """
    if variant not in CLOSED_FORM_VARIANTS:
        raise InvalidParameterError(f"unknown closed-form variant {variant!r}")
    if variant == "pm":
        if params.model not in (Model.INDEPENDENT_XY, Model.COLLECTIVE_XY):
            raise InvalidParameterError("pm closed form applies to the XY models")
        g = params.gamma
        v = abs(params.v)
        if v > g / 2.0:
            raise InvalidParameterError(
                f"|V|={v} outside the down-polarized region |V| <= gamma/2"
            )
        return g / (g + 2.0 * v)
    gc, om, vx = params.gamma_c, params.omega, params.vx
    if params.model not in (Model.DRIVEN, Model.GENERAL) or params.vy != 0.0:
        raise InvalidParameterError("driven closed forms require the driven model")
    if abs(om) >= gc / 2.0:
        raise InvalidParameterError(f"Omega={om} outside the region Omega < gamma_c/2")
    w = math.sqrt(1.0 - 4.0 * om * om / (gc * gc))
    if variant == "driven_vx0":
        return w
    if variant == "driven_vx_inf":
        return 0.5 * w
    num = (
        gc * gc
        + vx * vx
        - 2.0 * om * om
        - 2.0 * math.sqrt(gc * gc * vx * vx / 4.0 + vx**4 / 4.0 + om**4)
    )
    return num / (gc * gc * w)
