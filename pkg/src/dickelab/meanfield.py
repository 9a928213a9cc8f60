"""Mean-field Bloch dynamics: flows, fixed points, stability, conserved quantity.

The factorized equations of motion for the normalized Bloch vector
(X, Y, Z) = (<Jx>, <Jy>, <Jz>)/j are, per model,

INDEPENDENT_XY::

    dX = -V Y Z - gamma_i/2 X
    dY = -V X Z - gamma_i/2 Y
    dZ = 2 V X Y - gamma_i (Z + 1)

GENERAL (collective decay; COLLECTIVE_XY and DRIVEN are special cases)::

    dX = Vy Y Z + gamma_c/2 X Z
    dY = -Vx X Z - Omega Z + gamma_c/2 Y Z
    dZ = (Vx - Vy) X Y + Omega Y - gamma_c/2 (1 - Z^2)

The collective family conserves X^2 + Y^2 + Z^2.  Conservation is *tested*,
never enforced: no projection back onto the sphere is applied, so integrator
defects remain visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    DegenerateInputError,
    InvalidParameterError,
    NoFixedPointError,
    StiffnessError,
)
from .params import Model, ModelParams, critical_drive


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float


@dataclass
class Trajectory:
    """Time series of Bloch vectors with integrator metadata."""

    times: np.ndarray  # shape (n,), strictly increasing, units 1/gamma
    states: np.ndarray  # shape (n, 3)
    params: ModelParams
    rtol: float
    atol: float
    method: str = "DOP853"

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise InvalidParameterError("times and states must have equal length")


def _collective_vs(params: ModelParams):
    """(vx, vy, omega) for the collective-decay family."""
    return params.vx, params.vy, params.omega


def rhs(params: ModelParams, state) -> np.ndarray:
    """Right-hand side of the mean-field flow at ``state`` = (X, Y, Z)."""
    x, y, z = state
    if params.model is Model.INDEPENDENT_XY:
        v, gi = params.v, params.gamma_i
        return np.array(
            [
                -v * y * z - 0.5 * gi * x,
                -v * x * z - 0.5 * gi * y,
                2.0 * v * x * y - gi * (z + 1.0),
            ]
        )
    vx, vy, om = _collective_vs(params)
    gc = params.gamma_c
    return np.array(
        [
            vy * y * z + 0.5 * gc * x * z,
            -vx * x * z - om * z + 0.5 * gc * y * z,
            (vx - vy) * x * y + om * y - 0.5 * gc * (1.0 - z * z),
        ]
    )


def jacobian(params: ModelParams, state) -> np.ndarray:
    x, y, z = state
    if params.model is Model.INDEPENDENT_XY:
        v, gi = params.v, params.gamma_i
        return np.array(
            [
                [-0.5 * gi, -v * z, -v * y],
                [-v * z, -0.5 * gi, -v * x],
                [2.0 * v * y, 2.0 * v * x, -gi],
            ]
        )
    vx, vy, om = _collective_vs(params)
    gc = params.gamma_c
    return np.array(
        [
            [0.5 * gc * z, vy * z, vy * y + 0.5 * gc * x],
            [-vx * z, 0.5 * gc * z, -vx * x - om + 0.5 * gc * y],
            [(vx - vy) * y, (vx - vy) * x + om, gc * z],
        ]
    )


def integrate(
    params: ModelParams,
    init,
    t_end: float,
    tol: float = 1e-10,
    n_points: int = 2001,
    method: str = "DOP853",
) -> Trajectory:
    """Adaptive integration of the mean-field flow.

    ``tol`` sets the relative tolerance (absolute tolerance is tol/100,
    giving the default pair 1e-10 / 1e-12) and must lie in [1e-13, 1e-6].
    """
    if not (1e-13 <= tol <= 1e-6):
        raise InvalidParameterError(f"tol={tol} outside [1e-13, 1e-6]")
    if t_end <= 0:
        raise InvalidParameterError("t_end must be positive")
    init = np.asarray(init, dtype=float)
    if init.shape != (3,) or not np.all(np.isfinite(init)):
        raise InvalidParameterError("initial state must be a finite 3-vector")
    t_eval = np.linspace(0.0, t_end, n_points)
    sol = solve_ivp(
        lambda t, s: rhs(params, s),
        (0.0, t_end),
        init,
        method=method,
        rtol=tol,
        atol=tol * 1e-2,
        t_eval=t_eval,
        dense_output=False,
    )
    if not sol.success:
        raise StiffnessError(
            f"integration failed at t={sol.t[-1] if len(sol.t) else 0.0}: {sol.message}",
            t_reached=sol.t[-1] if len(sol.t) else 0.0,
        )
    return Trajectory(sol.t, sol.y.T.copy(), params, tol, tol * 1e-2, method)


# ---------------------------------------------------------------------------
# Fixed points and stability
# ---------------------------------------------------------------------------

CLASSIFY_TOL = 1e-9


@dataclass
class FixedPointReport:
    point: BlochVector
    jacobian_eigenvalues: np.ndarray
    classification: str  # stable | unstable | center | marginal


def _classify(eigs: np.ndarray) -> str:
    re = eigs.real
    if np.any(re > CLASSIFY_TOL):
        return "unstable"
    if np.all(re < -CLASSIFY_TOL):
        return "stable"
    mags = np.abs(eigs)
    for lam, mag in zip(eigs, mags):
        if mag > 0 and abs(lam.real) < CLASSIFY_TOL * mag and abs(lam.imag) > 0:
            return "center"
    return "marginal"


def _report(params: ModelParams, point) -> FixedPointReport:
    eigs = np.linalg.eigvals(jacobian(params, point))
    return FixedPointReport(BlochVector(*point), eigs, _classify(eigs))


def general_fixed_point(params: ModelParams) -> BlochVector:
    """Stable-branch fixed point of the driven collective family.

    Requires 0 <= Omega < critical drive; at Omega = 0 this reduces to the
    down-polarized point.
    """
    om_c = critical_drive(params)
    om = params.omega
    gc = params.gamma_c
    if om >= om_c:
        raise NoFixedPointError(
            f"no stable fixed point: Omega={om} >= Omega_c={om_c}"
        )
    denom = gc * gc + 4.0 * params.vx * params.vy
    x = -4.0 * params.vy * om / denom
    y = 2.0 * gc * om / denom
    rad = denom * denom - 4.0 * om * om * (gc * gc + 4.0 * params.vy * params.vy)
    z = -math.sqrt(rad) / denom
    return BlochVector(x, y, z)


def fixed_points(params: ModelParams) -> list[FixedPointReport]:
    """Enumerate the model's analytic fixed points with stability reports.

    INDEPENDENT_XY: down-polarized point always, plus the symmetry-broken
    pair for |V| > gamma_i/2.  COLLECTIVE_XY: down-polarized point always,
    plus four equatorial center points for |V| > gamma_c/2.  DRIVEN/GENERAL:
    the stable branch for Omega < Omega_c (empty above it, where the flow
    has no fixed points on the sphere).  Exactly at |V| = gamma/2 only the
    marginal down-polarized point is reported.
    """
    pm = np.array([0.0, 0.0, -1.0])
    if params.model is Model.INDEPENDENT_XY:
        out = [_report(params, pm)]
        v, gi = params.v, params.gamma_i
        if abs(v) > gi / 2.0:
            r = math.sqrt(gi * (2.0 * abs(v) - gi)) / (2.0 * v)
            z = -gi / (2.0 * abs(v))
            sgn = 1.0 if v >= 0 else -1.0
            out.append(_report(params, (r, sgn * r, z)))
            out.append(_report(params, (-r, -sgn * r, z)))
        return out
    if params.model is Model.COLLECTIVE_XY:
        out = [_report(params, pm)]
        v, gc = params.v, params.gamma_c
        if abs(v) > gc / 2.0:
            c = gc / (4.0 * v)
            a = math.sqrt(0.5 * (1.0 + math.sqrt(1.0 - 4.0 * c * c)))
            b = c / a
            for px, py in ((a, b), (b, a), (-a, -b), (-b, -a)):
                out.append(_report(params, (px, py, 0.0)))
        return out
    # driven / general
    try:
        point = general_fixed_point(params)
    except NoFixedPointError:
        return []
    return [_report(params, point)]


def critical_point(params: ModelParams) -> float:
    """Phase-transition threshold: critical |V| for the XY models (gamma/2),
    critical drive Omega_c for the driven family."""
    if params.model in (Model.INDEPENDENT_XY, Model.COLLECTIVE_XY):
        return params.gamma / 2.0
    return critical_drive(params)


# ---------------------------------------------------------------------------
# Oscillatory-phase diagnostics
# ---------------------------------------------------------------------------


def constant_of_motion(params: ModelParams, state) -> tuple[float, str]:
    """Conserved quantity of the collective XY flow in log form.

    Returns ``(2V/gc + 1) log|X+Y| + (2V/gc - 1) log|X-Y|`` together with the
    quadrant tag of (X+Y, X-Y), which is itself invariant along an orbit.
    States on the lines X = +-Y are degenerate (the constant is 0 or
    divergent) and raise :class:`DegenerateInputError`.
    """
    if params.model is not Model.COLLECTIVE_XY:
        raise InvalidParameterError("constant of motion applies to COLLECTIVE_XY")
    x, y = state[0], state[1]
    u, w = x + y, x - y
    if abs(u) < 1e-14 or abs(w) < 1e-14:
        raise DegenerateInputError("state lies on X = +-Y")
    k = 2.0 * params.v / params.gamma_c
    value = (k + 1.0) * math.log(abs(u)) + (k - 1.0) * math.log(abs(w))
    tag = ("+" if u > 0 else "-") + ("+" if w > 0 else "-")
    return value, tag


def time_average(traj: Trajectory, discard: float = 0.5) -> BlochVector:
    """Trapezoidal time average of (X, Y, Z) after discarding the initial
    fraction ``discard`` of the time span."""
    if not (0.0 <= discard < 1.0):
        raise InvalidParameterError("discard fraction must be in [0, 1)")
    t = traj.times
    t0 = t[0] + discard * (t[-1] - t[0])
    mask = t >= t0
    if mask.sum() < 2:
        raise InvalidParameterError("averaging window is empty")
    tw = t[mask]
    sw = traj.states[mask]
    span = tw[-1] - tw[0]
    if span <= 0:
        raise InvalidParameterError("averaging window is empty")
    avg = np.trapezoid(sw, tw, axis=0) / span
    return BlochVector(*avg)


def orbit_period(traj: Trajectory, discard: float = 0.5) -> float | None:
    """Period of a periodic orbit from upward crossings of Z through its mean.

    Returns None when fewer than two crossings are found.  The oscillation
    frequency depends on the orbit (initial condition), so the period is
    measured, not predicted.
    """
    t = traj.times
    mask = t >= t[0] + discard * (t[-1] - t[0])
    tw = t[mask]
    z = traj.states[mask, 2]
    zm = z.mean()
    crossings = []
    for i in range(len(z) - 1):
        if z[i] < zm <= z[i + 1]:
            frac = (zm - z[i]) / (z[i + 1] - z[i])
            crossings.append(tw[i] + frac * (tw[i + 1] - tw[i]))
    if len(crossings) < 2:
        return None
    return float(np.mean(np.diff(crossings)))


@dataclass
class RelaxationReport:
    eigenvalue: float  # closed-form slow eigenvalue
    timescale: float  # 1/|eigenvalue|
    jacobian_eigenvalues: np.ndarray  # numerical spectrum at the fixed point


def relaxation(params: ModelParams) -> RelaxationReport:
    """Relaxation rate toward the driven steady state.

    The slow eigenvalue is -(gamma_c/2) sqrt(1 - 4 Omega^2/gamma_c^2), giving
    the timescale tau = 2 / (gamma_c sqrt(1 - 4 Omega^2/gamma_c^2)); both are
    independent of Vx.  The full numerically diagonalized Jacobian spectrum is
    attached for cross-checking.
    """
    if params.model is not Model.DRIVEN:
        raise InvalidParameterError("relaxation analysis applies to DRIVEN")
    gc, om = params.gamma_c, params.omega
    if abs(om) >= gc / 2.0:
        raise NoFixedPointError(f"Omega={om} >= gamma_c/2: no stable fixed point")
    w = math.sqrt(1.0 - 4.0 * om * om / (gc * gc))
    lam = -0.5 * gc * w
    point = general_fixed_point(params)
    eigs = np.linalg.eigvals(jacobian(params, point))
    return RelaxationReport(lam, 2.0 / (gc * w), eigs)
