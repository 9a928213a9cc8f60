"""Time evolution and steady states of the exact generators.

Steady-state methods
--------------------
``march``
    Adaptive integration from the all-down state until ||L[rho]||_F drops
    below the target, with a hard time cap (50x the mean-field relaxation
    time when that is finite, else 500/gamma).  Works on every backend; slow
    near critical points, where the relaxation time diverges.
``nullspace``
    Sparse LU factorization of the shifted superoperator followed by inverse
    iteration from a deterministic start vector.  Limited by fill-in to
    moderate dimensions.
``driven-exact``
    Closed-form steady state for the drive-only model (Vx = Vy = 0).  Adding
    the constant i N Omega / gamma_c to the collective lowering operator
    reproduces the drive commutator exactly, so the generator is a pure
    dissipator in A = J- + i N Omega/gamma_c and its fixed point is
    rho ~ (A^+ A)^{-1}.  The tridiagonal A^+ A is inverted through
    log-domain minor recurrences, which stay finite at any N.
``truncated``
    For moments only: rotate the ladder so its top aligns with the
    mean-field fixed point, keep the top K levels, and null-space solve the
    small rotated generator.  The residual is certified against operators on
    a padded window, so the truncation is validated a posteriori; K doubles
    until the certified residual passes.

``steady_state(..., method="auto")`` picks driven-exact when applicable,
else nullspace within its size budget, else marching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import splu

from . import meanfield
from .errors import (
    InvalidParameterError,
    NonConvergenceError,
    SizeLimitError,
)
from .fluctuations import steady_angles
from .lindblad import (
    DensityMatrix,
    DickeBasis,
    Liouvillian,
    PermBasis,
    superoperator,
)
from .observables import SpinMoments
from .params import Model, ModelParams
from .spins import lowering_band

NULLSPACE_DEFAULT_MAX = 250_000  # vectorized dimension budget for sparse LU


@dataclass
class DMTrajectory:
    """Stored density-matrix trajectory with integrator metadata."""

    times: np.ndarray
    states: np.ndarray  # (n_times, *state_shape)
    basis: object
    params: ModelParams
    rtol: float
    atol: float
    method: str = "DOP853"

    def state(self, i: int) -> DensityMatrix:
        return DensityMatrix(self.basis, self.states[i])

    def __len__(self):
        return len(self.times)


def evolve(
    liou: Liouvillian,
    rho0: DensityMatrix,
    t_end: float,
    tol: float = 1e-9,
    n_store: int = 101,
    method: str = "DOP853",
) -> DMTrajectory:
    """Integrate d rho/dt = L[rho] and store ``n_store`` equally spaced states."""
    if type(rho0.basis) is not type(liou.basis) or rho0.basis != liou.basis:
        raise InvalidParameterError("state and generator bases do not match")
    if t_end <= 0:
        raise InvalidParameterError("t_end must be positive")
    y0 = liou.to_vec(rho0.data).astype(np.complex128)
    t_eval = np.linspace(0.0, t_end, n_store)
    sol = solve_ivp(
        lambda t, y: liou.apply_vec(y),
        (0.0, t_end),
        y0,
        method=method,
        rtol=tol,
        atol=tol * 1e-2,
        t_eval=t_eval,
    )
    if not sol.success:
        raise NonConvergenceError(
            f"evolution failed: {sol.message}",
            t_reached=sol.t[-1] if len(sol.t) else 0.0,
        )
    shape = (len(sol.t),) + (
        (liou.basis.n_elems,)
        if isinstance(liou.basis, PermBasis)
        else (liou.basis.dim, liou.basis.dim)
    )
    states = sol.y.T.reshape(shape)
    return DMTrajectory(sol.t, states, liou.basis, liou.params, tol, tol * 1e-2, method)


# ---------------------------------------------------------------------------
# Steady states
# ---------------------------------------------------------------------------


def relaxation_timescale(params: ModelParams) -> float | None:
    """1/|Re lambda_slow| at the stable fixed point, or None if none exists."""
    try:
        reports = meanfield.fixed_points(params)
    except InvalidParameterError:
        return None
    taus = []
    for rep in reports:
        if rep.classification == "stable":
            slowest = max(rep.jacobian_eigenvalues.real)
            if slowest < 0:
                taus.append(-1.0 / slowest)
    return max(taus) if taus else None


@dataclass
class SteadyStateResult:
    rho: DensityMatrix | None
    method: str
    residual: float
    converged: bool
    t_marched: float | None = None
    info: dict = field(default_factory=dict)


def _perm_weighted_residual(liou: Liouvillian, rho: DensityMatrix) -> float:
    """Frobenius norm of L[rho] with degeneracy weights for perm states."""
    out = liou.apply(rho.data)
    if not isinstance(liou.basis, PermBasis):
        return float(np.linalg.norm(out))
    total = 0.0
    for idx, (j2, deg) in enumerate(liou.basis.blocks):
        seg = out[liou.basis.block_slice(idx)]
        total += deg * float(np.vdot(seg, seg).real)
    return math.sqrt(total)


def _normalized(liou: Liouvillian, data: np.ndarray) -> DensityMatrix:
    rho = DensityMatrix(liou.basis, data).hermitized()
    rho.data /= rho.trace().real
    return rho


def driven_exact_rho(n_atoms: int, omega: float, gamma_c: float) -> np.ndarray:
    """Closed-form steady state of H = Omega Jx with collective decay.

    Adding the constant c = i N Omega/gamma_c to the lowering operator turns
    the full generator into a pure dissipator in A = J- + c, whose fixed
    point is rho ~ (A^+ A)^{-1} = X X^+ with X = A^{-1}.  A is bidiagonal, so
    X is explicitly separable, X[i, k] = u_i v_k for k >= i, giving

        rho[i, k] ~ u_i conj(u_k) W[max(i, k)],   W[j] = sum_{l >= j} |v_l|^2.

    Everything is evaluated in log space with only sums of positive terms
    (no cancellation), so the construction is stable at any N; normalized
    entries are bounded by one, so assembling the matrix cannot overflow.
    """
    if gamma_c <= 0:
        raise InvalidParameterError("gamma_c must be positive")
    dim = n_atoms + 1
    if omega == 0.0:
        rho = np.zeros((dim, dim), dtype=np.complex128)
        rho[0, 0] = 1.0
        return rho
    c = n_atoms * omega / gamma_c
    sgn = 1.0 if c > 0 else -1.0
    log_lam = math.log(abs(c))
    sm = lowering_band(n_atoms)
    log_s = np.concatenate(([0.0], np.cumsum(np.log(sm))))  # prefix sums, len dim
    idx = np.arange(dim)

    lu = idx * log_lam - log_s  # log |u_i|
    lv2 = 2.0 * log_s - (2.0 * idx + 2.0) * log_lam  # log |v_l|^2
    # suffix log-sum-exp: lw[j] = log sum_{l >= j} |v_l|^2
    lw = np.logaddexp.accumulate(lv2[::-1])[::-1]
    log_trace = float(np.logaddexp.reduce(2.0 * lu + lw))

    expo = lu[:, None] + lu[None, :] + lw[np.maximum(idx[:, None], idx[None, :])]
    expo -= log_trace
    np.clip(expo, -745.0, 50.0, out=expo)  # normalized entries are <= 1
    mag = np.exp(expo)
    table = np.array([1.0, sgn * 1j, -1.0, -sgn * 1j])
    phase = table[(idx[None, :] - idx[:, None]) % 4]
    rho = mag * phase
    rho = np.triu(rho, 1) + np.triu(rho).conj().T  # Hermitian completion
    rho /= np.trace(rho).real
    return rho


def _steady_nullspace(liou: Liouvillian, tol: float, max_vec_dim: int):
    if liou.vec_dim > max_vec_dim:
        raise SizeLimitError(
            f"nullspace solve limited to vectorized dimension {max_vec_dim}, "
            f"got {liou.vec_dim}"
        )
    mat = liou.matrix()
    scale = max(
        liou.params.gamma_c,
        liou.params.gamma_i,
        abs(liou.params.vx),
        abs(liou.params.vy),
        abs(liou.params.omega),
        1e-30,
    )
    shifted = (mat - (1e-10 * scale) * sp.identity(liou.vec_dim, dtype=complex)).tocsc()
    lu = splu(shifted)
    x = _start_vector(liou)
    for _ in range(2):
        x = lu.solve(x)
        x /= np.linalg.norm(x)
    if isinstance(liou.basis, PermBasis):
        data = x
    else:
        n = liou.basis.dim
        data = x.reshape(n, n, order="F")  # matrix() is column-stacked
    rho = _normalized(liou, data)
    res = _perm_weighted_residual(liou, rho)
    return SteadyStateResult(rho, "nullspace", res, res < tol)


def _start_vector(liou: Liouvillian) -> np.ndarray:
    rho0 = DensityMatrix.all_down(liou.basis)
    if isinstance(liou.basis, PermBasis):
        return rho0.data.astype(np.complex128)
    return rho0.data.ravel(order="F").astype(np.complex128)


def _steady_march(liou: Liouvillian, tol: float, t_cap: float | None,
                  march_tol: float):
    params = liou.params
    gamma = max(params.gamma_c, params.gamma_i, 1e-30)
    if t_cap is None:
        tau = relaxation_timescale(params)
        t_cap = 50.0 * tau if tau is not None else 500.0 / gamma
    rho = DensityMatrix.all_down(liou.basis)
    t = 0.0
    chunk = t_cap / 25.0
    res = _perm_weighted_residual(liou, rho)
    while res >= tol and t < t_cap:
        y0 = liou.to_vec(rho.data).astype(np.complex128)
        sol = solve_ivp(
            lambda tt, y: liou.apply_vec(y),
            (0.0, chunk),
            y0,
            method="DOP853",
            rtol=march_tol,
            atol=march_tol * 1e-2,
        )
        if not sol.success:
            raise NonConvergenceError(
                f"march integration failed: {sol.message}", t_reached=t
            )
        t += chunk
        rho = _normalized(liou, liou.from_vec(sol.y[:, -1]))
        res = _perm_weighted_residual(liou, rho)
    return SteadyStateResult(
        rho, "march", res, res < tol, t_marched=t,
        info={"initial_state": "all-down", "t_cap": t_cap},
    )


def _driven_exact_applicable(liou: Liouvillian) -> bool:
    p = liou.params
    return (
        isinstance(liou.basis, DickeBasis)
        and p.gamma_i == 0.0
        and p.vx == 0.0
        and p.vy == 0.0
        and p.model in (Model.DRIVEN, Model.GENERAL, Model.COLLECTIVE_XY)
    )


def steady_state(
    liou: Liouvillian,
    method: str = "auto",
    tol: float = 1e-9,
    t_cap: float | None = None,
    march_tol: float = 1e-10,
    nullspace_max_vec_dim: int = NULLSPACE_DEFAULT_MAX,
) -> SteadyStateResult:
    """Steady state of a generator; see the module notes for the methods.

    Returns a :class:`SteadyStateResult` whose ``converged`` flag reports
    whether the target residual ||L[rho]||_F < tol was certified; a capped
    march reports converged=False together with the residual reached
    (expected near critical points, where relaxation slows down).
    """
    if method == "auto":
        if _driven_exact_applicable(liou):
            method = "driven-exact"
        elif liou.vec_dim <= nullspace_max_vec_dim:
            method = "nullspace"
        else:
            method = "march"
    if method == "driven-exact":
        if not _driven_exact_applicable(liou):
            raise InvalidParameterError(
                "driven-exact requires the dicke basis with Vx = Vy = 0"
            )
        p = liou.params
        data = driven_exact_rho(liou.basis.n_atoms, p.omega, p.gamma_c)
        rho = _normalized(liou, data)
        res = _perm_weighted_residual(liou, rho)
        return SteadyStateResult(rho, "driven-exact", res, res < max(tol, 1e-8))
    if method == "nullspace":
        return _steady_nullspace(liou, tol, nullspace_max_vec_dim)
    if method == "march":
        return _steady_march(liou, tol, t_cap, march_tol)
    raise InvalidParameterError(f"unknown steady-state method {method!r}")


# ---------------------------------------------------------------------------
# Rotated-frame truncated solver (moments only)
# ---------------------------------------------------------------------------


def rotation_to_bloch(theta: float, phi: float) -> np.ndarray:
    """SO(3) matrix whose third column is the Bloch direction (theta, phi):
    the rotation by theta about the axis (-sin phi, cos phi, 0)."""
    ax = np.array([-math.sin(phi), math.cos(phi), 0.0])
    k = np.array(
        [
            [0.0, -ax[2], ax[1]],
            [ax[2], 0.0, -ax[0]],
            [-ax[1], ax[0], 0.0],
        ]
    )
    return np.eye(3) + math.sin(theta) * k + (1.0 - math.cos(theta)) * (k @ k)


def _top_window_ops(n_atoms: int, k_levels: int):
    """Standard spin matrices restricted to the top k levels of the ladder."""
    dim = n_atoms + 1
    lo = dim - k_levels
    j = n_atoms / 2.0
    m = -j + np.arange(dim)
    sm = lowering_band(n_atoms)
    kz = sp.diags(m[lo:].astype(complex), 0)
    km = sp.diags(sm[lo:].astype(complex), 1, shape=(k_levels, k_levels))
    kp = km.conj().T
    kx = (kp + km) / 2.0
    ky = (kp - km) / 2.0j
    return kx.tocsr(), ky.tocsr(), kz.tocsr()


def _truncated_generator(params: ModelParams, n_atoms: int, k_levels: int,
                         rot: np.ndarray):
    kx, ky, kz = _top_window_ops(n_atoms, k_levels)
    kops = (kx, ky, kz)
    jx_lab = rot[0, 0] * kx + rot[0, 1] * ky + rot[0, 2] * kz
    jy_lab = rot[1, 0] * kx + rot[1, 1] * ky + rot[1, 2] * kz
    h = (
        (params.vx / n_atoms) * (jx_lab @ jx_lab)
        + (params.vy / n_atoms) * (jy_lab @ jy_lab)
        + params.omega * jx_lab
    )
    jm_lab = jx_lab - 1j * jy_lab
    liou = superoperator(h, [(jm_lab, params.gamma_c / n_atoms)])
    return liou, kops


def truncated_steady_moments(
    params: ModelParams,
    n_atoms: int,
    tol: float = 1e-9,
    k_start: int = 48,
    k_max: int = 1024,
):
    """Steady first/second spin moments via the rotated truncated ladder.

    Valid below the critical drive (a mean-field fixed point must exist).
    Returns ``(SpinMoments, info)`` where info records the window size and
    the certified residual, evaluated on a padded window so that truncation
    leakage is included.
    """
    if params.gamma_i != 0.0:
        raise InvalidParameterError("truncated solver requires collective decay")
    angles = steady_angles(params)  # raises NoFixedPointError past Omega_c
    rot = rotation_to_bloch(angles.theta, angles.phi)
    dim = n_atoms + 1
    k = min(k_start, dim)
    while True:
        liou, kops = _truncated_generator(params, n_atoms, k, rot)
        shifted = (liou - (1e-10 * params.gamma_c) * sp.identity(k * k, dtype=complex)).tocsc()
        lu = splu(shifted)
        x = np.zeros(k * k, dtype=np.complex128)
        x[-1] = 1.0  # |top><top|, the mean-field coherent state
        for _ in range(2):
            x = lu.solve(x)
            x /= np.linalg.norm(x)
        rho = x.reshape(k, k, order="F")
        rho = (rho + rho.conj().T) / 2.0
        rho /= np.trace(rho).real

        k_pad = min(k + 6, dim)
        padded = np.zeros((k_pad, k_pad), dtype=np.complex128)
        padded[k_pad - k:, k_pad - k:] = rho
        liou_pad, _ = _truncated_generator(params, n_atoms, k_pad, rot)
        res = float(np.linalg.norm(liou_pad @ padded.ravel(order="F")))
        if res < tol or k == dim:
            break
        k = min(2 * k, dim)
        if k > k_max:
            raise NonConvergenceError(
                f"truncated window would exceed k_max={k_max} (residual {res:.2e})",
                residual=res,
            )

    kdense = [op.toarray() for op in kops]
    kvec = np.array([np.trace(op @ rho).real for op in kdense])
    kk = np.empty((3, 3))
    for a in range(3):
        for b in range(a, 3):
            prod = (kdense[a] @ kdense[b] + kdense[b] @ kdense[a]) / 2.0
            kk[a, b] = kk[b, a] = np.trace(prod @ rho).real
    jvec = rot @ kvec
    jj = rot @ kk @ rot.T
    mom = SpinMoments(jvec, jj, n_atoms)
    return mom, {"method": "truncated", "k_levels": k, "residual": res}
