"""Physical quantities extracted from exact states.

Everything here reduces to first and symmetrized second moments of the
collective spin, so the same code serves the dicke, perm, and full backends
(and the rotated-frame truncated solver, which produces moments directly).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    AliasingWarning,
    BasisMismatchError,
    DickelabError,
    InvalidParameterError,
)
from .lindblad import DensityMatrix, DickeBasis, FullBasis, PermBasis, full_collective_ops
from .meanfield import BlochVector
from .params import ModelParams
from .spins import spin_matrix


class UndefinedSqueezingError(DickelabError):
    """|<J>| is consistent with zero, so the squeezing parameter diverges."""


@dataclass
class SpinMoments:
    """First moments <J_a> and symmetrized second moments <{J_a, J_b}>/2."""

    jvec: np.ndarray  # shape (3,)
    jj_sym: np.ndarray  # shape (3, 3), symmetric
    n_atoms: int


@lru_cache(maxsize=None)
def _ladder_ops(j2: int):
    return tuple(spin_matrix(j2, kind) for kind in ("jx", "jy", "jz"))


@lru_cache(maxsize=None)
def _ladder_pair_ops(j2: int):
    ops = _ladder_ops(j2)
    return tuple(
        tuple(((ops[a] @ ops[b] + ops[b] @ ops[a]) / 2.0).tocsr() for b in range(3))
        for a in range(3)
    )


def _sparse_trace(op, rho_block: np.ndarray) -> complex:
    # tr(op @ rho) summed over op's sparsity pattern only
    return complex(op.multiply(rho_block.T).sum())


def _moments_of_block(rho_block: np.ndarray, j2: int):
    ops = _ladder_ops(j2)
    pairs = _ladder_pair_ops(j2)
    jvec = np.array([_sparse_trace(op, rho_block) for op in ops])
    jj = np.empty((3, 3), dtype=complex)
    for a in range(3):
        for b in range(a, 3):
            jj[a, b] = jj[b, a] = _sparse_trace(pairs[a][b], rho_block)
    return jvec, jj


def spin_moments(rho: DensityMatrix) -> SpinMoments:
    """Collective-spin moments of a state on any backend basis."""
    basis = rho.basis
    if isinstance(basis, DickeBasis):
        jvec, jj = _moments_of_block(rho.data, basis.j2)
        n = basis.n_atoms
    elif isinstance(basis, FullBasis):
        jx, jy, jz, _, _ = full_collective_ops(basis.n_atoms)
        ops = [op.toarray() for op in (jx, jy, jz)]
        jvec = np.array([np.trace(op @ rho.data) for op in ops])
        jj = np.empty((3, 3), dtype=complex)
        for a in range(3):
            for b in range(a, 3):
                prod = (ops[a] @ ops[b] + ops[b] @ ops[a]) / 2.0
                jj[a, b] = jj[b, a] = np.trace(prod @ rho.data)
        n = basis.n_atoms
    elif isinstance(basis, PermBasis):
        jvec = np.zeros(3, dtype=complex)
        jj = np.zeros((3, 3), dtype=complex)
        for j2, deg, blk in rho.blocks():
            v, m = _moments_of_block(blk, j2)
            jvec += deg * v
            jj += deg * m
        n = basis.n_atoms
    else:
        raise BasisMismatchError(f"unsupported basis {type(basis)!r}")
    if max(np.abs(jvec.imag).max(), np.abs(jj.imag).max()) > 1e-8 * max(1.0, n):
        raise InvalidParameterError("state is too far from Hermitian for moments")
    return SpinMoments(jvec.real.copy(), jj.real.copy(), n)


def bloch_from_rho(rho: DensityMatrix) -> tuple[BlochVector, np.ndarray]:
    """Normalized Bloch vector <J>/j together with the raw <J> (j = N/2)."""
    mom = spin_moments(rho)
    j = mom.n_atoms / 2.0
    return BlochVector(*(mom.jvec / j)), mom.jvec


@dataclass
class SqueezingReport:
    xi2: float
    bloch_length: float
    optimal_direction: np.ndarray  # unit 3-vector orthogonal to <J>
    covariance_eigenvalues: tuple  # (min, max) transverse variances

    def to_json(self) -> str:
        return json.dumps(
            {
                "xi2": self.xi2,
                "bloch": self.bloch_length,
                "direction": list(self.optimal_direction),
                "eigenvalues": list(self.covariance_eigenvalues),
            }
        )


def squeezing_from_moments(mom: SpinMoments) -> SqueezingReport:
    """Minimal transverse variance: xi^2 = N min_var / |<J>|^2.

    The tangent frame is built deterministically by Gram-Schmidt of the
    Cartesian axis least aligned with <J>; the 2x2 transverse covariance is
    diagonalized in closed form.
    """
    jvec = mom.jvec
    blen = float(np.linalg.norm(jvec))
    if blen <= 1e-10 * mom.n_atoms:
        raise UndefinedSqueezingError(
            f"|<J>| = {blen:.3e} is consistent with zero; xi^2 is undefined"
        )
    nhat = jvec / blen
    axis = int(np.argmin(np.abs(nhat)))
    e1 = np.zeros(3)
    e1[axis] = 1.0
    e1 -= (e1 @ nhat) * nhat
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(nhat, e1)

    a = e1 @ mom.jj_sym @ e1
    b = e1 @ mom.jj_sym @ e2
    c = e2 @ mom.jj_sym @ e2
    half_diff = 0.5 * (a - c)
    rad = np.hypot(half_diff, b)
    lam_min = 0.5 * (a + c) - rad
    lam_max = 0.5 * (a + c) + rad
    w1 = (b, lam_min - a)
    w2 = (lam_min - c, b)
    v1, v2 = w1 if np.hypot(*w1) >= np.hypot(*w2) else w2
    if np.hypot(v1, v2) < 1e-15 * max(1.0, abs(a) + abs(c)):
        v1, v2 = 1.0, 0.0  # isotropic transverse variance: any direction
    direction = v1 * e1 + v2 * e2
    direction /= np.linalg.norm(direction)
    xi2 = mom.n_atoms * lam_min / blen**2
    return SqueezingReport(float(xi2), blen, direction, (float(lam_min), float(lam_max)))


def xi2_from_rho(rho: DensityMatrix) -> SqueezingReport:
    """Squeezing parameter of an exact state (any backend basis)."""
    return squeezing_from_moments(spin_moments(rho))


# ---------------------------------------------------------------------------
# Consistency of a trajectory with the exact operator equations of motion
# ---------------------------------------------------------------------------


def exact_moment_rhs(params: ModelParams, mom: SpinMoments) -> np.ndarray:
    """d<J_a>/dt from the unfactorized collective-decay moment equations.

    With A_ab = <{J_a, J_b}> these read::

        d<Jx> =  (Vy/N) A_yz + (gc/2N)(A_xz - <Jx>)
        d<Jy> = -(Vx/N) A_xz - W <Jz> + (gc/2N)(A_yz - <Jy>)
        d<Jz> = ((Vx-Vy)/N) A_xy + W <Jy> - (gc/N)(<Jx^2> + <Jy^2> + <Jz>)
    """
    n = mom.n_atoms
    gc = params.gamma_c
    vx, vy, om = params.vx, params.vy, params.omega
    jx, jy, jz = mom.jvec
    a_xy = 2.0 * mom.jj_sym[0, 1]
    a_xz = 2.0 * mom.jj_sym[0, 2]
    a_yz = 2.0 * mom.jj_sym[1, 2]
    jx2 = mom.jj_sym[0, 0]
    jy2 = mom.jj_sym[1, 1]
    return np.array(
        [
            (vy / n) * a_yz + (gc / (2.0 * n)) * (a_xz - jx),
            -(vx / n) * a_xz - om * jz + (gc / (2.0 * n)) * (a_yz - jy),
            ((vx - vy) / n) * a_xy + om * jy - (gc / n) * (jx2 + jy2 + jz),
        ]
    )


@dataclass
class MomentResidualReport:
    times: np.ndarray  # interior times where the derivative was formed
    residuals: np.ndarray  # shape (len(times), 3)
    max_residual: float


def moment_residuals(trajectory, params: ModelParams | None = None) -> MomentResidualReport:
    """Finite-difference d<J_a>/dt minus the exact right-hand sides.

    ``trajectory`` must expose uniformly spaced ``times``, stacked ``states``
    and (unless overridden) collective-decay ``params``.  A fourth-order
    five-point stencil is used, so the trajectory must carry at least five
    samples; too-coarse sampling triggers an :class:`AliasingWarning`.
    """
    params = params if params is not None else trajectory.params
    if params.gamma_i != 0.0:
        raise InvalidParameterError("moment residuals apply to collective decay")
    t = np.asarray(trajectory.times, dtype=float)
    if len(t) < 5:
        raise InvalidParameterError("need at least 5 samples for the stencil")
    h = np.diff(t)
    if np.ptp(h) > 1e-9 * h.mean():
        raise InvalidParameterError("residuals require uniform time sampling")
    h = float(h.mean())
    basis = trajectory.basis
    moments = [
        spin_moments(DensityMatrix(basis, state)) for state in trajectory.states
    ]
    jvals = np.array([m.jvec for m in moments])  # (n, 3)
    scale = basis.n_atoms / 2.0
    if np.abs(np.diff(jvals, axis=0)).max() > 0.25 * scale:
        warnings.warn(
            "trajectory sampling looks too coarse for finite differences",
            AliasingWarning,
            stacklevel=2,
        )
    deriv = (
        -jvals[4:] + 8.0 * jvals[3:-1] - 8.0 * jvals[1:-3] + jvals[:-4]
    ) / (12.0 * h)
    rhs = np.array([exact_moment_rhs(params, m) for m in moments[2:-2]])
    residuals = deriv - rhs
    return MomentResidualReport(
        t[2:-2], residuals, float(np.abs(residuals).max())
    )
