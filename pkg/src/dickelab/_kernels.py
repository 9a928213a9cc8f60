"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The two workloads that dominate runtime are (i) applying the collective-decay
generator to a dense density matrix inside adaptive time stepping and
(ii) accumulating normalized associated-Legendre sums over angular grids for
quasiprobability plots.  Both are implemented twice: an ``@njit`` version and
a vectorized numpy version.  Selection is made once at import time from the
environment variable ``DICKELAB_NUMBA`` (``"0"`` forces the numpy path;
anything else, or an absent numba installation falling back silently, keeps
the default).  ``bench/kernel_bench.py`` times the two paths against each
other.

All kernels are deterministic; there is no RNG anywhere in this module.
"""

from __future__ import annotations

import math
import os

import numpy as np

_ENV_FLAG = os.environ.get("DICKELAB_NUMBA", "1")
NUMBA_REQUESTED = _ENV_FLAG != "0"
NUMBA_ENABLED = False

if NUMBA_REQUESTED:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a hard dep, but be safe
        NUMBA_ENABLED = False


# ---------------------------------------------------------------------------
# Collective-decay generator on the (optionally windowed) Dicke ladder.
#
# H is real symmetric with bands 0, +/-1, +/-2:
#   h_diag[i] = H[i, i],  h_od1[i] = H[i, i+1],  h_od2[i] = H[i, i+2]
# The lowering operator has a single superdiagonal sm[i] = <i|J-|i+1> and
# w[i] = (J+J-)[i, i].  g = gamma_c / (2N).  The generator is
#   L[rho] = -i(H rho - rho H) + g (2 J- rho J+ - J+J- rho - rho J+J-).
# ---------------------------------------------------------------------------


def dicke_rhs_numpy(h_diag, h_od1, h_od2, sm, w, g, rho, out):
    """Pure-numpy evaluation of the collective generator (see module notes)."""
    n = rho.shape[0]
    # H rho - rho H accumulated band by band
    c = h_diag[:, None] * rho - rho * h_diag[None, :]
    c[:-1, :] += h_od1[:, None] * rho[1:, :]
    c[1:, :] += h_od1[:, None] * rho[:-1, :]
    c[:, :-1] -= rho[:, 1:] * h_od1[None, :]
    c[:, 1:] -= rho[:, :-1] * h_od1[None, :]
    if n > 2:
        c[:-2, :] += h_od2[:, None] * rho[2:, :]
        c[2:, :] += h_od2[:, None] * rho[:-2, :]
        c[:, :-2] -= rho[:, 2:] * h_od2[None, :]
        c[:, 2:] -= rho[:, :-2] * h_od2[None, :]
    out[...] = -1j * c
    out -= g * (w[:, None] + w[None, :]) * rho
    out[:-1, :-1] += (2.0 * g) * (sm[:, None] * sm[None, :]) * rho[1:, 1:]
    return out


if NUMBA_ENABLED:

    @njit(cache=True)
    def _dicke_rhs_jit(h_diag, h_od1, h_od2, sm, w, g, rho, out):  # pragma: no cover
        n = rho.shape[0]
        for a in range(n):
            for b in range(n):
                acc = h_diag[a] * rho[a, b] - rho[a, b] * h_diag[b]
                if a + 1 < n:
                    acc += h_od1[a] * rho[a + 1, b]
                if a >= 1:
                    acc += h_od1[a - 1] * rho[a - 1, b]
                if b + 1 < n:
                    acc -= rho[a, b + 1] * h_od1[b]
                if b >= 1:
                    acc -= rho[a, b - 1] * h_od1[b - 1]
                if a + 2 < n:
                    acc += h_od2[a] * rho[a + 2, b]
                if a >= 2:
                    acc += h_od2[a - 2] * rho[a - 2, b]
                if b + 2 < n:
                    acc -= rho[a, b + 2] * h_od2[b]
                if b >= 2:
                    acc -= rho[a, b - 2] * h_od2[b - 2]
                acc = -1j * acc
                acc -= g * (w[a] + w[b]) * rho[a, b]
                if a + 1 < n and b + 1 < n:
                    acc += 2.0 * g * sm[a] * sm[b] * rho[a + 1, b + 1]
                out[a, b] = acc
        return out

    def dicke_rhs_numba(h_diag, h_od1, h_od2, sm, w, g, rho, out):
        return _dicke_rhs_jit(h_diag, h_od1, h_od2, sm, w, g, rho, out)

else:
    dicke_rhs_numba = None

dicke_rhs = dicke_rhs_numba if NUMBA_ENABLED else dicke_rhs_numpy


# ---------------------------------------------------------------------------
# Normalized associated Legendre accumulation.
#
# For fixed order q >= 0, accumulate  sum_k c[k - q] * Pbar_k^q(x)  for every
# grid point x, where Pbar is the orthonormal spherical-harmonic normalization
# (Condon-Shortley phase included):
#   Y_kq(theta, phi) = Pbar_k^q(cos theta) * exp(i q phi).
# The seed Pbar_q^q is produced in log space so degrees up to a few hundred
# neither overflow nor underflow prematurely; the upward three-term recurrence
# in k is stable for this normalization.
# ---------------------------------------------------------------------------


def _legendre_seed_log(q):
    # log of |Pbar_q^q| / sin^q(theta) = sqrt((2q+1)/(4 pi) * (2q-1)!!/(2q)!!)
    acc = 0.5 * (math.log(2 * q + 1) - math.log(4.0 * math.pi))
    for l in range(1, q + 1):
        acc += 0.5 * (math.log(2 * l - 1) - math.log(2 * l))
    return acc


def legendre_accumulate_numpy(x, sin_x, q, kmax, coeff):
    """Sum_k coeff[k-q] * Pbar_k^q(x) on a grid, numpy fallback path.

    ``x`` is cos(theta), ``sin_x`` the matching sin(theta) >= 0, ``coeff`` a
    complex array of length kmax - q + 1.
    """
    npts = x.shape[0]
    out = np.zeros(npts, dtype=np.complex128)
    sign = -1.0 if q % 2 else 1.0
    log_seed = _legendre_seed_log(q)
    with np.errstate(divide="ignore"):
        logs = np.where(sin_x > 0.0, np.log(np.maximum(sin_x, 1e-300)), -np.inf)
    p_prev = sign * np.exp(log_seed + q * logs)  # Pbar_q^q
    if q == 0:
        p_prev = np.full(npts, sign * math.exp(log_seed))
    out += coeff[0] * p_prev
    if kmax == q:
        return out
    p_curr = math.sqrt(2 * q + 3.0) * x * p_prev  # Pbar_{q+1}^q
    out += coeff[1] * p_curr
    a_prev = math.sqrt(2 * q + 3.0)
    for k in range(q + 2, kmax + 1):
        a_k = math.sqrt((4.0 * k * k - 1.0) / (k * k - q * q))
        p_next = a_k * (x * p_curr - p_prev / a_prev)
        out += coeff[k - q] * p_next
        p_prev, p_curr, a_prev = p_curr, p_next, a_k
    return out


if NUMBA_ENABLED:

    @njit(cache=True)
    def _legendre_jit(x, sin_x, q, kmax, coeff, log_seed):  # pragma: no cover
        npts = x.shape[0]
        out = np.zeros(npts, dtype=np.complex128)
        sign = -1.0 if q % 2 else 1.0
        for i in range(npts):
            if q > 0 and sin_x[i] <= 0.0:
                p_prev = 0.0
            else:
                p_prev = sign * math.exp(log_seed + q * (math.log(sin_x[i]) if q > 0 else 0.0))
            out[i] += coeff[0] * p_prev
            if kmax == q:
                continue
            p_curr = math.sqrt(2 * q + 3.0) * x[i] * p_prev
            out[i] += coeff[1] * p_curr
            a_prev = math.sqrt(2 * q + 3.0)
            for k in range(q + 2, kmax + 1):
                a_k = math.sqrt((4.0 * k * k - 1.0) / (k * k - q * q))
                p_next = a_k * (x[i] * p_curr - p_prev / a_prev)
                out[i] += coeff[k - q] * p_next
                p_prev = p_curr
                p_curr = p_next
                a_prev = a_k
        return out

    def legendre_accumulate_numba(x, sin_x, q, kmax, coeff):
        return _legendre_jit(x, sin_x, q, kmax, coeff, _legendre_seed_log(q))

else:
    legendre_accumulate_numba = None

legendre_accumulate = (
    legendre_accumulate_numba if NUMBA_ENABLED else legendre_accumulate_numpy
)


def active_backend():
    """Name of the kernel path selected at import time."""
    return "numba" if NUMBA_ENABLED else "numpy"
