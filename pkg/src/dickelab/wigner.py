"""Spherical Wigner quasiprobability of a spin-j state.

W(theta, phi) = sum_{k=0}^{2j} sum_{q=-k}^{k} Tr(rho T_kq^+) Y_kq(theta, phi),
with multipole operators built from coupling coefficients,

    <j m'| T_kq |j m> = sqrt((2k+1)/(2j+1)) <j m; k q | j m'>,

which are orthonormal, Tr(T_kq^+ T_k'q') = delta_kk' delta_qq'.  The sum is
assembled over positive and negative q independently and must come out real;
a large imaginary residue therefore signals an internal inconsistency and
raises instead of being silently discarded.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._kernels import legendre_accumulate
from .errors import BasisMismatchError, InternalConsistencyError, InvalidParameterError
from .lindblad import DensityMatrix, DickeBasis
from .spins import clebsch_gordan

RESIDUE_FAIL = 1e-6  # relative imaginary residue that aborts
RESIDUE_WARN = 1e-9  # expected residue scale, recorded in the grid


@dataclass
class WignerGrid:
    theta: np.ndarray
    phi: np.ndarray
    values: np.ndarray  # shape (len(theta), len(phi)), real
    normalization: str  # "raw" | "plot"
    imag_residue: float = 0.0

    def peak_angles(self, n_peaks: int = 1):
        """Grid locations of the n largest strict local maxima (theta, phi)."""
        flat_order = np.argsort(self.values, axis=None)[::-1]
        picked = []
        for flat in flat_order:
            i, k = np.unravel_index(flat, self.values.shape)
            if any(
                abs(i - pi) <= 1 and min(abs(k - pk), len(self.phi) - abs(k - pk)) <= 1
                for pi, pk in picked
            ):
                continue
            picked.append((i, k))
            if len(picked) == n_peaks:
                break
        return [(float(self.theta[i]), float(self.phi[k])) for i, k in picked]


@lru_cache(maxsize=None)
def _tkq_band(j2: int, k: int, q: int) -> np.ndarray:
    """Band q of T_kq: entry b is <j, m_b + q | T_kq | j, m_b>."""
    dim = j2 + 1
    j = j2 / 2.0
    norm = math.sqrt((2.0 * k + 1.0) / (j2 + 1.0))
    length = dim - abs(q)
    out = np.zeros(length)
    for b in range(length):
        m = -j + b + max(0, -q)  # source index offset for negative q
        out[b] = norm * clebsch_gordan(j, m, k, q, j, m + q)
    return out


def multipole_coefficients(rho: DensityMatrix) -> dict[int, np.ndarray]:
    """{q: array over k = |q| .. 2j of Tr(rho T_kq^+)}."""
    if not isinstance(rho.basis, DickeBasis):
        raise BasisMismatchError("Wigner evaluation requires a dicke-basis state")
    j2 = rho.basis.j2
    kmax = j2
    data = rho.data
    out = {}
    for q in range(-kmax, kmax + 1):
        # band of rho matching <m+q| . |m>: rho[b + q, b] for q >= 0
        if q >= 0:
            band = np.diagonal(data, offset=-q)  # rho[b+q, b]
        else:
            band = np.diagonal(data, offset=-q)
        coeffs = np.empty(kmax - abs(q) + 1, dtype=complex)
        for k in range(abs(q), kmax + 1):
            t = _tkq_band(j2, k, q)
            coeffs[k - abs(q)] = np.dot(band, t).conjugate()
        out[q] = coeffs
    return out


def wigner(
    rho: DensityMatrix,
    theta: np.ndarray | None = None,
    phi: np.ndarray | None = None,
    n_theta: int = 181,
    n_phi: int = 361,
    normalization: str = "plot",
) -> WignerGrid:
    """Evaluate the Wigner function on a (theta, phi) grid.

    ``normalization="plot"`` rescales so the maximum is 1 (grayscale
    convention); ``"raw"`` keeps the bare multipole sum.
    """
    if normalization not in ("raw", "plot"):
        raise InvalidParameterError(f"unknown normalization {normalization!r}")
    if theta is None:
        theta = np.linspace(0.0, math.pi, n_theta)
    if phi is None:
        phi = np.linspace(0.0, 2.0 * math.pi, n_phi)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    coeffs = multipole_coefficients(rho)
    kmax = rho.basis.j2
    x = np.cos(theta)
    sin_x = np.sin(theta)

    w = np.zeros((len(theta), len(phi)), dtype=complex)
    for q, c_q in coeffs.items():
        aq = abs(q)
        # Pbar_{k,-q} = (-1)^q Pbar_{k,q}: fold the sign into the coefficients
        ck = c_q if q >= 0 else c_q * ((-1.0) ** aq)
        a_theta = legendre_accumulate(x, sin_x, aq, kmax, np.ascontiguousarray(ck))
        w += np.outer(a_theta, np.exp(1j * q * phi))

    scale = float(np.abs(w.real).max())
    residue = float(np.abs(w.imag).max()) / max(scale, 1e-300)
    if residue > RESIDUE_FAIL:
        raise InternalConsistencyError(
            f"Wigner imaginary residue {residue:.2e} exceeds {RESIDUE_FAIL}"
        )
    values = w.real
    if normalization == "plot":
        values = values / values.max()
    return WignerGrid(theta, phi, values, normalization, residue)


def wigner_to_csv(grid: WignerGrid, path) -> None:
    """Long-format export: one (theta, phi, W) row per grid point."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta", "phi", "w"])
        for i, th in enumerate(grid.theta):
            for k, ph in enumerate(grid.phi):
                writer.writerow(
                    [f"{th:.17g}", f"{ph:.17g}", f"{grid.values[i, k]:.17g}"]
                )


def wigner_to_matrix(grid: WignerGrid, path) -> None:
    """Plain matrix export: comment header, then one theta row per line."""
    with open(path, "w") as fh:
        fh.write(f"# wigner matrix, normalization={grid.normalization}\n")
        fh.write("# theta " + " ".join(f"{t:.17g}" for t in grid.theta) + "\n")
        fh.write("# phi " + " ".join(f"{p:.17g}" for p in grid.phi) + "\n")
        for row in grid.values:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
