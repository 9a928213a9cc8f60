"""Collective angular-momentum bases, spin operators, and coupling coefficients.

Conventions
-----------
* A ladder with total spin j is indexed by i = 0 .. 2j with m = -j + i
  (m ascending), so the lowering operator has its single band above the
  diagonal: ``<i|J-|i+1> = sqrt(j(j+1) - m(m-1))`` evaluated at m = m_{i+1}.
* Half-integers are carried as doubled integers internally (``j2 = 2j``),
  which keeps m-grids exact for any j.
* Clebsch-Gordan coefficients follow the Condon-Shortley phase convention
  and are evaluated with the Racah factorial sum using log-factorials, which
  stays finite for j well past 100.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import InvalidParameterError

OPERATOR_KINDS = ("jx", "jy", "jz", "j+", "j-")


def _as_doubled(x, name="value"):
    """Round a half-integer to its doubled-integer representation."""
    d = round(2.0 * x)
    if abs(2.0 * x - d) > 1e-9:
        raise InvalidParameterError(f"{name} = {x!r} is not a half-integer")
    return int(d)


@dataclass(frozen=True)
class DickeBasis:
    """Maximal-j manifold of N two-level atoms: j = N/2, dimension N + 1."""

    n_atoms: int

    def __post_init__(self):
        if not isinstance(self.n_atoms, (int, np.integer)) or self.n_atoms < 1:
            raise InvalidParameterError(
                f"n_atoms must be a positive integer, got {self.n_atoms!r}"
            )

    @property
    def j(self) -> float:
        return self.n_atoms / 2.0

    @property
    def j2(self) -> int:
        """Doubled total spin, 2j = N."""
        return int(self.n_atoms)

    @property
    def dim(self) -> int:
        return int(self.n_atoms) + 1

    @property
    def m_values(self) -> np.ndarray:
        return -self.j + np.arange(self.dim)


def build_basis(n_atoms: int) -> DickeBasis:
    """Construct the Dicke basis for ``n_atoms`` >= 1 atoms."""
    return DickeBasis(int(n_atoms))


@dataclass(frozen=True)
class SpinOperator:
    """A collective spin operator on a Dicke basis (treat as read-only)."""

    basis: DickeBasis
    kind: str
    matrix: sp.csr_matrix


def lowering_band(j2: int) -> np.ndarray:
    """Superdiagonal of J- for total spin j = j2/2: band[i] = <i|J-|i+1>."""
    j = j2 / 2.0
    m_upper = -j + 1.0 + np.arange(j2)  # m value of the source state i+1
    return np.sqrt(j * (j + 1.0) - m_upper * (m_upper - 1.0))


def jpjm_diagonal(j2: int) -> np.ndarray:
    """Diagonal of J+J- (zero on the bottom state)."""
    band = lowering_band(j2)
    out = np.zeros(j2 + 1)
    out[1:] = band**2
    return out


@lru_cache(maxsize=None)
def spin_matrix(j2: int, kind: str) -> sp.csr_matrix:
    """Sparse spin matrix for arbitrary total spin j = j2/2.

    Cached per (j2, kind); callers must not mutate the result.  The cache
    makes repeated generator assembly cheap and is idempotent, so concurrent
    use is safe.
    """
    if kind not in OPERATOR_KINDS:
        raise InvalidParameterError(f"unknown operator kind {kind!r}")
    if j2 < 0:
        raise InvalidParameterError("total spin must be non-negative")
    dim = j2 + 1
    band = lowering_band(j2)
    if kind == "jz":
        m = (-j2 / 2.0) + np.arange(dim)
        return sp.diags(m.astype(complex), 0, format="csr")
    jm = sp.diags(band.astype(complex), 1, format="csr")
    if kind == "j-":
        return jm
    jp = sp.diags(band.astype(complex), -1, format="csr")
    if kind == "j+":
        return jp
    if kind == "jx":
        return ((jp + jm) / 2.0).tocsr()
    return ((jp - jm) / 2.0j).tocsr()


def build_operator(basis: DickeBasis, kind: str) -> SpinOperator:
    """Collective operator on the maximal-j manifold (Jx, Jy, Jz, J+, J-)."""
    return SpinOperator(basis, kind, spin_matrix(basis.j2, kind))


# ---------------------------------------------------------------------------
# Angular-momentum coupling
# ---------------------------------------------------------------------------


def _lnfact(n: int) -> float:
    return math.lgamma(n + 1.0)


@lru_cache(maxsize=200_000)
def _cg_doubled(j1, m1, j2, m2, j3, m3):
    # All arguments doubled integers.  Returns 0.0 on any selection-rule
    # violation rather than raising; callers rely on that.
    if m1 + m2 != m3:
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0
    if (j1 + m1) % 2 or (j2 + m2) % 2 or (j3 + m3) % 2:
        return 0.0
    if j3 < abs(j1 - j2) or j3 > j1 + j2:
        return 0.0
    if (j1 + j2 + j3) % 2:
        return 0.0

    # Everything below is in (undoubled) integer factorial arguments.
    a = (j1 + j2 - j3) // 2
    b = (j1 - j2 + j3) // 2
    c = (-j1 + j2 + j3) // 2
    log_delta = (
        _lnfact(a) + _lnfact(b) + _lnfact(c) - _lnfact((j1 + j2 + j3) // 2 + 1)
    )
    log_pref = 0.5 * (
        math.log(j3 + 1.0)
        + log_delta
        + _lnfact((j3 + m3) // 2)
        + _lnfact((j3 - m3) // 2)
        + _lnfact((j1 - m1) // 2)
        + _lnfact((j1 + m1) // 2)
        + _lnfact((j2 - m2) // 2)
        + _lnfact((j2 + m2) // 2)
    )

    t_min = max(0, (j2 - j3 - m1) // 2, (j1 - j3 + m2) // 2)
    t_max = min(a, (j1 - m1) // 2, (j2 + m2) // 2)
    total = 0.0
    for t in range(t_min, t_max + 1):
        log_den = (
            _lnfact(t)
            + _lnfact(a - t)
            + _lnfact((j1 - m1) // 2 - t)
            + _lnfact((j2 + m2) // 2 - t)
            + _lnfact((j3 - j2 + m1) // 2 + t)
            + _lnfact((j3 - j1 - m2) // 2 + t)
        )
        total += (-1.0) ** t * math.exp(log_pref - log_den)
    return total


def clebsch_gordan(j1, m1, j2, m2, j, m) -> float:
    """Coupling coefficient <j1 m1; j2 m2 | j m> (Condon-Shortley).

    Selection-rule violations return exactly 0.0; non-half-integer arguments
    raise :class:`InvalidParameterError`.
    """
    args = [
        _as_doubled(j1, "j1"),
        _as_doubled(m1, "m1"),
        _as_doubled(j2, "j2"),
        _as_doubled(m2, "m2"),
        _as_doubled(j, "j"),
        _as_doubled(m, "m"),
    ]
    if args[0] < 0 or args[2] < 0 or args[4] < 0:
        raise InvalidParameterError("total spins must be non-negative")
    return _cg_doubled(*args)


def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol, derived from the coupling coefficient."""
    cg = clebsch_gordan(j1, m1, j2, m2, j3, -m3)
    if cg == 0.0:
        return 0.0
    phase = (-1.0) ** round(j1 - j2 - m3)
    return phase * cg / math.sqrt(2.0 * j3 + 1.0)
