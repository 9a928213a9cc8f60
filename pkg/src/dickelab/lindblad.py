"""Exact master-equation generators on three bases.

* ``dicke``: the maximal-j manifold (dimension N+1), collective decay only.
  The generator is applied matrix-free from cached operator bands (see
  :mod:`dickelab._kernels`); a sparse superoperator is materialized on demand
  for direct solves.
* ``perm``: permutation-invariant blocks (j, m, m') for independent decay.
  A permutation-symmetric density matrix is block diagonal, one matrix
  rho_j per total-spin sector carried identically by each of the d_j
  degenerate copies; the per-atom lowering dissipator couples (j, m, m') to
  (j', m-1, m'-1) with j' in {j-1, j, j+1}.  The transition coefficients are
  derived by coupling one spin-1/2 to an (N-1)-atom block with
  Clebsch-Gordan coefficients and are validated against the brute-force
  backend in the test suite.
* ``full``: the complete 2^N-dimensional space (N <= 8), supporting both
  decay channels at once; serves as the oracle for the scalable backends.

Vectorization of materialized superoperators uses column stacking,
vec(A rho B) = kron(B.T, A) vec(rho).

Qubit convention: basis vector 0 is spin-down, matching the ascending-m
ordering of the spin ladders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from ._kernels import dicke_rhs
from .errors import (
    BasisMismatchError,
    InvalidParameterError,
    SizeLimitError,
)
from .params import ModelParams
from .spins import DickeBasis, jpjm_diagonal, lowering_band, spin_matrix, clebsch_gordan

BRUTE_MAX_ATOMS = 8


# ---------------------------------------------------------------------------
# Bases
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FullBasis:
    """Complete product space of N spin-1/2 atoms (oracle scale, N <= 8)."""

    n_atoms: int

    def __post_init__(self):
        if not (1 <= self.n_atoms <= BRUTE_MAX_ATOMS):
            raise SizeLimitError(
                f"full basis supports 1 <= N <= {BRUTE_MAX_ATOMS}, got {self.n_atoms}"
            )

    @property
    def dim(self) -> int:
        return 2**self.n_atoms


def block_degeneracy(n_atoms: int, j2: int) -> int:
    """Multiplicity d_j of the total-spin-j sector of N spins (exact integer).

    Equals N! (2j+1) / ((N/2+j+1)! (N/2-j)!).
    """
    k = (n_atoms - j2) // 2
    if k < 0 or (n_atoms - j2) % 2:
        return 0
    d = math.comb(n_atoms, k)
    if k >= 1:
        d -= math.comb(n_atoms, k - 1)
    return d


@dataclass(frozen=True)
class PermBasis:
    """Index scheme for permutation-invariant states of N atoms.

    Blocks are ordered by descending j; within a block the (m, m') element
    sits at offset + (m'-index)*(2j+1) + (m-index) (column stacking), with m
    ascending as everywhere else.
    """

    n_atoms: int
    blocks: tuple = field(init=False)  # ((j2, degeneracy), ...) descending j
    offsets: tuple = field(init=False)
    n_elems: int = field(init=False)

    def __post_init__(self):
        if self.n_atoms < 1:
            raise InvalidParameterError("n_atoms must be >= 1")
        blocks = []
        offsets = []
        off = 0
        for j2 in range(self.n_atoms, -1, -2):
            d = block_degeneracy(self.n_atoms, j2)
            if d <= 0:
                continue
            blocks.append((j2, d))
            offsets.append(off)
            off += (j2 + 1) ** 2
        object.__setattr__(self, "blocks", tuple(blocks))
        object.__setattr__(self, "offsets", tuple(offsets))
        object.__setattr__(self, "n_elems", off)

    def block_slice(self, idx: int) -> slice:
        j2 = self.blocks[idx][0]
        return slice(self.offsets[idx], self.offsets[idx] + (j2 + 1) ** 2)

    def dimension_checksum(self) -> int:
        """Sum_j d_j (2j+1); equals 2^N."""
        return sum(d * (j2 + 1) for j2, d in self.blocks)


Basis = DickeBasis | PermBasis | FullBasis


def basis_tag(basis: Basis) -> str:
    if isinstance(basis, DickeBasis):
        return "dicke"
    if isinstance(basis, PermBasis):
        return "perm"
    if isinstance(basis, FullBasis):
        return "full"
    raise BasisMismatchError(f"unknown basis type {type(basis)!r}")


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------


class DensityMatrix:
    """A state over one of the three bases.

    ``data`` is a (dim, dim) complex matrix for the dicke/full bases and the
    flat block-stacked vector for the perm basis.
    """

    def __init__(self, basis: Basis, data: np.ndarray):
        self.basis = basis
        data = np.asarray(data, dtype=np.complex128)
        if isinstance(basis, PermBasis):
            if data.shape != (basis.n_elems,):
                raise BasisMismatchError(
                    f"perm state needs shape ({basis.n_elems},), got {data.shape}"
                )
        else:
            if data.shape != (basis.dim, basis.dim):
                raise BasisMismatchError(
                    f"state needs shape ({basis.dim}, {basis.dim}), got {data.shape}"
                )
        self.data = data

    @property
    def tag(self) -> str:
        return basis_tag(self.basis)

    @classmethod
    def all_down(cls, basis: Basis) -> "DensityMatrix":
        """Every atom in its ground state (permutation symmetric)."""
        if isinstance(basis, PermBasis):
            data = np.zeros(basis.n_elems, dtype=np.complex128)
            data[0] = 1.0  # maximal-j block, (m, m') = (-j, -j)
            return cls(basis, data)
        data = np.zeros((basis.dim, basis.dim), dtype=np.complex128)
        data[0, 0] = 1.0
        return cls(basis, data)

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.basis, self.data.copy())

    def blocks(self):
        """Iterate (j2, degeneracy, block matrix view) for the perm basis."""
        if not isinstance(self.basis, PermBasis):
            raise BasisMismatchError("blocks() applies to perm-basis states")
        for idx, (j2, deg) in enumerate(self.basis.blocks):
            dim = j2 + 1
            view = self.data[self.basis.block_slice(idx)].reshape(dim, dim, order="F")
            yield j2, deg, view

    def trace(self) -> complex:
        if isinstance(self.basis, PermBasis):
            return sum(deg * np.trace(blk) for _, deg, blk in self.blocks())
        return complex(np.trace(self.data))

    def hermiticity_defect(self) -> float:
        if isinstance(self.basis, PermBasis):
            return max(
                float(np.abs(blk - blk.conj().T).max()) for _, _, blk in self.blocks()
            )
        return float(np.abs(self.data - self.data.conj().T).max())

    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue (per block for perm states)."""
        if isinstance(self.basis, PermBasis):
            return min(
                float(np.linalg.eigvalsh((blk + blk.conj().T) / 2.0)[0])
                for _, _, blk in self.blocks()
            )
        h = (self.data + self.data.conj().T) / 2.0
        if h.shape[0] <= 1200:
            return float(np.linalg.eigvalsh(h)[0])
        val = sp.linalg.eigsh(h, k=1, which="SA", return_eigenvectors=False)
        return float(val[0].real)

    def check(self, trace_tol=1e-10, herm_tol=1e-10, pos_tol=1e-8) -> None:
        """Raise if the state violates trace, Hermiticity, or positivity."""
        if abs(self.trace() - 1.0) > trace_tol:
            raise InvalidParameterError(f"trace defect {abs(self.trace() - 1.0)}")
        if self.hermiticity_defect() > herm_tol:
            raise InvalidParameterError(
                f"hermiticity defect {self.hermiticity_defect()}"
            )
        if self.min_eigenvalue() < -pos_tol:
            raise InvalidParameterError(f"negative eigenvalue {self.min_eigenvalue()}")

    def hermitized(self) -> "DensityMatrix":
        if isinstance(self.basis, PermBasis):
            out = self.copy()
            for _, _, blk in out.blocks():
                blk[...] = (blk + blk.conj().T) / 2.0
            return out
        return DensityMatrix(self.basis, (self.data + self.data.conj().T) / 2.0)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """(1/2) ||a - b||_1 between states on the same basis."""
    if type(a.basis) is not type(b.basis) or a.basis != b.basis:
        raise BasisMismatchError("states live on different bases")
    if isinstance(a.basis, PermBasis):
        total = 0.0
        for (j2, deg, blk_a), (_, _, blk_b) in zip(a.blocks(), b.blocks()):
            diff = blk_a - blk_b
            diff = (diff + diff.conj().T) / 2.0
            total += deg * np.abs(np.linalg.eigvalsh(diff)).sum()
        return 0.5 * total
    diff = a.data - b.data
    diff = (diff + diff.conj().T) / 2.0
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def hamiltonian_matrix(j2: int, n_atoms: int, vx: float, vy: float, omega: float):
    """(vx/N) Jx^2 + (vy/N) Jy^2 + omega Jx on a single spin-j ladder.

    The 1/N scaling always uses the atom number, also inside smaller-j
    blocks of the permutation basis.
    """
    jx = spin_matrix(j2, "jx")
    jy = spin_matrix(j2, "jy")
    h = (vx / n_atoms) * (jx @ jx) + (vy / n_atoms) * (jy @ jy) + omega * jx
    return h.tocsr()


def superoperator(h, jumps) -> sp.csr_matrix:
    """Column-stacked superoperator for -i[H, .] plus Lindblad dissipators.

    ``jumps`` is a sequence of (operator, rate) pairs entering as
    (rate/2)(2 C rho C+ - C+C rho - rho C+C).
    """
    h = sp.csr_matrix(h)
    n = h.shape[0]
    eye = sp.identity(n, format="csr", dtype=complex)
    liou = -1j * (sp.kron(eye, h, format="csr") - sp.kron(h.T, eye, format="csr"))
    for c, rate in jumps:
        c = sp.csr_matrix(c)
        cc = (c.conj().T @ c).tocsr()
        liou = liou + (rate / 2.0) * (
            2.0 * sp.kron(c.conj(), c, format="csr")
            - sp.kron(eye, cc, format="csr")
            - sp.kron(cc.T, eye, format="csr")
        )
    return liou.tocsr()


class Liouvillian:
    """Master-equation generator bound to a basis and a parameter snapshot.

    ``apply`` acts on states in their natural layout (matrix for dicke/full,
    flat block vector for perm).  ``matrix()`` materializes the column-stacked
    sparse map, subject to a nonzero budget; the dicke backend is applied
    matrix-free from cached bands regardless, which is what makes N ~ 1000
    ladders tractable.
    """

    def __init__(self, basis: Basis, params: ModelParams, apply_fn, vec_dim: int,
                 matrix_builder, nnz_estimate: int):
        self.basis = basis
        self.params = params
        self._apply = apply_fn
        self.vec_dim = vec_dim
        self._matrix_builder = matrix_builder
        self._nnz_estimate = nnz_estimate
        self._matrix = None

    @property
    def tag(self) -> str:
        return basis_tag(self.basis)

    def apply(self, state: np.ndarray) -> np.ndarray:
        """L[rho] in the state's natural layout."""
        return self._apply(state)

    def residual(self, rho: DensityMatrix) -> float:
        """Frobenius norm of L[rho]."""
        return float(np.linalg.norm(self.apply(rho.data)))

    def matrix(self, max_nnz: int = 20_000_000) -> sp.csr_matrix:
        """Sparse column-stacked superoperator (cached)."""
        if self._matrix is None:
            if self._nnz_estimate > max_nnz:
                raise SizeLimitError(
                    f"superoperator too large to materialize "
                    f"(~{self._nnz_estimate:.2g} nonzeros > budget {max_nnz:.2g}); "
                    "use the matrix-free apply path"
                )
            self._matrix = self._matrix_builder()
        return self._matrix

    # flat-vector interface used by the integrators; dicke/full states are
    # raveled in C order (this is independent of the column stacking used by
    # the materialized matrix)
    def to_vec(self, state: np.ndarray) -> np.ndarray:
        return state.ravel()

    def from_vec(self, v: np.ndarray) -> np.ndarray:
        if isinstance(self.basis, PermBasis):
            return v
        n = self.basis.dim
        return v.reshape(n, n)

    def apply_vec(self, v: np.ndarray) -> np.ndarray:
        return self.to_vec(self.apply(self.from_vec(v)))


def dicke_bands(basis: DickeBasis, params: ModelParams):
    """Band representation (h_diag, h_od1, h_od2, sm, w, g) of the collective
    generator used by the fused kernels."""
    n = basis.n_atoms
    j = basis.j
    m = basis.m_values
    sm = lowering_band(basis.j2)
    w = jpjm_diagonal(basis.j2)
    h_diag = ((params.vx + params.vy) / (2.0 * n)) * (j * (j + 1.0) - m * m)
    h_od1 = 0.5 * params.omega * sm
    h_od2 = ((params.vx - params.vy) / (4.0 * n)) * sm[:-1] * sm[1:]
    g = params.gamma_c / (2.0 * n)
    return h_diag, h_od1, h_od2, sm, w, g


def build_liouvillian_collective(basis: DickeBasis, params: ModelParams) -> Liouvillian:
    """Collective-decay generator on the maximal-j manifold.

    L[rho] = -i[H, rho] + (gamma_c/2N)(2 J- rho J+ - J+J- rho - rho J+J-)
    with H = (Vx/N) Jx^2 + (Vy/N) Jy^2 + Omega Jx.
    """
    if params.gamma_i != 0.0:
        raise InvalidParameterError(
            "collective backend requires gamma_i = 0 (use the brute backend "
            "for mixed decay)"
        )
    if params.n_atoms not in (0, basis.n_atoms):
        raise InvalidParameterError(
            f"params.n_atoms={params.n_atoms} disagrees with basis N={basis.n_atoms}"
        )
    h_diag, h_od1, h_od2, sm, w, g = dicke_bands(basis, params)

    def apply_fn(rho):
        out = np.empty_like(rho, dtype=np.complex128)
        return dicke_rhs(h_diag, h_od1, h_od2, sm, w, g, np.ascontiguousarray(rho), out)

    def matrix_builder():
        h = hamiltonian_matrix(basis.j2, basis.n_atoms, params.vx, params.vy, params.omega)
        return superoperator(h, [(spin_matrix(basis.j2, "j-"), params.gamma_c / basis.n_atoms)])

    vec_dim = basis.dim**2
    return Liouvillian(basis, params, apply_fn, vec_dim, matrix_builder, 13 * vec_dim)


# -- permutation-invariant independent decay --------------------------------


def _added_spin_cg(j2: int, m2: int, jbar2: int, spin_up: bool) -> float:
    """<jbar, m -+ 1/2; 1/2, +-1/2 | j, m> for attaching one spin-1/2."""
    s2 = 1 if spin_up else -1
    return clebsch_gordan(jbar2 / 2, (m2 - s2) / 2, 0.5, s2 / 2, j2 / 2, m2 / 2)


@lru_cache(maxsize=64)
def _feeding_tables(n_atoms: int):
    """Per block pair (target j, source j') the separable feeding vectors.

    For the per-atom lowering channel the gain term of the sector equations is

        drho_j(m, m')/dt += gamma_i * F_{j<-j'}(m, m') rho_{j'}(m+1, m'+1),
        F = (N / d_j) sum_{jbar} d_jbar^(N-1) u_jbar(m) u_jbar(m'),
        u_jbar(m) = c_down(j, m, jbar) * c_up(j', m+1, jbar),

    with c_up/c_down the coefficients of the last attached spin and jbar the
    shared (N-1)-atom sector.  Returns {(j2, j2src): [(weight, u-vector), ...]}
    where u is indexed by the target m index.
    """
    basis = PermBasis(n_atoms)
    out = {}
    for j2, d_j in basis.blocks:
        for j2s in (j2 - 2, j2, j2 + 2):
            d_src = block_degeneracy(n_atoms, j2s)
            if d_src <= 0:
                continue
            terms = []
            for jbar2 in (j2 - 1, j2 + 1):
                if jbar2 < 0 or jbar2 > n_atoms - 1 or abs(j2s - jbar2) != 1:
                    continue
                d_bar = block_degeneracy(n_atoms - 1, jbar2)
                if d_bar <= 0:
                    continue
                weight = n_atoms * float(Fraction(d_bar, d_j))
                u = np.zeros(j2 + 1)
                for a in range(j2 + 1):
                    m2 = -j2 + 2 * a  # doubled m of the target element
                    m2_src = m2 + 2
                    if abs(m2_src) > j2s:
                        continue
                    u[a] = _added_spin_cg(j2, m2, jbar2, False) * _added_spin_cg(
                        j2s, m2_src, jbar2, True
                    )
                if np.any(u):
                    terms.append((weight, u))
            if terms:
                out[(j2, j2s)] = terms
    return out


def build_liouvillian_independent(perm: PermBasis, params: ModelParams) -> Liouvillian:
    """Independent-decay generator on the permutation-invariant basis.

    The Hamiltonian is collective and acts within each j block; the local
    lowering channel contributes a diagonal loss -(gamma_i/2)(N + m + m') and
    the inter-block gain described in :func:`_feeding_tables`.
    """
    if params.gamma_c != 0.0:
        raise InvalidParameterError("perm backend requires gamma_c = 0")
    if params.gamma_i < 0:
        raise InvalidParameterError("gamma_i must be non-negative")
    if params.n_atoms not in (0, perm.n_atoms):
        raise InvalidParameterError(
            f"params.n_atoms={params.n_atoms} disagrees with basis N={perm.n_atoms}"
        )
    n = perm.n_atoms
    gi = params.gamma_i
    rows, cols, vals = [], [], []

    # within-block Hamiltonian superoperator
    for idx, (j2, _) in enumerate(perm.blocks):
        dim = j2 + 1
        h = hamiltonian_matrix(j2, n, params.vx, params.vy, params.omega)
        eye = sp.identity(dim, format="csr", dtype=complex)
        local = (
            -1j * (sp.kron(eye, h, format="coo") - sp.kron(h.T, eye, format="coo"))
        ).tocoo()
        off = perm.offsets[idx]
        rows.append(local.row + off)
        cols.append(local.col + off)
        vals.append(local.data)

    if gi > 0:
        # diagonal loss term
        for idx, (j2, _) in enumerate(perm.blocks):
            dim = j2 + 1
            m = (-j2 + 2.0 * np.arange(dim)) / 2.0
            loss = -0.5 * gi * (n + m[:, None] + m[None, :])  # (a=m, b=m')
            flat = loss.ravel(order="F").astype(complex)
            diag_idx = perm.offsets[idx] + np.arange(dim * dim)
            rows.append(diag_idx)
            cols.append(diag_idx)
            vals.append(flat)

        # inter-block gain
        tables = _feeding_tables(n)
        block_index = {j2: i for i, (j2, _) in enumerate(perm.blocks)}
        for (j2, j2s), terms in tables.items():
            idx_t = block_index[j2]
            idx_s = block_index[j2s]
            dim_t = j2 + 1
            dim_s = j2s + 1
            shift = (j2s - j2) // 2 + 1  # source index a' = a + shift
            f_mat = np.zeros((dim_t, dim_t))
            for weight, u in terms:
                f_mat += weight * np.outer(u, u)
            a_idx, b_idx = np.nonzero(f_mat)
            ok = (
                (a_idx + shift >= 0)
                & (a_idx + shift < dim_s)
                & (b_idx + shift >= 0)
                & (b_idx + shift < dim_s)
            )
            a_idx, b_idx = a_idx[ok], b_idx[ok]
            rows.append(perm.offsets[idx_t] + b_idx * dim_t + a_idx)
            cols.append(
                perm.offsets[idx_s] + (b_idx + shift) * dim_s + (a_idx + shift)
            )
            vals.append((gi * f_mat[a_idx, b_idx]).astype(complex))

    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(perm.n_elems, perm.n_elems),
    )

    def apply_fn(state):
        return mat @ state

    return Liouvillian(perm, params, apply_fn, perm.n_elems, lambda: mat, mat.nnz)


# -- brute force -------------------------------------------------------------

_SIGMA_M = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |down><up|
_SIGMA_Z = np.diag([-0.5, 0.5]).astype(complex)


@lru_cache(maxsize=16)
def site_lowering(n_atoms: int):
    """Tuple of per-site lowering operators on the product space."""
    ops = []
    for site in range(n_atoms):
        factors = [sp.identity(2, format="csr", dtype=complex)] * n_atoms
        factors[site] = sp.csr_matrix(_SIGMA_M)
        acc = factors[0]
        for f in factors[1:]:
            acc = sp.kron(acc, f, format="csr")
        ops.append(acc)
    return tuple(ops)


@lru_cache(maxsize=16)
def full_collective_ops(n_atoms: int):
    """(Jx, Jy, Jz, J+, J-) built from site operators on the product space."""
    sm_ops = site_lowering(n_atoms)
    jm = sum(sm_ops[1:], start=sm_ops[0])
    jp = jm.conj().T.tocsr()
    jx = ((jp + jm) / 2.0).tocsr()
    jy = ((jp - jm) / 2.0j).tocsr()
    jz = ((jp @ jm - jm @ jp) / 2.0).tocsr()
    return jx, jy, jz, jp, jm


def brute_force_liouvillian(n_atoms: int, params: ModelParams) -> Liouvillian:
    """Full 2^N-space generator supporting both decay channels at once."""
    basis = FullBasis(n_atoms)  # enforces N <= 8
    if params.n_atoms not in (0, n_atoms):
        raise InvalidParameterError(
            f"params.n_atoms={params.n_atoms} disagrees with N={n_atoms}"
        )
    jx, jy, _, _, jm = full_collective_ops(n_atoms)
    h = (
        (params.vx / n_atoms) * (jx @ jx)
        + (params.vy / n_atoms) * (jy @ jy)
        + params.omega * jx
    )
    jumps = []
    if params.gamma_i > 0:
        jumps.extend((c, params.gamma_i) for c in site_lowering(n_atoms))
    if params.gamma_c > 0:
        jumps.append((jm, params.gamma_c / n_atoms))
    mat = superoperator(h, jumps)
    dim = basis.dim

    def apply_fn(rho):
        return (mat @ rho.ravel(order="F")).reshape(dim, dim, order="F")

    return Liouvillian(basis, params, apply_fn, dim * dim, lambda: mat, mat.nnz)


# ---------------------------------------------------------------------------
# Cross-basis embeddings (oracle comparisons)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def symmetric_isometry(n_atoms: int) -> sp.csr_matrix:
    """Isometry from the maximal-j ladder into the product space.

    Column i (m = -j + i) is the normalized symmetric state with i atoms up.
    """
    dim_full = 2**n_atoms
    rows, cols, vals = [], [], []
    for idx in range(dim_full):
        i = bin(idx).count("1")
        rows.append(idx)
        cols.append(i)
        vals.append(1.0)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(dim_full, n_atoms + 1))
    norms = np.array([math.sqrt(math.comb(n_atoms, i)) for i in range(n_atoms + 1)])
    return (mat @ sp.diags(1.0 / norms)).tocsr()


def dicke_to_full(rho: DensityMatrix) -> DensityMatrix:
    if not isinstance(rho.basis, DickeBasis):
        raise BasisMismatchError("expected a dicke-basis state")
    v = symmetric_isometry(rho.basis.n_atoms)
    return DensityMatrix(
        FullBasis(rho.basis.n_atoms), (v @ rho.data @ v.conj().T.toarray())
    )


def full_to_dicke(rho: DensityMatrix) -> DensityMatrix:
    """Project a full-space state onto the maximal-j ladder (valid when the
    state is supported there)."""
    if not isinstance(rho.basis, FullBasis):
        raise BasisMismatchError("expected a full-basis state")
    v = symmetric_isometry(rho.basis.n_atoms)
    return DensityMatrix(
        DickeBasis(rho.basis.n_atoms), v.conj().T @ rho.data @ v.toarray()
    )


@lru_cache(maxsize=8)
def _sector_isometries(n_atoms: int):
    """Coupling-tree bases {j2: [matrix (2^N, 2j+1) per degeneracy copy]}.

    Built by attaching one spin at a time with Clebsch-Gordan coefficients;
    the copies realize the degeneracy labels used by the perm basis.
    """
    if n_atoms > BRUTE_MAX_ATOMS:
        raise SizeLimitError("sector embedding only supported at oracle scale")
    # level 1: single spin, basis (down, up)
    sectors = {1: [np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex)]}
    for n in range(2, n_atoms + 1):
        new = {}
        for jbar2, mats in sectors.items():
            for mat in mats:
                for j2 in (jbar2 - 1, jbar2 + 1):
                    if j2 < 0 or (j2 == 0 and n % 2):
                        continue
                    dim_new = j2 + 1
                    out = np.zeros((2**n, dim_new), dtype=complex)
                    for a in range(dim_new):
                        m2 = -j2 + 2 * a
                        # attach spin down / up to parent states
                        for s2, col_shift, block in ((-1, (m2 + 1 + jbar2) // 2, 0),
                                                     (1, (m2 - 1 + jbar2) // 2, 1)):
                            if 0 <= col_shift <= jbar2:
                                cg = clebsch_gordan(
                                    jbar2 / 2, (m2 - s2) / 2, 0.5, s2 / 2,
                                    j2 / 2, m2 / 2,
                                )
                                if cg != 0.0:
                                    parent = mat[:, col_shift]
                                    # kron(parent, spin): spin index is least
                                    # significant; block 0 = down, 1 = up
                                    out[block::2, a] += cg * parent
                    new.setdefault(j2, []).append(out)
        sectors = new
    return {j2: tuple(mats) for j2, mats in sectors.items()}


def perm_to_full(rho: DensityMatrix) -> DensityMatrix:
    """Embed a permutation-invariant state into the product space (N <= 8)."""
    if not isinstance(rho.basis, PermBasis):
        raise BasisMismatchError("expected a perm-basis state")
    n = rho.basis.n_atoms
    isos = _sector_isometries(n)
    out = np.zeros((2**n, 2**n), dtype=complex)
    for j2, deg, blk in rho.blocks():
        mats = isos[j2]
        if len(mats) != deg:
            raise InvalidParameterError(
                f"degeneracy mismatch in sector j2={j2}: {len(mats)} vs {deg}"
            )
        for u in mats:
            out += u @ blk @ u.conj().T
    return DensityMatrix(FullBasis(n), out)
