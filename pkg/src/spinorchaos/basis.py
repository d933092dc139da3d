"""Symmetric three-mode Fock basis and the spinor-condensate Hamiltonian.

The condensate occupies a single spatial orbital, so the Hilbert space is
the bosonic symmetric subspace spanned by occupation triples
(n_plus, n_zero, n_minus) with fixed total atom number N.  Its dimension is
quadratic in N: D = (N+1)(N+2)/2.

The Hamiltonian is

    H = (c1/N) [ N0 (N - N0) + (N_plus - N_minus)^2 / 2 ]
        + p (W_plus + W_minus),

with the mode-mixing operators W_pm = (a_pm^dag a_0 + h.c.) / sqrt(2).
The interaction part is diagonal in the Fock basis; the mixing term couples
each state to at most four neighbours, so the matrix is stored sparsely.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

#: Largest Hilbert-space dimension accepted by default (dense-eigensolve bound).
DEFAULT_DIMENSION_CAP = 25_000


@dataclass(frozen=True)
class ModelParams:
    """Model parameters: atom number N, interaction c1, mixing strength p."""

    N: int
    c1: float = 1.0
    p: float = 0.5

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"atom number must be >= 1, got {self.N}")
        if not (np.isfinite(self.c1) and np.isfinite(self.p)):
            raise ValueError("c1 and p must be finite")


def hilbert_dimension(N: int) -> int:
    """Dimension of the symmetric subspace, (N+1)(N+2)/2."""
    return (N + 1) * (N + 2) // 2


@dataclass(frozen=True)
class SymmetricBasis:
    """Ordered enumeration of (n_plus, n_zero, n_minus) with fixed sum N.

    States are ordered lexicographically in (n_plus, n_minus) so indexing is
    deterministic across platforms.  ``index`` inverts ``states``.
    """

    N: int
    n_plus: np.ndarray
    n_zero: np.ndarray
    n_minus: np.ndarray
    index: dict = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.n_plus.size

    def state(self, i: int) -> tuple:
        return (int(self.n_plus[i]), int(self.n_zero[i]), int(self.n_minus[i]))

    def position(self, n_plus: int, n_zero: int, n_minus: int) -> int:
        return self.index[(n_plus, n_zero, n_minus)]


def build_basis(N: int, dimension_cap: int = DEFAULT_DIMENSION_CAP) -> SymmetricBasis:
    """Enumerate the symmetric Fock basis for N atoms.

    Raises ValueError when N < 1 or when the dimension exceeds the cap.
    """
    if N < 1:
        raise ValueError(f"atom number must be >= 1, got {N}")
    D = hilbert_dimension(N)
    if D > dimension_cap:
        raise ValueError(
            f"Hilbert dimension {D} exceeds cap {dimension_cap} (N={N})"
        )
    n_plus = np.empty(D, dtype=np.int64)
    n_minus = np.empty(D, dtype=np.int64)
    k = 0
    for np_ in range(N + 1):
        for nm in range(N - np_ + 1):
            n_plus[k] = np_
            n_minus[k] = nm
            k += 1
    n_zero = N - n_plus - n_minus
    index = {
        (int(n_plus[i]), int(n_zero[i]), int(n_minus[i])): i for i in range(D)
    }
    return SymmetricBasis(N=N, n_plus=n_plus, n_zero=n_zero, n_minus=n_minus,
                          index=index)


def build_hamiltonian(params: ModelParams, basis: SymmetricBasis) -> sparse.csr_matrix:
    """Assemble the sparse symmetric Hamiltonian matrix.

    Diagonal: (c1/N) [n0 (N - n0) + (n_plus - n_minus)^2 / 2].
    Off-diagonal: the mixing term couples (n_pm, n0) -> (n_pm + 1, n0 - 1)
    with amplitude (p/sqrt(2)) sqrt((n_pm + 1) n0), plus hermitian partners.
    """
    if basis.N != params.N:
        raise ValueError("basis was built for a different atom number")
    N = params.N
    D = basis.dimension
    npl, nze, nmi = basis.n_plus, basis.n_zero, basis.n_minus

    diag = (params.c1 / N) * (nze * (N - nze) + 0.5 * (npl - nmi) ** 2)

    rows = [np.arange(D)]
    cols = [np.arange(D)]
    vals = [diag.astype(np.float64)]

    if params.p != 0.0:
        amp = params.p / np.sqrt(2.0)
        # a_plus^dag a_0: (n+, n0, n-) -> (n+ + 1, n0 - 1, n-)
        src = np.nonzero(nze >= 1)[0]
        dst = np.array([basis.index[(int(npl[i]) + 1, int(nze[i]) - 1, int(nmi[i]))]
                        for i in src], dtype=np.int64)
        v = amp * np.sqrt((npl[src] + 1.0) * nze[src])
        rows += [dst, src]
        cols += [src, dst]
        vals += [v, v]
        # a_minus^dag a_0: (n+, n0, n-) -> (n+, n0 - 1, n- + 1)
        dst = np.array([basis.index[(int(npl[i]), int(nze[i]) - 1, int(nmi[i]) + 1)]
                        for i in src], dtype=np.int64)
        v = amp * np.sqrt((nmi[src] + 1.0) * nze[src])
        rows += [dst, src]
        cols += [src, dst]
        vals += [v, v]

    H = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(D, D),
    )
    H.sum_duplicates()
    return H


def exchange_permutation(basis: SymmetricBasis) -> np.ndarray:
    """Index permutation implementing the mode exchange + <-> -."""
    D = basis.dimension
    perm = np.empty(D, dtype=np.int64)
    for i in range(D):
        perm[i] = basis.index[(int(basis.n_minus[i]), int(basis.n_zero[i]),
                               int(basis.n_plus[i]))]
    return perm


def parity_sector_transforms(basis: SymmetricBasis):
    """Orthonormal maps onto the exchange-symmetric and antisymmetric sectors.

    Returns sparse matrices (U_sym, U_anti) with orthonormal columns; states
    with n_plus == n_minus are unpaired and belong to the symmetric sector.
    """
    perm = exchange_permutation(basis)
    D = basis.dimension
    inv = 1.0 / np.sqrt(2.0)

    rows_s, cols_s, vals_s = [], [], []
    rows_a, cols_a, vals_a = [], [], []
    js = ja = 0
    for i in range(D):
        j = perm[i]
        if j == i:
            rows_s += [i]
            cols_s += [js]
            vals_s += [1.0]
            js += 1
        elif i < j:
            rows_s += [i, j]
            cols_s += [js, js]
            vals_s += [inv, inv]
            js += 1
            rows_a += [i, j]
            cols_a += [ja, ja]
            vals_a += [inv, -inv]
            ja += 1
    U_sym = sparse.csr_matrix((vals_s, (rows_s, cols_s)), shape=(D, js))
    U_anti = sparse.csr_matrix((vals_a, (rows_a, cols_a)), shape=(D, ja))
    return U_sym, U_anti


def split_parity_sectors(H: sparse.spmatrix, basis: SymmetricBasis):
    """Block-diagonalize H in the exchange-parity eigenbasis.

    Returns (H_sym, H_anti) as sparse matrices whose dimensions sum to D.
    Raises ValueError when H is not symmetric (the model Hamiltonian always
    is, so asymmetry signals a construction bug upstream).
    """
    if abs(H - H.T).max() > 0.0:
        raise ValueError("Hamiltonian must be exactly symmetric")
    U_sym, U_anti = parity_sector_transforms(basis)
    H_sym = (U_sym.T @ H @ U_sym).tocsr()
    H_anti = (U_anti.T @ H @ U_anti).tocsr()
    return H_sym, H_anti


def apply_hamiltonian(H: sparse.spmatrix, v: np.ndarray) -> np.ndarray:
    """Sparse matrix-vector product H @ v with a dimension check."""
    if v.shape[0] != H.shape[0]:
        raise ValueError(
            f"state vector length {v.shape[0]} != dimension {H.shape[0]}"
        )
    return H @ v


def mode_hopping_operator(basis: SymmetricBasis, j: int, k: int) -> sparse.csr_matrix:
    """Sparse matrix of a_j^dag a_k for modes indexed 0=plus, 1=zero, 2=minus."""
    occ = (basis.n_plus, basis.n_zero, basis.n_minus)
    D = basis.dimension
    if j == k:
        return sparse.diags(occ[j].astype(np.float64)).tocsr()
    src = np.nonzero(occ[k] >= 1)[0]
    rows, vals = [], []
    for i in src:
        ns = [int(basis.n_plus[i]), int(basis.n_zero[i]), int(basis.n_minus[i])]
        amp = np.sqrt((ns[j] + 1.0) * ns[k])
        ns[j] += 1
        ns[k] -= 1
        rows.append(basis.index[tuple(ns)])
        vals.append(amp)
    return sparse.csr_matrix((vals, (rows, src)), shape=(D, D))
