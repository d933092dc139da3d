"""Dense diagonalization and per-eigenstate observables.

All analyses downstream need interior eigenpairs and the complete spectrum,
so the Hamiltonian is densified and handed to LAPACK.  Eigenvectors are
real (the matrix is real symmetric) and stored column-aligned with the
ascending eigenvalues.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .basis import SymmetricBasis, mode_hopping_operator

LN3 = np.log(3.0)


@dataclass(frozen=True)
class EigenSpectrum:
    """Sorted eigenvalues and orthonormal eigenvectors of one block.

    ``sector_tag`` is "merged", "sym" or "anti".  ``vectors[:, n]`` belongs
    to ``energies[n]``.
    """

    energies: np.ndarray
    vectors: np.ndarray
    sector_tag: str = "merged"

    @property
    def dimension(self) -> int:
        return self.energies.size


def diagonalize(H: sparse.spmatrix, sector_tag: str = "merged",
                compute_vectors: bool = True) -> EigenSpectrum:
    """Full dense eigendecomposition of a (sparse-stored) symmetric matrix.

    With ``compute_vectors=False`` the vectors field holds an empty array;
    this saves roughly half the runtime for spectra-only analyses.
    """
    dense = np.asarray(H.todense()) if sparse.issparse(H) else np.asarray(H)
    if compute_vectors:
        energies, vectors = np.linalg.eigh(dense)
    else:
        energies = np.linalg.eigvalsh(dense)
        vectors = np.empty((dense.shape[0], 0))
    return EigenSpectrum(energies=energies, vectors=vectors, sector_tag=sector_tag)


def eigenstate_n0(spec: EigenSpectrum, basis: SymmetricBasis) -> np.ndarray:
    """Per-eigenstate spin-0 population fraction <N0>/N, each in [0, 1]."""
    if spec.vectors.shape[0] != basis.dimension:
        raise ValueError("spectrum and basis dimensions disagree")
    frac = basis.n_zero / basis.N
    return frac @ (spec.vectors ** 2)


def one_body_density_matrix(state: np.ndarray, basis: SymmetricBasis) -> np.ndarray:
    """3x3 one-body density matrix rho_jk = <a_j^dag a_k>/N (unit trace)."""
    norm = np.vdot(state, state).real
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"state must be normalized, |v|^2 = {norm}")
    rho = np.empty((3, 3), dtype=complex)
    occ = (basis.n_plus, basis.n_zero, basis.n_minus)
    prob = np.abs(state) ** 2
    for j in range(3):
        rho[j, j] = prob @ occ[j]
    for j in range(3):
        for k in range(j + 1, 3):
            op = mode_hopping_operator(basis, j, k)
            rho[j, k] = np.vdot(state, op @ state)
            rho[k, j] = np.conj(rho[j, k])
    return rho / basis.N


def one_body_entropy(state: np.ndarray, basis: SymmetricBasis) -> float:
    """One-body entanglement entropy -Tr[rho ln rho] in nats, within [0, ln 3]."""
    rho = one_body_density_matrix(state, basis)
    evals = np.linalg.eigvalsh(rho)
    evals = evals[evals > 1e-15]
    return float(-np.sum(evals * np.log(evals)))


def one_body_entropies(spec: EigenSpectrum, basis: SymmetricBasis,
                       which: np.ndarray | None = None) -> np.ndarray:
    """One-body entropies for a set of eigenstates (all by default).

    Shares the three hopping operators across states, which dominates the
    cost for wide windows.
    """
    idx = np.arange(spec.dimension) if which is None else np.asarray(which)
    V = spec.vectors[:, idx]
    occ = (basis.n_plus, basis.n_zero, basis.n_minus)
    diag = [occ[j] @ (V ** 2) for j in range(3)]
    ops = {(j, k): mode_hopping_operator(basis, j, k)
           for j in range(3) for k in range(j + 1, 3)}
    off = {jk: np.einsum("in,in->n", V, op @ V) for jk, op in ops.items()}
    out = np.empty(idx.size)
    for n in range(idx.size):
        rho = np.diag([d[n] for d in diag]).astype(float)
        for (j, k), vals in off.items():
            rho[j, k] = vals[n]
            rho[k, j] = vals[n]
        rho /= basis.N
        evals = np.linalg.eigvalsh(rho)
        evals = evals[evals > 1e-15]
        out[n] = -np.sum(evals * np.log(evals))
    return out


def microcanonical_average(values: np.ndarray, energies: np.ndarray,
                           E0: float, width: float) -> float:
    """Unweighted mean of per-state values over |E_n - E0| <= width/2."""
    if width <= 0:
        raise ValueError("window width must be positive")
    mask = np.abs(np.asarray(energies) - E0) <= width / 2
    if not np.any(mask):
        raise ValueError(f"no eigenstates in window E0={E0}, width={width}")
    return float(np.mean(np.asarray(values)[mask]))
