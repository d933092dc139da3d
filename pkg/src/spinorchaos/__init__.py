"""Numerical laboratory for quantum scarring and antiscarring in a chaotic
spin-1 spinor condensate.

Subpackages cover the exact Fock-space model, dense spectra and eigenstate
observables, SU(3) coherent states and Husimi projections, the classical
mean-field limit (Poincare sections, Lyapunov exponents, the in-plane
periodic-orbit family), eigenstate stacking and scar/antiscar partitions,
spectral statistics, and exact quench dynamics.
"""

from .basis import ModelParams, SymmetricBasis, build_basis, build_hamiltonian
from .coherent import PhaseSpacePoint

__all__ = [
    "ModelParams",
    "SymmetricBasis",
    "build_basis",
    "build_hamiltonian",
    "PhaseSpacePoint",
]
