"""Eigenstate stacking, scarmometer scoring, and scar/antiscar partitions.

The phase-space observable is the equal-energy projected Husimi density on
an (n0, theta) grid: each cell averages Q_n over an (m, eta) subgrid
restricted to coherent states whose exact finite-N energy per atom lies
within epsilon of the shell center.  Stacks weight eigenstates with a
Gaussian energy filter; scar and antiscar partitions split the same sum by
the scarmometer score, so they reconstruct the full stack cell by cell.

The stacking identity relates the eigen-sum to a short-time propagation
integral: sum_n |<zeta|psi_n>|^2 f(E_n) equals the time integral
(1/2pi) Int A_zeta(t) Omega(t) dt with Omega the Fourier transform of the
filter around the shell energy.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .basis import ModelParams, SymmetricBasis
from .coherent import (FOUR_PI, TWO_PI, PhaseSpacePoint, build_coherent_state,
                       build_coherent_states, coherent_energy_exact)
from .classical import upo_orbit_samples
from .spectrum import EigenSpectrum

#: Energy-shell half width (per atom) used throughout the numerics.
DEFAULT_SHELL_EPSILON = 0.03


@dataclass(frozen=True)
class EnergyFilter:
    """Gaussian energy filter f(E) = exp(-(E-E0)^2 / (2 (width/2)^2)).

    ``E0`` and ``width`` are total energies; the window width is twice the
    standard deviation of the Gaussian.
    """

    E0: float
    width: float

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("filter width must be positive")

    @property
    def sigma(self) -> float:
        return self.width / 2.0

    def weight(self, energies):
        d = (np.asarray(energies) - self.E0) / self.sigma
        return np.exp(-0.5 * d * d)

    def omega(self, times, E_ref: float | None = None):
        """Temporal cutoff Int f(E) exp(i (E - E_ref) t) dE, analytic.

        ``E_ref`` defaults to the filter center; survival amplitudes are
        referenced to the measure-state energy, so pass that energy to keep
        the two factors of the stacking identity phase-consistent.
        """
        t = np.asarray(times)
        base = np.sqrt(TWO_PI) * self.sigma * np.exp(-0.5 * (self.sigma * t) ** 2)
        if E_ref is None or E_ref == self.E0:
            return base
        return base * np.exp(1j * (self.E0 - E_ref) * t)


@dataclass(frozen=True)
class GridSpec:
    """Resolution of the (n0, theta) projection grid and (m, eta) subgrid."""

    n0_bins: int = 48
    theta_bins: int = 48
    m_bins: int = 32
    eta_bins: int = 32


@dataclass
class ProjectionGrid:
    """Projected density on (n0, theta) with the per-cell density of states.

    ``values[i, j]`` is the shell-restricted (m, eta) average for the cell
    centered at (n0_centers[i], theta_centers[j]); cells with ``dos == 0``
    carry no density of states and hold NaN.
    """

    n0_centers: np.ndarray
    theta_centers: np.ndarray
    values: np.ndarray
    dos: np.ndarray
    epsilon: float

    @property
    def populated(self) -> np.ndarray:
        return self.dos > 0

    def normalized_values(self) -> np.ndarray:
        """Values scaled to unit mean over populated cells."""
        vals = self.values[self.populated]
        return self.values / vals.mean()


@dataclass
class StackResult:
    grid: ProjectionGrid
    sigma: float
    contributing_states: int


@dataclass(frozen=True)
class ShellSample:
    """Flattened coherent-state sample of the energy shell over the 4D grid."""

    spec: GridSpec
    n0: np.ndarray
    m: np.ndarray
    theta: np.ndarray
    eta: np.ndarray
    cell: np.ndarray            # flat (n0, theta) cell index per point
    dos: np.ndarray             # (n0_bins, theta_bins) admitted-point counts
    epsilon: float


def sample_energy_shell(grid: GridSpec, E0_per_atom: float, epsilon: float,
                        params: ModelParams) -> ShellSample:
    """Enumerate subgrid points with |<H>/N - E0| <= epsilon.

    The (m, eta) subgrid is uniform per cell: m spans [-(1-n0), 1-n0] and
    eta spans [0, 2pi); cell centers are used for n0 and theta.
    """
    n0_c = (np.arange(grid.n0_bins) + 0.5) / grid.n0_bins
    th_c = FOUR_PI * (np.arange(grid.theta_bins) + 0.5) / grid.theta_bins
    mfrac = -1.0 + (2.0 * np.arange(grid.m_bins) + 1.0) / grid.m_bins
    eta_c = TWO_PI * (np.arange(grid.eta_bins) + 0.5) / grid.eta_bins

    N0, TH, MF, ET = np.meshgrid(n0_c, th_c, mfrac, eta_c, indexing="ij")
    M = MF * (1.0 - N0)
    E = coherent_energy_exact(N0, M, TH, ET, params)
    keep = np.abs(E - E0_per_atom) <= epsilon

    ii, jj = np.meshgrid(np.arange(grid.n0_bins), np.arange(grid.theta_bins),
                         indexing="ij")
    cell4 = (ii * grid.theta_bins + jj)[:, :, None, None] * np.ones_like(E, dtype=int)
    cells = cell4[keep]
    dos = np.bincount(cells, minlength=grid.n0_bins * grid.theta_bins)
    return ShellSample(spec=grid, n0=N0[keep], m=M[keep], theta=TH[keep],
                       eta=ET[keep], cell=cells,
                       dos=dos.reshape(grid.n0_bins, grid.theta_bins),
                       epsilon=epsilon)


def shell_weighted_husimi_sums(shell: ShellSample, vectors: np.ndarray,
                               weights: np.ndarray,
                               basis: SymmetricBasis,
                               chunk: int = 2048) -> np.ndarray:
    """Per-cell sums of sum_n w_kn Q_n(zeta) over shell points.

    ``vectors`` is the (D, n_states) real eigenvector block, ``weights`` a
    (n_rows, n_states) matrix of per-state weights (one row per requested
    combination, e.g. full/scar/antiscar).  Returns (n_rows, n_cells) sums;
    divide by the cell density of states to get shell averages.  Chunked so
    memory stays bounded at large D.
    """
    weights = np.atleast_2d(weights)
    n_rows = weights.shape[0]
    n_cells = shell.dos.size
    out = np.zeros((n_rows, n_cells))
    VT = np.ascontiguousarray(vectors.T)
    for lo in range(0, shell.cell.size, chunk):
        sl = slice(lo, lo + chunk)
        Z = build_coherent_states(shell.n0[sl], shell.m[sl], shell.theta[sl],
                                  shell.eta[sl], basis)
        TR = VT @ np.ascontiguousarray(Z.real)
        TI = VT @ np.ascontiguousarray(Z.imag)
        Q = TR * TR + TI * TI
        R = weights @ Q
        cells = shell.cell[sl]
        for k in range(n_rows):
            out[k] += np.bincount(cells, weights=R[k], minlength=n_cells)
    return out


def _grid_from_sums(shell: ShellSample, sums: np.ndarray) -> ProjectionGrid:
    g = shell.spec
    dos = shell.dos.astype(float)
    vals = np.full(dos.shape, np.nan)
    pop = shell.dos > 0
    vals[pop] = sums.reshape(dos.shape)[pop] / dos[pop]
    n0_c = (np.arange(g.n0_bins) + 0.5) / g.n0_bins
    th_c = FOUR_PI * (np.arange(g.theta_bins) + 0.5) / g.theta_bins
    return ProjectionGrid(n0_centers=n0_c, theta_centers=th_c, values=vals,
                          dos=shell.dos.copy(), epsilon=shell.epsilon)


def project_equal_energy(state: np.ndarray, grid: GridSpec,
                         E0_per_atom: float, epsilon: float,
                         basis: SymmetricBasis, params: ModelParams,
                         shell: ShellSample | None = None) -> ProjectionGrid:
    """Equal-energy Husimi projection of a single state onto (n0, theta)."""
    if np.iscomplexobj(state) and np.abs(state.imag).max() > 1e-14:
        raise ValueError("projection expects a real eigenvector")
    if shell is None:
        shell = sample_energy_shell(grid, E0_per_atom, epsilon, params)
    sums = shell_weighted_husimi_sums(shell, np.real(state).reshape(-1, 1),
                                      np.ones((1, 1)), basis)
    return _grid_from_sums(shell, sums[0])


def uniformity_sigma(grid: ProjectionGrid) -> float:
    """Standard deviation of unit-mean-normalized values over populated cells."""
    vals = grid.values[grid.populated]
    return float(np.std(vals / vals.mean()))


def _filter_selection(spec: EigenSpectrum, filt: EnergyFilter,
                      n_sigma: float = 3.0):
    mask = np.abs(spec.energies - filt.E0) <= n_sigma * filt.sigma
    idx = np.nonzero(mask)[0]
    return idx, filt.weight(spec.energies[idx])


def stack(spec: EigenSpectrum, filt: EnergyFilter, grid: GridSpec,
          epsilon: float, basis: SymmetricBasis, params: ModelParams,
          shell: ShellSample | None = None, min_states: int = 50,
          chunk: int = 2048) -> StackResult:
    """Projected eigenstate stacking S(n0, theta) with a Gaussian filter.

    Sums the equal-energy projections of all eigenstates within three
    filter standard deviations of the center, weighted by f(E_n).
    """
    idx, f = _filter_selection(spec, filt)
    if np.count_nonzero(f > 1e-6 * f.max(initial=0.0)) < min_states:
        raise ValueError(
            f"only {idx.size} states carry weight in the filter window"
        )
    if shell is None:
        shell = sample_energy_shell(grid, filt.E0 / params.N, epsilon, params)
    sums = shell_weighted_husimi_sums(shell, spec.vectors[:, idx],
                                      f.reshape(1, -1), basis, chunk=chunk)
    grid_out = _grid_from_sums(shell, sums[0])
    return StackResult(grid=grid_out, sigma=uniformity_sigma(grid_out),
                       contributing_states=int(idx.size))


@dataclass
class ScarScore:
    """Scarmometer values F_n for the scored eigenstates."""

    state_indices: np.ndarray
    scores: np.ndarray
    orbit_energy: float
    n_samples: int


def scarmometer(spec: EigenSpectrum, E_orbit: float, basis: SymmetricBasis,
                params: ModelParams, n_samples: int = 128,
                state_indices: np.ndarray | None = None) -> ScarScore:
    """Orbit-averaged Husimi density of eigenstates along one UPO.

    F_n = (1/T) Int dt Q_n(zeta(t)), approximated by the mean of Q_n over
    ``n_samples`` points uniformly spaced in time along one period; each
    point is lifted to the coherent state at (n(t), 0, theta(t), 0).
    """
    if n_samples < 64:
        raise ValueError("n_samples must be at least 64")
    _, ns, thetas = upo_orbit_samples(E_orbit, params.p, n_samples,
                                      c1=params.c1)
    Z = build_coherent_states(ns, np.zeros_like(ns), thetas,
                              np.zeros_like(ns), basis)
    idx = (np.arange(spec.dimension) if state_indices is None
           else np.asarray(state_indices))
    V = spec.vectors[:, idx]
    TR = V.T @ np.ascontiguousarray(Z.real)
    TI = V.T @ np.ascontiguousarray(Z.imag)
    F = np.mean(TR * TR + TI * TI, axis=1)
    return ScarScore(state_indices=idx, scores=F, orbit_energy=E_orbit,
                     n_samples=n_samples)


def partition_scar_antiscar(spec: EigenSpectrum, scores: ScarScore,
                            threshold: float, filt: EnergyFilter,
                            grid: GridSpec, epsilon: float,
                            basis: SymmetricBasis, params: ModelParams,
                            shell: ShellSample | None = None,
                            chunk: int = 2048):
    """Split the stack into scarred (F_n > threshold) and antiscarred parts.

    Returns (S_scar, S_antiscar, S_full) as ProjectionGrid; the partition
    sums reconstruct the full stack cell-wise by construction.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    idx, f = _filter_selection(spec, filt)
    score_map = dict(zip(scores.state_indices.tolist(), scores.scores))
    missing = [i for i in idx if i not in score_map]
    if missing:
        raise ValueError(f"{len(missing)} window states lack scarmometer scores")
    F = np.array([score_map[i] for i in idx])
    scar_row = f * (F > threshold)
    anti_row = f * (F <= threshold)
    if shell is None:
        shell = sample_energy_shell(grid, filt.E0 / params.N, epsilon, params)
    sums = shell_weighted_husimi_sums(shell, spec.vectors[:, idx],
                                      np.vstack([scar_row, anti_row]),
                                      basis, chunk=chunk)
    g_scar = _grid_from_sums(shell, sums[0])
    g_anti = _grid_from_sums(shell, sums[1])
    g_full = _grid_from_sums(shell, sums[0] + sums[1])
    return g_scar, g_anti, g_full


def stacking_time_identity(pt: PhaseSpacePoint, spec: EigenSpectrum,
                           basis: SymmetricBasis, filt: EnergyFilter,
                           points_per_period: int = 32,
                           min_points: int = 4001):
    """Both sides of the stacking identity for one coherent state.

    lhs: eigen-sum sum_n |<zeta|psi_n>|^2 f(E_n).
    rhs: (1/2pi) Int A(t) Omega(t) dt by Simpson quadrature over
    |t| <= T_cut with T_cut = 16 pi / width (the Gaussian Omega is
    negligible far earlier).
    """
    v = build_coherent_state(pt, basis)
    c = spec.vectors.T @ v
    w = np.abs(c) ** 2
    lhs = float(w @ filt.weight(spec.energies))

    E0 = float(w @ spec.energies)
    T_cut = 8.0 / filt.width * TWO_PI
    omega_max = (float(np.max(np.abs(spec.energies - E0)))
                 + abs(filt.E0 - E0))
    n_t = int(max(min_points,
                  points_per_period * T_cut * omega_max / np.pi))
    n_t += 1 - n_t % 2                       # Simpson wants an odd count
    times = np.linspace(-T_cut, T_cut, n_t)
    A = w @ np.exp(-1j * np.outer(spec.energies - E0, times))
    integrand = (A * filt.omega(times, E_ref=E0)).real
    rhs = float(simpson(integrand, x=times) / TWO_PI)
    return lhs, rhs


def upo_line_average(grid: ProjectionGrid, E_orbit: float, p: float,
                     c1: float = 1.0, n_samples: int = 1024) -> float:
    """Mean of the unit-mean-normalized grid over cells crossed by the UPO."""
    _, ns, thetas = upo_orbit_samples(E_orbit, p, n_samples, c1=c1, tol=1e-10)
    nb, tb = grid.values.shape
    i = np.clip((ns * nb).astype(int), 0, nb - 1)
    j = np.clip((thetas / FOUR_PI * tb).astype(int), 0, tb - 1)
    cells = np.unique(i * tb + j)
    norm = grid.normalized_values().ravel()
    pop = grid.populated.ravel()
    on_orbit = cells[pop[cells]]
    if on_orbit.size == 0:
        raise ValueError("orbit exits the populated region of the grid")
    return float(np.mean(norm[on_orbit]))
