"""SU(3) coherent states, Husimi overlaps, and exact energy moments.

A coherent state is the N-fold product of one three-mode spinor,
|zeta> = (1/sqrt(N!)) [sum_m zeta_m a_m^dag]^N |0>, with
zeta_m = sqrt(n_m) exp(i phi_m) and the gauge phi_0 = 0.  The four real
coordinates are n0, m = n_plus - n_minus, theta = phi_plus + phi_minus and
eta = phi_plus - phi_minus; theta has period 4*pi (the energy depends on
cos(theta/2)), eta has period 2*pi.

Fock amplitudes are assembled in the log domain (log-gamma factorials) so
that atom numbers beyond the double-precision factorial range stay exact to
roundoff.  Modes with zero weight follow the 0^0 = 1 convention: the
amplitude is zero unless the corresponding occupation is zero.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.special import gammaln

from .basis import ModelParams, SymmetricBasis
from .spectrum import EigenSpectrum

TWO_PI = 2.0 * np.pi
FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class PhaseSpacePoint:
    """Coordinates (n0, m, theta, eta) of an SU(3) coherent state.

    Validity requires n_pm = (1 - n0 +- m)/2 >= 0; angles are reduced to
    their canonical ranges theta in [0, 4*pi), eta in [0, 2*pi).
    """

    n0: float
    m: float
    theta: float
    eta: float

    def __post_init__(self):
        if not (0.0 <= self.n0 <= 1.0):
            raise ValueError(f"n0 must be in [0, 1], got {self.n0}")
        if abs(self.m) > 1.0 - self.n0 + 1e-14:
            raise ValueError(
                f"|m| = {abs(self.m)} exceeds 1 - n0 = {1.0 - self.n0}"
            )
        # The state identifies (theta, eta) ~ (theta + 2pi a + 2pi b,
        # eta + 2pi a - 2pi b): reducing eta into [0, 2pi) must shift theta
        # by the same multiple of 2pi, then theta is 4pi-periodic on its own.
        k = np.floor(self.eta / TWO_PI)
        object.__setattr__(self, "eta", float(self.eta - TWO_PI * k))
        object.__setattr__(self, "theta",
                           float((self.theta - TWO_PI * k) % FOUR_PI))

    @property
    def n_plus(self) -> float:
        return max(0.0, (1.0 - self.n0 + self.m) / 2.0)

    @property
    def n_minus(self) -> float:
        return max(0.0, (1.0 - self.n0 - self.m) / 2.0)

    @property
    def phi_plus(self) -> float:
        return (self.theta + self.eta) / 2.0

    @property
    def phi_minus(self) -> float:
        return (self.theta - self.eta) / 2.0


def point_to_zeta(pt: PhaseSpacePoint) -> np.ndarray:
    """Complex spinor (zeta_plus, zeta_zero, zeta_minus), unit norm."""
    zp = np.sqrt(pt.n_plus) * np.exp(1j * pt.phi_plus)
    zm = np.sqrt(pt.n_minus) * np.exp(1j * pt.phi_minus)
    return np.array([zp, np.sqrt(pt.n0), zm], dtype=complex)


def zeta_to_point(z: np.ndarray) -> PhaseSpacePoint:
    """Gauge-invariant coordinates of a normalized spinor (any global phase)."""
    z = np.asarray(z, dtype=complex)
    np_, n0, nm = np.abs(z) ** 2
    phi0 = np.angle(z[1]) if n0 > 0 else 0.0
    phip = np.angle(z[0]) - phi0 if np_ > 0 else 0.0
    phim = np.angle(z[2]) - phi0 if nm > 0 else 0.0
    return PhaseSpacePoint(n0=float(n0), m=float(np_ - nm),
                           theta=phip + phim, eta=phip - phim)


def _log_multinomial_half(basis: SymmetricBasis) -> np.ndarray:
    """0.5 * ln[N! / (n+! n0! n-!)] per basis state."""
    N = basis.N
    return 0.5 * (gammaln(N + 1)
                  - gammaln(basis.n_plus + 1)
                  - gammaln(basis.n_zero + 1)
                  - gammaln(basis.n_minus + 1))


def build_coherent_states(n0, m, theta, eta, basis: SymmetricBasis) -> np.ndarray:
    """Fock amplitudes for a batch of phase-space points.

    Arguments are broadcastable 1d arrays of coordinates; returns a complex
    (D, P) array whose columns are unit-norm coherent states.
    """
    n0, m, theta, eta = np.broadcast_arrays(
        np.atleast_1d(np.asarray(n0, dtype=float)),
        np.atleast_1d(np.asarray(m, dtype=float)),
        np.atleast_1d(np.asarray(theta, dtype=float)),
        np.atleast_1d(np.asarray(eta, dtype=float)),
    )
    npl = (1.0 - n0 + m) / 2.0
    nmi = (1.0 - n0 - m) / 2.0
    if np.any(npl < -1e-14) or np.any(nmi < -1e-14):
        raise ValueError("|m| > 1 - n0 for some point")
    npl = np.clip(npl, 0.0, None)
    nmi = np.clip(nmi, 0.0, None)
    phip = (theta + eta) / 2.0
    phim = (theta - eta) / 2.0

    weights = np.stack([npl, n0, nmi])          # (3, P)
    phases = np.stack([phip, np.zeros_like(n0), phim])
    occ = np.stack([basis.n_plus, basis.n_zero, basis.n_minus]).astype(float)

    # log|amplitude|: occupied modes with zero weight kill the state entry.
    with np.errstate(divide="ignore"):
        logw = np.where(weights > 0.0, np.log(weights), 0.0)
    dead = (weights == 0.0)                      # (3, P)

    log_amp = _log_multinomial_half(basis)[:, None] \
        + 0.5 * np.einsum("ms,mp->sp", occ, logw)
    phase = np.einsum("ms,mp->sp", occ, phases)
    amp = np.exp(log_amp + 1j * phase)
    if np.any(dead):
        kill = np.einsum("ms,mp->sp", occ, dead.astype(float)) > 0
        amp[kill] = 0.0
    return amp


def build_coherent_state(pt: PhaseSpacePoint, basis: SymmetricBasis) -> np.ndarray:
    """Unit-norm Fock vector of a single coherent state."""
    return build_coherent_states([pt.n0], [pt.m], [pt.theta], [pt.eta],
                                 basis)[:, 0]


def mean_field_energy(pt: PhaseSpacePoint, params: ModelParams) -> float:
    """Classical (N -> infinity) energy per atom of a phase-space point."""
    inter = params.c1 * (pt.n0 * (1.0 - pt.n0) + pt.m ** 2 / 2.0)
    mix = params.p * np.sqrt(2.0 * pt.n0) * (
        np.sqrt(pt.n_plus) * np.cos(pt.phi_plus)
        + np.sqrt(pt.n_minus) * np.cos(pt.phi_minus)
    )
    return float(inter + mix)


def coherent_energy_exact(n0, m, theta, eta, params: ModelParams):
    """Finite-N energy per atom <zeta|H|zeta>/N, vectorized over points.

    Differs from the mean-field value by O(1/N) contractions of the
    interaction term.
    """
    n0 = np.asarray(n0, dtype=float)
    m = np.asarray(m, dtype=float)
    theta = np.asarray(theta, dtype=float)
    eta = np.asarray(eta, dtype=float)
    npl = np.clip((1.0 - n0 + m) / 2.0, 0.0, None)
    nmi = np.clip((1.0 - n0 - m) / 2.0, 0.0, None)
    N = params.N
    inter = params.c1 * ((1.0 - 1.0 / N) * (n0 * (1.0 - n0) + m ** 2 / 2.0)
                         + (1.0 - n0) / (2.0 * N))
    mix = params.p * np.sqrt(2.0) * (
        np.sqrt(npl * n0) * np.cos((theta + eta) / 2.0)
        + np.sqrt(nmi * n0) * np.cos((theta - eta) / 2.0)
    )
    return inter + mix


def coherent_energy_exact_point(pt: PhaseSpacePoint, params: ModelParams) -> float:
    return float(coherent_energy_exact(pt.n0, pt.m, pt.theta, pt.eta, params))


def husimi(state_vector: np.ndarray, coherent_vector: np.ndarray) -> float:
    """Husimi density Q = |<zeta|psi>|^2 of a state at one coherent state."""
    if state_vector.shape != coherent_vector.shape:
        raise ValueError("state and coherent vector dimensions disagree")
    return float(np.abs(np.vdot(coherent_vector, state_vector)) ** 2)


def energy_variance(pt: PhaseSpacePoint, H: sparse.spmatrix,
                    basis: SymmetricBasis) -> float:
    """Energy dispersion <H^2> - <H>^2 of a coherent state (total units)."""
    v = build_coherent_state(pt, basis)
    Hv = H @ v
    e1 = np.vdot(v, Hv).real
    e2 = np.vdot(Hv, Hv).real
    return float(max(e2 - e1 ** 2, 0.0))


def survival_amplitude(pt: PhaseSpacePoint, spec: EigenSpectrum,
                       basis: SymmetricBasis, times: np.ndarray) -> np.ndarray:
    """Survival amplitude A(t) = sum_n |<zeta|psi_n>|^2 exp(-i(E_n - E0) t).

    E0 = <zeta|H|zeta> is evaluated from the same expansion, so A(0) = 1
    exactly up to the coherent-state norm.
    """
    v = build_coherent_state(pt, basis)
    c = spec.vectors.T @ v
    w = np.abs(c) ** 2
    E0 = float(w @ spec.energies)
    phases = np.exp(-1j * np.outer(spec.energies - E0, np.asarray(times)))
    return w @ phases


def fit_gaussian_decay(times: np.ndarray, amplitude: np.ndarray) -> float:
    """Decay exponent b from least squares of ln|A(t)| = -b t^2.

    The caller controls the fit window; early times (well inside the first
    orbit period) are where the Gaussian law holds.
    """
    t = np.asarray(times, dtype=float)
    a = np.abs(np.asarray(amplitude))
    mask = (t > 0) & (a > 1e-12)
    t2 = t[mask] ** 2
    y = np.log(a[mask])
    return float(-(t2 @ y) / (t2 @ t2))
