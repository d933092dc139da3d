"""Classical mean-field limit: flows, Poincare sections, Lyapunov exponents,
and the in-plane family of unstable periodic orbits.

The primary integration variable is the Cartesian spinor (zeta_plus,
zeta_zero, zeta_minus), whose flow

    i d(zeta_0)/dt  = c1 (1 - 2 n0) zeta_0 + (p/sqrt(2)) (zeta_+ + zeta_-)
    i d(zeta_pm)/dt = +- c1 m zeta_pm + (p/sqrt(2)) zeta_0

is globally smooth and conserves both the norm and the mean-field energy.
The angle-coordinate flow is kept as a cross-validation surface only; it is
singular wherever a mode empties.

The plane m = eta = 0 is invariant and carries a one-parameter family of
periodic orbits with energy E = n(1-n) + 2p sqrt(n(1-n)) cos(theta/2) and
an analytic period expressed through the complete elliptic integral K.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .basis import ModelParams
from .coherent import PhaseSpacePoint, point_to_zeta

FOUR_PI = 4.0 * np.pi

#: Coordinates closer to a mode boundary than this make the angle flow singular.
EPS_SINGULAR = 1e-8


def elliptic_K(k: float) -> float:
    """Complete elliptic integral of the first kind K(k), modulus convention.

    Arithmetic-geometric mean iteration, absolute accuracy ~1e-14.
    """
    if not 0.0 <= k < 1.0:
        raise ValueError(f"modulus must satisfy 0 <= k < 1, got {k}")
    a, b = 1.0, np.sqrt(1.0 - k * k)
    # quadratic convergence: machine precision within ~8 iterations, but the
    # last bits can oscillate, so cap the count instead of tightening the gap
    for _ in range(40):
        if abs(a - b) <= 4e-16 * a:
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    return np.pi / (2.0 * a)


def eom_cartesian(z: np.ndarray, params: ModelParams) -> np.ndarray:
    """Time derivative of the Cartesian spinor (globally smooth form)."""
    zp, z0, zm = z
    n0 = abs(z0) ** 2
    m = abs(zp) ** 2 - abs(zm) ** 2
    c1, p = params.c1, params.p
    g = p / np.sqrt(2.0)
    dz0 = -1j * (c1 * (1.0 - 2.0 * n0) * z0 + g * (zp + zm))
    dzp = -1j * (c1 * m * zp + g * z0)
    dzm = -1j * (-c1 * m * zm + g * z0)
    return np.array([dzp, dz0, dzm])


def eom_angles(pt: PhaseSpacePoint, params: ModelParams) -> tuple:
    """Angle-coordinate flow (dn0, dtheta, dm, deta)/dt.

    Raises ValueError when any mode population is within EPS_SINGULAR of
    zero; use the Cartesian form there.
    """
    n0, npl, nmi = pt.n0, pt.n_plus, pt.n_minus
    if min(n0, npl, nmi) < EPS_SINGULAR:
        raise ValueError("angle flow is singular near an empty mode")
    c1, p = params.c1, params.p
    fp, fm = pt.phi_plus, pt.phi_minus
    dn0 = p * np.sqrt(2.0 * n0) * (np.sqrt(npl) * np.sin(fp)
                                   + np.sqrt(nmi) * np.sin(fm))
    dtheta = 2.0 * c1 * (1.0 - 2.0 * n0) + p * (
        (2.0 * npl - n0) / np.sqrt(2.0 * n0 * npl) * np.cos(fp)
        + (2.0 * nmi - n0) / np.sqrt(2.0 * n0 * nmi) * np.cos(fm)
    )
    dm = p * np.sqrt(2.0 * n0) * (-np.sqrt(npl) * np.sin(fp)
                                  + np.sqrt(nmi) * np.sin(fm))
    deta = -2.0 * c1 * pt.m - p * np.sqrt(n0 / 2.0) * (
        np.cos(fp) / np.sqrt(npl) - np.cos(fm) / np.sqrt(nmi)
    )
    return dn0, dtheta, dm, deta


def cartesian_energy(z: np.ndarray, params: ModelParams) -> float:
    """Mean-field energy per atom of a Cartesian spinor (gauge-free)."""
    zp, z0, zm = z
    n0 = abs(z0) ** 2
    m = abs(zp) ** 2 - abs(zm) ** 2
    inter = params.c1 * (n0 * (1.0 - n0) + m ** 2 / 2.0)
    mix = params.p * np.sqrt(2.0) * ((zp + zm) * np.conj(z0)).real
    return float(inter + mix)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray          # (T, 3) complex
    energy_drift: float
    norm_drift: float


def _as_real(z):
    return np.concatenate([z.real, z.imag])


def _as_complex(y):
    return y[:3] + 1j * y[3:]


def integrate(z0: np.ndarray, params: ModelParams, t_final: float,
              tol: float = 1e-10, t_eval=None, max_step=np.inf) -> Trajectory:
    """Adaptive Runge-Kutta (DOP853) integration of the Cartesian flow."""
    z0 = np.asarray(z0, dtype=complex)

    def rhs(t, y):
        return _as_real(eom_cartesian(_as_complex(y), params))

    sol = solve_ivp(rhs, (0.0, t_final), _as_real(z0), method="DOP853",
                    rtol=tol, atol=tol * 1e-2, t_eval=t_eval,
                    max_step=max_step, dense_output=False)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}; "
                           f"last state {sol.y[:, -1] if sol.y.size else z0}")
    states = (sol.y[:3] + 1j * sol.y[3:]).T
    norms = np.linalg.norm(states, axis=1)
    E0 = cartesian_energy(z0, params)
    energies = np.array([cartesian_energy(z, params) for z in states])
    return Trajectory(times=sol.t, states=states,
                      energy_drift=float(np.max(np.abs(energies - E0))),
                      norm_drift=float(np.max(np.abs(norms - 1.0))))


def section_coordinates(z: np.ndarray) -> tuple:
    """Gauge-invariant (n0, theta) of a spinor, theta reduced mod 4*pi."""
    zp, z0, zm = z
    n0 = abs(z0) ** 2
    theta = (np.angle(zp) + np.angle(zm) - 2.0 * np.angle(z0)) % FOUR_PI
    return float(n0), float(theta)


def _m_of(z):
    return abs(z[0]) ** 2 - abs(z[2]) ** 2


def poincare_seed(E: float, p: float, n0: float, theta: float,
                  c1: float = 1.0) -> np.ndarray | None:
    """Spinor with m = 0 at the requested (n0, theta) and energy E per atom.

    Solves cos(eta/2) from the energy; returns None when the point is not
    on the energy shell.
    """
    g = n0 * (1.0 - n0)
    if g <= 0:
        return None
    denom = 2.0 * p * np.sqrt(g) * np.cos(theta / 2.0)
    if abs(denom) < 1e-14:
        return None
    arg = (E - c1 * g) / denom
    if abs(arg) > 1.0:
        return None
    eta = 2.0 * np.arccos(arg)
    pt = PhaseSpacePoint(n0=n0, m=0.0, theta=theta, eta=eta)
    return point_to_zeta(pt)


def section_crossings(z0: np.ndarray, params: ModelParams, t_max: float,
                      tol: float = 1e-10, step: float = 0.05):
    """Record upward (dm/dt > 0) crossings of m = 0 along one trajectory.

    Sign changes of m are bisected on the dense output to 1e-10 in time.
    Returns an array of (n0, theta) section points.
    """
    z0 = np.asarray(z0, dtype=complex)

    def rhs(t, y):
        return _as_real(eom_cartesian(_as_complex(y), params))

    sol = solve_ivp(rhs, (0.0, t_max), _as_real(z0), method="DOP853",
                    rtol=tol, atol=tol * 1e-2, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")

    ts = np.arange(0.0, t_max, step)
    ms = np.array([_m_of(_as_complex(sol.sol(t))) for t in ts])
    points = []
    for i in range(len(ts) - 1):
        if ms[i] < 0.0 <= ms[i + 1]:
            a, b = ts[i], ts[i + 1]
            while b - a > 1e-10:
                mid = 0.5 * (a + b)
                if _m_of(_as_complex(sol.sol(mid))) < 0.0:
                    a = mid
                else:
                    b = mid
            points.append(section_coordinates(_as_complex(sol.sol(0.5 * (a + b)))))
    return np.array(points) if points else np.empty((0, 2))


def tangent_flow(z: np.ndarray, dz: np.ndarray, params: ModelParams) -> np.ndarray:
    """Linearized Cartesian flow acting on a tangent spinor."""
    zp, z0, zm = z
    dp, d0, dm_ = dz
    n0 = abs(z0) ** 2
    m = abs(zp) ** 2 - abs(zm) ** 2
    c1, p = params.c1, params.p
    g = p / np.sqrt(2.0)
    dn0 = 2.0 * (np.conj(z0) * d0).real
    dm = 2.0 * (np.conj(zp) * dp).real - 2.0 * (np.conj(zm) * dm_).real
    out0 = -1j * (c1 * (1.0 - 2.0 * n0) * d0 - 2.0 * c1 * z0 * dn0
                  + g * (dp + dm_))
    outp = -1j * (c1 * m * dp + c1 * zp * dm + g * d0)
    outm = -1j * (-c1 * m * dm_ - c1 * zm * dm + g * d0)
    return np.array([outp, out0, outm])


def _project_to_plane(z: np.ndarray) -> np.ndarray:
    """Symmetrize a spinor onto the invariant plane m = eta = 0."""
    zp, z0, zm = z
    amp = np.sqrt((abs(zp) ** 2 + abs(zm) ** 2) / 2.0)
    phi0 = np.angle(z0)
    phi = (np.angle(zp) + np.angle(zm)) / 2.0 if amp > 0 else phi0
    zs = amp * np.exp(1j * phi)
    out = np.array([zs, abs(z0) * np.exp(1j * phi0), zs])
    return out / np.linalg.norm(out)


@dataclass
class LyapunovResult:
    exponent: float
    stderr: float
    converged: bool


def lyapunov_exponent(z0: np.ndarray, params: ModelParams, T: float = 2000.0,
                      renorm_interval: float = 0.5, n_blocks: int = 10,
                      tol: float = 1e-9, seed: int = 0,
                      constrain_to_plane: bool = False) -> LyapunovResult:
    """Largest Lyapunov exponent by the Benettin method.

    The analytic tangent flow is co-integrated with the trajectory and the
    tangent vector renormalized every ``renorm_interval``; the exponent is
    the mean log-stretch rate with a standard error from block averages.
    ``constrain_to_plane`` re-symmetrizes the base state onto the invariant
    plane m = eta = 0 after each segment, which keeps an orbit of the
    in-plane family from drifting off through its own transverse
    instability (the tangent vector still explores the full space, so the
    transverse stability exponent is what accumulates).
    """
    rng = np.random.default_rng(seed)
    z = np.asarray(z0, dtype=complex) / np.linalg.norm(z0)
    dz = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    dz /= np.linalg.norm(dz)

    def rhs(t, y):
        zc = y[:3] + 1j * y[3:6]
        dc = y[6:9] + 1j * y[9:12]
        f = eom_cartesian(zc, params)
        df = tangent_flow(zc, dc, params)
        return np.concatenate([f.real, f.imag, df.real, df.imag])

    n_steps = int(round(T / renorm_interval))
    logs = np.empty(n_steps)
    for k in range(n_steps):
        y0 = np.concatenate([z.real, z.imag, dz.real, dz.imag])
        sol = solve_ivp(rhs, (0.0, renorm_interval), y0, method="DOP853",
                        rtol=tol, atol=tol * 1e-2)
        if not sol.success:
            raise RuntimeError(f"tangent integration failed: {sol.message}")
        y = sol.y[:, -1]
        z = y[:3] + 1j * y[3:6]
        z /= np.linalg.norm(z)
        if constrain_to_plane:
            z = _project_to_plane(z)
        dz = y[6:9] + 1j * y[9:12]
        norm = np.linalg.norm(dz)
        logs[k] = np.log(norm)
        dz /= norm

    lam = float(np.sum(logs) / T)
    block = logs[: n_steps - n_steps % n_blocks].reshape(n_blocks, -1)
    block_rates = block.sum(axis=1) / (renorm_interval * block.shape[1])
    stderr = float(np.std(block_rates, ddof=1) / np.sqrt(n_blocks))
    return LyapunovResult(exponent=lam, stderr=stderr,
                          converged=bool(stderr < 0.5 * max(abs(lam), 0.05)))


def poincare_section(E: float, params: ModelParams, n0_seeds=None,
                     theta_seeds=None, t_max: float = 400.0,
                     lyapunov_T: float = 500.0, tol: float = 1e-10):
    """Poincare section (m = 0, upward) at energy E with Lyapunov tags.

    Seeds are placed on the m = 0 slice at the requested (n0, theta) grid,
    with eta solved from the energy.  Returns a list of dicts, one per
    launched trajectory, holding the seed, section points and the Lyapunov
    estimate.
    """
    if n0_seeds is None:
        n0_seeds = np.linspace(0.05, 0.95, 10)
    if theta_seeds is None:
        theta_seeds = np.linspace(0.1, FOUR_PI - 0.1, 8)
    results = []
    for n0 in np.atleast_1d(n0_seeds):
        for theta in np.atleast_1d(theta_seeds):
            z0 = poincare_seed(E, params.p, float(n0), float(theta),
                               c1=params.c1)
            if z0 is None:
                continue
            pts = section_crossings(z0, params, t_max, tol=tol)
            lam = lyapunov_exponent(z0, params, T=lyapunov_T, tol=1e-8)
            results.append({"seed": (float(n0), float(theta)),
                            "points": pts, "lyapunov": lam})
    if not results:
        raise ValueError(f"no admissible initial conditions at E = {E}")
    return results


def upo_initial_condition(E: float, p: float, n_start: float = 0.4) -> PhaseSpacePoint:
    """Point of the in-plane periodic-orbit family at energy E, m = eta = 0."""
    g = n_start * (1.0 - n_start)
    denom = 2.0 * p * np.sqrt(g)
    arg = (E - g) / denom
    if abs(arg) > 1.0:
        raise ValueError(
            f"energy E = {E} unreachable at n = {n_start} (|arg| = {abs(arg)})"
        )
    theta = 2.0 * np.arccos(arg)
    return PhaseSpacePoint(n0=n_start, m=0.0, theta=theta, eta=0.0)


def upo_period_analytic(E: float, p: float) -> float:
    """Orbit period from the elliptic-integral closed form.

    Returns inf (divergence flag) when the modulus degenerates toward 1,
    which happens as E approaches the lower edge of the family.
    """
    y1 = -(2.0 * p ** 2 + E - 0.25) + 2.0 * p * np.sqrt(p ** 2 + E)
    y2 = -(2.0 * p ** 2 + E - 0.25) - 2.0 * p * np.sqrt(p ** 2 + E)
    if y1 - y2 < 1e-14:
        return np.inf
    k = np.sqrt(max(y1, 0.0) / (y1 - y2))
    if k >= 1.0 - 1e-12:
        return np.inf
    return 4.0 / np.sqrt(y1 - y2) * elliptic_K(k)


def _plane_rhs(t, y, p, c1):
    n, theta = y
    g = n * (1.0 - n)
    root = np.sqrt(max(g, 0.0))
    dn = 2.0 * p * root * np.sin(theta / 2.0)
    dtheta = 2.0 * c1 * (1.0 - 2.0 * n)
    if root > 0.0:
        dtheta += 2.0 * p * (1.0 - 2.0 * n) / root * np.cos(theta / 2.0)
    return [dn, dtheta]


def _default_n_start(E: float, p: float, n_start) -> float:
    """Pick a launch point inside the orbit: prefer n = 0.4, else n = 0.5.

    The turning points are symmetric around 1/2, so n = 0.5 is admissible
    for every member of the family.
    """
    if n_start is not None:
        return n_start
    g = 0.24
    if abs(E - g) <= 2.0 * p * np.sqrt(g) * (1.0 - 1e-12):
        return 0.4
    return 0.5


def upo_period_numeric(E: float, p: float, n_start: float | None = None,
                       c1: float = 1.0, tol: float = 1e-12,
                       t_max: float = 200.0) -> float:
    """Orbit period by first-return integration.

    The orbit is integrated in the Cartesian form restricted to the
    invariant plane (the angle flow degenerates when a turning point
    touches n = 0 or 1, e.g. at E = 0) and the first upward recrossing of
    n0 = n_start is bisected on the dense output to 1e-13 in time.
    """
    n_start = _default_n_start(E, p, n_start)
    pt = upo_initial_condition(E, p, n_start)
    if np.sin(pt.theta / 2.0) <= 1e-12:
        raise ValueError("initial condition sits at a turning point; "
                         "choose a different n_start")
    params = ModelParams(N=1, c1=c1, p=p)
    z0 = point_to_zeta(pt)

    def rhs(t, y):
        return _as_real(eom_cartesian(_as_complex(y), params))

    sol = solve_ivp(rhs, (0.0, t_max), _as_real(z0), method="DOP853",
                    rtol=tol, atol=tol, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")

    def n0_of(t):
        y = sol.sol(t)
        return y[1] ** 2 + y[4] ** 2

    step = 0.02
    ts = np.arange(step, t_max, step)
    prev_f = n0_of(step / 2.0) - n_start
    prev_t = step / 2.0
    for t in ts:
        f = n0_of(t) - n_start
        if prev_f < 0.0 <= f:
            a, b = prev_t, t
            while b - a > 1e-13:
                mid = 0.5 * (a + b)
                if n0_of(mid) - n_start < 0.0:
                    a = mid
                else:
                    b = mid
            return 0.5 * (a + b)
        prev_f, prev_t = f, t
    raise RuntimeError(f"no return to n = {n_start} within t_max = {t_max}")


def upo_orbit_samples(E: float, p: float, n_samples: int,
                      n_start: float | None = None, c1: float = 1.0,
                      tol: float = 1e-12):
    """Time-uniform samples (n, theta) along one period of the orbit.

    Returns (times, n values, theta values); the measure is uniform in time
    over the full period.  Coordinates are extracted gauge-invariantly from
    the in-plane Cartesian trajectory.
    """
    n_start = _default_n_start(E, p, n_start)
    T = upo_period_numeric(E, p, n_start=n_start, c1=c1, tol=tol)
    pt = upo_initial_condition(E, p, n_start)
    params = ModelParams(N=1, c1=c1, p=p)
    z0 = point_to_zeta(pt)
    times = np.linspace(0.0, T, n_samples, endpoint=False)

    def rhs(t, y):
        return _as_real(eom_cartesian(_as_complex(y), params))

    sol = solve_ivp(rhs, (0.0, T), _as_real(z0), method="DOP853",
                    rtol=tol, atol=tol, t_eval=times)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    ns = np.empty(n_samples)
    thetas = np.empty(n_samples)
    for i in range(n_samples):
        ns[i], thetas[i] = section_coordinates(sol.y[:3, i] + 1j * sol.y[3:, i])
    return times, ns, thetas


@dataclass(frozen=True)
class UPODescriptor:
    """Summary of one member of the in-plane periodic-orbit family."""

    p: float
    E: float
    n_start: float
    theta0: float
    period_analytic: float
    period_numeric: float
    lyapunov: float = np.nan


def describe_upo(E: float, p: float, n_start: float | None = None,
                 with_lyapunov: bool = False, lyapunov_T: float = 1000.0) -> UPODescriptor:
    """Assemble the descriptor (periods, optionally the stability exponent)."""
    n_start = _default_n_start(E, p, n_start)
    pt = upo_initial_condition(E, p, n_start)
    Ta = upo_period_analytic(E, p)
    Tn = upo_period_numeric(E, p, n_start=n_start)
    lam = np.nan
    if with_lyapunov:
        params = ModelParams(N=1, c1=1.0, p=p)
        res = lyapunov_exponent(point_to_zeta(pt), params, T=lyapunov_T,
                                constrain_to_plane=True)
        lam = res.exponent
    return UPODescriptor(p=p, E=E, n_start=n_start, theta0=pt.theta,
                         period_analytic=Ta, period_numeric=Tn, lyapunov=lam)
