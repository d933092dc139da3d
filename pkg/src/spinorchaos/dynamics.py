"""Exact quantum quench dynamics in the eigenbasis.

A coherent initial state is expanded once over the eigenvectors; time
evolution is then a pure phase rotation of the coefficients, exact to
machine precision, with the fidelity F(t) = |sum_n |c_n|^2 e^{-i E_n t}|^2
and observables evaluated on the evolved coefficients.
"""

from dataclasses import dataclass

import numpy as np

from .basis import SymmetricBasis
from .coherent import PhaseSpacePoint, build_coherent_state
from .spectrum import EigenSpectrum, microcanonical_average


@dataclass
class QuenchRun:
    """Fidelity and spin-0 population series of one quench."""

    initial: PhaseSpacePoint
    times: np.ndarray
    fidelity: np.ndarray
    n0_series: np.ndarray


def evolve_overlaps(pt: PhaseSpacePoint, spec: EigenSpectrum,
                    basis: SymmetricBasis, times: np.ndarray) -> QuenchRun:
    """Quench a coherent state and track fidelity and <n0>(t).

    The spin-0 population uses the eigenbasis matrix of N0/N restricted to
    the states actually carrying weight (|c_n| above roundoff), which keeps
    the quadratic cost proportional to the effective support.
    """
    times = np.asarray(times, dtype=float)
    v = build_coherent_state(pt, basis)
    c = spec.vectors.T @ v
    w = np.abs(c) ** 2

    support = np.abs(c) > 1e-9
    cs = c[support]
    es = spec.energies[support]
    # (N0/N) in the eigenbasis, truncated to the populated states.
    Vs = spec.vectors[:, support]
    M = Vs.T @ ((basis.n_zero / basis.N)[:, None] * Vs)

    phases = np.exp(-1j * np.outer(times, es))          # (T, n_s)
    amp = phases @ w[support] + (w.sum() - w[support].sum())
    fidelity = np.abs(amp) ** 2
    ct = phases * cs                                     # evolved coefficients
    n0_series = np.einsum("ti,ij,tj->t", np.conj(ct), M, ct).real
    return QuenchRun(initial=pt, times=times, fidelity=fidelity,
                     n0_series=n0_series)


def revival_amplitudes(run: QuenchRun, period_hint: float, k: int = 3):
    """First k fidelity revival peaks near multiples of the orbit period.

    Searches each window [j*T - T/4, j*T + T/4]; a window with no interior
    local maximum reports the window maximum (the chaotic floor).
    Returns (peak_times, peak_values).
    """
    t, F = run.times, run.fidelity
    if t[-1] < k * period_hint + period_hint / 4:
        raise ValueError("time grid too short for the requested revivals")
    peak_t, peak_v = [], []
    for j in range(1, k + 1):
        lo, hi = j * period_hint - period_hint / 4, j * period_hint + period_hint / 4
        sel = (t >= lo) & (t <= hi)
        i = np.flatnonzero(sel)
        i_max = i[np.argmax(F[i])]
        peak_t.append(t[i_max])
        peak_v.append(F[i_max])
    return np.array(peak_t), np.array(peak_v)


def thermalization_check(run: QuenchRun, spec: EigenSpectrum,
                         observable_values: np.ndarray,
                         E0: float, width: float):
    """Late-time mean of <n0>(t) against the microcanonical value.

    The late window is the final third of the run.  Returns
    (late_mean, microcanonical_value, gap).
    """
    n = run.times.size
    late = run.n0_series[2 * n // 3:]
    late_mean = float(np.mean(late))
    micro = microcanonical_average(observable_values, spec.energies, E0, width)
    return late_mean, micro, late_mean - micro
