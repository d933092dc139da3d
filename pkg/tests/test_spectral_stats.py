"""Gap ratios, Porter-Thomas, unfolding, rigidity, and form factors.

Closed-form oracles: a picket-fence spectrum has r = 1 and Delta3 = 1/12;
a Poisson spectrum has Delta3 = l/15; a filtered form factor at t = 0
equals (<(sum f)^2> - <sum f>^2)/D.  GOE expectations come from sampling
actual random matrices.
"""

import numpy as np
import pytest
from scipy import stats

from spinorchaos.spectral_stats import (RigidityCurve, UnfoldedSpectrum,
                                        calibrate_filter_strength,
                                        csff, disorder_ensemble_spectra,
                                        filtered_csff, gap_ratios,
                                        plateau_onset, porter_thomas_cdf,
                                        porter_thomas_samples,
                                        rigidity_underfit_flag,
                                        sample_goe_baseline, spectral_rigidity,
                                        unfold)


GOE_DIM = 600


@pytest.fixture(scope="module")
def goe_spectra():
    return sample_goe_baseline(GOE_DIM, 60, seed=7)


def test_gap_ratios_picket_fence():
    r, rt, skipped = gap_ratios(np.arange(100, dtype=float))
    assert np.allclose(r, 1.0) and np.allclose(rt, 1.0)
    assert skipped == 0


def test_gap_ratios_window_and_degeneracy():
    e = np.array([0.0, 1.0, 1.0, 2.0, 4.0, 8.0])
    r, rt, skipped = gap_ratios(e)
    assert skipped == 1                      # the zero gap denominator
    assert np.all(rt <= 1.0 + 1e-15)
    r2, _, _ = gap_ratios(e, window=(1.5, 8.5))
    assert r2 == pytest.approx([2.0])


def test_gap_ratio_goe_mean(goe_spectra):
    rts = np.concatenate([gap_ratios(e)[1] for e in goe_spectra])
    # <r_tilde> for GOE is 0.5307 (surmise); sampled matrices land close
    assert rts.mean() == pytest.approx(0.5332, abs=0.005)


def test_goe_semicircle_moments(goe_spectra):
    # eigenvalues of H/sqrt(dim) follow a semicircle of radius sqrt(2):
    # m2 = R^2/4 = 0.5 and m4/m2^2 = 2
    x = np.concatenate(goe_spectra) / np.sqrt(GOE_DIM)
    m2 = np.mean(x ** 2)
    m4 = np.mean(x ** 4)
    assert m2 == pytest.approx(0.5, rel=0.02)
    assert m4 / m2 ** 2 == pytest.approx(2.0, rel=0.05)


def test_porter_thomas_on_goe():
    samples = []
    for e, v in sample_goe_baseline(400, 4, seed=3, with_vectors=True):
        samples.append(porter_thomas_samples(v, np.arange(150, 250)))
    eta = np.concatenate(samples)
    assert eta.mean() == pytest.approx(1.0, rel=0.02)    # normalization
    d = stats.kstest(eta, porter_thomas_cdf).statistic
    assert d < 0.02
    # GOE components are homogeneous: local normalization changes nothing
    e, v = sample_goe_baseline(400, 1, seed=3, with_vectors=True)[0]
    idx = np.arange(150, 250)
    eta_loc = porter_thomas_samples(v, idx, local_normalization=True)
    assert eta_loc.mean() == pytest.approx(1.0, abs=1e-12)
    d_loc = stats.kstest(eta_loc, porter_thomas_cdf).statistic
    assert d_loc < 0.03


def test_porter_thomas_cdf_is_chi2():
    eta = np.linspace(0.01, 12.0, 50)
    assert np.allclose(porter_thomas_cdf(eta), stats.chi2(1).cdf(eta),
                       atol=1e-12)


def test_unfold_uniform_identity():
    e = np.linspace(0.0, 999.0, 1000)
    u = unfold(e, smoothing_s=0.6)
    assert u.mean_spacing == pytest.approx(1.0, abs=1e-6)
    # the staircase of a uniform spectrum is already linear: unfolding is
    # affine, so spacings are constant
    sp = np.diff(u.levels)
    assert np.std(sp) < 1e-6
    assert u.mean_spacing_original == pytest.approx(999.0 / 999.0)


def test_unfold_validation():
    with pytest.raises(ValueError):
        unfold(np.linspace(0, 1, 100))
    rng = np.random.default_rng(0)
    e = np.sort(rng.normal(size=2000))
    with pytest.raises(ValueError):
        # an absurdly stiff fit cannot reach unit mean spacing
        unfold(e, smoothing_s=1e6, spacing_window=(0.999, 1.001))


def test_rigidity_poisson_oracle():
    # unit-rate Poisson levels are already unit-density: feed them straight
    # to the rigidity estimator, where Delta3(l) = l/15 holds exactly
    rng = np.random.default_rng(42)
    levels = np.cumsum(rng.exponential(size=20000))
    u = UnfoldedSpectrum(levels=levels, smoothing_s=0.0, mean_spacing=1.0,
                         mean_spacing_original=1.0)
    ells = np.array([2.0, 5.0, 10.0])
    curve = spectral_rigidity(u, ells)
    assert np.allclose(curve.delta3, ells / 15.0, rtol=0.06)
    # spline unfolding absorbs part of the long-range Poisson fluctuations,
    # biasing large windows down; small windows are unaffected
    unfolded = spectral_rigidity(unfold(levels, smoothing_s=0.6), ells)
    assert unfolded.delta3[0] == pytest.approx(2.0 / 15.0, rel=0.06)
    assert unfolded.delta3[-1] < 10.0 / 15.0


def test_rigidity_picket_fence_oracle():
    # Delta3 of the unit staircase saturates at 1/12 for integer lengths
    levels = np.arange(2000, dtype=float) + 0.5
    u = unfold(levels, smoothing_s=0.6)
    curve = spectral_rigidity(u, [10.0, 20.0])
    assert np.allclose(curve.delta3, 1.0 / 12.0, atol=0.01)


def test_rigidity_translation_invariance():
    rng = np.random.default_rng(1)
    levels = np.sort(rng.uniform(0, 500, 500))
    from spinorchaos.spectral_stats import _delta3_one_window
    v1 = _delta3_one_window(levels, 100.0, 120.0)
    v2 = _delta3_one_window(levels + 1e6, 100.0 + 1e6, 120.0 + 1e6)
    assert v1 == pytest.approx(v2, abs=1e-8)
    assert v1 > 0


def test_rigidity_goe_log_growth(goe_spectra):
    pooled = []
    for e in goe_spectra[:20]:
        u = unfold(e, smoothing_s=0.6)
        pooled.append(spectral_rigidity(u, [5.0, 15.0, 40.0]).delta3)
    d3 = np.mean(pooled, axis=0)
    # GOE: Delta3 ~ (1/pi^2)(ln l - 0.0687), slow logarithmic growth
    expected = (np.log([5.0, 15.0, 40.0]) - 0.0687) / np.pi ** 2
    assert np.allclose(d3, expected, rtol=0.2)
    assert d3[0] < d3[1] < d3[2]


def test_plateau_onset_synthetic():
    x = np.geomspace(0.1, 10.0, 30)
    knee = 1.7
    y = np.where(x < knee, 0.3 * np.log(x / 0.05), 0.3 * np.log(knee / 0.05))
    curve = RigidityCurve(window_lengths=x, window_widths=x, delta3=y)
    onset = plateau_onset(curve, fit_upto=knee, plateau_from=knee * 1.5)
    assert onset == pytest.approx(knee, rel=1e-6)
    assert not rigidity_underfit_flag(curve)
    growing = RigidityCurve(window_lengths=x, window_widths=x, delta3=x ** 1.5)
    assert rigidity_underfit_flag(growing)
    with pytest.raises(ValueError):
        plateau_onset(curve, fit_upto=0.0, plateau_from=100.0)


def test_csff_single_spectrum_is_zero():
    e = np.linspace(0, 10, 50)
    c = csff([e], np.linspace(0.1, 5, 20))
    assert np.abs(c.values).max() < 1e-12    # connected part needs an ensemble


def test_csff_zero_time_and_plateau():
    rng = np.random.default_rng(5)
    spectra = [np.sort(rng.normal(size=300)) for _ in range(40)]
    c = csff(spectra, np.array([0.0]))
    # Z(0) = D for every member, so the connected value vanishes at t = 0
    assert c.values[0] == pytest.approx(0.0, abs=1e-9)
    # independent Poisson-like levels: |Z|^2 averages to D at late times
    late = csff(spectra, np.linspace(200, 400, 64))
    assert late.values.mean() == pytest.approx(1.0, rel=0.15)


def test_filtered_csff_limits():
    rng = np.random.default_rng(9)
    spectra = [np.sort(rng.normal(size=400)) * 50 for _ in range(30)]
    times = np.linspace(100, 200, 32)
    wide = filtered_csff(spectra, times, a=1e-12, eps0=0.0, N=1)
    plain = csff(spectra, times)
    assert np.abs(wide.values - plain.values).max() < 1e-6
    with pytest.warns(UserWarning):
        filtered_csff(spectra, times, a=1e3, eps0=0.0, N=1)


def test_calibrate_filter_strength():
    rng = np.random.default_rng(2)
    e = np.sort(rng.uniform(-0.3, 0.8, 5000)) * 100
    a = calibrate_filter_strength(e, 100, 0.24, target_levels=400.0)
    f = np.exp(-a * (e / 100 - 0.24) ** 2)
    assert (f ** 2).sum() / f.max() ** 2 == pytest.approx(400.0, rel=0.02)


def test_goe_baseline_validation_and_symmetry():
    with pytest.raises(ValueError):
        sample_goe_baseline(50, 1)
    e, v = sample_goe_baseline(120, 1, seed=0, with_vectors=True)[0]
    assert np.all(np.diff(e) >= 0)
    assert np.abs(v.T @ v - np.eye(120)).max() < 1e-10


def test_disorder_ensemble_reproducible():
    a = [e.copy() for e in disorder_ensemble_spectra(8, 3, seed=4)]
    b = [e.copy() for e in disorder_ensemble_spectra(8, 3, seed=4)]
    c = [e.copy() for e in disorder_ensemble_spectra(8, 3, seed=5)]
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    assert any(not np.array_equal(x, y) for x, y in zip(a, c))
    # disorder only moves p by +-0.1/N: spectra stay close
    assert max(np.abs(x - y).max() for x, y in zip(a, c)) < 0.2
