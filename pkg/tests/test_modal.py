import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcsim.modal import (
    EnhancementInput,
    cavity_decay_rate,
    collection_efficiency,
    find_resonances,
    kappa_si,
    mode_volume,
    mode_volume_normalized,
    purcell_factor,
    rate_enhancement,
    weak_coupling_check,
)
from pcsim.photon_stats import fit_lorentzian
from pcsim.units import UnitSystem

from helpers_oracles import synthetic_ringdown


# ---------------------------------------------------------------------------
# Ringdown Q extraction
# ---------------------------------------------------------------------------


def test_q_320_recovered_within_3_percent():
    t, s = synthetic_ringdown(q=320.0, f0=0.3, dt=0.02, n_decay_times=3.0)
    peaks = find_resonances(s, 0.02, band=(0.2, 0.4))
    assert peaks
    assert peaks[0].q == pytest.approx(320.0, rel=0.03)
    assert peaks[0].frequency == pytest.approx(0.3, rel=1e-3)


def test_q_5000_truncated_recovered_within_5_percent():
    t, s = synthetic_ringdown(q=5000.0, f0=0.3, dt=0.05, n_decay_times=3.0)
    peaks = find_resonances(s, 0.05, band=(0.25, 0.35))
    assert peaks
    assert peaks[0].q == pytest.approx(5000.0, rel=0.05)


def test_pure_noise_yields_no_modes():
    rng = np.random.default_rng(5)
    s = rng.normal(0.0, 1.0, 8192)
    peaks = find_resonances(s, 0.02, band=(0.2, 0.4))
    assert peaks == []


def test_two_modes_sorted_by_amplitude():
    dt = 0.02
    t = np.arange(0, 2500.0, dt)
    s = 1.0 * np.exp(-t / 900.0) * np.cos(2 * math.pi * 0.30 * t) + 0.35 * np.exp(
        -t / 700.0
    ) * np.cos(2 * math.pi * 0.36 * t + 1.0)
    peaks = find_resonances(s, dt, band=(0.25, 0.42), max_modes=4)
    assert len(peaks) >= 2
    assert peaks[0].frequency == pytest.approx(0.30, abs=0.005)
    assert peaks[1].frequency == pytest.approx(0.36, abs=0.005)
    assert peaks[0].amplitude > peaks[1].amplitude


def test_ringdown_q_consistent_with_lorentzian_fwhm_q():
    # Same synthetic mode analyzed two ways: ringdown fit vs Lorentzian fit
    # of its power spectrum.
    q_true, f0, dt = 800.0, 0.3, 0.05
    t, s = synthetic_ringdown(q=q_true, f0=f0, dt=dt, n_decay_times=6.0)
    q_ring = find_resonances(s, dt, band=(0.25, 0.35))[0].q

    amp = np.abs(np.fft.rfft(s)) ** 2
    freq = np.fft.rfftfreq(s.size, d=dt)
    sel = (freq > 0.28) & (freq < 0.32)
    lam = 1.0 / freq[sel][::-1]
    fit = fit_lorentzian(lam, amp[sel][::-1])
    assert fit.ok
    assert q_ring == pytest.approx(fit.q, rel=0.05)


# ---------------------------------------------------------------------------
# Mode volume
# ---------------------------------------------------------------------------


def test_mode_volume_uniform_field_equals_box_volume():
    eps = np.full((20, 30), 2.0)
    e = [np.ones((20, 30)), np.zeros((20, 30))]
    dx = 0.1
    v = mode_volume(e, eps, dx)
    assert v == pytest.approx(20 * 30 * dx * dx, rel=1e-12)


def test_mode_volume_single_cell():
    eps = np.ones((16, 16))
    e = [np.zeros((16, 16)), np.zeros((16, 16))]
    e[0][7, 9] = 3.0
    v = mode_volume(e, eps, 0.05)
    assert v == pytest.approx(0.05 * 0.05, rel=1e-12)


def test_mode_volume_zero_field_rejected():
    with pytest.raises(ValueError, match="zero"):
        mode_volume([np.zeros((8, 8))], np.ones((8, 8)), 0.1)


@settings(max_examples=30)
@given(st.floats(min_value=1e-6, max_value=1e6))
def test_mode_volume_scale_invariant(c):
    rng = np.random.default_rng(11)
    e = rng.normal(size=(12, 12))
    eps = 1.0 + rng.random((12, 12))
    v1 = mode_volume([e], eps, 0.1)
    v2 = mode_volume([c * e], eps, 0.1)
    assert v2 == pytest.approx(v1, rel=1e-9)


# ---------------------------------------------------------------------------
# Purcell factor and rate enhancement
# ---------------------------------------------------------------------------


def test_purcell_design_value():
    lam, n = 0.921, 3.6
    v = 0.5 * (lam / n) ** 3
    f = purcell_factor(45_000.0, v, lam, n)
    assert f == pytest.approx(3.0 / (4 * math.pi**2) * 45_000.0 / 0.5, rel=1e-9)
    assert f == pytest.approx(6.84e3, rel=1e-2)


def test_purcell_measured_q_value():
    lam, n = 3.7037, 3.6  # normalized units; the ratio is scale-free
    v = 0.5 * (lam / n) ** 3
    f = purcell_factor(5000.0, v, lam, n)
    assert f == pytest.approx(3.0 / (4 * math.pi**2) * 5000.0 / 0.5, rel=1e-9)
    assert f == pytest.approx(760.0, rel=1e-2)


def test_purcell_vanishes_for_large_volume():
    assert purcell_factor(1000.0, 1e12, 1.0, 3.6) < 1e-9


def test_rate_enhancement_perfect_alignment():
    inp = EnhancementInput(
        f_cav=100.0, f_pc=0.2, eta_orientation=1.0, wavelength=3.6, lambda_cav=3.6, q=1000.0
    )
    assert rate_enhancement(inp) == pytest.approx(100.2, rel=1e-12)


def test_rate_enhancement_half_width_detuning():
    q = 740.0
    lam_c = 3.7
    lam = lam_c * (1 + 1.0 / (2 * q))
    inp = EnhancementInput(
        f_cav=50.0, f_pc=0.3, eta_orientation=1.0, wavelength=lam, lambda_cav=lam_c, q=q
    )
    assert rate_enhancement(inp) == pytest.approx(25.0 + 0.3, rel=1e-9)


def test_rate_enhancement_decoupled_limit():
    inp = EnhancementInput(
        f_cav=500.0, f_pc=0.17, eta_orientation=0.0, wavelength=3.1, lambda_cav=3.7, q=900.0
    )
    assert rate_enhancement(inp) == pytest.approx(0.17, rel=1e-12)


@settings(max_examples=60)
@given(
    f_cav=st.floats(min_value=0, max_value=1e4),
    f_pc=st.floats(min_value=0, max_value=10),
    eta=st.floats(min_value=0, max_value=1),
    detune=st.floats(min_value=-0.5, max_value=0.5),
    q=st.floats(min_value=1, max_value=1e5),
)
def test_rate_enhancement_additivity(f_cav, f_pc, eta, detune, q):
    lam_c = 3.7
    lam = lam_c * (1 + detune)
    full = rate_enhancement(
        EnhancementInput(f_cav, f_pc, eta, lam, lam_c, q)
    )
    cavity_only = rate_enhancement(
        EnhancementInput(f_cav, 0.0, eta, lam, lam_c, q)
    )
    crystal_only = rate_enhancement(
        EnhancementInput(f_cav, f_pc, 0.0, lam, lam_c, q)
    )
    assert full == cavity_only + crystal_only


def test_rate_enhancement_monotone_in_detuning():
    vals = [
        rate_enhancement(
            EnhancementInput(100.0, 0.2, 1.0, 3.7 * (1 + d), 3.7, 500.0)
        )
        for d in (0.0, 0.001, 0.01, 0.1)
    ]
    assert all(a > b for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------------------
# Cavity decay rate and weak coupling
# ---------------------------------------------------------------------------


def test_kappa_limits_and_identity():
    k = cavity_decay_rate(3.7, 1e12)
    assert k.normalized < 1e-12
    for lam, q in ((3.7, 251.0), (2.2, 5000.0)):
        k = cavity_decay_rate(lam, q)
        assert k.normalized * q * lam == pytest.approx(math.pi, rel=1e-12)


def test_kappa_physical_anchor():
    # lambda = 921 nm, Q = 5000 -> ~2.05e11 1/s.
    val = kappa_si(921.0, 5000.0)
    assert val == pytest.approx(math.pi * 299792458.0 / (921e-9 * 5000.0), rel=1e-12)
    assert val == pytest.approx(2.05e11, rel=0.01)
    u = UnitSystem(lambda_cav_nm=921.0)
    k = cavity_decay_rate(u.nm_to_wavelength(921.0), 5000.0, units=u)
    assert k.per_second == pytest.approx(val, rel=1e-12)


def test_weak_coupling_check():
    r = weak_coupling_check(10.0, 0.0)
    assert r.is_weak and math.isinf(r.margin)
    r = weak_coupling_check(10.0, 2.0)
    assert r.is_weak and r.margin == pytest.approx(5.0)
    r = weak_coupling_check(1.0, -3.0)
    assert not r.is_weak and r.margin == pytest.approx(1 / 3)


# ---------------------------------------------------------------------------
# Collection efficiency
# ---------------------------------------------------------------------------


def _gaussian_beam_plane(n, dx, waist, lam):
    x = (np.arange(n) - n / 2) * dx
    r2 = x[:, None] ** 2 + x[None, :] ** 2
    ex = np.exp(-r2 / waist**2).astype(complex)
    return {"Ex": ex, "Ey": np.zeros_like(ex)}


def test_na_one_collects_everything():
    plane = _gaussian_beam_plane(64, 0.1, 0.8, lam=1.0)
    assert collection_efficiency(plane, 1.0, 1.0, 0.1) == pytest.approx(1.0, rel=1e-12)


def test_wide_gaussian_beam_fully_collected():
    # A beam much wider than the wavelength has negligible transverse
    # wavevector spread, so any NA >= 0.3 collects essentially all of it.
    lam = 1.0
    plane = _gaussian_beam_plane(256, 0.25, 8.0, lam)
    for na in (0.3, 0.6):
        eta = collection_efficiency(plane, lam, na, 0.25)
        assert eta > 0.99


def test_narrow_emitter_has_low_na_fraction():
    # Near-point emitter radiates across the full upward hemisphere; a
    # small collection cone captures correspondingly little.
    lam = 1.0
    plane = _gaussian_beam_plane(128, 0.125, 0.17, lam)
    eta_small = collection_efficiency(plane, lam, 0.4, 0.125)
    eta_large = collection_efficiency(plane, lam, 0.9, 0.125)
    assert eta_small < eta_large <= 1.0
    assert eta_small < 0.5


def test_collection_validation():
    plane = _gaussian_beam_plane(32, 0.1, 0.5, 1.0)
    with pytest.raises(ValueError):
        collection_efficiency(plane, 1.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        collection_efficiency({"Ex": plane["Ex"], "Ey": plane["Ey"][:-1]}, 1.0, 0.5, 0.1)
