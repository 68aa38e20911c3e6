import math

import numpy as np
import pytest

from pcsim.fdtd import PmlSpec, SimulationGrid
from pcsim.sources import (
    DipoleSource,
    FluxSurface,
    GaussianPulse,
    emission_spectrum,
    radiated_power,
)

from helpers_oracles import richardson, vacuum_dipole_power_2d


def _vacuum_grid(res=20, extent=6.0):
    n = int(extent * res)
    return SimulationGrid(np.ones((n, n)), resolution=res, pml=PmlSpec())


def test_zero_amplitude_dipole_radiates_nothing():
    g = _vacuum_grid()
    src = DipoleSource(
        position=(3.0, 3.0), orientation=(1, 0),
        envelope=GaussianPulse(0.8, 0.12), amplitude=0.0,
    )
    box = FluxSurface((2.0, 2.0), (4.0, 4.0))
    r = radiated_power(g, src, box)
    assert r.power == 0.0
    assert r.work == 0.0
    assert not r.flagged


def test_nonenclosing_flux_surface_rejected():
    g = _vacuum_grid()
    src = DipoleSource(
        position=(3.0, 3.0), orientation=(1, 0), envelope=GaussianPulse(0.8, 0.12)
    )
    with pytest.raises(ValueError, match="enclose"):
        radiated_power(g, src, FluxSurface((4.0, 4.0), (5.0, 5.0)))


def test_flux_work_agreement_and_surface_independence():
    r1 = vacuum_dipole_power_2d(20)
    assert r1.flux_work_agreement < 0.02
    assert not r1.flagged

    # A different enclosing box gives the same power within 1%.
    g = _vacuum_grid()
    src = DipoleSource(
        position=(3.0, 3.0), orientation=(1, 0), envelope=GaussianPulse(0.8, 0.12)
    )
    box2 = FluxSurface((1.4, 1.4), (4.6, 4.6))
    r2 = radiated_power(g, src, box2, frequencies=[0.8])
    assert r2.power == pytest.approx(r1.power, rel=0.01)


def test_orientation_isotropy_in_vacuum():
    powers = []
    for ori in ((1, 0), (0, 1), (1, 1)):
        g = _vacuum_grid()
        src = DipoleSource(
            position=(3.0, 3.0), orientation=ori, envelope=GaussianPulse(0.8, 0.12)
        )
        r = radiated_power(g, src, FluxSurface((2.0, 2.0), (4.0, 4.0)))
        powers.append(r.power)
    assert max(powers) / min(powers) - 1.0 < 0.03


def test_vacuum_power_matches_extrapolated_reference():
    rs = [vacuum_dipole_power_2d(res) for res in (20, 40, 80)]
    p_ext, order = richardson(rs[0].power, rs[1].power, rs[2].power)
    assert order >= 1.7
    assert rs[0].power == pytest.approx(p_ext, rel=0.05)


def test_spectral_power_positive_and_consistent():
    r = vacuum_dipole_power_2d(20)
    # The per-frequency emitted power at the pulse center is positive.
    assert r.spectrum_at(0.8) > 0.0


def test_dipole_validation():
    with pytest.raises(ValueError, match="nonzero"):
        DipoleSource(position=(1, 1), orientation=(0, 0), envelope=GaussianPulse(0.5, 0.1))
    with pytest.raises(ValueError):
        GaussianPulse(frequency=-1.0, bandwidth=0.1)
    g = _vacuum_grid(res=10)
    under = DipoleSource(
        position=(3.0, 3.0), orientation=(1, 0), envelope=GaussianPulse(2.0, 0.2)
    )
    with pytest.raises(ValueError, match="under-resolved"):
        under.bind(g)


# ---------------------------------------------------------------------------
# emission_spectrum
# ---------------------------------------------------------------------------


def test_spectrum_pure_sinusoid_peak_in_one_bin():
    dt = 0.05
    n = 4096
    f0 = 0.73
    t = np.arange(n) * dt
    s = np.sin(2 * math.pi * f0 * t)
    spec = emission_spectrum(s, dt, window=n, window_fn="rect")
    df = spec.frequency[1] - spec.frequency[0]
    assert abs(spec.peak_frequency() - f0) <= df


def test_spectrum_two_sinusoids_two_peaks():
    dt = 0.05
    n = 4096
    df = 1.0 / (n * dt)
    f1, f2 = 0.6, 0.6 + 6 * df
    t = np.arange(n) * dt
    s = np.sin(2 * math.pi * f1 * t) + 0.8 * np.sin(2 * math.pi * f2 * t)
    spec = emission_spectrum(s, dt, window=n, window_fn="rect")
    from scipy.signal import find_peaks

    peaks, _ = find_peaks(spec.amplitude, height=0.25 * spec.amplitude.max())
    found = spec.frequency[peaks]
    assert any(abs(f - f1) <= df for f in found)
    assert any(abs(f - f2) <= df for f in found)


def test_spectrum_decaying_sinusoid_fwhm():
    # |FFT|^2 of exp(-t/tau) cos(w t) is Lorentzian with FWHM = 1/(pi tau).
    dt = 0.02
    tau = 8.0
    f0 = 0.9
    n = int(40 * tau / dt)
    t = np.arange(n) * dt
    s = np.exp(-t / tau) * np.cos(2 * math.pi * f0 * t)
    spec = emission_spectrum(s, dt, window=n, window_fn="rect")
    power = spec.amplitude**2
    ipk = int(np.argmax(power))
    half = power[ipk] / 2

    def crossing(direction):
        i = ipk
        while 0 < i < power.size - 1 and power[i] > half:
            i += direction
        # Linear interpolation between the straddling samples.
        f_a, f_b = spec.frequency[i - direction], spec.frequency[i]
        p_a, p_b = power[i - direction], power[i]
        return f_a + (half - p_a) * (f_b - f_a) / (p_b - p_a)

    fwhm = crossing(+1) - crossing(-1)
    assert fwhm == pytest.approx(1.0 / (math.pi * tau), rel=0.10)


def test_spectrum_input_validation():
    with pytest.raises(ValueError, match="empty"):
        emission_spectrum([], 0.1, window=16)
    with pytest.raises(ValueError, match="window"):
        emission_spectrum(np.ones(8), 0.1, window=16)


def test_spectrum_wavelength_axis():
    from pcsim.units import UnitSystem

    spec = emission_spectrum(np.sin(np.arange(256) * 0.3), 0.05, window=256)
    lam = spec.wavelength_nm(UnitSystem(lambda_cav_nm=921.0))
    nz = spec.frequency > 0
    assert np.all(lam[nz] > 0)
    assert np.isnan(lam[0])  # DC has no wavelength
