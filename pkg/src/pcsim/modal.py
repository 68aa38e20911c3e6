"""Cavity-mode extraction and cavity-QED figures of merit.

Resonances are pulled from ringdown probe records: the late-time signal is
bandpass-filtered around each spectral peak and fit as a decaying sinusoid
A exp(-t/tau_a) cos(w t + phi).  The quality factor follows from the field
decay time as Q = w tau_a / 2 (energy decays twice as fast as amplitude).

Figures of merit implemented here:

* mode volume: integral of eps |E|^2 over its peak density,
* Purcell factor: (3 / 4 pi^2) (lambda/n)^3 Q / V,
* emitter rate enhancement: Purcell term scaled by spatial/spectral/
  orientation mismatch, plus the base crystal rate,
* cavity field decay rate kappa = pi c / (lambda Q) and the weak-coupling
  margin kappa/|g|,
* collection efficiency of an objective from the plane-wave decomposition
  of the field recorded on a plane above the structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal

from .fdtd import FieldDftMonitor, PointProbe, SimulationGrid
from .geometry import MaterialMap
from .sources import DipoleSource, GaussianPulse
from .units import C_VACUUM_M_PER_S, UnitSystem


# ---------------------------------------------------------------------------
# Ringdown resonance extraction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResonancePeak:
    frequency: float  # c/a units
    q: float
    amplitude: float
    residual: float  # fit residual energy / bandpassed signal energy
    phase: float = 0.0

    @property
    def wavelength(self) -> float:
        return 1.0 / self.frequency


def _bilinear(arr: np.ndarray, x: float, y: float):
    """Bilinear sample of a 2D array at fractional cell-center coords."""
    i0 = min(max(int(math.floor(x)), 0), arr.shape[0] - 2)
    j0 = min(max(int(math.floor(y)), 0), arr.shape[1] - 2)
    fx, fy = x - i0, y - j0
    return (
        (1 - fx) * (1 - fy) * arr[i0, j0]
        + fx * (1 - fy) * arr[i0 + 1, j0]
        + (1 - fx) * fy * arr[i0, j0 + 1]
        + fx * fy * arr[i0 + 1, j0 + 1]
    )


def _analytic_bandpass(sig: np.ndarray, dt: float, f_lo: float, f_hi: float) -> np.ndarray:
    """Complex analytic signal containing only the [f_lo, f_hi] band."""
    spec = np.fft.fft(sig)
    freq = np.fft.fftfreq(sig.size, d=dt)
    mask = (freq >= f_lo) & (freq <= f_hi)
    spec = np.where(mask, spec, 0.0)
    return np.fft.ifft(2.0 * spec)


def find_resonances(
    series,
    dt: float,
    band: tuple[float, float],
    max_modes: int = 5,
    min_prominence: float = 6.0,
    max_residual: float = 0.5,
) -> list[ResonancePeak]:
    """Extract decaying modes from a post-turn-off probe series.

    Returns peaks sorted by amplitude, strongest first.  A candidate peak is
    dropped when the decaying-sinusoid fit leaves more than ``max_residual``
    of the bandpassed signal energy unexplained (e.g. pure noise), so a
    noise-only record yields an empty list.
    """
    s = np.asarray(series, dtype=np.float64)
    if s.size < 32:
        raise ValueError("series too short for resonance analysis")
    f_lo, f_hi = band
    nyquist = 0.5 / dt
    if not 0.0 <= f_lo < f_hi <= nyquist:
        raise ValueError("band must lie within (0, Nyquist)")

    power = np.abs(np.fft.rfft(s * np.hanning(s.size))) ** 2
    freqs = np.fft.rfftfreq(s.size, d=dt)
    in_band = (freqs >= f_lo) & (freqs <= f_hi)
    if not np.any(in_band):
        return []
    band_power = np.where(in_band, power, 0.0)
    floor = np.median(power[in_band])

    peak_idx, _ = signal.find_peaks(band_power, height=min_prominence * max(floor, 1e-300))
    order = np.argsort(band_power[peak_idx])[::-1][:max_modes]
    peak_idx = peak_idx[order]

    t = np.arange(s.size) * dt
    results: list[ResonancePeak] = []
    used: list[float] = []
    for pi in peak_idx:
        f_pk = freqs[pi]
        # Half-power width of the spectral peak sets the filter band.
        half = band_power[pi] / 2
        lo_i = pi
        while lo_i > 0 and band_power[lo_i] > half:
            lo_i -= 1
        hi_i = pi
        while hi_i < band_power.size - 1 and band_power[hi_i] > half:
            hi_i += 1
        df = max((freqs[hi_i] - freqs[lo_i]) * 1.5, 4.0 * (freqs[1] - freqs[0]))
        if any(abs(f_pk - u) < df for u in used):
            continue
        analytic = _analytic_bandpass(s, dt, max(f_pk - df, f_lo), min(f_pk + df, f_hi))
        # Skip filter edge transients.
        guard = max(s.size // 10, 8)
        seg = slice(guard, s.size - guard)
        env = np.abs(analytic[seg])
        if np.all(env < 1e-300):
            continue
        # Log-envelope line fit initializes the nonlinear fit.
        w = env / env.max()
        keep = w > 1e-3
        coef = np.polyfit(t[seg][keep], np.log(env[keep]), 1, w=w[keep])
        tau0 = -1.0 / coef[0] if coef[0] < 0 else t[-1] * 10
        phase = np.unwrap(np.angle(analytic[seg]))
        w0 = np.polyfit(t[seg], phase, 1)[0] / (2 * math.pi)

        x = np.real(analytic[seg])
        a0 = env.max()

        def model(p):
            amp, tau, f, ph = p
            return amp * np.exp(-t[seg] / tau) * np.cos(2 * math.pi * f * t[seg] + ph)

        def resid(p):
            return model(p) - x

        p0 = [a0, max(tau0, dt), abs(w0), float(phase[0] % (2 * math.pi))]
        try:
            sol = optimize.least_squares(
                resid,
                p0,
                bounds=([0, dt, f_lo, -10], [np.inf, np.inf, f_hi, 10]),
                max_nfev=2000,
            )
        except ValueError:
            continue
        amp, tau, f_fit, ph = sol.x
        res_frac = float(np.sum(sol.fun**2) / max(np.sum(x**2), 1e-300))
        if res_frac > max_residual or tau <= 0:
            continue
        omega = 2 * math.pi * f_fit
        results.append(
            ResonancePeak(
                frequency=float(f_fit),
                q=float(omega * tau / 2.0),
                amplitude=float(amp),
                residual=res_frac,
                phase=float(ph),
            )
        )
        used.append(f_pk)
    results.sort(key=lambda r: r.amplitude, reverse=True)
    return results


# ---------------------------------------------------------------------------
# Mode volume & Purcell arithmetic
# ---------------------------------------------------------------------------


def mode_volume(e_field, eps: np.ndarray, dx: float) -> float:
    """Mode volume from a cell-centered field snapshot, in a^dim units.

    ``e_field`` is a sequence of per-component arrays (complex or real)
    congruent with ``eps``; the energy density is eps sum_c |E_c|^2.
    """
    comps = [np.asarray(c) for c in e_field]
    if any(c.shape != eps.shape for c in comps):
        raise ValueError("field snapshot and eps map must have congruent shapes")
    dens = eps * sum(np.abs(c) ** 2 for c in comps)
    peak = float(dens.max())
    if peak <= 0.0:
        raise ValueError("field snapshot is identically zero")
    return float(dens.sum()) / peak * dx**eps.ndim


def mode_volume_normalized(v: float, lam: float, n: float, dim: int = 3) -> float:
    """Convert a mode volume to (lambda/n)^dim units."""
    return v / (lam / n) ** dim


def purcell_factor(q: float, v_mode: float, lam: float, n: float) -> float:
    """Peak cavity Purcell factor (3/(4 pi^2)) (lambda/n)^3 Q / V."""
    if min(q, v_mode, lam, n) <= 0:
        raise ValueError("all Purcell inputs must be positive")
    return 3.0 / (4.0 * math.pi**2) * (lam / n) ** 3 * q / v_mode


@dataclass(frozen=True)
class EnhancementInput:
    """Inputs of the emitter rate-enhancement formula."""

    f_cav: float
    f_pc: float
    eta_orientation: float  # squared field-dipole overlap at the emitter, in [0, 1]
    wavelength: float
    lambda_cav: float
    q: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.eta_orientation <= 1.0 + 1e-12:
            raise ValueError("orientation overlap must be in [0, 1]")
        if self.f_cav < 0 or self.f_pc < 0:
            raise ValueError("enhancement factors must be non-negative")
        if self.wavelength <= 0 or self.lambda_cav <= 0 or self.q <= 0:
            raise ValueError("wavelengths and Q must be positive")


def rate_enhancement(inp: EnhancementInput) -> float:
    """Total emission-rate change Gamma/Gamma0 for one emitter.

    Cavity term times spatial/orientation and Lorentzian spectral mismatch,
    plus the base crystal rate; reduces to f_cav + f_pc for a perfectly
    aligned resonant emitter.
    """
    detune = inp.wavelength / inp.lambda_cav - 1.0
    lorentz = 1.0 / (1.0 + 4.0 * inp.q**2 * detune**2)
    return inp.f_cav * inp.eta_orientation * lorentz + inp.f_pc


@dataclass(frozen=True)
class DecayRate:
    normalized: float  # c/a units
    per_second: float | None  # with a physical anchor


def cavity_decay_rate(lambda_cav: float, q: float, units: UnitSystem | None = None) -> DecayRate:
    """Cavity field decay rate kappa = pi c / (lambda Q)."""
    if lambda_cav <= 0 or q <= 0:
        raise ValueError("lambda_cav and Q must be positive")
    k_norm = math.pi / (lambda_cav * q)
    k_si = None
    if units is not None and units.anchored:
        lam_m = units.length_to_nm(lambda_cav) * 1e-9
        k_si = math.pi * C_VACUUM_M_PER_S / (lam_m * q)
    return DecayRate(normalized=k_norm, per_second=k_si)


def kappa_si(lambda_nm: float, q: float) -> float:
    """kappa in 1/s directly from a physical wavelength."""
    return math.pi * C_VACUUM_M_PER_S / (lambda_nm * 1e-9 * q)


@dataclass(frozen=True)
class WeakCouplingResult:
    is_weak: bool
    margin: float  # kappa / |g|; inf when g = 0


def weak_coupling_check(kappa: float, g: float) -> WeakCouplingResult:
    """True when the cavity decay dominates the emitter-cavity coupling."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    g = abs(g)
    if g == 0.0:
        return WeakCouplingResult(True, math.inf)
    return WeakCouplingResult(kappa > g, kappa / g)


def dipole_cavity_coupling(
    dipole_moment_cm: float, lambda_nm: float, n: float, v_mode_m3: float
) -> float:
    """Peak vacuum coupling rate |g| (rad/s) for a given dipole moment.

    Convenience beyond the core rate model: g = mu sqrt(omega / (2 hbar
    eps0 n^2 V)).  Inputs in SI (dipole moment in C m, volume in m^3).
    """
    from scipy import constants

    omega = 2 * math.pi * C_VACUUM_M_PER_S / (lambda_nm * 1e-9)
    return dipole_moment_cm * math.sqrt(
        omega / (2 * constants.hbar * constants.epsilon_0 * n * n * v_mode_m3)
    )


# ---------------------------------------------------------------------------
# Resonance workflow on a material map
# ---------------------------------------------------------------------------


@dataclass
class ResonanceMode:
    """Extracted cavity mode and derived figures of merit."""

    wavelength: float  # normalized (units of a)
    q: float
    field: dict  # cell-centered complex component arrays ("Ex", "Ey"[, "Ez"])
    eps: np.ndarray
    dx: float
    v_mode: float  # a^dim units
    polarization: str  # "x-dipole" or "y-dipole"
    kappa: DecayRate
    wavelength_nm: float | None = None
    amplitude: float = 0.0
    fit_residual: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def frequency(self) -> float:
        return 1.0 / self.wavelength

    def v_mode_normalized(self, n: float) -> float:
        return mode_volume_normalized(self.v_mode, self.wavelength, n, self.eps.ndim)

    def antinode_cell(self) -> tuple[int, ...]:
        dens = self.eps * sum(np.abs(c) ** 2 for c in self.field.values())
        return tuple(int(i) for i in np.unravel_index(np.argmax(dens), dens.shape))

    def field_at(self, comp: str, position, center) -> complex:
        """Bilinear sample of a mode component at a position relative to
        the crystal center (2D profiles)."""
        arr = self.field[comp]
        x = (position[0] + center[0]) / self.dx - 0.5
        y = (position[1] + center[1]) / self.dx - 0.5
        return _bilinear(arr, x, y)

    def eta_orientation(self, position, orientation, center) -> float:
        """Squared overlap of the mode field with a unit dipole at a point.

        Bilinear field sampling keeps mirror-symmetric positions exactly
        symmetric, independent of how the grid straddles the center.
        """
        u = np.asarray(orientation, dtype=np.float64)
        u = u / np.linalg.norm(u)
        comps = list(self.field.items())
        e_dot = sum(
            self.field_at(name, position, center) * w
            for (name, _), w in zip(comps, u)
        )
        e_max = math.sqrt(
            max(sum(np.abs(c) ** 2 for _, c in comps).max(), 1e-300)
        )
        return float(abs(e_dot) ** 2 / e_max**2)

    def to_json_dict(self, units: UnitSystem | None = None) -> dict:
        out = {
            "wavelength_norm": self.wavelength,
            "q": self.q,
            "v_mode_cells": self.v_mode / self.dx ** self.eps.ndim,
            "v_mode_norm": self.v_mode,
            "polarization": self.polarization,
            "kappa_norm": self.kappa.normalized,
            "kappa_per_s": self.kappa.per_second,
            "amplitude": self.amplitude,
            "fit_residual": self.fit_residual,
        }
        if units is not None and units.anchored:
            out["wavelength_nm"] = units.length_to_nm(self.wavelength)
        return out


def _colocate(grid_like_fields: dict, ndim: int) -> dict:
    """Average staggered E components to cell centers."""
    out = {}
    for name, arr in grid_like_fields.items():
        a = arr
        off_axis = {"Ex": (1, 2), "Ey": (0, 2), "Ez": (0, 1)}[name]
        for ax in off_axis:
            if ax >= ndim:
                continue
            lo = [slice(None)] * ndim
            hi = [slice(None)] * ndim
            lo[ax] = slice(0, a.shape[ax] - 1)
            hi[ax] = slice(1, a.shape[ax])
            a = 0.5 * (a[tuple(lo)] + a[tuple(hi)])
        out[name] = a
    return out


def extract_cavity_mode(
    material: MaterialMap,
    resolution: float | None = None,
    band: tuple[float, float] = (0.2, 0.36),
    courant: float = 0.5,
    pml=None,
    ring_time: float | None = None,
    units: UnitSystem | None = None,
    drive_orientation=(1.0, 0.0),
) -> ResonanceMode:
    """Two-pass cavity-mode extraction on a rasterized crystal.

    Pass 1 drives a broadband in-plane dipole at the defect and fits the
    ringdown at an off-center probe; pass 2 repeats the run accumulating the
    single-frequency field profile of the strongest mode.  Raises
    ``ValueError`` if no resonance survives the fit criteria.
    """
    from .fdtd import PmlSpec, run

    if pml is None:
        pml = PmlSpec()
    res = material.resolution if resolution is None else resolution
    f_mid = 0.5 * (band[0] + band[1])
    f_bw = max((band[1] - band[0]) / 4.0, 0.02)

    def fresh_grid():
        return SimulationGrid(material.eps, res, courant=courant, pml=pml)

    grid = fresh_grid()
    center = material.center[:2]
    src = DipoleSource(
        position=center,
        orientation=tuple(drive_orientation),
        envelope=GaussianPulse(f_mid, f_bw),
    )
    probe_pos = (center[0] + 0.21, center[1] + 0.13)
    probe = PointProbe("ring", "Ex" if abs(drive_orientation[0]) >= abs(drive_orientation[1]) else "Ey", probe_pos)

    t_off = src.envelope.turn_off_time
    if ring_time is None:
        ring_time = 60.0 / (band[1] - band[0])
    n_steps = int((t_off + ring_time) / grid.dt)
    run(grid, [src], [probe], n_steps)

    tail_start = int(t_off / grid.dt) + 1
    tail = probe.series()[tail_start:]
    peaks = find_resonances(tail, grid.dt, band)
    if not peaks:
        raise ValueError("no resonance found in the requested band")
    best = peaks[0]

    # Pass 2: accumulate the complex mode profile at the fitted frequency.
    grid2 = fresh_grid()
    dft = FieldDftMonitor(
        "mode",
        components=("Ex", "Ey") if grid2.ndim == 2 else ("Ex", "Ey", "Ez"),
        frequencies=(best.frequency,),
        t_start=t_off,
    )
    run(grid2, [src], [dft], n_steps)
    raw = {c: dft.amplitude(c, best.frequency) for c in dft.components}
    cfields = _colocate(raw, grid2.ndim)

    # Normalize so max(eps |E|^2) = 1.
    dens = material.eps * sum(np.abs(c) ** 2 for c in cfields.values())
    scale = math.sqrt(float(dens.max()))
    if scale <= 0:
        raise ValueError("mode profile is empty")
    cfields = {k: v / scale for k, v in cfields.items()}

    v = mode_volume(list(cfields.values()), material.eps, grid2.dx)
    pol = "x-dipole" if np.abs(cfields["Ex"]).max() >= np.abs(cfields["Ey"]).max() else "y-dipole"
    lam = best.wavelength
    mode = ResonanceMode(
        wavelength=lam,
        q=best.q,
        field=cfields,
        eps=material.eps,
        dx=grid2.dx,
        v_mode=v,
        polarization=pol,
        kappa=cavity_decay_rate(lam, best.q, units),
        wavelength_nm=units.length_to_nm(lam) if units and units.anchored else None,
        amplitude=best.amplitude,
        fit_residual=best.residual,
        diagnostics={"n_steps": n_steps, "band": band, "peaks_found": len(peaks)},
    )
    return mode


# ---------------------------------------------------------------------------
# Collection efficiency
# ---------------------------------------------------------------------------


def collection_efficiency(
    e_plane: dict,
    wavelength: float,
    numerical_aperture: float,
    dx: float,
) -> float:
    """Fraction of upward radiated power captured by an objective.

    ``e_plane`` holds complex in-plane field components ("Ex", "Ey")
    sampled on a uniform plane above the structure (all radiation crossing
    it propagates upward).  The field is decomposed into plane waves; power
    inside the collection cone |k_par| <= NA k0 is ratioed against all
    propagating upward power, so NA = 1 gives 1 by definition.
    """
    if not 0.0 < numerical_aperture <= 1.0:
        raise ValueError("numerical aperture must be in (0, 1]")
    ex = np.asarray(e_plane["Ex"], dtype=np.complex128)
    ey = np.asarray(e_plane["Ey"], dtype=np.complex128)
    if ex.shape != ey.shape or ex.ndim != 2:
        raise ValueError("plane components must be congruent 2D arrays")
    k0 = 2 * math.pi / wavelength
    fx = np.fft.fftfreq(ex.shape[0], d=dx) * 2 * math.pi
    fy = np.fft.fftfreq(ex.shape[1], d=dx) * 2 * math.pi
    kx = fx[:, None]
    ky = fy[None, :]
    kpar2 = kx**2 + ky**2
    ex_k = np.fft.fft2(ex)
    ey_k = np.fft.fft2(ey)
    prop = kpar2 < k0**2 * (1 - 1e-9)
    kz = np.sqrt(np.maximum(k0**2 - kpar2, 0.0))
    # Transversality reconstructs Ez; upward flux per plane wave is then
    # |E|^2 kz / k0.
    with np.errstate(invalid="ignore", divide="ignore"):
        ez_k = np.where(prop, -(kx * ex_k + ky * ey_k) / np.where(kz > 0, kz, 1.0), 0.0)
    w = (np.abs(ex_k) ** 2 + np.abs(ey_k) ** 2 + np.abs(ez_k) ** 2) * kz / k0
    w = np.where(prop, w, 0.0)
    total = float(w.sum())
    if total <= 0.0:
        raise ValueError("no propagating upward power on the plane")
    cone = kpar2 <= (numerical_aperture * k0) ** 2
    return float(w[cone].sum()) / total
