"""Pulsed single-emitter photon streams and correlation/lifetime analysis.

Simulates the two-detector intensity-interferometer measurement: a pulsed
two-level emitter (at most one photon per pulse) or a Poissonian reference
source emits into a 50/50 splitter with uncorrelated Poissonian background
on both channels.  Analysis covers start-stop coincidence histograms, the
zero-delay autocorrelation g2(0), instrument-response-aware lifetime fits,
and Lorentzian line fits for quality factors.

All times are picoseconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special


@dataclass(frozen=True)
class EmitterModel:
    """Two-level (or Poissonian-reference) pulsed emitter.

    ``statistics='single'``: per pulse one Bernoulli(excitation_probability)
    excitation, at most one photon.  ``statistics='poissonian'``: photon
    number per pulse is Poisson with mean ``excitation_probability``.
    ``background_rate_hz`` is the total Poissonian background before the
    splitter; each detector sees half.
    """

    lifetime_ps: float
    excitation_probability: float = 1.0
    detection_efficiency: float = 1.0
    background_rate_hz: float = 0.0
    statistics: str = "single"

    def __post_init__(self) -> None:
        if self.lifetime_ps <= 0:
            raise ValueError("lifetime must be positive")
        if not 0.0 <= self.excitation_probability <= 1.0 and self.statistics == "single":
            raise ValueError("excitation probability must be in [0, 1]")
        if not 0.0 <= self.detection_efficiency <= 1.0:
            raise ValueError("detection efficiency must be in [0, 1]")
        if self.background_rate_hz < 0:
            raise ValueError("background rate must be non-negative")
        if self.statistics not in ("single", "poissonian"):
            raise ValueError("statistics must be 'single' or 'poissonian'")


@dataclass(frozen=True)
class PulseTrain:
    repetition_ps: float = 13_000.0
    pulse_count: int | None = None
    jitter_ps: float = 0.0

    def __post_init__(self) -> None:
        if self.repetition_ps <= 0:
            raise ValueError("repetition period must be positive")
        if self.jitter_ps < 0:
            raise ValueError("jitter must be non-negative")


@dataclass
class PhotonStreams:
    """Sorted detection timestamps (ps) on the two detector channels."""

    channel_1: np.ndarray
    channel_2: np.ndarray
    duration_ps: float
    n_pulses: int
    seed: int

    def swapped(self) -> "PhotonStreams":
        return PhotonStreams(
            self.channel_2, self.channel_1, self.duration_ps, self.n_pulses, self.seed
        )

    def translated(self, offset_ps: float) -> "PhotonStreams":
        return PhotonStreams(
            self.channel_1 + offset_ps,
            self.channel_2 + offset_ps,
            self.duration_ps,
            self.n_pulses,
            self.seed,
        )


def simulate_photon_stream(
    model: EmitterModel,
    train: PulseTrain,
    duration_ps: float,
    seed: int,
) -> PhotonStreams:
    """Generate seeded detection streams for the split-detector setup.

    Per pulse: excitation draw, exponential emission delay, detection draw,
    then a fair channel split; plus independent Poissonian background on
    each channel at half the total background rate.  Deterministic for a
    fixed seed.
    """
    if duration_ps <= 0:
        raise ValueError("duration must be positive")
    n = int(duration_ps // train.repetition_ps)
    if train.pulse_count is not None:
        n = min(n, train.pulse_count)
    rng = np.random.default_rng(seed)

    pulse_t = np.arange(n) * train.repetition_ps
    if train.jitter_ps > 0:
        pulse_t = pulse_t + rng.normal(0.0, train.jitter_ps, n)

    if model.statistics == "single":
        excited = rng.random(n) < model.excitation_probability
        delays = rng.exponential(model.lifetime_ps, n)
        emit_t = pulse_t[excited] + delays[excited]
    else:
        counts = rng.poisson(model.excitation_probability, n)
        emit_t = np.repeat(pulse_t, counts) + rng.exponential(
            model.lifetime_ps, int(counts.sum())
        )
    detected = rng.random(emit_t.size) < model.detection_efficiency
    emit_t = emit_t[detected]
    to_ch1 = rng.random(emit_t.size) < 0.5

    ch = [emit_t[to_ch1], emit_t[~to_ch1]]
    rate_per_channel = model.background_rate_hz / 2.0
    for k in range(2):
        n_bg = rng.poisson(rate_per_channel * duration_ps * 1e-12)
        ch[k] = np.concatenate([ch[k], rng.random(n_bg) * duration_ps])
    return PhotonStreams(
        channel_1=np.sort(ch[0]),
        channel_2=np.sort(ch[1]),
        duration_ps=duration_ps,
        n_pulses=n,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Coincidence histogram
# ---------------------------------------------------------------------------


@dataclass
class CoincidenceHistogram:
    bin_width_ps: float
    window_ps: float
    counts: np.ndarray  # int counts per bin over [-window, +window)
    n_starts: int
    n_pairs: int
    scheme: str

    def __post_init__(self) -> None:
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @property
    def bin_centers(self) -> np.ndarray:
        n = self.counts.size
        return (np.arange(n) + 0.5) * self.bin_width_ps - self.window_ps

    def to_rows(self):
        return zip(self.bin_centers, self.counts)


def hbt_histogram(
    streams: PhotonStreams,
    bin_width_ps: float,
    window_ps: float,
    scheme: str = "start-stop",
) -> CoincidenceHistogram:
    """Binned start-stop delay histogram over [-window, +window).

    ``start-stop`` emulates the hardware scheme: channel 2 carries a
    +window delay line and each channel-1 start is paired with the nearest
    subsequent delayed channel-2 stop, which covers both delay signs.
    ``full`` pairs every event combination within the window.  The window
    must be an integer multiple of the bin width.
    """
    if streams.channel_1.size == 0 or streams.channel_2.size == 0:
        raise ValueError("both detector channels must contain events")
    n_bins_half = window_ps / bin_width_ps
    if abs(n_bins_half - round(n_bins_half)) > 1e-9:
        raise ValueError("window must be an integer multiple of the bin width")
    n_bins = 2 * int(round(n_bins_half))
    edges = np.linspace(-window_ps, window_ps, n_bins + 1)

    t1 = streams.channel_1
    t2 = streams.channel_2
    if scheme == "start-stop":
        shifted = t2 + window_ps
        idx = np.searchsorted(shifted, t1, side="left")
        valid = idx < shifted.size
        delays = shifted[idx[valid]] - t1[valid] - window_ps
        delays = delays[delays < window_ps]
    elif scheme == "full":
        lo = np.searchsorted(t2, t1 - window_ps, side="left")
        hi = np.searchsorted(t2, t1 + window_ps, side="left")
        parts = [t2[a:b] - t for t, a, b in zip(t1, lo, hi)]
        delays = np.concatenate(parts) if parts else np.zeros(0)
    else:
        raise ValueError("scheme must be 'start-stop' or 'full'")

    counts, _ = np.histogram(delays, bins=edges)
    return CoincidenceHistogram(
        bin_width_ps=bin_width_ps,
        window_ps=window_ps,
        counts=counts.astype(np.int64),
        n_starts=int(t1.size),
        n_pairs=int(delays.size),
        scheme=scheme,
    )


# ---------------------------------------------------------------------------
# g2(0) estimation
# ---------------------------------------------------------------------------


@dataclass
class G2Result:
    value: float  # raw estimate: background pedestal included (not subtracted)
    sigma: float
    corrected: float  # exponential-peak areas only, pedestal removed
    mode: str  # "fit" or "area"
    tau_ps: float | None
    peak_areas: dict
    warning: str | None = None


def g2_zero(hist: CoincidenceHistogram, repetition_ps: float) -> G2Result:
    """Zero-delay autocorrelation from peak areas of a pulsed histogram.

    The raw estimate (``value``) sums counts in full +-T/2 windows around
    each peak, background pedestal included (no background subtraction),
    and takes central over mean side-peak area with Poisson errors.  A
    two-sided-exponential fit with one shared decay constant over a flat
    pedestal supplies the reported lifetime, the overlap diagnostic, and a
    background-``corrected`` estimate from the exponential areas alone.
    When peaks overlap (fitted tau > T/3) the fit areas are unreliable and
    only the window sums are used, with a warning.
    """
    t = hist.bin_centers
    y = hist.counts.astype(np.float64)
    k_max = int(math.floor((hist.window_ps - repetition_ps / 2) / repetition_ps))
    if k_max < 3:
        raise ValueError("window must cover at least 3 side peaks per side")
    ks = np.arange(-k_max, k_max + 1)

    # Raw areas: direct window sums (unbiased, Poisson-clean).
    areas = {}
    for k in ks:
        m = np.abs(t - k * repetition_ps) < repetition_ps / 2
        areas[int(k)] = float(np.sum(y[m]))

    # Shape fit: shared tau, per-peak amplitudes, flat pedestal.
    side_mask = np.abs(t - repetition_ps) < repetition_ps / 2
    ts, ys = t[side_mask] - repetition_ps, y[side_mask]
    tau0 = float(np.sum(np.abs(ts) * ys) / max(np.sum(ys), 1.0)) or hist.bin_width_ps

    def model(params):
        tau = params[0]
        base = params[1]
        amps = params[2:]
        out = np.full_like(t, base)
        for a, k in zip(amps, ks):
            out += a * np.exp(-np.abs(t - k * repetition_ps) / max(tau, 1e-6))
        return out

    a0 = [max(float(np.max(y[np.abs(t - k * repetition_ps) < repetition_ps / 2])), 0.1)
          for k in ks]
    p0 = np.array([max(tau0, hist.bin_width_ps), 0.0] + a0)
    lower = np.array([hist.bin_width_ps / 10, 0.0] + [0.0] * len(ks))
    upper = np.array([repetition_ps * 2, np.inf] + [np.inf] * len(ks))
    sol = optimize.least_squares(
        lambda p: model(p) - y, p0, bounds=(lower, upper), max_nfev=4000
    )
    tau = float(sol.x[0])
    amps = sol.x[2:]

    warning = None
    overlap = tau > repetition_ps / 3
    if overlap:
        warning = "peaks overlap (tau > T/3); fit areas unreliable, using window sums"
        corrected = float("nan")
        mode = "area"
    else:
        damp = 1.0 - math.exp(-repetition_ps / (2.0 * tau))
        peak_only = {
            int(k): float(2.0 * a * tau / hist.bin_width_ps * damp)
            for k, a in zip(ks, amps)
        }
        side_peak_mean = float(np.mean([peak_only[int(k)] for k in ks if k != 0]))
        corrected = peak_only[0] / side_peak_mean if side_peak_mean > 0 else float("nan")
        mode = "fit"

    side = np.array([areas[int(k)] for k in ks if k != 0])
    central = areas[0]
    side_mean = float(side.mean())
    if side_mean <= 0:
        raise ValueError("side peaks carry no counts")
    g2 = central / side_mean
    sigma = math.sqrt(
        (central + 1.0) / side_mean**2
        + (central / side_mean**2) ** 2 * side.sum() / side.size**2
    )
    return G2Result(
        value=float(g2),
        sigma=float(sigma),
        corrected=float(corrected),
        mode=mode,
        tau_ps=tau,
        peak_areas=areas,
        warning=warning,
    )


# ---------------------------------------------------------------------------
# Lifetime fitting
# ---------------------------------------------------------------------------


def _exp_gauss(t, tau, sigma, t0):
    """Exponential decay (unit-area density) convolved with a Gaussian
    instrument response, numerically stable on both tails."""
    u = (t - t0) / tau
    if sigma <= 0:
        return np.where(t >= t0, np.exp(-np.clip(u, -700, 700)), 0.0)
    v = sigma / tau
    z = (v * v - u) / (v * math.sqrt(2.0))
    # For z >= 0 use erfcx to avoid erfc underflow; for z < 0 erfc is O(1)
    # and the exponential prefactor is what decays.
    z_pos = np.maximum(z, 0.0)
    expo_pos = v * v / 2.0 - u - z_pos * z_pos
    pos = 0.5 * special.erfcx(z_pos) * np.exp(np.clip(expo_pos, -700, 700))
    neg = 0.5 * special.erfc(z) * np.exp(np.clip(v * v / 2.0 - u, -700, 700))
    return np.where(z >= 0, pos, neg)


@dataclass
class LifetimeFit:
    tau_ps: float
    tau_err_ps: float
    t0_ps: float
    amplitude: float
    floor: float
    ok: bool
    diagnostics: dict = field(default_factory=dict)


def fit_lifetime(
    data,
    bin_width_ps: float = 50.0,
    irf_width_ps: float = 50.0,
    repetition_ps: float | None = None,
    t_start_ps: float | None = None,
) -> LifetimeFit:
    """Fit a decay trace or timestamp list with an IRF-convolved exponential.

    ``data`` is either raw emission timestamps (1D array) or a pre-binned
    (t_centers, counts) pair.  ``irf_width_ps`` is the FWHM of the Gaussian
    instrument response.  With ``repetition_ps`` set, wrapped contributions
    of earlier pulses are added, which matters when the lifetime is not
    small against the repetition period.  Poisson maximum likelihood on
    binned counts; errors from the observed information.
    """
    if isinstance(data, tuple):
        t, y = np.asarray(data[0], dtype=np.float64), np.asarray(data[1], dtype=np.float64)
    else:
        ts = np.asarray(data, dtype=np.float64)
        if ts.size < 50:
            raise ValueError("need at least 50 timestamps to fit")
        t_hi = repetition_ps if repetition_ps else float(ts.max()) + bin_width_ps
        edges = np.arange(0.0, t_hi + bin_width_ps, bin_width_ps)
        y, _ = np.histogram(ts, bins=edges)
        y = y.astype(np.float64)
        t = 0.5 * (edges[:-1] + edges[1:])
    if t.size < 10:
        raise ValueError("trace must span at least 10 bins")
    span = t[-1] - t[0]
    sigma_irf = irf_width_ps / 2.3548200450309493  # FWHM -> sigma

    total = float(y.sum())
    if total <= 0:
        return LifetimeFit(0.0, 0.0, 0.0, 0.0, 0.0, False, {"reason": "empty trace"})

    # Moment init: mean residual time after the peak.
    ipk = int(np.argmax(y))
    tail = y[ipk:]
    tt = t[ipk:]
    tau0 = float(np.sum((tt - t[ipk]) * tail) / max(np.sum(tail), 1.0))
    if repetition_ps and tau0 > 0.15 * span:
        # Wrapped decays flatten the trace; undo the moment bias of a
        # truncated exponential to get a usable starting point.
        tau0 = span * 0.6
    tau0 = min(max(tau0, bin_width_ps / 2), span * 3)
    p0 = np.array([math.log(tau0), t[ipk] - tau0 / 4, math.log(max(total, 1.0)), -5.0])

    wraps = range(0, 5) if repetition_ps else (0,)

    def rates(p):
        tau = math.exp(min(p[0], 30.0))
        t0 = p[1]
        amp = math.exp(min(p[2], 60.0))
        floor = math.exp(min(p[3], 30.0)) * total / t.size
        lam = np.full_like(t, floor)
        for k in wraps:
            shift = k * repetition_ps if repetition_ps else 0.0
            lam = lam + amp * bin_width_ps / tau * _exp_gauss(t + shift, tau, sigma_irf, t0)
        return np.maximum(lam, 1e-12)

    def nll(p):
        lam = rates(p)
        return float(np.sum(lam - y * np.log(lam)))

    sol = optimize.minimize(nll, p0, method="Powell",
                            options={"maxiter": 8000, "xtol": 1e-8, "ftol": 1e-10})
    sol = optimize.minimize(nll, sol.x, method="Nelder-Mead",
                            options={"maxiter": 4000, "xatol": 1e-7, "fatol": 1e-10})
    p = sol.x
    tau = math.exp(p[0])

    # Observed information for the tau error via central differences in
    # log-tau; step sized above optimizer noise.
    h = 0.02
    f0 = nll(p)
    fp = nll(p + np.array([h, 0, 0, 0]))
    fm = nll(p - np.array([h, 0, 0, 0]))
    curv = (fp - 2 * f0 + fm) / h**2
    tau_err = tau / math.sqrt(curv) if curv > 0 else float("nan")

    lam = rates(p)
    resid = float(np.sum((y - lam) ** 2) / max(np.sum((y - y.mean()) ** 2), 1e-300))
    decaying = tau < span * 2.5
    ok = decaying and resid < 0.9
    diagnostics = {
        "success": bool(sol.success),
        "residual_ratio": resid,
        "n_bins": int(t.size),
        "counts": total,
    }
    if not decaying:
        diagnostics["reason"] = "no decaying component in the trace"
    return LifetimeFit(
        tau_ps=float(tau),
        tau_err_ps=float(tau_err),
        t0_ps=float(p[1]),
        amplitude=float(math.exp(p[2])),
        floor=float(math.exp(p[3]) * total / t.size),
        ok=ok,
        diagnostics=diagnostics,
    )


def lifetime_ratio(tau_reference_ps, tau_ps, tau_reference_err: float = 0.0, tau_err: float = 0.0):
    """Rate-change factor from two lifetimes, with propagated error."""
    if tau_reference_ps <= 0 or tau_ps <= 0:
        raise ValueError("lifetimes must be positive")
    f = tau_reference_ps / tau_ps
    err = f * math.sqrt(
        (tau_reference_err / tau_reference_ps) ** 2 + (tau_err / tau_ps) ** 2
    )
    return f, err


# ---------------------------------------------------------------------------
# Lorentzian line fitting
# ---------------------------------------------------------------------------


@dataclass
class LorentzianFit:
    lambda_center: float
    q: float
    amplitude: float
    baseline: float
    lambda_err: float
    q_err: float
    residual_norm: float
    ok: bool


def fit_lorentzian(wavelengths, amplitudes) -> LorentzianFit:
    """Least-squares Lorentzian line fit A / (1 + 4 Q^2 (l/lc - 1)^2) + b."""
    lam = np.asarray(wavelengths, dtype=np.float64)
    y = np.asarray(amplitudes, dtype=np.float64)
    if lam.size != y.size or lam.size < 5:
        raise ValueError("need matching wavelength/amplitude arrays, >= 5 points")
    ipk = int(np.argmax(y))
    lc0 = float(lam[ipk])
    base0 = float(np.percentile(y, 10))
    a0 = float(y[ipk] - base0)
    if a0 <= 0:
        return LorentzianFit(lc0, 0.0, 0.0, base0, 0.0, 0.0, 1.0, False)
    # FWHM estimate from half-max crossings.
    half = base0 + a0 / 2
    above = y >= half
    idx = np.nonzero(above)[0]
    width = abs(lam[idx[-1]] - lam[idx[0]]) if idx.size >= 2 else abs(lam[1] - lam[0])
    q0 = lc0 / max(width, 1e-12)

    def f(l, a, lc, q, b):
        return a / (1.0 + 4.0 * q * q * (l / lc - 1.0) ** 2) + b

    try:
        popt, pcov = optimize.curve_fit(
            f, lam, y, p0=[a0, lc0, q0, base0],
            maxfev=20000,
        )
    except RuntimeError:
        return LorentzianFit(lc0, q0, a0, base0, 0.0, 0.0, 1.0, False)
    a, lc, q, b = popt
    perr = np.sqrt(np.maximum(np.diag(pcov), 0.0))
    resid = float(
        np.sum((f(lam, *popt) - y) ** 2) / max(np.sum((y - y.mean()) ** 2), 1e-300)
    )
    ok = q > 0 and resid < 0.5
    return LorentzianFit(
        lambda_center=float(lc),
        q=float(abs(q)),
        amplitude=float(a),
        baseline=float(b),
        lambda_err=float(perr[1]),
        q_err=float(perr[2]),
        residual_norm=resid,
        ok=ok,
    )
