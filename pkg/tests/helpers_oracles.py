"""Shared oracle computations used by module tests and the acceptance suite.

Every function here is an independent reference: analytic formulas,
larger-domain reference runs, or Richardson extrapolation from refined
grids.  None of them reuse the code path they are checking.
"""

from __future__ import annotations

import math

import numpy as np

from pcsim.fdtd import PmlSpec, PointProbe, SimulationGrid, run
from pcsim.sources import DipoleSource, FluxSurface, GaussianPulse, radiated_power


def pml_echo_level(cells_per_wavelength: float, resolution: int = 20) -> float:
    """Boundary echo amplitude relative to the incident pulse.

    Oracle: the same dipole in a domain 4x larger, where no boundary echo
    can have returned to the probe inside the comparison window.
    """
    lam = cells_per_wavelength / resolution
    f0 = 1.0 / lam
    bw = 0.18 * f0
    n_steps = 1100
    series = {}
    for name, shape in (("small", (120, 120)), ("big", (480, 480))):
        g = SimulationGrid(np.ones(shape), resolution=resolution, pml=PmlSpec())
        c = (shape[0] / 2 / resolution, shape[1] / 2 / resolution)
        src = DipoleSource(position=c, orientation=(1, 0), envelope=GaussianPulse(f0, bw))
        pr = PointProbe("p", "Ex", (c[0] + 1.2, c[1]))
        run(g, [src], [pr], n_steps)
        series[name] = pr.series()
    echo = np.max(np.abs(series["small"] - series["big"]))
    incident = np.max(np.abs(series["big"]))
    return float(echo / incident)


def vacuum_dipole_power_2d(resolution: int, f0: float = 0.8):
    """Radiated power of the standard 2D vacuum test dipole."""
    extent = 6.0
    n = int(extent * resolution)
    g = SimulationGrid(np.ones((n, n)), resolution=resolution, pml=PmlSpec())
    c = (extent / 2, extent / 2)
    src = DipoleSource(position=c, orientation=(1, 0), envelope=GaussianPulse(f0, 0.15 * f0))
    box = FluxSurface((c[0] - 1.0, c[1] - 1.0), (c[0] + 1.0, c[1] + 1.0))
    return radiated_power(g, src, box, frequencies=[f0])


def vacuum_dipole_power_3d(resolution: int, eps_value: float = 1.0, f0: float = 0.8):
    """Radiated power of the standard 3D dipole in a homogeneous medium.

    The absorbing layer keeps a fixed cell count, so its physical depth
    shrinks with refinement; the measured echo is part of the
    discretization error budget handled by the extrapolation.
    """
    box_half, gap = 0.55, 0.35
    half = box_half + gap + 10.0 / resolution
    n = 2 * math.ceil(half * resolution)
    ext = n / resolution
    g = SimulationGrid(np.full((n, n, n), eps_value), resolution=resolution, pml=PmlSpec())
    c = (ext / 2,) * 3
    src = DipoleSource(
        position=c, orientation=(1, 0, 0), envelope=GaussianPulse(f0, 0.15 * f0)
    )
    box = FluxSurface(tuple(x - box_half for x in c), tuple(x + box_half for x in c))
    return radiated_power(g, src, box, frequencies=[f0])


def richardson(p_coarse: float, p_mid: float, p_fine: float):
    """Extrapolated limit and observed order from a 2x refinement triple."""
    order = math.log2(abs(p_coarse - p_mid) / abs(p_mid - p_fine))
    p_ext = p_fine + (p_fine - p_mid) / (2.0**order - 1.0)
    return p_ext, order


def synthetic_ringdown(
    q: float,
    f0: float,
    dt: float,
    n_decay_times: float,
    noise: float = 0.0,
    seed: int = 0,
):
    """Decaying sinusoid with a known Q, the ringdown-fit oracle."""
    omega = 2 * math.pi * f0
    tau_amp = 2.0 * q / omega
    t_end = n_decay_times * tau_amp
    t = np.arange(0.0, t_end, dt)
    s = np.exp(-t / tau_amp) * np.cos(omega * t + 0.3)
    if noise > 0:
        s = s + np.random.default_rng(seed).normal(0.0, noise, s.size)
    return t, s
