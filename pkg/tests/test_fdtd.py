import math

import numpy as np
import pytest

from pcsim.fdtd import (
    EnergyMonitor,
    PmlSpec,
    PointProbe,
    SimulationGrid,
    component_shape,
    run,
)
from pcsim.sources import DipoleSource, GaussianPulse, Impulse

from helpers_oracles import pml_echo_level


def test_component_shapes_follow_yee_staggering():
    cells = (10, 14, 18)
    assert component_shape("Ex", cells) == (10, 15, 19)
    assert component_shape("Ey", cells) == (11, 14, 19)
    assert component_shape("Ez", cells) == (11, 15, 18)
    assert component_shape("Hx", cells) == (11, 14, 18)
    assert component_shape("Hy", cells) == (10, 15, 18)
    assert component_shape("Hz", cells) == (10, 14, 19)

    g2 = SimulationGrid(np.ones((12, 9)), resolution=10, pml=None)
    assert g2.fields["Ex"].shape == (12, 10)
    assert g2.fields["Ey"].shape == (13, 9)
    assert g2.fields["Hz"].shape == (12, 9)


def test_courant_violation_rejected_at_construction():
    with pytest.raises(ValueError, match="Courant"):
        SimulationGrid(np.ones((16, 16)), resolution=10, courant=0.8)
    with pytest.raises(ValueError, match="Courant"):
        SimulationGrid(np.ones((16, 16, 16)), resolution=10, courant=0.6, pml=None)
    # The 2D bound itself is fine.
    SimulationGrid(np.ones((16, 16)), resolution=10, courant=1 / math.sqrt(2), pml=None)


def test_eps_validation():
    bad = np.ones((16, 16))
    bad[3, 4] = 0.5
    with pytest.raises(ValueError, match=">= 1"):
        SimulationGrid(bad, resolution=10, pml=None)
    bad[3, 4] = np.inf
    with pytest.raises(ValueError, match="finite"):
        SimulationGrid(bad, resolution=10, pml=None)


def test_zero_state_is_fixed_point():
    g = SimulationGrid(np.ones((24, 24)), resolution=10, pml=PmlSpec(thickness=4))
    for _ in range(50):
        g.step()
    assert all(np.all(f == 0.0) for f in g.fields.values())


def test_point_probe_sees_impulse_immediately():
    g = SimulationGrid(np.ones((30, 30)), resolution=10, pml=None)
    src = DipoleSource(
        position=(1.5, 1.5), orientation=(1, 0), envelope=Impulse(width=g.dt)
    )
    pr = PointProbe("p", "Ex", (1.5, 1.5))
    rec = run(g, [src], [pr], 3)
    assert pr.series()[0] != 0.0


def test_identical_runs_are_bit_identical():
    def one():
        g = SimulationGrid(np.ones((40, 40)), resolution=10, pml=PmlSpec(thickness=4))
        src = DipoleSource(
            position=(2.0, 2.0), orientation=(1, 0), envelope=GaussianPulse(0.5, 0.1)
        )
        pr = PointProbe("p", "Ey", (2.7, 2.2))
        run(g, [src], [pr], 300)
        return pr.series()

    a, b = one(), one()
    assert np.array_equal(a, b)


def test_linearity_exact_field_doubling():
    def fields_for(amp):
        g = SimulationGrid(np.ones((40, 40)), resolution=10, pml=PmlSpec(thickness=4))
        src = DipoleSource(
            position=(2.0, 2.0),
            orientation=(1, 0),
            envelope=GaussianPulse(0.5, 0.1),
            amplitude=amp,
        )
        for _ in range(200):
            g.step([src])
        return g.fields

    f1 = fields_for(1.0)
    f2 = fields_for(2.0)
    for c in f1:
        assert np.array_equal(2.0 * f1[c], f2[c])


def test_plane_pulse_group_delay():
    # Gaussian pulse launched by a line source; envelope-peak arrival
    # separation between two probes matches distance / c within 1%.
    res = 20
    g = SimulationGrid(np.ones((260, 30)), resolution=res, pml=PmlSpec())

    class Line:
        sigma_t = 1.0 / (2 * math.pi * 0.1)
        t0 = 5 * sigma_t

        def inject(self, grid, t):
            w = math.exp(-0.5 * ((t - self.t0) / self.sigma_t) ** 2) * math.cos(
                2 * math.pi * 0.5 * (t - self.t0)
            )
            grid.fields["Ey"][40, :] += np.float32(w * grid.dt)

    p1 = PointProbe("p1", "Ey", (4.0, 0.75))
    p2 = PointProbe("p2", "Ey", (10.0, 0.75))
    rec = run(g, [Line()], [p1, p2], 1500)

    from scipy.signal import hilbert

    def peak_time(series):
        env = np.abs(hilbert(series))
        i = int(np.argmax(env))
        # Parabolic refinement around the sampled maximum.
        a, b, c = env[i - 1], env[i], env[i + 1]
        frac = 0.5 * (a - c) / (a - 2 * b + c)
        return (i + 1 + frac) * g.dt

    delay = peak_time(p2.series()) - peak_time(p1.series())
    expected = 6.0  # distance / c in normalized units
    assert delay == pytest.approx(expected, rel=0.01)


def test_energy_conservation_closed_box():
    # PEC box, no PML: after source turn-off the discrete energy functional
    # must hold flat for 10,000 steps.
    g = SimulationGrid(np.ones((60, 60)), resolution=20, pml=None)
    src = DipoleSource(
        position=(1.5, 1.5), orientation=(1.0, 0.0), envelope=GaussianPulse(0.27, 0.08)
    )
    n_drive = int(src.envelope.turn_off_time / g.dt) + 10
    run(g, [src], [], n_drive)
    em = EnergyMonitor("U", mode="symmetrized")
    rec = run(g, [], [em], 10_000)
    s = em.series()
    drift = (s.max() - s.min()) / s[0]
    assert drift < 1e-3


def test_pml_echo_below_minus_40_db():
    for cells_per_wavelength in (10, 20, 40):
        echo = pml_echo_level(cells_per_wavelength)
        assert echo < 0.01, f"echo {echo:.2e} at {cells_per_wavelength} cells/wl"


def test_reciprocity_swapped_source_and_probe():
    # Arbitrary eps map; swapping a point current source and a point E
    # probe of matching components reproduces the waveform.  Double
    # precision isolates the discrete-reciprocity identity from float32
    # rounding.
    rng = np.random.default_rng(3)
    eps = 1.0 + 2.5 * rng.random((80, 70))

    def waveform(src_pos, src_comp, prb_pos, prb_comp):
        g = SimulationGrid(eps, resolution=16, pml=PmlSpec(thickness=6), dtype=np.float64)
        env = GaussianPulse(0.35, 0.08)

        class Comp:
            def inject(self, grid, t):
                idx = grid.snap(src_comp, src_pos)
                grid.inject_current(src_comp, idx, env.waveform(t))

        pr = PointProbe("p", prb_comp, prb_pos)
        run(g, [Comp()], [pr], 900)
        return pr.series()

    a = waveform((1.8, 2.2), "Ex", (3.1, 2.6), "Ey")
    b = waveform((3.1, 2.6), "Ey", (1.8, 2.2), "Ex")
    scale = np.max(np.abs(a))
    assert np.max(np.abs(a - b)) / scale < 1e-6


def test_monitor_out_of_bounds_rejected_before_stepping():
    from pcsim.fdtd import FluxMonitor

    g = SimulationGrid(np.ones((40, 40)), resolution=10, pml=PmlSpec(thickness=4))
    bad = FluxMonitor("f", (0.1, 0.1), (3.9, 3.9))  # overlaps the PML
    with pytest.raises(ValueError, match="PML-free interior"):
        run(g, [], [bad], 5)


def test_pml_spec_invariants():
    with pytest.raises(ValueError):
        PmlSpec(thickness=3)
    with pytest.raises(ValueError):
        PmlSpec(order=0)
    with pytest.raises(ValueError):
        PmlSpec(reflection=2.0)
