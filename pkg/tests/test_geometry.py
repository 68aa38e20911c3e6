import math

import numpy as np
import pytest

from pcsim.geometry import (
    DefectSpec,
    HoleOverride,
    PhotonicCrystalSpec,
    air_fill_fraction,
    hole_list,
    make_single_defect_cavity,
    rasterize,
    uniform_map,
)


def test_invariants_rejected():
    with pytest.raises(ValueError, match="r < a/2"):
        PhotonicCrystalSpec(hole_radius=0.6)
    with pytest.raises(ValueError, match="r < a/2"):
        PhotonicCrystalSpec(hole_radius=0.5)
    with pytest.raises(ValueError):
        PhotonicCrystalSpec(slab_index=0.9)
    with pytest.raises(ValueError):
        PhotonicCrystalSpec(nx_periods=8)  # even extents are not centered
    with pytest.raises(ValueError, match="outside the crystal extent"):
        PhotonicCrystalSpec(
            defect=DefectSpec(removed=((0, 0),), overrides=(HoleOverride(site=(40, 0)),))
        )


def test_zero_radius_gives_uniform_slab():
    spec = PhotonicCrystalSpec(hole_radius=1e-12)
    # Radius ~0: every cell should be pure dielectric.
    mat = rasterize(spec, resolution=16)
    assert np.allclose(mat.eps, spec.effective_index**2, rtol=0, atol=1e-9)


def test_cell_inside_hole_is_air():
    mat = rasterize(PhotonicCrystalSpec(), resolution=20)
    # Dead center of the (0, 0) hole.
    assert mat.eps_at((0.0, 0.0)) == 1.0
    # Center of a neighboring hole along x.
    assert mat.eps_at((1.0, 0.0)) == 1.0


def test_air_fill_fraction_matches_closed_form():
    spec = PhotonicCrystalSpec()
    mat = rasterize(spec, resolution=40)
    # Mean air fraction over one lattice period rectangle (a x sqrt(3) a),
    # centered interior; closed-form triangular-lattice value as oracle.
    res = 40
    cx, cy = mat.center
    x0 = int(round((cx - 0.5) * res))
    y0 = int(round((cy - math.sqrt(3.0) / 2) * res))
    nx = res
    ny = int(round(math.sqrt(3.0) * res))
    cellbox = mat.eps[x0 : x0 + nx, y0 : y0 + ny]
    bg = spec.effective_index**2
    fill = np.mean((bg - cellbox) / (bg - 1.0))
    expected = air_fill_fraction(spec)
    assert expected == pytest.approx(2 * math.pi / math.sqrt(3.0) * 0.09, rel=1e-12)
    assert fill == pytest.approx(expected, abs=0.005)


def test_eps_bounds():
    mat = rasterize(PhotonicCrystalSpec(), resolution=16)
    assert np.all(mat.eps >= 1.0)
    assert np.all(mat.eps <= PhotonicCrystalSpec().effective_index**2 + 1e-12)


def test_mirror_symmetry_bitwise():
    mat = rasterize(PhotonicCrystalSpec(), resolution=16)
    assert np.array_equal(mat.eps, mat.eps[::-1, :])
    assert np.array_equal(mat.eps, mat.eps[:, ::-1])
    # The default cavity is symmetric too.
    cav = rasterize(make_single_defect_cavity(PhotonicCrystalSpec()), resolution=16)
    assert np.array_equal(cav.eps, cav.eps[::-1, :])
    assert np.array_equal(cav.eps, cav.eps[:, ::-1])


def test_resolution_convergence():
    spec = PhotonicCrystalSpec(nx_periods=3, ny_periods=3)
    lo = rasterize(spec, resolution=20, padding=0.5)
    hi = rasterize(spec, resolution=40, padding=0.5)

    def center_window(mat, res, half_x=1.5, half_y=1.0):
        # Windows measured from the crystal center align across
        # resolutions even though the padded domains round differently.
        cx = mat.eps.shape[0] // 2
        cy = mat.eps.shape[1] // 2
        return mat.eps[
            cx - int(half_x * res) : cx + int(half_x * res),
            cy - int(half_y * res) : cy + int(half_y * res),
        ]

    c = center_window(lo, 20)
    h = center_window(hi, 40)
    down = 0.25 * (h[0::2, 0::2] + h[1::2, 0::2] + h[0::2, 1::2] + h[1::2, 1::2])
    assert down.shape == c.shape
    rms = np.sqrt(np.mean((down - c) ** 2)) / np.mean(c)
    assert rms < 0.02


def test_make_single_defect_cavity():
    base = PhotonicCrystalSpec()
    cav = make_single_defect_cavity(base)
    assert len(hole_list(cav)) == len(hole_list(base)) - 1
    # Center hole gone: cavity is dielectric at the origin.
    mat = rasterize(cav, resolution=16)
    assert mat.eps_at((0.0, 0.0)) > 1.0
    # Applying the operation twice is an error.
    with pytest.raises(ValueError, match="already has a defect"):
        make_single_defect_cavity(cav)


def test_cavity_supports_localized_resonance(cavity_mode20):
    # Existence assertion: the modal analysis finds a mode with usable Q.
    assert cavity_mode20.q > 50


def test_uniform_map():
    m = uniform_map((4.0, 3.0), 16, eps_value=2.0)
    assert m.eps.shape == (64, 48)
    assert np.all(m.eps == 2.0)
    with pytest.raises(ValueError):
        uniform_map((4.0, 3.0), 16, eps_value=0.5)


def test_material_map_rejects_bad_eps():
    from pcsim.geometry import MaterialMap

    with pytest.raises(ValueError):
        MaterialMap(
            eps=np.full((8, 8), 0.5),
            resolution=8,
            center=(0.5, 0.5),
            background_eps=1.0,
            spec=None,
        )
