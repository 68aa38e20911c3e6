"""Triangular-lattice photonic-crystal slab: parametric spec and rasterization.

The crystal is a triangular lattice of air holes in a dielectric slab.  In
normalized units the periodicity is a = 1.  2D simulations use the slab's
effective index in place of the bulk index; 3D rasterization extrudes the
hole pattern through a slab of finite thickness surrounded by air.

Lattice indexing: a hole site is addressed by integer indices (col, row).
Even rows sit at x = col * a, odd rows are offset by a/2, and rows are spaced
by sqrt(3)/2 * a.  Site (0, 0) is the crystal center.

The default single-defect cavity removes the center hole and shifts its two
x-axis neighbors outward.  The shift amount is a representative elongation
choice, not a published design; tune ``defect.overrides`` for a specific
device.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

ROW_DY = math.sqrt(3.0) / 2.0

# Boundary cells are supersampled on a k x k midpoint grid; power of two so
# the subsample coordinates are exact binary fractions (keeps mirror-image
# specs bit-symmetric).
_SUPERSAMPLE = 64


@dataclass(frozen=True)
class HoleOverride:
    """Per-hole modification: positional shift and/or radius change."""

    site: tuple[int, int]
    shift: tuple[float, float] = (0.0, 0.0)
    radius: float | None = None


@dataclass(frozen=True)
class DefectSpec:
    """Removed sites plus per-hole overrides describing a cavity."""

    removed: tuple[tuple[int, int], ...] = ((0, 0),)
    overrides: tuple[HoleOverride, ...] = ()


@dataclass(frozen=True)
class PhotonicCrystalSpec:
    """Parametric description of the slab photonic crystal.

    Lengths are in units of the lattice constant a.  ``nx_periods`` and
    ``ny_periods`` count hole columns/rows and must be odd so the crystal is
    centered on a lattice site.
    """

    lattice_a: float = 1.0
    hole_radius: float = 0.3
    slab_thickness: float = 0.65
    slab_index: float = 3.6
    effective_index: float = 2.65
    nx_periods: int = 9
    ny_periods: int = 9
    defect: DefectSpec | None = None

    def __post_init__(self) -> None:
        errors = self.validation_errors()
        if errors:
            raise ValueError("; ".join(errors))

    def validation_errors(self) -> list[str]:
        errs = []
        a = self.lattice_a
        if a <= 0:
            errs.append("lattice constant a must be positive")
            return errs
        if not 0.0 < self.hole_radius < a / 2:
            errs.append(
                f"hole radius r must satisfy 0 < r < a/2 so holes do not "
                f"overlap (got r = {self.hole_radius:g}, a = {a:g})"
            )
        if self.slab_index <= 1 or self.effective_index <= 1:
            errs.append("slab and effective indices must exceed 1")
        if self.slab_thickness <= 0:
            errs.append("slab thickness must be positive")
        if self.nx_periods < 3 or self.ny_periods < 3:
            errs.append("crystal extent must be at least 3x3 periods")
        if self.nx_periods % 2 == 0 or self.ny_periods % 2 == 0:
            errs.append("period counts must be odd (centered crystal)")
        if self.defect is not None:
            sites = set(_lattice_sites(self.nx_periods, self.ny_periods))
            for s in self.defect.removed:
                if tuple(s) not in sites:
                    errs.append(f"removed site {s} lies outside the crystal extent")
            for ov in self.defect.overrides:
                if tuple(ov.site) not in sites:
                    errs.append(f"override site {ov.site} lies outside the crystal extent")
                if ov.radius is not None and not 0.0 <= ov.radius < self.lattice_a / 2:
                    errs.append(f"override radius at {ov.site} must be in [0, a/2)")
        return errs

    def spec_hash(self) -> str:
        payload = json.dumps(self.to_config(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def to_config(self) -> dict:
        """Serializable form with the documented key names."""
        cfg = {
            "lattice": {"a": self.lattice_a, "r": self.hole_radius},
            "slab": {
                "d": self.slab_thickness,
                "n": self.slab_index,
                "n_eff": self.effective_index,
            },
            "extent": {"nx": self.nx_periods, "ny": self.ny_periods},
            "defect": {
                "enabled": self.defect is not None,
                "removed": [list(s) for s in self.defect.removed] if self.defect else [],
                "overrides": [
                    {
                        "site": list(ov.site),
                        "shift": list(ov.shift),
                        "radius": ov.radius,
                    }
                    for ov in self.defect.overrides
                ]
                if self.defect
                else [],
            },
        }
        return cfg

    @staticmethod
    def from_config(cfg: dict) -> "PhotonicCrystalSpec":
        defect = None
        dc = cfg.get("defect", {})
        if dc.get("enabled"):
            defect = DefectSpec(
                removed=tuple(tuple(s) for s in dc.get("removed", [[0, 0]])),
                overrides=tuple(
                    HoleOverride(
                        site=tuple(o["site"]),
                        shift=tuple(o.get("shift", (0.0, 0.0))),
                        radius=o.get("radius"),
                    )
                    for o in dc.get("overrides", [])
                ),
            )
        return PhotonicCrystalSpec(
            lattice_a=cfg["lattice"]["a"],
            hole_radius=cfg["lattice"]["r"],
            slab_thickness=cfg["slab"]["d"],
            slab_index=cfg["slab"]["n"],
            effective_index=cfg["slab"].get("n_eff", 2.65),
            nx_periods=cfg["extent"]["nx"],
            ny_periods=cfg["extent"]["ny"],
            defect=defect,
        )


def _lattice_sites(nx: int, ny: int) -> list[tuple[int, int]]:
    """All (col, row) site indices of the crystal."""
    sites = []
    half_rows = (ny - 1) // 2
    half_cols = (nx - 1) // 2
    for row in range(-half_rows, half_rows + 1):
        if row % 2 == 0:
            cols = range(-half_cols, half_cols + 1)
        else:
            # Offset rows carry one extra hole so the row stays x-mirror
            # symmetric: x = (col + 1/2) a for col in [-h-1, h].
            cols = range(-half_cols - 1, half_cols + 1)
        sites.extend((c, row) for c in cols)
    return sites


def site_position(site: tuple[int, int], a: float = 1.0) -> tuple[float, float]:
    """Center of a lattice site in units of a, relative to the crystal center."""
    col, row = site
    x = (col + 0.5 * (row & 1)) * a
    y = row * ROW_DY * a
    return (x, y)


def hole_list(spec: PhotonicCrystalSpec) -> list[tuple[float, float, float]]:
    """Resolved holes as (x, y, radius), defect applied."""
    removed: set[tuple[int, int]] = set()
    overrides: dict[tuple[int, int], HoleOverride] = {}
    if spec.defect is not None:
        removed = {tuple(s) for s in spec.defect.removed}
        overrides = {tuple(ov.site): ov for ov in spec.defect.overrides}
    holes = []
    for site in _lattice_sites(spec.nx_periods, spec.ny_periods):
        if site in removed:
            continue
        x, y = site_position(site, spec.lattice_a)
        r = spec.hole_radius
        if site in overrides:
            ov = overrides[site]
            x += ov.shift[0]
            y += ov.shift[1]
            if ov.radius is not None:
                r = ov.radius
        if r > 0:
            holes.append((x, y, r))
    return holes


def make_single_defect_cavity(
    base: PhotonicCrystalSpec,
    neighbor_shift: float = 0.05,
) -> PhotonicCrystalSpec:
    """Remove the center hole and elongate the cavity along x.

    The two nearest holes on the x axis are shifted outward by
    ``neighbor_shift`` (units of a), which splits the dipole-mode degeneracy
    and selects the x-polarized mode.  The input spec must be defect-free.
    """
    if base.defect is not None:
        raise ValueError("spec already has a defect; start from a defect-free spec")
    s = neighbor_shift * base.lattice_a
    defect = DefectSpec(
        removed=((0, 0),),
        overrides=(
            HoleOverride(site=(1, 0), shift=(s, 0.0)),
            HoleOverride(site=(-1, 0), shift=(-s, 0.0)),
        ),
    )
    return replace(base, defect=defect)


@dataclass(frozen=True)
class MaterialMap:
    """Relative permittivity on the simulation grid plus provenance.

    ``eps`` is cell-centered.  ``center`` is the crystal center in grid
    length units (units of a from the domain corner), so an analysis position
    p relative to the crystal maps to grid coordinates p + center.
    """

    eps: np.ndarray
    resolution: float
    center: tuple[float, ...]
    background_eps: float
    spec: PhotonicCrystalSpec | None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.eps)):
            raise ValueError("eps map contains non-finite values")
        if np.any(self.eps < 1.0 - 1e-12):
            raise ValueError("eps must be >= 1 everywhere")

    @property
    def dx(self) -> float:
        return 1.0 / self.resolution

    def position_to_cell(self, pos) -> tuple[int, ...]:
        """Nearest cell index for a position relative to the crystal center."""
        idx = []
        for p, c, n in zip(pos, self.center, self.eps.shape):
            i = int(math.floor((p + c) * self.resolution))
            idx.append(min(max(i, 0), n - 1))
        return tuple(idx)

    def eps_at(self, pos) -> float:
        return float(self.eps[self.position_to_cell(pos)])

    def bulk_like(self) -> "MaterialMap":
        """Homogeneous reference map: same shape, uniform background eps."""
        return MaterialMap(
            eps=np.full_like(self.eps, self.background_eps),
            resolution=self.resolution,
            center=self.center,
            background_eps=self.background_eps,
            spec=self.spec,
            provenance=dict(self.provenance, method="uniform-bulk"),
        )


def _cell_centers(n: int, dx: float) -> np.ndarray:
    # (i + 0.5 - n/2) dx: exact negation pairs under i -> n-1-i, which keeps
    # mirror-symmetric hole patterns bit-identical after rasterization.
    i = np.arange(n, dtype=np.float64)
    return (i + 0.5 - n / 2) * dx


def _fill_fractions(
    xc: np.ndarray, yc: np.ndarray, hx: float, hy: float, r: float, dx: float
) -> np.ndarray:
    """Air fill fraction of each cell for one hole (0 = no overlap)."""
    frac = np.zeros((xc.size, yc.size), dtype=np.float64)
    half_diag = dx * math.sqrt(0.5)
    dxs = xc - hx
    dys = yc - hy
    d2 = dxs[:, None] ** 2 + dys[None, :] ** 2
    inside = d2 <= (r - half_diag) ** 2 if r > half_diag else np.zeros_like(d2, bool)
    frac[inside] = 1.0
    boundary = (d2 < (r + half_diag) ** 2) & ~inside
    bi, bj = np.nonzero(boundary)
    if bi.size:
        k = _SUPERSAMPLE
        sub = (np.arange(k, dtype=np.float64) + 0.5) / k - 0.5
        sx = dxs[bi][:, None] + (sub * dx)[None, :]
        sy = dys[bj][:, None] + (sub * dx)[None, :]
        hit = (sx[:, :, None] ** 2 + sy[:, None, :] ** 2) <= r * r
        frac[bi, bj] = hit.sum(axis=(1, 2)) / float(k * k)
    return frac


def rasterize(
    spec: PhotonicCrystalSpec,
    resolution: float,
    padding: float = 1.5,
    dimensionality: int = 2,
    z_padding: float = 1.0,
) -> MaterialMap:
    """Rasterize the crystal onto a uniform grid with subpixel averaging.

    Cells fully inside a hole get eps = 1, cells fully in dielectric get the
    background eps; boundary cells get the area-weighted mean.  ``padding``
    is unpatterned dielectric margin (units of a) added around the crystal so
    absorbing boundaries sit in homogeneous material.
    """
    if resolution < 8:
        raise ValueError("resolution must be at least 8 cells per lattice constant")
    if dimensionality not in (2, 3):
        raise ValueError("dimensionality must be 2 or 3")

    holes = hole_list(spec)
    a = spec.lattice_a
    if holes:
        ext_x = max(abs(h[0]) + h[2] for h in holes)
        ext_y = max(abs(h[1]) + h[2] for h in holes)
    else:
        ext_x = ext_y = a
    half_x = ext_x + padding * a
    half_y = ext_y + padding * a
    nx = 2 * math.ceil(half_x * resolution)
    ny = 2 * math.ceil(half_y * resolution)
    dx = 1.0 / resolution

    xc = _cell_centers(nx, dx)
    yc = _cell_centers(ny, dx)
    air = np.zeros((nx, ny), dtype=np.float64)
    for hx, hy, r in holes:
        air += _fill_fractions(xc, yc, hx, hy, r, dx)
    np.clip(air, 0.0, 1.0, out=air)

    if dimensionality == 2:
        bg = spec.effective_index**2
        eps = bg + (1.0 - bg) * air
        center = (nx * dx / 2, ny * dx / 2)
    else:
        bg = spec.slab_index**2
        eps_plane = bg + (1.0 - bg) * air
        half_z = spec.slab_thickness / 2 + z_padding * a
        nz = 2 * math.ceil(half_z * resolution)
        zc = _cell_centers(nz, dx)
        # z-coverage of each cell by the slab (0 in air, 1 inside the slab).
        z_lo = zc - dx / 2
        z_hi = zc + dx / 2
        cover = np.clip(
            (np.minimum(z_hi, spec.slab_thickness / 2) - np.maximum(z_lo, -spec.slab_thickness / 2))
            / dx,
            0.0,
            1.0,
        )
        eps = 1.0 + cover[None, None, :] * (eps_plane[:, :, None] - 1.0)
        center = (nx * dx / 2, ny * dx / 2, nz * dx / 2)

    return MaterialMap(
        eps=eps,
        resolution=resolution,
        center=center,
        background_eps=bg,
        spec=spec,
        provenance={
            "spec_hash": spec.spec_hash(),
            "resolution": resolution,
            "method": f"area-fraction-supersample-{_SUPERSAMPLE}",
        },
    )


def uniform_map(
    extent,
    resolution: float,
    eps_value: float = 1.0,
) -> MaterialMap:
    """Homogeneous map of the given extent (units of a per axis)."""
    if eps_value < 1.0:
        raise ValueError("eps must be >= 1")
    shape = tuple(2 * math.ceil(e * resolution / 2) for e in extent)
    dx = 1.0 / resolution
    return MaterialMap(
        eps=np.full(shape, float(eps_value)),
        resolution=resolution,
        center=tuple(n * dx / 2 for n in shape),
        background_eps=float(eps_value),
        spec=None,
        provenance={"method": "uniform"},
    )


def air_fill_fraction(spec: PhotonicCrystalSpec) -> float:
    """Closed-form air fraction of the defect-free triangular lattice."""
    r = spec.hole_radius / spec.lattice_a
    return 2 * math.pi / math.sqrt(3.0) * r * r
