"""Shared fixtures.  Expensive simulation artifacts are session-scoped and
reused across module and acceptance tests."""

from __future__ import annotations

import numpy as np
import pytest

from pcsim.geometry import PhotonicCrystalSpec, make_single_defect_cavity, rasterize
from pcsim.modal import extract_cavity_mode


@pytest.fixture(scope="session")
def defect_free_mat16():
    """Defect-free default crystal rasterized at resolution 16."""
    return rasterize(PhotonicCrystalSpec(), resolution=16)


@pytest.fixture(scope="session")
def cavity_mat20():
    """Default single-defect cavity rasterized at resolution 20."""
    return rasterize(make_single_defect_cavity(PhotonicCrystalSpec()), resolution=20)


@pytest.fixture(scope="session")
def cavity_mode20(cavity_mat20):
    """Extracted cavity mode of the default defect at resolution 20."""
    return extract_cavity_mode(cavity_mat20, band=(0.24, 0.34))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240917)
