import math

import pytest
from hypothesis import given, strategies as st

from pcsim.units import UnitSystem, cavity_linewidth


def test_anchor_lattice_constant():
    u = UnitSystem(lambda_cav_nm=921.0)
    assert u.a_nm == pytest.approx(0.27 * 921.0, rel=1e-12)


@given(st.floats(min_value=1e-3, max_value=1e3))
def test_round_trip_identity(lam):
    u = UnitSystem(lambda_cav_nm=921.0)
    back = u.nm_to_wavelength(u.wavelength_to_nm(lam))
    assert back == pytest.approx(lam, rel=1e-12)


def test_frequency_to_nm():
    u = UnitSystem(lambda_cav_nm=921.0)
    # The design frequency a/lambda = 0.27 maps back to the anchor.
    assert u.frequency_to_nm(0.27) == pytest.approx(921.0, rel=1e-12)


def test_unanchored_conversion_rejected():
    u = UnitSystem()
    assert not u.anchored
    with pytest.raises(ValueError):
        u.length_to_nm(1.0)


def test_linewidth():
    assert cavity_linewidth(921.0, 5000.0) == pytest.approx(0.1842, rel=1e-12)
    with pytest.raises(ValueError):
        cavity_linewidth(-1.0, 10.0)


def test_rate_conversion_round_numbers():
    u = UnitSystem(lambda_cav_nm=1000.0)
    # 1 c/a in 1/s equals c / a_physical.
    per_s = u.rate_to_per_second(1.0)
    assert per_s == pytest.approx(299792458.0 / (270e-9), rel=1e-12)
