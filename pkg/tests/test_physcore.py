import dataclasses
import math

import pytest
from hypothesis import given, strategies as st

from bec_superradiance.physcore import (
    BeamParams, LatticeParams, ParameterError, SystemParams, TrapParams, UnitSystem, validate,
)


def test_farfield_fails_for_narrow_sites_at_default_k0():
    lat = LatticeParams(M=10, a0=1.0, sigma_x=0.1, sigma_y=0.1, sigma_z=5.0)
    report = validate(lat, BeamParams(k0=math.pi))
    checks = {c.name: c for c in report.checks}
    assert not report.farfield_ok
    assert checks["k0*sigma_x"].value == pytest.approx(0.31415926, rel=1e-6)
    assert not checks["k0*sigma_x"].passed
    assert checks["k0*sigma_z"].passed


def test_wide_site_passes_sigma_x_check():
    lat = LatticeParams(M=10, sigma_x=5.0, sigma_y=5.0, sigma_z=5.0)
    check = validate(lat, BeamParams(k0=math.pi)).checks[0]
    assert check.value == pytest.approx(15.70796, rel=1e-6)
    assert check.passed


def test_validate_reports_rather_than_raises():
    report = validate(LatticeParams(M=1, sigma_x=1e-3, sigma_y=1e-3, sigma_z=1e-3), BeamParams())
    assert len(report.failures) == 4
    assert all("not >> 1" in w for w in report.warnings())


def test_zero_sites_rejected():
    with pytest.raises(ParameterError, match="sites") as info:
        LatticeParams(M=0, sigma_x=0.1, sigma_y=0.1, sigma_z=1.0)
    assert info.value.field == "sites"


@pytest.mark.parametrize("field,kwargs", [
    ("lattice_constant", dict(a0=0.0)),
    ("sigma_x", dict(sigma_x=-1.0)),
    ("sigma_y", dict(sigma_y=0.0)),
    ("sigma_z", dict(sigma_z=float("nan"))),
    ("atom_number", dict(N=-5.0)),
    ("sites", dict(M=2.5)),
])
def test_nonpositive_fields_name_the_field(field, kwargs):
    base = dict(M=3, sigma_x=0.1, sigma_y=0.1, sigma_z=1.0)
    with pytest.raises(ParameterError) as info:
        LatticeParams(**{**base, **kwargs})
    assert info.value.field == field


def test_beam_and_trap_validation():
    with pytest.raises(ParameterError, match="k0"):
        BeamParams(k0=0.0)
    with pytest.raises(ParameterError, match="g"):
        BeamParams(g=-1.0)
    BeamParams(g=0.0)
    with pytest.raises(ParameterError, match="omega_T"):
        TrapParams(omega_T=0.0, omega_r=1.0)


def test_poisson_lambda_is_exact_ratio():
    trap = TrapParams(omega_T=0.3, omega_r=0.7)
    assert trap.poisson_lambda == 0.7 / 0.3


def test_trap_from_lattice_depth():
    trap = TrapParams.from_lattice_depth(V0=8.0, omega_r=1.0, a0=2.0)
    assert trap.omega_T == pytest.approx(math.sqrt(2 * 8.0 / 4.0))


def test_params_are_frozen():
    lat = LatticeParams(M=3, sigma_x=0.1, sigma_y=0.1, sigma_z=1.0)
    with pytest.raises(dataclasses.FrozenInstanceError):
        lat.M = 4


def test_site_positions_are_centred():
    lat = LatticeParams(M=4, sigma_x=0.1, sigma_y=0.1, sigma_z=1.0, a0=2.0)
    assert list(lat.site_positions) == [-3.0, -1.0, 1.0, 3.0]


@given(st.integers(1, 10_000), st.integers(-20, 20), st.integers(1, 2 ** 20))
def test_length_is_exact_product_for_dyadic_spacing(M, exp, mant):
    a0 = math.ldexp(mant, exp)
    lat = LatticeParams(M=M, sigma_x=0.1, sigma_y=0.1, sigma_z=1.0, a0=a0)
    assert lat.L == M * a0


@given(st.floats(1e-9, 1e9), st.floats(1e-9, 1e9), st.floats(-1e6, 1e6))
def test_unit_conversions_round_trip(a0, omega_r, x):
    units = UnitSystem.from_physical(a0, omega_r)
    for to, back in [(units.to_length, units.from_length), (units.to_time, units.from_time),
                     (units.to_rate, units.from_rate), (units.to_wavevector, units.from_wavevector)]:
        assert back(to(x)) == pytest.approx(x, rel=1e-12, abs=1e-300)


def test_json_schema_round_trip(tmp_path):
    params = SystemParams(LatticeParams(M=10, sigma_x=0.1, sigma_y=0.5, sigma_z=5.0, N=1e6),
                          BeamParams(k0=2.0, g=0.5), TrapParams(omega_T=2.0, omega_r=1.0))
    path = tmp_path / "p.json"
    import json
    path.write_text(json.dumps(params.to_dict()))
    assert SystemParams.from_json(path) == params


def test_json_unknown_field_rejected():
    with pytest.raises(ParameterError, match="unknown"):
        SystemParams.from_dict({"lattice": {"M": 2, "sigma_x": 1, "sigma_y": 1, "sigma_z": 1, "sigmax": 1}})
    with pytest.raises(ParameterError, match="lattice"):
        SystemParams.from_dict({"beam": {}})
