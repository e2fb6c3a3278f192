import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bec_superradiance import structure_factor as sf
from bec_superradiance.physcore import BeamParams, LatticeParams

BEAM = BeamParams()


def lattice(M=10, sigma_x=0.1, sigma_y=0.5, sigma_z=3.0, **kw):
    return LatticeParams(M=M, sigma_x=sigma_x, sigma_y=sigma_y, sigma_z=sigma_z, **kw)


def at_kappa(params, kappa):
    """Probe (q, k) pair whose shifted wavevector is kappa."""
    return np.asarray(kappa, float) + BEAM.k0_vector, np.zeros(3)


# --- Dirichlet kernel -----------------------------------------------------

def test_dirichlet_limit_at_origin():
    assert sf.dirichlet(10, 0.0) == 10.0


def test_dirichlet_first_zero():
    assert abs(sf.dirichlet(10, 2 * math.pi / 10)) < 1e-12


def test_dirichlet_matches_quotient_away_from_singularity():
    assert sf.dirichlet(10, 0.3) == pytest.approx(math.sin(1.5) / math.sin(0.15), rel=1e-12)


@pytest.mark.parametrize("M,n,expected", [(10, 1, -10.0), (10, 2, 10.0), (11, 1, 11.0), (11, -3, 11.0)])
def test_dirichlet_sign_at_principal_maxima(M, n, expected):
    assert sf.dirichlet(M, 2 * math.pi * n) == expected


@pytest.mark.parametrize("offset", [3e-7, -8e-7, 2e-6, 1e-9])
def test_dirichlet_series_branch_against_high_precision(offset):
    mpmath.mp.dps = 40
    M, n = 7, 2
    x = 2 * math.pi * n + offset
    xm = mpmath.mpf(x)
    exact = float(mpmath.sin(M * xm / 2) / mpmath.sin(xm / 2))
    # the quotient branch loses about eps/offset of relative precision
    assert sf.dirichlet(M, x) == pytest.approx(exact, rel=max(1e-12, 1e-14 / abs(offset)))


@settings(max_examples=300)
@given(st.integers(1, 60), st.floats(-200.0, 200.0))
def test_dirichlet_bounded_and_periodic_in_magnitude(M, x):
    d = sf.dirichlet(M, x)
    assert abs(d) <= M * (1 + 1e-9)
    assert abs(sf.dirichlet(M, x + 2 * math.pi)) == pytest.approx(abs(d), rel=1e-6, abs=1e-6)


def test_dirichlet_vectorised():
    x = np.linspace(-7, 7, 101)
    out = sf.dirichlet(5, x)
    assert out.shape == x.shape
    assert out[50] == 5.0


# --- density --------------------------------------------------------------

def test_single_site_peak_density():
    p = lattice(M=1, sigma_x=0.3, sigma_y=0.4, sigma_z=2.0)
    assert sf.density(p, [0, 0, 0]) == pytest.approx(1 / (math.pi ** 1.5 * 0.3 * 0.4 * 2.0), rel=1e-14)


def test_narrow_sites_leave_midpoints_empty():
    p = lattice(M=10, sigma_x=0.1)
    centre = sf.density(p, [p.site_positions[4], 0, 0])
    midpoint = sf.density(p, [0.0, 0, 0])  # even M: origin lies between sites 5 and 6
    assert midpoint < 1e-4 * centre


def test_density_is_inversion_symmetric():
    rng = np.random.default_rng(1)
    p = lattice(M=7, sigma_x=0.6)
    r = rng.normal(scale=[3, 0.5, 3], size=(200, 3))
    assert np.allclose(sf.density(p, r), sf.density(p, -r), rtol=1e-13, atol=0)


def test_density_integrates_to_site_weight():
    p = lattice(M=3, sigma_x=0.45, sigma_y=0.3, sigma_z=0.5)
    x = np.linspace(-5, 5, 401)
    y = np.linspace(-2.5, 2.5, 161)
    z = np.linspace(-3, 3, 161)
    X, Y, Z = np.meshgrid(x, y, z, indexing="ij")
    rho = sf.density(p, np.stack([X, Y, Z], axis=-1))
    integral = rho.sum() * (x[1] - x[0]) * (y[1] - y[0]) * (z[1] - z[0])
    e = math.exp(-1 / (4 * 0.45 ** 2))
    assert integral == pytest.approx(3 + 4 * e, rel=1e-9)
    assert sf.total_weight(p) == pytest.approx(3 + 4 * e, rel=1e-14)


# --- analytic structure factor --------------------------------------------

def test_analytic_peak_value():
    p = lattice(M=10, sigma_x=0.4)
    sample = sf.rho_analytic(p, BEAM, *at_kappa(p, [0, 0, 0]))
    assert sample.value == pytest.approx(10 * (1 + math.exp(-1 / (4 * 0.16))), rel=1e-14)
    assert sample.value.imag == 0.0


@given(st.floats(-40, 40), st.floats(-10, 10), st.floats(-3, 3), st.floats(0.05, 2.0))
def test_factored_reassembly(kx, ky, kz, sx):
    p = lattice(M=6, sigma_x=sx)
    s = sf.rho_analytic(p, BEAM, *at_kappa(p, [kx, ky, kz]))
    rebuilt = s.normalization ** 2 * s.envelope * s.sampling * s.overlap
    assert s.value.real == pytest.approx(rebuilt, rel=1e-12, abs=1e-300)
    assert abs(s.sampling) <= p.M * (1 + 1e-12)


def test_shift_uses_pump_and_recoil():
    p = lattice()
    q = np.array([1.0, 0.5, 0.0])
    k = np.array([0.0, BEAM.k0, 0.3])
    s = sf.rho_analytic(p, BEAM, q, k)
    assert np.allclose(s.kappa, [1.0, 0.5, 0.3])


def test_wide_site_kills_first_satellite():
    p = lattice(sigma_x=1.0)
    s = sf.rho_analytic(p, BEAM, *at_kappa(p, [2 * math.pi, 0, 0]))
    assert s.envelope == pytest.approx(math.exp(-math.pi ** 2), rel=1e-14)
    assert s.envelope == pytest.approx(5.17e-5, rel=1e-2)


def test_sampling_windows_for_narrow_sites():
    p = lattice(M=10, sigma_x=0.1)
    kx = np.linspace(-4 * math.pi, 4 * math.pi, 20001)
    rows = sf.sample_axis(p, kx)
    n = np.rint(kx / (2 * math.pi))
    inside = np.abs(kx - 2 * math.pi * n) < 2 * math.pi / p.M
    # outside the main windows only sidelobes remain, the largest about 0.22 M
    assert np.max(np.abs(rows[~inside, 2])) < 0.23 * p.M
    for m in (-1, 0, 1):
        assert abs(sf.dirichlet(10, 2 * math.pi * m)) == 10.0


# --- numerical oracle -----------------------------------------------------

@pytest.mark.parametrize("kappa", [[0, 0, 0], [1.3, -2.0, 0.4], [7.0, 0.0, -1.5], [-3.0, 4.0, 2.0]])
def test_single_site_oracle_matches_gaussian_transform(kappa):
    p = lattice(M=1, sigma_x=0.3, sigma_y=0.5, sigma_z=0.8)
    value, err = sf.rho_numeric(p, BEAM, *at_kappa(p, kappa), return_error=True)
    kappa = np.asarray(kappa)
    exact = math.exp(-np.sum((p.sigmas * kappa) ** 2) / 4)
    assert abs(value - exact) < 1e-8
    assert err < 1e-8


def test_oracle_matches_analytic_at_origin_for_narrow_sites():
    p = lattice(M=10, sigma_x=0.1)
    num = sf.rho_numeric(p, BEAM, *at_kappa(p, [0, 0, 0]))
    ana = sf.rho_analytic(p, BEAM, *at_kappa(p, [0, 0, 0])).value
    assert abs(num - ana) / abs(ana) < 1e-6


def test_oracle_differs_from_factored_form_at_odd_half_order():
    # the factored overlap factor drops the midpoint phase of the cross terms
    p = lattice(M=10, sigma_x=1.0)
    kappa = [math.pi, 0, 0]
    num = sf.rho_numeric(p, BEAM, *at_kappa(p, kappa))
    assert num.real == pytest.approx(float(sf.rho_exact(p, np.array(kappa))), abs=1e-10)
    ana = sf.rho_analytic(p, BEAM, *at_kappa(p, kappa)).value
    print(f"sigma_x = a0, kappa_x = pi/a0: oracle {num.real:.6g}, factored {ana.real:.6g}")


@pytest.mark.parametrize("sigma_x", [0.05, 0.1, 0.15])
def test_oracle_agrees_at_principal_maxima_where_overlap_negligible(sigma_x):
    p = lattice(M=10, sigma_x=sigma_x)
    peak = abs(sf.rho_numeric(p, BEAM, *at_kappa(p, [0, 0, 0])))
    for n in range(-3, 4):
        kappa = [2 * math.pi * n, 0, 0]
        num = sf.rho_numeric(p, BEAM, *at_kappa(p, kappa))
        ana = sf.rho_analytic(p, BEAM, *at_kappa(p, kappa)).value
        assert abs(num - ana) / peak <= 1e-4


def test_oracle_is_hermitian():
    p = lattice(M=5, sigma_x=0.7)
    kappa = np.array([2.2, -0.7, 0.3])
    plus = sf.rho_numeric(p, BEAM, *at_kappa(p, kappa))
    minus = sf.rho_numeric(p, BEAM, *at_kappa(p, -kappa))
    assert plus == pytest.approx(minus.conjugate(), abs=1e-12)


def test_oracle_peak_at_zero():
    p = lattice(M=4, sigma_x=0.35)
    grid = [[kx, ky, 0.0] for kx in np.linspace(-8, 8, 17) for ky in (-1.0, 0.0, 1.0)]
    values = [abs(sf.rho_numeric(p, BEAM, *at_kappa(p, k))) for k in grid]
    assert grid[int(np.argmax(values))] == [0.0, 0.0, 0.0]


def test_oracle_reports_unresolvable_grid():
    p = lattice(M=40, sigma_x=0.1)
    with pytest.raises(sf.ResolutionError):
        sf.rho_numeric(p, BEAM, *at_kappa(p, [1e6, 0, 0]), max_points=10_000)
