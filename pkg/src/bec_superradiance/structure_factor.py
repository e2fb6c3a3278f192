"""
Density of the condensate array and its Fourier transform.

Two routes to rho(kappa):

* ``rho_analytic`` is the factored closed form: Gaussian envelope times the
  M-slit Dirichlet kernel times the neighbour-overlap factor
  [1 + exp(-a0^2 / 4 sigma_x^2)].
* ``rho_numeric`` integrates the real-space density against exp(-i kappa.r)
  on a uniform grid. It never uses the closed form and serves as the oracle.

Normalisation is per site: every |w_i|^2 integrates to one, so C_nor does not
depend on M and the density integrates to M + 2 (M - 1) exp(-a0^2 / 4 sigma_x^2).
In Fourier space the single-site volume pi^(3/2) sigma_x sigma_y sigma_z
cancels C_nor^2 exactly, so the k-space prefactor is 1 and rho(0) = M [1 + ...]
on the analytic path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .physcore import BeamParams, LatticeParams

SINGULAR_WINDOW = 1e-6


class ResolutionError(RuntimeError):
    """The quadrature grid needed for a requested wavevector is too large."""


def dirichlet(M: int, x):
    """sin(M x / 2) / sin(x / 2), continuous through x = 2 pi n.

    Within 1e-6 of a singular point the second-order series
    M (-1)^(n (M - 1)) [1 - (M^2 - 1) d^2 / 24] is used instead of the quotient.
    """
    x = np.asarray(x, dtype=float)
    n = np.rint(x / (2 * np.pi))
    d = x - 2 * np.pi * n
    near = np.abs(d) < SINGULAR_WINDOW
    sign = np.where((n * (M - 1)) % 2 == 0, 1.0, -1.0)
    series = M * sign * (1.0 - (M * M - 1) * d * d / 24.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        quotient = np.sin(M * x / 2) / np.sin(x / 2)
    out = np.where(near, series, quotient)
    return out if out.ndim else float(out)


def overlap_factor(params: LatticeParams) -> float:
    """Neighbour coherence factor 1 + exp(-a0^2 / (4 sigma_x^2)), between 1 and 2."""
    return 1.0 + math.exp(-params.a0 ** 2 / (4.0 * params.sigma_x ** 2))


def site_volume(params: LatticeParams) -> float:
    """Integral of one |w_i|^2 = exp(-sum r_j^2 / sigma_j^2)."""
    return math.pi ** 1.5 * params.sigma_x * params.sigma_y * params.sigma_z


def normalization(params: LatticeParams) -> float:
    """Real-space C_nor, chosen so each site's |w_i|^2 carries unit weight."""
    return 1.0 / math.sqrt(site_volume(params))


def total_weight(params: LatticeParams) -> float:
    """Integral of the density over all space."""
    e = overlap_factor(params) - 1.0
    return params.M + 2.0 * (params.M - 1) * e


def _gauss_1d(u, centre, sigma):
    return np.exp(-((u - centre) ** 2) / (2.0 * sigma * sigma))


def _x_profile(params: LatticeParams, x):
    """sum_i w_i(x)^2 + 2 sum_i w_i(x) w_{i+1}(x), x-part only."""
    x = np.asarray(x, dtype=float)
    w = _gauss_1d(x[..., None], params.site_positions, params.sigma_x)
    out = np.sum(w * w, axis=-1)
    if params.M > 1:
        out = out + 2.0 * np.sum(w[..., :-1] * w[..., 1:], axis=-1)
    return out


def density(params: LatticeParams, r):
    """Ground-state density C_nor^2 [sum |w_i|^2 + 2 sum w_i w_{i+1}] at points r (..., 3)."""
    r = np.asarray(r, dtype=float)
    yz = _gauss_1d(r[..., 1], 0.0, params.sigma_y) ** 2 * _gauss_1d(r[..., 2], 0.0, params.sigma_z) ** 2
    out = normalization(params) ** 2 * _x_profile(params, r[..., 0]) * yz
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class StructureFactorSample:
    """rho at one shifted wavevector kappa = k - k0 + q, with its factors.

    ``normalization`` is the Fourier-space C_nor (real-space C_nor with the
    single-site volume folded in), so value = normalization^2 * envelope *
    sampling * overlap.
    """

    k: np.ndarray
    kappa: np.ndarray
    value: complex
    envelope: float
    sampling: float
    overlap: float
    normalization: float


def shifted_wavevector(beam: BeamParams, q, k) -> np.ndarray:
    return np.asarray(k, dtype=float) - beam.k0_vector + np.asarray(q, dtype=float)


def envelope(params: LatticeParams, kappa):
    """exp(-sum_j sigma_j^2 kappa_j^2 / 4)."""
    kappa = np.asarray(kappa, dtype=float)
    return np.exp(-np.sum((params.sigmas * kappa) ** 2, axis=-1) / 4.0)


def rho_factors(params: LatticeParams, kappa):
    """Vectorised (envelope, sampling, overlap) over kappa of shape (..., 3)."""
    kappa = np.asarray(kappa, dtype=float)
    env = envelope(params, kappa)
    samp = dirichlet(params.M, params.a0 * kappa[..., 0])
    return env, samp, overlap_factor(params)


def rho_kappa(params: LatticeParams, kappa):
    """Analytic rho as a plain (vectorised) real array over kappa (..., 3)."""
    env, samp, ov = rho_factors(params, kappa)
    return env * samp * ov


def rho_analytic(params: LatticeParams, beam: BeamParams, q, k) -> StructureFactorSample:
    kappa = shifted_wavevector(beam, q, k)
    env, samp, ov = rho_factors(params, kappa)
    c_k = 1.0  # C_nor^2 * site_volume, see module docstring
    return StructureFactorSample(
        k=np.asarray(k, dtype=float),
        kappa=kappa,
        value=complex(c_k * c_k * float(env) * float(samp) * ov),
        envelope=float(env),
        sampling=float(samp),
        overlap=ov,
        normalization=c_k,
    )


def _ft_1d(profile, lo, hi, kappa, h):
    """Trapezoid sum of profile(u) exp(-i kappa u) on a grid of spacing <= h.

    The integrand decays to ~1e-16 at both ends, where the trapezoid rule is
    exponentially accurate.
    """
    n = int(math.ceil((hi - lo) / h)) + 1
    u = np.linspace(lo, hi, n)
    step = u[1] - u[0]
    f = profile(u)
    f[0] *= 0.5
    f[-1] *= 0.5
    return step * np.sum(f * np.exp(-1j * kappa * u))


def rho_numeric(params: LatticeParams, beam: BeamParams, q, k, *,
                box_sigmas: float = 6.0, points_per_unit: float = 1.0,
                max_points: int = 20_000_000, return_error: bool = False):
    """Fourier integral of the density on a truncated box.

    The box is [-L/2 - 6 sigma_x, L/2 + 6 sigma_x] x [-6 sigma_y, 6 sigma_y] x
    [-6 sigma_z, 6 sigma_z]. The density is a sum of products of 1-D profiles
    so the tensor-product rule over the box factorises into three 1-D sums;
    that is the same 3-D quadrature, just evaluated axis by axis.

    The error estimate compares spacing h with spacing h/2. Raises
    ResolutionError when the grid needed exceeds ``max_points`` per axis.
    """
    kappa = shifted_wavevector(beam, q, k)
    sig = params.sigmas
    half_x = params.L / 2.0 + box_sigmas * params.sigma_x
    bounds = [(-half_x, half_x),
              (-box_sigmas * sig[1], box_sigmas * sig[1]),
              (-box_sigmas * sig[2], box_sigmas * sig[2])]
    profiles = [
        lambda u: _x_profile(params, u),
        lambda u: _gauss_1d(u, 0.0, params.sigma_y) ** 2,
        lambda u: _gauss_1d(u, 0.0, params.sigma_z) ** 2,
    ]
    value = normalization(params) ** 2
    coarse = value
    for axis in range(3):
        # aliasing of exp(-u^2/sigma^2) at spacing h is ~ exp(-sigma^2 (2 pi / h - |kappa|)^2 / 4)
        h = 2.0 * math.pi / (abs(kappa[axis]) + 14.0 / sig[axis]) / points_per_unit
        lo, hi = bounds[axis]
        if 2.0 * (hi - lo) / h > max_points:
            raise ResolutionError(
                f"axis {axis}: kappa = {kappa[axis]:.4g} needs {2.0 * (hi - lo) / h:.3g} points "
                f"(limit {max_points})")
        fine = _ft_1d(profiles[axis], lo, hi, kappa[axis], h / 2.0)
        rough = _ft_1d(profiles[axis], lo, hi, kappa[axis], h)
        value = value * fine
        coarse = coarse * rough
    if return_error:
        return complex(value), abs(value - coarse)
    return complex(value)


def rho_exact(params: LatticeParams, kappa):
    """Closed-form transform of the same density, including the midpoint phase.

    The cross terms w_i w_{i+1} are Gaussians centred half-way between sites,
    which contributes a Dirichlet kernel of order M - 1; the factored form
    lacks this phase. Used only to explain oracle discrepancies.
    """
    kappa = np.asarray(kappa, dtype=float)
    e = overlap_factor(params) - 1.0
    x = params.a0 * kappa[..., 0]
    cross = 2.0 * e * dirichlet(params.M - 1, x) if params.M > 1 else 0.0
    return envelope(params, kappa) * (dirichlet(params.M, x) + cross)


def sample_axis(params: LatticeParams, kx):
    """Rows (kx, envelope, sampling, overlap, value) along kappa = (kx, 0, 0)."""
    kx = np.asarray(kx, dtype=float)
    kappa = np.stack([kx, np.zeros_like(kx), np.zeros_like(kx)], axis=-1)
    env, samp, ov = rho_factors(params, kappa)
    return np.column_stack([kx, env, samp, np.full_like(kx, ov), env * samp * ov])


SAMPLE_COLUMNS = ("kx", "envelope", "sampling", "overlap", "value")
