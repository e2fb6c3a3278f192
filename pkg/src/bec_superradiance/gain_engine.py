"""
Superradiant gain G_q for a single recoil mode.

G_q = N (g^2 / k0^2) * integral over the resonant shell |k| = k0 of |rho_q(k)|^2.

The emission direction is theta_hat = sin(theta) x_hat + cos(theta) z_hat, so
theta = 0 is emission along z and theta = pi/2 along the lattice axis x.
For recoil mode q = k0 y_hat + k0 theta_hat the structure factor peaks at
k* = -k0 theta_hat, which lies on the shell.

Three evaluations are provided:

* closed forms G_x = G_0 M^2 / sigma_z and G_z = G_0 M / min(sigma_x, a0);
* ``gain_plane_quadrature``: |rho|^2 integrated over the plane tangent to the
  shell at k*;
* ``gain_shell_quadrature``: |rho|^2 integrated over the whole sphere in polar
  coordinates about -theta_hat (the delta function is removed analytically,
  leaving a k0^2 dOmega surface measure).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from . import structure_factor as sf
from .physcore import BeamParams, LatticeParams, validate

THETA_Z = 0.0
THETA_X = math.pi / 2

QUAD_RTOL = 1e-6
# Gaussian factors below exp(-41) ~ 1e-18 of peak are dropped
_TAIL = math.sqrt(2.0 * 41.5)


class QuadratureError(RuntimeError):
    def __init__(self, message: str, estimate: float):
        super().__init__(f"{message} (achieved relative error {estimate:.3g})")
        self.estimate = estimate


@dataclass(frozen=True)
class GainResult:
    value: float
    method: str
    theta: float
    regime: str
    error: float = 0.0
    warnings: tuple[str, ...] = field(default_factory=tuple)


def regime(params: LatticeParams) -> str:
    return "narrow" if params.narrow else "wide"


def _direction_theta(direction) -> float:
    if direction in ("x", "X"):
        return THETA_X
    if direction in ("z", "Z"):
        return THETA_Z
    raise ValueError(f"direction must be 'x' or 'z', got {direction!r}")


def prefactor(params: LatticeParams, beam: BeamParams) -> float:
    """N g^2 / k0^2, the constant in front of the shell integral."""
    return params.N * beam.g ** 2 / beam.k0 ** 2


def g0(params: LatticeParams, beam: BeamParams) -> float:
    """G_0 = N (g^2/k0^2) C^2 (2 pi / sigma_y) [1 + exp(-a0^2 / 4 sigma_x^2)].

    C^2 is the Fourier-space normalisation, which is 1 (see structure_factor).
    The atom number is kept in G_0 so every gain is linear in N.
    """
    c2 = 1.0
    return prefactor(params, beam) * c2 * (2 * math.pi / params.sigma_y) * sf.overlap_factor(params)


def gain_closed_form(params: LatticeParams, beam: BeamParams, direction) -> GainResult:
    theta = _direction_theta(direction)
    G0 = g0(params, beam)
    if theta == THETA_X:
        value = G0 * params.M ** 2 / params.sigma_z
        method = "closed_form_x"
    else:
        width = params.sigma_x if params.narrow else params.a0
        value = G0 * params.M / width
        method = "closed_form_z"
    return GainResult(value, method, theta, regime(params))


def _sum_quads(pieces):
    total = sum(p[0] for p in pieces)
    err = sum(p[1] for p in pieces)
    return total, err


def _banded_line_integral(gauss_width: float, band_scale: float, M: int, rtol: float):
    """Integral over v in R of exp(-gauss_width^2 v^2 / 2) * D_M(band_scale * v)^2.

    Split into one period of the Dirichlet kernel per subinterval, each
    centred on a principal maximum.
    """
    V = _TAIL / gauss_width
    f = lambda v: math.exp(-0.5 * (gauss_width * v) ** 2) * float(sf.dirichlet(M, band_scale * v)) ** 2
    if band_scale * V < 1e-3 or M == 1:
        val, err = integrate.quad(f, -V, V, epsabs=0.0, epsrel=rtol * 1e-2, limit=200)
        return val, err
    period = 2 * math.pi / band_scale
    n_max = int(math.ceil(V / period))
    pieces = []
    for n in range(0, n_max + 1):
        lo = max(n * period - period / 2, 0.0)
        hi = min(n * period + period / 2, V)
        if hi <= lo:
            continue
        pts = [n * period] if lo < n * period < hi else None
        val, err = integrate.quad(f, lo, hi, points=pts, epsabs=0.0, epsrel=rtol * 1e-2, limit=400)
        pieces.append((val, err))
    val, err = _sum_quads(pieces)
    return 2 * val, 2 * err


def gain_plane_quadrature(params: LatticeParams, beam: BeamParams, theta: float,
                          rtol: float = QUAD_RTOL) -> GainResult:
    """|rho_q|^2 integrated over the tangent plane at k* = -k0 theta_hat.

    Plane coordinates (u, v) along e1 = y_hat and e2 = cos(theta) x_hat -
    sin(theta) z_hat give kappa = (v cos theta, u, -v sin theta). The integrand
    is then a product f(u) h(v), so the plane integral is the product of two
    adaptive 1-D integrals. For theta = 0 the v integral runs across every
    principal maximum of the Dirichlet kernel inside the envelope.
    """
    c, s = math.cos(theta), math.sin(theta)
    ov = sf.overlap_factor(params)
    u_val, u_err = integrate.quad(lambda u: math.exp(-0.5 * (params.sigma_y * u) ** 2),
                                  -_TAIL / params.sigma_y, _TAIL / params.sigma_y,
                                  epsabs=0.0, epsrel=rtol * 1e-2)
    width = math.sqrt((params.sigma_x * c) ** 2 + (params.sigma_z * s) ** 2)
    v_val, v_err = _banded_line_integral(width, params.a0 * abs(c), params.M, rtol)
    integral = ov ** 2 * u_val * v_val
    rel = u_err / u_val + v_err / v_val
    if rel > rtol:
        raise QuadratureError("plane quadrature did not converge", rel)
    return GainResult(prefactor(params, beam) * integral, "plane_quadrature", theta,
                      regime(params), rel, tuple(validate(params, beam).warnings()))


def _shell_integrand_factory(params: LatticeParams, beam: BeamParams, theta: float):
    c, s = math.cos(theta), math.sin(theta)
    k0 = beam.k0
    sx2, sy2, sz2 = params.sigma_x ** 2, params.sigma_y ** 2, params.sigma_z ** 2
    a0, M = params.a0, params.M
    ov2 = sf.overlap_factor(params) ** 2

    def kappa(alpha, beta):
        sa, one_minus_ca = math.sin(alpha), 2.0 * math.sin(alpha / 2) ** 2
        p = k0 * sa * math.cos(beta)      # along e2 = (cos, 0, -sin)
        u = k0 * sa * math.sin(beta)      # along e1 = y
        w = k0 * one_minus_ca             # along theta_hat = (sin, 0, cos)
        return p * c + w * s, u, -p * s + w * c

    def rho2(alpha, beta):
        kx, ky, kz = kappa(alpha, beta)
        env2 = math.exp(-0.5 * (sx2 * kx * kx + sy2 * ky * ky + sz2 * kz * kz))
        if env2 == 0.0:
            return 0.0
        d = float(sf.dirichlet(M, a0 * kx)) if M > 1 else 1.0
        return ov2 * env2 * d * d

    def band_points(alpha):
        """beta values in (0, 2 pi) where kappa_x hits a principal maximum."""
        if M == 1:
            return []
        radial = k0 * math.sin(alpha) * c
        offset = k0 * 2.0 * math.sin(alpha / 2) ** 2 * s
        if abs(radial) < 1e-300:
            return []
        lo, hi = sorted(((offset - radial) * a0 / (2 * math.pi), (offset + radial) * a0 / (2 * math.pi)))
        pts = []
        for n in range(math.ceil(lo), math.floor(hi) + 1):
            cb = (2 * math.pi * n / a0 - offset) / radial
            if -1.0 < cb < 1.0:
                b = math.acos(cb)
                pts.extend([b, 2 * math.pi - b])
        return sorted(pts)

    return rho2, band_points


def gain_shell_quadrature(params: LatticeParams, beam: BeamParams, theta: float,
                          rtol: float = QUAD_RTOL) -> GainResult:
    """|rho_q|^2 integrated over the full sphere |k| = k0.

    Polar angle alpha is measured from -theta_hat, where the structure factor
    peaks; the polar range is split where the widest envelope has decayed to
    ~1e-18, and the far remainder is integrated too.
    """
    rho2, band_points = _shell_integrand_factory(params, beam, theta)
    inner_rel = [0.0]

    def inner(alpha):
        pts = band_points(alpha)
        edges = [0.0] + [p for p in pts if 0.0 < p < 2 * math.pi] + [2 * math.pi]
        total, err = 0.0, 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi - lo < 1e-15:
                continue
            v, e = integrate.quad(lambda b: rho2(alpha, b), lo, hi, epsabs=0.0,
                                  epsrel=rtol * 1e-2, limit=200)
            total += v
            err += e
        if total > 0:
            inner_rel[0] = max(inner_rel[0], err / total)
        return total * math.sin(alpha)

    sigma_min = float(np.min(params.sigmas))
    arg = _TAIL / (2.0 * beam.k0 * sigma_min)
    alpha_c = 2.0 * math.asin(arg) if arg < 1.0 else math.pi
    near, near_err = integrate.quad(inner, 0.0, alpha_c, epsabs=0.0, epsrel=rtol * 1e-1, limit=400)
    far, far_err = (0.0, 0.0)
    if alpha_c < math.pi:
        far, far_err = integrate.quad(inner, alpha_c, math.pi, epsabs=max(near, 1e-300) * rtol * 1e-3,
                                      epsrel=rtol * 1e-1, limit=200)
    total = near + far
    rel = (near_err + far_err) / total + inner_rel[0] if total > 0 else 0.0
    if rel > rtol:
        raise QuadratureError("shell quadrature did not converge", rel)
    return GainResult(prefactor(params, beam) * beam.k0 ** 2 * total,
                      "shell_quadrature", theta, regime(params), rel,
                      tuple(validate(params, beam).warnings()))


def band_sum_z(params: LatticeParams) -> float:
    """Exact line integral of exp(-sigma_x^2 k^2 / 2) D_M(a0 k)^2 over k.

    Expanding D_M^2 = sum_m (M - |m|) exp(i m a0 k) gives
    sqrt(2 pi) / sigma_x * sum_{|m| < M} (M - |m|) exp(-m^2 a0^2 / (2 sigma_x^2)).
    """
    m = np.arange(-(params.M - 1), params.M)
    terms = (params.M - np.abs(m)) * np.exp(-(m * params.a0) ** 2 / (2 * params.sigma_x ** 2))
    return math.sqrt(2 * math.pi) / params.sigma_x * float(np.sum(terms))


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    intercept: float
    r2: float


def fit_power_law(x, y) -> ScalingFit:
    """Least-squares line through (log x, log y)."""
    res = stats.linregress(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)))
    return ScalingFit(float(res.slope), float(res.intercept), float(res.rvalue ** 2))


def scaling_sweep(params: LatticeParams, beam: BeamParams, M_values, theta: float,
                  method: str = "plane"):
    """Gain at each M (all else fixed) and the fitted power-law exponent."""
    fn = {"plane": gain_plane_quadrature, "shell": gain_shell_quadrature}[method]
    gains = [fn(params.replace(M=int(M)), beam, theta).value for M in M_values]
    return np.asarray(gains), fit_power_law(M_values, gains)
