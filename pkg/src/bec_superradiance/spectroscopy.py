"""
Gain spectrum along the lattice axis and its sideband diagnostics.

For a recoil mode q x_hat the gain is

    G(q) = (G_0 / sigma_z) exp(-sigma_x^2 s^2 / 2) D_M(a0 s)^2,   s = k0 + q,

with principal maxima where a0 s / 2 = n pi. The envelope pulls each
non-zero order's local maximum slightly toward s = 0; peaks are therefore
reported at their phase-matched position, with the actual grid maximum
(after parabolic refinement) kept alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import structure_factor as sf
from .gain_engine import g0
from .physcore import BeamParams, LatticeParams

DEFAULT_ORDERS = 5
POINTS_PER_LOBE = 32
MIN_POINTS_PER_LOBE = 4
NUMERICAL_FLOOR = 1e-300


class GridTooCoarseError(ValueError):
    pass


class DegenerateSpectrumError(RuntimeError):
    pass


@dataclass(frozen=True)
class Peak:
    order: int
    q: float
    gain: float
    q_max: float
    gain_max: float


@dataclass(frozen=True)
class GainSpectrum:
    q_grid: np.ndarray
    gain: np.ndarray
    peaks: list[Peak] = field(default_factory=list)
    grid_resolution: float = 0.0

    def peaks_above(self, fraction: float) -> list[Peak]:
        top = float(np.max(self.gain)) if len(self.gain) else 0.0
        return [p for p in self.peaks if p.gain > fraction * top]


def spectral_shape(params: LatticeParams, s):
    """exp(-sigma_x^2 s^2 / 2) D_M(a0 s)^2, i.e. the spectrum without G_0 / sigma_z."""
    s = np.asarray(s, dtype=float)
    return np.exp(-0.5 * (params.sigma_x * s) ** 2) * sf.dirichlet(params.M, params.a0 * s) ** 2


def gain_at(params: LatticeParams, beam: BeamParams, q):
    return g0(params, beam) / params.sigma_z * spectral_shape(params, beam.k0 + np.asarray(q, float))


def default_q_range(params: LatticeParams, beam: BeamParams, orders: int = DEFAULT_ORDERS):
    span = orders * 2 * math.pi / params.a0
    return (-span - beam.k0, span - beam.k0)


def default_points(params: LatticeParams, q_range) -> int:
    lobe = 2 * math.pi / (params.M * params.a0)
    return int(math.ceil((q_range[1] - q_range[0]) / lobe * POINTS_PER_LOBE)) + 1


def _local_maxima(y):
    i = np.arange(1, len(y) - 1)
    mask = (y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])
    return i[mask]


def _parabolic(x, y, i):
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2 * y1 + y2
    if denom == 0:
        return x[i], y1
    d = 0.5 * (y0 - y2) / denom
    h = x[i + 1] - x[i]
    return x[i] + d * h, y1 - 0.25 * (y0 - y2) * d


def spectrum(params: LatticeParams, beam: BeamParams, q_range=None, n_points=None) -> GainSpectrum:
    """Closed-form spectrum on a uniform q grid with principal peaks attached."""
    if q_range is None:
        q_range = default_q_range(params, beam)
    if n_points is None:
        n_points = default_points(params, q_range)
    q = np.linspace(q_range[0], q_range[1], int(n_points))
    dq = q[1] - q[0]
    lobe = 2 * math.pi / (params.M * params.a0)
    if lobe / dq < MIN_POINTS_PER_LOBE:
        raise GridTooCoarseError(
            f"main lobe 2pi/(M a0) = {lobe:.4g} spans {lobe / dq:.2f} grid points "
            f"(need >= {MIN_POINTS_PER_LOBE})")
    gain = gain_at(params, beam, q)
    s = beam.k0 + q
    peaks = []
    for i in _local_maxima(gain):
        n = int(round(params.a0 * s[i] / (2 * math.pi)))
        # sidelobes sit at least 3 pi / M from a principal maximum
        if abs(params.a0 * s[i] - 2 * math.pi * n) > math.pi / params.M:
            continue
        q_n = 2 * math.pi * n / params.a0 - beam.k0
        q_max, g_max = _parabolic(q, gain, i)
        peaks.append(Peak(n, q_n, float(gain_at(params, beam, q_n)), float(q_max), float(g_max)))
    return GainSpectrum(q, gain, peaks, dq)


def phase_match(k, beam: BeamParams, params: LatticeParams, tolerance: float = 1e-6):
    """Order n if (k - k0) . a0 x_hat is within ``tolerance`` of 2 pi n, else None."""
    phase = params.a0 * float((np.asarray(k, float) - beam.k0_vector)[0])
    n = int(round(phase / (2 * math.pi)))
    return n if abs(phase - 2 * math.pi * n) <= tolerance else None


@dataclass(frozen=True)
class SidebandResult:
    ratio: float
    global_max: float
    second_max: float
    second_s: float
    second_kind: str  # "principal" or "sidelobe"


def _refine_max(f, lo, hi):
    res = optimize.minimize_scalar(lambda x: -f(x), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12 * max(1.0, abs(hi))})
    return float(res.x), float(-res.fun)


def sideband_details(params: LatticeParams, beam: BeamParams, orders: int = DEFAULT_ORDERS,
                     points_per_lobe: int = POINTS_PER_LOBE) -> SidebandResult:
    """Global maximum over the second-highest local maximum of the spectrum.

    The second maximum is any other local maximum: a neighbouring principal
    order when the envelope is flat, the main peak's own first Dirichlet
    sidelobe once the envelope has killed the other orders. Grid maxima are
    refined with a bounded Brent search on the exact spectrum.
    """
    if params.M < 2:
        raise ValueError("sideband_ratio needs M >= 2")
    span = orders * 2 * math.pi / params.a0
    lobe = 2 * math.pi / (params.M * params.a0)
    n = int(math.ceil(2 * span / lobe * points_per_lobe)) + 1
    s = np.linspace(-span, span, n)
    y = spectral_shape(params, s)
    f = lambda x: float(spectral_shape(params, x))
    cands = []
    for i in _local_maxima(y):
        xm, ym = _refine_max(f, s[i - 1], s[i + 1])
        cands.append((ym, xm))
    cands.sort(reverse=True)
    if len(cands) < 2 or cands[1][0] <= NUMERICAL_FLOOR:
        raise DegenerateSpectrumError("no second local maximum above the numerical floor")
    (gmax, _), (second, xs) = cands[0], cands[1]
    order = round(params.a0 * xs / (2 * math.pi))
    kind = "principal" if abs(params.a0 * xs - 2 * math.pi * order) <= math.pi / params.M and order != 0 else "sidelobe"
    return SidebandResult(gmax / second, gmax, second, xs, kind)


def sideband_ratio(params: LatticeParams, beam: BeamParams, **kw) -> float:
    return sideband_details(params, beam, **kw).ratio


@dataclass(frozen=True)
class RatioCurve:
    sigma_x: np.ndarray
    ratio: np.ndarray
    kind: list[str]

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.ratio) >= -1e-12 * self.ratio[:-1]))

    @property
    def crossover_sigma(self):
        """First sigma_x at which the second maximum becomes a sidelobe."""
        for sx, k in zip(self.sigma_x, self.kind):
            if k == "sidelobe":
                return float(sx)
        return None


def ratio_curve(params: LatticeParams, beam: BeamParams, sigma_x_grid, **kw) -> RatioCurve:
    grid = np.asarray(sigma_x_grid, dtype=float)
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("sigma_x grid must be positive and strictly ascending")
    results = [sideband_details(params.replace(sigma_x=float(sx)), beam, **kw) for sx in grid]
    return RatioCurve(grid, np.array([r.ratio for r in results]), [r.second_kind for r in results])


def sidelobe_ratio(M: int) -> float:
    """M^2 sin^2(3 pi / (2 M)): main-peak-to-first-sidelobe ratio of D_M^2, flat envelope."""
    return M * M * math.sin(3 * math.pi / (2 * M)) ** 2
