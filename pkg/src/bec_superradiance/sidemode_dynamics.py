"""
Mean-field side-mode dynamics with trap-level couplings.

Side-mode amplitudes c~_n (rotating frame, one per retained trap level n)
obey

    dc~_n/dt = A_n (G/2) (|c0|^2 / N) sum_m A_m c~_m exp(i (n - m) omega_T t),

with A_n = sqrt(Poisson(n; lambda)), lambda = omega_r / omega_T. In free mode
(trap switched off) every phase factor is one. The condensate amplitude c0
is depleted by

    dc0/dt = -(G/2) (|S|^2 / N) c0,   S = sum_m A_m c~_m exp(-i m omega_T t),

which makes |c0|^2 + sum |c~_n|^2 a constant of motion. With
``depleted=False`` |c0|^2 is held at N.

The quantum noise term is replaced by a c-number seed c~_n(0) = s A_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.integrate import solve_ivp

from .gain_engine import ScalingFit, fit_power_law
from .physcore import TrapParams

RTOL = 1e-9
ATOL = 1e-12
K_SIGMA = 6.0
TAIL_TOL = 1e-12


class DynamicsError(RuntimeError):
    pass


class FitQualityError(RuntimeError):
    pass


@dataclass(frozen=True)
class PoissonCoupling:
    lam: float
    levels: np.ndarray
    A: np.ndarray
    omega_T: float | None = None

    @property
    def p0(self) -> float:
        """Weight of the excluded n = 0 level."""
        return math.exp(-self.lam)

    def completeness(self) -> float:
        """p0 + sum A_n^2, which should be 1."""
        return self.p0 + float(np.sum(self.A ** 2))

    def mean(self) -> float:
        return float(np.sum(self.levels * self.A ** 2))


def poisson_couplings(trap, K: float = K_SIGMA, tail_tol: float = TAIL_TOL) -> PoissonCoupling:
    """Couplings over n in [max(1, floor(lam - K sqrt(lam))), ceil(lam + K sqrt(lam))].

    The window is widened, one level at a time, until each omitted tail holds
    less than ``tail_tol`` of the probability. Amplitudes come from the log
    pmf, so large lambda does not overflow.
    """
    lam = trap.poisson_lambda if isinstance(trap, TrapParams) else float(trap)
    omega_T = trap.omega_T if isinstance(trap, TrapParams) else None
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    width = K * math.sqrt(lam)
    lo = max(1, int(math.floor(lam - width)))
    hi = int(math.ceil(lam + width))
    while lo > 1 and stats.poisson.cdf(lo - 1, lam) - math.exp(-lam) > tail_tol:
        lo -= 1
    while stats.poisson.sf(hi, lam) > tail_tol:
        hi += 1
    n = np.arange(lo, hi + 1)
    A = np.exp(0.5 * stats.poisson.logpmf(n, lam))
    return PoissonCoupling(lam, n, A, omega_T)


def free_coupling(omega_r: float | None = None) -> PoissonCoupling:
    """The released-trap case: a single level with A = 1."""
    return PoissonCoupling(lam=float("inf"), levels=np.array([1]), A=np.array([1.0]), omega_T=None)


@dataclass(frozen=True)
class SideModeState:
    t: float
    c0: complex
    c_tilde: np.ndarray
    seed: float


def initial_state(couplings: PoissonCoupling, N: float, seed: float = 1.0, rng=None) -> SideModeState:
    """c~_n(0) = seed * A_n, c0 = sqrt(N). ``rng`` adds uniform random phases."""
    c = seed * couplings.A.astype(complex)
    if rng is not None:
        c = c * np.exp(2j * math.pi * rng.random(c.shape))
    return SideModeState(0.0, complex(math.sqrt(N)), c, seed)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    c0: np.ndarray
    c_tilde: np.ndarray  # shape (levels, times)
    levels: np.ndarray
    N: float
    sol: object = None

    @property
    def condensate_population(self) -> np.ndarray:
        return np.abs(self.c0) ** 2

    @property
    def side_population(self) -> np.ndarray:
        return np.sum(np.abs(self.c_tilde) ** 2, axis=0)

    @property
    def total_population(self) -> np.ndarray:
        return self.condensate_population + self.side_population


def _rhs_factory(couplings, G, N, mode, depleted):
    A = couplings.A
    m = len(A)
    if mode == "trapped":
        if couplings.omega_T is None:
            raise ValueError("trapped mode needs couplings built from TrapParams")
        # only (n - m) matters, so shift indices to keep phases small
        rel = (couplings.levels - couplings.levels[0]).astype(float)
        wT = couplings.omega_T
    elif mode == "free":
        rel, wT = np.zeros(m), 0.0
    else:
        raise ValueError(f"mode must be 'free' or 'trapped', got {mode!r}")
    half_g = 0.5 * G

    def rhs(t, y):
        c = y[:m]
        c0 = y[m]
        phase = np.exp(1j * wT * t * rel) if wT else None
        S = np.dot(A, c * np.conj(phase)) if wT else np.dot(A, c)
        pop0 = (c0.real * c0.real + c0.imag * c0.imag) if depleted else N
        dc = (half_g * pop0 / N * S) * (A * phase if wT else A)
        out = np.empty(m + 1, dtype=complex)
        out[:m] = dc
        out[m] = -half_g * (abs(S) ** 2 / N) * c0 if depleted else 0.0
        return out

    return rhs


def integrate(state0: SideModeState, couplings: PoissonCoupling, G_q: float, N: float,
              t_end: float, mode: str = "free", depleted: bool = True,
              n_samples: int = 2001, stop_population: float | None = None,
              rtol: float = RTOL, atol: float = ATOL) -> Trajectory:
    """Integrate the side-mode equations with an adaptive DOP853 stepper.

    ``stop_population`` ends the run once the side-mode population reaches
    that value. In trapped mode the step is capped so every relative phase
    (n - m) omega_T t is resolved.
    """
    if G_q < 0:
        raise ValueError("G_q must be >= 0")
    if state0.seed <= 0:
        raise ValueError("seed must be > 0")
    rhs = _rhs_factory(couplings, G_q, N, mode, depleted)
    y0 = np.concatenate([np.asarray(state0.c_tilde, complex), [state0.c0]])
    max_step = np.inf
    if mode == "trapped":
        spread = max(1, int(couplings.levels[-1] - couplings.levels[0]))
        max_step = 2 * math.pi / (couplings.omega_T * spread) / 4
    events = None
    if stop_population is not None:
        m = len(couplings.A)

        def reached(t, y):
            return float(np.sum(np.abs(y[:m]) ** 2)) - stop_population
        reached.terminal = True
        reached.direction = 1
        events = reached
    sol = solve_ivp(rhs, (state0.t, t_end), y0, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, events=events, max_step=max_step)
    if sol.status == -1:
        raise DynamicsError(f"integration failed at t = {sol.t[-1]:.6g}: {sol.message}")
    if not np.all(np.isfinite(sol.y)):
        raise DynamicsError("non-finite state encountered")
    t = np.linspace(state0.t, sol.t[-1], n_samples)
    y = sol.sol(t)
    y[:, -1] = sol.y[:, -1]
    return Trajectory(t, y[-1], y[:-1], couplings.levels, N, sol)


@dataclass(frozen=True)
class RateFit:
    rate: float
    r2: float
    t_window: tuple[float, float]


def fit_growth_rate(traj: Trajectory, low_factor: float = 10.0, high_fraction: float = 1e-2,
                    n_points: int = 400) -> RateFit:
    """Exponential rate of the side-mode population.

    Linear regression of log population over the window where it grows from
    ``low_factor`` times its initial value to ``high_fraction`` * N, sampled
    from the dense output.
    """
    P = traj.side_population
    lo, hi = low_factor * P[0], high_fraction * traj.N
    inside = np.nonzero((P >= lo) & (P <= hi))[0]
    if len(inside) < 2:
        raise FitQualityError("population never crosses the fitting window")
    t0, t1 = traj.t[inside[0]], traj.t[inside[-1]]
    t = np.linspace(t0, t1, n_points)
    if traj.sol is not None:
        y = traj.sol.sol(t)
        pop = np.sum(np.abs(y[:-1]) ** 2, axis=0)
    else:
        pop = np.interp(t, traj.t, P)
    res = stats.linregress(t, np.log(pop))
    return RateFit(float(res.slope), float(res.rvalue ** 2), (float(t0), float(t1)))


def growth_rate(trap: TrapParams | None, G_q: float, N: float = 1e6, seed: float = 1.0,
                mode: str | None = None) -> RateFit:
    """Undepleted run until the fit window is passed, then fit."""
    couplings = poisson_couplings(trap) if trap is not None else free_coupling()
    mode = mode or ("trapped" if trap is not None else "free")
    state = initial_state(couplings, N, seed)
    horizon = 400.0 / G_q
    traj = integrate(state, couplings, G_q, N, horizon, mode=mode, depleted=False,
                     stop_population=2e-2 * N)
    return fit_growth_rate(traj)


def linear_growth_rate(couplings: PoissonCoupling, G_q: float) -> float:
    """Asymptotic population growth rate from the linearised (undepleted) equations.

    In the lab frame b_n = c~_n exp(-i n omega_T t) the equations are linear
    with constant coefficients, db/dt = (-i Omega + (G/2) A A^T) b; the
    population grows at twice the largest real part of its eigenvalues.
    """
    A = couplings.A
    wT = couplings.omega_T or 0.0
    mat = 0.5 * G_q * np.outer(A, A) - 1j * np.diag(wT * (couplings.levels - couplings.levels[0]))
    return float(2 * np.max(np.linalg.eigvals(mat).real))


@dataclass(frozen=True)
class DephasingFit:
    omega_T: np.ndarray
    omega_r: float
    rates: np.ndarray
    losses: np.ndarray
    exponent: float
    coefficient: float
    r2: float
    sqrt_fit: ScalingFit

    def records(self):
        return [
            {"omega_T": float(w), "fitted_rate": float(r), "loss": float(l),
             "exponent": self.exponent, "r2": self.r2}
            for w, r, l in zip(self.omega_T, self.rates, self.losses)
        ]


def dephasing_loss(trap_sweep, omega_r: float, G_q: float, N: float = 1e6,
                   seed: float = 1.0, check: bool = True, executor=None) -> DephasingFit:
    """Gain loss G_q - G_q' across a sweep of trap frequencies at fixed omega_r.

    ``exponent`` is the log-log slope of loss against omega_T; ``coefficient``
    is the least-squares c in loss = c sqrt(omega_T omega_r). ``sqrt_fit``
    holds the power law of loss against sqrt(omega_T omega_r).
    """
    wT = np.asarray(sorted(trap_sweep), dtype=float)
    if wT[-1] / wT[0] < 10.0 * (1 - 1e-12):
        raise ValueError("trap sweep must span at least one decade")
    if np.any(np.sqrt(wT * omega_r) >= G_q):
        raise ValueError("sweep leaves the regime sqrt(omega_T omega_r) < G_q")
    traps = [TrapParams(float(w), omega_r) for w in wT]
    if executor is None:
        fits = [growth_rate(t, G_q, N, seed) for t in traps]
    else:
        fits = list(executor.map(growth_rate, traps, [G_q] * len(traps), [N] * len(traps),
                                 [seed] * len(traps)))
    rates = np.array([f.rate for f in fits])
    losses = G_q - rates
    if np.any(losses <= 0):
        raise FitQualityError("non-positive gain loss; cannot fit a power law")
    fit = fit_power_law(wT, losses)
    x = np.sqrt(wT * omega_r)
    coefficient = float(np.dot(x, losses) / np.dot(x, x))
    if check and fit.r2 < 0.9:
        raise FitQualityError(f"power-law fit R^2 = {fit.r2:.3f} < 0.9")
    return DephasingFit(wT, omega_r, rates, losses, fit.exponent, coefficient, fit.r2,
                        fit_power_law(x, losses))
