"""
Parameter types and unit conventions.

Everything is dimensionless: lengths in units of the lattice constant a0
(so a0 = 1 by default), hbar = m = 1, and the pump wavevector defaults to
k0 = pi / a0 because the lattice is formed with a0 = lambda / 2.

All parameter objects are frozen dataclasses and validate on construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

FARFIELD_THRESHOLD = 10.0

PUMP_DIRECTION = np.array([0.0, 1.0, 0.0])


class ParameterError(ValueError):
    """Raised for a non-physical parameter value; ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _require_positive(name: str, value: float, label: str | None = None) -> None:
    if not np.isfinite(value) or value <= 0:
        raise ParameterError(label or name, f"must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class LatticeParams:
    """Geometry of the condensate array.

    M sites sit on the x axis with spacing a0, centred on the origin. Each
    site is a Gaussian with half-widths (sigma_x, sigma_y, sigma_z). N is the
    atom number, kept as a real number for the mean-field treatment.
    """

    M: int
    sigma_x: float
    sigma_y: float
    sigma_z: float
    a0: float = 1.0
    N: float = 1.0

    def __post_init__(self):
        if isinstance(self.M, bool) or int(self.M) != self.M or self.M < 1:
            raise ParameterError("sites", f"M must be an integer >= 1, got {self.M!r}")
        object.__setattr__(self, "M", int(self.M))
        _require_positive("a0", self.a0, "lattice_constant")
        for name in ("sigma_x", "sigma_y", "sigma_z"):
            _require_positive(name, getattr(self, name))
        _require_positive("N", self.N, "atom_number")

    @property
    def L(self) -> float:
        """Condensate length M * a0."""
        return self.M * self.a0

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([self.sigma_x, self.sigma_y, self.sigma_z])

    @property
    def site_positions(self) -> np.ndarray:
        i = np.arange(1, self.M + 1)
        return (i - (self.M + 1) / 2.0) * self.a0

    @property
    def narrow(self) -> bool:
        """True when single-site wavefunctions are narrower than the spacing."""
        return self.sigma_x < self.a0

    def replace(self, **changes) -> "LatticeParams":
        return LatticeParams(**{**asdict(self), **changes})


@dataclass(frozen=True)
class BeamParams:
    """Pump beam: wavevector magnitude k0 (along +y) and coupling g.

    The pump frequency lives in the rotating frame and is not stored.
    """

    k0: float = math.pi
    g: float = 1.0

    def __post_init__(self):
        _require_positive("k0", self.k0)
        if not np.isfinite(self.g) or self.g < 0:
            raise ParameterError("g", f"must be >= 0, got {self.g!r}")

    @property
    def k0_vector(self) -> np.ndarray:
        return self.k0 * PUMP_DIRECTION

    def replace(self, **changes) -> "BeamParams":
        return BeamParams(**{**asdict(self), **changes})


@dataclass(frozen=True)
class TrapParams:
    """Harmonic approximation of one deep lattice well."""

    omega_T: float
    omega_r: float

    def __post_init__(self):
        _require_positive("omega_T", self.omega_T)
        _require_positive("omega_r", self.omega_r)

    @property
    def poisson_lambda(self) -> float:
        return self.omega_r / self.omega_T

    @classmethod
    def from_lattice_depth(cls, V0: float, omega_r: float, a0: float = 1.0, m: float = 1.0):
        """Trap frequency of V(x) = (V0 / a0^2) x^2, i.e. sqrt(2 V0 / (m a0^2))."""
        _require_positive("V0", V0)
        return cls(omega_T=math.sqrt(2.0 * V0 / (m * a0 * a0)), omega_r=omega_r)

    def replace(self, **changes) -> "TrapParams":
        return TrapParams(**{**asdict(self), **changes})


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def farfield_ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def warnings(self) -> list[str]:
        return [f"{c.name} = {c.value:.4g} is not >> 1 (needs > {c.threshold:g})" for c in self.failures]


def validate(params: LatticeParams, beam: BeamParams,
             threshold: float = FARFIELD_THRESHOLD) -> ValidationReport:
    """Report the far-field preconditions k0*sigma_j >> 1 and k0*a0 >> 1.

    Report only: a failed check never raises, computations go ahead.
    """
    items = [
        ("k0*sigma_x", beam.k0 * params.sigma_x),
        ("k0*sigma_y", beam.k0 * params.sigma_y),
        ("k0*sigma_z", beam.k0 * params.sigma_z),
        ("k0*a0", beam.k0 * params.a0),
    ]
    return ValidationReport(tuple(Check(n, v, threshold, v > threshold) for n, v in items))


@dataclass(frozen=True)
class UnitSystem:
    """Conversion between physical units and the dimensionless convention.

    ``length_unit`` is a0 and ``time_unit`` is 1/omega_r, both expressed in
    whatever physical units the caller uses.
    """

    length_unit: float
    time_unit: float

    def __post_init__(self):
        _require_positive("length_unit", self.length_unit)
        _require_positive("time_unit", self.time_unit)

    @classmethod
    def from_physical(cls, a0: float, omega_r: float) -> "UnitSystem":
        return cls(length_unit=a0, time_unit=1.0 / omega_r)

    def to_length(self, x):
        return np.asarray(x) / self.length_unit

    def from_length(self, x):
        return np.asarray(x) * self.length_unit

    def to_wavevector(self, k):
        return np.asarray(k) * self.length_unit

    def from_wavevector(self, k):
        return np.asarray(k) / self.length_unit

    def to_time(self, t):
        return np.asarray(t) / self.time_unit

    def from_time(self, t):
        return np.asarray(t) * self.time_unit

    def to_rate(self, w):
        return np.asarray(w) * self.time_unit

    def from_rate(self, w):
        return np.asarray(w) / self.time_unit


@dataclass(frozen=True)
class SystemParams:
    """Bundle read from / written to the JSON parameter schema."""

    lattice: LatticeParams
    beam: BeamParams = field(default_factory=BeamParams)
    trap: TrapParams | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"lattice": asdict(self.lattice), "beam": asdict(self.beam)}
        if self.trap is not None:
            out["trap"] = asdict(self.trap)
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SystemParams":
        if "lattice" not in data:
            raise ParameterError("lattice", "missing section")
        lat = _build(LatticeParams, data["lattice"], "lattice")
        beam = _build(BeamParams, data.get("beam", {}), "beam")
        trap = _build(TrapParams, data["trap"], "trap") if data.get("trap") is not None else None
        return cls(lat, beam, trap)

    @classmethod
    def from_json(cls, path: str | Path) -> "SystemParams":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _build(kind, section, name):
    if not isinstance(section, Mapping):
        raise ParameterError(name, "must be a JSON object")
    allowed = set(kind.__dataclass_fields__)
    unknown = set(section) - allowed
    if unknown:
        raise ParameterError(name, f"unknown field(s) {sorted(unknown)}")
    try:
        return kind(**section)
    except TypeError as exc:
        raise ParameterError(name, str(exc)) from None
