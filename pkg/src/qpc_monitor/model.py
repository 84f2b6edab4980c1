"""Shared domain types: system parameters, density matrices, initial states.

Units are hbar = e = 1 throughout. Rates, energies and frequencies share one
unit; configs conventionally measure them in units of the interdot coupling
``omega0`` and times in units of ``1/omega0``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NegativeRateError,
    NonFiniteError,
    TransmissionOutOfRange,
    ZeroCapacityError,
)

HBAR = 1.0
CHARGE = 1.0

# Damping regime boundaries, as multiples of omega0.
WEAK_BELOW = 0.25
STRONG_ABOVE = 8.0

# slack for transmissions that exceed 1 only through round-off
_ROUND_OFF = 1e-12


@dataclass(frozen=True)
class SystemParams:
    """Double dot monitored by a point contact.

    Attributes
    ----------
    omega0 : float
        Interdot tunnel coupling.
    epsilon : float
        Level detuning ``E2 - E1``.
    d1 : float
        Collector penetration rate while the left dot is occupied. It is
        also the dephasing rate of the double-dot coherence.
    """

    omega0: float
    d1: float
    epsilon: float = 0.0

    @property
    def gamma_d(self) -> float:
        return self.d1

    @property
    def regime(self) -> str:
        """'weak', 'boundary', 'strong', or 'decoupled' (omega0 == 0)."""
        if self.omega0 == 0:
            return "decoupled"
        ratio = self.d1 / self.omega0
        if ratio < WEAK_BELOW:
            return "weak"
        if ratio > STRONG_ABOVE:
            return "strong"
        return "boundary"

    def replace(self, **changes) -> SystemParams:
        values = {"omega0": self.omega0, "d1": self.d1, "epsilon": self.epsilon}
        values.update(changes)
        return SystemParams(**values)


def validate_params(raw: SystemParams) -> SystemParams:
    """Check parameter invariants and return ``raw`` unchanged.

    ``omega0 == 0`` is accepted: it decouples the double dot and leaves the
    bare detector, which several checks rely on.
    """
    for name in ("omega0", "d1", "epsilon"):
        value = getattr(raw, name)
        if not math.isfinite(value):
            raise NonFiniteError(f"{name} must be finite, got {value!r}")
    if raw.omega0 < 0:
        raise NegativeRateError(f"omega0 must be >= 0, got {raw.omega0}")
    if raw.d1 < 0:
        raise NegativeRateError(f"d1 must be >= 0, got {raw.d1}")
    return raw


@dataclass(frozen=True)
class DetectorMicroParams:
    """Microscopic description of the bare point contact.

    ``coupling`` is the emitter-collector hopping amplitude, ``rho_l`` and
    ``rho_r`` the reservoir densities of states, ``v_d`` the bias and
    ``delta_nu`` the measurement band width. ``t1``/``t2`` are the
    transmissions with the left/right dot occupied; only full blocking
    (``t2 = 0``) enters the dynamics.
    """

    coupling: float
    rho_l: float
    rho_r: float
    v_d: float
    delta_nu: float = 1.0
    t1: float | None = None
    t2: float = 0.0

    def __post_init__(self):
        for name in ("coupling", "rho_l", "rho_r", "v_d", "delta_nu", "t2"):
            if not math.isfinite(getattr(self, name)):
                raise NonFiniteError(f"{name} must be finite")
        if self.v_d <= 0:
            raise NegativeRateError("v_d must be > 0")
        if self.delta_nu <= 0:
            raise NegativeRateError("delta_nu must be > 0")
        if self.rho_l < 0 or self.rho_r < 0:
            raise NegativeRateError("densities of states must be >= 0")
        t = self.transmission
        if not 0.0 <= t <= 1.0:
            raise TransmissionOutOfRange(f"transmission {t} outside [0, 1]")
        t1 = t if self.t1 is None else self.t1
        if self.t2 > t1:
            raise TransmissionOutOfRange("t2 must not exceed t1")

    @classmethod
    def from_transmission(cls, transmission, v_d, delta_nu=1.0, rho=1.0):
        """Build parameters that realise a given transmission ``T``.

        Uses equal densities of states ``rho`` and solves
        ``(2 pi)^2 coupling^2 rho^2 = T`` for the coupling.
        """
        if not 0.0 <= transmission <= 1.0:
            raise TransmissionOutOfRange(
                f"transmission {transmission} outside [0, 1]")
        coupling = math.sqrt(transmission) / (2 * math.pi * rho)
        return cls(coupling=coupling, rho_l=rho, rho_r=rho, v_d=v_d,
                   delta_nu=delta_nu)

    @property
    def transmission(self) -> float:
        """``(2 pi)^2 coupling^2 rho_l rho_r``; round-off above 1 is clipped."""
        raw = (2 * math.pi) ** 2 * self.coupling ** 2 * self.rho_l * self.rho_r
        return 1.0 if 1.0 < raw <= 1.0 + _ROUND_OFF else raw

    @property
    def penetration_rate(self) -> float:
        """``D = 2 pi coupling^2 rho_l rho_r v_d``."""
        return 2 * math.pi * self.coupling ** 2 * self.rho_l * self.rho_r * self.v_d

    @property
    def large_bias_ratio(self) -> float:
        """``v_d / (coupling^2 max(rho))``; the rate description needs it >> 1."""
        denom = self.coupling ** 2 * max(self.rho_l, self.rho_r)
        return math.inf if denom == 0 else self.v_d / denom


@dataclass(frozen=True)
class ReducedDensityMatrix:
    """Electron state with the detector traced out. ``s21`` is implied."""

    s11: float
    s22: float
    s12: complex

    @property
    def s21(self) -> complex:
        return complex(self.s12).conjugate()

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s21, self.s22]],
                        dtype=complex)

    def is_valid(self, tol: float = 1e-9) -> bool:
        if abs(self.s11 + self.s22 - 1.0) > tol:
            return False
        if not (-tol <= self.s11 <= 1 + tol and -tol <= self.s22 <= 1 + tol):
            return False
        return abs(self.s12) ** 2 <= self.s11 * self.s22 + tol


class InitialCondition(enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    GROUND = "ground"
    MIXTURE = "mixture"

    def reduced(self) -> ReducedDensityMatrix:
        return {
            InitialCondition.LEFT: ReducedDensityMatrix(1.0, 0.0, 0j),
            InitialCondition.RIGHT: ReducedDensityMatrix(0.0, 1.0, 0j),
            InitialCondition.GROUND: ReducedDensityMatrix(0.5, 0.5, 0.5 + 0j),
            InitialCondition.MIXTURE: ReducedDensityMatrix(0.5, 0.5, 0j),
        }[self]

    @classmethod
    def parse(cls, value) -> InitialCondition:
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class NResolvedState:
    """Joint electron + collector state truncated at ``n_max`` electrons.

    ``s11[n]``, ``s22[n]`` and ``s12[n]`` are the density-matrix blocks with
    ``n`` electrons in the collector. ``s21`` is never stored.
    """

    s11: np.ndarray
    s22: np.ndarray
    s12: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in ("s11", "s22", "s12"):
            arr = getattr(self, name)
            arr.setflags(write=False)
        if not (len(self.s11) == len(self.s22) == len(self.s12)):
            raise ValueError("block arrays must have equal length")

    @property
    def n_max(self) -> int:
        return len(self.s11) - 1

    @property
    def s21(self) -> np.ndarray:
        return np.conj(self.s12)

    @property
    def trace(self) -> float:
        return float(np.sum(self.s11) + np.sum(self.s22))

    @property
    def top_mass(self) -> float:
        return float(self.s11[-1] + self.s22[-1])

    def padded(self, n_max: int) -> NResolvedState:
        """Copy of the state with room for ``n_max`` collector electrons."""
        extra = n_max - self.n_max
        if extra < 0:
            raise ValueError("cannot shrink a state")
        return NResolvedState(np.pad(self.s11, (0, extra)),
                              np.pad(self.s22, (0, extra)),
                              np.pad(self.s12, (0, extra)), self.t)


def build_initial(kind, n_capacity: int) -> NResolvedState:
    """State with the electron prepared as ``kind`` and an empty collector.

    The returned state holds blocks ``n = 0 .. n_capacity``.
    """
    if n_capacity < 1:
        raise ZeroCapacityError(f"n_capacity must be >= 1, got {n_capacity}")
    rho = InitialCondition.parse(kind).reduced()
    s11 = np.zeros(n_capacity + 1)
    s22 = np.zeros(n_capacity + 1)
    s12 = np.zeros(n_capacity + 1, dtype=complex)
    s11[0], s22[0], s12[0] = rho.s11, rho.s22, rho.s12
    return NResolvedState(s11, s22, s12, 0.0)


@dataclass(frozen=True)
class CountingDistribution:
    """Probability ``probs[n]`` of ``n`` electrons in the collector at ``t``."""

    t: float
    probs: np.ndarray
    source: str = "exact"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.probs.setflags(write=False)

    @property
    def n(self) -> np.ndarray:
        return np.arange(len(self.probs))

    @property
    def total(self) -> float:
        return float(np.sum(self.probs))

    def mean(self) -> float:
        return float(np.dot(self.n, self.probs) / self.total)

    def variance(self) -> float:
        m = self.mean()
        return float(np.dot((self.n - m) ** 2, self.probs) / self.total)

    def padded(self, length: int) -> np.ndarray:
        return np.pad(np.asarray(self.probs, dtype=float),
                      (0, max(0, length - len(self.probs))))
