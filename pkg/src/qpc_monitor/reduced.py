"""Electron dynamics with the detector traced out.

Summing the n-resolved equations over ``n`` gives a closed Bloch-type
system in which the detector only dephases the coherence at rate
``gamma_d = d1``:

    d s11 = i W (s12 - s21),   d s22 = -d s11,
    d s12 = i eps s12 + i W (s11 - s22) - (gamma_d / 2) s12.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DegenerateParamsError
from .model import ReducedDensityMatrix, SystemParams, validate_params


def reduced_generator(params: SystemParams) -> np.ndarray:
    """Real 4x4 generator acting on ``(s11, s22, Re s12, Im s12)``."""
    w, eps, g = params.omega0, params.epsilon, params.d1
    return np.array([
        [0.0, 0.0, 0.0, -2 * w],
        [0.0, 0.0, 0.0, 2 * w],
        [0.0, 0.0, -g / 2, -eps],
        [w, -w, eps, -g / 2],
    ])


def _bloch_generator(params: SystemParams) -> np.ndarray:
    """Generator on ``(s11 - s22, Re s12, Im s12)``; the trace is fixed at 1."""
    w, eps, g = params.omega0, params.epsilon, params.d1
    return np.array([
        [0.0, 0.0, -4 * w],
        [0.0, -g / 2, -eps],
        [w, eps, -g / 2],
    ])


def evolve_reduced(init: ReducedDensityMatrix, params: SystemParams,
                   t_grid) -> list[ReducedDensityMatrix]:
    """Exact propagation by the matrix exponential of the generator.

    Working with the population difference keeps the trace at 1 and keeps
    structurally decoupled components (such as the ground-state coherence
    for aligned levels) free of round-off leakage.
    """
    validate_params(params)
    gen = _bloch_generator(params)
    trace = init.s11 + init.s22
    x0 = np.array([init.s11 - init.s22, init.s12.real, init.s12.imag])
    out = []
    for t in np.asarray(t_grid, dtype=float):
        z, re, im = expm(gen * t) @ x0
        out.append(ReducedDensityMatrix(float((trace + z) / 2),
                                        float((trace - z) / 2),
                                        complex(re, im)))
    return out


@dataclass(frozen=True)
class ClosedFormSolution:
    """Rates of the aligned-level solution for an electron starting left.

    ``omega = sqrt(gamma_d^2 - 64 omega0^2)`` is imaginary below
    ``gamma_d = 8 omega0``; ``e_plus``/``e_minus`` are ``(gamma_d +- omega)/4``.
    """

    omega: complex
    e_plus: complex
    e_minus: complex
    prefactor_sigma12: complex

    @classmethod
    def from_params(cls, params: SystemParams) -> ClosedFormSolution:
        g, w = params.d1, params.omega0
        omega = cmath.sqrt(g * g - 64 * w * w)
        pref = 2 * w / omega if omega != 0 else complex(math.inf)
        return cls(omega, (g + omega) / 4, (g - omega) / 4, pref)

    @property
    def confluent(self) -> bool:
        return self.omega == 0


def closed_form_localized(params: SystemParams, t):
    """``(s11(t), s12(t))`` for aligned levels and the electron starting left.

    The coherence prefactor is ``2 omega0 / omega``; it is the value that
    reproduces ``d s12/dt = i omega0`` at ``t = 0``. At ``omega = 0`` the
    confluent limit is used.
    """
    if params.epsilon != 0:
        raise ValueError("closed form only exists for epsilon = 0")
    validate_params(params)
    g, w = params.d1, params.omega0
    sol = ClosedFormSolution.from_params(params)
    t = np.asarray(t, dtype=float)
    decay = np.exp(-g * t / 4)
    if sol.confluent:
        s11 = 0.5 + 0.5 * decay * (1 + g * t / 4)
        s12 = 1j * w * t * decay
        return s11, s12

    omega = sol.omega
    em = np.exp(-sol.e_minus * t)
    # e^{-e_- t} - e^{-e_+ t} without cancellation for small omega
    diff = -em * np.expm1(-omega * t / 2)
    total = 2 * em - diff
    s11 = 0.5 + 0.25 * (total + (g / omega) * diff)
    s12 = 1j * (2 * w / omega) * diff
    if np.any(np.abs(np.imag(s11)) > 1e-12):
        raise ArithmeticError("closed form produced a complex population")
    return np.real(s11), s12


def zeno_time(params: SystemParams) -> float:
    """Relaxation time ``4 / (gamma_d - Re omega)``; tends to ``gamma_d / 8 omega0^2``."""
    validate_params(params)
    g, w = params.d1, params.omega0
    if g <= 0 or w <= 0:
        raise DegenerateParamsError("zeno time needs d1 > 0 and omega0 > 0")
    omega = cmath.sqrt(g * g - 64 * w * w)
    # g - Re(omega) = 64 w^2 / (g + omega) for real omega; avoids cancellation
    if omega.imag == 0 and omega.real > 0:
        denom = 64 * w * w / (g + omega.real)
    else:
        denom = g - omega.real
    return 4.0 / denom


def slow_rate(params: SystemParams) -> float:
    """Slowest relaxation rate ``e_-`` of the localized solution (real part)."""
    return 1.0 / zeno_time(params)


def ground_state_solution(params: SystemParams, t):
    """Pure dephasing of the symmetric superposition for aligned levels."""
    if params.epsilon != 0:
        raise ValueError("ground-state solution requires epsilon = 0")
    t = np.asarray(t, dtype=float)
    return np.full_like(t, 0.5), 0.5 * np.exp(-params.d1 * t / 2) + 0j
