"""Direct integration of the n-resolved double-dot + detector equations.

For every collector occupation ``n`` the 2x2 block ``sigma^(n)`` obeys

    d s11[n] = -D1 s11[n] + D1 s11[n-1] + i W (s12[n] - s21[n])
    d s22[n] = -i W (s12[n] - s21[n])
    d s12[n] = i eps s12[n] + i W (s11[n] - s22[n]) - (D1/2) s12[n]

with ``W = omega0``. Electrons only hop into the collector while the left
dot is occupied, so the coherence has no gain term. This is the reference
solver all other routes are checked against.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import CapacityExceeded, StepSizeUnderflow
from .model import (
    CountingDistribution,
    NResolvedState,
    ReducedDensityMatrix,
    SystemParams,
    validate_params,
)

log = logging.getLogger(__name__)

GROWTH_FACTOR = 1.25


@dataclass(frozen=True)
class StateDerivative:
    d11: np.ndarray
    d22: np.ndarray
    d12: np.ndarray


@dataclass(frozen=True)
class EvolveOptions:
    t_grid: Sequence[float]
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    tail_epsilon: float = 1e-12
    max_capacity: int = 200_000
    method: str = "RK45"

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0 or self.tail_epsilon <= 0:
            raise ValueError("tolerances must be positive")
        grid = np.asarray(self.t_grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("t_grid must be a non-empty 1-D sequence")
        if grid[0] < 0 or np.any(np.diff(grid) <= 0):
            raise ValueError("t_grid must be strictly increasing and >= 0")


def default_capacity(d1: float, t_end: float) -> int:
    """Initial truncation from the Poisson tail of the bare detector."""
    mean = max(d1 * t_end, 0.0)
    return int(math.ceil(4 + mean + 6 * math.sqrt(mean)))


def derivative(state: NResolvedState, params: SystemParams) -> StateDerivative:
    d1, w, eps = params.d1, params.omega0, params.epsilon
    s11 = np.asarray(state.s11, dtype=float)
    s22 = np.asarray(state.s22, dtype=float)
    s12 = np.asarray(state.s12, dtype=complex)
    coh = 1j * w * (s12 - np.conj(s12))
    gain = np.concatenate(([0.0], s11[:-1]))
    d11 = (-d1 * s11 + d1 * gain + coh).real
    d22 = (-coh).real
    d12 = 1j * eps * s12 + 1j * w * (s11 - s22) - 0.5 * d1 * s12
    return StateDerivative(d11, d22, d12)


def _pack(state: NResolvedState) -> np.ndarray:
    return np.concatenate([state.s11, state.s22,
                           np.real(state.s12), np.imag(state.s12)])


def _unpack(y: np.ndarray, t: float) -> NResolvedState:
    s11, s22, re, im = np.split(np.array(y, dtype=float), 4)
    return NResolvedState(s11, s22, re + 1j * im, float(t))


def _make_rhs(params: SystemParams, size: int):
    d1, w, eps = params.d1, params.omega0, params.epsilon
    half = 0.5 * d1
    out = np.empty(4 * size)

    def rhs(_t, y):
        s11 = y[:size]
        s22 = y[size:2 * size]
        re = y[2 * size:3 * size]
        im = y[3 * size:]
        d11 = out[:size]
        # i W (s12 - s21) = -2 W Im s12
        np.multiply(-d1, s11, out=d11)
        d11[1:] += d1 * s11[:-1]
        d11 -= 2 * w * im
        out[size:2 * size] = 2 * w * im
        out[2 * size:3 * size] = -eps * im - half * re
        out[3 * size:] = eps * re + w * (s11 - s22) - half * im
        return out.copy()

    return rhs


def evolve(init: NResolvedState, params: SystemParams,
           opts: EvolveOptions) -> list[NResolvedState]:
    """Integrate from ``init`` and return the state at each ``opts.t_grid``.

    The truncation grows by 25% and the run restarts whenever the top block
    carries more than ``opts.tail_epsilon`` probability at any accepted step.
    """
    validate_params(params)
    grid = np.asarray(opts.t_grid, dtype=float)
    t0 = float(init.t)
    if grid[0] < t0:
        raise ValueError("t_grid starts before the initial state")
    t_end = float(grid[-1])
    n_max = max(init.n_max, default_capacity(params.d1, t_end - t0))

    while True:
        if n_max > opts.max_capacity:
            raise CapacityExceeded(
                f"truncation {n_max} exceeds the hard cap {opts.max_capacity}")
        size = n_max + 1
        y0 = _pack(init.padded(n_max))
        if t_end == t0:
            return [_unpack(y0, t0) for _ in grid]
        sol = solve_ivp(_make_rhs(params, size), (t0, t_end), y0,
                        method=opts.method, rtol=opts.rel_tol,
                        atol=opts.abs_tol, dense_output=True)
        if not sol.success:
            raise StepSizeUnderflow(f"integration failed: {sol.message}")
        top = np.max(np.abs(sol.y[size - 1] + sol.y[2 * size - 1]))
        if top <= opts.tail_epsilon:
            break
        log.debug("top block mass %.3g > %.3g, growing n_max %d",
                  top, opts.tail_epsilon, n_max)
        n_max = int(math.ceil(GROWTH_FACTOR * n_max))

    states = []
    for t in grid:
        y = y0 if t == t0 else sol.sol(t)
        states.append(_unpack(y, t))
    return states


def counting_distribution(state: NResolvedState) -> CountingDistribution:
    """``P_n = s11[n] + s22[n]``, with round-off negatives clipped to zero."""
    probs = np.asarray(state.s11 + state.s22, dtype=float)
    negative = probs < 0
    if np.any(negative):
        log.debug("clipped %.3g of negative probability at t=%g",
                  -float(np.sum(probs[negative])), state.t)
        probs = np.where(negative, 0.0, probs)
    return CountingDistribution(state.t, probs, source="ode")


def reduce(state: NResolvedState) -> ReducedDensityMatrix:
    return ReducedDensityMatrix(float(np.sum(state.s11)),
                                float(np.sum(state.s22)),
                                complex(np.sum(state.s12)))


def solve_counting(params: SystemParams, kind, times: Sequence[float],
                   **options) -> list[CountingDistribution]:
    """Counting distributions at ``times`` for an electron prepared as ``kind``."""
    from .model import build_initial

    times = np.asarray(times, dtype=float)
    init = build_initial(kind, max(1, default_capacity(params.d1, times[-1])))
    states = evolve(init, params, EvolveOptions(t_grid=times, **options))
    return [counting_distribution(s) for s in states]
