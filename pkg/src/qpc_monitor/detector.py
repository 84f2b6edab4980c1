"""The point contact on its own: counting laws, Bayesian update, current, noise.

With the double dot decoupled, the collector count obeys the rate equation
``dp_n/dt = -D1 p_n + D1 p_{n-1}``. Its generating function is
``exp(-D1 (1 - e^{ik}) t)``, so the exact law is Poisson with mean ``D1 t``;
the Gaussian forms below are its stationary-phase approximations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import gammaln

from .errors import CapacityExceeded, StepSizeUnderflow, TimeOrderError
from .model import CHARGE, CountingDistribution, DetectorMicroParams


def _tail_capacity(mean: float, sigmas: float = 10.0) -> int:
    return int(math.ceil(mean + sigmas * math.sqrt(mean) + 10))


def poisson_pn(d1: float, t: float, n):
    """Exact counting law ``e^{-D1 t} (D1 t)^n / n!``, evaluated in log space."""
    lam = d1 * t
    if lam < 0:
        raise ValueError("d1 * t must be >= 0")
    n = np.asarray(n)
    if lam == 0:
        return np.where(n == 0, 1.0, 0.0) if n.ndim else float(n == 0)
    logp = n * math.log(lam) - lam - gammaln(n + 1.0)
    out = np.exp(logp)
    return out if n.ndim else float(out)


def poisson_distribution(d1: float, t: float, n_max: int | None = None):
    if n_max is None:
        n_max = _tail_capacity(d1 * t)
    probs = poisson_pn(d1, t, np.arange(n_max + 1))
    return CountingDistribution(t, np.asarray(probs, dtype=float),
                                source="exact")


def gaussian_pn(d1: float, t: float, n):
    """Stationary-phase packet: mean and variance ``D1 t``.

    It describes a packet of width ``sqrt(2 D1 t)`` moving through n-space at
    group velocity ``D1``.
    """
    lam = d1 * t
    if lam <= 0:
        raise ValueError("gaussian_pn needs d1 * t > 0")
    n = np.asarray(n, dtype=float)
    out = np.exp(-(lam - n) ** 2 / (2 * lam)) / math.sqrt(2 * math.pi * lam)
    return out if n.ndim else float(out)


@dataclass(frozen=True)
class ConditionalObservation:
    """``n1`` collector electrons were read out at time ``t1``."""

    t1: float
    n1: int

    def __post_init__(self):
        if self.t1 < 0 or self.n1 < 0:
            raise ValueError("t1 and n1 must be >= 0")

    def delta_n(self, d1: float) -> float:
        """Deviation ``N1 - D1 t1`` of the reading from the mean count."""
        return self.n1 - d1 * self.t1


def conditional_distribution(d1: float, obs: ConditionalObservation,
                             t: float, n_max: int | None = None):
    """Counting law after a readout, renormalised over ``n = 0 .. n_max``.

    Restarting the rate equation from ``n1`` at ``t1`` gives a Gaussian
    centred at ``n1 + D1 (t - t1)`` with variance ``D1 (t - t1)``: the same
    drift as before the readout, but a narrower packet.
    """
    if t < obs.t1:
        raise TimeOrderError(f"t={t} precedes the observation time {obs.t1}")
    var = d1 * (t - obs.t1)
    centre = d1 * t + obs.delta_n(d1)
    if n_max is None:
        n_max = int(math.ceil(centre + 12 * math.sqrt(var) + 10))
    n = np.arange(n_max + 1, dtype=float)
    if var == 0:
        probs = np.where(n == obs.n1, 1.0, 0.0)
    else:
        logw = -(centre - n) ** 2 / (2 * var)
        w = np.exp(logw - logw.max())
        probs = w / w.sum()
    return CountingDistribution(t, probs, source="gaussian",
                                meta={"t1": obs.t1, "n1": obs.n1})


def conditional_pn(d1: float, obs: ConditionalObservation, t: float, n):
    n = np.asarray(n)
    dist = conditional_distribution(d1, obs, t)
    probs = dist.padded(int(np.max(n)) + 1)[n]
    return probs if n.ndim else float(probs)


def classical_rate_evolve(d1: float, t: float, n_max: int | None = None,
                          tail_epsilon: float = 1e-12, rtol: float = 1e-12,
                          atol: float = 1e-16) -> CountingDistribution:
    """Integrate the bare-detector rate equations directly.

    Raises ``CapacityExceeded`` when the top retained level ends up holding
    more than ``tail_epsilon`` probability.
    """
    if d1 < 0 or t < 0:
        raise ValueError("d1 and t must be >= 0")
    if n_max is None:
        n_max = _tail_capacity(d1 * t)
    size = n_max + 1
    p0 = np.zeros(size)
    p0[0] = 1.0
    if t == 0 or d1 == 0:
        return CountingDistribution(t, p0, source="ode")

    def rhs(_t, p):
        dp = -d1 * p
        dp[1:] += d1 * p[:-1]
        return dp

    sol = solve_ivp(rhs, (0.0, t), p0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise StepSizeUnderflow(sol.message)
    p = sol.y[:, -1]
    if p[-1] > tail_epsilon:
        raise CapacityExceeded(
            f"top level holds {p[-1]:.3g} > {tail_epsilon:.3g}; raise n_max")
    return CountingDistribution(t, np.clip(p, 0.0, None), source="ode")


def generating_function(d1: float, t: float, k):
    """``sum_n p_n e^{ink} = exp(-D1 (1 - e^{ik}) t)``."""
    k = np.asarray(k)
    return np.exp(-d1 * (1 - np.exp(1j * k)) * t)


def inverse_transform_pn(d1: float, t: float, n_max: int | None = None,
                         num_k: int | None = None) -> CountingDistribution:
    """Invert the generating function on a uniform k grid."""
    if n_max is None:
        n_max = _tail_capacity(d1 * t)
    if num_k is None:
        num_k = 1 << max(3, (4 * (n_max + 1) - 1).bit_length())
    k = 2 * np.pi * np.arange(num_k) / num_k
    probs = np.fft.fft(generating_function(d1, t, k)).real / num_k
    return CountingDistribution(t, probs[:n_max + 1], source="spectral")


def counting_cumulants(probs, max_order: int = 4, radius: float | None = None,
                       points: int = 256) -> np.ndarray:
    """Cumulants 1..max_order of a counting distribution.

    Differentiates ``K(z) = log sum_n p_n e^{nz}`` (the log generating
    function at ``k = -iz``) by a Cauchy integral around a small circle.
    """
    p = np.asarray(probs, dtype=float)
    n = np.arange(len(p))
    mean = float(np.dot(n, p) / p.sum())
    if radius is None:
        radius = 0.5 / max(1.0, mean)
    theta = 2 * np.pi * np.arange(points) / points
    z = radius * np.exp(1j * theta)
    mgf = np.exp(np.outer(z, n)) @ p
    # theta = 0 sits on the positive real axis, so the unwrapped branch is
    # the one with K(0) = 0
    logm = np.log(np.abs(mgf)) + 1j * np.unwrap(np.angle(mgf))
    coeffs = np.fft.fft(logm) / points
    orders = np.arange(1, max_order + 1)
    taylor = coeffs[orders] / radius ** orders
    return np.real(taylor * np.array([math.factorial(m) for m in orders]))


def landauer_current(micro: DetectorMicroParams) -> float:
    """``I = T V_d / 2 pi`` (e = 1); equals the penetration rate ``D``."""
    current = CHARGE ** 2 * micro.transmission * micro.v_d / (2 * math.pi)
    rate = micro.penetration_rate
    if not math.isclose(current, rate, rel_tol=1e-12, abs_tol=1e-300):
        raise ArithmeticError(f"Landauer current {current} != D {rate}")
    return current


def shot_noise(micro: DetectorMicroParams) -> float:
    """Current fluctuation ``2 dnu (V_d / 2 pi) T (1 - T)`` (e = 1)."""
    t = micro.transmission
    return 2 * CHARGE * micro.delta_nu * (CHARGE ** 2 * micro.v_d /
                                          (2 * math.pi)) * t * (1 - t)


def fano_factor(micro: DetectorMicroParams) -> float:
    """Noise relative to the Schottky value ``2 dnu I``; equals ``1 - T``."""
    current = landauer_current(micro)
    if current == 0:
        raise ZeroDivisionError("Fano factor undefined at zero current")
    return shot_noise(micro) / (2 * CHARGE * micro.delta_nu * current)
