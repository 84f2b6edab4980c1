"""Generating-function route to the counting statistics.

Fourier transforming the n-resolved equations over ``n`` with
``s~_ij(k, t) = sum_n s_ij[n] e^{ink}`` turns them into a small linear
system per counting phase ``k``: the gain term becomes ``e^{ik}`` and the
population ``s~11`` decays at ``D1 xi`` with ``xi = 1 - e^{ik}``.

Time dependence ``exp(-i e t)`` relates the secular roots ``e_j`` to the
eigenvalues ``lambda_j`` of the generator by ``e_j = i lambda_j``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import AliasingRisk, RegimeWarning, UnsupportedInitError
from .model import CountingDistribution, InitialCondition, SystemParams, validate_params
from .nresolved import default_capacity


def xi(k):
    return 1 - np.exp(1j * np.asarray(k))


def k_mode_generator(params: SystemParams, k: float, full: bool | None = None):
    """Generator ``A(k)`` with ``d s~/dt = A(k) s~``.

    The full form acts on ``(s~11, s~22, s~12, s~21)``. For aligned levels
    (and unless ``full=True``) the reduced form acts on
    ``(s~11, s~22, D)`` with ``D = (s~12 - s~21) / 2``.
    """
    w, g, eps = params.omega0, params.d1, params.epsilon
    x = complex(xi(k))
    if full is None:
        full = eps != 0
    if not full and eps != 0:
        raise ValueError("reduced 3x3 generator requires epsilon = 0")
    if full:
        return np.array([
            [-g * x, 0, 1j * w, -1j * w],
            [0, 0, -1j * w, 1j * w],
            [1j * w, -1j * w, 1j * eps - g / 2, 0],
            [-1j * w, 1j * w, 0, -1j * eps - g / 2],
        ], dtype=complex)
    return np.array([
        [-g * x, 0, 2j * w],
        [0, 0, -2j * w],
        [1j * w, -1j * w, -g / 2],
    ], dtype=complex)


def _initial_vector(kind) -> np.ndarray:
    rho = InitialCondition.parse(kind).reduced()
    return np.array([rho.s11, rho.s22, rho.s12, rho.s21], dtype=complex)


@dataclass(frozen=True)
class KMode:
    k: float
    xi: complex
    s11: complex
    s22: complex
    s12: complex
    s21: complex

    @property
    def counting(self) -> complex:
        """Generating function of ``P_n``: ``s~11 + s~22``."""
        return self.s11 + self.s22


def _propagate(params: SystemParams, kind, ks, t: float) -> np.ndarray:
    gens = np.stack([k_mode_generator(params, k, full=True) for k in ks])
    return expm(gens * t) @ _initial_vector(kind)


def evolve_k_mode(params: SystemParams, init, k: float, t: float) -> KMode:
    """``s~(k, t) = exp(A(k) t) s(0)``; the initial state has no collector charge."""
    validate_params(params)
    v = _propagate(params, init, [k], t)[0]
    return KMode(float(k), complex(xi(k)), *map(complex, v))


def _grid_sizes(params: SystemParams, t: float, n_max, num_k):
    if n_max is None:
        n_max = default_capacity(params.d1, t)
    if num_k is None:
        num_k = 1 << (4 * (n_max + 1) - 1).bit_length()
    if num_k < 2 * n_max + 1:
        raise AliasingRisk(f"num_k={num_k} < 2*n_max+1={2 * n_max + 1}")
    # the count can never exceed the bare-detector Poisson tail
    mean = params.d1 * t
    if num_k < mean + 10 * math.sqrt(mean) + 10:
        raise AliasingRisk(f"num_k={num_k} too small for D1 t={mean:g}")
    return n_max, num_k


def _invert(gen_values: np.ndarray, t: float, n_max: int, source: str):
    num_k = len(gen_values)
    probs = np.fft.fft(gen_values).real / num_k
    return CountingDistribution(t, probs[:n_max + 1], source=source)


def pn_inverse_transform(params: SystemParams, init, t: float,
                         n_max: int | None = None,
                         num_k: int | None = None) -> CountingDistribution:
    """``P_n(t)`` from the k-modes on a uniform grid of ``num_k`` phases.

    ``P_n`` is a Fourier series in ``k``, so the discrete inversion is exact
    up to aliasing of probability beyond ``num_k`` electrons.
    """
    validate_params(params)
    n_max, num_k = _grid_sizes(params, t, n_max, num_k)
    ks = 2 * np.pi * np.arange(num_k) / num_k
    v = _propagate(params, init, ks, t)
    return _invert(v[:, 0] + v[:, 1], t, n_max, "spectral")


def secular_roots(params: SystemParams, k: float) -> np.ndarray:
    """The three roots ``e_j`` for aligned levels, sorted by ``|Im e_j|``.

    Computed as ``i`` times the eigenvalues of the 3x3 generator rather than
    by radicals, which stays accurate near root collisions.
    """
    if params.epsilon != 0:
        raise ValueError("secular roots are defined for epsilon = 0")
    roots = 1j * np.linalg.eigvals(k_mode_generator(params, k, full=False))
    return roots[np.argsort(np.abs(roots.imag), kind="stable")]


def perturbative_roots(params: SystemParams, k: float) -> np.ndarray:
    """Strong-damping expansion of the roots, accurate to O((omega0^2/D1)^2).

    Returns ``(e1, e2, e3)``; ``e1`` is the slow counting root that vanishes
    at ``k = 0``.
    """
    w, g = params.omega0, params.d1
    if g < 8 * w:
        warnings.warn(f"perturbative roots need d1 >> omega0 (d1={g}, "
                      f"omega0={w})", RegimeWarning, stacklevel=2)
    x = complex(xi(k))
    a = g * x / 2 + 4 * w ** 2 / g
    root = np.sqrt(g ** 2 * x ** 2 / 4 + 16 * w ** 4 / g ** 2 + 0j)
    e1 = -1j * (a - root)
    e2 = -1j * (a + root)
    e3 = -1j * g / 2 + 1j * (8 * w ** 2 / g) * (1 + x)
    return np.array([e1, e2, e3])


def minor_determinant(init_kind, e, params: SystemParams, k: float):
    """Residue numerator ``M(e)`` of the Laplace-domain solution.

    For the left dot ``M = e (e + i D1/2) - 4 omega0^2``. For the ground
    state ``M = e [2e + i D1 (1 + xi)] - D1^2 xi / 2 - 8 omega0^2``, which
    corresponds to unit weight on each initial population; the physical
    residue carries an extra factor 1/2 (see ``residue_weight``).
    """
    kind = InitialCondition.parse(init_kind)
    w, g = params.omega0, params.d1
    e = np.asarray(e, dtype=complex)
    if kind is InitialCondition.LEFT:
        return e * (e + 0.5j * g) - 4 * w ** 2
    if kind is InitialCondition.GROUND:
        x = complex(xi(k))
        return e * (2 * e + 1j * g * (1 + x)) - 0.5 * g ** 2 * x - 8 * w ** 2
    raise UnsupportedInitError(
        f"no closed minor for {kind.value}; use pn_inverse_transform")


def residue_weight(init_kind) -> float:
    kind = InitialCondition.parse(init_kind)
    return 0.5 if kind is InitialCondition.GROUND else 1.0


def residue_generating_function(params: SystemParams, init_kind, k, t):
    """``sum_j w M(e_j) / prod_{l != j}(e_j - e_l) exp(-i e_j t)``.

    Assumes three distinct roots.
    """
    weight = residue_weight(init_kind)
    out = []
    for kk in np.atleast_1d(k):
        roots = secular_roots(params, kk)
        total = 0j
        for j in range(3):
            others = [roots[l] for l in range(3) if l != j]
            denom = (roots[j] - others[0]) * (roots[j] - others[1])
            num = minor_determinant(init_kind, roots[j], params, kk)
            total += num / denom * np.exp(-1j * roots[j] * t)
        out.append(weight * total)
    return np.array(out)


def pn_residues(params: SystemParams, init_kind, t: float,
                n_max: int | None = None,
                num_k: int | None = None) -> CountingDistribution:
    """``P_n(t)`` by summing the root residues at every k, then inverting."""
    validate_params(params)
    n_max, num_k = _grid_sizes(params, t, n_max, num_k)
    ks = 2 * np.pi * np.arange(num_k) / num_k
    return _invert(residue_generating_function(params, init_kind, ks, t),
                   t, n_max, "residue")


def stationary_phase_weak(params: SystemParams, t: float, n):
    """Gaussian packet drifting at half the bare rate: ``I1/2`` on average."""
    if t <= 0:
        raise ValueError("t must be > 0")
    g = params.d1
    n = np.asarray(n, dtype=float)
    out = np.exp(-(g * t / 2 - n) ** 2 / (g * t)) / math.sqrt(math.pi * g * t)
    return out if n.ndim else float(out)


def stationary_phase_strong_ground(params: SystemParams, t: float, n,
                                   packet: str = "poisson"):
    """Frozen peak at ``n = 0`` plus half a moving packet.

    ``P_n = (1/2) delta_{n0} exp(-4 omega0^2 t / D1) + (1/2) p_n(t)``, with
    ``p_n`` the exact Poisson law (``packet="poisson"``) or its Gaussian
    approximation (``packet="gaussian"``).
    """
    from .detector import gaussian_pn, poisson_pn

    w, g = params.omega0, params.d1
    if g < 8 * w:
        warnings.warn("two-peak form needs d1 >> omega0", RegimeWarning,
                      stacklevel=2)
    n = np.asarray(n)
    if packet == "poisson":
        moving = poisson_pn(g, t, n)
    elif packet == "gaussian":
        moving = gaussian_pn(g, t, n)
    else:
        raise ValueError(f"unknown packet {packet!r}")
    frozen = np.where(n == 0, 0.5 * math.exp(-4 * w ** 2 * t / g), 0.0)
    out = frozen + 0.5 * np.asarray(moving)
    return out if n.ndim else float(out)
