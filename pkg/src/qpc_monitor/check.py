"""Cross-solver consistency suite.

Each check computes the same quantity by two independent routes and reports
the maximum absolute deviation.
"""
from __future__ import annotations

import numpy as np

from . import detector, spectral
from .figures import distribution_distance
from .model import InitialCondition, SystemParams, build_initial
from .nresolved import (EvolveOptions, counting_distribution, default_capacity,
                        evolve, reduce)
from .reduced import closed_form_localized, evolve_reduced, ground_state_solution

THRESHOLD = 1e-6


def _max_abs(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    size = max(a.shape[-1], b.shape[-1])
    a = np.pad(a, (0, size - a.shape[-1]))
    b = np.pad(b, (0, size - b.shape[-1]))
    return float(np.max(np.abs(a - b)))


def run_checks(params: SystemParams, t_end: float, samples: int = 5,
               rel_tol: float = 1e-10, tail_epsilon: float = 1e-12) -> dict:
    """Return ``{check_name: max deviation}``.

    Checks that rely on aligned levels are skipped when ``epsilon != 0``.
    """
    grid = np.linspace(t_end / samples, t_end, samples)
    out = {}
    inits = [InitialCondition.LEFT, InitialCondition.GROUND]
    for kind in inits:
        init = build_initial(kind, default_capacity(params.d1, t_end))
        states = evolve(init, params, EvolveOptions(
            t_grid=grid, rel_tol=rel_tol, tail_epsilon=tail_epsilon))
        dev_fft = 0.0
        dev_red = 0.0
        exact = evolve_reduced(kind.reduced(), params, grid)
        for t, s, r in zip(grid, states, exact):
            p_ode = counting_distribution(s).probs
            p_fft = spectral.pn_inverse_transform(params, kind, t).probs
            dev_fft = max(dev_fft, _max_abs(p_ode, p_fft))
            red = reduce(s)
            dev_red = max(dev_red, abs(red.s11 - r.s11), abs(red.s22 - r.s22),
                          abs(red.s12 - r.s12))
        out[f"ode_vs_spectral:{kind.value}"] = dev_fft
        out[f"reduce_vs_expm:{kind.value}"] = dev_red

    if params.epsilon == 0:
        long_grid = np.linspace(0.0, 10.0 / params.omega0 if params.omega0 else
                                t_end, 101)
        exact = evolve_reduced(InitialCondition.LEFT.reduced(), params, long_grid)
        s11, s12 = closed_form_localized(params, long_grid)
        out["closed_form_vs_expm:left"] = max(
            _max_abs([e.s11 for e in exact], s11),
            _max_abs([e.s12 for e in exact], s12))
        exact = evolve_reduced(InitialCondition.GROUND.reduced(), params, long_grid)
        g = ground_state_solution(params, long_grid)
        out["closed_form_vs_expm:ground"] = max(
            _max_abs([e.s11 for e in exact], g[0]),
            _max_abs([e.s12 for e in exact], g[1]))
        if params.omega0 > 0:
            for kind in inits:
                dev = 0.0
                for t in grid:
                    a = spectral.pn_residues(params, kind, t).probs
                    b = spectral.pn_inverse_transform(params, kind, t).probs
                    dev = max(dev, _max_abs(a, b))
                out[f"residues_vs_expm:{kind.value}"] = dev

    rate_t = params.d1 * t_end
    dev = 0.0
    for t in grid:
        direct = detector.poisson_distribution(params.d1, t)
        ode = detector.classical_rate_evolve(params.d1, t)
        fft = detector.inverse_transform_pn(params.d1, t)
        dev = max(dev, distribution_distance(direct, ode),
                  distribution_distance(direct, fft))
    out["poisson_routes_tv"] = dev
    out["poisson_mean_rel"] = (abs(direct.mean() - rate_t) / rate_t
                               if rate_t > 0 else 0.0)
    return out


def passed(results: dict, threshold: float = THRESHOLD) -> bool:
    return all(v < threshold for v in results.values())
