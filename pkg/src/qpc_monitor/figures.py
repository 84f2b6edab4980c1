"""Derived observables and the data series behind the published figures."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import collapse
from .detector import classical_rate_evolve
from .model import (
    CountingDistribution,
    InitialCondition,
    NResolvedState,
    ReducedDensityMatrix,
    SystemParams,
)
from .nresolved import reduce, solve_counting
from .reduced import evolve_reduced, zeno_time

FIGURE_IDS = ("2a", "2b", "3", "4", "5", "6")

# values below this are dropped from histogram tails
TAIL_CUTOFF = 1e-14


def average_current(series, params: SystemParams) -> np.ndarray:
    """Ensemble-averaged detector current ``D1 * s11(t)`` (e = 1).

    This is an average over repeated runs. A single run never shows a current
    of ``D1/2``: the contact is either open or blocked.
    """
    pops = []
    for item in series:
        if isinstance(item, NResolvedState):
            item = reduce(item)
        if isinstance(item, ReducedDensityMatrix):
            pops.append(item.s11)
        else:
            pops.append(float(item))
    return params.d1 * np.asarray(pops, dtype=float)


def _as_array(p):
    if isinstance(p, CountingDistribution):
        return np.asarray(p.probs, dtype=float)
    return np.asarray(p, dtype=float)


def distribution_distance(p, q) -> float:
    """Total-variation distance; the shorter support is zero-padded."""
    a, b = _as_array(p), _as_array(q)
    size = max(len(a), len(b))
    a = np.pad(a, (0, size - len(a)))
    b = np.pad(b, (0, size - len(b)))
    return 0.5 * float(np.sum(np.abs(a - b)))


def peak_position(p) -> int:
    return int(np.argmax(_as_array(p)))


@dataclass
class FigureDataset:
    """Long-format series: one row per ``(t, n, value, source)``.

    ``n`` is None for time series, ``t`` is None for time-independent rows.
    """

    figure_id: str
    rows: list = field(default_factory=list)
    params_used: dict = field(default_factory=dict)
    seed: int | None = None

    def add(self, t, n, value, source):
        self.rows.append((None if t is None else float(t),
                          None if n is None else int(n),
                          float(value), source))

    def series(self, source):
        """Rows for one source as arrays ``(t, n, value)``."""
        sel = [r for r in self.rows if r[3] == source]
        return (np.array([np.nan if r[0] is None else r[0] for r in sel]),
                np.array([-1 if r[1] is None else r[1] for r in sel]),
                np.array([r[2] for r in sel]))

    @property
    def sources(self):
        seen = []
        for r in self.rows:
            if r[3] not in seen:
                seen.append(r[3])
        return seen


def _histogram_rows(ds, t, named):
    """Add aligned histogram series, trimming the common negligible tail."""
    size = max(len(p) for p in named.values())
    padded = {k: np.pad(v, (0, size - len(v))) for k, v in named.items()}
    keep = np.zeros(size, dtype=bool)
    for v in padded.values():
        keep |= np.abs(v) > TAIL_CUTOFF
    last = int(np.nonzero(keep)[0].max()) if keep.any() else 0
    for source, v in padded.items():
        for n in range(last + 1):
            ds.add(t, n, v[n], source)


def _time_grid(t_max, samples, histogram):
    if histogram:
        return np.linspace(t_max / samples, t_max, samples)
    return np.linspace(0.0, t_max, samples)


def make_figure(figure_id: str, params: SystemParams | None = None, *,
                t_max: float | None = None, samples: int | None = None,
                seed: int | None = None, gammas=None, times=None,
                threshold: float = 16.0,
                scenario: str = "spontaneous") -> FigureDataset:
    """Regenerate the data plotted in one figure.

    ``params`` supplies ``omega0`` (and ``d1`` for figures 3-6); defaults are
    the published values. Figure 6 needs a ``seed``.
    """
    figure_id = str(figure_id).lower()
    if figure_id not in FIGURE_IDS:
        raise ValueError(f"unknown figure {figure_id!r}; choose from {FIGURE_IDS}")
    w = params.omega0 if params is not None else 1.0
    eps = params.epsilon if params is not None else 0.0

    if figure_id in ("2a", "2b"):
        init = InitialCondition.LEFT if figure_id == "2a" else InitialCondition.GROUND
        gammas = gammas if gammas is not None else (w, 32 * w)
        t_max = 10.0 / w if t_max is None else t_max
        grid = _time_grid(t_max, samples or 201, histogram=False)
        ds = FigureDataset(figure_id, params_used={
            "omega0": w, "epsilon": eps, "gamma_d": list(map(float, gammas)),
            "init": init.value})
        for g in gammas:
            p = SystemParams(w, g, eps)
            states = evolve_reduced(init.reduced(), p, grid)
            for t, s in zip(grid, states):
                ds.add(t, None, s.s11, f"sigma11:gamma_d={g:g}")
            for t, s in zip(grid, states):
                ds.add(t, None, s.s12.imag, f"im_sigma12:gamma_d={g:g}")
        return ds

    defaults = {"3": 1.0, "4": 32.0, "5": 32.0, "6": 32.0}
    d1 = params.d1 if params is not None else defaults[figure_id] * w
    p = SystemParams(w, d1, eps)
    base = {"omega0": w, "d1": d1, "epsilon": eps}

    if figure_id == "6":
        if seed is None:
            raise ValueError("figure 6 needs a seed")
        tau = zeno_time(p)
        t_max = 3 * tau if t_max is None else t_max
        kind = collapse.ScenarioKind.parse(scenario)
        sc = collapse.ScenarioParams(kind, threshold, t0=0.0)
        traj = collapse.sample_trajectory(p, sc, seed, t_max)
        ds = FigureDataset("6", params_used={**base, "init": "ground",
                                             "scenario": kind.value,
                                             "pointer_threshold": threshold},
                           seed=seed)
        grid = _time_grid(t_max, samples or 401, histogram=False)
        for t, n in zip(grid, traj.count(grid)):
            ds.add(t, None, n, "N:trajectory")
        ds.add(sc.threshold_time(d1), None, threshold, "pointer_threshold")
        ds.add(None, None, collapse.pointer_readout(traj, sc, p),
               "displayed_dwell")
        ds.add(None, None, tau, "zeno_time")
        for t in traj.jump_times:
            ds.add(t, None, traj.count(t), "jump")
        return ds

    t_max = 1.0 / w if figure_id in ("4", "5") and t_max is None else t_max
    if t_max is None:
        t_max = 8.0 / w
    if times is None:
        times = _time_grid(t_max, samples or (4 if figure_id == "3" else 5),
                           histogram=True)
    times = np.asarray(times, dtype=float)
    init = InitialCondition.GROUND if figure_id == "5" else InitialCondition.LEFT
    ds = FigureDataset(figure_id, params_used={**base, "init": init.value})
    dists = solve_counting(p, init, times)
    for t, dist in zip(times, dists):
        if figure_id == "3":
            overlay = classical_rate_evolve(d1 / 2, t).probs
            label = "p_n:rate=d1/2"
        elif figure_id == "4":
            overlay = classical_rate_evolve(d1, t).probs
            label = "p_n:rate=d1"
        else:
            overlay = 0.5 * classical_rate_evolve(d1, t).probs
            label = "half_p_n:rate=d1"
        _histogram_rows(ds, t, {"P_n:ode": dist.probs, label: overlay})
    return ds


def asymptotic_current_reached(params: SystemParams, init, t) -> float:
    """Relative deviation of the mean current from ``D1/2`` at time ``t``."""
    state = evolve_reduced(InitialCondition.parse(init).reduced(), params, [t])
    current = average_current(state, params)[0]
    return abs(current - params.d1 / 2) / (params.d1 / 2)


def tv_to_poisson(dist: CountingDistribution, rate: float, weight=1.0,
                  n_min: int = 0) -> float:
    """TV distance to ``weight * Poisson(rate t)`` restricted to ``n >= n_min``."""
    from .detector import poisson_pn

    p = np.asarray(dist.probs, dtype=float)
    size = max(len(p), int(math.ceil(rate * dist.t + 12 * math.sqrt(rate * dist.t + 1) + 10)))
    p = np.pad(p, (0, size - len(p)))
    q = weight * poisson_pn(rate, dist.t, np.arange(size))
    return 0.5 * float(np.sum(np.abs(p[n_min:] - q[n_min:])))
