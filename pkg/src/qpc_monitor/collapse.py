"""Collapse scenarios for a pointer-monitored double dot.

Three postulates for when the superposition becomes a definite occupation:

* continuous collapse: the state is re-prepared after every measurement
  interval ``t_ms`` whether or not anyone reads the collector;
* spontaneous collapse: the electron localizes at some time ``t0`` that
  quantum mechanics does not fix;
* observation collapse: localization happens when the pointer starts to
  report, at ``t_bar = N_bar / D1``.

Sampled records are piecewise-linear collector counts ``N(t)``: slope ``D1``
while the left dot is occupied, flat while the contact is blocked.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats
from scipy.linalg import expm

from .errors import InsufficientDataError, ThresholdAfterZenoError
from .model import InitialCondition, SystemParams, validate_params
from .reduced import zeno_time

PROJECTIONS = ("n0_total", "n0_right")


class ScenarioKind(enum.Enum):
    CONTINUOUS = "continuous"
    SPONTANEOUS = "spontaneous"
    OBSERVATION = "observation"

    @classmethod
    def parse(cls, value) -> ScenarioKind:
        return value if isinstance(value, cls) else cls(str(value).lower())


@dataclass(frozen=True)
class ScenarioParams:
    """Collapse postulate plus the pointer that reads the collector.

    ``t_ms`` is the measurement interval (continuous collapse, defaults to
    ``1/D1``). ``t0`` is the localization time for spontaneous collapse; when
    it is None each trajectory draws ``t0`` uniformly from ``[0, t0_max]``.
    """

    kind: ScenarioKind
    pointer_threshold: float = 1.0
    t_ms: float | None = None
    t0: float | None = None
    t0_max: float | None = None
    switch_probability: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", ScenarioKind.parse(self.kind))
        if self.pointer_threshold < 1:
            raise ValueError("pointer threshold must be >= 1")
        if self.t_ms is not None and self.t_ms <= 0:
            raise ValueError("t_ms must be > 0")
        if self.t0 is not None and self.t0 < 0:
            raise ValueError("t0 must be >= 0")
        if self.kind is ScenarioKind.SPONTANEOUS and self.t0 is None \
                and self.t0_max is None:
            raise ValueError("spontaneous collapse needs t0 or t0_max")
        if not 0 <= self.switch_probability <= 1:
            raise ValueError("switch_probability must be in [0, 1]")

    def threshold_time(self, d1: float) -> float:
        return self.pointer_threshold / d1

    def measurement_interval(self, d1: float) -> float:
        return self.t_ms if self.t_ms is not None else 1.0 / d1

    def with_threshold(self, n_bar: float) -> ScenarioParams:
        return ScenarioParams(self.kind, n_bar, self.t_ms, self.t0,
                              self.t0_max, self.switch_probability)


# -- continuous collapse ---------------------------------------------------

def _block0_generator(params: SystemParams) -> np.ndarray:
    """The n = 0 block evolves on its own: it only loses weight to n = 1."""
    w, eps, g = params.omega0, params.epsilon, params.d1
    return np.array([
        [-g, 0.0, 0.0, -2 * w],
        [0.0, 0.0, 0.0, 2 * w],
        [0.0, 0.0, -g / 2, -eps],
        [w, -w, eps, -g / 2],
    ])


def exact_interval_survival(params: SystemParams, t_ms: float,
                            projection: str = "n0_total") -> float:
    """Probability that a blocked contact still shows no collector electron.

    Starts from the right dot and evolves the ``n = 0`` block over ``t_ms``.
    ``n0_total`` keeps both dot occupations, ``n0_right`` only the right dot.
    """
    if projection not in PROJECTIONS:
        raise ValueError(f"projection must be one of {PROJECTIONS}")
    x = expm(_block0_generator(params) * t_ms) @ np.array([0.0, 1.0, 0.0, 0.0])
    return float(x[1] if projection == "n0_right" else x[0] + x[1])


def quadratic_interval_survival(params: SystemParams, t_ms: float) -> float:
    """Short-interval estimate ``1 - 2 omega0^2 t_ms^2``."""
    return 1.0 - 2.0 * params.omega0 ** 2 * t_ms ** 2


def interval_survival(params: SystemParams, t_ms: float, method: str = "exact",
                      projection: str = "n0_total") -> float:
    if method == "exact":
        return exact_interval_survival(params, t_ms, projection)
    if method == "quadratic":
        return quadratic_interval_survival(params, t_ms)
    raise ValueError(f"unknown method {method!r}")


def continuous_collapse_survival(params: SystemParams, t_ms: float, t,
                                 method: str = "exact",
                                 projection: str = "n0_total"):
    """``P_0(t) = q(t_ms)^(t / t_ms)`` for repeated re-preparation."""
    q = interval_survival(params, t_ms, method, projection)
    t = np.asarray(t, dtype=float)
    out = np.power(q, t / t_ms)
    return out if out.ndim else float(out)


def continuous_collapse_rate(params: SystemParams, t_ms: float,
                             method: str = "exact",
                             projection: str = "n0_total") -> float:
    """Decay rate ``-ln q(t_ms) / t_ms`` of the blocked state."""
    q = interval_survival(params, t_ms, method, projection)
    return -math.log(q) / t_ms


def interval_loss_coefficients(params: SystemParams, t_grid,
                               projection: str = "n0_total"):
    """Least-squares ``(c2, c3)`` in ``1 - q(t) ~ c2 t^2 + c3 t^3``.

    ``c2`` is the quadratic coefficient to set against ``2 omega0^2``.
    """
    t = np.asarray(t_grid, dtype=float)
    loss = np.array([1.0 - exact_interval_survival(params, s, projection)
                     for s in t])
    design = np.column_stack([t ** 2, t ** 3])
    # rescale rows so small t do not vanish from the fit
    scale = 1.0 / t ** 2
    coef, *_ = np.linalg.lstsq(design * scale[:, None], loss * scale,
                               rcond=None)
    return float(coef[0]), float(coef[1])


# -- trajectories ------------------------------------------------------------

def make_rng(seed) -> np.random.Generator:
    """PCG64 stream for ``seed``: an int, or ``(master, i, ...)`` for substreams.

    Substreams use ``SeedSequence(master, spawn_key=(i, ...))`` so every
    trajectory's stream depends only on its own key.
    """
    if isinstance(seed, (tuple, list)):
        master, *key = seed
        ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    else:
        ss = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class TrajectoryRecord:
    """One sampled collector record.

    ``segments`` are ``(start_t, slope)`` pairs with alternating slopes
    ``D1`` and 0. ``event_times`` are the relocalization events (the electron
    lands in either dot); ``jump_times`` are the events that changed dot.
    ``first_dwell`` is the time from localization to the first event.
    """

    seed: tuple
    d1: float
    t_max: float
    localization_time: float
    first_dwell: float
    segments: tuple
    event_times: tuple
    jump_times: tuple
    displayed_dwell: float | None = None

    def count(self, t):
        """Collector count ``N(t)``."""
        t = np.asarray(t, dtype=float)
        starts = np.array([s for s, _ in self.segments] + [math.inf])
        slopes = np.array([m for _, m in self.segments])
        total = np.zeros_like(t)
        for i, slope in enumerate(slopes):
            lo, hi = starts[i], starts[i + 1]
            total += slope * np.clip(t - lo, 0.0, hi - lo)
        return total if total.ndim else float(total)

    @property
    def starts_left(self) -> bool:
        return self.segments[0][1] > 0


def dwell_mean(params: SystemParams, scenario: ScenarioParams) -> float:
    """Mean time between relocalization events.

    The Zeno time for spontaneous and observation collapse; for continuous
    collapse the inverse of the blocked-state decay rate under the
    quadratic interval survival, ``~ D1 / (2 omega0^2)`` at ``t_ms = 1/D1``.
    """
    if scenario.kind is ScenarioKind.CONTINUOUS:
        t_ms = scenario.measurement_interval(params.d1)
        return 1.0 / continuous_collapse_rate(params, t_ms, method="quadratic")
    return zeno_time(params)


def _check_threshold(params: SystemParams, scenario: ScenarioParams) -> float:
    t_bar = scenario.threshold_time(params.d1)
    tau = zeno_time(params)
    if t_bar >= tau:
        raise ThresholdAfterZenoError(
            f"threshold time {t_bar:g} is not below the Zeno time {tau:g}")
    return t_bar


def sample_trajectory(params: SystemParams, scenario: ScenarioParams, seed,
                      t_max: float, init=InitialCondition.GROUND,
                      ) -> TrajectoryRecord:
    """Draw one collector record.

    A superposed start picks the left or right branch with probability 1/2.
    After localization, events arrive with exponential waiting times of mean
    ``dwell_mean``; at each one the electron switches dot with probability
    ``scenario.switch_probability``. The first waiting time is always drawn,
    even when it ends after ``t_max``.
    """
    validate_params(params)
    if t_max <= 0:
        raise ValueError("t_max must be > 0")
    init = InitialCondition.parse(init)
    rng = make_rng(seed)
    if init is InitialCondition.LEFT:
        left = True
    elif init is InitialCondition.RIGHT:
        left = False
    else:
        left = bool(rng.random() < 0.5)

    t_bar = scenario.threshold_time(params.d1)
    if scenario.kind is ScenarioKind.SPONTANEOUS:
        t_loc = scenario.t0 if scenario.t0 is not None \
            else float(rng.uniform(0.0, scenario.t0_max))
    elif scenario.kind is ScenarioKind.OBSERVATION:
        t_loc = t_bar
    else:
        t_loc = 0.0

    mean = dwell_mean(params, scenario)
    first = float(rng.exponential(mean))
    segments = [(0.0, params.d1 if left else 0.0)]
    events, jumps = [], []
    t = t_loc + first
    while t < t_max:
        events.append(t)
        if rng.random() < scenario.switch_probability:
            left = not left
            jumps.append(t)
            segments.append((t, params.d1 if left else 0.0))
        t += float(rng.exponential(mean))

    seed_key = tuple(seed) if isinstance(seed, (tuple, list)) else (int(seed),)
    record = TrajectoryRecord(seed_key, params.d1, t_max, t_loc, first,
                              tuple(segments), tuple(events), tuple(jumps))
    shown = first + (t_loc - max(t_loc, t_bar))
    return TrajectoryRecord(**{**record.__dict__, "displayed_dwell": shown})


def sample_ensemble(params: SystemParams, scenario: ScenarioParams,
                    master_seed: int, count: int, t_max: float,
                    init=InitialCondition.GROUND, stream: int = 0):
    """``count`` records with seeds ``(master_seed, stream, i)``, in order."""
    return [sample_trajectory(params, scenario, (master_seed, stream, i),
                              t_max, init) for i in range(count)]


def pointer_readout(traj: TrajectoryRecord, scenario: ScenarioParams,
                    params: SystemParams) -> float:
    """Dwell time the pointer reports for one record.

    The pointer only counts after ``t_bar``. Localization at ``t0 < t_bar``
    is reported late, so the shown dwell is ``t0 + dwell - t_bar``. With
    observation collapse localization happens at ``t_bar`` itself and the
    full dwell is shown. The value can be negative when the first event
    precedes ``t_bar``.
    """
    t_bar = _check_threshold(params, scenario)
    t_loc = traj.localization_time
    if scenario.kind is ScenarioKind.OBSERVATION:
        t_loc = t_bar
    # the bracket is exactly 0 when localization coincides with the threshold
    return traj.first_dwell + (t_loc - max(t_loc, t_bar))


def expected_displayed_dwell(params: SystemParams,
                             scenario: ScenarioParams) -> float:
    """Ensemble mean of ``pointer_readout``.

    Spontaneous collapse with a fixed ``t0``: ``tau_Z + t0 - t_bar`` when the
    threshold comes after localization, ``tau_Z`` otherwise. Observation
    collapse: ``tau_Z`` for every threshold.
    """
    t_bar = _check_threshold(params, scenario)
    mean = dwell_mean(params, scenario)
    if scenario.kind is ScenarioKind.OBSERVATION:
        return mean
    if scenario.kind is ScenarioKind.SPONTANEOUS:
        if scenario.t0 is None:
            raise ValueError("expected dwell needs a fixed t0")
        t0 = scenario.t0
    else:
        t0 = 0.0
    return mean + t0 - t_bar if t_bar > t0 else mean


def measure_dwell_curve(params: SystemParams, scenario: ScenarioParams,
                        thresholds: Sequence[float], count: int,
                        master_seed: int, t_max: float | None = None,
                        init=InitialCondition.GROUND):
    """Mean and standard error of the shown dwell for each threshold.

    Each threshold uses its own substream ``(master_seed, j, i)``.
    """
    tau = zeno_time(params)
    out = {}
    for j, n_bar in enumerate(thresholds):
        sc = scenario.with_threshold(n_bar)
        _check_threshold(params, sc)
        horizon = t_max if t_max is not None else sc.threshold_time(params.d1) + tau
        shown = np.array([
            pointer_readout(sample_trajectory(params, sc, (master_seed, j, i),
                                              horizon, init), sc, params)
            for i in range(count)])
        out[n_bar] = (float(shown.mean()),
                      float(shown.std(ddof=1) / math.sqrt(count)))
    return out


# -- discriminating scenarios ------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    """Outcome of fitting mean shown dwell against threshold time.

    ``label`` is 'spontaneous' (slope near -1), 'observation' (slope near 0)
    or 'undetermined'.
    """

    label: str
    slope: float
    intercept: float
    slope_stderr: float
    intercept_stderr: float
    slope_ci: tuple
    confidence: float
    n_points: int
    details: dict = field(default_factory=dict, compare=False)


def scenario_discriminator(readouts: Mapping, d1: float,
                           confidence: float = 0.95) -> Verdict:
    """Classify a dwell-versus-threshold curve.

    ``readouts`` maps a threshold ``N_bar`` to either the mean shown dwell
    or a ``(mean, standard_error)`` pair. Standard errors, when all are
    positive, are used as known weights; otherwise the scatter about the
    line sets the error.
    """
    if len(readouts) < 3:
        raise InsufficientDataError("need at least three thresholds")
    keys = sorted(readouts)
    x = np.array([k / d1 for k in keys], dtype=float)
    y, sem = [], []
    for k in keys:
        v = readouts[k]
        if isinstance(v, (tuple, list)):
            y.append(float(v[0]))
            sem.append(float(v[1]))
        else:
            y.append(float(v))
            sem.append(0.0)
    y, sem = np.array(y), np.array(sem)
    design = np.column_stack([np.ones_like(x), x])

    if np.all(sem > 0):
        w = 1.0 / sem ** 2
        cov = np.linalg.inv(design.T @ (design * w[:, None]))
        beta = cov @ design.T @ (w * y)
        crit = stats.norm.ppf(0.5 + confidence / 2)
    else:
        beta, *_ = np.linalg.lstsq(design, y, rcond=None)
        dof = len(x) - 2
        resid = y - design @ beta
        s2 = float(resid @ resid) / dof if dof > 0 else 0.0
        cov = s2 * np.linalg.inv(design.T @ design)
        crit = stats.t.ppf(0.5 + confidence / 2, dof) if dof > 0 else math.inf
    intercept, slope = float(beta[0]), float(beta[1])
    se_i, se_s = (float(math.sqrt(max(c, 0.0))) for c in np.diag(cov))
    half = crit * se_s
    lo, hi = slope - half, slope + half
    tol = 1e-9

    def covers(v):
        return lo - tol <= v <= hi + tol

    if covers(-1.0) and not covers(0.0):
        label = "spontaneous"
    elif covers(0.0) and not covers(-1.0):
        label = "observation"
    else:
        label = "undetermined"
    return Verdict(label, slope, intercept, se_s, se_i, (float(lo), float(hi)),
                   confidence,
                   len(x), {"t_bar": x.tolist(), "mean_dwell": y.tolist()})
