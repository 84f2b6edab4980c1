"""Command-line entry point.

Every command writes ``<out>/<name>.csv`` (columns ``t,n,value,source``) and
``<out>/<name>.manifest.json``. A manifest holds everything needed to rerun
the command through ``replay``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, check, collapse, detector, spectral
from .config import build_config
from .errors import NumericalError, ParameterError, UnsupportedInitError
from .figures import FIGURE_IDS, TAIL_CUTOFF, make_figure
from .model import DetectorMicroParams, InitialCondition, SystemParams, build_initial
from .nresolved import (EvolveOptions, counting_distribution, default_capacity,
                        evolve, reduce, solve_counting)
from .output import write_manifest, write_rows
from .reduced import closed_form_localized, evolve_reduced, ground_state_solution


FIGURE_D1 = {"3": 1.0}



class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors: exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common() -> argparse.ArgumentParser:
    # SUPPRESS keeps subcommand defaults from overwriting top-level values
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", metavar="PATH", help="JSON config file")
    p.add_argument("--omega0", type=float, help="tunnel coupling (sets the unit)")
    p.add_argument("--epsilon", type=float, help="level offset, units of omega0")
    p.add_argument("--d1", type=float, help="detector rate, units of omega0")
    p.add_argument("--init", choices=[k.value for k in InitialCondition])
    p.add_argument("--solver", choices=["ode", "spectral", "closed_form"])
    p.add_argument("--t-max", dest="t_end", type=float,
                   help="final time, units of 1/omega0")
    p.add_argument("--samples", dest="t_samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="output", metavar="DIR")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="qpc-monitor", parents=[common],
                     description="Double-dot electron monitored by a point contact.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--check", action="store_true",
                        help="run the cross-solver consistency suite")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("evolve", parents=[common], help="reduced density matrix series")
    p.add_argument("--resolved", action="store_true",
                   help="also write P_n at each time (ode solver only)")

    p = sub.add_parser("pn", parents=[common], help="counting distribution P_n(t)")
    p.add_argument("--times", type=_floats, help="comma-separated times")

    p = sub.add_parser("spectral", parents=[common], help="k-mode roots and generating function")
    p.add_argument("--num-k", type=int, default=16)

    p = sub.add_parser("detector", parents=[common], help="bare detector statistics")
    p.add_argument("--transmission", type=float)
    p.add_argument("--v-d", type=float)
    p.add_argument("--delta-nu", type=float)
    p.add_argument("--t1", type=float, help="time of a conditioning readout")
    p.add_argument("--n1", type=int, help="count seen at --t1")

    p = sub.add_parser("scenario", parents=[common], help="collapse trajectories and verdict")
    p.add_argument("--kind", choices=["continuous", "spontaneous", "observation"])
    p.add_argument("--thresholds", type=_floats)
    p.add_argument("--trajectories", type=int)
    p.add_argument("--t0", type=float, help="localization time, units of 1/omega0")
    p.add_argument("--t0-max", type=float)
    p.add_argument("--t-ms", type=float)

    p = sub.add_parser("figure", parents=[common], help="data behind a figure")
    p.add_argument("figure_id", choices=FIGURE_IDS)
    p.add_argument("--threshold", type=float, default=16.0)
    p.add_argument("--scenario", choices=["spontaneous", "observation", "continuous"],
                   default="spontaneous")

    p = sub.add_parser("replay", help="rerun a manifest")
    p.add_argument("manifest", metavar="MANIFEST")
    p.add_argument("--out", dest="output", metavar="DIR", default=argparse.SUPPRESS)
    return parser


CONFIG_KEYS = ("omega0", "epsilon", "d1", "init", "solver", "t_end",
               "t_samples", "seed", "output")


def _config_data(ns) -> tuple[dict, set]:
    """Merge the config file and flags; return the data and the explicit keys."""
    data = {}
    if getattr(ns, "config", None):
        data = json.loads(Path(ns.config).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            from .errors import SchemaError
            raise SchemaError("", "config must be a JSON object")
    for key in CONFIG_KEYS:
        if hasattr(ns, key):
            data[key] = getattr(ns, key)
    block = {}
    for flag, key in (("kind", "kind"), ("thresholds", "thresholds"),
                      ("trajectories", "trajectories"), ("t0", "t0"),
                      ("t0_max", "t0_max"), ("t_ms", "t_ms")):
        if getattr(ns, flag, None) is not None:
            block[key] = getattr(ns, flag)
    if block:
        data["scenario"] = {**data.get("scenario", {}), **block}
    block = {}
    for flag, key in (("transmission", "transmission"), ("v_d", "v_d"),
                      ("delta_nu", "delta_nu"), ("t1", "t1_obs"), ("n1", "n1_obs")):
        if getattr(ns, flag, None) is not None:
            block[key] = getattr(ns, flag)
    if block:
        data["detector"] = {**data.get("detector", {}), **block}
    return data, set(data)


def _command_options(ns, explicit: set) -> dict:
    cmd = ns.command
    if cmd == "evolve":
        return {"resolved": bool(ns.resolved)}
    if cmd == "pn":
        return {"times": ns.times}
    if cmd == "spectral":
        return {"num_k": ns.num_k}
    if cmd == "figure":
        return {"figure_id": ns.figure_id, "threshold": ns.threshold,
                "scenario": ns.scenario,
                "explicit": sorted(k for k in explicit
                                   if k in ("d1", "t_end", "t_samples", "seed"))}
    return {}


# -- command bodies: (cfg, options) -> (rows, results) ------------------------

def _grid(cfg, include_zero: bool) -> np.ndarray:
    if cfg.t_samples == 1:
        return np.array([cfg.t_end])
    start = 0.0 if include_zero else cfg.t_end / cfg.t_samples
    return np.linspace(start, cfg.t_end, cfg.t_samples)


def _trim(probs) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    keep = np.nonzero(np.abs(probs) > TAIL_CUTOFF)[0]
    return probs[: (keep.max() + 1 if keep.size else 1)]


def _run_evolve(cfg, options):
    params, grid = cfg.params, _grid(cfg, include_zero=True)
    rows, pn_rows = [], []
    if cfg.solver == "ode":
        init = build_initial(cfg.init, default_capacity(params.d1, cfg.t_end))
        states = evolve(init, params, EvolveOptions(
            t_grid=grid, rel_tol=cfg.tol, tail_epsilon=cfg.tail_epsilon))
        series = [reduce(s) for s in states]
        if options.get("resolved"):
            for t, s in zip(grid, states):
                for n, p in enumerate(_trim(counting_distribution(s).probs)):
                    pn_rows.append((t, n, p, "P_n:ode"))
        s11 = [r.s11 for r in series]
        s22 = [r.s22 for r in series]
        s12 = [r.s12 for r in series]
    elif cfg.solver == "spectral":
        series = evolve_reduced(cfg.init.reduced(), params, grid)
        s11 = [r.s11 for r in series]
        s22 = [r.s22 for r in series]
        s12 = [r.s12 for r in series]
    else:
        if cfg.init is InitialCondition.LEFT:
            s11, s12 = closed_form_localized(params, grid)
        elif cfg.init is InitialCondition.GROUND:
            s11, s12 = ground_state_solution(params, grid)
        else:
            raise UnsupportedInitError(
                f"closed_form covers left and ground starts, not {cfg.init.value}")
        s22 = 1 - np.asarray(s11)
    for t, a, b, c in zip(grid, s11, s22, s12):
        rows.append((t, None, a, "sigma11"))
        rows.append((t, None, b, "sigma22"))
        rows.append((t, None, complex(c).real, "re_sigma12"))
        rows.append((t, None, complex(c).imag, "im_sigma12"))
        rows.append((t, None, params.d1 * a, "current"))
    return rows + pn_rows, {"solver": cfg.solver}


def _run_pn(cfg, options):
    params = cfg.params
    times = options.get("times")
    times = (np.asarray([cfg.time(t) for t in times]) if times
             else _grid(cfg, include_zero=False))
    if np.any(np.diff(times) <= 0) or np.any(times < 0):
        raise ParameterError("times must be increasing and >= 0")
    if cfg.solver == "ode":
        dists = solve_counting(params, cfg.init, times, rel_tol=cfg.tol,
                               tail_epsilon=cfg.tail_epsilon)
    elif cfg.solver == "spectral":
        dists = [spectral.pn_inverse_transform(params, cfg.init, t) for t in times]
    else:
        dists = [spectral.pn_residues(params, cfg.init, t) for t in times]
    rows, results = [], {}
    for t, d in zip(times, dists):
        for n, p in enumerate(_trim(d.probs)):
            rows.append((t, n, p, f"P_n:{cfg.solver}"))
        results[f"{t:.15e}"] = {"mean": d.mean(), "variance": d.variance(),
                                "argmax": int(np.argmax(d.probs))}
    return rows, results


def _run_spectral(cfg, options):
    params = cfg.params
    num_k = int(options.get("num_k", 16))
    if num_k < 1:
        raise ParameterError("num_k must be >= 1")
    ks = 2 * np.pi * np.arange(num_k) / num_k - np.pi
    aligned = params.epsilon == 0
    rows = []
    for j, k in enumerate(ks):
        rows.append((None, j, k, "k"))
        gen = spectral.k_mode_generator(params, k, full=not aligned)
        roots = 1j * np.linalg.eigvals(gen)
        roots = roots[np.argsort(np.abs(roots.imag), kind="stable")]
        for r, e in enumerate(roots, start=1):
            rows.append((None, j, e.real, f"root{r}:re"))
            rows.append((None, j, e.imag, f"root{r}:im"))
        if aligned and params.d1 >= 8 * params.omega0 and params.omega0 > 0:
            for r, e in enumerate(spectral.perturbative_roots(params, k), start=1):
                rows.append((None, j, e.real, f"pert_root{r}:re"))
                rows.append((None, j, e.imag, f"pert_root{r}:im"))
        mode = spectral.evolve_k_mode(params, cfg.init, k, cfg.t_end)
        rows.append((cfg.t_end, j, mode.counting.real, "generating:re"))
        rows.append((cfg.t_end, j, mode.counting.imag, "generating:im"))
    return rows, {"num_k": num_k, "aligned": aligned}


def _run_detector(cfg, options):
    d1 = cfg.params.d1
    block = cfg.detector
    micro = DetectorMicroParams.from_transmission(
        block["transmission"], block["v_d"], block["delta_nu"])
    rows = []
    current = detector.landauer_current(micro)
    noise = detector.shot_noise(micro)
    rows.append((None, None, current, "landauer_current"))
    rows.append((None, None, noise, "shot_noise"))
    results = {"landauer_current": current, "shot_noise": noise,
               "transmission": micro.transmission}
    if current > 0:
        fano = detector.fano_factor(micro)
        rows.append((None, None, fano, "fano_factor"))
        results["fano_factor"] = fano
    obs = None
    if "t1_obs" in block and "n1_obs" in block:
        obs = detector.ConditionalObservation(cfg.time(block["t1_obs"]),
                                              block["n1_obs"])
    for t in _grid(cfg, include_zero=False):
        exact = detector.poisson_distribution(d1, t)
        ode = detector.classical_rate_evolve(d1, t, n_max=len(exact.probs) - 1)
        n = np.arange(len(exact.probs))
        named = {"poisson": exact.probs, "classical_ode": ode.probs}
        if d1 * t > 0:
            named["gaussian"] = detector.gaussian_pn(d1, t, n)
        if obs is not None and t >= obs.t1:
            cond = detector.conditional_distribution(d1, obs, t)
            named["conditional"] = cond.probs
        for source, probs in named.items():
            for k, p in enumerate(_trim(probs)):
                rows.append((t, k, p, source))
    final = detector.poisson_distribution(d1, cfg.t_end)
    if d1 * cfg.t_end > 0:
        cumulants = detector.counting_cumulants(final.probs)
        for order, c in enumerate(cumulants, start=1):
            rows.append((cfg.t_end, order, c, "cumulant"))
        results["cumulants"] = [float(c) for c in cumulants]
    return rows, results


def _run_scenario(cfg, options):
    params = cfg.params
    block = cfg.scenario
    kind = collapse.ScenarioKind.parse(block["kind"])
    t0 = block.get("t0")
    if kind is collapse.ScenarioKind.SPONTANEOUS and t0 is None \
            and "t0_max" not in block:
        t0 = 0.0
    scenario = collapse.ScenarioParams(
        kind, 1.0,
        t_ms=cfg.time(block["t_ms"]) if "t_ms" in block else None,
        t0=None if t0 is None else cfg.time(t0),
        t0_max=cfg.time(block["t0_max"]) if "t0_max" in block else None)
    thresholds = [float(v) for v in block["thresholds"]]
    curve = collapse.measure_dwell_curve(params, scenario, thresholds,
                                         int(block["trajectories"]), cfg.seed)
    rows = []
    for n_bar in thresholds:
        mean, sem = curve[n_bar]
        t_bar = n_bar / params.d1
        rows.append((t_bar, n_bar, mean, "mean_dwell"))
        rows.append((t_bar, n_bar, sem, "sem_dwell"))
        sc = scenario.with_threshold(n_bar)
        if kind is not collapse.ScenarioKind.SPONTANEOUS or sc.t0 is not None:
            rows.append((t_bar, n_bar,
                         collapse.expected_displayed_dwell(params, sc),
                         "expected_dwell"))
    results = {"kind": kind.value}
    if len(thresholds) >= 3:
        verdict = collapse.scenario_discriminator(curve, params.d1)
        results.update(label=verdict.label, slope=verdict.slope,
                       slope_ci=list(verdict.slope_ci),
                       intercept=verdict.intercept)
    return rows, results


def _run_figure(cfg, options):
    explicit = set(options.get("explicit", ()))
    fid = options["figure_id"]
    w = cfg.params.omega0
    # figures carry their own published rate unless one is given
    d1 = cfg.params.d1 if "d1" in explicit else FIGURE_D1.get(fid, 32.0) * w
    params = SystemParams(w, d1, cfg.params.epsilon)
    seed = cfg.seed if fid == "6" else None
    ds = make_figure(
        fid, params,
        t_max=cfg.t_end if "t_end" in explicit else None,
        samples=cfg.t_samples if "t_samples" in explicit else None,
        seed=seed, threshold=float(options.get("threshold", 16.0)),
        scenario=options.get("scenario", "spontaneous"))
    return ds.rows, {"params_used": ds.params_used, "sources": ds.sources}


def _run_check(cfg, options):
    results = check.run_checks(cfg.params, cfg.t_end, rel_tol=cfg.tol,
                               tail_epsilon=cfg.tail_epsilon)
    rows = [(None, None, v, k) for k, v in results.items()]
    return rows, {"deviations": results, "max_deviation": max(results.values()),
                  "passed": check.passed(results)}


RUNNERS = {"evolve": _run_evolve, "pn": _run_pn, "spectral": _run_spectral,
           "detector": _run_detector, "scenario": _run_scenario,
           "figure": _run_figure, "check": _run_check}


def _stem(command: str, options: dict) -> str:
    return f"figure_{options['figure_id']}" if command == "figure" else command


def execute(command: str, cfg, options: dict, argv=None) -> dict:
    """Run one command, write its CSV and manifest, return the manifest."""
    start = time.perf_counter()
    rows, results = RUNNERS[command](cfg, options)
    out_dir = Path(cfg.output)
    stem = _stem(command, options)
    csv_path = write_rows(out_dir / f"{stem}.csv", rows)
    manifest = {
        "artifact": "qpc_monitor",
        "version": __version__,
        "command": command,
        "options": options,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "argv": list(argv) if argv is not None else None,
        "outputs": [csv_path.name],
        "results": _jsonable(results),
        "runtime_seconds": time.perf_counter() - start,
    }
    write_manifest(out_dir / f"{stem}.manifest.json", manifest)
    return manifest


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def replay(manifest_path, output: str | None = None) -> dict:
    manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    config = dict(manifest["config"])
    if output is not None:
        config["output"] = output
    cfg = build_config(config)
    return execute(manifest["command"], cfg, manifest.get("options", {}),
                   argv=manifest.get("argv"))


def run_command(argv=None) -> int:
    """Parse ``argv``, run, and return the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            if ns.command == "replay":
                manifest = replay(ns.manifest, getattr(ns, "output", None))
            elif ns.check or ns.command is None:
                if not ns.check:
                    parser.print_help(sys.stderr)
                    return 1
                data, explicit = _config_data(ns)
                manifest = execute("check", build_config(data), {}, argv)
            else:
                data, explicit = _config_data(ns)
                cfg = build_config(data)
                manifest = execute(ns.command, cfg,
                                   _command_options(ns, explicit), argv)
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ParameterError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    results = manifest["results"]
    print(json.dumps({"command": manifest["command"], "outputs": manifest["outputs"],
                      "results": results}, indent=2, sort_keys=True))
    if manifest["command"] == "check" and not results["passed"]:
        return 2
    return 0


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run_command())


if __name__ == "__main__":
    main()
