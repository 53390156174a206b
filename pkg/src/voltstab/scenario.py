"""Scenarios: flat key-value configuration, orchestration and CSV output.

A scenario document is a list of ``key = value`` lines; ``#`` starts a
comment. Recognised keys::

    problem          fig1 | fig2 | <registered name>      (default fig1)
    set              parameter set of fig1, 1 or 2         (default 1)
    alpha            scale of A(t) in fig2, > 0            (default 1.33)
    t_end            horizon                               (default 20)
    dt               step                                  (default 0.025)
    norm             l1 | max | l2                         (default max)
    epsilon          > 0; default sup ||F'|| on the grid
    delta1, delta2   > 0; both or neither
    max_total_margin >= 0                                  (default 0)
    sweep_count      integer >= 1, unforced problems only
    out_trajectory, out_indicator, out_summary             file paths
"""
import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from .integrator import GridSpec, integrate, integrate_many
from .linalg import NormKind, vector_norm
from .model import IEProblem, builtin_fig1_problem, builtin_fig2_problem, ie_to_cauchy
from .stability import (StabilityConfig, sup_forcing_dt, theorem1_trace, theorem1_verdict,
                        theorem2_verdict, theorem3_trace, theorem3_verdict,
                        verify_against_trajectory)

__all__ = [
    "Scenario",
    "ScenarioError",
    "RunOutput",
    "SweepResult",
    "parse_scenario",
    "build_problem",
    "run_scenario",
    "sweep_unit_circle",
    "unit_sphere_points",
    "register_problem",
    "format_number",
    "EXIT_CERTIFIED",
    "EXIT_NOT_CERTIFIED",
    "EXIT_FAILURE",
]

EXIT_CERTIFIED = 0
EXIT_NOT_CERTIFIED = 1
EXIT_FAILURE = 2

SWEEP_SEED = 42
DEFAULT_SWEEP_COUNT = 64

_REGISTRY: Dict[str, Callable] = {}


class ScenarioError(ValueError):
    def __init__(self, key, message, line=None):
        self.key = key
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{key}{where}: {message}")


def register_problem(name, factory):
    """Make a programmatically built problem addressable as ``problem = name``.

    ``factory(scenario)`` must return an :class:`IEProblem` or an
    :class:`IDEProblem`.
    """
    if name in ("fig1", "fig2"):
        raise ValueError(f"{name!r} is a built-in problem")
    _REGISTRY[name] = factory


@dataclass(frozen=True)
class Scenario:
    problem: str = "fig1"
    parameter_set: int = 1
    alpha: float = 1.33
    grid: GridSpec = field(default_factory=GridSpec)
    norm: NormKind = NormKind.MAX
    epsilon: Optional[float] = None
    delta1: Optional[float] = None
    delta2: Optional[float] = None
    max_total_margin: float = 0.0
    sweep_count: Optional[int] = None
    out_trajectory: Optional[str] = None
    out_indicator: Optional[str] = None
    out_summary: Optional[str] = None

    @property
    def stability(self):
        return StabilityConfig(self.epsilon, self.delta1, self.delta2, self.norm,
                               self.grid, self.max_total_margin)


def _positive_float(key, text, line):
    try:
        value = float(text)
    except ValueError:
        raise ScenarioError(key, f"expected a number, got {text!r}", line) from None
    if not (math.isfinite(value) and value > 0):
        raise ScenarioError(key, f"must be a positive number, got {text!r}", line)
    return value


def _nonneg_float(key, text, line):
    try:
        value = float(text)
    except ValueError:
        raise ScenarioError(key, f"expected a number, got {text!r}", line) from None
    if not (math.isfinite(value) and value >= 0):
        raise ScenarioError(key, f"must be non-negative, got {text!r}", line)
    return value


def _positive_int(key, text, line):
    try:
        value = int(text)
    except ValueError:
        raise ScenarioError(key, f"expected an integer, got {text!r}", line) from None
    if value < 1:
        raise ScenarioError(key, f"must be at least 1, got {value}", line)
    return value


def _parameter_set(key, text, line):
    if text not in ("1", "2"):
        raise ScenarioError(key, f"must be 1 or 2, got {text!r}", line)
    return int(text)


def _norm(key, text, line):
    try:
        return NormKind.parse(text)
    except ValueError as exc:
        raise ScenarioError(key, str(exc), line) from None


def _problem(key, text, line):
    if text not in ("fig1", "fig2") and text not in _REGISTRY:
        raise ScenarioError(key, f"unknown problem {text!r}", line)
    return text


_PARSERS = {
    "problem": _problem,
    "set": _parameter_set,
    "alpha": _positive_float,
    "t_end": _positive_float,
    "dt": _positive_float,
    "norm": _norm,
    "epsilon": _positive_float,
    "delta1": _positive_float,
    "delta2": _positive_float,
    "max_total_margin": _nonneg_float,
    "sweep_count": _positive_int,
    "out_trajectory": lambda k, v, n: v,
    "out_indicator": lambda k, v, n: v,
    "out_summary": lambda k, v, n: v,
}

_FIELD = {"set": "parameter_set"}


def parse_scenario(text, overrides=None):
    """Parse a scenario document; ``overrides`` (raw strings) win over the file.

    Raises :class:`ScenarioError` naming the offending key and line.
    """
    raw = {}
    lines = {}
    for number, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ScenarioError(content, "expected 'key = value'", number)
        key, value = (part.strip() for part in content.split("=", 1))
        if key not in _PARSERS:
            raise ScenarioError(key, "unknown key", number)
        if key in raw:
            raise ScenarioError(key, f"duplicate key (first on line {lines[key]})", number)
        raw[key] = value
        lines[key] = number
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _PARSERS:
            raise ScenarioError(key, "unknown key")
        raw[key] = str(value)
        lines[key] = None

    values = {}
    for key, value in raw.items():
        values[_FIELD.get(key, key)] = _PARSERS[key](key, value, lines[key])

    t_end = values.pop("t_end", 20.0)
    dt = values.pop("dt", 0.025)
    try:
        grid = GridSpec(t_end, dt)
    except ValueError as exc:
        raise ScenarioError("dt", str(exc), lines.get("dt")) from None

    if ("delta1" in values) != ("delta2" in values):
        key = "delta2" if "delta1" in values else "delta1"
        raise ScenarioError(key, "delta1 and delta2 must be given together")
    eps = values.get("epsilon")
    if eps is not None and values.get("delta2") is not None and values["delta2"] > eps:
        raise ScenarioError("delta2", "must not exceed epsilon", lines.get("delta2"))

    scenario = Scenario(grid=grid, **values)
    if scenario.sweep_count is not None and scenario.problem == "fig1":
        raise ScenarioError("sweep_count", "sweeps need an unforced IDE problem",
                            lines.get("sweep_count"))
    return scenario


def build_problem(scenario):
    if scenario.problem == "fig1":
        return builtin_fig1_problem(scenario.parameter_set, horizon=scenario.grid.end)
    if scenario.problem == "fig2":
        return builtin_fig2_problem(scenario.alpha, horizon=scenario.grid.end)
    return _REGISTRY[scenario.problem](scenario)


def unit_sphere_points(dim, count, seed=SWEEP_SEED, kind=NormKind.EUCLID):
    """Start points on the unit sphere of ``kind``.

    Directions are ``(cos theta_m, sin theta_m)``, ``theta_m = 2 pi m / count``
    in two dimensions. In higher dimensions the signed coordinate vectors come
    first, followed by random directions drawn with a fixed seed. Every
    direction is then scaled to unit ``kind`` norm, so for ``max`` the points
    lie on a square rather than a circle.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if dim == 1:
        return np.array([[1.0], [-1.0]] * count)[:count]
    if dim == 2:
        theta = 2.0 * np.pi * np.arange(count) / count
        return _normalise(np.column_stack([np.cos(theta), np.sin(theta)]), kind)
    axes = np.concatenate([np.eye(dim), -np.eye(dim)])
    points = [axes[i] for i in range(min(count, 2 * dim))]
    rng = np.random.default_rng(seed)
    while len(points) < count:
        v = rng.standard_normal(dim)
        norm = np.linalg.norm(v)
        if norm > 1e-12:
            points.append(v / norm)
    return _normalise(np.array(points), kind)


def _normalise(points, kind):
    return points / vector_norm(points, kind)[:, None]


@dataclass(eq=False)
class SweepResult:
    starts: np.ndarray
    trajectories: list
    ratios: np.ndarray

    @property
    def argmin(self):
        return int(np.argmin(self.ratios))

    @property
    def argmax(self):
        return int(np.argmax(self.ratios))

    @property
    def overflowed(self):
        return [i for i, t in enumerate(self.trajectories) if t.overflow]


def sweep_unit_circle(problem, grid, count=DEFAULT_SWEEP_COUNT, kind=NormKind.MAX):
    """Integrate an unforced IDE from ``count`` points of the unit sphere.

    ``ratios[m]`` is ``sup_t ||X(t)|| / ||X(0)||`` for start point ``m``
    (infinite when the run overflowed).
    """
    if problem.forced:
        raise ValueError("unit-sphere sweeps need an unforced problem")
    starts = unit_sphere_points(problem.dim, count, kind=kind)
    trajectories = integrate_many(problem, grid, starts, kind)
    ratios = np.array([np.inf if t.overflow else t.sup_norm / t.norms[0] for t in trajectories])
    return SweepResult(starts, trajectories, ratios)


def format_number(x):
    # 17 significant digits: round-trips any double
    return f"{x:.16e}"


def _csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([cell if isinstance(cell, str) else format_number(cell) for cell in row])
    return buf.getvalue()


def trajectory_csv(traj):
    n = traj.states.shape[1]
    header = ["t"] + [f"x{k + 1}" for k in range(n)] + ["norm"]
    rows = ([t, *x, nm] for t, x, nm in zip(traj.times, traj.states, traj.norms))
    return _csv(header, rows)


def sweep_csv(sweep):
    n = sweep.starts.shape[1]
    header = ["start", "t"] + [f"x{k + 1}" for k in range(n)] + ["norm"]
    rows = ([str(m), t, *x, nm]
            for m, traj in enumerate(sweep.trajectories)
            for t, x, nm in zip(traj.times, traj.states, traj.norms))
    return _csv(header, rows)


def indicator_csv(trace):
    rows = zip(trace.times, trace.lognorm, trace.memory, trace.forcing, trace.total)
    return _csv(["t", "lognorm", "memory", "forcing", "total"], rows)


def read_csv(text):
    """Parse CSV text produced here into ``(header, float array)``."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    return header, np.array([[float(c) for c in row] for row in reader])


@dataclass(eq=False)
class RunOutput:
    summary: dict
    exit_code: int
    trajectory_csv: Optional[str] = None
    indicator_csv: Optional[str] = None
    diagnostics: List[str] = field(default_factory=list)


def _report_summary(report):
    return {
        "theorem": report.theorem,
        "certified": report.certified,
        "bound": report.bound,
        "epsilon": report.trace.epsilon,
        "pointwise": {
            "certified": report.pointwise.certified,
            "violated_at": report.pointwise.violated_at,
            "max_total": report.pointwise.max_total,
        },
        "averaged": {
            "certified": report.averaged.certified,
            "worst_pair": list(report.averaged.worst_pair),
            "worst_value": report.averaged.worst_value,
        },
        "notes": list(report.notes),
    }


def _verdict(problem, cfg):
    if isinstance(problem, IEProblem):
        if cfg.delta1 is not None:
            return theorem2_verdict(problem, cfg)
        return theorem1_verdict(problem, cfg)
    return theorem3_verdict(problem, cfg)


def _trace(problem, cfg):
    if isinstance(problem, IEProblem):
        return theorem1_trace(problem, cfg)
    return theorem3_trace(problem, cfg)


def _as_ide(problem):
    return ie_to_cauchy(problem) if isinstance(problem, IEProblem) else problem


COMMANDS = ("solve", "indicate", "certify", "sweep")


def run_scenario(scenario, command="certify"):
    """Run ``command`` (solve, indicate, certify or sweep) for a scenario.

    Output is a pure function of the scenario: repeated runs give identical
    CSV text.
    """
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    problem = build_problem(scenario)
    cfg = scenario.stability
    kind = scenario.norm
    summary = {"command": command, "problem": scenario.problem, "norm": kind.value,
               "t_end": scenario.grid.end, "dt": scenario.grid.dt}
    out = RunOutput(summary, EXIT_CERTIFIED)
    if scenario.problem == "fig1":
        summary["set"] = scenario.parameter_set
    elif scenario.problem == "fig2":
        summary["alpha"] = scenario.alpha
    if isinstance(problem, IEProblem):
        summary["sup_forcing"] = max(float(vector_norm(problem.forcing(t), kind))
                                     for t in scenario.grid.times)
        summary["sup_forcing_dt"] = sup_forcing_dt(problem, scenario.grid, kind)

    if command == "indicate":
        out.indicator_csv = indicator_csv(_trace(problem, cfg))
        return out

    if command == "sweep" or scenario.sweep_count is not None:
        ide = _as_ide(problem)
        if ide.forced:
            raise ValueError("sweeps need an unforced IDE problem")
        sweep = sweep_unit_circle(ide, scenario.grid, scenario.sweep_count or DEFAULT_SWEEP_COUNT,
                                  kind)
        out.trajectory_csv = sweep_csv(sweep)
        summary["sweep"] = {
            "count": len(sweep.trajectories),
            "argmin": sweep.argmin,
            "argmax": sweep.argmax,
            "min_ratio": float(sweep.ratios[sweep.argmin]),
            "max_ratio": float(sweep.ratios[sweep.argmax]),
            "all_end_inside": bool(all(t.norms[-1] < t.norms[0] for t in sweep.trajectories)),
            "overflowed": sweep.overflowed,
        }
        trajectories = sweep.trajectories
        if sweep.overflowed:
            out.diagnostics.append(f"overflow in sweep trajectories {sweep.overflowed}")
    else:
        traj = integrate(_as_ide(problem), scenario.grid, kind)
        out.trajectory_csv = trajectory_csv(traj)
        summary["sup_norm"] = traj.sup_norm
        summary["final_norm"] = traj.final_norm
        summary["overflow"] = traj.overflow
        trajectories = [traj]
        if traj.overflow:
            out.diagnostics.append(f"integration overflowed after t={traj.times[-1]:g}")

    if command == "certify":
        report = _verdict(problem, cfg)
        out.indicator_csv = indicator_csv(report.trace)
        summary["report"] = _report_summary(report)
        checks = []
        for traj in trajectories:
            bound = report.bound
            if report.theorem == 3:
                bound = float(traj.norms[0])
            checks.append(verify_against_trajectory(report, traj, bound))
        bad = [(i, c) for i, c in enumerate(checks) if not c.consistent]
        summary["consistent"] = not bad
        if bad:
            i, c = bad[0]
            summary["inconsistent"] = {"trajectory": i, "at": c.inconsistent_at,
                                       "reason": c.reason, "count": len(bad)}
        out.exit_code = EXIT_CERTIFIED if report.certified else EXIT_NOT_CERTIFIED

    if out.diagnostics:
        out.exit_code = EXIT_FAILURE
    return out


def summary_json(summary):
    def clean(obj):
        if isinstance(obj, float) and not math.isfinite(obj):
            return str(obj)
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        if isinstance(obj, list):
            return [clean(v) for v in obj]
        return obj
    return json.dumps(clean(summary), indent=2, sort_keys=True)


PRESETS = {
    "fig1a": "problem = fig1\nset = 1\n",
    "fig1c": "problem = fig1\nset = 2\n",
    "fig2": f"problem = fig2\nalpha = 1.33\nsweep_count = {DEFAULT_SWEEP_COUNT}\n",
}


def preset_scenario(name, overrides=None):
    try:
        text = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return parse_scenario(text, overrides)
