"""Stability-indicating functionals for Volterra IE and IDE systems.

For an IDE ``X' = A(t) X + int_0^t K(t, s) X(s) ds [+ F'(t)]`` the indicator
at grid time ``t`` is

    total(t) = Lambda(A(t)) + int_0^t ||K(t, s)|| ds + ||F'(t)|| / eps,

where ``Lambda`` is the logarithmic norm matching the chosen vector norm.
For an integral equation the reduction of :func:`voltstab.model.ie_to_cauchy`
supplies ``A(t) = B(t, t)`` and ``K = dB/dt``.

Two checks are reported. The pointwise check asks ``total < 0`` at every
grid point. The averaged check asks, for every grid pair ``t' < t``,

    Lambda(A(t)) + 1/(t - t') int_{t'}^{t} (memory + forcing)(s) ds < 0.

Both are sufficient conditions only, and only on the grid: a positive
indicator proves nothing about instability.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .integrator import GridSpec, trapezoid_weights
from .linalg import NormKind, log_norm, matrix_operator_norm, vector_norm
from .model import IDEProblem, IEProblem, ie_to_cauchy

__all__ = [
    "StabilityConfig",
    "IndicatorTrace",
    "PointwiseVerdict",
    "AveragedVerdict",
    "StabilityReport",
    "Consistency",
    "sup_forcing_dt",
    "theorem1_trace",
    "theorem3_trace",
    "averaged_check",
    "pointwise_check",
    "theorem1_verdict",
    "theorem2_verdict",
    "theorem3_verdict",
    "verify_against_trajectory",
]

SUFFICIENT_ONLY = ("the conditions are sufficient only: a non-negative indicator "
                   "is not evidence of instability")
GRID_ONLY = "all checks are evaluated on the grid points only"


@dataclass(frozen=True)
class StabilityConfig:
    """Settings for indicator evaluation.

    ``epsilon=None`` means "use the grid supremum of ||F'||", which makes the
    forcing part peak at exactly 1. ``max_total_margin`` tightens both checks
    to ``value < -margin``.
    """

    epsilon: Optional[float] = None
    delta1: Optional[float] = None
    delta2: Optional[float] = None
    kind: NormKind = NormKind.MAX
    grid: GridSpec = field(default_factory=GridSpec)
    max_total_margin: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", NormKind.parse(self.kind))
        for name in ("epsilon", "delta1", "delta2"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be positive, got {value!r}")
        if self.epsilon is not None and self.delta2 is not None and self.delta2 > self.epsilon:
            raise ValueError(f"delta2={self.delta2} must not exceed epsilon={self.epsilon}")
        if self.max_total_margin < 0:
            raise ValueError("max_total_margin must be non-negative")


@dataclass(frozen=True, eq=False)
class IndicatorTrace:
    times: np.ndarray
    lognorm: np.ndarray
    memory: np.ndarray
    forcing: np.ndarray
    epsilon: Optional[float] = None

    @property
    def total(self):
        return self.lognorm + self.memory + self.forcing

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class PointwiseVerdict:
    certified: bool
    violated_at: Optional[float] = None
    max_total: float = float("nan")


@dataclass(frozen=True)
class AveragedVerdict:
    certified: bool
    worst_pair: Tuple[float, float]
    worst_value: float


@dataclass(eq=False)
class StabilityReport:
    theorem: int
    trace: IndicatorTrace
    pointwise: PointwiseVerdict
    averaged: AveragedVerdict
    bound: float
    hypotheses_ok: bool = True
    notes: List[str] = field(default_factory=list)

    @property
    def certified(self):
        return self.hypotheses_ok and self.pointwise.certified and self.averaged.certified


@dataclass(frozen=True)
class Consistency:
    consistent: bool
    inconsistent_at: Optional[float] = None
    reason: str = ""

    def __bool__(self):
        return self.consistent


def _row_integrals(kernel, times, kind):
    # int_0^{t_i} ||K(t_i, s)|| ds by the trapezoid rule on the grid
    dt = times[1] - times[0]
    out = np.zeros(len(times))
    if kernel.vanishes:
        return out
    for i in range(1, len(times)):
        norms = matrix_operator_norm(kernel(times[i], times[: i + 1]), kind)
        out[i] = trapezoid_weights(i, dt) @ norms
    return out


def sup_forcing_dt(problem, grid, kind=NormKind.MAX):
    """Grid supremum of ``||F'(t)||`` for an IE problem."""
    deriv = problem.forcing.derivative
    return float(max(vector_norm(deriv(t), kind) for t in grid.times))


def _ide_trace(ide, cfg, epsilon):
    times = cfg.grid.times
    lognorm = log_norm(np.stack([ide.local_matrix(t) for t in times]), cfg.kind)
    memory = _row_integrals(ide.memory_kernel, times, cfg.kind)
    if ide.forcing_dt is None:
        forcing = np.zeros(len(times))
    else:
        forcing = np.array([vector_norm(ide.forcing_dt(t), cfg.kind) for t in times]) / epsilon
    return IndicatorTrace(times, lognorm, memory, forcing, epsilon)


def _resolve_epsilon(problem, cfg):
    if cfg.epsilon is not None:
        return cfg.epsilon
    sup = sup_forcing_dt(problem, cfg.grid, cfg.kind)
    if sup == 0.0:
        # unforced: any epsilon gives a zero forcing part
        return 1.0
    return sup


def theorem1_trace(problem, cfg):
    """Indicator for an IE system perturbed by its forcing term.

    ``lognorm`` is ``Lambda(B(s, s))``, ``memory`` the trapezoid integral of
    ``||dB/dt(s, tau)||`` over ``[0, s]`` and ``forcing`` is ``||F'(s)|| / eps``.
    """
    if not isinstance(problem, IEProblem):
        raise TypeError("theorem1_trace expects an IEProblem")
    epsilon = _resolve_epsilon(problem, cfg)
    return _ide_trace(ie_to_cauchy(problem), cfg, epsilon)


def theorem3_trace(problem, cfg):
    """Indicator ``Lambda(A(t)) + int_0^t ||B(t, s)|| ds`` for an unforced IDE."""
    if not isinstance(problem, IDEProblem):
        raise TypeError("theorem3_trace expects an IDEProblem")
    if problem.forced:
        raise ValueError("initial-value stability is defined for unforced problems only")
    return _ide_trace(problem, cfg, None)


def pointwise_check(trace, margin=0.0):
    total = trace.total
    bad = np.flatnonzero(total >= -margin)
    if bad.size:
        return PointwiseVerdict(False, float(trace.times[bad[0]]), float(total.max()))
    return PointwiseVerdict(True, None, float(total.max()))


def averaged_check(trace, margin=0.0):
    """Worst window value over all grid pairs ``t_j < t_i``.

    Window integrals of ``memory + forcing`` come from a cumulative trapezoid
    sum, so each pair costs O(1) and the whole check O(N^2).
    """
    times = trace.times
    g = trace.memory + trace.forcing
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(times))])
    worst_value = -np.inf
    worst_pair = (float(times[0]), float(times[1]))
    for i in range(1, len(times)):
        values = trace.lognorm[i] + (cum[i] - cum[:i]) / (times[i] - times[:i])
        j = int(np.argmax(values))
        if values[j] > worst_value:
            worst_value = float(values[j])
            worst_pair = (float(times[j]), float(times[i]))
    return AveragedVerdict(worst_value < -margin, worst_pair, worst_value)


def _finish(report):
    if not report.certified:
        report.notes.append(SUFFICIENT_ONLY)
    report.notes.append(GRID_ONLY)
    return report


def _checks(trace, cfg):
    return (pointwise_check(trace, cfg.max_total_margin),
            averaged_check(trace, cfg.max_total_margin))


def theorem1_verdict(problem, cfg):
    """Certify an IE system with forcing vanishing at ``t = 0``.

    The bound carried by a certified report is ``||X(t)|| <= eps``.
    """
    trace = theorem1_trace(problem, cfg)
    pointwise, averaged = _checks(trace, cfg)
    report = StabilityReport(1, trace, pointwise, averaged, bound=trace.epsilon)
    f0 = float(vector_norm(problem.forcing(0.0), cfg.kind))
    if f0 != 0.0:
        report.hypotheses_ok = False
        report.notes.append(f"forcing does not vanish at t=0 (||F(0)||={f0:.6g}); "
                            "use theorem2_verdict with delta1, delta2")
    sup = sup_forcing_dt(problem, cfg.grid, cfg.kind)
    if sup > trace.epsilon:
        report.hypotheses_ok = False
        report.notes.append(f"sup ||F'|| = {sup:.6g} exceeds epsilon = {trace.epsilon:.6g}")
    return _finish(report)


def theorem2_verdict(problem, cfg):
    """Certify an IE system whose forcing may be non-zero at ``t = 0``.

    Besides the indicator checks this requires ``sup ||F'|| <= delta1``,
    ``||F(0)|| <= delta2`` and ``delta2 <= eps``.
    """
    if cfg.delta1 is None or cfg.delta2 is None:
        raise ValueError("theorem2_verdict needs both delta1 and delta2")
    trace = theorem1_trace(problem, cfg)
    pointwise, averaged = _checks(trace, cfg)
    report = StabilityReport(2, trace, pointwise, averaged, bound=trace.epsilon)
    sup = sup_forcing_dt(problem, cfg.grid, cfg.kind)
    f0 = float(vector_norm(problem.forcing(0.0), cfg.kind))
    if sup > cfg.delta1:
        report.hypotheses_ok = False
        report.notes.append(f"forcing derivative exceeds delta1 (sup ||F'||={sup:.6g})")
    if f0 > cfg.delta2:
        report.hypotheses_ok = False
        report.notes.append(f"initial perturbation exceeds delta2 (||F(0)||={f0:.6g})")
    if cfg.delta2 > trace.epsilon:
        report.hypotheses_ok = False
        report.notes.append("delta2 exceeds epsilon")
    return _finish(report)


def theorem3_verdict(problem, cfg):
    """Certify the zero solution of an unforced IDE against initial perturbations.

    The bound carried by a certified report is ``||X(t)|| <= ||X(0)||``.
    """
    trace = theorem3_trace(problem, cfg)
    pointwise, averaged = _checks(trace, cfg)
    bound = float(vector_norm(problem.initial, cfg.kind))
    return _finish(StabilityReport(3, trace, pointwise, averaged, bound=bound))


def verify_against_trajectory(report, traj, bound=None, rtol=1e-6):
    """Check a computed trajectory against what a certified report promises.

    Every norm must stay below ``bound * (1 + rtol)`` (``bound`` defaults to
    the report's own bound). For initial-value reports the norm sequence must
    also be non-increasing, up to ``rtol * norms[0]`` per step. An
    uncertified report promises nothing and is always consistent.
    """
    if not report.certified:
        return Consistency(True, None, "report does not certify")
    n = min(len(traj.times), len(report.trace.times))
    if not np.allclose(traj.times[:n], report.trace.times[:n], rtol=0, atol=1e-9):
        raise ValueError("trajectory and report are on different grids")
    bound = report.bound if bound is None else bound
    norms = traj.norms
    over = np.flatnonzero(norms > bound * (1.0 + rtol))
    if over.size:
        return Consistency(False, float(traj.times[over[0]]), "bound exceeded")
    if report.theorem == 3:
        rises = np.flatnonzero(np.diff(norms) > rtol * norms[0])
        if rises.size:
            return Consistency(False, float(traj.times[rises[0] + 1]), "norm increased")
    if traj.overflow:
        return Consistency(False, float(traj.times[-1]), "trajectory overflowed")
    return Consistency(True)
