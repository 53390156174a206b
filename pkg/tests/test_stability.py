import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voltstab.integrator import GridSpec, integrate, solve_ie
from voltstab.linalg import NormKind, log_norm, vector_norm
from voltstab.model import (IDEProblem, IEProblem, KernelFunction, MatrixTimeFunction,
                            TimeFunction, builtin_fig1_problem, builtin_fig2_problem)
from voltstab.stability import (IndicatorTrace, StabilityConfig, averaged_check,
                                pointwise_check, theorem1_trace, theorem1_verdict,
                                theorem2_verdict, theorem3_trace, theorem3_verdict,
                                verify_against_trajectory)

GRID = GridSpec(20.0, 0.025)
SHORT = GridSpec(2.0, 0.05)


def constant_ide(a, b, x0):
    return IDEProblem(MatrixTimeFunction.constant(a), KernelFunction.constant(b), x0)


def flat_trace(lognorm, rest, n=11):
    times = np.linspace(0.0, 1.0, n)
    return IndicatorTrace(times, np.full(n, lognorm), np.full(n, rest), np.zeros(n))


def test_config_validation():
    for kwargs in ({"epsilon": 0.0}, {"delta1": -1.0}, {"epsilon": 0.1, "delta2": 0.2},
                   {"max_total_margin": -0.1}):
        with pytest.raises(ValueError):
            StabilityConfig(**kwargs)
    assert StabilityConfig(kind="l2").kind is NormKind.EUCLID


def test_fig1_trace_at_origin():
    trace = theorem1_trace(builtin_fig1_problem(1), StabilityConfig(epsilon=0.1, grid=GRID))
    # Lambda_max([[-6, 1], [0.5, -2]]) = -1.5, ||F'(0)||_max / eps = 0.1 / 0.1
    assert trace.lognorm[0] == pytest.approx(-1.5, abs=1e-15)
    assert trace.memory[0] == 0.0
    assert trace.forcing[0] == pytest.approx(1.0, rel=1e-15)
    assert trace.total[0] == pytest.approx(-0.5, abs=1e-15)


def test_default_epsilon_is_sup_forcing_derivative():
    trace = theorem1_trace(builtin_fig1_problem(1), StabilityConfig(grid=GRID))
    assert trace.epsilon == pytest.approx(0.1, rel=1e-15)
    assert trace.forcing.max() == pytest.approx(1.0, rel=1e-15)


def test_zero_kernel_trace():
    problem = IEProblem(KernelFunction.zero(2), TimeFunction.zero(2))
    trace = theorem1_trace(problem, StabilityConfig(grid=SHORT))
    assert np.all(trace.total == 0.0)
    assert not pointwise_check(trace).certified


def test_constant_kernel_trace():
    problem = IEProblem(KernelFunction.constant(-3.0 * np.eye(2)), TimeFunction.zero(2))
    trace = theorem1_trace(problem, StabilityConfig(grid=SHORT))
    np.testing.assert_allclose(trace.total, -3.0, atol=1e-9)
    report = theorem1_verdict(problem, StabilityConfig(grid=SHORT))
    assert report.certified


def test_fig2_trace_at_origin():
    cfg = StabilityConfig(grid=SHORT)
    assert theorem3_trace(builtin_fig2_problem(1.0), cfg).total[0] == pytest.approx(-1.0)
    diag = constant_ide(-3.0 * np.eye(2), np.zeros((2, 2)), [1.0, 0.0])
    np.testing.assert_allclose(theorem3_trace(diag, cfg).total, -3.0)


def test_fig2_memory_term_against_quadrature():
    times = np.array([0.0, 1.0, 2.5])
    cfg = StabilityConfig(grid=GridSpec(2.5, 0.00125))
    trace = theorem3_trace(builtin_fig2_problem(1.0), cfg)
    h = builtin_fig2_problem(1.0).memory_kernel
    for t in times[1:]:
        s = np.linspace(0.0, t, 40001)
        row = np.abs(h(t, s)).sum(axis=-1).max(axis=-1)
        expected = np.sum(0.5 * (row[1:] + row[:-1]) * np.diff(s))
        i = int(round(t / cfg.grid.dt))
        assert trace.memory[i] == pytest.approx(expected, rel=2e-5)


def test_theorem3_rejects_forced_problem():
    p = IDEProblem(MatrixTimeFunction.constant([[-1.0]]), KernelFunction.zero(1), [1.0],
                   forcing_dt=TimeFunction(lambda t: np.array([1.0]), 1))
    with pytest.raises(ValueError):
        theorem3_trace(p, StabilityConfig(grid=SHORT))
    with pytest.raises(TypeError):
        theorem1_trace(p, StabilityConfig(grid=SHORT))


def test_averaged_check_constant_traces():
    assert averaged_check(flat_trace(-1.5, 0.5)).certified
    worse = averaged_check(flat_trace(0.5, 0.5))
    assert not worse.certified
    assert worse.worst_value == pytest.approx(1.0)
    assert not averaged_check(flat_trace(-1.5, 0.5), margin=1.0).certified


def test_averaged_check_against_brute_force():
    rng = np.random.default_rng(4)
    n = 30
    times = np.linspace(0.0, 3.0, n)
    trace = IndicatorTrace(times, rng.normal(size=n), rng.uniform(0, 1, n), rng.uniform(0, 1, n))
    g = trace.memory + trace.forcing
    best = -np.inf
    for i in range(1, n):
        for j in range(i):
            s = times[j:i + 1]
            seg = g[j:i + 1]
            avg = np.sum(0.5 * (seg[1:] + seg[:-1]) * np.diff(s)) / (times[i] - times[j])
            best = max(best, trace.lognorm[i] + avg)
    assert averaged_check(trace).worst_value == pytest.approx(best, rel=1e-12)


def test_pointwise_does_not_imply_averaged():
    # a short dip of the log norm: the later window average is dragged up by early memory
    times = np.array([0.0, 1.0])
    trace = IndicatorTrace(times, np.array([-10.0, -1.0]), np.array([9.0, 0.5]), np.zeros(2))
    assert pointwise_check(trace).certified
    assert not averaged_check(trace).certified


def test_builtin_scenarios_pointwise_and_averaged_agree():
    cfg = StabilityConfig(grid=GRID)
    for trace in (theorem1_trace(builtin_fig1_problem(1), cfg),
                  theorem3_trace(builtin_fig2_problem(1.33), cfg)):
        assert pointwise_check(trace).certified
        assert averaged_check(trace).certified


def test_fig1_set2_not_certified():
    report = theorem1_verdict(builtin_fig1_problem(2), StabilityConfig(grid=GRID))
    assert not report.certified
    assert not report.pointwise.certified
    assert report.pointwise.violated_at is not None
    assert any("sufficient" in note for note in report.notes)


def test_fig1_set2_indicator_at_default_epsilon():
    # with eps = sup ||F'|| = 0.1 the forcing part alone pushes the total above zero at t = 0
    trace = theorem1_trace(builtin_fig1_problem(2), StabilityConfig(grid=GRID))
    # Lambda_max([[-5, 1], [0.5, -1]]) = -0.5
    assert trace.total[0] == pytest.approx(-0.5 + 1.0, abs=1e-12)
    assert np.all(trace.total > 0)


def test_theorem1_hypotheses():
    shifted = IEProblem(KernelFunction.constant(-3.0 * np.eye(1)),
                        TimeFunction(lambda t: np.array([1.0]), 1, lambda t: np.array([0.0])))
    report = theorem1_verdict(shifted, StabilityConfig(grid=SHORT))
    assert not report.hypotheses_ok and not report.certified
    assert any("vanish" in note for note in report.notes)


def test_theorem2_unforced():
    problem = IEProblem(KernelFunction.constant(-3.0 * np.eye(2)), TimeFunction.zero(2))
    cfg = StabilityConfig(epsilon=0.1, delta1=0.1, delta2=0.1, grid=SHORT)
    assert theorem2_verdict(problem, cfg).certified


def test_theorem2_initial_perturbation_too_large():
    eps = 0.1
    f0 = 2 * eps
    problem = IEProblem(KernelFunction.constant(-3.0 * np.eye(1)),
                        TimeFunction(lambda t: np.array([f0]), 1, lambda t: np.array([0.0])))
    report = theorem2_verdict(problem, StabilityConfig(epsilon=eps, delta1=eps, delta2=eps,
                                                       grid=SHORT))
    assert not report.certified
    assert any("delta2" in note for note in report.notes)


def test_theorem2_fig1_set1():
    cfg = StabilityConfig(epsilon=0.1, delta1=0.1, delta2=0.1, grid=GRID)
    report = theorem2_verdict(builtin_fig1_problem(1), cfg)
    assert report.certified
    assert report.bound == 0.1


def test_theorem2_needs_deltas():
    with pytest.raises(ValueError):
        theorem2_verdict(builtin_fig1_problem(1), StabilityConfig(epsilon=0.1, grid=SHORT))


def test_verify_examples():
    problem = IEProblem(KernelFunction.constant(-3.0 * np.eye(1)),
                        TimeFunction(lambda t: np.array([0.05 * t]), 1,
                                     lambda t: np.array([0.05])))
    cfg = StabilityConfig(epsilon=0.1, grid=SHORT)
    report = theorem1_verdict(problem, cfg)
    traj = solve_ie(problem, SHORT)
    assert verify_against_trajectory(report, traj)
    broken = verify_against_trajectory(report, traj, bound=1e-6)
    assert not broken and broken.reason == "bound exceeded"
    assert broken.inconsistent_at == pytest.approx(traj.times[1])


def test_verify_uncertified_is_vacuous():
    report = theorem1_verdict(builtin_fig1_problem(2), StabilityConfig(grid=GRID))
    traj = solve_ie(builtin_fig1_problem(2), GRID)
    assert verify_against_trajectory(report, traj).consistent


def test_verify_flags_monotonicity_and_overflow():
    problem = constant_ide(-3.0 * np.eye(1), np.zeros((1, 1)), [1.0])
    report = theorem3_verdict(problem, StabilityConfig(grid=SHORT))
    traj = integrate(problem, SHORT)
    assert verify_against_trajectory(report, traj)
    bumped = traj.norms.copy()
    bumped[5] = bumped[4] * 1.01
    fake = type(traj)(traj.times, traj.states, bumped, traj.kind)
    assert verify_against_trajectory(report, fake).reason == "norm increased"
    cut = type(traj)(traj.times[:5], traj.states[:5], traj.norms[:5], traj.kind, overflow=True)
    assert verify_against_trajectory(report, cut).reason == "trajectory overflowed"


def test_certified_bound_holds_on_sweep():
    # the bound part of the initial-value theorem holds even where the norm is not monotone
    from voltstab.scenario import sweep_unit_circle
    sweep = sweep_unit_circle(builtin_fig2_problem(1.33), GRID, 64, NormKind.MAX)
    for traj in sweep.trajectories:
        assert traj.sup_norm <= traj.norms[0] * (1 + 1e-6)


def test_exact_solution_rebounds_for_certified_problem():
    # X' = A X + B int X with constant A, B: exact solution via the augmented system
    a = np.array([[-6.0, 0.5], [0.3, -5.0]])
    b = np.array([[0.5, 0.4], [-0.3, 0.6]])
    horizon = 5.0
    assert log_norm(a, NormKind.MAX) + horizon * 0.9 < 0
    report = theorem3_verdict(constant_ide(a, b, [1.0, 0.0]),
                              StabilityConfig(grid=GridSpec(horizon, 0.025)))
    assert report.certified
    m = np.block([[a, b], [np.eye(2), np.zeros((2, 2))]])
    w, v = np.linalg.eig(m)
    c = np.linalg.solve(v, [1.0, 0.0, 0.0, 0.0])
    t = np.linspace(0.0, horizon, 5001)
    x = ((v[None] * np.exp(np.outer(t, w))[:, None, :]) @ c)[:, :2].real
    norms = vector_norm(x, NormKind.MAX)
    assert norms.max() <= 1.0 + 1e-12
    assert np.any(np.diff(norms) > 1e-6)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 10.0), st.floats(0.05, 10.0))
def test_larger_epsilon_never_raises_total(eps1, eps2):
    lo, hi = sorted((eps1, eps2))
    p = builtin_fig1_problem(1)
    grid = GridSpec(2.0, 0.1)
    t_lo = theorem1_trace(p, StabilityConfig(epsilon=lo, grid=grid)).total
    t_hi = theorem1_trace(p, StabilityConfig(epsilon=hi, grid=grid)).total
    assert np.all(t_hi <= t_lo + 1e-15)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(1.0, 4.0))
def test_scaling_local_matrix_scales_log_norm(alpha, factor):
    grid = GridSpec(2.0, 0.1)
    cfg = StabilityConfig(grid=grid)
    base = theorem3_trace(builtin_fig2_problem(alpha), cfg)
    scaled = theorem3_trace(builtin_fig2_problem(alpha * factor), cfg)
    np.testing.assert_allclose(scaled.lognorm, factor * base.lognorm, rtol=1e-12)
    np.testing.assert_allclose(scaled.memory, base.memory, rtol=1e-15)
    # A(t) has a negative log norm, so a larger scale can only help
    assert np.all(scaled.total <= base.total + 1e-12)
