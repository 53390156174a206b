"""Explicit Euler time stepping with a trapezoidal memory integral.

At step ``i`` the memory term is

    Y_i = dt * sum_{k=0}^{i} w_k K(t_i, t_k) X_k,    w_0 = w_i = 1/2, else 1,

(``Y_0 = 0``) and the state is advanced by

    X_{i+1} = X_i + dt * (A(t_i) X_i + Y_i + F'((t_i + t_{i+1}) / 2)).

The full history is kept, so a run costs O(N) memory and O(N^2) kernel
evaluations.
"""
import math
from dataclasses import dataclass

import numpy as np

from .linalg import NormKind, vector_norm
from .model import ie_to_cauchy

__all__ = [
    "GridSpec",
    "Trajectory",
    "trapezoid_weights",
    "memory_integral",
    "integrate",
    "integrate_many",
    "solve_ie",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid ``t_i = i * dt``, ``i = 0..steps``.

    ``steps = round(t_end / dt)``; the grid ends at ``steps * dt``, which may
    differ from the requested ``t_end`` when ``dt`` does not divide it.
    """

    t_end: float = 20.0
    dt: float = 0.025

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be positive, got {self.t_end!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if self.dt > self.t_end:
            raise ValueError(f"dt={self.dt} exceeds t_end={self.t_end}")
        if self.steps < 2:
            raise ValueError("grid needs at least two steps")

    @property
    def steps(self):
        return int(round(self.t_end / self.dt))

    @property
    def end(self):
        return self.steps * self.dt

    @property
    def times(self):
        return np.arange(self.steps + 1) * self.dt


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    norms: np.ndarray
    kind: NormKind
    overflow: bool = False

    def __len__(self):
        return len(self.times)

    @property
    def final_norm(self):
        return float(self.norms[-1])

    @property
    def sup_norm(self):
        return float(np.max(self.norms))


def trapezoid_weights(i, dt):
    """Composite trapezoid weights for nodes ``t_0..t_i``; they sum to ``i * dt``."""
    w = np.full(i + 1, dt)
    w[0] *= 0.5
    w[-1] *= 0.5
    if i == 0:
        w[0] = 0.0
    return w


def _memory_term(kernel, times, history, i, dt):
    # history: (k, n, m) with k > i; returns (n, m)
    if i == 0:
        return np.zeros(history.shape[1:])
    k = kernel(times[i], times[: i + 1])
    w = trapezoid_weights(i, dt)
    return np.einsum("k,kab,kbm->am", w, k, history[: i + 1])


def memory_integral(problem, history, i, dt):
    """Trapezoid approximation of ``int_0^{t_i} K(t_i, s) X(s) ds`` from stored states."""
    history = np.asarray(history, dtype=float)
    if history.shape[0] < i + 1:
        raise ValueError(f"history holds {history.shape[0]} states, need {i + 1}")
    times = np.arange(i + 1) * dt
    return _memory_term(problem.memory_kernel, times, history[..., None], i, dt)[:, 0]


def _march(problem, grid, x0):
    """Advance every column of ``x0`` (shape (n, m)) over ``grid``.

    Returns states of shape (steps + 1, n, m) and, per column, the number of
    finite states; a column stops being meaningful once it overflows.
    """
    times = grid.times
    dt = grid.dt
    steps = grid.steps
    n, m = x0.shape
    states = np.empty((steps + 1, n, m))
    states[0] = x0
    valid = np.full(m, steps + 1)
    alive = np.ones(m, dtype=bool)
    forcing = problem.forcing_dt
    memory = not problem.memory_kernel.vanishes
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(steps):
            x = states[i]
            rhs = problem.local_matrix(times[i]) @ x
            if memory:
                rhs = rhs + _memory_term(problem.memory_kernel, times, states, i, dt)
            if forcing is not None:
                rhs = rhs + forcing(0.5 * (times[i] + times[i + 1]))[:, None]
            states[i + 1] = x + dt * rhs
            bad = alive & ~np.all(np.isfinite(states[i + 1]), axis=0)
            if np.any(bad):
                valid[bad] = i + 1
                alive &= ~bad
                states[i + 1][:, bad] = 0.0
                if not np.any(alive):
                    break
    return states, valid


def _trajectory(times, states, count, kind, steps):
    return Trajectory(
        times=times[:count].copy(),
        states=states[:count].copy(),
        norms=vector_norm(states[:count], kind),
        kind=kind,
        overflow=count < steps + 1,
    )


def integrate(problem, grid, kind=NormKind.MAX):
    """Integrate an IDE problem from ``problem.initial`` over ``grid``.

    A non-finite state ends the run: the returned trajectory holds the
    finite prefix and has ``overflow=True``.
    """
    kind = NormKind.parse(kind)
    states, valid = _march(problem, grid, problem.initial[:, None])
    return _trajectory(grid.times, states[:, :, 0], int(valid[0]), kind, grid.steps)


def integrate_many(problem, grid, initials, kind=NormKind.MAX):
    """Integrate an unforced problem from several initial states at once.

    Each row of ``initials`` is one starting point; the columns are advanced
    together, which is equivalent to separate runs because the problem is
    linear.
    """
    kind = NormKind.parse(kind)
    if problem.forced:
        raise ValueError("batched integration is only defined for unforced problems")
    x0 = np.asarray(initials, dtype=float)
    if x0.ndim != 2 or x0.shape[1] != problem.dim:
        raise ValueError(f"initials must have shape (m, {problem.dim})")
    states, valid = _march(problem, grid, x0.T)
    return [_trajectory(grid.times, states[:, :, j], int(valid[j]), kind, grid.steps)
            for j in range(x0.shape[0])]


def solve_ie(problem, grid, kind=NormKind.MAX):
    """Solve an integral-equation system through its Cauchy reduction."""
    return integrate(ie_to_cauchy(problem), grid, kind)
