"""Problem definitions for linear Volterra integral and integro-differential systems.

An integral equation (IE) system

    X(t) = int_0^t B(t, tau) X(tau) dtau + F(t)

is turned into the equivalent Cauchy problem for an integro-differential
equation (IDE) by differentiating in ``t``:

    X'(t) = B(t, t) X(t) + int_0^t dB/dt(t, tau) X(tau) dtau + F'(t),
    X(0)  = F(0).

Kernels are plain callables. A kernel ``func(t, tau)`` receives a scalar
``t`` and an array ``tau`` and must return an array of shape
``tau.shape + (n, n)``; pass ``vectorized=False`` for callables that only
handle scalar ``tau``.
"""
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

__all__ = [
    "KernelFunction",
    "TimeFunction",
    "MatrixTimeFunction",
    "IEProblem",
    "IDEProblem",
    "kernel_dt",
    "ie_to_cauchy",
    "builtin_fig1_problem",
    "builtin_fig2_problem",
    "FIG1_PARAMETERS",
]

FD_STEP = 1e-6
DEFAULT_HORIZON = 20.0


def _fd_step(t):
    return max(FD_STEP, FD_STEP * abs(t))


@dataclass(frozen=True, eq=False)
class KernelFunction:
    """Matrix-valued kernel on ``0 <= tau <= t`` with optional analytic t-derivative.

    ``vanishes=True`` promises the kernel is identically zero, which lets the
    integrator skip the history sum (a plain ODE then costs O(N), not O(N^2)).
    """

    func: Callable
    dim: int
    func_dt: Optional[Callable] = None
    vectorized: bool = True
    vanishes: bool = False

    @classmethod
    def constant(cls, matrix):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        n = matrix.shape[0]
        zero = np.zeros_like(matrix)
        return cls(lambda t, tau: matrix, n, lambda t, tau: zero)

    @classmethod
    def zero(cls, dim):
        zero = np.zeros((dim, dim))
        return cls(lambda t, tau: zero, dim, lambda t, tau: zero, vanishes=True)

    def _eval(self, f, t, tau):
        tau = np.asarray(tau, dtype=float)
        shape = tau.shape + (self.dim, self.dim)
        if self.vectorized:
            out = np.asarray(f(t, tau), dtype=float)
        else:
            out = np.array([f(t, s) for s in tau.ravel()], dtype=float).reshape(shape)
        return np.broadcast_to(out, shape)

    def __call__(self, t, tau):
        return self._eval(self.func, t, tau)

    def dt(self, t, tau):
        return kernel_dt(self, t, tau)


@dataclass(frozen=True, eq=False)
class TimeFunction:
    """Vector-valued function of time, such as the forcing term F(t)."""

    func: Callable
    dim: int
    func_dt: Optional[Callable] = None

    @classmethod
    def zero(cls, dim):
        return cls(lambda t: np.zeros(dim), dim, lambda t: np.zeros(dim))

    def __call__(self, t):
        return np.broadcast_to(np.asarray(self.func(t), dtype=float), (self.dim,))

    def derivative(self, t):
        if self.func_dt is not None:
            return np.broadcast_to(np.asarray(self.func_dt(t), dtype=float), (self.dim,))
        h = _fd_step(t)
        if t - h < 0.0:
            return (-3.0 * self(t) + 4.0 * self(t + h) - self(t + 2.0 * h)) / (2.0 * h)
        return (self(t + h) - self(t - h)) / (2.0 * h)

    def derivative_function(self):
        return TimeFunction(self.derivative, self.dim)


@dataclass(frozen=True, eq=False)
class MatrixTimeFunction:
    """Matrix-valued function of time, such as A(t)."""

    func: Callable
    dim: int

    @classmethod
    def constant(cls, matrix):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(lambda t: matrix, matrix.shape[0])

    def __call__(self, t):
        return np.broadcast_to(np.asarray(self.func(t), dtype=float), (self.dim, self.dim))


def kernel_dt(kernel, t, tau):
    """Partial derivative of ``kernel`` in its first argument at ``(t, tau)``.

    Uses the analytic derivative when the kernel carries one. Otherwise a
    central difference with step ``h = max(1e-6, 1e-6 t)``; where ``t - h``
    would leave the domain (``t - h < tau``) the second-order forward
    difference ``(-3 k(t) + 4 k(t+h) - k(t+2h)) / 2h`` is used instead.
    """
    tau = np.asarray(tau, dtype=float)
    tol = 1e-12 * max(1.0, abs(t))
    if np.any(tau < -tol) or np.any(tau > t + tol):
        raise ValueError(f"kernel evaluated outside 0 <= tau <= t (t={t})")
    if kernel.func_dt is not None:
        return kernel._eval(kernel.func_dt, t, tau)

    h = _fd_step(t)
    ahead = kernel(t + h, tau)
    one_sided = (t - h) < tau
    if not np.any(one_sided):
        return (ahead - kernel(t - h, tau)) / (2.0 * h)
    forward = (-3.0 * kernel(t, tau) + 4.0 * ahead - kernel(t + 2.0 * h, tau)) / (2.0 * h)
    if np.all(one_sided):
        return forward
    central = (ahead - kernel(t - h, tau)) / (2.0 * h)
    return np.where(one_sided[..., None, None], forward, central)


@dataclass(frozen=True, eq=False)
class IEProblem:
    """``X(t) = int_0^t kernel(t, tau) X(tau) dtau + forcing(t)`` on ``[0, horizon]``."""

    kernel: KernelFunction
    forcing: TimeFunction
    horizon: float = DEFAULT_HORIZON

    def __post_init__(self):
        if self.kernel.dim != self.forcing.dim:
            raise ValueError(
                f"kernel dimension {self.kernel.dim} != forcing dimension {self.forcing.dim}")

    @property
    def dim(self):
        return self.kernel.dim


@dataclass(frozen=True, eq=False)
class IDEProblem:
    """``X' = A(t) X + int_0^t B(t, tau) X(tau) dtau [+ F'(t)]``, ``X(0) = initial``.

    ``forcing_dt`` is only present for problems obtained from an integral
    equation; it is the derivative of that equation's forcing term.
    """

    local_matrix: MatrixTimeFunction
    memory_kernel: KernelFunction
    initial: np.ndarray
    forcing_dt: Optional[TimeFunction] = None
    horizon: float = DEFAULT_HORIZON
    label: str = field(default="")

    def __post_init__(self):
        x0 = np.array(self.initial, dtype=float).reshape(-1)
        if not np.all(np.isfinite(x0)):
            raise ValueError("initial state has non-finite entries")
        object.__setattr__(self, "initial", x0)
        dims = {self.local_matrix.dim, self.memory_kernel.dim, x0.size}
        if self.forcing_dt is not None:
            dims.add(self.forcing_dt.dim)
        if len(dims) != 1:
            raise ValueError(f"inconsistent problem dimensions {sorted(dims)}")

    @property
    def dim(self):
        return self.initial.size

    @property
    def forced(self):
        return self.forcing_dt is not None

    def with_initial(self, x0):
        return replace(self, initial=x0)


def ie_to_cauchy(problem):
    """Differentiate an IE system into its equivalent IDE Cauchy problem.

    The local matrix is the kernel on the diagonal ``B(t, t)``, the memory
    kernel is ``dB/dt`` and the initial state is ``F(0)``, which is zero for
    perturbations vanishing at the origin.
    """
    kernel = problem.kernel
    diagonal = MatrixTimeFunction(lambda t: kernel(t, t), kernel.dim)
    memory = KernelFunction(lambda t, tau: kernel_dt(kernel, t, tau), kernel.dim)
    return IDEProblem(
        local_matrix=diagonal,
        memory_kernel=memory,
        initial=problem.forcing(0.0),
        forcing_dt=problem.forcing.derivative_function(),
        horizon=problem.horizon,
    )


def _stack2(a11, a12, a21, a22):
    a11, a12, a21, a22 = np.broadcast_arrays(a11, a12, a21, a22)
    return np.stack([np.stack([a11, a12], -1), np.stack([a21, a22], -1)], -2)


# decimal commas of the original tables ("0,001") read as 0.001
FIG1_PARAMETERS = {
    1: {
        "alpha": np.array([[-5.0, 1.0], [0.5, -1.0]]),
        "beta": np.array([[0.001, 0.001], [0.002, 0.001]]),
        "gamma": 1.0,
    },
    2: {
        "alpha": np.array([[-5.0, 1.0], [0.5, -1.0]]),
        "beta": np.array([[0.1, 0.1], [0.2, 0.1]]),
        "gamma": 0.0,
    },
}


def builtin_fig1_problem(parameter_set=1, horizon=DEFAULT_HORIZON):
    """The 2x2 integral equation with exponentially weighted kernel.

    Parameter set 1 satisfies the stability indicator on all of [0, 20];
    set 2 only on an initial stretch.
    """
    try:
        params = FIG1_PARAMETERS[int(parameter_set)]
    except (KeyError, TypeError, ValueError):
        raise ValueError(f"parameter set must be 1 or 2, got {parameter_set!r}") from None
    a, b, g = params["alpha"], params["beta"], params["gamma"]

    def kernel(t, tau):
        shift = g * np.exp(-tau / 100.0)
        return _stack2(
            a[0, 0] * np.exp(-b[0, 0] * (t + tau)) / (1.0 + tau**2) - shift,
            a[0, 1] * 2.0 ** (-b[0, 1] * t) / (1.0 + tau**3),
            a[1, 0] * np.exp(-b[1, 0] * (t + tau**2)) / (1.0 + tau**4),
            a[1, 1] * 3.0 ** (-b[1, 1] * tau) / (1.0 + tau**2) - shift,
        )

    def kernel_t(t, tau):
        return _stack2(
            -b[0, 0] * a[0, 0] * np.exp(-b[0, 0] * (t + tau)) / (1.0 + tau**2),
            -b[0, 1] * np.log(2.0) * a[0, 1] * 2.0 ** (-b[0, 1] * t) / (1.0 + tau**3),
            -b[1, 0] * a[1, 0] * np.exp(-b[1, 0] * (t + tau**2)) / (1.0 + tau**4),
            np.zeros_like(tau),
        )

    def forcing(t):
        return np.array([np.exp(-t / 10.0) - 1.0, 2.0 * np.exp(-t / 50.0) - 2.0])

    def forcing_t(t):
        return np.array([-0.1 * np.exp(-t / 10.0), -0.04 * np.exp(-t / 50.0)])

    return IEProblem(
        KernelFunction(kernel, 2, kernel_t),
        TimeFunction(forcing, 2, forcing_t),
        horizon=horizon,
    )


def builtin_fig2_problem(alpha, initial=(1.0, 0.0), horizon=DEFAULT_HORIZON):
    """``X' = alpha A(t) X + int_0^t H(t, tau) X(tau) dtau`` without forcing."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    alpha = float(alpha)

    def local(t):
        return alpha * np.array([[-2.0, 1.0 / (1.0 + t * t)], [1.0 / (2.0 + t * t), -2.0]])

    def memory(t, tau):
        return _stack2(
            1.0 / (1.0 + t * t + tau**2),
            1.0 / (1.0 + tau**3),
            t / (2.0 + t**3 + tau**4),
            1.0 / (1.0 + tau**4),
        )

    return IDEProblem(
        MatrixTimeFunction(local, 2),
        KernelFunction(memory, 2),
        initial=initial,
        horizon=horizon,
        label=f"fig2(alpha={alpha:g})",
    )
