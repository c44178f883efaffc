"""Compiled evaluators, fixed-step integrators and conservation drift.

State layout everywhere is the flat vector (t, q1..qn, p1..pn).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import sympy as sp

from .expressions import TIME, coord, momentum, symbol_info
from .noether import canonical_equations
from .systems import FirstIntegral, HamiltonianSystem, SystemError

__all__ = [
    "CompiledFunction",
    "IntegratorConfig",
    "Trajectory",
    "DriftReport",
    "IntegrationError",
    "SingularityAbort",
    "compile_expression",
    "integrate",
    "drift",
    "convergence_order",
    "OrderEstimate",
]

METHODS = ("rk4", "implicit_midpoint")


class IntegrationError(SystemError):
    pass


class SingularityAbort(IntegrationError):
    """Integration hit a singular or non-finite state."""

    def __init__(self, message: str, time_reached: float):
        super().__init__(f"{message} (time reached: {time_reached!r})")
        self.time_reached = time_reached


@dataclass(frozen=True)
class CompiledFunction:
    """Fast evaluator over the (t, q, p) state layout."""

    n: int
    expression: sp.Expr
    _fn: object

    def __call__(self, t: float, state: np.ndarray) -> float:
        try:
            # plain floats so poles raise ZeroDivisionError instead of
            # producing numpy inf silently
            value = self._fn(float(t), *(float(x) for x in state))
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise SingularityAbort(f"singular evaluation of {self.expression}: {exc}", t) from None
        if isinstance(value, complex) or not math.isfinite(value):
            raise SingularityAbort(f"non-finite value of {self.expression}", t)
        return float(value)


def compile_expression(e: sp.Expr, n: int, sys: HamiltonianSystem | None = None) -> CompiledFunction:
    """Lambdify over (t, q1..qn, p1..pn); parameters must already be bound."""
    if sys is not None:
        e = sys.bind(e)
    e = sp.sympify(e)
    args = [TIME, *(coord(i) for i in range(1, n + 1)), *(momentum(i) for i in range(1, n + 1))]
    for s in e.free_symbols:
        info = symbol_info(s)
        if info is None:
            raise SystemError(f"unbound parameter {s} in compiled expression")
        if info[2] > 0:
            raise SystemError(f"jet symbol {s} cannot be compiled over the state layout")
        if info[0] in "qp" and info[1] > n:
            raise SystemError(f"{s} outside dimension {n}")
    fn = sp.lambdify(args, e, modules="math")
    return CompiledFunction(n=n, expression=e, _fn=fn)


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    h: float = 1e-3
    t0: float = 0.0
    t1: float = 1.0
    fixed_point_tol: float = 1e-12
    fixed_point_max_iter: int = 50

    def __post_init__(self):
        if self.method not in METHODS:
            raise IntegrationError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not (self.h > 0):
            raise IntegrationError("step size h must be positive")
        if not (self.t1 > self.t0):
            raise IntegrationError("t1 must exceed t0")

    @property
    def steps(self) -> int:
        return max(1, round((self.t1 - self.t0) / self.h))


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled states; times[k] pairs with states[k] = (q, p)."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise IntegrationError("times and states lengths differ")


def _rhs_function(sys: HamiltonianSystem):
    qdot, pdot = canonical_equations(sys)
    compiled = [compile_expression(e, sys.n, sys) for e in (*qdot, *pdot)]

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return np.array([f(t, y) for f in compiled])

    return rhs


def integrate(sys: HamiltonianSystem, state0: Sequence[float], config: IntegratorConfig) -> Trajectory:
    """Advance the canonical equations with the configured fixed-step method."""
    y = np.asarray(state0, dtype=float)
    if y.shape != (2 * sys.n,):
        raise IntegrationError(f"state must have length {2 * sys.n} (q1..qn, p1..pn)")
    rhs = _rhs_function(sys)
    steps = config.steps
    # distribute the interval over a whole number of uniform steps so the
    # trajectory ends exactly at t1
    h = (config.t1 - config.t0) / steps
    times = config.t0 + h * np.arange(steps + 1)
    states = np.empty((steps + 1, 2 * sys.n))
    states[0] = y
    step = _rk4_increment if config.method == "rk4" else _midpoint_increment
    # compensated (Kahan) accumulation of the state: long runs otherwise
    # accumulate a rounding random walk that masks the methods' conservation
    carry = np.zeros_like(y)
    for k in range(steps):
        t = times[k]
        increment = step(rhs, t, y, h, config) - carry
        updated = y + increment
        carry = (updated - y) - increment
        y = updated
        if not np.all(np.isfinite(y)):
            raise SingularityAbort("non-finite state", float(t))
        states[k + 1] = y
    return Trajectory(times=times, states=states)


def _rk4_increment(rhs, t, y, h, config) -> np.ndarray:
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + h / 2 * k1)
    k3 = rhs(t + h / 2, y + h / 2 * k2)
    k4 = rhs(t + h, y + h * k3)
    return h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _midpoint_increment(rhs, t, y, h, config) -> np.ndarray:
    """Implicit midpoint via fixed-point iteration on the stage value."""
    tm = t + h / 2
    k = rhs(tm, y)
    for _ in range(config.fixed_point_max_iter):
        k_next = rhs(tm, y + h / 2 * k)
        delta = float(np.max(np.abs(k_next - k)))
        k = k_next
        if delta <= config.fixed_point_tol:
            return h * k
    raise IntegrationError(
        f"implicit midpoint did not converge within {config.fixed_point_max_iter} iterations at t={t!r}"
    )


@dataclass(frozen=True)
class DriftSeries:
    integral: str
    initial: float
    max_abs: float
    relative: float
    series: np.ndarray | None = None


@dataclass(frozen=True)
class DriftReport:
    entries: tuple[DriftSeries, ...] = field(default_factory=tuple)

    def entry(self, name: str) -> DriftSeries:
        for item in self.entries:
            if item.integral == name:
                return item
        raise KeyError(name)


def drift(
    sys: HamiltonianSystem,
    integrals: Sequence[FirstIntegral],
    trajectory: Trajectory,
    modulo: float | None = None,
    keep_series: bool = False,
) -> DriftReport:
    """Evaluate each integral along the trajectory and report worst drift.

    `modulo` folds differences onto the nearest representative of that
    period; used for angle-valued integrals (e.g. arctan-based ones) whose
    values are defined only up to branch jumps.
    """
    entries = []
    for integral in integrals:
        fn = compile_expression(integral.expression, sys.n, sys)
        values = np.array([fn(t, y) for t, y in zip(trajectory.times, trajectory.states)])
        deltas = values - values[0]
        if modulo is not None:
            deltas = deltas - modulo * np.round(deltas / modulo)
        max_abs = float(np.max(np.abs(deltas)))
        relative = max_abs / max(1.0, abs(float(values[0])))
        entries.append(
            DriftSeries(
                integral=integral.name,
                initial=float(values[0]),
                max_abs=max_abs,
                relative=relative,
                series=deltas if keep_series else None,
            )
        )
    return DriftReport(entries=tuple(entries))


@dataclass(frozen=True)
class OrderEstimate:
    order: float | None
    inconclusive: bool
    drift_h: float
    drift_half: float


def convergence_order(
    sys: HamiltonianSystem,
    state0: Sequence[float],
    config: IntegratorConfig,
    integral: FirstIntegral,
    floor: float = 1e-14,
) -> OrderEstimate:
    """Richardson-style order estimate from drift at h and h/2."""
    report_h = drift(sys, [integral], integrate(sys, state0, config))
    half = IntegratorConfig(
        method=config.method,
        h=config.h / 2,
        t0=config.t0,
        t1=config.t1,
        fixed_point_tol=config.fixed_point_tol,
        fixed_point_max_iter=config.fixed_point_max_iter,
    )
    report_half = drift(sys, [integral], integrate(sys, state0, half))
    d1 = report_h.entries[0].max_abs
    d2 = report_half.entries[0].max_abs
    if d2 <= floor or d1 <= floor:
        return OrderEstimate(order=None, inconclusive=True, drift_h=d1, drift_half=d2)
    return OrderEstimate(order=math.log2(d1 / d2), inconclusive=False, drift_h=d1, drift_half=d2)
