"""Compiled evaluation, fixed-step integration, drift and order estimates."""
import math
from random import Random

import numpy as np
import pytest
import sympy as sp

from hamsym.dynamics import (
    IntegrationError,
    IntegratorConfig,
    SingularityAbort,
    compile_expression,
    convergence_order,
    drift,
    integrate,
)
from hamsym.expressions import TIME, coord, evaluate, momentum, sample_point
from hamsym.noether import first_integral
from hamsym.systems import FirstIntegral, SystemError

SEED = 42

q, p = coord(1), momentum(1)


class TestCompile:
    def test_example_value(self, example1):
        fn = compile_expression(example1.system.hamiltonian, 1)
        assert fn(0.0, np.array([1.0, 1.0])) == 1.0

    def test_kepler_circular_energy(self, kepler3):
        fn = compile_expression(kepler3.system.hamiltonian, 3, kepler3.system)
        assert fn(0.0, np.array([1.0, 0, 0, 0, 1.0, 0])) == -0.5

    def test_singular_point(self):
        fn = compile_expression(1 / q, 1)
        with pytest.raises(SingularityAbort):
            fn(0.0, np.array([0.0, 1.0]))

    def test_unbound_parameter(self, kepler3):
        with pytest.raises(SystemError):
            compile_expression(kepler3.system.hamiltonian, 3)

    def test_jet_symbols_rejected(self):
        from hamsym.expressions import coord_deriv

        with pytest.raises(SystemError):
            compile_expression(coord_deriv(1), 1)

    @pytest.mark.parametrize(
        "expression,n",
        [
            ((p**2 + 1 / q**2) / 2, 1),
            (sp.atan(p / q) + TIME, 1),
            (sp.sqrt(coord(1) ** 2 + coord(2) ** 2) * momentum(2) - TIME / coord(2), 2),
        ],
    )
    def test_agrees_with_evaluate(self, expression, n):
        fn = compile_expression(expression, n)
        symbols = [TIME] + [coord(i) for i in range(1, n + 1)] + [momentum(i) for i in range(1, n + 1)]
        rng = Random(17)
        for _ in range(100):
            point = sample_point(symbols, rng)
            state = np.array([point[s] for s in symbols[1:]])
            a = fn(point[TIME], state)
            b = evaluate(expression, point)
            assert abs(a - b) <= 1e-14 * max(1.0, abs(b))


class TestIntegratorConfig:
    def test_bad_step(self):
        with pytest.raises(IntegrationError):
            IntegratorConfig(h=0.0)

    def test_bad_interval(self):
        with pytest.raises(IntegrationError):
            IntegratorConfig(t0=1.0, t1=0.5)

    def test_bad_method(self):
        with pytest.raises(IntegrationError):
            IntegratorConfig(method="euler")


class TestIntegrate:
    def test_oscillator_period_return(self, oscillator):
        config = IntegratorConfig(method="rk4", h=1e-3, t0=0.0, t1=2 * math.pi)
        trajectory = integrate(oscillator.system, [1.0, 0.0], config)
        assert np.max(np.abs(trajectory.states[-1] - np.array([1.0, 0.0]))) <= 1e-9

    def test_closed_form_orbit_relation(self, example1):
        # along q'' = 1/q^3 from (1, 0): a*q^2 + (a*t - b)^2 + 1 = 0 with
        # a = 2*I(X1), b = I(X2) evaluated at the initial point
        I1 = first_integral(example1.system, example1.symmetry("X1"), seed=SEED)
        I2 = first_integral(example1.system, example1.symmetry("X2"), seed=SEED)
        f1 = compile_expression(I1.expression, 1)
        f2 = compile_expression(I2.expression, 1)
        a = 2 * f1(0.0, np.array([1.0, 0.0]))
        b = f2(0.0, np.array([1.0, 0.0]))
        config = IntegratorConfig(method="rk4", h=1e-3, t0=0.0, t1=1.0)
        trajectory = integrate(example1.system, [1.0, 0.0], config)
        residual = a * trajectory.states[:, 0] ** 2 + (a * trajectory.times - b) ** 2 + 1
        assert np.max(np.abs(residual)) <= 1e-8

    def test_wrong_state_length(self, example1):
        with pytest.raises(IntegrationError):
            integrate(example1.system, [1.0], IntegratorConfig())

    def test_singularity_abort_reports_time(self):
        # the momentum equation has a domain boundary at q = 0, which this
        # trajectory crosses before t = 2
        from hamsym.systems import HamiltonianSystem

        system = HamiltonianSystem(n=1, hamiltonian=p**2 / 2 + sp.sqrt(q), singularities=(q,))
        config = IntegratorConfig(method="rk4", h=1e-3, t0=0.0, t1=2.0)
        with pytest.raises(SingularityAbort) as info:
            integrate(system, [1.0, -2.0], config)
        assert 0.0 < info.value.time_reached < 2.0

    def test_deterministic(self, oscillator):
        config = IntegratorConfig(method="rk4", h=1e-2, t1=1.0)
        a = integrate(oscillator.system, [1.0, 0.0], config)
        b = integrate(oscillator.system, [1.0, 0.0], config)
        assert np.array_equal(a.states, b.states) and np.array_equal(a.times, b.times)


class TestDrift:
    def test_constant_integral_exact_zero(self, oscillator):
        config = IntegratorConfig(method="rk4", h=1e-2, t1=1.0)
        trajectory = integrate(oscillator.system, [1.0, 0.0], config)
        report = drift(oscillator.system, [FirstIntegral("one", sp.Integer(1))], trajectory)
        assert report.entry("one").max_abs == 0.0

    def test_example1_triple(self, example1):
        integrals = [
            first_integral(
                example1.system, X, v=(q**2 / 2 if X.name == "X3" else None), seed=SEED
            )
            for X in example1.symmetries
        ]
        config = IntegratorConfig(method="rk4", h=1e-3, t1=1.0)
        trajectory = integrate(example1.system, [1.0, 0.0], config)
        report = drift(example1.system, integrals, trajectory)
        for entry in report.entries:
            assert entry.relative <= 1e-10, entry

    def test_kepler_near_circular(self, kepler3):
        system = kepler3.system
        integrals = [FirstIntegral("H", system.hamiltonian)]
        for (i, j), name in (((1, 2), "L3"), ((1, 3), "L2"), ((2, 3), "L1")):
            integrals.append(
                FirstIntegral(name, coord(i) * momentum(j) - coord(j) * momentum(i))
            )
        config = IntegratorConfig(method="rk4", h=1e-3, t1=2 * math.pi)
        trajectory = integrate(system, [1.0, 0, 0, 0, 1.0, 0], config)
        report = drift(system, integrals, trajectory)
        for entry in report.entries:
            assert entry.relative <= 1e-8, entry

    def test_modulo_folds_branch_jumps(self, oscillator):
        angle = FirstIntegral("angle", sp.atan(p / q) + TIME)
        config = IntegratorConfig(method="rk4", h=1e-3, t1=2 * math.pi)
        trajectory = integrate(oscillator.system, [1.0, 0.0], config)
        raw = drift(oscillator.system, [angle], trajectory)
        folded = drift(oscillator.system, [angle], trajectory, modulo=math.pi)
        # arctan jumps by pi at each zero crossing of q; folding removes it
        assert raw.entry("angle").max_abs > 3.0
        assert folded.entry("angle").max_abs <= 1e-9

    def test_series_kept_on_request(self, oscillator):
        config = IntegratorConfig(method="rk4", h=1e-2, t1=1.0)
        trajectory = integrate(oscillator.system, [1.0, 0.0], config)
        report = drift(
            oscillator.system,
            [FirstIntegral("H", oscillator.system.hamiltonian)],
            trajectory,
            keep_series=True,
        )
        assert report.entry("H").series is not None
        assert len(report.entry("H").series) == len(trajectory.times)


class TestImplicitMidpoint:
    def test_quadratic_invariant_preserved(self, oscillator):
        config = IntegratorConfig(method="implicit_midpoint", h=1e-2, t1=10.0)
        trajectory = integrate(oscillator.system, [1.0, 0.0], config)
        report = drift(oscillator.system, [FirstIntegral("H", oscillator.system.hamiltonian)], trajectory)
        assert report.entry("H").max_abs <= 1e-10

    def test_nonconvergence_reported(self, example1):
        config = IntegratorConfig(
            method="implicit_midpoint", h=1e-2, t1=1.0, fixed_point_max_iter=1
        )
        with pytest.raises(IntegrationError):
            integrate(example1.system, [1.0, 0.0], config)


class TestConvergenceOrder:
    def test_rk4_on_kepler_energy(self, kepler3):
        estimate = convergence_order(
            kepler3.system,
            [1.0, 0, 0, 0, 1.2, 0],
            IntegratorConfig(method="rk4", h=0.02, t1=3.0),
            FirstIntegral("H", kepler3.system.hamiltonian),
        )
        assert not estimate.inconclusive
        assert abs(estimate.order - 4.0) <= 0.3

    def test_rk4_order_on_example1(self, example1):
        I1 = first_integral(example1.system, example1.symmetry("X1"), seed=SEED)
        estimate = convergence_order(
            example1.system, [1.0, 0.0], IntegratorConfig(method="rk4", h=1e-2, t1=1.0), I1
        )
        assert not estimate.inconclusive
        assert estimate.order >= 3.6
        assert estimate.drift_h / estimate.drift_half >= 12.0

    def test_exactly_conserved_is_inconclusive(self, oscillator):
        estimate = convergence_order(
            oscillator.system,
            [1.0, 0.0],
            IntegratorConfig(method="rk4", h=1e-2, t1=1.0),
            FirstIntegral("one", sp.Integer(1)),
        )
        assert estimate.inconclusive and estimate.order is None
