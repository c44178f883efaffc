"""Invariance checks, divergence terms, first integrals and the off-shell
identities, exercised on the built-in example systems."""
import pytest
import sympy as sp

from hamsym.expressions import (
    TIME,
    Verdict,
    coord,
    coord_deriv,
    is_zero,
    momentum,
    momentum_deriv,
    simplify,
    total_derivative,
)
from hamsym.noether import (
    InvarianceError,
    build_report,
    canonical_equations,
    check_divergence_invariance,
    check_invariance,
    equation_invariance_direct,
    evolutionary_form,
    find_divergence_term,
    first_integral,
    functional_independence,
    hamiltonian_vector_field,
    invariance_residual,
    lemma1_residual,
    lemma2_residuals,
    on_shell,
    relation_check,
    theorem4_conditions,
    variational_derivative_p,
    variational_derivative_q,
    verify_first_integral,
)
from hamsym.systems import FirstIntegral, HamiltonianSystem, PointSymmetry

SEED = 42

q, p = coord(1), momentum(1)
dq, dp = coord_deriv(1), momentum_deriv(1)

FREE_PARTICLE = HamiltonianSystem(n=1, hamiltonian=momentum(1) ** 2 / 2)


class TestCanonicalEquations:
    def test_inverse_square_well(self, example1):
        qdot, pdot = canonical_equations(example1.system)
        assert simplify(qdot[0] - p) == 0
        assert simplify(pdot[0] - 1 / q**3) == 0

    def test_repulsive_coulomb(self, coulomb):
        qdot, pdot = canonical_equations(coulomb.system)
        assert simplify(qdot[0] - p) == 0
        assert simplify(pdot[0] - 1 / q**2) == 0

    def test_free_particle(self):
        qdot, pdot = canonical_equations(FREE_PARTICLE)
        assert qdot == (p,) and pdot == (0,)


class TestOnShell:
    def test_energy_conservation(self, example1):
        H = example1.system.hamiltonian
        assert simplify(on_shell(example1.system, total_derivative(H))) == 0

    def test_first_order(self, example1):
        assert on_shell(example1.system, dq - p) == 0

    def test_momentum_times_velocity(self, coulomb):
        assert simplify(on_shell(coulomb.system, p * dq) - p**2) == 0

    def test_second_order_consequences(self, example1):
        # ddq resolves through D of the first-order right-hand side
        out = on_shell(example1.system, coord_deriv(1, 2))
        assert simplify(out - 1 / q**3) == 0


class TestInvarianceResidual:
    def test_time_translation_on_shell(self, example1):
        X = example1.symmetry("X1")
        assert simplify(on_shell(example1.system, invariance_residual(example1.system, X))) == 0

    def test_autonomous_time_shift_off_shell(self):
        X = PointSymmetry("X", sp.Integer(1), (sp.Integer(0),), (sp.Integer(0),))
        assert simplify(invariance_residual(FREE_PARTICLE, X)) == 0

    def test_scaling_residual_value(self, coulomb):
        X = coulomb.symmetry("X2")
        residual = invariance_residual(coulomb.system, X)
        assert simplify(residual - (p * dq - (p**2 / 2 + 1 / q))) == 0


class TestCheckInvariance:
    def test_scaling_passes(self, example1):
        assert check_invariance(example1.system, example1.symmetry("X2"), seed=SEED).is_zero

    def test_coulomb_scaling_fails(self, coulomb):
        verdict = check_invariance(coulomb.system, coulomb.symmetry("X2"), seed=SEED)
        assert verdict.status == Verdict.NONZERO

    def test_kepler_scaling_fails(self, kepler3):
        verdict = check_invariance(kepler3.system, kepler3.symmetry("X1"), seed=SEED)
        assert verdict.status == Verdict.NONZERO


class TestDivergenceTerm:
    def test_projective_synthesis(self, example1):
        status, term = find_divergence_term(example1.system, example1.symmetry("X3"), seed=SEED)
        assert status == "synthesized"
        assert simplify(term.v - q**2 / 2) == 0
        assert term.provenance == "synthesized"

    def test_zero_when_already_invariant(self, example1):
        status, term = find_divergence_term(example1.system, example1.symmetry("X1"), seed=SEED)
        assert status == "zero" and term.v == 0

    def test_integrability_contradiction(self, coulomb):
        status, term = find_divergence_term(coulomb.system, coulomb.symmetry("X2"), seed=SEED)
        assert status == "no-v-exists" and term is None

    def test_nonpolynomial_defers_to_user(self, kepler3):
        status, term = find_divergence_term(kepler3.system, kepler3.symmetry("Y1"), seed=SEED)
        assert status == "not-synthesizable" and term is None

    def test_supplied_v_verifies(self, example1, kepler3):
        verdict = check_divergence_invariance(
            example1.system, example1.symmetry("X3"), q**2 / 2, seed=SEED
        )
        assert verdict.is_zero
        Y1 = kepler3.symmetry("Y1")
        assert check_divergence_invariance(kepler3.system, Y1, Y1.v, seed=SEED).is_zero

    def test_wrong_v_fails(self, coulomb):
        verdict = check_divergence_invariance(
            coulomb.system, coulomb.symmetry("X2"), p * q, seed=SEED
        )
        assert verdict.status == Verdict.NONZERO


class TestFirstIntegral:
    def test_scaling_integral(self, example1):
        I = first_integral(example1.system, example1.symmetry("X2"), seed=SEED)
        target = p * q - TIME * (p**2 + 1 / q**2)
        assert is_zero(I.expression - target, seed=SEED).is_zero
        assert I.verified.is_zero

    def test_projective_integral(self, example1):
        X3 = example1.symmetry("X3")
        I = first_integral(example1.system, X3, v=q**2 / 2, seed=SEED)
        target = -(TIME**2 / q**2 + (q - TIME * p) ** 2) / 2
        assert is_zero(I.expression - target, singular=(q,), seed=SEED).is_zero
        assert I.verified.is_zero

    def test_time_translation_gives_minus_energy(self, kepler3):
        I = first_integral(kepler3.system, kepler3.symmetry("X0"), seed=SEED)
        assert simplify(I.expression + kepler3.system.hamiltonian) == 0

    def test_refuses_non_invariant(self, coulomb):
        with pytest.raises(InvarianceError):
            first_integral(coulomb.system, coulomb.symmetry("X2"), seed=SEED)

    def test_force_constructs_anyway(self, coulomb):
        I = first_integral(coulomb.system, coulomb.symmetry("X2"), force=True, seed=SEED)
        assert I.verified.status == Verdict.NONZERO


class TestVerifyFirstIntegral:
    def test_oscillator_time_dependent(self, oscillator):
        I = sp.atan(p / q) + TIME
        assert verify_first_integral(oscillator.system, I, seed=SEED).is_zero

    def test_angular_momentum(self, kepler3):
        I = coord(1) * momentum(2) - coord(2) * momentum(1)
        assert verify_first_integral(kepler3.system, I, seed=SEED).status == Verdict.PROVEN

    def test_coordinate_is_not_conserved(self):
        verdict = verify_first_integral(FREE_PARTICLE, q, seed=SEED)
        assert verdict.status == Verdict.NONZERO


class TestHamiltonianVectorField:
    def test_minus_energy_generates_time_shift_form(self, example1):
        X = hamiltonian_vector_field(example1.system, -example1.system.hamiltonian)
        assert X.xi == 0
        assert simplify(X.eta[0] + p) == 0
        assert simplify(X.zeta[0] + 1 / q**3) == 0

    def test_angular_momentum_generates_rotation(self, kepler3):
        X = hamiltonian_vector_field(kepler3.system, coord(1) * momentum(2) - coord(2) * momentum(1))
        X12 = kepler3.symmetry("X12")
        assert all(simplify(a - b) == 0 for a, b in zip(X.eta, X12.eta))
        assert all(simplify(a - b) == 0 for a, b in zip(X.zeta, X12.zeta))

    def test_constant_generates_zero_field(self, example1):
        X = hamiltonian_vector_field(example1.system, sp.Integer(3))
        assert all(e == 0 for e in X.eta) and all(z == 0 for z in X.zeta)


class TestEvolutionaryForm:
    def test_scaling(self, example1):
        Xt = evolutionary_form(example1.system, example1.symmetry("X2"))
        assert Xt.xi == 0
        assert simplify(Xt.eta[0] - (q - 2 * TIME * p)) == 0
        assert simplify(Xt.zeta[0] + (p + 2 * TIME / q**3)) == 0

    def test_projective(self, example1):
        Xt = evolutionary_form(example1.system, example1.symmetry("X3"))
        assert simplify(Xt.eta[0] - (TIME * q - TIME**2 * p)) == 0
        assert simplify(Xt.zeta[0] - (q - TIME * p - TIME**2 / q**3)) == 0

    def test_already_evolutionary(self, kepler3):
        Y1 = kepler3.symmetry("Y1")
        Yt = evolutionary_form(kepler3.system, Y1)
        assert all(simplify(a - b) == 0 for a, b in zip(Yt.eta, Y1.eta))
        assert all(simplify(a - b) == 0 for a, b in zip(Yt.zeta, Y1.zeta))


class TestVariationalDerivatives:
    def test_action_density_momentum_side(self, example1):
        density = p * dq - example1.system.hamiltonian
        assert simplify(variational_derivative_p(density, 1) - (dq - p)) == 0

    def test_action_density_coordinate_side(self, example1):
        density = p * dq - example1.system.hamiltonian
        assert simplify(variational_derivative_q(density, 1) - (-dp + 1 / q**3)) == 0

    def test_independent_expression(self):
        assert variational_derivative_p(q**2 + TIME, 1) == 0


class TestLemmas:
    def test_lemma1_on_example(self, example1):
        assert lemma1_residual(example1.system, example1.symmetry("X2")) == 0

    def test_lemma1_zero_hamiltonian(self, example1):
        sys0 = HamiltonianSystem(n=1, hamiltonian=sp.Integer(0))
        assert lemma1_residual(sys0, example1.symmetry("X3")) == 0

    def test_lemma2_on_example(self, example1):
        assert all(r == 0 for r in lemma2_residuals(example1.system, example1.symmetry("X3")))

    def test_lemma2_zero_symmetry(self, example1):
        X0 = PointSymmetry("Z", sp.Integer(0), (sp.Integer(0),), (sp.Integer(0),))
        assert all(r == 0 for r in lemma2_residuals(example1.system, X0))


class TestEquationInvariance:
    def test_theorem4_discriminates_from_action_invariance(self, coulomb):
        verdicts = theorem4_conditions(coulomb.system, coulomb.symmetry("X2"), seed=SEED)
        assert all(v.is_zero for v in verdicts)

    def test_theorem4_projective(self, example1):
        verdicts = theorem4_conditions(example1.system, example1.symmetry("X3"), seed=SEED)
        assert all(v.is_zero for v in verdicts)

    def test_theorem4_detects_non_symmetry(self):
        X = PointSymmetry("bad", q, (sp.Integer(0),), (sp.Integer(0),))
        verdicts = theorem4_conditions(FREE_PARTICLE, X, seed=SEED)
        assert any(v.status == Verdict.NONZERO for v in verdicts)

    def test_direct_conditions(self, example1, coulomb, kepler3):
        for defn, name in ((example1, "X1"), (coulomb, "X2"), (kepler3, "Y1")):
            verdicts = equation_invariance_direct(defn.system, defn.symmetry(name), seed=SEED)
            assert all(v.is_zero for v in verdicts), name

    def test_direct_agrees_with_theorem4(self, example1, coulomb):
        for defn in (example1, coulomb):
            for X in defn.symmetries:
                t4 = all(v.is_zero for v in theorem4_conditions(defn.system, X, seed=SEED))
                direct = all(v.is_zero for v in equation_invariance_direct(defn.system, X, seed=SEED))
                assert t4 == direct, X.name


class TestRelations:
    def test_conic_relation(self, example1):
        integrals = {
            X.name: first_integral(
                example1.system, X, v=(q**2 / 2 if X.name == "X3" else None), seed=SEED
            ).expression
            for X in example1.symmetries
        }
        verdict = relation_check(integrals, example1.relations[0], example1.system, seed=SEED)
        assert verdict.is_zero

    def test_kepler2_relation(self, kepler2):
        integrals = {
            X.name: first_integral(kepler2.system, X, v=X.v, seed=SEED).expression
            for X in kepler2.symmetries
        }
        verdict = relation_check(integrals, kepler2.relations[0], kepler2.system, seed=SEED)
        assert verdict.is_zero

    def test_unknown_integral_name(self, example1):
        with pytest.raises(Exception):
            relation_check({}, example1.relations[0], example1.system, seed=SEED)


class TestFunctionalIndependence:
    def test_pairwise_dependent_triple(self, example1):
        integrals = [
            first_integral(
                example1.system, X, v=(q**2 / 2 if X.name == "X3" else None), seed=SEED
            )
            for X in example1.symmetries
        ]
        assert functional_independence(integrals, example1.system, seed=SEED) == 2

    def test_single_integral(self, example1):
        I = FirstIntegral("H", example1.system.hamiltonian)
        assert functional_independence([I], example1.system, seed=SEED) == 1


class TestConsistencyProperties:
    def test_invariance_implies_verified_integral(self, example1, coulomb, oscillator):
        for defn in (example1, coulomb, oscillator):
            for X in defn.symmetries:
                if check_invariance(defn.system, X, seed=SEED).is_zero:
                    I = first_integral(defn.system, X, seed=SEED)
                    assert I.verified.is_zero, X.name

    def test_invariance_implies_direct_conditions(self, example1, coulomb):
        for defn in (example1, coulomb):
            for X in defn.symmetries:
                if check_invariance(defn.system, X, seed=SEED).is_zero:
                    verdicts = equation_invariance_direct(defn.system, X, seed=SEED)
                    assert all(v.is_zero for v in verdicts), X.name

    def test_generated_field_is_divergence_invariant(self, example1, oscillator):
        # X_I shifts the action by D(p*dI/dp - I) on-shell, so it is a
        # divergence symmetry with that V, and reconstruction returns I
        for defn, I in (
            (example1, example1.system.hamiltonian),
            (example1, p * q - TIME * (p**2 + 1 / q**2)),
            (oscillator, sp.atan(p / q) + TIME),
        ):
            assert verify_first_integral(defn.system, I, seed=SEED).is_zero
            X = hamiltonian_vector_field(defn.system, I)
            v = simplify(p * sp.diff(I, p) - I)
            assert check_divergence_invariance(defn.system, X, v, seed=SEED).is_zero
            rebuilt = first_integral(defn.system, X, v=v, seed=SEED)
            assert is_zero(
                rebuilt.expression - I, defn.system.bound_singularities, seed=SEED
            ).is_zero


class TestBuildReport:
    def test_projective_report(self, example1):
        report = build_report(example1.system, example1.symmetry("X3"), seed=SEED)
        assert report.verdict_theorem1.status == Verdict.NONZERO
        assert report.divergence_status == "synthesized"
        assert report.divergence_verdict.is_zero
        assert report.integral is not None and report.integral.verified.is_zero
        assert len(report.theorem4_verdicts) == 2 and len(report.direct_invariance_verdicts) == 2

    def test_coulomb_scaling_report(self, coulomb):
        report = build_report(coulomb.system, coulomb.symmetry("X2"), seed=SEED)
        assert report.verdict_theorem1.status == Verdict.NONZERO
        assert report.divergence_status == "no-v-exists"
        assert report.integral is None
        assert all(v.is_zero for v in report.theorem4_verdicts)
