"""Core value types for Hamiltonian systems, symmetries and integrals."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import sympy as sp

from .expressions import Verdict, jet_order, symbol_info

__all__ = [
    "SystemError",
    "HamiltonianSystem",
    "PointSymmetry",
    "DivergenceTerm",
    "FirstIntegral",
    "Relation",
    "SystemDefinition",
    "InvarianceReport",
]


class SystemError(Exception):
    pass


def _check_phase_expr(e: sp.Expr, n: int, what: str, parameters) -> None:
    if jet_order(e) > 0:
        raise SystemError(f"{what} must not contain jet symbols: {e}")
    for s in e.free_symbols:
        info = symbol_info(s)
        if info is None:
            if s.name not in parameters:
                raise SystemError(f"{what} references undeclared parameter {s.name}")
        elif info[0] in "qp" and not 1 <= info[1] <= n:
            raise SystemError(f"{what} references {s} outside dimension {n}")


@dataclass(frozen=True)
class HamiltonianSystem:
    """Dimension, Hamiltonian over (t, q, p) and rational parameter values."""

    n: int
    hamiltonian: sp.Expr
    parameters: Mapping[str, sp.Rational] = field(default_factory=dict)
    singularities: tuple[sp.Expr, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise SystemError("dimension must be >= 1")
        _check_phase_expr(self.hamiltonian, self.n, "hamiltonian", self.parameters)
        for g in self.singularities:
            _check_phase_expr(g, self.n, "singularity guard", self.parameters)

    def bind(self, e: sp.Expr) -> sp.Expr:
        """Substitute parameter values for numeric work."""
        subs = {sp.Symbol(name, real=True): value for name, value in self.parameters.items()}
        return sp.sympify(e).subs(subs) if subs else sp.sympify(e)

    @property
    def bound_singularities(self) -> tuple[sp.Expr, ...]:
        return tuple(self.bind(g) for g in self.singularities)


@dataclass(frozen=True)
class PointSymmetry:
    """Coefficients of xi*d/dt + eta^i*d/dq^i + zeta_i*d/dp_i on (t, q, p)."""

    name: str
    xi: sp.Expr
    eta: tuple[sp.Expr, ...]
    zeta: tuple[sp.Expr, ...]
    v: sp.Expr | None = None

    def __post_init__(self):
        if len(self.eta) != len(self.zeta):
            raise SystemError(f"symmetry {self.name}: eta and zeta lengths differ")
        for e in (self.xi, *self.eta, *self.zeta, *(() if self.v is None else (self.v,))):
            if jet_order(e) > 0:
                raise SystemError(f"symmetry {self.name}: coefficient {e} contains jet symbols")


@dataclass(frozen=True)
class DivergenceTerm:
    """A function V(t,q,p) with residual = D(V), user-supplied or synthesized."""

    v: sp.Expr
    provenance: str  # "user-supplied" | "synthesized"


@dataclass(frozen=True)
class FirstIntegral:
    name: str
    expression: sp.Expr
    verified: Verdict | None = None


@dataclass(frozen=True)
class Relation:
    """Algebraic relation among named first integrals: expression == equals."""

    name: str
    expression: sp.Expr
    equals: sp.Rational


@dataclass(frozen=True)
class SystemDefinition:
    system: HamiltonianSystem
    symmetries: tuple[PointSymmetry, ...]
    relations: tuple[Relation, ...] = ()

    def symmetry(self, name: str) -> PointSymmetry:
        for s in self.symmetries:
            if s.name == name:
                return s
        raise KeyError(f"no symmetry named {name!r}")


@dataclass(frozen=True)
class InvarianceReport:
    """Aggregated verdicts for one symmetry: Theorem 1, divergence remark,
    Theorem 4 and the direct equation-invariance conditions."""

    symmetry: str
    residual_off_shell: sp.Expr
    residual_on_shell: sp.Expr
    verdict_theorem1: Verdict
    divergence: DivergenceTerm | None
    divergence_status: str
    divergence_verdict: Verdict | None
    theorem4_verdicts: tuple[Verdict, ...]
    direct_invariance_verdicts: tuple[Verdict, ...]
    integral: FirstIntegral | None
