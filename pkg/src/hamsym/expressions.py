"""Symbolic expressions over Hamiltonian jet variables.

Expressions are sympy trees restricted to exact rational constants, the jet
symbols t, q1..qn, p1..pn, dq1.., dp1.., ddq1.., ddp1.. (time derivatives up
to order 2), named parameters and a small set of elementary functions.
Everything here is a pure function over immutable values; floating point
enters only at evaluation time.
"""
from __future__ import annotations

import math
import re
import zlib
from dataclasses import dataclass
from random import Random
from typing import Iterable, Mapping

import sympy as sp

__all__ = [
    "TIME",
    "FUNCTIONS",
    "Verdict",
    "ExpressionError",
    "JetOrderError",
    "UnboundSymbolError",
    "SingularEvaluationError",
    "SamplingError",
    "coord",
    "momentum",
    "coord_deriv",
    "momentum_deriv",
    "parameter",
    "symbol_info",
    "jet_order",
    "partial_diff",
    "total_derivative",
    "substitute",
    "simplify",
    "evaluate",
    "is_zero",
    "sample_point",
    "random_polynomial",
    "derive_seed",
]

TIME = sp.Symbol("t", real=True)

FUNCTIONS = {
    "sqrt": sp.sqrt,
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "arctan": sp.atan,
    "exp": sp.exp,
    "log": sp.log,
}

MAX_JET_ORDER = 2

# Numeric zero-testing defaults: 32 points, relative tolerance 1e-9,
# componentwise samples from [-2, -0.1] u [0.1, 2].
DEFAULT_POINTS = 32
DEFAULT_TOL = 1e-9
SAMPLE_LOW = 0.1
SAMPLE_HIGH = 2.0
MAX_SAMPLE_ATTEMPTS = 1000
SINGULAR_GUARD = 0.05

_JET_RE = re.compile(r"^(d{0,2})([qp])([1-9][0-9]*)$")


class ExpressionError(Exception):
    """Base class for expression-level failures."""


class JetOrderError(ExpressionError):
    """An operation received jet symbols beyond the order it supports."""


class UnboundSymbolError(ExpressionError):
    def __init__(self, symbol):
        super().__init__(f"unbound symbol {symbol}")
        self.symbol = symbol


class SingularEvaluationError(ExpressionError):
    """Evaluation hit a pole or a domain boundary."""

    def __init__(self, message, subexpression):
        super().__init__(f"{message}: {subexpression}")
        self.subexpression = subexpression


class SamplingError(ExpressionError):
    """All candidate sample points were rejected as singular."""


def coord(i: int) -> sp.Symbol:
    return sp.Symbol(f"q{i}", real=True)


def momentum(i: int) -> sp.Symbol:
    return sp.Symbol(f"p{i}", real=True)


def coord_deriv(i: int, order: int = 1) -> sp.Symbol:
    if not 1 <= order <= MAX_JET_ORDER:
        raise JetOrderError(f"derivative order {order} out of range")
    return sp.Symbol("d" * order + f"q{i}", real=True)


def momentum_deriv(i: int, order: int = 1) -> sp.Symbol:
    if not 1 <= order <= MAX_JET_ORDER:
        raise JetOrderError(f"derivative order {order} out of range")
    return sp.Symbol("d" * order + f"p{i}", real=True)


def parameter(name: str) -> sp.Symbol:
    if name == "t" or _JET_RE.match(name) or name in FUNCTIONS:
        raise ValueError(f"parameter name {name!r} collides with a reserved token")
    return sp.Symbol(name, real=True)


def symbol_info(s: sp.Symbol) -> tuple[str, int, int] | None:
    """Classify a symbol: ('t', 0, 0), ('q'|'p', index, order), or None for a parameter."""
    name = s.name
    if name == "t":
        return ("t", 0, 0)
    m = _JET_RE.match(name)
    if m:
        return (m.group(2), int(m.group(3)), len(m.group(1)))
    return None


def jet_order(e: sp.Expr) -> int:
    order = 0
    for s in e.free_symbols:
        info = symbol_info(s)
        if info and info[0] in "qp":
            order = max(order, info[2])
    return order


def partial_diff(e: sp.Expr, s: sp.Symbol) -> sp.Expr:
    return sp.diff(e, s)


def total_derivative(e: sp.Expr) -> sp.Expr:
    """Total time derivative on the truncated jet space.

    D(e) = de/dt + sum_i dqi*de/dqi + dpi*de/dpi + ddqi*de/ddqi + ddpi*de/ddpi.
    Rejects input already containing order-2 jet symbols, since the result
    would need order-3 symbols.
    """
    e = sp.sympify(e)
    out = sp.diff(e, TIME)
    for s in e.free_symbols:
        info = symbol_info(s)
        if info is None or info[0] == "t":
            continue
        kind, index, order = info
        if order >= MAX_JET_ORDER:
            raise JetOrderError(f"total derivative of order-{order} symbol {s} exceeds jet order {MAX_JET_ORDER}")
        maker = coord_deriv if kind == "q" else momentum_deriv
        out += maker(index, order + 1) * sp.diff(e, s)
    return out


def substitute(e: sp.Expr, mapping: Mapping[sp.Symbol, sp.Expr]) -> sp.Expr:
    return simplify(sp.sympify(e).subs(mapping, simultaneous=True))


def simplify(e: sp.Expr) -> sp.Expr:
    """Canonicalize: constant folding, like-term collection and
    rational-function normalization over a common denominator.

    Transcendental subterms are treated as atoms, so this need not prove
    identities such as sin^2 + cos^2 = 1; is_zero covers those numerically.
    """
    e = sp.sympify(e)
    if _is_plain_polynomial(e):
        # doit() re-evaluates any explicitly unevaluated Add/Mul nodes,
        # which expand alone leaves in place
        return sp.expand(e.doit())
    e = sp.together(e)
    hidden, back = _hide_radicals(e)
    out = sp.cancel(hidden)
    return out.subs(back) if back else out


def _is_plain_polynomial(e: sp.Expr) -> bool:
    """True when every power has a positive integer exponent and no function
    applications occur; expand alone is canonical for such expressions."""
    if e.atoms(sp.Function):
        return False
    return all(p.exp.is_Integer and p.exp > 0 for p in e.atoms(sp.Pow))


def _hide_radicals(e: sp.Expr) -> tuple[sp.Expr, dict]:
    """Swap each fractional-power base for a flat generator symbol so cancel
    works over plain polynomials; exactly invertible via the returned map.

    Integer powers of the same base are left alone: sympy folds products of
    same-base powers at construction, so integer and fractional occurrences
    never need to be identified after the fact.
    """
    from functools import reduce
    from math import lcm

    bases: dict[sp.Expr, set[int]] = {}
    for node in e.atoms(sp.Pow):
        if node.exp.is_Rational and not node.exp.is_Integer:
            bases.setdefault(node.base, set()).add(node.exp.q)
    if not bases:
        return e, {}
    forward = {}
    back = {}
    for b, denominators in bases.items():
        m = reduce(lcm, denominators)
        u = sp.Dummy("r", real=True)
        for node in e.atoms(sp.Pow):
            if node.base == b and node.exp.is_Rational and not node.exp.is_Integer:
                forward[node] = u ** int(node.exp * m)
        back[u] = b ** sp.Rational(1, m)
    return e.xreplace(forward), back


def _as_float(x: sp.Expr) -> float:
    return float(x)


def evaluate(e: sp.Expr, bindings: Mapping[sp.Symbol, float]) -> float:
    """Recursive numeric evaluation; raises instead of producing non-finite values."""
    value = _evaluate(sp.sympify(e), bindings)
    if not math.isfinite(value):
        raise SingularEvaluationError("non-finite result", e)
    return value


def _evaluate(e: sp.Expr, bindings: Mapping[sp.Symbol, float]) -> float:
    if e.is_Number:
        return _as_float(e)
    if e.is_Symbol:
        try:
            return float(bindings[e])
        except KeyError:
            raise UnboundSymbolError(e) from None
    if e.is_Add:
        return math.fsum(_evaluate(a, bindings) for a in e.args)
    if e.is_Mul:
        out = 1.0
        for a in e.args:
            out *= _evaluate(a, bindings)
        return out
    if e.is_Pow:
        base = _evaluate(e.base, bindings)
        exponent = e.exp
        if not exponent.is_Rational:
            raise ExpressionError(f"non-rational exponent in {e}")
        ex = _as_float(exponent)
        if base == 0.0 and ex < 0:
            raise SingularEvaluationError("division by zero", e)
        if base < 0.0 and not exponent.is_Integer:
            raise SingularEvaluationError("fractional power of negative base", e)
        try:
            value = base ** ex
        except (OverflowError, ZeroDivisionError):
            raise SingularEvaluationError("power overflow", e) from None
        if isinstance(value, complex) or not math.isfinite(value):
            raise SingularEvaluationError("non-finite power", e)
        return value
    if isinstance(e, sp.Function) and len(e.args) == 1:
        arg = _evaluate(e.args[0], bindings)
        if isinstance(e, sp.sin):
            return math.sin(arg)
        if isinstance(e, sp.cos):
            return math.cos(arg)
        if isinstance(e, sp.tan):
            value = math.tan(arg)
            if not math.isfinite(value):
                raise SingularEvaluationError("tangent pole", e)
            return value
        if isinstance(e, sp.atan):
            return math.atan(arg)
        if isinstance(e, sp.exp):
            try:
                return math.exp(arg)
            except OverflowError:
                raise SingularEvaluationError("exp overflow", e) from None
        if isinstance(e, sp.log):
            if arg <= 0.0:
                raise SingularEvaluationError("log of non-positive value", e)
            return math.log(arg)
    raise ExpressionError(f"cannot evaluate node {e} of type {type(e).__name__}")


@dataclass(frozen=True)
class Verdict:
    """Outcome of a zero-equivalence test.

    status is one of 'proven-zero', 'numerically-zero', 'nonzero',
    'inconclusive'. A witness (point and value) accompanies 'nonzero'.
    """

    status: str
    points: int | None = None
    tolerance: float | None = None
    witness: dict[str, float] | None = None
    value: float | None = None

    PROVEN = "proven-zero"
    NUMERIC = "numerically-zero"
    NONZERO = "nonzero"
    INCONCLUSIVE = "inconclusive"

    @property
    def is_zero(self) -> bool:
        return self.status in (self.PROVEN, self.NUMERIC)

    def to_dict(self) -> dict:
        out: dict = {"status": self.status}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.points is not None:
            out["points"] = self.points
        if self.tolerance is not None:
            out["tolerance"] = self.tolerance
        return out


def sample_point(
    symbols: Iterable[sp.Symbol],
    rng: Random,
    singular: Iterable[sp.Expr] = (),
    max_attempts: int = MAX_SAMPLE_ATTEMPTS,
) -> dict[sp.Symbol, float]:
    """Draw componentwise from [-2,-0.1] u [0.1,2], rejecting points near
    declared singularities."""
    singular = list(singular)
    drawn = set(symbols)
    for g in singular:
        drawn |= g.free_symbols  # guards must be evaluable even when the
        # expression itself doesn't mention all of their symbols
    symbols = sorted(drawn, key=lambda s: s.name)
    for _ in range(max_attempts):
        point = {
            s: rng.choice((-1.0, 1.0)) * rng.uniform(SAMPLE_LOW, SAMPLE_HIGH)
            for s in symbols
        }
        try:
            if any(abs(evaluate(g, point)) < SINGULAR_GUARD for g in singular):
                continue
        except (SingularEvaluationError, UnboundSymbolError):
            continue
        return point
    raise SamplingError(f"no admissible sample point after {max_attempts} attempts")


def _magnitude_scale(terms: list[sp.Expr], point: Mapping[sp.Symbol, float]) -> float:
    scale = 0.0
    for term in terms:
        try:
            scale += abs(evaluate(term, point))
        except SingularEvaluationError:
            continue
    return scale


def is_zero(
    e: sp.Expr,
    singular: Iterable[sp.Expr] = (),
    *,
    seed: int = 0,
    points: int = DEFAULT_POINTS,
    tol: float = DEFAULT_TOL,
) -> Verdict:
    """Two-tier zero test: canonical-form proof, then seeded numeric sampling.

    The numeric tolerance is relative to the magnitude of the expression's
    additive terms at each point, so cancellations of large terms count.
    """
    simplified = simplify(e)
    if simplified == 0:
        return Verdict(Verdict.PROVEN)
    free = simplified.free_symbols
    if not free:
        return Verdict(Verdict.NONZERO, witness={}, value=float(simplified))
    terms = list(sp.Add.make_args(sp.expand(simplified)))
    rng = Random(seed)
    singular = list(singular)
    sampled = 0
    attempts_left = MAX_SAMPLE_ATTEMPTS
    while sampled < points and attempts_left > 0:
        try:
            point = sample_point(free, rng, singular, max_attempts=attempts_left)
        except SamplingError:
            break
        try:
            value = evaluate(simplified, point)
        except SingularEvaluationError:
            attempts_left -= 1
            continue
        sampled += 1
        scale = _magnitude_scale(terms, point)
        if abs(value) > tol * (1.0 + scale):
            witness = {s.name: v for s, v in sorted(point.items(), key=lambda kv: kv[0].name)}
            return Verdict(Verdict.NONZERO, witness=witness, value=value)
    if sampled == 0:
        return Verdict(Verdict.INCONCLUSIVE)
    return Verdict(Verdict.NUMERIC, points=sampled, tolerance=tol)


def random_polynomial(
    symbols: list[sp.Symbol],
    degree: int,
    rng: Random,
    terms: int = 6,
) -> sp.Expr:
    """Random polynomial with small rational coefficients, for identity testing."""
    out = sp.Rational(rng.randint(-3, 3), rng.randint(1, 3))
    for _ in range(terms):
        coeff = sp.Rational(rng.randint(-4, 4), rng.randint(1, 4))
        if coeff == 0:
            continue
        monomial = sp.Integer(1)
        total = rng.randint(0, degree)
        for _ in range(total):
            monomial *= rng.choice(symbols)
        out += coeff * monomial
    return sp.expand(out)


def derive_seed(seed: int, label: str) -> int:
    """Stable per-check seed so concurrent or reordered checks reproduce."""
    return (seed * 2654435761 + zlib.crc32(label.encode())) % (2**32)
