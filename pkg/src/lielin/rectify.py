"""Canonical coordinates for commuting pairs of plane vector fields.

For a commuting rank-2 pair (A, B) the coordinate functions u, v with
A = d/du, B = d/dv have closed differentials forming the coframe dual to
(A, B); they are obtained by two one-variable quadratures.  The
quadratures use a small pattern integrator (powers, exponentials, sin/cos,
log and their products handled by parts); anything outside it yields an
unsolved result carrying the 1-forms still to be integrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import sympy as sp

from .planefield import PointTransformation, VectorField, bracket, generic_rank
from .symexpr import (
    X,
    Y,
    ParameterTable,
    is_zero,
    normalize,
    to_text,
    x,
    y,
)

__all__ = [
    "NormalizationTrace",
    "RectificationError",
    "RectificationResult",
    "affine_normalize",
    "antiderivative",
    "invert",
    "rectify_pair",
    "rectify_rank1_pair",
]


class RectificationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# pattern antiderivative


def _split_term(term, v):
    """term = const * v**n * exp(alpha*v + c0) * trig  ->  pieces, or None."""
    const = sp.S.One
    n = sp.S.Zero
    exp_arg = sp.S.Zero
    trig = []
    other = []
    for f in sp.Mul.make_args(term):
        if not f.has(v):
            const *= f
        elif f == v:
            n += 1
        elif f.is_Pow and f.base == v and not f.exp.has(v):
            n += f.exp
        elif isinstance(f, sp.exp):
            exp_arg += f.args[0]
        elif f.is_Pow and isinstance(f.base, sp.exp) and not f.exp.has(v):
            exp_arg += f.base.args[0] * f.exp
        elif isinstance(f, (sp.sin, sp.cos)):
            trig.append(f)
        else:
            other.append(f)
    return const, n, exp_arg, trig, other


def _linear_coeff(e, v):
    """(a, b) with e = a*v + b, or None."""
    e = sp.expand(e)
    a = sp.diff(e, v)
    if a.has(v):
        return None
    return a, sp.expand(e - a * v)


def _int_exp_poly(n: int, alpha, v):
    """Antiderivative of v**n * exp(alpha*v) for integer n >= 0."""
    total = sp.S.Zero
    for k in range(n + 1):
        total += (-1) ** k * sp.Integer(math.factorial(n) // math.factorial(n - k)) * v ** (n - k) / alpha ** (k + 1)
    return total * sp.exp(alpha * v)


def _antiderivative_term(term, v):
    const, n, exp_arg, trig, other = _split_term(term, v)
    lin = _linear_coeff(exp_arg, v) if exp_arg != 0 else (sp.S.Zero, sp.S.Zero)
    if lin is None:
        return None
    alpha, e0 = lin
    const = const * sp.exp(e0) if e0 != 0 else const

    if other:
        if len(other) != 1 or n != 0 or alpha != 0 or trig:
            return None
        f = other[0]
        if isinstance(f, sp.log) and f.args[0] == v:
            return const * (v * sp.log(v) - v)
        if f.is_Pow and not f.exp.has(v):
            lb = _linear_coeff(f.base, v)
            if lb is None or lb[0] == 0:
                return None
            a, _ = lb
            if f.exp == -1:
                return const * sp.log(f.base) / a
            return const * f.base ** (f.exp + 1) / (a * (f.exp + 1))
        return None

    if not trig:
        if alpha == 0:
            if n == -1:
                return const * sp.log(v)
            return const * v ** (n + 1) / (n + 1)
        if n.is_integer and n >= 0:
            return const * _int_exp_poly(int(n), alpha, v)
        return None

    if len(trig) != 1 or n != 0:
        return None
    t = trig[0]
    lb = _linear_coeff(t.args[0], v)
    if lb is None or lb[0] == 0:
        return None
    beta = lb[0]
    s, c = sp.sin(t.args[0]), sp.cos(t.args[0])
    if alpha == 0:
        return const * (-c / beta if isinstance(t, sp.sin) else s / beta)
    den = alpha**2 + beta**2
    if isinstance(t, sp.sin):
        return const * sp.exp(alpha * v) * (alpha * s - beta * c) / den
    return const * sp.exp(alpha * v) * (alpha * c + beta * s) / den


def antiderivative(f, v):
    """An antiderivative of ``f`` in ``v`` from the supported patterns, or None."""
    f = normalize(f)
    if f == 0:
        return sp.S.Zero
    total = sp.S.Zero
    for term in sp.Add.make_args(f):
        r = _antiderivative_term(term, v)
        if r is None:
            # a rational term in v may still fit after partial fractions
            pf = sp.apart(sp.together(term), v) if term.is_rational_function(v) else None
            if pf is None or pf == term:
                return None
            r = antiderivative(pf, v)
            if r is None:
                return None
        total += r
    return normalize(total)


def integrate_closed_form(p, q, params=None, seed=0):
    """A potential u with du = p dx + q dy, or None."""
    for first, second in ((x, y), (y, x)):
        a, b = (p, q) if first == x else (q, p)
        F = antiderivative(a, first) if not is_zero(a, params, seed) else sp.S.Zero
        if F is None:
            continue
        rest = normalize(b - sp.diff(F, second))
        if rest.has(first):
            rest = sp.cancel(rest)
            if rest.has(first):
                if is_zero(sp.diff(rest, first), params, seed):
                    rest = normalize(rest.subs(first, sp.Rational(1)))
                else:
                    continue
        G = antiderivative(rest, second) if rest != 0 else sp.S.Zero
        if G is None:
            continue
        return normalize(F + G)
    return None


# ---------------------------------------------------------------------------
# inversion


def _candidates(eq, var):
    try:
        sols = sp.solve(eq, var)
    except (NotImplementedError, ValueError):
        return []
    return [s for s in sols if not s.has(sp.I)]


def invert(P, Q, params: ParameterTable | None = None, seed: int = 0):
    """(x(X, Y), y(X, Y)) inverting X = P, Y = Q, checked numerically, or None."""
    options = []
    for first, other_expr, var1, var2, lhs1, lhs2 in (
        (P, Q, x, y, X, Y),
        (P, Q, y, x, X, Y),
        (Q, P, x, y, Y, X),
        (Q, P, y, x, Y, X),
    ):
        if first.has(var2):
            continue
        for s1 in _candidates(first - lhs1, var1):
            rest = normalize(other_expr.subs(var1, s1))
            for s2 in _candidates(rest - lhs2, var2):
                s1_full = normalize(s1.subs(var2, s2))
                inv = (s1_full, s2) if var1 == x else (s2, s1_full)
                options.append(inv)
    if not options:
        try:
            sols = sp.solve([P - X, Q - Y], [x, y], dict=True)
        except (NotImplementedError, ValueError):
            sols = []
        options = [(s[x], s[y]) for s in sols if x in s and y in s]
    for inv in options:
        T = PointTransformation(P, Q, inv)
        if T.check_inverse(params, seed):
            return T.inverse
    return None


# ---------------------------------------------------------------------------
# rectification


@dataclass
class RectificationResult:
    transformation: PointTransformation | None
    solved: bool
    residual: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    scales: dict = field(default_factory=dict)

    def passed(self) -> bool:
        return self.solved and all(v in ("proved", "probabilistically-verified") for v in self.verdicts.values())


def _one_form(p, q) -> str:
    return f"({to_text(normalize(p))})*dx + ({to_text(normalize(q))})*dy"


def rectify_pair(
    A: VectorField,
    B: VectorField,
    params: ParameterTable | None = None,
    seed: int = 0,
    integrate: bool = True,
) -> RectificationResult:
    """Coordinates (u, v) with A = d/du and B = d/dv."""
    if not bracket(A, B).is_zero(params, seed):
        raise RectificationError("the pair does not commute")
    if generic_rank([A, B], 0, params, seed) != 2:
        raise RectificationError("the pair does not have rank 2")
    det = A.xi * B.eta - A.eta * B.xi
    du = (B.eta / det, -B.xi / det)
    dv = (-A.eta / det, A.xi / det)
    residual = [f"du = {_one_form(*du)}", f"dv = {_one_form(*dv)}"]
    if not integrate:
        return RectificationResult(None, False, residual)
    u = integrate_closed_form(*du, params=params, seed=seed)
    v = integrate_closed_form(*dv, params=params, seed=seed)
    if u is None or v is None:
        return RectificationResult(None, False, residual)
    verdicts = {
        "A(u)=1": is_zero(A(u) - 1, params, seed).verdict,
        "A(v)=0": is_zero(A(v), params, seed).verdict,
        "B(u)=0": is_zero(B(u), params, seed).verdict,
        "B(v)=1": is_zero(B(v) - 1, params, seed).verdict,
    }
    inv = invert(u, v, params, seed)
    T = PointTransformation(u, v, inv)
    return RectificationResult(T, True, [], verdicts, {"A": 1, "B": 1})


def rectify_rank1_pair(
    f1: VectorField,
    f2: VectorField,
    params: ParameterTable | None = None,
    seed: int = 0,
    integrate: bool = True,
) -> RectificationResult:
    """Coordinates with f1 = d/dY and f2 = X d/dY for a rank-1 commuting pair."""
    if is_zero(f1.eta, params, seed) and is_zero(f1.xi, params, seed):
        raise RectificationError("f1 vanishes")
    if not is_zero(f1.eta, params, seed):
        rho = normalize(sp.cancel(f2.eta / f1.eta))
    else:
        rho = normalize(sp.cancel(f2.xi / f1.xi))
    if not (f2 - f1 * rho).is_zero(params, seed):
        raise RectificationError("f2 is not a multiple of f1")
    if not is_zero(f1(rho), params, seed):
        raise RectificationError("the ratio f2/f1 is not invariant along f1")
    residual = [f"X = {to_text(rho)}", "Y solves f1(Y) = 1"]
    if not integrate:
        return RectificationResult(None, False, residual)
    h = None
    if is_zero(f1.xi, params, seed):
        h = antiderivative(1 / f1.eta, y)
    elif is_zero(f1.eta, params, seed):
        h = antiderivative(1 / f1.xi, x)
    if h is None:
        return RectificationResult(None, False, residual)
    T = PointTransformation(rho, h)
    if T.check_jacobian(params, seed):
        raise RectificationError("ratio and quadrature are functionally dependent")
    verdicts = {
        "f1(X)=0": is_zero(f1(rho), params, seed).verdict,
        "f1(Y)=1": is_zero(f1(h) - 1, params, seed).verdict,
        "f2(X)=0": is_zero(f2(rho), params, seed).verdict,
        "f2(Y)=X": is_zero(f2(h) - rho, params, seed).verdict,
    }
    inv = invert(rho, h, params, seed)
    return RectificationResult(PointTransformation(rho, h, inv), True, [], verdicts, {"f1": 1, "f2": 1})


# ---------------------------------------------------------------------------
# affine normalization (maximal symmetry)


@dataclass
class NormalizationTrace:
    alpha: sp.Expr
    beta: sp.Expr
    gamma: sp.Expr
    d: int
    k: sp.Expr
    translation: tuple

    def as_dict(self) -> dict:
        return {
            "alpha": to_text(self.alpha),
            "beta": to_text(self.beta),
            "gamma": to_text(self.gamma),
            "d": self.d,
            "k": to_text(self.k),
            "translation": [to_text(t) for t in self.translation],
        }


def _constant(e, params, seed):
    e = normalize(e)
    if not (is_zero(sp.diff(e, x), params, seed) and is_zero(sp.diff(e, y), params, seed)):
        return None
    if e.has(x) or e.has(y):
        e = normalize(sp.simplify(e))
    return e


def affine_normalize(
    H: VectorField,
    Yf: VectorField,
    T: PointTransformation,
    N: int,
    params: ParameterTable | None = None,
    seed: int = 0,
):
    """Translate T so that H = -2X d/dX - d Y d/dY and check the lowering field.

    ``H`` and ``Yf`` are the oriented triple elements as source fields and T
    already sends the raising element to d/dX.
    """
    d = N - 1
    P, Q = T.P, T.Q
    alpha = _constant(2 * P + H(P), params, seed)
    gamma = _constant(d * Q + H(Q), params, seed)
    if alpha is None or gamma is None:
        raise RectificationError("H is not affine in the rectified coordinates")
    P2 = normalize(P - alpha / 2)
    Q2 = normalize(Q - gamma / d)
    beta = normalize(Yf(P2) + P2**2)
    k_num = normalize(Yf(Q2) + d * P2 * Q2)
    k = sp.S.Zero if is_zero(k_num, params, seed) else normalize(sp.cancel(k_num / Q2 ** (1 + sp.Rational(2, d))))
    if k != 0:
        raise RectificationError(f"normalization constant k = {to_text(k)} is nonzero")
    inv = None
    if T.inverse is not None:
        shift = {X: X + alpha / 2, Y: Y + gamma / d}
        inv = tuple(normalize(e.xreplace(shift)) for e in T.inverse)
    trace = NormalizationTrace(alpha, beta, gamma, d, k, (-alpha / 2, -gamma / d))
    return PointTransformation(P2, Q2, inv), trace
