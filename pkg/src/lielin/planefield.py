"""Planar vector fields, their prolongations to jet space, and the
transformation machinery (pushforward of fields, pullback of ODEs)."""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np
import sympy as sp

from .symexpr import (
    DomainViolation,
    Expr,
    ParameterTable,
    ZeroTest,
    X,
    Y,
    _evaluate,
    _env,
    is_zero,
    jet,
    jet_order,
    normalize,
    sample_point,
    substitute,
    x,
    y,
)

__all__ = [
    "OdeSpec",
    "PointTransformation",
    "ProlongedField",
    "Pushforward",
    "VectorField",
    "bracket",
    "generic_rank",
    "is_symmetry",
    "prolong",
    "pullback_check",
    "pullback_ode",
    "pushforward",
    "singular_locus",
    "total_derivative",
    "transformed_jets",
]


@dataclass(frozen=True)
class VectorField:
    """The field ``xi*d/dx + eta*d/dy``."""

    xi: Expr
    eta: Expr

    def __post_init__(self):
        object.__setattr__(self, "xi", normalize(self.xi))
        object.__setattr__(self, "eta", normalize(self.eta))

    def __call__(self, f: Expr) -> Expr:
        return normalize(self.xi * sp.diff(f, x) + self.eta * sp.diff(f, y))

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.xi + other.xi, self.eta + other.eta)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.xi - other.xi, self.eta - other.eta)

    def __neg__(self) -> "VectorField":
        return VectorField(-self.xi, -self.eta)

    def __mul__(self, c) -> "VectorField":
        return VectorField(c * self.xi, c * self.eta)

    __rmul__ = __mul__

    def subs(self, bindings) -> "VectorField":
        return VectorField(substitute(self.xi, bindings), substitute(self.eta, bindings))

    def is_zero(self, params=None, seed=0) -> ZeroTest:
        return _all_zero([self.xi, self.eta], params, seed)

    def __str__(self) -> str:
        from .symexpr import to_text

        return f"({to_text(self.xi)})*dx + ({to_text(self.eta)})*dy"


def _all_zero(exprs, params=None, seed=0) -> ZeroTest:
    """Combine zero tests; the weakest path wins."""
    results = [is_zero(e, params, seed) for e in exprs]
    for r in results:
        if r.value is False:
            return r
    for r in results:
        if r.value is None:
            return r
    for r in results:
        if r.path != "canonical":
            return r
    return ZeroTest(True, "canonical")


def bracket(A: VectorField, B: VectorField) -> VectorField:
    """Lie bracket ``[A, B] = A(B) - B(A)`` on coefficients."""
    return VectorField(A(B.xi) - B(A.xi), A(B.eta) - B(A.eta))


# ---------------------------------------------------------------------------
# jets


def _max_jet(e: Expr) -> int:
    orders = [jet_order(s) for s in e.free_symbols if isinstance(s, sp.Symbol)]
    orders = [k for k in orders if k is not None]
    return max(orders, default=-1)


def total_derivative(f: Expr, simplify: bool = True) -> Expr:
    """``D_x f = f_x + y' f_y + y'' f_{y'} + ...`` over the jets present in f."""
    out = sp.diff(f, x)
    for k in range(_max_jet(f) + 1):
        out += jet(k + 1) * sp.diff(f, jet(k))
    return normalize(out) if simplify else out


@dataclass(frozen=True)
class ProlongedField:
    """``xi d/dx + sum_k eta[k] d/dy^(k)`` for k = 0..order."""

    order: int
    xi: Expr
    eta: tuple

    def __call__(self, f: Expr) -> Expr:
        out = self.xi * sp.diff(f, x)
        for k, c in enumerate(self.eta):
            out += c * sp.diff(f, jet(k))
        return normalize(out)

    def coefficient(self, k: int) -> Expr:
        return self.eta[k]

    def row(self) -> list:
        return [self.xi, *self.eta]


def prolong(A: VectorField, N: int) -> ProlongedField:
    """N-th prolongation by ``eta_{k+1} = D_x eta_k - y^(k+1) D_x xi``."""
    if N < 1:
        raise ValueError("prolongation order must be at least 1")
    dxi = total_derivative(A.xi)
    etas = [A.eta]
    for k in range(N):
        etas.append(normalize(total_derivative(etas[-1]) - jet(k + 1) * dxi))
    return ProlongedField(N, A.xi, tuple(etas))


@dataclass(frozen=True)
class OdeSpec:
    """``y^(N) = rhs`` with rhs free of jets of order >= N."""

    order: int
    rhs: Expr

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("ODE order must be positive")
        object.__setattr__(self, "rhs", normalize(self.rhs))
        if _max_jet(self.rhs) >= self.order:
            raise ValueError(f"right-hand side involves y^({_max_jet(self.rhs)}) in an order-{self.order} ODE")

    @classmethod
    def from_equation(cls, lhs: Expr, order: int) -> "OdeSpec":
        """Solve ``lhs = 0`` for the highest derivative; lhs must be linear in it."""
        yN = jet(order)
        lhs = sp.sympify(lhs)
        if _max_jet(lhs) > order:
            raise ValueError(f"equation involves derivatives above order {order}")
        a = sp.diff(lhs, yN)
        if a == 0:
            raise ValueError(f"equation does not involve y^({order})")
        if not is_zero(sp.diff(a, yN)):
            raise ValueError(f"equation is not linear in y^({order})")
        b = lhs.xreplace({yN: 0})
        return cls(order, normalize(sp.cancel(-b / a)))

    def equation(self) -> Expr:
        return normalize(jet(self.order) - self.rhs)

    def is_linear_homogeneous(self) -> bool:
        jets = [jet(k) for k in range(self.order)]
        if substitute(self.rhs, {j: 0 for j in jets}) != 0:
            return False
        return all(sp.diff(self.rhs, a, b) == 0 for a in jets for b in jets)

    def __str__(self) -> str:
        from .symexpr import to_text

        return f"y^({self.order}) = {to_text(self.rhs)}"


@dataclass(frozen=True)
class PointTransformation:
    """``X = P(x, y)``, ``Y = Q(x, y)``; ``inverse`` gives (x, y) in terms of (X, Y)."""

    P: Expr
    Q: Expr
    inverse: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "P", normalize(self.P))
        object.__setattr__(self, "Q", normalize(self.Q))
        if self.inverse is not None:
            object.__setattr__(self, "inverse", tuple(normalize(e) for e in self.inverse))

    def jacobian(self) -> Expr:
        return normalize(
            sp.diff(self.P, x) * sp.diff(self.Q, y) - sp.diff(self.P, y) * sp.diff(self.Q, x)
        )

    def check_jacobian(self, params=None, seed=0) -> ZeroTest:
        """Zero test of the Jacobian; a *False* value means T is admissible."""
        return is_zero(self.jacobian(), params, seed)

    def to_target(self, e: Expr) -> Expr:
        """Rewrite an expression in (x, y) in the target coordinates."""
        if self.inverse is None:
            raise ValueError("transformation has no declared inverse")
        return substitute(e, {x: self.inverse[0], y: self.inverse[1]})

    def from_target(self, e: Expr) -> Expr:
        """Rewrite an expression in (X, Y) in the source coordinates."""
        return substitute(e, {X: self.P, Y: self.Q})

    def then(self, other: "PointTransformation") -> "PointTransformation":
        """Composite: first self, then ``other`` (whose input is self's output)."""
        P = substitute(other.P.xreplace({x: X, y: Y}), {X: self.P, Y: self.Q})
        Q = substitute(other.Q.xreplace({x: X, y: Y}), {X: self.P, Y: self.Q})
        inv = None
        if self.inverse is not None and other.inverse is not None:
            # other.inverse maps target -> intermediate (as X, Y -> x, y)
            ox, oy = other.inverse
            ix = substitute(self.inverse[0], {X: ox, Y: oy})
            iy = substitute(self.inverse[1], {X: ox, Y: oy})
            inv = (ix, iy)
        return PointTransformation(P, Q, inv)

    def check_inverse(self, params=None, seed=0, points=8) -> bool:
        """Round trip through the declared inverse at random points."""
        if self.inverse is None:
            return False
        rng = random.Random(seed)
        good = 0
        for _ in range(400):
            pt = sample_point({x, y} | _syms(self.P, self.Q, *self.inverse) - {X, Y}, rng, params)
            try:
                env = _env(pt)
                Pv, _ = _evaluate(self.P, env)
                Qv, _ = _evaluate(self.Q, env)
                env2 = dict(env)
                env2[X], env2[Y] = Pv, Qv
                xv, _ = _evaluate(self.inverse[0], env2)
                yv, _ = _evaluate(self.inverse[1], env2)
            except (DomainViolation, ZeroDivisionError, ValueError):
                continue
            if abs(xv - env[x]) > 1e-9 * (1 + abs(env[x])) or abs(yv - env[y]) > 1e-9 * (1 + abs(env[y])):
                return False
            good += 1
            if good >= points:
                return True
        return False

    @classmethod
    def identity(cls) -> "PointTransformation":
        return cls(x, y, (X, Y))


def _syms(*exprs) -> set:
    out = set()
    for e in exprs:
        out |= {s for s in sp.sympify(e).free_symbols if isinstance(s, sp.Symbol)}
    return out


def is_symmetry(A: VectorField, ode: OdeSpec, params: ParameterTable | None = None, seed: int = 0) -> ZeroTest:
    """Does the prolonged field annihilate ``y^(N) - rhs`` on ``y^(N) = rhs``?"""
    pr = prolong(A, ode.order)
    residual = pr(ode.equation())
    residual = residual.xreplace({jet(ode.order): ode.rhs})
    return is_zero(residual, params, seed)


# ---------------------------------------------------------------------------
# rank and singular locus


def coefficient_matrix(fields, jet_order: int) -> list[list[Expr]]:
    rows = []
    for f in fields:
        if jet_order == 0:
            rows.append([f.xi, f.eta])
        else:
            rows.append(prolong(f, jet_order).row())
    return rows


def generic_rank(
    fields, jet_order: int = 0, params: ParameterTable | None = None, seed: int = 0, points: int = 8
) -> int:
    """Largest numeric rank of the prolonged coefficient matrix over random points."""
    fields = list(fields)
    if not fields:
        raise ValueError("generic_rank needs at least one field")
    rows = coefficient_matrix(fields, jet_order)
    symbols = _syms(*[c for r in rows for c in r]) | {x, y}
    rng = random.Random(seed)
    best = None
    good = 0
    for _ in range(400):
        pt = sample_point(symbols, rng, params)
        try:
            env = _env(pt)
            M = [[float(_evaluate(c, env)[0]) for c in r] for r in rows]
        except (DomainViolation, ZeroDivisionError, ValueError, OverflowError):
            continue
        M = np.array(M, dtype=float)
        if not np.all(np.isfinite(M)):
            continue
        s = np.linalg.svd(M, compute_uv=False)
        scale = max(1.0, float(np.max(np.abs(M))))
        r = int(np.sum(s > 1e-9 * scale))
        best = r if best is None else max(best, r)
        good += 1
        if good >= points:
            break
    if best is None:
        raise DomainViolation("coefficient matrix could not be evaluated at any sample point")
    return best


def singular_locus(fields, jet_order: int, params: ParameterTable | None = None, seed: int = 0) -> Expr:
    """Determinant of the prolonged coefficient matrix (identically-zero columns dropped)."""
    rows = coefficient_matrix(list(fields), jet_order)
    ncols = len(rows[0])
    keep = [j for j in range(ncols) if not all(is_zero(r[j], params, seed) for r in rows)]
    if len(keep) != len(rows):
        raise ValueError(
            f"{len(rows)} fields against {len(keep)} nonzero jet columns: locus is not a single determinant"
        )
    M = sp.Matrix([[r[j] for j in keep] for r in rows])
    return normalize(M.det(method="berkowitz"))


# ---------------------------------------------------------------------------
# transformations


@dataclass(frozen=True)
class Pushforward:
    """Image of a field; coefficients are in (X, Y) when ``in_target_coords``."""

    field: VectorField
    in_target_coords: bool


def pushforward(A: VectorField, T: PointTransformation, require_target: bool = False) -> Pushforward:
    xi, eta = A(T.P), A(T.Q)
    if T.inverse is None:
        if require_target:
            raise ValueError("transformation has no declared inverse; cannot express the image in (X, Y)")
        return Pushforward(VectorField(xi, eta), False)
    return Pushforward(VectorField(T.to_target(xi), T.to_target(eta)), True)


def field_in_source(G: VectorField, T: PointTransformation) -> VectorField:
    """Pull a field written in (X, Y) back to (x, y) through T (no inverse needed)."""
    g1 = T.from_target(G.xi)
    g2 = T.from_target(G.eta)
    Px, Py = sp.diff(T.P, x), sp.diff(T.P, y)
    Qx, Qy = sp.diff(T.Q, x), sp.diff(T.Q, y)
    det = Px * Qy - Py * Qx
    xi = sp.cancel((Qy * g1 - Py * g2) / det)
    eta = sp.cancel((-Qx * g1 + Px * g2) / det)
    return VectorField(xi, eta)


def transformed_jets(T: PointTransformation, N: int) -> list[Expr]:
    """``dY/dX, d^2Y/dX^2, ...`` as jet expressions in (x, y, y', ...)."""
    DP = total_derivative(T.P)
    if is_zero(DP):
        raise ValueError("D_x P vanishes identically: not an admissible change of independent variable")
    out = []
    cur = T.Q
    for _ in range(N):
        cur = sp.together(total_derivative(cur, simplify=False) / DP)
        out.append(cur)
    return out


def pullback_ode(target: OdeSpec, T: PointTransformation) -> OdeSpec:
    """The ODE in (x, y) that T maps onto ``target`` (written in the target variables)."""
    N = target.order
    jets = transformed_jets(T, N)
    bindings = {x: T.P, y: T.Q}
    for k in range(1, N):
        bindings[jet(k)] = jets[k - 1]
    residual = jets[N - 1] - target.rhs.xreplace(bindings)
    num, _ = sp.fraction(sp.together(residual))
    return OdeSpec.from_equation(sp.expand(num), N)


def pullback_check(
    ode: OdeSpec,
    T: PointTransformation,
    target: OdeSpec,
    params: ParameterTable | None = None,
    seed: int = 0,
) -> ZeroTest:
    """Does T carry ``ode`` onto ``target``?

    The target jets are expressed through the source jets, substituted into
    ``Y^(N) - target_rhs`` and the source equation is imposed; equality is up
    to a nonzero factor since only the vanishing of the residual is tested.
    """
    if ode.order != target.order:
        return ZeroTest(False, "canonical")
    N = ode.order
    jets = transformed_jets(T, N)
    bindings = {x: T.P, y: T.Q}
    for k in range(1, N):
        bindings[jet(k)] = jets[k - 1]
    residual = jets[N - 1] - target.rhs.xreplace(bindings)
    residual = residual.xreplace({jet(N): ode.rhs})
    return is_zero(residual, params, seed)
