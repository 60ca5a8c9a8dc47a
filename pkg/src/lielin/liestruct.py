"""Lie algebras given by exact structure constants.

The algebra of a list of vector fields is read off by solving for the
bracket coefficients numerically at high precision, recognising them as
elements of QQ (or of one quadratic extension), and then certifying each
bracket relation symbolically.  Everything after that (derived algebra,
radical, Levi decomposition, sl(2) triples, eigen-data) is exact linear
algebra over that field.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

import mpmath
import sympy as sp
from sympy.polys.domains import QQ

from . import linalg as la
from .planefield import VectorField, _all_zero, bracket
from .symexpr import (
    DomainViolation,
    ParameterTable,
    ZeroTest,
    _env,
    _evaluate,
    sample_point,
)

__all__ = [
    "LieAlgebraError",
    "LieAlgebraStructure",
    "LeviDecomposition",
    "Sl2Triple",
    "Eigen",
    "abelian_complement",
    "adjoint_eigen",
    "center",
    "centralizer",
    "derived_algebra",
    "derived_series",
    "express_in_span",
    "killing_form",
    "levi_decomposition",
    "radical",
    "sl2_standard_triple",
    "structure_constants",
]


class LieAlgebraError(ValueError):
    """Raised when the input fields do not form a usable Lie algebra."""


def quadratic_field(d: int | None):
    if d is None or d == 1:
        return QQ
    return QQ.algebraic_field(sp.sqrt(d))


def detect_extension(exprs) -> int | None:
    """Squarefree radicand of the ``sqrt(n)`` constants occurring in ``exprs``."""
    radicands = set()
    for e in exprs:
        for node in sp.preorder_traversal(sp.sympify(e)):
            if node.is_Pow and node.base.is_Integer and node.exp == sp.S.Half:
                radicands.add(int(node.base))
    radicands.discard(1)
    if len(radicands) > 1:
        raise LieAlgebraError(f"more than one quadratic irrationality in the input: {sorted(radicands)}")
    return radicands.pop() if radicands else None


# ---------------------------------------------------------------------------
# numeric recognition of constants


def _recognize(v, K):
    with mpmath.workdps(60):
        if abs(v) < mpmath.mpf("1e-40"):
            return K.zero
        if K == QQ:
            rel = mpmath.pslq([v, 1], tol=mpmath.mpf("1e-30"), maxcoeff=10**9, maxsteps=10**5)
            if not rel or rel[0] == 0:
                return None
            value = sp.Rational(-rel[1], rel[0])
        else:
            s = K.ext.as_expr()
            sv = mpmath.sqrt(int(s.base)) if s.is_Pow else mpmath.mpf(sp.N(s, 60))
            rel = mpmath.pslq([v, 1, sv], tol=mpmath.mpf("1e-30"), maxcoeff=10**9, maxsteps=10**5)
            if not rel or rel[0] == 0:
                return None
            value = sp.Rational(-rel[1], rel[0]) + sp.Rational(-rel[2], rel[0]) * s
        if abs(mpmath.mpf(sp.N(value, 60)) - v) > mpmath.mpf("1e-30") * (1 + abs(v)):
            return None
    return K.from_sympy(value)


def _symbols(exprs) -> set:
    out = set()
    for e in exprs:
        out |= {s for s in sp.sympify(e).free_symbols if isinstance(s, sp.Symbol)}
    return out


def express_in_span(target, basis, K=QQ, params: ParameterTable | None = None, seed: int = 0, certify: bool = True):
    """Constants c with ``target == sum c_j basis_j`` componentwise, or None.

    ``target`` is a tuple of expressions and ``basis`` a list of such tuples.
    The constants are found numerically, recognised in K and (with
    ``certify``) the identity is then checked by :func:`is_zero`.  Returns
    ``(coefficients, ZeroTest)``.
    """
    n = len(basis)
    if n == 0:
        zt = _all_zero(list(target), params, seed)
        return ([], zt) if zt.value else None
    exprs = list(target) + [c for b in basis for c in b]
    symbols = _symbols(exprs)
    rng = random.Random(seed)
    rows, rhs = [], []
    needed = n + 4
    got = 0
    with mpmath.workdps(60):
        for _ in range(400):
            pt = sample_point(symbols, rng, params)
            try:
                env = _env(pt)
                tv = [_evaluate(t, env)[0] for t in target]
                bv = [[_evaluate(c, env)[0] for c in b] for b in basis]
            except (DomainViolation, ZeroDivisionError, ValueError, OverflowError):
                continue
            for comp in range(len(target)):
                rows.append([bv[j][comp] for j in range(n)])
                rhs.append(tv[comp])
            got += 1
            if got >= needed:
                break
        if got < needed:
            return None
        A = mpmath.matrix(rows)
        b = mpmath.matrix(rhs)
        try:
            sol = mpmath.lu_solve(A.T * A, A.T * b)
        except ZeroDivisionError:
            return None
        res = mpmath.norm(A * sol - b)
        scale = max([abs(v) for v in rhs] + [mpmath.mpf(1)])
        if res > mpmath.mpf("1e-25") * scale:
            return None
        coeffs = []
        for j in range(n):
            c = _recognize(sol[j], K)
            if c is None:
                return None
            coeffs.append(c)
    if not certify:
        return coeffs, ZeroTest(True, "probabilistic")
    residual = []
    for comp in range(len(target)):
        acc = target[comp]
        for c, b in zip(coeffs, basis):
            if not K.is_zero(c):
                acc = acc - K.to_sympy(c) * b[comp]
        residual.append(acc)
    zt = _all_zero(residual, params, seed)
    if not zt.value:
        return None
    return coeffs, zt


def numerically_independent(vectors_of_exprs, params=None, seed=0) -> bool:
    """Linear independence over R of tuples of functions (generic evaluation)."""
    n = len(vectors_of_exprs)
    exprs = [c for v in vectors_of_exprs for c in v]
    symbols = _symbols(exprs)
    rng = random.Random(seed)
    cols = []
    got = 0
    with mpmath.workdps(30):
        for _ in range(400):
            pt = sample_point(symbols, rng, params)
            try:
                env = _env(pt)
                vals = [[_evaluate(c, env)[0] for c in v] for v in vectors_of_exprs]
            except (DomainViolation, ZeroDivisionError, ValueError, OverflowError):
                continue
            for comp in range(len(vectors_of_exprs[0])):
                cols.append([vals[i][comp] for i in range(n)])
            got += 1
            if got >= n + 4:
                break
        if got < n + 4:
            raise DomainViolation("could not evaluate the fields at enough points")
        M = mpmath.matrix(cols)
        s = mpmath.svd_r(M, compute_uv=False)
        big = max(abs(v) for v in s)
        return all(abs(v) > mpmath.mpf("1e-15") * big for v in s)


# ---------------------------------------------------------------------------
# the structure


@dataclass
class LieAlgebraStructure:
    """Structure constants ``[e_i, e_j] = sum_k c[i][j][k] e_k`` over domain K.

    ``fields`` are the (parameter-specialised) generating vector fields when
    the algebra came from fields; abstract algebras leave it empty.
    """

    labels: list
    c: list
    K: object = QQ
    fields: list = field(default_factory=list)
    closure: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def basis(self):
        return la.identity(self.dim, self.K)

    def zero(self):
        return [self.K.zero] * self.dim

    def unit(self, i):
        v = self.zero()
        v[i] = self.K.one
        return v

    def bracket(self, u, v):
        K = self.K
        out = self.zero()
        for i, ui in enumerate(u):
            if K.is_zero(ui):
                continue
            for j, vj in enumerate(v):
                if K.is_zero(vj):
                    continue
                f = ui * vj
                row = self.c[i][j]
                for k in range(self.dim):
                    if not K.is_zero(row[k]):
                        out[k] += f * row[k]
        return out

    def ad(self, u):
        """Matrix of ad u (column j = coordinates of [u, e_j])."""
        cols = [self.bracket(u, self.unit(j)) for j in range(self.dim)]
        return la.transpose(cols)

    def restricted_ad(self, u, W):
        """Matrix of ad u on the invariant subspace W (in W's basis)."""
        cols = []
        for w in W:
            coords = la.coordinates(W, self.bracket(u, w), self.K)
            if coords is None:
                raise LieAlgebraError("subspace is not invariant under ad")
            cols.append(coords)
        return la.transpose(cols)

    def field_of(self, u) -> VectorField:
        if not self.fields:
            raise LieAlgebraError("abstract algebra has no vector-field realisation")
        xi = sum((self.K.to_sympy(a) * f.xi for a, f in zip(u, self.fields) if not self.K.is_zero(a)), sp.S.Zero)
        eta = sum((self.K.to_sympy(a) * f.eta for a, f in zip(u, self.fields) if not self.K.is_zero(a)), sp.S.Zero)
        return VectorField(xi, eta)

    def to_sympy(self, u):
        return [self.K.to_sympy(a) for a in u]

    def describe(self, u) -> str:
        terms = []
        for a, lab in zip(u, self.labels):
            if self.K.is_zero(a):
                continue
            s = sp.sstr(self.K.to_sympy(a))
            if s == "1":
                terms.append(lab)
            elif s == "-1":
                terms.append(f"-{lab}")
            else:
                terms.append(f"({s})*{lab}" if any(ch in s[1:] for ch in "+-/ ") else f"{s}*{lab}")
        return " + ".join(terms).replace("+ -", "- ") if terms else "0"

    def relations(self) -> list[str]:
        out = []
        for i, j in itertools.combinations(range(self.dim), 2):
            v = self.c[i][j]
            if not la.is_zero_vector(v, self.K):
                out.append(f"[{self.labels[i]}, {self.labels[j]}] = {self.describe(v)}")
        return out

    def check_antisymmetry(self) -> bool:
        return all(
            all(self.K.is_zero(a + b) for a, b in zip(self.c[i][j], self.c[j][i]))
            for i in range(self.dim)
            for j in range(self.dim)
        )

    def check_jacobi(self) -> bool:
        n = self.dim
        for i, j, k in itertools.combinations(range(n), 3):
            ei, ej, ek = self.unit(i), self.unit(j), self.unit(k)
            s = la.add(
                la.add(self.bracket(ei, self.bracket(ej, ek)), self.bracket(ej, self.bracket(ek, ei))),
                self.bracket(ek, self.bracket(ei, ej)),
            )
            if not la.is_zero_vector(s, self.K):
                return False
        return True

    def is_subalgebra(self, S) -> bool:
        return all(la.contains(S, self.bracket(u, v), self.K) for u, v in itertools.combinations(S, 2))

    def is_ideal(self, S) -> bool:
        return all(la.contains(S, self.bracket(e, s), self.K) for e in self.basis() for s in S)

    def brackets_span(self, A, B):
        return la.span([self.bracket(a, b) for a in A for b in B], self.K)

    @classmethod
    def from_relations(cls, labels, relations: dict, K=QQ) -> "LieAlgebraStructure":
        """Abstract algebra from ``{(i, j): {k: coeff}}`` (0-based, i < j)."""
        n = len(labels)
        c = [[[K.zero] * n for _ in range(n)] for _ in range(n)]
        for (i, j), rhs in relations.items():
            for k, v in rhs.items():
                val = K.convert(v) if not isinstance(v, sp.Basic) else K.from_sympy(v)
                c[i][j][k] = val
                c[j][i][k] = -val
        return cls(list(labels), c, K)


def structure_constants(
    fields,
    labels=None,
    params: ParameterTable | None = None,
    extension: int | None = None,
    seed: int = 0,
) -> LieAlgebraStructure:
    """Structure constants of the span of ``fields`` (parameters at their samples)."""
    fields = list(fields)
    labels = list(labels) if labels else [f"e{i + 1}" for i in range(len(fields))]
    if len(set(labels)) != len(labels):
        raise LieAlgebraError("generator labels must be unique")
    bind = params.sample_bindings() if params else {}
    if bind:
        fields = [f.subs(bind) for f in fields]
    if extension is None:
        extension = detect_extension([c for f in fields for c in (f.xi, f.eta)])
    K = quadratic_field(extension)
    n = len(fields)
    pairs = [(f.xi, f.eta) for f in fields]
    if not numerically_independent(pairs, params, seed):
        raise LieAlgebraError("generators are linearly dependent")
    c = [[[K.zero] * n for _ in range(n)] for _ in range(n)]
    closure = {}
    for i, j in itertools.combinations(range(n), 2):
        b = bracket(fields[i], fields[j])
        found = express_in_span((b.xi, b.eta), pairs, K, params, seed)
        if found is None:
            raise LieAlgebraError(f"[{labels[i]}, {labels[j]}] does not lie in the span of the generators")
        coeffs, zt = found
        closure[(labels[i], labels[j])] = zt.verdict
        c[i][j] = list(coeffs)
        c[j][i] = [-a for a in coeffs]
    L = LieAlgebraStructure(labels, c, K, fields, closure)
    if not (L.check_antisymmetry() and L.check_jacobi()):
        raise LieAlgebraError("recovered structure constants violate the Jacobi identity")
    return L


# ---------------------------------------------------------------------------
# standard subspaces


def derived_algebra(L: LieAlgebraStructure):
    return L.brackets_span(L.basis(), L.basis())


def derived_series(L: LieAlgebraStructure, S):
    series = [la.span(S, L.K)]
    while series[-1]:
        nxt = L.brackets_span(series[-1], series[-1])
        if la.rank(nxt, L.K) == la.rank(series[-1], L.K):
            break
        series.append(nxt)
    return series


def is_solvable(L: LieAlgebraStructure, S) -> bool:
    return not derived_series(L, S)[-1]


def centralizer(L: LieAlgebraStructure, w, A):
    """``{a in A : [a, w] = 0}``."""
    if not A:
        return []
    cols = [L.bracket(a, w) for a in A]
    sols = la.nullspace(la.transpose(cols), len(A), L.K)
    return la.span([la.lincomb(s, A, L.K) for s in sols], L.K)


def center(L: LieAlgebraStructure):
    # x in center iff [x, e_j] = 0 for all j, i.e. sum_i x_i c[i][j] = 0
    M = []
    for j in range(L.dim):
        for k in range(L.dim):
            M.append([L.c[i][j][k] for i in range(L.dim)])
    return la.span(la.nullspace(M, L.dim, L.K), L.K)


def killing_form(L: LieAlgebraStructure):
    ads = [L.ad(L.unit(i)) for i in range(L.dim)]
    return [[la.trace(la.matmul(ads[i], ads[j], L.K), L.K) for j in range(L.dim)] for i in range(L.dim)]


def radical(L: LieAlgebraStructure):
    """Killing-orthogonal complement of the derived algebra."""
    Kf = killing_form(L)
    D = derived_algebra(L)
    M = [la.matvec(Kf, d, L.K) for d in D]
    R = la.span(la.nullspace(M, L.dim, L.K), L.K) if M else L.basis()
    if not L.is_ideal(R) or not is_solvable(L, R):
        raise LieAlgebraError("internal error: computed radical is not a solvable ideal")
    return R


@dataclass
class LeviDecomposition:
    radical: list
    levi: list


def levi_decomposition(L: LieAlgebraStructure) -> LeviDecomposition:
    """Radical plus a Levi complement lifted through the radical's derived series."""
    K = L.K
    R = radical(L)
    S = la.complement(R, L.dim, K)
    if not S:
        return LeviDecomposition(R, [])
    series = derived_series(L, R) + [[]]
    s = len(S)
    for stage in range(len(series) - 1):
        Ri, Rnext = series[stage], series[stage + 1]
        C = la.complement_in(Rnext, Ri, K)
        # structure of S modulo R: [s_a, s_b] = sum c s_c + r_ab
        basis_SR = S + R
        unknowns = s * len(C) + len(list(itertools.combinations(range(s), 2))) * len(Rnext)
        rows, rhs = [], []
        col_R = s * len(C)
        for p, (a, b) in enumerate(itertools.combinations(range(s), 2)):
            coords = la.coordinates(basis_SR, L.bracket(S[a], S[b]), K)
            cs = coords[:s]
            r_ab = la.lincomb(coords[s:], R, K)
            # r_ab + [s_a, t_b] - [s_b, t_a] - sum_c cs[c] t_c + sum u Rnext = 0
            eq_cols = [[K.zero] * L.dim for _ in range(unknowns)]
            for m, cvec in enumerate(C):
                eq_cols[b * len(C) + m] = la.add(eq_cols[b * len(C) + m], L.bracket(S[a], cvec))
                eq_cols[a * len(C) + m] = la.add(eq_cols[a * len(C) + m], la.scale(-K.one, L.bracket(S[b], cvec)))
                for cc in range(s):
                    if not K.is_zero(cs[cc]):
                        eq_cols[cc * len(C) + m] = la.add(eq_cols[cc * len(C) + m], la.scale(-cs[cc], cvec))
            for q, rv in enumerate(Rnext):
                eq_cols[col_R + p * len(Rnext) + q] = rv
            block = la.transpose(eq_cols)
            rows.extend(block)
            rhs.extend([-v for v in r_ab])
        if not C:
            continue
        sol = la.solve(rows, rhs, K)
        if sol is None:
            raise LieAlgebraError(f"Levi lifting system is inconsistent at stage {stage}")
        S = [la.add(S[a], la.lincomb(sol[a * len(C) : (a + 1) * len(C)], C, K)) for a in range(s)]
    if not L.is_subalgebra(S):
        raise LieAlgebraError("internal error: Levi complement is not a subalgebra")
    Kf = killing_form(L)
    gram = [[sum((u[i] * Kf[i][j] * v[j] for i in range(L.dim) for j in range(L.dim)), K.zero) for v in S] for u in S]
    if la.rank(gram, K) != len(S):
        raise LieAlgebraError("internal error: Killing form degenerate on the Levi complement")
    return LeviDecomposition(R, S)


# ---------------------------------------------------------------------------
# sl(2) triples


@dataclass
class Sl2Triple:
    X: list
    Y: list
    H: list

    def swapped(self) -> "Sl2Triple":
        """The triple for the opposite Borel subalgebra: (Y, X, -H)."""
        return Sl2Triple(self.Y, self.X, [-h for h in self.H])

    def rescaled(self, t, K=QQ) -> "Sl2Triple":
        t = K.convert(t) if not isinstance(t, sp.Basic) else K.from_sympy(t)
        return Sl2Triple(la.scale(t, self.X), la.scale(K.one / t, self.Y), list(self.H))

    def check(self, L: LieAlgebraStructure) -> bool:
        K = L.K
        two = K.convert(2)
        return (
            L.bracket(self.X, self.Y) == self.H
            and L.bracket(self.H, self.X) == la.scale(two, self.X)
            and L.bracket(self.H, self.Y) == la.scale(-two, self.Y)
        )


def _is_nilpotent(M, K) -> bool:
    n = len(M)
    P = M
    for _ in range(n):
        P = la.matmul(P, M, K)
    return all(K.is_zero(a) for row in P for a in row)


def sl2_standard_triple(L: LieAlgebraStructure, levi) -> Sl2Triple:
    """A triple with [X,Y]=H, [H,X]=2X, [H,Y]=-2Y spanning the 3-dim ``levi``.

    X is the first ad-nilpotent element found among small integer
    combinations of the basis; H and Y then come from linear solves.
    """
    K = L.K
    if len(levi) != 3:
        raise LieAlgebraError(f"Levi complement has dimension {len(levi)}, expected 3")
    S = list(levi)
    X = None
    # basis directions first, the one with the simplest field realisation winning
    singles = [v for v in S if _is_nilpotent(L.ad(v), K)]
    if singles:
        if L.fields:
            singles.sort(key=lambda v: sp.count_ops(L.field_of(v).xi) + sp.count_ops(L.field_of(v).eta))
        X = singles[0]
    else:
        candidates = [list(t) for t in itertools.product(range(-2, 3), repeat=3) if sum(1 for a in t if a) > 1]
        candidates.sort(key=lambda t: (sum(1 for a in t if a), sum(abs(a) for a in t), [-a for a in t]))
        for t in candidates:
            v = la.lincomb([K.convert(a) for a in t], S, K)
            if _is_nilpotent(L.ad(v), K):
                X = v
                break
    if X is None:
        raise LieAlgebraError("Levi complement not split: no ad-nilpotent element (not a planar symmetry algebra)")
    two = K.convert(2)
    # Y0 in S with [X, [X, Y0]] = -2X
    cols = [L.bracket(X, L.bracket(X, s)) for s in S]
    sol = la.solve(la.transpose(cols), la.scale(-two, X), K)
    if sol is None:
        raise LieAlgebraError("no sl(2) triple through the nilpotent element")
    Y0 = la.lincomb(sol, S, K)
    H = L.bracket(X, Y0)
    # Y with [X, Y] = H and [H, Y] = -2Y
    cols = []
    for s in S:
        cols.append(L.bracket(X, s) + la.add(L.bracket(H, s), la.scale(two, s)))
    rhs = H + [K.zero] * L.dim
    sol = la.solve(la.transpose(cols), rhs, K)
    if sol is None:
        raise LieAlgebraError("no sl(2) triple through the nilpotent element")
    Yv = la.lincomb(sol, S, K)
    triple = Sl2Triple(X, Yv, H)
    if not triple.check(L):
        raise LieAlgebraError("internal error: sl(2) relations fail")
    return triple


# ---------------------------------------------------------------------------
# eigen-data


@dataclass
class Eigen:
    """Eigenvalue of ad h on a subspace.

    Base-field eigenvalues carry eigenvectors; a conjugate pair (real
    quadratic or complex) instead carries the invariant subspace on which
    it lives, once per pair member.
    """

    value: sp.Expr
    multiplicity: int
    kind: str
    vectors: list
    minimal_factor: sp.Expr | None = None


_t = sp.Symbol("t")


def adjoint_eigen(L: LieAlgebraStructure, h, W) -> list[Eigen]:
    K = L.K
    M = L.restricted_ad(h, W)
    coeffs = la.charpoly(M, K)
    poly = sp.Poly([K.to_sympy(c) for c in coeffs], _t, domain=K if K != QQ else QQ)
    _, factors = poly.factor_list()
    out = []
    for fac, mult in factors:
        deg = fac.degree()
        if deg == 1:
            lam_sym = -fac.as_expr().subs(_t, 0) / fac.LC()
            lam = K.from_sympy(sp.sympify(lam_sym))
            shifted = [[M[i][j] - (lam if i == j else K.zero) for j in range(len(M))] for i in range(len(M))]
            vecs = [la.lincomb(v, W, K) for v in la.nullspace(shifted, len(M), K)]
            out.append(Eigen(sp.radsimp(sp.sympify(lam_sym)), mult, "base", vecs, fac.as_expr()))
        elif deg == 2:
            qc = [K.from_sympy(sp.sympify(c)) for c in fac.all_coeffs()]
            QM = la.matmul(M, M, K)
            QM = [
                [qc[0] * QM[i][j] + qc[1] * M[i][j] + (qc[2] if i == j else K.zero) for j in range(len(M))]
                for i in range(len(M))
            ]
            inv = [la.lincomb(v, W, K) for v in la.nullspace(QM, len(M), K)]
            b, c0 = fac.all_coeffs()[1] / fac.LC(), fac.all_coeffs()[2] / fac.LC()
            disc = sp.radsimp(sp.sympify(b) ** 2 - 4 * sp.sympify(c0))
            kind = "complex" if disc.is_negative else "real-quadratic"
            roots = [sp.radsimp(sp.expand((-b + sgn * sp.sqrt(disc)) / 2)) for sgn in (1, -1)]
            for r in roots:
                out.append(Eigen(r, mult, kind, inv, fac.as_expr()))
        else:
            raise LieAlgebraError(f"characteristic polynomial has an irreducible factor of degree {deg}")
    return out


def abelian_complement(L: LieAlgebraStructure, D=None):
    """Two-dimensional abelian subalgebra complementing the (abelian) derived algebra."""
    K = L.K
    D = derived_algebra(L) if D is None else D
    if L.dim - len(D) != 2:
        raise LieAlgebraError(f"derived algebra has codimension {L.dim - len(D)}, expected 2")
    if L.brackets_span(D, D):
        return None
    e1, e2 = la.complement(D, L.dim, K)
    m = len(D)
    # [e1 + u, e2 + v] = [e1, e2] + [e1, v] - [e2, u] = 0
    cols = [la.scale(-K.one, L.bracket(e2, d)) for d in D] + [L.bracket(e1, d) for d in D]
    sol = la.solve(la.transpose(cols), la.scale(-K.one, L.bracket(e1, e2)), K)
    if sol is None:
        return None
    a1 = la.add(e1, la.lincomb(sol[:m], D, K))
    a2 = la.add(e2, la.lincomb(sol[m:], D, K))
    return [a1, a2]
