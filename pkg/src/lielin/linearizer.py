"""Classification of symmetry algebras and construction of linearizing maps.

Three shapes are recognised for an N-th order ODE with symmetry algebra g:

* dim g = N + 4 with Levi factor sl(2) acting on a radical made of one
  N-dimensional and one trivial component (maximal symmetry, target
  y^(N) = 0);
* dim g = 4, N = 3, with abelian rank-1 derived algebra on which a
  complement acts as a nonzero scalar (target y''' = (phi'''/phi'') y'');
* dim g = 5, N = 3, with abelian rank-1 derived algebra, an abelian
  complement and weights (0, k), (lambda, k), (mu, k) (target
  y''' = (lambda + mu) y'' - lambda mu y').

Everything is certified at the end by pulling the target ODE back through
the emitted transformation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import sympy as sp

from . import linalg as la
from .liestruct import (
    LieAlgebraError,
    LieAlgebraStructure,
    abelian_complement,
    adjoint_eigen,
    centralizer,
    derived_algebra,
    express_in_span,
    levi_decomposition,
    sl2_standard_triple,
    structure_constants,
)
from .planefield import (
    OdeSpec,
    PointTransformation,
    VectorField,
    field_in_source,
    generic_rank,
    is_symmetry,
    pullback_check,
)
from .rectify import (
    RectificationError,
    affine_normalize,
    rectify_pair,
    rectify_rank1_pair,
)
from .sl2rep import decompose_radical, select_linearizing_pair
from .symexpr import (
    FAILED,
    INDETERMINATE,
    PROBABILISTIC,
    PROVED,
    X,
    Y,
    ParameterTable,
    is_zero,
    jet,
    normalize,
    to_text,
    x,
)

__all__ = [
    "CaseTag",
    "LinearizationResult",
    "canonical_algebra",
    "classify",
    "linearize",
    "linearize_dim4",
    "linearize_dim5",
    "linearize_maximal",
]

MAXIMAL = "MaximalSymmetry"
SOLVABLE4 = "Solvable4"
REAL_DISTINCT = "Solvable5RealDistinct"
COMPLEX = "Solvable5Complex"
REPEATED = "Solvable5Repeated"
NOT_COVERED = "NotCovered"


@dataclass(frozen=True)
class CaseTag:
    kind: str
    N: int | None = None
    reason: str | None = None

    @classmethod
    def not_covered(cls, reason: str) -> "CaseTag":
        return cls(NOT_COVERED, reason=reason)

    @property
    def covered(self) -> bool:
        return self.kind != NOT_COVERED

    def __str__(self) -> str:
        if self.kind == MAXIMAL:
            return f"{MAXIMAL}({self.N})"
        if self.kind == NOT_COVERED:
            return f'{NOT_COVERED}("{self.reason}")'
        return self.kind


@dataclass
class Analysis:
    """Intermediate data gathered while classifying."""

    L: LieAlgebraStructure | None = None
    derived: list = field(default_factory=list)
    levi: object = None
    triple: object = None
    decomposition: object = None
    pair: object = None
    complement: list = field(default_factory=list)
    q: list | None = None
    scalar: object = None
    e1: list | None = None
    e2: list | None = None
    w: list | None = None
    Z: list | None = None
    lam_sum: sp.Expr | None = None
    lam_prod: sp.Expr | None = None
    eigenvalues: list = field(default_factory=list)
    failure: str | None = None


@dataclass
class LinearizationResult:
    case: CaseTag
    status: str = "pending"
    pair: tuple | None = None
    transformation: PointTransformation | None = None
    trace: object = None
    target: OdeSpec | None = None
    verified: dict = field(default_factory=dict)
    eigen: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    analysis: Analysis | None = None
    timing: dict = field(default_factory=dict)

    @property
    def solved(self) -> bool:
        return self.status == "solved"

    def passed(self) -> bool:
        return all(v in (PROVED, PROBABILISTIC) for v in self.verified.values())


# ---------------------------------------------------------------------------
# canonical algebras


def _exp_solutions(lam_sum, lam_prod):
    """Two non-constant solutions s of s''' = (l+m) s'' - l m s' (in X)."""
    lam_sum, lam_prod = sp.sympify(lam_sum), sp.sympify(lam_prod)
    disc = sp.radsimp(lam_sum**2 - 4 * lam_prod)
    if disc == 0:
        lam = lam_sum / 2
        return [sp.exp(lam * X), X * sp.exp(lam * X)]
    if disc.is_negative:
        a = lam_sum / 2
        b = sp.sqrt(-disc) / 2
        return [sp.exp(a * X) * sp.cos(b * X), sp.exp(a * X) * sp.sin(b * X)]
    r = sp.sqrt(disc)
    return [sp.exp(sp.radsimp((lam_sum + r) / 2) * X), sp.exp(sp.radsimp((lam_sum - r) / 2) * X)]


def canonical_algebra(kind: str, N: int = 3, phi=None, lam_sum=None, lam_prod=None) -> list[VectorField]:
    """Generators, in (X, Y), of the symmetry algebra of the canonical target."""
    if kind == MAXIMAL:
        d = N - 1
        gens = [VectorField(1, 0), VectorField(X, 0), VectorField(X**2, d * X * Y), VectorField(0, Y)]
        gens += [VectorField(0, X**j) for j in range(N)]
        return gens
    if kind == SOLVABLE4:
        return [VectorField(0, Y), VectorField(0, 1), VectorField(0, X), VectorField(0, phi)]
    s1, s2 = _exp_solutions(lam_sum, lam_prod)
    return [VectorField(1, 0), VectorField(0, Y), VectorField(0, 1), VectorField(0, s1), VectorField(0, s2)]


def _target_ode(kind: str, N: int, phi=None, lam_sum=None, lam_prod=None) -> OdeSpec:
    if kind == MAXIMAL:
        return OdeSpec(N, sp.S.Zero)
    if kind == SOLVABLE4:
        p = phi.xreplace({X: x})
        return OdeSpec(3, normalize(sp.cancel(sp.diff(p, x, 3) / sp.diff(p, x, 2))) * jet(2))
    return OdeSpec(3, sp.sympify(lam_sum) * jet(2) - sp.sympify(lam_prod) * jet(1))


_ORDER = {PROVED: 0, PROBABILISTIC: 1, INDETERMINATE: 2, FAILED: 3}


def _worst(verdicts) -> str:
    verdicts = list(verdicts)
    return max(verdicts, key=lambda v: _ORDER[v]) if verdicts else PROVED


def check_canonical_image(L, T: PointTransformation, canon, params=None, seed=0) -> str:
    """Does every generator map into the span of the canonical generators?"""
    pulled = [field_in_source(G, T) for G in canon]
    basis = [(g.xi, g.eta) for g in pulled]
    verdicts = []
    for f in L.fields:
        found = express_in_span((f.xi, f.eta), basis, L.K, params, seed)
        if found is None:
            return FAILED
        verdicts.append(found[1].verdict)
    return _worst(verdicts)


# ---------------------------------------------------------------------------
# analysis / classification


def _maximal(an: Analysis, N, params, seed) -> CaseTag:
    L = an.L
    lev = levi_decomposition(L)
    an.levi = lev
    if len(lev.levi) != 3:
        return CaseTag.not_covered(f"Levi factor has dimension {len(lev.levi)}, expected 3")
    an.triple = sl2_standard_triple(L, lev.levi)
    an.decomposition = decompose_radical(L, an.triple, lev.radical)
    an.pair = select_linearizing_pair(L, an.decomposition, N, params, seed)
    return CaseTag(MAXIMAL, N)


def _rank1_abelian_derived(an: Analysis, params, seed) -> CaseTag | None:
    L = an.L
    D = derived_algebra(L)
    an.derived = D
    if len(D) != 3:
        return CaseTag.not_covered(f"derived algebra has dimension {len(D)}, expected 3")
    if L.brackets_span(D, D):
        return CaseTag.not_covered("derived algebra is not abelian")
    r = generic_rank([L.field_of(d) for d in D], 0, params, seed)
    if r != 1:
        return CaseTag.not_covered(f"derived algebra has rank {r}, expected 1")
    return None


def _solvable4(an: Analysis, params, seed) -> CaseTag:
    L = an.L
    bad = _rank1_abelian_derived(an, params, seed)
    if bad:
        return bad
    r = generic_rank(L.fields, 0, params, seed)
    if r != 1:
        return CaseTag.not_covered(f"algebra has rank {r}, expected 1")
    (q,) = la.complement(an.derived, L.dim, L.K)
    M = L.restricted_ad(q, an.derived)
    c = M[0][0]
    if c == L.K.zero or any(M[i][j] != (c if i == j else L.K.zero) for i in range(3) for j in range(3)):
        eig = adjoint_eigen(L, q, an.derived)
        vals = [str(e.value) for e in eig]
        return CaseTag.not_covered(
            f"complement does not act on the derived algebra as a nonzero scalar (eigenvalues {vals})"
        )
    an.scalar = c
    an.q = la.scale(-L.K.one / c, q)
    return CaseTag(SOLVABLE4, 3)


def _scalar_element(L, A, D):
    """Element of span(A) acting on D as a nonzero multiple of the identity, scaled to -1."""
    K = L.K
    mats = [L.restricted_ad(a, D) for a in A]
    n = len(D)
    rows = []
    for i in range(n):
        for j in range(n):
            rows.append([m[i][j] for m in mats] + [-K.one if i == j else K.zero])
    for v in la.nullspace(rows, len(A) + 1, K):
        k = v[-1]
        if not K.is_zero(k):
            return la.lincomb([-c / k for c in v[:-1]], A, K)
    return None


def _solvable5(an: Analysis, params, seed) -> CaseTag:
    L = an.L
    K = L.K
    bad = _rank1_abelian_derived(an, params, seed)
    if bad:
        return bad
    D = an.derived
    A = abelian_complement(L, D)
    if A is None:
        return CaseTag.not_covered("derived algebra has no abelian complement")
    an.complement = A
    e2 = _scalar_element(L, A, D)
    if e2 is None:
        return CaseTag.not_covered("no complement element acts on the derived algebra as a nonzero scalar")
    an.e2 = e2
    (a,) = la.complement_in(la.span([e2], K), A, K)
    eig = adjoint_eigen(L, a, D)
    tried = []
    for e in eig:
        if e.kind != "base":
            continue
        nu = K.from_sympy(e.value)
        e1 = la.add(a, la.scale(nu, e2))
        for w in e.vectors:
            Z = centralizer(L, w, A)
            tried.append(str(e.value))
            if len(Z) != 1:
                continue
            z = e1 if la.contains(Z, e1, K) else Z[0]
            if generic_rank([L.field_of(z), L.field_of(w)], 0, params, seed) != 2:
                continue
            coeffs = la.charpoly(L.restricted_ad(z, D), K)
            lam_sum = sp.radsimp(-K.to_sympy(coeffs[1]))
            lam_prod = sp.radsimp(K.to_sympy(coeffs[2]))
            if not K.is_zero(coeffs[3]) or lam_prod == 0:
                continue
            an.e1, an.w, an.Z = e1, w, z
            an.lam_sum, an.lam_prod = lam_sum, lam_prod
            an.eigenvalues = [e.value for e in adjoint_eigen(L, z, D)]
            disc = sp.radsimp(lam_sum**2 - 4 * lam_prod)
            if disc == 0:
                return CaseTag(REPEATED, 3)
            if disc.is_negative:
                return CaseTag(COMPLEX, 3)
            return CaseTag(REAL_DISTINCT, 3)
    return CaseTag.not_covered(
        "no weight-zero vector w with <Z_A(w), w> of rank 2" + (f" (tried eigenvalues {tried})" if tried else "")
    )


def analyze(
    fields,
    N: int,
    params: ParameterTable | None = None,
    seed: int = 0,
    labels=None,
    extension: int | None = None,
) -> tuple[CaseTag, Analysis]:
    an = Analysis()
    try:
        an.L = structure_constants(fields, labels, params, extension, seed)
    except LieAlgebraError as exc:
        an.failure = str(exc)
        return CaseTag.not_covered(an.failure), an
    m = an.L.dim
    allowed = [N + 4] if N != 3 else [4, 5, 7]
    try:
        if m == N + 4:
            return _maximal(an, N, params, seed), an
        if N == 3 and m == 4:
            return _solvable4(an, params, seed), an
        if N == 3 and m == 5:
            return _solvable5(an, params, seed), an
    except (LieAlgebraError, RectificationError) as exc:
        an.failure = str(exc)
        return CaseTag.not_covered(an.failure), an
    shown = "{" + ",".join(str(v) for v in allowed) + "}"
    return CaseTag.not_covered(f"dimension {m} not in {shown}"), an


def classify(fields, N: int, params: ParameterTable | None = None, seed: int = 0, labels=None) -> CaseTag:
    return analyze(fields, N, params, seed, labels)[0]


# ---------------------------------------------------------------------------
# pipelines


def _finish(res: LinearizationResult, ode: OdeSpec, canon, params, seed):
    L = res.analysis.L
    T = res.transformation
    res.verified["jacobian-nonzero"] = FAILED if T.check_jacobian(params, seed).value else PROVED
    res.verified["canonical-algebra"] = check_canonical_image(L, T, canon, params, seed)
    res.verified["pullback"] = pullback_check(ode, T, res.target, params, seed).verdict
    res.status = "solved" if res.passed() else "verification-failed"
    return res


def _unsolved(res: LinearizationResult, residual, what: str):
    res.status = "unsolved"
    res.residual = list(residual)
    res.messages.append(f"{what}: quadrature outside the supported patterns; emitted the remaining system")
    return res


def linearize_maximal(an: Analysis, N: int, ode: OdeSpec, params=None, seed=0, integrate=True, candidate=None):
    L = an.L
    res = LinearizationResult(CaseTag(MAXIMAL, N), analysis=an)
    pair = an.pair
    res.pair = (L.describe(pair.A), L.describe(pair.B))
    res.target = _target_ode(MAXIMAL, N)
    canon = canonical_algebra(MAXIMAL, N)
    if candidate is not None:
        res.transformation = candidate
        res.messages.append("verification-only mode: using the supplied transformation")
        return _finish(res, ode, canon, params, seed)
    A_f, B_f = pair.fields
    rect = rectify_pair(A_f, B_f, params, seed, integrate)
    for k, v in rect.verdicts.items():
        res.verified[f"rectify:{k}"] = v
    if not rect.solved:
        return _unsolved(res, rect.residual, "rectify_pair")
    H_f, Y_f = L.field_of(pair.triple.H), L.field_of(pair.triple.Y)
    T, trace = affine_normalize(H_f, Y_f, rect.transformation, N, params, seed)
    res.transformation, res.trace = T, trace
    return _finish(res, ode, canon, params, seed)


def _phi_in_target(psi, T: PointTransformation, params, seed):
    if T.inverse is None:
        return None
    phi = T.to_target(psi)
    if phi.has(Y):
        phi = normalize(sp.simplify(phi))
        if phi.has(Y) and not is_zero(sp.diff(phi, Y), params, seed):
            return None
        phi = normalize(phi.subs(Y, 1))
    return phi


def linearize_dim4(an: Analysis, ode: OdeSpec, params=None, seed=0, integrate=True, candidate=None):
    L = an.L
    res = LinearizationResult(CaseTag(SOLVABLE4, 3), analysis=an)
    f1, f2, f3 = (L.field_of(d) for d in an.derived)
    res.pair = (L.describe(an.derived[0]), L.describe(an.derived[1]))
    res.eigen = {"quotient_eigenvalue_raw": to_text(L.K.to_sympy(an.scalar)), "quotient_eigenvalue": "-1"}
    if candidate is not None:
        T = candidate
        res.messages.append("verification-only mode: using the supplied transformation")
    else:
        rect = rectify_rank1_pair(f1, f2, params, seed, integrate)
        for k, v in rect.verdicts.items():
            res.verified[f"rectify:{k}"] = v
        if not rect.solved:
            return _unsolved(res, rect.residual, "rectify_rank1_pair")
        T = rect.transformation
    res.transformation = T
    base = f1.eta if not is_zero(f1.eta, params, seed) else f1.xi
    comp = f3.eta if base is f1.eta else f3.xi
    psi = normalize(sp.cancel(comp / base))
    phi = _phi_in_target(psi, T, params, seed)
    if phi is None:
        res.status = "unsolved"
        res.messages.append("could not express the third derived generator in the new coordinates")
        return res
    if is_zero(sp.diff(phi, X, 2), params, seed):
        res.status = "hypothesis-failure"
        res.messages.append("phi'' vanishes identically: 1, x, phi are linearly dependent")
        res.verified["phi''-nonzero"] = FAILED
        return res
    res.verified["phi''-nonzero"] = PROVED
    res.eigen["phi"] = to_text(phi.xreplace({X: x}))
    res.target = _target_ode(SOLVABLE4, 3, phi=phi)
    return _finish(res, ode, canonical_algebra(SOLVABLE4, phi=phi), params, seed)


def linearize_dim5(an: Analysis, tag: CaseTag, ode: OdeSpec, params=None, seed=0, integrate=True, candidate=None):
    L = an.L
    res = LinearizationResult(tag, analysis=an)
    res.pair = (L.describe(an.Z), L.describe(an.w))
    lam, mu = sp.symbols("lam mu")
    roots = sp.solve(lam**2 - an.lam_sum * lam + an.lam_prod, lam)
    res.eigen = {
        "lambda+mu": to_text(an.lam_sum),
        "lambda*mu": to_text(an.lam_prod),
        "lambda,mu": [to_text(sp.radsimp(r)) for r in roots],
        "eigenvalues_Z": [to_text(v) for v in an.eigenvalues],
        "k": "-1",
    }
    res.target = _target_ode(tag.kind, 3, lam_sum=an.lam_sum, lam_prod=an.lam_prod)
    canon = canonical_algebra(tag.kind, lam_sum=an.lam_sum, lam_prod=an.lam_prod)
    if candidate is not None:
        res.transformation = candidate
        res.messages.append("verification-only mode: using the supplied transformation")
        return _finish(res, ode, canon, params, seed)
    rect = rectify_pair(L.field_of(an.Z), L.field_of(an.w), params, seed, integrate)
    for k, v in rect.verdicts.items():
        res.verified[f"rectify:{k}"] = v
    if not rect.solved:
        return _unsolved(res, rect.residual, "rectify_pair")
    res.transformation = rect.transformation
    return _finish(res, ode, canon, params, seed)


def linearize(
    fields,
    N: int,
    ode: OdeSpec,
    params: ParameterTable | None = None,
    seed: int = 0,
    labels=None,
    force: bool = False,
    integrate: bool = True,
    candidate: PointTransformation | None = None,
    extension: int | None = None,
) -> LinearizationResult:
    """Classify the algebra spanned by ``fields`` and linearize ``ode`` accordingly."""
    fields = list(fields)
    labels = list(labels) if labels else [f"e{i + 1}" for i in range(len(fields))]
    timing = {}
    t0 = time.perf_counter()
    sym = {}
    for lab, f in zip(labels, fields):
        sym[f"symmetry:{lab}"] = is_symmetry(f, ode, params, seed).verdict
    timing["symmetry"] = time.perf_counter() - t0
    failed = [k.split(":", 1)[1] for k, v in sym.items() if v in (FAILED, INDETERMINATE)]
    if failed and not force:
        res = LinearizationResult(CaseTag.not_covered("failed symmetry check"), status="refused", verified=sym)
        res.messages.append(f"refusing to proceed: not a symmetry: {', '.join(failed)} (use --force to override)")
        res.timing = timing
        return res
    notes = [f"--force: continued past failed symmetry checks for {', '.join(failed)}"] if failed else []

    bind = params.sample_bindings() if params else {}
    ode_s = OdeSpec(ode.order, ode.rhs.xreplace(bind)) if bind else ode
    t1 = time.perf_counter()
    tag, an = analyze(fields, N, params, seed, labels, extension)
    timing["classify"] = time.perf_counter() - t1
    if not tag.covered:
        # a dimension outside the families is "not covered"; a failed structural hypothesis is reported as such
        status = "hypothesis-failure" if an.failure else "not-covered"
        res = LinearizationResult(tag, status=status, verified=sym, analysis=an)
        res.messages += [tag.reason, *notes]
        res.timing = timing
        return res
    if N < 3:
        res = LinearizationResult(tag, status="refused", verified=sym, analysis=an)
        res.messages.append("linearization from the symmetry algebra requires N >= 3")
        res.timing = timing
        return res
    if candidate is not None and bind:
        candidate = PointTransformation(
            candidate.P.xreplace(bind),
            candidate.Q.xreplace(bind),
            None if candidate.inverse is None else tuple(e.xreplace(bind) for e in candidate.inverse),
        )
    t2 = time.perf_counter()
    try:
        if tag.kind == MAXIMAL:
            res = linearize_maximal(an, N, ode_s, params, seed, integrate, candidate)
        elif tag.kind == SOLVABLE4:
            res = linearize_dim4(an, ode_s, params, seed, integrate, candidate)
        else:
            res = linearize_dim5(an, tag, ode_s, params, seed, integrate, candidate)
    except (RectificationError, LieAlgebraError) as exc:
        res = LinearizationResult(tag, status="hypothesis-failure", analysis=an)
        res.messages.append(str(exc))
    timing["linearize"] = time.perf_counter() - t2
    res.verified = {**sym, **res.verified}
    res.timing = timing
    res.messages += notes
    return res
