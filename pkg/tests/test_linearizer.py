import random

import pytest
import sympy as sp

from lielin.linearizer import (
    COMPLEX,
    MAXIMAL,
    REAL_DISTINCT,
    REPEATED,
    SOLVABLE4,
    CaseTag,
    analyze,
    canonical_algebra,
    classify,
    linearize,
)
from lielin.planefield import OdeSpec, PointTransformation, VectorField, field_in_source, pullback_check, pullback_ode
from lielin.symexpr import X, Y, is_zero, jet, x, y

from conftest import analysis, problem

V = VectorField


def _target(kind, N=3, phi=None, s=None, p=None):
    if kind == MAXIMAL:
        return OdeSpec(N, sp.S.Zero)
    if kind == SOLVABLE4:
        return OdeSpec(3, sp.cancel(sp.diff(phi, X, 3) / sp.diff(phi, X, 2)).xreplace({X: x}) * jet(2))
    return OdeSpec(3, s * jet(2) - p * jet(1))


def conjugated(kind, T, N=3, phi=None, s=None, p=None):
    """Canonical algebra and ODE written in source coordinates through T."""
    canon = canonical_algebra(kind, N, phi, s, p)
    fields = [field_in_source(G, T) for G in canon]
    return fields, pullback_ode(_target(kind, N, phi, s, p), T)


EXP_MAP = PointTransformation(x, sp.exp(y), (X, sp.log(Y)))


# --- classification ------------------------------------------------------------


@pytest.mark.parametrize(
    "name, expected",
    [
        ("class1", "Solvable4"),
        ("class2a", "Solvable5Complex"),
        ("class2b", "Solvable5Complex"),
        ("class3", "MaximalSymmetry(3)"),
        ("order4", "MaximalSymmetry(4)"),
        ("order5", "MaximalSymmetry(5)"),
        ("free3", "MaximalSymmetry(3)"),
        ("dim6", 'NotCovered("dimension 6 not in {4,5,7}")'),
    ],
)
def test_fixture_classification(name, expected):
    tag, _ = analysis(name)
    assert str(tag) == expected


def test_canonical_dim5_real_distinct():
    fields = canonical_algebra(REAL_DISTINCT, lam_sum=3, lam_prod=2)
    assert fields == [V(1, 0), V(0, Y), V(0, 1), V(0, sp.exp(2 * X)), V(0, sp.exp(X))]
    tag = classify([f.subs({X: x, Y: y}) for f in fields], 3)
    assert tag.kind == REAL_DISTINCT


@pytest.mark.parametrize("s, p, kind", [(3, 2, REAL_DISTINCT), (2, 1, REPEATED), (-2, 1, REPEATED), (1, 1, COMPLEX)])
def test_canonical_dim5_subcases(s, p, kind):
    canon = canonical_algebra(kind, lam_sum=s, lam_prod=p)
    fields = [f.subs({X: x, Y: y}) for f in canon]
    ode = _target(kind, s=s, p=p).rhs.xreplace({X: x})
    res = linearize(fields, 3, OdeSpec(3, ode))
    assert res.case.kind == kind and res.solved and res.passed()
    # X -> -X flips the sign of lambda + mu, so only |lambda + mu| and lambda*mu are invariant
    got = sp.Poly(res.target.rhs, jet(1), jet(2))
    assert abs(got.coeff_monomial(jet(2))) == abs(s) and got.coeff_monomial(jet(1)) == -p
    assert pullback_check(OdeSpec(3, ode), res.transformation, res.target).verdict == "proved"


@pytest.mark.parametrize(
    "phi, rhs",
    [
        (X**3, jet(2) / x),
        (sp.exp(X), jet(2)),
        (sp.exp(2 * X), 2 * jet(2)),
        (X * sp.exp(X), (x + 3) / (x + 2) * jet(2)),
    ],
)
def test_canonical_dim4_targets(phi, rhs):
    fields = [f.subs({X: x, Y: y}) for f in canonical_algebra(SOLVABLE4, phi=phi)]
    ode = OdeSpec(3, rhs)
    res = linearize(fields, 3, ode)
    assert res.case.kind == SOLVABLE4 and res.solved and res.passed()
    assert pullback_check(ode, res.transformation, res.target).verdict == "proved"


def test_dim4_rejects_affine_phi():
    # phi'' = 0 gives an abelian derived algebra of the wrong shape
    fields = [V(0, y), V(0, 1), V(0, x), V(0, 2 * x + 1)]
    assert not classify(fields, 3).covered


def test_six_dimensional_not_covered():
    fields = [V(1, 0), V(0, 1), V(x, 0), V(0, y), V(0, x), V(0, x**2 + y)]
    tag = classify(fields, 3)
    assert str(tag) == 'NotCovered("dimension 6 not in {4,5,7}")'
    assert tag == CaseTag.not_covered("dimension 6 not in {4,5,7}")


def test_maximal_requires_matching_dimension():
    fields = canonical_algebra(MAXIMAL, 3)
    tag = classify([f.subs({X: x, Y: y}) for f in fields], 4)
    assert not tag.covered


# --- invariance ----------------------------------------------------------------


def _random_basis_change(fields, rng):
    n = len(fields)
    while True:
        M = sp.Matrix(n, n, lambda i, j: rng.randint(-2, 2))
        if M.det() != 0:
            break
    out = []
    for i in range(n):
        acc = V(0, 0)
        for j in range(n):
            if M[i, j]:
                acc = acc + fields[j] * M[i, j]
        out.append(acc)
    return out


@pytest.mark.parametrize("name, seed", [("class1", 7), ("class2a", 3), ("class3", 11)])
def test_classification_invariant_under_basis_change(name, seed):
    p = problem(name)
    b = p.params.sample_bindings()
    base = [f.subs(b) for f in p.fields]
    mixed = _random_basis_change(base, random.Random(seed))
    tag, _ = analyze(mixed, p.order, None, 0, None, p.extension)
    assert tag == analysis(name)[0]


@pytest.mark.parametrize("c", [2, sp.Rational(1, 3), -5])
def test_classification_invariant_under_scaling(c):
    p = problem("class1")
    scaled = [f * c for f in p.fields]
    assert classify(scaled, 3).kind == SOLVABLE4


def test_classification_invariant_under_point_map():
    fields, _ = conjugated(REAL_DISTINCT, EXP_MAP, s=3, p=2)
    assert classify(fields, 3).kind == REAL_DISTINCT


# --- end to end ------------------------------------------------------------------


@pytest.mark.parametrize("name", ["class1", "class2a", "class2b", "class3", "order4", "order5", "free3"])
def test_fixture_linearizes_with_proofs(name):
    p = problem(name)
    res = linearize(p.fields, p.order, p.ode, p.params, 0, p.labels, extension=p.extension)
    assert res.solved
    assert set(res.verified.values()) == {"proved"}


def test_class1_transformation():
    p = problem("class1")
    res = linearize(p.fields, 3, p.ode, p.params, 0, p.labels)
    T = res.transformation
    assert (T.P, T.Q) == (x, sp.exp(y))
    assert is_zero(res.target.rhs - (x + 3) / (x + 2) * jet(2))


def test_class2a_transformation():
    p = problem("class2a")
    res = linearize(p.fields, 3, p.ode, p.params, 0, p.labels, extension=p.extension)
    T = res.transformation
    assert (T.P, T.Q) == (y, x * sp.exp(y))


def test_order5_transformation_is_swap():
    p = problem("order5")
    res = linearize(p.fields, 5, p.ode, p.params, 0, p.labels)
    assert (res.transformation.P, res.transformation.Q) == (y, x)
    assert res.target.rhs == 0


@pytest.mark.parametrize(
    "kind, kw",
    [
        (SOLVABLE4, {"phi": X**3}),
        (REAL_DISTINCT, {"s": 3, "p": 2}),
        (REPEATED, {"s": 2, "p": 1}),
        (COMPLEX, {"s": 1, "p": 1}),
    ],
)
def test_conjugated_canonical_round_trip(kind, kw):
    fields, ode = conjugated(kind, EXP_MAP, **kw)
    res = linearize(fields, 3, ode)
    assert res.case.kind == kind and res.solved and res.passed()
    assert pullback_check(ode, res.transformation, res.target).verdict in ("proved", "probabilistically-verified")


def test_refuses_non_symmetry():
    p = problem("class1")
    fields = list(p.fields[:3]) + [V(0, x**2 * sp.exp(-y))]
    res = linearize(fields, 3, p.ode)
    assert res.status == "refused"
    assert "e4" in res.messages[0]


def test_force_continues_past_refusal():
    p = problem("class1_x2")
    res = linearize(p.fields, 3, p.ode, p.params, 0, p.labels, force=True)
    assert res.status == "hypothesis-failure" and res.transformation is None
    assert any("--force" in m for m in res.messages)


def test_low_order_refused():
    fields = [V(1, 0), V(0, 1), V(0, x)]
    res = linearize(fields, 2, OdeSpec(2, sp.S.Zero))
    assert res.status in ("refused", "not-covered")


def test_candidate_verification_only():
    p = problem("class3")
    res = linearize(
        p.fields, 3, p.ode, p.params, 0, p.labels, integrate=False, candidate=p.transform
    )
    assert res.passed()
