"""Dense exact linear algebra over a sympy domain (QQ or a quadratic field).

Vectors are lists of domain elements, matrices lists of rows.  Sizes here
never exceed a dozen, so plain Gauss-Jordan is all we need.
"""

from __future__ import annotations

from sympy.polys.domains import QQ


def zeros(m, n, K=QQ):
    return [[K.zero] * n for _ in range(m)]


def identity(n, K=QQ):
    M = zeros(n, n, K)
    for i in range(n):
        M[i][i] = K.one
    return M


def transpose(M):
    return [list(r) for r in zip(*M)] if M else []


def matmul(A, B, K=QQ):
    Bt = transpose(B)
    return [[sum((a * b for a, b in zip(row, col)), K.zero) for col in Bt] for row in A]


def matvec(A, v, K=QQ):
    return [sum((a * b for a, b in zip(row, v)), K.zero) for row in A]


def add(u, v):
    return [a + b for a, b in zip(u, v)]


def scale(c, v):
    return [c * a for a in v]


def lincomb(coeffs, vectors, K=QQ):
    n = len(vectors[0]) if vectors else 0
    out = [K.zero] * n
    for c, v in zip(coeffs, vectors):
        if c:
            out = [o + c * a for o, a in zip(out, v)]
    return out


def is_zero_vector(v, K=QQ):
    return all(K.is_zero(a) for a in v)


def rref(M, K=QQ):
    """Reduced row echelon form; returns (rows, pivot columns)."""
    A = [list(r) for r in M]
    if not A:
        return [], []
    m, n = len(A), len(A[0])
    pivots = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, m) if not K.is_zero(A[i][c])), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        inv = K.one / A[r][c]
        A[r] = [inv * a for a in A[r]]
        for i in range(m):
            if i != r and not K.is_zero(A[i][c]):
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    return A[:r], pivots


def rank(M, K=QQ) -> int:
    return len(rref(M, K)[1])


def nullspace(M, n=None, K=QQ):
    """Basis of {v : M v = 0}; ``n`` is the number of columns when M is empty."""
    if not M:
        return identity(n, K) if n else []
    ncols = len(M[0])
    R, piv = rref(M, K)
    free = [j for j in range(ncols) if j not in piv]
    basis = []
    for f in free:
        v = [K.zero] * ncols
        v[f] = K.one
        for row, p in zip(R, piv):
            v[p] = -row[f]
        basis.append(v)
    return basis


def solve(A, b, K=QQ):
    """One solution of A v = b with free variables set to zero, or None."""
    if not A:
        return None
    aug = [list(r) + [bi] for r, bi in zip(A, b)]
    n = len(A[0])
    R, piv = rref(aug, K)
    if n in piv:
        return None
    v = [K.zero] * n
    for row, p in zip(R, piv):
        v[p] = row[n]
    return v


def span(vectors, K=QQ):
    """Row-reduced basis of the span."""
    vectors = [v for v in vectors]
    if not vectors:
        return []
    return rref(vectors, K)[0]


def contains(basis, v, K=QQ) -> bool:
    return rank(list(basis) + [v], K) == rank(basis, K) if basis else is_zero_vector(v, K)


def subspace_le(A, B, K=QQ) -> bool:
    return all(contains(B, v, K) for v in A)


def subspace_eq(A, B, K=QQ) -> bool:
    return rank(A, K) == rank(B, K) and subspace_le(A, B, K)


def coordinates(basis, v, K=QQ):
    """Coefficients of v in the given (independent) basis, or None."""
    if not basis:
        return [] if is_zero_vector(v, K) else None
    return solve(transpose(basis), v, K)


def complement(sub, n, K=QQ):
    """Standard basis vectors completing ``sub`` to the whole space (greedy, in order)."""
    chosen = list(sub)
    out = []
    for i in range(n):
        e = [K.zero] * n
        e[i] = K.one
        if not contains(chosen, e, K):
            chosen.append(e)
            out.append(e)
    return out


def complement_in(sub, ambient, K=QQ):
    """Vectors of ``ambient`` (greedy, in order) completing ``sub`` to span(ambient)."""
    chosen = list(sub)
    out = []
    for v in ambient:
        if not contains(chosen, v, K):
            chosen.append(v)
            out.append(v)
    return out


def intersection(A, B, K=QQ):
    if not A or not B:
        return []
    # solve sum a_i A_i - sum b_j B_j = 0
    M = transpose(list(A) + [scale(-K.one, b) for b in B])
    out = []
    for sol in nullspace(M, K=K):
        out.append(lincomb(sol[: len(A)], A, K))
    return span(out, K)


def trace(M, K=QQ):
    return sum((M[i][i] for i in range(len(M))), K.zero)


def charpoly(M, K=QQ):
    """Coefficients [1, c1, ..., cn] of det(t I - M) (Faddeev-LeVerrier)."""
    n = len(M)
    coeffs = [K.one]
    Mk = identity(n, K)
    for k in range(1, n + 1):
        AM = matmul(M, Mk, K)
        c = -trace(AM, K) / K.convert(k)
        coeffs.append(c)
        Mk = [[AM[i][j] + (c if i == j else K.zero) for j in range(n)] for i in range(n)]
    return coeffs
