"""The radical as a module over an sl(2) triple.

Highest-weight vectors are the kernel of ad X inside the radical; each one
of weight d spans an irreducible component ``v, Yv, ..., Y^d v``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import linalg as la
from .liestruct import LieAlgebraError, LieAlgebraStructure, Sl2Triple, adjoint_eigen
from .planefield import generic_rank
from .symexpr import ParameterTable

__all__ = [
    "Component",
    "ModuleDecomposition",
    "LinearizingPair",
    "decompose_radical",
    "select_linearizing_pair",
]


@dataclass
class Component:
    highest: list
    weight: int
    basis: list

    @property
    def dim(self) -> int:
        return len(self.basis)


@dataclass
class ModuleDecomposition:
    components: list
    triple: Sl2Triple
    swapped: bool = False
    kernel_dim: int = 0

    @property
    def count(self) -> int:
        return len(self.components)

    def dims(self) -> list[int]:
        return [c.dim for c in self.components]

    def subspaces(self, K) -> list:
        return [la.span(c.basis, K) for c in self.components]


def _try_decompose(L: LieAlgebraStructure, triple: Sl2Triple, R) -> ModuleDecomposition:
    K = L.K
    if not R:
        return ModuleDecomposition([], triple)
    for g in (triple.X, triple.Y, triple.H):
        for r in R:
            if not la.contains(R, L.bracket(g, r), K):
                raise LieAlgebraError("radical is not invariant under the sl(2) triple")
    M = L.restricted_ad(triple.X, R)
    kernel = [la.lincomb(v, R, K) for v in la.nullspace(M, len(R), K)]
    eig = adjoint_eigen(L, triple.H, kernel)
    components = []
    for e in eig:
        d = e.value
        if e.kind != "base" or not (d.is_integer and d >= 0):
            raise LieAlgebraError(f"H-eigenvalue {d} on ker ad X is not a nonnegative integer")
        if len(e.vectors) != e.multiplicity:
            raise LieAlgebraError("H is not diagonalizable on ker ad X")
        d = int(d)
        for v in la.span(e.vectors, K):
            chain = [v]
            for _ in range(d):
                chain.append(L.bracket(triple.Y, chain[-1]))
            if la.rank(chain, K) != d + 1 or not la.is_zero_vector(L.bracket(triple.Y, chain[-1]), K):
                raise LieAlgebraError(f"weight-{d} vector does not generate a {d + 1}-dimensional component")
            components.append(Component(v, d, chain))
    components.sort(key=lambda c: -c.weight)
    allvecs = [b for c in components for b in c.basis]
    if len(allvecs) != len(R) or not la.subspace_eq(allvecs, R, K):
        raise LieAlgebraError("components do not rebuild the radical")
    return ModuleDecomposition(components, triple, kernel_dim=len(kernel))


def decompose_radical(L: LieAlgebraStructure, triple: Sl2Triple, R) -> ModuleDecomposition:
    """Irreducible components of the radical, retrying with the opposite orientation."""
    try:
        return _try_decompose(L, triple, R)
    except LieAlgebraError as first:
        try:
            dec = _try_decompose(L, triple.swapped(), R)
        except LieAlgebraError as second:
            raise LieAlgebraError(
                f"radical is not a polynomial module in either orientation ({first}; {second})"
            ) from None
        dec.swapped = True
        return dec


@dataclass
class LinearizingPair:
    """Commuting rank-2 pair (A, B) with the triple oriented so that A plays X."""

    A: list
    B: list
    fields: tuple
    triple: Sl2Triple
    swapped: bool
    weight_vector: list = field(default_factory=list)


def select_linearizing_pair(
    L: LieAlgebraStructure,
    dec: ModuleDecomposition,
    N: int,
    params: ParameterTable | None = None,
    seed: int = 0,
) -> LinearizingPair:
    if sorted(dec.dims(), reverse=True) != [N, 1]:
        raise LieAlgebraError(f"component shape {dec.dims()} is not [{N}, 1]")
    R_fields = [L.field_of(b) for c in dec.components for b in c.basis]
    r = generic_rank(R_fields, 0, params, seed)
    if r != 1:
        raise LieAlgebraError(f"radical has rank {r}, expected 1")
    top = next(c for c in dec.components if c.dim == N)
    t = dec.triple
    V = top.highest
    X_f, V_f = L.field_of(t.X), L.field_of(V)
    if generic_rank([X_f, V_f], 0, params, seed) == 2:
        return LinearizingPair(t.X, V, (X_f, V_f), t, False, top.basis[-1])
    low = top.basis[-1]
    Y_f, low_f = L.field_of(t.Y), L.field_of(low)
    if generic_rank([Y_f, low_f], 0, params, seed) == 2:
        return LinearizingPair(t.Y, low, (Y_f, low_f), t.swapped(), True, V)
    raise LieAlgebraError("neither (X, V) nor (Y, lowest-weight vector) has rank 2")
