"""Minimax chain-cost kernels.

The cost of a chain of nodes is the largest dissimilarity on any of its
links; the minimax cost between two nodes is the smallest such cost over
all chains connecting them.  Taking minimax costs of every pair turns an
arbitrary symmetric dissimilarity into the largest ultrametric dominated
by it (single linkage).  Three routes are provided:

* :func:`minimax_closure` -- the canonical O(n^3) (min, max)-semiring
  closure (Floyd-Warshall with max in place of +, min in place of min-plus's
  min).  Branch-free and deterministic; every output entry is one of the
  input entries, so no floating-point arithmetic happens at all.
* :func:`minimax_closure_kruskal` -- union-find single linkage over edges
  sorted by weight; an independent implementation kept as a cross-check.
* :func:`brute_force_minimax` -- literal enumeration of all simple chains
  between one pair; the ground-truth oracle for small inputs.

Revisiting a node can never lower a max-of-links objective (dropping the
loop between the repeated visits leaves a sub-chain whose maximum link is
no larger), so enumeration over *simple* chains is complete.  The test
suite exercises this lemma directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .core import IntervalMetricSpace, SizeLimitError, prepared

#: Largest n for which the chain-enumeration oracle will run.
ORACLE_LIMIT = 8


def _check_dissimilarity(d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {d.shape}")
    if not np.isfinite(d).all():
        raise ValueError("dissimilarity matrix contains non-finite entries")
    if not np.array_equal(d, d.T):
        i, j = np.argwhere(d != d.T)[0]
        raise ValueError(f"matrix is asymmetric at ({i}, {j}): {d[i, j]!r} vs {d[j, i]!r}")
    if np.diag(d).any():
        raise ValueError("diagonal must be exactly zero")
    if (d < 0).any():
        raise ValueError("entries must be nonnegative")
    return d


def minimax_closure(d) -> np.ndarray:
    """Minimax chain cost between every pair of nodes.

    Returns the largest ultrametric bounded above by ``d`` elementwise.
    Output entries are selections of input entries; all comparisons are
    exact and the result is independent of any tie-breaking.
    """
    d = _check_dissimilarity(d)
    out = d.copy()
    n = out.shape[0]
    for k in range(n):
        np.minimum(out, np.maximum.outer(out[:, k], out[k, :]), out=out)
    out.flags.writeable = False
    return out


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def minimax_closure_kruskal(d) -> np.ndarray:
    """Single-linkage route to the same closure, via union-find.

    Edges are scanned in nondecreasing weight order; when an edge first
    connects two components, its weight is the minimax cost for every
    cross pair.  Kept as an independent check of :func:`minimax_closure`.
    """
    d = _check_dissimilarity(d)
    n = d.shape[0]
    out = np.zeros_like(d)
    uf = _UnionFind(n)
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    pairs = sorted(((d[i, j], i, j) for i in range(n) for j in range(i + 1, n)))
    for w, i, j in pairs:
        ri, rj = uf.find(i), uf.find(j)
        if ri == rj:
            continue
        for a in members[ri]:
            for b in members[rj]:
                out[a, b] = out[b, a] = w
        uf.union(ri, rj)  # ri stays the root
        members[ri] = members[ri] + members.pop(rj)
    out.flags.writeable = False
    return out


def brute_force_minimax(d, i: int, j: int, limit: int = ORACLE_LIMIT) -> float:
    """Oracle: minimum over all simple chains from ``i`` to ``j`` of the
    maximum link value.  Refuses matrices larger than ``limit`` nodes."""
    d = _check_dissimilarity(d)
    n = d.shape[0]
    if n > limit:
        raise SizeLimitError(f"oracle limited to {limit} nodes, got {n}")
    if i == j:
        return 0.0
    others = [k for k in range(n) if k != i and k != j]
    best = float("inf")
    for r in range(len(others) + 1):
        for mids in permutations(others, r):
            chain = (i, *mids, j)
            cost = max(d[a, b] for a, b in zip(chain, chain[1:]))
            if cost < best:
                best = cost
    return best


@dataclass(frozen=True)
class ChainCosts:
    """The pair of minimax cost matrices computed from the two bound matrices.

    Both are ultrametrics; ``lower_cost <= upper_cost`` elementwise whenever
    the input bounds are ordered, and each is dominated by its input matrix.
    """

    lower_cost: np.ndarray
    upper_cost: np.ndarray


def chain_costs(space: IntervalMetricSpace) -> ChainCosts:
    """Minimax costs of the lower and upper bound matrices of a valid space."""
    space = prepared(space)
    return ChainCosts(
        lower_cost=minimax_closure(space.lower),
        upper_cost=minimax_closure(space.upper),
    )


def first_triangle_violation(u: np.ndarray, tol: float = 0.0):
    """Return a triple (i, j, k) with u[i,k] > max(u[i,j], u[j,k]) + tol,
    where j is the best possible intermediate, or None if none exists."""
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    if n < 3:
        return None
    best = np.maximum(u[:, :, None], u[None, :, :]).min(axis=1)  # over intermediates j
    bad = np.argwhere(u > best + tol)
    if bad.size == 0:
        return None
    i, k = int(bad[0][0]), int(bad[0][1])
    j = int(np.maximum(u[i, :], u[:, k]).argmin())
    return (i, j, k)
