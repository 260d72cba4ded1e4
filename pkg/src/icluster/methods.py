"""Hierarchical clustering methods for interval-valued metric spaces.

Two extremal constructions share one kernel.  Combine-and-cluster first
blends the bounds of every pair with the confidence weight alpha and then
applies single linkage to the blended dissimilarity; cluster-and-combine
first computes minimax chain costs separately for the lower and upper
bounds, blends *those*, and applies single linkage to the blend (the blend
of two ultrametrics is a metric but not necessarily an ultrametric, so the
final closure is still required).  Every admissible method's output lies
between the two, so together they bracket the whole design space.

Floating-point policy: the convex combination is evaluated once per entry
before the closure, and the closure itself performs no arithmetic.  At
alpha = 0 or 1 the blend reproduces the corresponding bound matrix
bit-for-bit, and when lower equals upper the blend short-circuits to that
matrix, so the collapse results at extreme confidence and on degenerate
spaces hold exactly, not just to within rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chains import chain_costs, minimax_closure, _check_dissimilarity
from .core import DEFAULT_CLAMP, IntervalMetricSpace, as_alpha, prepared


@dataclass(frozen=True)
class UltrametricSpace:
    """Node labels plus a matrix satisfying the strong triangle inequality."""

    labels: tuple[str, ...]
    u: np.ndarray

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 2 or u.shape != (len(labels), len(labels)):
            raise ValueError(f"matrix shape {u.shape} does not match {len(labels)} labels")
        u = u.copy()
        u.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "u", u)

    @property
    def n(self) -> int:
        return len(self.labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, UltrametricSpace):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.u, other.u)


@dataclass(frozen=True)
class CombinedDissimilarity:
    """A per-pair convex combination, tagged with the weight that produced it.

    ``kind`` records what was blended: "bounds" for the distance bounds
    themselves, "chain_costs" for the pair of minimax cost matrices.
    """

    matrix: np.ndarray
    alpha: float
    kind: str


def combine_bounds(lower: np.ndarray, upper: np.ndarray, alpha: float) -> np.ndarray:
    """Elementwise ``alpha * upper + (1 - alpha) * lower``.

    When the two matrices are identical the blend returns that matrix
    directly: summing ``alpha*x`` and ``(1-alpha)*x`` can differ from x in
    the last ulp, and the degenerate case must collapse exactly.
    """
    if np.array_equal(lower, upper):
        return lower.copy()
    return alpha * upper + (1.0 - alpha) * lower


def single_linkage(labels: Sequence[str], d) -> UltrametricSpace:
    """Single linkage over an arbitrary symmetric dissimilarity matrix."""
    d = _check_dissimilarity(d)
    labels = tuple(labels)
    if d.shape[0] != len(labels):
        raise ValueError(f"matrix is {d.shape[0]}x{d.shape[0]} but there are {len(labels)} labels")
    n = d.shape[0]
    if n > 1:
        off = ~np.eye(n, dtype=bool)
        if (d[off] <= 0).any():
            i, j = np.argwhere(off & (d <= 0))[0]
            raise ValueError(f"off-diagonal entries must be positive; d[{i}][{j}] = {d[i, j]!r}")
    return UltrametricSpace(labels, minimax_closure(d))


def combined_dissimilarity(space: IntervalMetricSpace, alpha) -> CombinedDissimilarity:
    """Blend the distance bounds of every pair with weight alpha."""
    a = as_alpha(alpha)
    space = prepared(space)
    return CombinedDissimilarity(combine_bounds(space.lower, space.upper, a), a, "bounds")


def combine_and_cluster(space: IntervalMetricSpace, alpha,
                        eps: float = DEFAULT_CLAMP) -> UltrametricSpace:
    """Single linkage applied to the alpha-blended distance bounds.

    The maximal admissible method: every method satisfying the value and
    transformation axioms is dominated by this output.
    """
    a = as_alpha(alpha)
    space = prepared(space, eps)
    dhat = combine_bounds(space.lower, space.upper, a)
    return UltrametricSpace(space.labels, minimax_closure(dhat))


def cluster_and_combine(space: IntervalMetricSpace, alpha,
                        eps: float = DEFAULT_CLAMP) -> UltrametricSpace:
    """Single linkage applied to the alpha-blend of the two chain-cost matrices.

    The minimal admissible method: chain costs are optimized separately for
    each bound before blending, which can only shrink the result relative to
    blending first.
    """
    a = as_alpha(alpha)
    space = prepared(space, eps)
    costs = chain_costs(space)
    chat = combine_bounds(costs.lower_cost, costs.upper_cost, a)
    return UltrametricSpace(space.labels, minimax_closure(chat))


def alpha_separation(space: IntervalMetricSpace, alpha) -> float:
    """Smallest alpha-blended chain cost over all node pairs.

    A floor on every off-diagonal entry any admissible method can output.
    """
    a = as_alpha(alpha)
    space = prepared(space)
    if space.n < 2:
        raise ValueError("separation is undefined for a single node")
    costs = chain_costs(space)
    chat = combine_bounds(costs.lower_cost, costs.upper_cost, a)
    off = ~np.eye(space.n, dtype=bool)
    return float(chat[off].min())


def separation_metric(labels: Sequence[str], d) -> float:
    """Minimum positive distance of an exact metric.

    Equals the chain-cost form (minimize over chains the maximum link, then
    over pairs): the minimizing pair's best chain is the direct link.
    """
    d = _check_dissimilarity(d)
    if d.shape[0] != len(tuple(labels)):
        raise ValueError("label count does not match matrix size")
    if d.shape[0] < 2:
        raise ValueError("separation is undefined for a single node")
    off = ~np.eye(d.shape[0], dtype=bool)
    return float(d[off].min())
