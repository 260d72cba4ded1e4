"""Dendrograms, their bijection with ultrametrics, cuts, and rendering.

A dendrogram is stored as a merge list in the usual linkage style: cluster
ids 0..n-1 are the leaves, and the t-th merge (height h, inputs a, b)
creates cluster id n+t.  Heights are strictly positive and nondecreasing
along the list, each id is consumed as a merge input at most once, and the
final merge contains every leaf.

Converting an ultrametric to a dendrogram and back reproduces the matrix
exactly; the reverse round trip reproduces the merge list up to a canonical
form in which simultaneous (equal-height) merges are ordered by the
smallest leaf id involved and k-way joins are realized as left-folded
binary merges.  Cutting at resolution delta applies every merge with
height <= delta (a closed threshold, so the family of partitions is right
continuous in delta).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator
from xml.sax.saxutils import escape

import numpy as np

from .chains import first_triangle_violation
from .core import loads_strict
from .methods import UltrametricSpace


class DendrogramError(ValueError):
    """Malformed merge list."""


class UltrametricError(ValueError):
    """A matrix handed off as an ultrametric violates its invariants."""


@dataclass(frozen=True)
class Merge:
    height: float
    a: int
    b: int
    id: int


@dataclass(frozen=True)
class Dendrogram:
    leaves: tuple[str, ...]
    merges: tuple[Merge, ...]

    def __post_init__(self):
        object.__setattr__(self, "leaves", tuple(str(x) for x in self.leaves))
        object.__setattr__(self, "merges", tuple(self.merges))
        _validate(self)

    @property
    def n(self) -> int:
        return len(self.leaves)

    @property
    def max_height(self) -> float:
        return self.merges[-1].height if self.merges else 0.0


@dataclass(frozen=True)
class Partition:
    """Assignment of every node label to a cluster index (contiguous from 0)."""

    assignment: dict[str, int]

    @property
    def num_clusters(self) -> int:
        return len(set(self.assignment.values()))

    def as_sets(self) -> tuple[frozenset[str], ...]:
        groups: dict[int, set[str]] = {}
        for label, c in self.assignment.items():
            groups.setdefault(c, set()).add(label)
        return tuple(frozenset(groups[c]) for c in sorted(groups))


def _validate(d: Dendrogram) -> None:
    n = len(d.leaves)
    if n == 0:
        raise DendrogramError("a dendrogram needs at least one leaf")
    if len(set(d.leaves)) != n:
        raise DendrogramError("leaf labels must be unique")
    if len(d.merges) != n - 1:
        raise DendrogramError(f"expected {n - 1} merges for {n} leaves, got {len(d.merges)}")
    sizes = {i: 1 for i in range(n)}
    consumed: set[int] = set()
    prev = 0.0
    for t, m in enumerate(d.merges):
        if m.id != n + t:
            raise DendrogramError(f"merge {t} must create cluster id {n + t}, got {m.id}")
        if not (m.height > 0.0):
            raise DendrogramError(f"merge {t} has nonpositive height {m.height!r}")
        if m.height < prev:
            raise DendrogramError(f"merge heights decrease at position {t}")
        prev = m.height
        for side in (m.a, m.b):
            if side not in sizes:
                raise DendrogramError(f"merge {t} references unknown cluster id {side}")
            if side in consumed:
                raise DendrogramError(f"cluster id {side} is merged twice")
        if m.a == m.b:
            raise DendrogramError(f"merge {t} joins cluster {m.a} with itself")
        consumed.update((m.a, m.b))
        sizes[m.id] = sizes[m.a] + sizes[m.b]
    if d.merges and sizes[d.merges[-1].id] != n:
        raise DendrogramError("final merge does not contain all leaves")


def _check_ultrametric_matrix(u: UltrametricSpace) -> np.ndarray:
    m = u.u
    n = m.shape[0]
    if not np.isfinite(m).all():
        raise UltrametricError("matrix contains non-finite entries")
    if not np.array_equal(m, m.T):
        i, j = np.argwhere(m != m.T)[0]
        raise UltrametricError(f"matrix is asymmetric at ({i}, {j})")
    if np.diag(m).any():
        i = int(np.flatnonzero(np.diag(m))[0])
        raise UltrametricError(f"nonzero diagonal at ({i}, {i})")
    if n > 1:
        off = ~np.eye(n, dtype=bool)
        if (m[off] <= 0).any():
            i, j = np.argwhere(off & (m <= 0))[0]
            raise UltrametricError(f"nonpositive off-diagonal entry at ({i}, {j})")
    triple = first_triangle_violation(m)
    if triple is not None:
        i, j, k = triple
        raise UltrametricError(
            f"strong triangle inequality fails for triple ({i}, {j}, {k}): "
            f"u[{i}][{k}] = {m[i, k]!r} > max(u[{i}][{j}], u[{j}][{k}]) = "
            f"{max(m[i, j], m[j, k])!r}"
        )
    return m


class _Forest:
    """Union-find over leaves that tracks the current cluster id per root."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.cid = list(range(n))       # root -> current cluster id
        self.min_leaf = list(range(n))  # root -> smallest leaf index

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int, new_cid: int) -> None:
        ra, rb = self.find(a), self.find(b)
        self.parent[rb] = ra
        self.cid[ra] = new_cid
        self.min_leaf[ra] = min(self.min_leaf[ra], self.min_leaf[rb])


def ultrametric_to_dendrogram(u: UltrametricSpace) -> Dendrogram:
    """Merge tree of the equivalence classes {u <= delta}, in canonical form.

    Merge heights are exactly the distinct off-diagonal values of the
    matrix.  Raises :class:`UltrametricError` (naming a violating triple)
    if the matrix is not an ultrametric.
    """
    m = _check_ultrametric_matrix(u)
    n = u.n
    forest = _Forest(n)
    merges: list[Merge] = []
    next_id = n
    iu, ju = np.triu_indices(n, k=1)
    order = np.lexsort((ju, iu, m[iu, ju]))
    heights = m[iu, ju][order]
    for lo, hi in _runs(heights):
        h = float(heights[lo])
        # Clusters connected by edges at this height merge simultaneously;
        # realize each such group as a left fold in min-leaf order.
        local = _UnionById()
        for idx in order[lo:hi]:
            a, b = forest.find(int(iu[idx])), forest.find(int(ju[idx]))
            if a != b:
                local.union(a, b)
        groups = [sorted(local.members(r), key=lambda x: forest.min_leaf[x])
                  for r in local.roots()]
        groups.sort(key=lambda g: forest.min_leaf[g[0]])
        for group in groups:
            acc = group[0]
            for other in group[1:]:
                merges.append(Merge(h, forest.cid[forest.find(acc)],
                                    forest.cid[forest.find(other)], next_id))
                forest.union(acc, other, next_id)
                next_id += 1
    return Dendrogram(u.labels, tuple(merges))


class _UnionById:
    """Tiny union-find over sparse ids, tracking members per root."""

    def __init__(self):
        self.parent: dict[int, int] = {}
        self._members: dict[int, list[int]] = {}

    def _add(self, x: int) -> None:
        if x not in self.parent:
            self.parent[x] = x
            self._members[x] = [x]

    def find(self, x: int) -> int:
        self._add(x)
        while self.parent[x] != x:
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        self.parent[rb] = ra
        self._members[ra].extend(self._members.pop(rb))

    def roots(self) -> list[int]:
        return [x for x in self.parent if self.parent[x] == x]

    def members(self, root: int) -> list[int]:
        return self._members[self.find(root)]


def _runs(values: np.ndarray) -> Iterator[tuple[int, int]]:
    """Yield (start, stop) index ranges of equal consecutive values."""
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] != values[start]:
            yield (start, i)
            start = i


def dendrogram_to_ultrametric(d: Dendrogram) -> UltrametricSpace:
    """Matrix whose (i, j) entry is the height of the lowest merge containing both."""
    n = d.n
    u = np.zeros((n, n))
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    for m in d.merges:
        left, right = members.pop(m.a), members.pop(m.b)
        for x in left:
            for y in right:
                u[x, y] = u[y, x] = m.height
        members[m.id] = left + right
    return UltrametricSpace(d.leaves, u)


def cut(d: Dendrogram, delta: float) -> Partition:
    """Partition after applying every merge with height <= delta."""
    if delta < 0:
        raise ValueError(f"resolution must be nonnegative, got {delta}")
    applied = sum(1 for m in d.merges if m.height <= delta)
    return _partition_after(d, applied)


def cut_k(d: Dendrogram, k: int) -> Partition:
    """Partition with exactly k clusters, undoing the k-1 highest merges.

    Ties among equal heights are broken by merge-list order.
    """
    if not (1 <= k <= d.n):
        raise ValueError(f"k must be in 1..{d.n}, got {k}")
    return _partition_after(d, d.n - k)


def _partition_after(d: Dendrogram, num_merges: int) -> Partition:
    forest = _Forest(d.n)
    id_to_leaf = {i: i for i in range(d.n)}  # cluster id -> a representative leaf
    for m in d.merges[:num_merges]:
        forest.union(id_to_leaf[m.a], id_to_leaf[m.b], m.id)
        id_to_leaf[m.id] = id_to_leaf[m.a]
    assignment: dict[str, int] = {}
    cluster_index: dict[int, int] = {}
    for i, label in enumerate(d.leaves):
        root = forest.find(i)
        if root not in cluster_index:
            cluster_index[root] = len(cluster_index)
        assignment[label] = cluster_index[root]
    return Partition(assignment)


# --- serialization ----------------------------------------------------------


def _fmt_num(v: float) -> str:
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def _children(d: Dendrogram) -> dict[int, tuple[int, int]]:
    return {m.id: (m.a, m.b) for m in d.merges}


def _height_of(d: Dendrogram) -> dict[int, float]:
    h = {i: 0.0 for i in range(d.n)}
    h.update({m.id: m.height for m in d.merges})
    return h


def _min_leaf_of(d: Dendrogram) -> dict[int, int]:
    out = {i: i for i in range(d.n)}
    for m in d.merges:
        out[m.id] = min(out[m.a], out[m.b])
    return out


def _root(d: Dendrogram) -> int:
    return d.merges[-1].id if d.merges else 0


def leaf_order(d: Dendrogram) -> list[int]:
    """Leaf indices in rendering order: smaller-minimum-leaf subtree first."""
    children = _children(d)
    min_leaf = _min_leaf_of(d)
    order: list[int] = []

    def walk(node: int) -> None:
        if node < d.n:
            order.append(node)
            return
        a, b = children[node]
        first, second = (a, b) if min_leaf[a] <= min_leaf[b] else (b, a)
        walk(first)
        walk(second)

    walk(_root(d))
    return order


def to_newick(d: Dendrogram) -> str:
    """Newick text; each branch length is the parent height minus the node height."""
    children = _children(d)
    heights = _height_of(d)
    min_leaf = _min_leaf_of(d)

    def render(node: int, parent_height: float | None) -> str:
        if node < d.n:
            body = d.leaves[node]
        else:
            a, b = children[node]
            first, second = (a, b) if min_leaf[a] <= min_leaf[b] else (b, a)
            body = f"({render(first, heights[node])},{render(second, heights[node])})"
        if parent_height is None:
            return body
        return f"{body}:{_fmt_num(parent_height - heights[node])}"

    return render(_root(d), None) + ";"


def to_json(d: Dendrogram) -> str:
    doc = {
        "format_version": 1,
        "leaves": list(d.leaves),
        "merges": [{"height": m.height, "a": m.a, "b": m.b, "id": m.id} for m in d.merges],
    }
    return json.dumps(doc)


def from_json(text: str) -> Dendrogram:
    doc = loads_strict(text)
    if not isinstance(doc, dict) or "leaves" not in doc or "merges" not in doc:
        raise DendrogramError("expected an object with 'leaves' and 'merges'")
    merges = tuple(
        Merge(float(m["height"]), int(m["a"]), int(m["b"]), int(m["id"]))
        for m in doc["merges"]
    )
    return Dendrogram(tuple(doc["leaves"]), merges)


def canonical_form(d: Dendrogram) -> Dendrogram:
    """The canonical merge list representing the same nested partitions."""
    return ultrametric_to_dendrogram(dendrogram_to_ultrametric(d))


def to_svg(d: Dendrogram, width: int = 640, height: int = 480,
           margin: int = 50, font_size: int = 11) -> str:
    """Rectangular dendrogram as an SVG 1.1 document (leaves along the bottom)."""
    order = leaf_order(d)
    xpos = {leaf: i for i, leaf in enumerate(order)}
    n = d.n
    hmax = d.max_height or 1.0
    plot_w = width - 2 * margin
    plot_h = height - 2 * margin

    def x_px(x: float) -> float:
        return margin + (plot_w * (x / max(n - 1, 1)) if n > 1 else plot_w / 2)

    def y_px(h: float) -> float:
        return margin + plot_h * (1.0 - h / hmax)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<g stroke="black" stroke-width="1" fill="none">',
    ]
    # Each merge draws the usual bracket: risers from both inputs up to the
    # merge height joined by a horizontal bar.
    heights = _height_of(d)
    xof: dict[int, float] = {i: x_px(xpos[i]) for i in range(n)}
    for m in d.merges:
        xa, xb = xof[m.a], xof[m.b]
        parts.append(f'<path d="M {xa:.2f} {y_px(heights[m.a]):.2f} V {y_px(m.height):.2f} '
                     f'H {xb:.2f} V {y_px(heights[m.b]):.2f}"/>')
        xof[m.id] = (xa + xb) / 2.0
    parts.append("</g>")
    parts.append(f'<g font-family="sans-serif" font-size="{font_size}" text-anchor="middle">')
    for leaf in range(n):
        parts.append(
            f'<text x="{x_px(xpos[leaf]):.2f}" y="{y_px(0.0) + font_size + 4:.2f}">'
            f"{escape(d.leaves[leaf])}</text>"
        )
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts)
