"""Mechanical checkers for the properties the clustering methods promise.

Nothing here constitutes a proof.  Each checker is a falsification target:
it evaluates one promised inequality on concrete inputs and reports every
counterexample as a witness tuple.  Seeded generators produce random
interval spaces and maps that are distance-reducing *by construction*
(uniform scaling, quotients with chain-cost bounds, projection onto a
two-node space), so a checker failure always means a genuine bug rather
than a bad fixture.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .chains import minimax_closure
from .core import IntervalMetricSpace, as_alpha, prepared, two_node_space
from .methods import (
    UltrametricSpace,
    alpha_separation,
    cluster_and_combine,
    combine_and_cluster,
    combine_bounds,
)
from .rng import SplitMix64

#: The two admissible methods, keyed as they appear on the CLI.
METHODS: dict[str, Callable[..., UltrametricSpace]] = {
    "co": combine_and_cluster,
    "cl": cluster_and_combine,
}


@dataclass(frozen=True)
class NodeMap:
    """Total map from the labels of a source space into a target space."""

    mapping: Mapping[str, str]

    def __call__(self, label: str) -> str:
        return self.mapping[label]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    witnesses: tuple = ()
    #: set when a precondition failed and the check holds vacuously
    vacuous: bool = False
    stats: dict = field(default_factory=dict)


def _result(name: str, witnesses: list, **stats) -> CheckResult:
    return CheckResult(name, passed=not witnesses, witnesses=tuple(witnesses),
                       stats=dict(stats) if stats else {})


def check_ultrametric(u, tol: float = 0.0) -> CheckResult:
    """Verify zero diagonal, symmetry, positivity, and the strong triangle
    inequality (within ``tol``), listing every violation."""
    m = u.u if isinstance(u, UltrametricSpace) else np.asarray(u, dtype=float)
    n = m.shape[0]
    witnesses = []
    for i in range(n):
        if m[i, i] != 0.0:
            witnesses.append(("diagonal", (i, i), (float(m[i, i]),), float(m[i, i])))
    asym = np.argwhere(m != m.T)
    for i, j in asym:
        if i < j:
            witnesses.append(("symmetry", (int(i), int(j)),
                              (float(m[i, j]), float(m[j, i])),
                              float(abs(m[i, j] - m[j, i]))))
    off = ~np.eye(n, dtype=bool)
    for i, j in np.argwhere(off & (m <= 0)):
        if i < j:
            witnesses.append(("positivity", (int(i), int(j)), (float(m[i, j]),),
                              float(-m[i, j])))
    if n >= 3:
        best = np.maximum(m[:, :, None], m[None, :, :]).min(axis=1)
        for i, k in np.argwhere(m > best + tol):
            j = int(np.maximum(m[i, :], m[:, k]).argmin())
            witnesses.append(("strong_triangle", (int(i), j, int(k)),
                              (float(m[i, k]), float(m[i, j]), float(m[j, k])),
                              float(m[i, k] - best[i, k])))
    return _result("ultrametric", witnesses)


def _prepared_blend(space: IntervalMetricSpace, alpha: float):
    """(prepared space, blended bounds, blended chain costs)."""
    sp = prepared(space)
    dhat = combine_bounds(sp.lower, sp.upper, alpha)
    chat = combine_bounds(minimax_closure(sp.lower), minimax_closure(sp.upper), alpha)
    return sp, dhat, chat


def _indices(phi: NodeMap, source: IntervalMetricSpace, target: IntervalMetricSpace) -> list[int]:
    missing = [x for x in source.labels if x not in phi.mapping]
    if missing:
        raise ValueError(f"map is not total on the source space: missing {missing}")
    out = []
    for x in source.labels:
        y = phi.mapping[x]
        if y not in target.labels:
            raise ValueError(f"map sends {x!r} to unknown target node {y!r}")
        out.append(target.index(y))
    return out


def is_alpha_distance_reducing(space_x: IntervalMetricSpace, space_y: IntervalMetricSpace,
                               phi: NodeMap, alpha, tol: float = 0.0) -> CheckResult:
    """Check that ``phi`` never increases the blended bounds or the blended
    chain costs of any pair (the pair of conditions that triggers the
    transformation axiom)."""
    a = as_alpha(alpha)
    _, dhat_x, chat_x = _prepared_blend(space_x, a)
    _, dhat_y, chat_y = _prepared_blend(space_y, a)
    img = _indices(phi, space_x, space_y)
    witnesses = []
    n = space_x.n
    for i in range(n):
        for j in range(i + 1, n):
            yi, yj = img[i], img[j]
            for kind, lhs, rhs in (("bounds", dhat_x[i, j], dhat_y[yi, yj]),
                                   ("chain_costs", chat_x[i, j], chat_y[yi, yj])):
                if rhs > lhs + tol:
                    witnesses.append((kind, (i, j), (float(lhs), float(rhs)),
                                      float(rhs - lhs)))
    return _result("reducing_map", witnesses)


def check_axiom_value(method, dl: float, du: float, alpha, tol: float = 1e-15) -> CheckResult:
    """Run ``method`` on the two-node space and compare against the blended
    bound value, within relative tolerance ``tol``."""
    a = as_alpha(alpha)
    expected = a * du + (1.0 - a) * dl
    got = float(method(two_node_space(dl, du), a).u[0, 1])
    err = abs(got - expected)
    witnesses = []
    if err > tol * expected:
        witnesses.append(("value", (0, 1), (got, expected), err))
    return _result("axiom_value", witnesses, expected=expected, got=got)


def check_axiom_transformation(method, space_x: IntervalMetricSpace,
                               space_y: IntervalMetricSpace, phi: NodeMap,
                               alpha, tol: float = 1e-12) -> CheckResult:
    """Check the transformation axiom: outputs never increase under a
    distance-reducing map.  If ``phi`` is not actually reducing, the result
    is a vacuous pass flagged as such."""
    a = as_alpha(alpha)
    pre = is_alpha_distance_reducing(space_x, space_y, phi, a)
    if not pre.passed:
        return CheckResult("axiom_transformation", passed=True, vacuous=True)
    u_x = method(space_x, a).u
    u_y = method(space_y, a).u
    img = _indices(phi, space_x, space_y)
    witnesses = []
    n = space_x.n
    for i in range(n):
        for j in range(i + 1, n):
            lhs, rhs = u_x[i, j], u_y[img[i], img[j]]
            if rhs > lhs + tol:
                witnesses.append(("transformation", (i, j), (float(lhs), float(rhs)),
                                  float(rhs - lhs)))
    return _result("axiom_transformation", witnesses)


def check_min_separation(method, space: IntervalMetricSpace, alpha,
                         tol: float = 1e-12) -> CheckResult:
    """No off-diagonal output entry may undercut the alpha-separation."""
    a = as_alpha(alpha)
    sep = alpha_separation(space, a)
    u = method(space, a).u
    witnesses = []
    n = u.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            if u[i, j] < sep - tol:
                witnesses.append(("separation", (i, j), (float(u[i, j]), sep),
                                  float(sep - u[i, j])))
    return _result("min_separation", witnesses, separation=sep)


def check_sandwich(space: IntervalMetricSpace, alpha, tol: float = 1e-12) -> CheckResult:
    """The minimal method never exceeds the maximal one; reports the gap."""
    a = as_alpha(alpha)
    co = combine_and_cluster(space, a).u
    cl = cluster_and_combine(space, a).u
    gap = co - cl
    witnesses = []
    for i, j in np.argwhere(cl > co + tol):
        if i < j:
            witnesses.append(("sandwich", (int(i), int(j)),
                              (float(cl[i, j]), float(co[i, j])),
                              float(cl[i, j] - co[i, j])))
    n = space.n
    if n > 1:
        off = ~np.eye(n, dtype=bool)
        max_gap = float(gap[off].max())
        pair = np.argwhere(off & (gap == max_gap))[0]
        stats = {"max_gap": max_gap, "mean_gap": float(gap[off].mean()),
                 "max_gap_pair": (int(pair[0]), int(pair[1]))}
    else:
        stats = {"max_gap": 0.0, "mean_gap": 0.0, "max_gap_pair": None}
    return CheckResult("sandwich", passed=not witnesses, witnesses=tuple(witnesses),
                       stats=stats)


def check_extreme_alpha(space: IntervalMetricSpace, tol: float = 0.0) -> CheckResult:
    """At confidence 1 both methods equal single linkage of the upper bounds,
    at confidence 0 of the lower bounds; equality is exact by construction."""
    sp = prepared(space)
    witnesses = []
    for a, bound, name in ((1.0, sp.upper, "upper"), (0.0, sp.lower, "lower")):
        sl = minimax_closure(bound)
        for label, method in METHODS.items():
            got = method(sp, a).u
            if not np.array_equal(got, sl) and tol == 0.0:
                i, j = np.argwhere(got != sl)[0]
                witnesses.append((f"{label}_vs_sl_{name}", (int(i), int(j)),
                                  (float(got[i, j]), float(sl[i, j])),
                                  float(abs(got[i, j] - sl[i, j]))))
            elif tol > 0.0 and np.abs(got - sl).max() > tol:
                i, j = np.unravel_index(np.abs(got - sl).argmax(), got.shape)
                witnesses.append((f"{label}_vs_sl_{name}", (int(i), int(j)),
                                  (float(got[i, j]), float(sl[i, j])),
                                  float(abs(got[i, j] - sl[i, j]))))
    return _result("extreme_alpha", witnesses)


def check_cross_pair_bound(space: IntervalMetricSpace, alpha, tol: float = 1e-12) -> CheckResult:
    """On a four-node space, whenever both within-side blended chain costs and
    one mixed cross combination sit below a resolution, at least one of the
    four cross pairs has blended chain cost below it too.

    The nodes are taken in label order as (x, x~, x', x~'); the resolution is
    set to the maximum of the three hypothesis quantities so the hypotheses
    hold by construction.
    """
    if space.n != 4:
        raise ValueError("cross-pair check needs exactly four nodes")
    a = as_alpha(alpha)
    sp = prepared(space)
    cu = minimax_closure(sp.upper)
    cl = minimax_closure(sp.lower)
    chat = combine_bounds(cl, cu, a)
    delta = max(chat[0, 1], chat[2, 3], a * cu[0, 2] + (1.0 - a) * cl[1, 3])
    cross = {(0, 2): chat[0, 2], (1, 3): chat[1, 3], (0, 3): chat[0, 3], (1, 2): chat[1, 2]}
    witnesses = []
    if min(cross.values()) > delta + tol:
        witnesses.append(("cross_pair", tuple(cross), tuple(map(float, cross.values())),
                          float(min(cross.values()) - delta)))
    return _result("cross_pair_bound", witnesses, delta=float(delta))


# --- generators -------------------------------------------------------------


def random_space(rng: SplitMix64, n: int, low: float = 0.5, high: float = 3.0,
                 spread: float = 2.0) -> IntervalMetricSpace:
    """Random interval space: lower bounds uniform in [low, high], widths
    uniform in [0, spread]."""
    lower = np.zeros((n, n))
    upper = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            lo = rng.uniform(low, high)
            up = lo + rng.uniform(0.0, spread)
            lower[i, j] = lower[j, i] = lo
            upper[i, j] = upper[j, i] = up
    return IntervalMetricSpace(tuple(f"x{i}" for i in range(n)), lower, upper)


def scaled_space(space: IntervalMetricSpace, factor: float) -> tuple[IntervalMetricSpace, NodeMap]:
    """Uniformly shrink both bounds by ``factor`` in (0, 1]; identity map."""
    if not (0.0 < factor <= 1.0):
        raise ValueError(f"scale factor must lie in (0, 1], got {factor}")
    target = IntervalMetricSpace(space.labels, space.lower * factor, space.upper * factor)
    return target, NodeMap({x: x for x in space.labels})


def quotient_space(space: IntervalMetricSpace,
                   groups: Sequence[Sequence[str]]) -> tuple[IntervalMetricSpace, NodeMap]:
    """Collapse each group of labels to one node.

    Target bounds between two classes are the smallest lower/upper chain
    costs over all cross pairs, which makes the projection distance-reducing
    for every confidence weight.
    """
    sp = prepared(space)
    seen: set[str] = set()
    for g in groups:
        for x in g:
            if x in seen:
                raise ValueError(f"label {x!r} occurs in two groups")
            if x not in sp.labels:
                raise ValueError(f"unknown label {x!r}")
            seen.add(x)
    full = [list(g) for g in groups if g]
    full.extend([x] for x in sp.labels if x not in seen)
    cu = minimax_closure(sp.upper)
    cl = minimax_closure(sp.lower)
    k = len(full)
    labels = tuple("+".join(g) for g in full)
    lower = np.zeros((k, k))
    upper = np.zeros((k, k))
    idx = [[sp.index(x) for x in g] for g in full]
    for a in range(k):
        for b in range(a + 1, k):
            cross = [(i, j) for i in idx[a] for j in idx[b]]
            lower[a, b] = lower[b, a] = min(cl[i, j] for i, j in cross)
            upper[a, b] = upper[b, a] = min(cu[i, j] for i, j in cross)
    mapping = {x: labels[a] for a, g in enumerate(full) for x in g}
    return IntervalMetricSpace(labels, lower, upper), NodeMap(mapping)


def resolution_quotient(space: IntervalMetricSpace, alpha, delta: float):
    """Quotient by the equivalence classes of the minimal method at ``delta``."""
    a = as_alpha(alpha)
    u = cluster_and_combine(space, a).u
    groups: list[list[str]] = []
    assigned: set[int] = set()
    for i in range(space.n):
        if i in assigned:
            continue
        cls = [j for j in range(space.n) if u[i, j] <= delta]
        assigned.update(cls)
        groups.append([space.labels[j] for j in cls])
    return quotient_space(space, groups)


def two_node_projection(space: IntervalMetricSpace, alpha,
                        rng: SplitMix64) -> tuple[IntervalMetricSpace, NodeMap]:
    """Project onto the two-node space whose bounds are the chain costs at
    the pair achieving the alpha-separation; node images are arbitrary."""
    if space.n < 2:
        raise ValueError("projection needs at least two nodes")
    a = as_alpha(alpha)
    sp = prepared(space)
    cu = minimax_closure(sp.upper)
    cl = minimax_closure(sp.lower)
    chat = combine_bounds(cl, cu, a)
    off = ~np.eye(sp.n, dtype=bool)
    flat = np.where(off, chat, np.inf)
    i, j = np.unravel_index(int(flat.argmin()), flat.shape)
    target = two_node_space(cl[i, j], cu[i, j])
    mapping = {}
    for k, x in enumerate(sp.labels):
        if k == i:
            mapping[x] = "p"
        elif k == j:
            mapping[x] = "q"
        else:
            mapping[x] = rng.choice(("p", "q"))
    return target, NodeMap(mapping)


REDUCING_MAP_KINDS = ("scale", "quotient", "two_node")


def generate_reducing_map(space: IntervalMetricSpace, alpha, seed: int,
                          kind: str | None = None):
    """Produce (target space, map) guaranteed alpha-distance-reducing.

    ``kind`` picks one of the three constructions; by default it is drawn
    from the seed along with the construction's parameters.
    """
    rng = SplitMix64(seed)
    a = as_alpha(alpha)
    if kind is None:
        kind = rng.choice(REDUCING_MAP_KINDS)
    if kind == "scale":
        return scaled_space(space, rng.uniform(0.1, 1.0))
    if kind == "quotient":
        if rng.random() < 0.5 or space.n < 3:
            u = cluster_and_combine(space, a).u
            off = ~np.eye(space.n, dtype=bool)
            delta = float(np.median(u[off]))
            return resolution_quotient(space, a, delta)
        size = rng.randint(2, space.n)
        picks = list(space.labels)
        subset = []
        for _ in range(size):
            subset.append(picks.pop(rng.randint(0, len(picks) - 1)))
        return quotient_space(space, [subset])
    if kind == "two_node":
        return two_node_projection(space, a, rng)
    raise ValueError(f"unknown map kind {kind!r}")


# --- seeded suites ----------------------------------------------------------

SUITES = ("ultrametric", "value", "transform", "separation", "sandwich", "extremes")

_ALPHA_GRID = tuple(round(0.1 * k, 1) for k in range(11))


def _instance_seeds(seed: int, count: int) -> list[int]:
    base = SplitMix64(seed)
    return [base.next_u64() for _ in range(count)]


def run_suite(suite: str, instances: int = 200, seed: int = 20240405,
              sizes: Sequence[int] = tuple(range(2, 11))) -> dict:
    """Run one named checker suite over seeded random instances.

    Returns a JSON-ready report: per-failure witnesses plus the totals the
    CLI prints.  Instance k is generated from a seed derived purely from
    (seed, k), so instances can be re-run independently.
    """
    if suite == "all":
        sub = [run_suite(s, instances, seed, sizes) for s in SUITES]
        return {
            "suite": "all",
            "instances": instances,
            "seed": seed,
            "passed": all(r["passed"] for r in sub),
            "suites": sub,
        }
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected one of {('all',) + SUITES}")
    failures: list[dict] = []
    checks = 0
    for k, inst_seed in enumerate(_instance_seeds(seed, instances)):
        rng = SplitMix64(inst_seed)
        n = sizes[k % len(sizes)]
        results: list[CheckResult] = []
        if suite == "ultrametric":
            space = random_space(rng, n)
            a = rng.random()
            for method in METHODS.values():
                results.append(check_ultrametric(method(space, a)))
        elif suite == "value":
            dl = rng.uniform(0.1, 5.0)
            du = dl + rng.uniform(0.0, 5.0)
            a = rng.random()
            for method in METHODS.values():
                results.append(check_axiom_value(method, dl, du, a))
        elif suite == "transform":
            space = random_space(rng, n)
            a = rng.random()
            kind = rng.choice(REDUCING_MAP_KINDS)  # decoupled from the size cycle
            target, phi = generate_reducing_map(space, a, rng.next_u64(), kind=kind)
            results.append(is_alpha_distance_reducing(space, target, phi, a))
            for method in METHODS.values():
                results.append(check_axiom_transformation(method, space, target, phi, a))
        elif suite == "separation":
            space = random_space(rng, n)
            a = rng.random()
            for method in METHODS.values():
                results.append(check_min_separation(method, space, a))
        elif suite == "sandwich":
            space = random_space(rng, n)
            for a in _ALPHA_GRID:
                results.append(check_sandwich(space, a))
        elif suite == "extremes":
            results.append(check_extreme_alpha(random_space(rng, n)))
        checks += len(results)
        for r in results:
            if not r.passed:
                failures.append({
                    "instance": k,
                    "instance_seed": inst_seed,
                    "check": r.name,
                    "witnesses": [list(map(_jsonable, w)) for w in r.witnesses],
                })
    return {
        "suite": suite,
        "instances": instances,
        "seed": seed,
        "checks": checks,
        "passed": not failures,
        "failures": failures,
    }


def _jsonable(value):
    if isinstance(value, tuple):
        return list(map(_jsonable, value))
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value
