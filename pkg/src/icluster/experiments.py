"""Application pipelines: moving-point snapshots and network-distance bounds.

Moving points: n planar points take a Gaussian random walk; T snapshots of
pairwise Euclidean distances are reduced to per-pair minima and maxima,
which bracket the (unobservable) instantaneous metric and feed the interval
clustering methods.  A mean-distance single-linkage benchmark is included
for comparison.

Networks: a population of symmetric relationship matrices is compared with
upper and lower bounds on the permutation-invariant network distance (the
min over node correspondences of the worst relationship discrepancy).  The
exact distance is exponential in the correspondence count, so it is only
computed by the brute-force oracle on tiny instances; the identity
correspondence gives the upper bound and the diameter difference a cheap
valid lower bound, with a hook for externally computed lower bounds.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import IntervalMetricSpace, InvalidSpaceError, SizeLimitError, validate
from .dendro import Partition, cut_k, ultrametric_to_dendrogram
from .methods import (
    UltrametricSpace,
    cluster_and_combine,
    combine_and_cluster,
    single_linkage,
)
from .rng import SplitMix64

# --- moving points ----------------------------------------------------------


@dataclass(frozen=True)
class SnapshotSet:
    """T planar snapshots of n moving points, with the walk's provenance."""

    points: np.ndarray  # shape (n, T, 2)
    seed: int
    sigma2: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 3 or pts.shape[2] != 2 or pts.shape[0] < 2 or pts.shape[1] < 1:
            raise ValueError(f"points must have shape (n>=2, T>=1, 2), got {pts.shape}")
        if not np.isfinite(pts).all():
            raise ValueError("coordinates must be finite")
        if self.sigma2 < 0:
            raise ValueError(f"variance must be nonnegative, got {self.sigma2}")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def T(self) -> int:
        return self.points.shape[1]


#: Default scale of the half-moon layout.  Calibrated so that the stock
#: pipeline (30 points, 10 snapshots, per-step variance 0.4, confidence 0.5)
#: runs in the noise regime where the interval methods still recover both
#: moons while mean-distance linkage starts misplacing the moon-tip points.
MOON_SCALE = 19.2


def generate_half_moons(n: int, seed: int | None = None,
                        scale: float = MOON_SCALE) -> np.ndarray:
    """Initial coordinates: two interleaved half moons of radius ``scale``.

    The first ceil(n/2) points sit on the upper semicircle centered at the
    origin (angles 0..pi, equally spaced); the rest on the lower semicircle
    centered at (1, 0.5) * scale (angles pi..2*pi).  Placement is
    deterministic; ``seed`` is accepted for driver-signature symmetry but
    unused since the moons carry no jitter.
    """
    if n < 4:
        raise ValueError(f"need at least 4 points, got {n}")
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    k_up = n - n // 2
    k_lo = n // 2
    up_angles = np.linspace(0.0, np.pi, k_up)
    lo_angles = np.linspace(np.pi, 2.0 * np.pi, k_lo)
    upper = np.stack([np.cos(up_angles), np.sin(up_angles)], axis=1)
    lower = np.stack([1.0 + np.cos(lo_angles), 0.5 + np.sin(lo_angles)], axis=1)
    return scale * np.concatenate([upper, lower], axis=0)


def simulate_walk(initial: np.ndarray, T: int, sigma2: float, seed: int) -> SnapshotSet:
    """Random walk from (unobserved) initial positions; snapshot t is the
    position after t steps, each step adding independent per-point Gaussian
    noise with per-coordinate variance ``sigma2``.

    Snapshot 1 already includes one step of noise: the starting coordinates
    are never observed.  Draw order is (t, point, x then y), so runs are
    bit-reproducible for a given seed.
    """
    initial = np.asarray(initial, dtype=float)
    if initial.ndim != 2 or initial.shape[1] != 2:
        raise ValueError(f"initial coordinates must have shape (n, 2), got {initial.shape}")
    if T < 1:
        raise ValueError(f"need at least one snapshot, got T={T}")
    if sigma2 < 0:
        raise ValueError(f"variance must be nonnegative, got {sigma2}")
    n = initial.shape[0]
    rng = SplitMix64(seed)
    std = math.sqrt(sigma2)
    pts = np.empty((n, T, 2))
    current = initial.copy()
    for t in range(T):
        for i in range(n):
            current[i, 0] += rng.gauss(0.0, std)
            current[i, 1] += rng.gauss(0.0, std)
        pts[:, t, :] = current
    return SnapshotSet(pts, seed=seed, sigma2=sigma2)


def _points_of(s) -> np.ndarray:
    return s.points if isinstance(s, SnapshotSet) else np.asarray(s, dtype=float)


def _default_labels(n: int) -> tuple[str, ...]:
    return tuple(str(i + 1) for i in range(n))


def snapshot_distances(s) -> np.ndarray:
    """Per-snapshot Euclidean distance matrices, shape (T, n, n)."""
    pts = _points_of(s)
    diff = pts[:, None, :, :] - pts[None, :, :, :]      # (n, n, T, 2)
    d = np.sqrt((diff ** 2).sum(axis=3))                 # (n, n, T)
    return np.transpose(d, (2, 0, 1))


def snapshots_to_interval_space(s, labels: Sequence[str] | None = None) -> IntervalMetricSpace:
    """Bracket each pair's distance by its minimum and maximum over snapshots.

    Every snapshot distance lies in [lower, upper] by construction.  Pairs
    coincident at all snapshots produce a zero lower bound, which the
    clustering entry points clamp.
    """
    d = snapshot_distances(s)
    lower = d.min(axis=0)
    upper = d.max(axis=0)
    np.fill_diagonal(lower, 0.0)
    np.fill_diagonal(upper, 0.0)
    labels = _default_labels(lower.shape[0]) if labels is None else tuple(labels)
    return IntervalMetricSpace(labels, lower, upper)


def mean_distance_benchmark(s, labels: Sequence[str] | None = None) -> UltrametricSpace:
    """Single linkage over per-pair snapshot-averaged distances."""
    d = snapshot_distances(s).mean(axis=0)
    np.fill_diagonal(d, 0.0)
    n = d.shape[0]
    off = ~np.eye(n, dtype=bool)
    if (d[off] == 0).any():
        d = d.copy()
        d[off & (d == 0.0)] = 1e-12  # coincident-at-every-snapshot pairs
    labels = _default_labels(n) if labels is None else tuple(labels)
    return single_linkage(labels, d)


def moon_membership(n: int) -> dict[str, int]:
    """Ground-truth classes for the half-moon layout: upper moon is class 0."""
    labels = _default_labels(n)
    k_up = n - n // 2
    return {x: (0 if i < k_up else 1) for i, x in enumerate(labels)}


@dataclass(frozen=True)
class MoonsTrial:
    """One end-to-end run of the snapshot pipeline on half-moon data."""

    walk: SnapshotSet
    space: IntervalMetricSpace
    co: UltrametricSpace
    cl: UltrametricSpace
    benchmark: UltrametricSpace
    errors: dict[str, float]
    mean_gap: float
    mean_bound_width: float


def run_moons_trial(n: int, T: int, sigma2: float, alpha: float, seed: int,
                    scale: float = MOON_SCALE) -> MoonsTrial:
    walk = simulate_walk(generate_half_moons(n, scale=scale), T, sigma2, seed)
    space = snapshots_to_interval_space(walk)
    co = combine_and_cluster(space, alpha)
    cl = cluster_and_combine(space, alpha)
    bench = mean_distance_benchmark(walk)
    truth = moon_membership(n)
    errors = {
        name: classification_error(cut_k(ultrametric_to_dendrogram(u), 2), truth)
        for name, u in (("co", co), ("cl", cl), ("benchmark", bench))
    }
    off = ~np.eye(n, dtype=bool)
    return MoonsTrial(
        walk=walk, space=space, co=co, cl=cl, benchmark=bench, errors=errors,
        mean_gap=float((co.u - cl.u)[off].mean()),
        mean_bound_width=float((space.upper - space.lower)[off].mean()),
    )


def gap_curve(sigma2_grid: Sequence[float], alphas: Sequence[float], n: int = 30,
              T: int = 10, trials: int = 50, seed: int = 1,
              scale: float = MOON_SCALE) -> dict:
    """Mean ultrametric gap versus movement intensity, averaged over seeded
    trials, next to the mean input bound width it is dominated by."""
    base = SplitMix64(seed)
    trial_seeds = [base.next_u64() for _ in range(trials)]
    gaps = {float(a): [] for a in alphas}
    widths = []
    for s2 in sigma2_grid:
        width_acc = 0.0
        gap_acc = {float(a): 0.0 for a in alphas}
        for ts in trial_seeds:
            walk = simulate_walk(generate_half_moons(n, scale=scale), T, s2, ts)
            space = snapshots_to_interval_space(walk)
            off = ~np.eye(n, dtype=bool)
            width_acc += float((space.upper - space.lower)[off].mean())
            for a in alphas:
                co = combine_and_cluster(space, a)
                cl = cluster_and_combine(space, a)
                gap_acc[float(a)] += float((co.u - cl.u)[off].mean())
        widths.append(width_acc / trials)
        for a in gap_acc:
            gaps[a].append(gap_acc[a] / trials)
    return {
        "n": n, "T": T, "trials": trials, "seed": seed,
        "sigma2_grid": [float(s) for s in sigma2_grid],
        "alphas": [float(a) for a in alphas],
        "mean_ultrametric_gap": gaps,
        "mean_bound_width": widths,
    }


# --- networks ---------------------------------------------------------------


@dataclass(frozen=True)
class Network:
    """Labelled node set with a symmetric nonnegative relationship matrix.

    Zero off-diagonal values (absent relationships) are accepted.
    """

    labels: tuple[str, ...]
    r: np.ndarray

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 2 or r.shape != (len(labels), len(labels)):
            raise ValueError(f"matrix shape {r.shape} does not match {len(labels)} labels")
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be unique")
        if not np.isfinite(r).all():
            raise ValueError("relationship values must be finite")
        if not np.array_equal(r, r.T):
            i, j = np.argwhere(r != r.T)[0]
            raise ValueError(f"relationship function is asymmetric at ({i}, {j})")
        if np.diag(r).any():
            raise ValueError("diagonal must be exactly zero")
        if (r < 0).any():
            raise ValueError("relationship values must be nonnegative")
        r = r.copy()
        r.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "r", r)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def has_zero_offdiagonal(self) -> bool:
        off = ~np.eye(self.n, dtype=bool)
        return bool((self.r[off] == 0.0).any())


@dataclass(frozen=True)
class Correspondence:
    """Relation between two index sets covering both sides."""

    pairs: frozenset[tuple[int, int]]
    n_left: int
    n_right: int

    def __post_init__(self):
        pairs = frozenset((int(z), int(w)) for z, w in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        left = {z for z, _ in pairs}
        right = {w for _, w in pairs}
        if any(not (0 <= z < self.n_left) for z in left) or any(
            not (0 <= w < self.n_right) for w in right
        ):
            raise ValueError("correspondence references out-of-range indices")
        if left != set(range(self.n_left)) or right != set(range(self.n_right)):
            raise ValueError("correspondence must cover every node on both sides")


def identity_correspondence(n: int) -> Correspondence:
    return Correspondence(frozenset((i, i) for i in range(n)), n, n)


def network_difference(nz: Network, nw: Network, c: Correspondence) -> float:
    """Worst relationship discrepancy over all pairs of correspondents."""
    if c.n_left != nz.n or c.n_right != nw.n:
        raise ValueError("correspondence size does not match the networks")
    pairs = sorted(c.pairs)
    best = 0.0
    for z, w in pairs:
        for z2, w2 in pairs:
            best = max(best, abs(float(nz.r[z, z2]) - float(nw.r[w, w2])))
    return best


#: Hard cap on the pair-set size the exhaustive oracle will enumerate.
_MAX_ORACLE_BITS = 20


def exact_network_distance(nz: Network, nw: Network, node_limit: int = 4) -> float:
    """Exhaustive minimum of :func:`network_difference` over all valid
    correspondences.  Refuses inputs beyond ``node_limit`` nodes per side."""
    p, q = nz.n, nw.n
    if p > node_limit or q > node_limit or p * q > _MAX_ORACLE_BITS:
        raise SizeLimitError(
            f"exact distance on {p}x{q} nodes would scan 2^{p * q} = {2 ** (p * q)} "
            f"pair subsets; limit is {node_limit} nodes per side"
        )
    m = p * q
    edges = [(z, w) for z in range(p) for w in range(q)]
    cost = np.zeros((m, m))
    for a, (z, w) in enumerate(edges):
        for b, (z2, w2) in enumerate(edges):
            cost[a, b] = abs(nz.r[z, z2] - nw.r[w, w2])
    subsets = np.arange(1 << m, dtype=np.uint32)
    member = ((subsets[:, None] >> np.arange(m, dtype=np.uint32)) & 1).astype(bool)
    gamma = np.zeros(1 << m)
    for a in range(m):
        for b in range(a, m):
            if cost[a, b] > 0.0:
                both = member[:, a] & member[:, b]
                np.maximum(gamma, np.where(both, cost[a, b], 0.0), out=gamma)
    valid = np.ones(1 << m, dtype=bool)
    for z in range(p):
        cols = [a for a, (z2, _) in enumerate(edges) if z2 == z]
        valid &= member[:, cols].any(axis=1)
    for w in range(q):
        cols = [a for a, (_, w2) in enumerate(edges) if w2 == w]
        valid &= member[:, cols].any(axis=1)
    return float(gamma[valid].min())


def _require_shared_labels(nz: Network, nw: Network) -> None:
    if nz.labels != nw.labels:
        raise ValueError("networks must share the same labeling")


def network_upper_bound(nz: Network, nw: Network) -> float:
    """Distance witnessed by the identity correspondence on shared labels."""
    _require_shared_labels(nz, nw)
    return float(np.abs(nz.r - nw.r).max())


def network_lower_bound(nz: Network, nw: Network, kind: str = "diameter",
                        external: float | None = None) -> float:
    """A certified lower bound on the network distance.

    ``diameter``: |max r_Z - max r_W|.  Every correspondence pairs the
    diameter pair of the larger-diameter network with *some* pair of the
    other, whose relationship is at most that network's maximum, so every
    correspondence witnesses at least this gap.
    ``external``: pass through a precomputed value (e.g. from topological
    summaries computed elsewhere).
    """
    if kind == "diameter":
        return float(abs(nz.r.max() - nw.r.max()))
    if kind == "external":
        if external is None:
            raise ValueError("kind='external' requires a precomputed value")
        if external < 0:
            raise ValueError(f"lower bound must be nonnegative, got {external}")
        return float(external)
    raise ValueError(f"unknown lower bound kind {kind!r}")


def benchmark_db(nz: Network, nw: Network) -> float:
    """Sum of absolute relationship differences over all ordered pairs of
    distinct shared labels (each unordered pair counts twice)."""
    _require_shared_labels(nz, nw)
    off = ~np.eye(nz.n, dtype=bool)
    return float(np.abs(nz.r - nw.r)[off].sum())


def networks_to_interval_space(nets: Sequence[Network], lower_kind: str = "diameter",
                               external_lower=None,
                               names: Sequence[str] | None = None) -> IntervalMetricSpace:
    """Interval space over a list of networks: entry (i, j) is bracketed by
    the lower-bound construction and the identity-correspondence upper bound."""
    nets = list(nets)
    if len(nets) < 2:
        raise ValueError("need at least two networks")
    if names is None:
        names = tuple(f"N{i}" for i in range(len(nets)))
    names = tuple(names)
    if len(names) != len(nets):
        raise ValueError("one name per network required")
    k = len(nets)
    if lower_kind == "external":
        ext = np.asarray(external_lower, dtype=float)
        if ext.shape != (k, k):
            raise ValueError(f"external lower-bound matrix must be {k}x{k}, got {ext.shape}")
    lower = np.zeros((k, k))
    upper = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            upper[i, j] = upper[j, i] = network_upper_bound(nets[i], nets[j])
            if lower_kind == "external":
                lb = network_lower_bound(nets[i], nets[j], "external", ext[i, j])
            else:
                lb = network_lower_bound(nets[i], nets[j], lower_kind)
            lower[i, j] = lower[j, i] = lb
    space = IntervalMetricSpace(names, lower, upper)
    report = validate(space, strict_positive_lower=False)
    if not report.ok:
        first = report.violations[0]
        raise InvalidSpaceError(f"bound construction produced an invalid space: "
                                f"{first.detail}", report)
    return space


def classification_error(partition: Partition, truth: Mapping[str, object]) -> float:
    """Two-class unsupervised error: fraction misassigned under the better of
    the two cluster-to-class identifications."""
    classes = sorted({str(v) for v in truth.values()})
    if len(classes) != 2:
        raise ValueError(f"need exactly two ground-truth classes, got {classes}")
    if set(partition.assignment) != set(truth):
        raise ValueError("partition and ground truth cover different node sets")
    k = partition.num_clusters
    if k > 2:
        raise ValueError(f"two-class evaluation needs at most 2 clusters, got {k}")
    n = len(truth)
    errors = []
    for flip in (False, True):
        wrong = 0
        for label, cluster in partition.assignment.items():
            predicted = classes[(cluster ^ flip) if k == 2 else int(flip)]
            if predicted != str(truth[label]):
                wrong += 1
        errors.append(wrong / n)
    return min(errors)


# --- synthetic network populations -----------------------------------------


def block_model_network(rng: SplitMix64, labels: Sequence[str], block_size: int,
                        within: tuple[float, float], across: tuple[float, float]) -> Network:
    """Two-block relationship matrix with uniform noise inside each regime."""
    n = len(labels)
    r = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            same = (i < block_size) == (j < block_size)
            lo, hi = within if same else across
            r[i, j] = r[j, i] = rng.uniform(lo, hi)
    return Network(tuple(labels), r)


def two_population_networks(seed: int, n_per: int = 10, nodes: int = 16):
    """Seeded fixture: two populations of networks with different block
    structure.  Returns (networks, names, classes)."""
    if nodes > 20:
        raise ValueError("fixture is meant for small networks (<= 20 nodes)")
    rng = SplitMix64(seed)
    labels = tuple(f"v{i}" for i in range(nodes))
    nets: list[Network] = []
    names: list[str] = []
    classes: dict[str, str] = {}
    for idx in range(n_per):
        nets.append(block_model_network(rng, labels, nodes // 2,
                                        within=(8.0, 10.0), across=(1.0, 3.0)))
        name = f"A{idx}"
        names.append(name)
        classes[name] = "A"
    for idx in range(n_per):
        nets.append(block_model_network(rng, labels, nodes // 2,
                                        within=(5.0, 7.0), across=(4.0, 6.0)))
        name = f"B{idx}"
        names.append(name)
        classes[name] = "B"
    return nets, names, classes


# --- CSV interchange --------------------------------------------------------


def write_snapshots_csv(s, labels: Sequence[str] | None = None) -> str:
    """Snapshot CSV: header ``t,id,x,y``, one row per point per snapshot."""
    pts = _points_of(s)
    n, T = pts.shape[0], pts.shape[1]
    labels = _default_labels(n) if labels is None else tuple(labels)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["t", "id", "x", "y"])
    for t in range(T):
        for i in range(n):
            w.writerow([t + 1, labels[i], repr(float(pts[i, t, 0])), repr(float(pts[i, t, 1]))])
    return out.getvalue()


def read_snapshots_csv(text: str) -> tuple[np.ndarray, tuple[str, ...]]:
    """Parse the snapshot CSV back into a (n, T, 2) array plus labels."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["t", "id", "x", "y"]:
        raise ValueError("expected header 't,id,x,y'")
    coords: dict[str, dict[int, tuple[float, float]]] = {}
    order: list[str] = []
    for row in rows[1:]:
        if not row:
            continue
        t, label, x, y = int(row[0]), row[1], float(row[2]), float(row[3])
        if label not in coords:
            coords[label] = {}
            order.append(label)
        coords[label][t] = (x, y)
    times = sorted({t for per in coords.values() for t in per})
    if times != list(range(1, len(times) + 1)):
        raise ValueError(f"snapshot indices must be 1..T, got {times}")
    pts = np.empty((len(order), len(times), 2))
    for i, label in enumerate(order):
        for t in times:
            if t not in coords[label]:
                raise ValueError(f"point {label!r} is missing snapshot {t}")
            pts[i, t - 1] = coords[label][t]
    return pts, tuple(order)


def write_network_csv(net: Network) -> str:
    """Square matrix CSV with a label header row and column."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow([""] + list(net.labels))
    for i, label in enumerate(net.labels):
        w.writerow([label] + [repr(float(v)) for v in net.r[i]])
    return out.getvalue()


def read_network_csv(text: str) -> Network:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if len(rows) < 2:
        raise ValueError("network CSV needs a header row and at least one data row")
    labels = [c for c in rows[0][1:]]
    n = len(labels)
    r = np.zeros((n, n))
    if len(rows) != n + 1:
        raise ValueError(f"expected {n} data rows, got {len(rows) - 1}")
    for i, row in enumerate(rows[1:]):
        if row[0] != labels[i]:
            raise ValueError(f"row label {row[0]!r} does not match column label {labels[i]!r}")
        if len(row) != n + 1:
            raise ValueError(f"row {i} has {len(row) - 1} values, expected {n}")
        r[i] = [float(v) for v in row[1:]]
    return Network(tuple(labels), r)
