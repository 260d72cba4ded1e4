"""Domain model for finite metric spaces with interval-valued distances.

A space is a labelled node set together with two symmetric matrices
``lower`` and ``upper`` that bracket the (unobserved) pairwise metric:
``0 < lower[i][j] <= upper[i][j]`` off the diagonal.  Construction is
permissive about the numeric invariants so that invalid inputs can be
*reported* by :func:`validate` rather than lost in an exception; only
structural problems (shape mismatches, duplicate labels) raise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

#: Default clamp applied to zero lower bounds before clustering.
DEFAULT_CLAMP = 1e-12


class SpaceFormatError(ValueError):
    """Structurally malformed input: wrong shapes, duplicate labels, bad JSON."""


class InvalidSpaceError(ValueError):
    """A space violates its numeric invariants; carries the validation report."""

    def __init__(self, message: str, report: "ValidationReport | None" = None):
        super().__init__(message)
        self.report = report


class SizeLimitError(ValueError):
    """An exhaustive computation was refused because the input is too large."""


def _as_square_matrix(values, name: str, n: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise SpaceFormatError(f"{name} must be a square matrix, got shape {arr.shape}")
    if arr.shape[0] != n:
        raise SpaceFormatError(
            f"{name} is {arr.shape[0]}x{arr.shape[1]} but there are {n} labels"
        )
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class IntervalMetricSpace:
    """Node labels plus symmetric lower/upper distance-bound matrices."""

    labels: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if len(labels) == 0:
            raise SpaceFormatError("a space needs at least one node")
        if len(set(labels)) != len(labels):
            raise SpaceFormatError("labels must be unique")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "lower", _as_square_matrix(self.lower, "lower", len(labels)))
        object.__setattr__(self, "upper", _as_square_matrix(self.upper, "upper", len(labels)))

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalMetricSpace):
            return NotImplemented
        return (
            self.labels == other.labels
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
        )


@dataclass(frozen=True)
class Confidence:
    """Convex weight on the upper bound versus the lower bound, in [0, 1]."""

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not (0.0 <= a <= 1.0) or math.isnan(a):
            raise ValueError(f"confidence must lie in [0, 1], got {self.alpha}")
        object.__setattr__(self, "alpha", a)


def as_alpha(value) -> float:
    """Accept a bare float or a :class:`Confidence`; return the validated weight."""
    if isinstance(value, Confidence):
        return value.alpha
    return Confidence(float(value)).alpha


@dataclass(frozen=True)
class Violation:
    kind: str  # symmetry | diagonal | ordering | positivity | finite
    i: int
    j: int
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...]
    #: pairs (i, j), i < j, whose lower bound is exactly 0 and was accepted
    #: in non-strict mode; these get clamped to DEFAULT_CLAMP before clustering.
    zero_lower_pairs: tuple[tuple[int, int], ...] = ()


def validate(space: IntervalMetricSpace, strict_positive_lower: bool = True) -> ValidationReport:
    """Check every numeric invariant of ``space`` and report all violations.

    Comparisons are exact: bounds are authored inputs, not computed values,
    so an asymmetric or mis-ordered entry should fail loudly rather than be
    absorbed by a tolerance.  With ``strict_positive_lower=False``, zero
    lower bounds are accepted and listed separately for later clamping.
    """
    n = space.n
    violations: list[Violation] = []
    zero_pairs: list[tuple[int, int]] = []

    for name, m in (("lower", space.lower), ("upper", space.upper)):
        for i in range(n):
            if not math.isfinite(m[i, i]):
                violations.append(Violation("finite", i, i, f"{name}[{i}][{i}] is not finite"))
            elif m[i, i] != 0.0:
                violations.append(
                    Violation("diagonal", i, i, f"{name}[{i}][{i}] = {m[i, i]!r}, expected 0")
                )
        for i in range(n):
            for j in range(i + 1, n):
                if not (math.isfinite(m[i, j]) and math.isfinite(m[j, i])):
                    violations.append(Violation("finite", i, j, f"{name}[{i}][{j}] is not finite"))
                    continue
                if m[i, j] != m[j, i]:
                    violations.append(
                        Violation(
                            "symmetry", i, j,
                            f"{name}[{i}][{j}] = {m[i, j]!r} != {name}[{j}][{i}] = {m[j, i]!r}",
                        )
                    )

    for i in range(n):
        for j in range(i + 1, n):
            lo, up = space.lower[i, j], space.upper[i, j]
            if not (math.isfinite(lo) and math.isfinite(up)):
                continue  # already reported above
            if lo < 0.0:
                violations.append(Violation("positivity", i, j, f"lower[{i}][{j}] = {lo!r} < 0"))
            elif lo == 0.0:
                if strict_positive_lower:
                    violations.append(
                        Violation("positivity", i, j, f"lower[{i}][{j}] = 0 for distinct nodes")
                    )
                else:
                    zero_pairs.append((i, j))
            if up < 0.0:
                violations.append(Violation("positivity", i, j, f"upper[{i}][{j}] = {up!r} < 0"))
            if lo > up:
                violations.append(
                    Violation("ordering", i, j, f"lower[{i}][{j}] = {lo!r} > upper[{i}][{j}] = {up!r}")
                )

    return ValidationReport(ok=not violations, violations=tuple(violations),
                            zero_lower_pairs=tuple(zero_pairs))


def from_metric(labels: Sequence[str], d) -> IntervalMetricSpace:
    """Embed an exact metric as the degenerate space with lower = upper = d."""
    space = IntervalMetricSpace(tuple(labels), d, d)
    report = validate(space, strict_positive_lower=True)
    if not report.ok:
        first = report.violations[0]
        raise InvalidSpaceError(f"not a valid metric matrix: {first.detail}", report)
    return space


def two_node_space(dl: float, du: float) -> IntervalMetricSpace:
    """The two-node space on {p, q} with off-diagonal bounds (dl, du)."""
    dl, du = float(dl), float(du)
    if not (0.0 < dl <= du) or not math.isfinite(du):
        raise InvalidSpaceError(f"need 0 < dl <= du < inf, got dl={dl}, du={du}")
    return IntervalMetricSpace(("p", "q"), [[0.0, dl], [dl, 0.0]], [[0.0, du], [du, 0.0]])


def clamp_zero_lower(space: IntervalMetricSpace, eps: float = DEFAULT_CLAMP) -> IntervalMetricSpace:
    """Raise zero off-diagonal lower bounds to ``eps`` (and uppers to match).

    Returns ``space`` unchanged when nothing needs clamping, so callers can
    detect by identity whether the clamp fired.
    """
    off = ~np.eye(space.n, dtype=bool)
    need = off & (space.lower == 0.0)
    if not need.any():
        return space
    lower = space.lower.copy()
    lower[need] = eps
    upper = np.maximum(space.upper, lower)
    return IntervalMetricSpace(space.labels, lower, upper)


def prepared(space: IntervalMetricSpace, eps: float = DEFAULT_CLAMP) -> IntervalMetricSpace:
    """Gate a space into the clustering kernels.

    Validates in non-strict mode (zero lower bounds allowed), raises
    :class:`InvalidSpaceError` on any other violation, and applies the
    zero-lower clamp so downstream outputs stay strictly positive.
    """
    report = validate(space, strict_positive_lower=False)
    if not report.ok:
        first = report.violations[0]
        raise InvalidSpaceError(f"invalid space: {first.detail}", report)
    return clamp_zero_lower(space, eps)


# --- JSON interchange ------------------------------------------------------
#
# Document format (UTF-8):
#   {"labels": ["a", "b", ...], "lower": [[...], ...], "upper": [[...], ...]}
# A degenerate metric may be supplied as {"labels": [...], "dist": [[...]]}.
# Numbers are written with repr precision, so parse(serialize(s)) reproduces
# every matrix entry bit-exactly.  NaN / Infinity tokens are rejected.


def _reject_constant(token: str):
    raise SpaceFormatError(f"non-finite number {token!r} is not allowed")


def loads_strict(text: str):
    """json.loads that refuses NaN/Infinity tokens."""
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SpaceFormatError(f"invalid JSON: {exc}") from exc


def space_from_json(text: str) -> IntervalMetricSpace:
    doc = loads_strict(text)
    if not isinstance(doc, dict) or "labels" not in doc:
        raise SpaceFormatError("expected an object with a 'labels' field")
    labels = doc["labels"]
    if "dist" in doc:
        return from_metric(labels, doc["dist"])
    if "lower" not in doc or "upper" not in doc:
        raise SpaceFormatError("expected 'lower' and 'upper' matrices (or a 'dist' matrix)")
    return IntervalMetricSpace(tuple(labels), doc["lower"], doc["upper"])


def space_to_json(space: IntervalMetricSpace) -> str:
    doc = {
        "format_version": 1,
        "labels": list(space.labels),
        "lower": space.lower.tolist(),
        "upper": space.upper.tolist(),
    }
    return json.dumps(doc)
