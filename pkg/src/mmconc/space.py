"""Finite metric measure spaces: validation, balls, and greedy nets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "FiniteMMSpace",
    "Net",
    "PointSet",
    "SpaceValidationError",
    "Violation",
    "ball_mass",
    "build_net",
    "closed_ball",
    "merge_coincident_points",
    "packing_multiplicity",
    "validate_space",
]

_MAX_REPORTED = 50  # per violation kind; the report records the true count


@dataclass(frozen=True)
class Violation:
    """One failed axiom: kind, offending indices, human-readable detail."""

    kind: str
    indices: tuple[int, ...]
    detail: str


class SpaceValidationError(ValueError):
    """Raised by validate_space; carries every violated axiom found."""

    def __init__(self, violations: list[Violation], counts: dict[str, int]):
        self.violations = violations
        self.counts = counts
        lines = [f"{sum(counts.values())} axiom violation(s): {dict(counts)}"]
        lines += [f"  [{v.kind}] at {v.indices}: {v.detail}" for v in violations[:10]]
        if len(violations) > 10:
            lines.append(f"  ... {len(violations) - 10} more recorded")
        super().__init__("\n".join(lines))


@dataclass(frozen=True)
class PointSet:
    """Sorted, duplicate-free point indices of some space."""

    indices: tuple[int, ...]

    @classmethod
    def of(cls, indices: Iterable[int]) -> "PointSet":
        return cls(tuple(sorted(set(int(i) for i in indices))))

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "PointSet":
        return cls(tuple(int(i) for i in np.flatnonzero(mask)))

    def as_mask(self, n: int) -> np.ndarray:
        mask = np.zeros(n, dtype=bool)
        mask[list(self.indices)] = True
        return mask

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i) -> bool:
        return int(i) in set(self.indices)


@dataclass(frozen=True)
class FiniteMMSpace:
    """Points with an exact float64 metric matrix and nonnegative weights.

    Construct through validate_space (or a generator in mmconc.families);
    the arrays are frozen so a space can be shared safely.
    """

    points: tuple[str, ...]
    dist: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.dist.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def diameter(self) -> float:
        return float(self.dist.max())

    def mass_of(self, subset: PointSet | Sequence[int]) -> float:
        idx = list(subset)
        return float(self.weights[idx].sum()) if idx else 0.0

    def distinct_distances(self) -> np.ndarray:
        """Sorted distinct off-diagonal distances (empty for one point)."""
        iu = np.triu_indices(self.n, k=1)
        return np.unique(self.dist[iu])


def _check_triangle(dist: np.ndarray, add, counts) -> None:
    """Triangle inequality in plain float64 sums, one hub row at a time
    (memory stays O(n^2) even for a few thousand points)."""
    n = dist.shape[0]
    reported = 0
    for j in range(n):
        slack = dist - (dist[:, j][:, None] + dist[j, :][None, :])
        bad = np.argwhere(slack > 0.0)
        for i, k in bad:
            counts["triangle"] = counts.get("triangle", 0) + 1
            if reported < _MAX_REPORTED:
                add(
                    "triangle",
                    (int(i), int(j), int(k)),
                    f"d[{i},{k}]={dist[i, k]!r} > d[{i},{j}] + d[{j},{k}]"
                    f" = {dist[i, j] + dist[j, k]!r}",
                )
                reported += 1


def validate_space(
    points: Sequence[str],
    dist: np.ndarray | Sequence[Sequence[float]],
    weights: np.ndarray | Sequence[float],
) -> FiniteMMSpace:
    """Check every finite-mm-space axiom and return the space, or raise
    SpaceValidationError listing each violated axiom with the offending
    index tuple.

    Axioms: labels unique; dist square/finite, exactly symmetric, zero
    diagonal, positive off-diagonal, triangle inequality under float64
    sums; weights finite, >= 0, with positive total mass.
    """
    points = tuple(str(p) for p in points)
    dist = np.asarray(dist, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    n = len(points)
    violations: list[Violation] = []
    counts: dict[str, int] = {}

    def add(kind: str, indices: tuple[int, ...], detail: str) -> None:
        if counts.get(kind, 0) < _MAX_REPORTED:
            violations.append(Violation(kind, indices, detail))
        counts[kind] = counts.get(kind, 0) + 1

    if n == 0:
        add("empty", (), "a space needs at least one point")
    if len(set(points)) != n:
        dupes = [p for p in set(points) if points.count(p) > 1]
        add("duplicate_label", (), f"repeated labels: {dupes[:5]}")

    if dist.shape != (n, n):
        add("shape", (), f"dist has shape {dist.shape}, expected {(n, n)}")
        raise SpaceValidationError(violations, counts)
    if weights.shape != (n,):
        add("shape", (), f"weights has shape {weights.shape}, expected {(n,)}")
        raise SpaceValidationError(violations, counts)

    if not np.isfinite(dist).all():
        for i, j in np.argwhere(~np.isfinite(dist))[:_MAX_REPORTED]:
            add("nonfinite_distance", (int(i), int(j)), f"d={dist[i, j]!r}")
    else:
        for i, j in np.argwhere(dist != dist.T)[:_MAX_REPORTED]:
            add("asymmetry", (int(i), int(j)), f"{dist[i, j]!r} != {dist[j, i]!r}")
        for (i,) in np.argwhere(np.diag(dist) != 0.0)[:_MAX_REPORTED]:
            add("nonzero_diagonal", (int(i),), f"d[{i},{i}]={dist[i, i]!r}")
        off = dist.copy()
        np.fill_diagonal(off, 1.0)
        for i, j in np.argwhere(off <= 0.0)[:_MAX_REPORTED]:
            add(
                "nonpositive_distance",
                (int(i), int(j)),
                f"d={dist[i, j]!r} between distinct points",
            )
        if not violations:
            _check_triangle(dist, add, counts)

    if not np.isfinite(weights).all():
        for (i,) in np.argwhere(~np.isfinite(weights))[:_MAX_REPORTED]:
            add("nonfinite_weight", (int(i),), f"w={weights[i]!r}")
    else:
        for (i,) in np.argwhere(weights < 0.0)[:_MAX_REPORTED]:
            add("negative_weight", (int(i),), f"w={weights[i]!r}")
        if n and weights.sum() <= 0.0:
            add("zero_total_mass", (), f"total mass {weights.sum()!r} is not positive")

    if violations:
        raise SpaceValidationError(violations, counts)
    return FiniteMMSpace(points, dist.copy(), weights.copy())


def merge_coincident_points(
    points: Sequence[str],
    dist: np.ndarray,
    weights: np.ndarray | Sequence[float],
) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """Collapse points at exact distance zero into one atom (weights add,
    first label wins).  Preprocessing for data that fails the
    positive-distance axiom; the result still needs validate_space.
    """
    dist = np.asarray(dist, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    n = dist.shape[0]
    keep: list[int] = []
    owner = np.full(n, -1)
    for i in range(n):
        if owner[i] >= 0:
            continue
        owner[i] = len(keep)
        same = np.flatnonzero((dist[i] == 0.0) & (owner < 0))
        owner[same] = len(keep)
        keep.append(i)
    new_w = np.zeros(len(keep))
    np.add.at(new_w, owner, weights)
    idx = np.array(keep)
    return (
        tuple(str(points[i]) for i in keep),
        dist[np.ix_(idx, idx)].copy(),
        new_w,
    )


def closed_ball(space: FiniteMMSpace, center: int, radius: float) -> PointSet:
    """Indices y with d(center, y) <= radius; exact float comparison."""
    if not 0 <= center < space.n:
        raise IndexError(f"center {center} out of range for {space.n} points")
    if radius < 0:
        raise ValueError("radius must be >= 0")
    return PointSet.from_mask(space.dist[center] <= radius)


def ball_mass(space: FiniteMMSpace, center: int, radius: float) -> float:
    if not 0 <= center < space.n:
        raise IndexError(f"center {center} out of range for {space.n} points")
    if radius < 0:
        raise ValueError("radius must be >= 0")
    return float(space.weights[space.dist[center] <= radius].sum())


@dataclass(frozen=True)
class Net:
    """Greedy epsilon-net: members are pairwise >= epsilon apart, and
    every point of the space is within < epsilon of some member."""

    epsilon: float
    members: PointSet
    scan_order: tuple[int, ...]


def build_net(
    space: FiniteMMSpace,
    epsilon: float,
    scan_order: Sequence[int] | None = None,
) -> Net:
    """Greedy scan in scan_order (default index order): admit a point iff
    it is at distance >= epsilon from every point admitted so far.

    The >= convention means a point exactly epsilon away still joins the
    net; maximality (every rejected point within < epsilon of a member)
    holds because rejection is exactly the complementary comparison.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if scan_order is None:
        order = list(range(space.n))
    else:
        order = [int(i) for i in scan_order]
        if sorted(order) != list(range(space.n)):
            raise ValueError("scan_order must be a permutation of all point indices")
    admitted: list[int] = []
    for i in order:
        if not admitted or space.dist[i, admitted].min() >= epsilon:
            admitted.append(i)
    return Net(float(epsilon), PointSet.of(admitted), tuple(order))


def packing_multiplicity(space: FiniteMMSpace, net: Net, center: int, radius: float) -> int:
    """Number of net members inside the closed ball around a net member."""
    members = list(net.members)
    if center not in net.members:
        raise ValueError(f"center {center} is not a net member")
    return int((space.dist[center, members] <= radius).sum())
