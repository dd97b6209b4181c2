"""Separation distances and quantile gaps.

Sep(X; k0, ..., kN) is the largest t such that disjoint nonempty groups
X_0, ..., X_N with masses >= k_i can be chosen pairwise at distance >= t.
On a finite space every positive optimum is realized by assigning each
point to one group or discarding it, so sep_exact searches assignments.
Overlapping families only ever realize value 0, which we report as
feasible=False with value 0.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._numeric import exact_triangle_closure, rng_for
from .space import FiniteMMSpace, PointSet

__all__ = [
    "BudgetExceededError",
    "DEFAULT_ASSIGNMENT_BUDGET",
    "QuantileGap",
    "RealMeasure",
    "SepResult",
    "real_measure_as_space",
    "sep_exact",
    "sep_lower_bound",
    "sep_pushforward_check",
    "sep_real_quantile",
]

DEFAULT_ASSIGNMENT_BUDGET = 3**13  # (N+2)^n admissible for n <= 13 when N = 1

_MASS_SLACK = 1e-9  # pruning guard only; admissibility checks stay exact


class BudgetExceededError(RuntimeError):
    """An exhaustive routine would exceed its configured budget."""


# ---------------------------------------------------------------------------
# measures on the real line


@dataclass(frozen=True)
class RealMeasure:
    """Finitely many atoms on the line, positions strictly increasing.

    All mass arithmetic goes through one sequential prefix-sum array so
    quantile and partial-diameter comparisons stay mutually consistent.
    """

    positions: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.positions.setflags(write=False)
        self.weights.setflags(write=False)

    @classmethod
    def from_atoms(cls, positions, weights) -> "RealMeasure":
        """Merge coincident positions (fiber weights add) and sort."""
        positions = np.asarray(positions, dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64)
        if positions.shape != weights.shape or positions.ndim != 1:
            raise ValueError("positions and weights must be equal-length 1-D arrays")
        if not np.isfinite(positions).all():
            raise ValueError("positions must be finite")
        if not np.isfinite(weights).all() or (weights < 0).any():
            raise ValueError("weights must be finite and >= 0")
        uniq, inverse = np.unique(positions, return_inverse=True)
        merged = np.zeros(len(uniq))
        np.add.at(merged, inverse, weights)
        if merged.sum() <= 0:
            raise ValueError("total mass must be positive")
        return cls(uniq, merged)

    @property
    def prefix(self) -> np.ndarray:
        # prefix[k] = weights[0] + ... + weights[k-1], sequential order
        return np.concatenate(([0.0], np.cumsum(self.weights)))

    @property
    def total_mass(self) -> float:
        return float(self.prefix[-1])

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class QuantileGap:
    """Left/right kappa-quantile positions and their gap.

    a0 = sup{a : mass left of a (exclusive) <= kappa},
    b0 = inf{b : mass right of b (exclusive) <= kappa}.
    gap = max(b0 - a0, 0); degenerate marks clamping (needs 2*kappa >= m).
    """

    a0: float
    b0: float
    gap: float
    degenerate: bool


def sep_real_quantile(nu: RealMeasure, kappa: float) -> QuantileGap:
    """Quantile construction on the line.

    Guarantees, as exact comparisons on the shared prefix sums:
    mass((-inf, a0]) >= kappa, mass([b0, inf)) >= kappa, and
    mass([a0, b0]) >= total - 2*kappa whenever the gap is not degenerate.
    """
    if kappa <= 0:
        raise ValueError("kappa must be > 0")
    prefix = nu.prefix
    m = nu.total_mass
    if kappa >= m:
        return QuantileGap(math.inf, -math.inf, 0.0, True)
    # first atom where cumulative-through exceeds kappa
    i_a = int(np.argmax(prefix[1:] > kappa))
    # last atom where suffix-from exceeds kappa
    suffix_from = m - prefix[:-1]
    i_b = len(nu) - 1 - int(np.argmax((suffix_from > kappa)[::-1]))
    a0 = float(nu.positions[i_a])
    b0 = float(nu.positions[i_b])
    raw = b0 - a0
    return QuantileGap(a0, b0, max(raw, 0.0), raw < 0.0)


def real_measure_as_space(nu: RealMeasure) -> FiniteMMSpace:
    """View atoms as a 1-D metric measure space (for Sep comparisons)."""
    pos = nu.positions
    dist = np.abs(pos[:, None] - pos[None, :])
    dist = exact_triangle_closure(dist)
    points = tuple(repr(float(p)) for p in pos)
    return FiniteMMSpace(points, dist, nu.weights.copy())


# ---------------------------------------------------------------------------
# exact separation


@dataclass(frozen=True)
class SepResult:
    value: float
    feasible: bool
    exact: bool
    witnesses: tuple[PointSet, ...] | None
    assignment: tuple[int, ...] | None

    def witness_min_distance(self, space: FiniteMMSpace) -> float:
        if not self.witnesses:
            return 0.0
        best = math.inf
        groups = [list(w) for w in self.witnesses]
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                sub = space.dist[np.ix_(groups[a], groups[b])]
                best = min(best, float(sub.min()))
        return best


def _sequential_mass(weights: np.ndarray, members: Sequence[int]) -> float:
    """Ascending-index sequential sum; the one mass definition every
    admissibility check in this module shares."""
    total = 0.0
    for i in sorted(members):
        total += float(weights[i])
    return total


def _check_kappas(kappas: Sequence[float]) -> list[float]:
    ks = [float(k) for k in kappas]
    if len(ks) < 2:
        raise ValueError("need at least two kappas (N + 1 groups, N >= 1)")
    if any(k < 0 or not math.isfinite(k) for k in ks):
        raise ValueError("kappas must be finite and >= 0")
    return ks


def _feasible_assignment(
    dist: np.ndarray,
    weights: np.ndarray,
    kappas: Sequence[float],
    threshold: float,
) -> np.ndarray | None:
    """Lexicographically smallest assignment (groups 0..N, discard N+1)
    with all cross-group distances >= threshold, every group nonempty,
    and group masses >= kappas.  None if no assignment exists.
    """
    n = len(weights)
    n_groups = len(kappas)
    discard = n_groups
    suffix = np.concatenate((np.cumsum(weights[::-1])[::-1], [0.0]))
    slack = _MASS_SLACK * (1.0 + float(suffix[0]))
    assign = np.full(n, -1, dtype=np.int64)
    members: list[list[int]] = [[] for _ in range(n_groups)]
    masses = [0.0] * n_groups

    def rec(p: int) -> bool:
        if p == n:
            return all(members[g] for g in range(n_groups)) and all(
                masses[g] >= kappas[g] for g in range(n_groups)
            )
        deficit = 0.0
        empty = 0
        for g in range(n_groups):
            if masses[g] < kappas[g]:
                deficit += kappas[g] - masses[g]
            if not members[g]:
                empty += 1
        if deficit > suffix[p] + slack or empty > n - p:
            return False
        row = dist[p]
        for g in range(n_groups):
            ok = True
            for g2 in range(n_groups):
                if g2 != g and members[g2] and row[members[g2]].min() < threshold:
                    ok = False
                    break
            if ok:
                saved = masses[g]
                members[g].append(p)
                masses[g] = saved + float(weights[p])
                assign[p] = g
                if rec(p + 1):
                    return True
                members[g].pop()
                masses[g] = saved
                assign[p] = -1
        assign[p] = discard
        if rec(p + 1):
            return True
        assign[p] = -1
        return False

    return assign.copy() if rec(0) else None


def sep_exact(
    space: FiniteMMSpace,
    kappas: Sequence[float],
    budget: int = DEFAULT_ASSIGNMENT_BUDGET,
) -> SepResult:
    """Exact separation distance with witnesses.

    Searches every assignment of points to N+1 groups or discard (the
    guard refuses when (N+2)^n exceeds the budget), maximizing the
    minimum cross-group distance; ties resolve to the lexicographically
    smallest assignment vector.  Infeasible queries return value 0.0.
    """
    kappas = _check_kappas(kappas)
    n_labels = len(kappas) + 1
    if n_labels**space.n > budget:
        raise BudgetExceededError(
            f"sep_exact needs {n_labels}^{space.n} assignments, over budget {budget}"
        )
    thresholds = space.distinct_distances()
    lo, hi = 0, len(thresholds) - 1
    best: tuple[float, np.ndarray] | None = None
    while lo <= hi:
        mid = (lo + hi) // 2
        assign = _feasible_assignment(space.dist, space.weights, kappas, float(thresholds[mid]))
        if assign is not None:
            best = (float(thresholds[mid]), assign)
            lo = mid + 1
        else:
            hi = mid - 1
    if best is None:
        return SepResult(0.0, False, True, None, None)
    value, assign = best
    witnesses = tuple(
        PointSet.of(np.flatnonzero(assign == g)) for g in range(len(kappas))
    )
    return SepResult(value, True, True, witnesses, tuple(int(a) for a in assign))


# ---------------------------------------------------------------------------
# heuristic lower bound


def _conflict_components(dist: np.ndarray, threshold: float) -> np.ndarray:
    """Component labels of the graph with edges where dist < threshold."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components

    adj = (dist < threshold)
    np.fill_diagonal(adj, False)
    _, labels = connected_components(csr_matrix(adj), directed=False)
    return labels


def _try_threshold(
    space: FiniteMMSpace,
    kappas: list[float],
    threshold: float,
    effort: int,
    rng: np.random.Generator,
) -> np.ndarray | None:
    """Greedy component seeding plus randomized point moves."""
    n = space.n
    n_groups = len(kappas)
    discard = n_groups
    comp = _conflict_components(space.dist, threshold)
    comp_ids = np.unique(comp)
    comp_mass = np.array([space.weights[comp == c].sum() for c in comp_ids])

    assign = np.full(n, discard, dtype=np.int64)
    masses = np.zeros(n_groups)
    # seed whole components, heaviest first, onto the largest deficit
    for c in comp_ids[np.argsort(-comp_mass, kind="stable")]:
        deficits = np.array(kappas) - masses
        g = int(np.argmax(deficits))
        if deficits[g] <= 0:
            break
        assign[comp == c] = g
        masses[g] += space.weights[comp == c].sum()

    def group_ok(p: int, g: int) -> bool:
        row = space.dist[p]
        for g2 in range(n_groups):
            if g2 == g:
                continue
            members = np.flatnonzero(assign == g2)
            members = members[members != p]
            if len(members) and row[members].min() < threshold:
                return False
        return True

    def total_deficit() -> float:
        out = 0.0
        for g in range(n_groups):
            mass = _sequential_mass(space.weights, np.flatnonzero(assign == g))
            if mass < kappas[g]:
                out += kappas[g] - mass
            if not (assign == g).any():
                out += math.inf
        return out

    deficit = total_deficit()
    for _ in range(effort):
        if deficit == 0.0:
            break
        p = int(rng.integers(n))
        g = int(rng.integers(n_groups + 1))
        if g == assign[p]:
            continue
        if g < n_groups and not group_ok(p, g):
            continue
        old = assign[p]
        assign[p] = g
        new_deficit = total_deficit()
        if new_deficit <= deficit:
            deficit = new_deficit
        else:
            assign[p] = old
    if deficit > 0.0:
        return None
    for g in range(n_groups):
        members = np.flatnonzero(assign == g)
        if not len(members) or _sequential_mass(space.weights, members) < kappas[g]:
            return None
    return assign


def sep_lower_bound(
    space: FiniteMMSpace,
    kappas: Sequence[float],
    effort: int = 10_000,
    seed: int = 0,
) -> SepResult:
    """Certified lower bound on the separation distance.

    Binary-searches the candidate threshold over the distinct distances;
    feasibility at each threshold is attempted heuristically, and any
    returned value is re-verified from its witnesses, so value <=
    sep_exact always.  Deterministic for a fixed seed; exact=False.
    """
    kappas = _check_kappas(kappas)
    thresholds = space.distinct_distances()
    lo, hi = 0, len(thresholds) - 1
    best: np.ndarray | None = None
    while lo <= hi:
        mid = (lo + hi) // 2
        assign = _try_threshold(
            space, kappas, float(thresholds[mid]), effort, rng_for(seed, mid, "sep-lb")
        )
        if assign is not None:
            best = assign
            lo = mid + 1
        else:
            hi = mid - 1
    if best is None:
        return SepResult(0.0, False, False, None, None)
    witnesses = tuple(PointSet.of(np.flatnonzero(best == g)) for g in range(len(kappas)))
    result = SepResult(0.0, True, False, witnesses, tuple(int(a) for a in best))
    realized = result.witness_min_distance(space)
    for g, w in enumerate(witnesses):
        assert _sequential_mass(space.weights, list(w)) >= kappas[g]
    return SepResult(realized, True, False, witnesses, result.assignment)


def sep_pushforward_check(
    space: FiniteMMSpace,
    lipschitz_map,
    kappas: Sequence[float],
    budget: int = DEFAULT_ASSIGNMENT_BUDGET,
    tolerance: float = 1e-12,
) -> dict:
    """Compare Sep of a pushforward against Sep of the source.

    Returns {"holds", "source", "target"}; holds is
    Sep(f_* mu) <= Sep(mu) + tolerance (the tolerance absorbs float
    accumulation in group masses, nothing else).
    """
    from .observable import pushforward_space

    target_space = pushforward_space(space, lipschitz_map)
    down = sep_exact(target_space, kappas, budget)
    up = sep_exact(space, kappas, budget)
    return {
        "holds": down.value <= up.value + tolerance,
        "source": up,
        "target": down,
    }
