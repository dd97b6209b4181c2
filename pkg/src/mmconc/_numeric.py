"""Float helpers shared by the metric generators and experiment drivers.

Distance matrices are compared with plain float64 arithmetic everywhere
(no tolerances), so generated metrics must satisfy their axioms *exactly*
at the float level.  Rational values like k/n are not representable, and
rounding each entry to nearest breaks subadditivity by an ulp often
enough to matter (fl(1/3) + fl(2/3) < 1.0).  The helpers here build
tables that are monotone and subadditive as exact reals, staying within
a relative ~1e-13 of the intended rational targets.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np


def two_sum(a, b):
    """Error-free transformation: s + err == a + b exactly (Knuth)."""
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def floor_sum(a, b):
    """Largest float64 <= the exact real sum a + b.  Vectorized."""
    s, err = two_sum(a, b)
    return np.where(err < 0.0, np.nextafter(s, -np.inf), s)


def subadditive_table(count: int, numerator_step: float = 1.0, denominator: float = 1.0) -> np.ndarray:
    """Table t[0..count] with t[k] ~= k * numerator_step / denominator,
    adjusted downward (by at most a few ulp per entry) so that

        t[i + j] <= t[i] + t[j]   as exact reals, for all i, j,

    and t is strictly increasing.  A metric of the form d(x, y) =
    t[K(x, y)] with an integer metric K then satisfies the triangle
    inequality exactly, and any distance function derived from it passes
    a tolerance-free Lipschitz check.
    """
    t = np.zeros(count + 1)
    for h in range(1, count + 1):
        target = (h * numerator_step) / denominator
        half = h // 2
        if half >= 1:
            left = t[1 : half + 1]
            right = t[h - 1 : h - half - 1 : -1]
            cap = floor_sum(left, right).min()
            target = min(target, cap)
        t[h] = target
    return t


def exact_triangle_closure(dist: np.ndarray, max_passes: int = 8) -> np.ndarray:
    """Lower entries (by ulps) until dist[i,k] <= dist[i,j] + dist[j,k]
    holds as exact reals.  Floyd-Warshall in round-down arithmetic; the
    input is expected to be triangle-consistent up to rounding already,
    so this converges in one or two passes.
    """
    d = dist.copy()
    n = d.shape[0]
    for _ in range(max_passes):
        changed = False
        for j in range(n):
            via = floor_sum(d[:, j][:, None], d[j, :][None, :])
            mask = via < d
            if mask.any():
                d[mask] = via[mask]
                changed = True
        if not changed:
            break
    np.fill_diagonal(d, 0.0)
    return np.minimum(d, d.T)


def stable_seed(*parts) -> int:
    """Deterministic 64-bit seed from a tuple of strings/numbers.

    Independent of PYTHONHASHSEED and of process/worker layout, so
    experiment cells produce identical streams no matter how the work is
    scheduled.
    """
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, float):
            part = part.hex()
        h.update(str(part).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "big")


def rng_for(*parts) -> np.random.Generator:
    return np.random.default_rng(stable_seed(*parts))


def float_repr(x: float) -> float | str:
    """JSON-safe float: infinities become strings, everything else is
    emitted as-is (json round-trips float64 exactly)."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x
