"""Brute-force reference implementations.

These deliberately share no code paths with the package beyond the answer
normalizer and the embedding function they are handed.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction


def shapley_by_permutations(n, value):
    """Average marginal contribution over all n! arrival orders.

    ``value`` maps a frozenset of player positions to a number.
    """
    totals = [0.0] * n
    count = 0
    for perm in itertools.permutations(range(n)):
        seen = frozenset()
        for p in perm:
            with_p = seen | {p}
            totals[p] += value(with_p) - value(seen)
            seen = with_p
        count += 1
    return [t / count for t in totals]


def shapley_exact_fractions(n, value):
    """Permutation average in exact rational arithmetic (values must be rational)."""
    totals = [Fraction(0)] * n
    perms = list(itertools.permutations(range(n)))
    for perm in perms:
        seen = frozenset()
        for p in perm:
            totals[p] += Fraction(value(seen | {p})) - Fraction(value(seen))
            seen = seen | {p}
    return [t / len(perms) for t in totals]


def _dot(a, b):
    return math.fsum(float(x) * float(y) for x, y in zip(a, b))


def cos_dist(a, b):
    na = math.sqrt(_dot(a, a))
    nb = math.sqrt(_dot(b, b))
    if na == 0 or nb == 0:
        return 1.0
    return 1.0 - _dot(a, b) / (na * nb)


def nearest_scan(vectors, target):
    """Index of the vector closest to target by cosine distance, lowest index on ties."""
    ds = [cos_dist(v, target) for v in vectors]
    lo = min(ds)
    return next(i for i, d in enumerate(ds) if d <= lo + 1e-12)


def similarity_scan(vectors):
    sums = [math.fsum(1.0 - cos_dist(v, w) if (_dot(v, v) and _dot(w, w)) else 0.0
                      for j, w in enumerate(vectors) if j != i)
            for i, v in enumerate(vectors)]
    hi = max(sums)
    return next(i for i, s in enumerate(sums) if s >= hi - 1e-12)


def grouping_scan(keys, weights):
    """Enumerate each distinct answer group, return the position of the winning group's first member."""
    groups = {}
    for pos, k in enumerate(keys):
        groups.setdefault(k, []).append(pos)
    best = None
    for k, members in groups.items():
        total = 0.0
        for m in members:
            total += weights[m]
        cand = (total, -members[0])
        if best is None or cand > best[0]:
            best = (cand, members[0])
    return best[1]
