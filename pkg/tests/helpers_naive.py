"""Independent brute-force oracles used to cross-check the library.

Everything here is deliberately naive (dict counting, Fractions, no
numpy, no shared code with the package) so that an agreement between
these functions and the package's fast paths is meaningful.
"""

import itertools
from fractions import Fraction


def parity(v: int) -> int:
    return bin(v).count("1") & 1


def naive_tv_from_uniform(cells: dict, total: int, m: int) -> Fraction:
    """TV of {(z, group): count} from U_m x group-marginal, over ``total``."""
    groups = {}
    for (z, g), c in cells.items():
        groups.setdefault(g, {})[z] = c
    dist = Fraction(0)
    for zc in groups.values():
        gm = sum(zc.values())
        ref = Fraction(gm, 1 << m)
        for z in range(1 << m):
            c = zc.get(z, 0)
            if c > ref:
                dist += c - ref
    return dist / total


def naive_worst_2source(fn, n1, n2, m, k1, k2, strong=None) -> Fraction:
    """Exact worst-case (strong) error by full flat-pair enumeration."""
    best = Fraction(0)
    K1, K2 = 1 << k1, 1 << k2
    for s1 in itertools.combinations(range(1 << n1), K1):
        for s2 in itertools.combinations(range(1 << n2), K2):
            cells = {}
            for x in s1:
                for y in s2:
                    z = fn(x, y)
                    g = x if strong == 0 else (y if strong == 1 else None)
                    cells[(z, g)] = cells.get((z, g), 0) + 1
            best = max(best, naive_tv_from_uniform(cells, K1 * K2, m))
    return best


def naive_worst_seeded(fn, n, d, m, k, strong=True) -> Fraction:
    """Exact worst-case seeded error by full flat-source enumeration."""
    best = Fraction(0)
    K = 1 << k
    for s in itertools.combinations(range(1 << n), K):
        cells = {}
        for x in s:
            for seed in range(1 << d):
                z = fn(x, seed)
                g = seed if strong else None
                cells[(z, g)] = cells.get((z, g), 0) + 1
        best = max(best, naive_tv_from_uniform(cells, K * (1 << d), m))
    return best


def naive_cond_min_entropy(atoms: dict) -> Fraction:
    """Optimal guessing probability from {(x, e): mass}."""
    best = {}
    for (x, e), p in atoms.items():
        if p > best.get(e, Fraction(0)):
            best[e] = p
    return sum(best.values(), Fraction(0))


def naive_joint_tv(p: dict, q: dict) -> Fraction:
    keys = set(p) | set(q)
    return sum((p.get(k, Fraction(0)) - q.get(k, Fraction(0))
                for k in keys
                if p.get(k, Fraction(0)) > q.get(k, Fraction(0))),
               Fraction(0))
