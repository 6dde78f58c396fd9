"""Structured source classes: flat, block, and somewhere-random.

Flat sources are the extreme points of the min-entropy-k class, so every
worst-case enumeration in the oracle runs over them.  Block-source and
somewhere-random checks are exact: conditioning is only ever performed on
prefixes of positive probability.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dist import Distribution, JointDistribution
from .errors import InvalidInputError


class FlatSource:
    """A uniform distribution on a support of size exactly ``2**k``.

    Parameters
    ----------
    width : int
        Bit width of the outcome space.
    support : iterable of int
        The support set; its size must be a power of two.
    """

    __slots__ = ("width", "support", "k")

    def __init__(self, width: int, support):
        support = tuple(sorted(set(support)))
        if not support:
            raise InvalidInputError("empty support")
        if support[-1] >= (1 << width):
            raise InvalidInputError("support element exceeds width")
        k = len(support).bit_length() - 1
        if (1 << k) != len(support):
            raise InvalidInputError(
                f"support size {len(support)} is not a power of two")
        object.__setattr__(self, "width", width)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "k", k)

    def __setattr__(self, *_):
        raise AttributeError("FlatSource is immutable")

    def to_distribution(self, exact: bool = False) -> Distribution:
        return Distribution.flat(self.width, self.support, exact=exact)

    @classmethod
    def random(cls, width: int, k: int, rng: np.random.Generator) -> "FlatSource":
        support = rng.choice(1 << width, size=1 << k, replace=False)
        return cls(width, (int(s) for s in support))

    @classmethod
    def enumerate_all(cls, width: int, k: int):
        """All flat k-sources of the given width, in lexicographic order."""
        for support in itertools.combinations(range(1 << width), 1 << k):
            yield cls(width, support)

    def __repr__(self):
        return f"FlatSource(width={self.width}, k={self.k})"


@dataclass(frozen=True)
class BlockSourceSpec:
    """Widths and per-block min-entropy thresholds of a block source."""

    block_widths: tuple
    thresholds: tuple

    def __post_init__(self):
        if len(self.block_widths) != len(self.thresholds):
            raise InvalidInputError("one threshold per block required")
        if any(w < 1 for w in self.block_widths):
            raise InvalidInputError("block widths must be positive")


@dataclass
class BlockSourceVerdict:
    """Outcome of a block-source check.

    ``violating_mass[i]`` is the total probability of prefixes for which
    block ``i`` misses its threshold; the overall verdict is true iff all
    of these are zero.  ``worst`` identifies the minimizing prefix as
    ``(block_index, prefix_values, conditional_min_entropy)``.
    """

    ok: bool
    worst: tuple | None
    violating_mass: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def check_block_source(j: JointDistribution, spec: BlockSourceSpec) -> BlockSourceVerdict:
    """Check a joint against a block-source spec, exactly.

    Every positive-probability prefix assignment is conditioned on; zero
    probability prefixes are vacuous.  The verdict carries the worst
    offending prefix and, per block, the probability mass of prefixes
    that fail the threshold.
    """
    widths = [w for _, w in j.parts]
    if tuple(widths) != tuple(spec.block_widths):
        raise InvalidInputError(
            f"joint widths {tuple(widths)} do not match spec {spec.block_widths}")
    labels = list(j.labels())
    nblocks = len(labels)
    ok = True
    worst = None
    worst_gap = None
    violating_mass = []
    for i in range(nblocks):
        prefix_labels = labels[:i]
        vmass = Fraction(0) if j.exact else 0.0
        if not prefix_labels:
            d = j.marginal_dist(labels[i])
            h = _dist_min_entropy(d)
            if h < spec.thresholds[i] - 1e-9:
                ok = False
                vmass += 1 if not j.exact else Fraction(1)
                gap = spec.thresholds[i] - h
                if worst_gap is None or gap > worst_gap:
                    worst_gap, worst = gap, (i, (), h)
        else:
            sub = j.marginal(prefix_labels + labels[i:i + 1])
            pw = sum(sub._shifts[lbl][1] for lbl in prefix_labels)
            bw = sub.total_width - pw
            table = {}
            for idx in range(1 << sub.total_width):
                p = sub.mass[idx]
                if p > 0:
                    pre = idx >> bw
                    table.setdefault(pre, {})[idx & ((1 << bw) - 1)] = p
            for pre, cells in table.items():
                tot = sum(cells.values())
                mx = max(cells.values())
                # H(block | prefix) = -log2(max/tot)
                h = (math.log2(tot.numerator) - math.log2(tot.denominator)
                     if isinstance(tot, Fraction) else math.log2(tot))
                h -= (math.log2(mx.numerator) - math.log2(mx.denominator)
                      if isinstance(mx, Fraction) else math.log2(mx))
                if h < spec.thresholds[i] - 1e-9:
                    ok = False
                    vmass += tot
                    gap = spec.thresholds[i] - h
                    if worst_gap is None or gap > worst_gap:
                        prefix_vals = _split_prefix(pre, [j.part_width(l) for l in prefix_labels])
                        worst_gap, worst = gap, (i, prefix_vals, h)
        violating_mass.append(vmass)
    return BlockSourceVerdict(ok=ok, worst=worst, violating_mass=violating_mass)


def _split_prefix(value: int, widths):
    out = []
    for w in reversed(widths):
        out.append(value & ((1 << w) - 1))
        value >>= w
    return tuple(reversed(out))


def _dist_min_entropy(d: Distribution) -> float:
    mx = d.max_mass()
    if isinstance(mx, Fraction):
        return math.log2(mx.denominator) - math.log2(mx.numerator)
    return -math.log2(mx)


@dataclass(frozen=True)
class SomewhereRandomSpec:
    """Shape of an elementary somewhere-random source: ``rows`` rows of
    ``row_width`` bits, at least one of which is exactly uniform."""

    rows: int
    row_width: int

    def check(self, j: JointDistribution, tol: float = 1e-12) -> tuple:
        """Verdict plus the index of the first uniform row, if any.

        Only the elementary case is decided: some row's marginal must be
        exactly uniform (within ``tol`` in float mode, exactly in exact
        mode).  Convex combinations of elementary sources are out of
        desk-scale reach and return ``(False, None)`` unless a row is
        itself uniform.
        """
        if len(j.parts) != self.rows:
            raise InvalidInputError(f"expected {self.rows} rows")
        if any(w != self.row_width for _, w in j.parts):
            raise InvalidInputError(f"rows must be {self.row_width} bits wide")
        for i, (lbl, _) in enumerate(j.parts):
            d = j.marginal_dist(lbl)
            if d.exact:
                if all(x == Fraction(1, 1 << d.width) for x in d.mass):
                    return True, i
            else:
                if np.allclose(d.mass, 1.0 / (1 << d.width), atol=tol, rtol=0):
                    return True, i
        return False, None
