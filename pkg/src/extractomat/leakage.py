"""Classical side-information model: shared randomness plus per-source leaks.

An adversary prepares a shared classical register ``A`` (split into one
slice per source), hands slice ``A_i`` to the holder of source ``X_i``,
and receives back a deterministic leak ``E_i = f_i(X_i, A_i)``.  The
quality of source ``i`` is measured at the imaginary step right after its
own leak and before anybody else's: the conditional min-entropy of
``X_i`` given ``(E_i, A_{-i})``.

Randomized leaking is modelled by widening the shared register; that
keeps every joint exactly computable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .dist import Distribution, JointDistribution, MAX_TOTAL_WIDTH
from .errors import InvalidInputError, SizeLimitError


@dataclass(frozen=True)
class LeakageScenario:
    """Per-source deterministic leakage maps over a shared register.

    Parameters
    ----------
    source_widths : tuple of int
        Bit widths of the sources ``X_1..X_t``.
    shared_width : int
        Width of the shared register ``A``; 0 means no shared randomness.
    slices : tuple of (offset, width)
        Per-source slice ``A_i`` of the shared register (offset of the
        most significant bit, 0-based).  Slices may overlap, which models
        identical copies handed to several sources.
    leak_maps : tuple
        Per-source ``f(x_i, a_i) -> e_i`` callables, or ``None`` for a
        trivial (empty) leak.
    e_widths : tuple of int
        Declared output width of each leak; 0 for trivial leaks.
    model : str
        ``"OA"`` (at most one non-trivial leak) or ``"GE"``.
    """

    source_widths: tuple
    shared_width: int = 0
    slices: tuple = ()
    leak_maps: tuple = ()
    e_widths: tuple = ()
    model: str = "GE"

    def __post_init__(self):
        t = len(self.source_widths)
        if not self.slices:
            object.__setattr__(self, "slices", _default_slices(
                t, self.shared_width))
        if not self.leak_maps:
            object.__setattr__(self, "leak_maps", (None,) * t)
        if not self.e_widths:
            object.__setattr__(self, "e_widths", (0,) * t)
        if not (len(self.slices) == len(self.leak_maps)
                == len(self.e_widths) == t):
            raise InvalidInputError("per-source fields must have equal length")
        for off, w in self.slices:
            if off < 0 or off + w > self.shared_width:
                raise InvalidInputError("slice exceeds shared register")
        nontrivial = sum(1 for i in range(t)
                         if self.leak_maps[i] is not None and self.e_widths[i] > 0)
        if self.model == "OA" and nontrivial > 1:
            raise InvalidInputError(
                "OA model allows leakage from only one source")
        if self.model not in ("OA", "GE"):
            raise InvalidInputError("model must be OA or GE")

    @property
    def t(self) -> int:
        return len(self.source_widths)

    @classmethod
    def trivial(cls, source_widths) -> "LeakageScenario":
        return cls(tuple(source_widths), model="GE")

    @classmethod
    def oa(cls, source_widths, index: int, leak_map: Callable, e_width: int,
           shared_width: int = 0, slices=()) -> "LeakageScenario":
        """One-sided scenario leaking only from source ``index`` (0-based)."""
        t = len(source_widths)
        maps = [None] * t
        ews = [0] * t
        maps[index] = leak_map
        ews[index] = e_width
        return cls(tuple(source_widths), shared_width, tuple(slices),
                   tuple(maps), tuple(ews), model="OA")

    def slice_value(self, a: int, i: int) -> int:
        off, w = self.slices[i]
        if w == 0:
            return 0
        shift = self.shared_width - (off + w)
        return (a >> shift) & ((1 << w) - 1)

    def complement_value(self, a: int, i: int) -> tuple:
        """Value and width of ``A_{-i}``: the register with slice i removed."""
        off, w = self.slices[i]
        high_w = off
        low_w = self.shared_width - (off + w)
        high = a >> (self.shared_width - high_w) if high_w else 0
        low = a & ((1 << low_w) - 1) if low_w else 0
        return (high << low_w) | low, high_w + low_w

    def leak_value(self, i: int, x: int, a: int) -> int:
        fn = self.leak_maps[i]
        if fn is None:
            return 0
        e = int(fn(x, self.slice_value(a, i)))
        if not 0 <= e < (1 << max(self.e_widths[i], 1)):
            raise InvalidInputError(
                f"leak map {i} emitted {e}, exceeding declared width "
                f"{self.e_widths[i]}")
        return e


@dataclass
class LeakageResult:
    """Joint after all leaks, plus the per-source entropy ledger."""

    joint: JointDistribution
    k: list  # conditional min-entropy of X_i at its imaginary step, in bits


def leakage_apply(sources: Sequence[Distribution], sc: LeakageScenario,
                  shared: Distribution | None = None) -> LeakageResult:
    """Apply every leak and return the exact joint over (X_1.., E_1..).

    ``k[i]`` is measured at the imaginary step where only leak ``i`` has
    fired: the conditional min-entropy of ``X_i`` given ``(E_i, A_{-i})``.
    Sources are independent by construction and leaking operations
    commute, so the order of application does not matter.
    """
    t = sc.t
    if len(sources) != t:
        raise InvalidInputError("one distribution per source required")
    for d, w in zip(sources, sc.source_widths):
        if d.width != w:
            raise InvalidInputError("source width mismatch with scenario")
    if sc.shared_width > 0:
        if shared is None:
            raise InvalidInputError("scenario uses a shared register; "
                                    "pass its distribution")
        if shared.width != sc.shared_width:
            raise InvalidInputError("shared register width mismatch")
    exact = all(d.exact for d in sources) and (shared is None or shared.exact)

    e_parts = [(f"E{i + 1}", sc.e_widths[i]) for i in range(t)
               if sc.e_widths[i] > 0]
    parts = [(f"X{i + 1}", sc.source_widths[i]) for i in range(t)] + e_parts
    total = sum(w for _, w in parts)
    if total > MAX_TOTAL_WIDTH:
        raise SizeLimitError(f"joint over {total} bits exceeds the desk cap")

    zero = Fraction(0) if exact else 0.0
    atoms: dict = {}
    shared_items = (_support_items(shared) if sc.shared_width > 0
                    else [(0, Fraction(1) if exact else 1.0)])
    for xs, px in _tuple_items(sources):
        for a, pa in shared_items:
            p = px * pa
            es = tuple(sc.leak_value(i, xs[i], a) for i in range(t)
                       if sc.e_widths[i] > 0)
            key = xs + es
            atoms[key] = atoms.get(key, zero) + p
    joint = JointDistribution.from_atoms(parts, atoms, exact=exact) if exact \
        else _joint_from_float_atoms(parts, atoms)

    ks = [_entropy_at_imaginary_step(sources, sc, shared, i, exact)
          for i in range(t)]
    return LeakageResult(joint=joint, k=ks)


def _entropy_at_imaginary_step(sources, sc, shared, i, exact) -> float:
    """H_min(X_i | E_i, A_{-i}) right after leak i alone has fired."""
    shared_items = (_support_items(shared) if sc.shared_width > 0
                    else [(0, Fraction(1) if exact else 1.0)])
    best: dict = {}
    zero = Fraction(0) if exact else 0.0
    guess: dict = {}
    for x, px in _support_items(sources[i]):
        for a, pa in shared_items:
            e = sc.leak_value(i, x, a)
            a_minus, _ = sc.complement_value(a, i)
            key = (e, a_minus)
            p = px * pa
            cell = guess.setdefault(key, {})
            cell[x] = cell.get(x, zero) + p
    pg = zero
    for cell in guess.values():
        pg += max(cell.values())
    if isinstance(pg, Fraction):
        return math.log2(pg.denominator) - math.log2(pg.numerator)
    return -math.log2(pg)


def _support_items(d: Distribution):
    return [(v, d.mass[v]) for v in d.support()]


def _tuple_items(sources):
    items = [(0,) * 0]
    acc = [((), Fraction(1) if sources[0].exact else 1.0)]
    for d in sources:
        nxt = []
        for xs, p in acc:
            for v, pv in _support_items(d):
                nxt.append((xs + (v,), p * pv))
        acc = nxt
    return acc


def _joint_from_float_atoms(parts, atoms):
    import numpy as np
    total = sum(w for _, w in parts)
    mass = np.zeros(1 << total)
    for values, p in atoms.items():
        idx = 0
        for (_, w), v in zip(parts, values):
            idx = (idx << w) | v
        mass[idx] += p
    return JointDistribution(parts, mass)


def _default_slices(t: int, shared_width: int) -> tuple:
    if shared_width == 0:
        return tuple((0, 0) for _ in range(t))
    base = shared_width // t
    out = []
    pos = 0
    for i in range(t):
        w = base if i < t - 1 else shared_width - pos
        out.append((pos, w))
        pos += w
    return tuple(out)
