"""Extractor primitives and the handle type every other layer consumes.

Explicit constructions here are the GF(2) inner product, its cyclic-shift
multi-bit family, and Toeplitz hashing.  Everything else (the slots that
stand in for heavyweight research constructions) arrives as a certified
random table built in :mod:`extractomat.certify`.

Conventions: input 1 occupies the most significant bits of a composite
truth-table index; output bit ``j`` of a multi-bit extractor sits at the
``j``-th most significant position (``j`` starting at 0 where a
construction is indexed from 0, at 1 where subsets of output bits are
named).
"""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from .bits import BitString
from .errors import InvalidInputError, SizeLimitError

_PARITY8 = np.array([bin(i).count("1") & 1 for i in range(256)],
                    dtype=np.uint8)


def parity_int(v: int) -> int:
    return bin(v).count("1") & 1


def parity_u32(arr: np.ndarray) -> np.ndarray:
    """Bitwise parity of each element of a uint array (values < 2^24)."""
    a = arr.astype(np.uint32)
    return (_PARITY8[a & 0xFF] ^ _PARITY8[(a >> 8) & 0xFF]
            ^ _PARITY8[(a >> 16) & 0xFF])


# ----------------------------------------------------------------------
# Explicit constructions
# ----------------------------------------------------------------------

def ip_extract(x: BitString, y: BitString) -> BitString:
    """GF(2) inner product of two equal-width words: one output bit."""
    if x.width != y.width:
        raise InvalidInputError("inner product requires equal widths")
    return BitString(1, parity_int(x.value & y.value))


def deor_extract(x: BitString, y: BitString, m: int) -> BitString:
    """Shifted-inner-product family: bit j is ``<x, rotl(y, j)>``.

    The cyclic-shift matrices realize the multi-bit two-source family at
    desk scale; whether a given instantiation is strong is decided by the
    oracle per table, never assumed.
    """
    if x.width != y.width:
        raise InvalidInputError("inputs must have equal widths")
    if not 1 <= m <= x.width:
        raise InvalidInputError(f"output width m={m} must be in 1..{x.width}")
    v = 0
    for j in range(m):
        v = (v << 1) | parity_int(x.value & y.rotate_left(j).value)
    return BitString(m, v)


def toeplitz_extract(x: BitString, seed: BitString, m: int) -> BitString:
    """Toeplitz hash ``T.x`` over GF(2).

    The m-by-n matrix T reads its first row from seed bits 1..n and its
    first column from seed bit 1 followed by seed bits n+1..n+m-1.
    """
    n = x.width
    if seed.width != n + m - 1:
        raise InvalidInputError(
            f"seed must have width n+m-1 = {n + m - 1}, got {seed.width}")
    rows = _toeplitz_rows(n, m, seed.value)
    v = 0
    for r in rows:
        v = (v << 1) | parity_int(r & x.value)
    return BitString(m, v)


def _toeplitz_rows(n: int, m: int, seed: int) -> list:
    total = n + m - 1
    first_row = (seed >> (m - 1)) & ((1 << n) - 1)
    rows = [first_row]
    for i in range(1, m):
        col_bit = (seed >> (m - 1 - i)) & 1
        rows.append((rows[-1] >> 1) | (col_bit << (n - 1)))
    return rows


# ----------------------------------------------------------------------
# Handles
# ----------------------------------------------------------------------

KINDS = ("seeded", "2-source", "t-source")


class ExtractorHandle:
    """A named extractor instance with declared parameters.

    Immutable by convention.  The function view maps composite input
    integers to output integers; ``table()`` materializes (and caches)
    the full truth table, which is the canonical object the worst-case
    oracle certifies.

    Parameters
    ----------
    name : str
    kind : str
        One of ``"seeded"``, ``"2-source"``, ``"t-source"``.  A seeded
        handle's second input is the seed.
    input_widths : tuple of int
    m : int
        Output width.
    k_profile : tuple of float
        Declared min-entropy per input.
    eps : float
        Declared error, in (0, 1].
    strong : iterable of int
        0-based input indices the handle is declared strong for.
    provenance : str
        ``"explicit"``, ``"certified-table"`` or ``"composite"``.
    """

    def __init__(self, name: str, kind: str, input_widths, m: int,
                 k_profile, eps: float, strong: Iterable[int] = (),
                 provenance: str = "explicit", record=None,
                 fn: Callable[..., int] | None = None,
                 table: np.ndarray | None = None,
                 vector_fn: Callable[[np.ndarray], np.ndarray] | None = None):
        if kind not in KINDS:
            raise InvalidInputError(f"kind must be one of {KINDS}")
        input_widths = tuple(int(w) for w in input_widths)
        if kind == "seeded" and len(input_widths) != 2:
            raise InvalidInputError("seeded handles take (source, seed)")
        if kind == "2-source" and len(input_widths) != 2:
            raise InvalidInputError("2-source handles take two inputs")
        total = sum(input_widths)
        if total > 24:
            raise SizeLimitError(f"total input width {total} exceeds 24")
        if m < 1:
            raise InvalidInputError("output width must be at least 1")
        if not 0 < eps <= 1:
            raise InvalidInputError("declared error must lie in (0, 1]")
        strong = frozenset(int(i) for i in strong)
        if any(i < 0 or i >= len(input_widths) for i in strong):
            raise InvalidInputError("strong indices must name inputs")
        if fn is None and table is None:
            raise InvalidInputError("a handle needs a function or a table")
        if table is not None:
            table = np.asarray(table, dtype=np.uint32)
            if table.shape != (1 << total,):
                raise InvalidInputError("table length must be 2**total_width")
            if table.size and int(table.max()) >= (1 << m):
                raise InvalidInputError("table entry exceeds output width")
        self.name = name
        self.kind = kind
        self.input_widths = input_widths
        self.m = m
        self.k_profile = tuple(float(k) for k in k_profile)
        self.eps = float(eps)
        self.strong = strong
        self.provenance = provenance
        self.record = record
        self._fn = fn
        self._vector_fn = vector_fn
        self._table = table

    # -- evaluation ----------------------------------------------------

    @property
    def arity(self) -> int:
        return len(self.input_widths)

    @property
    def total_input_width(self) -> int:
        return sum(self.input_widths)

    def index(self, *xs: int) -> int:
        idx = 0
        for v, w in zip(xs, self.input_widths):
            idx = (idx << w) | v
        return idx

    def eval_int(self, *xs: int) -> int:
        if len(xs) != self.arity:
            raise InvalidInputError(f"{self.name} takes {self.arity} inputs")
        for v, w in zip(xs, self.input_widths):
            if not 0 <= v < (1 << w):
                raise InvalidInputError(f"input {v} exceeds width {w}")
        if self._table is not None:
            return int(self._table[self.index(*xs)])
        return int(self._fn(*xs))

    def evaluate(self, *xs: BitString) -> BitString:
        if len(xs) != self.arity:
            raise InvalidInputError(f"{self.name} takes {self.arity} inputs")
        for x, w in zip(xs, self.input_widths):
            if x.width != w:
                raise InvalidInputError(
                    f"{self.name} expects widths {self.input_widths}")
        return BitString(self.m, self.eval_int(*(x.value for x in xs)))

    def __call__(self, *xs: BitString) -> BitString:
        return self.evaluate(*xs)

    def table(self) -> np.ndarray:
        """The full truth table over composite input indices (cached)."""
        if self._table is None:
            n = 1 << self.total_input_width
            if self._vector_fn is not None:
                t = np.asarray(self._vector_fn(np.arange(n, dtype=np.int64)),
                               dtype=np.uint32)
            else:
                t = np.fromiter(
                    (self._fn(*self._split(i)) for i in range(n)),
                    dtype=np.uint32, count=n)
            t.setflags(write=False)
            self._table = t
        return self._table

    def _split(self, idx: int) -> tuple:
        vals = []
        for w in reversed(self.input_widths):
            vals.append(idx & ((1 << w) - 1))
            idx >>= w
        return tuple(reversed(vals))

    def with_declared(self, *, eps: float | None = None, k_profile=None,
                      strong=None, name: str | None = None) -> "ExtractorHandle":
        """Copy with updated declared parameters (same function)."""
        return ExtractorHandle(
            name or self.name, self.kind, self.input_widths, self.m,
            k_profile if k_profile is not None else self.k_profile,
            eps if eps is not None else self.eps,
            strong if strong is not None else self.strong,
            self.provenance, self.record,
            fn=self._fn, table=self._table, vector_fn=self._vector_fn)

    def __repr__(self):
        return (f"ExtractorHandle({self.name!r}, {self.kind}, "
                f"n={self.input_widths}, m={self.m}, eps={self.eps:.4g})")


def strong_projection(h: ExtractorHandle, subset) -> ExtractorHandle:
    """One-bit handle computing the XOR of the output bits in ``subset``.

    ``subset`` holds 1-based output-bit positions, most significant
    first.  The projection inherits the parent's declared parameters and
    strongness set.
    """
    subset = sorted(set(int(i) for i in subset))
    if not subset:
        raise InvalidInputError("projection subset must be non-empty")
    if subset[0] < 1 or subset[-1] > h.m:
        raise InvalidInputError(
            f"projection subset must lie within 1..{h.m}")
    mask = 0
    for i in subset:
        mask |= 1 << (h.m - i)
    parent_table = h.table()
    table = parity_u32(parent_table & np.uint32(mask)).astype(np.uint32)
    label = ",".join(str(i) for i in subset)
    return ExtractorHandle(
        f"{h.name}[xor {label}]", h.kind, h.input_widths, 1,
        h.k_profile, h.eps, h.strong, provenance=h.provenance,
        record=h.record, table=table)


# ----------------------------------------------------------------------
# Handle builders for the explicit constructions
# ----------------------------------------------------------------------

def deor_declared_eps(n: int, k1: float, k2: float, m: int) -> float:
    """Shifted-inner-product error bound 2^-((k1+k2+1-n-m)/2), capped at 1."""
    return min(1.0, 2.0 ** (-(k1 + k2 + 1 - n - m) / 2.0))


def lhl_declared_eps(k: float, m: int) -> float:
    """Leftover-hash error bound 0.5 * 2^((m-k)/2), capped at 1."""
    return min(1.0, 0.5 * 2.0 ** ((m - k) / 2.0))


def ip_handle(n: int, k1: float | None = None, k2: float | None = None) -> ExtractorHandle:
    k1 = n if k1 is None else k1
    k2 = n if k2 is None else k2

    def vec(idx: np.ndarray) -> np.ndarray:
        x = idx >> n
        y = idx & ((1 << n) - 1)
        return parity_u32(np.bitwise_and(x, y))

    return ExtractorHandle(
        f"ip[n={n}]", "2-source", (n, n), 1, (k1, k2),
        deor_declared_eps(n, k1, k2, 1), strong=(0, 1),
        provenance="explicit", fn=lambda x, y: parity_int(x & y),
        vector_fn=vec)


def deor_handle(n: int, m: int, k1: float | None = None,
                k2: float | None = None) -> ExtractorHandle:
    k1 = n if k1 is None else k1
    k2 = n if k2 is None else k2
    mask = (1 << n) - 1

    def fn(x: int, y: int) -> int:
        v = 0
        for j in range(m):
            rot = ((y << j) | (y >> (n - j))) & mask if j else y
            v = (v << 1) | parity_int(x & rot)
        return v

    def vec(idx: np.ndarray) -> np.ndarray:
        x = idx >> n
        y = idx & mask
        out = np.zeros(idx.shape, dtype=np.uint32)
        for j in range(m):
            rot = ((y << j) | (y >> (n - j))) & mask if j else y
            out = (out << 1) | parity_u32(np.bitwise_and(x, rot))
        return out

    return ExtractorHandle(
        f"deor[n={n},m={m}]", "2-source", (n, n), m, (k1, k2),
        deor_declared_eps(n, k1, k2, m), strong=(0, 1),
        provenance="explicit", fn=fn, vector_fn=vec)


def toeplitz_handle(n: int, m: int, k: float | None = None) -> ExtractorHandle:
    k = n if k is None else k
    d = n + m - 1

    def fn(x: int, seed: int) -> int:
        v = 0
        for r in _toeplitz_rows(n, m, seed):
            v = (v << 1) | parity_int(r & x)
        return v

    return ExtractorHandle(
        f"toeplitz[n={n},m={m}]", "seeded", (n, d), m, (k, float(d)),
        lhl_declared_eps(k, m), strong=(1,),
        provenance="explicit", fn=fn)


def table_handle(name: str, kind: str, input_widths, m: int, table,
                 k_profile=None, eps: float = 1.0, strong=(),
                 provenance: str = "certified-table",
                 record=None) -> ExtractorHandle:
    input_widths = tuple(input_widths)
    if k_profile is None:
        k_profile = tuple(float(w) for w in input_widths)
    return ExtractorHandle(name, kind, input_widths, m, k_profile, eps,
                           strong, provenance, record, table=table)
