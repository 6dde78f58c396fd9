"""Fixed-width binary words.

A :class:`BitString` is an immutable word of 1 to 24 bits.  Bit positions
are counted from the most significant end, so the string ``101`` has bit 1
set, bit 2 clear, bit 3 set (positions are 1-based, matching the usual
subscript notation for words).  Hex encodings are most-significant-bit
first, left-padded to the width.
"""

from __future__ import annotations

MAX_WIDTH = 24


class BitString:
    """An immutable fixed-width binary word.

    Parameters
    ----------
    width : int
        Number of bits, between 1 and 24.
    value : int
        Integer value of the word; must fit in ``width`` bits.
    """

    __slots__ = ("width", "value")

    def __init__(self, width: int, value: int):
        if not 1 <= width <= MAX_WIDTH:
            raise _err(f"width must be in 1..{MAX_WIDTH}, got {width}")
        if not 0 <= value < (1 << width):
            raise _err(f"value {value} does not fit in {width} bits")
        object.__setattr__(self, "width", width)
        object.__setattr__(self, "value", value)

    def __setattr__(self, *_):
        raise AttributeError("BitString is immutable")

    @classmethod
    def from_bits(cls, bits) -> "BitString":
        """Build from an iterable of 0/1, most significant bit first."""
        bits = list(bits)
        v = 0
        for b in bits:
            v = (v << 1) | (b & 1)
        return cls(len(bits), v)

    @classmethod
    def from_str(cls, s: str) -> "BitString":
        """Build from a string of '0'/'1' characters like ``"1010"``."""
        return cls(len(s), int(s, 2))

    @classmethod
    def from_hex(cls, width: int, s: str) -> "BitString":
        return cls(width, int(s, 16))

    def bit(self, i: int) -> int:
        """Bit at 1-based position ``i``, counted from the most significant end."""
        if not 1 <= i <= self.width:
            raise _err(f"bit position {i} out of range 1..{self.width}")
        return (self.value >> (self.width - i)) & 1

    def bits(self) -> tuple:
        return tuple(self.bit(i) for i in range(1, self.width + 1))

    def concat(self, other: "BitString") -> "BitString":
        """Concatenation ``self || other``; self supplies the high bits."""
        w = self.width + other.width
        if w > MAX_WIDTH:
            raise _err(f"concatenated width {w} exceeds {MAX_WIDTH}")
        return BitString(w, (self.value << other.width) | other.value)

    def slice(self, start: int, length: int) -> "BitString":
        """The ``length`` bits starting at 1-based position ``start``."""
        if start < 1 or length < 1 or start + length - 1 > self.width:
            raise _err(
                f"slice [{start}, {start + length - 1}] exceeds width {self.width}")
        shift = self.width - (start + length - 1)
        return BitString(length, (self.value >> shift) & ((1 << length) - 1))

    def take(self, length: int) -> "BitString":
        """The first (most significant) ``length`` bits."""
        return self.slice(1, length)

    def xor(self, other: "BitString") -> "BitString":
        if other.width != self.width:
            raise _err("xor requires equal widths")
        return BitString(self.width, self.value ^ other.value)

    def rotate_left(self, j: int) -> "BitString":
        """Cyclic left shift by ``j`` positions."""
        j %= self.width
        if j == 0:
            return self
        mask = (1 << self.width) - 1
        v = ((self.value << j) | (self.value >> (self.width - j))) & mask
        return BitString(self.width, v)

    def xor_subset(self, subset) -> int:
        """XOR of the bits at the 1-based positions in ``subset``."""
        positions = sorted(set(subset))
        if not positions:
            raise _err("subset must be non-empty")
        out = 0
        for i in positions:
            out ^= self.bit(i)
        return out

    def parity(self) -> int:
        return bin(self.value).count("1") & 1

    def to_hex(self) -> str:
        """Hex encoding, most significant bit first, zero padded."""
        ndigits = (self.width + 3) // 4
        return format(self.value, f"0{ndigits}x")

    def __str__(self) -> str:
        return format(self.value, f"0{self.width}b")

    def __repr__(self) -> str:
        return f"BitString({self.width}, 0b{self})"

    def __eq__(self, other) -> bool:
        return (isinstance(other, BitString)
                and other.width == self.width and other.value == self.value)

    def __hash__(self) -> int:
        return hash((self.width, self.value))


def concat_all(parts) -> BitString:
    """Concatenate a sequence of BitStrings, first part highest."""
    parts = list(parts)
    if not parts:
        raise _err("cannot concatenate an empty sequence")
    out = parts[0]
    for p in parts[1:]:
        out = out.concat(p)
    return out


def _err(msg):
    from .errors import InvalidInputError
    return InvalidInputError(msg)
