import pytest
from hypothesis import given, strategies as st

from extractomat.bits import BitString, concat_all
from extractomat.errors import InvalidInputError


def test_construction_and_str():
    b = BitString.from_str("1010")
    assert b.width == 4 and b.value == 10
    assert str(b) == "1010"
    assert b.bits() == (1, 0, 1, 0)


def test_width_is_enforced():
    with pytest.raises(InvalidInputError):
        BitString(3, 8)
    with pytest.raises(InvalidInputError):
        BitString(0, 0)
    with pytest.raises(InvalidInputError):
        BitString(25, 0)


def test_immutability():
    b = BitString(4, 5)
    with pytest.raises(AttributeError):
        b.value = 7


def test_concat_slice_roundtrip():
    a = BitString.from_str("101")
    b = BitString.from_str("0011")
    c = a.concat(b)
    assert str(c) == "1010011"
    assert c.slice(1, 3) == a
    assert c.slice(4, 4) == b
    assert c.take(2) == BitString.from_str("10")


def test_slice_bounds():
    b = BitString.from_str("1010")
    with pytest.raises(InvalidInputError):
        b.slice(3, 3)
    with pytest.raises(InvalidInputError):
        b.slice(0, 2)


def test_bit_positions_are_msb_first():
    b = BitString.from_str("100")
    assert b.bit(1) == 1 and b.bit(2) == 0 and b.bit(3) == 0


def test_rotate_left():
    b = BitString.from_str("1100")
    assert str(b.rotate_left(1)) == "1001"
    assert str(b.rotate_left(4)) == "1100"


def test_xor_subset_msb_first():
    # subset positions are 1-based from the most significant end
    b = BitString.from_str("101")
    assert b.xor_subset({1, 3}) == 0
    assert b.xor_subset({1}) == 1
    with pytest.raises(InvalidInputError):
        b.xor_subset(set())


def test_hex_msb_first():
    b = BitString.from_str("111100001010")
    assert b.to_hex() == "f0a"
    assert BitString.from_hex(12, "f0a") == b


@given(st.integers(1, 12), st.data())
def test_concat_width_is_sum(w, data):
    v1 = data.draw(st.integers(0, (1 << w) - 1))
    w2 = data.draw(st.integers(1, 24 - w))
    v2 = data.draw(st.integers(0, (1 << w2) - 1))
    c = BitString(w, v1).concat(BitString(w2, v2))
    assert c.width == w + w2
    assert c.value == (v1 << w2) | v2


@given(st.lists(st.integers(0, 1), min_size=1, max_size=24))
def test_from_bits_roundtrip(bits):
    assert BitString.from_bits(bits).bits() == tuple(bits)


def test_concat_all():
    parts = [BitString.from_str(s) for s in ("10", "01", "1")]
    assert str(concat_all(parts)) == "10011"
    with pytest.raises(InvalidInputError):
        concat_all([])
