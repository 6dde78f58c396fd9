from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from extractomat.dist import (Distribution, JointDistribution,
                              cond_min_entropy, distance_from_uniform_on,
                              min_entropy, smooth_cond_min_entropy,
                              statistical_distance, xor_project)
from extractomat.errors import InvalidInputError, SizeLimitError

from helpers_naive import naive_cond_min_entropy


# ----------------------------------------------------------------------
# min-entropy
# ----------------------------------------------------------------------

def test_min_entropy_uniform():
    assert min_entropy(Distribution.uniform(4)) == pytest.approx(4.0)


def test_min_entropy_point_mass():
    assert min_entropy(Distribution.point_mass(3, 5)) == pytest.approx(0.0)


def test_min_entropy_mixed():
    d = Distribution(2, [0.5, 0.25, 0.25, 0.0])
    assert min_entropy(d) == pytest.approx(1.0)


def test_mass_must_normalize():
    with pytest.raises(InvalidInputError):
        Distribution(2, [0.5, 0.25, 0.25, 0.1])
    with pytest.raises(InvalidInputError):
        Distribution(1, [Fraction(1, 3), Fraction(1, 3)])
    with pytest.raises(InvalidInputError):
        Distribution(1, [-0.5, 1.5])


def test_exact_mode_width_cap():
    with pytest.raises(SizeLimitError):
        Distribution(13, [Fraction(1, 1 << 13)] * (1 << 13))


# ----------------------------------------------------------------------
# statistical distance
# ----------------------------------------------------------------------

def test_distance_identity():
    d = Distribution.uniform(3)
    assert statistical_distance(d, d) == 0.0


def test_distance_point_vs_uniform_1bit():
    p = Distribution.point_mass(1, 0, exact=True)
    assert statistical_distance(p, Distribution.uniform(1, exact=True)) \
        == Fraction(1, 2)


def test_distance_half_support_vs_uniform():
    p = Distribution(2, [Fraction(1, 2), Fraction(1, 2), 0, 0])
    q = Distribution.uniform(2, exact=True)
    assert statistical_distance(p, q) == Fraction(1, 2)


def test_distance_width_mismatch():
    with pytest.raises(InvalidInputError):
        statistical_distance(Distribution.uniform(2), Distribution.uniform(3))


def _random_dist(rng, width):
    counts = rng.multinomial(200, np.full(1 << width, 1 / (1 << width)))
    return Distribution(width, counts / 200.0)


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_distance_is_a_metric(seed):
    rng = np.random.default_rng(seed)
    p, q, r = (_random_dist(rng, 3) for _ in range(3))
    dpq = statistical_distance(p, q)
    assert dpq == pytest.approx(statistical_distance(q, p))
    assert 0.0 <= dpq <= 1.0
    assert statistical_distance(p, r) <= dpq + statistical_distance(q, r) + 1e-12
    assert statistical_distance(p, p) == 0.0


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_distance_monotone_under_postprocessing(seed):
    # deterministic post-processing can only lose distinguishing power
    rng = np.random.default_rng(seed)
    p, q = _random_dist(rng, 3), _random_dist(rng, 3)
    fmap = rng.integers(0, 4, size=8)

    def push(d):
        out = np.zeros(4)
        np.add.at(out, fmap, d.as_floats())
        return Distribution(2, out)

    assert statistical_distance(push(p), push(q)) \
        <= statistical_distance(p, q) + 1e-12


# ----------------------------------------------------------------------
# joints / conditional min-entropy
# ----------------------------------------------------------------------

def _joint_first_bit_leak():
    return JointDistribution.from_atoms(
        [("X", 2), ("E", 1)], {(v, v >> 1): Fraction(1, 4) for v in range(4)})


def test_cond_min_entropy_one_bit_revealed():
    assert cond_min_entropy(_joint_first_bit_leak(), "X", ["E"]) \
        == pytest.approx(1.0)


def test_cond_min_entropy_independence():
    j = JointDistribution.product(
        [("X", Distribution.uniform(3, exact=True)),
         ("E", Distribution.point_mass(1, 0, exact=True))])
    assert cond_min_entropy(j, "X", ["E"]) == pytest.approx(3.0)


def test_cond_min_entropy_full_leak():
    j = JointDistribution.from_atoms(
        [("X", 2), ("E", 2)], {(v, v): Fraction(1, 4) for v in range(4)})
    assert cond_min_entropy(j, "X", ["E"]) == pytest.approx(0.0)


def test_cond_min_entropy_overlap_rejected():
    with pytest.raises(InvalidInputError):
        cond_min_entropy(_joint_first_bit_leak(), "X", ["X"])


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_guessing_probability_matches_naive(seed):
    rng = np.random.default_rng(seed)
    denom = 64
    counts = rng.multinomial(denom, np.full(16, 1 / 16))
    atoms = {(i >> 2, i & 3): Fraction(int(c), denom)
             for i, c in enumerate(counts) if c}
    j = JointDistribution.from_atoms([("X", 2), ("E", 2)], atoms)
    assert j.guessing_probability("X", ["E"]) == naive_cond_min_entropy(atoms)


def test_condition_and_marginal():
    j = _joint_first_bit_leak()
    m = j.marginal_dist("X")
    assert m.mass == tuple(Fraction(1, 4) for _ in range(4))
    c = j.condition("E", 1)
    assert c.marginal_dist("X").mass == (0, 0, Fraction(1, 2), Fraction(1, 2))
    with pytest.raises(InvalidInputError):
        JointDistribution.from_atoms(
            [("X", 1), ("E", 1)], {(0, 0): Fraction(1)}).condition("E", 1)


def test_joint_size_cap():
    with pytest.raises(SizeLimitError):
        JointDistribution([("A", 20), ("B", 8)], np.zeros(1 << 28))


# ----------------------------------------------------------------------
# xor projection
# ----------------------------------------------------------------------

def test_xor_project_uniform_stays_uniform():
    j = JointDistribution.product([("Z", Distribution.uniform(3, exact=True))])
    p = xor_project(j, "Z", {1, 2})
    assert p.marginal_dist("Z").mass == (Fraction(1, 2), Fraction(1, 2))


def test_xor_project_single_bit_identity():
    j = JointDistribution.from_atoms([("Z", 1)], {(1,): Fraction(1)})
    p = xor_project(j, "Z", {1})
    assert p.mass == j.mass


def test_xor_project_fixed_value():
    j = JointDistribution.from_atoms([("Z", 3)], {(0b101,): Fraction(1)})
    p = xor_project(j, "Z", {1, 3})
    assert p.mass[0] == 1  # 1 xor 1 = 0


def test_xor_project_empty_subset_rejected():
    j = JointDistribution.from_atoms([("Z", 2)], {(0,): Fraction(1)})
    with pytest.raises(InvalidInputError):
        xor_project(j, "Z", set())


# ----------------------------------------------------------------------
# smoothing and serialization
# ----------------------------------------------------------------------

def test_smooth_entropy_at_least_plain():
    j = _joint_first_bit_leak()
    plain = cond_min_entropy(j, "X", ["E"])
    smooth = smooth_cond_min_entropy(j, "X", ["E"], Fraction(1, 8))
    assert smooth >= plain - 1e-12


def test_smooth_entropy_removes_peak():
    # point mass with eps mass elsewhere: removing the spike helps
    j = JointDistribution.from_atoms(
        [("X", 2), ("E", 1)],
        {(0, 0): Fraction(5, 8), (1, 0): Fraction(1, 8),
         (2, 0): Fraction(1, 8), (3, 0): Fraction(1, 8)})
    plain = cond_min_entropy(j, "X", ["E"])
    smooth = smooth_cond_min_entropy(j, "X", ["E"], Fraction(1, 2))
    assert smooth > plain + 0.5


def test_serialization_roundtrip():
    d = Distribution(3, np.arange(1, 9) / 36.0)
    d2 = Distribution.from_bytes(d.to_bytes())
    assert np.allclose(d.mass, d2.mass)
    j = JointDistribution.product(
        [("X", Distribution.uniform(2)), ("Y", d)])
    j2 = JointDistribution.from_bytes(j.to_bytes())
    assert j2.parts == j.parts
    assert np.allclose(j.as_floats(), j2.as_floats())


def test_serialization_magic_checked():
    with pytest.raises(InvalidInputError):
        Distribution.from_bytes(b"NOPE" + b"\0" * 12)


def test_json_debug_form():
    d = Distribution.uniform(2)
    import json
    payload = json.loads(d.to_json())
    assert payload["width"] == 2 and len(payload["mass"]) == 4


def test_distance_from_uniform_on_part():
    # (Z, E) with Z = E: distance from U x E is 1/2 for 1-bit Z
    j = JointDistribution.from_atoms(
        [("Z", 1), ("E", 1)], {(0, 0): Fraction(1, 2), (1, 1): Fraction(1, 2)})
    assert distance_from_uniform_on(j, "Z") == Fraction(1, 2)
