import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctxcomm.core import (
    BitBlockString,
    BitVector,
    ExperimentReport,
    IndexSubset,
    SignVector,
    SortedTuple,
    SubsetFamily,
    as_signs,
    bernoulli_bits,
    bits_to_signs,
    f2_inner,
    hamming_distance,
    hoeffding_trials,
    iterated_log,
    majority_stability_bound,
    random_bits,
    sheppard,
    sign,
    signs_to_bits,
    substream,
)

bit_lists = st.lists(st.integers(0, 1), min_size=1, max_size=40)


def test_sign_examples():
    assert sign(0) == 1
    assert sign(3.5) == 1
    assert sign(-2) == 0


def test_sign_rejects_nan():
    with pytest.raises(ValueError):
        sign(float("nan"))


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_sign_is_a_bit_and_antisymmetric(x):
    assert sign(x) in (0, 1)
    if x != 0:
        assert sign(-x) == 1 - sign(x)


def test_iterated_log_examples():
    assert iterated_log(1, 256) == 8
    assert iterated_log(2, 256) == 3
    assert iterated_log(3, 4) == 1


@given(st.integers(1, 6), st.integers(2, 10**6))
def test_iterated_log_monotone(t, n):
    assert iterated_log(t + 1, n) <= iterated_log(t, n)
    assert iterated_log(t, n + 1) >= iterated_log(t, n)
    if t >= 2:
        assert iterated_log(t, n) >= 1


def test_iterated_log_at_one():
    # log2(1) = 0 at the first level; every later level is floored at 1
    assert iterated_log(1, 1) == 0
    assert iterated_log(2, 1) == 1
    with pytest.raises(ValueError):
        iterated_log(0, 4)
    with pytest.raises(ValueError):
        iterated_log(1, 0)


def test_hamming_distance_examples():
    assert hamming_distance(BitVector("000"), BitVector("011")) == 2
    assert hamming_distance(BitVector("0110"), BitVector("0110")) == 0
    assert hamming_distance(BitVector("0101"), BitVector("1010")) == 4


def test_hamming_distance_length_mismatch():
    with pytest.raises(ValueError):
        hamming_distance([0, 1], [0, 1, 1])


def test_f2_inner_examples():
    assert f2_inner(IndexSubset([1, 3], 3), BitVector("101")) == 0
    assert f2_inner(IndexSubset([], 3), BitVector("111")) == 0
    assert f2_inner(IndexSubset([2], 3), BitVector("010")) == 1
    assert f2_inner(BitVector("101"), BitVector("100")) == 1


@given(st.data())
def test_f2_inner_linear(data):
    n = data.draw(st.integers(1, 30))
    s = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    w1 = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)), np.uint8)
    w2 = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)), np.uint8)
    assert f2_inner(s, w1 ^ w2) == f2_inner(s, w1) ^ f2_inner(s, w2)


def test_sheppard_examples():
    assert sheppard(0.5) == pytest.approx(1 / 3)
    assert sheppard(1) == 0
    assert sheppard(-1) == 1


def test_sheppard_clamps_rounding_error():
    assert sheppard(1 + 1e-16) == 0
    with pytest.raises(ValueError):
        sheppard(1.1)


@given(st.floats(-1, 1))
def test_sheppard_symmetry(rho):
    assert sheppard(rho) + sheppard(-rho) == pytest.approx(1.0)


def test_hoeffding_examples():
    assert hoeffding_trials(0.1, 0.05) == 185
    assert hoeffding_trials(0.5, 2 * math.exp(-1)) == 2


@given(st.floats(0.01, 0.9), st.floats(0.001, 0.9))
def test_hoeffding_defining_inequality(acc, fail):
    k = hoeffding_trials(acc, fail)
    assert 2 * math.exp(-2 * acc**2 * k) <= fail
    if k > 1:
        assert 2 * math.exp(-2 * acc**2 * (k - 1)) > fail
    assert hoeffding_trials(min(acc * 1.5, 0.99), fail) <= k


def test_majority_stability_bound_examples():
    assert majority_stability_bound(1) == 1
    assert majority_stability_bound(0) == 0
    assert majority_stability_bound(0.5) == pytest.approx(1 / 3)


@given(bit_lists)
def test_bits_signs_round_trip(bits):
    b = np.array(bits, dtype=np.uint8)
    s = bits_to_signs(b)
    assert set(np.unique(s)) <= {-1, 1}
    assert np.array_equal(signs_to_bits(s), b)
    assert BitVector(bits).to_signs().to_bits() == BitVector(bits)


def test_as_signs_rejects_bits():
    with pytest.raises(ValueError):
        as_signs([0, 1, 1])


def test_domain_type_validation():
    with pytest.raises(ValueError):
        BitVector([])
    with pytest.raises(ValueError):
        BitVector([0, 2])
    with pytest.raises(ValueError):
        SignVector([1, 0])
    with pytest.raises(ValueError):
        IndexSubset([2, 1], 3)
    with pytest.raises(ValueError):
        IndexSubset([4], 3)
    with pytest.raises(ValueError):
        SortedTuple([1, 1], 3)
    with pytest.raises(ValueError):
        SubsetFamily([[1]], 0)


def test_subset_and_tuple_helpers():
    s = IndexSubset([1, 3], 4)
    assert np.array_equal(s.indicator(), [1, 0, 1, 0])
    assert IndexSubset.from_indicator([1, 0, 1, 0]) == s
    assert s.issubset(IndexSubset([1, 2, 3], 4))
    assert (IndexSubset([1, 2, 3], 4) - s).indices == (2,)
    t = SortedTuple([2, 4, 5], 9)
    assert t.prefix().values == (2, 4)
    assert t.suffix().values == (4, 5)
    fam = SubsetFamily([[1], [2, 3]], 3)
    assert fam.block_count == 2 and fam.sizes() == [1, 2]
    assert SubsetFamily.from_indicator(fam.indicator()) == fam
    blocks = BitBlockString([[0, 1], [1, 1]])
    assert blocks.block_count == 2 and blocks.block_size == 2


def test_substreams_are_reproducible_and_distinct():
    a = substream(5, 1, 2).integers(0, 2**32, 8)
    b = substream(5, 1, 2).integers(0, 2**32, 8)
    c = substream(5, 2, 1).integers(0, 2**32, 8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_random_and_bernoulli_bits():
    rng = substream(0)
    bits = random_bits(rng, (1000, 7))
    assert bits.shape == (1000, 7) and set(np.unique(bits)) <= {0, 1}
    assert abs(bits.mean() - 0.5) < 0.02
    biased = bernoulli_bits(rng, 0.3, 100_000)
    assert abs(biased.mean() - 0.3) < 0.005
    assert bernoulli_bits(rng, 0.0, 5).sum() == 0
    assert bernoulli_bits(rng, 1.0, 5).sum() == 5


def test_experiment_report_interval():
    rep = ExperimentReport.from_counts("x", 30, 100, 1)
    lo, hi = rep.ci95
    assert lo <= rep.estimate <= hi
    assert rep.stderr == pytest.approx(math.sqrt(0.3 * 0.7 / 100))
    assert rep.within(0.3, 0)
    row = rep.as_row()
    assert list(row)[-6:] == ["trials", "estimate", "stderr", "ci95_lo", "ci95_hi", "seed"]
