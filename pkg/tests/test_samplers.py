import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from ctxcomm.core import BudgetExceeded, SubsetFamily, substream
from ctxcomm.samplers import (
    ISR,
    ConditionedNoisy,
    KappaEpsilon,
    NoisyPairs,
    NuEpsilon,
    SubsetNoise,
    UniformPairs,
    _conditioned_batch,
    chi_square_gof,
    common_source_pair_table,
    enumerate_support,
    is_typical,
    isr_streams,
    iter_support,
    noisy_pair_table,
    pair_noise_value,
    random_typical_family,
    sample,
    sample_batch,
    sample_conditioned,
    support_table,
    tv_from_tables,
)


def test_noisy_pairs_extremes():
    rng = substream(1)
    b = sample_batch(NoisyPairs(3, 5, 0.0), 100, rng)
    assert np.array_equal(b.x, b.y)
    b = sample_batch(NoisyPairs(3, 5, 1.0), 100, rng)
    assert np.array_equal(b.x, 1 - b.y)


def test_subset_noise_flip_rate():
    b = sample_batch(SubsetNoise(10, 100, 0.3), 100, substream(2))
    rate = np.mean(b.s != b.t)
    assert abs(rate - 0.3) <= 0.005


def test_sample_shapes():
    rng = substream(3)
    one = sample(NuEpsilon(2, 3, 0.1), rng)
    assert one.x.shape == (2, 3) and one.s.shape == (2, 3)
    assert sample(UniformPairs(4), rng).x.shape == (4,)


def test_sampling_is_a_function_of_the_seed():
    for dist in (UniformPairs(5), NoisyPairs(2, 3, 0.2), KappaEpsilon(2, 2, 0.3)):
        a = sample_batch(dist, 50, substream(9, 1))
        b = sample_batch(dist, 50, substream(9, 1))
        assert all(np.array_equal(p, q) for p, q in zip(a, b) if p is not None)


def test_enumerate_support_examples():
    pts = enumerate_support(UniformPairs(2))
    assert len(pts) == 16 and all(p == 1 / 16 for _, p in pts)
    probs = sorted(p for _, p in enumerate_support(NoisyPairs(1, 1, 0.25)))
    assert probs == pytest.approx([1 / 8, 1 / 8, 3 / 8, 3 / 8])


@pytest.mark.parametrize("dist", [
    UniformPairs(3), NoisyPairs(2, 2, 0.2), SubsetNoise(1, 3, 0.4), NuEpsilon(1, 2, 0.2),
    KappaEpsilon(1, 2, 0.3), ConditionedNoisy(SubsetFamily([[1, 2]], 3), 0.25),
])
def test_probabilities_sum_to_one(dist):
    total = sum(p.sum() for _, p in iter_support(dist))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_budget_is_enforced():
    with pytest.raises(BudgetExceeded):
        list(iter_support(UniformPairs(20), budget=2**20))


@pytest.mark.parametrize("dist", [
    UniformPairs(3), NoisyPairs(1, 3, 0.2), SubsetNoise(2, 2, 0.3), KappaEpsilon(1, 1, 0.25),
    ConditionedNoisy(SubsetFamily([[1, 2]], 3), 0.25),
])
def test_empirical_law_matches_enumeration(dist):
    ok, pval = chi_square_gof(dist, 10**6, seed=11)
    assert ok, pval


def test_common_source_identity():
    # two independent eps-noisy copies of a common Z form a (2 eps - 2 eps^2)-noisy pair
    for eps in (0.1, 0.25, 0.4):
        a = common_source_pair_table(2, 2, eps)
        b = noisy_pair_table(2, 2, pair_noise_value(eps))
        assert tv_from_tables(a, b) < 1e-14


def test_isr_stream_correlations():
    r, rp = isr_streams(1.0, 1000, 5)
    assert r == rp
    for rho in (0.0, 0.5):
        r, rp = isr_streams(rho, 10**5, 6)
        corr = np.mean((1 - 2 * r.array().astype(int)) * (1 - 2 * rp.array().astype(int)))
        assert abs(corr - rho) <= 0.01
    with pytest.raises(ValueError):
        ISR(1.5, 0)


def test_is_typical_examples():
    assert is_typical(SubsetFamily([[1, 2, 3]], 6))
    assert not is_typical(SubsetFamily([[], [1, 2, 3]], 6))
    assert is_typical(SubsetFamily([[1, 2]], 6))


def test_random_typical_family_is_typical():
    fam = random_typical_family(5, 9, substream(4))
    assert is_typical(fam) and fam.block_count == 5


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_conditioned_parities_hold(seed):
    rng = substream(seed)
    fam = random_typical_family(3, 5, rng)
    u = rng.integers(0, 2, 3)
    v = rng.integers(0, 2, 3)
    z, x, y = sample_conditioned(fam, 0.25, u, v, rng)
    ind = fam.indicator()
    assert np.array_equal((x & ind).sum(axis=1) & 1, u)
    assert np.array_equal((y & ind).sum(axis=1) & 1, v)


def test_half_noise_accepts_half_the_proposals():
    # at eps = 1/2 every proposal is uniform, so its parity matches with probability 1/2
    ind = np.array([[1, 1, 0, 0]], dtype=np.uint8)
    rng = substream(8)
    trials = 200_000
    props = rng.integers(0, 2, (trials, 4), dtype=np.uint8)
    accept = ((props & ind[0]).sum(axis=1) & 1) == 1
    assert abs(accept.mean() - 0.5) < 0.005


def _conditional_law_oracle(block, eps, u):
    """Pr[X = x | parity(X) = u] for X an eps-noisy copy of a uniform Z, by plain loops."""
    n = len(block)
    pts = list(itertools.product((0, 1), repeat=n))
    law = np.zeros(2**n)
    for z in pts:
        weights = []
        for x in pts:
            d = sum(a != b for a, b in zip(z, x))
            par = sum(a & b for a, b in zip(x, block)) % 2
            weights.append(eps**d * (1 - eps) ** (n - d) * (par == u))
        total = sum(weights)
        law += np.array(weights) / total / 2**n
    return law


@pytest.mark.parametrize("u", [0, 1])
def test_conditioned_sampler_matches_exact_law(u):
    block = np.array([1, 1, 1, 0, 0, 0], dtype=np.uint8)
    oracle = _conditional_law_oracle(block, 0.25, u)
    rng = substream(21, u)
    draws = 10**6
    z = rng.integers(0, 2, (draws, 1, 6), dtype=np.uint8)
    x = _conditioned_batch(block[None, :], 0.25, z, np.full((draws, 1), u), rng)[:, 0]
    codes = x @ (1 << np.arange(5, -1, -1))
    counts = np.bincount(codes, minlength=64)
    keep = oracle > 0
    assert counts[~keep].sum() == 0
    pval = stats.chisquare(counts[keep], oracle[keep] * draws).pvalue
    assert pval >= 0.01


def test_unsatisfiable_parity_is_rejected():
    with pytest.raises(ValueError):
        sample_conditioned(SubsetFamily([[]], 3), 0.25, [1], [0], substream(0))


def test_support_table_keys_are_distinct_samples():
    table = support_table(NoisyPairs(1, 2, 0.1))
    assert len(table) == 16
    assert sum(table.values()) == pytest.approx(1.0)
