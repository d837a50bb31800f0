import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxcomm.core import BudgetExceeded, IndexSubset, SubsetFamily, sheppard, substream
from ctxcomm.functions import MajOfSubsetParity, maj_subset_parity, subset_majority
from ctxcomm.protocols import (
    OneWayTable,
    NonProductDistribution,
    _gip_single_pass,
    brute_force_best_protocol,
    certain_parity_protocol,
    certain_subset_protocol,
    decode_codes,
    encode_bits,
    gip_alice_message,
    gip_bob_agreement,
    gip_estimate,
    hash_set_recovery,
    hash_tag_bits,
    isr_uncertain_protocol,
    parity_protocol_table,
    protocol_tables,
    replication_counts,
    repetitions_needed,
    truth_table_protocol,
    weighted_inner_product,
)
from ctxcomm.samplers import ISR, NoisyPairs, Public, UniformPairs


def _sign_vectors(n):
    return [np.array(v) for v in itertools.product((1, -1), repeat=n)]


def test_certain_subset_protocol_exhaustive():
    for n in range(1, 5):
        for T in (IndexSubset(range(1, n + 1), n), IndexSubset([1], n)):
            for X in _sign_vectors(n):
                for Y in _sign_vectors(n):
                    run = certain_subset_protocol(T, X, Y)
                    assert run.output == subset_majority(T, X, Y)
                    assert run.bits_communicated == len(T)


def test_certain_subset_protocol_empty_set():
    run = certain_subset_protocol(IndexSubset([], 3), [1, -1, 1], [1, 1, 1])
    assert run.bits_communicated == 0 and run.output == 1 and run.message is None


def test_certain_parity_protocol_exhaustive():
    rng = substream(1)
    for k, n in ((1, 1), (1, 3), (2, 2), (3, 1), (3, 2)):
        fam = SubsetFamily.from_indicator(rng.integers(0, 2, (k, n)))
        for xs in itertools.product((0, 1), repeat=k * n):
            x = np.array(xs, dtype=np.uint8).reshape(k, n)
            assert certain_parity_protocol(fam, x, x).output == 1
            for ys in itertools.product((0, 1), repeat=k * n):
                y = np.array(ys, dtype=np.uint8).reshape(k, n)
                run = certain_parity_protocol(fam, x, y)
                assert run.bits_communicated == k
                assert run.output == maj_subset_parity(fam, x, y)


@given(st.integers(0, 2**32))
@settings(max_examples=25, deadline=None)
def test_alice_message_ignores_bob(seed):
    rng = substream(seed)
    fam = SubsetFamily.from_indicator(rng.integers(0, 2, (3, 4)))
    x = rng.integers(0, 2, (3, 4), dtype=np.uint8)
    msgs = {certain_parity_protocol(fam, x, rng.integers(0, 2, (3, 4), dtype=np.uint8))
            .message for _ in range(4)}
    assert len(msgs) == 1
    T = IndexSubset([1, 3, 4], 5)
    X = 1 - 2 * rng.integers(0, 2, 5)
    msgs = {certain_subset_protocol(T, X, 1 - 2 * rng.integers(0, 2, 5)).message
            for _ in range(4)}
    assert len(msgs) == 1


def test_gip_message_ignores_bob():
    rng = substream(3)
    u = 1 - 2 * rng.integers(0, 2, 128)
    counts = np.ones(128, dtype=np.int64)
    alone = gip_alice_message(u, counts, 700, 99)
    for rho in (1.0, 0.3):
        targets = [1 - 2 * rng.integers(0, 2, 128) for _ in range(3)]
        fused, _ = _gip_single_pass(u, targets, counts, 700, rho, 99)
        assert np.array_equal(alone, fused)
        agree = gip_bob_agreement(alone, targets, counts, rho, 99)
        _, agree_fused = _gip_single_pass(u, targets, counts, 700, rho, 99)
        assert np.array_equal(agree, agree_fused)


def test_hash_set_recovery_examples():
    T = IndexSubset([2, 5, 9, 11], 16)
    res = hash_set_recovery(T, T, 0.01, Public(4))
    assert res.recovered == T and not res.ambiguous
    empty = hash_set_recovery(IndexSubset([], 16), T, 0.01, Public(4))
    assert empty.recovered == IndexSubset([], 16) and empty.bits_communicated == 0
    with pytest.raises(ValueError):
        hash_set_recovery(IndexSubset([1], 16), T, 0.01, Public(4))


def test_hash_set_recovery_failure_rate():
    ell, fp, trials = 16, 0.01, 10**4
    b = hash_tag_bits(ell, fp)
    assert ell * ell * 2.0**-b <= fp
    failures = 0
    for i in range(trials):
        rng = substream(7, i)
        chosen = np.sort(rng.choice(1000, size=ell, replace=False) + 1)
        T = IndexSubset(chosen.tolist(), 1000)
        S = IndexSubset(chosen[:12].tolist(), 1000)
        res = hash_set_recovery(S, T, fp, Public(int(rng.integers(2**62))))
        failures += res.recovered != S
    p = failures / trials
    assert p <= fp + 3 * math.sqrt(fp * (1 - fp) / trials)


def test_gip_self_and_negation():
    rng = substream(4)
    u = 1 - 2 * rng.integers(0, 2, 256)
    est = gip_estimate(u, [u, -u], theta=0.1, source=ISR(1.0, 5))
    assert abs(est.estimates[0] - 1) <= 0.1
    assert abs(est.estimates[1] + 1) <= 0.1
    assert len(est.message) == est.repetitions


def test_gip_agreement_follows_sign_law_at_full_correlation():
    rng = substream(6)
    d = 512
    u = 1 - 2 * rng.integers(0, 2, d)
    v = u.copy()
    v[: d // 5] *= -1
    est = gip_estimate(u, [v], theta=0.05, source=ISR(1.0, 8))
    p = est.agreement[0]
    se = math.sqrt(p * (1 - p) / est.repetitions)
    assert abs(p - (1 - sheppard(weighted_inner_product(u, v)))) <= 3 * se


def test_gip_weighted_estimate():
    rng = substream(9)
    d = 8
    u = 1 - 2 * rng.integers(0, 2, d)
    v = 1 - 2 * rng.integers(0, 2, d)
    weights = [0.25, 0.25, 0.125, 0.125, 0.0625, 0.0625, 0.0625, 0.0625]
    est = gip_estimate(u, [v], weights=weights, theta=0.1, source=ISR(1.0, 3))
    assert abs(est.estimates[0] - weighted_inner_product(u, v, weights)) <= 0.1


def test_replication_counts():
    assert list(replication_counts(None, 4)) == [1, 1, 1, 1]
    assert list(replication_counts([0.5, 0.25, 0.25], 3)) == [2, 1, 1]
    with pytest.raises(ValueError):
        replication_counts([0.5, 0.6], 2)
    with pytest.raises(BudgetExceeded):
        replication_counts([Fraction(1, 3), Fraction(1, 2), Fraction(1, 7), Fraction(1, 42)], 4, cap=40)


def test_repetitions_scale_as_inverse_square_correlation():
    m = [repetitions_needed(0.1, rho, 1, 8.0) for rho in (1.0, 0.5, 0.25)]
    assert all(abs(b / a - 4) <= 0.4 for a, b in zip(m, m[1:]))


def test_gip_requires_isr_source():
    with pytest.raises(ValueError):
        gip_estimate([1, -1], [[1, 1]], theta=0.1)
    with pytest.raises(ValueError):
        gip_estimate([1, -1], [[1, 1, 1]], theta=0.1, source=ISR(1.0, 0))


def test_encoding_round_trip():
    codes = np.arange(16)
    bits = decode_codes(codes, 4)
    assert [encode_bits(b) for b in bits] == list(range(16))
    assert list(bits[1]) == [0, 0, 0, 1]


def test_parity_table_matches_direct_evaluation():
    fam = SubsetFamily([[1, 2], [2]], 2)
    table = parity_protocol_table(fam)
    assert table.message_count == 4 and table.bits == 2
    truth = table.truth_table()
    pts = decode_codes(np.arange(16), 4).reshape(-1, 2, 2)
    for i, x in enumerate(pts):
        for j, y in enumerate(pts):
            assert truth[i, j] == maj_subset_parity(fam, x, y)


def _toy():
    fam = SubsetFamily([[1, 2], [3, 4]], 4)
    return parity_protocol_table(fam)


def test_isr_protocol_single_message():
    table = _toy()
    single = OneWayTable(np.zeros(256, dtype=np.int64), table.outputs[:1])
    for i in range(5):
        x, y = 17 * i, 31 * i + 3
        run = isr_uncertain_protocol(table, single, x, y, 0.2, ISR(0.5, i), UniformPairs(8),
                                     constant=0.05)
        assert run.output == single.outputs[0, y] and run.detail["selected"] == 0


def test_isr_protocol_selects_argmax_and_ignores_bob():
    table = _toy()
    first = None
    for y in (0, 5, 200):
        run = isr_uncertain_protocol(table, table, 77, y, 0.1, ISR(0.5, 12), UniformPairs(8),
                                     constant=0.05)
        est = run.detail["estimates"]
        assert run.detail["selected"] == int(np.argmax(est))
        assert run.detail["selected"] == min(i for i, e in enumerate(est) if e == max(est))
        if first is None:
            first = run.message
        assert run.message == first


def test_isr_protocol_rejects_non_product():
    table = _toy()
    with pytest.raises(NonProductDistribution):
        isr_uncertain_protocol(table, table, 0, 0, 0.1, ISR(0.5, 1), NoisyPairs(2, 4, 0.1))
    with pytest.raises(BudgetExceeded):
        isr_uncertain_protocol(table, table, 0, 0, 0.1, ISR(0.5, 1), UniformPairs(8),
                               max_messages=2)


def test_brute_force_examples():
    uniform = np.full((2, 2), 0.25)
    assert brute_force_best_protocol(np.array([[0, 0], [1, 1]]), uniform, 1)[0] == 0
    xor = np.array([[0, 1], [1, 0]])
    assert brute_force_best_protocol(xor, uniform, 0)[0] == 0.5
    err, witness = brute_force_best_protocol(xor, uniform, 1)
    assert err == 0 and witness[0] != witness[1]


def test_brute_force_monotone_in_budget():
    f_table, p_table = protocol_tables(MajOfSubsetParity(SubsetFamily([[1], [1]], 1)),
                                       NoisyPairs(2, 1, 0.2))
    errs = [brute_force_best_protocol(f_table, p_table, c, budget=2**20)[0] for c in (0, 1, 2)]
    assert errs[0] >= errs[1] >= errs[2]
    with pytest.raises(BudgetExceeded):
        brute_force_best_protocol(np.zeros((8, 8)), np.full((8, 8), 1 / 64), 2, budget=100)


def test_truth_table_protocol_is_exact():
    table = np.array([[0, 1, 1], [1, 0, 0]])
    proto = truth_table_protocol(table)
    assert np.array_equal(proto.truth_table(), table)
