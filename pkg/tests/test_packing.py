import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fogdetect import packing
from fogdetect.packing import CapacityError, CorruptAggregateError, DataSample, SchemeDims

BIG = 2**2048 - 1


def direct_scatter(samples):
    # (1/N) sum (x - mean)(x - mean)^T in exact rationals
    N = len(samples)
    l = len(samples[0])
    mean = [Fraction(sum(s[j] for s in samples), N) for j in range(l)]
    return [
        [sum((Fraction(s[p]) - mean[p]) * (Fraction(s[q]) - mean[q]) for s in samples) / N for q in range(l)]
        for p in range(l)
    ]


def _samples(rows):
    return [DataSample(r, index=i) for i, r in enumerate(rows)]


def test_small_sequences():
    seqs = packing.build_sequences(SchemeDims(2, 2, 3), BIG)
    assert seqs.b == (1, 13)
    assert seqs.a == (1, 169)
    assert packing.encode_sample(seqs, DataSample((3, 2))) == 341
    assert packing.expected_offset(seqs) == 510
    assert packing.check_sequences(seqs, BIG) == []


def test_worked_decode():
    seqs = packing.build_sequences(SchemeDims(2, 2, 3), BIG)
    M_f = packing.forward_aggregate_plain(seqs, _samples([(3, 2), (1, 0)]))
    # digits with offset N*d = 6: dim 1 -> (8, 4), dim 2 -> (8, 4)
    assert M_f == 60 + 169 * 60
    assert packing.peel(seqs, M_f) == [[8, 4], [8, 4]]
    dec = packing.decode_aggregate(seqs, M_f)
    assert dec.centered_scaled == ((2, -2), (2, -2))
    assert dec.scatter_exact == ((8, 8), (8, 8))
    assert dec.scatter_fraction() == [[1, 1], [1, 1]]


def test_check_sequences_flags_violations():
    dims = SchemeDims(2, 3, 5)
    good = packing.build_sequences(dims, BIG)
    bad_b = packing.SuperSeqs(good.a, (1, good.b[1] - 1, good.b[2]), dims)
    assert any("b_2" in p for p in packing.check_sequences(bad_b, BIG))
    bad_a = packing.SuperSeqs((1, good.a[1] - 1), good.b, dims)
    assert any("a_2" in p for p in packing.check_sequences(bad_a, BIG))
    assert "capacity constraint violated" in packing.check_sequences(good, good.capacity_value)


def test_minimality():
    # each element is exactly one more than the superincreasing bound
    seqs = packing.build_sequences(SchemeDims(3, 4, 7), BIG)
    w = seqs.dims.width
    for i in range(1, 4):
        assert seqs.b[i] == sum(seqs.b[:i]) * w + 1
    for i in range(1, 3):
        assert seqs.a[i] == sum(seqs.a[:i]) * sum(seqs.b) * w + 1


def test_capacity_hand_values():
    # l=1, d=1: N=2 -> b=(1,5), value 6*4=24; N=3 -> b=(1,7,49), value 57*6=342
    assert packing.capacity_value(1, 2, 1) == 24
    assert packing.capacity_value(1, 3, 1) == 342
    assert packing.max_samples_for_bound(1, 1, 24) == 0
    assert packing.max_samples_for_bound(1, 1, 25) == 2
    assert packing.max_samples_for_bound(1, 1, 342) == 2
    assert packing.max_samples_for_bound(1, 1, 343) == 3


@pytest.mark.parametrize("l,d", [(1, 1), (2, 3), (3, 255), (5, 4095)])
def test_max_samples_matches_linear_scan(l, d):
    for bits in (64, 128, 400):
        bound = 2**bits - 1
        scan = 0
        N = 2
        while packing.capacity_value(l, N, d) < bound:
            scan = N
            N += 1
        assert packing.max_samples(l, d, bits) == scan


def test_strict_bound_not_larger():
    for l in (1, 2, 4):
        assert packing.max_samples(l, 255, 2048, strict=True) <= packing.max_samples(l, 255, 2048)


def test_capacity_error_carries_max():
    with pytest.raises(CapacityError) as ei:
        packing.build_sequences(SchemeDims(2, 10, 4095), 2**32 - 1)
    assert ei.value.max_n == packing.max_samples_for_bound(2, 4095, 2**32 - 1)


def test_dims_validation():
    for bad in ((0, 2, 1), (1, 1, 1), (1, 2, 0)):
        with pytest.raises(ValueError):
            SchemeDims(*bad)
    with pytest.raises(TypeError):
        SchemeDims(1.5, 2, 1)


def test_sample_range():
    seqs = packing.build_sequences(SchemeDims(2, 2, 3), BIG)
    with pytest.raises(packing.SampleRangeError):
        packing.encode_sample(seqs, DataSample((4, 0)))
    with pytest.raises(packing.SampleRangeError):
        packing.encode_sample(seqs, DataSample((1,)))


@st.composite
def scenario(draw):
    l = draw(st.integers(1, 4))
    N = draw(st.integers(2, 12))
    d = draw(st.sampled_from([1, 2, 7, 255, 4095]))
    rows = draw(st.lists(st.tuples(*[st.integers(0, d)] * l), min_size=N, max_size=N))
    return SchemeDims(l, N, d), rows


@settings(max_examples=200, deadline=None)
@given(scenario())
def test_exact_recovery(sc):
    dims, rows = sc
    seqs = packing.build_sequences(dims, BIG)
    M_f = packing.forward_aggregate_plain(seqs, _samples(rows))
    dec = packing.decode_aggregate(seqs, M_f)
    for j in range(dims.l):
        col = [r[j] for r in rows]
        assert list(dec.centered_scaled[j]) == [dims.N * v - sum(col) for v in col]
    assert dec.scatter_fraction() == direct_scatter(rows)


@settings(max_examples=100, deadline=None)
@given(scenario())
def test_sample_roundtrip(sc):
    dims, rows = sc
    seqs = packing.build_sequences(dims, BIG)
    for r in rows:
        assert packing.decode_sample(seqs, packing.encode_sample(seqs, DataSample(r))) == r


@pytest.mark.parametrize("l,N,d", [(1, 2, 1), (2, 5, 255), (3, 10, 4095)])
def test_offset_counterexample(l, N, d):
    # last sample zero, all others at the maximum: the last centred value is
    # negative, and without the offset the decoder cannot represent it
    rows = [tuple([d] * l)] * (N - 1) + [tuple([0] * l)]
    n = 2**1024 + 643  # any modulus above the capacity works
    seqs = packing.build_sequences(SchemeDims(l, N, d), n)
    true_last = Fraction(0) - Fraction(sum(r[-1] for r in rows), N)
    assert true_last < 0
    broken = packing.forward_aggregate_plain(seqs, _samples(rows), offset=False, modulus=n)
    digits = packing.peel(seqs, broken)
    assert digits[l - 1][N - 1] >= 0
    with pytest.raises(CorruptAggregateError):
        packing.decode_aggregate(seqs, broken)
    good = packing.decode_aggregate(seqs, packing.forward_aggregate_plain(seqs, _samples(rows)))
    assert Fraction(good.centered_scaled[l - 1][N - 1], N) == true_last


def test_corrupt_aggregates_detected():
    seqs = packing.build_sequences(SchemeDims(2, 3, 9), BIG)
    rng = random.Random(0)
    rows = [(rng.randint(0, 9), rng.randint(0, 9)) for _ in range(3)]
    M_f = packing.forward_aggregate_plain(seqs, _samples(rows))
    for bad in (M_f + 1, M_f - 1, seqs.capacity_value, -1, 0):
        with pytest.raises(CorruptAggregateError):
            packing.decode_aggregate(seqs, bad)


def test_negative_without_modulus():
    seqs = packing.build_sequences(SchemeDims(1, 2, 5), BIG)
    with pytest.raises(ValueError):
        packing.forward_aggregate_plain(seqs, _samples([(5,), (0,)]), offset=False)
