"""Partition combinatorics against independent counting oracles."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from cyclecumulants.partitions import (
    IntervalPartition,
    SetPartition,
    SizeLimitError,
    bell_number,
    catalan_number,
    connecting_partitions,
    enumerate_noncrossing,
    enumerate_partitions,
    export_partitions,
    is_noncrossing,
    iter_partitions,
    join,
    kreweras_complement,
    moebius_weight,
    parse_partition,
)


def bell_oracle(k: int) -> int:
    # Bell triangle, independent of the binomial recurrence in the library
    row = [1]
    for _ in range(k):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def catalan_oracle(n: int) -> int:
    # convolution recurrence C_{m+1} = sum C_i C_{m-i}
    c = [1]
    for m in range(n):
        c.append(sum(c[i] * c[m - i] for i in range(m + 1)))
    return c[n]


def blocks(*bs):
    return SetPartition.from_blocks(bs)


class TestEnumeration:
    def test_single_element(self):
        assert enumerate_partitions(1) == [blocks([1])]

    def test_counts_match_bell_oracle(self):
        for k in range(1, 9):
            parts = enumerate_partitions(k)
            assert len(parts) == bell_oracle(k) == bell_number(k)
            assert len(set(parts)) == len(parts)

    def test_k3_count(self):
        assert len(enumerate_partitions(3)) == 5

    def test_k5_count(self):
        assert len(enumerate_partitions(5)) == 52

    def test_rgs_lex_order_golden(self):
        got = [str(p) for p in enumerate_partitions(3)]
        assert got == ["{1,2,3}", "{1,2}{3}", "{1,3}{2}", "{1}{2,3}", "{1}{2}{3}"]

    def test_cap_error_names_bell(self):
        with pytest.raises(SizeLimitError, match=r"Bell\(13\) = 27644437"):
            enumerate_partitions(13)

    def test_canonical_form(self):
        p = SetPartition.from_blocks([[3, 1], [4, 2]])
        assert p.blocks == ((1, 3), (2, 4))

    def test_invalid_blocks_rejected(self):
        with pytest.raises(ValueError):
            SetPartition.from_blocks([[1, 2], [2, 3]])
        with pytest.raises(ValueError):
            SetPartition.from_blocks([[1], [3]])


class TestNonCrossing:
    def test_n1(self):
        assert enumerate_noncrossing(1) == [blocks([1])]

    def test_n3_is_all_of_p3(self):
        assert enumerate_noncrossing(3) == enumerate_partitions(3)

    def test_n4_excludes_only_the_crossing_pair(self):
        nc = set(enumerate_noncrossing(4))
        allp = set(enumerate_partitions(4))
        assert len(nc) == 14
        assert allp - nc == {blocks([1, 3], [2, 4])}

    def test_counts_match_catalan_oracle(self):
        for n in range(1, 11):
            assert len(enumerate_noncrossing(n)) == catalan_oracle(n) == catalan_number(n)

    def test_filter_agrees_with_direct_enumeration(self):
        for n in range(1, 8):
            filtered = [p for p in enumerate_partitions(n) if is_noncrossing(p)]
            assert filtered == enumerate_noncrossing(n)

    def test_crossing_examples(self):
        assert not is_noncrossing(blocks([1, 3], [2, 4]))
        assert is_noncrossing(blocks([1, 4], [2, 3]))
        assert is_noncrossing(SetPartition.one_block(5))

    def test_cap_error_names_catalan(self):
        with pytest.raises(SizeLimitError, match=r"Catalan\(15\)"):
            enumerate_noncrossing(15)


def interleaved_union_noncrossing(p: SetPartition, q: SetPartition) -> bool:
    """Whether p on {1..n} and q on primed copies interleave without crossing."""
    n = p.ground_size
    combined = [tuple(2 * e - 1 for e in b) for b in p.blocks]
    combined += [tuple(2 * e for e in b) for b in q.blocks]
    return is_noncrossing(SetPartition.from_blocks(combined, 2 * n))


def kreweras_oracle(p: SetPartition) -> SetPartition:
    """Coarsest q with a non-crossing interleaved union; brute force."""
    n = p.ground_size
    best = None
    for q in iter_partitions(n):
        if interleaved_union_noncrossing(p, q):
            if best is None or q.num_blocks < best.num_blocks:
                best = q
    return best


class TestKreweras:
    def test_full_block_gives_singletons(self):
        for n in range(1, 7):
            assert kreweras_complement(SetPartition.one_block(n)) == SetPartition.singletons(n)

    def test_singletons_give_full_block(self):
        for n in range(1, 7):
            assert kreweras_complement(SetPartition.singletons(n)) == SetPartition.one_block(n)

    def test_hand_example(self):
        assert kreweras_complement(blocks([1, 2], [3])) == blocks([1], [2, 3])

    def test_crossing_input_rejected(self):
        with pytest.raises(ValueError, match="non-crossing"):
            kreweras_complement(blocks([1, 3], [2, 4]))

    def test_matches_bruteforce_oracle(self):
        for n in range(1, 7):
            for p in enumerate_noncrossing(n):
                expected = kreweras_oracle(p)
                got = kreweras_complement(p)
                assert got == expected
                assert interleaved_union_noncrossing(p, got)

    def test_block_count_identity(self):
        for n in range(1, 9):
            for p in enumerate_noncrossing(n):
                assert p.num_blocks + kreweras_complement(p).num_blocks == n + 1

    def test_square_is_rotation(self):
        for n in range(1, 9):
            for p in enumerate_noncrossing(n):
                twice = kreweras_complement(kreweras_complement(p))
                assert twice == p.rotate_down()


class TestJoin:
    def test_transitive_closure_example(self):
        got = join(blocks([1, 3], [2], [4]), blocks([1, 2], [3, 4]))
        assert got == SetPartition.one_block(4)

    def test_identity_and_absorbing(self):
        for k in range(1, 6):
            for p in iter_partitions(k):
                assert join(p, SetPartition.singletons(k)) == p
                assert join(p, SetPartition.one_block(k)) == SetPartition.one_block(k)

    def test_lattice_laws_exhaustive_small(self):
        for k in range(1, 5):
            parts = enumerate_partitions(k)
            for p in parts:
                assert join(p, p) == p
                for q in parts:
                    assert join(p, q) == join(q, p)

    def test_mismatched_ground_size(self):
        with pytest.raises(ValueError, match="mismatch"):
            join(SetPartition.one_block(3), SetPartition.one_block(4))

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_associativity_random(self, data):
        k = data.draw(st.integers(2, 5))
        parts = enumerate_partitions(k)
        p = data.draw(st.sampled_from(parts))
        q = data.draw(st.sampled_from(parts))
        r = data.draw(st.sampled_from(parts))
        assert join(join(p, q), r) == join(p, join(q, r))


class TestConnecting:
    def test_two_pair_intervals(self):
        got = connecting_partitions(IntervalPartition((2, 2)))
        assert len(got) == 11

    def test_single_interval_is_everything(self):
        for k in range(1, 6):
            got = connecting_partitions(IntervalPartition((k,)))
            assert len(got) == bell_number(k)

    def test_two_singletons(self):
        got = connecting_partitions(IntervalPartition((1, 1)))
        assert got == [SetPartition.one_block(2)]

    def test_matches_definition_up_to_k6(self):
        # every composition of k as interval lengths, checked by definition
        def compositions(k):
            if k == 0:
                yield ()
                return
            for head in range(1, k + 1):
                for tail in compositions(k - head):
                    yield (head, *tail)

        for k in range(1, 7):
            for lengths in compositions(k):
                gamma = IntervalPartition(lengths)
                gamma_sp = gamma.as_set_partition()
                expected = [
                    p for p in iter_partitions(k)
                    if join(p, gamma_sp).num_blocks == 1
                ]
                assert connecting_partitions(gamma) == expected


class TestMoebius:
    def test_examples(self):
        assert moebius_weight(SetPartition.one_block(5)) == 1
        assert moebius_weight(blocks([1, 2], [3])) == -1
        assert moebius_weight(SetPartition.singletons(4)) == -6

    def test_bernoulli_cumulants_exact(self):
        # moments of Bernoulli(p) are all p; the expansion over the lattice
        # must reproduce its known cumulants
        from fractions import Fraction

        p = Fraction(1, 3)
        q = 1 - p

        def cumulant(order):
            total = Fraction(0)
            for part in iter_partitions(order):
                term = Fraction(moebius_weight(part))
                for _ in part.blocks:
                    term *= p
                total += term
            return total

        assert cumulant(1) == p
        assert cumulant(2) == p * q
        assert cumulant(3) == p * q * (1 - 2 * p)
        assert cumulant(4) == p * q * (1 - 6 * p * q)


class TestSerialization:
    def test_string_roundtrip(self):
        for k in range(1, 6):
            for p in iter_partitions(k):
                assert parse_partition(str(p)) == p

    def test_block_notation_format(self):
        assert str(blocks([1, 3], [2], [4])) == "{1,3}{2}{4}"

    def test_golden_export(self, tmp_path):
        path = tmp_path / "nc4.txt"
        export_partitions(path, enumerate_noncrossing(4))
        lines = path.read_text().splitlines()
        assert len(lines) == 14
        assert lines[0] == "{1,2,3,4}"
        assert all(parse_partition(line) for line in lines)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(0, 5), min_size=1, max_size=8))
    def test_rgs_roundtrip(self, raw):
        # normalize to a valid restricted growth string
        rgs = []
        mx = -1
        for v in raw:
            v = min(v, mx + 1)
            rgs.append(v)
            mx = max(mx, v)
        p = SetPartition.from_rgs(rgs)
        assert list(p.as_rgs()) == rgs
