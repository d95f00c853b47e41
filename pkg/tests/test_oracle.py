"""Symbolic exponent engine: reference cross-checks, the scaling laws at
small size, moves, reachability, and the entry-wise variant."""

import pytest

from cyclecumulants.oracle import (
    CycleSpec,
    InvalidMove,
    Move,
    apply_move,
    claim_check,
    entrywise_oracle,
    enumerate_specs,
    exponent_of_partition,
    exponent_table,
    factorized_start,
    leading_exponent,
    optimal_assignments,
    reachable_set,
)
from cyclecumulants.partitions import (
    SetPartition,
    SizeLimitError,
    connecting_partitions,
)


def blocks(*bs):
    return SetPartition.from_blocks(bs)


class TestExponentEngine:
    def test_single_pair_cycle(self):
        cs = CycleSpec.from_lengths([2])
        assert exponent_of_partition(cs, SetPartition.one_block(2)) == -1

    def test_two_pair_cycles_one_part(self):
        cs = CycleSpec.from_lengths([2, 2])
        assert exponent_of_partition(cs, SetPartition.one_block(4)) == -4

    def test_cross_cycle_pairing_vanishes(self):
        # pairing entries of different cycles cannot close a loop through
        # distinct external indices
        cs = CycleSpec.from_lengths([2, 2])
        assert exponent_of_partition(cs, blocks([1, 3], [2, 4])) is None

    def test_engines_agree_exhaustively(self):
        specs = [
            CycleSpec.from_lengths([2]),
            CycleSpec.from_lengths([3]),
            CycleSpec.from_lengths([1], [[2]]),
            CycleSpec.from_lengths([2], [[1, 0]]),
            CycleSpec.from_lengths([1, 1], [[1], [1]]),
            CycleSpec.from_lengths([2, 1], [[1, 0], [0]]),
            CycleSpec.from_lengths([2], [[1, 1]]),
            CycleSpec.from_lengths([1, 1], [[2], [0]]),
            CycleSpec.from_lengths([3, 2]),
        ]
        for cs in specs:
            for p in connecting_partitions(cs.gamma()):
                fast = exponent_of_partition(cs, p)
                reference = exponent_of_partition(cs, p, use_reference=True)
                assert fast == reference, (cs.label(), str(p))

    def test_ground_size_mismatch(self):
        cs = CycleSpec.from_lengths([2, 2])
        with pytest.raises(ValueError, match="does not match"):
            exponent_of_partition(cs, SetPartition.one_block(3))


class TestLeadingExponent:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_single_cycles(self, n):
        exponent, argmax = leading_exponent(CycleSpec.from_lengths([n]))
        assert exponent == 1 - n
        assert argmax

    def test_disjoint_cycles_small(self):
        for lengths in ([2, 2], [1, 1], [1, 1, 1], [2, 1], [3, 2], [2, 2, 1]):
            cs = CycleSpec.from_lengths(lengths)
            exponent, _ = leading_exponent(cs)
            assert exponent == cs.expected_exponent, cs.label()

    def test_insertion_case(self):
        cs = CycleSpec.from_lengths([1, 1], [[1], [1]])
        exponent, argmax = leading_exponent(cs)
        assert exponent == -2
        assert SetPartition.one_block(4) in argmax

    def test_exhaustive_small_specs(self):
        for cs in enumerate_specs(3, 6):
            exponent, _ = leading_exponent(cs)
            assert exponent == cs.expected_exponent, cs.label()

    def test_cap(self):
        with pytest.raises(SizeLimitError, match="Bell"):
            leading_exponent(CycleSpec.from_lengths([11]))

    def test_exponent_table_lists_everything(self):
        cs = CycleSpec.from_lengths([1, 1], [[1], [1]])
        table = exponent_table(cs)
        assert len(table) == 11  # connecting partitions of (2, 2) intervals
        assert max(e for _, e in table if e is not None) == -2
        assert dict((str(p), e) for p, e in table)["{1,4}{2,3}"] == -4


class TestFactorizedStart:
    def test_single_cycle_three(self):
        starts = factorized_start(CycleSpec.from_lengths([3]))
        assert starts == [SetPartition.one_block(3)]
        assert exponent_of_partition(CycleSpec.from_lengths([3]), starts[0]) == -2

    def test_two_singletons(self):
        starts = factorized_start(CycleSpec.from_lengths([1, 1]))
        assert starts == [SetPartition.singletons(2)]

    def test_pair_product_scaling(self):
        cs = CycleSpec.from_lengths([2, 2])
        starts = factorized_start(cs)
        assert starts == [blocks([1, 2], [3, 4])]
        assert exponent_of_partition(cs, starts[0]) == cs.r - cs.n

    def test_every_start_scores_r_minus_n(self):
        for cs in enumerate_specs(3, 6):
            for p in factorized_start(cs):
                assert exponent_of_partition(cs, p) == cs.r - cs.n, (cs.label(), str(p))


class TestMoves:
    def test_join_drops_by_two(self):
        cs = CycleSpec.from_lengths([2, 2])
        start = factorized_start(cs)[0]
        move = Move("join", ((1, 2), (3, 4)))
        result, cost = apply_move(start, move, cs)
        assert result == SetPartition.one_block(4)
        assert cost == -2
        assert exponent_of_partition(cs, start) == -2
        assert exponent_of_partition(cs, result) == -4

    def test_full_segment_exchange_equals_join(self):
        # both complements empty: the exchange fuses the parts into a single
        # loop, still at cost -2
        cs = CycleSpec.from_lengths([1, 1], [[1], [1]])
        start = blocks([1, 2], [3, 4])
        move = Move("exchange", ((1, 2), (3, 4)), ((2, 1), (4, 3)))
        result, cost = apply_move(start, move, cs)
        assert result == SetPartition.one_block(4)
        assert cost == -2
        assert exponent_of_partition(cs, start) - exponent_of_partition(cs, result) == 2

    def test_triple_on_three_singleton_cycles(self):
        cs = CycleSpec.from_lengths([1, 1, 1])
        start = SetPartition.singletons(3)
        move = Move("triple", ((1,), (2,), (3,)), ((1,), (2,), (3,)))
        result, cost = apply_move(start, move, cs)
        assert result == SetPartition.one_block(3)
        assert cost == -4
        assert exponent_of_partition(cs, result) - exponent_of_partition(cs, start) == -4

    def test_join_same_component_rejected(self):
        cs = CycleSpec.from_lengths([1], [[2]])
        p = blocks([1, 2], [3])
        with pytest.raises(InvalidMove, match="distinct components"):
            apply_move(p, Move("join", ((1, 2), (3,))), cs)

    def test_missing_part_rejected(self):
        cs = CycleSpec.from_lengths([2, 2])
        with pytest.raises(InvalidMove, match="not a block"):
            apply_move(factorized_start(cs)[0], Move("join", ((1, 3), (2, 4))), cs)

    def test_bad_segment_rejected(self):
        # (1, 3) skips the middle element, so it is not an arc of the loop
        cs = CycleSpec.from_lengths([1, 1], [[2], [0]])
        start = blocks([1, 2, 3], [4])
        with pytest.raises(InvalidMove, match="contiguous"):
            apply_move(start, Move("exchange", ((1, 2, 3), (4,)), ((1, 3), (4,))), cs)

    def test_intra_component_exchange_costs_nothing(self):
        cs = CycleSpec.from_lengths([1, 1, 1], [[0], [2], [2]])
        target = blocks([1, 2, 5], [3, 7], [4, 6])
        assert target in reachable_set(cs)

    def test_move_validation(self):
        with pytest.raises(ValueError):
            Move("join", ((1, 2),))
        with pytest.raises(ValueError):
            Move("exchange", ((1,), (2,)))
        with pytest.raises(ValueError):
            Move("squeeze", ((1,), (2,)))


class TestReachability:
    def test_single_cycle_budget_zero(self):
        cs = CycleSpec.from_lengths([3])
        assert reachable_set(cs) == {SetPartition.one_block(3)}

    def test_two_singletons(self):
        cs = CycleSpec.from_lengths([1, 1])
        assert reachable_set(cs) == {SetPartition.one_block(2)}

    def test_pair_cycles(self):
        cs = CycleSpec.from_lengths([2, 2])
        got = reachable_set(cs)
        leading, argmax = leading_exponent(cs)
        assert got == set(argmax)

    def test_claim_small_specs(self):
        for cs in enumerate_specs(3, 5):
            result = claim_check(cs)
            assert result.leading_matches, cs.label()
            assert result.argmax_reachable, (cs.label(), result.missing_from_reachable[:3])
            assert not result.cost_violations, cs.label()

    def test_insertion_spec_full_verdict(self):
        result = claim_check(CycleSpec.from_lengths([2, 1], [[1, 0], [0]]))
        assert result.leading_matches
        assert result.argmax_reachable
        assert result.reachable_only_leading
        assert result.to_json()["expected_exponent"] == -3


class TestEntrywise:
    def test_pair_cycle_one_insertion(self):
        cs = CycleSpec.from_lengths([2], [[1, 0]], kind="entrywise")
        result = entrywise_oracle(cs)
        assert result.leading == -1
        assert result.matches
        assert result.canonical_is_leading

    def test_two_singletons_one_insertion_each(self):
        cs = CycleSpec.from_lengths([1, 1], [[1], [1]], kind="entrywise")
        result = entrywise_oracle(cs)
        assert result.leading == -2
        assert result.matches

    def test_single_diagonal_rejected(self):
        cs = CycleSpec.from_lengths([1], [[1]], kind="entrywise")
        with pytest.raises(ValueError, match="cannot close"):
            entrywise_oracle(cs)

    def test_exhaustive_entrywise_small(self):
        for cs in enumerate_specs(2, 6, kind="entrywise", min_cycle=2):
            result = entrywise_oracle(cs)
            assert result.matches, cs.label()
            assert result.canonical_is_leading, cs.label()

    def test_compensation_accounting(self):
        cs = CycleSpec.from_lengths([2], [[2, 1]], kind="entrywise")
        assert cs.total_elements == 2 + 2 * 3
        assert cs.compensation == 3


class TestSpecEnumeration:
    def test_counts_and_uniqueness(self):
        specs = enumerate_specs(3, 8)
        labels = [cs.label() for cs in specs]
        assert len(labels) == len(set(labels))
        assert all(cs.total_elements <= 8 and cs.r <= 3 for cs in specs)

    def test_necklace_canonicalization(self):
        specs = enumerate_specs(1, 4)
        labels = {cs.label() for cs in specs}
        # (2, insertions (1,0)) and (2, insertions (0,1)) are the same
        # necklace; the minimal rotation is kept
        assert "power[2+[0, 1]]" in labels
        assert "power[2+[1, 0]]" not in labels
