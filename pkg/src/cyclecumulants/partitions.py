"""Set partitions of {1..k}: enumeration, non-crossing structure, Kreweras
complements, lattice join, and the connecting-partition filter used when a
cumulant of products is expanded into cumulants of individual factors.

Partitions are canonical: blocks sorted by least element, elements sorted
within blocks, so equality and hashing are structural.  Enumeration follows
restricted-growth-string lexicographic order, which keeps golden files stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

DEFAULT_PARTITION_CAP = 12
DEFAULT_NONCROSSING_CAP = 14


class SizeLimitError(ValueError):
    """An enumeration would exceed its configured cap."""


def bell_number(k: int) -> int:
    """Number of partitions of a k-element set."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    b = [1]  # b[j] = Bell(j)
    for n in range(k):
        b.append(sum(math.comb(n, j) * b[j] for j in range(n + 1)))
    return b[k]


def catalan_number(n: int) -> int:
    """Number of non-crossing partitions of {1..n}."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return math.comb(2 * n, n) // (n + 1)


def _canonical_blocks(blocks: Iterable[Iterable[int]]) -> tuple[tuple[int, ...], ...]:
    canon = tuple(tuple(sorted(b)) for b in blocks)
    return tuple(sorted(canon, key=lambda b: b[0]))


@dataclass(frozen=True)
class SetPartition:
    """A partition of {1..ground_size} into disjoint nonempty blocks."""

    blocks: tuple[tuple[int, ...], ...]
    ground_size: int

    @staticmethod
    def from_blocks(blocks: Iterable[Iterable[int]], ground_size: int | None = None) -> "SetPartition":
        canon = _canonical_blocks(blocks)
        elements: list[int] = [e for b in canon for e in b]
        if not elements:
            raise ValueError("a partition needs at least one block")
        seen = set(elements)
        if len(seen) != len(elements):
            raise ValueError("blocks are not disjoint")
        k = ground_size if ground_size is not None else max(seen)
        if seen != set(range(1, k + 1)):
            raise ValueError(f"blocks must cover {{1..{k}}} exactly, got {sorted(seen)}")
        return SetPartition(canon, k)

    @staticmethod
    def singletons(k: int) -> "SetPartition":
        """The finest partition 0_k."""
        return SetPartition(tuple((i,) for i in range(1, k + 1)), k)

    @staticmethod
    def one_block(k: int) -> "SetPartition":
        """The coarsest partition 1_k."""
        return SetPartition((tuple(range(1, k + 1)),), k)

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    def block_index_of(self, element: int) -> int:
        for i, b in enumerate(self.blocks):
            if element in b:
                return i
        raise KeyError(element)

    def as_rgs(self) -> tuple[int, ...]:
        """Restricted growth string: label of each element's block, blocks
        numbered by first appearance."""
        label = [0] * self.ground_size
        for i, b in enumerate(self.blocks):
            for e in b:
                label[e - 1] = i
        return tuple(label)

    @staticmethod
    def from_rgs(rgs: Sequence[int]) -> "SetPartition":
        blocks: dict[int, list[int]] = {}
        for pos, lab in enumerate(rgs, start=1):
            blocks.setdefault(lab, []).append(pos)
        return SetPartition.from_blocks(blocks.values(), len(rgs))

    def rotate_down(self) -> "SetPartition":
        """Image under the cyclic rotation i -> i-1 (with 1 -> ground_size)."""
        k = self.ground_size
        shifted = [[e - 1 if e > 1 else k for e in b] for b in self.blocks]
        return SetPartition.from_blocks(shifted, k)

    def relabel(self, mapping: dict[int, int], ground_size: int) -> "SetPartition":
        return SetPartition.from_blocks(
            [[mapping[e] for e in b] for b in self.blocks], ground_size
        )

    def __str__(self) -> str:
        return "".join("{" + ",".join(str(e) for e in b) + "}" for b in self.blocks)


def parse_partition(text: str) -> SetPartition:
    """Inverse of str(SetPartition): parse block notation like "{1,3}{2}"."""
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise ValueError(f"not block notation: {text!r}")
    blocks = []
    for chunk in text[1:-1].split("}{"):
        if not chunk:
            raise ValueError(f"empty block in {text!r}")
        blocks.append([int(tok) for tok in chunk.split(",")])
    return SetPartition.from_blocks(blocks)


@dataclass(frozen=True)
class IntervalPartition:
    """Consecutive intervals of {1..k} with the given lengths."""

    lengths: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.lengths or any(l < 1 for l in self.lengths):
            raise ValueError("interval lengths must be positive")

    @property
    def ground_size(self) -> int:
        return sum(self.lengths)

    def as_set_partition(self) -> SetPartition:
        blocks = []
        start = 1
        for l in self.lengths:
            blocks.append(tuple(range(start, start + l)))
            start += l
        return SetPartition(tuple(blocks), self.ground_size)


def _iter_rgs(k: int) -> Iterator[list[int]]:
    """Restricted growth strings of length k in lexicographic order."""
    a = [0] * k
    m = [0] * k  # m[i] = max(a[0:i]); a[i] may range over 0..m[i]+1
    while True:
        yield a
        i = k - 1
        while i > 0 and a[i] > m[i]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        for j in range(i + 1, k):
            a[j] = 0
            m[j] = max(m[j - 1], a[j - 1])


def iter_partitions(k: int) -> Iterator[SetPartition]:
    """All partitions of {1..k} in RGS-lexicographic order (no cap check)."""
    if k < 1:
        raise ValueError("k must be positive")
    for rgs in _iter_rgs(k):
        yield SetPartition.from_rgs(rgs)


def enumerate_partitions(k: int, cap: int = DEFAULT_PARTITION_CAP) -> list[SetPartition]:
    """All Bell(k) partitions of {1..k}, canonical and duplicate free."""
    if k < 1:
        raise ValueError("k must be positive")
    if k > cap:
        raise SizeLimitError(
            f"enumerate_partitions(k={k}) exceeds cap {cap}: "
            f"Bell({k}) = {bell_number(k)} partitions"
        )
    return list(iter_partitions(k))


def is_noncrossing(p: SetPartition) -> bool:
    """True iff there is no a<b<c<d with a,c in one block and b,d in another.

    Linear scan with a stack of open blocks: crossing shows up as a revisited
    block that is not the innermost open one.
    """
    k = p.ground_size
    label = p.as_rgs()
    last = [0] * p.num_blocks
    for pos in range(k):
        last[label[pos]] = pos
    stack: list[int] = []
    seen: set[int] = set()
    for pos in range(k):
        b = label[pos]
        if b not in seen:
            seen.add(b)
            stack.append(b)
        elif stack[-1] != b:
            return False
        if last[b] == pos:
            if stack[-1] != b:
                return False
            stack.pop()
    return True


def _noncrossing_of(points: tuple[int, ...]) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Non-crossing partitions of an ordered point tuple.

    Block of the first point is any subset containing it; the gaps between
    chosen points must then be partitioned independently, which is exactly
    the non-crossing condition.
    """
    if not points:
        yield ()
        return
    first, rest = points[0], points[1:]
    n = len(rest)
    for mask in range(1 << n):
        chosen = [rest[i] for i in range(n) if mask >> i & 1]
        block = (first, *chosen)
        # split the unchosen points into gaps delimited by the chosen ones
        gaps: list[list[int]] = [[] for _ in range(len(chosen) + 1)]
        gi = 0
        for i in range(n):
            if mask >> i & 1:
                gi += 1
            else:
                gaps[gi].append(rest[i])
        parts_per_gap = [list(_noncrossing_of(tuple(g))) for g in gaps]

        def emit(idx: int, acc: tuple[tuple[int, ...], ...]) -> Iterator[tuple[tuple[int, ...], ...]]:
            if idx == len(parts_per_gap):
                yield acc
                return
            for sub in parts_per_gap[idx]:
                yield from emit(idx + 1, acc + sub)

        yield from emit(0, (block,))


def enumerate_noncrossing(n: int, cap: int = DEFAULT_NONCROSSING_CAP) -> list[SetPartition]:
    """All Catalan(n) non-crossing partitions of {1..n}, RGS-lex order."""
    if n < 1:
        raise ValueError("n must be positive")
    if n > cap:
        raise SizeLimitError(
            f"enumerate_noncrossing(n={n}) exceeds cap {cap}: "
            f"Catalan({n}) = {catalan_number(n)} partitions"
        )
    parts = [
        SetPartition.from_blocks(blocks, n)
        for blocks in _noncrossing_of(tuple(range(1, n + 1)))
    ]
    parts.sort(key=SetPartition.as_rgs)
    return parts


def _block_permutation(p: SetPartition) -> list[int]:
    """Permutation sending each element to the next one in its block
    (cyclically, elements in increasing order).  0-indexed array."""
    perm = [0] * p.ground_size
    for b in p.blocks:
        for i, e in enumerate(b):
            perm[e - 1] = b[(i + 1) % len(b)]
    return perm


def kreweras_complement(p: SetPartition) -> SetPartition:
    """Kreweras complement of a non-crossing partition.

    Computed in O(n) from the cycle decomposition of sigma_p^{-1} composed
    with the full cycle (1 2 ... n); blocks of the result are that
    permutation's cycles.  Satisfies |p| + |K(p)| = n + 1.
    """
    if not is_noncrossing(p):
        raise ValueError(f"kreweras_complement requires a non-crossing partition, got {p}")
    n = p.ground_size
    nxt = _block_permutation(p)  # nxt[e-1] = sigma_p(e)
    inv = [0] * n
    for e in range(1, n + 1):
        inv[nxt[e - 1] - 1] = e
    comp = [0] * n  # comp[x-1] = sigma_p^{-1}(x mod n + 1)
    for x in range(1, n + 1):
        comp[x - 1] = inv[x % n]  # x+1 with wraparound
    blocks = []
    seen = [False] * n
    for x in range(1, n + 1):
        if seen[x - 1]:
            continue
        cyc = []
        y = x
        while not seen[y - 1]:
            seen[y - 1] = True
            cyc.append(y)
            y = comp[y - 1]
        blocks.append(cyc)
    return SetPartition.from_blocks(blocks, n)


def join(p: SetPartition, q: SetPartition) -> SetPartition:
    """Finest common coarsening of two partitions of the same ground set."""
    if p.ground_size != q.ground_size:
        raise ValueError(
            f"ground-size mismatch: {p.ground_size} vs {q.ground_size}"
        )
    k = p.ground_size
    parent = list(range(k + 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for part in (p, q):
        for b in part.blocks:
            for e in b[1:]:
                union(b[0], e)
    groups: dict[int, list[int]] = {}
    for e in range(1, k + 1):
        groups.setdefault(find(e), []).append(e)
    return SetPartition.from_blocks(groups.values(), k)


def is_connecting(p: SetPartition, gamma: IntervalPartition) -> bool:
    """True iff join(p, Gamma) is the one-block partition."""
    return join(p, gamma.as_set_partition()).num_blocks == 1


@lru_cache(maxsize=128)
def _connecting_cached(lengths: tuple[int, ...], cap: int) -> tuple[SetPartition, ...]:
    gamma = IntervalPartition(lengths)
    k = gamma.ground_size
    if k > cap:
        raise SizeLimitError(
            f"connecting_partitions over {k} elements exceeds cap {cap}: "
            f"Bell({k}) = {bell_number(k)} candidates"
        )
    gamma_sp = gamma.as_set_partition()
    return tuple(
        p for p in iter_partitions(k) if join(p, gamma_sp).num_blocks == 1
    )


def connecting_partitions(
    gamma: IntervalPartition, cap: int = DEFAULT_PARTITION_CAP
) -> list[SetPartition]:
    """All partitions p of {1..k} with join(p, Gamma) = 1_k.

    These are the partitions whose parts successively connect the intervals
    of Gamma; they are the ones contributing when a joint cumulant of
    products is expanded over the full partition lattice.
    """
    return list(_connecting_cached(tuple(gamma.lengths), cap))


def moebius_weight(p: SetPartition) -> int:
    """Weight (-1)^(|p|-1) * (|p|-1)! of the moment-to-cumulant expansion."""
    b = p.num_blocks
    return (-1) ** (b - 1) * math.factorial(b - 1)


def export_partitions(path, partitions: Iterable[SetPartition]) -> None:
    """Write one partition per line in block notation, e.g. "{1,3}{2}{4}"."""
    with open(path, "w", encoding="utf-8") as fh:
        for p in partitions:
            fh.write(str(p) + "\n")
