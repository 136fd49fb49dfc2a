"""Codebooks for the Random and Costas-based embedding schemes.

Both schemes pick one duration per sub-pulse from the duration set.  The
Random scheme picks each hop frequency freely subject to "adjacent hops
differ"; the Costas-based scheme restricts the whole hop sequence to a
Costas array.  Codewords are never materialized: encode/decode work through
a canonical mixed-radix index, so the 4e6-codeword Random book stays O(1).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

from .waveform import PulseSymbol

COSTAS_SEARCH_BOUND = 8


class UnsupportedOrderError(ValueError):
    """Costas enumeration requested beyond the exhaustive-search bound."""


class NotACodewordError(ValueError):
    """Symbol is not a member of the codebook."""


class UnaddressableCodewordError(ValueError):
    """Valid codeword whose index falls outside the 2^C bit-addressable prefix."""


def is_costas(perm: Sequence[int]) -> bool:
    """True iff the permutation has pairwise-distinct differences at every lag."""
    n = len(perm)
    if sorted(perm) != list(range(1, n + 1)):
        raise ValueError(f"not a permutation of 1..{n}: {tuple(perm)}")
    for lag in range(1, n):
        diffs = [perm[i + lag] - perm[i] for i in range(n - lag)]
        if len(set(diffs)) != len(diffs):
            return False
    return True


def enumerate_costas(n_f: int) -> List[Tuple[int, ...]]:
    """All Costas arrays of the given order, lexicographically ordered.

    Exhaustive backtracking with difference-set pruning; exact for small
    orders, refused above COSTAS_SEARCH_BOUND.
    """
    if not 1 <= n_f <= COSTAS_SEARCH_BOUND:
        raise UnsupportedOrderError(
            f"Costas enumeration supported for orders 1..{COSTAS_SEARCH_BOUND}, got {n_f}")
    results: List[Tuple[int, ...]] = []
    perm: List[int] = []
    used = [False] * (n_f + 1)
    # diff sets per lag; lag h is checked against perm[i+h]-perm[i]
    diffs: List[set] = [set() for _ in range(n_f)]

    def extend():
        pos = len(perm)
        if pos == n_f:
            results.append(tuple(perm))
            return
        for v in range(1, n_f + 1):
            if used[v]:
                continue
            new = []
            ok = True
            for h in range(1, pos + 1):
                d = v - perm[pos - h]
                if d in diffs[h]:
                    ok = False
                    break
                new.append((h, d))
            if not ok:
                continue
            used[v] = True
            perm.append(v)
            for h, d in new:
                diffs[h].add(d)
            extend()
            for h, d in new:
                diffs[h].remove(d)
            perm.pop()
            used[v] = False

    extend()
    return results


def random_frequency_count(n_f: int) -> int:
    """Number of hop sequences with no two adjacent hops equal."""
    return n_f * (n_f - 1) ** (n_f - 1)


@dataclass(frozen=True)
class Codebook:
    """Indexed codeword set with a bijective bits <-> symbol mapping.

    The canonical index is a mixed-radix integer whose least-significant
    block is the duration digits (base n_t); the most-significant block
    ranks the hop sequence (first hop, then per-position "skip" digits for
    the Random scheme; lexicographic Costas rank for Costas-based).
    """
    scheme: str  # "random" | "costas"
    n_f: int = 5
    n_t: int = 5
    costas_arrays: Tuple[Tuple[int, ...], ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.scheme not in ("random", "costas"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.n_f < 1 or self.n_t < 1:
            raise ValueError("n_f and n_t must be positive")
        if self.scheme == "costas" and not self.costas_arrays:
            object.__setattr__(self, "costas_arrays", tuple(enumerate_costas(self.n_f)))

    @property
    def size(self) -> int:
        if self.scheme == "random":
            return self.n_t ** self.n_f * random_frequency_count(self.n_f)
        return self.n_t ** self.n_f * len(self.costas_arrays)

    @property
    def bits_per_pulse(self) -> int:
        return int(math.floor(math.log2(self.size)))

    # ---- canonical index ------------------------------------------------

    def _freq_to_rank(self, freqs: Sequence[int]) -> int:
        if self.scheme == "costas":
            try:
                return self.costas_arrays.index(tuple(freqs))
            except ValueError:
                raise NotACodewordError(f"{tuple(freqs)} is not a Costas array of order {self.n_f}")
        rank = freqs[0] - 1
        for prev, cur in zip(freqs, freqs[1:]):
            if cur == prev:
                raise NotACodewordError("adjacent hops equal")
            # rank of cur among 1..n_f with prev removed
            skip = (cur - 1) - (1 if cur > prev else 0)
            rank = rank * (self.n_f - 1) + skip
        return rank

    def _rank_to_freq(self, rank: int) -> Tuple[int, ...]:
        if self.scheme == "costas":
            return self.costas_arrays[rank]
        skips = []
        for _ in range(self.n_f - 1):
            rank, skip = divmod(rank, self.n_f - 1)
            skips.append(skip)
        skips.reverse()
        freqs = [rank + 1]
        for skip in skips:
            cur = skip + 1
            if cur >= freqs[-1]:
                cur += 1
            freqs.append(cur)
        return tuple(freqs)

    def symbol_to_index(self, symbol: PulseSymbol) -> int:
        if symbol.n_f != self.n_f:
            raise NotACodewordError(f"symbol has {symbol.n_f} sub-pulses, expected {self.n_f}")
        for d in symbol.dur_indices:
            if not 1 <= d <= self.n_t:
                raise NotACodewordError(f"duration index {d} outside 1..{self.n_t}")
        for f in symbol.freq_indices:
            if not 1 <= f <= self.n_f:
                raise NotACodewordError(f"frequency index {f} outside 1..{self.n_f}")
        dur_rank = 0
        for d in symbol.dur_indices:
            dur_rank = dur_rank * self.n_t + (d - 1)
        return self._freq_to_rank(symbol.freq_indices) * self.n_t ** self.n_f + dur_rank

    def index_to_symbol(self, index: int) -> PulseSymbol:
        if not 0 <= index < self.size:
            raise NotACodewordError(f"index {index} outside codebook of size {self.size}")
        freq_rank, dur_rank = divmod(index, self.n_t ** self.n_f)
        durs = []
        for _ in range(self.n_f):
            dur_rank, d = divmod(dur_rank, self.n_t)
            durs.append(d + 1)
        durs.reverse()
        return PulseSymbol(self._rank_to_freq(freq_rank), tuple(durs))

    def contains(self, symbol: PulseSymbol) -> bool:
        try:
            self.symbol_to_index(symbol)
            return True
        except NotACodewordError:
            return False

    # ---- bit mapping -----------------------------------------------------

    def encode(self, bits: str) -> PulseSymbol:
        """Map a bit string of length bits_per_pulse to its codeword."""
        if len(bits) != self.bits_per_pulse:
            raise ValueError(f"expected {self.bits_per_pulse} bits, got {len(bits)}")
        if set(bits) - {"0", "1"}:
            raise ValueError("bit string may contain only 0 and 1")
        return self.index_to_symbol(int(bits, 2))

    def decode(self, symbol: PulseSymbol) -> str:
        """Inverse of encode; rejects codewords outside the 2^C prefix."""
        index = self.symbol_to_index(symbol)
        if index >= 2 ** self.bits_per_pulse:
            raise UnaddressableCodewordError(
                f"codeword index {index} >= 2^{self.bits_per_pulse}")
        return format(index, f"0{self.bits_per_pulse}b")

    # ---- reception-side matching ------------------------------------------

    def nearest_codeword(self, f_hat: Sequence[float], t_hat: Sequence[float],
                         f_f: float, dur_set: Sequence[float]) -> PulseSymbol:
        """Quantize estimates onto the codeword grid, staying inside the book.

        Frequencies quantize to the nearest multiple of f_f, durations to the
        nearest duration-set member.  If the quantized hop sequence is not a
        member (adjacent-equal, or not Costas for the Costas scheme) the
        member minimizing total absolute frequency error is chosen; ties go
        to the lowest canonical index.
        """
        if len(f_hat) != self.n_f or len(t_hat) != self.n_f:
            raise ValueError(f"expected {self.n_f} estimates")
        dur_idx = tuple(
            min(range(1, len(dur_set) + 1), key=lambda i: abs(t - dur_set[i - 1]))
            for t in t_hat)
        quant = tuple(min(max(round(f / f_f), 1), self.n_f) for f in f_hat)
        freq_ok = all(a != b for a, b in zip(quant, quant[1:]))
        if freq_ok and self.scheme == "costas":
            freq_ok = sorted(quant) == list(range(1, self.n_f + 1)) and is_costas(quant)
        if freq_ok:
            return PulseSymbol(quant, dur_idx)
        freqs = self._closest_valid_freqs(f_hat, f_f)
        return PulseSymbol(freqs, dur_idx)

    def _closest_valid_freqs(self, f_hat: Sequence[float], f_f: float) -> Tuple[int, ...]:
        if self.scheme == "costas":
            # min() keeps the first minimum, i.e. the lowest lexicographic
            # rank and therefore the lowest canonical index
            return min(
                self.costas_arrays,
                key=lambda arr: sum(abs(f - a * f_f) for f, a in zip(f_hat, arr)))
        # DP over hop positions: state = frequency index at position i.
        n = self.n_f
        cost = [[abs(f_hat[i] - v * f_f) for v in range(1, n + 1)] for i in range(n)]
        # suffix[i][v] = min cost of positions i.. given position i uses v+1
        suffix = [[0.0] * n for _ in range(n)]
        suffix[n - 1] = cost[n - 1][:]
        for i in range(n - 2, -1, -1):
            for v in range(n):
                suffix[i][v] = cost[i][v] + min(
                    suffix[i + 1][u] for u in range(n) if u != v)
        # greedy forward pass; ties resolve to the smallest frequency, which
        # is also the lowest canonical index
        total = min(suffix[0])
        freqs = []
        prev = -1
        remaining = total
        for i in range(n):
            for v in range(n):
                if v == prev:
                    continue
                tail = 0.0 if i == n - 1 else min(
                    suffix[i + 1][u] for u in range(n) if u != v)
                if abs(cost[i][v] + tail - remaining) < 1e-9:
                    freqs.append(v + 1)
                    remaining -= cost[i][v]
                    prev = v
                    break
        return tuple(freqs)


def brute_force_size(scheme: str, n_f: int, n_t: int) -> int:
    """Count codewords by explicit generation (small parameters only)."""
    if scheme == "costas":
        freq_seqs = enumerate_costas(n_f)
    else:
        freq_seqs = [
            seq for seq in itertools.product(range(1, n_f + 1), repeat=n_f)
            if all(a != b for a, b in zip(seq, seq[1:]))]
    return len(freq_seqs) * n_t ** n_f
