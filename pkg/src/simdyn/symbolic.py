"""Finite words over {1..N}, cylinder measures, and the theta metric.

Finite words stand in for infinite ones everywhere: every quantity we
compute (ergodic sums, counts, cylinder measures) depends on finitely many
symbols. A word may carry a ``periodic`` flag meaning "this prefix repeats
forever", which is how periodic itineraries are represented.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import CapExceeded, SymbolOutOfRange

DEFAULT_WORD_CAP = 10**7


@dataclass(frozen=True)
class Word:
    """An ordered tuple of symbols in [1, alphabet_size]."""

    symbols: tuple
    alphabet_size: int
    periodic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if self.alphabet_size < 1:
            raise SymbolOutOfRange(f"alphabet size must be >= 1, got {self.alphabet_size}")
        for s in self.symbols:
            if not 1 <= s <= self.alphabet_size:
                raise SymbolOutOfRange(f"symbol {s} outside [1, {self.alphabet_size}]")

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]

    def prefix(self, m: int) -> "Word":
        """First m symbols (the projection onto initial coordinates)."""
        return Word(self.symbols[:m], self.alphabet_size)

    def shift(self, m: int = 1) -> "Word":
        """Drop the first m symbols."""
        return Word(self.symbols[m:], self.alphabet_size, self.periodic)

    def concat(self, other: "Word") -> "Word":
        if other.alphabet_size != self.alphabet_size:
            raise SymbolOutOfRange("words over different alphabets")
        return Word(self.symbols + other.symbols, self.alphabet_size)

    def repeat(self, times: int) -> "Word":
        return Word(self.symbols * times, self.alphabet_size)

    def extended(self, n: int) -> "Word":
        """Periodic extension of the prefix out to length n."""
        if not self.symbols:
            raise SymbolOutOfRange("cannot extend the empty word")
        reps = -(-n // len(self.symbols))
        return Word((self.symbols * reps)[:n], self.alphabet_size)

    def serialize(self) -> str:
        """Digit string for N <= 9, dash-separated integers otherwise."""
        if self.alphabet_size <= 9:
            return "".join(str(s) for s in self.symbols)
        return "-".join(str(s) for s in self.symbols)

    @classmethod
    def parse(cls, text: str, alphabet_size: int) -> "Word":
        text = text.strip()
        if not text:
            return cls((), alphabet_size)
        if "-" in text:
            symbols = tuple(int(tok) for tok in text.split("-"))
        else:
            symbols = tuple(int(ch) for ch in text)
        return cls(symbols, alphabet_size)


@dataclass(frozen=True)
class BernoulliSpec:
    """Probability vector p_1..p_N on the alphabet."""

    probabilities: tuple

    def __post_init__(self):
        p = tuple(float(x) for x in self.probabilities)
        object.__setattr__(self, "probabilities", p)
        if any(x < 0 for x in p):
            raise SymbolOutOfRange("probabilities must be nonnegative")
        if abs(sum(p) - 1.0) > 1e-12:
            raise SymbolOutOfRange(f"probabilities sum to {sum(p)!r}, not 1")

    @classmethod
    def uniform(cls, n: int) -> "BernoulliSpec":
        return cls((1.0 / n,) * n)

    @property
    def alphabet_size(self) -> int:
        return len(self.probabilities)


@dataclass(frozen=True)
class ThetaMetric:
    theta: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise SymbolOutOfRange(f"theta must lie in (0, 1), got {self.theta}")


def enumerate_words(n: int, alphabet_size: int, cap: int = DEFAULT_WORD_CAP):
    """All N^n words of length n in lexicographic order.

    Raises CapExceeded if N^n overruns the word cap (default 10^7).
    """
    if n < 0:
        raise SymbolOutOfRange("word length must be >= 0")
    total = alphabet_size**n
    if total > cap:
        raise CapExceeded(f"{alphabet_size}^{n} = {total} words exceeds cap {cap}")
    return [Word(sym, alphabet_size) for sym in itertools.product(range(1, alphabet_size + 1), repeat=n)]


def iter_symbol_tuples(n: int, alphabet_size: int):
    """Lexicographic generator over raw symbol tuples (no Word allocation)."""
    return itertools.product(range(1, alphabet_size + 1), repeat=n)


def cylinder_measure(spec: BernoulliSpec, prefix: Word) -> float:
    """Bernoulli mass of the cylinder set fixed by ``prefix``.

    Product of the per-symbol probabilities; the empty prefix has mass 1.
    """
    p = spec.probabilities
    out = 1.0
    for s in prefix:
        if not 1 <= s <= len(p):
            raise SymbolOutOfRange(f"symbol {s} outside alphabet of size {len(p)}")
        out *= p[s - 1]
    return out


def common_prefix_length(v: Word, w: Word) -> int:
    k = 0
    for a, b in zip(v.symbols, w.symbols):
        if a != b:
            break
        k += 1
    return k


def theta_distance(v: Word, w: Word, metric: ThetaMetric) -> float:
    """theta^k with k the longest common prefix; equal words have distance 0.

    Two equal finite words are taken to represent the same infinite word.
    Words that already differ at the first symbol are at distance theta^0 = 1.
    """
    if v.alphabet_size != w.alphabet_size:
        raise SymbolOutOfRange("words over different alphabets")
    if v.symbols == w.symbols:
        return 0.0
    return metric.theta ** common_prefix_length(v, w)
