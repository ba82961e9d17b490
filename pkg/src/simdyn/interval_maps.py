"""Expanding interval maps, word compositions, fixed points, and orbits.

The canonical family is x -> k x (mod 1) with integer branch count k >= 2;
general full-branch piecewise-affine surjective maps are supported through
an explicit branch partition. Branch membership follows the half-open
convention [a, b); x = 1 folds to 0 on input.

Compositions are word-driven and left-symbol-first: T_w = T_{w_p} o ... o
T_{w_1}, so w_1 acts first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BudgetExceeded,
    DomainError,
    EmptyWord,
    Overflow,
    SymbolOutOfRange,
    WordTooShort,
)
from .symbolic import Word

_SLOPE_LIMIT = 2**62  # exact int64-representable composite slopes


@dataclass(frozen=True)
class ExpandingMap:
    """One full-branch piecewise-affine expanding map of [0,1).

    ``breaks`` are the k+1 branch endpoints 0 = a_0 < ... < a_k = 1; branch j
    is affine on [a_j, a_{j+1}) and onto [0,1), which forces slope
    1/(a_{j+1}-a_j). ``canonical`` marks the equispaced case x -> k x mod 1.
    """

    degree: int
    breaks: tuple = None
    canonical: bool = True

    def __post_init__(self):
        if self.degree < 2:
            raise DomainError(f"branch count must be >= 2, got {self.degree}")
        if self.breaks is None:
            object.__setattr__(self, "breaks", tuple(j / self.degree for j in range(self.degree + 1)))
            object.__setattr__(self, "canonical", True)
        else:
            br = tuple(float(b) for b in self.breaks)
            if len(br) != self.degree + 1 or br[0] != 0.0 or br[-1] != 1.0:
                raise DomainError("breaks must run from 0 to 1 with degree+1 entries")
            if any(b2 - b1 <= 0 for b1, b2 in zip(br, br[1:])):
                raise DomainError("breaks must be strictly increasing")
            # expansivity: every branch slope 1/len >= 1 + eps
            if any(1.0 / (b2 - b1) < 1.0 + 1e-9 for b1, b2 in zip(br, br[1:])):
                raise DomainError("all branch slopes must exceed 1")
            object.__setattr__(self, "breaks", br)
            is_can = all(abs(br[j] - j / self.degree) < 1e-15 for j in range(self.degree + 1))
            object.__setattr__(self, "canonical", is_can)

    @property
    def branch_slopes(self) -> tuple:
        return tuple(1.0 / (b2 - b1) for b1, b2 in zip(self.breaks, self.breaks[1:]))

    @property
    def branch_offsets(self) -> tuple:
        return tuple(-s * a for s, a in zip(self.branch_slopes, self.breaks))

    def branch_of(self, x: float) -> int:
        j = int(np.searchsorted(self.breaks, x, side="right")) - 1
        return min(max(j, 0), self.degree - 1)

    def derivative_at(self, x: float) -> float:
        return self.branch_slopes[self.branch_of(x)]


def canonical_family(degrees) -> "MapFamily":
    return MapFamily(tuple(ExpandingMap(int(k)) for k in degrees))


@dataclass(frozen=True)
class MapFamily:
    """Ordered maps T_1..T_N; indices match the symbolic alphabet."""

    maps: tuple

    def __post_init__(self):
        if len(self.maps) < 1:
            raise DomainError("family needs at least one map")

    def __len__(self):
        return len(self.maps)

    def __getitem__(self, d: int) -> ExpandingMap:
        """1-based lookup matching symbol d."""
        if not 1 <= d <= len(self.maps):
            raise SymbolOutOfRange(f"map index {d} outside 1..{len(self.maps)}")
        return self.maps[d - 1]

    @property
    def alphabet_size(self) -> int:
        return len(self.maps)

    @property
    def degrees(self) -> tuple:
        return tuple(m.degree for m in self.maps)

    @property
    def canonical(self) -> bool:
        return all(m.canonical for m in self.maps)


@dataclass(frozen=True)
class SkewPoint:
    """(w, x) with w a finite prefix of the driving word."""

    word: Word
    x: float

    def __post_init__(self):
        if not 0.0 <= self.x < 1.0:
            raise DomainError(f"x must lie in [0,1), got {self.x}")


def _fold(x: float) -> float:
    if x == 1.0:
        return 0.0
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"point {x!r} outside [0,1]")
    return x


def apply_map(m: ExpandingMap, x: float) -> float:
    """T(x) with the half-open branch convention; result in [0,1)."""
    x = _fold(x)
    if m.canonical:
        y = m.degree * x
        return y - math.floor(y)
    j = m.branch_of(x)
    s = m.branch_slopes[j]
    y = s * (x - m.breaks[j])
    return min(max(y, 0.0), np.nextafter(1.0, 0.0))


def apply_word(family: MapFamily, w: Word, x: float) -> float:
    """T_w x = (T_{w_p} o ... o T_{w_1}) x; w_1 acts first."""
    if len(w) == 0:
        raise EmptyWord("apply_word needs a non-empty word")
    for s in w:
        x = apply_map(family[s], x)
    return x


def orbit(family: MapFamily, w: Word, x: float, n: int) -> np.ndarray:
    """First n orbit points x, T_{w_1}x, ..., driven by the word prefix."""
    if n < 1:
        raise DomainError("orbit length must be >= 1")
    if len(w) < n:
        raise WordTooShort(f"word of length {len(w)} cannot drive {n} steps")
    pts = np.empty(n)
    pts[0] = _fold(x)
    for i in range(1, n):
        pts[i] = apply_map(family[w[i - 1]], pts[i - 1])
    return pts


def inverse_branches(m: ExpandingMap, x: float) -> list:
    """The k preimages of x, ascending; {(x+j)/k} for canonical maps."""
    x = _fold(x)
    if m.canonical:
        k = m.degree
        return [(x + j) / k for j in range(k)]
    out = []
    for j in range(m.degree):
        s = m.breaks[j + 1] - m.breaks[j]
        out.append(m.breaks[j] + x * s)
    return out


def skew_apply(family: MapFamily, p: SkewPoint) -> SkewPoint:
    """One step of the skew product: (w, x) -> (shifted w, T_{w_1} x)."""
    if len(p.word) == 0:
        raise EmptyWord("skew point has an empty word")
    return SkewPoint(p.word.shift(1), apply_map(family[p.word[0]], p.x))


def word_slope(family: MapFamily, w: Word) -> int:
    """Product of branch counts along w (the composite degree M_w)."""
    M = 1
    for s in w:
        M *= family[s].degree
        if M > _SLOPE_LIMIT:
            raise Overflow(f"composite slope exceeds {_SLOPE_LIMIT}")
    return M


class CanonicalPieces:
    """Affine pieces of T_w for a canonical family: M equal laps of slope M."""

    def __init__(self, M: int):
        self.count = M

    def piece(self, j: int):
        M = self.count
        return (j / M, (j + 1) / M, float(M), float(-j))

    def __iter__(self):
        return (self.piece(j) for j in range(self.count))


class ExplicitPieces:
    """Affine pieces (lo, hi, slope, intercept) of a general composition."""

    def __init__(self, pieces):
        self.pieces = pieces
        self.count = len(pieces)

    def piece(self, j: int):
        return self.pieces[j]

    def __iter__(self):
        return iter(self.pieces)


def affine_pieces(family: MapFamily, w: Word, max_pieces: int = 10**7):
    """Lap decomposition of T_w: on each piece T_w x = slope*x + intercept."""
    if len(w) == 0:
        return ExplicitPieces([(0.0, 1.0, 1.0, 0.0)])
    if family.canonical:
        M = word_slope(family, w)
        if M > max_pieces:
            raise BudgetExceeded(f"{M} laps exceed the {max_pieces} budget")
        return CanonicalPieces(M)
    pieces = [(0.0, 1.0, 1.0, 0.0)]
    for s in w:
        m = family[s]
        new = []
        for lo, hi, sl, ic in pieces:
            # image of this piece sweeps [0,1); cut at the branch endpoints
            cuts = [lo] + [(a - ic) / sl for a in m.breaks[1:-1]] + [hi]
            for j in range(m.degree):
                a, b = cuts[j], cuts[j + 1]
                if b - a <= 0:
                    continue
                s2 = m.branch_slopes[j]
                new.append((a, b, sl * s2, s2 * (ic - m.breaks[j])))
        pieces = new
        if len(pieces) > max_pieces:
            raise BudgetExceeded(f"{len(pieces)} laps exceed the {max_pieces} budget")
    return ExplicitPieces(pieces)


def fixed_points(family: MapFamily, w: Word, prime_only: bool = False, tol: float = 1e-12) -> np.ndarray:
    """Solutions of T_w x = x in [0,1), ascending.

    Canonical families use the closed form j/(M_w - 1); general families
    solve per lap. With ``prime_only`` the orbits with internal repeats
    (non-prime combinatorial period) are dropped.
    """
    if len(w) == 0:
        raise EmptyWord("fixed_points needs a non-empty word")
    if family.canonical:
        M = word_slope(family, w)
        j = np.arange(M - 1, dtype=np.int64)
        pts = j / (M - 1)
    else:
        sols = []
        for lo, hi, sl, ic in affine_pieces(family, w):
            x = ic / (1.0 - sl)
            if lo <= x < hi:
                sols.append(x)
        pts = np.array(sorted(sols))
    for x in pts:
        err = abs(apply_word(family, w, float(x)) - x)
        if min(err, 1.0 - err) >= tol:
            raise DomainError(f"fixed-point candidate {x} fails |T_w x - x| < {tol}")
    if prime_only:
        keep = []
        for x in pts:
            pts_orbit = orbit(family, w, float(x), len(w))
            d = np.abs(pts_orbit[:, None] - pts_orbit[None, :])
            d = np.minimum(d, 1.0 - d)
            np.fill_diagonal(d, 1.0)
            if d.min() > tol:
                keep.append(x)
        pts = np.array(keep)
    return pts


def ergodic_sum(family: MapFamily, f, w: Word, x: float, n: int) -> float:
    """n-th order ergodic sum f(x) + f(T_{w_1}x) + ... along the word w.

    ``f`` is anything with an ``evaluate(x)`` method (GridFunction or
    PotentialSpec).
    """
    if n < 1:
        raise DomainError("ergodic sum order must be >= 1")
    if len(w) < n:
        raise WordTooShort(f"word length {len(w)} < n = {n}")
    pts = orbit(family, w, x, n)
    return float(sum(f.evaluate(float(p)) for p in pts))


def exact_orbit_numerators(degrees_seq, j: int, den: int, n: int) -> list:
    """Orbit of j/den under canonical maps, as exact numerators mod den.

    degrees_seq[i] is the branch count of the map applied at step i.
    """
    out = [j % den]
    for i in range(n - 1):
        out.append((degrees_seq[i] * out[-1]) % den)
    return out
