import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simdyn.errors import DomainError, EmptyWord, WordTooShort
from simdyn.function_space import GridFunction
from simdyn.interval_maps import (
    ExpandingMap,
    MapFamily,
    SkewPoint,
    affine_pieces,
    apply_map,
    apply_word,
    canonical_family,
    ergodic_sum,
    fixed_points,
    inverse_branches,
    orbit,
    skew_apply,
    word_slope,
)
from simdyn.symbolic import Word, enumerate_words


def brute_force_fixed_points(family, w, grid=10**6, tol=1e-12):
    """Independent oracle: scan |T_w x - x| on a fine grid, refine each sign
    change of the lap-local affine residual by bisection."""
    out = []
    for lo, hi, sl, ic in affine_pieces(family, w):
        # residual r(x) = sl*x + ic - x is affine; root at x = ic/(1-sl)
        a, b = lo, hi - 1e-15
        ra = (sl * a + ic) - a
        rb = (sl * b + ic) - b
        if ra == 0.0:
            out.append(a)
            continue
        if ra * rb > 0:
            continue
        for _ in range(200):
            mid = 0.5 * (a + b)
            rm = (sl * mid + ic) - mid
            if ra * rm <= 0:
                b = mid
            else:
                a, ra = mid, rm
        out.append(0.5 * (a + b))
    return sorted(out)


def test_apply_examples():
    doubling = ExpandingMap(2)
    assert apply_map(doubling, 0.3) == pytest.approx(0.6, abs=1e-15)
    assert apply_map(doubling, 0.75) == pytest.approx(0.5, abs=1e-15)
    tripling = ExpandingMap(3)
    assert apply_map(tripling, 0.5) == pytest.approx(0.5, abs=1e-15)


def test_apply_domain():
    doubling = ExpandingMap(2)
    assert apply_map(doubling, 1.0) == 0.0
    with pytest.raises(DomainError):
        apply_map(doubling, 1.5)
    with pytest.raises(DomainError):
        apply_map(doubling, -0.1)


def test_apply_word_examples():
    fam2 = canonical_family([2])
    assert apply_word(fam2, Word((1, 1), 1), 0.1) == pytest.approx(0.4, abs=1e-15)
    fam23 = canonical_family([2, 3])
    # T_2(T_1(0.2)) = 3*0.4 mod 1 = 0.2, cross-checked by stepwise brute force
    got = apply_word(fam23, Word((1, 2), 2), 0.2)
    step = apply_map(fam23[2], apply_map(fam23[1], 0.2))
    assert got == step
    assert got == pytest.approx(0.2, abs=1e-12)
    for d in (1, 2):
        assert apply_word(fam23, Word((d,), 2), 0.0) == 0.0


def test_apply_word_empty():
    with pytest.raises(EmptyWord):
        apply_word(canonical_family([2]), Word((), 1), 0.3)


def test_inverse_branches_examples():
    doubling = ExpandingMap(2)
    assert inverse_branches(doubling, 0.5) == [0.25, 0.75]
    assert inverse_branches(ExpandingMap(3), 0.0) == [0.0, 1 / 3, 2 / 3]
    assert inverse_branches(doubling, 0.0) == [0.0, 0.5]


@given(st.integers(2, 5), st.floats(0.0, 1.0, allow_nan=False))
def test_inverse_branch_roundtrip(k, x):
    m = ExpandingMap(k)
    for y in inverse_branches(m, x):
        err = abs(apply_map(m, y) - (x if x < 1.0 else 0.0))
        assert min(err, 1.0 - err) < 1e-12


def test_fixed_points_examples_with_oracle():
    fam2 = canonical_family([2])
    assert list(fixed_points(fam2, Word((1,), 1))) == [0.0]
    got = fixed_points(fam2, Word((1, 1), 1))
    oracle = brute_force_fixed_points(fam2, Word((1, 1), 1))
    assert np.allclose(got, [0.0, 1 / 3, 2 / 3], atol=1e-12)
    assert np.allclose(got, oracle, atol=1e-9)
    fam23 = canonical_family([2, 3])
    w = Word((1, 2), 2)
    got = fixed_points(fam23, w)
    assert len(got) == 5  # M_w = 6
    assert np.allclose(got, np.arange(5) / 5, atol=1e-12)
    assert np.allclose(got, brute_force_fixed_points(fam23, w), atol=1e-9)


def test_fixed_point_count_exhaustive():
    for degrees, max_len in (([2, 3], 6), ([3, 4], 4), ([2, 3, 4], 3)):
        fam = canonical_family(degrees)
        for n in range(1, max_len + 1):
            for w in enumerate_words(n, len(degrees)):
                expected = 1
                for s in w:
                    expected *= degrees[s - 1]
                assert len(fixed_points(fam, w)) == expected - 1


def test_fixed_points_general_affine_map():
    m = ExpandingMap(2, breaks=(0.0, 0.4, 1.0))
    fam = MapFamily((m,))
    w = Word((1, 1), 1)
    got = fixed_points(fam, w)
    oracle = brute_force_fixed_points(fam, w)
    assert np.allclose(got, oracle, atol=1e-9)
    assert len(got) == 3


def test_fixed_points_prime_only_filter():
    fam = canonical_family([2])
    w = Word((1, 1), 1)
    allpts = fixed_points(fam, w)
    prime = fixed_points(fam, w, prime_only=True)
    # 0 is fixed by one application already; 1/3, 2/3 form the genuine 2-cycle
    assert len(allpts) == 3
    assert np.allclose(prime, [1 / 3, 2 / 3], atol=1e-12)


def test_skew_apply_examples():
    fam23 = canonical_family([2, 3])
    p = skew_apply(fam23, SkewPoint(Word((1, 2), 2), 0.3))
    assert p.word.symbols == (2,) and p.x == pytest.approx(0.6, abs=1e-15)
    p = skew_apply(fam23, SkewPoint(Word((2, 1), 2), 0.5))
    assert p.word.symbols == (1,) and p.x == pytest.approx(0.5, abs=1e-15)
    fam2 = canonical_family([2])
    p = skew_apply(fam2, SkewPoint(Word((1,), 1), 0.75))
    assert p.word.symbols == () and p.x == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(EmptyWord):
        skew_apply(fam2, SkewPoint(Word((), 1), 0.5))


def _grid(fn, q=512):
    return GridFunction.from_samples_of(lambda xs: fn(np.asarray(xs)), q, "linear")


def test_ergodic_sum_examples():
    fam2 = canonical_family([2])
    const = _grid(lambda xs: np.full_like(xs, 0.7))
    w = Word((1, 1, 1, 1), 1)
    assert ergodic_sum(fam2, const, w, 0.123, 4) == pytest.approx(4 * 0.7, abs=1e-12)
    ident = _grid(lambda xs: xs)
    assert ergodic_sum(fam2, ident, Word((1, 1), 1), 0.1, 2) == pytest.approx(0.3, abs=1e-12)
    centered = _grid(lambda xs: xs - 0.5)
    # orbit of 1/7 under doubling: 1/7, 2/7, 4/7
    assert ergodic_sum(fam2, centered, Word((1, 1, 1), 1), 1 / 7, 3) == pytest.approx(-0.5, abs=1e-10)


def test_ergodic_sum_word_too_short():
    fam2 = canonical_family([2])
    f = _grid(lambda xs: xs)
    with pytest.raises(WordTooShort):
        ergodic_sum(fam2, f, Word((1,), 1), 0.1, 2)


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.integers(1, 2), min_size=2, max_size=8),
    st.integers(1, 7),
    st.floats(0.0, 0.999, allow_nan=False),
)
def test_ergodic_sum_splitting(symbols, m, x):
    fam = canonical_family([2, 3])
    w = Word(tuple(symbols), 2)
    n_total = len(symbols)
    m = min(m, n_total - 1)
    f = _grid(lambda xs: np.cos(2 * np.pi * np.asarray(xs)) + np.asarray(xs) ** 2)
    full = ergodic_sum(fam, f, w, x, n_total)
    first = ergodic_sum(fam, f, w.prefix(m), x, m)
    rest = ergodic_sum(fam, f, w.shift(m), apply_word(fam, w.prefix(m), x), n_total - m)
    assert abs(full - (first + rest)) < 1e-10


def test_periodicity_bookkeeping():
    fam = canonical_family([2, 3])
    w = Word((1, 2, 1), 2)
    for x in fixed_points(fam, w):
        assert abs(apply_word(fam, w, float(x)) - x) % 1.0 < 1e-12
        block1 = orbit(fam, w, float(x), 3)
        doubled = orbit(fam, w.concat(w), float(x), 6)
        assert np.allclose(doubled[:3], block1, atol=1e-10)
        assert np.allclose(doubled[3:], block1, atol=1e-10)


def test_w_coboundary_vanishes_at_fixed_points():
    rng = np.random.default_rng(7)
    fam = canonical_family([2, 3])
    w = Word((2, 1), 2)
    h = GridFunction(rng.standard_normal(513), 512, "linear")
    for x in fixed_points(fam, w):
        g_at_x = h.evaluate(apply_word(fam, w, float(x))) - h.evaluate(float(x))
        assert abs(g_at_x) < 1e-9


def test_word_slope_and_pieces():
    fam = canonical_family([2, 3])
    w = Word((1, 2, 2), 2)
    assert word_slope(fam, w) == 18
    pieces = affine_pieces(fam, w)
    assert pieces.count == 18
    lo, hi, sl, ic = pieces.piece(5)
    assert (lo, hi) == (5 / 18, 6 / 18)
    assert sl == 18.0 and ic == -5.0


def test_expanding_map_validation():
    with pytest.raises(DomainError):
        ExpandingMap(1)
    with pytest.raises(DomainError):
        ExpandingMap(2, breaks=(0.0, 1.1, 1.0))
    m = ExpandingMap(2, breaks=(0.0, 0.4, 1.0))
    assert not m.canonical
    assert m.branch_slopes == (2.5, 1 / 0.6)


def test_word_slope_overflow():
    from simdyn.errors import Overflow

    fam = canonical_family([4])
    with pytest.raises(Overflow):
        word_slope(fam, Word((1,) * 40, 1))


def test_affine_pieces_budget():
    from simdyn.errors import BudgetExceeded

    fam = canonical_family([2])
    with pytest.raises(BudgetExceeded):
        affine_pieces(fam, Word((1,) * 30, 1), max_pieces=10**6)
