import numpy as np
import pytest
from hypothesis import given, strategies as st

from simdyn.errors import CapExceeded, SymbolOutOfRange
from simdyn.symbolic import (
    BernoulliSpec,
    ThetaMetric,
    Word,
    cylinder_measure,
    enumerate_words,
    theta_distance,
)


def test_enumerate_identity_case():
    words = enumerate_words(0, 3)
    assert words == [Word((), 3)]


def test_enumerate_small_cases():
    assert [w.symbols for w in enumerate_words(1, 2)] == [(1,), (2,)]
    assert [w.symbols for w in enumerate_words(2, 2)] == [(1, 1), (1, 2), (2, 1), (2, 2)]


def test_enumerate_cardinality_and_uniqueness():
    for N in range(1, 5):
        for n in range(0, 9):
            if N**n > 70000:
                continue
            words = enumerate_words(n, N)
            assert len(words) == N**n
            assert len({w.symbols for w in words}) == N**n
            assert words == sorted(words, key=lambda w: w.symbols)


def test_enumerate_cap():
    with pytest.raises(CapExceeded):
        enumerate_words(30, 3)


def test_cylinder_measure_examples():
    uni = BernoulliSpec((0.5, 0.5))
    assert cylinder_measure(uni, Word((1, 2), 2)) == 0.25
    spec = BernoulliSpec((0.3, 0.7))
    assert cylinder_measure(spec, Word((1, 2), 2)) == pytest.approx(0.21, abs=1e-15)
    assert cylinder_measure(spec, Word((), 2)) == 1.0


def test_cylinder_measure_bad_symbol():
    spec = BernoulliSpec((0.5, 0.5))
    with pytest.raises(SymbolOutOfRange):
        cylinder_measure(spec, Word((3,), 3))


def test_cylinder_finite_additivity():
    spec = BernoulliSpec((0.2, 0.5, 0.3))
    for m in range(0, 6):
        total = sum(cylinder_measure(spec, w) for w in enumerate_words(m, 3))
        assert abs(total - 1.0) < 1e-10


def test_bernoulli_validation():
    with pytest.raises(SymbolOutOfRange):
        BernoulliSpec((0.5, 0.6))
    with pytest.raises(SymbolOutOfRange):
        BernoulliSpec((-0.1, 1.1))


def test_theta_distance_examples():
    m = ThetaMetric(0.5)
    v = Word((1, 2, 1), 2)
    assert theta_distance(v, v, m) == 0.0
    assert theta_distance(Word((1, 1), 2), Word((2, 1), 2), m) == 1.0
    # common prefix of length 3
    assert theta_distance(Word((1, 2, 1, 1), 2), Word((1, 2, 1, 2), 2), m) == 0.125


def test_theta_metric_validation():
    with pytest.raises(SymbolOutOfRange):
        ThetaMetric(1.0)
    with pytest.raises(SymbolOutOfRange):
        ThetaMetric(0.0)


def test_theta_symmetry_and_ultrametric_exhaustive():
    m = ThetaMetric(0.6)
    words = []
    for n in range(0, 7):
        words.extend(enumerate_words(n, 2))
    d = np.array([[theta_distance(u, v, m) for v in words] for u in words])
    assert np.allclose(d, d.T)
    # d(u,w) <= max(d(u,v), d(v,w)) over all triples
    for j in range(len(words)):
        lhs = d
        rhs = np.maximum(d[:, j][:, None], d[j, :][None, :])
        assert (lhs <= rhs + 1e-15).all()


def test_word_serialization():
    assert Word((1, 2, 1), 3).serialize() == "121"
    assert Word((1, 12, 3), 12).serialize() == "1-12-3"
    assert Word.parse("121", 3).symbols == (1, 2, 1)
    assert Word.parse("1-12-3", 12).symbols == (1, 12, 3)


@given(st.integers(2, 9), st.lists(st.integers(1, 9), max_size=10))
def test_word_roundtrip(alphabet, raw):
    symbols = tuple(min(s, alphabet) for s in raw)
    w = Word(symbols, alphabet)
    assert Word.parse(w.serialize(), alphabet).symbols == symbols


def test_word_prefix_shift_extend():
    w = Word((1, 2, 2), 2)
    assert w.prefix(2).symbols == (1, 2)
    assert w.shift(1).symbols == (2, 2)
    assert w.extended(7).symbols == (1, 2, 2, 1, 2, 2, 1)


def test_word_symbol_validation():
    with pytest.raises(SymbolOutOfRange):
        Word((0,), 2)
    with pytest.raises(SymbolOutOfRange):
        Word((3,), 2)
