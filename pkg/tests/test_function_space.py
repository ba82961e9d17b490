import math

import numpy as np
import pytest

from simdyn.errors import DomainError
from simdyn.function_space import (
    CylinderFunction,
    GridFunction,
    PotentialSpec,
    grid_nodes,
    holder_seminorm_estimate,
    interp_stencil,
    q_lift,
)
from simdyn.interval_maps import canonical_family
from simdyn.symbolic import Word


def _grid(fn, q=1024, interp="linear"):
    return GridFunction.from_samples_of(lambda xs: fn(np.asarray(xs)), q, interp)


def test_evaluate_examples():
    sq = _grid(lambda xs: xs**2, 1024, "linear")
    assert abs(sq.evaluate(0.5) - 0.25) < 1e-6
    assert sq.evaluate(512 / 1024) == sq.values[512]
    const = _grid(lambda xs: np.full_like(xs, 3.25), 64)
    assert const.evaluate(0.137) == 3.25


def test_evaluate_cubic_reproduces_cubics():
    f = _grid(lambda xs: 2 * xs**3 - xs**2 + 0.3 * xs - 1, 64, "cubic")
    for x in (0.001, 0.33, 0.5, 0.874, 0.999, 1.0):
        exact = 2 * x**3 - x**2 + 0.3 * x - 1
        assert abs(f.evaluate(x) - exact) < 1e-13


def test_evaluate_domain_error():
    f = _grid(lambda xs: xs, 64)
    with pytest.raises(DomainError):
        f.evaluate(1.2)


def test_integrate_examples():
    assert abs(_grid(lambda xs: xs - 0.5, 64).integrate()) < 1e-13
    assert abs(_grid(lambda xs: np.cos(2 * np.pi * xs), 1024).integrate()) < 1e-10
    assert abs(_grid(lambda xs: xs**2, 1024).integrate() - 1 / 3) < 1e-9


def test_integrate_exact_on_affine():
    f = _grid(lambda xs: 3.7 * xs - 1.2, 32)
    assert abs(f.integrate() - (3.7 / 2 - 1.2)) < 1e-13


def test_integrate_fourth_order_convergence():
    fn = lambda xs: np.exp(xs) * np.sin(2 * np.pi * xs)
    exact = (2 * np.pi * (1 - np.e)) / (1 + 4 * np.pi**2)
    errs = [abs(_grid(fn, q).integrate() - exact) for q in (64, 128, 256)]
    assert errs[0] / errs[1] > 12.0
    assert errs[1] / errs[2] > 12.0


def test_holder_examples():
    const = _grid(lambda xs: np.full_like(xs, 2.0), 64)
    assert holder_seminorm_estimate(const, 0.7) == 0.0
    ident = _grid(lambda xs: xs, 256)
    assert abs(holder_seminorm_estimate(ident, 1.0) - 1.0) < 1e-9
    centered = _grid(lambda xs: xs - 0.5, 256)
    est = holder_seminorm_estimate(centered, 0.5)
    # brute node-pair oracle
    xs = grid_nodes(256)
    vals = centered.values
    best = 0.0
    for i in range(0, 257, 8):
        diff = np.abs(vals - vals[i])
        dist = np.abs(xs - xs[i])
        mask = dist > 0
        best = max(best, float((diff[mask] / dist[mask] ** 0.5).max()))
    assert est >= 1.0
    assert est >= best - 1e-12


def test_q_lift_examples():
    f = _grid(lambda xs: np.sin(2 * np.pi * xs), 64)
    lifted0 = q_lift(f, 0, 2)
    assert lifted0.data.shape == (1, 65)
    lifted = q_lift(f, 2, 2)
    assert lifted.data.shape == (4, 65)
    rng = np.random.default_rng(5)
    for _ in range(10):
        w = Word(tuple(rng.integers(1, 3, size=2)), 2)
        x = float(rng.random())
        assert lifted.evaluate(w, x) == f.evaluate(x)


def test_q_lift_pointwise_algebra():
    f = _grid(lambda xs: xs, 64)
    g = _grid(lambda xs: np.cos(2 * np.pi * xs), 64)
    left = q_lift(f * g, 2, 2)
    right_data = q_lift(f, 2, 2).data * q_lift(g, 2, 2).data
    assert np.array_equal(left.data, right_data)


def test_q_lift_preserves_holder_constant():
    f = _grid(lambda xs: np.abs(xs - 0.3), 128)
    base = holder_seminorm_estimate(f, 1.0)
    lifted = q_lift(f, 2, 3)
    for idx in range(lifted.data.shape[0]):
        s = GridFunction(lifted.data[idx], 128, "linear")
        assert holder_seminorm_estimate(s, 1.0) == base


def test_cylinder_slice_lookup_and_variation():
    data = np.stack([np.full(65, float(i)) for i in range(4)])
    c = CylinderFunction(data, 2, 2, 64)
    assert c.word_index(Word((1, 1), 2)) == 0
    assert c.word_index(Word((2, 2), 2)) == 3
    assert c.slice_for(Word((2, 1), 2)).values[0] == 2.0
    assert c.slice_variation() == 3.0


def test_potential_parse_and_describe():
    cases = {
        "const:0.7": ("const", 0.7),
        "centered": ("centered", None),
        "cos:3": ("cos", 3),
        "sin:2": ("sin", 2),
        "neglogd:2": ("neglogd", 2),
        "x": ("coordinate", 0.0),
        "x-0.45": ("coordinate", -0.45),
        "x+0.2": ("coordinate", 0.2),
    }
    for text, (kind, param) in cases.items():
        spec = PotentialSpec.parse(text)
        assert spec.kind == kind and spec.param == param
        PotentialSpec.parse(spec.describe())  # describe round-trips
    assert PotentialSpec.parse("neglogd").per_map
    with pytest.raises(DomainError):
        PotentialSpec.parse("unknown:1")


def test_potential_evaluation():
    fam = canonical_family([2, 3])
    xs = np.array([0.0, 0.25, 0.5])
    assert np.allclose(PotentialSpec.parse("x-0.45").evaluate_many(xs), xs - 0.45)
    assert np.allclose(PotentialSpec.parse("cos:2").evaluate_many(xs), np.cos(4 * np.pi * xs))
    neg = PotentialSpec.parse("neglogd:2")
    assert np.allclose(neg.evaluate_many(xs, fam), -math.log(3))
    with pytest.raises(DomainError):
        PotentialSpec.parse("neglogd:1").evaluate_many(xs)  # needs the family


def test_potential_table():
    g = _grid(lambda xs: xs * 2, 64)
    spec = PotentialSpec("table", table=g)
    assert spec.evaluate(0.25) == pytest.approx(0.5, abs=1e-14)


def test_interp_stencil_partition_of_unity():
    xs = np.linspace(0, 1, 137)
    for kind in ("linear", "cubic"):
        idx, wts = interp_stencil(xs, 64, kind)
        assert np.allclose(wts.sum(axis=1), 1.0, atol=1e-13)
        assert idx.min() >= 0 and idx.max() <= 64


def test_gridfunction_validation():
    with pytest.raises(DomainError):
        GridFunction(np.ones(9), 8)  # q too small
    with pytest.raises(DomainError):
        GridFunction(np.ones(10), 16)  # wrong sample count
    with pytest.raises(DomainError):
        GridFunction(np.full(17, np.nan), 16)


def test_real_storage_for_real_input():
    f = GridFunction(np.ones(17, dtype=complex), 16)
    assert not f.is_complex  # zero imaginary parts collapse to float storage


def test_to_csv_rows():
    f = _grid(lambda xs: xs, 16)
    rows = f.to_csv_rows()
    assert len(rows) == 17
    assert rows[0] == (0.0, 0.0) and rows[-1] == (1.0, 1.0)
