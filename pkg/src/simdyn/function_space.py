"""Sampled functions on [0,1], cylinder functions, and potentials.

GridFunction holds q+1 uniform samples (q a power of two) with linear or
cubic interpolation; quadrature is composite Simpson. CylinderFunction is
the depth-m truncation of a function on words x interval: one grid slice
per length-m word. PotentialSpec is a small whitelist of exactly evaluable
potentials used to assemble transfer operators without sampling error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, LengthMismatch
from .symbolic import Word


def grid_nodes(q: int) -> np.ndarray:
    return np.arange(q + 1) / q


def _check_resolution(q: int):
    if q < 16 or (q & (q - 1)) != 0:
        raise DomainError(f"resolution must be a power of two >= 16, got {q}")


def interp_stencil(xs: np.ndarray, q: int, kind: str):
    """Node indices and weights reproducing the interpolation at xs.

    Returns (idx, wts) with shape (len(xs), 2) for linear and (len(xs), 4)
    for cubic; weights sum to 1 in every row.
    """
    xs = np.asarray(xs, dtype=float)
    if np.any((xs < 0.0) | (xs > 1.0)):
        raise DomainError("interpolation points must lie in [0,1]")
    t = np.minimum(np.floor(xs * q).astype(np.int64), q - 1)
    if kind == "linear":
        u = xs * q - t
        idx = np.stack([t, t + 1], axis=-1)
        wts = np.stack([1.0 - u, u], axis=-1)
        return idx, wts
    if kind == "cubic":
        b = np.clip(t - 1, 0, q - 3)
        s = xs * q - b
        w0 = -(s - 1) * (s - 2) * (s - 3) / 6.0
        w1 = s * (s - 2) * (s - 3) / 2.0
        w2 = -s * (s - 1) * (s - 3) / 2.0
        w3 = s * (s - 1) * (s - 2) / 6.0
        idx = np.stack([b, b + 1, b + 2, b + 3], axis=-1)
        wts = np.stack([w0, w1, w2, w3], axis=-1)
        return idx, wts
    raise DomainError(f"unknown interpolation kind {kind!r}")


def simpson_weights(q: int) -> np.ndarray:
    w = np.ones(q + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * q)


@dataclass(frozen=True)
class GridFunction:
    """q+1 uniform samples on [0,1] with an interpolation rule."""

    values: np.ndarray
    q: int
    interpolation: str = "linear"

    def __post_init__(self):
        _check_resolution(self.q)
        v = np.asarray(self.values)
        if v.shape != (self.q + 1,):
            raise DomainError(f"expected {self.q + 1} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("samples must be finite")
        if np.iscomplexobj(v) and np.all(v.imag == 0.0):
            v = v.real.copy()
        object.__setattr__(self, "values", v)
        if self.interpolation not in ("linear", "cubic"):
            raise DomainError(f"unknown interpolation {self.interpolation!r}")

    @classmethod
    def from_callable(cls, fn, q: int, interpolation: str = "linear") -> "GridFunction":
        xs = grid_nodes(q)
        return cls(np.asarray([fn(float(x)) for x in xs]), q, interpolation)

    @classmethod
    def from_samples_of(cls, fn_vec, q: int, interpolation: str = "linear") -> "GridFunction":
        """fn_vec maps an array of points to an array of values."""
        return cls(np.asarray(fn_vec(grid_nodes(q))), q, interpolation)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def evaluate_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if xs.size and (float(xs.min()) < 0.0 or float(xs.max()) > 1.0):
            raise DomainError("interpolation points must lie in [0,1]")
        v = self.values
        q = self.q
        t = xs * q
        if self.interpolation == "linear":
            i = np.minimum(t.astype(np.int64), q - 1)
            u = t - i
            return v[i] + (v[i + 1] - v[i]) * u
        b = np.clip(t.astype(np.int64) - 1, 0, q - 3)
        s = t - b
        s1 = s - 1.0
        s2 = s - 2.0
        s3 = s - 3.0
        return (
            v[b] * (-s1 * s2 * s3 / 6.0)
            + v[b + 1] * (s * s2 * s3 / 2.0)
            + v[b + 2] * (-s * s1 * s3 / 2.0)
            + v[b + 3] * (s * s1 * s2 / 6.0)
        )

    def evaluate(self, x: float):
        out = self.evaluate_many(np.array([x]))[0]
        return complex(out) if self.is_complex else float(out)

    def integrate(self):
        """Composite Simpson value of the integral over [0,1]."""
        total = simpson_weights(self.q) @ self.values
        return complex(total) if self.is_complex else float(total)

    def map_values(self, fn) -> "GridFunction":
        return GridFunction(fn(self.values), self.q, self.interpolation)

    def to_csv_rows(self):
        """(x, value) pairs, the serialization used in CSV output."""
        return list(zip(grid_nodes(self.q), self.values))

    def __add__(self, other):
        if isinstance(other, GridFunction):
            if other.q != self.q:
                raise LengthMismatch("resolution mismatch")
            return GridFunction(self.values + other.values, self.q, self.interpolation)
        return GridFunction(self.values + other, self.q, self.interpolation)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            return self + GridFunction(-other.values, other.q, other.interpolation)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            if other.q != self.q:
                raise LengthMismatch("resolution mismatch")
            return GridFunction(self.values * other.values, self.q, self.interpolation)
        return GridFunction(self.values * other, self.q, self.interpolation)

    __rmul__ = __mul__


def holder_seminorm_estimate(f: GridFunction, alpha: float = 1.0, max_lag: int = None) -> float:
    """Lower bound on the alpha-Hoelder seminorm from node pairs.

    Scans |f(x)-f(y)|/|x-y|^alpha over all node pairs (optionally capped at
    a lag window); diagnostic only.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0,1], got {alpha}")
    v = f.values
    q = f.q
    lags = range(1, q + 1) if max_lag is None else range(1, min(max_lag, q) + 1)
    best = 0.0
    for lag in lags:
        diff = np.abs(v[lag:] - v[:-lag]).max()
        best = max(best, float(diff) / (lag / q) ** alpha)
    return best


@dataclass(frozen=True)
class CylinderFunction:
    """Depth-m function on words x interval: one grid slice per m-word.

    Slices are stored lexicographically in a (N^m, q+1) array; depth 0 is a
    single slice and represents functions independent of the word, the
    computable image of the lift.
    """

    data: np.ndarray
    depth: int
    alphabet_size: int
    q: int
    interpolation: str = "linear"

    def __post_init__(self):
        _check_resolution(self.q)
        d = np.asarray(self.data)
        want = (self.alphabet_size**self.depth, self.q + 1)
        if d.shape != want:
            raise DomainError(f"expected slice table of shape {want}, got {d.shape}")
        if not np.all(np.isfinite(d)):
            raise DomainError("slices must be finite")
        object.__setattr__(self, "data", d)

    def word_index(self, w) -> int:
        symbols = w.symbols if isinstance(w, Word) else tuple(w)
        if len(symbols) != self.depth:
            raise LengthMismatch(f"need a word of length {self.depth}")
        idx = 0
        for s in symbols:
            if not 1 <= s <= self.alphabet_size:
                raise DomainError(f"symbol {s} outside alphabet")
            idx = idx * self.alphabet_size + (s - 1)
        return idx

    def slice_for(self, w) -> GridFunction:
        return GridFunction(self.data[self.word_index(w)], self.q, self.interpolation)

    def evaluate(self, w, x: float):
        return self.slice_for(w).evaluate(x)

    def slice_variation(self) -> float:
        """max over word pairs of the sup-distance between slices."""
        return float(self.data.max(axis=0).__sub__(self.data.min(axis=0)).max()) if len(self.data) else 0.0


def q_lift(f: GridFunction, m: int, alphabet_size: int) -> CylinderFunction:
    """Depth-m lift: every slice equals f (word-independent extension)."""
    if m < 0:
        raise DomainError("depth must be >= 0")
    n_slices = alphabet_size**m
    data = np.tile(f.values, (n_slices, 1))
    return CylinderFunction(data, m, alphabet_size, f.q, f.interpolation)


class PotentialSpec:
    """Exactly evaluable potential: const, coordinate(+shift), centered,
    cos/sin(2 pi k x), per-map -log|T'|, or a sample table.

    Parsed from config strings like "const:0.7", "centered", "cos:3",
    "neglogd:2", "x-0.45".
    """

    KINDS = ("const", "coordinate", "centered", "cos", "sin", "neglogd", "table")

    def __init__(self, kind: str, param=None, table: GridFunction = None):
        if kind not in self.KINDS:
            raise DomainError(f"unknown potential kind {kind!r}")
        self.kind = kind
        self.param = param
        self.table = table
        if kind == "table" and table is None:
            raise DomainError("table potential needs samples")

    @classmethod
    def parse(cls, text: str) -> "PotentialSpec":
        text = text.strip()
        if text in ("x", "coord", "coordinate"):
            return cls("coordinate", 0.0)
        if text == "centered":
            return cls("centered")
        if text == "neglogd":
            return cls("neglogd", None)  # per-map mode
        if len(text) > 1 and text[0] == "x" and text[1] in "+-":
            return cls("coordinate", float(text[1:]))
        if ":" in text:
            kind, _, arg = text.partition(":")
            kind = kind.strip()
            if kind == "const":
                return cls("const", float(arg))
            if kind in ("cos", "sin"):
                return cls(kind, int(arg))
            if kind == "neglogd":
                return cls("neglogd", int(arg))
        raise DomainError(f"cannot parse potential {text!r}")

    def describe(self) -> str:
        if self.kind == "const":
            return f"const:{self.param!r}"
        if self.kind == "coordinate":
            return "x" if self.param == 0.0 else f"x{self.param:+g}"
        if self.kind in ("cos", "sin", "neglogd"):
            return f"{self.kind}:{self.param}" if self.param is not None else self.kind
        if self.kind == "table":
            return f"table[q={self.table.q}]"
        return self.kind

    @property
    def per_map(self) -> bool:
        return self.kind == "neglogd" and self.param is None

    def evaluator(self, family=None):
        """Vectorized x-array -> value-array callable."""
        kind, p = self.kind, self.param
        if kind == "const":
            return lambda xs: np.full_like(np.asarray(xs, dtype=float), p)
        if kind == "coordinate":
            return lambda xs: np.asarray(xs, dtype=float) + p
        if kind == "centered":
            return lambda xs: np.asarray(xs, dtype=float) - 0.5
        if kind == "cos":
            return lambda xs: np.cos((2.0 * math.pi * p) * np.asarray(xs, dtype=float))
        if kind == "sin":
            return lambda xs: np.sin((2.0 * math.pi * p) * np.asarray(xs, dtype=float))
        if kind == "table":
            return self.table.evaluate_many
        if kind == "neglogd":
            if family is None or p is None:
                raise DomainError("neglogd potential needs a bound map index and family")
            m = family[p]
            if m.canonical:
                c = -math.log(m.degree)
                return lambda xs: np.full_like(np.asarray(xs, dtype=float), c)

            def _f(xs):
                xs = np.asarray(xs, dtype=float)
                return np.array([-math.log(m.derivative_at(float(x))) for x in xs.ravel()]).reshape(xs.shape)

            return _f
        raise DomainError(kind)

    def evaluate_many(self, xs, family=None) -> np.ndarray:
        return self.evaluator(family)(xs)

    def evaluate(self, x: float, family=None) -> float:
        return float(self.evaluator(family)(np.array([x]))[0])

    def sup_norm_bound(self, family=None) -> float:
        xs = np.arange(4097) / 4096
        return float(np.abs(self.evaluate_many(xs, family)).max())

    def to_grid(self, q: int, interpolation: str = "linear", family=None) -> GridFunction:
        return GridFunction(self.evaluate_many(grid_nodes(q), family), q, interpolation)
