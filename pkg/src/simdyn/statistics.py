"""Ergodic averages, correlations, variances, and limit-theorem experiments.

Quadrature policy: integrals of g(T_w x) h(x) are split at the laps of T_w
and computed lap-by-lap in the straightened coordinate (composite Simpson),
which keeps piecewise-polynomial integrands exact and smooth ones at
spectral accuracy regardless of how many laps T_w has.

Monte Carlo policy: orbits driven by random words are generated by a
backward digit recursion (exact in distribution). Forward float iteration
is wrong here: binary64 points are dyadic rationals whose doubling orbits
collapse within ~53 steps. Streams come from numpy's Philox4x64
counter-based generator with key = (seed, chunk_index) and a fixed chunk
size of 1024 samples, so results are byte-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.special

from .errors import (
    BudgetExceeded,
    DomainError,
    AgreementError,
    NotMeanZero,
    TooFewPoints,
    WordTooShort,
)
from .function_space import GridFunction, PotentialSpec, simpson_weights
from .interval_maps import CanonicalPieces, MapFamily, affine_pieces
from .symbolic import BernoulliSpec, Word, iter_symbol_tuples

CHUNK = 1024
TAIL_DIGITS = 64
CORRELATION_BUDGET = 2 * 10**8
DIRECT_PIECE_CAP = 2**21


# ---------------------------------------------------------------------------
# evaluation helpers


def _evaluator(g, family=None):
    if isinstance(g, GridFunction):
        return g.evaluate_many
    if isinstance(g, PotentialSpec):
        return g.evaluator(family)
    raise DomainError(f"unsupported observable type {type(g)!r}")


def _lebesgue_integral(g, family=None, q: int = 16384) -> float:
    if isinstance(g, GridFunction):
        return float(g.integrate())
    ev = _evaluator(g, family)
    xs = np.arange(q + 1) / q
    return float(simpson_weights(q) @ ev(xs))


def _int_g_squared(g, family=None) -> float:
    """Integral of g^2; exact for linear-interpolation grid functions."""
    if isinstance(g, GridFunction) and g.interpolation == "linear" and not g.is_complex:
        a = g.values[:-1]
        b = g.values[1:]
        return float(np.sum(a * a + a * b + b * b) / (3.0 * g.q))
    ev = _evaluator(g, family)
    q = 16384
    xs = np.arange(q + 1) / q
    v = ev(xs)
    return float(simpson_weights(q) @ (v * v))


# ---------------------------------------------------------------------------
# lap-split quadrature


def _quad_resolution(n_pieces: int, *grids) -> int:
    if n_pieces <= 8192:
        base = 2048
    elif n_pieces <= 131072:
        base = 512
    else:
        base = 128
    for q in grids:
        if q and 2 * q > base and n_pieces <= 8192:
            base = 2 * q
    return base


def _lap_integral(g_eval, h_eval, pieces, q_quad: int, budget: int = CORRELATION_BUDGET) -> float:
    """integral of g(T_w x) h(x) dx over [0,1); T_w given by its laps."""
    M = pieces.count
    if (M + 1) * (q_quad + 1) > budget:
        raise BudgetExceeded(f"{M} laps x {q_quad} quadrature nodes exceeds the budget {budget}")
    u = np.arange(q_quad + 1) / q_quad
    wts = simpson_weights(q_quad)
    gu = g_eval(u)
    if isinstance(pieces, CanonicalPieces):
        hbar = np.zeros(q_quad + 1)
        chunk = max(1, 2**22 // (q_quad + 1))
        for j0 in range(0, M, chunk):
            js = np.arange(j0, min(j0 + chunk, M), dtype=float)
            hbar += h_eval((u[None, :] + js[:, None]) / M).sum(axis=0)
        hbar /= M
        return float(wts @ (gu * hbar))
    total = 0.0
    for lo, hi, sl, ic in pieces:
        xs = (u - ic) / sl
        xs = np.clip(xs, 0.0, 1.0)
        total += float(wts @ (gu * h_eval(xs))) / sl
    return total


def correlation(family: MapFamily, w: Word, g, h, q_quad: int = None, budget: int = CORRELATION_BUDGET) -> float:
    """Correlation of g pulled back by T_w against h, under Lebesgue.

    integral of (g o T_w) h minus the product of the integrals; the empty
    word gives the plain covariance.
    """
    pieces = affine_pieces(family, w, max_pieces=budget)
    grids = [x.q for x in (g, h) if isinstance(x, GridFunction)]
    if q_quad is None:
        q_quad = _quad_resolution(pieces.count, *grids)
    g_eval = _evaluator(g, family)
    h_eval = _evaluator(h, family)
    u = np.arange(q_quad + 1) / q_quad
    wts = simpson_weights(q_quad)
    ig = float(wts @ g_eval(u))
    ih = float(wts @ h_eval(u))
    raw = _lap_integral(g_eval, h_eval, pieces, q_quad, budget)
    return raw - ig * ih


_pm_matrix_cache = {}


def _per_map_normalized(family: MapFamily, d: int, q: int, interp: str) -> np.ndarray:
    """Matrix of the Lebesgue-normalized per-map transfer operator.

    Row i averages the operand over the preimages of node i with weights
    1/|T'|; exact on piecewise-linear operands for canonical maps (their
    image under the operator is again piecewise linear on the grid).
    """
    key = (family.degrees, d, q, interp)
    if key not in _pm_matrix_cache:
        from .transfer import build_per_map_operator

        spec = PotentialSpec("neglogd", d)
        M = build_per_map_operator(family[d], spec, q, interp, family=family, map_index=d)
        _pm_matrix_cache[key] = M.matrix
    return _pm_matrix_cache[key]


def _product_integral(a: np.ndarray, b: np.ndarray, q: int, interpolation: str) -> float:
    """integral of (interp a)(interp b) over [0,1]; exact for linear."""
    if interpolation == "linear":
        a1, a2 = a[:-1], a[1:]
        b1, b2 = b[:-1], b[1:]
        return float(np.sum(2.0 * a1 * b1 + a1 * b2 + a2 * b1 + 2.0 * a2 * b2) / (6.0 * q))
    return float(simpson_weights(q) @ (a * b))


def correlation_via_operators(family: MapFamily, w: Word, g: GridFunction, h: GridFunction) -> float:
    """Adjoint-operator form of the correlation: integral of g against the
    word-ordered product of normalized per-map operators applied to the
    centered h. Cross-validates the lap-split quadrature route."""
    if not family.canonical:
        raise DomainError("operator route supports canonical families")
    if g.q != h.q or g.interpolation != h.interpolation:
        raise DomainError("g and h must share grid and interpolation")
    q = g.q
    trap = np.full(q + 1, 1.0 / q)
    trap[0] *= 0.5
    trap[-1] *= 0.5
    v = h.values - float(trap @ h.values) if h.interpolation == "linear" else h.values - h.integrate()
    for s in w:
        v = _per_map_normalized(family, s, q, h.interpolation) @ v
    return _product_integral(g.values, v, q, g.interpolation)


@dataclass
class CorrelationSeries:
    """Correlation values indexed by word length, plus provenance."""

    entries: list  # (n, value)
    degrees: tuple = ()
    word_policy: str = "repeat-word"
    base_word: str = ""
    g_label: str = ""
    h_label: str = ""

    def __post_init__(self):
        ns = [n for n, _ in self.entries]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise DomainError("correlation lags must be strictly increasing")
        if not all(np.isfinite(v) for _, v in self.entries):
            raise DomainError("correlation values must be finite")

    def lags(self):
        return [n for n, _ in self.entries]

    def values(self):
        return [v for _, v in self.entries]


def correlation_series(
    family: MapFamily, base: Word, g, h, n_values, budget: int = CORRELATION_BUDGET,
    g_label: str = "", h_label: str = "",
) -> CorrelationSeries:
    """Correlations along periodic extensions of ``base`` for each n."""
    entries = []
    for n in n_values:
        if n < 0:
            raise DomainError("lag must be >= 0")
        w = base.extended(n) if n > 0 else Word((), family.alphabet_size)
        entries.append((int(n), correlation(family, w, g, h, budget=budget)))
    return CorrelationSeries(entries, family.degrees, "repeat-word", base.serialize(), g_label, h_label)


def correlation_series_for_words(
    family: MapFamily, words, g, h, budget: int = CORRELATION_BUDGET,
    g_label: str = "", h_label: str = "",
) -> CorrelationSeries:
    """Correlations for an explicit per-n word list (one word per entry)."""
    entries = sorted((len(w), correlation(family, w, g, h, budget=budget)) for w in words)
    return CorrelationSeries(entries, family.degrees, "per-n-word-list", "", g_label, h_label)


def decay_rate_fit(series: CorrelationSeries):
    """Least squares of log|value| against n: (theta_hat, c_hat, r2).

    Entries with |value| <= 1e-14 are excluded; fewer than 4 usable points
    raises TooFewPoints.
    """
    pts = [(n, abs(v)) for n, v in series.entries if abs(v) > 1e-14]
    if len(pts) < 4:
        raise TooFewPoints(f"only {len(pts)} usable correlation entries")
    ns = np.array([p[0] for p in pts], dtype=float)
    logs = np.log([p[1] for p in pts])
    A = np.stack([ns, np.ones_like(ns)], axis=1)
    coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
    fit = A @ coef
    ss_res = float(np.sum((logs - fit) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(np.exp(coef[0])), float(np.exp(coef[1])), r2


# ---------------------------------------------------------------------------
# variance along a word


@dataclass
class VarianceResult:
    value: float
    direct: float
    green_kubo: float
    n: int
    truncated_blocks: int
    total_blocks: int

    def agreement(self) -> float:
        if self.direct is None:
            return float("nan")
        return abs(self.direct - self.green_kubo)


def _extended_symbols(w: Word, n: int):
    if len(w) >= n:
        return w.symbols[:n]
    if w.periodic and len(w) > 0:
        return w.extended(n).symbols
    raise WordTooShort(f"word length {len(w)} < n = {n} (set periodic=True to extend)")


def variance_along_word(
    family: MapFamily,
    g,
    w: Word,
    n: int,
    mean_tol: float = 1e-10,
    agree_tol: float = 1e-8,
    direct_cap: int = DIRECT_PIECE_CAP,
    m_sub: int = 4,
    matvec_budget: int = 10**6,
) -> VarianceResult:
    """(1/n) integral of the squared ergodic sum of g along w.

    Two routes: lap-split quadrature of the square (within the lap budget)
    and the Green-Kubo expansion, whose block correlations are evaluated
    through products of the normalized per-map operators (exact on
    piecewise-linear observables). Both are computed when affordable and
    must agree to ``agree_tol``.
    """
    if not family.canonical:
        raise DomainError("variance_along_word currently supports canonical families")
    if n < 1:
        raise DomainError("horizon must be >= 1")
    gf = g if isinstance(g, GridFunction) else g.to_grid(4096, "linear", family)
    if abs(_lebesgue_integral(gf, family)) > mean_tol:
        raise NotMeanZero("observable must have zero Lebesgue mean")
    syms = _extended_symbols(w, max(n, 1))
    degs = [family[s].degree for s in syms]
    q = gf.q

    # Green-Kubo: sigma^2 = int g^2 + (2/n) sum_{i<j} c(block i..j), where
    # c only depends on the block start modulo the word period.
    period = len(w.symbols) if (w.periodic and len(w.symbols) > 0) else n
    period = min(period, n)
    if period * n > matvec_budget:
        raise BudgetExceeded(f"{period * n} operator products exceed budget {matvec_budget}")
    g2 = _product_integral(gf.values, gf.values, q, gf.interpolation)
    scale = float(np.abs(gf.values).max()) or 1.0
    acc = 0.0
    total_blocks = n * (n - 1) // 2
    for r in range(period):
        vec = gf.values.copy()
        for k in range(1, n - r):
            vec = _per_map_normalized(family, syms[r + k - 1], q, gf.interpolation) @ vec
            if float(np.abs(vec).max()) < 1e-17 * scale:
                break
            c = _product_integral(gf.values, vec, q, gf.interpolation)
            if period == n:
                count = 1 if r <= n - 1 - k else 0
            else:
                count = (n - 1 - k - r) // period + 1 if r <= n - 1 - k else 0
            acc += count * c
    gk = g2 + 2.0 * acc / n

    # direct lap-split quadrature of (g^n_w)^2
    direct = None
    M_fin = 1
    for d in degs[: n - 1]:
        M_fin *= d
        if M_fin > direct_cap:
            break
    if M_fin <= direct_cap:
        direct = _direct_variance(gf.evaluate_many, degs, n, M_fin, m_sub)
        if agree_tol is not None and abs(direct - gk) > agree_tol:
            raise AgreementError(
                f"direct {direct!r} vs Green-Kubo {gk!r} differ by {abs(direct - gk):.3e} > {agree_tol:.1e}"
            )
    value = direct if direct is not None else gk
    return VarianceResult(value, direct, gk, n, 0, total_blocks)


def _direct_variance(g_eval, degs, n: int, M_fin: int, m_sub: int) -> float:
    """(1/n) int (sum_m g(K_m x))^2 dx on the fine lap grid, exact node
    positions by integer arithmetic."""
    D = M_fin * m_sub
    if M_fin * m_sub > 2**26:
        raise BudgetExceeded("direct variance grid too fine")
    p = np.arange(D + 1, dtype=np.int64)
    sums = np.zeros(D + 1)
    K = 1
    for m in range(n):
        if m > 0:
            K *= degs[m - 1]
        args = ((K % D) * p) % D
        sums += g_eval(args / D)
    w = simpson_weights(D)
    return float(w @ (sums * sums)) / n


def koopman_green_kubo(family: MapFamily, g, grid_q: int = 4096, j_max: int = 200) -> float:
    """Annealed Green-Kubo variance: int g~^2 + 2 sum_j int g~ (K^j g~).

    K is the averaged one-step composition operator; its correlations are
    evaluated through the adjoint (averaged transfer) matrix, which smooths
    instead of oscillating, so no resolution is lost at large j. Used as
    the positivity cross-check for the second pressure derivative.
    """
    if isinstance(g, PotentialSpec):
        g = g.to_grid(grid_q, "linear", family)
    q = g.q
    trap = np.full(q + 1, 1.0 / q)
    trap[0] *= 0.5
    trap[-1] *= 0.5
    vals = g.values - float(trap @ g.values)
    A = np.mean([_per_map_normalized(family, d, q, g.interpolation) for d in range(1, len(family) + 1)], axis=0)
    cur = vals.copy()
    total = _product_integral(vals, vals, q, g.interpolation)
    for _ in range(j_max):
        cur = A @ cur
        term = _product_integral(vals, cur, q, g.interpolation)
        total += 2.0 * term
        if abs(term) < 1e-15:
            break
    return total


# ---------------------------------------------------------------------------
# averaged composition operator and ergodic averages


def averaged_koopman(family: MapFamily, f: GridFunction) -> GridFunction:
    """Pointwise mean of the N compositions f o T_d, resampled on the grid.

    Canonical maps send nodes to nodes, so the resampling is exact at the
    nodes.
    """
    q = f.q
    idx = np.arange(q + 1)
    acc = np.zeros(q + 1, dtype=f.values.dtype)
    for d in range(1, len(family) + 1):
        m = family[d]
        if m.canonical:
            acc = acc + f.values[(m.degree * idx) % q]
        else:
            xs = np.arange(q + 1) / q
            ys = np.array([m.branch_slopes[m.branch_of(x)] * (x - m.breaks[m.branch_of(x)]) for x in xs])
            acc = acc + f.evaluate_many(np.clip(ys, 0.0, 1.0))
    return GridFunction(acc / len(family), q, f.interpolation)


def _multiset_compositions(j: int, N: int):
    """All (a_1..a_N) with sum j, paired with multinomial coefficients."""
    if N == 1:
        yield (j,), 1
        return
    for a in range(j + 1):
        for rest, coef in _multiset_compositions(j - a, N - 1):
            yield (a,) + rest, math.comb(j, a) * coef


def _koopman_power_at(family: MapFamily, g_eval, x: Fraction, j: int) -> float:
    """(K^j g)(x) by the degree-multiset factorization, exact orbit points.

    Canonical maps commute, so T_v x depends only on how many times each
    map occurs in v; the N^j word sum collapses to a multiset sum with
    multinomial weights.
    """
    N = family.alphabet_size
    degs = family.degrees
    num, den = x.numerator, x.denominator
    vals = 0.0
    for counts, coef in _multiset_compositions(j, N):
        mult = 1
        for k, a in zip(degs, counts):
            mult = (mult * pow(k, a, den)) % den
        pt = ((mult * num) % den) / den
        weight = coef / N**j
        vals += weight * float(g_eval(np.array([pt]))[0])
    return vals


def ergodic_average_check(
    family: MapFamily,
    f,
    x,
    n_values,
    brute_max: int = 8,
) -> list:
    """Rows (n, brute, koopman, target) for the word-averaged ergodic sums.

    brute enumerates all N^n words (n <= brute_max); the Koopman column is
    the power-sum formula evaluated through the commuting-map multiset
    collapse; target is the Lebesgue integral of f. Orbit points use exact
    rational arithmetic (float points are dyadic and their doubling orbits
    degenerate).
    """
    if not family.canonical:
        raise DomainError("ergodic_average_check supports canonical families")
    xf = x if isinstance(x, Fraction) else Fraction(float(x))
    if not 0 <= xf < 1:
        raise DomainError("x must lie in [0,1)")
    ev = _evaluator(f, family)
    target = _lebesgue_integral(f, family)
    N = family.alphabet_size
    degs = family.degrees
    num, den = xf.numerator, xf.denominator
    rows = []
    kpowers = {}

    def kpower(j: int) -> float:
        if j not in kpowers:
            kpowers[j] = _koopman_power_at(family, ev, xf, j)
        return kpowers[j]

    for n in n_values:
        koop = sum(kpower(j) for j in range(n)) / n
        brute = None
        if n <= brute_max:
            total = 0.0
            for word in iter_symbol_tuples(n, N):
                p = num % den
                s = float(ev(np.array([p / den]))[0])
                for i in range(n - 1):
                    p = (degs[word[i] - 1] * p) % den
                    s += float(ev(np.array([p / den]))[0])
                total += s
            brute = total / (n * N**n)
        rows.append((int(n), brute, float(koop), target))
    return rows


# ---------------------------------------------------------------------------
# Monte Carlo experiments


@dataclass(frozen=True)
class RandomWordSampler:
    """Seeded counter-based word stream; identical seed => identical words."""

    seed: int
    spec: BernoulliSpec

    def word(self, length: int, index: int) -> Word:
        rng = np.random.Generator(np.random.Philox(key=np.array([self.seed, index], dtype=np.uint64)))
        cum = np.cumsum(self.spec.probabilities)
        u = rng.random(length)
        symbols = 1 + np.searchsorted(cum, u, side="right")
        symbols = np.minimum(symbols, self.spec.alphabet_size)
        return Word(tuple(int(s) for s in symbols), self.spec.alphabet_size)


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed & (2**64 - 1), chunk_index], dtype=np.uint64)))


def _simulate_sums(
    family: MapFamily,
    g_eval,
    n: int,
    samples: int,
    seed: int,
    word_policy: str,
    word: Word,
    spec: BernoulliSpec,
    workers: int = 1,
    keep_paths: bool = False,
):
    """Ergodic sums S = sum_{m<n} g(p_m) over random starts (and words).

    Backward digit recursion: p_{m-1} = (d_m + p_m)/k_m with independent
    uniform digits and a uniform tail, which reproduces the orbit law
    exactly. Chunked; chunk c uses Philox key (seed, c).
    """
    steps = n + TAIL_DIGITS
    if word_policy == "fixed":
        syms = np.array(_extended_symbols(word, steps), dtype=np.int64)
        fixed_degs = np.array([family[int(s)].degree for s in syms], dtype=np.int64)
    elif word_policy == "bernoulli":
        cum = np.cumsum(spec.probabilities)
        all_degs = np.array([0] + [family[d].degree for d in range(1, len(family) + 1)], dtype=np.int64)
    else:
        raise DomainError(f"unknown word policy {word_policy!r}")

    n_chunks = -(-samples // CHUNK)

    def run_chunk(c: int):
        size = min(CHUNK, samples - c * CHUNK)
        rng = _chunk_rng(seed, c)
        if word_policy == "fixed":
            degs = np.broadcast_to(fixed_degs, (size, steps))
        else:
            u_sym = rng.random((size, steps))
            symbols = 1 + np.searchsorted(cum, u_sym.ravel(), side="right").reshape(size, steps)
            symbols = np.minimum(symbols, len(family))
            degs = all_degs[symbols]
        u_dig = rng.random((size, steps))
        digits = np.floor(u_dig * degs).astype(np.int64)
        x = rng.random(size)
        sums = np.zeros(size)
        path = np.zeros((size, n)) if keep_paths else None
        for m in range(steps, 0, -1):
            x = (digits[:, m - 1] + x) / degs[:, m - 1]
            if m <= n:
                gx = g_eval(x)
                sums += gx
                if keep_paths:
                    path[:, m - 1] = gx
        return sums, path

    results = [None] * n_chunks
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            for c, out in zip(range(n_chunks), ex.map(run_chunk, range(n_chunks))):
                results[c] = out
    else:
        for c in range(n_chunks):
            results[c] = run_chunk(c)
    sums = np.concatenate([r[0] for r in results])
    paths = np.concatenate([r[1] for r in results]) if keep_paths else None
    return sums, paths


def normalized_sums(
    family: MapFamily,
    g,
    n: int,
    samples: int,
    seed: int,
    word_policy: str = "fixed",
    word: Word = None,
    spec: BernoulliSpec = None,
    workers: int = 1,
) -> np.ndarray:
    """The raw samples S_n / sqrt(n) used by the CLT experiment."""
    if word_policy == "fixed" and word is None:
        word = Word((1,), family.alphabet_size, periodic=True)
    if spec is None:
        spec = BernoulliSpec.uniform(family.alphabet_size)
    sums, _ = _simulate_sums(family, _evaluator(g, family), n, samples, seed, word_policy, word, spec, workers)
    return sums / math.sqrt(n)


def normal_cdf(x, sigma: float = 1.0):
    """Exact normal CDF through scipy's ndtr (erf at machine accuracy)."""
    return scipy.special.ndtr(np.asarray(x, dtype=float) / sigma)


def ks_statistic(samples: np.ndarray, sigma: float) -> float:
    """Sup distance between the empirical CDF and Normal(0, sigma^2)."""
    z = np.sort(np.asarray(samples, dtype=float))
    m = len(z)
    cdf = normal_cdf(z, sigma)
    upper = np.max(np.arange(1, m + 1) / m - cdf)
    lower = np.max(cdf - np.arange(0, m) / m)
    return float(max(upper, lower))


@dataclass
class CltReport:
    samples: int
    n: int
    ks_statistic: float
    variance_estimate: float
    seed: int
    word_policy: str
    degenerate: bool = False
    sigma_source: str = "word-variance"
    word: str = ""

    def as_dict(self) -> dict:
        return {
            "samples": self.samples,
            "n": self.n,
            "ks_statistic": self.ks_statistic,
            "variance_estimate": self.variance_estimate,
            "seed": self.seed,
            "word_policy": self.word_policy,
            "degenerate": self.degenerate,
            "sigma_source": self.sigma_source,
            "word": self.word,
        }


def clt_experiment(
    family: MapFamily,
    g,
    n: int,
    samples: int,
    seed: int,
    word_policy: str = "fixed",
    word: Word = None,
    spec: BernoulliSpec = None,
    workers: int = 1,
    mean_tol: float = 1e-10,
) -> CltReport:
    """Distribution of the normalized ergodic sums against the CLT normal.

    Fixed policy: the reference variance is the word variance at horizon n.
    Bernoulli policy: words are drawn uniformly (or per ``spec``) and the
    reference variance is pooled from the sample itself (flagged).
    """
    if samples < 1000:
        raise DomainError("need at least 1000 samples")
    if abs(_lebesgue_integral(g, family)) > mean_tol:
        raise NotMeanZero("observable must have zero Lebesgue mean")
    if word_policy == "fixed" and word is None:
        word = Word((1,), family.alphabet_size, periodic=True)
    if spec is None:
        spec = BernoulliSpec.uniform(family.alphabet_size)
    g_eval = _evaluator(g, family)
    sums, _ = _simulate_sums(family, g_eval, n, samples, seed, word_policy, word, spec, workers)
    z = sums / math.sqrt(n)
    if word_policy == "fixed":
        var = variance_along_word(family, g, word, n).value
        source = "word-variance"
    else:
        var = float(np.var(z, ddof=1))
        source = "pooled"
    degenerate = var < 1e-28
    ks = 0.0 if degenerate else ks_statistic(z, math.sqrt(var))
    return CltReport(
        samples=samples,
        n=n,
        ks_statistic=ks,
        variance_estimate=var,
        seed=seed,
        word_policy=word_policy,
        degenerate=degenerate,
        sigma_source=source,
        word=word.serialize() if word is not None else "",
    )


@dataclass
class LilSummary:
    n0: int
    n_max: int
    samples: int
    sigma: float
    quantiles: dict
    seed: int
    word_policy: str

    def as_dict(self) -> dict:
        return {
            "n0": self.n0,
            "n_max": self.n_max,
            "samples": self.samples,
            "sigma": self.sigma,
            "quantiles": self.quantiles,
            "seed": self.seed,
            "word_policy": self.word_policy,
        }


def lil_diagnostic(
    family: MapFamily,
    g,
    n_max: int,
    samples: int,
    seed: int,
    word_policy: str = "fixed",
    word: Word = None,
    spec: BernoulliSpec = None,
    n0: int = 3,
    workers: int = 1,
) -> LilSummary:
    """Quantiles of max_n S_n/(sigma sqrt(2 n log log n)); diagnostic only.

    The iterated-logarithm limsup is asymptotic, so this reports the
    distribution of the desk-scale running maximum and never passes or
    fails on it.
    """
    if n0 < 3:
        raise DomainError("n0 must be >= 3 so log log n is a usable scale")
    if abs(_lebesgue_integral(g, family)) > 1e-10:
        raise NotMeanZero("observable must have zero Lebesgue mean")
    if word_policy == "fixed" and word is None:
        word = Word((1,), family.alphabet_size, periodic=True)
    if spec is None:
        spec = BernoulliSpec.uniform(family.alphabet_size)
    g_eval = _evaluator(g, family)
    _, paths = _simulate_sums(
        family, g_eval, n_max, samples, seed, word_policy, word, spec, workers, keep_paths=True
    )
    partial = np.cumsum(paths, axis=1)
    if word_policy == "fixed":
        var = variance_along_word(family, g, word, n_max).value
    else:
        var = float(np.var(partial[:, -1] / math.sqrt(n_max), ddof=1))
    sigma = math.sqrt(max(var, 0.0))
    ns = np.arange(n0, n_max + 1)
    denom = sigma * np.sqrt(2.0 * ns * np.log(np.log(ns)))
    if sigma == 0.0:
        stat = np.zeros(partial.shape[0])
    else:
        stat = np.max(partial[:, n0 - 1 :] / denom[None, :], axis=1)
    qs = {
        "min": float(np.min(stat)),
        "q25": float(np.quantile(stat, 0.25)),
        "median": float(np.median(stat)),
        "q75": float(np.quantile(stat, 0.75)),
        "max": float(np.max(stat)),
    }
    return LilSummary(n0, n_max, samples, sigma, qs, seed, word_policy)
