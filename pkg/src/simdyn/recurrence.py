"""Brute-force periodic-orbit counting with ergodic-sum window constraints.

Counts pairs (w, x) with |w| = n, T_w x = x and the n-th ergodic sum of f
inside [a, b]. Orbits of the rational fixed points are computed in exact
integer arithmetic (numerators mod M_w - 1), so the only floating error is
in evaluating f. The skew-product count is the same enumeration through
the definitional bijection with (word, fixed point) pairs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    BudgetExceeded,
    DegenerateDenominator,
    DomainError,
    TooFewPoints,
)
from .function_space import GridFunction, PotentialSpec
from .interval_maps import MapFamily
from .statistics import _evaluator
from .symbolic import iter_symbol_tuples
from .transfer import KappaSolution

DEFAULT_POINT_BUDGET = 10**8
BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class CountQuery:
    n: int
    a: float
    b: float
    f: object  # PotentialSpec or GridFunction
    kappa: KappaSolution = None
    skew: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("word length must be >= 1")
        if not self.a < self.b:
            raise DomainError(f"window needs a < b, got [{self.a}, {self.b}]")


@dataclass
class CountResult:
    n: int
    count: int
    predicted: float
    ratio: float
    words_enumerated: int
    points_enumerated: int
    boundary_hits: int
    skew: bool = False

    def as_row(self):
        return (self.n, self.count, self.predicted, self.ratio, self.points_enumerated, self.boundary_hits)


def _word_counts(family: MapFamily, syms, f_eval, n: int, a: float, b: float, tol: float):
    """Exact enumeration over Fix(T_w) for one word; returns
    (inside, boundary, points)."""
    degs = family.degrees
    M = 1
    for s in syms:
        M *= degs[s - 1]
    den = M - 1
    if den <= 0:
        return 0, 0, 0
    j = np.arange(den, dtype=np.int64)
    sums = np.zeros(den)
    K = 1
    for m in range(n):
        if m > 0:
            K = (K * degs[syms[m - 1] - 1]) % den
        pts = ((K * j) % den) / den
        sums += f_eval(pts)
    inside = int(np.count_nonzero((sums >= a - tol) & (sums <= b + tol)))
    boundary = int(np.count_nonzero((np.abs(sums - a) <= tol) | (np.abs(sums - b) <= tol)))
    return inside, boundary, den


def count_periodic(
    family: MapFamily,
    query: CountQuery,
    budget: int = DEFAULT_POINT_BUDGET,
    workers: int = 1,
    boundary_tol: float = BOUNDARY_TOL,
) -> CountResult:
    """Count fixed points of all n-words whose ergodic sum lands in [a, b].

    Enumeration order is lexicographic in the word and ascending in the
    fixed point; partial counts reduce in that order, so the result is
    deterministic for any worker count.
    """
    if not family.canonical:
        raise DomainError("count_periodic currently supports canonical families")
    n = query.n
    N = family.alphabet_size
    total_points = sum(family.degrees) ** n - N**n
    if total_points > budget:
        raise BudgetExceeded(f"{total_points} fixed points exceed budget {budget}")
    f_eval = _evaluator(query.f, family)
    words = list(iter_symbol_tuples(n, N))

    def run(idx):
        return _word_counts(family, words[idx], f_eval, n, query.a, query.b, boundary_tol)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, range(len(words))))
    else:
        parts = [run(i) for i in range(len(words))]
    count = sum(p[0] for p in parts)
    boundary = sum(p[1] for p in parts)
    points = sum(p[2] for p in parts)
    predicted = float("nan")
    ratio = float("nan")
    if query.kappa is not None:
        predicted = predicted_count(family, query.f, query.kappa, n, query.a, query.b, 1.0)
        ratio = count / predicted if predicted else float("nan")
    return CountResult(
        n=n,
        count=count,
        predicted=predicted,
        ratio=ratio,
        words_enumerated=N**n,
        points_enumerated=points,
        boundary_hits=boundary,
        skew=query.skew,
    )


def window_integral(kappa: float, a: float, b: float) -> float:
    """integral of e^{-kappa t} over [a, b]; analytic at kappa = 0."""
    if abs(kappa) < 1e-12:
        return b - a
    return (math.exp(-kappa * a) - math.exp(-kappa * b)) / kappa


def predicted_count(family: MapFamily, f, kappa: KappaSolution, n: int, a: float, b: float, C: float) -> float:
    """C e^{n P(kappa f)} / sqrt(n) times the window integral."""
    return C * math.exp(n * kappa.pressure_at_kappa) / math.sqrt(n) * window_integral(kappa.kappa, a, b)


@dataclass
class AsymptoticFit:
    C_hat: float
    ratio_series: list  # (n, count, predicted, ratio)
    drift: float
    window: tuple


def asymptotic_fit(
    family: MapFamily,
    f,
    kappa: KappaSolution,
    a: float,
    b: float,
    n_range,
    budget: int = DEFAULT_POINT_BUDGET,
    workers: int = 1,
) -> AsymptoticFit:
    """Fit the constant in the counting asymptotics and track ratios.

    C_hat is least squares of count * sqrt(n) * e^{-n P} against the window
    integral; drift is the relative change of the last two ratios.
    """
    ns = list(n_range)
    counts = []
    for n in ns:
        res = count_periodic(family, CountQuery(n=n, a=a, b=b, f=f, kappa=kappa), budget=budget, workers=workers)
        counts.append(res.count)
    I = window_integral(kappa.kappa, a, b)
    ys = [c * math.sqrt(n) * math.exp(-n * kappa.pressure_at_kappa) for n, c in zip(ns, counts)]
    usable = [(n, c, y) for n, c, y in zip(ns, counts, ys) if c > 0]
    if len(usable) < 2:
        raise TooFewPoints("need at least two n with nonzero counts to fit the constant")
    C_hat = float(np.mean([y for _, _, y in usable]) / I)
    series = []
    for n, c in zip(ns, counts):
        pred = predicted_count(family, f, kappa, n, a, b, C_hat)
        series.append((n, c, pred, c / pred if pred else float("nan")))
    r_prev, r_last = series[-2][3], series[-1][3]
    drift = abs(r_last - r_prev) / abs(r_prev) if r_prev else float("nan")
    return AsymptoticFit(C_hat=C_hat, ratio_series=series, drift=drift, window=(a, b))


@dataclass
class ApproximabilityReport:
    d_ratio: float
    best_error: float
    best_q: int
    exponent: float
    q_max: int
    rational_hit: bool

    def as_dict(self):
        return {
            "d_ratio": self.d_ratio,
            "best_error": self.best_error,
            "best_q": self.best_q,
            "exponent": self.exponent,
            "q_max": self.q_max,
            "rational_hit": self.rational_hit,
        }


def approximability_diagnostic(
    family: MapFamily,
    f,
    datasets,
    exponent: float = 3.0,
    q_max: int = 10**4,
) -> ApproximabilityReport:
    """Ratio of ergodic-sum differences over three periodic orbits, and how
    well rationals approximate it. Diagnostic only: the Diophantine property
    itself is not decidable numerically.
    """
    if len(datasets) != 3:
        raise DomainError("need exactly three periodic datasets (w, x, p)")
    periods = [p for _, _, p in datasets]
    if len(set(periods)) != 3:
        raise DomainError("the three periods must be distinct")
    f_eval = _evaluator(f, family)
    sums = []
    for w, x, p in datasets:
        if len(w) != p:
            raise DomainError("period must equal the word length")
        from .interval_maps import orbit

        pts = orbit(family, w, float(x), p)
        sums.append(float(np.sum(f_eval(pts))))
    sx, sy, sz = sums
    den = sz - sx
    if abs(den) < 1e-14:
        raise DegenerateDenominator(f"ergodic-sum denominator {den!r} vanishes")
    d = (sy - sx) / den
    best_err = float("inf")
    best_q = 0
    for q in range(1, q_max + 1):
        p = round(d * q)
        err = q**exponent * abs(d - p / q)
        if err < best_err:
            best_err = err
            best_q = q
    return ApproximabilityReport(
        d_ratio=float(d),
        best_error=float(best_err),
        best_q=int(best_q),
        exponent=exponent,
        q_max=q_max,
        rational_hit=bool(best_err < 1e-12),
    )


def trace_proxy_check(
    family: MapFamily,
    f: PotentialSpec,
    kappa: float,
    xi: float,
    n_values,
    q: int = 256,
    interp: str = "cubic",
) -> list:
    """Fixed-point sums of e^{(kappa+i xi) f^n} against powers of the
    normalized perturbed operator applied to 1.

    Cross-validation between the enumeration and operator routes; returns
    rows (n, |sum|, |operator value|, relative difference).
    """
    from .transfer import (
        build_collective_operator,
        build_complex_operator,
        leading_spectral_data,
    )

    f_grid = f.to_grid(q, interp, family) if isinstance(f, PotentialSpec) else f
    scaled = GridFunction(kappa * f_grid.values, q, interp)
    real_op = build_collective_operator(family, scaled, q, interp)
    s = leading_spectral_data(real_op, tol=1e-12, max_iter=20000)
    phi = s.phi.values
    C = build_complex_operator(family, f_grid, kappa, xi, q, interp)
    A = (C.matrix / phi[:, None]) * phi[None, :]
    f_eval = _evaluator(f, family)
    zeta = complex(kappa, xi)
    rows = []
    vec = np.ones(q + 1, dtype=complex)
    degs = family.degrees
    for n in range(1, max(n_values) + 1):
        vec = A @ vec
        if n not in n_values:
            continue
        total = 0.0 + 0.0j
        for syms in iter_symbol_tuples(n, family.alphabet_size):
            M = 1
            for sym in syms:
                M *= degs[sym - 1]
            den = M - 1
            j = np.arange(den, dtype=np.int64)
            sums = np.zeros(den)
            K = 1
            for m in range(n):
                if m > 0:
                    K = (K * degs[syms[m - 1] - 1]) % den
                sums += f_eval(((K * j) % den) / den)
            total += np.exp(zeta * sums).sum()
        op_mid = vec[len(vec) // 2]
        rel = abs(total - op_mid) / max(abs(total), 1e-300)
        rows.append((n, abs(total), abs(op_mid), float(rel)))
    return rows
