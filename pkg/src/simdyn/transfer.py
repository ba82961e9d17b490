"""Discretized Ruelle operators: per-map, collective, and skew.

Discretization is collocation on the uniform grid: row i of the matrix
implements "sum over preimages of x_i" with weights e^{f(y)} evaluated
exactly (PotentialSpec) or through the grid interpolant (GridFunction),
and interpolation stencils standing in for the operand. For canonical
families this keeps the L1 = const identities exact.

An Ulam (cell-to-cell) builder is included as an independent coarse
cross-check of leading eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import (
    DepthZero,
    DomainError,
    EigenfunctionNotPositive,
    LengthMismatch,
    NoConvergence,
    NonPositiveEigenfunction,
    NoSignChange,
)
from .function_space import (
    CylinderFunction,
    GridFunction,
    PotentialSpec,
    grid_nodes,
    interp_stencil,
    q_lift,
)
from .interval_maps import ExpandingMap, MapFamily
from .symbolic import iter_symbol_tuples

POTENTIAL_SUP_LIMIT = 30.0
DENSE_LIMIT = 4096


@dataclass
class TransferMatrix:
    """Dense collocation matrix plus the metadata needed to interpret it."""

    matrix: np.ndarray
    q: int
    kind: str  # per-map | collective | skew | complex
    interp: str
    depth: int = 0
    alphabet_size: int = 1
    potential: str = ""
    degrees: tuple = ()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.matrix)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec


def _f_values(potential, xs: np.ndarray, family=None, map_index=None) -> np.ndarray:
    """Potential values at preimage points; exact for PotentialSpec."""
    if isinstance(potential, GridFunction):
        vals = potential.evaluate_many(xs)
    elif isinstance(potential, PotentialSpec):
        spec = potential
        if spec.per_map:
            if map_index is None:
                raise DomainError("per-map potential used without a map index")
            spec = PotentialSpec("neglogd", map_index)
        vals = spec.evaluate_many(xs, family)
    else:
        raise DomainError(f"unsupported potential type {type(potential)!r}")
    if np.abs(vals).max(initial=0.0) > POTENTIAL_SUP_LIMIT:
        raise DomainError(f"potential sup-norm exceeds {POTENTIAL_SUP_LIMIT}; refusing to exponentiate")
    return vals


def _accumulate_branch(matrix, rows, y, weights, q, interp):
    idx, wts = interp_stencil(y, q, interp)
    np.add.at(matrix, (rows[:, None], idx), weights[:, None] * wts)


def build_per_map_operator(
    m: ExpandingMap,
    f,
    q: int,
    interp: str = "linear",
    family: MapFamily = None,
    map_index: int = None,
    zeta: complex = None,
) -> TransferMatrix:
    """Collocation matrix of the weighted preimage sum for one map.

    Row i holds sum_j e^{f(y_ij)} (stencil of g at y_ij) with y_ij the j-th
    preimage of node x_i. ``zeta`` scales the potential by a complex factor
    for the perturbed operators.
    """
    xs = grid_nodes(q)
    dtype = complex if zeta is not None and np.iscomplexobj(np.array(zeta)) else float
    A = np.zeros((q + 1, q + 1), dtype=dtype)
    rows = np.arange(q + 1)
    own_neglog = isinstance(f, PotentialSpec) and f.kind == "neglogd" and (
        f.param is None
        or f.param == map_index
        or (family is not None and f.param is not None and family[f.param] is m)
    )
    for j in range(m.degree):
        if m.canonical:
            y = (xs + j) / m.degree
        else:
            y = m.breaks[j] + xs * (m.breaks[j + 1] - m.breaks[j])
        if own_neglog:
            # the derivative at a preimage is this branch's slope; resolving
            # it by branch membership would misread the shared endpoints
            fv = np.full(q + 1, -math.log(m.branch_slopes[j]))
        else:
            fv = _f_values(f, y, family=family, map_index=map_index)
        w = np.exp(zeta * fv) if zeta is not None else np.exp(fv)
        _accumulate_branch(A, rows, y, w, q, interp)
    pot = f.describe() if isinstance(f, PotentialSpec) else f"grid[q={f.q}]"
    return TransferMatrix(A, q, "per-map", interp, potential=pot, degrees=(m.degree,))


def build_collective_operator(
    family: MapFamily,
    f,
    q: int,
    interp: str = "linear",
    zeta: complex = None,
) -> TransferMatrix:
    """Sum of the per-map operators; ``f`` may be one potential or a
    per-map list (one potential per map, as in f_d = -log|T_d'|)."""
    if isinstance(f, (list, tuple)):
        fs = list(f)
        if len(fs) != len(family):
            raise LengthMismatch(f"{len(fs)} potentials for {len(family)} maps")
    else:
        fs = [f] * len(family)
    A = None
    for d, (m, fd) in enumerate(zip(family.maps, fs), start=1):
        part = build_per_map_operator(m, fd, q, interp, family=family, map_index=d, zeta=zeta)
        A = part.matrix if A is None else A + part.matrix
    pot = fs[0].describe() if isinstance(fs[0], PotentialSpec) else f"grid[q={q}]"
    if isinstance(f, (list, tuple)):
        pot = "per-map:" + ",".join(p.describe() if isinstance(p, PotentialSpec) else "grid" for p in fs)
    kind = "complex" if zeta is not None else "collective"
    return TransferMatrix(A, q, kind, interp, potential=pot, degrees=family.degrees)


def build_skew_operator(family: MapFamily, F: CylinderFunction, q: int, interp: str = "linear") -> TransferMatrix:
    """Depth-m truncation of the skew Ruelle operator.

    (L G)(w, x) sums over d and over preimages y of x under T_d, reading F
    and G on the prepended-and-truncated word (d w_1 .. w_{m-1}). The
    result genuinely depends on only the first m-1 symbols, which tests
    verify rather than assume.
    """
    m_depth = F.depth
    if m_depth < 1:
        raise DepthZero("skew operator needs depth >= 1; use the collective operator")
    if F.q != q:
        raise LengthMismatch("cylinder resolution differs from requested q")
    N = family.alphabet_size
    if F.alphabet_size != N:
        raise LengthMismatch("cylinder alphabet differs from family size")
    n_slices = N**m_depth
    dim = n_slices * (q + 1)
    A = np.zeros((dim, dim))
    xs = grid_nodes(q)
    rows_local = np.arange(q + 1)
    words = list(iter_symbol_tuples(m_depth, N))
    w_index = {w: i for i, w in enumerate(words)}
    for iw, w in enumerate(words):
        row0 = iw * (q + 1)
        for d in range(1, N + 1):
            v = (d,) + w[: m_depth - 1]
            iv = w_index[v]
            col0 = iv * (q + 1)
            mp = family[d]
            slice_v = GridFunction(F.data[iv], q, F.interpolation)
            block = np.zeros((q + 1, q + 1))
            for j in range(mp.degree):
                if mp.canonical:
                    y = (xs + j) / mp.degree
                else:
                    y = mp.breaks[j] + xs * (mp.breaks[j + 1] - mp.breaks[j])
                fv = slice_v.evaluate_many(y)
                if np.abs(fv).max(initial=0.0) > POTENTIAL_SUP_LIMIT:
                    raise DomainError("potential sup-norm exceeds safe exponentiation range")
                _accumulate_branch(block, rows_local, y, np.exp(fv), q, interp)
            A[row0 : row0 + q + 1, col0 : col0 + q + 1] += block
    return TransferMatrix(
        A, q, "skew", interp, depth=m_depth, alphabet_size=N, potential=f"cylinder[m={m_depth}]", degrees=family.degrees
    )


@dataclass
class SpectralData:
    """Leading eigendata: rho, right eigenfunction, eigenmeasure weights,
    spectral-gap estimate, and the achieved residual."""

    rho: float
    phi: object  # GridFunction or CylinderFunction
    nu: np.ndarray
    gap: float
    residual: float
    invariance_defect: float
    method: str
    q: int
    depth: int = 0
    alphabet_size: int = 1
    nu_signed: bool = False  # cubic dual weights may oscillate at the boundary

    def phi_vector(self) -> np.ndarray:
        if isinstance(self.phi, CylinderFunction):
            return self.phi.data.ravel()
        return self.phi.values

    def reference_weights(self) -> np.ndarray:
        """Trapezoid-x-uniform-word weights: the discrete reference measure."""
        trap = np.full(self.q + 1, 1.0 / self.q)
        trap[0] *= 0.5
        trap[-1] *= 0.5
        n_slices = self.alphabet_size**self.depth
        return np.tile(trap / n_slices, n_slices)

    def densities(self) -> np.ndarray:
        """nu as a density against the reference weights (Lebesgue == 1)."""
        return self.nu / self.reference_weights()

    def equilibrium_weights(self) -> np.ndarray:
        """Invariant (Gibbs) weights: nu * phi renormalized."""
        w = self.nu * self.phi_vector()
        return w / w.sum()


def _phi_object(vec: np.ndarray, M: TransferMatrix):
    if M.kind == "skew":
        n_slices = M.alphabet_size**M.depth
        return CylinderFunction(vec.reshape(n_slices, M.q + 1), M.depth, M.alphabet_size, M.q, M.interp)
    return GridFunction(vec, M.q, M.interp)


def _power_iteration(A: np.ndarray, tol: float, max_iter: int):
    v = np.ones(A.shape[0])
    v /= np.linalg.norm(v)
    rho = 0.0
    for it in range(max_iter):
        w = A @ v
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            raise NoConvergence("operator annihilated the iterate")
        w /= nrm
        rho = float(w @ (A @ w) / (w @ w))
        resid = float(np.abs(A @ w - rho * w).max() / np.abs(w).max())
        v = w
        if resid < tol:
            return rho, v, resid, it + 1
    raise NoConvergence(f"power iteration residual {resid:.3e} > tol {tol:.1e} after {max_iter} iterations")


def _gap_estimate(A: np.ndarray, rho: float, phi: np.ndarray, nu: np.ndarray, iters: int = 300):
    rng = np.random.default_rng(12345)
    w = rng.standard_normal(A.shape[0])
    denom = float(nu @ phi)
    growth = []
    for _ in range(iters):
        w = w - phi * (nu @ w) / denom
        nw = np.linalg.norm(w)
        if nw < 1e-300:
            return 0.0
        w /= nw
        w2 = A @ w
        growth.append(np.linalg.norm(w2 - phi * (nu @ w2) / denom))
        w = w2
    tail = np.array(growth[-50:])
    lam2 = float(np.exp(np.mean(np.log(np.maximum(tail, 1e-300)))))
    return min(max(lam2 / rho, 0.0), 1.0 - 1e-16)


def leading_spectral_data(
    M: TransferMatrix,
    tol: float = 1e-11,
    max_iter: int = 5000,
    method: str = "auto",
) -> SpectralData:
    """Maximal eigenvalue, eigenfunction, eigenmeasure, and gap of M.

    Power iteration with Rayleigh-quotient stopping is the primary route;
    a dense solve is the fallback (and an explicit oracle) for dimensions
    up to DENSE_LIMIT. The eigenfunction is normalized positive with
    <nu, phi> = 1 and nu has total mass 1.
    """
    A = M.matrix
    if M.is_complex:
        raise DomainError("use complex_spectral_radius for complex operators")
    used = method
    if method == "dense":
        rho, phi, nu, residual = _dense_leading(A)
        gap = _dense_gap(A, rho)
    else:
        try:
            rho, phi, resid_r, _ = _power_iteration(A, tol, max_iter)
            rho_l, nu, resid_l, _ = _power_iteration(A.T, tol, max_iter)
            residual = max(resid_r, resid_l)
            gap = _gap_estimate(A, rho, phi, nu)
            used = "power"
        except NoConvergence:
            if method == "power" or A.shape[0] > DENSE_LIMIT:
                raise
            rho, phi, nu, residual = _dense_leading(A)
            gap = _dense_gap(A, rho)
            used = "dense-fallback"
    if phi.min() < 0 and phi.max() <= 0:
        phi = -phi
    trap = np.full(M.q + 1, 1.0 / M.q)
    trap[0] *= 0.5
    trap[-1] *= 0.5
    n_slices = M.alphabet_size**M.depth if M.kind == "skew" else 1
    ref = np.tile(trap, n_slices)
    if float(ref @ phi) < 0:
        phi = -phi
    if phi.min() <= 0.0:
        raise NonPositiveEigenfunction(
            f"leading eigenfunction has min {phi.min():.3e}; discretization too coarse"
        )
    if nu.max() <= 0 and nu.min() < 0:
        nu = -nu
    nu = np.where((nu < 0) & (nu > -1e-14), 0.0, nu)
    nu_signed = bool(nu.min() < 0)
    if nu_signed and M.interp == "linear":
        # linear stencils have a nonnegative dual; anything else is a bug
        raise NonPositiveEigenfunction(f"eigenmeasure weights dip to {nu.min():.3e}")
    nu = nu / nu.sum()
    phi = phi / float(nu @ phi)
    defect = float(np.abs(nu @ A / rho - nu).sum())
    return SpectralData(
        rho=float(rho),
        phi=_phi_object(phi, M),
        nu=nu,
        gap=float(gap),
        residual=float(residual),
        invariance_defect=defect,
        method=used,
        q=M.q,
        depth=M.depth if M.kind == "skew" else 0,
        alphabet_size=M.alphabet_size if M.kind == "skew" else 1,
        nu_signed=nu_signed,
    )


def _dense_leading(A: np.ndarray):
    if A.shape[0] > DENSE_LIMIT:
        raise NoConvergence(f"dimension {A.shape[0]} above dense limit {DENSE_LIMIT}")
    w, vl, vr = scipy.linalg.eig(A, left=True, right=True)
    i = int(np.argmax(np.abs(w)))
    lam = w[i]
    if abs(lam.imag) > 1e-9 * max(abs(lam), 1.0):
        raise NoConvergence(f"leading eigenvalue not real: {lam!r}")
    phi = np.real(vr[:, i])
    nu = np.real(np.conj(vl[:, i]))
    if phi.sum() < 0:
        phi = -phi
    if nu.sum() < 0:
        nu = -nu
    residual = float(np.abs(A @ phi - lam.real * phi).max() / np.abs(phi).max())
    return float(lam.real), phi, nu, residual


def _dense_gap(A: np.ndarray, rho: float) -> float:
    w = np.sort(np.abs(scipy.linalg.eigvals(A)))[::-1]
    if len(w) < 2:
        return 0.0
    return float(min(w[1] / rho, 1.0 - 1e-16))


def normalize(M: TransferMatrix, s: SpectralData, mode: str = "collective") -> TransferMatrix:
    """Conjugate by the eigenfunction: D^{-1} M D.

    Collective mode keeps the eigenvalue (tilde-L 1 = e^P 1); per-map mode
    also divides by rho so the constants are fixed exactly.
    """
    phi = s.phi_vector()
    if phi.min() <= 0.0:
        raise EigenfunctionNotPositive("cannot normalize by a non-positive eigenfunction")
    A = (M.matrix / phi[:, None]) * phi[None, :]
    if mode == "per-map":
        A = A / s.rho
    elif mode != "collective":
        raise DomainError(f"unknown normalization mode {mode!r}")
    return TransferMatrix(
        A, M.q, M.kind, M.interp, depth=M.depth, alphabet_size=M.alphabet_size,
        potential=M.potential + "~normalized", degrees=M.degrees,
    )


def pressure(family: MapFamily, f, q: int, tol: float = 1e-11, interp: str = "linear", method: str = "auto") -> float:
    """log of the maximal collective eigenvalue; the pressure of f."""
    M = build_collective_operator(family, f, q, interp)
    s = leading_spectral_data(M, tol=tol, method=method)
    return math.log(s.rho)


class EquilibriumMeasure:
    """Invariant Gibbs weights on the grid nodes, integrating GridFunctions
    and potentials by node sampling."""

    def __init__(self, weights: np.ndarray, q: int, family: MapFamily = None):
        self.weights = weights
        self.q = q
        self.family = family

    def integrate(self, g) -> float:
        xs = grid_nodes(self.q)
        if isinstance(g, GridFunction):
            vals = g.values if g.q == self.q else g.evaluate_many(xs)
        elif isinstance(g, PotentialSpec):
            vals = g.evaluate_many(xs, self.family)
        else:
            vals = np.asarray(g(xs))
        return float(self.weights @ vals)


def equilibrium_measure(
    family: MapFamily, f, q: int, tol: float = 1e-11, interp: str = "linear", method: str = "auto"
):
    """Equilibrium measure of f: left eigenvector of the normalized
    collective operator, i.e. nu * phi of the raw one."""
    M = build_collective_operator(family, f, q, interp)
    s = leading_spectral_data(M, tol=tol, method=method)
    return EquilibriumMeasure(s.equilibrium_weights(), q, family), s


def verify_spectrum_match(family: MapFamily, f, m: int, q: int, tol: float = 1e-7, interp: str = "linear") -> dict:
    """Numerical check that skew and collective leading eigendata agree and
    the skew eigenfunction is word-independent (lift image)."""
    if m < 1:
        raise DepthZero("depth must be >= 1 for the skew side")
    f_grid = f if isinstance(f, GridFunction) else f.to_grid(q, interp, family)
    F = q_lift(f_grid, m, family.alphabet_size)
    M_skew = build_skew_operator(family, F, q, interp)
    M_coll = build_collective_operator(family, f_grid, q, interp)
    s_skew = leading_spectral_data(M_skew, tol=1e-12, max_iter=20000)
    s_coll = leading_spectral_data(M_coll, tol=1e-12, max_iter=20000)
    slice_var = s_skew.phi.slice_variation() / np.abs(s_skew.phi.data).max()
    rho_gap = abs(s_skew.rho - s_coll.rho)
    return {
        "rho_skew": s_skew.rho,
        "rho_collective": s_coll.rho,
        "rho_gap": rho_gap,
        "slice_variation": float(slice_var),
        "tolerance": tol,
        "passed": bool(rho_gap < tol and slice_var < max(tol * 10.0, 1e-6)),
    }


def pressure_derivative_check(
    family: MapFamily, f: PotentialSpec, g: PotentialSpec, q: int, h: float = 1e-4, interp: str = "linear"
):
    """Finite-difference pressure derivatives against the measure integral.

    Returns (fd_slope, integral, second_fd, variance_proxy): the centered
    difference of t -> P(f + t g), the integral of g against the
    equilibrium measure of f, the second difference, and the annealed
    Green-Kubo variance of g as a positivity cross-check.
    """

    def p_at(t: float) -> float:
        combo = _combo_potential(f, g, t, q, interp, family)
        return pressure(family, combo, q, interp=interp)

    p0 = p_at(0.0)
    pp = p_at(h)
    pm = p_at(-h)
    fd_slope = (pp - pm) / (2.0 * h)
    second_fd = (pp - 2.0 * p0 + pm) / (h * h)
    meas, _ = equilibrium_measure(family, f, q, interp=interp)
    integral = meas.integrate(g)
    from .statistics import koopman_green_kubo

    variance_proxy = koopman_green_kubo(family, g)
    return fd_slope, integral, second_fd, variance_proxy


def _combo_potential(f, g, t: float, q: int, interp: str, family) -> GridFunction:
    """Sampled f + t*g at operator resolution (exact for the whitelist on
    affine pieces; cubic reproduction elsewhere)."""
    xs = grid_nodes(q)
    fv = f.evaluate_many(xs, family) if isinstance(f, PotentialSpec) else f.evaluate_many(xs)
    gv = g.evaluate_many(xs, family) if isinstance(g, PotentialSpec) else g.evaluate_many(xs)
    return GridFunction(fv + t * gv, q, interp)


def build_complex_operator(
    family: MapFamily, f, kappa: float, xi: float, q: int, interp: str = "linear"
) -> TransferMatrix:
    """Collective operator with weights e^{(kappa + i xi) f(y)}."""
    return build_collective_operator(family, f, q, interp, zeta=complex(kappa, xi))


def complex_spectral_radius(M: TransferMatrix) -> float:
    """Largest |eigenvalue|; dense for small dimensions, power-norm growth
    estimate otherwise."""
    A = M.matrix
    if A.shape[0] <= DENSE_LIMIT:
        return float(np.abs(scipy.linalg.eigvals(A)).max())
    rng = np.random.default_rng(7)
    v = rng.standard_normal(A.shape[0]) + 1j * rng.standard_normal(A.shape[0])
    v /= np.linalg.norm(v)
    growth = []
    for _ in range(400):
        w = A @ v
        growth.append(np.linalg.norm(w))
        v = w / growth[-1]
    return float(np.exp(np.mean(np.log(growth[-100:]))))


@dataclass
class KappaSolution:
    kappa: float
    pressure_at_kappa: float
    integral_residual: float


def solve_kappa(
    family: MapFamily,
    f: PotentialSpec,
    bracket: tuple,
    tol: float = 1e-9,
    q: int = 256,
    interp: str = "linear",
) -> KappaSolution:
    """Unique kappa with integral of f against m_{kappa f} equal to zero.

    Bisection/secant (Brent) on h(kappa); h is increasing by convexity of
    kappa -> P(kappa f). Raises NoSignChange when the bracket does not
    straddle a root (e.g. constant nonzero f).
    """
    lo, hi = float(bracket[0]), float(bracket[1])

    def h(kappa: float) -> float:
        scaled = _scaled_potential(f, kappa, q, interp, family)
        meas, _ = equilibrium_measure(family, scaled, q, interp=interp)
        return meas.integrate(f)

    h_lo, h_hi = h(lo), h(hi)
    if abs(h_lo) < 1e-15 and abs(h_hi) < 1e-15:
        # the integral vanishes on the whole bracket: no unique root
        raise NoSignChange("integral of f vanishes identically on the bracket; kappa is not unique")
    if h_lo == 0.0:
        root = lo
    elif h_hi == 0.0:
        root = hi
    elif h_lo * h_hi > 0:
        raise NoSignChange(f"h({lo}) = {h_lo:.3e} and h({hi}) = {h_hi:.3e} have the same sign")
    else:
        root = float(scipy.optimize.brentq(h, lo, hi, xtol=1e-14, rtol=8.9e-16, maxiter=200))
    resid = abs(h(root))
    if resid > tol:
        raise NoConvergence(f"|integral| = {resid:.3e} > tol {tol:.1e} at kappa = {root!r}")
    p = pressure(family, _scaled_potential(f, root, q, interp, family), q, interp=interp)
    return KappaSolution(kappa=root, pressure_at_kappa=p, integral_residual=resid)


def _scaled_potential(f: PotentialSpec, kappa: float, q: int, interp: str, family) -> GridFunction:
    xs = grid_nodes(q)
    return GridFunction(kappa * f.evaluate_many(xs, family), q, interp)


def build_ulam_operator(family: MapFamily, f, q: int) -> np.ndarray:
    """Coarse Ulam (cell) discretization used as an independent oracle.

    Cells [i/q, (i+1)/q); entry (target, source) accumulates e^{f} at the
    source subinterval midpoint, one subinterval per full branch image.
    Canonical families only.
    """
    if not family.canonical:
        raise DomainError("Ulam oracle implemented for canonical families only")
    A = np.zeros((q, q))
    for d in range(1, family.alphabet_size + 1):
        k = family[d].degree
        for i in range(q):
            for j in range(k):
                mid = (i + 0.5 + j * q) / (k * q)
                src = int(mid * q)
                fv = _f_values(f, np.array([mid]), family=family, map_index=d)[0]
                A[i, src] += math.exp(fv)
    return A


def ulam_leading_eigenvalue(family: MapFamily, f, q: int) -> float:
    A = build_ulam_operator(family, f, q)
    rho, _, _, _ = _power_iteration(A, 1e-10, 5000)
    return float(rho)


def theta_contraction_report(family: MapFamily, f, theta: float, alpha: float, rho: float) -> dict:
    """Contraction constant e^{sup|f|} N theta^alpha / rho used by the
    lift-spectrum argument; reported as metadata when theta is configured."""
    if isinstance(f, PotentialSpec):
        sup = f.sup_norm_bound(family)
    else:
        sup = float(np.abs(f.values).max())
    value = math.exp(sup) * family.alphabet_size * theta**alpha / rho
    return {"theta": theta, "alpha": alpha, "constant": value, "contractive": bool(value < 1.0)}
