"""Weight functions for the virial argument and numerical checks of the
pair inequalities they satisfy.

The profile ``g(r) = r - arctan(r)`` and its rescaled version
``g_R(x) = R**3 g(|x|/R)`` generate the phase-space weight
``w_R(x, xi) = grad g_R(x) . xi``.  Everything here is a pure function of
its arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

# relative rounding allowance for the pair inequalities
ROUNDING = 1e-12


@dataclass(frozen=True)
class WeightParams:
    R: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.R) and self.R > 0):
            raise ValueError(f"cutoff radius must be finite and positive, got {self.R!r}")


@dataclass(frozen=True)
class InequalityMargin:
    lhs: float
    rhs: float
    margin: float

    @classmethod
    def of(cls, lhs, rhs):
        lhs, rhs = float(lhs), float(rhs)
        return cls(lhs, rhs, lhs - rhs)

    def holds(self, rel_tol=ROUNDING):
        return self.margin >= -rel_tol * max(1.0, abs(self.rhs))


@dataclass
class AlphaNEstimate:
    n: int
    value: float
    configuration: np.ndarray
    converged: bool = True
    values: list = field(default_factory=list)

    def to_record(self):
        return {
            "n": self.n,
            "value": self.value,
            "converged": self.converged,
            "configuration": np.asarray(self.configuration).tolist(),
        }


def _nonneg(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radial argument must be non-negative")
    return r


def g(r):
    r = _nonneg(r)
    # r - arctan(r) loses all digits for small r; use the series there
    small = r < 0.1
    rs = np.where(small, r, 0.0)
    r2 = rs * rs
    series = np.zeros_like(rs)
    for k in range(10, 0, -1):
        series = r2 * (series + (-1) ** (k + 1) / (2 * k + 1))
    series = rs * series
    out = np.where(small, series, r - np.arctan(r))
    return out[()] if out.ndim == 0 else out


def g_prime(r):
    r = _nonneg(r)
    return r * r / (1.0 + r * r)


def g_double_prime(r):
    r = _nonneg(r)
    return 2.0 * r / (1.0 + r * r) ** 2


def g_R(x, params: WeightParams):
    """``R**3 g(|x|/R)`` for points stacked along the last axis."""
    R = params.R
    return R**3 * g(np.linalg.norm(np.asarray(x, float), axis=-1) / R)


def grad_gR(x, params: WeightParams):
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1, keepdims=True)
    # |x|^2/(1+|x|^2/R^2) * x/|x|  ==  |x| x / (1+|x|^2/R^2), smooth at 0
    return np.sqrt(r2) * x / (1.0 + r2 / params.R**2)


def hess_eigs(r, params: WeightParams):
    """Radial and tangential eigenvalues of Hess(g_R) at radius ``r``.

    radial = R g''(r/R), tangential = R**2 g'(r/R)/r (double multiplicity).
    Written in a form that is regular at r = 0.
    """
    r = _nonneg(r)
    s = 1.0 + (r / params.R) ** 2
    return 2.0 * r / s**2, r / s


def laplacian_gR(r, params: WeightParams):
    lam_r, lam_t = hess_eigs(r, params)
    return lam_r + 2.0 * lam_t


def hess_gR(x, params: WeightParams):
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    lam_r, lam_t = hess_eigs(r, params)
    safe = np.where(r > 0, r, 1.0)
    omega = x / safe[..., None]
    outer = omega[..., :, None] * omega[..., None, :]
    eye = np.eye(x.shape[-1])
    return lam_r[..., None, None] * outer + lam_t[..., None, None] * (eye - outer)


def w_R(x, xi, params: WeightParams):
    return np.sum(grad_gR(x, params) * np.asarray(xi, float), axis=-1)


def moment_weight(r, R):
    """1/<r/R>^2, the bridge between grad g_R . x/|x|^3 and M_R."""
    return 1.0 / (1.0 + (np.asarray(r, float) / R) ** 2)


# --- pair inequalities -------------------------------------------------------

def _ll1_sides(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rx = np.linalg.norm(x, axis=-1)
    ry = np.linalg.norm(y, axis=-1)
    d = x - y
    dd = np.linalg.norm(d, axis=-1)
    if np.any(rx == 0) or np.any(ry == 0):
        raise ValueError("points must be nonzero")
    if np.any(dd == 0):
        raise ValueError("points must be distinct")
    gx, gy = g_prime(rx), g_prime(ry)
    vec = gx[..., None] * x / rx[..., None] - gy[..., None] * y / ry[..., None]
    lhs = np.sum(vec * d, axis=-1) / dd**3
    rhs = 0.5 * (gx / rx**2) * (gy / ry**2)
    return lhs, rhs


def check_ll1(x, y) -> InequalityMargin:
    lhs, rhs = _ll1_sides(x, y)
    return InequalityMargin.of(lhs, rhs)


def ll1_sweep(n_pairs, radius=10.0, seed=0, chunk=250_000):
    """Uniform pairs in the ball of given radius; returns (min relative margin, violations, rows).

    ``rows`` holds the worst 16 pairs as (x, y, lhs, rhs, margin) tuples.
    """
    rng = np.random.default_rng(seed)
    worst = []
    min_rel = np.inf
    violations = 0
    done = 0
    while done < n_pairs:
        m = min(chunk, n_pairs - done)
        x = _uniform_ball(rng, m, 3, radius)
        y = _uniform_ball(rng, m, 3, radius)
        lhs, rhs = _ll1_sides(x, y)
        rel = (lhs - rhs) / np.maximum(1.0, np.abs(rhs))
        violations += int(np.count_nonzero(rel < -ROUNDING))
        idx = np.argsort(rel)[:16]
        worst.extend((x[i], y[i], lhs[i], rhs[i], lhs[i] - rhs[i], rel[i]) for i in idx)
        min_rel = min(min_rel, float(rel.min()))
        done += m
    worst.sort(key=lambda row: row[-1])
    return min_rel, violations, [row[:5] for row in worst[:16]]


def _uniform_ball(rng, m, dim, radius):
    v = rng.standard_normal((m, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * (radius * rng.random((m, 1)) ** (1.0 / dim))


def sphere_averaged_kernel(r, s, order=64, params: WeightParams | None = None):
    """Double unit-sphere average of (grad g_R(x) - grad g_R(y)).(x-y)/|x-y|^3.

    The average depends on |x| = r, |y| = s and the relative angle only.
    The cosine integral is rewritten in terms of the separation
    rho = |x - y| (d cos = -rho d rho / (r s)), which turns the integrand into
    A/rho^2 + B, and is then evaluated by Gauss-Legendre in log(rho) so the
    near-coincident end r ~ s stays resolved.  At r == s the integrand is
    the constant B on [0, 2r].
    """
    R = 1.0 if params is None else params.R
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(r <= 0) or np.any(s <= 0):
        raise ValueError("radii must be positive")
    r, s = np.broadcast_arrays(r, s)
    # grad g_R = R^2 g'(|x|/R) omega
    gr = R**2 * g_prime(r / R)
    gs = R**2 * g_prime(s / R)
    A = gr * (r * r - s * s) / (2 * r) + gs * (s * s - r * r) / (2 * s)
    B = gr / (2 * r) + gs / (2 * s)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    lo = np.abs(r - s)
    hi = r + s
    equal = lo <= 1e-14 * hi
    tlo = np.log(np.where(equal, 1.0, lo))
    thi = np.log(hi)
    half = 0.5 * (thi - tlo)
    tau = 0.5 * (thi + tlo)[..., None] + half[..., None] * nodes
    rho = np.exp(tau)
    integral = half * np.sum(weights * (A[..., None] / rho + B[..., None] * rho), axis=-1)
    integral = np.where(equal, B * hi, integral)
    out = integral / (2 * r * s)
    return out[()] if out.ndim == 0 else out


def check_ll2(r, s, quadrature_order=64) -> InequalityMargin:
    lhs = sphere_averaged_kernel(r, s, quadrature_order)
    rhs = (g_prime(r) / np.asarray(r, float) ** 2) * (g_prime(s) / np.asarray(s, float) ** 2)
    return InequalityMargin.of(lhs, rhs)


def ll2_grid_sweep(radii, quadrature_order=64):
    rr, ss = np.meshgrid(radii, radii, indexing="ij")
    lhs = sphere_averaged_kernel(rr, ss, quadrature_order)
    rhs = (g_prime(rr) / rr**2) * (g_prime(ss) / ss**2)
    rel = (lhs - rhs) / np.maximum(1.0, np.abs(rhs))
    return float(rel.min()), int(np.count_nonzero(rel < -ROUNDING)), lhs, rhs


def _nu_sides(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nu = x.shape[-1]
    if nu < 2:
        raise ValueError("dimension must be at least 2")
    rx = np.linalg.norm(x, axis=-1)
    ry = np.linalg.norm(y, axis=-1)
    d = x - y
    dd = np.linalg.norm(d, axis=-1)
    if np.any(rx == 0) or np.any(ry == 0):
        raise ValueError("points must be nonzero")
    if np.any(dd == 0):
        raise ValueError("points must be distinct")
    vec = (rx ** (nu - 2))[..., None] * x - (ry ** (nu - 2))[..., None] * y
    lhs = np.sum(vec * d, axis=-1) / dd**nu
    return lhs, 2.0 ** (2 - nu)


def check_nu_inequality(x, y) -> InequalityMargin:
    lhs, rhs = _nu_sides(x, y)
    return InequalityMargin.of(lhs, rhs)


def nu_sweep(nu, n_pairs, radius=5.0, seed=0):
    rng = np.random.default_rng(seed)
    x = _uniform_ball(rng, n_pairs, nu, radius)
    y = _uniform_ball(rng, n_pairs, nu, radius)
    lhs, rhs = _nu_sides(x, y)
    margin = lhs - rhs
    return float(margin.min()), int(np.count_nonzero(margin < -ROUNDING))


# --- alpha_N ----------------------------------------------------------------

def configuration_ratio(points):
    """sum_{i<j} (|x_i|^2+|x_j|^2)/|x_i-x_j|  /  ((N-1) sum_i |x_i|)."""
    x = np.asarray(points, dtype=float)
    n = x.shape[0]
    norms = np.linalg.norm(x, axis=1)
    iu, ju = np.triu_indices(n, 1)
    dist = np.linalg.norm(x[iu] - x[ju], axis=1)
    num = np.sum((norms[iu] ** 2 + norms[ju] ** 2) / dist)
    return float(num / ((n - 1) * norms.sum()))


_COINCIDENT = 1e-9


def _gauge_objective(flat, n):
    x = flat.reshape(n, 3)
    scale = np.linalg.norm(x, axis=1).sum()
    if scale <= 0:
        return 1e6
    x = x / scale
    iu, ju = np.triu_indices(n, 1)
    dist = np.linalg.norm(x[iu] - x[ju], axis=1)
    if dist.min() < _COINCIDENT:
        return 1e6
    return configuration_ratio(x)


def estimate_alpha_N(n, restarts=64, seed=0, maxiter=None) -> AlphaNEstimate:
    """Multi-start Nelder-Mead search for the infimum of the configuration ratio.

    The ratio is scale invariant, so every candidate is normalised to
    sum |x_i| = 1 before evaluation.  The result is an upper bound.
    """
    if n < 2:
        raise ValueError("need at least two points")
    rng = np.random.default_rng(seed)
    maxiter = maxiter or 4000 * n
    best_val, best_x, best_ok = math.inf, None, False
    values = []
    for _ in range(restarts):
        x0 = rng.standard_normal(3 * n)
        res = optimize.minimize(
            _gauge_objective, x0, args=(n,), method="Nelder-Mead",
            options={"maxiter": maxiter, "maxfev": 2 * maxiter, "xatol": 1e-10, "fatol": 1e-13},
        )
        # polish from the simplex optimum
        res2 = optimize.minimize(
            _gauge_objective, res.x, args=(n,), method="Nelder-Mead",
            options={"maxiter": maxiter, "maxfev": 2 * maxiter, "xatol": 1e-12, "fatol": 1e-15},
        )
        values.append(float(res2.fun))
        if res2.fun < best_val:
            best_val, best_x, best_ok = float(res2.fun), res2.x, bool(res2.success)
    config = best_x.reshape(n, 3)
    config = config / np.linalg.norm(config, axis=1).sum()
    return AlphaNEstimate(n=n, value=configuration_ratio(config), configuration=config,
                          converged=best_ok, values=values)
