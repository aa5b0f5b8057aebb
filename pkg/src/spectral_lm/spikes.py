"""Spike-location predictions for separable sample covariance models.

Given the population spectra c (row covariance) and t (column covariance,
descending), the predicted location of the j-th normalized spike is the
largest root theta_j of

    G(theta, z_j) = (1/N) sum_i c_i / (theta - z_j c_i) = 1,
    z_j = (1/N) sum_{k != j} t_k / (t_j - t_k).

G is strictly decreasing to the right of its largest pole, falling from
+infinity to 0, so the largest root is unique there and bracketable.  The
same theta_j admits a power-series expansion in z_j whose coefficients B_k
are determined by a recurrence over the moments m_k = tr C^k / N, and an
independent cross-check through the deterministic-equivalent pair
(g_Gamma, g_C): after normalizing t_j = 1 and removing it from the spectrum,
g_C(theta_j) = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

GAP_TOL = 1e-12


class PoleError(ArithmeticError):
    """Evaluation point collided with a pole of G; caller must re-bracket."""


class DegenerateGapError(ValueError):
    """Requested spike index sits in a spectral cluster; shifts are undefined."""


class BracketError(RuntimeError):
    """Root bracketing failed (no sign change on the candidate interval)."""


class FixedPointError(RuntimeError):
    """Deterministic-equivalent iteration did not converge."""


@dataclass
class PopulationModel:
    """Population spectra: c (any order, nonnegative) and t (descending)."""

    c: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.t = np.asarray(self.t, dtype=float)
        if self.c.ndim != 1 or self.t.ndim != 1:
            raise ValueError("spectra must be 1-D")
        if np.any(self.c < 0):
            raise ValueError("c spectrum must be nonnegative")
        if not np.any(self.c > 0):
            raise ValueError("c spectrum cannot be identically zero")
        if np.any(np.diff(self.t) > 0):
            raise ValueError("t spectrum must be sorted descending")

    @property
    def N(self):
        return self.c.size

    @property
    def n(self):
        return self.t.size

    def moment(self, k):
        """m_k = tr C^k / N."""
        return float(np.mean(self.c**k))

    def moments(self, k_max):
        return np.array([self.moment(k) for k in range(1, k_max + 1)])


@dataclass
class SpikePrediction:
    j: int
    z: float
    theta_root: float
    theta_series: float
    coeffs: np.ndarray
    g_residual: float
    det_equiv_residual: float


def g_func(x, z, c):
    """G(x, z) = (1/N) sum_i c_i / (x - z c_i) as an exact finite sum."""
    c = np.asarray(c, dtype=float)
    denom = x - z * c
    scale = max(np.max(np.abs(c)), 1.0) * max(abs(x), abs(z), 1.0)
    if np.any(np.abs(denom) < 1e-300 * scale):
        raise PoleError("evaluation point hits a pole of G")
    return np.sum(c / denom) / c.size


def shift(j, t, n_rows=None):
    """z_j = (1/n_rows) sum_{k != j} t_k / (t_j - t_k), j 1-based.

    Scale invariant in t.  Requires t_j separated from every other t_k by at
    least 1e-12 * t_1.
    """
    t = np.asarray(t, dtype=float)
    if not 1 <= j <= t.size:
        raise ValueError(f"spike index {j} out of range")
    if n_rows is None:
        n_rows = t.size
    tj = t[j - 1]
    others = np.delete(t, j - 1)
    if others.size == 0:
        return 0.0
    gap = np.min(np.abs(tj - others))
    if gap < GAP_TOL * max(abs(t[0]), np.finfo(float).tiny):
        raise DegenerateGapError(
            f"t_{j} is not separated from the rest of the spectrum (gap {gap:.2e})"
        )
    return float(np.sum(others / (tj - others)) / n_rows)


def _largest_pole(z, c):
    nz = c[c > 0]
    if nz.size == 0 or z == 0.0:
        return 0.0
    return float(np.max(z * nz))


def solve_theta(j, model, z=None, xtol=1e-14):
    """Largest root of G(theta, z_j) = 1 for the model's spectra.

    Bracketed on (largest pole, m_1 + |z_j| max(c) + 1), where G decreases
    from +infinity toward 0, then solved by a bisection/secant hybrid to
    ~1e-12 relative accuracy.  A constant c spectrum short-circuits to the
    exact closed form theta = c (1 + z).
    """
    c = model.c
    if z is None:
        z = shift(j, model.t, n_rows=model.N)
    cmax = float(np.max(c))
    if np.all(c == c[0]):
        return float(c[0] * (1.0 + z))
    left = _largest_pole(z, c)
    scale = max(abs(left), model.moment(1), 1.0)
    left = left + 1e-10 * scale
    right = model.moment(1) + abs(z) * cmax + 1.0

    def f(x):
        return g_func(x, z, c) - 1.0

    f_left, f_right = f(left), f(right)
    # walk toward the pole if the offset overshot the sign change
    shrink = 1e-10 * scale
    while f_left <= 0.0 and shrink > 1e-15 * scale:
        shrink *= 0.1
        left = _largest_pole(z, c) + shrink
        f_left = f(left)
    if f_left <= 0.0 or f_right >= 0.0:
        raise BracketError(
            f"no sign change on bracket [{left:.6g}, {right:.6g}]: "
            f"G-1 spans [{f_left:.3e}, {f_right:.3e}] (j={j}, z={z:.6g})"
        )
    theta = brentq(f, left, right, xtol=xtol, rtol=8.9e-16)
    return float(theta)


def _poly_mul_trunc(a, b, deg):
    out = np.zeros(deg + 1)
    for i, ai in enumerate(a[: deg + 1]):
        if ai == 0.0:
            continue
        top = min(len(b), deg + 1 - i)
        out[i : i + top] += ai * np.asarray(b[:top])
    return out


def _power_coeff(coeffs, power, deg):
    """[z^deg] (sum coeffs_i z^i)^power."""
    acc = np.zeros(deg + 1)
    acc[0] = 1.0
    base = np.asarray(coeffs[: deg + 1], dtype=float)
    for _ in range(power):
        acc = _poly_mul_trunc(acc, base, deg)
    return acc[deg]


def series_coeffs(moments, K):
    """Coefficients B_0..B_K of the spike-location power series in z.

    ``moments`` lists m_1, ..., m_{K+1}.  B_0 = m_1 and each further B_n
    solves the composition-sum recurrence

        [z^n] B(z)^(n+1) = m_{n+1} + sum_{j=1}^{n} m_{n-j+1} [z^j] B(z)^j,

    where B(z) = sum B_i z^i; composition sums are evaluated as truncated
    polynomial powers.  Isolating B_n on both sides leaves the explicit
    update B_n = (rhs_without_B_n - lhs_without_B_n) / B_0^n.
    """
    moments = np.asarray(moments, dtype=float)
    if moments.size < K + 1:
        raise ValueError(f"need m_1..m_{K + 1} for order {K}, got {moments.size} moments")
    if not moments[0] > 0:
        raise ValueError("m_1 must be positive")
    B = [float(moments[0])]
    for n in range(1, K + 1):
        trunc = np.array(B + [0.0], dtype=float)  # B_n set to zero
        lhs = _power_coeff(trunc, n + 1, n)
        rhs = moments[n]
        for jj in range(1, n + 1):
            rhs += moments[n - jj] * _power_coeff(trunc, jj, jj)
        B.append(float((rhs - lhs) / B[0] ** n))
    return np.array(B)


def theta_series(z, coeffs):
    """Partial sum B_0 + B_1 z + ... evaluated by Horner's scheme."""
    acc = 0.0
    for b in np.asarray(coeffs)[::-1]:
        acc = acc * z + b
    return float(acc)


@dataclass
class DetEquivSolution:
    g_gamma: complex
    g_c: complex
    iterations: int


def solve_det_equiv(z, c, t_reduced, n_rows=None, damping=0.5, tol=1e-12, max_iter=10_000):
    """Deterministic-equivalent pair (g_Gamma, g_C) at a complex point z.

    Solves the coupled system

        g_Gamma = (1/N) sum_k t_k / (z (1 - g_C t_k))
        g_C     = (1/N) sum_i c_i / (z (1 - g_Gamma c_i))

    over the reduced column spectrum ``t_reduced`` (the tracked eigenvalue
    removed), by damped alternating fixed-point iteration from
    g_C = m_1 / z, g_Gamma = 0.  For Im z > 0 the converged pair satisfies
    Im g_Gamma < 0 and Im g_C < 0.
    """
    c = np.asarray(c, dtype=float)
    t_reduced = np.asarray(t_reduced, dtype=float)
    N = c.size if n_rows is None else n_rows
    g_c = np.mean(c) / z
    g_g = 0.0 + 0.0j
    for it in range(1, max_iter + 1):
        g_g_new = np.sum(t_reduced / (z * (1.0 - g_c * t_reduced))) / N
        g_g_new = damping * g_g + (1.0 - damping) * g_g_new
        g_c_new = np.sum(c / (z * (1.0 - g_g_new * c))) / N
        g_c_new = damping * g_c + (1.0 - damping) * g_c_new
        if abs(g_g_new - g_g) < tol and abs(g_c_new - g_c) < tol:
            return DetEquivSolution(complex(g_g_new), complex(g_c_new), it)
        g_g, g_c = g_g_new, g_c_new
    raise FixedPointError(
        f"no convergence at z={z!r} after {max_iter} iterations "
        f"(last update {abs(g_c_new - g_c):.2e}); z may be inside or near the support"
    )


def solve_det_equiv_real(x, c, t_reduced, n_rows=None, eps=1e-6, eps_refine=1e-7, **kw):
    """Real-axis deterministic equivalents by small-imaginary continuation.

    Solves at x + i*eps and x + i*eps_refine and extrapolates linearly to the
    real axis; the continuation preserves the branch selected by the
    imaginary-sign condition.
    """
    s1 = solve_det_equiv(x + 1j * eps, c, t_reduced, n_rows=n_rows, **kw)
    s2 = solve_det_equiv(x + 1j * eps_refine, c, t_reduced, n_rows=n_rows, **kw)
    frac = eps_refine / (eps - eps_refine)
    g_g = s2.g_gamma + (s2.g_gamma - s1.g_gamma) * frac
    g_c = s2.g_c + (s2.g_c - s1.g_c) * frac
    return DetEquivSolution(g_g, g_c, max(s1.iterations, s2.iterations))


def _reduced_normalized(model, j):
    tj = model.t[j - 1]
    if not tj > 0:
        raise ValueError(f"t_{j} must be positive to normalize the spectrum")
    return np.delete(model.t, j - 1) / tj


def det_equiv_residual(model, j, theta=None):
    """|g_C(theta_j) - 1| for the normalized reduced model: an independent
    cross-check of the spike equation."""
    if theta is None:
        theta = solve_theta(j, model)
    sol = solve_det_equiv_real(theta, model.c, _reduced_normalized(model, j), n_rows=model.N)
    return abs(sol.g_c - 1.0)


def outside_support(x, model, j, imag_tol=1e-4):
    """Whether the nonzero real point x lies outside the deterministic-
    equivalent spectral support of the reduced model.

    Evaluates eta = 1 - x^2 gamma(x, g_C) gamma~(x, .) through exact finite
    sums and tests its sign.  A genuinely interior point forces a persistent
    imaginary part in the continued g_C, which fails the realness guard.
    """
    if x == 0.0:
        raise ValueError("the support criterion applies to nonzero real points")
    t_red = _reduced_normalized(model, j)
    c = model.c
    N = model.N
    sol = solve_det_equiv_real(x, c, t_red, n_rows=N)
    if abs(sol.g_c.imag) > imag_tol:
        return False
    g_c = sol.g_c
    gamma_val = np.sum(t_red**2 / (x**2 * (1.0 - g_c * t_red) ** 2)) / N
    inner = np.sum(t_red / (1.0 - g_c * t_red)) / N
    gamma_tilde = np.sum(c**2 / (x**2 * (1.0 - c * inner / x) ** 2)) / N
    eta = 1.0 - x**2 * gamma_val * gamma_tilde
    return bool(eta.real > 0.0)


def predict_spike(model, j, series_order=10):
    """Full per-index prediction: shift, root, series, cross-check residual."""
    z = shift(j, model.t, n_rows=model.N)
    theta = solve_theta(j, model, z=z)
    coeffs = series_coeffs(model.moments(series_order + 1), series_order)
    t_series = theta_series(z, coeffs)
    g_resid = abs(g_func(theta, z, model.c) - 1.0)
    de_resid = det_equiv_residual(model, j, theta=theta)
    return SpikePrediction(
        j=j,
        z=z,
        theta_root=theta,
        theta_series=t_series,
        coeffs=coeffs,
        g_residual=g_resid,
        det_equiv_residual=de_resid,
    )
