"""Long-memory autocovariance sequences and their Toeplitz matrices.

Two generation routes:

* decay -- the covariances themselves follow a power law,
  gamma(h) = L(h) / (1 + h)^rho;
* density -- the covariances are the Fourier coefficients of a spectral
  density with a power singularity at the origin,
  gamma(k) = (1/2pi) int_{-pi}^{pi} L(1/|x|) |x|^(rho-1) e^{-ikx} dx.

For rho in (0, 1) both give non-summable covariances, so the top eigenvalues
of the n x n Toeplitz matrix grow like n^(1-rho) times a slowly varying
factor.

The density-route quadrature splits [0, pi] at a fixed point, removes the
algebraic singularity exactly with the substitution x = u^(1/rho), and
applies composite Gauss-Legendre panels: geometrically graded toward the
singularity (which also absorbs logarithmic blow-ups of slowly varying
factors), uniform with oscillation-matched density on the regular piece.
Every coefficient is verified against a doubled-resolution evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from .spectral import hermitian_top_eigenpairs

SLOWLY_VARYING_KINDS = ("constant", "log_growth", "log_decay", "custom")

# density-route coefficients are cached in power-of-two blocks so a value
# gamma(k) never depends on how large a matrix was requested
_BLOCK = 64


class QuadratureError(RuntimeError):
    """Successive quadrature refinements disagree beyond tolerance."""


@dataclass(frozen=True)
class SlowlyVarying:
    """Positive, locally bounded function with L(lambda h)/L(h) -> 1.

    Built-in kinds: ``constant`` (value ``c``), ``log_growth`` (ln(e+h)),
    ``log_decay`` (1/ln(e+h)).  ``custom`` wraps a user evaluator, which is
    trusted: no slow-variation check happens at construction (use
    :func:`slow_variation_ratios` as an opt-in diagnostic).
    """

    kind: str = "constant"
    c: float = 1.0
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, compare=False
    )

    def __post_init__(self):
        if self.kind not in SLOWLY_VARYING_KINDS:
            raise ValueError(f"unknown slowly varying kind {self.kind!r}")
        if self.kind == "constant" and not self.c > 0:
            raise ValueError("constant slowly varying function must be positive")
        if self.kind == "custom" and self.evaluator is None:
            raise ValueError("custom slowly varying function needs an evaluator")

    def __call__(self, h):
        h = np.asarray(h, dtype=float)
        if self.kind == "constant":
            return np.full_like(h, self.c)
        if self.kind == "log_growth":
            return np.log(np.e + h)
        if self.kind == "log_decay":
            return 1.0 / np.log(np.e + h)
        return np.asarray(self.evaluator(h), dtype=float)

    def to_json(self):
        if self.kind == "custom":
            raise ValueError("custom slowly varying functions are not serializable")
        out = {"kind": self.kind}
        if self.kind == "constant":
            out["c"] = self.c
        return out

    @classmethod
    def from_json(cls, obj):
        return cls(kind=obj["kind"], c=float(obj.get("c", 1.0)))


def slow_variation_ratios(L, lambdas=(2.0, 10.0), h_values=(1e3, 1e6)):
    """Opt-in diagnostic: |L(lambda h)/L(h) - 1| for each (h, lambda).

    For a slowly varying L the ratios tend to 0 as h grows; the caller
    decides what tolerance to demand.
    """
    rows = []
    for h in h_values:
        for lam in lambdas:
            r = float(L(np.array(lam * h)) / L(np.array(h)))
            rows.append((h, lam, abs(r - 1.0)))
    return rows


@dataclass(frozen=True)
class QuadratureParams:
    """Tuning knobs for the density-route quadrature."""

    split: float = 1e-2          # fixed split point between singular and regular piece
    gauss_degree: int = 16
    rel_tol: float = 1e-8        # accepted disagreement vs doubled resolution
    panels_per_lag: float = 0.75  # regular-piece panels per unit of max lag
    graded_levels: int = 48      # geometric panels toward the singularity

    def __post_init__(self):
        if not 0 < self.split < math.pi:
            raise ValueError("split point must lie strictly inside (0, pi)")
        if self.gauss_degree < 2:
            raise ValueError("gauss_degree must be at least 2")

    def to_json(self):
        return {
            "split": self.split,
            "gauss_degree": self.gauss_degree,
            "rel_tol": self.rel_tol,
            "panels_per_lag": self.panels_per_lag,
            "graded_levels": self.graded_levels,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(**{k: obj[k] for k in obj})


@dataclass
class ToeplitzSpec:
    """Generative description of a long-memory Toeplitz matrix family."""

    rho: float
    slowly_varying: SlowlyVarying = field(default_factory=SlowlyVarying)
    route: str = "decay"
    quadrature: QuadratureParams = field(default_factory=QuadratureParams)
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie strictly inside (0, 1), got {self.rho}")
        if self.route not in ("decay", "density"):
            raise ValueError(f"route must be 'decay' or 'density', got {self.route!r}")

    def gamma(self, k):
        k = int(k)
        if k < 0:
            k = -k  # covariances are even in the lag
        if self.route == "decay":
            return autocov_decay(self, k)
        return autocov_density(self, k)

    def first_column(self, n):
        if n < 1:
            raise ValueError("dimension must be at least 1")
        if self.route == "decay":
            h = np.arange(n, dtype=float)
            return self.slowly_varying(h) / (1.0 + h) ** self.rho
        return _density_column(self, n)

    def to_json(self):
        return {
            "rho": self.rho,
            "L": self.slowly_varying.to_json(),
            "route": self.route,
            "quadrature": self.quadrature.to_json(),
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            rho=float(obj["rho"]),
            slowly_varying=SlowlyVarying.from_json(obj["L"]),
            route=obj["route"],
            quadrature=QuadratureParams.from_json(obj.get("quadrature", {})),
        )


@dataclass
class ToeplitzMatrix:
    """Symmetric Toeplitz matrix T[i, j] = first_column[|i - j|]."""

    n: int
    first_column: np.ndarray
    spec: ToeplitzSpec

    def dense(self):
        import scipy.linalg as sla

        return sla.toeplitz(self.first_column)

    def trace(self):
        return self.n * float(self.first_column[0])

    def trace_square(self):
        # tr T^2 = sum_{ij} T_ij^2, a weighted sum over diagonals
        g = self.first_column
        k = np.arange(self.n)
        return float(self.n * g[0] ** 2 + 2.0 * np.sum((self.n - k[1:]) * g[1:] ** 2))

    def top_eigenpairs(self, m, method="auto"):
        return hermitian_top_eigenpairs(self.first_column, m, method=method)

    def write_column_csv(self, path):
        from .reports import write_csv

        write_csv(path, ["gamma"], [(float(g),) for g in self.first_column])


def autocov_decay(spec, h):
    """gamma(h) = L(h) / (1 + h)^rho for the decay route."""
    if spec.route != "decay":
        raise ValueError("autocov_decay requires a decay-route spec")
    if h < 0:
        raise ValueError("lag must be nonnegative")
    h = float(h)
    return float(spec.slowly_varying(np.array(h))) / (1.0 + h) ** spec.rho


def autocov_density(spec, k):
    """Fourier coefficient of the singular spectral density at lag k.

    gamma(k) = (1/pi) int_0^pi L(1/x) x^(rho-1) cos(kx) dx, computed by the
    split quadrature and cached in blocks so repeated builds at growing n
    reuse earlier coefficients bit-for-bit.
    """
    if spec.route != "density":
        raise ValueError("autocov_density requires a density-route spec")
    if k < 0:
        raise ValueError("lag must be nonnegative (covariances are even)")
    block = _block_index(k)
    cache = spec._cache
    if block not in cache:
        cache[block] = _density_block(spec, block)
    lo, _ = _block_range(block)
    return float(cache[block][k - lo])


def build_toeplitz(spec, n):
    """Toeplitz matrix of dimension n >= 1 for the given spec."""
    if n < 1:
        raise ValueError("dimension must be at least 1")
    return ToeplitzMatrix(n=n, first_column=spec.first_column(n), spec=spec)


def moment_decay_table(spec, sizes):
    """Normalized trace moments of T~ = T / lambda_1(T) along a size ladder.

    Returns rows (n, sqrt(n) tr T~ / n, sqrt(n) tr T~^2 / n).  The first
    statistic decays for rho < 1/2, the second for rho in [1/2, 3/4).
    """
    sizes = list(sizes)
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be nonempty and strictly increasing")
    rows = []
    for n in sizes:
        T = build_toeplitz(spec, n)
        lam1 = float(T.top_eigenpairs(1).values[0])
        s1 = math.sqrt(n) * T.trace() / (n * lam1)
        s2 = math.sqrt(n) * T.trace_square() / (n * lam1**2)
        rows.append((n, s1, s2))
    return rows


# ---------------------------------------------------------------------------
# density-route quadrature


def _block_index(k):
    if k < _BLOCK:
        return 0
    return int(math.floor(math.log2(k / _BLOCK))) + 1


def _block_range(block):
    if block == 0:
        return 0, _BLOCK
    return _BLOCK * 2 ** (block - 1), _BLOCK * 2**block


def _panel_nodes(edges, degree):
    gx, gw = leggauss(degree)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    x = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    w = (half[:, None] * gw[None, :]).ravel()
    return x, w


def _singular_nodes(rho, params, k_max, refine=1):
    """Nodes/weights in u for the singular piece after x = u^(1/rho).

    The substitution turns L(1/x) x^(rho-1) dx into L(u^(-1/rho)) du / rho;
    geometric grading toward u = 0 keeps logarithmically unbounded slowly
    varying factors integrated to full accuracy, and each geometric panel is
    subdivided to track the oscillation of cos(k u^(1/rho)).
    """
    top = params.split**rho
    pieces_x, pieces_w = [], []
    hi = top
    for level in range(params.graded_levels):
        lo = top * 0.5 ** (level + 1)
        span = k_max * (hi ** (1.0 / rho) - lo ** (1.0 / rho))
        sub = max(1, math.ceil(span / 3.0)) * refine
        edges = np.linspace(lo, hi, sub + 1)
        x, w = _panel_nodes(edges, params.gauss_degree)
        pieces_x.append(x)
        pieces_w.append(w)
        hi = lo
    # closing panel down to zero; width ~ top * 2^-levels, negligible mass
    edges = np.linspace(0.0, hi, 2 * refine + 1)
    x, w = _panel_nodes(edges, params.gauss_degree)
    pieces_x.append(x)
    pieces_w.append(w)
    return np.concatenate(pieces_x), np.concatenate(pieces_w)


def _regular_nodes(params, k_max, refine=1):
    panels = max(64, math.ceil(params.panels_per_lag * max(k_max, 1))) * refine
    edges = np.linspace(params.split, math.pi, panels + 1)
    return _panel_nodes(edges, params.gauss_degree)


def _density_values(spec, lags, refine=1):
    """(1/pi) int_0^pi L(1/x) x^(rho-1) cos(k x) dx at the requested lags."""
    rho = spec.rho
    L = spec.slowly_varying
    params = spec.quadrature
    k_max = int(np.max(lags))

    u, wu = _singular_nodes(rho, params, k_max, refine)
    xs = u ** (1.0 / rho)
    fs = wu * L(1.0 / np.maximum(xs, np.finfo(float).tiny)) / rho
    xr, wr = _regular_nodes(params, k_max, refine)
    fr = wr * L(1.0 / xr) * xr ** (rho - 1.0)

    out = np.empty(len(lags))
    lags = np.asarray(lags, dtype=float)
    for lo in range(0, len(lags), 256):  # chunked to bound the cosine matrix
        hi = min(lo + 256, len(lags))
        kk = lags[lo:hi, None]
        out[lo:hi] = (np.cos(kk * xs[None, :]) @ fs + np.cos(kk * xr[None, :]) @ fr)
    return out / math.pi


def _density_block(spec, block):
    lo, hi = _block_range(block)
    lags = np.arange(lo, hi)
    base = _density_values(spec, lags, refine=1)
    check = _density_values(spec, lags, refine=2)
    scale = max(np.max(np.abs(check)), np.finfo(float).tiny)
    err = np.max(np.abs(base - check) / np.maximum(np.abs(check), 1e-6 * scale))
    if err > spec.quadrature.rel_tol:
        raise QuadratureError(
            f"quadrature refinements disagree ({err:.2e} > {spec.quadrature.rel_tol:.2e}) "
            f"for lags [{lo}, {hi}); adjust QuadratureParams"
        )
    return check


def _density_column(spec, n):
    blocks = []
    b = 0
    while True:
        lo, hi = _block_range(b)
        if lo >= n:
            break
        if b not in spec._cache:
            spec._cache[b] = _density_block(spec, b)
        blocks.append(spec._cache[b])
        b += 1
    return np.concatenate(blocks)[:n].copy()


def _density_values_complex(spec, lags, refine=1):
    """Same coefficients through the full complex-exponential formulation.

    Integrates (1/2pi) int_{-pi}^{pi} phi(x) e^{-ikx} dx on mirrored nodes;
    used to assert that the cosine reduction is exact for the even density.
    Returns complex values whose imaginary parts should vanish.
    """
    rho = spec.rho
    L = spec.slowly_varying
    params = spec.quadrature
    k_max = int(np.max(lags))

    u, wu = _singular_nodes(rho, params, k_max, refine)
    xs = u ** (1.0 / rho)
    fs = wu * L(1.0 / np.maximum(xs, np.finfo(float).tiny)) / rho
    xr, wr = _regular_nodes(params, k_max, refine)
    fr = wr * L(1.0 / xr) * xr ** (rho - 1.0)

    x_all = np.concatenate([xs, xr, -xs, -xr])
    f_all = np.concatenate([fs, fr, fs, fr])
    lags = np.asarray(lags, dtype=float)
    out = np.empty(len(lags), dtype=complex)
    for lo in range(0, len(lags), 128):
        hi = min(lo + 128, len(lags))
        kk = lags[lo:hi, None]
        out[lo:hi] = np.exp(-1j * kk * x_all[None, :]) @ f_all
    return out / (2.0 * math.pi)
