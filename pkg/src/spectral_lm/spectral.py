"""Hermitian eigen-decomposition services.

Dense decompositions below a crossover dimension, Lanczos (ARPACK, implicitly
restarted, full reorthogonalization internally) above it, an FFT-accelerated
matrix-vector product for symmetric Toeplitz matrices given by their first
column, and sign alignment of eigenvectors.

Everything here is deterministic for a fixed input: the Lanczos start vector
is fixed, and reductions run in fixed order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.fft import fft, ifft, next_fast_len
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

DENSE_CROSSOVER = 1024

HERMITICITY_TOL = 1e-12


class EigenSolverError(RuntimeError):
    """Iterative eigensolver failed to reach the requested residual."""

    def __init__(self, message, achieved_residual=None):
        super().__init__(message)
        self.achieved_residual = achieved_residual


@dataclass
class EigenPairs:
    """Top eigenpairs of a Hermitian matrix, eigenvalues sorted descending.

    ``vectors`` holds one orthonormal eigenvector per column, matching
    ``values``.  ``residual_bound`` is max_j ||A v_j - lambda_j v_j|| scaled
    by the largest computed eigenvalue magnitude.
    """

    values: np.ndarray
    vectors: np.ndarray
    residual_bound: float


class ToeplitzOperator:
    """Symmetric Toeplitz matrix given by its first column, applied via FFT.

    The matrix is embedded in a circulant of length >= 2n-1; one transform of
    the embedded column is cached so repeated products cost two FFTs each.
    """

    def __init__(self, first_column):
        col = np.asarray(first_column, dtype=float)
        if col.ndim != 1 or col.size == 0:
            raise ValueError("first column must be a nonempty 1-D array")
        self.first_column = col
        self.n = col.size
        m = next_fast_len(2 * self.n - 1)
        emb = np.zeros(m)
        emb[: self.n] = col
        if self.n > 1:
            emb[m - self.n + 1 :] = col[1:][::-1]
        self._m = m
        self._fcol = fft(emb)

    @property
    def shape(self):
        return (self.n, self.n)

    def matvec(self, v):
        v = np.asarray(v)
        if v.shape[-1] != self.n and v.shape[0] != self.n:
            raise ValueError(f"length mismatch: operator is {self.n}, vector is {v.shape}")
        flat = v.reshape(-1)
        if flat.size != self.n:
            raise ValueError(f"length mismatch: operator is {self.n}, vector is {v.shape}")
        out = ifft(self._fcol * fft(flat, self._m))[: self.n]
        if np.iscomplexobj(v):
            return out
        return out.real

    def dense(self):
        return sla.toeplitz(self.first_column)

    def as_linear_operator(self):
        return LinearOperator(self.shape, matvec=self.matvec, dtype=float)


def toeplitz_matvec(first_column, v):
    """T @ v for the symmetric Toeplitz matrix with the given first column.

    O(n log n) via circulant embedding; agrees with the dense product to
    ~1e-10 relative.
    """
    return ToeplitzOperator(first_column).matvec(v)


def _as_operator(A):
    """Normalize input to (dense_or_None, operator_or_None, dim, is_complex)."""
    if isinstance(A, ToeplitzOperator):
        return None, A, A.n, False
    first_column = getattr(A, "first_column", None)
    if first_column is not None and np.ndim(first_column) == 1:
        op = ToeplitzOperator(first_column)
        return None, op, op.n, False
    arr = np.asarray(A)
    if arr.ndim == 1:
        op = ToeplitzOperator(arr)
        return None, op, op.n, False
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError("expected a square matrix or a Toeplitz first column")
    scale = max(np.max(np.abs(arr)), 1.0)
    if np.max(np.abs(arr - arr.conj().T)) > HERMITICITY_TOL * scale:
        raise ValueError("matrix is not Hermitian to 1e-12")
    return arr, None, arr.shape[0], np.iscomplexobj(arr)


def hermitian_top_eigenpairs(A, m, tol=1e-9, method="auto"):
    """Top-``m`` eigenpairs of a Hermitian matrix or Toeplitz first column.

    Parameters
    ----------
    A : ndarray (square Hermitian), 1-D first column, or ToeplitzOperator
    m : number of leading eigenpairs (descending)
    tol : accepted relative residual bound
    method : "auto" (dense below dimension 1024, Lanczos above), "dense",
        or "lanczos"

    Returns EigenPairs with descending values and orthonormal columns.
    """
    dense, op, dim, is_complex = _as_operator(A)
    if not 1 <= m <= dim:
        raise ValueError(f"m={m} out of range for dimension {dim}")
    if method == "auto":
        method = "dense" if dim <= DENSE_CROSSOVER else "lanczos"

    if method == "dense":
        mat = dense if dense is not None else op.dense()
        w, V = np.linalg.eigh(mat)
        values = w[::-1][:m].copy()
        vectors = V[:, ::-1][:, :m].copy()
        norm_scale = max(np.max(np.abs(w)), np.finfo(float).tiny)
        apply = (lambda x: mat @ x)
    elif method == "lanczos":
        if op is not None:
            lin = op.as_linear_operator()
            apply = op.matvec
        else:
            lin = dense
            apply = (lambda x: dense @ x)
        v0 = np.ones(dim) / np.sqrt(dim)
        if is_complex:
            v0 = v0.astype(complex)
        try:
            w, V = eigsh(lin, k=m, which="LA", v0=v0)
        except ArpackNoConvergence as exc:
            raise EigenSolverError(
                f"Lanczos did not converge for k={m}: {exc}", achieved_residual=None
            ) from exc
        order = np.argsort(w)[::-1]
        values = w[order]
        vectors = V[:, order]
        norm_scale = max(np.max(np.abs(values)), np.finfo(float).tiny)
    else:
        raise ValueError(f"unknown method {method!r}")

    resid = 0.0
    for j in range(m):
        r = np.linalg.norm(apply(vectors[:, j]) - values[j] * vectors[:, j])
        resid = max(resid, r / norm_scale)
    if resid > max(tol, 1e-14):
        raise EigenSolverError(
            f"residual {resid:.3e} exceeds tolerance {tol:.3e}", achieved_residual=resid
        )
    gram = vectors.conj().T @ vectors
    ortho = np.max(np.abs(gram - np.eye(m)))
    if ortho > 1e-6:
        raise EigenSolverError(f"eigenvector family lost orthonormality ({ortho:.2e})")
    return EigenPairs(values=values, vectors=vectors, residual_bound=float(resid))


def align_sign(u, reference):
    """Return u (or a unit-phase multiple) with Re<reference, u> >= 0.

    Real vectors are flipped when the inner product is negative; complex
    vectors are rotated by the phase making the inner product real
    nonnegative.  An inner product of exactly zero leaves u unchanged.
    """
    u = np.asarray(u)
    reference = np.asarray(reference)
    if np.linalg.norm(u) == 0.0 or np.linalg.norm(reference) == 0.0:
        raise ValueError("cannot align a zero vector")
    inner = np.vdot(reference, u)
    if np.iscomplexobj(u) or np.iscomplexobj(reference):
        mag = abs(inner)
        if mag == 0.0:
            return u
        return u * (inner.conjugate() / mag)
    if inner < 0.0:
        return -u
    return u


def toeplitz_spectral_norm(first_column, tol=1e-12, max_iter=5000):
    """Spectral norm of a symmetric Toeplitz matrix by power iteration.

    Runs from two fixed start vectors (flat, and linear ramp) and keeps the
    larger limit, guarding against a start vector orthogonal to the dominant
    eigenvector.
    """
    op = ToeplitzOperator(first_column)
    n = op.n
    starts = [np.ones(n), np.linspace(-1.0, 1.0, n) + 0.25]
    best = 0.0
    for v in starts:
        v = v / np.linalg.norm(v)
        lam = 0.0
        for _ in range(max_iter):
            w = op.matvec(v)
            new = np.linalg.norm(w)
            if new == 0.0:
                lam = 0.0
                break
            v = w / new
            if abs(new - lam) <= tol * max(new, 1e-300):
                lam = new
                break
            lam = new
        best = max(best, lam)
    return best
