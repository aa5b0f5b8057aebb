"""Entry sampling and assembly of separable sample covariance matrices.

S = (1/N) C^(1/2) Z Gamma Z* C^(1/2), with diagonal C given by its spectrum,
Gamma either an explicit diagonal spectrum or a long-memory Toeplitz matrix,
and Z filled with i.i.d. unit-variance entries from a configurable law.

Randomness is counter-based: each (master seed, replication index) keys its
own Philox stream, so replications are reproducible bit-for-bit regardless
of scheduling or worker count.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.linalg as sla

from .covariance import ToeplitzSpec, build_toeplitz
from .spikes import PopulationModel, solve_theta

logger = logging.getLogger(__name__)

_SQRT3 = math.sqrt(3.0)
_FOURTH_ROOTS = np.array([1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j])


@dataclass(frozen=True)
class EntryLaw:
    """Named sampling law with its moment metadata (E Z = 0, E |Z|^2 = 1)."""

    name: str
    sq: float            # E Z^2 (modulus for complex laws)
    abs4: float          # E |Z|^4
    complex_valued: bool
    abs6_finite: bool = True
    abs8_finite: bool = True

    @property
    def abs2(self):
        return 1.0


ENTRY_LAWS = {
    "real_gaussian": EntryLaw("real_gaussian", sq=1.0, abs4=3.0, complex_valued=False),
    "complex_gaussian": EntryLaw("complex_gaussian", sq=0.0, abs4=2.0, complex_valued=True),
    "rademacher": EntryLaw("rademacher", sq=1.0, abs4=1.0, complex_valued=False),
    "uniform_scaled": EntryLaw("uniform_scaled", sq=1.0, abs4=9.0 / 5.0, complex_valued=False),
    "complex_circular_rademacher": EntryLaw(
        "complex_circular_rademacher", sq=0.0, abs4=1.0, complex_valued=True
    ),
}


def get_entry_law(name):
    try:
        return ENTRY_LAWS[name]
    except KeyError:
        raise ValueError(
            f"unknown entry law {name!r}; available: {sorted(ENTRY_LAWS)}"
        ) from None


def _stream(seed, replication):
    mask = (1 << 64) - 1
    bitgen = np.random.Philox(key=[int(seed) & mask, int(replication) & mask])
    return np.random.Generator(bitgen)


def sample_Z(law, n_rows, n_cols, seed, replication=0):
    """i.i.d. entry matrix for one replication, deterministic in
    (law, shape, seed, replication)."""
    if n_rows < 1 or n_cols < 1:
        raise ValueError("matrix dimensions must be positive")
    g = _stream(seed, replication)
    shape = (n_rows, n_cols)
    if law.name == "real_gaussian":
        return g.standard_normal(shape)
    if law.name == "complex_gaussian":
        parts = g.standard_normal((2,) + shape)
        return (parts[0] + 1j * parts[1]) / math.sqrt(2.0)
    if law.name == "rademacher":
        return g.integers(0, 2, shape).astype(float) * 2.0 - 1.0
    if law.name == "uniform_scaled":
        return g.uniform(-_SQRT3, _SQRT3, shape)
    if law.name == "complex_circular_rademacher":
        return _FOURTH_ROOTS[g.integers(0, 4, shape)]
    raise ValueError(f"unknown entry law {law.name!r}")


@dataclass
class ModelConfig:
    """Experiment configuration: dimensions, spectra, entry law, spike count."""

    N: int
    n: int
    law: EntryLaw
    m: int = 1
    c_spec: Union[str, np.ndarray] = "identity"
    gamma_spec: Union[ToeplitzSpec, np.ndarray, None] = None

    def to_json(self):
        c = "identity" if isinstance(self.c_spec, str) else list(map(float, self.c_spec))
        if isinstance(self.gamma_spec, ToeplitzSpec):
            gamma = {"toeplitz": self.gamma_spec.to_json()}
        else:
            gamma = {"diagonal": list(map(float, self.gamma_spec))}
        return {
            "N": self.N,
            "n": self.n,
            "law": self.law.name,
            "m": self.m,
            "C": c,
            "Gamma": gamma,
        }

    @classmethod
    def from_json(cls, obj):
        gamma = obj["Gamma"]
        if "toeplitz" in gamma:
            gamma_spec = ToeplitzSpec.from_json(gamma["toeplitz"])
        else:
            gamma_spec = np.asarray(gamma["diagonal"], dtype=float)
        c = obj.get("C", "identity")
        c_spec = c if isinstance(c, str) else np.asarray(c, dtype=float)
        return cls(
            N=int(obj["N"]),
            n=int(obj["n"]),
            law=get_entry_law(obj["law"]),
            m=int(obj.get("m", 1)),
            c_spec=c_spec,
            gamma_spec=gamma_spec,
        )


@dataclass
class PreparedModel:
    """Validated configuration with spectra, square roots, and spike targets."""

    config: ModelConfig
    c: np.ndarray                 # spectrum of C, descending
    c_half: np.ndarray
    t: np.ndarray                 # spectrum of Gamma, descending
    U: Optional[np.ndarray]       # eigenvectors of Gamma; None means identity
    gamma_half: Optional[np.ndarray]
    thetas: np.ndarray
    shifts: np.ndarray

    @property
    def population(self):
        return PopulationModel(c=self.c, t=self.t)


def prepare_model(config):
    """Resolve spectra, validate the tracked spike gaps, precompute
    Gamma^(1/2) and theta_j.

    Negative Gamma eigenvalues (possible on the decay route at finite n) are
    clamped to 0 with a logged warning.  Spike gaps among the top m+1 of t
    must be positive: configurations such as Gamma = I with several tracked
    spikes are rejected.
    """
    N, n, m = config.N, config.n, config.m
    if N < 1 or n < 1:
        raise ValueError("dimensions must be positive")
    if not 1 <= m <= min(N, n):
        raise ValueError(f"m={m} must lie in [1, min(N, n)]")

    if isinstance(config.c_spec, str):
        if config.c_spec != "identity":
            raise ValueError(f"unknown C spec {config.c_spec!r}")
        c = np.ones(N)
    else:
        c = np.sort(np.asarray(config.c_spec, dtype=float))[::-1]
        if c.size != N:
            raise ValueError("C spectrum length must equal N")
        if np.any(c < 0):
            raise ValueError("C spectrum must be nonnegative")

    if isinstance(config.gamma_spec, ToeplitzSpec):
        T = build_toeplitz(config.gamma_spec, n)
        w, V = np.linalg.eigh(T.dense())
        t = w[::-1].copy()
        U = V[:, ::-1].copy()
    elif config.gamma_spec is None:
        raise ValueError("gamma_spec is required")
    else:
        t = np.asarray(config.gamma_spec, dtype=float).copy()
        if t.size != n:
            raise ValueError("Gamma spectrum length must equal n")
        if np.any(np.diff(t) > 0):
            raise ValueError("explicit Gamma spectrum must be sorted descending")
        U = None

    negative = t < 0
    if np.any(negative):
        logger.warning(
            "clamping %d negative Gamma eigenvalues (min %.3e) to 0",
            int(np.sum(negative)),
            float(t.min()),
        )
        t = np.where(negative, 0.0, t)

    checked = min(m, n - 1)  # the last eigenvalue has no successor to gap against
    gaps = t[:checked] - t[1 : checked + 1]
    if np.any(gaps < 1e-12 * max(t[0], np.finfo(float).tiny)):
        raise ValueError(
            f"tracked spikes need separated eigenvalues; top-{checked + 1} gaps {gaps} too small"
        )

    if U is None:
        gamma_half = None
    else:
        gamma_half = (U * np.sqrt(t)) @ U.T

    model = PopulationModel(c=c, t=t)
    shifts = np.array(
        [float(np.sum(np.delete(t, j) / (t[j] - np.delete(t, j)))) / N for j in range(m)]
    )
    thetas = np.array([solve_theta(j + 1, model, z=shifts[j]) for j in range(m)])
    return PreparedModel(
        config=config,
        c=c,
        c_half=np.sqrt(c),
        t=t,
        U=U,
        gamma_half=gamma_half,
        thetas=thetas,
        shifts=shifts,
    )


def assemble_S(prepared, Z):
    """S = B B* / N with B = C^(1/2) Z Gamma^(1/2); Hermitian by construction."""
    Z = np.asarray(Z)
    N, n = prepared.config.N, prepared.config.n
    if Z.shape != (N, n):
        raise ValueError(f"entry matrix must be {N} x {n}, got {Z.shape}")
    if prepared.gamma_half is None:
        B = prepared.c_half[:, None] * (Z * np.sqrt(prepared.t)[None, :])
    else:
        B = prepared.c_half[:, None] * (Z @ prepared.gamma_half)
    S = B @ B.conj().T / N
    return (S + S.conj().T) / 2.0


def lambda_stats(prepared, S, thetas=None):
    """Normalized spike statistics sqrt(N) (lambda_j(S) / t_j - theta_j)."""
    m = prepared.config.m
    N = prepared.config.N
    if thetas is None:
        thetas = prepared.thetas
    lam = sla.eigh(S, eigvals_only=True, subset_by_index=[N - m, N - 1])[::-1]
    return math.sqrt(N) * (lam / prepared.t[:m] - thetas[:m])
