"""Deterministic numerical kernel shared by every other module.

Provides seeded counter-based RNG streams with splittable substreams, the
Gaussian and uniform-ball samplers, a cyclic Jacobi eigensolver for symmetric
matrices, and a two-sample Kolmogorov-Smirnov test with an asymptotic
critical value. All samplers are pure functions of (parameters, stream
state), so identical seeds reproduce identical runs and parallel work can
use independent substreams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RngStream",
    "sample_gaussian_matrix",
    "sample_in_ball",
    "jacobi_eigh",
    "sym_eigenvalues",
    "spectral_norm_sym",
    "KsResult",
    "ks_two_sample",
]


class RngStream:
    """Counter-based random stream (Philox) with splittable substreams.

    The stream is identified by (seed, key path). substream(*key) derives a
    stream that is statistically independent of its parent and of any
    substream with a different key path, which keeps parallel sweeps
    reproducible regardless of scheduling order.
    """

    def __init__(self, seed, key=()):
        if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool) or seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        self._gen = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=self.key))
        )

    def substream(self, *key):
        """Derive an independent stream keyed by (seed, self.key + key)."""
        if not key:
            raise ValueError("substream needs at least one key component")
        return RngStream(self.seed, self.key + key)

    @property
    def generator(self):
        """The underlying numpy Generator; consuming it advances the stream."""
        return self._gen

    def derived_seed(self, *key):
        """A plain integer seed derived from (seed, key), for interfaces that
        take an int instead of a stream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key + tuple(int(k) for k in key))
        return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"


def _check_positive_int(value, name):
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")


def sample_gaussian_matrix(rows, cols, std, rng):
    """rows x cols matrix of i.i.d. N(0, std^2) entries. std = 0 gives zeros."""
    _check_positive_int(rows, "rows")
    _check_positive_int(cols, "cols")
    std = float(std)
    if not math.isfinite(std) or std < 0:
        raise ValueError(f"std must be finite and non-negative, got {std}")
    return std * rng.generator.standard_normal((rows, cols))


def sample_in_ball(center, eps, rng):
    """Uniform sample from the closed euclidean ball of radius eps around center.

    Draws a direction u as a normalized Gaussian and a radius fraction
    r = U^(1/d), which together are uniform on the ball; the returned point is
    center + eps * r * u. Consumes d normals and one uniform per call.
    """
    center = np.asarray(center, dtype=float)
    if center.ndim != 1 or center.size < 1:
        raise ValueError("center must be a 1-D vector")
    if not np.all(np.isfinite(center)):
        raise ValueError("center must be finite")
    eps = float(eps)
    if not math.isfinite(eps) or eps < 0:
        raise ValueError(f"eps must be finite and non-negative, got {eps}")
    d = center.size
    u = rng.generator.standard_normal(d)
    norm = math.sqrt(float(u @ u))
    while norm == 0.0:  # zero-probability guard
        u = rng.generator.standard_normal(d)
        norm = math.sqrt(float(u @ u))
    r = rng.generator.random() ** (1.0 / d)
    return center + (eps * r / norm) * u


def _check_symmetric(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix must be finite")
    tol = 1e-12 * max(1.0, float(np.abs(m).max(initial=0.0)))
    skew = float(np.abs(m - m.T).max(initial=0.0))
    if skew > tol:
        raise ValueError(f"matrix is not symmetric within 1e-12 (max skew {skew:.3e})")
    return m


def jacobi_eigh(m, tol=1e-12, max_sweeps=60):
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps Givens rotations over the upper triangle until the off-diagonal
    Frobenius norm drops below tol * ||M||_F. Returns (values, vectors) with
    eigenvalues ascending (ties kept in index order) and eigenvectors as the
    corresponding columns, so M = V diag(values) V^T.
    """
    a = _check_symmetric(m).copy()
    # symmetrize exactly so rotations act on a truly symmetric matrix
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    fnorm = math.sqrt(float((a * a).sum()))
    if fnorm == 0.0 or n == 1:
        order = np.argsort(np.diag(a), kind="stable")
        return np.diag(a)[order].copy(), v[:, order]
    target = tol * fnorm
    skip_below = target / (2.0 * n)  # leaving only entries this small keeps off-norm < target
    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * float((np.triu(a, 1) ** 2).sum()))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip_below:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vec_p = v[:, p].copy()
                v[:, p] = c * vec_p - s * v[:, q]
                v[:, q] = s * vec_p + c * v[:, q]
    else:
        raise ArithmeticError("jacobi_eigh failed to converge")
    vals = np.diag(a).copy()
    order = np.argsort(vals, kind="stable")
    return vals[order], v[:, order]


def sym_eigenvalues(m, tol=1e-12):
    """Eigenvalues of a symmetric matrix, ascending."""
    return jacobi_eigh(m, tol=tol)[0]


def spectral_norm_sym(m):
    """Spectral norm (largest |eigenvalue|) of a symmetric matrix."""
    vals = sym_eigenvalues(m)
    return float(max(abs(vals[0]), abs(vals[-1])))


@dataclass(frozen=True)
class KsResult:
    statistic: float
    critical: float
    alpha: float
    n1: int
    n2: int
    passed: bool


def ks_two_sample(a, b, alpha=0.05):
    """Two-sample Kolmogorov-Smirnov test at asymptotic level alpha.

    statistic = sup_x |F_a(x) - F_b(x)| over the pooled sample points; the
    test passes when statistic < sqrt(-ln(alpha/2)/2) * sqrt((n1+n2)/(n1*n2)).
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < 1 or b.size < 1:
        raise ValueError("both samples must be non-empty")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("samples must be finite")
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    n1, n2 = a.size, b.size
    xa = np.sort(a)
    xb = np.sort(b)
    pooled = np.concatenate([xa, xb])
    cdf_a = np.searchsorted(xa, pooled, side="right") / n1
    cdf_b = np.searchsorted(xb, pooled, side="right") / n2
    stat = float(np.abs(cdf_a - cdf_b).max())
    critical = math.sqrt(-math.log(alpha / 2.0) / 2.0) * math.sqrt((n1 + n2) / (n1 * n2))
    return KsResult(stat, critical, alpha, n1, n2, stat < critical)
