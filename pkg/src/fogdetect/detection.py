"""Scatter-matrix dispersion statistics and threshold-based fault detection.

A sensor whose readings carry multiplicative noise ``d* = d + floor(d * delta)``
with ``delta ~ N(0, alpha^2)`` produces windows with a larger dispersion
(product of the non-zero scatter eigenvalues) than a healthy one. A threshold
is trained so a target fraction of deliberately corrupted windows exceed it;
at test time any window with ``dispersion > threshold`` is flagged faulty.

Sample sets are integer arrays of shape ``(N, l)`` (or ``(K, N, l)`` for a
collection of ``K`` sets).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .packing import DataSample

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


class TrainingError(Exception):
    pass


class _NormalSource(Protocol):
    def normal(self, loc: float, scale: float, size=None): ...


@dataclass(frozen=True)
class DispersionResult:
    eigenvalues: np.ndarray
    dispersion: float
    rank_used: int


@dataclass(frozen=True)
class Threshold:
    value: float
    alpha_sq: float
    N: int
    target_tpr: float = 0.95
    train_tpr: float | None = None

    def __post_init__(self) -> None:
        if not self.value > 0:
            raise ValueError("threshold must be positive")
        if not 0 < self.target_tpr <= 1:
            raise ValueError("target_tpr must be in (0, 1]")


@dataclass(frozen=True)
class EvalCounts:
    N_uu: int
    N_tu: int
    N_nu: int
    N_tn: int

    @property
    def tpr(self) -> float:
        return self.N_uu / self.N_tu if self.N_tu else 0.0

    @property
    def fpr(self) -> float:
        return self.N_nu / self.N_tn if self.N_tn else 0.0


def scatter_matrix(samples: np.ndarray) -> np.ndarray:
    """``(1/N) sum_i (x_i - mean)(x_i - mean)^T`` for an ``(N, l)`` array."""
    x = np.asarray(samples, dtype=float)
    c = x - x.mean(axis=0)
    return c.T @ c / x.shape[0]


def _jacobi_eigenvalues(A: np.ndarray) -> np.ndarray:
    A = A.copy()
    n = A.shape[0]
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return np.zeros(n)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(float(np.sum((A - np.diag(np.diag(A))) ** 2)))
        if off < JACOBI_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-3 * JACOBI_TOL * scale:
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with the rotation in the (p, q) plane
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
    return np.diag(A).copy()


def eigen_sym(M: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric matrix in descending order.

    Closed form for ``l <= 2``, cyclic Jacobi rotations otherwise.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-9 * scale:
        raise ValueError("matrix is not symmetric")
    l = M.shape[0]
    if l == 1:
        vals = np.array([M[0, 0]])
    elif l == 2:
        tr = M[0, 0] + M[1, 1]
        # tr^2 - 4det written as a sum of squares to avoid cancellation
        disc = math.sqrt((M[0, 0] - M[1, 1]) ** 2 + 4.0 * M[0, 1] * M[1, 0])
        vals = np.array([(tr + disc) / 2.0, (tr - disc) / 2.0])
    else:
        vals = _jacobi_eigenvalues((M + M.T) / 2.0)
    return np.sort(vals)[::-1]


def dispersion(M: np.ndarray) -> DispersionResult:
    """Product of the eigenvalues above ``1e-9 * max(1, trace)``; 0 if none."""
    vals = np.clip(eigen_sym(M), 0.0, None)
    tau = 1e-9 * max(1.0, float(np.trace(np.asarray(M, dtype=float))))
    kept = vals[vals > tau]
    value = float(np.prod(kept)) if kept.size else 0.0
    return DispersionResult(eigenvalues=vals, dispersion=value, rank_used=int(kept.size))


def set_dispersions(sets: np.ndarray) -> np.ndarray:
    """Dispersion of every set in a ``(K, N, l)`` array."""
    return np.array([dispersion(scatter_matrix(s)).dispersion for s in sets])


def _perturb(values: np.ndarray, alpha_sq: float, rng: _NormalSource, d: int | None) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    delta = np.asarray(rng.normal(0.0, math.sqrt(alpha_sq), size=values.shape), dtype=float)
    out = values + np.floor(values * delta).astype(np.int64)
    if d is not None:
        out = np.clip(out, 0, d)
    return out


def inject_deviation(
    sample: DataSample, alpha_sq: float, rng: _NormalSource, d: int | None = None
) -> DataSample:
    """Apply ``d_j* = d_j + floor(d_j * delta_j)`` with independent ``delta_j``.

    Results are clamped to ``[0, d]`` when ``d`` is given.
    """
    if not alpha_sq > 0:
        raise ValueError("alpha_sq must be positive")
    out = _perturb(np.array(sample.dims), alpha_sq, rng, d)
    return DataSample(tuple(int(v) for v in out), sample.index, sample.timestamp)


def inject_sets(sets: np.ndarray, alpha_sq: float, rng: _NormalSource, d: int | None = None) -> np.ndarray:
    """Vectorised :func:`inject_deviation` over an array of samples."""
    if not alpha_sq > 0:
        raise ValueError("alpha_sq must be positive")
    return _perturb(sets, alpha_sq, rng, d)


def _split_and_inject(sets, alpha_sq, inject_fraction, rng, d):
    sets = np.asarray(sets)
    K = sets.shape[0]
    n_inject = int(round(inject_fraction * K))
    mask = np.zeros(K, dtype=bool)
    mask[rng.choice(K, size=n_inject, replace=False)] = True
    work = sets.copy()
    if n_inject:
        work[mask] = inject_sets(sets[mask], alpha_sq, rng, d)
    return set_dispersions(work), mask


def select_threshold(injected_dispersions: Sequence[float], target_tpr: float) -> float:
    """Largest data-aligned threshold keeping ``P(dispersion > Th) >= target``.

    Equivalent to starting high and lowering ``Th`` until the target is met.
    """
    D = np.sort(np.asarray(injected_dispersions, dtype=float))
    if D.size == 0:
        raise TrainingError("no injected sets to train on")
    allowed_misses = math.floor((1.0 - target_tpr) * D.size + 1e-9)
    # candidate thresholds: each distinct value v; misses(v) = #{D <= v}
    values, counts = np.unique(D, return_counts=True)
    misses = np.cumsum(counts)
    ok = values[(misses <= allowed_misses) & (values > 0)]
    if ok.size:
        return float(ok[-1])
    if D[0] > 0:
        return math.nextafter(float(D[0]), 0.0)
    raise TrainingError("injected sets have zero dispersion; no positive threshold reaches the target")


def train_threshold(
    training_sets: np.ndarray,
    alpha_sq: float,
    rng: np.random.Generator,
    *,
    d: int | None = None,
    target_tpr: float = 0.95,
    inject_fraction: float = 0.2,
) -> Threshold:
    training_sets = np.asarray(training_sets)
    K = training_sets.shape[0]
    if K < 100:
        raise ValueError(f"need at least 100 training sets, got {K}")
    disp, mask = _split_and_inject(training_sets, alpha_sq, inject_fraction, rng, d)
    th = select_threshold(disp[mask], target_tpr)
    tpr = float(np.mean(disp[mask] > th))
    return Threshold(value=th, alpha_sq=alpha_sq, N=training_sets.shape[1], target_tpr=target_tpr, train_tpr=tpr)


def classify(dispersion_value: float, threshold: float) -> bool:
    """``True`` means flagged faulty."""
    return dispersion_value > threshold


def evaluate(
    testing_sets: np.ndarray,
    threshold: Threshold | float,
    alpha_sq: float,
    rng: np.random.Generator,
    *,
    d: int | None = None,
    inject_fraction: float = 0.2,
) -> EvalCounts:
    th = threshold.value if isinstance(threshold, Threshold) else float(threshold)
    disp, mask = _split_and_inject(testing_sets, alpha_sq, inject_fraction, rng, d)
    flagged = disp > th
    return EvalCounts(
        N_uu=int(np.sum(flagged & mask)),
        N_tu=int(np.sum(mask)),
        N_nu=int(np.sum(flagged & ~mask)),
        N_tn=int(np.sum(~mask)),
    )
