"""Confidence scores from a multi-run decision matrix.

All three estimators map a ``|M| x K`` binary matrix to one value in [0, 1]
per mutant, where high means "consistently judged an interference mutant"
(EBW measures consistency only; see ``ebw``).
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMatrix
from .recognition.engine import DecisionMatrix

log = logging.getLogger(__name__)


class Algorithm(str, enum.Enum):
    EBW = "ebw"
    CBW = "cbw"
    PCA = "pca"


@dataclass(frozen=True)
class ConfidenceConfig:
    algorithm: Algorithm = Algorithm.PCA
    pca_iterations: int = 1000
    pca_tolerance: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.pca_iterations < 1:
            raise ValueError("pca_iterations must be >= 1")
        if not self.pca_tolerance > 0:
            raise ValueError("pca_tolerance must be > 0")


def _xlogx(p: float) -> float:
    return p * math.log(p) if p > 0 else 0.0


def binary_entropy(p: float) -> float:
    """Entropy in nats of a Bernoulli(p) decision."""
    return -_xlogx(p) - _xlogx(1.0 - p)


def ebw(matrix: DecisionMatrix) -> dict[str, float]:
    """Entropy-based weighting: 1 - H/log 2 of each row's decision split.

    Symmetric in the split, so a unanimous NOT-FLIM row also scores 1.
    """
    out = {}
    for mid, row in zip(matrix.mutant_ids, matrix.cells):
        p1 = sum(row) / matrix.K
        out[mid] = min(1.0, max(0.0, 1.0 - binary_entropy(p1) / math.log(2)))
    return out


def cbw(matrix: DecisionMatrix) -> dict[str, float]:
    return {mid: sum(row) / matrix.K for mid, row in zip(matrix.mutant_ids, matrix.cells)}


def power_iteration(
    a: np.ndarray, iterations: int = 1000, tolerance: float = 1e-10, seed: int = 0
) -> tuple[float, np.ndarray]:
    """Dominant eigenpair of a symmetric PSD matrix.

    The iteration matrix is squared after every step, so step ``i`` applies
    ``a**(2**i)``; small eigengaps (common for 0/1 decision matrices) then
    converge in a few dozen steps instead of thousands.
    """
    n = a.shape[0]
    x = np.random.default_rng(seed).normal(size=n)
    x /= np.linalg.norm(x)
    b = np.array(a, dtype=float)
    for i in range(iterations):
        y = b @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0, x
        y /= norm
        # eigenvectors have no sign; compare against the nearer of +/-x
        step = min(np.linalg.norm(y - x), np.linalg.norm(y + x))
        x = y
        if step < tolerance:
            break
        b = b @ b
        b /= np.linalg.norm(b)
    else:
        log.debug("power iteration stopped at %d iterations without reaching %.1e", iterations, tolerance)
    return float(x @ a @ x), x


def orient(w: np.ndarray) -> np.ndarray:
    """Flip ``w`` so the all-true row projects at least as high as the
    all-false row; a dead tie is broken by the first nonzero component."""
    s = float(w.sum())
    if abs(s) > 1e-12:
        return w if s > 0 else -w
    nz = np.flatnonzero(np.abs(w) > 1e-12)
    if nz.size and w[nz[0]] < 0:
        return -w
    return w


def min_max(values: np.ndarray) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 1e-12:
        return np.zeros_like(values)
    return np.clip((values - lo) / (hi - lo), 0.0, 1.0)


def principal_axis(r: np.ndarray, iterations: int = 1000, tolerance: float = 1e-10) -> np.ndarray | None:
    """First principal direction of the rows of ``r`` (columns centred),
    oriented by ``orient``; ``None`` when the rows have no variance."""
    centred = r - r.mean(axis=0)
    cov = centred.T @ centred / (r.shape[0] - 1)
    if float(np.trace(cov)) <= 1e-15:
        return None
    _, w = power_iteration(cov, iterations, tolerance)
    return orient(w)


def pca(matrix: DecisionMatrix, config: ConfidenceConfig = ConfidenceConfig()) -> dict[str, float]:
    if len(matrix.mutant_ids) < 2:
        raise DegenerateMatrix("PCA confidence needs at least two mutants")
    r = matrix.as_array()
    w = principal_axis(r, config.pca_iterations, config.pca_tolerance)
    if w is None:
        return cbw(matrix)
    phi = min_max(r @ w)
    return {mid: float(v) for mid, v in zip(matrix.mutant_ids, phi)}


def confidence(matrix: DecisionMatrix, config: ConfidenceConfig = ConfidenceConfig()) -> dict[str, float]:
    if config.algorithm is Algorithm.EBW:
        return ebw(matrix)
    if config.algorithm is Algorithm.CBW:
        return cbw(matrix)
    return pca(matrix, config)
