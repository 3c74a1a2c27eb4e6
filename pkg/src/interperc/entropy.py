"""Approximate entropy of dependency-map index sequences."""
import logging
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from interperc.depmap import DependencyMap
from interperc.errors import InsufficientDataError, InvalidParameterError

logger = logging.getLogger(__name__)

# Longer maps are analysed on a contiguous window of this many entries.
MAX_SERIES_LENGTH = 10_000

# Templates compared against all others per vectorised block.
_BLOCK_ROWS = 128


@dataclass(frozen=True)
class ApEnParams:
    m: int = 2
    tolerance_factor: float = 0.2

    def __post_init__(self) -> None:
        if self.m < 1:
            raise InvalidParameterError(f"Embedding dimension must be >= 1, got m={self.m}")
        if self.tolerance_factor <= 0:
            raise InvalidParameterError(
                f"Tolerance factor must be positive, got {self.tolerance_factor}"
            )


def tolerance(series: np.ndarray, params: ApEnParams) -> float:
    """Return the absolute match tolerance: factor times the population standard deviation."""
    return params.tolerance_factor * float(np.std(np.asarray(series, dtype=np.float64)))


def _check_series(series: np.ndarray, params: ApEnParams) -> np.ndarray:
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1 or series.size < params.m + 2:
        raise InsufficientDataError(
            f"ApEn with m={params.m} needs at least {params.m + 2} points, got {series.size}"
        )
    return series


def _phi(series: np.ndarray, m: int, tol: float) -> float:
    windows = sliding_window_view(series, m)
    n = windows.shape[0]
    counts = np.empty(n, dtype=np.int64)
    for start in range(0, n, _BLOCK_ROWS):
        block = windows[start : start + _BLOCK_ROWS]
        dist = np.abs(block[:, None, :] - windows[None, :, :]).max(axis=2)
        counts[start : start + block.shape[0]] = np.count_nonzero(dist < tol, axis=1)
    return float(np.mean(np.log(counts / n)))


def apen(series: np.ndarray, params: ApEnParams = ApEnParams()) -> float:
    """Return ``Phi^m - Phi^(m+1)`` for *series*.

    Templates are compared with the Chebyshev distance, a match is a distance
    strictly below the tolerance, and every template matches itself. A
    constant series has zero tolerance and returns 0.

    Raises:
        InsufficientDataError: If the series has fewer than ``m + 2`` points.
    """
    series = _check_series(series, params)
    tol = tolerance(series, params)
    if tol == 0.0:
        return 0.0
    return _phi(series, params.m, tol) - _phi(series, params.m + 1, tol)


def apen_reference(series: np.ndarray, params: ApEnParams = ApEnParams()) -> float:
    """Direct one-template-at-a-time ApEn, used to check :func:`apen`."""
    series = _check_series(series, params)
    tol = tolerance(series, params)
    if tol == 0.0:
        return 0.0

    def phi(m: int) -> float:
        n = series.size - m + 1
        templates = np.array([series[i : i + m] for i in range(n)])
        log_ratios = []
        for i in range(n):
            distance = np.abs(templates - templates[i]).max(axis=1)
            log_ratios.append(np.log(np.count_nonzero(distance < tol) / n))
        return float(np.mean(log_ratios))

    return phi(params.m) - phi(params.m + 1)


def map_series(
    dep_map: DependencyMap, max_length: int = MAX_SERIES_LENGTH, rng_seed: int | None = None
) -> np.ndarray:
    """Return the series ``u(i) = pi[i]`` analysed for *dep_map*.

    Maps longer than *max_length* are cut to a contiguous window whose offset
    is drawn from *rng_seed* (offset 0 when no seed is given).
    """
    series = dep_map.pi.astype(np.float64)
    if series.size <= max_length:
        return series
    offset = 0
    if rng_seed is not None:
        offset = int(np.random.default_rng(rng_seed).integers(0, series.size - max_length + 1))
    logger.debug("ApEn window [%d, %d) of %d entries", offset, offset + max_length, series.size)
    return series[offset : offset + max_length]


def apen_of_map(
    dep_map: DependencyMap,
    params: ApEnParams = ApEnParams(),
    *,
    max_length: int = MAX_SERIES_LENGTH,
    rng_seed: int | None = None,
) -> float:
    return apen(map_series(dep_map, max_length, rng_seed), params)
