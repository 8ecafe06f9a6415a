#!/usr/bin/env python3
# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Dilogarithm and guarded logarithms used by the closed-form thermodynamics."""

import logging
import math

import numpy as np
from numpy.typing import ArrayLike

logger = logging.getLogger(__name__)

ZETA2 = math.pi**2 / 6
SERIES_SWITCH = 0.5
# 0.5**60 / 60**2 is far below 1e-16, enough terms for every z <= 0.5.
SERIES_TERMS = 60
LN2 = math.log(2.0)


class DomainError(ValueError):
    """Custom exception for arguments outside a function's domain."""


def _as_array(value: ArrayLike) -> tuple[np.ndarray, bool]:
    arr = np.asarray(value, dtype=float)
    return np.atleast_1d(arr), arr.ndim == 0


def _result(values: np.ndarray, scalar: bool) -> float | np.ndarray:
    return float(values[0]) if scalar else values


def _li2_series(z: np.ndarray) -> np.ndarray:
    n = np.arange(1, SERIES_TERMS + 1, dtype=float)
    # Summing smallest terms first keeps full relative precision at tiny z.
    terms = z[:, None] ** n[None, :] / n[None, :] ** 2
    return terms[:, ::-1].sum(axis=1)


def li2(z: ArrayLike) -> float | np.ndarray:
    """Evaluate the dilogarithm Li2(z) = -int_0^z ln(1 - t)/t dt on [0, 1].

    Power series below one half, reflection identity above.

    Args:
        z: Argument or array of arguments in [0, 1].

    Returns:
        Li2(z) with the shape of the input.

    Raises:
        DomainError: If any argument lies outside [0, 1].
    """
    arr, scalar = _as_array(z)

    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        logger.error("Dilogarithm argument outside [0, 1]: %s", arr)
        raise DomainError("li2 is only defined here for 0 <= z <= 1")

    out = np.empty_like(arr)
    low = arr <= SERIES_SWITCH
    out[low] = _li2_series(arr[low])

    high = ~low
    if np.any(high):
        zh = arr[high]
        wh = 1.0 - zh
        with np.errstate(divide="ignore", invalid="ignore"):
            cross = np.where(wh > 0.0, np.log(zh) * np.log(wh), 0.0)
        out[high] = ZETA2 - cross - _li2_series(wh)

    return _result(out, scalar)


def log1mexp(x: ArrayLike) -> float | np.ndarray:
    """Compute ln(1 - exp(-x)) for x > 0 without cancellation.

    Args:
        x: Positive argument(s).

    Returns:
        The logarithm, negative for every finite x.

    Raises:
        DomainError: If any argument is not positive.
    """
    arr, scalar = _as_array(x)
    if np.any(arr <= 0.0):
        raise DomainError("log1mexp needs x > 0")

    out = np.where(
        arr < LN2,
        np.log(-np.expm1(-np.minimum(arr, LN2))),
        np.log1p(-np.exp(-np.maximum(arr, LN2))),
    )
    return _result(out, scalar)


def log_expm1(x: ArrayLike) -> float | np.ndarray:
    """Compute ln(exp(x) - 1) for x > 0, finite for large x.

    Args:
        x: Positive argument(s).

    Returns:
        The logarithm.
    """
    arr, scalar = _as_array(x)
    out = arr + np.asarray(log1mexp(arr))
    return _result(out, scalar)


def log_plus(x: ArrayLike) -> float | np.ndarray:
    """Guarded logarithm max(ln x, 1).

    Args:
        x: Positive argument(s).

    Returns:
        The guarded logarithm, never below one.

    Raises:
        DomainError: If any argument is not positive.
    """
    arr, scalar = _as_array(x)
    if np.any(arr <= 0.0):
        raise DomainError("log_plus needs x > 0")

    return _result(np.maximum(np.log(arr), 1.0), scalar)
