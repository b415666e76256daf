"""Smooth cutoff chi(d): 1 on [0, b/4], 0 on [3b/8, inf), C-infinity in between.

Derivatives come from truncated Taylor arithmetic, exact up to rounding for any order.
"""

from __future__ import annotations

from math import factorial

import numpy as np


def _series_exp(a: np.ndarray) -> np.ndarray:
    """Taylor coefficients of exp(a(h)) given those of a (last axis = power of h)."""
    n = a.shape[-1]
    out = np.zeros_like(a)
    out[..., 0] = np.exp(a[..., 0])
    for j in range(1, n):
        k = np.arange(1, j + 1)
        out[..., j] = np.sum(k * a[..., k] * out[..., j - k], axis=-1) / j
    return out


def _series_recip(a: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    out = np.zeros_like(a)
    out[..., 0] = 1.0 / a[..., 0]
    for j in range(1, n):
        k = np.arange(1, j + 1)
        out[..., j] = -np.sum(a[..., k] * out[..., j - k], axis=-1) / a[..., 0]
    return out


def _series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    out = np.zeros_like(a)
    for j in range(n):
        out[..., j] = np.sum(a[..., : j + 1] * b[..., j::-1], axis=-1)
    return out


def _step_left_series(t: np.ndarray, order: int) -> np.ndarray:
    """Taylor coefficients of S at t in (0, 1/2], S = F/(1+F), F = exp(1/(1-t) - 1/t)."""
    j = np.arange(order + 1)
    # 1/(t+h) = sum (-1)^j h^j / t^(j+1);  1/(1-t-h) = sum h^j / (1-t)^(j+1)
    tt = t[:, None]
    expo = 1.0 / (1.0 - tt) ** (j + 1) - (-1.0) ** j / tt ** (j + 1)
    F = _series_exp(expo)
    one_plus = F.copy()
    one_plus[:, 0] += 1.0
    return _series_mul(F, _series_recip(one_plus))


def smooth_step(t, r: int = 0) -> np.ndarray:
    """r-th derivative of the step S: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    if r == 0:
        out[t >= 1.0] = 1.0
    inside = (t > 0.0) & (t < 1.0)
    if not np.any(inside):
        return out
    ti = t[inside]
    # S(t) = 1 - S(1 - t): evaluate on the left half where S is small
    flip = ti > 0.5
    tl = np.where(flip, 1.0 - ti, ti)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        coef = _step_left_series(tl, r)
    val = coef[:, r] * factorial(r)
    val = np.where(np.isfinite(val), val, 0.0)
    if r == 0:
        val = np.where(flip, 1.0 - val, val)
    else:
        val = np.where(flip, -((-1.0) ** r) * val, val)
    out[inside] = val
    return out


class Cutoff:
    """chi(d) = S((d1 - d)/(d1 - d0)) with d0 = b/4, d1 = 3b/8."""

    def __init__(self, b: float):
        self.b = float(b)
        self.d0 = self.b / 4.0
        self.d1 = 3.0 * self.b / 8.0

    def __call__(self, d, r: int = 0) -> np.ndarray:
        """r-th derivative of chi with respect to d."""
        width = self.d1 - self.d0
        t = (self.d1 - np.asarray(d, dtype=float)) / width
        return smooth_step(t, r) * (-1.0 / width) ** r

    def table(self, d, R: int) -> np.ndarray:
        """Array (R, len(d)) of chi^(r)(d) for r < R."""
        d = np.atleast_1d(np.asarray(d, dtype=float))
        if R == 0:
            return np.zeros((0, d.size))
        return np.stack([self(d, r) for r in range(R)])
