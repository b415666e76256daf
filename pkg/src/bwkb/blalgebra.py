"""Boundary-layer profiles sum_l c_l(x) z^l exp(-s z), s = sqrt(kappa).

A coefficient field c(x) attached to one interface component is stored as an array
``A`` of shape (R, M+1):

    c(x) = sum_r sum_m A[r, m] e^{i k_m x} chi^(r)(d(x))

with chi the tubular cutoff.  On this class the slow operators are exact:
d/dx multiplies by i k_m, (grad d . grad) shifts r -> r + 1, the trace on the
interface keeps r = 0 (chi = 1 near the interface, chi^(r)(0) = 0 for r >= 1).
A profile stores its coefficients as an array (deg + 1, R, M + 1); degree -1
(no coefficients) is a structural zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .cutoff import Cutoff


# -- coefficient fields ------------------------------------------------------


def pad_r(A: np.ndarray, R: int) -> np.ndarray:
    if A.shape[-2] >= R:
        return A
    pad = [(0, 0)] * A.ndim
    pad[-2] = (0, R - A.shape[-2])
    return np.pad(A, pad)


def cf_add(*fields: np.ndarray) -> np.ndarray:
    R = max(f.shape[-2] for f in fields)
    return sum(pad_r(f, R) for f in fields)


def cf_extend(trace: np.ndarray) -> np.ndarray:
    """Tangential extension: trace (M+1,) -> trace(x) chi(d(x))."""
    return np.asarray(trace, dtype=complex)[None, :].copy()


def cf_dx(A: np.ndarray, k: np.ndarray) -> np.ndarray:
    return A * (1j * k)


def cf_shift(A: np.ndarray) -> np.ndarray:
    """(grad d . grad) applied to the field: chi^(r) -> chi^(r+1)."""
    zero = np.zeros_like(A[..., :1, :])
    return np.concatenate([zero, A], axis=-2)


def cf_lap(A: np.ndarray, k: np.ndarray, lap_d: float = 0.0) -> np.ndarray:
    # |grad d| = 1, so Lap = d_x^2 + (grad d . grad)^2 + (Lap d)(grad d . grad)
    return cf_add(-(k**2) * A, cf_shift(cf_shift(A)), lap_d * cf_shift(A))


def cf_trace(A: np.ndarray) -> np.ndarray:
    return A[..., 0, :] if A.shape[-2] else np.zeros(A.shape[-1], dtype=complex)


def cf_evaluate(A: np.ndarray, chi_table: np.ndarray) -> np.ndarray:
    """Per-mode values (M+1, npts) given chi^(r) at the points, shape (R', npts)."""
    R = A.shape[-2]
    return np.einsum("...rm,rp->...mp", A, chi_table[:R])


# -- profiles ----------------------------------------------------------------


@dataclass(frozen=True)
class BLProfile:
    s: float
    coeffs: np.ndarray  # (deg + 1, R, M + 1)
    component: int = 0

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def n_modes(self) -> int:
        return self.coeffs.shape[-1] - 1

    @property
    def R(self) -> int:
        return self.coeffs.shape[1]

    @staticmethod
    def zero(s: float, n_modes: int, component: int = 0) -> "BLProfile":
        return BLProfile(s, np.zeros((0, 1, n_modes + 1), dtype=complex), component)

    @staticmethod
    def from_list(s: float, coeffs, component: int = 0) -> "BLProfile":
        """Build from a list of coefficient fields (each (R, M+1) or (M+1,))."""
        fields = [np.atleast_2d(np.asarray(c, dtype=complex)) for c in coeffs]
        if not fields:
            raise ValueError("use BLProfile.zero for an empty profile")
        R = max(f.shape[0] for f in fields)
        return BLProfile(s, np.stack([pad_r(f, R) for f in fields]), component)

    def is_structural_zero(self) -> bool:
        return self.degree < 0

    def map_fields(self, fn) -> "BLProfile":
        if self.degree < 0:
            return self
        return BLProfile(self.s, np.stack([fn(c) for c in self.coeffs]), self.component)

    def __add__(self, other: "BLProfile") -> "BLProfile":
        if self.degree < 0:
            return other
        if other.degree < 0:
            return self
        n = max(self.degree, other.degree) + 1
        R = max(self.R, other.R)
        out = np.zeros((n, R, self.coeffs.shape[-1]), dtype=complex)
        out[: self.degree + 1, : self.R] += self.coeffs
        out[: other.degree + 1, : other.R] += other.coeffs
        return BLProfile(self.s, out, self.component)

    def __neg__(self) -> "BLProfile":
        return BLProfile(self.s, -self.coeffs, self.component)

    def __sub__(self, other: "BLProfile") -> "BLProfile":
        return self + (-other)

    def scale(self, a) -> "BLProfile":
        return BLProfile(self.s, a * self.coeffs, self.component)

    def at_zero(self) -> np.ndarray:
        """Coefficient field of the profile at z = 0, i.e. c_0."""
        if self.degree < 0:
            return np.zeros((1, self.coeffs.shape[-1]), dtype=complex)
        return self.coeffs[0]

    def trace(self) -> np.ndarray:
        """Mode coefficients of the profile at z = 0 on the interface."""
        return cf_trace(self.at_zero())

    def values(self, z: np.ndarray, chi_table: np.ndarray) -> np.ndarray:
        """Per-mode values (M+1, npts) at stretched coordinates z paired with chi^(r) samples."""
        z = np.asarray(z, dtype=float)
        out = np.zeros((self.coeffs.shape[-1], z.size), dtype=complex)
        if self.degree < 0:
            return out
        decay = np.exp(-self.s * z)
        for l in range(self.degree + 1):
            out += cf_evaluate(self.coeffs[l], chi_table) * (z**l * decay)[None, :]
        return out

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def effective_degree(self, tol: float = 0.0) -> int:
        """Highest l with a coefficient above tol (-1 if none)."""
        for l in range(self.degree, -1, -1):
            if np.max(np.abs(self.coeffs[l])) > tol:
                return l
        return -1


def bl_dz(p: BLProfile) -> BLProfile:
    if p.degree < 0:
        return p
    c = p.coeffs
    out = -p.s * c
    out[:-1] += np.arange(1, p.degree + 1)[:, None, None] * c[1:]
    return BLProfile(p.s, out, p.component)


def tail_matrix(s: float, degree: int) -> np.ndarray:
    """T[j, l] = l!/j! s^-(l-j+1) for j <= l: int_z^inf xi^l e^{-s xi} = sum_j T[j, l] z^j e^{-s z}."""
    T = np.zeros((degree + 1, degree + 1))
    for l in range(degree + 1):
        for j in range(l + 1):
            T[j, l] = factorial(l) / factorial(j) * s ** (-(l - j + 1))
    return T


def bl_tail_integral(p: BLProfile) -> BLProfile:
    """q(z) = int_z^inf p(xi) d xi, term by term."""
    if p.degree < 0:
        return p
    T = tail_matrix(p.s, p.degree)
    return BLProfile(p.s, np.einsum("jl,lrm->jrm", T, p.coeffs), p.component)


def bl_ode_solve(rhs: BLProfile, f0: np.ndarray) -> BLProfile:
    """Decaying solution of -f'' + s^2 f = rhs with f(0) = f0.

    f = (f0 + sum_{i=0}^K beta_i z^{i+1}) e^{-s z}, where the coefficient of z^i gives
    gamma_i = 2 (i+1) s beta_i - (i+1)(i+2) beta_{i+1}, solved from the top down.
    """
    f0 = np.atleast_2d(np.asarray(f0, dtype=complex))
    s = rhs.s
    if rhs.degree < 0:
        return BLProfile(s, f0[None], rhs.component)
    K = rhs.degree
    R = max(rhs.R, f0.shape[0])
    gamma = np.zeros((K + 1, R, rhs.coeffs.shape[-1]), dtype=complex)
    gamma[:, : rhs.R] = rhs.coeffs
    beta = np.zeros_like(gamma)
    for i in range(K, -1, -1):
        acc = gamma[i].copy()
        if i < K:
            acc += (i + 1) * (i + 2) * beta[i + 1]
        beta[i] = acc / (2.0 * (i + 1) * s)
    out = np.concatenate([pad_r(f0, R)[None], beta], axis=0)
    return BLProfile(s, out, rhs.component)


def ode_matrix(s: float, K: int) -> np.ndarray:
    """Upper bidiagonal M_K with m_ii = 2 i s, m_{i,i+1} = -i (i+1), i = 1..K+1."""
    i = np.arange(1, K + 2)
    M = np.diag(2.0 * i * s)
    M[np.arange(K), np.arange(1, K + 1)] = -i[:-1] * (i[:-1] + 1)
    return M


# -- vector profiles (tangential/normal split on one component) ------------


@dataclass(frozen=True)
class VectorProfile:
    """v = T t + N n with t = (1, 0) and n the component's outward normal."""

    T: BLProfile
    N: BLProfile

    def __add__(self, other: "VectorProfile") -> "VectorProfile":
        return VectorProfile(self.T + other.T, self.N + other.N)


def slow_div(T: BLProfile, N: BLProfile, k: np.ndarray, lap_d: float = 0.0) -> BLProfile:
    """x-divergence at frozen z: d_x T + (n . grad) N + N div n, with n = -grad d."""
    out = T.map_fields(lambda c: cf_dx(c, k))
    out = out + N.map_fields(lambda c: -cf_shift(c))
    if lap_d:
        out = out + N.map_fields(lambda c: -lap_d * c)
    return out


def profile_shift(p: BLProfile) -> BLProfile:
    return p.map_fields(cf_shift)


def profile_lap(p: BLProfile, k: np.ndarray, lap_d: float = 0.0) -> BLProfile:
    return p.map_fields(lambda c: cf_lap(c, k, lap_d))


def profile_dx(p: BLProfile, k: np.ndarray) -> BLProfile:
    return p.map_fields(lambda c: cf_dx(c, k))


def chi_table_for(cutoff: Cutoff, d: np.ndarray, R: int) -> np.ndarray:
    return cutoff.table(d, R)
