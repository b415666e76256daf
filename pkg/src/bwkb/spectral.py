"""One-dimensional Chebyshev collocation: grids, differentiation, quadrature, dense solves."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import numpy.polynomial.chebyshev as cheb
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import ConfigurationError, SingularSystemError

MIN_NODES = 8
PIVOT_RTOL = 1e-13
RESIDUAL_RTOL = 1e-10


def cheb_lobatto(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Lobatto nodes on [-1, 1] (ascending) and the collocation derivative matrix."""
    m = n - 1
    x = -np.cos(np.pi * np.arange(n) / m)
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n)
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(n))
    # negative-sum trick keeps D @ 1 = 0 to rounding
    D -= np.diag(D.sum(axis=1))
    return x, D


def clenshaw_curtis(n: int) -> np.ndarray:
    """Clenshaw-Curtis weights on [-1, 1] for the n Lobatto nodes (order irrelevant, symmetric)."""
    m = n - 1
    theta = np.pi * np.arange(n) / m
    w = np.zeros(n)
    v = np.ones(m - 1)
    interior = slice(1, m)
    if m % 2 == 0:
        w[0] = w[m] = 1.0 / (m * m - 1)
        for k in range(1, m // 2):
            v -= 2.0 * np.cos(2 * k * theta[interior]) / (4 * k * k - 1)
        v -= np.cos(m * theta[interior]) / (m * m - 1)
    else:
        w[0] = w[m] = 1.0 / (m * m)
        for k in range(1, (m - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[interior]) / (4 * k * k - 1)
    w[interior] = 2.0 * v / m
    return w


@dataclass(frozen=True)
class Grid1D:
    lo: float
    hi: float
    n: int
    nodes: np.ndarray = field(repr=False)
    D1: np.ndarray = field(repr=False)
    D2: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def integrate(self, f: np.ndarray) -> np.ndarray:
        return np.tensordot(f, self.weights, axes=([-1], [0]))

    def cheb_coefficients(self, f: np.ndarray) -> np.ndarray:
        """Chebyshev coefficients of the interpolant through the nodal values (last axis)."""
        f = np.asarray(f)
        m = self.n - 1
        # nodes are ascending: reverse to x_j = cos(pi j / m)
        vals = f[..., ::-1]
        ext = np.concatenate([vals, vals[..., -2:0:-1]], axis=-1)
        coef = np.fft.fft(ext, axis=-1)[..., : m + 1] / m
        coef[..., 0] /= 2.0
        coef[..., m] /= 2.0
        return coef.real if np.isrealobj(f) else coef

    def interpolate(self, f: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Barycentric evaluation of the nodal interpolant at points y inside the element."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        wb = (-1.0) ** np.arange(self.n)
        wb[0] *= 0.5
        wb[-1] *= 0.5
        diff = y[:, None] - self.nodes[None, :]
        exact = np.isclose(diff, 0.0, atol=1e-15 * max(1.0, abs(self.length)))
        diff[exact] = 1.0
        t = wb / diff
        out = np.tensordot(np.asarray(f), t.T, axes=([-1], [0])) / t.sum(axis=1)
        rows, cols = np.nonzero(exact)
        if rows.size:
            out[..., rows] = np.asarray(f)[..., cols]
        return out


def build_grid(interval: tuple[float, float], n: int) -> Grid1D:
    lo, hi = float(interval[0]), float(interval[1])
    if n < MIN_NODES:
        raise ConfigurationError(f"collocation grid needs at least {MIN_NODES} nodes, got {n}")
    if not hi > lo:
        raise ConfigurationError(f"degenerate interval [{lo}, {hi}]")
    x, D = cheb_lobatto(n)
    scale = 2.0 / (hi - lo)
    nodes = lo + 0.5 * (x + 1.0) * (hi - lo)
    nodes[0], nodes[-1] = lo, hi
    D1 = D * scale
    D2 = D1 @ D1
    w = clenshaw_curtis(n) / scale
    return Grid1D(lo, hi, n, nodes, D1, D2, w)


@dataclass(frozen=True)
class CompositeGrid:
    """A subdomain split into Chebyshev elements; nodal arrays are element-wise concatenations."""

    elements: tuple[Grid1D, ...]

    @property
    def lo(self) -> float:
        return self.elements[0].lo

    @property
    def hi(self) -> float:
        return self.elements[-1].hi

    @property
    def size(self) -> int:
        return sum(e.n for e in self.elements)

    @property
    def nodes(self) -> np.ndarray:
        return np.concatenate([e.nodes for e in self.elements])

    @property
    def weights(self) -> np.ndarray:
        return np.concatenate([e.weights for e in self.elements])

    def slices(self) -> list[slice]:
        out, start = [], 0
        for e in self.elements:
            out.append(slice(start, start + e.n))
            start += e.n
        return out

    @property
    def D1(self) -> np.ndarray:
        return sla.block_diag(*[e.D1 for e in self.elements])

    @property
    def D2(self) -> np.ndarray:
        return sla.block_diag(*[e.D2 for e in self.elements])

    def diff(self, f: np.ndarray, order: int = 1) -> np.ndarray:
        f = np.asarray(f)
        out = np.empty(f.shape, dtype=np.result_type(f, float))
        for e, s in zip(self.elements, self.slices()):
            op = e.D1 if order == 1 else np.linalg.matrix_power(e.D1, order)
            out[..., s] = f[..., s] @ op.T
        return out

    def integrate(self, f: np.ndarray) -> np.ndarray:
        return np.tensordot(f, self.weights, axes=([-1], [0]))

    def endpoint_index(self, where: str) -> int:
        return 0 if where == "lo" else self.size - 1

    def tail_ratio(self, f: np.ndarray, ntail: int = 3) -> float:
        """Largest trailing Chebyshev coefficient over elements, relative to the largest coefficient overall."""
        f = np.asarray(f)
        coefs = [np.abs(e.cheb_coefficients(f[..., s])) for e, s in zip(self.elements, self.slices())]
        scale = max(float(np.max(c)) for c in coefs)
        if scale == 0.0:
            return 0.0
        return max(float(np.max(c[..., -ntail:])) for c in coefs) / scale

    def cumulative_integral(self, f: np.ndarray) -> np.ndarray:
        """Nodal values of int_lo^y f, element by element through Chebyshev antiderivatives."""
        f = np.asarray(f)
        out = np.zeros(f.shape, dtype=np.result_type(f, float))
        acc = 0.0
        for e, s in zip(self.elements, self.slices()):
            c = e.cheb_coefficients(f[s])
            ci = cheb.chebint(c, lbnd=-1.0) * (0.5 * e.length)
            x = 2.0 * (e.nodes - e.lo) / e.length - 1.0
            out[s] = acc + cheb.chebval(x, ci)
            acc = out[s][-1]
        return out


def composite_grid(breaks, n: int) -> CompositeGrid:
    breaks = sorted(set(float(b) for b in breaks))
    return CompositeGrid(tuple(build_grid((lo, hi), n) for lo, hi in zip(breaks[:-1], breaks[1:])))


@dataclass
class DenseSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    solution: np.ndarray | None = None
    condition: float | None = None
    residual: float | None = None


def solve_dense(system: DenseSystem) -> np.ndarray:
    """LU solve with row equilibration, pivot check and a-posteriori residual check."""
    A = np.asarray(system.matrix)
    b = np.asarray(system.rhs)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("matrix or right-hand side has non-finite entries")
    dtype = np.result_type(A, b, float)
    rowscale = np.max(np.abs(A), axis=1)
    if np.any(rowscale == 0.0):
        raise SingularSystemError(int(np.argmin(rowscale)), "zero row")
    As = (A / rowscale[:, None]).astype(dtype)
    bs = (b.T / rowscale).T.astype(dtype)
    with warnings.catch_warnings():
        # exact zero pivots are reported below with their index
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(As, check_finite=False)
    diag = np.abs(np.diag(lu))
    bad = np.nonzero(diag < PIVOT_RTOL * max(1.0, float(np.max(np.abs(As)))))[0]
    if bad.size:
        raise SingularSystemError(int(bad[0]), f"pivot {diag[bad[0]]:.3e} below threshold")
    x = sla.lu_solve((lu, piv), bs, check_finite=False)
    anorm = float(np.max(np.sum(np.abs(As), axis=0)))
    gecon = lapack.zgecon if np.iscomplexobj(lu) else lapack.dgecon
    rcond, _ = gecon(lu, anorm, norm="1")
    system.condition = float(np.inf if rcond == 0 else 1.0 / rcond)
    r = As @ x - bs
    res = float(np.linalg.norm(r))
    bound = RESIDUAL_RTOL * (np.linalg.norm(As, 2 if As.shape[0] < 64 else "fro") * np.linalg.norm(x) + np.linalg.norm(bs))
    system.residual = res
    if res > bound:
        raise SingularSystemError(-1, f"residual {res:.3e} exceeds bound {bound:.3e}")
    system.solution = x
    return x
