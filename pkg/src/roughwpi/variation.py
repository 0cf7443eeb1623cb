"""Exact q-variation of two-parameter tables and the norms built from it."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _dp
from .paths import DiscretePath

# n = 2**N + 1 grid points; the DP is quadratic in n
MAX_LEVEL = 14


@dataclass(frozen=True)
class VarParams:
    """Variation exponent ``p`` in (2, 3) and dyadic weight exponent ``kappa > p - 1``."""

    p: float = 2.5
    kappa: float = 2.0

    def __post_init__(self):
        if not 2.0 < self.p < 3.0:
            raise ValueError(f"p must satisfy 2 < p < 3, got {self.p}")
        if not self.kappa > self.p - 1.0:
            raise ValueError(f"kappa must exceed p - 1 = {self.p - 1}, got {self.kappa}")


class TwoParamTable:
    """Vector-valued function on grid pairs ``i <= j`` in prefix-sum form.

    Component ``k`` evaluates as::

        eta_k(i, j) = a[k, j] - d[k, i] - sum_r b[k, r, i] * c[k, r, j]

    so every query is O(R). Increments use ``R = 0``; second levels and cross
    integrals use one bilinear term, differences of them two.
    """

    def __init__(self, a, d, b=None, c=None, level: int | None = None, shape=None):
        a = np.atleast_2d(np.asarray(a, dtype=float))
        d = np.atleast_2d(np.asarray(d, dtype=float))
        m, n = a.shape
        if b is None:
            b = np.zeros((m, 0, n))
            c = np.zeros((m, 0, n))
        b = np.asarray(b, dtype=float)
        c = np.asarray(c, dtype=float)
        if d.shape != (m, n) or b.shape != c.shape or b.shape[:1] + b.shape[2:] != (m, n):
            raise ValueError("inconsistent prefix arrays")
        lev = (n - 1).bit_length() - 1
        if level is not None and level != lev:
            raise ValueError("level inconsistent with table size")
        self.a, self.d, self.b, self.c = a, d, b, c
        self.level = lev
        self.shape = tuple(shape) if shape is not None else (m,)
        if int(np.prod(self.shape)) != m:
            raise ValueError("component shape does not match the number of components")

    @property
    def n_components(self) -> int:
        return self.a.shape[0]

    @property
    def n_points(self) -> int:
        return self.a.shape[1]

    @classmethod
    def increments(cls, path: DiscretePath) -> "TwoParamTable":
        """Table of ``x(t_j) - x(t_i)`` per coordinate."""
        x = path.values.T
        return cls(x, x, level=path.level)

    def __call__(self, i: int, j: int) -> np.ndarray:
        if i > j:
            raise ValueError(f"need i <= j, got ({i}, {j})")
        v = self.a[:, j] - self.d[:, i] - np.einsum("kr,kr->k", self.b[:, :, i], self.c[:, :, j])
        return v.reshape(self.shape)

    def dense(self) -> np.ndarray:
        """All pairs as an ``(n, n) + shape`` array, zero below the diagonal (debug use)."""
        v = self.a[:, None, :] - self.d[:, :, None] - np.einsum("kri,krj->kij", self.b, self.c)
        v = np.triu(v)
        return np.moveaxis(v, 0, -1).reshape((self.n_points, self.n_points) + self.shape)

    def component(self, k) -> "TwoParamTable":
        if isinstance(k, tuple):
            k = int(np.ravel_multi_index(k, self.shape))
        return TwoParamTable(self.a[k], self.d[k], self.b[k : k + 1], self.c[k : k + 1])

    def _check(self, other):
        if self.a.shape != other.a.shape:
            raise ValueError("tables differ in size or number of components")

    def __add__(self, other: "TwoParamTable") -> "TwoParamTable":
        self._check(other)
        return TwoParamTable(
            self.a + other.a,
            self.d + other.d,
            np.concatenate([self.b, other.b], axis=1),
            np.concatenate([self.c, other.c], axis=1),
            shape=self.shape,
        )

    def __mul__(self, s: float) -> "TwoParamTable":
        s = float(s)
        return TwoParamTable(self.a * s, self.d * s, self.b * s, self.c, shape=self.shape)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other: "TwoParamTable") -> "TwoParamTable":
        return self + (-other)

    def transpose(self) -> "TwoParamTable":
        """Swap the two matrix indices of a matrix-valued table."""
        if len(self.shape) != 2:
            raise ValueError("transpose needs a matrix-valued table")
        r, s = self.shape
        idx = np.arange(r * s).reshape(r, s).T.ravel()
        return TwoParamTable(self.a[idx], self.d[idx], self.b[idx], self.c[idx], shape=(s, r))


def qvar(eta: TwoParamTable, q: float, witness: bool = False, max_level: int = MAX_LEVEL):
    """q-variation of a scalar table over all partitions drawn from the grid.

    Solves ``V(j) = max_{i<j} V(i) + |eta(t_i, t_j)|**q`` and returns
    ``V(last)**(1/q)``. With ``witness=True`` also returns one maximising
    partition as a list of grid indices.
    """
    if q < 1:
        raise ValueError(f"q-variation needs q >= 1, got {q}")
    if eta.n_components != 1:
        raise ValueError("qvar takes a scalar table; use qvar_components")
    if eta.level > max_level:
        raise ValueError(f"level {eta.level} exceeds max_level={max_level}")
    prev = np.zeros(eta.n_points, dtype=np.int64)
    total = _dp.qvar_power(
        eta.a[0], eta.d[0], eta.b[0], eta.c[0], float(q), _dp.quarter_code(q), _dp.BLOCK, prev
    )
    value = max(total, 0.0) ** (1.0 / q)
    if not witness:
        return value
    pts = [eta.n_points - 1]
    while pts[-1] != 0:
        pts.append(int(prev[pts[-1]]))
    return value, pts[::-1]


def qvar_components(eta: TwoParamTable, q: float) -> np.ndarray:
    """q-variation of every component, shaped like the table's values."""
    out = np.array([qvar(eta.component(k), q) for k in range(eta.n_components)])
    return out.reshape(eta.shape)


def qvar_max(eta: TwoParamTable, q: float) -> float:
    """Maximum over components of the q-variation (0 for an empty table)."""
    if eta.n_components == 0:
        return 0.0
    return float(np.max(qvar_components(eta, q)))


def qvar_bruteforce(values: np.ndarray, q: float) -> float:
    """Enumerate every partition of a dense ``(n, n)`` table; only for tiny n."""
    n = values.shape[0]
    if n > 16:
        raise ValueError("brute force limited to 16 grid points")
    best = 0.0
    for mask in range(2 ** max(n - 2, 0)):
        pts = [0] + [k + 1 for k in range(n - 2) if mask >> k & 1] + [n - 1]
        s = sum(abs(values[i, j]) ** q for i, j in itertools.pairwise(pts))
        best = max(best, s)
    return best ** (1.0 / q)


def pvar_path(path: DiscretePath, p: float) -> float:
    """``||h||_p``: the largest coordinate-wise p-variation of a path."""
    return qvar_max(TwoParamTable.increments(path), p)


def dyadic_norm(z: DiscretePath, params: VarParams) -> float:
    """Weighted sum over dyadic levels ``1..N`` of p-th powers of increments."""
    p, kappa = params.p, params.kappa
    total = 0.0
    vals = z.values
    for n in range(1, z.level + 1):
        step = 2 ** (z.level - n)
        inc = np.diff(vals[::step], axis=0)
        total += n**kappa * np.sum(np.linalg.norm(inc, axis=1) ** p)
    return float(total ** (1.0 / p))


def dyadic_constant(params: VarParams, tol: float = 1e-12) -> float:
    """``(sum_{n>=1} n**kappa 2**(-n p / 2))**(1/p)``, summed until the tail is below ``tol``."""
    p, kappa = params.p, params.kappa
    x = 2.0 ** (-p / 2)
    total = 0.0
    n = 1
    while True:
        term = n**kappa * x**n
        total += term
        # the remaining terms shrink at least geometrically once the ratio is < 1
        ratio = ((n + 1) / n) ** kappa * x
        if ratio < 1 and term * ratio / (1 - ratio) < tol:
            break
        n += 1
    return float(total ** (1.0 / p))


def level1_norm(lift, p: float) -> float:
    """Largest coordinate-wise p-variation of the first level."""
    return qvar_max(lift.level1_table(), p)


def level2_norm(lift, p: float) -> float:
    """Largest entry-wise (p/2)-variation of the second level."""
    return qvar_max(lift.level2_table(), p / 2)


def cp_norm(lift, p: float) -> float:
    """``max(level1_norm, level2_norm)``."""
    return max(level1_norm(lift, p), level2_norm(lift, p))
