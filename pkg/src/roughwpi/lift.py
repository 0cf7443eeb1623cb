"""Second-level lifts of piecewise-linear paths and cross integrals.

Everything is kept in prefix form: for a grid path ``x`` starting at 0,

    A(t_j) = int_0^{t_j} x(u) (x) dz(u)

is accumulated segment by segment in closed form, and the integral over
``[t_i, t_j]`` is recovered with the Chen relation

    C(t_i, t_j) = A(t_j) - A(t_i) - x(t_i) (x) (z(t_j) - z(t_i)).
"""

from __future__ import annotations

import csv

import numpy as np

from .paths import DiscretePath, check_levels
from .variation import TwoParamTable, cp_norm, qvar_max


def _prefix_integral(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Exact ``int_0^{t_j} x (x) dz`` for piecewise-linear x, z with x(0) = 0."""
    dx = np.diff(x, axis=0)
    dz = np.diff(z, axis=0)
    seg = np.einsum("ki,kj->kij", x[:-1] + 0.5 * dx, dz)
    out = np.zeros((x.shape[0], x.shape[1], z.shape[1]))
    np.cumsum(seg, axis=0, out=out[1:])
    return out


def _bilinear_table(prefix: np.ndarray, x: np.ndarray, z: np.ndarray) -> TwoParamTable:
    # component (k, l): prefix_kl[j] - x_k[i] z_l[j] - (prefix_kl[i] - x_k[i] z_l[i])
    n, d, m = prefix.shape
    a = prefix.reshape(n, d * m).T
    xk = np.repeat(x.T, m, axis=0)
    zl = np.tile(z.T, (d, 1))
    return TwoParamTable(a, a - xk * zl, xk[:, None, :], zl[:, None, :], shape=(d, m))


def outer_increments(x: DiscretePath, z: DiscretePath) -> TwoParamTable:
    """Table of ``(x(t) - x(s)) (x) (z(t) - z(s))``."""
    check_levels(x, z)
    d, m = x.dim, z.dim
    xk = np.repeat(x.values.T, m, axis=0)
    zl = np.tile(z.values.T, (d, 1))
    b = np.stack([xk, zl], axis=1)
    c = np.stack([zl, xk], axis=1)
    return TwoParamTable(xk * zl, -xk * zl, b, c, shape=(d, m))


class CrossIntegral:
    """``C_{x,z}(s, t) = int_s^t (x(u) - x(s)) (x) dz(u)`` on the grid."""

    def __init__(self, x: DiscretePath, z: DiscretePath):
        check_levels(x, z)
        self.x = x
        self.z = z
        self.prefix = _prefix_integral(x.values, z.values)
        self.prefix.setflags(write=False)

    def __call__(self, i: int, j: int) -> np.ndarray:
        if i > j:
            raise ValueError(f"need i <= j, got ({i}, {j})")
        xv, zv = self.x.values, self.z.values
        return self.prefix[j] - self.prefix[i] - np.outer(xv[i], zv[j] - zv[i])

    def table(self) -> TwoParamTable:
        return _bilinear_table(self.prefix, self.x.values, self.z.values)

    def norm(self, p: float) -> float:
        """Entry-wise maximum of the (p/2)-variation."""
        return qvar_max(self.table(), p / 2)


def cross(x: DiscretePath, z: DiscretePath) -> CrossIntegral:
    return CrossIntegral(x, z)


def cross_norm(x: DiscretePath, z: DiscretePath, p: float) -> float:
    if x.dim == 0 or z.dim == 0:
        check_levels(x, z)
        return 0.0
    return CrossIntegral(x, z).norm(p)


class RoughLift:
    """First and second level of a grid path; ``prefix2[j]`` integrates from 0 to t_j."""

    def __init__(self, base: DiscretePath, prefix2: np.ndarray | None = None):
        self.base = base
        if prefix2 is None:
            prefix2 = _prefix_integral(base.values, base.values)
        prefix2 = np.asarray(prefix2, dtype=float)
        if prefix2.shape != (base.n_points, base.dim, base.dim):
            raise ValueError("prefix2 has the wrong shape for this base path")
        prefix2.setflags(write=False)
        self.prefix2 = prefix2

    @property
    def level(self) -> int:
        return self.base.level

    @property
    def dim(self) -> int:
        return self.base.dim

    def level1(self, i: int, j: int) -> np.ndarray:
        if i > j:
            raise ValueError(f"need i <= j, got ({i}, {j})")
        v = self.base.values
        return v[j] - v[i]

    def level2(self, i: int, j: int) -> np.ndarray:
        if i > j:
            raise ValueError(f"need i <= j, got ({i}, {j})")
        v = self.base.values
        return self.prefix2[j] - self.prefix2[i] - np.outer(v[i], v[j] - v[i])

    def level1_table(self) -> TwoParamTable:
        return TwoParamTable.increments(self.base)

    def level2_table(self) -> TwoParamTable:
        v = self.base.values
        return _bilinear_table(self.prefix2, v, v)

    def to_csv_debug(self, path) -> None:
        """Write every pair ``(i, j)`` with both levels; O(n^2) rows."""
        n, d = self.base.n_points, self.dim
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["i", "j"]
                + [f"l1_{k + 1}" for k in range(d)]
                + [f"l2_{k + 1}{l + 1}" for k in range(d) for l in range(d)]
            )
            for i in range(n):
                for j in range(i, n):
                    w.writerow(
                        [i, j]
                        + [repr(float(v)) for v in self.level1(i, j)]
                        + [repr(float(v)) for v in self.level2(i, j).ravel()]
                    )


def lift(w: DiscretePath) -> RoughLift:
    """Smooth rough path of the piecewise-linear interpolant of ``w``."""
    return RoughLift(w)


def subtract(lift_w: RoughLift, h: DiscretePath) -> RoughLift:
    """Lift of ``w - h``, built directly from the difference path."""
    check_levels(lift_w.base, h)
    return RoughLift(lift_w.base - h)


def translation_rhs(w: DiscretePath, h: DiscretePath) -> TwoParamTable:
    """Right-hand side of the translation identity for ``w_2 - h_2``.

    ``(w-h)_2 + C_{w-h,h} - C_{w-h,h}^T + (h_1 (x) (w-h)_1)``, assembled from
    independently built tables so it can be compared with the direct
    difference of the two second levels.
    """
    g = w - h
    c = CrossIntegral(g, h).table()
    return RoughLift(g).level2_table() + c - c.transpose() + outer_increments(h, g)


def rough_distance(a: RoughLift, b: RoughLift, p: float) -> float:
    """``cp`` norm of the difference of two lifts, level by level."""
    check_levels(a.base, b.base)
    l1 = a.level1_table() - b.level1_table()
    l2 = a.level2_table() - b.level2_table()
    return max(qvar_max(l1, p), qvar_max(l2, p / 2))


__all__ = [
    "CrossIntegral",
    "RoughLift",
    "cp_norm",
    "cross",
    "cross_norm",
    "lift",
    "outer_increments",
    "rough_distance",
    "subtract",
    "translation_rhs",
]
