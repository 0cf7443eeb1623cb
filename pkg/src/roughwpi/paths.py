"""Paths on dyadic grids, Brownian sampling and the dyadic polygonal projection."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class LevelMismatchError(ValueError):
    """Two paths (or a path and a lift) live on different dyadic levels."""


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by ``(seed, index)``.

    Streams are derived with :class:`numpy.random.SeedSequence` using
    ``(purpose, index)`` as spawn key, so distinct indices (or purposes) give
    independent PCG64 generators and the same triple always replays the same
    numbers. Gaussian variates come from ``Generator.standard_normal``.
    """

    seed: int
    index: int = 0
    purpose: int = 0

    def __post_init__(self):
        if self.index < 0 or self.purpose < 0:
            raise ValueError("stream index and purpose must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.purpose, self.index))
        return np.random.Generator(np.random.PCG64(ss))


class DiscretePath:
    """A path in R^d sampled on the dyadic grid ``k / 2**level``.

    Values are stored as a read-only ``(2**level + 1, d)`` float array and the
    path always starts at the origin. Between grid points the path is the
    linear interpolant, which makes every grid path a Cameron-Martin element.
    """

    __slots__ = ("_values", "_level")

    def __init__(self, values, level: int | None = None):
        vals = np.array(values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2:
            raise ValueError("path values must be a (n_points, d) array")
        n = vals.shape[0] - 1
        if n < 1 or n & (n - 1):
            raise ValueError(f"number of grid points must be 2**N + 1, got {n + 1}")
        lev = n.bit_length() - 1
        if level is not None and level != lev:
            raise ValueError(f"level {level} inconsistent with {n + 1} grid points")
        if vals.shape[1] and np.any(vals[0] != 0.0):
            raise ValueError("paths must start at the origin")
        vals.setflags(write=False)
        self._values = vals
        self._level = lev

    @classmethod
    def zeros(cls, d: int, level: int) -> "DiscretePath":
        return cls(np.zeros((2**level + 1, d)))

    @classmethod
    def from_function(cls, f, d: int, level: int) -> "DiscretePath":
        """Sample ``f(t) - f(0)`` on the grid; ``f`` maps an array of times to (n, d)."""
        t = grid(level)
        vals = np.asarray(f(t), dtype=float).reshape(len(t), d)
        return cls(vals - vals[0])

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def level(self) -> int:
        return self._level

    @property
    def dim(self) -> int:
        return self._values.shape[1]

    @property
    def n_points(self) -> int:
        return self._values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return grid(self._level)

    def increments(self) -> np.ndarray:
        return np.diff(self._values, axis=0)

    def __add__(self, other: "DiscretePath") -> "DiscretePath":
        check_levels(self, other)
        return DiscretePath(self._values + other._values)

    def __sub__(self, other: "DiscretePath") -> "DiscretePath":
        check_levels(self, other)
        return DiscretePath(self._values - other._values)

    def __mul__(self, c: float) -> "DiscretePath":
        return DiscretePath(self._values * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> "DiscretePath":
        return DiscretePath(-self._values)

    def __eq__(self, other):
        if not isinstance(other, DiscretePath):
            return NotImplemented
        return self._level == other._level and np.array_equal(self._values, other._values)

    def __hash__(self):
        return hash((self._level, self._values.tobytes()))

    def __repr__(self):
        return f"DiscretePath(d={self.dim}, level={self.level})"

    def coordinate(self, i: int) -> "DiscretePath":
        return DiscretePath(self._values[:, i : i + 1])

    def concat(self, other: "DiscretePath") -> "DiscretePath":
        """Stack coordinates: ``self`` first, then ``other``."""
        check_levels(self, other)
        return DiscretePath(np.hstack([self._values, other._values]))

    def refine(self, level: int) -> "DiscretePath":
        """Re-express the same piecewise-linear path on a finer grid."""
        if level < self._level:
            raise ValueError("refine only goes to finer levels")
        t = grid(level)
        s = self.times
        vals = np.column_stack([np.interp(t, s, self._values[:, i]) for i in range(self.dim)])
        return DiscretePath(vals.reshape(len(t), self.dim))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"x{i + 1}" for i in range(self.dim)])
            for t, row in zip(self.times, self._values):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "DiscretePath":
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][0] != "t":
            raise ValueError(f"{path}: expected a header starting with 't'")
        body = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
        if body.ndim != 2 or body.shape[1] < 2:
            raise ValueError(f"{path}: expected columns t,x1,...,xd")
        path_ = cls(body[:, 1:])
        if not np.allclose(body[:, 0], path_.times, rtol=0, atol=1e-12):
            raise ValueError(f"{path}: time column is not the dyadic grid")
        return path_


def grid(level: int) -> np.ndarray:
    return np.arange(2**level + 1) / 2**level


def check_levels(*paths) -> None:
    levels = {p.level for p in paths}
    if len(levels) > 1:
        raise LevelMismatchError(f"paths live on different dyadic levels: {sorted(levels)}")


def sample_brownian(d: int, level: int, rng: RngStream) -> DiscretePath:
    """Standard Brownian motion in R^d on the grid of the given level."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    if level < 0:
        raise ValueError("level must be non-negative")
    n = 2**level
    g = rng.generator()
    incr = g.standard_normal((n, d)) * 2.0 ** (-level / 2)
    vals = np.zeros((n + 1, d))
    np.cumsum(incr, axis=0, out=vals[1:])
    return DiscretePath(vals)


def dyadic_project(w: DiscretePath, n: int) -> DiscretePath:
    """Linear interpolation of ``w`` through the points ``k / 2**n``, kept on w's grid."""
    if n < 0:
        raise ValueError("projection level must be non-negative")
    if n > w.level:
        raise ValueError(f"projection level {n} exceeds path level {w.level}")
    step = 2 ** (w.level - n)
    knots = w.values[::step]
    # position of every fine point inside its coarse segment
    k = np.arange(w.n_points)
    seg = np.minimum(k // step, 2**n - 1)
    frac = (k - seg * step) / step
    vals = knots[seg] + (knots[seg + 1] - knots[seg]) * frac[:, None]
    vals[::step] = knots
    return DiscretePath(vals)


def cm_norm(h: DiscretePath) -> float:
    """Cameron-Martin norm of the piecewise-linear interpolant."""
    inc = h.increments()
    return float(np.sqrt(np.sum(inc * inc) * 2**h.level))


def length(h: DiscretePath) -> float:
    """Total Euclidean length, i.e. the integral of |h'|."""
    return float(np.sum(np.linalg.norm(h.increments(), axis=1)))
