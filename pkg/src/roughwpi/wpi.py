"""Finite-dimensional checks of the weak Poincare and log-Sobolev inequalities.

Two independent pieces live here:

* a finite product space ``Y1 x Y2`` with a subset ``U`` and graph energies on
  each factor, on which the product WPI bound with explicit constants is
  evaluated for a corpus of test functions;
* a finite-difference model of the standard Gaussian restricted to an
  interval, for its spectral gap and the constant-2 log-Sobolev bound.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal
from scipy.sparse.csgraph import connected_components
from scipy.stats import norm

from .paths import RngStream

MAX_FACTOR = 512
VIOLATION_TOL = 1e-9


class DisconnectedSectionError(ValueError):
    pass


class A2Unsatisfiable(ValueError):
    """No admissible subset with positive pairwise overlap within the mass budget."""


@dataclass
class FiniteProductSpace:
    """Weights ``m1, m2``, a boolean table ``U[x, y]`` and symmetric conductances per factor.

    The square field of ``g`` on a section ``S`` of factor 2 at ``y`` is
    ``1/2 * sum_{y' in S} K2[y, y'] (g(y) - g(y'))**2``; edges leaving the
    section are ignored (reflecting boundary). Factor 1 is the same with
    ``K1``.
    """

    m1: np.ndarray
    m2: np.ndarray
    U: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    points1: list = field(default_factory=list)
    points2: list = field(default_factory=list)

    def __post_init__(self):
        self.m1 = np.asarray(self.m1, dtype=float)
        self.m2 = np.asarray(self.m2, dtype=float)
        self.U = np.asarray(self.U, dtype=bool)
        self.K1 = np.asarray(self.K1, dtype=float)
        self.K2 = np.asarray(self.K2, dtype=float)
        n1, n2 = len(self.m1), len(self.m2)
        if not (1 <= n1 <= MAX_FACTOR and 1 <= n2 <= MAX_FACTOR):
            raise ValueError(f"factor sizes must lie in [1, {MAX_FACTOR}]")
        for name, m in (("m1", self.m1), ("m2", self.m2)):
            if np.any(m <= 0) or not math.isclose(m.sum(), 1.0, abs_tol=1e-12):
                raise ValueError(f"{name} must be positive and sum to 1")
        if self.U.shape != (n1, n2):
            raise ValueError("U must have shape (len(m1), len(m2))")
        if not self.U.any():
            raise ValueError("U is empty")
        for name, K, n in (("K1", self.K1, n1), ("K2", self.K2, n2)):
            if K.shape != (n, n) or not np.allclose(K, K.T) or np.any(K < 0):
                raise ValueError(f"{name} must be a symmetric non-negative ({n}, {n}) matrix")
        self.points1 = list(self.points1) or list(range(n1))
        self.points2 = list(self.points2) or list(range(n2))

    @property
    def mass(self) -> float:
        """Product measure of U."""
        return float(self.m1 @ self.U @ self.m2)

    def row_mass(self) -> np.ndarray:
        return self.U @ self.m2

    def col_mass(self) -> np.ndarray:
        return self.m1 @ self.U

    @classmethod
    def from_json(cls, doc) -> "FiniteProductSpace":
        """Load from a dict or JSON string with keys ``m1, m2, U, K1, K2``.

        Conductances may be a dense matrix or an edge list ``[[i, j, c], ...]``;
        ``"path"`` means unit nearest-neighbour conductances.
        """
        if isinstance(doc, str):
            doc = json.loads(doc)
        m1, m2 = doc["m1"], doc["m2"]
        return cls(
            m1=m1,
            m2=m2,
            U=doc["U"],
            K1=_conductances(doc.get("K1", "path"), len(m1)),
            K2=_conductances(doc.get("K2", "path"), len(m2)),
            points1=doc.get("points1", []),
            points2=doc.get("points2", []),
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "m1": self.m1.tolist(),
                "m2": self.m2.tolist(),
                "U": self.U.astype(int).tolist(),
                "K1": self.K1.tolist(),
                "K2": self.K2.tolist(),
                "points1": self.points1,
                "points2": self.points2,
            }
        )


def _conductances(spec, n: int) -> np.ndarray:
    if isinstance(spec, str):
        if spec != "path":
            raise ValueError(f"unknown conductance shorthand {spec!r}")
        return path_conductances(n)
    arr = np.asarray(spec, dtype=float)
    if arr.ndim == 2 and arr.shape == (n, n):
        return arr
    K = np.zeros((n, n))
    for i, j, c in spec:
        K[int(i), int(j)] = K[int(j), int(i)] = float(c)
    return K


def path_conductances(n: int, c: float = 1.0) -> np.ndarray:
    K = np.zeros((n, n))
    idx = np.arange(n - 1)
    K[idx, idx + 1] = K[idx + 1, idx] = c
    return K


def uniform_grid_space(n1: int, n2: int, U) -> FiniteProductSpace:
    """Uniform weights and unit nearest-neighbour conductances on both factors."""
    return FiniteProductSpace(
        np.full(n1, 1 / n1), np.full(n2, 1 / n2), U, path_conductances(n1), path_conductances(n2)
    )


def two_rectangles(n: int = 10, split: tuple[int, int] = (6, 4)) -> FiniteProductSpace:
    """Union of ``[0, s1) x [0, s1)`` and ``[s2, n) x [s2, n)`` on an ``n x n`` grid."""
    s1, s2 = split
    U = np.zeros((n, n), dtype=bool)
    U[:s1, :s1] = True
    U[s2:, s2:] = True
    return uniform_grid_space(n, n, U)


# -- Poincare constants of sections -------------------------------------------


def poincare_constant(m: np.ndarray, K: np.ndarray) -> float:
    """Smallest ``c`` with ``Var_m(g) <= c * sum_y m(y) Gamma(g)(y)`` on a connected graph.

    ``m`` is normalised internally; the constant is the reciprocal of the
    smallest non-zero generalised eigenvalue of the weighted Laplacian
    against ``diag(m)``.
    """
    n = len(m)
    if n == 1:
        return 0.0
    m = np.asarray(m, dtype=float) / np.sum(m)
    # energy = sum over unordered pairs of (m_y + m_y')/2 * K (g_y - g_y')**2
    W = 0.5 * (m[:, None] + m[None, :]) * K
    np.fill_diagonal(W, 0.0)
    L = np.diag(W.sum(axis=1)) - W
    lam = eigh(L, np.diag(m), eigvals_only=True, subset_by_index=[1, 1])[0]
    return 1.0 / lam


def _connected(K: np.ndarray) -> bool:
    if K.shape[0] <= 1:
        return True
    ncomp, _ = connected_components(K > 0, directed=False)
    return ncomp == 1


@dataclass
class SectionConstants:
    """Poincare constants of row sections ``U_x`` and column sections ``U^y`` (nan if empty)."""

    rows: np.ndarray
    cols: np.ndarray


def section_pi_constants(space: FiniteProductSpace) -> SectionConstants:
    n1, n2 = space.U.shape
    rows = np.full(n1, np.nan)
    cols = np.full(n2, np.nan)
    for x in range(n1):
        S = np.flatnonzero(space.U[x])
        if len(S):
            K = space.K2[np.ix_(S, S)]
            if not _connected(K):
                raise DisconnectedSectionError(f"row section U_x at x={space.points1[x]!r} is disconnected")
            rows[x] = poincare_constant(space.m2[S], K)
    for y in range(n2):
        S = np.flatnonzero(space.U[:, y])
        if len(S):
            K = space.K1[np.ix_(S, S)]
            if not _connected(K):
                raise DisconnectedSectionError(f"column section U^y at y={space.points2[y]!r} is disconnected")
            cols[y] = poincare_constant(space.m1[S], K)
    return SectionConstants(rows, cols)


# -- product WPI --------------------------------------------------------------


def overlap_witness(space: FiniteProductSpace, eps: float, floor: float = 0.0):
    """Greedy subset of ``U_1`` with large pairwise section overlaps.

    Starting from all rows with non-empty sections, repeatedly drop an
    endpoint of the worst overlapping pair while the dropped ``m1`` mass stays
    within ``eps``. Returns ``(indices, delta_eps)`` where ``delta_eps`` is the
    minimum of ``m2(U_x & U_x')`` over the kept pairs (``x = x'`` included).
    """
    row_mass = space.row_mass()
    keep = [x for x in range(len(space.m1)) if row_mass[x] > 0]
    Uf = space.U.astype(float)
    O = (Uf * space.m2) @ Uf.T
    budget = eps
    while True:
        sub = O[np.ix_(keep, keep)]
        flat = int(np.argmin(sub))
        i, j = divmod(flat, len(keep))
        delta_eps = float(sub[i, j])
        # try the endpoint with the worse overall overlap first
        order = sorted({i, j}, key=lambda k: (sub[k].min(), space.m1[keep[k]]))
        for k in order:
            if space.m1[keep[k]] <= budget + 1e-15 and len(keep) > 1:
                budget -= space.m1[keep[k]]
                del keep[k]
                break
        else:
            break
    if not delta_eps > 0 or delta_eps < floor:
        raise A2Unsatisfiable(
            f"best pairwise section overlap {delta_eps:.3g} with eps={eps} "
            f"(required > 0 and >= {floor})"
        )
    return keep, delta_eps


def _trimmed_sup(consts: np.ndarray, mass: np.ndarray, eps_prime: float) -> float:
    """Sup of the constants after dropping the worst sections within mass ``eps_prime``."""
    idx = [k for k in np.argsort(-np.nan_to_num(consts, nan=-1.0)) if not np.isnan(consts[k])]
    budget = eps_prime
    while idx and mass[idx[0]] <= budget + 1e-15:
        budget -= mass[idx[0]]
        idx.pop(0)
    return float(consts[idx[0]]) if idx else 0.0


def energy(space: FiniteProductSpace, f: np.ndarray) -> float:
    """``sum_{(x,y) in U} m1 m2 [Gamma_1 + Gamma_2]`` with section-restricted square fields."""
    U = space.U
    fz = np.where(U, f, 0.0)
    total = 0.0
    # factor 2: edges (y, y') within each row section
    ii, jj = np.nonzero(np.triu(space.K2, 1))
    for y, y2 in zip(ii, jj):
        both = U[:, y] & U[:, y2]
        diff2 = (fz[both, y] - fz[both, y2]) ** 2
        # both endpoints of the edge see it with weight 1/2 each
        total += np.sum(space.m1[both] * 0.5 * (space.m2[y] + space.m2[y2]) * space.K2[y, y2] * diff2)
    ii, jj = np.nonzero(np.triu(space.K1, 1))
    for x, x2 in zip(ii, jj):
        both = U[x] & U[x2]
        diff2 = (fz[x, both] - fz[x2, both]) ** 2
        total += np.sum(space.m2[both] * 0.5 * (space.m1[x] + space.m1[x2]) * space.K1[x, x2] * diff2)
    return float(total)


def pair_variance(space: FiniteProductSpace, f: np.ndarray) -> float:
    """``sum over (U x U) of (f(x,y) - f(x',y'))**2`` against the unnormalised product measure."""
    w = np.outer(space.m1, space.m2)[space.U]
    v = f[space.U]
    mu = w.sum()
    return float(2 * (mu * np.sum(w * v * v) - np.sum(w * v) ** 2))


@dataclass
class WpiCertificate:
    eps: float
    eps_prime: float
    delta: float
    xi: float
    delta_eps: float
    U1_eps: list
    mass_U: float
    energy_const: float
    sup_const: float
    n_functions: int
    max_violation: float
    worst_function: str
    verified: bool

    def to_dict(self) -> dict:
        return asdict(self)


def test_function_corpus(space: FiniteProductSpace, n_random: int, rng: RngStream):
    """Random node values in [-1, 1] plus indicator-like and constant functions."""
    g = rng.generator()
    n1, n2 = space.U.shape
    for k in range(n_random):
        yield f"random[{k}]", g.uniform(-1.0, 1.0, size=(n1, n2))
    yield "constant", np.ones((n1, n2))
    for x in range(1, n1):
        f = -np.ones((n1, n2))
        f[:x] = 1.0
        yield f"rows<{x}", f
    for y in range(1, n2):
        f = -np.ones((n1, n2))
        f[:, :y] = 1.0
        yield f"cols<{y}", f
    for x in range(n1):
        f = np.zeros((n1, n2))
        f[x] = 1.0
        yield f"row={x}", f
    for y in range(n2):
        f = np.zeros((n1, n2))
        f[:, y] = 1.0
        yield f"col={y}", f


def verify_product_wpi(
    space: FiniteProductSpace,
    eps: float,
    eps_prime: float,
    delta: float,
    corpus_size: int = 1000,
    rng: RngStream | None = None,
    overlap_floor: float = 0.0,
) -> WpiCertificate:
    """Evaluate both sides of the product WPI bound over a test-function corpus.

    Checks, for every ``f`` in the corpus,

        sum_{UxU} (f - f')**2 <= 18 xi / delta_eps * E(f)
                                 + (8 eps + 36 eps' / delta_eps + 18 delta m(U) / delta_eps) |f|_inf**2
    """
    if min(eps, eps_prime, delta) <= 0:
        raise ValueError("eps, eps_prime and delta must be positive")
    rng = rng or RngStream(0)
    consts = section_pi_constants(space)
    U1_eps, delta_eps = overlap_witness(space, eps, overlap_floor)
    xi = max(
        _trimmed_sup(consts.rows, space.m1, eps_prime),
        _trimmed_sup(consts.cols, space.m2, eps_prime),
    )
    mU = space.mass
    e_const = 18 * xi / delta_eps
    s_const = 8 * eps + 36 * eps_prime / delta_eps + 18 * delta * mU / delta_eps
    worst, worst_name, count = -math.inf, "", 0
    for name, f in test_function_corpus(space, corpus_size, rng):
        sup2 = float(np.max(np.abs(f[space.U]))) ** 2
        viol = pair_variance(space, f) - (e_const * energy(space, f) + s_const * sup2)
        count += 1
        if viol > worst:
            worst, worst_name = viol, name
    return WpiCertificate(
        eps=eps,
        eps_prime=eps_prime,
        delta=delta,
        xi=xi,
        delta_eps=delta_eps,
        U1_eps=[space.points1[x] for x in U1_eps],
        mass_U=mU,
        energy_const=e_const,
        sup_const=s_const,
        n_functions=count,
        max_violation=worst,
        worst_function=worst_name,
        verified=worst <= VIOLATION_TOL,
    )


# -- Gaussian restricted to an interval ----------------------------------------


@dataclass
class GaussianIntervalModel:
    """Cell-centred grid on ``[l, u]`` with normalised Gaussian weights.

    ``weights`` sum to one (the restricted, normalised measure); ``edges``
    are the midpoint conductances so that ``sum edges * diff(f)**2``
    discretises the Dirichlet energy.
    """

    lower: float
    upper: float
    x: np.ndarray
    weights: np.ndarray
    edges: np.ndarray
    mass: float

    @classmethod
    def build(cls, lower: float, upper: float, grid_size: int) -> "GaussianIntervalModel":
        if not lower < upper:
            raise ValueError("need lower < upper")
        if grid_size < 100:
            raise ValueError("grid_size must be at least 100")
        h = (upper - lower) / grid_size
        x = lower + (np.arange(grid_size) + 0.5) * h
        dens = norm.pdf(x) * h
        Z = dens.sum()
        mid = x[:-1] + 0.5 * h
        edges = norm.pdf(mid) / h / Z
        mass = float(norm.cdf(upper) - norm.cdf(lower))
        return cls(lower, upper, x, dens / Z, edges, mass)

    def energy(self, f: np.ndarray) -> float:
        return float(np.sum(self.edges * np.diff(f) ** 2))

    def variance(self, f: np.ndarray) -> float:
        mean = np.sum(self.weights * f)
        return float(np.sum(self.weights * (f - mean) ** 2))

    def entropy(self, f: np.ndarray) -> float:
        """``Ent(f**2) = int f^2 log(f^2 / |f|_2^2)``, with ``0 log 0 = 0``."""
        f2 = f * f
        norm2 = np.sum(self.weights * f2)
        if norm2 == 0:
            return 0.0
        pos = f2 > 0
        return float(np.sum(self.weights[pos] * f2[pos] * np.log(f2[pos] / norm2)))

    def spectral_gap(self) -> float:
        """Smallest non-zero eigenvalue of the reflecting generator."""
        m = self.weights
        e = self.edges
        diag = np.zeros(len(m))
        diag[:-1] += e
        diag[1:] += e
        diag = diag / m
        off = -e / np.sqrt(m[:-1] * m[1:])
        vals = eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(1, 1))
        if not np.all(np.isfinite(vals)):
            raise np.linalg.LinAlgError("eigen-solve did not converge")
        return float(vals[0])


def smooth_corpus(model: GaussianIntervalModel, n: int, rng: RngStream):
    """Random trigonometric sums with decaying coefficients, plus a few exponentials."""
    g = rng.generator()
    s = (model.x - model.lower) / (model.upper - model.lower)
    for k in range(n):
        if k % 10 == 9:
            yield np.exp(g.uniform(-1.5, 1.5) * model.x)
            continue
        K = int(g.integers(1, 9))
        ks = np.arange(1, K + 1)
        a = g.standard_normal(K) / ks**2
        b = g.standard_normal(K) / ks**2
        yield g.standard_normal() + np.cos(np.pi * np.outer(s, ks)) @ a + np.sin(np.pi * np.outer(s, ks)) @ b


@dataclass
class GaussianCheckReport:
    lower: float
    upper: float
    grid_size: int
    mass: float
    lambda1: float
    pi_constant: float
    pi_max_violation: float
    lsi_max_violation: float
    lsi_constant: float
    corpus_size: int
    lsi_ok: bool
    pi_ok: bool

    def to_dict(self) -> dict:
        return asdict(self)


def gaussian_convex_check(
    lower: float,
    upper: float,
    grid_size: int = 2000,
    corpus_size: int = 500,
    rng: RngStream | None = None,
    slack: float = 1e-6,
) -> GaussianCheckReport:
    """Spectral gap, unit-constant PI and constant-2 LSI on the restricted Gaussian."""
    model = GaussianIntervalModel.build(lower, upper, grid_size)
    lam = model.spectral_gap()
    rng = rng or RngStream(0)
    lsi_worst = -math.inf
    pi_worst = -math.inf
    for f in smooth_corpus(model, corpus_size, rng):
        E = model.energy(f)
        lsi_worst = max(lsi_worst, model.entropy(f) - 2 * E)
        # normalised measure: unit Poincare constant
        pi_worst = max(pi_worst, model.variance(f) - E)
    return GaussianCheckReport(
        lower=lower,
        upper=upper,
        grid_size=grid_size,
        mass=model.mass,
        lambda1=lam,
        pi_constant=1 / lam,
        pi_max_violation=pi_worst,
        lsi_max_violation=lsi_worst,
        lsi_constant=2.0,
        corpus_size=corpus_size,
        lsi_ok=lsi_worst <= slack,
        pi_ok=pi_worst <= slack,
    )
