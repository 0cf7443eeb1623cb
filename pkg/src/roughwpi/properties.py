"""Randomised checks of the exact identities and inequalities of the toolkit.

Each check draws case ``t`` from ``RngStream(seed, t, purpose)`` and returns
a :class:`CheckResult`; the CLI ``property-suite`` and the test-suite both
call these with their own sizes.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np

from .domains import in_B, in_O
from .experiments import map_trials
from .lift import CrossIntegral, lift, outer_increments
from .paths import DiscretePath, RngStream, cm_norm, length, sample_brownian
from .variation import (
    TwoParamTable,
    VarParams,
    dyadic_constant,
    dyadic_norm,
    level1_norm,
    qvar,
    qvar_bruteforce,
    qvar_max,
)

_CHEN, _ORACLE, _INEQ, _DYADIC, _INCLUSION = range(10, 15)


@dataclass
class CheckResult:
    name: str
    cases: int
    violations: int
    worst: float
    tolerance: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def random_grid_path(g: np.random.Generator, d: int, level: int) -> DiscretePath:
    """Brownian-like path at a random scale, sometimes with a smooth drift added."""
    n = 2**level
    inc = g.standard_normal((n, d)) * 2.0 ** (-level / 2) * 10 ** g.uniform(-1, 1)
    vals = np.vstack([np.zeros((1, d)), np.cumsum(inc, axis=0)])
    if g.random() < 0.3:
        t = np.linspace(0, 1, n + 1)[:, None]
        vals += np.sin(np.pi * g.integers(1, 5) * t) * g.standard_normal(d)
    return DiscretePath(vals, level)


# -- Chen relation ------------------------------------------------------------


def _chen_case(t, seed, max_dim, max_level, triples):
    g = RngStream(seed, t, _CHEN).generator()
    d = int(g.integers(1, max_dim + 1))
    N = int(g.integers(0, max_level + 1))
    L = lift(random_grid_path(g, d, N))
    n = 2**N
    worst = 0.0
    for _ in range(triples):
        s, m, u = np.sort(g.integers(0, n + 1, size=3))
        res = L.level2(s, u) - L.level2(s, m) - L.level2(m, u) - np.outer(L.level1(s, m), L.level1(m, u))
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


def chen_check(lifts=100, seed=0, max_dim=3, max_level=10, triples=200, tol=1e-10, workers=1):
    res = map_trials(
        partial(_chen_case, seed=seed, max_dim=max_dim, max_level=max_level, triples=triples),
        lifts, workers,
    )
    return CheckResult("chen", lifts, int(sum(r >= tol for r in res)), float(max(res)), tol)


# -- DP against exhaustive enumeration ----------------------------------------


def random_table(g: np.random.Generator, level: int) -> TwoParamTable:
    """Scalar bilinear table with zero diagonal and random rank 0, 1 or 2."""
    n = 2**level + 1
    R = int(g.integers(0, 3))
    a = g.standard_normal((1, n))
    b = g.standard_normal((1, R, n))
    c = g.standard_normal((1, R, n))
    d = a - np.einsum("krn,krn->kn", b, c)
    return TwoParamTable(a, d, b, c, level=level)


def _oracle_case(t, seed, q):
    g = RngStream(seed, t, _ORACLE).generator()
    eta = random_table(g, int(g.integers(0, 4)))
    return abs(qvar(eta, q) - qvar_bruteforce(eta.dense()[..., 0], q))


def qvar_oracle_check(cases=200, qs=(1.25, 2.5), seed=0, tol=1e-12, workers=1):
    diffs = []
    for k, q in enumerate(qs):
        diffs += map_trials(partial(_oracle_case, seed=seed + k, q=q), cases, workers)
    return CheckResult("qvar_oracle", len(diffs), int(sum(x > tol for x in diffs)), float(max(diffs)), tol)


# -- inequalities for cross integrals and products ----------------------------


def _inequality_case(t, seed, level, d, m, p):
    g = RngStream(seed, t, _INEQ).generator()
    h1 = random_grid_path(g, d, level)
    h2 = random_grid_path(g, m, level)
    n1, n2 = level1_norm(lift(h1), p), level1_norm(lift(h2), p)
    c12 = CrossIntegral(h1, h2).norm(p)
    # each entry is lhs - rhs; positive means violated
    return {
        "cross_by_energy": c12 - n1 * cm_norm(h2),
        "cross_by_energy_and_var": c12 - (cm_norm(h1) + n1) * n2,
        "outer_product": qvar_max(outer_increments(h1, h2), p / 2) - n1 * n2,
        "pvar_by_length": n1 - length(h1),
    }


def inequality_suite(pairs=1000, level=6, d=2, m=2, p=2.5, seed=0, tol=1e-9, workers=1):
    """One :class:`CheckResult` per inequality over the same random pairs."""
    rows = map_trials(partial(_inequality_case, seed=seed, level=level, d=d, m=m, p=p), pairs, workers)
    out = []
    for key in rows[0]:
        gaps = np.array([r[key] for r in rows])
        out.append(CheckResult(key, pairs, int(np.sum(gaps > tol)), float(gaps.max()), tol))
    return out


# -- dyadic norm against the energy -------------------------------------------


def _dyadic_case(t, seed, params, max_level):
    g = RngStream(seed, t, _DYADIC).generator()
    h = random_grid_path(g, int(g.integers(1, 4)), int(g.integers(1, max_level + 1)))
    return dyadic_norm(h, params), cm_norm(h)


def dyadic_domination_check(n=1000, params=VarParams(), seed=0, max_level=10, tol=1e-9, workers=1):
    C = dyadic_constant(params)
    rows = map_trials(partial(_dyadic_case, seed=seed, params=params, max_level=max_level), n, workers)
    gaps = np.array([dn - C * cm * (1 + tol) for dn, cm in rows])
    ratio = max(dn / cm for dn, cm in rows if cm > 0)
    return CheckResult(
        "dyadic_domination", n, int(np.sum(gaps > 0)), float(gaps.max()), tol,
        {"constant": C, "max_ratio": float(ratio)},
    )


# -- small-ball inclusion -----------------------------------------------------


def _inclusion_case(t, seed, level, d, p):
    g = RngStream(seed, t, _INCLUSION).generator()
    h = random_grid_path(g, d, level)
    w = h + sample_brownian(d, level, RngStream(seed, t, _INCLUSION + 100)) * 10 ** g.uniform(-2.5, -0.5)
    eps = 10 ** g.uniform(-1.5, 0.5)
    r = eps / (3 + level1_norm(lift(h), p))
    premise = in_B(w, h, r, p)
    return premise, premise and not in_O(w, h, eps, p)


def inclusion_check(n=10_000, level=6, d=2, p=2.5, seed=0, workers=1):
    rows = map_trials(partial(_inclusion_case, seed=seed, level=level, d=d, p=p), n, workers, chunksize=64)
    premises = int(sum(r[0] for r in rows))
    bad = int(sum(r[1] for r in rows))
    return CheckResult("ball_inclusion", n, bad, float(bad), 0.0, {"premise_held": premises})


def run_suite(scale: float = 1.0, seed: int = 0, workers: int = 1) -> list[CheckResult]:
    """All checks; ``scale`` multiplies the default case counts."""
    k = lambda n: max(1, int(round(n * scale)))  # noqa: E731
    return [
        chen_check(k(100), seed, workers=workers),
        qvar_oracle_check(k(200), seed=seed, workers=workers),
        *inequality_suite(k(1000), seed=seed, workers=workers),
        dyadic_domination_check(k(1000), seed=seed, workers=workers),
        inclusion_check(k(10_000), seed=seed, workers=workers),
    ]


__all__ = [
    "CheckResult",
    "chen_check",
    "dyadic_domination_check",
    "inclusion_check",
    "inequality_suite",
    "qvar_oracle_check",
    "random_grid_path",
    "random_table",
    "run_suite",
]
