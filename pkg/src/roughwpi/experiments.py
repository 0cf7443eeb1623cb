"""Seeded Monte Carlo studies on Wiener space.

Trial ``t`` of every study draws its randomness from ``RngStream(seed, t,
purpose)``, so results are independent of how trials are spread over worker
processes; aggregation only sums per-trial values in trial order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np
from scipy.stats import norm

from .domains import DomainSpec, in_section, in_U
from .lift import CrossIntegral, cross_norm, lift, rough_distance
from .paths import DiscretePath, RngStream, dyadic_project, sample_brownian
from .variation import VarParams, dyadic_norm, level2_norm, pvar_path

DEFAULT_PARAMS = VarParams(p=2.5, kappa=2.0)
DEFAULT_LEVEL = 8
Z99 = float(norm.ppf(0.995))

# purposes for RngStream; one per family of independent samples
_MEASURE, _CONVERGENCE, _CROSS, _COND, _PREFIX, _OVERLAP = range(6)


class RareEventError(RuntimeError):
    """The conditioning event of a rejection sampler is too rare to sample."""


def wilson_interval(hits: int, trials: int, z: float = Z99) -> tuple[float, float]:
    if trials < 1:
        raise ValueError("need at least one trial")
    phat = hits / trials
    z2 = z * z
    denom = 1 + z2 / trials
    centre = (phat + z2 / (2 * trials)) / denom
    half = z / denom * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials**2))
    lo = 0.0 if hits == 0 else max(0.0, min(centre - half, phat))
    hi = 1.0 if hits == trials else min(1.0, max(centre + half, phat))
    return lo, hi


@dataclass
class EstimateReport:
    trials: int
    hits: int
    estimate: float
    ci_low: float
    ci_high: float
    seed: int
    spec: dict = field(default_factory=dict)

    @classmethod
    def from_counts(cls, hits: int, trials: int, seed: int, spec: dict | None = None):
        if not 0 <= hits <= trials:
            raise ValueError("hits must lie in [0, trials]")
        lo, hi = wilson_interval(hits, trials)
        return cls(trials, hits, hits / trials, lo, hi, seed, dict(spec or {}))

    @property
    def std_error(self) -> float:
        p = self.estimate
        return math.sqrt(p * (1 - p) / self.trials)

    def to_dict(self) -> dict:
        return asdict(self)


def map_trials(fn, n: int, workers: int = 1, chunksize: int = 16) -> list:
    """``[fn(t) for t in range(n)]``, optionally over a process pool; order is kept."""
    if workers <= 1 or n < 2:
        return [fn(t) for t in range(n)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n), chunksize=chunksize))


def _membership_trial(t: int, spec: DomainSpec, level: int, seed: int) -> bool:
    paths = [
        sample_brownian(d, level, RngStream(seed, t, _MEASURE * 8 + k))
        for k, d in enumerate(spec.sample_dims())
    ]
    return spec.contains(*paths)


def estimate_measure(
    spec: DomainSpec, trials: int, N: int = DEFAULT_LEVEL, seed: int = 42, workers: int = 1
) -> EstimateReport:
    """Wiener measure of a domain by direct sampling at grid level ``N``."""
    if trials < 1:
        raise ValueError("trials must be positive")
    if spec.ref is not None and spec.ref.level != N:
        raise ValueError(f"reference path has level {spec.ref.level}, sampling at level {N}")
    hits = map_trials(partial(_membership_trial, spec=spec, level=N, seed=seed), trials, workers)
    return EstimateReport.from_counts(int(sum(hits)), trials, seed, {**spec.echo(), "N": N})


# -- convergence of dyadic approximations ------------------------------------

QUANTITIES = ("lift_distance", "level2_remainder", "cross_remainder")


def remainder_quantities(w: DiscretePath, n: int, p: float, lift_distance: bool = True) -> dict:
    """Distances between ``w`` and its level-``n`` polygonal approximation.

    ``lift_distance`` is the rough distance between the two lifts,
    ``level2_remainder`` the (p/2)-variation of the second level of
    ``w - P_n w``, ``cross_remainder`` that of ``C_{w - P_n w, P_n w}``.
    """
    pw = dyadic_project(w, n)
    g = w - pw
    out = {
        "level2_remainder": level2_norm(lift(g), p),
        "cross_remainder": CrossIntegral(g, pw).norm(p),
    }
    out["lift_distance"] = rough_distance(lift(pw), lift(w), p) if lift_distance else math.nan
    return out


def _convergence_trial(t, N, n_list, d, p, seed, lift_distance):
    w = sample_brownian(d, N, RngStream(seed, t, _CONVERGENCE))
    return [remainder_quantities(w, n, p, lift_distance) for n in n_list]


@dataclass
class ConvergenceTable:
    """Per-level sample statistics and a least-squares fit of log2(mean) against n."""

    N: int
    n_list: list
    trials: int
    means: dict
    stds: dict
    slopes: dict
    residuals: dict
    seed: int
    params: dict

    def rows(self):
        for k, n in enumerate(self.n_list):
            for q in self.means:
                yield {
                    "quantity": q,
                    "n": n,
                    "mean": self.means[q][k],
                    "std": self.stds[q][k],
                    "trials": self.trials,
                }

    def non_increasing(self, quantity: str, from_n: int) -> bool:
        m = [v for n, v in zip(self.n_list, self.means[quantity]) if n >= from_n]
        return all(b <= a for a, b in zip(m, m[1:]))


def fit_log2_slope(ns, means) -> tuple[float, float]:
    """Slope and residual sum of squares of ``log2(mean) ~ slope * n + c``."""
    x = np.asarray(ns, dtype=float)
    y = np.log2(np.asarray(means, dtype=float))
    if len(x) < 2:
        return math.nan, math.nan
    A = np.column_stack([x, np.ones_like(x)])
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    rss = float(res[0]) if len(res) else float(np.sum((A @ coef - y) ** 2))
    return float(coef[0]), rss


def convergence_study(
    N: int,
    n_list,
    trials: int,
    params: VarParams = DEFAULT_PARAMS,
    seed: int = 42,
    d: int = 2,
    workers: int = 1,
    lift_distance: bool = True,
) -> ConvergenceTable:
    n_list = sorted(int(n) for n in n_list)
    if not n_list:
        raise ValueError("n_list is empty")
    if n_list[0] < 0 or n_list[-1] >= N:
        raise ValueError(f"projection levels must lie in [0, N) = [0, {N})")
    if len(set(n_list)) != len(n_list):
        raise ValueError("projection levels must be distinct")
    if trials < 1:
        raise ValueError("trials must be positive")
    fn = partial(
        _convergence_trial, N=N, n_list=n_list, d=d, p=params.p, seed=seed,
        lift_distance=lift_distance,
    )
    per_trial = map_trials(fn, trials, workers, chunksize=4)
    quantities = QUANTITIES if lift_distance else QUANTITIES[1:]
    means, stds, slopes, resid = {}, {}, {}, {}
    for q in quantities:
        arr = np.array([[row[q] for row in trial] for trial in per_trial])
        means[q] = arr.mean(axis=0).tolist()
        stds[q] = (arr.std(axis=0, ddof=1) if trials > 1 else np.zeros(len(n_list))).tolist()
        slopes[q], resid[q] = fit_log2_slope(n_list, means[q])
    return ConvergenceTable(
        N, n_list, trials, means, stds, slopes, resid, seed,
        {"p": params.p, "kappa": params.kappa, "d": d},
    )


# -- cross-integral bound -----------------------------------------------------


@dataclass
class CrossBoundReport:
    scales: list
    ratios: list
    mean_power: list
    dyadic_norms: list
    trials: int
    seed: int

    @property
    def spread(self) -> float:
        """Largest relative deviation of the ratios from their mean."""
        r = np.asarray(self.ratios)
        return float(np.max(np.abs(r - r.mean())) / r.mean())


def _cross_trial(t, z, d, p, seed):
    w = sample_brownian(d, z.level, RngStream(seed, t, _CROSS))
    return cross_norm(w, z, p)


def cross_bound_study(
    z: DiscretePath,
    trials: int,
    params: VarParams = DEFAULT_PARAMS,
    seed: int = 42,
    scales=(1.0, 2.0, 4.0),
    d: int = 1,
    workers: int = 1,
) -> CrossBoundReport:
    """Mean of ``|C_{w,cz}|^{p/2}`` over ``|cz|_{p,kappa}^{p/2}`` for several scalings ``c``.

    The same Brownian draws serve every scaling.
    """
    p = params.p
    dn = dyadic_norm(z, params)
    if not dn > 0:
        raise ValueError("reference path must have a positive dyadic norm")
    if trials < 1:
        raise ValueError("trials must be positive")
    ratios, powers, dns = [], [], []
    for c in scales:
        zc = z * c
        vals = map_trials(partial(_cross_trial, z=zc, d=d, p=p, seed=seed), trials, workers)
        mp = float(np.mean(np.asarray(vals) ** (p / 2)))
        dnc = dyadic_norm(zc, params)
        powers.append(mp)
        dns.append(dnc)
        ratios.append(mp / dnc ** (p / 2))
    return CrossBoundReport(list(map(float, scales)), ratios, powers, dns, trials, seed)


# -- conditional overlap structure --------------------------------------------


@dataclass
class OverlapReport:
    alpha: EstimateReport
    alpha_tilde: EstimateReport
    acceptance_rate: float
    conditional_samples: int
    tail: EstimateReport
    tail_bound: float
    prefixes_tested: int
    prefixes_in_V: int
    v_fraction: float
    section_probs: list
    pairs: int
    min_overlap: float
    overlap_se: float
    benchmark: float
    params: dict

    @property
    def tail_holds(self) -> bool:
        return self.tail.estimate <= self.tail_bound

    @property
    def overlap_ok(self) -> bool:
        if self.pairs == 0:
            return True
        se = math.hypot(self.overlap_se, self.alpha_tilde.std_error / 3)
        return self.min_overlap >= self.benchmark - 3 * se

    def to_dict(self) -> dict:
        out = asdict(self)
        out["tail_holds"] = self.tail_holds
        out["overlap_ok"] = self.overlap_ok
        return out


def _conditioning_event(v: DiscretePath, z, eps, a, params) -> bool:
    if not dyadic_norm(v, params) < eps:
        return False
    if z is None:
        return True
    return cross_norm(v, z, params.p) < a and cross_norm(z, v, params.p) < a


def _section_row(t, prefixes, z, a, p, N, seed):
    v = sample_brownian(1, N, RngStream(seed, t, _OVERLAP))
    return [in_section(v, w1, z, a, p) for w1 in prefixes]


def overlap_study(
    z: DiscretePath | None,
    a: float,
    epsilon: float,
    r: float,
    N: int = DEFAULT_LEVEL,
    trials: int = 2000,
    params: VarParams = DEFAULT_PARAMS,
    seed: int = 42,
    d: int = 1,
    n_prefix: int = 40,
    n_cond: int = 400,
    n_overlap: int = 2000,
    max_pairs: int = 200,
    acceptance_floor: float = 1e-4,
    workers: int = 1,
) -> OverlapReport:
    """Monte Carlo picture of the conditional section-overlap argument.

    ``z`` is the fixed reference (``None`` for the zero path), ``d`` the
    dimension of the prefix ``w'``; the section variable is one-dimensional.
    """
    if not 0 < r < 1 / 3:
        raise ValueError(f"r must lie in (0, 1/3), got {r}")
    if a <= 0 or epsilon <= 0:
        raise ValueError("a and epsilon must be positive")
    if z is not None and z.level != N:
        raise ValueError(f"reference path has level {z.level}, sampling at level {N}")
    p = params.p

    # (i)+(ii): the conditioning event on the last coordinate, by rejection
    pool, hits = [], 0
    for t in range(trials):
        v = sample_brownian(1, N, RngStream(seed, t, _COND))
        if _conditioning_event(v, z, epsilon, a, params):
            hits += 1
            pool.append(v)
    rate = hits / trials
    if rate < acceptance_floor or not pool:
        raise RareEventError(
            f"conditioning event accepted {hits}/{trials} draws (< {acceptance_floor}); "
            "increase epsilon or a"
        )
    alpha_tilde = EstimateReport.from_counts(hits, trials, seed, {"event": "conditioning"})

    prefixes, in_alpha = [], []
    for t in range(trials):
        w1 = sample_brownian(d, N, RngStream(seed, t, _PREFIX))
        prefixes.append(w1)
        in_alpha.append(in_U(w1, z, a, p))
    alpha = EstimateReport.from_counts(int(sum(in_alpha)), trials, seed, {"event": "prefix"})

    # (iii) tail of the cross norms between an unconditioned prefix and a conditioned last path
    tail_hits = 0
    for t, w1 in enumerate(prefixes):
        v = pool[t % len(pool)]
        big = max(cross_norm(w1, v, p), cross_norm(v, w1, p))
        tail_hits += big >= a
    tail = EstimateReport.from_counts(tail_hits, trials, seed, {"event": "tail"})
    tail_bound = (alpha.estimate * r) ** 2

    # (iv) prefixes whose section carries most of the conditional mass, then pairwise overlaps
    cond = pool[:n_cond]
    chosen = [w1 for w1, ok in zip(prefixes, in_alpha) if ok][:n_prefix]
    probs = [float(np.mean([in_section(v, w1, z, a, p) for v in cond])) for w1 in chosen]
    V = [w1 for w1, s in zip(chosen, probs) if s >= 1 - r * alpha.estimate]
    min_overlap, overlap_se, npairs = math.nan, 0.0, 0
    if len(V) >= 2:
        fn = partial(_section_row, prefixes=V, z=z, a=a, p=p, N=N, seed=seed)
        member = np.array(map_trials(fn, n_overlap, workers), dtype=bool)
        joint = (member.T.astype(float) @ member.astype(float)) / n_overlap
        iu = np.triu_indices(len(V), k=1)
        vals = joint[iu][:max_pairs]
        npairs = len(vals)
        min_overlap = float(vals.min())
        overlap_se = math.sqrt(max(min_overlap * (1 - min_overlap), 0.0) / n_overlap)
    return OverlapReport(
        alpha=alpha,
        alpha_tilde=alpha_tilde,
        acceptance_rate=rate,
        conditional_samples=len(pool),
        tail=tail,
        tail_bound=tail_bound,
        prefixes_tested=len(chosen),
        prefixes_in_V=len(V),
        v_fraction=len(V) / len(chosen) if chosen else math.nan,
        section_probs=probs,
        pairs=npairs,
        min_overlap=min_overlap,
        overlap_se=overlap_se,
        benchmark=alpha_tilde.estimate / 3,
        params={
            "a": a, "epsilon": epsilon, "r": r, "N": N, "trials": trials, "d": d,
            "p": params.p, "kappa": params.kappa, "seed": seed,
            "z": "zero" if z is None else f"dim={z.dim}",
        },
    )
