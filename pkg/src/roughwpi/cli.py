"""Command-line front end.

Every study writes ``<out>/<command>.csv`` and ``<out>/<command>.json``. The
JSON summary carries ``schema_version``, the resolved configuration, the
study result, and the named in-run checks. Exit codes: 0 when every check
holds, 2 when one fails, 1 on usage or input errors.

The recorded configuration leaves out ``--workers``, ``--out`` and
``--force``: they do not change results, and leaving them out keeps the
outputs byte-identical across worker counts.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

from . import properties
from .domains import KINDS, DomainSpec
from .experiments import (
    RareEventError,
    convergence_study,
    cross_bound_study,
    estimate_measure,
    overlap_study,
)
from .lift import lift
from .paths import DiscretePath, LevelMismatchError, RngStream
from .variation import VarParams, cp_norm, dyadic_norm, level1_norm, level2_norm, pvar_path
from .wpi import (
    A2Unsatisfiable,
    DisconnectedSectionError,
    FiniteProductSpace,
    gaussian_convex_check,
    two_rectangles,
    verify_product_wpi,
)

SCHEMA_VERSION = 1
DEFAULT_SEED = 42
CI_ENV = "ROUGHWPI_CI"

KIND_ALIASES = {"U": "U_az", "B": "B_ah", "O": "O_ah", "Uab": "U_ab", "section": "SectionW"}
NOT_CONFIG = {"workers", "out", "force", "ci", "func", "command"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- argument helpers ---------------------------------------------------------


def level_list(text: str) -> list[int]:
    """``"2..10"`` (inclusive) or ``"2,4,6"``."""
    try:
        if ".." in text:
            lo, hi = (int(s) for s in text.split(".."))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo..hi' or a comma list of integers, got {text!r}")


def float_list(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list of numbers, got {text!r}")


def triple_list(text: str) -> list[tuple[float, float, float]]:
    out = []
    for chunk in text.split(";"):
        vals = float_list(chunk)
        if len(vals) != 3:
            raise argparse.ArgumentTypeError(f"each triple needs eps,eps_prime,delta; got {chunk!r}")
        out.append(tuple(vals))
    return out


def read_path(name: str | None) -> DiscretePath | None:
    """CSV path file, or ``None`` for the literal ``zero``."""
    if name is None or name == "zero":
        return None
    try:
        return DiscretePath.from_csv(name)
    except FileNotFoundError:
        raise ValueError(f"path file not found: {name}")
    except ValueError as exc:
        msg = str(exc)
        raise ValueError(msg if msg.startswith(name) else f"{name}: malformed path CSV ({msg})")


def need_path(name: str | None, flag: str) -> DiscretePath:
    path = read_path(name)
    if path is None:
        raise ValueError(f"{flag} needs a CSV file")
    return path


def params_of(args) -> VarParams:
    return VarParams(args.p, args.kappa)


# -- output -------------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, float):
        return None if math.isnan(obj) else obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def _cell(v):
    if isinstance(v, float) or hasattr(v, "dtype"):
        return repr(float(v))
    return str(v)


def config_of(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in NOT_CONFIG}


class Output:
    """Write-once CSV + JSON pair for one command."""

    def __init__(self, args):
        self.dir = Path(args.out)
        self.stem = args.command
        self.force = args.force
        self.csv_path = self.dir / f"{self.stem}.csv"
        self.json_path = self.dir / f"{self.stem}.json"
        if not self.force:
            for f in (self.csv_path, self.json_path):
                if f.exists():
                    raise FileExistsError(f"{f} exists; pass --force to overwrite")

    def write(self, args, header, rows, result, checks) -> bool:
        self.dir.mkdir(parents=True, exist_ok=True)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(row[h]) for h in header])
        passed = all(checks.values())
        summary = {
            "schema_version": SCHEMA_VERSION,
            "command": args.command,
            "config": config_of(args),
            "result": result,
            "checks": checks,
            "passed": passed,
        }
        self.csv_path.write_text(buf.getvalue())
        self.json_path.write_text(json.dumps(_clean(summary), indent=2, sort_keys=True) + "\n")
        status = "PASS" if passed else "FAIL"
        failed = [k for k, v in checks.items() if not v]
        print(f"{status} {args.command}: wrote {self.csv_path} and {self.json_path}"
              + (f"; failed checks: {', '.join(failed)}" if failed else ""))
        return passed


def emit_single(args, payload: dict, text: str) -> int:
    """Print ``text``; with ``--out`` also store the JSON payload."""
    print(text)
    if args.out is not None:
        out = Path(args.out) / f"{args.command}.json"
        if out.exists() and not args.force:
            raise FileExistsError(f"{out} exists; pass --force to overwrite")
        out.parent.mkdir(parents=True, exist_ok=True)
        doc = {"schema_version": SCHEMA_VERSION, "command": args.command,
               "config": config_of(args), "result": payload}
        out.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")
    return 0


# -- commands -----------------------------------------------------------------


def cmd_lift(args) -> int:
    p = params_of(args).p
    w = need_path(args.path, "--path")
    L = lift(w)
    n = w.n_points - 1
    payload = {
        "level": w.level,
        "dim": w.dim,
        "level1": L.level1(0, n).tolist(),
        "level2": L.level2(0, n).tolist(),
        "level1_norm": level1_norm(L, p),
        "level2_norm": level2_norm(L, p),
        "cp_norm": cp_norm(L, p),
    }
    if args.table is not None:
        if Path(args.table).exists() and not args.force:
            raise FileExistsError(f"{args.table} exists; pass --force to overwrite")
        L.to_csv_debug(args.table)
    return emit_single(args, payload, json.dumps(_clean(payload)))


def cmd_pvar(args) -> int:
    v = pvar_path(need_path(args.path, "--path"), params_of(args).p)
    return emit_single(args, {"pvar": v}, repr(float(v)))


def cmd_dyadic_norm(args) -> int:
    v = dyadic_norm(need_path(args.path, "--path"), params_of(args))
    return emit_single(args, {"dyadic_norm": v}, repr(float(v)))


def _spec_from_args(args) -> DomainSpec:
    if args.spec is not None:
        try:
            text = Path(args.spec).read_text()
        except FileNotFoundError:
            raise ValueError(f"domain spec file not found: {args.spec}")
        return DomainSpec.from_text(text, Path(args.spec).parent)
    if args.kind is None or args.a is None:
        raise ValueError("give --spec FILE or both --kind and --a")
    kind = KIND_ALIASES.get(args.kind, args.kind)
    ref_name = args.ref
    ref = read_path(ref_name)
    return DomainSpec(
        kind=kind, a=args.a, b=args.b, ref=ref, params=params_of(args),
        dim=args.dim, ref_file=None if ref is None else ref_name,
    )


def cmd_membership(args) -> int:
    spec = _spec_from_args(args)
    paths = [need_path(args.path, "--path")]
    if spec.kind == "U_ab":
        paths.append(need_path(args.path2, "--path2"))
    inside = spec.contains(*paths)
    return emit_single(args, {"member": inside, "spec": spec.echo()}, "true" if inside else "false")


def cmd_estimate(args) -> int:
    spec = _spec_from_args(args)
    out = Output(args)
    rep = estimate_measure(spec, args.trials, args.N, args.seed, args.workers)
    row = {k: v for k, v in rep.to_dict().items() if k != "spec"}
    checks = {"interval_contains_estimate": rep.ci_low <= rep.estimate <= rep.ci_high}
    if args.require_positive:
        checks["ci_low_positive"] = rep.ci_low > 0
    ok = out.write(args, list(row), [row], rep.to_dict(), checks)
    return 0 if ok else 2


def cmd_convergence(args) -> int:
    out = Output(args)
    tab = convergence_study(
        args.N, args.n, args.trials, params_of(args), args.seed, args.d, args.workers,
        lift_distance=not args.no_lift_distance,
    )
    checks = {}
    for q in tab.means:
        checks[f"{q}_non_increasing_from_{args.check_from}"] = tab.non_increasing(q, args.check_from)
        checks[f"{q}_slope_below_{args.max_slope}"] = tab.slopes[q] <= args.max_slope
    result = {
        "means": tab.means, "stds": tab.stds, "slopes": tab.slopes,
        "residuals": tab.residuals, "n_list": tab.n_list,
    }
    header = ["quantity", "n", "mean", "std", "trials"]
    ok = out.write(args, header, list(tab.rows()), result, checks)
    return 0 if ok else 2


def _reference_for(args, level: int) -> DiscretePath:
    if args.z == "line":
        return DiscretePath.from_function(lambda t: t, args.d_ref, level)
    ref = read_path(args.z)
    if ref is None:
        raise ValueError("--z must be a CSV file or 'line'; the zero path has no cross moment to compare")
    return ref


def cmd_cross_bound(args) -> int:
    out = Output(args)
    z = _reference_for(args, args.N)
    rep = cross_bound_study(z, args.trials, params_of(args), args.seed, args.scales, args.d, args.workers)
    rows = [
        {"scale": s, "dyadic_norm": dn, "mean_power": mp, "ratio": r}
        for s, dn, mp, r in zip(rep.scales, rep.dyadic_norms, rep.mean_power, rep.ratios)
    ]
    checks = {"ratio_spread_within_tol": rep.spread <= args.spread_tol}
    result = {"ratios": rep.ratios, "spread": rep.spread}
    ok = out.write(args, ["scale", "dyadic_norm", "mean_power", "ratio"], rows, result, checks)
    return 0 if ok else 2


def cmd_overlap(args) -> int:
    out = Output(args)
    z = read_path(args.z)
    rep = overlap_study(
        z, args.a, args.epsilon, args.r, args.N, args.trials, params_of(args), args.seed, args.d,
        n_prefix=args.n_prefix, n_cond=args.n_cond, n_overlap=args.n_overlap, workers=args.workers,
    )
    rows = [{"prefix": k, "section_prob": s} for k, s in enumerate(rep.section_probs)]
    checks = {"tail_bound_holds": rep.tail_holds, "overlap_above_benchmark": rep.overlap_ok}
    ok = out.write(args, ["prefix", "section_prob"], rows, rep.to_dict(), checks)
    return 0 if ok else 2


def cmd_wpi_toy(args) -> int:
    out = Output(args)
    if args.space is not None:
        try:
            space = FiniteProductSpace.from_json(Path(args.space).read_text())
        except FileNotFoundError:
            raise ValueError(f"space file not found: {args.space}")
        except (KeyError, json.JSONDecodeError) as exc:
            raise ValueError(f"{args.space}: malformed space document ({exc})")
    else:
        space = two_rectangles()
    certs = [
        verify_product_wpi(space, e, ep, dl, args.corpus, RngStream(args.seed, k), args.overlap_floor)
        for k, (e, ep, dl) in enumerate(args.triples)
    ]
    header = ["eps", "eps_prime", "delta", "xi", "delta_eps", "energy_const", "sup_const",
              "n_functions", "max_violation", "worst_function", "verified"]
    rows = [c.to_dict() for c in certs]
    checks = {f"triple_{k}_verified": c.verified for k, c in enumerate(certs)}
    ok = out.write(args, header, rows, {"certificates": rows}, checks)
    return 0 if ok else 2


def cmd_gaussian_gap(args) -> int:
    out = Output(args)
    rep = gaussian_convex_check(args.lower, args.upper, args.grid, args.corpus, RngStream(args.seed))
    row = rep.to_dict()
    checks = {
        "gap_at_least_min": rep.lambda1 >= args.min_gap,
        "poincare_holds": rep.pi_ok,
        "log_sobolev_holds": rep.lsi_ok,
    }
    ok = out.write(args, list(row), [row], row, checks)
    return 0 if ok else 2


def cmd_property_suite(args) -> int:
    out = Output(args)
    results = properties.run_suite(args.scale, args.seed, args.workers)
    rows = [r.to_dict() for r in results]
    header = ["name", "cases", "violations", "worst", "tolerance", "passed"]
    checks = {r.name: r.passed for r in results}
    ok = out.write(args, header, rows, {"checks": rows}, checks)
    return 0 if ok else 2


# -- parser -------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, study: bool):
    p.add_argument("--p", type=float, default=2.5, help="variation exponent, 2 < p < 3")
    p.add_argument("--kappa", type=float, default=2.0, help="dyadic weight exponent, > p - 1")
    if study:
        p.add_argument("--seed", type=int, default=None, help=f"master seed (default {DEFAULT_SEED})")
        p.add_argument("--workers", type=int, default=1, help="worker processes; results do not depend on it")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--ci", action="store_true", help=f"CI mode: --seed is mandatory (also via ${CI_ENV})")
    else:
        p.add_argument("--out", default=None, help="also store the result as JSON in this directory")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")


def _domain_args(p: argparse.ArgumentParser):
    p.add_argument("--spec", help="key = value domain file (kind, a, b, p, kappa, dim, ref)")
    p.add_argument("--kind", help=f"one of {', '.join(KINDS)} or alias {', '.join(KIND_ALIASES)}")
    p.add_argument("--a", type=float, help="radius")
    p.add_argument("--b", type=float, help="factor bound for U_ab")
    p.add_argument("--ref", "--z", "--h", dest="ref", default="zero", help="reference path CSV or 'zero'")
    p.add_argument("--dim", type=int, default=2, help="dimension of the sampled path")


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="roughwpi", description="Rough paths on Wiener space: norms, domains, studies.")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("lift", help="second-level lift of a path CSV")
    p.add_argument("--path", required=True)
    p.add_argument("--table", help="also dump every (i, j) level to this CSV (debug, O(n^2))")
    _common(p, False)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("pvar", help="p-variation of a path CSV")
    p.add_argument("--path", required=True)
    _common(p, False)
    p.set_defaults(func=cmd_pvar)

    p = sub.add_parser("dyadic-norm", help="dyadic (p, kappa) norm of a path CSV")
    p.add_argument("--path", required=True)
    _common(p, False)
    p.set_defaults(func=cmd_dyadic_norm)

    p = sub.add_parser("membership", help="test one path against a domain")
    _domain_args(p)
    p.add_argument("--path", required=True)
    p.add_argument("--path2", help="second factor for U_ab")
    _common(p, False)
    p.set_defaults(func=cmd_membership)

    p = sub.add_parser("estimate-measure", help="Monte Carlo Wiener measure of a domain")
    _domain_args(p)
    p.add_argument("--N", type=int, default=8)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--require-positive", action="store_true", help="check ci_low > 0")
    _common(p, True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("convergence", help="decay of dyadic-approximation remainders")
    p.add_argument("--N", type=int, default=12)
    p.add_argument("--n", type=level_list, default=level_list("2..10"), help="levels, '2..10' or '2,4,6'")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--no-lift-distance", action="store_true", help="skip the full rough distance")
    p.add_argument("--check-from", type=int, default=4, help="means must not increase from this level on")
    p.add_argument("--max-slope", type=float, default=-0.1, help="largest accepted log2-slope")
    _common(p, True)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("cross-bound", help="cross-integral moment against the dyadic norm")
    p.add_argument("--z", default="line", help="reference CSV or 'line'")
    p.add_argument("--d-ref", type=int, default=1, help="dimension of the default line reference")
    p.add_argument("--N", type=int, default=8)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--d", type=int, default=1, help="dimension of the Brownian path")
    p.add_argument("--scales", type=float_list, default=[1.0, 2.0, 4.0])
    p.add_argument("--spread-tol", type=float, default=1e-2)
    _common(p, True)
    p.set_defaults(func=cmd_cross_bound)

    p = sub.add_parser("overlap", help="conditional section overlaps")
    p.add_argument("--z", default="zero", help="reference CSV or 'zero'")
    p.add_argument("--a", type=float, default=5.0)
    p.add_argument("--epsilon", type=float, default=8.0)
    p.add_argument("--r", type=float, default=0.25)
    p.add_argument("--N", type=int, default=8)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--n-prefix", type=int, default=40)
    p.add_argument("--n-cond", type=int, default=400)
    p.add_argument("--n-overlap", type=int, default=2000)
    _common(p, True)
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("wpi-toy", help="product weak Poincare bound on a finite space")
    p.add_argument("--space", help="JSON space document (default: two overlapping squares on 10x10)")
    p.add_argument("--triples", type=triple_list,
                   default=triple_list("0.05,0.05,0.01;0.1,0.1,0.05;0.2,0.2,0.1"),
                   help="'eps,eps_prime,delta;...'")
    p.add_argument("--corpus", type=int, default=1000)
    p.add_argument("--overlap-floor", type=float, default=0.0)
    _common(p, True)
    p.set_defaults(func=cmd_wpi_toy)

    p = sub.add_parser("gaussian-gap", help="spectral gap and log-Sobolev on a Gaussian interval")
    p.add_argument("--lower", type=float, default=-1.0)
    p.add_argument("--upper", type=float, default=2.0)
    p.add_argument("--grid", type=int, default=2000)
    p.add_argument("--corpus", type=int, default=500)
    p.add_argument("--min-gap", type=float, default=0.98)
    _common(p, True)
    p.set_defaults(func=cmd_gaussian_gap)

    p = sub.add_parser("property-suite", help="randomised identity and inequality checks")
    p.add_argument("--scale", type=float, default=0.1, help="fraction of the full case counts")
    _common(p, True)
    p.set_defaults(func=cmd_property_suite)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if hasattr(args, "seed"):
            ci = args.ci or os.environ.get(CI_ENV, "") not in ("", "0")
            if args.seed is None:
                if ci:
                    raise UsageError(f"{args.command}: --seed is required in CI mode")
                args.seed = DEFAULT_SEED
            if args.workers < 1:
                raise UsageError("--workers must be at least 1")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (
        ValueError, LevelMismatchError, FileExistsError, RareEventError,
        DisconnectedSectionError, A2Unsatisfiable, OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
