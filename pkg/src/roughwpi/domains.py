"""Membership predicates for the rough-path domains.

All comparisons are strict. Predicates evaluate their conditions in order
and stop at the first failure; the boolean does not depend on that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .lift import cross_norm, lift, rough_distance
from .paths import DiscretePath, check_levels
from .variation import VarParams, cp_norm, level2_norm, pvar_path

KINDS = ("U_az", "B_ah", "O_ah", "U_ab", "SectionW")


def in_U(w: DiscretePath, z: DiscretePath | None, a: float, p: float) -> bool:
    """``w`` has rough norm, and both cross norms against ``z``, below ``a``."""
    if z is not None:
        check_levels(w, z)
    if not a > 0:
        return False
    if not cp_norm(lift(w), p) < a:
        return False
    if z is None:
        return True
    return cross_norm(w, z, p) < a and cross_norm(z, w, p) < a


def in_B(w: DiscretePath, h: DiscretePath, a: float, p: float) -> bool:
    """Ball-like set around ``h`` described through ``w - h`` and its crossings with ``h``."""
    check_levels(w, h)
    if not a > 0:
        return False
    g = w - h
    return (
        pvar_path(g, p) < a
        and level2_norm(lift(g), p) < a
        and cross_norm(g, h, p) < a
        and cross_norm(h, g, p) < a
    )


def in_O(w: DiscretePath, h: DiscretePath, a: float, p: float) -> bool:
    """Rough-path distance from ``h`` below ``a``."""
    check_levels(w, h)
    if not a > 0:
        return False
    return rough_distance(lift(w), lift(h), p) < a


def in_Uab(w1: DiscretePath, w2: DiscretePath, a: float, b: float, p: float) -> bool:
    """Product-type domain: ``|w1|_p |w2|_p < a`` with each factor below ``b``."""
    if w1.dim != 1 or w2.dim != 1:
        raise ValueError("in_Uab takes one-dimensional paths")
    if not a < b * b:
        raise ValueError(f"need a < b**2, got a={a}, b={b}")
    n1 = pvar_path(w1, p)
    if not n1 < b:
        return False
    n2 = pvar_path(w2, p)
    return n2 < b and n1 * n2 < a


def in_section(
    w_last: DiscretePath,
    w_prefix: DiscretePath | None,
    z: DiscretePath | None,
    a: float,
    p: float,
) -> bool:
    """Section of the unit set in the last coordinate, given the other coordinates.

    The reference is ``(w_prefix, z)`` stacked in that order; either part may
    be missing.
    """
    if w_last.dim != 1:
        raise ValueError("the section variable is one-dimensional")
    parts = [x for x in (w_prefix, z) if x is not None and x.dim > 0]
    check_levels(w_last, *parts)
    if not a > 0:
        return False
    if not pvar_path(w_last, p) < a:
        return False
    if not parts:
        return True
    ref = parts[0] if len(parts) == 1 else parts[0].concat(parts[1])
    return cross_norm(ref, w_last, p) < a and cross_norm(w_last, ref, p) < a


@dataclass
class DomainSpec:
    """Which set, its radius (and ``b`` for the product domain), and the reference path.

    ``dim`` is the dimension of the sampled path for ``U_az``; for ``B_ah``
    and ``O_ah`` it must match the reference. ``ref=None`` means the zero path.
    """

    kind: str
    a: float
    ref: DiscretePath | None = None
    b: float | None = None
    params: VarParams = field(default_factory=VarParams)
    dim: int = 2
    ref_file: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}; expected one of {KINDS}")
        if self.a < 0:
            raise ValueError("radius a must be non-negative")
        if self.kind == "U_ab":
            if self.b is None:
                raise ValueError("U_ab needs b")
            if not self.a < self.b**2:
                raise ValueError(f"U_ab needs a < b**2, got a={self.a}, b={self.b}")
        if self.kind in ("B_ah", "O_ah") and self.ref is not None:
            self.dim = self.ref.dim

    def reference(self, level: int, dim: int | None = None) -> DiscretePath:
        if self.ref is not None:
            if self.ref.level != level:
                raise ValueError(f"reference path has level {self.ref.level}, sampling at {level}")
            return self.ref
        return DiscretePath.zeros(dim or self.dim, level)

    def sample_dims(self) -> list[int]:
        """Dimensions of the independent Brownian paths one membership query needs."""
        if self.kind == "U_ab":
            return [1, 1]
        if self.kind == "SectionW":
            return [1]
        return [self.dim]

    def contains(self, *paths: DiscretePath) -> bool:
        p = self.params.p
        if self.kind == "U_ab":
            return in_Uab(paths[0], paths[1], self.a, self.b, p)
        w = paths[0]
        if self.kind == "U_az":
            return in_U(w, self.ref, self.a, p)
        if self.kind == "SectionW":
            return in_section(w, None, self.ref, self.a, p)
        h = self.reference(w.level, w.dim)
        if self.kind == "B_ah":
            return in_B(w, h, self.a, p)
        return in_O(w, h, self.a, p)

    def to_text(self) -> str:
        lines = [
            f"kind = {self.kind}",
            f"a = {self.a!r}",
            f"b = {'' if self.b is None else repr(self.b)}",
            f"p = {self.params.p!r}",
            f"kappa = {self.params.kappa!r}",
            f"dim = {self.dim}",
            f"ref = {self.ref_file or 'zero'}",
        ]
        return "\n".join(lines) + "\n"

    def echo(self) -> dict:
        return {
            "kind": self.kind,
            "a": self.a,
            "b": self.b,
            "p": self.params.p,
            "kappa": self.params.kappa,
            "dim": self.dim,
            "ref": self.ref_file or ("zero" if self.ref is None else "in-memory"),
        }

    @classmethod
    def from_text(cls, text: str, base_dir: Path | None = None) -> "DomainSpec":
        kv = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed line in domain spec: {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            kv[key] = val
        unknown = set(kv) - {"kind", "a", "b", "p", "kappa", "dim", "ref"}
        if unknown:
            raise ValueError(f"unknown keys in domain spec: {sorted(unknown)}")
        if "kind" not in kv or "a" not in kv:
            raise ValueError("domain spec needs at least 'kind' and 'a'")
        ref = None
        ref_file = kv.get("ref") or None
        if ref_file and ref_file != "zero":
            path = Path(ref_file)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            ref = DiscretePath.from_csv(path)
        else:
            ref_file = None
        return cls(
            kind=kv["kind"],
            a=float(kv["a"]),
            b=float(kv["b"]) if kv.get("b") else None,
            params=VarParams(float(kv.get("p", 2.5)), float(kv.get("kappa", 2.0))),
            dim=int(kv.get("dim", 2)),
            ref=ref,
            ref_file=ref_file,
        )
