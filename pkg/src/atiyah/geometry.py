"""Points in R x C, Hopf lifts, and the pairwise linear forms l_ij.

A point of R^3 is stored as ``(a, z)``: the axis coordinate ``a`` and the
transverse complex coordinate ``z``.  External triples ``(x1, x2, x3)`` map to
``(x1, x2 + i*x3)``.

Coordinates are kept as exact Python numbers (int, float, Fraction, complex,
:class:`~atiyah.arith.CirclePoint`) or as flint balls, and are enclosed at the
active working precision whenever a quantity is evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from flint import acb, arb

from .arith import CirclePoint, abs2, to_acb, to_arb


class GeometryError(ValueError):
    """Invalid geometric input: zero lift, coincident points, bad indices."""


class ValidationError(GeometryError):
    """A raw point list that cannot be turned into a configuration."""


def _exact_real(x):
    if isinstance(x, bool):
        raise TypeError("bool is not a coordinate")
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValidationError(f"non-finite coordinate {x!r}")
        return Fraction(x)
    if isinstance(x, Rational):
        return Fraction(x)
    return None


def _exact_complex(z):
    """Hashable exact key for a transverse coordinate, or None for balls."""
    if isinstance(z, CirclePoint):
        e = z.exact()
        return ("circle", z.turn) if e is None else (Fraction(int(e.real)), Fraction(int(e.imag)))
    if isinstance(z, complex):
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ValidationError(f"non-finite coordinate {z!r}")
        return (Fraction(z.real), Fraction(z.imag))
    re = _exact_real(z)
    return None if re is None else (re, Fraction(0))


@dataclass(frozen=True)
class Point3:
    a: object
    z: object = 0

    def __post_init__(self):
        # rejects NaN/inf and unsupported types early
        if not isinstance(self.a, arb):
            to_arb(self.a)
        if not isinstance(self.z, acb):
            to_acb(self.z)

    @classmethod
    def from_xyz(cls, x1, x2, x3) -> "Point3":
        return cls(x1, complex(x2, x3) if x3 else x2)

    def key(self):
        """Exact identity key; None when a coordinate is only known as a ball."""
        a, z = _exact_real(self.a), _exact_complex(self.z)
        if a is None or z is None:
            return None
        return (a, z)

    def enclose(self) -> tuple[arb, acb]:
        return to_arb(self.a), to_acb(self.z)


@dataclass(frozen=True)
class SpinorLift:
    z: acb
    w: acb


@dataclass(frozen=True)
class LinearForm:
    """The binary linear form ``u*x + v*y``."""

    u: acb
    v: acb


def hopf_project(z, w) -> Point3:
    """h(z, w) = ((|z|^2 - |w|^2)/2, z * conj(w))."""
    z, w = to_acb(z), to_acb(w)
    if z.is_zero() and w.is_zero() and z.is_exact() and w.is_exact():
        raise GeometryError("Hopf map is undefined at (0, 0)")
    return Point3((abs2(z) - abs2(w)) / 2, z * w.conjugate())


def _same_z(zi, zj) -> bool:
    ki, kj = _exact_complex(zi), _exact_complex(zj)
    if ki is not None and kj is not None:
        return ki == kj
    d = to_acb(zj) - to_acb(zi)
    return d.is_zero() and d.is_exact()


def _lambda(d: arb, dz2: arb) -> arb:
    """d + sqrt(d^2 + dz2), switching to the conjugate form when d < 0."""
    r = (d * d + dz2).sqrt()
    if d < 0 or (not d > 0 and d.mid() < 0):
        if dz2.is_zero() and dz2.is_exact():
            return arb(0)
        return dz2 / (r - d)
    return d + r


def lambda_pair(xi: Point3, xj: Point3) -> arb:
    """lambda_ij = (a_j - a_i) + sqrt((a_j - a_i)^2 + |z_j - z_i|^2)."""
    ki, kj = xi.key(), xj.key()
    if ki is not None and ki == kj:
        raise GeometryError(f"identical points {xi} and {xj}")
    ai, zi = xi.enclose()
    aj, zj = xj.enclose()
    return _lambda(aj - ai, abs2(zj - zi))


@dataclass(frozen=True)
class Configuration:
    """Ordered distinct points satisfying: equal z and i < j imply a_i < a_j."""

    points: tuple[Point3, ...]

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ValidationError("a configuration needs at least 2 points")
        _check_distinct(pts)
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if _same_z(pts[i].z, pts[j].z) and not to_arb(pts[i].a) < to_arb(pts[j].a):
                    raise ValidationError(
                        f"points {i + 1} and {j + 1} share z but a_{i + 1} >= a_{j + 1}"
                    )

    def __len__(self):
        return len(self.points)


def _check_distinct(pts):
    seen = {}
    for idx, p in enumerate(pts):
        k = p.key()
        if k is None:
            continue
        if k in seen:
            raise ValidationError(
                f"duplicate points at positions {seen[k] + 1} and {idx + 1}: {p}"
            )
        seen[k] = idx


def linear_form(i: int, j: int, cfg: Configuration) -> LinearForm:
    """l_ij for 1-based indices: (lambda_ij, conj(z_j) - conj(z_i)) if i < j,
    (z_j - z_i, lambda_ji) if i > j."""
    n = len(cfg)
    if i == j:
        raise GeometryError(f"linear_form needs i != j (got {i})")
    if not (1 <= i <= n and 1 <= j <= n):
        raise GeometryError(f"indices ({i}, {j}) out of range 1..{n}")
    xi, xj = cfg.points[i - 1], cfg.points[j - 1]
    zi, zj = to_acb(xi.z), to_acb(xj.z)
    if i < j:
        return LinearForm(acb(lambda_pair(xi, xj)), zj.conjugate() - zi.conjugate())
    return LinearForm(zj - zi, acb(lambda_pair(xj, xi)))


def lift(i: int, j: int, cfg: Configuration) -> SpinorLift:
    """The Hopf lift of x_j - x_i behind ``linear_form(i, j)``: the form's
    coefficients scaled by lambda^(-1/2), lambda taken over the ordered pair."""
    f = linear_form(i, j, cfg)
    lo, hi = min(i, j), max(i, j)
    lam = lambda_pair(cfg.points[lo - 1], cfg.points[hi - 1])
    s = lam.rsqrt()
    return SpinorLift(f.u * s, f.v * s)


def _sort_key(a) -> Fraction:
    exact = _exact_real(a)
    return exact if exact is not None else Fraction(float(to_arb(a).mid()))


def normalize_configuration(raw) -> tuple[Configuration, tuple[int, ...]]:
    """Reorder points so that equal-z points appear with increasing a.

    Points are only permuted among the positions held by their own z-group, so an
    already valid list comes back with the identity permutation.  The returned
    permutation is 1-based: ``new[k] = raw[perm[k] - 1]``.
    """
    pts = [p if isinstance(p, Point3) else Point3(*p) for p in raw]
    _check_distinct(pts)
    groups: dict[object, list[int]] = {}
    for idx, p in enumerate(pts):
        k = _exact_complex(p.z)
        if k is not None:
            groups.setdefault(k, []).append(idx)
    perm = list(range(len(pts)))
    for positions in groups.values():
        ordered = sorted(positions, key=lambda q: (_sort_key(pts[q].a), q))
        for slot, src in zip(positions, ordered):
            perm[slot] = src
    cfg = Configuration(tuple(pts[q] for q in perm))
    return cfg, tuple(q + 1 for q in perm)
