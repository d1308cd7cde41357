"""Ball arithmetic helpers and certified determinant evaluation.

Enclosures are python-flint ``arb`` (real) and ``acb`` (complex) balls.  Every
computation here runs at whatever precision is active in ``flint.ctx``; use
:func:`working_precision` to scope it.
"""

from __future__ import annotations

import enum
import math
import os
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral, Rational, Real
from typing import Callable, Iterator, Sequence, Union

from flint import acb, arb, ctx, fmpq, fmpz

Ball = Union[arb, acb]

DEFAULT_INITIAL_BITS = 128
DEFAULT_MAX_BITS = 4096
MAX_BITS_ENV = "ATIYAH_MAX_BITS"


@contextmanager
def working_precision(bits: int) -> Iterator[int]:
    """Run the enclosed block at ``bits`` of working precision, then restore."""
    saved = ctx.prec
    ctx.prec = int(bits)
    try:
        yield int(bits)
    finally:
        ctx.prec = saved


class CirclePoint:
    """The exact unit complex number ``exp(2*pi*i*turn)`` for rational ``turn``."""

    __slots__ = ("turn",)

    def __init__(self, turn):
        t = Fraction(turn)
        self.turn = t - math.floor(t)

    def exact(self) -> complex | None:
        """Gaussian-integer value for quarter turns, else None (the value is irrational)."""
        q = self.turn * 4
        if q.denominator != 1:
            return None
        return (1, 1j, -1, -1j)[int(q)]

    def to_acb(self) -> acb:
        e = self.exact()
        if e is not None:
            return acb(int(e.real), int(e.imag))
        s, c = arb.sin_cos_pi_fmpq(_fmpq(2 * self.turn))
        return acb(c, s)

    def __eq__(self, other):
        return isinstance(other, CirclePoint) and other.turn == self.turn

    def __hash__(self):
        return hash(("circle", self.turn))

    def __complex__(self):
        return complex(math.cos(2 * math.pi * self.turn), math.sin(2 * math.pi * self.turn))

    def __repr__(self):
        return f"CirclePoint({self.turn})"


def _fmpq(q: Fraction) -> fmpq:
    return fmpq(q.numerator, q.denominator)


def to_arb(x) -> arb:
    """Enclose a real input. Floats and integers are exact; rationals round outward."""
    if isinstance(x, arb):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a coordinate")
    if isinstance(x, Integral):
        return arb(fmpz(int(x)))
    if isinstance(x, Rational):
        q = Fraction(x)
        if q.denominator == 1:
            return arb(fmpz(q.numerator))
        return arb(_fmpq(q))
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return arb(x)
    if isinstance(x, (fmpz, fmpq)):
        return arb(x)
    if isinstance(x, str):
        return arb(x)
    if isinstance(x, Real):
        return to_arb(float(x))
    raise TypeError(f"cannot enclose {type(x).__name__} as a real")


def to_acb(x) -> acb:
    """Enclose a complex input (complex, CirclePoint, acb, or any real)."""
    if isinstance(x, acb):
        return x
    if isinstance(x, CirclePoint):
        return x.to_acb()
    if isinstance(x, complex):
        if not (math.isfinite(x.real) and math.isfinite(x.imag)):
            raise ValueError(f"non-finite value {x!r}")
        return acb(arb(x.real), arb(x.imag))
    return acb(to_arb(x))


def ipow(x: Ball, k: int) -> Ball:
    """x**k by repeated squaring; arb's own pow returns nan on balls containing 0."""
    if k < 0:
        return 1 / ipow(x, -k)
    result = type(x)(1)
    base = x
    while k:
        if k & 1:
            result = result * base
        k >>= 1
        if k:
            base = base * base
    return result


def abs2(z: acb) -> arb:
    """|z|^2 as a nonnegative real ball."""
    z = to_acb(z)
    return z.real * z.real + z.imag * z.imag


def excludes_zero(x: Ball) -> bool:
    if isinstance(x, acb):
        return not x.contains(acb(0))
    return not x.contains(arb(0))


def is_exact_zero(x: Ball) -> bool:
    return x.is_zero() and x.is_exact()


def width(x: Ball) -> arb:
    """Upper bound on the diameter of an enclosure."""
    if isinstance(x, acb):
        return 2 * arb(x.rad())
    return 2 * x.rad()


def real_part(x: Ball) -> arb:
    """Real part of ``x``; complex balls must have an imaginary part that encloses 0."""
    if isinstance(x, arb):
        return x
    if not x.imag.contains(arb(0)):
        raise ArithmeticError(f"imaginary part {x.imag} does not enclose 0")
    return x.real


def _round_up_str(r: arb) -> str:
    # r is an exact nonnegative radius; emit a decimal at least as large
    up = r.upper()
    f = float(up.mid())
    while math.isfinite(f) and arb(f) < up:
        f = math.nextafter(f, math.inf)
    return repr(f)


def _real_json(x: arb) -> dict:
    with working_precision(max(ctx.prec, 64) + 64):
        mid = x.mid().str(25, radius=False)
        err = abs(x - arb(mid)).upper()
    return {"mid": mid, "rad": _round_up_str(err)}


@dataclass(frozen=True)
class CertifiedScalar:
    """Serializable midpoint-radius snapshot of an ``arb`` or ``acb`` ball.

    Decimal midpoints are rounded; the stored radius absorbs that rounding, so
    the snapshot is still a valid enclosure.
    """

    mid: str
    rad: str
    imag_mid: str | None = None
    imag_rad: str | None = None

    @classmethod
    def from_ball(cls, x: Ball) -> "CertifiedScalar":
        if isinstance(x, acb):
            re, im = _real_json(x.real), _real_json(x.imag)
            return cls(re["mid"], re["rad"], im["mid"], im["rad"])
        re = _real_json(to_arb(x))
        return cls(re["mid"], re["rad"])

    @property
    def is_complex(self) -> bool:
        return self.imag_mid is not None

    def to_ball(self) -> Ball:
        re = arb(self.mid, self.rad)
        if self.imag_mid is None:
            return re
        return acb(re, arb(self.imag_mid, self.imag_rad))

    def to_json(self) -> dict:
        d = {"mid": self.mid, "rad": self.rad}
        if self.imag_mid is not None:
            d["imag_mid"] = self.imag_mid
            d["imag_rad"] = self.imag_rad
        return d

    @classmethod
    def from_json(cls, d: dict) -> "CertifiedScalar":
        return cls(d["mid"], d["rad"], d.get("imag_mid"), d.get("imag_rad"))


class Order(enum.Enum):
    LESS = "Less"
    GREATER = "Greater"
    OVERLAPPING = "Overlapping"


def compare_certified(a, b) -> Order:
    """Order two real enclosures; anything short of disjointness is OVERLAPPING."""
    a, b = to_arb(a), to_arb(b)
    if a < b:
        return Order.LESS
    if a > b:
        return Order.GREATER
    return Order.OVERLAPPING


@dataclass(frozen=True)
class PrecisionPolicy:
    initial_bits: int = DEFAULT_INITIAL_BITS
    max_bits: int = DEFAULT_MAX_BITS

    def __post_init__(self):
        if self.initial_bits < 2:
            raise ValueError("initial_bits must be at least 2")
        if self.initial_bits > self.max_bits:
            raise ValueError(
                f"initial_bits {self.initial_bits} exceeds max_bits {self.max_bits}"
            )

    @classmethod
    def from_env(cls, initial_bits: int = DEFAULT_INITIAL_BITS,
                 max_bits: int | None = None) -> "PrecisionPolicy":
        """Build a policy, letting ``ATIYAH_MAX_BITS`` override the cap."""
        env = os.environ.get(MAX_BITS_ENV)
        if env:
            max_bits = int(env)
        if max_bits is None:
            max_bits = DEFAULT_MAX_BITS
        return cls(initial_bits, max_bits)

    def schedule(self) -> Iterator[int]:
        bits = self.initial_bits
        while bits < self.max_bits:
            yield bits
            bits *= 2
        yield self.max_bits


class Status(enum.Enum):
    CERTIFIED_NONZERO = "CertifiedNonzero"
    CERTIFIED_ZERO = "CertifiedZero"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Verdict:
    status: Status
    witness: CertifiedScalar
    bits_used: int

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "witness": self.witness.to_json(),
            "bits_used": self.bits_used,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Verdict":
        return cls(Status(d["status"]), CertifiedScalar.from_json(d["witness"]), d["bits_used"])


MatrixSource = Union[Sequence[Sequence[object]], Callable[[int], Sequence[Sequence[Ball]]]]


def _entries_at(source, bits: int) -> list[list[acb]]:
    if hasattr(source, "at_precision"):
        rows = source.at_precision(bits).entries
    elif callable(source):
        rows = source(bits)
    else:
        rows = source
    out = [[to_acb(e) for e in row] for row in rows]
    n = len(out)
    if any(len(row) != n for row in out):
        raise ValueError("determinant of a non-square matrix")
    return out


def _exact_source_singular(source) -> bool:
    """Zero or repeated rows in a matrix given by exact Python numbers."""
    if hasattr(source, "at_precision") or callable(source):
        return False
    rows = [tuple(row) for row in source]
    if not all(isinstance(e, (Rational, complex, CirclePoint)) and not isinstance(e, bool)
               for row in rows for e in row):
        return False
    if any(all(e == 0 for e in row) for row in rows):
        return True
    return len(set(rows)) < len(rows)


def _structurally_singular(rows: list[list[acb]]) -> bool:
    """Exact zero row, or two exactly equal rows of exact entries."""
    exact_rows = []
    for row in rows:
        if not all(e.is_exact() for e in row):
            continue
        if all(e.is_zero() for e in row):
            return True
        exact_rows.append(row)
    for i in range(len(exact_rows)):
        for j in range(i + 1, len(exact_rows)):
            if all((a - b).is_zero() for a, b in zip(exact_rows[i], exact_rows[j])):
                return True
    return False


def _hadamard_bound(rows: list[list[acb]]) -> arb:
    bound = arb(1)
    for row in rows:
        s = arb(0)
        for e in row:
            s += e.abs_upper() * e.abs_upper()
        bound *= s.sqrt().upper()
    return bound


def eliminate_det(rows: list[list[acb]]) -> acb:
    """Determinant enclosure by Gaussian elimination on balls.

    Pivots on the largest midpoint magnitude in the column, lowest row index on
    ties.  If every candidate pivot encloses zero, the remaining block is bounded
    by Hadamard's inequality and the result is a zero-centred ball.
    """
    a = [list(row) for row in rows]
    n = len(a)
    det = acb(1)
    for k in range(n):
        best, best_mag = -1, None
        for r in range(k, n):
            if a[r][k].contains(acb(0)):
                continue
            mag = abs(a[r][k].mid()).mid()
            if best_mag is None or mag > best_mag:
                best, best_mag = r, mag
        if best < 0:
            tail = [row[k:] for row in a[k:]]
            bound = abs(det).upper() * _hadamard_bound(tail)
            return acb(arb(0, bound))
        if best != k:
            a[k], a[best] = a[best], a[k]
            det = -det
        piv = a[k][k]
        det *= piv
        for r in range(k + 1, n):
            if is_exact_zero(a[r][k]):
                continue
            factor = a[r][k] / piv
            row_r, row_k = a[r], a[k]
            for c in range(k + 1, n):
                if not is_exact_zero(row_k[c]):
                    row_r[c] = row_r[c] - factor * row_k[c]
            row_r[k] = acb(0)
    return det


def det_certified(matrix: MatrixSource, policy: PrecisionPolicy | None = None
                  ) -> tuple[acb, Verdict]:
    """Determinant enclosure plus a nonvanishing verdict.

    ``matrix`` is a nested sequence of exact numbers or balls, a callable taking a
    bit count and returning one, or an object with ``at_precision(bits)``.  When
    the enclosure straddles zero the whole evaluation is repeated at doubled
    precision, up to ``policy.max_bits``.
    """
    policy = policy or PrecisionPolicy()
    det, bits = acb(0), policy.initial_bits
    exact_singular = _exact_source_singular(matrix)
    for bits in policy.schedule():
        with working_precision(bits):
            rows = _entries_at(matrix, bits)
            det = eliminate_det(rows)
            if excludes_zero(det):
                return det, Verdict(Status.CERTIFIED_NONZERO,
                                    CertifiedScalar.from_ball(det), bits)
            if exact_singular or _structurally_singular(rows):
                return det, Verdict(Status.CERTIFIED_ZERO,
                                    CertifiedScalar.from_ball(det), bits)
    return det, Verdict(Status.INCONCLUSIVE, CertifiedScalar.from_ball(det), bits)
