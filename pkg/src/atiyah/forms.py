"""Binary forms, the Atiyah polynomials p_i, and their coefficient matrix.

Coefficient index ``k`` of a degree-``d`` form holds the coefficient of
``x**(d-k) * y**k``.  Setting ``x = 1`` therefore leaves the vector unchanged and
reads it as a polynomial in ``y`` with ascending powers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from flint import acb, ctx

from .arith import Ball, ipow, to_acb, working_precision
from .geometry import Configuration, LinearForm, linear_form


@dataclass(frozen=True)
class BinaryForm:
    coeffs: tuple[acb, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(to_acb(c) for c in self.coeffs))
        if not self.coeffs:
            raise ValueError("a binary form needs at least one coefficient")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def linear(cls, form: LinearForm) -> "BinaryForm":
        return cls((form.u, form.v))

    def __call__(self, x, y) -> acb:
        x, y = to_acb(x), to_acb(y)
        d = self.degree
        total = acb(0)
        for k, c in enumerate(self.coeffs):
            total += c * ipow(x, d - k) * ipow(y, k)
        return total


def multiply_forms(f: BinaryForm, g: BinaryForm) -> BinaryForm:
    out = [acb(0)] * (len(f.coeffs) + len(g.coeffs) - 1)
    for i, a in enumerate(f.coeffs):
        if a.is_zero() and a.is_exact():
            continue
        for j, b in enumerate(g.coeffs):
            out[i + j] += a * b
    return BinaryForm(tuple(out))


def atiyah_polynomial(i: int, cfg: Configuration) -> BinaryForm:
    """p_i = product over j != i (ascending j) of the forms l_ij."""
    if not 1 <= i <= len(cfg):
        raise IndexError(f"point index {i} out of range 1..{len(cfg)}")
    p = BinaryForm((1,))
    for j in range(1, len(cfg) + 1):
        if j != i:
            p = multiply_forms(p, BinaryForm.linear(linear_form(i, j, cfg)))
    return p


@dataclass(frozen=True)
class CoefficientMatrix:
    """Square matrix of complex balls, optionally re-buildable at any precision.

    ``builder(bits)`` must return the matrix evaluated at ``bits``; the certified
    determinant calls it when it escalates precision.
    """

    entries: tuple[tuple[acb, ...], ...]
    bits: int
    builder: Callable[[int], "CoefficientMatrix"] | None = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self):
        rows = tuple(tuple(to_acb(e) for e in row) for row in self.entries)
        if any(len(r) != len(rows) for r in rows):
            raise ValueError("coefficient matrix must be square")
        object.__setattr__(self, "entries", rows)

    @property
    def n(self) -> int:
        return len(self.entries)

    def at_precision(self, bits: int) -> "CoefficientMatrix":
        if self.builder is None or bits == self.bits:
            return self
        return self.builder(bits)

    def row(self, i: int) -> tuple[acb, ...]:
        return self.entries[i]


def coefficient_matrix_generic(cfg: Configuration, bits: int | None = None) -> CoefficientMatrix:
    """Rows are the coefficient vectors of p_1..p_N.

    With ``bits`` the matrix is evaluated at that precision; otherwise at the
    active one.
    """
    def build(b: int) -> CoefficientMatrix:
        with working_precision(b):
            rows = tuple(atiyah_polynomial(i, cfg).coeffs for i in range(1, len(cfg) + 1))
        return CoefficientMatrix(rows, b, build)

    if bits is None:
        bits = ctx.prec
    return build(bits)


def dehomogenize(f: BinaryForm | Sequence[Ball]) -> tuple[acb, ...]:
    """Coefficients of f(1, y), lowest power of y first."""
    coeffs = f.coeffs if isinstance(f, BinaryForm) else f
    return tuple(to_acb(c) for c in coeffs)
