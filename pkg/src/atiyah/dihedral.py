"""Dihedral configurations and the closed-form determinant.

A dihedral configuration has ``m`` points ``(a_i, 0)`` on the axis, with
``a_1 < ... < a_m``, followed by the ``n`` vertices ``(0, -zeta**j)`` of a
regular polygon on the unit circle, ``zeta = exp(2*pi*i/n)``.  For these the
coefficient matrix of the dehomogenized polynomials factors as

    |det P| = n**(n/2) * prod_k f_k,

with every ``f_k`` a positive combination of elementary symmetric functions of
the axis parameters ``lambda_i = a_i + sqrt(1 + a_i**2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence

from flint import acb, arb, ctx, fmpq

from .arith import (
    CirclePoint,
    PrecisionPolicy,
    Status,
    Verdict,
    det_certified,
    excludes_zero,
    ipow,
    is_exact_zero,
    real_part,
    to_acb,
    to_arb,
    working_precision,
)
from .forms import CoefficientMatrix, coefficient_matrix_generic
from .geometry import Configuration, Point3, ValidationError


class ProportionalityError(AssertionError):
    """A generic-pipeline row is not a scalar multiple of its closed-form row."""

    def __init__(self, row: int, index: int, detail: str):
        super().__init__(f"row {row}, coefficient {index}: {detail}")
        self.row = row
        self.index = index


def _as_exact(x):
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValidationError(f"non-finite axis coordinate {x!r}")
        return Fraction(x)
    if isinstance(x, Rational) and not isinstance(x, bool):
        return Fraction(x)
    return None


def lambda_of(a) -> arb:
    """a + sqrt(1 + a^2), evaluated without cancellation for negative a."""
    a = to_arb(a)
    r = (1 + a * a).sqrt()
    if a < 0 or (not a > 0 and a.mid() < 0):
        return 1 / (r - a)
    return a + r


@dataclass(frozen=True)
class DihedralConfig:
    """Axis coordinates (or axis parameters directly) plus the polygon order.

    Passing ``lambdas`` bypasses the axis coordinates; with ``strict=False`` the
    parameters may repeat, which models the equal-lambda limit.
    """

    n: int
    axis_coords: tuple = ()
    lambdas_given: tuple | None = None
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "axis_coords", tuple(self.axis_coords))
        if self.lambdas_given is not None:
            object.__setattr__(self, "lambdas_given", tuple(self.lambdas_given))
            if self.axis_coords:
                raise ValueError("give axis coordinates or lambdas, not both")
        if not isinstance(self.n, int) or self.n < 1:
            raise ValidationError(f"polygon order must be a positive integer, got {self.n!r}")
        if self.m + self.n < 2:
            raise ValidationError("need at least 2 points in total")
        self._check_order()

    def _check_order(self):
        if self.lambdas_given is not None:
            vals = [to_arb(v) for v in self.lambdas_given]
            for i, v in enumerate(vals):
                if not v > 0:
                    raise ValidationError(f"lambda_{i + 1} = {v} is not positive")
            if self.strict:
                for i in range(len(vals) - 1):
                    if not vals[i] < vals[i + 1]:
                        raise ValidationError(
                            f"lambdas not strictly increasing at position {i + 1}"
                        )
            return
        for i in range(len(self.axis_coords) - 1):
            lo, hi = self.axis_coords[i], self.axis_coords[i + 1]
            ex_lo, ex_hi = _as_exact(lo), _as_exact(hi)
            ok = ex_lo < ex_hi if ex_lo is not None and ex_hi is not None else to_arb(lo) < to_arb(hi)
            if not ok:
                raise ValidationError(
                    f"axis coordinates must be strictly increasing: a_{i + 1}={lo}, a_{i + 2}={hi}"
                )
        for a in self.axis_coords:
            _as_exact(a)

    @classmethod
    def from_lambdas(cls, lambdas: Sequence, n: int, strict: bool = True) -> "DihedralConfig":
        return cls(n, (), tuple(lambdas), strict)

    @property
    def m(self) -> int:
        if self.lambdas_given is not None:
            return len(self.lambdas_given)
        return len(self.axis_coords)

    @property
    def N(self) -> int:
        return self.m + self.n

    @property
    def outside_theorem(self) -> bool:
        """n <= 2 gives a planar configuration, not covered by the dihedral theorem."""
        return self.n <= 2

    def lambdas(self) -> list[arb]:
        if self.lambdas_given is not None:
            return [to_arb(v) for v in self.lambdas_given]
        return [lambda_of(a) for a in self.axis_coords]

    def inverted(self) -> "DihedralConfig":
        """(lambda_1..lambda_m) -> (1/lambda_m..1/lambda_1), at the active precision."""
        return DihedralConfig.from_lambdas([1 / v for v in reversed(self.lambdas())],
                                           self.n, strict=self.strict)

    def echo(self) -> dict:
        d = {"m": self.m, "n": self.n}
        if self.lambdas_given is not None:
            d["lambda"] = [_echo_number(v) for v in self.lambdas_given]
        else:
            d["a"] = [_echo_number(v) for v in self.axis_coords]
        return d


def _echo_number(v):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return v
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else v.numerator
    return str(v)


def polygon_vertex(j: int, n: int) -> CirclePoint:
    """b_j = -zeta**j."""
    return CirclePoint(Fraction(j, n) + Fraction(1, 2))


def build_dihedral_config(m: int, axis_coords: Sequence, n: int
                          ) -> tuple[DihedralConfig, Configuration]:
    axis_coords = tuple(axis_coords)
    if len(axis_coords) != m:
        raise ValidationError(f"expected {m} axis coordinates, got {len(axis_coords)}")
    dc = DihedralConfig(n, axis_coords)
    pts = [Point3(a, 0) for a in axis_coords]
    pts += [Point3(0, polygon_vertex(j, n)) for j in range(n)]
    return dc, Configuration(tuple(pts))


def normalize_dihedral(axis_coords: Sequence, n: int, radius=1, offset=0
                       ) -> tuple[tuple[Fraction, ...], dict]:
    """Map a polygon of any radius centred at axis position ``offset`` to the unit one.

    The similarity x -> (x - offset)/radius is applied exactly in rational
    arithmetic and returned for the report.
    """
    r, o = Fraction(radius), Fraction(offset)
    if r <= 0:
        raise ValidationError(f"polygon radius must be positive, got {radius}")
    scaled = tuple((Fraction(a) - o) / r for a in axis_coords)
    if r == 1 and o == 0:
        scaled = tuple(axis_coords)
    return scaled, {"offset": _echo_number(o), "scale": _echo_number(1 / r)}


def chord(j: int, s: int, n: int) -> tuple[acb, acb]:
    """b_s - b_j directly, and via -2i exp(pi i (j+s)/n) sin(pi (s-j)/n)."""
    direct = polygon_vertex(s, n).to_acb() - polygon_vertex(j, n).to_acb()
    sin_part = arb.sin_pi_fmpq(_fmpq(Fraction(s - j, n)))
    rot = CirclePoint(Fraction(j + s, 2 * n)).to_acb()
    return direct, acb(0, -2) * rot * sin_part


def _fmpq(q: Fraction) -> fmpq:
    return fmpq(q.numerator, q.denominator)


def elementary_symmetric(values: Sequence) -> list:
    """Coefficients E_0..E_m of prod (y + v), highest power of y first."""
    vals = list(values)
    cplx = any(isinstance(v, (acb, complex, CirclePoint)) for v in vals)
    conv = to_acb if cplx else to_arb
    E = [conv(1)]
    for v in vals:
        v = conv(v)
        E = [E[0]] + [E[k] + v * E[k - 1] for k in range(1, len(E))] + [v * E[-1]]
    return E


def c_coefficients(n: int) -> list[arb]:
    """Real coefficients c_0..c_{n-1} of prod_{s=1}^{n-1} (y - i exp(pi i s/n))."""
    if n < 1:
        raise ValueError("n must be positive")
    # -i exp(pi i s/n) = exp(2 pi i (s/(2n) - 1/4))
    roots = [CirclePoint(Fraction(s, 2 * n) - Fraction(1, 4)) for s in range(1, n)]
    coeffs = elementary_symmetric([r.to_acb() for r in roots]) if roots else [acb(1)]
    out = []
    for j, c in enumerate(coeffs):
        try:
            out.append(real_part(c))
        except ArithmeticError as exc:
            raise ArithmeticError(f"c_{j} for n={n}: {exc}") from exc
    return out


def convolve(u: Sequence, v: Sequence) -> list:
    out = [arb(0)] * (len(u) + len(v) - 1)
    for i, a in enumerate(u):
        for j, b in enumerate(v):
            out[i + j] = out[i + j] + a * b
    return out


@dataclass(frozen=True)
class SymmetricCoefficients:
    c: tuple
    E: tuple
    tildeE: tuple


def symmetric_coefficients(cfg: DihedralConfig) -> SymmetricCoefficients:
    c = c_coefficients(cfg.n)
    E = elementary_symmetric(cfg.lambdas())
    return SymmetricCoefficients(tuple(c), tuple(E), tuple(convolve(c, E)))


def tilde_E(cfg: DihedralConfig) -> list[arb]:
    """Tilde-E_0..Tilde-E_{N-1} as the convolution of c with E."""
    return list(symmetric_coefficients(cfg).tildeE)


def tilde_E_direct(cfg: DihedralConfig) -> list[acb]:
    """Elementary symmetric functions of the N-1 numbers lambda_i and -i exp(pi i s/n)."""
    n = cfg.n
    nums = [acb(v) for v in cfg.lambdas()]
    nums += [CirclePoint(Fraction(s, 2 * n) - Fraction(1, 4)).to_acb() for s in range(1, n)]
    return elementary_symmetric(nums)


def _f_from(tE: Sequence, lams: Sequence, m: int, n: int) -> list:
    N = m + n

    def T(k):
        return tE[k] if 0 <= k < N else arb(0)

    f = []
    for k in range(n):
        total, weight, s = T(k), arb(1), 0
        while True:
            s += 1
            idx = N - s * n - k  # 1-based lambda index of the s-th factor
            if idx < 1 or k + s * n > N - 1:
                break
            if s == 1:
                assert idx == m - k
            weight = weight * ipow(lams[idx - 1], n)
            total = total + weight * T(k + s * n)
        f.append(total)
    return f


def f_values(cfg: DihedralConfig) -> list[arb]:
    """f_k = sum_s (prod_{j=1}^s lambda_{N-jn-k}^n) Tilde-E_{k+sn}, k = 0..n-1."""
    return _f_from(tilde_E(cfg), cfg.lambdas(), cfg.m, cfg.n)


@dataclass(frozen=True)
class ClosedFormResult:
    f: tuple
    c_factor: arb
    abs_det: arb
    bits: int

    def __post_init__(self):
        if not all(v > 0 for v in self.f):
            raise ArithmeticError("closed form produced a factor f_k not certified positive")


def closed_form_abs_det(cfg: DihedralConfig) -> ClosedFormResult:
    f = f_values(cfg)
    c = arb(cfg.n) ** (arb(cfg.n) / 2)
    prod = arb(1)
    for v in f:
        prod *= v
    return ClosedFormResult(tuple(f), c, c * prod, ctx.prec)


def zeta_power(k: int, n: int) -> acb:
    return CirclePoint(Fraction(k % n, n)).to_acb()


def closed_form_matrix(cfg: DihedralConfig, bits: int | None = None) -> CoefficientMatrix:
    """Coefficient matrix of y^(i-1) (1 - lambda_i^n y^n) and f(zeta^j y).

    Rows 0..m-1 come from the axis points, rows m..N-1 from the polygon; column k
    holds the coefficient of y^k.
    """
    def build(b: int) -> CoefficientMatrix:
        with working_precision(b):
            m, n, N = cfg.m, cfg.n, cfg.N
            lams = cfg.lambdas()
            tE = tilde_E(cfg)
            rows = []
            for i in range(m):
                row = [acb(0)] * N
                row[i] = acb(1)
                row[i + n] = -acb(ipow(lams[i], n))
                rows.append(row)
            for j in range(n):
                rows.append([acb(tE[N - 1 - k]) * zeta_power(j * k, n) for k in range(N)])
        return CoefficientMatrix(tuple(tuple(r) for r in rows), b, build)

    return build(ctx.prec if bits is None else bits)


def closed_form_row_for(generic_row: int, cfg: DihedralConfig) -> int:
    """0-based closed-form row proportional to the given 0-based generic row.

    Polygon vertex j dehomogenizes to f(zeta^(-j) y), so its partner is row -j mod n.
    """
    m, n = cfg.m, cfg.n
    if generic_row < m:
        return generic_row
    j = generic_row - m
    return m + (-j) % n


@dataclass
class ProportionalityReport:
    sigmas: list
    row_map: list
    generic_det: acb
    generic_verdict: Verdict
    predicted_abs_det: arb
    closed_form: ClosedFormResult
    determinants_overlap: bool
    bits: int
    outside_theorem: bool = False
    notes: list = field(default_factory=list)


def _row_scalar(g: Sequence[acb], p: Sequence[acb], row: int) -> acb:
    best, best_mag = -1, None
    for k, e in enumerate(p):
        if not excludes_zero(e):
            continue
        mag = abs(e.mid()).mid()
        if best_mag is None or mag > best_mag:
            best, best_mag = k, mag
    if best < 0:
        raise ProportionalityError(row, -1, "closed-form row has no entry certified nonzero")
    sigma = g[best] / p[best]
    for k, (ge, pe) in enumerate(zip(g, p)):
        if is_exact_zero(pe):
            if not ge.contains(acb(0)):
                raise ProportionalityError(row, k, f"generic entry {ge} should vanish")
        elif not ge.overlaps(sigma * pe):
            raise ProportionalityError(
                row, k, f"generic {ge} vs scaled closed-form {sigma * pe}"
            )
    return sigma


def cross_check_proportionality(cfg: DihedralConfig, policy: PrecisionPolicy | None = None
                                ) -> ProportionalityReport:
    """Check each generic row against its closed-form row and compare determinants.

    Verifies every p_i equals sigma_i times its closed-form counterpart
    coefficientwise, and that |det generic| overlaps prod |sigma_i| * n^(n/2) prod f_k.
    """
    if cfg.lambdas_given is not None:
        raise ValueError("cross-check needs axis coordinates, not bare lambdas")
    policy = policy or PrecisionPolicy()
    _, gcfg = build_dihedral_config(cfg.m, cfg.axis_coords, cfg.n)
    generic = coefficient_matrix_generic(gcfg, policy.initial_bits)
    det, verdict = det_certified(generic, policy)
    bits = verdict.bits_used
    with working_precision(bits):
        G = generic.at_precision(bits).entries
        P = closed_form_matrix(cfg, bits).entries
        row_map = [closed_form_row_for(r, cfg) for r in range(cfg.N)]
        sigmas = [_row_scalar(G[r], P[row_map[r]], r + 1) for r in range(cfg.N)]
        closed = closed_form_abs_det(cfg)
        scale = arb(1)
        for s in sigmas:
            scale *= abs(s)
        predicted = scale * closed.abs_det
        overlap = abs(det).overlaps(predicted)
    notes = []
    if cfg.outside_theorem:
        notes.append("n <= 2: planar configuration, outside the dihedral theorem")
    if verdict.status is not Status.CERTIFIED_NONZERO:
        notes.append(f"generic determinant verdict {verdict.status.value}")
    return ProportionalityReport(sigmas, row_map, det, verdict, predicted, closed,
                                 overlap, bits, cfg.outside_theorem, notes)
