"""The inequality family for dihedral configurations, with certified margins.

Each check evaluates both sides as real balls and reports ``lhs - rhs``.  A
margin straddling zero triggers re-evaluation at doubled precision, up to the
policy cap; an exactly-zero margin (equality) stops escalation immediately.
"""

from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from flint import arb
from scipy.stats import qmc

from .arith import (
    CertifiedScalar,
    PrecisionPolicy,
    ipow,
    is_exact_zero,
    to_arb,
    working_precision,
)
from .dihedral import DihedralConfig, c_coefficients, elementary_symmetric, f_values

WHICH = ("conj2", "spec", "spec_equal_lambda", "n3", "lambda_zero")


class InequalityVerdict(enum.Enum):
    HOLDS = "Holds"
    VIOLATED = "Violated"
    OVERLAPPING = "Overlapping"


@dataclass(frozen=True)
class InequalityReport:
    which: str
    lhs: arb
    rhs: arb
    margin: arb
    verdict: InequalityVerdict
    params: dict
    bits: int

    def to_json(self) -> dict:
        return {
            "which": self.which,
            "verdict": self.verdict.value,
            "lhs": CertifiedScalar.from_ball(self.lhs).to_json(),
            "rhs": CertifiedScalar.from_ball(self.rhs).to_json(),
            "margin": CertifiedScalar.from_ball(self.margin).to_json(),
            "params": self.params,
            "bits": self.bits,
        }


def _verdict(margin: arb) -> InequalityVerdict:
    if margin > 0:
        return InequalityVerdict.HOLDS
    if margin < 0:
        return InequalityVerdict.VIOLATED
    return InequalityVerdict.OVERLAPPING


def _escalate(which: str, params: dict, sides: Callable[[], tuple[arb, arb]],
              policy: PrecisionPolicy | None, identity: bool = False) -> InequalityReport:
    """Evaluate at increasing precision until the margin sign is certified.

    ``identity`` marks parameters where both sides are equal by construction
    (no axis points); the margin is then the exact zero.
    """
    policy = policy or PrecisionPolicy()
    report = None
    for bits in policy.schedule():
        with working_precision(bits):
            lhs, rhs = sides()
            margin = arb(0) if identity else lhs - rhs
        report = InequalityReport(which, lhs, rhs, margin, _verdict(margin), params, bits)
        if report.verdict is not InequalityVerdict.OVERLAPPING or is_exact_zero(margin):
            break
    return report


def _prod(values: Iterable) -> arb:
    out = arb(1)
    for v in values:
        out = out * v
    return out


def _axis_weight(cfg: DihedralConfig) -> arb:
    """prod_i (1 + lambda_i^2)^n."""
    return _prod(ipow(1 + lam * lam, cfg.n) for lam in cfg.lambdas())


def _params(cfg: DihedralConfig) -> dict:
    return cfg.echo()


def conj2_margin(cfg: DihedralConfig, policy: PrecisionPolicy | None = None) -> InequalityReport:
    """n^(n/2) prod f_k  >=  2^C(n,2) prod (1 + lambda_i^2)^n."""
    n = cfg.n

    def sides():
        lhs = arb(n) ** (arb(n) / 2) * _prod(f_values(cfg))
        rhs = ipow(arb(2), math.comb(n, 2)) * _axis_weight(cfg)
        return lhs, rhs

    return _escalate("conj2", _params(cfg), sides, policy)


def spec_margin(cfg: DihedralConfig, policy: PrecisionPolicy | None = None) -> InequalityReport:
    """prod f_k / c_k  >=  prod (1 + lambda_i^2)^n."""
    def sides():
        c = c_coefficients(cfg.n)
        lhs = _prod(fk / ck for fk, ck in zip(f_values(cfg), c))
        return lhs, _axis_weight(cfg)

    return _escalate("spec", _params(cfg), sides, policy, identity=cfg.m == 0)


def equal_lambda_f(m: int, lam, n: int) -> list[arb]:
    """f_k for m coincident axis parameters via the binomial expansion."""
    lam = to_arb(lam)
    c = c_coefficients(n)
    f = []
    for k in range(n):
        total, s = arb(0), 0
        while k + s * n - (n - 1) <= m:
            inner = arb(0)
            for i in range(n):
                j = k + s * n - i
                if 0 <= j <= m:
                    inner += math.comb(m, j) * c[i] * ipow(lam, -i)
            total += ipow(lam, 2 * s * n + k) * inner
            s += 1
        f.append(total)
    return f


def spec_equal_lambda_margin(m: int, lam, n: int,
                             policy: PrecisionPolicy | None = None) -> InequalityReport:
    """prod_k sum_s lam^(2sn+k) sum_i C(m, k+sn-i) c_i lam^(-i)  >=  prod c_k (1+lam^2)^(mn)."""
    if not to_arb(lam) > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}; use lambda_zero_bound for 0")
    if m < 0:
        raise ValueError("m must be nonnegative")

    def sides():
        lam_b = to_arb(lam)
        lhs = _prod(equal_lambda_f(m, lam_b, n))
        rhs = _prod(c_coefficients(n)) * ipow(1 + lam_b * lam_b, m * n)
        return lhs, rhs

    params = {"m": m, "n": n, "lambda": lam if isinstance(lam, (int, float)) else str(lam)}
    return _escalate("spec_equal_lambda", params, sides, policy, identity=m == 0)


def n3_f(cfg: DihedralConfig) -> list[arb]:
    """f_0, f_1, f_2 from E with the weights (1, sqrt 3, 1)."""
    if cfg.n != 3:
        raise ValueError(f"n3 form needs n = 3, got n = {cfg.n}")
    lams = cfg.lambdas()
    m, N = cfg.m, cfg.m + 3
    E = elementary_symmetric(lams)
    r3 = arb(3).sqrt()

    def e(j):
        return E[j] if 0 <= j <= m else arb(0)

    f = []
    for k in range(3):
        total, weight, s = arb(0), arb(1), 0
        while 3 * s + k - 2 <= m:
            if s > 0:
                idx = N - 3 * s - k
                if idx < 1:
                    break
                weight = weight * ipow(lams[idx - 1], 3)
            total += weight * (e(3 * s + k) + r3 * e(3 * s + k - 1) + e(3 * s + k - 2))
            s += 1
        f.append(total)
    return f


def n3_margin(cfg: DihedralConfig, policy: PrecisionPolicy | None = None) -> InequalityReport:
    """f_0 f_1 f_2  >=  sqrt(3) prod (1 + lambda_i^2)^3."""
    if cfg.n != 3:
        raise ValueError(f"n3 inequality needs n = 3, got n = {cfg.n}")

    def sides():
        return _prod(n3_f(cfg)), arb(3).sqrt() * _axis_weight(cfg)

    return _escalate("n3", _params(cfg), sides, policy, identity=cfg.m == 0)


def lambda_zero_bound(n: int, policy: PrecisionPolicy | None = None) -> InequalityReport:
    """n^(n/2) prod c_k  >=  2^C(n,2)."""
    if n < 1:
        raise ValueError("n must be positive")

    def sides():
        lhs = arb(n) ** (arb(n) / 2) * _prod(c_coefficients(n))
        return lhs, ipow(arb(2), math.comb(n, 2))

    return _escalate("lambda_zero", {"n": n}, sides, policy)


def invariance_ratio(cfg: DihedralConfig) -> arb:
    """prod f_k / prod (1 + lambda_i^2)^n at the active precision."""
    return _prod(f_values(cfg)) / _axis_weight(cfg)


def inversion_invariance_check(cfg: DihedralConfig, bits: int = 128) -> arb:
    """Ratio for cfg minus ratio for the reversed, inverted lambda list."""
    with working_precision(bits):
        return invariance_ratio(cfg) - invariance_ratio(cfg.inverted())


# --- sweeps -----------------------------------------------------------------

@dataclass(frozen=True)
class LambdaGrid:
    """Where lambda values come from in a sweep.

    ``kind="log"``: ``points`` log-spaced values in [lo, hi]; lambda lists of
    length m <= 3 take every strictly increasing m-tuple of grid values, longer
    lists take ``points`` seeded Latin-hypercube samples.  ``kind="random"``:
    ``points`` seeded log-uniform draws, sorted.  ``kind="explicit"``: exactly
    ``values``.
    """

    kind: str = "log"
    lo: float = 1e-2
    hi: float = 1e2
    points: int = 50
    values: tuple = ()
    tensor_max_m: int = 3

    @classmethod
    def parse(cls, spec: str) -> "LambdaGrid":
        """``log:LO:HI:K``, ``random:LO:HI:K``, ``random:K`` or ``list:v1,v2,...``."""
        kind, _, rest = spec.partition(":")
        if kind == "list":
            return cls("explicit", values=tuple(float(v) for v in rest.split(",") if v))
        parts = rest.split(":") if rest else []
        if kind not in ("log", "random"):
            raise ValueError(f"unknown grid kind {kind!r}")
        if len(parts) == 1:
            return cls(kind, points=int(parts[0]))
        if len(parts) == 3:
            return cls(kind, float(parts[0]), float(parts[1]), int(parts[2]))
        if not parts:
            return cls(kind)
        raise ValueError(f"bad grid spec {spec!r}")

    def scalars(self, rng: np.random.Generator) -> list[float]:
        if self.kind == "explicit":
            return list(self.values)
        if self.points <= 0:
            return []
        if self.kind == "log":
            return [float(v) for v in np.geomspace(self.lo, self.hi, self.points)]
        u = rng.uniform(math.log(self.lo), math.log(self.hi), self.points)
        return [float(v) for v in np.exp(u)]

    def lists(self, m: int, rng: np.random.Generator) -> list[tuple[float, ...]]:
        if self.points <= 0 and self.kind != "explicit":
            return []
        if m == 0:
            return [()]
        if self.kind == "explicit":
            vals = sorted(set(self.values))
            return list(itertools.combinations(vals, m))
        lo, hi = math.log(self.lo), math.log(self.hi)
        if self.kind == "log" and m <= self.tensor_max_m:
            grid = [float(v) for v in np.geomspace(self.lo, self.hi, self.points)]
            return list(itertools.combinations(grid, m))
        if self.kind == "log":
            sample = qmc.LatinHypercube(d=m, seed=rng).random(self.points)
            raw = np.exp(lo + (hi - lo) * sample)
        else:
            raw = np.exp(rng.uniform(lo, hi, size=(self.points, m)))
        out = []
        for row in raw:
            vals = tuple(sorted(float(v) for v in row))
            if all(vals[i] < vals[i + 1] for i in range(m - 1)):
                out.append(vals)
        return out


@dataclass
class SweepResult:
    which: str
    reports: list = field(default_factory=list)

    @property
    def violated(self) -> list:
        return [r for r in self.reports if r.verdict is InequalityVerdict.VIOLATED]

    @property
    def overlapping(self) -> list:
        return [r for r in self.reports if r.verdict is InequalityVerdict.OVERLAPPING]

    @property
    def min_margin(self) -> arb | None:
        best = None
        for r in self.reports:
            if best is None or r.margin.mid() < best.mid():
                best = r.margin
        return best

    def summary(self) -> dict:
        mm = self.min_margin
        return {
            "which": self.which,
            "count": len(self.reports),
            "holds": len(self.reports) - len(self.violated) - len(self.overlapping),
            "violated": len(self.violated),
            "overlapping": len(self.overlapping),
            "min_margin": None if mm is None else CertifiedScalar.from_ball(mm).to_json(),
        }


def _evaluate(task):
    which, m, n, lam, policy = task
    if which == "spec_equal_lambda":
        return spec_equal_lambda_margin(m, lam, n, policy)
    if which == "lambda_zero":
        return lambda_zero_bound(n, policy)
    cfg = DihedralConfig.from_lambdas(lam, n)
    return {"conj2": conj2_margin, "spec": spec_margin, "n3": n3_margin}[which](cfg, policy)


def sweep_tasks(which: str, m_values: Sequence[int], n_values: Sequence[int],
                grid: LambdaGrid, seed: int = 0,
                policy: PrecisionPolicy | None = None) -> list[tuple]:
    """Deterministic list of evaluation tasks, in grid-index order."""
    if which not in WHICH:
        raise ValueError(f"unknown inequality {which!r}; expected one of {WHICH}")
    policy = policy or PrecisionPolicy()
    tasks = []
    for n in n_values:
        if which == "lambda_zero":
            tasks.append((which, 0, n, None, policy))
            continue
        if which == "n3" and n != 3:
            raise ValueError("the n3 inequality only exists for n = 3")
        for m in m_values:
            rng = np.random.default_rng([seed, m, n])
            if which == "spec_equal_lambda":
                tasks.extend((which, m, n, lam, policy) for lam in grid.scalars(rng))
            else:
                tasks.extend((which, m, n, lams, policy) for lams in grid.lists(m, rng))
    return tasks


def sweep(which: str, m_values: Sequence[int], n_values: Sequence[int],
          grid: LambdaGrid, seed: int = 0, policy: PrecisionPolicy | None = None,
          workers: int = 1) -> SweepResult:
    tasks = sweep_tasks(which, m_values, n_values, grid, seed, policy)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(workers) as pool:
            reports = list(pool.map(_evaluate, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        reports = [_evaluate(t) for t in tasks]
    return SweepResult(which, reports)
