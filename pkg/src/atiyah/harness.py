"""Command implementations behind the CLI, plus config ingestion and run reports.

Every ``cmd_*`` function returns a :class:`RunReport` whose ``exit_code`` follows
the CLI contract: 0 ok, 2 inconclusive, 3 invalid input, 4 violation found.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .arith import (
    CertifiedScalar,
    PrecisionPolicy,
    Status,
    det_certified,
    is_exact_zero,
    working_precision,
)
from .dihedral import (
    DihedralConfig,
    ProportionalityError,
    build_dihedral_config,
    closed_form_abs_det,
    cross_check_proportionality,
    normalize_dihedral,
)
from .forms import coefficient_matrix_generic
from .geometry import GeometryError, Point3, ValidationError, normalize_configuration
from .inequalities import (
    InequalityVerdict,
    LambdaGrid,
    SweepResult,
    conj2_margin,
    lambda_zero_bound,
    n3_margin,
    spec_equal_lambda_margin,
    spec_margin,
    sweep,
)

EXIT_OK = 0
EXIT_INCONCLUSIVE = 2
EXIT_INVALID = 3
EXIT_VIOLATION = 4

SCHEMA_VERSION = 1


class ConfigError(ValidationError):
    """Malformed or semantically invalid configuration file."""


@dataclass
class RunReport:
    command: dict
    results: dict
    exit_code: int = EXIT_OK
    seed: int | None = None
    duration_s: float | None = None

    def to_json(self) -> dict:
        d = {
            "schema": SCHEMA_VERSION,
            "command": self.command,
            "results": self.results,
            "exit_code": self.exit_code,
            "seed": self.seed,
        }
        if self.duration_s is not None:
            d["duration_s"] = self.duration_s
        return d

    @classmethod
    def from_json(cls, d: dict) -> "RunReport":
        return cls(d["command"], d["results"], d["exit_code"], d.get("seed"), d.get("duration_s"))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> "RunReport":
        return cls.from_json(json.loads(text))


# --- config ingestion -------------------------------------------------------

def parse_number(v):
    """JSON/CLI number: ints stay ints, ``"p/q"`` strings become Fractions."""
    if isinstance(v, bool):
        raise ConfigError(f"boolean is not a number: {v!r}")
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ConfigError(f"non-finite number {v!r}")
        return v
    if isinstance(v, str):
        s = v.strip()
        try:
            if "/" in s:
                return Fraction(s)
            x = float(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"not a number: {v!r}") from exc
        if not math.isfinite(x):
            raise ConfigError(f"non-finite number {v!r}")
        return int(s) if s.lstrip("+-").isdigit() else x
    raise ConfigError(f"not a number: {v!r}")


def parse_number_list(text: str) -> list:
    return [parse_number(t) for t in text.split(",") if t.strip()]


def parse_int_range(text: str) -> list[int]:
    """``"3"``, ``"1-6"`` or ``"2,4,5"``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _dihedral_from_json(d: dict) -> tuple[DihedralConfig, dict]:
    try:
        n = int(d["n"])
        axis = [parse_number(v) for v in d.get("a", [])]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"dihedral block needs 'n' and 'a': {exc}") from exc
    m = int(d.get("m", len(axis)))
    if m != len(axis):
        raise ConfigError(f"dihedral m={m} but {len(axis)} axis coordinates given")
    scaled, transform = normalize_dihedral(axis, n, parse_number(d.get("radius", 1)),
                                           parse_number(d.get("offset", 0)))
    dc, _ = build_dihedral_config(m, scaled, n)
    return dc, transform


def load_config(path) -> dict:
    """Read a configuration file into ``{"points": [...]}`` or ``{"dihedral": ...}``."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if "points" in data:
        pts = []
        for k, p in enumerate(data["points"]):
            try:
                x1, x2, x3 = (parse_number(p[key]) for key in ("x1", "x2", "x3"))
            except (KeyError, TypeError) as exc:
                raise ConfigError(f"point {k + 1} needs x1, x2, x3") from exc
            pts.append(Point3.from_xyz(x1, x2, x3))
        return {"points": pts}
    if "dihedral" in data:
        dc, transform = _dihedral_from_json(data["dihedral"])
        return {"dihedral": dc, "transform": transform}
    raise ConfigError("config needs a 'points' or 'dihedral' key")


def _echo_point(p: Point3) -> dict:
    z = p.z
    x2, x3 = (z.real, z.imag) if isinstance(z, complex) else (z, 0)
    return {"x1": _num(p.a), "x2": _num(x2), "x3": _num(x3)}


def _num(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else v.numerator
    if isinstance(v, (int, float)):
        return v
    return str(v)


# --- commands ---------------------------------------------------------------

def certify_points(points: Sequence[Point3], policy: PrecisionPolicy) -> dict:
    cfg, perm = normalize_configuration(points)
    matrix = coefficient_matrix_generic(cfg, policy.initial_bits)
    _, verdict = det_certified(matrix, policy)
    return {"N": len(cfg), "permutation": list(perm), "verdict": verdict.to_json()}


def _status_exit(status: Status) -> int:
    if status is Status.CERTIFIED_NONZERO:
        return EXIT_OK
    if status is Status.CERTIFIED_ZERO:
        return EXIT_VIOLATION
    return EXIT_INCONCLUSIVE


def cmd_verify(config_path, policy: PrecisionPolicy | None = None) -> RunReport:
    policy = policy or PrecisionPolicy.from_env()
    command = {"name": "verify", "config": str(config_path),
               "initial_bits": policy.initial_bits, "max_bits": policy.max_bits}
    try:
        loaded = load_config(config_path)
        if "dihedral" in loaded:
            dc = loaded["dihedral"]
            _, gcfg = build_dihedral_config(dc.m, dc.axis_coords, dc.n)
            points = list(gcfg.points)
            echo = {"dihedral": dc.echo(), "transform": loaded["transform"]}
        else:
            points = loaded["points"]
            echo = {"points": [_echo_point(p) for p in points]}
        res = certify_points(points, policy)
    except (ValidationError, GeometryError) as exc:
        return RunReport(command, {"error": str(exc)}, EXIT_INVALID)
    res["configuration"] = echo
    return RunReport(command, res, _status_exit(Status(res["verdict"]["status"])))


def _closed_form_json(dc: DihedralConfig, bits: int) -> dict:
    with working_precision(bits):
        cf = closed_form_abs_det(dc)
    return {
        "f": [CertifiedScalar.from_ball(v).to_json() for v in cf.f],
        "c_factor": CertifiedScalar.from_ball(cf.c_factor).to_json(),
        "abs_det": CertifiedScalar.from_ball(cf.abs_det).to_json(),
        "status": (Status.CERTIFIED_NONZERO if cf.abs_det > 0 else Status.INCONCLUSIVE).value,
        "bits": bits,
    }


def _cross_check_json(dc: DihedralConfig, policy: PrecisionPolicy) -> tuple[dict, int]:
    try:
        rep = cross_check_proportionality(dc, policy)
    except ProportionalityError as exc:
        return {"ok": False, "error": str(exc), "row": exc.row, "index": exc.index}, EXIT_VIOLATION
    ok = rep.determinants_overlap
    code = EXIT_OK if ok else EXIT_VIOLATION
    if ok and rep.generic_verdict.status is not Status.CERTIFIED_NONZERO:
        code = _status_exit(rep.generic_verdict.status)
    return {
        "ok": ok,
        "rows_proportional": True,
        "row_map": [r + 1 for r in rep.row_map],
        "sigma": [CertifiedScalar.from_ball(s).to_json() for s in rep.sigmas],
        "generic": rep.generic_verdict.to_json(),
        "predicted_abs_det": CertifiedScalar.from_ball(rep.predicted_abs_det).to_json(),
        "bits": rep.bits,
        "notes": rep.notes,
    }, code


def cmd_dihedral(m: int, axis: Sequence, n: int, cross_check: bool = False,
                 policy: PrecisionPolicy | None = None, radius=1, offset=0) -> RunReport:
    policy = policy or PrecisionPolicy.from_env()
    command = {"name": "dihedral", "m": m, "a": [_num(v) for v in axis], "n": n,
               "cross_check": cross_check, "radius": _num(radius), "offset": _num(offset)}
    try:
        if len(axis) != m:
            raise ValidationError(f"--m {m} but {len(axis)} axis coordinates")
        scaled, transform = normalize_dihedral(axis, n, radius, offset)
        dc, _ = build_dihedral_config(m, scaled, n)
    except (ValidationError, GeometryError) as exc:
        return RunReport(command, {"error": str(exc)}, EXIT_INVALID)
    results = {"configuration": dc.echo(), "transform": transform,
               "outside_theorem": dc.outside_theorem,
               "closed_form": _closed_form_json(dc, policy.initial_bits)}
    code = EXIT_OK if results["closed_form"]["status"] == Status.CERTIFIED_NONZERO.value \
        else EXIT_INCONCLUSIVE
    if cross_check:
        results["cross_check"], cc_code = _cross_check_json(dc, policy)
        code = max(code, cc_code)
    return RunReport(command, results, code)


CLI_WHICH = {"conj2": "conj2", "spec": "spec", "spec-eq": "spec_equal_lambda",
             "n3": "n3", "lambda-zero": "lambda_zero"}


def _inequality_exit(reports) -> int:
    verdicts = {r.verdict for r in reports}
    if InequalityVerdict.VIOLATED in verdicts:
        return EXIT_VIOLATION
    if InequalityVerdict.OVERLAPPING in verdicts:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_inequality(which: str, m_values: Sequence[int] = (), n_values: Sequence[int] = (3,),
                   lambdas: Sequence | None = None, grid: LambdaGrid | None = None,
                   seed: int = 0, policy: PrecisionPolicy | None = None,
                   workers: int = 1) -> RunReport:
    """Evaluate one inequality, either at explicit parameters or over a sweep.

    With ``lambdas`` and no grid: for ``spec_equal_lambda`` every value is a
    separate lambda for each m; for the list inequalities the values are one
    configuration's lambda_1..lambda_m.
    """
    policy = policy or PrecisionPolicy.from_env()
    key = CLI_WHICH.get(which, which)
    command = {"name": "inequality", "which": key, "m": list(m_values), "n": list(n_values),
               "lambda": None if lambdas is None else [_num(v) for v in lambdas],
               "grid": None if grid is None else _grid_echo(grid)}
    try:
        if key == "lambda_zero":
            reports = [lambda_zero_bound(n, policy) for n in n_values]
        elif grid is not None:
            reports = sweep(key, list(m_values), list(n_values), grid, seed, policy, workers).reports
        elif lambdas is None:
            raise ValidationError("give --lambda values or a --grid")
        elif key == "spec_equal_lambda":
            reports = [spec_equal_lambda_margin(m, lam, n, policy)
                       for n in n_values for m in m_values for lam in lambdas]
        else:
            fn = {"conj2": conj2_margin, "spec": spec_margin, "n3": n3_margin}[key]
            reports = [fn(DihedralConfig.from_lambdas(tuple(lambdas), n), policy)
                       for n in n_values]
    except (ValidationError, GeometryError, ValueError) as exc:
        return RunReport(command, {"error": str(exc)}, EXIT_INVALID, seed)
    summary = _summarize(key, reports)
    return RunReport(command, {"summary": summary, "reports": [r.to_json() for r in reports]},
                     _inequality_exit(reports), seed)


def _summarize(key, reports) -> dict:
    return SweepResult(key, list(reports)).summary()


def _grid_echo(g: LambdaGrid) -> dict:
    return {"kind": g.kind, "lo": g.lo, "hi": g.hi, "points": g.points,
            "values": list(g.values)}


# --- fuzzing ----------------------------------------------------------------

def sample_general(rng: np.random.Generator, N: int, box: float, min_sep: float
                   ) -> list[tuple[float, float, float]]:
    """N points uniform in [-box, box]^3, pairwise at least min_sep * (2 box) apart."""
    threshold = min_sep * 2 * box
    pts: list[np.ndarray] = []
    while len(pts) < N:
        p = rng.uniform(-box, box, 3)
        if all(np.linalg.norm(p - q) >= threshold for q in pts):
            pts.append(p)
    return [tuple(float(c) for c in p) for p in pts]


def sample_dihedral(rng: np.random.Generator, N: int, span: float = 10.0
                    ) -> tuple[int, list[float], int]:
    n = int(rng.integers(3, N + 1)) if N >= 3 else int(rng.integers(1, N + 1))
    m = N - n
    while True:
        a = sorted(float(v) for v in rng.uniform(-span, span, m))
        if all(a[i] < a[i + 1] for i in range(m - 1)):
            return m, a, n


def _fuzz_one(task) -> dict:
    mode, seed, index, n_min, n_max, min_sep, box, policy = task
    rng = np.random.default_rng([seed, index])
    N = int(rng.integers(n_min, n_max + 1))
    if mode == "general":
        xyz = sample_general(rng, N, box, min_sep)
        res = certify_points([Point3.from_xyz(*p) for p in xyz], policy)
        status = Status(res["verdict"]["status"])
        out = {"index": index, "N": N, "status": status.value,
               "bits_used": res["verdict"]["bits_used"], "det": res["verdict"]["witness"]}
        if status is not Status.CERTIFIED_NONZERO:
            out["reproduce"] = {"points": [{"x1": x, "x2": y, "x3": z} for x, y, z in xyz]}
        return out
    m, a, n = sample_dihedral(rng, N)
    dc = DihedralConfig(n, tuple(a))
    cc, code = _cross_check_json(dc, policy)
    out = {"index": index, "N": N, "m": m, "n": n, "overlap": cc.get("ok", False),
           "status": cc["generic"]["status"] if "generic" in cc else "Error",
           "bits_used": cc.get("bits", policy.initial_bits)}
    if n >= 3:
        c2 = conj2_margin(dc, policy)
        sp = spec_margin(dc, policy)
        out["conj2"] = c2.verdict.value
        out["spec"] = sp.verdict.value
        out["conj2_margin"] = CertifiedScalar.from_ball(c2.margin).to_json()
        out["spec_margin"] = CertifiedScalar.from_ball(sp.margin).to_json()
        if InequalityVerdict.VIOLATED in (c2.verdict, sp.verdict):
            code = max(code, EXIT_VIOLATION)
        elif any(r.verdict is InequalityVerdict.OVERLAPPING and not is_exact_zero(r.margin)
                 for r in (c2, sp)):
            code = max(code, EXIT_INCONCLUSIVE)
    out["exit"] = code
    if code != EXIT_OK:
        out["reproduce"] = {"dihedral": {"m": m, "a": a, "n": n}}
        if "error" in cc:
            out["error"] = cc["error"]
    return out


def cmd_fuzz(count: int, seed: int, n_min: int = 2, n_max: int = 8, mode: str = "general",
             policy: PrecisionPolicy | None = None, min_sep: float = 1e-3, box: float = 1.0,
             workers: int = 1) -> RunReport:
    policy = policy or PrecisionPolicy.from_env()
    command = {"name": "fuzz", "count": count, "seed": seed, "n_min": n_min, "n_max": n_max,
               "mode": mode, "min_sep": min_sep, "box": box,
               "initial_bits": policy.initial_bits, "max_bits": policy.max_bits}
    if count < 1 or n_min < 2 or n_max < n_min or mode not in ("general", "dihedral"):
        return RunReport(command, {"error": "need count >= 1, 2 <= n_min <= n_max, "
                                            "mode general|dihedral"}, EXIT_INVALID, seed)
    tasks = [(mode, seed, i, n_min, n_max, min_sep, box, policy) for i in range(count)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            instances = list(pool.map(_fuzz_one, tasks, chunksize=max(1, count // (4 * workers))))
    else:
        instances = [_fuzz_one(t) for t in tasks]
    statuses: dict[str, int] = {}
    bits: dict[str, int] = {}
    for inst in instances:
        statuses[inst["status"]] = statuses.get(inst["status"], 0) + 1
        bits[str(inst["bits_used"])] = bits.get(str(inst["bits_used"]), 0) + 1
    if mode == "general":
        failures = [i for i in instances if i["status"] != Status.CERTIFIED_NONZERO.value]
        code = max((_status_exit(Status(i["status"])) for i in failures), default=EXIT_OK)
    else:
        failures = [i for i in instances if i["exit"] != EXIT_OK]
        code = max((i["exit"] for i in failures), default=EXIT_OK)
    summary = {"count": count, "status_counts": statuses, "bits_used": bits,
               "failures": len(failures)}
    if mode == "dihedral":
        summary["overlap_all"] = all(i["overlap"] for i in instances)
        for key in ("conj2", "spec"):
            vals = [i[key] for i in instances if key in i]
            summary[key] = {v: vals.count(v) for v in sorted(set(vals))}
    return RunReport(command, {"summary": summary, "instances": instances,
                               "failures": failures}, code, seed)


# --- rendering --------------------------------------------------------------

def _csv_rows(report: RunReport) -> list[dict]:
    name = report.command.get("name")
    res = report.results
    if "error" in res:
        return [{"command": name, "status": "InvalidInput", "detail": res["error"]}]
    if name == "verify":
        v = res["verdict"]
        return [{"command": name, "N": res["N"], "status": v["status"],
                 "mid": v["witness"]["mid"], "rad": v["witness"]["rad"],
                 "imag_mid": v["witness"].get("imag_mid", ""),
                 "imag_rad": v["witness"].get("imag_rad", ""), "bits_used": v["bits_used"]}]
    if name == "dihedral":
        cf = res["closed_form"]
        rows = [{"command": name, "kind": "closed_form", "status": cf["status"],
                 "mid": cf["abs_det"]["mid"], "rad": cf["abs_det"]["rad"], "bits_used": cf["bits"]}]
        if "cross_check" in res:
            cc = res["cross_check"]
            g = cc.get("generic", {})
            rows.append({"command": name, "kind": "cross_check",
                         "status": g.get("status", "Error") if cc["ok"] else "Mismatch",
                         "mid": g.get("witness", {}).get("mid", ""),
                         "rad": g.get("witness", {}).get("rad", ""),
                         "bits_used": cc.get("bits", "")})
        return rows
    if name == "inequality":
        return [{"command": name, "which": r["which"], "status": r["verdict"],
                 "params": json.dumps(r["params"], sort_keys=True),
                 "mid": r["margin"]["mid"], "rad": r["margin"]["rad"], "bits_used": r["bits"]}
                for r in res["reports"]]
    if name == "fuzz":
        return [{"command": name, "index": i["index"], "N": i["N"], "status": i["status"],
                 "bits_used": i["bits_used"]} for i in res["instances"]]
    return []


def render(report: RunReport, fmt: str = "json") -> str:
    if fmt == "json":
        return report.dumps()
    if fmt == "csv":
        rows = _csv_rows(report)
        fields: list[str] = []
        for r in rows:
            fields.extend(k for k in r if k not in fields)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    if fmt == "text":
        lines = [f"{report.command.get('name')}: exit {report.exit_code}"]
        res = report.results
        if "error" in res:
            lines.append(f"  error: {res['error']}")
        elif "summary" in res:
            for k, v in res["summary"].items():
                lines.append(f"  {k}: {v}")
        for row in _csv_rows(report)[:50]:
            lines.append("  " + " ".join(f"{k}={v}" for k, v in row.items() if k != "command"))
        if report.duration_s is not None:
            lines.append(f"  duration: {report.duration_s:.3f}s")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def timed(fn, *args, **kwargs) -> RunReport:
    t0 = time.perf_counter()
    report = fn(*args, **kwargs)
    report.duration_s = round(time.perf_counter() - t0, 6)
    return report
