import numpy as np
import pytest
from atiyah.arith import PrecisionPolicy, is_exact_zero, working_precision
from atiyah.dihedral import DihedralConfig, c_coefficients, f_values
from atiyah.inequalities import (
    InequalityVerdict,
    LambdaGrid,
    conj2_margin,
    equal_lambda_f,
    inversion_invariance_check,
    lambda_zero_bound,
    n3_f,
    n3_margin,
    spec_equal_lambda_margin,
    spec_margin,
    sweep,
    sweep_tasks,
)

HOLDS = InequalityVerdict.HOLDS


def test_lambda_zero_n3_is_exactly_one():
    rep = lambda_zero_bound(3)
    assert rep.verdict is HOLDS
    assert rep.margin.contains(1)
    assert rep.margin.rad() < 1e-30


@pytest.mark.parametrize("n", range(3, 13))
def test_lambda_zero_holds(n):
    assert lambda_zero_bound(n).verdict is HOLDS


def test_conj2_and_spec_simple():
    dc = DihedralConfig(3, (0,))
    assert conj2_margin(dc).verdict is HOLDS
    assert spec_margin(dc).verdict is HOLDS


def test_spec_identity_without_axis_points():
    rep = spec_margin(DihedralConfig(5, ()))
    assert rep.verdict is InequalityVerdict.OVERLAPPING
    assert is_exact_zero(rep.margin)
    assert rep.bits == 128
    rep = spec_equal_lambda_margin(0, 2.0, 4)
    assert is_exact_zero(rep.margin)


def test_m0_sides_agree():
    with working_precision(128):
        for n in range(3, 9):
            rep = spec_margin(DihedralConfig(n, ()))
            assert rep.lhs.overlaps(rep.rhs)


def test_equal_lambda_f_matches_general_f():
    with working_precision(160):
        for n in (3, 4, 5):
            for m in range(0, 6):
                for lam in (0.3, 1.0, 2.5):
                    general = f_values(DihedralConfig.from_lambdas((lam,) * m, n, strict=False))
                    special = equal_lambda_f(m, lam, n)
                    for a, b in zip(general, special):
                        assert a.overlaps(b)


def test_n3_f_matches_general_f():
    rng = np.random.default_rng(1)
    with working_precision(128):
        for m in range(0, 6):
            lams = tuple(sorted(rng.uniform(0.1, 5, m)))
            dc = DihedralConfig.from_lambdas(lams, 3)
            for a, b in zip(n3_f(dc), f_values(dc)):
                assert a.overlaps(b)


def test_specialization_chain():
    # spec with a repeated lambda is spec_eq with both sides divided by prod c_k
    with working_precision(128):
        dc = DihedralConfig.from_lambdas((1.5, 1.5), 3, strict=False)
        s = spec_margin(dc)
        e = spec_equal_lambda_margin(2, 1.5, 3)
        c = c_coefficients(3)
        cprod = c[0] * c[1] * c[2]
        assert (s.lhs * cprod).overlaps(e.lhs)
        assert (s.rhs * cprod).overlaps(e.rhs)
        n3 = n3_margin(dc)
        assert n3.lhs.overlaps(e.lhs)


def test_spec_eq_rejects_nonpositive():
    with pytest.raises(ValueError):
        spec_equal_lambda_margin(2, 0, 3)
    with pytest.raises(ValueError):
        spec_equal_lambda_margin(2, -1.0, 3)


def test_n3_requires_n3():
    with pytest.raises(ValueError):
        n3_margin(DihedralConfig(4, (0,)))


def test_inversion_invariance():
    rng = np.random.default_rng(6)
    for _ in range(30):
        m = int(rng.integers(1, 5))
        n = int(rng.integers(3, 7))
        lams = tuple(sorted(float(v) for v in np.exp(rng.uniform(-3, 3, m))))
        diff = inversion_invariance_check(DihedralConfig.from_lambdas(lams, n))
        assert diff.contains(0)


def test_grid_parse():
    g = LambdaGrid.parse("log:0.01:100:50")
    assert (g.kind, g.lo, g.hi, g.points) == ("log", 0.01, 100.0, 50)
    assert LambdaGrid.parse("random:7").points == 7
    assert LambdaGrid.parse("list:1,2,3").values == (1.0, 2.0, 3.0)
    with pytest.raises(ValueError):
        LambdaGrid.parse("cubic:3")
    with pytest.raises(ValueError):
        LambdaGrid.parse("log:1:2")


def test_grid_lists():
    rng = np.random.default_rng(0)
    g = LambdaGrid("log", 0.1, 10, 5)
    assert len(g.lists(2, rng)) == 10
    assert g.lists(0, rng) == [()]
    big = g.lists(4, rng)
    assert all(len(t) == 4 and list(t) == sorted(t) for t in big)


def test_empty_grid_sweep():
    res = sweep("spec", [1], [3], LambdaGrid("log", points=0))
    assert res.reports == []
    assert res.min_margin is None
    assert res.summary()["count"] == 0


def test_sweep_deterministic_and_holds():
    grid = LambdaGrid("random", 0.05, 20, 8)
    a = sweep("conj2", [1, 2], [3, 4], grid, seed=5)
    b = sweep("conj2", [1, 2], [3, 4], grid, seed=5)
    assert [r.params for r in a.reports] == [r.params for r in b.reports]
    assert not a.violated and not a.overlapping


def test_sweep_tasks_unknown():
    with pytest.raises(ValueError):
        sweep_tasks("nope", [1], [3], LambdaGrid())
    with pytest.raises(ValueError):
        sweep_tasks("n3", [1], [4], LambdaGrid())


def test_escalation_reports_bits():
    rep = spec_equal_lambda_margin(1, 1.0, 3, PrecisionPolicy(64, 256))
    assert rep.verdict is HOLDS
    assert rep.bits == 64


def test_report_json_shape():
    d = conj2_margin(DihedralConfig(3, (1,))).to_json()
    assert d["which"] == "conj2" and d["verdict"] == "Holds"
    assert set(d["margin"]) >= {"mid", "rad"}
    assert d["params"] == {"m": 1, "n": 3, "a": [1]}


def test_extreme_lambda_margins_positive():
    assert spec_equal_lambda_margin(3, 1e6, 5).verdict is HOLDS
    assert spec_equal_lambda_margin(3, 1e-6, 5).verdict is HOLDS
