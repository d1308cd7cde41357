import random
from fractions import Fraction

import pytest
from flint import acb, arb, ctx
from hypothesis import given, strategies as st

from atiyah.arith import (
    CertifiedScalar,
    CirclePoint,
    Order,
    PrecisionPolicy,
    Status,
    compare_certified,
    det_certified,
    eliminate_det,
    ipow,
    to_acb,
    to_arb,
    width,
    working_precision,
)
from oracles import cofactor_det


def test_working_precision_restores():
    before = ctx.prec
    with working_precision(300):
        assert ctx.prec == 300
    assert ctx.prec == before


def test_working_precision_restores_on_error():
    before = ctx.prec
    with pytest.raises(RuntimeError):
        with working_precision(512):
            raise RuntimeError
    assert ctx.prec == before


def test_exact_conversions():
    with working_precision(64):
        assert to_arb(0.1).is_exact()
        assert to_arb(3).is_exact()
        assert to_arb(Fraction(1, 3)).contains(arb(1) / 3)
        assert to_acb(1 + 2j) == acb(1, 2)
    with pytest.raises(ValueError):
        to_arb(float("nan"))
    with pytest.raises(ValueError):
        to_acb(complex(1, float("inf")))


@pytest.mark.parametrize("turn, expected", [(0, 1), (Fraction(1, 4), 1j), (Fraction(1, 2), -1),
                                            (Fraction(3, 4), -1j), (Fraction(5, 4), 1j)])
def test_circle_point_quarter_turns_exact(turn, expected):
    z = CirclePoint(turn).to_acb()
    assert z.is_exact()
    assert z == to_acb(complex(expected))


def test_circle_point_generic_turn():
    with working_precision(128):
        z = CirclePoint(Fraction(1, 3)).to_acb()
        assert z.real.contains(arb(-1) / 2)
    with working_precision(256):
        assert z.imag.contains(arb(3).sqrt() / 2)
        assert width(z) < arb("1e-35")


def test_ipow_handles_zero_containing_balls():
    x = arb(0, 1)
    assert ipow(x, 2).contains(arb(0))
    assert ipow(x, 3).is_finite()
    assert ipow(arb(2), -2) == arb(0.25)


@pytest.mark.parametrize("a, b, expected", [
    (arb(1, 0.1), arb(2, 0.1), Order.LESS),
    (arb(1, 0.5), arb(1.2, 0.5), Order.OVERLAPPING),
    (arb(9, 1e-12), arb(8, 1e-12), Order.GREATER),
])
def test_compare_certified(a, b, expected):
    assert compare_certified(a, b) is expected


def test_det_identity():
    det, v = det_certified([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert det.contains(acb(1))
    assert v.status is Status.CERTIFIED_NONZERO
    assert v.bits_used == 128


def test_det_duplicated_row_not_nonzero():
    det, v = det_certified([[1, 2, 3], [4, 5, 6], [1, 2, 3]])
    assert det.contains(acb(0))
    assert v.status is Status.CERTIFIED_ZERO


def test_det_duplicated_rational_row():
    M = [[Fraction(1, 3), Fraction(2, 7)], [Fraction(1, 3), Fraction(2, 7)]]
    det, v = det_certified(M, PrecisionPolicy(64, 256))
    assert det.contains(acb(0))
    assert v.status is Status.CERTIFIED_ZERO


def test_det_diag_two():
    det, v = det_certified([[2, 0], [0, 2]])
    assert det.contains(acb(4))
    assert v.status is Status.CERTIFIED_NONZERO


def test_numeric_singularity_is_inconclusive_not_zero():
    # rows equal as real numbers but not structurally identical
    def build(bits):
        with working_precision(bits):
            third = arb(1) / 3
            return [[third, arb(1)], [arb(1) - 2 * third, arb(1)]]
    det, v = det_certified(build, PrecisionPolicy(32, 128))
    assert v.status is Status.INCONCLUSIVE
    assert det.contains(acb(0))
    assert v.bits_used == 128


def test_all_pivots_straddle_zero_uses_hadamard_bound():
    with working_precision(64):
        M = [[acb(arb(0, 1e-3)), acb(arb(0, 1e-3))], [acb(arb(0, 1e-3)), acb(arb(0, 1e-3))]]
        det = eliminate_det(M)
        assert det.contains(acb(0))
        assert det.rad() < 1e-5


def test_escalation_certifies_tiny_determinant():
    eps = Fraction(1, 2 ** 200)

    def build(bits):
        with working_precision(bits):
            return [[1, 1], [1, 1 + to_arb(eps)]]

    det, v = det_certified(build, PrecisionPolicy(64, 4096))
    assert v.status is Status.CERTIFIED_NONZERO
    assert v.bits_used == 256
    with working_precision(512):
        assert det.contains(to_acb(eps))


def test_policy_validation_and_env(monkeypatch):
    with pytest.raises(ValueError):
        PrecisionPolicy(512, 128)
    assert list(PrecisionPolicy(128, 1000).schedule()) == [128, 256, 512, 1000]
    monkeypatch.setenv("ATIYAH_MAX_BITS", "512")
    assert PrecisionPolicy.from_env(max_bits=4096).max_bits == 512


def _rational_matrix(rng, n):
    return [[Fraction(rng.randint(-9, 9), rng.randint(1, 7)) for _ in range(n)] for _ in range(n)]


def test_det_contains_exact_rational_determinant():
    rng = random.Random(20240611)
    for _ in range(40):
        n = rng.randint(1, 6)
        M = _rational_matrix(rng, n)
        exact = cofactor_det(M)
        det, v = det_certified(M)
        with working_precision(512):
            assert det.contains(to_acb(exact))
        if exact != 0:
            assert v.status is Status.CERTIFIED_NONZERO


@given(st.lists(st.integers(-5, 5), min_size=9, max_size=9))
def test_integer_3x3_containment(vals):
    M = [vals[0:3], vals[3:6], vals[6:9]]
    det, v = det_certified(M)
    exact = cofactor_det([[Fraction(x) for x in r] for r in M])
    assert det.contains(to_acb(int(exact)))
    assert (v.status is Status.CERTIFIED_NONZERO) == (exact != 0)


def test_monotone_refinement():
    rng = random.Random(7)
    M = _rational_matrix(rng, 5)
    widths = []
    for bits in (64, 128, 256, 512):
        with working_precision(bits):
            det = eliminate_det([[to_acb(e) for e in row] for row in M])
            widths.append(width(det))
    for lo, hi in zip(widths[1:], widths[:-1]):
        assert lo <= hi


def test_determinism_bit_identical():
    rng = random.Random(3)
    M = _rational_matrix(rng, 6)
    d1, v1 = det_certified(M)
    d2, v2 = det_certified(M)
    assert d1.mid() == d2.mid() and d1.rad() == d2.rad()
    assert v1 == v2


def test_certified_scalar_snapshot_encloses():
    with working_precision(200):
        x = arb(2).sqrt()
        z = acb(x, -arb(3).sqrt())
        for ball in (x, z, arb(0), arb("1e-400") * 3):
            snap = CertifiedScalar.from_ball(ball)
            again = snap.to_ball()
            assert again.contains(ball)
            assert CertifiedScalar.from_json(snap.to_json()) == snap
