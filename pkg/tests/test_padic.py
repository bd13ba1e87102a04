"""Tests for capped-precision p-adic and ramified arithmetic."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from picardcc.padic import (
    INF,
    PadicContext,
    PadicElement,
    RamifiedElement,
    cube_roots,
    hensel_lift_root,
)
from picardcc.errors import (
    ContextMismatch,
    DivisionByZeroPrecision,
    NoCubeRoot,
    NotSimpleRoot,
)


def test_integer_embedding_mul():
    ctx = PadicContext(5, 4)
    prod = ctx.from_int(7) * ctx.from_int(8)
    assert prod.valuation() == 0
    assert prod.unit == 56 % 625
    assert prod.residue(4) == 56


def test_division_valuations():
    ctx = PadicContext(5, 4)
    q = ctx.from_int(5) / ctx.from_int(25)
    assert q.valuation() == -1
    assert q.unit == 1


def test_inverse_identity():
    ctx = PadicContext(11, 6)
    a = ctx.from_int(12)
    assert (a.inverse() * a).is_congruent(ctx.one())


def test_valuations():
    ctx = PadicContext(5, 6)
    assert ctx.zero().valuation() == INF
    assert ctx.from_int(50).valuation() == 2
    pi3 = RamifiedElement.pi(ctx, 4, 3)
    assert pi3.valuation() == Fraction(3, 4)


def test_rational_constructor():
    ctx = PadicContext(7, 5)
    a = ctx.from_rational(Fraction(3, 14))
    b = a * ctx.from_int(14)
    assert b.is_congruent(ctx.from_int(3))


def test_context_mismatch():
    a = PadicContext(5, 4).from_int(2)
    b = PadicContext(7, 4).from_int(2)
    with pytest.raises(ContextMismatch):
        a + b


def test_zero_sentinel_precision():
    ctx = PadicContext(5, 4)
    a = ctx.from_int(1)
    d = a - a
    assert d.is_zero and not d.is_exact_zero
    assert d.abs_prec == 4
    with pytest.raises(DivisionByZeroPrecision):
        a / d


def test_precision_propagation_add():
    ctx = PadicContext(5, 4)
    # 5*(unit known to 4 digits) has absolute precision 5; adding a unit keeps 4
    a = ctx.from_int(5)
    b = ctx.from_int(2)
    s = a + b
    assert s.rel == 4 and s.v == 0


def test_cube_roots_zero():
    ctx = PadicContext(11, 5)
    roots = cube_roots(ctx.zero())
    assert len(roots) == 1 and roots[0].is_zero


def test_cube_roots_unique_p_2_mod_3():
    ctx = PadicContext(11, 5)
    roots = cube_roots(ctx.from_int(32))
    assert len(roots) == 1
    y = roots[0]
    assert y.residue(1) == 10
    assert (y ** 3).is_congruent(ctx.from_int(32))


def test_cube_roots_p_1_mod_3():
    ctx = PadicContext(13, 4)
    # oracle: cubes mod 13 are {0,1,5,8,12}; 5 is a cube
    expected = len([x for x in range(13) if pow(x, 3, 13) == 5])
    roots = cube_roots(ctx.from_int(5))
    assert len(roots) == expected
    assert len(roots) in (0, 3)
    for y in roots:
        assert (y ** 3).is_congruent(ctx.from_int(5))


def test_cube_roots_bad_valuation():
    ctx = PadicContext(11, 5)
    with pytest.raises(NoCubeRoot):
        cube_roots(ctx.from_int(11))


def test_hensel_linear():
    ctx = PadicContext(7, 5)
    r = hensel_lift_root([-3, 1], 3, ctx)
    assert r.is_congruent(ctx.from_int(3))


def test_hensel_sqrt_of_one():
    ctx = PadicContext(5, 3)
    r = hensel_lift_root([-1, 0, 1], 4, ctx)
    assert r.residue(3) == 124  # brute force: x^2 = 1 mod 125 has roots {1, 124}


def test_hensel_golden_ratio():
    ctx = PadicContext(11, 4)
    r0 = next(x for x in range(11) if (x * x + x - 1) % 11 == 0)
    r = hensel_lift_root([-1, 1, 1], r0, ctx)
    val = r.residue(4)
    assert (val * val + val - 1) % 11 ** 4 == 0


def test_hensel_not_simple():
    ctx = PadicContext(5, 3)
    with pytest.raises(NotSimpleRoot):
        hensel_lift_root([0, 0, 1], 0, ctx)  # x^2, double root


def test_hensel_matches_exhaustion():
    for p in (5, 7):
        for N in (2, 3, 4):
            ctx = PadicContext(p, N)
            g = [3, -2, 0, 1, 1]  # x^4 + x^3 - 2x + 3
            dg = [-2, 0, 3, 4]
            simple = [r for r in range(p)
                      if sum(c * r ** i for i, c in enumerate(g)) % p == 0
                      and sum(c * r ** i for i, c in enumerate(dg)) % p != 0]
            brute = [x for x in range(p ** N)
                     if sum(c * x ** i for i, c in enumerate(g)) % p ** N == 0]
            for r0 in simple:
                lifted = hensel_lift_root(g, r0, ctx).residue(N)
                assert lifted in brute


small_ints = st.integers(min_value=-400, max_value=400)


@settings(max_examples=150, deadline=None)
@given(small_ints, small_ints, small_ints)
def test_ring_axioms(a, b, c):
    ctx = PadicContext(7, 5)
    A, B, C = ctx.from_int(a), ctx.from_int(b), ctx.from_int(c)
    assert ((A + B) + C).is_congruent(A + (B + C))
    assert (A * (B + C)).is_congruent(A * B + A * C)
    assert (A * B).is_congruent(B * A)


@settings(max_examples=150, deadline=None)
@given(small_ints, small_ints)
def test_valuation_properties(a, b):
    ctx = PadicContext(5, 6)
    A, B = ctx.from_int(a), ctx.from_int(b)
    if a and b:
        assert (A * B).valuation() == A.valuation() + B.valuation()
    s = A + B
    assert s.valuation() >= min(A.valuation(), B.valuation())


@settings(max_examples=60, deadline=None)
@given(small_ints, small_ints)
def test_ramified_e1_matches_padic(a, b):
    ctx = PadicContext(7, 5)
    A1 = RamifiedElement.from_padic(ctx.from_int(a), 1)
    B1 = RamifiedElement.from_padic(ctx.from_int(b), 1)
    for flat, plain in (
        (A1 + B1, ctx.from_int(a + b)),
        (A1 * B1, ctx.from_int(a * b)),
        (A1 - B1, ctx.from_int(a - b)),
    ):
        got = flat.coeffs[0]
        assert got.is_congruent(plain)


def test_ramified_mul_against_symbolic():
    # (1 + 2 pi + 3 pi^2)(4 + 5 pi) in Q_5(5^(1/3)):
    # = 4 + 13 pi + 22 pi^2 + 15 pi^3 -> 4 + 75, 13 pi, 22 pi^2
    ctx = PadicContext(5, 6)
    a = RamifiedElement(ctx, 3, [1, 2, 3])
    b = RamifiedElement(ctx, 3, [4, 5, 0])
    c = a * b
    assert c.coeffs[0].is_congruent(ctx.from_int(4 + 15 * 5))
    assert c.coeffs[1].is_congruent(ctx.from_int(13))
    assert c.coeffs[2].is_congruent(ctx.from_int(22))


def test_ramified_pi_power_fold():
    ctx = PadicContext(5, 6)
    pi = RamifiedElement.pi(ctx, 4)
    p4 = pi ** 4
    assert p4.coeffs[0].is_congruent(ctx.from_int(5))
    assert all(c.is_zero for c in p4.coeffs[1:])


def test_ramified_inverse():
    ctx = PadicContext(7, 6)
    a = RamifiedElement(ctx, 5, [3, 1, 0, 2, 6])
    ainv = a.inverse()
    prod = a * ainv
    one = prod.coeffs[0]
    assert one.is_congruent(ctx.one(), 4)
    for c in prod.coeffs[1:]:
        assert c.is_zero or c.v >= 4


def test_ramified_inverse_with_pi_valuation():
    ctx = PadicContext(5, 8)
    pi = RamifiedElement.pi(ctx, 3)
    a = pi * 2 + pi * pi * 3  # valuation 1/3
    assert a.valuation() == Fraction(1, 3)
    prod = a * a.inverse()
    assert prod.coeffs[0].is_congruent(ctx.one(), 6)


def test_ramified_projection_to_qp():
    ctx = PadicContext(5, 6)
    pi = RamifiedElement.pi(ctx, 4)
    a = pi ** 8  # = 25, pure Q_p value
    x = a.to_padic()
    assert x.is_congruent(ctx.from_int(25))


def test_ramified_valuation_of_mixed():
    ctx = PadicContext(5, 6)
    a = RamifiedElement(ctx, 4, [ctx.from_int(25), ctx.from_int(5), 0, 0])
    # min(4*2+0, 4*1+1) = 5
    assert a.valuation() == Fraction(5, 4)
