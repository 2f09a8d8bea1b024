from fractions import Fraction

import pytest

from conjforge.cantor import FullTree, cantor_endpoint, make_p_tree, make_q_tree, ones_path
from conjforge.dynamics import (
    Fixedness,
    bump_eval,
    build_dynamics,
    derivative_bound_certificate,
    exp_neg,
    exp_neg_upper,
    is_fixed,
    level_bump_sum,
    scaled_bump_eval,
)
from conjforge.exact import pow2

# oracle: exp(-4) via an independent high-precision evaluation (mpmath,
# 40 digits), frozen here
EXP_MINUS_4 = Fraction("0.0183156388887341802937180212732412422119")


def test_exp_neg_against_oracle():
    import mpmath

    mpmath.mp.dps = 40
    for t in (Fraction(1, 2), Fraction(4), Fraction(7, 3), Fraction(19)):
        for p in (10, 30, 48):
            got = exp_neg(t, p)
            want = Fraction(str(mpmath.exp(-mpmath.mpf(t.numerator) / t.denominator)))
            assert abs(got - want) <= pow2(p) + Fraction(1, 10**35)


def test_exp_neg_edge_cases():
    assert exp_neg(Fraction(0), 10) == 1
    assert exp_neg(Fraction(100), 10) == 0  # true value below 2**-10
    assert exp_neg_upper(Fraction(1000)) < pow2(1200)
    assert exp_neg_upper(Fraction(4)) >= EXP_MINUS_4


def test_bump_endpoints_exact_zero():
    for p in (0, 10, 40):
        assert bump_eval(Fraction(0), p) == 0
        assert bump_eval(Fraction(1), p) == 0


def test_bump_midpoint_matches_oracle():
    got = bump_eval(Fraction(1, 2), 20)
    assert abs(got - EXP_MINUS_4) <= pow2(20)
    got = bump_eval(Fraction(1, 2), 40)
    assert abs(got - EXP_MINUS_4) <= pow2(40) + Fraction(1, 10**38)


def test_scaled_bump():
    a, c = Fraction(0), Fraction(1, 2)
    assert scaled_bump_eval(a, c, Fraction(0), 20) == 0
    assert scaled_bump_eval(a, c, Fraction(1, 2), 20) == 0
    got = scaled_bump_eval(a, c, Fraction(1, 4), 20)
    assert abs(got - EXP_MINUS_4 / 2) <= pow2(20)
    # identity scaling agrees with the bare bump
    whole = scaled_bump_eval(Fraction(0), Fraction(1), Fraction(1, 2), 20)
    assert abs(whole - bump_eval(Fraction(1, 2), 21)) <= pow2(19)


def test_level_bump_sum_examples():
    p_tree = make_p_tree()
    for n in (1, 2, 5):
        assert level_bump_sum(p_tree, n, Fraction(1, 3), 30) == 0
        assert level_bump_sum(p_tree, n, Fraction(0), 30) == 0
    got = level_bump_sum(FullTree(), 1, Fraction(1, 2), 30)
    want = EXP_MINUS_4 / 27  # weight 1/3 times width 1/9 times bump(1/2)
    assert abs(got - want) <= pow2(29)


def test_truncation_consistency():
    # successive partial sums differ by less than half the level weight tail
    pe = 40
    p_code = build_dynamics(make_p_tree())
    xs = [Fraction(1, 2), Fraction(2, 5), Fraction(9, 11)]
    for x in xs:
        for n in (2, 4, 6):
            a = p_code.partial(x, n, pe)
            b = p_code.partial(x, n + 6, pe)
            assert abs(a - b) + pow2(pe - 1) < Fraction(1, 2 * 3**n)


def test_dynamics_endpoints_and_fixed_points():
    code = build_dynamics(make_p_tree())
    assert code.rational_eval(Fraction(0)).query(30) == 0
    assert code.rational_eval(Fraction(1)).query(30) == 1
    # 1/3 codes the all-zeros path, which survives in the tree
    r = code.rational_eval(Fraction(1, 3))
    assert r.exact == Fraction(1, 3)
    assert code.rational_eval(Fraction(1, 2)).query(30) > Fraction(1, 2)


def test_is_fixed_examples():
    code = build_dynamics(make_p_tree())
    assert is_fixed(code, Fraction(5, 9), 30) is Fixedness.FIXED_UP_TO_P
    assert is_fixed(code, Fraction(1, 2), 30) is Fixedness.NOT_FIXED
    assert is_fixed(code, Fraction(0), 30) is Fixedness.FIXED_UP_TO_P


def test_is_fixed_survivor_endpoints():
    # an interval endpoint is fixed exactly when its constant-tail path
    # survives in the tree
    from conjforge.cantor import ECPath

    tree = make_q_tree([1])
    code = build_dynamics(tree)
    for s in ("", "0", "11", "1100"):
        if not tree.has_path_through(s):
            continue
        for b in (0, 1):
            x = cantor_endpoint(s, b)
            extremal = tree.leftmost_path(s) if b == 0 else tree.rightmost_path(s)
            verdict = is_fixed(code, x, 20)
            if ECPath(s, b) == extremal:
                assert verdict is Fixedness.FIXED_UP_TO_P
            else:
                assert verdict is Fixedness.NOT_FIXED


def test_monotone_lipschitz_domination_on_grid():
    pe = 40
    code = build_dynamics(make_p_tree())
    grid = [Fraction(k, 40) for k in range(41)]
    vals = [code.rational_eval(x).query(pe) for x in grid]
    for x, v in zip(grid, vals):
        assert v >= x - pow2(pe)  # domination
    for (x1, v1), (x2, v2) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        assert v2 - v1 > pow2(pe - 1)  # certified strict increase
        assert abs(v2 - v1) <= Fraction(3, 2) * (x2 - x1) + pow2(pe - 1)


def test_component_midpoints_not_fixed():
    from conjforge.cantor import complement_components

    code = build_dynamics(make_p_tree())
    for n in (1, 2, 3):
        for a, b in complement_components(make_p_tree(), n):
            assert is_fixed(code, (a + b) / 2, 25) is Fixedness.NOT_FIXED


def test_derivative_certificate_smoke():
    cert = derivative_bound_certificate(cells=400, precision=24)
    assert cert["certifies_below_one"]
    assert cert["upper_bound"] < 1
    assert cert["point_estimate"] > Fraction(7, 100)  # peak is near 0.078


def test_modulus_contract():
    code = build_dynamics(make_p_tree())
    assert code.modulus(10) == 11
    x, y = Fraction(401, 1000), Fraction(4, 10)
    fx = code.rational_eval(x).query(30)
    fy = code.rational_eval(y).query(30)
    assert abs(fx - fy) < Fraction(3, 2) * abs(x - y) + pow2(29)
