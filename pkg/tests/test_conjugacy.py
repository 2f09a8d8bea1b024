from fractions import Fraction

import pytest

from conjforge.cantor import (
    ALL_ONES,
    ECPath,
    cantor_encode,
    cantor_value,
    make_p_tree,
    make_q_tree,
    ones_path,
)
from conjforge.conjugacy import (
    Iv,
    default_verification_grid,
    extract_order_iso,
    invert_monotone,
    label_path_iso,
    ones_zeros_order_iso,
    order_iso_for,
    synth_conjugacy,
    validate_order_iso,
    verify_conjugacy,
)
from conjforge.dynamics import build_dynamics
from conjforge.errors import (
    BudgetExhaustedError,
    NotInCantorSetError,
    OrderIsoValidationError,
)
from conjforge.exact import RealCode, identity_code, pow2, reflection_code
from conjforge.orders import FiniteOrder, build_order_tree
from conjforge.conjugacy import Homeo


def test_interval_arithmetic():
    a = Iv(Fraction(1, 4), Fraction(1, 2))
    b = Iv(Fraction(2), Fraction(3))
    assert a.mul(b) == Iv(Fraction(1, 2), Fraction(3, 2))
    assert a.div(b) == Iv(Fraction(1, 12), Fraction(1, 4))
    assert a.div(Iv(Fraction(-1), Fraction(1))) is None
    assert a.shift(Fraction(1)).lo == Fraction(5, 4)
    with pytest.raises(ValueError):
        Iv(Fraction(1), Fraction(0))


def test_ones_zeros_iso_examples():
    p = make_p_tree()
    q = make_q_tree([1])
    iso = ones_zeros_order_iso(p, q)
    assert iso.forward(ECPath("", 0)) == ECPath("", 0)
    assert iso.forward(ones_path(1)) == ECPath("11", 0)
    assert iso.forward(ALL_ONES) == ALL_ONES
    assert iso.backward(ECPath("11", 0)) == ones_path(1)
    validate_order_iso(p, q, iso, depth=8)
    with pytest.raises(OrderIsoValidationError):
        iso.forward(ECPath("01", 0))  # not a path of the domain tree


def test_order_iso_for_dispatch():
    p, q = make_p_tree(), make_q_tree([2])
    assert order_iso_for(p, q) is not None
    rt = build_order_tree(FiniteOrder([0], {0: 0}), 6)
    with pytest.raises(OrderIsoValidationError):
        order_iso_for(p, rt)


def test_invert_monotone_examples():
    f = build_dynamics(make_p_tree())
    assert invert_monotone(identity_code(), RealCode.from_rational(Fraction(1, 2)), 20) \
        == Fraction(1, 2)
    y = f.rational_eval(Fraction(1, 2))
    assert abs(invert_monotone(f, y, 20) - Fraction(1, 2)) <= pow2(20)
    y_fixed = f.rational_eval(Fraction(5, 9))
    assert abs(invert_monotone(f, y_fixed, 20) - Fraction(5, 9)) <= pow2(20)


def test_synth_fixed_point_images_exact():
    p = make_p_tree()
    q = make_q_tree([1])
    h = synth_conjugacy(p, q, ones_zeros_order_iso(p, q))
    assert h.fn.rational_eval(Fraction(1, 3)).exact == Fraction(1, 3)
    assert h.fn.rational_eval(Fraction(5, 9)).exact == Fraction(17, 27)
    assert h.fn.rational_eval(Fraction(2, 3)).exact == Fraction(2, 3)
    # inverse direction mirrors it
    assert h.inv.rational_eval(Fraction(17, 27)).exact == Fraction(5, 9)


def test_synth_identity_when_trees_match():
    p = make_p_tree()
    q = make_q_tree(())
    h = synth_conjugacy(p, q, ones_zeros_order_iso(p, q))
    grid = default_verification_grid(p, 25, homeo=h)
    for x in grid:
        v = h.fn.rational_eval(x).query(14)
        assert abs(v - x) <= pow2(12)


def test_synth_passes_verification():
    p = make_p_tree()
    q = make_q_tree([1, 3])
    h = synth_conjugacy(p, q, ones_zeros_order_iso(p, q))
    fp, fq = build_dynamics(p), build_dynamics(q)
    grid = default_verification_grid(p, 30, homeo=h)
    report = verify_conjugacy(fp, fq, h, grid, 12)
    assert report.passed
    assert report.failures == 0
    csv = report.to_csv()
    assert "grid_point,lhs,rhs,diff_bound,verdict" in csv
    assert "fail" not in csv.splitlines()[3]


def test_identity_is_not_a_conjugacy_across_trees():
    p = make_p_tree()
    q = make_q_tree([1])
    fp, fq = build_dynamics(p), build_dynamics(q)
    h = Homeo(fn=identity_code(), inv=identity_code())
    grid = default_verification_grid(p, 20)
    report = verify_conjugacy(fp, fq, h, grid, 20)
    assert not report.passed
    assert report.certified_failures >= 1


def test_order_reversing_map_is_rejected():
    p = make_p_tree()
    fp = build_dynamics(p)
    h = Homeo(fn=reflection_code(), inv=reflection_code())
    grid = default_verification_grid(p, 20)
    report = verify_conjugacy(fp, fp, h, grid, 20)
    assert not report.passed
    assert report.certified_failures >= 1
    assert not report.sanity["homeo_ok"]
    # extraction also breaks down: image values leave the coded set or
    # flip the order
    iso = extract_order_iso(h, p, p)
    with pytest.raises((OrderIsoValidationError, NotInCantorSetError)):
        validate_order_iso(p, p, iso, depth=4)


def test_extract_round_trip():
    p = make_p_tree()
    for sample in ((), (1,), (1, 3), (0, 1, 2)):
        q = make_q_tree(sample)
        seed = ones_zeros_order_iso(p, q)
        h = synth_conjugacy(p, q, seed)
        extracted = extract_order_iso(h, p, q)
        for n in range(9):
            x = ones_path(n)
            assert extracted.forward(x) == seed.forward(x)
        assert extracted.forward(ALL_ONES) == ALL_ONES
        assert extracted.backward(seed.forward(ones_path(3))) == ones_path(3)


def test_extract_on_identity_homeo():
    p = make_p_tree()
    h = Homeo(fn=identity_code(), inv=identity_code())
    iso = extract_order_iso(h, p, p)
    assert iso.forward(ones_path(1)) == ones_path(1)


def test_piecewise_transport_structure():
    # points between consecutive iterate anchors land between the matching
    # image anchors
    p = make_p_tree()
    q = make_q_tree([1])
    h = synth_conjugacy(p, q, ones_zeros_order_iso(p, q))
    sc = h.fn
    gap = sc._gap(ECPath("", 0), ones_path(1))  # (1/3, 5/9)
    st = sc._gap_state(gap, 48)
    for k in (1, 2, 3):
        sc._ensure_fwd(st, k + 1)
        sc._ensure_yfwd(st, k + 1)
        x = (st.fwd[k].hi + st.fwd[k + 1].lo) / 2
        v = sc.rational_eval(x).query(24)
        assert st.yfwd[k].lo - pow2(22) <= v <= st.yfwd[k + 1].hi + pow2(22)


def test_gap_budget_exhaustion_is_explicit():
    p = make_p_tree()
    q = make_q_tree([1])
    h = synth_conjugacy(p, q, ones_zeros_order_iso(p, q), iteration_budget=12)
    # a point deep inside the widest gap needs more than 12 iterate steps
    x = Fraction(1, 3) + Fraction(2, 9) / 1000
    with pytest.raises(BudgetExhaustedError):
        h.fn.rational_eval(x).query(20)


def test_real_eval_matches_rational_eval():
    p = make_p_tree()
    q = make_q_tree([1])
    h = synth_conjugacy(p, q, ones_zeros_order_iso(p, q))
    grid = default_verification_grid(p, 12, homeo=h)
    x = grid[5]
    direct = h.fn.rational_eval(x).query(20)
    via_code = h.fn.real_eval(cantor_encode(ones_path(1))).query(20)
    assert via_code == Fraction(17, 27)
    lazy = RealCode(lambda pr: x + pow2(pr + 1))
    bracketed = h.fn.real_eval(lazy).query(16)
    assert abs(bracketed - direct) <= pow2(14)


def test_modulus_searches_within_budget():
    p = make_p_tree()
    q = make_q_tree([1])
    h = synth_conjugacy(p, q, ones_zeros_order_iso(p, q), iteration_budget=40)
    d = h.fn.modulus(1)
    assert isinstance(d, int) and d >= 1
    with pytest.raises(BudgetExhaustedError):
        h.fn.modulus(22)


def test_label_path_iso_roundtrip():
    r = build_order_tree(FiniteOrder([3, 1, 2], {1: 0, 2: 1, 3: 2}), 10)
    s = build_order_tree(FiniteOrder([20, 10, 30], {10: 0, 20: 1, 30: 2}), 10)
    iso = label_path_iso(r, s)
    assert iso.forward(r.labeled_path(1)) == s.labeled_path(10)
    assert iso.forward(r.labeled_path(3)) == s.labeled_path(30)
    assert iso.backward(s.labeled_path(20)) == r.labeled_path(2)
    assert iso.forward(ALL_ONES) == ALL_ONES
