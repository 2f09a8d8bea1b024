import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conjforge.cantor import ECPath, ec_compare
from conjforge.errors import (
    MalformedOrderError,
    SpecParseError,
    UnsupportedTreeOperationError,
)
from conjforge.orders import (
    FiniteOrder,
    build_order_tree,
    chain_order,
    parse_order_lines,
    recover_order,
    successor_labeled_paths,
    validate_strict_total_order,
)


def tree_members(tree, depth):
    out = []
    for n in range(depth + 1):
        out.extend(tree.level_strings(n))
    return out


def test_single_element_trace():
    tree = build_order_tree(FiniteOrder([7], {7: 0}), 3)
    assert tree.label(7) == "0"
    assert sorted(tree_members(tree, 3), key=lambda s: (len(s), s)) == \
        ["", "0", "1", "01", "11", "011", "111"]


def test_chain_trace():
    tree = build_order_tree(chain_order(5), 5)
    assert successor_labeled_paths(tree, 5) == [
        (0, "0"), (1, "10"), (2, "110"), (3, "1110"), (4, "11110")]
    assert recover_order(tree, 5) == [0, 1, 2, 3, 4]


def test_insertion_below_trace():
    spec = FiniteOrder([10, 20], {10: 1, 20: 0})
    tree = build_order_tree(spec, 4)
    assert tree.label(10) == "0"
    assert tree.label(20) == "00"
    assert recover_order(tree, 4) == [20, 10]
    # the smaller element's path sits left of the larger's
    assert ec_compare(ECPath("00", 1), ECPath("0", 1)) < 0


def test_empty_order():
    tree = build_order_tree(FiniteOrder([], {}), 4)
    assert successor_labeled_paths(tree, 4) == []
    assert recover_order(tree, 4) == []
    # only the all-ones spine survives
    assert tree_members(tree, 3) == ["", "1", "11", "111"]


def test_property_one_and_three_exhaustively():
    spec = FiniteOrder([3, 1, 4, 2, 5], {k: k for k in (1, 2, 3, 4, 5)})
    depth = 10
    tree = build_order_tree(spec, depth)
    labels = set(tree.labels().values())
    for s in tree_members(tree, depth):
        if s:
            assert (s[-1] == "0") == (s in labels)
    elems = list(tree.labels())
    for a in elems:
        # the labeled path extends through the tree
        path = tree.labeled_path(a)
        prefix = "".join(str(path.bit(k)) for k in range(depth))
        for k in range(depth + 1):
            assert tree.member(prefix[:k])
        for b in elems:
            if a != b:
                assert spec.less(a, b) == \
                    (ec_compare(tree.labeled_path(a), tree.labeled_path(b)) < 0)


def test_stalling_enumeration_degrades_gracefully():
    spec = FiniteOrder([4, None, None, 2, None], {2: 0, 4: 1})
    tree = build_order_tree(spec, 8)
    assert tree.label(4) == "0"
    assert tree.label(2) == "0110"  # arrives at stage 4 below element 4
    assert recover_order(tree, 8) == [2, 4]


def test_malformed_orders_rejected():
    with pytest.raises(MalformedOrderError):
        FiniteOrder([1, 1], {1: 0})
    with pytest.raises(MalformedOrderError):
        validate_strict_total_order([1, 2], lambda a, b: True)
    with pytest.raises(MalformedOrderError):
        validate_strict_total_order([1, 2], lambda a, b: False)
    # inconsistent comparisons surface during the staged build
    calls = {}

    def bad_less(a, b):
        return calls.setdefault((a, b), len(calls) % 2 == 0)

    class BadSpec(FiniteOrder):
        def __init__(self):
            super().__init__([1, 2, 3], {1: 0, 2: 1, 3: 2})

        def less(self, a, b):
            if {a, b} == {2, 3}:
                return True  # both directions: not antisymmetric
            return super().less(a, b)

    with pytest.raises(MalformedOrderError):
        build_order_tree(BadSpec(), 5)


@st.composite
def random_order(draw):
    size = draw(st.integers(min_value=1, max_value=10))
    ids = list(range(100, 100 + size))
    ranks = draw(st.permutations(list(range(size))))
    schedule_order = draw(st.permutations(ids))
    return FiniteOrder(list(schedule_order), dict(zip(ids, ranks)))


@given(random_order())
@settings(max_examples=40, derandomize=True, deadline=None)
def test_roundtrip_random_orders(spec):
    depth = (spec.size or 0) + 2
    tree = build_order_tree(spec, depth)
    recovered = recover_order(tree, depth)
    want = sorted(tree.labels(), key=lambda a: sum(
        1 for b in tree.labels() if spec.less(b, a)))
    assert recovered == want


def test_enumeration_order_independence():
    ids = [5, 9, 2, 7]
    rank = {2: 0, 5: 1, 7: 2, 9: 3}
    orders = [
        FiniteOrder([5, 9, 2, 7], rank),
        FiniteOrder([7, 2, 9, 5], rank),
        FiniteOrder([2, 5, 7, 9], rank),
    ]
    recovered = [recover_order(build_order_tree(o, 8), 8) for o in orders]
    assert recovered[0] == recovered[1] == recovered[2] == [2, 5, 7, 9]


def test_leftmost_path_walk():
    spec = FiniteOrder([10, 20], {10: 1, 20: 0})
    tree = build_order_tree(spec, 6)
    assert tree.leftmost_path("") == ECPath("00", 1)
    assert tree.rightmost_path("") == ECPath("", 1)
    # unknown-size orders refuse structural walks
    class Endless(FiniteOrder):
        def __init__(self):
            super().__init__([1], {1: 0})
            self.size = None

    t2 = build_order_tree(Endless(), 4)
    with pytest.raises(UnsupportedTreeOperationError):
        t2.leftmost_path("")


def test_parse_order_lines():
    spec = parse_order_lines([
        "elem 3", "elem 1", "# comment", "lt 1 3",
    ])
    assert spec.size == 2
    assert spec.less(1, 3) and not spec.less(3, 1)
    with pytest.raises(SpecParseError):
        parse_order_lines(["elem x"])
    with pytest.raises(SpecParseError):
        parse_order_lines(["frob 1 2"])
    with pytest.raises(MalformedOrderError):
        parse_order_lines(["elem 1", "elem 2"])  # no lt lines: not total
    with pytest.raises(MalformedOrderError):
        parse_order_lines(["elem 1", "elem 2", "lt 1 2", "lt 2 1"])
    with pytest.raises(MalformedOrderError):
        parse_order_lines(["elem 1", "lt 1 5"])
