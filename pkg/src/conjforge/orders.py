"""Stage-wise encoding of enumerated linear orders into labeled binary trees.

At every stage each current leaf grows a 1-child; when the enumeration
delivers a new element it additionally receives a 0-ending label placed so
that the labeled paths (label followed by all ones) realize the order.  The
resulting tree is fully determined by its label set: a string belongs to the
tree exactly when each of its 0-ending prefixes is a label.

Recovering the order is the inverse direction: read the labels off the built
tree and sort them by their path order.
"""

from __future__ import annotations

import threading
from typing import Callable, Iterable, Optional, Sequence

from .cantor import ALL_ONES, ECPath, Tree, check_bits, ec_compare
from .errors import MalformedOrderError, SpecParseError, UnsupportedTreeOperationError


class LinearOrderSpec:
    """An enumerated linear order.

    ``enumerate_stage(s)`` (stages start at 1) yields the element arriving at
    stage s, or None when the enumeration is silent at that stage; it must be
    injective over non-None stages.  ``less`` must be a strict total order on
    the enumerated elements.  ``size`` is the total number of elements when
    the order is finite and that is known; it gates the structural
    capabilities that need a completed enumeration.
    """

    size: Optional[int] = None

    def enumerate_stage(self, stage: int) -> Optional[int]:
        raise NotImplementedError

    def less(self, a: int, b: int) -> bool:
        raise NotImplementedError


class FiniteOrder(LinearOrderSpec):
    """Finite order given by an explicit arrival schedule and a rank map."""

    def __init__(self, schedule: Sequence[Optional[int]], rank: dict[int, int]):
        elems = [e for e in schedule if e is not None]
        if len(set(elems)) != len(elems):
            raise MalformedOrderError("enumeration schedule repeats an element")
        if set(elems) != set(rank):
            raise MalformedOrderError("schedule and rank map disagree on elements")
        if len(set(rank.values())) != len(rank):
            raise MalformedOrderError("rank map is not injective")
        self._schedule = list(schedule)
        self._rank = dict(rank)
        self.size = len(elems)

    def enumerate_stage(self, stage: int) -> Optional[int]:
        if stage < 1 or stage > len(self._schedule):
            return None
        return self._schedule[stage - 1]

    def less(self, a: int, b: int) -> bool:
        return self._rank[a] < self._rank[b]


def chain_order(n: int) -> FiniteOrder:
    """Elements 0..n-1 enumerated in increasing order, one per stage."""
    return FiniteOrder(list(range(n)), {k: k for k in range(n)})


def validate_strict_total_order(elements: Sequence[int],
                                less: Callable[[int, int], bool]) -> None:
    """Raise MalformedOrderError unless ``less`` is a strict total order."""
    elems = list(elements)
    for a in elems:
        if less(a, a):
            raise MalformedOrderError(f"irreflexivity fails at {a}")
    for i, a in enumerate(elems):
        for b in elems[i + 1:]:
            ab, ba = less(a, b), less(b, a)
            if ab == ba:
                raise MalformedOrderError(
                    f"totality/antisymmetry fails on pair ({a}, {b})")
    for a in elems:
        for b in elems:
            for c in elems:
                if less(a, b) and less(b, c) and not less(a, c):
                    raise MalformedOrderError(
                        f"transitivity fails on ({a}, {b}, {c})")


class OrderTree(Tree):
    """Labeled tree encoding an enumerated linear order.

    Stages are run lazily as deeper membership questions arrive, under a
    lock, so the tree behaves as a total decidable predicate even for
    enumerations that keep producing elements.  Within any built depth the
    labeled structure satisfies: a member ends in 0 exactly when it is a
    label; every label extends by ones to a path; and the label paths are
    ordered exactly as the encoded order.
    """

    def __init__(self, spec: LinearOrderSpec):
        self.spec = spec
        self._lock = threading.RLock()
        self._stages_done = 0
        self._label_of: dict[int, str] = {}
        self._labels: dict[str, int] = {}
        self._arrival: list[int] = []  # elements in arrival order

    # -- staged construction ------------------------------------------------

    @property
    def built_depth(self) -> int:
        return self._stages_done

    def extend_to(self, depth: int) -> None:
        with self._lock:
            while self._stages_done < depth:
                self._run_stage(self._stages_done + 1)

    def _run_stage(self, stage: int) -> None:
        # 1-extensions of all current level-(stage-1) strings are implicit in
        # the label characterization; only a new label needs recording.
        new = self.spec.enumerate_stage(stage)
        if new is not None:
            if new in self._label_of:
                raise MalformedOrderError(
                    f"element {new} enumerated twice (stage {stage})")
            prev = self._arrival
            validate_strict_total_order(prev + [new], self.spec.less)
            above = [b for b in prev if self.spec.less(new, b)]
            n = stage - 1
            if not above:
                # new element sits above everything seen so far
                label = "1" * n + "0"
            else:
                floor_b = above[0]
                for b in above[1:]:
                    if self.spec.less(b, floor_b):
                        floor_b = b
                base = self._label_of[floor_b]
                label = base + "1" * (n - len(base)) + "0"
            self._label_of[new] = label
            self._labels[label] = new
            self._arrival.append(new)
        self._stages_done = stage

    # -- tree interface -----------------------------------------------------

    def member(self, s: str) -> bool:
        check_bits(s)
        self.extend_to(len(s))
        for k, ch in enumerate(s):
            if ch == "0" and s[: k + 1] not in self._labels:
                return False
        return True

    def has_path_through(self, s: str) -> bool:
        # every member keeps extending by ones
        return self.member(s)

    def rightmost_path(self, s: str) -> Optional[ECPath]:
        if not self.member(s):
            return None
        return ECPath(s, 1)

    def _complete(self) -> bool:
        return self.spec.size is not None and len(self._arrival) == self.spec.size

    def _ensure_complete(self, stage_cap: int = 4096) -> None:
        if self.spec.size is None:
            raise UnsupportedTreeOperationError(
                "structural walks need a finite order of known size")
        horizon = max(self._stages_done, 16)
        while not self._complete():
            if horizon > stage_cap:
                raise UnsupportedTreeOperationError(
                    f"enumeration did not complete within {stage_cap} stages")
            self.extend_to(horizon)
            horizon *= 2

    def leftmost_path(self, s: str) -> Optional[ECPath]:
        if not self.member(s):
            return None
        self._ensure_complete()
        cur = s
        while True:
            # prefer the 0-child; ones are forced until the next label below
            if cur + "0" in self._labels:
                cur = cur + "0"
                continue
            nxt = self._first_label_below(cur)
            if nxt is None:
                return ECPath(cur, 1)
            cur = nxt

    def _first_label_below(self, s: str) -> Optional[str]:
        """Shortest label of the form s + 1...1 + 0 (ones possibly absent)."""
        best = None
        for label in self._labels:
            if len(label) > len(s) and label.startswith(s):
                middle = label[len(s):-1]
                if all(ch == "1" for ch in middle):
                    if best is None or len(label) < len(best):
                        best = label
        return best

    # -- labeling access ----------------------------------------------------

    def label(self, element: int) -> str:
        if element not in self._label_of:
            raise KeyError(f"element {element} has no label yet")
        return self._label_of[element]

    def labels(self) -> dict[int, str]:
        return dict(self._label_of)

    def element_of_label(self, label: str) -> Optional[int]:
        return self._labels.get(label)

    def labeled_path(self, element: int) -> ECPath:
        return ECPath(self.label(element), 1)

    def __repr__(self):
        return f"OrderTree(built_depth={self._stages_done}, elements={len(self._arrival)})"


def build_order_tree(spec: LinearOrderSpec, depth: int) -> OrderTree:
    """Run the staged construction through the given depth."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    tree = OrderTree(spec)
    tree.extend_to(depth)
    return tree


def successor_labeled_paths(tree: OrderTree, depth: int) -> list[tuple[int, str]]:
    """Pairs (element, label) with label length at most ``depth``.

    These are exactly the elements whose encoded paths have an immediate
    successor in the path set; listed in enumeration order.
    """
    if depth > tree.built_depth:
        raise ValueError("depth exceeds the built depth")
    out = [(a, l) for a, l in tree.labels().items() if len(l) <= depth]
    out.sort(key=lambda pair: len(pair[1]))
    return out


def recover_order(tree: OrderTree, depth: int) -> list[int]:
    """Elements labeled by ``depth``, sorted by the order of their paths.

    By the labeling invariants this equals the encoded order restricted to
    those elements.
    """
    if depth > tree.built_depth:
        raise ValueError("depth exceeds the built depth")
    pairs = [(a, ECPath(l, 1)) for a, l in tree.labels().items() if len(l) <= depth]
    import functools

    pairs.sort(key=functools.cmp_to_key(lambda u, v: ec_compare(u[1], v[1])))
    return [a for a, _ in pairs]


# ---------------------------------------------------------------------------
# text format

def parse_order_lines(lines: Iterable[str]) -> FiniteOrder:
    """Parse the order format: ``elem <id>`` lines in enumeration order, then
    ``lt <id> <id>`` lines giving the full comparison table.

    The table must be a strict total order on the listed ids; anything else
    is rejected.
    """
    schedule: list[int] = []
    pairs: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "elem" and len(parts) == 2:
            try:
                schedule.append(int(parts[1]))
            except ValueError:
                raise SpecParseError(f"bad element id {parts[1]!r}", line=lineno)
        elif parts[0] == "lt" and len(parts) == 3:
            try:
                pairs.add((int(parts[1]), int(parts[2])))
            except ValueError:
                raise SpecParseError(f"bad lt pair {line!r}", line=lineno)
        else:
            raise SpecParseError(f"unknown directive {line!r}", line=lineno)
    ids = set(schedule)
    for a, b in pairs:
        if a not in ids or b not in ids:
            raise MalformedOrderError(f"lt mentions unlisted element in ({a}, {b})")

    def less(a: int, b: int) -> bool:
        return (a, b) in pairs

    try:
        validate_strict_total_order(schedule, less)
    except MalformedOrderError:
        raise
    # ranks from the validated table
    rank = {a: sum(1 for b in ids if (b, a) in pairs) for a in ids}
    return FiniteOrder(schedule, rank)
