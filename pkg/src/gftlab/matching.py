"""Maximum-weight matching over a downward-closed feasibility family.

Only strictly-positive-weight pairs are ever matched: the family is
downward closed, so dropping a non-positive pair never lowers the total.
Ties between maximum-weight candidates go to the lexicographically
smallest canonical pair list, so the empty matching beats any zero-weight
trade and results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import FamilyTooLarge
from .market import DEFAULT_FAMILY_CAP, FeasibilityFamily, Pair, PairSet

TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Matching:
    pairs: PairSet  # canonical ascending order
    weight: float


@dataclass(frozen=True)
class WeightedBipartiteGraph:
    n: int
    m: int
    weights: tuple[tuple[float, ...], ...]  # n rows by m columns
    family: FeasibilityFamily

    @classmethod
    def from_function(
        cls, n: int, m: int, weight: Callable[[int, int], float], family: FeasibilityFamily
    ) -> "WeightedBipartiteGraph":
        rows = tuple(tuple(float(weight(i, j)) for j in range(m)) for i in range(n))
        return cls(n=n, m=m, weights=rows, family=family)

    def weight(self, i: int, j: int) -> float:
        return self.weights[i][j]


def _positive_pairs(graph: WeightedBipartiteGraph) -> list[Pair]:
    return [
        (i, j)
        for i in range(graph.n)
        for j in range(graph.m)
        if graph.weights[i][j] > 0.0
    ]


def _assignment_value(matrix: np.ndarray) -> float:
    """Max total weight of a partial matching using only positive entries."""
    n, m = matrix.shape
    padded = np.zeros((n + m, n + m))
    padded[:n, :m] = np.maximum(matrix, 0.0)
    rows, cols = linear_sum_assignment(padded, maximize=True)
    return float(padded[rows, cols].sum())


def _solve_all_matchings(graph: WeightedBipartiteGraph) -> Matching:
    """Assignment solver plus a greedy pass for the lexicographic tie-break.

    A pair is kept iff keeping it (given all earlier decisions) still allows
    reaching the optimal total; the first such pair is always part of the
    lexicographically smallest maximizer.
    """
    pos = _positive_pairs(graph)
    if not pos:
        return Matching(pairs=(), weight=0.0)
    if len(pos) == 1:
        (i, j) = pos[0]
        return Matching(pairs=((i, j),), weight=graph.weights[i][j])

    work = np.zeros((graph.n, graph.m))
    for i, j in pos:
        work[i, j] = graph.weights[i][j]
    best_total = _assignment_value(work)
    tol = TIE_TOLERANCE * max(1.0, abs(best_total))

    chosen: list[Pair] = []
    acc = 0.0
    used_b: set[int] = set()
    used_s: set[int] = set()
    for (i, j) in pos:
        if i in used_b or j in used_s:
            work[i, j] = 0.0
            continue
        w = float(work[i, j])
        reduced = work.copy()
        reduced[i, :] = 0.0
        reduced[:, j] = 0.0
        if acc + w + _assignment_value(reduced) >= best_total - tol:
            chosen.append((i, j))
            acc += w
            used_b.add(i)
            used_s.add(j)
            work[i, :] = 0.0
            work[:, j] = 0.0
        else:
            work[i, j] = 0.0
    assert acc >= best_total - tol, "greedy refinement lost the optimum"
    return Matching(pairs=tuple(chosen), weight=acc)


def _positive_submatchings(
    pos: list[Pair], max_size: int, max_members: int
) -> Iterator[PairSet]:
    """All matchings composed of the given pairs, at most max_size pairs each."""
    count = 0

    def rec(idx: int, used_b: frozenset, used_s: frozenset, cur: list[Pair]) -> Iterator[PairSet]:
        nonlocal count
        count += 1
        if count > max_members:
            raise FamilyTooLarge(f"matching enumeration exceeds {max_members} members")
        yield tuple(cur)
        if len(cur) >= max_size:
            return
        for t in range(idx, len(pos)):
            i, j = pos[t]
            if i in used_b or j in used_s:
                continue
            cur.append((i, j))
            yield from rec(t + 1, used_b | {i}, used_s | {j}, cur)
            cur.pop()

    yield from rec(0, frozenset(), frozenset(), [])


def _candidate_members(
    graph: WeightedBipartiteGraph, max_members: int
) -> Iterator[PairSet]:
    """Family members whose pairs all have strictly positive weight."""
    fam = graph.family
    if fam.kind == "explicit":
        for member in fam.members(graph.n, graph.m, max_members):
            if all(graph.weights[i][j] > 0.0 for i, j in member):
                yield member
    else:
        cap = fam.cap if fam.kind == "cap" else min(graph.n, graph.m)
        yield from _positive_submatchings(_positive_pairs(graph), cap, max_members)


def max_weight_matching(
    graph: WeightedBipartiteGraph, max_members: int = DEFAULT_FAMILY_CAP
) -> Matching:
    """Deterministic maximum-weight matching within the feasibility family."""
    if graph.family.kind == "all_matchings":
        return _solve_all_matchings(graph)

    best_pairs: PairSet = ()
    best_weight = 0.0
    for member in _candidate_members(graph, max_members):
        w = sum(graph.weights[i][j] for i, j in member)
        if w > best_weight + TIE_TOLERANCE or (
            abs(w - best_weight) <= TIE_TOLERANCE and member < best_pairs
        ):
            best_pairs = member
            best_weight = max(w, best_weight)
    return Matching(pairs=best_pairs, weight=sum(graph.weights[i][j] for i, j in best_pairs))


def pair_in_matching(graph: WeightedBipartiteGraph, i: int, j: int) -> bool:
    """True iff (i, j) trades in the deterministic maximum-weight matching."""
    return (i, j) in max_weight_matching(graph).pairs
