"""Virtual values for buyers and sellers, with ironing via curve hulls.

For a buyer with ascending support b_0 < ... < b_{K-1} and pmf f:

    raw[k] = b_k - (b_{k+1} - b_k) * sum_{r>k} f_r / f_k,   raw[K-1] = b_{K-1}

which equals the left slope of the revenue curve q -> price * tail-mass in
quantile space.  The ironed values are the slopes of the upper concave hull
of that curve, constant on each hull edge that skips curve points.  Sellers
mirror this: raw[k] = a_k + (a_k - a_{k-1}) * F(a_{k-1}) / f_k with
raw[0] = a_0, and the ironed values are the slopes of the lower convex
envelope of the cost curve q -> q * F^{-1}(q).

An ironed interval is a maximal index run sharing one hull edge.  Equality
in the prefix identities holds at indices whose curve point lies on the
hull: the lowest index of a buyer run, the highest index of a seller run.
Interval interiors exclude exactly that endpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .market import DiscreteDistribution

HULL_MERGE_TOLERANCE = 1e-9  # collinear within this are kept as hull vertices


@dataclass(frozen=True)
class VirtualValueTable:
    side: str  # "buyer" | "seller"
    support: tuple[float, ...]
    raw: tuple[float, ...]
    ironed: tuple[float, ...]
    ironed_intervals: tuple[tuple[int, int], ...]  # inclusive index ranges

    def __post_init__(self):
        assert self.side in ("buyer", "seller")
        K = len(self.support)
        assert len(self.raw) == K and len(self.ironed) == K
        # hull slopes are monotone up to the collinearity merge tolerance
        assert all(
            self.ironed[k + 1] >= self.ironed[k] - HULL_MERGE_TOLERANCE
            for k in range(K - 1)
        ), f"ironed values not non-decreasing: {self.ironed}"

    def ironed_at(self, value: float) -> float:
        return self.ironed[self.support.index(value)]

    def raw_at(self, value: float) -> float:
        return self.raw[self.support.index(value)]

    def is_interior(self, k: int) -> bool:
        """True iff index k lies strictly inside an ironed interval.

        Buyer runs keep their lowest index on the curve, seller runs their
        highest; those endpoints are the non-interior ones.
        """
        for a, b in self.ironed_intervals:
            if self.side == "buyer" and a < k <= b:
                return True
            if self.side == "seller" and a <= k < b:
                return True
        return False


def _hull_positions(xs: list[float], ys: list[float], upper: bool) -> list[int]:
    """Monotone sweep over points sorted by x; returns kept vertex positions.

    Collinear triples (cross within the merge tolerance) are kept, so exact
    ties never produce spurious ironed intervals.
    """
    eps = HULL_MERGE_TOLERANCE * max(1.0, max(abs(y) for y in ys))
    stack: list[int] = []
    for p in range(len(xs)):
        while len(stack) >= 2:
            a, b = stack[-2], stack[-1]
            cross = (xs[b] - xs[a]) * (ys[p] - ys[a]) - (ys[b] - ys[a]) * (xs[p] - xs[a])
            if (upper and cross > eps) or (not upper and cross < -eps):
                stack.pop()
            else:
                break
        stack.append(p)
    return stack


def _ironed_from_hull(
    raw: list[float],
    xs: list[float],
    ys: list[float],
    upper: bool,
    index_of_segment,
) -> tuple[list[float], list[tuple[int, int]]]:
    """Assign hull-edge slopes to the support indices each edge spans.

    `index_of_segment(p)` maps the segment between curve positions p and p+1
    to its support index.  Edges spanning one segment copy raw exactly.
    """
    K = len(raw)
    ironed = list(raw)
    intervals: list[tuple[int, int]] = []
    hull = _hull_positions(xs, ys, upper)
    for u, v in zip(hull, hull[1:]):
        if v == u + 1:
            continue  # point on hull, no ironing over this segment
        slope = (ys[v] - ys[u]) / (xs[v] - xs[u])
        covered = sorted(index_of_segment(p) for p in range(u, v))
        for k in covered:
            ironed[k] = slope
        intervals.append((covered[0], covered[-1]))
    intervals.sort()
    return ironed, intervals


def buyer_virtual_values(dist: DiscreteDistribution) -> VirtualValueTable:
    """Raw and ironed virtual values for a buyer distribution."""
    support, pmf = dist.support, dist.pmf
    K = len(support)
    raw = [0.0] * K
    raw[K - 1] = support[K - 1]
    for k in range(K - 1):
        tail_above = math.fsum(pmf[k + 1 :])
        raw[k] = support[k] - (support[k + 1] - support[k]) * tail_above / pmf[k]

    # revenue curve in quantile space; position p corresponds to support
    # index K - p (position 0 is the (0, 0) endpoint)
    xs = [0.0] + [dist.tail_mass(K - p) for p in range(1, K + 1)]
    ys = [0.0] + [support[K - p] * xs[p] for p in range(1, K + 1)]
    ironed, intervals = _ironed_from_hull(
        raw, xs, ys, upper=True, index_of_segment=lambda p: K - p - 1
    )
    return VirtualValueTable(
        side="buyer",
        support=support,
        raw=tuple(raw),
        ironed=tuple(ironed),
        ironed_intervals=tuple(intervals),
    )


def seller_virtual_values(dist: DiscreteDistribution) -> VirtualValueTable:
    """Raw and ironed virtual values for a seller distribution."""
    support, pmf = dist.support, dist.pmf
    K = len(support)
    raw = [0.0] * K
    raw[0] = support[0]
    for k in range(1, K):
        head_below = math.fsum(pmf[:k])
        raw[k] = support[k] + (support[k] - support[k - 1]) * head_below / pmf[k]

    # cost curve in quantile space; position p corresponds to support
    # index p - 1 (position 0 is the (0, 0) endpoint)
    xs = [0.0] + [dist.head_mass(p - 1) for p in range(1, K + 1)]
    ys = [0.0] + [support[p - 1] * xs[p] for p in range(1, K + 1)]
    ironed, intervals = _ironed_from_hull(
        raw, xs, ys, upper=False, index_of_segment=lambda p: p
    )
    return VirtualValueTable(
        side="seller",
        support=support,
        raw=tuple(raw),
        ironed=tuple(ironed),
        ironed_intervals=tuple(intervals),
    )


def virtual_tables(instance) -> tuple[tuple[VirtualValueTable, ...], tuple[VirtualValueTable, ...]]:
    """Per-agent tables for a whole instance: (buyer tables, seller tables)."""
    return (
        tuple(buyer_virtual_values(d) for d in instance.buyers),
        tuple(seller_virtual_values(d) for d in instance.sellers),
    )
