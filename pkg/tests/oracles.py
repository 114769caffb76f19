"""Independent brute-force oracles for the test suite.

Everything here recomputes results from first principles (exhaustive
enumeration, pairwise-chord hulls, vertex enumeration) without touching the
package's own algorithms, so agreement is meaningful.
"""

from __future__ import annotations

import itertools
import math
import random

import numpy as np

from gftlab.market import DiscreteDistribution


# ---------------------------------------------------------------- matchings


def all_partial_matchings(n: int, m: int):
    """Every partial matching between n buyers and m sellers."""
    out = set()
    for k in range(min(n, m) + 1):
        for bsub in itertools.combinations(range(n), k):
            for ssub in itertools.permutations(range(m), k):
                out.add(tuple(sorted(zip(bsub, ssub))))
    return sorted(out)


def family_members_oracle(family, n: int, m: int):
    if family.kind == "explicit":
        return [s for s in family.sets if all(i < n and j < m for i, j in s)]
    members = all_partial_matchings(n, m)
    if family.kind == "cap":
        members = [s for s in members if len(s) <= family.cap]
    return members


def best_matching_oracle(weights, family, n: int, m: int):
    """(pairs, weight) with max weight over all-positive members, lex-min ties."""
    best_pairs, best_weight = (), 0.0
    for member in family_members_oracle(family, n, m):
        if any(weights[i][j] <= 0.0 for i, j in member):
            continue
        w = sum(weights[i][j] for i, j in member)
        if w > best_weight + 1e-12:
            best_pairs, best_weight = member, w
        elif abs(w - best_weight) <= 1e-12 and member < best_pairs:
            best_pairs = member
    return best_pairs, sum(weights[i][j] for i, j in best_pairs)


# ------------------------------------------------------------------ ironing


def _majorant_values(xs, ys, upper: bool):
    """Least concave majorant (or greatest convex minorant) at the grid xs."""
    n = len(xs)
    out = []
    for q in range(n):
        best = ys[q]
        for a in range(n):
            for b in range(a + 1, n):
                if xs[a] <= xs[q] <= xs[b] and xs[b] > xs[a]:
                    theta = (xs[q] - xs[a]) / (xs[b] - xs[a])
                    value = (1 - theta) * ys[a] + theta * ys[b]
                    if (upper and value > best) or (not upper and value < best):
                        best = value
        out.append(best)
    return out


def buyer_ironed_oracle(dist: DiscreteDistribution):
    """Ironed buyer virtual values from the revenue curve, hull by chords."""
    K = len(dist)
    xs = [0.0] + [dist.tail_mass(K - p) for p in range(1, K + 1)]
    ys = [0.0] + [dist.support[K - p] * xs[p] for p in range(1, K + 1)]
    hull = _majorant_values(xs, ys, upper=True)
    slopes = [(hull[p + 1] - hull[p]) / (xs[p + 1] - xs[p]) for p in range(K)]
    return [slopes[K - 1 - k] for k in range(K)]


def seller_ironed_oracle(dist: DiscreteDistribution):
    """Ironed seller virtual values from the cost curve, envelope by chords."""
    K = len(dist)
    xs = [0.0] + [dist.head_mass(p - 1) for p in range(1, K + 1)]
    ys = [0.0] + [dist.support[p - 1] * xs[p] for p in range(1, K + 1)]
    hull = _majorant_values(xs, ys, upper=False)
    return [(hull[k + 1] - hull[k]) / (xs[k + 1] - xs[k]) for k in range(K)]


def buyer_raw_oracle(dist: DiscreteDistribution):
    """Hand application of the discrete virtual value formula."""
    K = len(dist)
    out = []
    for k in range(K):
        if k == K - 1:
            out.append(dist.support[k])
        else:
            gap = dist.support[k + 1] - dist.support[k]
            tail = sum(dist.pmf[k + 1 :])
            out.append(dist.support[k] - gap * tail / dist.pmf[k])
    return out


def seller_raw_oracle(dist: DiscreteDistribution):
    K = len(dist)
    out = []
    for k in range(K):
        if k == 0:
            out.append(dist.support[0])
        else:
            gap = dist.support[k] - dist.support[k - 1]
            head = sum(dist.pmf[:k])
            out.append(dist.support[k] + gap * head / dist.pmf[k])
    return out


# --------------------------------------------------------- linear programs


def vertex_enumeration_max(problem, feas_tol: float = 1e-8):
    """Optimal value of a bounded feasible LP by enumerating basic points.

    Requires all variables non-negative and at most ~6 of them.
    """
    n = problem.num_variables
    assert all(b == ">=0" for b in (problem.bounds or [">=0"] * n))
    planes = []  # (a, rhs) treated as equalities when active
    cons = []  # (a, sense, rhs) for feasibility checks
    for row in problem.rows:
        a = np.zeros(n)
        for i, v in row.coeffs:
            a[i] += v
        planes.append((a, row.rhs))
        cons.append((a, row.sense, row.rhs))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        planes.append((e, 0.0))

    c = np.array(problem.objective)
    best = None
    for combo in itertools.combinations(range(len(planes)), n):
        A = np.array([planes[i][0] for i in combo])
        b = np.array([planes[i][1] for i in combo])
        if abs(np.linalg.det(A)) < 1e-10:
            continue
        x = np.linalg.solve(A, b)
        if (x < -feas_tol).any():
            continue
        ok = True
        for a, sense, rhs in cons:
            lhs = float(a @ x)
            if sense == "<=" and lhs > rhs + feas_tol:
                ok = False
            elif sense == ">=" and lhs < rhs - feas_tol:
                ok = False
            elif sense == "=" and abs(lhs - rhs) > feas_tol:
                ok = False
            if not ok:
                break
        if ok:
            value = float(c @ x)
            if best is None or value > best:
                best = value
    return best


def random_bounded_lp(rng: random.Random):
    """Feasible bounded LP with <=, >= and = rows built around a known point."""
    from gftlab.simplex import EQUAL, GREATER, LESS, LpProblem

    n = rng.randint(2, 6)
    x0 = [rng.uniform(0, 2) for _ in range(n)]
    p = LpProblem(objective=[rng.uniform(-2, 3) for _ in range(n)])
    for i in range(n):
        p.add_row({i: 1.0}, LESS, rng.uniform(2.5, 5.0))  # box keeps it bounded
    for _ in range(rng.randint(1, 4)):
        a = {i: rng.uniform(-2, 2) for i in rng.sample(range(n), rng.randint(1, n))}
        lhs = sum(v * x0[i] for i, v in a.items())
        sense = rng.choice([LESS, GREATER, EQUAL])
        slack = rng.uniform(0, 1.5)
        rhs = lhs + slack if sense == LESS else lhs - slack if sense == GREATER else lhs
        p.add_row(a, sense, rhs)
    return p


# -------------------------------------------------------------- generators


def random_distribution(rng: random.Random, max_support: int = 5, grid: bool = True):
    size = rng.randint(1, max_support)
    if grid:
        support = sorted(rng.sample(range(0, 129), size))
        support = tuple(v / 64 for v in support)
    else:
        values = sorted({round(rng.uniform(0, 10), 6) for _ in range(size)})
        while len(values) < size:
            values.append(values[-1] + rng.uniform(0.01, 1.0))
        support = tuple(sorted(values))
    weights = [rng.randint(1, 16) for _ in range(size)]
    total = sum(weights)
    pmf = [w / total for w in weights[:-1]]
    pmf.append(1.0 - math.fsum(pmf))
    return DiscreteDistribution(support, tuple(pmf))


def irregular_buyer_distribution(rng: random.Random):
    """Distributions with big late gaps, which usually force ironing."""
    lows = sorted(rng.sample(range(0, 32), rng.randint(1, 3)))
    highs = sorted(rng.sample(range(256, 640), rng.randint(1, 2)))
    support = tuple(v / 64 for v in lows + highs)
    weights = [rng.randint(1, 8) for _ in support]
    total = sum(weights)
    pmf = [w / total for w in weights[:-1]]
    pmf.append(1.0 - math.fsum(pmf))
    return DiscreteDistribution(support, tuple(pmf))
