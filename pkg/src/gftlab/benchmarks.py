"""Benchmarks: first-best GFT, the ironed-virtual-value duality upper bound,
and the exact second-best optimum via an explicit linear program.

The LP's allocation variables are per-profile lottery weights over the
feasibility family's members (the empty set included), so implementability
is exact rather than delegated to a separation oracle.  Payments are free
variables encoded as differences of two non-negative columns.  Individual
rationality rides along as the misreport-to-null rows of the incentive
constraints.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import LpNotOptimal, LpTooLarge, NegativeAlpha
from .market import (
    DEFAULT_FAMILY_CAP,
    Instance,
    TypeProfile,
    index_tuples,
    indices_probability,
    profile_from_indices,
)
from .matching import Matching, WeightedBipartiteGraph, max_weight_matching
from .simplex import EQUAL, FREE, GREATER, NONNEG, LpProblem, LpSolution, solve_lp
from .virtual import virtual_tables

DEFAULT_LP_VARIABLE_CAP = 20_000


def _expected_matching_weight(instance: Instance, weight_of) -> float:
    """E over profiles of the max-weight feasible matching's total weight.

    `weight_of(idx) -> (i, j) -> weight` supplies per-profile pair weights.
    """
    sizes = tuple(len(d) for d in instance.distributions)
    total = 0.0
    for idx in index_tuples(sizes):
        graph = WeightedBipartiteGraph.from_function(
            instance.n, instance.m, weight_of(idx), instance.feasibility
        )
        total += indices_probability(instance, idx) * max_weight_matching(graph).weight
    return total


def first_best(instance: Instance) -> float:
    """Full-efficiency benchmark: trade whenever a feasible matching gains."""
    buyers, sellers = instance.buyers, instance.sellers

    def weight_of(idx):
        n = instance.n
        return lambda i, j: buyers[i].support[idx[i]] - sellers[j].support[idx[n + j]]

    return _expected_matching_weight(instance, weight_of)


def duality_benchmark(instance: Instance, alpha: float) -> float:
    """Upper bound on the second-best GFT from the dual with multiplier alpha.

    Pointwise maximization over profiles is exact because the implementable
    set is profile-separable and downward closed.
    """
    if alpha < 0:
        raise NegativeAlpha(f"alpha must be non-negative, got {alpha}")
    bt, st = virtual_tables(instance)
    buyers, sellers = instance.buyers, instance.sellers
    n = instance.n

    def weight_of(idx):
        def w(i, j):
            b = buyers[i].support[idx[i]]
            s = sellers[j].support[idx[n + j]]
            return (b + alpha * bt[i].ironed[idx[i]]) - (s + alpha * st[j].ironed[idx[n + j]])

        return w

    return _expected_matching_weight(instance, weight_of)


@dataclass(frozen=True)
class SecondBestLp:
    """The GFT-maximization LP over lotteries plus its variable layout."""

    instance: Instance
    problem: LpProblem
    members: tuple[tuple[tuple[int, int], ...], ...]
    profile_indices: tuple[tuple[int, ...], ...]
    z_offset: int
    pb_offset: int  # buyer payment plus/minus blocks
    ps_offset: int

    def z_index(self, t: int, mi: int) -> int:
        return self.z_offset + t * len(self.members) + mi

    def pb_index(self, t: int, i: int) -> tuple[int, int]:
        base = self.pb_offset + 2 * (t * self.instance.n + i)
        return base, base + 1

    def ps_index(self, t: int, j: int) -> tuple[int, int]:
        base = self.ps_offset + 2 * (t * self.instance.m + j)
        return base, base + 1


def _profile_layout(instance: Instance):
    sizes = tuple(len(d) for d in instance.distributions)
    profiles = tuple(index_tuples(sizes))
    strides = []
    acc = 1
    for s in sizes:
        strides.append(acc)
        acc *= s
    return sizes, profiles, tuple(strides)


def build_second_best_lp(
    instance: Instance, max_variables: int = DEFAULT_LP_VARIABLE_CAP
) -> LpProblem:
    """The GFT-maximizing LP over IR, BIC, per-profile SBB mechanisms."""
    return build_second_best_lp_indexed(instance, max_variables).problem


def build_second_best_lp_indexed(
    instance: Instance, max_variables: int = DEFAULT_LP_VARIABLE_CAP
) -> SecondBestLp:
    n, m = instance.n, instance.m
    members = instance.feasibility.members(n, m, DEFAULT_FAMILY_CAP)
    sizes, profiles, strides = _profile_layout(instance)
    P, F = len(profiles), len(members)
    nz = P * F
    nvar = nz + 2 * P * n + 2 * P * m
    if nvar > max_variables:
        raise LpTooLarge(f"{nvar} variables exceed the cap of {max_variables}")

    dists = instance.distributions
    matched_b = [[any(i == bi for bi, _ in mem) for i in range(n)] for mem in members]
    matched_s = [[any(j == sj for _, sj in mem) for j in range(m)] for mem in members]

    lp = SecondBestLp(
        instance=instance,
        problem=LpProblem(objective=[0.0] * nvar, bounds=[NONNEG] * nvar),
        members=members,
        profile_indices=profiles,
        z_offset=0,
        pb_offset=nz,
        ps_offset=nz + 2 * P * n,
    )
    problem = lp.problem

    # objective: expected gains from trade of the chosen lotteries
    for t, idx in enumerate(profiles):
        prob = indices_probability(instance, idx)
        for mi, mem in enumerate(members):
            gain = sum(
                dists[i].support[idx[i]] - dists[n + j].support[idx[n + j]] for i, j in mem
            )
            if gain != 0.0:
                problem.objective[lp.z_index(t, mi)] = prob * gain

    # each profile carries one lottery over family members
    for t in range(P):
        problem.add_row({lp.z_index(t, mi): 1.0 for mi in range(F)}, EQUAL, 1.0)

    # per-profile strong budget balance
    for t in range(P):
        coeffs: dict[int, float] = {}
        for i in range(n):
            plus, minus = lp.pb_index(t, i)
            coeffs[plus] = 1.0
            coeffs[minus] = -1.0
        for j in range(m):
            plus, minus = lp.ps_index(t, j)
            coeffs[plus] = -1.0
            coeffs[minus] = 1.0
        problem.add_row(coeffs, EQUAL, 0.0)

    def others_product(agent: int):
        """All index combos over the other agents with their probabilities."""
        other_sizes = sizes[:agent] + sizes[agent + 1 :]
        combos = []
        for rest in index_tuples(other_sizes):
            full = rest[:agent] + (0,) + rest[agent:]
            prob = 1.0
            for a, k in enumerate(full):
                if a != agent:
                    prob *= dists[a].pmf[k]
            base = sum(full[a] * strides[a] for a in range(len(sizes)) if a != agent)
            combos.append((base, prob))
        return combos

    # incentive rows (misreport to the null type encodes IR)
    for agent in range(n + m):
        is_buyer = agent < n
        K = sizes[agent]
        combos = others_product(agent)
        for a in range(K):
            val = dists[agent].support[a]
            for r in list(range(K)) + [None]:
                if r == a:
                    continue
                coeffs: dict[int, float] = {}

                def accumulate(type_index: int, sign: float):
                    for base, prob in combos:
                        t = base + type_index * strides[agent]
                        for mi in range(F):
                            matched = (
                                matched_b[mi][agent] if is_buyer else matched_s[mi][agent - n]
                            )
                            if matched:
                                key = lp.z_index(t, mi)
                                # buyer utility: value*x - p ; seller: p - value*x
                                coeffs[key] = coeffs.get(key, 0.0) + (
                                    sign * prob * (val if is_buyer else -val)
                                )
                        if is_buyer:
                            plus, minus = lp.pb_index(t, agent)
                            pay_sign = -sign
                        else:
                            plus, minus = lp.ps_index(t, agent - n)
                            pay_sign = sign
                        coeffs[plus] = coeffs.get(plus, 0.0) + pay_sign * prob
                        coeffs[minus] = coeffs.get(minus, 0.0) - pay_sign * prob

                accumulate(a, 1.0)
                if r is not None:
                    accumulate(r, -1.0)
                problem.add_row(coeffs, GREATER, 0.0)

    return lp


@dataclass(frozen=True)
class SecondBestResult:
    value: float
    lp: SecondBestLp
    solution: LpSolution


def solve_second_best_lp(
    instance: Instance, max_variables: int = DEFAULT_LP_VARIABLE_CAP
) -> SecondBestResult:
    lp = build_second_best_lp_indexed(instance, max_variables)
    solution = solve_lp(lp.problem)
    if solution.status != "optimal":
        raise LpNotOptimal(f"second-best LP came back {solution.status}")
    return SecondBestResult(value=float(solution.objective_value), lp=lp, solution=solution)


@dataclass(frozen=True)
class FractionalMechanism:
    """Interim-auditable view of an LP solution: per-profile allocation
    probabilities and expected payments (lotteries resolved by expectation)."""

    instance: Instance
    xB: tuple[tuple[float, ...], ...]  # profile-major, buyers
    xS: tuple[tuple[float, ...], ...]
    pB: tuple[tuple[float, ...], ...]
    pS: tuple[tuple[float, ...], ...]


def extract_fractional_mechanism(result: SecondBestResult) -> FractionalMechanism:
    lp, x = result.lp, result.solution.x
    inst = lp.instance
    n, m, F = inst.n, inst.m, len(lp.members)
    matched_b = [[any(i == bi for bi, _ in mem) for i in range(n)] for mem in lp.members]
    matched_s = [[any(j == sj for _, sj in mem) for j in range(m)] for mem in lp.members]
    xB, xS, pB, pS = [], [], [], []
    for t in range(len(lp.profile_indices)):
        z = [x[lp.z_index(t, mi)] for mi in range(F)]
        xB.append(tuple(sum(z[mi] for mi in range(F) if matched_b[mi][i]) for i in range(n)))
        xS.append(tuple(sum(z[mi] for mi in range(F) if matched_s[mi][j]) for j in range(m)))
        pB.append(tuple(x[lp.pb_index(t, i)[0]] - x[lp.pb_index(t, i)[1]] for i in range(n)))
        pS.append(tuple(x[lp.ps_index(t, j)[0]] - x[lp.ps_index(t, j)[1]] for j in range(m)))
    return FractionalMechanism(
        instance=inst, xB=tuple(xB), xS=tuple(xS), pB=tuple(pB), pS=tuple(pS)
    )


@dataclass(frozen=True)
class SbbImplementability:
    implementable: bool
    monotone: bool
    virtual_surplus: float


def check_sbb_implementable(
    instance: Instance, allocation: Callable[[TypeProfile], Matching], tol: float = 1e-9
) -> SbbImplementability:
    """Discrete analog of the allocation-implementability characterization.

    Monotonicity is taken on interim allocation probabilities (as the
    characterization states it), and the surplus uses RAW virtual values.
    """
    bt, st = virtual_tables(instance)
    sizes, profiles, _ = _profile_layout(instance)
    n, m = instance.n, instance.m

    surplus = 0.0
    interim = [np.zeros(sizes[a]) for a in range(n + m)]
    for idx in profiles:
        profile = profile_from_indices(instance, idx)
        prob = indices_probability(instance, idx)
        pairs = allocation(profile).pairs
        for i, j in pairs:
            surplus += prob * (bt[i].raw[idx[i]] - st[j].raw[idx[n + j]])
            interim[i][idx[i]] += prob
            interim[n + j][idx[n + j]] += prob

    monotone = True
    for a in range(n + m):
        pmf = instance.distributions[a].pmf
        x_bar = [interim[a][k] / pmf[k] for k in range(sizes[a])]
        steps = [x_bar[k + 1] - x_bar[k] for k in range(sizes[a] - 1)]
        if a < n:
            monotone &= all(step >= -tol for step in steps)
        else:
            monotone &= all(step <= tol for step in steps)

    return SbbImplementability(
        implementable=bool(monotone and surplus >= -tol),
        monotone=bool(monotone),
        virtual_surplus=float(surplus),
    )


def sbb_feasible_lp(
    instance: Instance, allocation: Callable[[TypeProfile], Matching]
) -> bool:
    """LP feasibility of IR+BIC+SBB payments for a FIXED allocation rule.

    Independent cross-check for check_sbb_implementable: only the payment
    variables remain; the allocation enters the incentive rows as constants.
    """
    sizes, profiles, strides = _profile_layout(instance)
    n, m = instance.n, instance.m
    dists = instance.distributions
    P = len(profiles)

    x_of = np.zeros((P, n + m))
    for t, idx in enumerate(profiles):
        pairs = allocation(profile_from_indices(instance, idx)).pairs
        for i, j in pairs:
            x_of[t, i] = 1.0
            x_of[t, n + j] = 1.0

    # one free payment variable per (profile, agent)
    nvar = P * (n + m)
    problem = LpProblem(objective=[0.0] * nvar, bounds=[FREE] * nvar)

    def pvar(t: int, agent: int) -> int:
        return t * (n + m) + agent

    for t in range(P):
        coeffs = {pvar(t, i): 1.0 for i in range(n)}
        coeffs.update({pvar(t, n + j): -1.0 for j in range(m)})
        problem.add_row(coeffs, EQUAL, 0.0)

    for agent in range(n + m):
        is_buyer = agent < n
        K = sizes[agent]
        other_sizes = sizes[:agent] + sizes[agent + 1 :]
        combos = []
        for rest in index_tuples(other_sizes):
            full = rest[:agent] + (0,) + rest[agent:]
            prob = 1.0
            for a, k in enumerate(full):
                if a != agent:
                    prob *= dists[a].pmf[k]
            base = sum(full[a] * strides[a] for a in range(len(sizes)) if a != agent)
            combos.append((base, prob))

        def interim_x(type_index: int) -> float:
            return sum(prob * x_of[base + type_index * strides[agent], agent]
                       for base, prob in combos)

        for a in range(K):
            val = dists[agent].support[a]
            for r in list(range(K)) + [None]:
                if r == a:
                    continue
                coeffs = {}
                pay_sign = -1.0 if is_buyer else 1.0
                const = (val * interim_x(a)) if is_buyer else (-val * interim_x(a))
                for base, prob in combos:
                    t = base + a * strides[agent]
                    coeffs[pvar(t, agent)] = coeffs.get(pvar(t, agent), 0.0) + pay_sign * prob
                if r is not None:
                    const -= (val * interim_x(r)) if is_buyer else (-val * interim_x(r))
                    for base, prob in combos:
                        t = base + r * strides[agent]
                        coeffs[pvar(t, agent)] = coeffs.get(pvar(t, agent), 0.0) - pay_sign * prob
                problem.add_row(coeffs, GREATER, -const)

    return solve_lp(problem).status == "optimal"
