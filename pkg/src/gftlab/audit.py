"""Brute-force certification of mechanism properties.

Works on a MechanismTable or on any object exposing (instance, xB, xS, pB,
pS) per profile, such as the fractional view of an LP solution.  Incentive
checks use a looser tolerance than budget identities: expectations
accumulate float error, budget rows are a handful of additions.

The misreport set always includes the null (non-participation) type, so
individual rationality is folded into the incentive checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .market import Instance
from .mechanisms import MechanismTable

DEFAULT_IC_TOLERANCE = 1e-7
DEFAULT_BB_TOLERANCE = 1e-9
NULL_REPORT = "null"

SBB, WBB, EXANTE_SBB, EXANTE_WBB = "SBB", "WBB", "ExAnteSBB", "ExAnteWBB"


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    worst_violation: float
    witness: dict | None
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "worst_violation": self.worst_violation,
            "witness": self.witness,
            "tolerance": self.tolerance,
        }


@dataclass(frozen=True)
class AuditReport:
    entries: dict[str, PropertyResult]
    tol_ic: float
    tol_bb: float

    def passed(self, *names: str) -> bool:
        return all(self.entries[name].passed for name in names)

    def all_passed(self) -> bool:
        return all(entry.passed for entry in self.entries.values())

    def to_dict(self) -> dict:
        return {
            "tol_ic": self.tol_ic,
            "tol_bb": self.tol_bb,
            "properties": {name: e.to_dict() for name, e in self.entries.items()},
        }


class _Arrays:
    """Profile-major allocation/payment arrays with agent-axis helpers."""

    def __init__(self, instance: Instance, probs, x, pay):
        self.instance = instance
        self.probs = probs          # [P]
        self.x = x                  # [P][n+m]
        self.pay = pay              # [P][n+m]; seller entries are gains
        self.sizes = tuple(len(d) for d in instance.distributions)
        strides = []
        acc = 1
        for s in self.sizes:
            strides.append(acc)
            acc *= s
        self.strides = tuple(strides)
        self.num_agents = instance.n + instance.m

    def type_index(self, t: int, agent: int) -> int:
        return (t // self.strides[agent]) % self.sizes[agent]

    def support(self, agent: int):
        return self.instance.distributions[agent].support

    def pmf(self, agent: int):
        return self.instance.distributions[agent].pmf

    def is_buyer(self, agent: int) -> bool:
        return agent < self.instance.n

    def utility(self, agent: int, value: float, x: float, pay: float) -> float:
        return value * x - pay if self.is_buyer(agent) else pay - value * x

    def side_name(self, agent: int) -> tuple[str, int]:
        if self.is_buyer(agent):
            return "buyer", agent
        return "seller", agent - self.instance.n


def _as_arrays(mech) -> _Arrays:
    if isinstance(mech, MechanismTable):
        inst = mech.instance
        probs = [row.prob for row in mech.rows]
        x, pay = [], []
        for row in mech.rows:
            xb = [0.0] * inst.n
            xs = [0.0] * inst.m
            for i, j in row.matching:
                xb[i] = 1.0
                xs[j] = 1.0
            x.append(xb + xs)
            pay.append(list(row.pB) + list(row.pS))
        return _Arrays(inst, probs, x, pay)
    inst = mech.instance
    P = len(mech.xB)
    probs = []
    from .market import index_tuples, indices_probability

    sizes = tuple(len(d) for d in inst.distributions)
    for idx in index_tuples(sizes):
        probs.append(indices_probability(inst, idx))
    assert len(probs) == P, "profile count mismatch"
    x = [list(mech.xB[t]) + list(mech.xS[t]) for t in range(P)]
    pay = [list(mech.pB[t]) + list(mech.pS[t]) for t in range(P)]
    return _Arrays(inst, probs, x, pay)


def _profile_witness(arrays: _Arrays, t: int) -> dict:
    inst = arrays.instance
    values = [
        arrays.support(a)[arrays.type_index(t, a)] for a in range(arrays.num_agents)
    ]
    return {"b": values[: inst.n], "s": values[inst.n :]}


def check_interim_bic_ir(mech, tol: float = DEFAULT_IC_TOLERANCE) -> PropertyResult:
    """Interim BIC and IR: truth beats every misreport, null included."""
    arrays = _as_arrays(mech)
    worst = 0.0
    witness = None
    for agent in range(arrays.num_agents):
        K = arrays.sizes[agent]
        pmf = arrays.pmf(agent)
        x_bar = [0.0] * K
        p_bar = [0.0] * K
        for t, prob in enumerate(arrays.probs):
            k = arrays.type_index(t, agent)
            x_bar[k] += prob * arrays.x[t][agent]
            p_bar[k] += prob * arrays.pay[t][agent]
        x_bar = [v / pmf[k] for k, v in enumerate(x_bar)]
        p_bar = [v / pmf[k] for k, v in enumerate(p_bar)]
        support = arrays.support(agent)
        for a in range(K):
            val = support[a]
            truth = arrays.utility(agent, val, x_bar[a], p_bar[a])
            for r in range(K):
                if r == a:
                    continue
                violation = arrays.utility(agent, val, x_bar[r], p_bar[r]) - truth
                if violation > worst:
                    worst = violation
                    side, index = arrays.side_name(agent)
                    witness = {
                        "side": side,
                        "agent": index,
                        "true_type": val,
                        "misreport": support[r],
                        "profile": None,
                    }
            if -truth > worst:  # null report: utility 0
                worst = -truth
                side, index = arrays.side_name(agent)
                witness = {
                    "side": side,
                    "agent": index,
                    "true_type": val,
                    "misreport": NULL_REPORT,
                    "profile": None,
                }
    passed = worst <= tol
    return PropertyResult(
        name="interim_bic_ir",
        passed=passed,
        worst_violation=worst,
        witness=witness if not passed else None,
        tolerance=tol,
    )


def check_dsic(mech, tol: float = DEFAULT_IC_TOLERANCE) -> PropertyResult:
    """Pointwise incentive compatibility at every opponent profile."""
    arrays = _as_arrays(mech)
    worst = 0.0
    witness = None
    P = len(arrays.probs)
    for agent in range(arrays.num_agents):
        K = arrays.sizes[agent]
        stride = arrays.strides[agent]
        support = arrays.support(agent)
        for t in range(P):
            a = arrays.type_index(t, agent)
            val = support[a]
            truth = arrays.utility(agent, val, arrays.x[t][agent], arrays.pay[t][agent])
            for r in range(K):
                if r == a:
                    continue
                t2 = t + (r - a) * stride
                dev = arrays.utility(agent, val, arrays.x[t2][agent], arrays.pay[t2][agent])
                violation = dev - truth
                if violation > worst:
                    worst = violation
                    side, index = arrays.side_name(agent)
                    witness = {
                        "side": side,
                        "agent": index,
                        "true_type": val,
                        "misreport": support[r],
                        "profile": _profile_witness(arrays, t),
                    }
            if -truth > worst:  # null report: utility 0
                worst = -truth
                side, index = arrays.side_name(agent)
                witness = {
                    "side": side,
                    "agent": index,
                    "true_type": val,
                    "misreport": NULL_REPORT,
                    "profile": _profile_witness(arrays, t),
                }
    passed = worst <= tol
    return PropertyResult(
        name="dsic",
        passed=passed,
        worst_violation=worst,
        witness=witness if not passed else None,
        tolerance=tol,
    )


def check_budget(mech, variant: str, tol: float = DEFAULT_BB_TOLERANCE) -> PropertyResult:
    """Budget balance in one of its four variants."""
    arrays = _as_arrays(mech)
    inst = arrays.instance
    diffs = [
        math.fsum(arrays.pay[t][: inst.n]) - math.fsum(arrays.pay[t][inst.n :])
        for t in range(len(arrays.probs))
    ]
    worst = 0.0
    witness = None
    if variant in (SBB, WBB):
        for t, d in enumerate(diffs):
            violation = abs(d) if variant == SBB else -d
            if violation > worst:
                worst = violation
                witness = {"profile": _profile_witness(arrays, t), "surplus": d}
    elif variant in (EXANTE_SBB, EXANTE_WBB):
        total = math.fsum(p * d for p, d in zip(arrays.probs, diffs))
        worst = abs(total) if variant == EXANTE_SBB else -total
        worst = max(0.0, worst)
        witness = {"profile": None, "surplus": total}
    else:
        raise ValueError(f"unknown budget variant {variant!r}")
    passed = worst <= tol
    return PropertyResult(
        name=f"budget_{variant}",
        passed=passed,
        worst_violation=worst,
        witness=witness if not passed else None,
        tolerance=tol,
    )


def check_monotone(mech, tol: float = DEFAULT_IC_TOLERANCE) -> PropertyResult:
    """Allocation monotone along every own-type slice of the profile grid."""
    arrays = _as_arrays(mech)
    worst = 0.0
    witness = None
    P = len(arrays.probs)
    for agent in range(arrays.num_agents):
        K = arrays.sizes[agent]
        if K == 1:
            continue
        stride = arrays.strides[agent]
        buyer = arrays.is_buyer(agent)
        for t in range(P):
            if arrays.type_index(t, agent) != 0:
                continue
            xs = [arrays.x[t + k * stride][agent] for k in range(K)]
            for k in range(K - 1):
                step = xs[k + 1] - xs[k]
                violation = -step if buyer else step
                if violation > worst:
                    worst = violation
                    side, index = arrays.side_name(agent)
                    witness = {
                        "side": side,
                        "agent": index,
                        "slice": _profile_witness(arrays, t),
                        "between": [arrays.support(agent)[k], arrays.support(agent)[k + 1]],
                    }
    passed = worst <= tol
    return PropertyResult(
        name="monotone",
        passed=passed,
        worst_violation=worst,
        witness=witness if not passed else None,
        tolerance=tol,
    )


def audit_mechanism(
    mech, tol_ic: float = DEFAULT_IC_TOLERANCE, tol_bb: float = DEFAULT_BB_TOLERANCE
) -> AuditReport:
    """Run every check; keys: interim_bic_ir, dsic, monotone, budget_*."""
    entries = {}
    for result in (
        check_interim_bic_ir(mech, tol_ic),
        check_dsic(mech, tol_ic),
        check_monotone(mech, tol_ic),
        check_budget(mech, SBB, tol_bb),
        check_budget(mech, WBB, tol_bb),
        check_budget(mech, EXANTE_SBB, tol_bb),
        check_budget(mech, EXANTE_WBB, tol_bb),
    ):
        entries[result.name] = result
    return AuditReport(entries=entries, tol_ic=tol_ic, tol_bb=tol_bb)
