"""Budget-balance transformations.

Two constructive steps, composable into a pipeline: rebate the ex-ante
surplus uniformly to the sellers (ex-ante WBB to ex-ante SBB), then reshape
payments multiplicatively into a product form whose per-profile buyer and
seller totals coincide (ex-ante SBB to per-profile SBB).  Both steps leave
the allocation, every interim payment (beyond the uniform rebate), and the
GFT unchanged, so IR and interim BIC survive; dominant-strategy properties
generally do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .audit import check_interim_bic_ir
from .errors import NegativePayment, NotExAnteSBB, NotExAnteWBB
from .mechanisms import MechanismTable, exante_surplus, with_payments

EXANTE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class InterimPaymentView:
    """Interim expected payments per agent type, plus ex-ante totals."""

    buyer_maps: tuple[tuple[float, ...], ...]   # per buyer, indexed by type
    seller_maps: tuple[tuple[float, ...], ...]
    buyer_totals: tuple[float, ...]             # ex-ante expected payments
    seller_totals: tuple[float, ...]

    def buyer_at(self, i: int, value: float, instance) -> float:
        return self.buyer_maps[i][instance.buyers[i].index_of(value)]

    def seller_at(self, j: int, value: float, instance) -> float:
        return self.seller_maps[j][instance.sellers[j].index_of(value)]


def interim_payments(table: MechanismTable) -> InterimPaymentView:
    inst = table.instance
    n, m = inst.n, inst.m
    acc_b = [[0.0] * len(d) for d in inst.buyers]
    acc_s = [[0.0] * len(d) for d in inst.sellers]
    for row in table.rows:
        for i in range(n):
            acc_b[i][row.indices[i]] += row.prob * row.pB[i]
        for j in range(m):
            acc_s[j][row.indices[n + j]] += row.prob * row.pS[j]
    buyer_maps = tuple(
        tuple(v / inst.buyers[i].pmf[k] for k, v in enumerate(acc_b[i])) for i in range(n)
    )
    seller_maps = tuple(
        tuple(v / inst.sellers[j].pmf[k] for k, v in enumerate(acc_s[j])) for j in range(m)
    )
    buyer_totals = tuple(
        math.fsum(p * v for p, v in zip(inst.buyers[i].pmf, buyer_maps[i])) for i in range(n)
    )
    seller_totals = tuple(
        math.fsum(p * v for p, v in zip(inst.sellers[j].pmf, seller_maps[j])) for j in range(m)
    )
    return InterimPaymentView(
        buyer_maps=buyer_maps,
        seller_maps=seller_maps,
        buyer_totals=buyer_totals,
        seller_totals=seller_totals,
    )


def _require_nonnegative_payments(table: MechanismTable) -> None:
    for row in table.rows:
        if any(p < 0 for p in row.pB) or any(p < 0 for p in row.pS):
            raise NegativePayment(f"negative payment at profile {row.profile}")


def exante_wbb_to_exante_sbb(table: MechanismTable) -> MechanismTable:
    """Give the ex-ante surplus to the sellers, split evenly, at every profile."""
    _require_nonnegative_payments(table)
    delta = exante_surplus(table)
    if delta < -EXANTE_TOLERANCE:
        raise NotExAnteWBB(f"ex-ante surplus is {delta:.3g} < 0")
    delta = max(delta, 0.0)
    rebate = delta / table.instance.m
    pB_rows = (row.pB for row in table.rows)
    pS_rows = (tuple(p + rebate for p in row.pS) for row in table.rows)
    return with_payments(table, pB_rows, pS_rows)


def exante_sbb_to_sbb(table: MechanismTable) -> MechanismTable:
    """Reshape payments into product form, balancing the books at every profile.

    Interim payments are preserved exactly for every agent and type; agents
    whose ex-ante expected payment is zero pay and receive identically zero.
    """
    _require_nonnegative_payments(table)
    surplus = exante_surplus(table)
    if abs(surplus) > EXANTE_TOLERANCE:
        raise NotExAnteSBB(f"ex-ante surplus is {surplus:.3g}, want 0")
    inst = table.instance
    n, m = inst.n, inst.m
    view = interim_payments(table)
    omega_b = [i for i in range(n) if view.buyer_totals[i] > 0.0]
    omega_s = [j for j in range(m) if view.seller_totals[j] > 0.0]
    denom = math.prod(view.buyer_totals[i] for i in omega_b) * math.prod(
        view.seller_totals[j] for j in omega_s
    )

    pB_rows, pS_rows = [], []
    for row in table.rows:
        numer = math.prod(view.buyer_maps[i][row.indices[i]] for i in omega_b) * math.prod(
            view.seller_maps[j][row.indices[n + j]] for j in omega_s
        )
        scale = numer / denom if denom > 0 else 0.0
        pB_rows.append(
            tuple(scale * view.buyer_totals[i] if i in omega_b else 0.0 for i in range(n))
        )
        pS_rows.append(
            tuple(scale * view.seller_totals[j] if j in omega_s else 0.0 for j in range(m))
        )
    return with_payments(table, pB_rows, pS_rows)


def wbb_to_sbb_pipeline(table: MechanismTable, verify_input: bool = True) -> MechanismTable:
    """Ex-ante WBB with IR and interim BIC in, per-profile SBB out."""
    if verify_input:
        result = check_interim_bic_ir(table)
        if not result.passed:
            raise ValueError(
                f"input table is not interim BIC/IR (violation {result.worst_violation:.3g})"
            )
    return exante_sbb_to_sbb(exante_wbb_to_exante_sbb(table))
