"""GSOM and GBOM for double auctions: ironed-virtual-weight matchings,
threshold payments, exact and virtual GFT, and budget surplus.

A MechanismTable is the universal exchange format: one row per type profile
(in enumeration order) holding the realized matching, buyer payments, and
seller gains.  Threshold payments scan the agent's full support per profile;
monotonicity is certified by the auditor rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

from .errors import InstanceError
from .market import (
    DiscreteDistribution,
    FeasibilityFamily,
    Instance,
    TypeProfile,
    index_tuples,
    indices_probability,
    profile_from_indices,
)
from .matching import Matching, WeightedBipartiteGraph, max_weight_matching
from .virtual import virtual_tables

GSOM, GBOM = "GSOM", "GBOM"


@dataclass(frozen=True)
class ProfileRow:
    indices: tuple[int, ...]  # per-agent type indices, buyers then sellers
    profile: TypeProfile
    prob: float
    matching: tuple[tuple[int, int], ...]
    pB: tuple[float, ...]
    pS: tuple[float, ...]


@dataclass(frozen=True)
class MechanismTable:
    instance: Instance
    label: str  # GSOM | GBOM | SOM | BOM | custom
    rows: tuple[ProfileRow, ...]  # enumeration order, buyer 0 fastest


def _weight_fn(instance: Instance, which: str, tables=None) -> Callable:
    """Pair-weight function over type indices for the chosen mechanism."""
    if tables is None:
        tables = virtual_tables(instance)
    bt, st = tables
    n = instance.n
    buyers, sellers = instance.buyers, instance.sellers
    if which == GSOM:
        def weight_of(idx):
            return lambda i, j: bt[i].ironed[idx[i]] - sellers[j].support[idx[n + j]]
    elif which == GBOM:
        def weight_of(idx):
            return lambda i, j: buyers[i].support[idx[i]] - st[j].ironed[idx[n + j]]
    else:
        raise ValueError(f"unknown mechanism {which!r}")
    return weight_of


def _allocate_indices(instance: Instance, weight_of, idx) -> Matching:
    graph = WeightedBipartiteGraph.from_function(
        instance.n, instance.m, weight_of(idx), instance.feasibility
    )
    return max_weight_matching(graph)


def gsom_allocate(instance: Instance, profile: TypeProfile, tables=None) -> Matching:
    """Max-weight matching with pair weights ironed-buyer-virtual minus cost."""
    idx = _profile_to_indices(instance, profile)
    return _allocate_indices(instance, _weight_fn(instance, GSOM, tables), idx)


def gbom_allocate(instance: Instance, profile: TypeProfile, tables=None) -> Matching:
    """Max-weight matching with pair weights value minus ironed-seller-virtual."""
    idx = _profile_to_indices(instance, profile)
    return _allocate_indices(instance, _weight_fn(instance, GBOM, tables), idx)


def _profile_to_indices(instance: Instance, profile: TypeProfile) -> tuple[int, ...]:
    return tuple(
        dist.index_of(v)
        for dist, v in zip(instance.distributions, profile.b + profile.s)
    )


def threshold_payments(
    instance: Instance,
    allocate: Callable[[TypeProfile], Matching],
    profile: TypeProfile,
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Threshold payments at one profile for an arbitrary allocation rule.

    A matched buyer pays the smallest own report keeping her matched; a
    matched seller receives the largest.  Unmatched agents pay and receive 0.
    """
    idx = _profile_to_indices(instance, profile)

    def alloc_at(indices) -> Matching:
        return allocate(profile_from_indices(instance, indices))

    return _threshold_from_cache(instance, alloc_at, idx)


def _threshold_from_cache(instance: Instance, alloc_at, idx):
    n, m = instance.n, instance.m
    pairs = alloc_at(idx).pairs
    matched_buyers = {i for i, _ in pairs}
    matched_sellers = {j for _, j in pairs}
    pB = [0.0] * n
    pS = [0.0] * m
    for i in matched_buyers:
        support = instance.buyers[i].support
        for k in range(len(support)):
            trial = idx[:i] + (k,) + idx[i + 1 :]
            if any(bi == i for bi, _ in alloc_at(trial).pairs):
                pB[i] = support[k]
                break
    for j in matched_sellers:
        support = instance.sellers[j].support
        a = n + j
        for k in reversed(range(len(support))):
            trial = idx[:a] + (k,) + idx[a + 1 :]
            if any(sj == j for _, sj in alloc_at(trial).pairs):
                pS[j] = support[k]
                break
    return tuple(pB), tuple(pS)


def build_mechanism(instance: Instance, which: str) -> MechanismTable:
    """Full mechanism table for GSOM or GBOM with threshold payments."""
    tables = virtual_tables(instance)
    weight_of = _weight_fn(instance, which, tables)
    sizes = tuple(len(d) for d in instance.distributions)

    cache: dict[tuple[int, ...], Matching] = {}

    def alloc_at(idx) -> Matching:
        got = cache.get(idx)
        if got is None:
            got = cache[idx] = _allocate_indices(instance, weight_of, idx)
        return got

    rows = []
    for idx in index_tuples(sizes):
        pB, pS = _threshold_from_cache(instance, alloc_at, idx)
        rows.append(
            ProfileRow(
                indices=idx,
                profile=profile_from_indices(instance, idx),
                prob=indices_probability(instance, idx),
                matching=alloc_at(idx).pairs,
                pB=pB,
                pS=pS,
            )
        )
    return MechanismTable(instance=instance, label=which, rows=tuple(rows))


def build_custom_mechanism(
    instance: Instance,
    allocate: Callable[[TypeProfile], Matching],
    label: str = "custom",
    payments: str = "threshold",
) -> MechanismTable:
    """Mechanism table for an arbitrary allocation rule.

    payments="threshold" runs the support scans; "zero" leaves all payments 0.
    """
    sizes = tuple(len(d) for d in instance.distributions)
    cache: dict[tuple[int, ...], Matching] = {}

    def alloc_at(idx) -> Matching:
        got = cache.get(idx)
        if got is None:
            got = cache[idx] = allocate(profile_from_indices(instance, idx))
        return got

    rows = []
    for idx in index_tuples(sizes):
        if payments == "threshold":
            pB, pS = _threshold_from_cache(instance, alloc_at, idx)
        else:
            pB, pS = (0.0,) * instance.n, (0.0,) * instance.m
        rows.append(
            ProfileRow(
                indices=idx,
                profile=profile_from_indices(instance, idx),
                prob=indices_probability(instance, idx),
                matching=alloc_at(idx).pairs,
                pB=pB,
                pS=pS,
            )
        )
    return MechanismTable(instance=instance, label=label, rows=tuple(rows))


def gft_exact(table: MechanismTable) -> float:
    """Expected realized gains from trade of the table's allocations."""
    total = 0.0
    for row in table.rows:
        total += row.prob * sum(row.profile.b[i] - row.profile.s[j] for i, j in row.matching)
    return total


def virtual_gft(table: MechanismTable, which: str | None = None) -> float:
    """Expected virtual weight of the table's matchings (GSOM or GBOM weights)."""
    which = which or table.label
    bt, st = virtual_tables(table.instance)
    n = table.instance.n
    total = 0.0
    for row in table.rows:
        for i, j in row.matching:
            if which == GSOM:
                w = bt[i].ironed[row.indices[i]] - row.profile.s[j]
            elif which == GBOM:
                w = row.profile.b[i] - st[j].ironed[row.indices[n + j]]
            else:
                raise ValueError(f"unknown mechanism {which!r}")
            total += row.prob * w
    return total


def exante_surplus(table: MechanismTable) -> float:
    """Expected buyer payments minus expected seller gains."""
    return math.fsum(row.prob * (math.fsum(row.pB) - math.fsum(row.pS)) for row in table.rows)


def pairwise_surplus_margin(table: MechanismTable, axis: str | None = None) -> float:
    """Smallest slice margin of the per-pair payment-versus-gain inequality.

    For each pair (i, j), fix every other coordinate and compare the expected
    buyer payment attributed to the pair against the expected seller gain.
    The expectation runs over the type whose ironed virtual value defines the
    mechanism's weights: buyer i for GSOM, seller j for GBOM (the mirrored
    argument).  Non-negative margins certify the ex-ante WBB decomposition.
    """
    inst = table.instance
    n = inst.n
    if axis is None:
        axis = "seller" if table.label == GBOM else "buyer"
    worst = math.inf
    groups: dict[tuple, dict[int, ProfileRow]] = {}
    if axis == "buyer":
        agents = range(n)
    else:
        agents = range(n, n + inst.m)
    for row in table.rows:
        for a in agents:
            key_idx = row.indices[:a] + row.indices[a + 1 :]
            groups.setdefault((a,) + key_idx, {})[row.indices[a]] = row
    for (a, *rest), by_type in groups.items():
        pmf = inst.distributions[a].pmf
        pairs = (
            ((a, j) for j in range(inst.m)) if axis == "buyer"
            else ((i, a - n) for i in range(n))
        )
        for i, j in pairs:
            lhs = rhs = 0.0
            for k, row in by_type.items():
                if (i, j) in row.matching:
                    lhs += pmf[k] * row.pB[i]
                    rhs += pmf[k] * row.pS[j]
            worst = min(worst, lhs - rhs)
    return 0.0 if worst is math.inf else worst


def table_to_dict(table: MechanismTable) -> dict:
    return {
        "label": table.label,
        "profiles": [
            {
                "b": list(row.profile.b),
                "s": list(row.profile.s),
                "prob": row.prob,
                "matching": [list(p) for p in row.matching],
                "pB": list(row.pB),
                "pS": list(row.pS),
            }
            for row in table.rows
        ],
    }


def table_from_dict(doc: dict, instance: Instance | None = None) -> MechanismTable:
    """Rebuild a table from its JSON form.

    Without an explicit instance, supports and marginal pmfs are recovered
    from the profile grid (probabilities are per-agent products) and the
    feasibility family defaults to all matchings; that suffices for auditing
    and payment transforms, which never consult the family.
    """
    profiles = doc["profiles"]
    if not profiles:
        raise InstanceError("table has no profiles")
    if instance is None:
        instance = _reconstruct_instance(profiles)
    expected = instance.profile_count()
    if len(profiles) != expected:
        raise InstanceError(f"table has {len(profiles)} rows, instance needs {expected}")
    rows = []
    for entry in profiles:
        profile = TypeProfile(b=tuple(entry["b"]), s=tuple(entry["s"]))
        rows.append(
            ProfileRow(
                indices=_profile_to_indices(instance, profile),
                profile=profile,
                prob=float(entry["prob"]),
                matching=tuple(sorted((int(i), int(j)) for i, j in entry["matching"])),
                pB=tuple(float(v) for v in entry["pB"]),
                pS=tuple(float(v) for v in entry["pS"]),
            )
        )
    sizes = tuple(len(d) for d in instance.distributions)
    if [row.indices for row in rows] != list(index_tuples(sizes)):
        raise InstanceError("table rows are not in profile enumeration order")
    for row in rows:
        if abs(row.prob - indices_probability(instance, row.indices)) > 1e-9:
            raise InstanceError(f"row probability mismatch at profile {row.profile}")
    return MechanismTable(instance=instance, label=doc.get("label", "custom"), rows=tuple(rows))


def _reconstruct_instance(profiles: list[dict]) -> Instance:
    n = len(profiles[0]["b"])
    m = len(profiles[0]["s"])
    supports = [sorted({p["b"][i] for p in profiles}) for i in range(n)]
    supports += [sorted({p["s"][j] for p in profiles}) for j in range(m)]
    masses = [dict.fromkeys(sup, 0.0) for sup in supports]
    for p in profiles:
        values = list(p["b"]) + list(p["s"])
        for a, v in enumerate(values):
            masses[a][v] += p["prob"]
    dists = tuple(
        DiscreteDistribution(tuple(sup), tuple(masses[a][v] for v in sup))
        for a, sup in enumerate(supports)
    )
    return Instance(
        buyers=dists[:n], sellers=dists[n:], feasibility=FeasibilityFamily.all_matchings()
    )


def with_payments(table: MechanismTable, pB_rows, pS_rows) -> MechanismTable:
    """Copy of the table with replaced payment columns (allocation untouched)."""
    rows = tuple(
        replace(row, pB=tuple(pb), pS=tuple(ps))
        for row, pb, ps in zip(table.rows, pB_rows, pS_rows)
    )
    return MechanismTable(instance=table.instance, label=table.label, rows=rows)
