"""Core data model: discrete type distributions, feasibility families over
buyer-seller pairs, double-auction instances, and type-profile enumeration.

An instance couples one distribution per buyer, one per seller, and a
downward-closed family of simultaneously tradeable pair sets.  Every member
of the family is a partial matching.  All types are immutable after
validation and safe to share across workers.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterator

from .errors import (
    FamilyTooLarge,
    InstanceError,
    NegativeValue,
    NonAscendingSupport,
    NotAMatching,
    PmfNotNormalized,
    ProfileSpaceTooLarge,
    TypeNotInSupport,
)

PMF_TOLERANCE = 1e-12       # input hygiene at parse time
DERIVED_SUM_TOLERANCE = 1e-9  # accumulated floating error in derived sums
DEFAULT_PROFILE_CAP = 10_000_000
DEFAULT_FAMILY_CAP = 1_000_000

Pair = tuple[int, int]
PairSet = tuple[Pair, ...]


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite value distribution with strictly positive atom probabilities."""

    support: tuple[float, ...]
    pmf: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(float(v) for v in self.support))
        object.__setattr__(self, "pmf", tuple(float(p) for p in self.pmf))
        if len(self.support) == 0:
            raise InstanceError("support must be non-empty")
        if len(self.support) != len(self.pmf):
            raise InstanceError("support and pmf must have equal length")
        if any(v < 0 for v in self.support):
            raise NegativeValue(f"support contains a negative value: {min(self.support)}")
        if any(b <= a for a, b in zip(self.support, self.support[1:])):
            raise NonAscendingSupport(f"support is not strictly ascending: {list(self.support)}")
        if any(p <= 0 or p > 1 for p in self.pmf):
            raise InstanceError(f"pmf entries must lie in (0, 1]: {list(self.pmf)}")
        deviation = math.fsum(self.pmf) - 1.0
        if abs(deviation) > PMF_TOLERANCE:
            raise PmfNotNormalized(deviation)

    def __len__(self) -> int:
        return len(self.support)

    def index_of(self, value: float) -> int:
        """Index of `value` in the support, or raise TypeNotInSupport."""
        try:
            return self.support.index(value)
        except ValueError:
            raise TypeNotInSupport(f"{value} not in support {list(self.support)}") from None

    def tail_mass(self, k: int) -> float:
        """Pr[X >= support[k]]."""
        return math.fsum(self.pmf[k:])

    def head_mass(self, k: int) -> float:
        """Pr[X <= support[k]]."""
        return math.fsum(self.pmf[: k + 1])


def _check_matching(pairs) -> PairSet:
    """Canonicalize a pair set and reject repeated buyers or sellers."""
    canonical = tuple(sorted((int(i), int(j)) for i, j in pairs))
    if len(set(canonical)) != len(canonical):
        raise NotAMatching(canonical, "duplicate pair")
    buyers = [i for i, _ in canonical]
    sellers = [j for _, j in canonical]
    if len(set(buyers)) != len(buyers):
        dup = next(i for i in buyers if buyers.count(i) > 1)
        raise NotAMatching(canonical, f"buyer {dup} repeated")
    if len(set(sellers)) != len(sellers):
        dup = next(j for j in sellers if sellers.count(j) > 1)
        raise NotAMatching(canonical, f"seller {dup} repeated")
    return canonical


def _all_partial_matchings(n: int, m: int) -> Iterator[PairSet]:
    """All partial matchings between n buyers and m sellers."""

    def rec(i: int, used: frozenset[int], cur: list[Pair]) -> Iterator[PairSet]:
        if i == n:
            yield tuple(cur)
            return
        yield from rec(i + 1, used, cur)
        for j in range(m):
            if j not in used:
                cur.append((i, j))
                yield from rec(i + 1, used | {j}, cur)
                cur.pop()

    yield from rec(0, frozenset(), [])


@dataclass(frozen=True)
class FeasibilityFamily:
    """Downward-closed family of pair sets, each a partial matching.

    Three representations: every partial matching, matchings of size at most
    `cap`, or an explicit list of sets (closed under subsets at construction).
    The empty set is always a member.
    """

    kind: str
    cap: int | None = None
    sets: tuple[PairSet, ...] | None = None

    @classmethod
    def all_matchings(cls) -> "FeasibilityFamily":
        return cls(kind="all_matchings")

    @classmethod
    def with_cap(cls, k: int) -> "FeasibilityFamily":
        if k < 1:
            raise InstanceError(f"cap must be a positive integer, got {k}")
        return cls(kind="cap", cap=int(k))

    @classmethod
    def explicit(cls, sets, max_members: int = DEFAULT_FAMILY_CAP) -> "FeasibilityFamily":
        """Build an explicit family: validate matchings, close under subsets, dedupe."""
        closed: set[PairSet] = {()}
        for raw in sets:
            pairs = _check_matching(raw)
            if 2 ** len(pairs) > max_members:
                raise FamilyTooLarge("subset closure exceeds the family cap")
            for r in range(len(pairs) + 1):
                for sub in itertools.combinations(pairs, r):
                    closed.add(sub)
            if len(closed) > max_members:
                raise FamilyTooLarge(f"explicit family exceeds {max_members} members")
        return cls(kind="explicit", sets=tuple(sorted(closed)))

    def __post_init__(self):
        if self.kind not in ("all_matchings", "cap", "explicit"):
            raise InstanceError(f"unknown feasibility kind: {self.kind!r}")
        if self.kind == "cap" and (self.cap is None or self.cap < 1):
            raise InstanceError("cap kind requires a positive integer k")
        if self.kind == "explicit" and self.sets is None:
            raise InstanceError("explicit kind requires sets")

    def contains(self, pairs, n: int, m: int) -> bool:
        """Membership test for a pair set (assumed index-valid)."""
        try:
            canonical = _check_matching(pairs)
        except NotAMatching:
            return False
        if any(not (0 <= i < n and 0 <= j < m) for i, j in canonical):
            return False
        if self.kind == "all_matchings":
            return True
        if self.kind == "cap":
            return len(canonical) <= self.cap
        return canonical in self.sets

    def members(self, n: int, m: int, max_members: int = DEFAULT_FAMILY_CAP) -> tuple[PairSet, ...]:
        """All member sets in canonical sorted order (empty set first)."""
        if self.kind == "explicit":
            out = tuple(s for s in self.sets
                        if all(0 <= i < n and 0 <= j < m for i, j in s))
            return out
        count = 0
        out = []
        for pairs in _all_partial_matchings(n, m):
            if self.kind == "cap" and len(pairs) > self.cap:
                continue
            out.append(pairs)
            count += 1
            if count > max_members:
                raise FamilyTooLarge(f"family enumeration exceeds {max_members} members")
        return tuple(sorted(out))



@dataclass(frozen=True)
class Instance:
    """A double-auction instance: buyer and seller distributions plus feasibility."""

    buyers: tuple[DiscreteDistribution, ...]
    sellers: tuple[DiscreteDistribution, ...]
    feasibility: FeasibilityFamily

    def __post_init__(self):
        object.__setattr__(self, "buyers", tuple(self.buyers))
        object.__setattr__(self, "sellers", tuple(self.sellers))
        if len(self.buyers) < 1 or len(self.sellers) < 1:
            raise InstanceError("need at least one buyer and one seller")
        if self.feasibility.kind == "explicit":
            for s in self.feasibility.sets:
                for i, j in s:
                    if not (0 <= i < len(self.buyers) and 0 <= j < len(self.sellers)):
                        raise InstanceError(f"pair ({i},{j}) references a missing agent")

    @property
    def n(self) -> int:
        return len(self.buyers)

    @property
    def m(self) -> int:
        return len(self.sellers)

    @property
    def distributions(self) -> tuple[DiscreteDistribution, ...]:
        """Buyers followed by sellers, the canonical agent order."""
        return self.buyers + self.sellers

    def profile_count(self) -> int:
        return math.prod(len(d) for d in self.distributions)


@dataclass(frozen=True)
class TypeProfile:
    """One realized value per buyer and per seller."""

    b: tuple[float, ...]
    s: tuple[float, ...]


def validate_instance(raw: dict) -> Instance:
    """Validate a parsed instance document (see the JSON schema in the README).

    Explicit families are closed under subsets and deduplicated.  Raises a
    subclass of InstanceError describing the first problem found.
    """
    if not isinstance(raw, dict):
        raise InstanceError("instance document must be a JSON object")
    for key in ("buyers", "sellers", "feasibility"):
        if key not in raw:
            raise InstanceError(f"missing field {key!r}")

    def parse_side(entries, side: str) -> tuple[DiscreteDistribution, ...]:
        if not isinstance(entries, list) or not entries:
            raise InstanceError(f"{side} must be a non-empty list")
        dists = []
        for entry in entries:
            if not isinstance(entry, dict) or "support" not in entry or "pmf" not in entry:
                raise InstanceError(f"each {side} entry needs 'support' and 'pmf'")
            dists.append(DiscreteDistribution(tuple(entry["support"]), tuple(entry["pmf"])))
        return tuple(dists)

    buyers = parse_side(raw["buyers"], "buyers")
    sellers = parse_side(raw["sellers"], "sellers")

    fam_doc = raw["feasibility"]
    if not isinstance(fam_doc, dict) or "kind" not in fam_doc:
        raise InstanceError("feasibility must be an object with a 'kind'")
    kind = fam_doc["kind"]
    if kind == "all_matchings":
        family = FeasibilityFamily.all_matchings()
    elif kind == "cap":
        family = FeasibilityFamily.with_cap(fam_doc.get("k", 0))
    elif kind == "explicit":
        family = FeasibilityFamily.explicit(
            [tuple((p[0], p[1]) for p in s) for s in fam_doc.get("sets", [])]
        )
    else:
        raise InstanceError(f"unknown feasibility kind: {kind!r}")

    return Instance(buyers=buyers, sellers=sellers, feasibility=family)


def instance_to_dict(instance: Instance) -> dict:
    """Serialize an Instance back to the document form; round-trips exactly."""
    doc = {
        "buyers": [{"support": list(d.support), "pmf": list(d.pmf)} for d in instance.buyers],
        "sellers": [{"support": list(d.support), "pmf": list(d.pmf)} for d in instance.sellers],
    }
    fam = instance.feasibility
    if fam.kind == "all_matchings":
        doc["feasibility"] = {"kind": "all_matchings"}
    elif fam.kind == "cap":
        doc["feasibility"] = {"kind": "cap", "k": fam.cap}
    else:
        doc["feasibility"] = {"kind": "explicit", "sets": [[list(p) for p in s] for s in fam.sets]}
    return doc


def load_instance(path: str) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return validate_instance(json.load(fh))


def dump_instance(instance: Instance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2)
        fh.write("\n")


def index_tuples(sizes: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
    """Mixed-radix counting with the FIRST coordinate varying fastest."""
    for rev in itertools.product(*(range(s) for s in reversed(sizes))):
        yield rev[::-1]


def profile_from_indices(instance: Instance, idx: tuple[int, ...]) -> TypeProfile:
    n = instance.n
    dists = instance.distributions
    values = tuple(dists[a].support[idx[a]] for a in range(len(dists)))
    return TypeProfile(b=values[:n], s=values[n:])


def indices_probability(instance: Instance, idx: tuple[int, ...]) -> float:
    prob = 1.0
    for dist, k in zip(instance.distributions, idx):
        prob *= dist.pmf[k]
    return prob


def enumerate_profiles(
    instance: Instance, max_profiles: int = DEFAULT_PROFILE_CAP
) -> Iterator[tuple[TypeProfile, float]]:
    """Yield (profile, probability) in lexicographic order, buyer 0 fastest.

    Probabilities multiply the per-agent pmf entries; across the full stream
    they sum to 1 within DERIVED_SUM_TOLERANCE.
    """
    if instance.profile_count() > max_profiles:
        raise ProfileSpaceTooLarge(
            f"{instance.profile_count()} profiles exceed the cap of {max_profiles}"
        )
    sizes = tuple(len(d) for d in instance.distributions)
    for idx in index_tuples(sizes):
        yield profile_from_indices(instance, idx), indices_probability(instance, idx)


def profile_probability(instance: Instance, profile: TypeProfile) -> float:
    """Product of per-agent pmf values for the given profile."""
    if len(profile.b) != instance.n or len(profile.s) != instance.m:
        raise TypeNotInSupport("profile has the wrong number of agents")
    prob = 1.0
    for dist, value in zip(instance.buyers, profile.b):
        prob *= dist.pmf[dist.index_of(value)]
    for dist, value in zip(instance.sellers, profile.s):
        prob *= dist.pmf[dist.index_of(value)]
    return prob
