"""Bilateral trading: the two posted-price mechanisms and their exact GFT.

The seller-offering side posts the smallest support value whose ironed
buyer virtual value strictly exceeds the seller's cost; the buyer-offering
side posts the largest support value whose ironed seller virtual value is
strictly below the buyer's value.  Utility ties between candidate prices are
resolved by exactly these rules (not by lowest price), which is what makes
the closed-form GFT expressions hold with strict indicators.  The marginal
buyer accepts at a price equal to her value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NotBilateral
from .market import DiscreteDistribution, Instance, enumerate_profiles
from .virtual import buyer_virtual_values, seller_virtual_values

_AGREE_TOL = 1e-9


@dataclass(frozen=True)
class PostedPriceOutcome:
    """A posted price, who accepts it, and the offering side's expected utility.

    price is None when no strictly profitable price exists (the CLI prints
    this as an infinite ask).  trade holds one flag per counterparty support
    value; utility belongs to whoever posted the price.
    """

    price: float | None
    trade: tuple[bool, ...]
    utility: float

    @property
    def trades(self) -> bool:
        return self.price is not None


def som_price(s: float, buyer_dist: DiscreteDistribution) -> PostedPriceOutcome:
    """Seller-offering price against a buyer distribution."""
    table = buyer_virtual_values(buyer_dist)
    k_star = next((k for k, phi in enumerate(table.ironed) if phi > s), None)
    if k_star is None:
        outcome = PostedPriceOutcome(
            price=None, trade=(False,) * len(buyer_dist), utility=0.0
        )
    else:
        price = buyer_dist.support[k_star]
        outcome = PostedPriceOutcome(
            price=price,
            trade=tuple(b >= price for b in buyer_dist.support),
            utility=(price - s) * buyer_dist.tail_mass(k_star),
        )
    assert _optimal_over_support(
        outcome.utility, ((q - s) * buyer_dist.tail_mass(k) for k, q in enumerate(buyer_dist.support))
    ), "posted price is not utility-maximizing"
    return outcome


def bom_price(b: float, seller_dist: DiscreteDistribution) -> PostedPriceOutcome:
    """Buyer-offering price against a seller distribution."""
    table = seller_virtual_values(seller_dist)
    k_dag = None
    for k, tau in enumerate(table.ironed):
        if tau < b:
            k_dag = k
    if k_dag is None:
        outcome = PostedPriceOutcome(
            price=None, trade=(False,) * len(seller_dist), utility=0.0
        )
    else:
        price = seller_dist.support[k_dag]
        outcome = PostedPriceOutcome(
            price=price,
            trade=tuple(v <= price for v in seller_dist.support),
            utility=(b - price) * seller_dist.head_mass(k_dag),
        )
    assert _optimal_over_support(
        outcome.utility, ((b - q) * seller_dist.head_mass(k) for k, q in enumerate(seller_dist.support))
    ), "posted price is not utility-maximizing"
    return outcome


def _optimal_over_support(utility: float, candidates) -> bool:
    return all(utility >= c - _AGREE_TOL for c in candidates)


def _require_bilateral(instance: Instance) -> tuple[DiscreteDistribution, DiscreteDistribution]:
    if instance.n != 1 or instance.m != 1:
        raise NotBilateral(f"need a 1x1 instance, got {instance.n}x{instance.m}")
    return instance.buyers[0], instance.sellers[0]


def gft_som(instance: Instance) -> float:
    """Exact GFT of the seller-offering mechanism on a bilateral instance.

    Computed from the closed form E[(b - s) 1[ironed-phi(b) > s]] and
    cross-checked against a direct posted-price simulation.
    """
    buyer, seller = _require_bilateral(instance)
    phi = buyer_virtual_values(buyer).ironed
    closed = math.fsum(
        prob * (profile.b[0] - profile.s[0])
        for profile, prob in enumerate_profiles(instance)
        if phi[buyer.index_of(profile.b[0])] > profile.s[0]
    )
    simulated = 0.0
    for k, s in enumerate(seller.support):
        outcome = som_price(s, buyer)
        simulated += seller.pmf[k] * math.fsum(
            buyer.pmf[r] * (b - s)
            for r, b in enumerate(buyer.support)
            if outcome.trade[r]
        )
    assert abs(closed - simulated) <= _AGREE_TOL, (closed, simulated)
    return closed


def gft_bom(instance: Instance) -> float:
    """Exact GFT of the buyer-offering mechanism on a bilateral instance."""
    buyer, seller = _require_bilateral(instance)
    tau = seller_virtual_values(seller).ironed
    closed = math.fsum(
        prob * (profile.b[0] - profile.s[0])
        for profile, prob in enumerate_profiles(instance)
        if profile.b[0] > tau[seller.index_of(profile.s[0])]
    )
    simulated = 0.0
    for k, b in enumerate(buyer.support):
        outcome = bom_price(b, seller)
        simulated += buyer.pmf[k] * math.fsum(
            seller.pmf[r] * (b - s)
            for r, s in enumerate(seller.support)
            if outcome.trade[r]
        )
    assert abs(closed - simulated) <= _AGREE_TOL, (closed, simulated)
    return closed
