"""Seeded instance generation and the experiment suite.

Generated supports live on a 1/64 grid and pmfs come from small integer
weights, which keeps simplex pivots well conditioned.  Suite records are
deterministic for a fixed config: timing lives only in the trailing summary
record, never in per-instance records.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Iterator

from .audit import EXANTE_WBB, audit_mechanism
from .benchmarks import (
    DEFAULT_LP_VARIABLE_CAP,
    duality_benchmark,
    first_best,
    solve_second_best_lp,
)
from .errors import LpTooLarge
from .market import DiscreteDistribution, FeasibilityFamily, Instance
from .mechanisms import (
    GBOM,
    GSOM,
    build_mechanism,
    exante_surplus,
    gft_exact,
    pairwise_surplus_margin,
    virtual_gft,
)

DEFAULT_ALPHAS = (0.5, 1.0, 2.0)
SANDWICH_TOLERANCE = 1e-6
CHAIN_TOLERANCE = 1e-9
VALUE_DENOMINATOR = 64
FAMILY_KINDS = ("all_matchings", "cap", "explicit")


@dataclass(frozen=True)
class GenSpec:
    seed: int
    n: int
    m: int
    max_support: int
    family_kind: str = "all_matchings"


def gen_instance(
    seed: int, n: int, m: int, max_support: int, family_kind: str = "all_matchings"
) -> Instance:
    """Deterministic random instance on a rational-friendly value grid."""
    assert n >= 1 and m >= 1 and max_support >= 1
    rng = random.Random(f"{seed}:{n}:{m}:{max_support}:{family_kind}")

    def draw_distribution() -> DiscreteDistribution:
        size = rng.randint(1, max_support)
        numerators = sorted(rng.sample(range(0, 2 * VALUE_DENOMINATOR + 1), size))
        support = tuple(k / VALUE_DENOMINATOR for k in numerators)
        weights = [rng.randint(1, 16) for _ in range(size)]
        total = sum(weights)
        pmf = [w / total for w in weights[:-1]]
        pmf.append(1.0 - math.fsum(pmf))
        return DiscreteDistribution(support, tuple(pmf))

    buyers = tuple(draw_distribution() for _ in range(n))
    sellers = tuple(draw_distribution() for _ in range(m))

    kind = family_kind
    if kind == "random":
        kind = rng.choice(FAMILY_KINDS)
    if kind == "all_matchings":
        family = FeasibilityFamily.all_matchings()
    elif kind == "cap":
        family = FeasibilityFamily.with_cap(rng.randint(1, min(n, m)))
    elif kind == "explicit":
        base_sets = []
        for _ in range(rng.randint(1, 3)):
            size = rng.randint(1, min(n, m))
            buyers_pick = rng.sample(range(n), size)
            sellers_pick = rng.sample(range(m), size)
            base_sets.append(tuple(zip(buyers_pick, sellers_pick)))
        family = FeasibilityFamily.explicit(base_sets)
    else:
        raise ValueError(f"unknown family kind {family_kind!r}")
    return Instance(buyers=buyers, sellers=sellers, feasibility=family)


@dataclass
class SuiteConfig:
    specs: list[GenSpec] = field(default_factory=list)
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    compute_lp: bool = True
    lp_variable_cap: int = DEFAULT_LP_VARIABLE_CAP
    tol_ic: float = 1e-7
    tol_bb: float = 1e-9


def evaluate_instance(
    instance: Instance,
    config: SuiteConfig | None = None,
    seed: int | None = None,
    spec: GenSpec | None = None,
) -> dict:
    """All mechanisms, benchmarks, audits, and inequality checks on one instance."""
    config = config or SuiteConfig()
    tables = {which: build_mechanism(instance, which) for which in (GSOM, GBOM)}
    gft = {which: gft_exact(t) for which, t in tables.items()}
    vgft = {which: virtual_gft(t) for which, t in tables.items()}
    surplus = {which: exante_surplus(t) for which, t in tables.items()}
    margins = {which: pairwise_surplus_margin(t) for which, t in tables.items()}
    audits = {
        which: audit_mechanism(t, config.tol_ic, config.tol_bb) for which, t in tables.items()
    }

    fb = first_best(instance)
    bench = {alpha: duality_benchmark(instance, alpha) for alpha in config.alphas}
    bench1 = bench.get(1.0, duality_benchmark(instance, 1.0))

    opt = None
    if config.compute_lp:
        try:
            opt = solve_second_best_lp(instance, config.lp_variable_cap).value
        except LpTooLarge:
            opt = None

    checks: dict[str, bool] = {}
    checks["gft_nonnegative"] = gft[GSOM] >= -CHAIN_TOLERANCE and gft[GBOM] >= -CHAIN_TOLERANCE
    checks["chain_benchmark_le_virtual"] = bench1 <= vgft[GSOM] + vgft[GBOM] + CHAIN_TOLERANCE
    checks["chain_virtual_le_exact"] = all(
        vgft[w] <= gft[w] + CHAIN_TOLERANCE for w in (GSOM, GBOM)
    )
    checks["audit_gsom"] = (
        audits[GSOM].passed("interim_bic_ir", "dsic", "monotone", f"budget_{EXANTE_WBB}")
        and margins[GSOM] >= -config.tol_bb
    )
    checks["audit_gbom"] = (
        audits[GBOM].passed("interim_bic_ir", "dsic", "monotone", f"budget_{EXANTE_WBB}")
        and margins[GBOM] >= -config.tol_bb
    )
    if opt is not None:
        checks["sandwich"] = gft[GSOM] + gft[GBOM] >= opt - SANDWICH_TOLERANCE
        checks["ordering_gft_le_opt"] = all(
            gft[w] <= opt + SANDWICH_TOLERANCE for w in (GSOM, GBOM)
        )
        checks["ordering_opt_le_first_best"] = opt <= fb + SANDWICH_TOLERANCE
        checks["ordering_opt_le_benchmarks"] = all(
            opt <= bench[a] + SANDWICH_TOLERANCE for a in config.alphas
        )
    checks["ordering_gft_le_first_best"] = all(
        gft[w] <= fb + SANDWICH_TOLERANCE for w in (GSOM, GBOM)
    )

    ratio = None
    if opt is not None and opt > 1e-12:
        ratio = max(gft[GSOM], gft[GBOM]) / opt

    report = {
        "record": "instance",
        "seed": seed,
        "spec": None if spec is None else {
            "seed": spec.seed,
            "n": spec.n,
            "m": spec.m,
            "max_support": spec.max_support,
            "family_kind": spec.family_kind,
        },
        "n": instance.n,
        "m": instance.m,
        "first_best": fb,
        "benchmark_alpha1": bench1,
        "opt_lp": opt,
        "gft_gsom": gft[GSOM],
        "gft_gbom": gft[GBOM],
        "virtual_gft_gsom": vgft[GSOM],
        "virtual_gft_gbom": vgft[GBOM],
        "exante_surplus_gsom": surplus[GSOM],
        "exante_surplus_gbom": surplus[GBOM],
        "ratio": ratio,
        "sandwich_ok": all(checks.values()),
        "checks": checks,
        "audit": {
            "gsom": {name: e.passed for name, e in audits[GSOM].entries.items()},
            "gbom": {name: e.passed for name, e in audits[GBOM].entries.items()},
        },
    }
    report["ok"] = report["sandwich_ok"]
    return report


def run_suite(config: SuiteConfig) -> Iterator[dict]:
    """Yield one deterministic record per configured instance, then a summary.

    The summary record carries wall-clock timing and is the only
    non-reproducible part of the stream.
    """
    started = time.perf_counter()
    all_ok = True
    count = 0
    for spec in config.specs:
        try:
            instance = gen_instance(spec.seed, spec.n, spec.m, spec.max_support, spec.family_kind)
            report = evaluate_instance(instance, config, seed=spec.seed, spec=spec)
        except Exception as exc:  # record the failure, keep the suite going
            report = {
                "record": "instance",
                "seed": spec.seed,
                "spec": {
                    "seed": spec.seed,
                    "n": spec.n,
                    "m": spec.m,
                    "max_support": spec.max_support,
                    "family_kind": spec.family_kind,
                },
                "error": f"{type(exc).__name__}: {exc}",
                "ok": False,
            }
        all_ok &= report["ok"]
        count += 1
        yield report
    yield {
        "record": "summary",
        "instances": count,
        "all_ok": all_ok,
        "elapsed_s": time.perf_counter() - started,
    }
