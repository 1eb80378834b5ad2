"""Gibbs sampler with frequency-table full conditionals.

The conditionals P(x_i | x_-i) are estimated as frequency tables straight
from the training pool: for each variable, every context (the values of
all other variables) observed in training maps to a probability vector
proportional to the observed counts. A chain started from a training row
can only ever visit training rows, because any value with positive
conditional probability completes its context into an observed row. That
makes the sampler a pure replicator on fully categorical data, and it can
get trapped on probability islands: contexts with a point-mass conditional
never let the chain leave.

Mixed schemas are handled by discretizing numerics with the schema bins
before table estimation; emitted bin draws become bin-uniform raw values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import AgentPool, codes_to_pool, pool_to_codes
from .errors import ConfigError, DataError, UnreachableContextError


@dataclass(frozen=True)
class ConditionalTable:
    """Full conditional for one variable: context tuple -> probabilities."""

    target: int
    table: dict[tuple, np.ndarray]


@dataclass(frozen=True)
class ChainConfig:
    target_count: int
    warmup: int = 20000
    thinning: int = 20
    init: str | tuple = "random-from-train"
    seed: int = 0
    restart_on_unreachable: bool = False

    def __post_init__(self):
        if self.warmup < 0:
            raise ConfigError("warmup must be >= 0")
        if self.thinning < 1:
            raise ConfigError("thinning must be >= 1")
        if self.target_count < 0:
            raise ConfigError("target_count must be >= 0")


def estimate_conditionals(train: AgentPool) -> list[ConditionalTable]:
    """Count-and-normalize conditionals for every variable.

    Contexts are present iff observed in training data; absent contexts
    stay absent (no smoothing), which is exactly what makes sampling zeros
    unreachable.
    """
    if len(train) == 0:
        raise DataError("cannot estimate conditionals from an empty pool")
    codes = pool_to_codes(train)
    n_vars = train.schema.n_variables
    widths = train.schema.value_counts
    tables = []
    for i in range(n_vars):
        counts: dict[tuple, np.ndarray] = {}
        for row in codes:
            ctx = tuple(np.delete(row, i))
            vec = counts.get(ctx)
            if vec is None:
                vec = np.zeros(widths[i])
                counts[ctx] = vec
            vec[row[i]] += 1.0
        tables.append(ConditionalTable(i, {ctx: vec / vec.sum() for ctx, vec in counts.items()}))
    return tables


def _cumulative_tables(tables: list[ConditionalTable]) -> list[dict[tuple, np.ndarray]]:
    return [{ctx: np.cumsum(vec) for ctx, vec in t.table.items()} for t in tables]


def gibbs_step(row: tuple, tables: list[ConditionalTable],
               rng: np.random.Generator) -> tuple:
    """One systematic scan: update every variable in schema order, each
    conditioned on the freshest values of all the others."""
    current = list(row)
    for i, table in enumerate(tables):
        ctx = tuple(current[:i] + current[i + 1:])
        probs = table.table.get(ctx)
        if probs is None:
            raise UnreachableContextError(
                f"variable {i}: context {ctx} never observed in training")
        current[i] = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
    return tuple(current)


def run_chain(tables: list[ConditionalTable], train: AgentPool, config: ChainConfig,
              step_fn=None) -> tuple[AgentPool, dict]:
    """Run one chain: warm up, then keep every ``thinning``-th state until
    ``target_count`` rows are emitted.

    Total iterations are warmup + thinning * target_count, each iteration
    being one full-scan step. Diagnostics report iterations, restarts, and
    the number of distinct emitted rows. ``step_fn`` replaces the scan for
    instrumentation (same (row, rng) -> row signature).
    """
    schema = train.schema
    rng = np.random.default_rng(config.seed)
    train_codes = pool_to_codes(train) if len(train) else None
    if config.init == "random-from-train":
        if train_codes is None:
            raise DataError("random-from-train initialization needs a non-empty pool")
        row = tuple(int(v) for v in train_codes[rng.integers(len(train))])
    else:
        single = AgentPool(schema, (tuple(config.init),), "train")
        row = tuple(int(v) for v in pool_to_codes(single)[0])

    if step_fn is None:
        cums = _cumulative_tables(tables)

        def step_fn(current, rng):
            values = list(current)
            for i in range(schema.n_variables):
                ctx = tuple(values[:i] + values[i + 1:])
                cum = cums[i].get(ctx)
                if cum is None:
                    raise UnreachableContextError(
                        f"variable {i}: context {ctx} never observed in training")
                values[i] = int(np.searchsorted(cum, rng.random(), side="right"))
            return tuple(values)

    iterations = 0
    restarts = 0

    def advance(current):
        nonlocal iterations, restarts
        iterations += 1
        try:
            return step_fn(current, rng)
        except UnreachableContextError:
            if not config.restart_on_unreachable or train_codes is None:
                raise
            restarts += 1
            return tuple(int(v) for v in train_codes[rng.integers(len(train))])

    for _ in range(config.warmup):
        row = advance(row)
    kept = []
    for _ in range(config.target_count):
        for _ in range(config.thinning):
            row = advance(row)
        kept.append(row)
    codes = np.asarray(kept, dtype=np.int64).reshape(len(kept), schema.n_variables)
    pool = codes_to_pool(codes, schema, provenance="generated", rng=rng)
    diagnostics = {
        "iterations": iterations,
        "restarts": restarts,
        "distinct_rows": len(set(kept)),
        "warmup": config.warmup,
        "thinning": config.thinning,
        "target_count": config.target_count,
        "seed": config.seed,
    }
    return pool, diagnostics


def run_chains(tables: list[ConditionalTable], train: AgentPool,
               configs: list[ChainConfig]) -> tuple[AgentPool, list[dict]]:
    """Several chains from different starting points, concatenated."""
    pools, diags = [], []
    for config in configs:
        pool, diag = run_chain(tables, train, config)
        pools.append(pool)
        diags.append(diag)
    rows = tuple(row for pool in pools for row in pool.rows)
    return AgentPool(train.schema, rows, "generated"), diags


def write_diagnostics(diagnostics, path) -> None:
    with open(path, "w") as fh:
        json.dump(diagnostics, fh, indent=2)
