"""Bayesian-network population synthesis over categorical codes.

Structure learning offers three routes: the Chow-Liu maximum-spanning tree
over pairwise mutual information (quadratic), greedy hill-climbing over
single-edge additions/removals/reversals under an MDL score (polynomial),
and an exact order-based dynamic program (exponential, capped at a small
variable count). The MDL score of a DAG is the data log-likelihood under
maximum-likelihood conditionals minus (log N / 2) free parameters, the
BIC-equivalent penalty; higher is better. Fitted networks sample agents
ancestrally, parents before children.

All functions work on integer code matrices (rows x variables) with
per-variable value counts; see dataset.pool_to_codes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ExactSearchLimitError

MAX_TABLE_CELLS = 1 << 22  # guard on materialized CPT size


@dataclass(frozen=True)
class Dag:
    n_nodes: int
    parents: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.parents) != self.n_nodes:
            raise DataError("parent list length does not match node count")
        for node, pa in enumerate(self.parents):
            for p in pa:
                if not (0 <= p < self.n_nodes) or p == node:
                    raise DataError(f"node {node}: invalid parent {p}")
        self.topological_order()  # raises on cycles

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple((p, child) for child, pa in enumerate(self.parents) for p in pa)

    def topological_order(self) -> list[int]:
        """Kahn's algorithm; raises DataError if the graph has a cycle."""
        remaining = {node: set(pa) for node, pa in enumerate(self.parents)}
        order = []
        while remaining:
            ready = sorted(n for n, pa in remaining.items() if not pa)
            if not ready:
                raise DataError("graph contains a cycle")
            for n in ready:
                order.append(n)
                del remaining[n]
            for pa in remaining.values():
                pa.difference_update(ready)
        return order


def _check_data(codes: np.ndarray) -> np.ndarray:
    arr = np.asarray(codes, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise DataError("need a non-empty (rows x variables) code matrix")
    return arr


def mutual_information(codes: np.ndarray, value_counts, i: int, j: int) -> float:
    """Empirical mutual information in nats from the pairwise joint."""
    arr = _check_data(codes)
    n = arr.shape[0]
    joint = np.zeros((value_counts[i], value_counts[j]))
    np.add.at(joint, (arr[:, i], arr[:, j]), 1.0)
    joint /= n
    pi = joint.sum(axis=1, keepdims=True)
    pj = joint.sum(axis=0, keepdims=True)
    mask = joint > 0
    mi = float(np.sum(joint[mask] * np.log(joint[mask] / (pi @ pj)[mask])))
    return max(mi, 0.0)


def chow_liu(codes: np.ndarray, value_counts) -> Dag:
    """Maximum-spanning tree over pairwise MI, rooted at variable 0 with
    edges directed away from the root. MI ties break to the lexicographically
    lowest (i, j) edge."""
    arr = _check_data(codes)
    n = len(value_counts)
    if n < 2:
        raise DataError("Chow-Liu needs at least 2 variables")
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            edges.append((-mutual_information(arr, value_counts, i, j), i, j))
    edges.sort()
    # Kruskal with union-find
    root = list(range(n))

    def find(a):
        while root[a] != a:
            root[a] = root[root[a]]
            a = root[a]
        return a

    adjacency = [[] for _ in range(n)]
    picked = 0
    for _, i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            root[ri] = rj
            adjacency[i].append(j)
            adjacency[j].append(i)
            picked += 1
            if picked == n - 1:
                break
    parents = [[] for _ in range(n)]
    seen = {0}
    frontier = [0]
    while frontier:
        node = frontier.pop(0)
        for nb in sorted(adjacency[node]):
            if nb not in seen:
                seen.add(nb)
                parents[nb] = [node]
                frontier.append(nb)
    return Dag(n, tuple(tuple(p) for p in parents))


def _local_score(arr: np.ndarray, value_counts, node: int, parents: tuple[int, ...],
                 cache: dict | None = None) -> float:
    """ML log-likelihood of one node given its parents, minus the
    (log N / 2) * (D_i - 1) * prod(D_parents) complexity penalty."""
    key = (node, parents)
    if cache is not None and key in cache:
        return cache[key]
    n_rows = arr.shape[0]
    width = value_counts[node]
    parent_widths = [value_counts[p] for p in parents]
    n_combos = int(np.prod(parent_widths)) if parents else 1
    if n_combos * width > MAX_TABLE_CELLS:
        raise DataError(f"node {node}: conditional table too large ({n_combos} x {width})")
    if parents:
        combo = np.ravel_multi_index([arr[:, p] for p in parents], parent_widths)
    else:
        combo = np.zeros(n_rows, dtype=np.int64)
    counts = np.zeros((n_combos, width))
    np.add.at(counts, (combo, arr[:, node]), 1.0)
    totals = counts.sum(axis=1, keepdims=True)
    mask = counts > 0
    ll = float(np.sum(counts[mask] * np.log(counts[mask] / np.broadcast_to(totals, counts.shape)[mask])))
    penalty = 0.5 * np.log(n_rows) * (width - 1) * n_combos
    score = ll - penalty
    if cache is not None:
        cache[key] = score
    return score


def mdl_score(dag: Dag, codes: np.ndarray, value_counts) -> float:
    """MDL score of the whole structure; higher is better."""
    arr = _check_data(codes)
    return sum(
        _local_score(arr, value_counts, node, tuple(sorted(dag.parents[node])))
        for node in range(dag.n_nodes)
    )


def _reaches(parents: list[set[int]], start: int, goal: int) -> bool:
    """True if goal is reachable from start following child edges."""
    children = [[] for _ in range(len(parents))]
    for child, pa in enumerate(parents):
        for p in pa:
            children[p].append(child)
    stack, seen = [start], set()
    while stack:
        node = stack.pop()
        if node == goal:
            return True
        for c in children[node]:
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return False


def greedy_search(codes: np.ndarray, value_counts, max_parents: int | None = None) -> Dag:
    """Hill-climbing from the empty graph over single-edge additions,
    removals, and reversals, keeping acyclicity, until no move improves the
    MDL score. Move enumeration order is fixed, so ties are deterministic."""
    arr = _check_data(codes)
    n = len(value_counts)
    parents: list[set[int]] = [set() for _ in range(n)]
    cache: dict = {}

    def local(node, pa_set):
        return _local_score(arr, value_counts, node, tuple(sorted(pa_set)), cache)

    improved = True
    while improved:
        improved = False
        best_gain = 1e-9
        best_apply = None
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                if i not in parents[j]:
                    # addition i -> j; a path j ~> i would make it a cycle
                    if max_parents is not None and len(parents[j]) >= max_parents:
                        continue
                    if _reaches(parents, j, i):
                        continue
                    gain = local(j, parents[j] | {i}) - local(j, parents[j])
                    if gain > best_gain:
                        best_gain = gain
                        best_apply = ("add", i, j)
                else:
                    # removal of i -> j
                    gain = local(j, parents[j] - {i}) - local(j, parents[j])
                    if gain > best_gain:
                        best_gain = gain
                        best_apply = ("remove", i, j)
                    # reversal i -> j  becomes  j -> i
                    if max_parents is None or len(parents[i]) < max_parents:
                        trial = [set(p) for p in parents]
                        trial[j].discard(i)
                        if not _reaches(trial, i, j):
                            gain = (local(j, parents[j] - {i}) - local(j, parents[j])
                                    + local(i, parents[i] | {j}) - local(i, parents[i]))
                            if gain > best_gain:
                                best_gain = gain
                                best_apply = ("reverse", i, j)
        if best_apply is not None:
            op, i, j = best_apply
            if op == "add":
                parents[j].add(i)
            elif op == "remove":
                parents[j].discard(i)
            else:
                parents[j].discard(i)
                parents[i].add(j)
            improved = True
    return Dag(n, tuple(tuple(sorted(p)) for p in parents))


def exact_search(codes: np.ndarray, value_counts, max_vars: int = 12) -> Dag:
    """Globally MDL-optimal DAG by dynamic programming over variable subsets.

    Exponential in the variable count, hence the cap; above it, greedy_search
    is the intended route.
    """
    arr = _check_data(codes)
    n = len(value_counts)
    if n > max_vars:
        raise ExactSearchLimitError(
            f"{n} variables exceed the exact-search cap of {max_vars}; use greedy_search")
    cache: dict = {}
    full = (1 << n) - 1
    best_ps_score: list[dict[int, float]] = [dict() for _ in range(n)]
    best_ps_mask: list[dict[int, int]] = [dict() for _ in range(n)]
    for v in range(n):
        others_mask = full ^ (1 << v)
        subsets = []
        sub = 0
        while True:
            subsets.append(sub)
            if sub == others_mask:
                break
            sub = (sub - others_mask) & others_mask
        subsets.sort(key=lambda m: bin(m).count("1"))
        for mask in subsets:
            pa = tuple(u for u in range(n) if (mask >> u) & 1)
            score = _local_score(arr, value_counts, v, pa, cache)
            chosen = mask
            for u in pa:
                prev = mask ^ (1 << u)
                if best_ps_score[v][prev] > score:
                    score = best_ps_score[v][prev]
                    chosen = best_ps_mask[v][prev]
            best_ps_score[v][mask] = score
            best_ps_mask[v][mask] = chosen
    # assemble sinks over growing subsets
    best: dict[int, float] = {0: 0.0}
    pick: dict[int, tuple[int, int]] = {}
    for mask in range(1, full + 1):
        top, top_pair = None, None
        for v in range(n):
            if not (mask >> v) & 1:
                continue
            rest = mask ^ (1 << v)  # rest never contains v
            value = best[rest] + best_ps_score[v][rest]
            if top is None or value > top:
                top, top_pair = value, (v, rest)
        best[mask] = top
        pick[mask] = top_pair
    parents = [()] * n
    mask = full
    while mask:
        v, rest = pick[mask]
        chosen = best_ps_mask[v][rest]
        parents[v] = tuple(u for u in range(n) if (chosen >> u) & 1)
        mask = rest
    return Dag(n, tuple(parents))


@dataclass(frozen=True)
class CptSet:
    """Conditional probability tables aligned with a DAG.

    ``tables[node]`` has one row per parent-value combination (C-order over
    the parents as listed) and one column per node value. Observed
    combinations carry maximum-likelihood estimates; combinations never seen
    in training get the uniform fallback so ancestral sampling cannot
    dead-end.
    """

    value_counts: tuple[int, ...]
    parents: tuple[tuple[int, ...], ...]
    tables: tuple[np.ndarray, ...]


def fit_cpts(dag: Dag, codes: np.ndarray, value_counts) -> CptSet:
    arr = _check_data(codes)
    tables = []
    for node in range(dag.n_nodes):
        pa = dag.parents[node]
        width = value_counts[node]
        parent_widths = [value_counts[p] for p in pa]
        n_combos = int(np.prod(parent_widths)) if pa else 1
        if n_combos * width > MAX_TABLE_CELLS:
            raise DataError(f"node {node}: conditional table too large ({n_combos} x {width})")
        counts = np.zeros((n_combos, width))
        if pa:
            combo = np.ravel_multi_index([arr[:, p] for p in pa], parent_widths)
        else:
            combo = np.zeros(arr.shape[0], dtype=np.int64)
        np.add.at(counts, (combo, arr[:, node]), 1.0)
        totals = counts.sum(axis=1, keepdims=True)
        probs = np.empty_like(counts)
        seen = totals[:, 0] > 0
        probs[seen] = counts[seen] / totals[seen]
        probs[~seen] = 1.0 / width
        tables.append(probs)
    return CptSet(tuple(value_counts), dag.parents, tuple(tables))


def ancestral_sample(dag: Dag, cpts: CptSet, count: int, rng_or_seed) -> np.ndarray:
    """Sample agent codes parent-first along a topological order."""
    rng = rng_or_seed if isinstance(rng_or_seed, np.random.Generator) \
        else np.random.default_rng(rng_or_seed)
    n = dag.n_nodes
    codes = np.zeros((count, n), dtype=np.int64)
    if count == 0:
        return codes
    for node in dag.topological_order():
        pa = dag.parents[node]
        table = cpts.tables[node]
        if pa:
            parent_widths = [cpts.value_counts[p] for p in pa]
            combo = np.ravel_multi_index([codes[:, p] for p in pa], parent_widths)
            rows = table[combo]
        else:
            rows = np.broadcast_to(table[0], (count, table.shape[1]))
        cum = np.cumsum(rows, axis=1)
        u = rng.random((count, 1)) * cum[:, -1:]
        codes[:, node] = np.minimum((u > cum).sum(axis=1), table.shape[1] - 1)
    return codes


def joint_distribution(dag: Dag, cpts: CptSet) -> np.ndarray:
    """Exact joint over the full product space, for small variable counts."""
    counts = cpts.value_counts
    size = int(np.prod(counts))
    if size > MAX_TABLE_CELLS:
        raise DataError(f"joint of {size} cells is too large to enumerate")
    joint = np.zeros(counts)
    for combo in np.ndindex(*counts):
        p = 1.0
        for node in range(dag.n_nodes):
            pa = dag.parents[node]
            if pa:
                parent_widths = [counts[q] for q in pa]
                row = int(np.ravel_multi_index([np.array([combo[q]]) for q in pa],
                                               parent_widths)[0])
            else:
                row = 0
            p *= cpts.tables[node][row, combo[node]]
        joint[combo] = p
    return joint


def bn_to_dict(dag: Dag, cpts: CptSet, algorithm: str,
               runtime_seconds: float | None = None) -> dict:
    return {
        "format": "agentsynth-bn",
        "version": 1,
        "n_nodes": dag.n_nodes,
        "value_counts": list(cpts.value_counts),
        "parents": [list(p) for p in dag.parents],
        "tables": [t.tolist() for t in cpts.tables],
        "algorithm": algorithm,
        "runtime_seconds": runtime_seconds,
    }


def bn_from_dict(doc: dict) -> tuple[Dag, CptSet]:
    if doc.get("format") != "agentsynth-bn":
        raise DataError(f"not a BN model document: {doc.get('format')!r}")
    dag = Dag(int(doc["n_nodes"]), tuple(tuple(p) for p in doc["parents"]))
    cpts = CptSet(tuple(doc["value_counts"]), dag.parents,
                  tuple(np.asarray(t, dtype=float) for t in doc["tables"]))
    return dag, cpts


def save_bn(dag: Dag, cpts: CptSet, algorithm: str, path,
            runtime_seconds: float | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(bn_to_dict(dag, cpts, algorithm, runtime_seconds), fh)


def load_bn(path) -> tuple[Dag, CptSet]:
    with open(path) as fh:
        return bn_from_dict(json.load(fh))
