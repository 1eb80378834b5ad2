"""Evaluation machinery for generated populations.

Generated pools are compared against a held-out test pool through binned
frequency distributions. A "view" collects the bin frequencies of many
variable subsets into one long vector: the marginal view concatenates all
single-variable distributions, the bivariate view all pairs, the
trivariate view all triplets, and the projected view is the full joint of
a designated subset. Each view is scored with SRMSE (root mean squared
error over bins divided by the mean reference frequency), the Pearson
correlation of the two bin vectors, and the coefficient of determination.
Pairwise association patterns are compared through Cramer's V over all
variable pairs, and sample diversity through the distance of each
generated agent to its nearest training agent (mu_NS, sigma_NS): both
exactly zero precisely when every generated row replicates a training row.

All operations are pure; subset enumeration and neighbor scans are
data-parallel by construction.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass

import numpy as np

from .dataset import AgentPool, EncodedMatrix, encode_pool, pool_to_codes
from .errors import DataError

NS_CHUNK = 512  # generated rows per nearest-neighbor block


def codes_for_pool(pool: AgentPool) -> np.ndarray:
    """Discrete codes for metric computation; numerics are clamped into
    their outermost bins so generated pools always bin cleanly."""
    return pool_to_codes(pool, clamp=True)


@dataclass(frozen=True)
class FrequencyDistribution:
    """Relative frequencies over the full product bin space of a subset.

    ``freqs`` has one entry per combination of the subset's values,
    including never-observed combinations (frequency zero).
    """

    subset: tuple[int, ...]
    widths: tuple[int, ...]
    freqs: np.ndarray

    @property
    def n_bins(self) -> int:
        return int(self.freqs.size)


def frequency_distribution_from_codes(codes: np.ndarray, value_counts: tuple[int, ...],
                                      subset: tuple[int, ...]) -> FrequencyDistribution:
    if len(subset) == 0:
        raise DataError("frequency distribution needs a non-empty variable subset")
    if codes.shape[0] == 0:
        raise DataError("frequency distribution of an empty pool")
    widths = tuple(value_counts[i] for i in subset)
    flat = np.ravel_multi_index([codes[:, i] for i in subset], widths)
    n_bins = int(np.prod(widths))
    counts = np.bincount(flat, minlength=n_bins)
    return FrequencyDistribution(tuple(subset), widths, counts / codes.shape[0])


def frequency_distribution(pool: AgentPool, subset) -> FrequencyDistribution:
    """Joint relative frequencies of a variable subset (indices or names)."""
    idx = tuple(pool.schema.index(s) if isinstance(s, str) else int(s) for s in subset)
    return frequency_distribution_from_codes(codes_for_pool(pool),
                                             pool.schema.value_counts, idx)


def _srmse_vec(pred: np.ndarray, ref: np.ndarray) -> float:
    rmse = float(np.sqrt(np.mean((pred - ref) ** 2)))
    return rmse / float(np.mean(ref))


def srmse(p_hat: FrequencyDistribution, p: FrequencyDistribution) -> float:
    """RMSE over all bins divided by the mean frequency.

    Normalized distributions have mean frequency exactly 1/n_bins, so this
    is the bin-vector RMSE multiplied by the bin count.
    """
    if p_hat.subset != p.subset or p_hat.widths != p.widths:
        raise DataError(
            f"incomparable distributions: subsets {p_hat.subset} vs {p.subset}")
    diff = p_hat.freqs - p.freqs
    return float(np.sqrt(np.sum(diff ** 2) / p.n_bins) * p.n_bins)


def _corr_r2_vec(pred: np.ndarray, ref: np.ndarray) -> tuple[float | None, float | None]:
    ref_centered = ref - ref.mean()
    pred_centered = pred - pred.mean()
    ss_tot = float(np.sum(ref_centered ** 2))
    ss_pred = float(np.sum(pred_centered ** 2))
    if ss_tot == 0.0 or ss_pred == 0.0:
        return None, (None if ss_tot == 0.0 else 1.0 - float(np.sum((ref - pred) ** 2)))
    corr = float(np.sum(ref_centered * pred_centered) / np.sqrt(ss_tot * ss_pred))
    r2 = 1.0 - float(np.sum((ref - pred) ** 2)) / ss_tot
    return corr, r2


def corr_r2(p_hat: FrequencyDistribution, p: FrequencyDistribution
            ) -> tuple[float | None, float | None]:
    """Pearson correlation of the bin vectors and R^2 of predicting the
    reference bins by the generated bins. A zero-variance vector makes the
    statistic undefined; that is reported as None, never as 0."""
    if p_hat.subset != p.subset or p_hat.widths != p.widths:
        raise DataError(
            f"incomparable distributions: subsets {p_hat.subset} vs {p.subset}")
    return _corr_r2_vec(p_hat.freqs, p.freqs)


def cramers_v_from_codes(codes: np.ndarray, value_counts, i: int, j: int) -> float | None:
    """Cramer's V from the pairwise contingency table, without bias
    correction. None when either variable is constant in the data."""
    n = codes.shape[0]
    if n == 0:
        raise DataError("Cramer's V of an empty pool")
    table = np.zeros((value_counts[i], value_counts[j]))
    np.add.at(table, (codes[:, i], codes[:, j]), 1.0)
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    r, c = table.shape
    if r < 2 or c < 2:
        return None
    row = table.sum(axis=1, keepdims=True)
    col = table.sum(axis=0, keepdims=True)
    expected = row @ col / n
    chi2 = float(np.sum((table - expected) ** 2 / expected))
    return min(1.0, float(np.sqrt(chi2 / (n * min(r - 1, c - 1)))))


def cramers_v(pool: AgentPool, i, j) -> float | None:
    ii = pool.schema.index(i) if isinstance(i, str) else int(i)
    jj = pool.schema.index(j) if isinstance(j, str) else int(j)
    return cramers_v_from_codes(codes_for_pool(pool), pool.schema.value_counts, ii, jj)


@dataclass(frozen=True)
class DiversityStats:
    mu_ns: float
    sigma_ns: float


def _as_matrix(pool_or_matrix, standardization=None) -> EncodedMatrix:
    if isinstance(pool_or_matrix, EncodedMatrix):
        return pool_or_matrix
    return encode_pool(pool_or_matrix, standardization=standardization)


def nearest_sample_stats(generated, train, standardization=None) -> DiversityStats:
    """Mean and standard deviation of each generated agent's RMSE distance
    to its nearest training agent, in the shared encoded space.

    Rows that exactly replicate a training row get distance exactly zero
    (checked by byte identity before any floating-point arithmetic), so a
    pure replicator scores (0, 0) exactly.
    """
    train_m = _as_matrix(train, standardization)
    gen_m = _as_matrix(generated, standardization or train_m.standardization)
    t = np.ascontiguousarray(train_m.values)
    g = np.ascontiguousarray(gen_m.values)
    if t.shape[0] == 0:
        raise DataError("nearest-sample distances need a non-empty training pool")
    if g.shape[0] == 0:
        raise DataError("nearest-sample distances need a non-empty generated pool")
    if t.shape[1] != g.shape[1]:
        raise DataError("pools are encoded in different spaces")
    n_cols = t.shape[1]
    train_keys = {row.tobytes() for row in t}
    dist = np.empty(g.shape[0])
    t_sq = np.sum(t * t, axis=1)
    for start in range(0, g.shape[0], NS_CHUNK):
        chunk = g[start:start + NS_CHUNK]
        sq = np.sum(chunk * chunk, axis=1)[:, None] + t_sq[None, :] - 2.0 * chunk @ t.T
        best = np.maximum(sq.min(axis=1), 0.0)
        dist[start:start + NS_CHUNK] = np.sqrt(best / n_cols)
    for k, row in enumerate(g):
        if row.tobytes() in train_keys:
            dist[k] = 0.0
    return DiversityStats(float(dist.mean()), float(dist.std()))


# ---------------------------------------------------------------------------
# principal components


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray          # (n_features, n_components), orthonormal columns
    explained_variances: np.ndarray  # nonincreasing


def pca_fit(data) -> PcaModel:
    """Principal components of mean-centered data via the eigendecomposition
    of the sample covariance. Components are orthonormal and ordered by
    nonincreasing explained variance; tiny negative eigenvalues from
    round-off are clipped to zero."""
    values = data.values if isinstance(data, EncodedMatrix) else np.asarray(data, dtype=float)
    if values.ndim != 2 or values.shape[0] < 2:
        raise DataError("PCA needs a matrix with at least 2 rows")
    mean = values.mean(axis=0)
    centered = values - mean
    cov = centered.T @ centered / (values.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    return PcaModel(mean, eigvecs[:, order], np.maximum(eigvals[order], 0.0))


def pca_project(model: PcaModel, data, k: int) -> np.ndarray:
    """Coordinates of rows in the first k principal directions."""
    values = data.values if isinstance(data, EncodedMatrix) else np.asarray(data, dtype=float)
    k = min(k, model.components.shape[1])
    return (values - model.mean) @ model.components[:, :k]


# ---------------------------------------------------------------------------
# the full evaluation protocol


@dataclass(frozen=True)
class ViewMetrics:
    srmse: float
    corr: float | None
    r2: float | None


@dataclass
class MethodEvaluation:
    views: dict[str, ViewMetrics]
    pairwise: ViewMetrics | None
    diversity: DiversityStats


@dataclass
class EvalReport:
    method_names: list[str]
    rows: dict[str, MethodEvaluation]
    metadata: dict

    VIEW_ORDER = ("marginal", "bivariate", "trivariate", "projected")
    # CSV column labels, matching the usual reporting layout
    COLUMNS = ("Marg.", "Bivar.", "Trivar.", "Basic", "Pair.", "mu_NS", "sigma_NS")


def view_subsets(n_variables: int, projection: tuple[int, ...]) -> dict[str, list[tuple[int, ...]]]:
    views: dict[str, list[tuple[int, ...]]] = {
        "marginal": [(i,) for i in range(n_variables)],
    }
    if n_variables >= 2:
        views["bivariate"] = list(itertools.combinations(range(n_variables), 2))
    if n_variables >= 3:
        views["trivariate"] = list(itertools.combinations(range(n_variables), 3))
    views["projected"] = [tuple(projection)]
    return views


def _view_vector(codes: np.ndarray, value_counts, subsets) -> np.ndarray:
    parts = [
        frequency_distribution_from_codes(codes, value_counts, subset).freqs
        for subset in subsets
    ]
    return np.concatenate(parts)


def _pairwise_v_vector(codes: np.ndarray, value_counts) -> np.ndarray:
    n = len(value_counts)
    vals = []
    for i, j in itertools.combinations(range(n), 2):
        v = cramers_v_from_codes(codes, value_counts, i, j)
        vals.append(np.nan if v is None else v)
    return np.asarray(vals)


def evaluate(method_pools: dict[str, AgentPool], test_pool: AgentPool,
             train_pool: AgentPool, projection=None,
             metadata: dict | None = None) -> EvalReport:
    """Score every generated pool against the test pool.

    Rows cover each supplied method plus a ``training-set`` reference row
    (the training pool compared to the test pool; its diversity stats are
    also taken against the test pool). Views: concatenated marginals, all
    pairs, all triplets, and the projected joint of ``projection`` (default:
    the schema's first four variables).
    """
    schema = test_pool.schema
    for name, pool in method_pools.items():
        if pool.schema != schema:
            raise DataError(f"pool {name!r} does not share the evaluation schema")
    if projection is None:
        projection = tuple(range(min(4, schema.n_variables)))
    else:
        projection = tuple(schema.index(p) if isinstance(p, str) else int(p)
                           for p in projection)
    counts = schema.value_counts
    subsets = view_subsets(schema.n_variables, projection)
    test_codes = codes_for_pool(test_pool)
    test_vectors = {view: _view_vector(test_codes, counts, subs)
                    for view, subs in subsets.items()}
    test_pairwise = _pairwise_v_vector(test_codes, counts) if schema.n_variables >= 2 else None
    train_matrix = encode_pool(train_pool)

    def score(codes: np.ndarray) -> tuple[dict[str, ViewMetrics], ViewMetrics | None]:
        views = {}
        for view, subs in subsets.items():
            vec = _view_vector(codes, counts, subs)
            ref = test_vectors[view]
            corr, r2 = _corr_r2_vec(vec, ref)
            views[view] = ViewMetrics(_srmse_vec(vec, ref), corr, r2)
        pairwise = None
        if test_pairwise is not None:
            vec = _pairwise_v_vector(codes, counts)
            keep = ~(np.isnan(vec) | np.isnan(test_pairwise))
            if keep.any() and test_pairwise[keep].mean() > 0:
                corr, r2 = _corr_r2_vec(vec[keep], test_pairwise[keep])
                pairwise = ViewMetrics(_srmse_vec(vec[keep], test_pairwise[keep]), corr, r2)
        return views, pairwise

    rows: dict[str, MethodEvaluation] = {}
    for name, pool in method_pools.items():
        views, pairwise = score(codes_for_pool(pool))
        diversity = nearest_sample_stats(
            encode_pool(pool, standardization=train_matrix.standardization), train_matrix)
        rows[name] = MethodEvaluation(views, pairwise, diversity)
    # training set vs test set, diversity also against the test set
    views, pairwise = score(codes_for_pool(train_pool))
    test_matrix = encode_pool(test_pool, standardization=train_matrix.standardization)
    rows["training-set"] = MethodEvaluation(
        views, pairwise, nearest_sample_stats(train_matrix, test_matrix))
    return EvalReport(list(method_pools) + ["training-set"], rows, dict(metadata or {}))


# ---------------------------------------------------------------------------
# report serialization


def _metric_entry(vm: ViewMetrics | None) -> dict | None:
    if vm is None:
        return None
    return {"srmse": vm.srmse, "corr": vm.corr, "r2": vm.r2}


def report_to_dict(report: EvalReport) -> dict:
    rows = {}
    for name in report.method_names:
        row = report.rows[name]
        rows[name] = {
            "views": {view: _metric_entry(row.views.get(view))
                      for view in EvalReport.VIEW_ORDER if view in row.views},
            "pairwise_cramers_v": _metric_entry(row.pairwise),
            "mu_ns": row.diversity.mu_ns,
            "sigma_ns": row.diversity.sigma_ns,
        }
    return {"methods": report.method_names, "rows": rows, "metadata": report.metadata}


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report_to_dict(report), indent=2)


def _metric_from_entry(entry: dict | None) -> ViewMetrics | None:
    if entry is None:
        return None
    return ViewMetrics(entry["srmse"], entry.get("corr"), entry.get("r2"))


def report_from_dict(doc: dict) -> EvalReport:
    rows = {}
    for name, row in doc["rows"].items():
        views = {view: _metric_from_entry(entry)
                 for view, entry in row["views"].items() if entry is not None}
        rows[name] = MethodEvaluation(
            views,
            _metric_from_entry(row.get("pairwise_cramers_v")),
            DiversityStats(row["mu_ns"], row["sigma_ns"]),
        )
    return EvalReport(list(doc["methods"]), rows, dict(doc.get("metadata", {})))


def write_report_csv(report: EvalReport, path) -> None:
    """Flat SRMSE table: one row per method, columns for every view plus the
    pairwise Cramer's V SRMSE and the diversity statistics."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["Model", *EvalReport.COLUMNS])
        for name in report.method_names:
            row = report.rows[name]
            cells = [name]
            for view in EvalReport.VIEW_ORDER:
                vm = row.views.get(view)
                cells.append("" if vm is None else repr(vm.srmse))
            cells.append("" if row.pairwise is None else repr(row.pairwise.srmse))
            cells.append(repr(row.diversity.mu_ns))
            cells.append(repr(row.diversity.sigma_ns))
            writer.writerow(cells)


def write_scatter_csv(method_codes: np.ndarray, test_codes: np.ndarray,
                      value_counts, subsets, path) -> None:
    """Per-view scatter data: one row per bin with the test frequency and
    the method frequency, ready for external plotting."""
    method_vec = _view_vector(method_codes, value_counts, subsets)
    test_vec = _view_vector(test_codes, value_counts, subsets)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_id", "test_frequency", "method_frequency"])
        for b, (tv, mv) in enumerate(zip(test_vec, method_vec)):
            writer.writerow([b, repr(float(tv)), repr(float(mv))])


def write_pca_csv(coords: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"pc{k + 1}" for k in range(coords.shape[1])])
        for row in coords:
            writer.writerow([repr(float(v)) for v in row])
