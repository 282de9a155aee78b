"""
All-Ranking Evaluation
======================
Ranks every item for every user (train positives masked), then computes
Recall@K and NDCG@K overall and per training-degree group.

NDCG follows the literal ratio form

    sum_{n<=K} hit(n) / log(n+1)   /   sum_{n<=K} 1 / log(n+1)

whose ideal term is not truncated at |T(u)|. The log base cancels, natural
log is used. `standard_idcg=True` truncates the ideal term at min(K, |T(u)|)
for comparison with other toolkits.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Literal, Optional, Protocol, Sequence

import numpy as np
import scipy.sparse as sp

from lfagcl.core.exceptions import EvaluationError
from lfagcl.models.interactions import DatasetBundle, InteractionGraph, SparsityGroups
from lfagcl.models.model import LfaGclModel
from lfagcl.schemas.report import GroupMetrics, KMetrics, MetricReport
from lfagcl.services.propagation import main_channel_forward, predict_scores
from lfagcl.utils.helpers import format_number

logger = logging.getLogger(__name__)

SplitName = Literal["validation", "test"]


class Scorer(Protocol):
    """Anything that scores all items for a set of users."""

    def score_users(self, users: np.ndarray) -> np.ndarray:
        ...


@dataclass(frozen=True)
class EmbeddingScorer:
    """Scores from final main-channel embeddings (eval mode, no dropout)."""

    user_final: np.ndarray
    item_final: np.ndarray

    @classmethod
    def from_model(cls, model: LfaGclModel, graph: InteractionGraph) -> "EmbeddingScorer":
        states = main_channel_forward(graph, model.embeddings, model.config.layers, mode="eval")
        return cls(states.user_final, states.item_final)

    def score_users(self, users: np.ndarray) -> np.ndarray:
        return predict_scores(self.user_final, self.item_final, users)


@dataclass(frozen=True)
class RankingResult:
    """Top-K list of one user (descending score, ascending index on ties) and its truth set."""

    user: int
    top_k_items: np.ndarray
    truth: FrozenSet[int]


def top_k_items(scores: np.ndarray, excluded: np.ndarray, k: int) -> np.ndarray:
    """Best `k` items by score with excluded items removed; ties go to the lower index."""
    scores = np.array(scores, dtype=np.float64)
    scores[excluded] = -np.inf
    order = np.argsort(-scores, kind="stable")[:k]
    return order[np.isfinite(scores[order])]


def rank_all_items(scorer: Scorer, graph: InteractionGraph, user: int, k: int,
                   truth: Iterable[int] = ()) -> RankingResult:
    """Rank the whole catalog for `user`, masking its train positives."""
    if not 0 <= user < graph.n_users:
        raise IndexError(f"user {user} outside 0..{graph.n_users - 1}")
    scores = scorer.score_users(np.array([user]))[0]
    top = top_k_items(scores, graph.user_items(user), k)
    return RankingResult(user=user, top_k_items=top, truth=frozenset(int(i) for i in truth))


def recall_at_k(result: RankingResult, k: int) -> float:
    """|top-K intersect T(u)| / |T(u)|."""
    if not result.truth:
        raise ValueError(f"user {result.user} has no ground-truth items")
    hits = sum(1 for item in result.top_k_items[:k] if int(item) in result.truth)
    return hits / len(result.truth)


def discounts(k: int) -> np.ndarray:
    """1 / ln(n + 1) for positions n = 1..k."""
    return 1.0 / np.log(np.arange(2, k + 2, dtype=np.float64))


def user_ndcg(hits: np.ndarray, k: int, n_truth: int, standard_idcg: bool = False) -> float:
    """NDCG@k of one ranked hit vector (True where the item is relevant)."""
    weights = discounts(k)
    hits = np.asarray(hits[:k], dtype=bool)
    dcg = np.sum(weights[: len(hits)][hits])
    ideal = np.sum(weights[: min(k, n_truth)]) if standard_idcg else np.sum(weights)
    return float(min(1.0, dcg / ideal))


def ndcg_at_k(results: Sequence[RankingResult], k: int, standard_idcg: bool = False) -> float:
    """Mean per-user NDCG@k over results with a nonempty truth set."""
    values = []
    for result in results:
        if not result.truth:
            continue
        hits = np.array([int(item) in result.truth for item in result.top_k_items[:k]], dtype=bool)
        values.append(user_ndcg(hits, k, len(result.truth), standard_idcg))
    return float(np.mean(values)) if values else 0.0


def evaluate(
    scorer: Scorer,
    bundle: DatasetBundle,
    split: SplitName = "test",
    ks: Sequence[int] = (20, 40),
    groups: Optional[SparsityGroups] = None,
    mask_validation: bool = False,
    standard_idcg: bool = False,
    chunk_size: int = 1024,
    config: Optional[Dict[str, str]] = None,
) -> MetricReport:
    """
    Recall@K / NDCG@K for every K over users with nonempty truth in `split`.

    Train positives are always masked; validation positives are masked too
    when evaluating the test split with `mask_validation`.
    """
    graph = bundle.graph
    edges = bundle.split.edges(split)
    if len(edges) == 0:
        raise EvaluationError(f"the {split} split is empty")

    ks = sorted(set(int(k) for k in ks))
    k_max = max(ks)
    shape = (graph.n_users, graph.n_items)

    truth = sp.csr_matrix((np.ones(len(edges)), (edges.users, edges.items)), shape=shape)
    truth.sort_indices()
    excluded = graph.adjacency
    if split == "test" and mask_validation and len(bundle.split.validation):
        val = bundle.split.validation
        excluded = (excluded + sp.csr_matrix((np.ones(len(val)), (val.users, val.items)), shape=shape)).tocsr()
        excluded.sort_indices()

    truth_counts = np.diff(truth.indptr)
    evaluated = np.flatnonzero(truth_counts > 0)
    recall = {k: np.zeros(len(evaluated)) for k in ks}
    ndcg = {k: np.zeros(len(evaluated)) for k in ks}

    for start in range(0, len(evaluated), chunk_size):
        chunk = evaluated[start:start + chunk_size]
        scores = scorer.score_users(chunk)
        for offset, user in enumerate(chunk):
            row = start + offset
            mask_items = excluded.indices[excluded.indptr[user]:excluded.indptr[user + 1]]
            truth_items = truth.indices[truth.indptr[user]:truth.indptr[user + 1]]
            top = top_k_items(scores[offset], mask_items, k_max)
            hits = np.isin(top, truth_items)
            n_truth = len(truth_items)
            for k in ks:
                recall[k][row] = hits[:k].sum() / n_truth
                ndcg[k][row] = user_ndcg(hits, k, n_truth, standard_idcg)

    def summarize(index: np.ndarray) -> Dict[int, KMetrics]:
        if len(index) == 0:
            return {k: KMetrics(recall=0.0, ndcg=0.0) for k in ks}
        return {k: KMetrics(recall=float(np.mean(recall[k][index])), ndcg=float(np.mean(ndcg[k][index]))) for k in ks}

    per_group: Dict[int, GroupMetrics] = {}
    if groups is not None:
        evaluated_groups = groups.assignment[evaluated]
        for g, (low, high) in enumerate(groups.boundaries):
            index = np.flatnonzero(evaluated_groups == g)
            per_group[g] = GroupMetrics(
                group=g,
                degree_min=low,
                degree_max=high,
                n_users=int(np.sum(groups.assignment == g)),
                n_evaluated=len(index),
                per_k=summarize(index),
            )

    n_cold = int(np.sum(graph.user_degrees[evaluated] == 0))
    if n_cold:
        logger.info(f"{n_cold} evaluated users have no train interactions (layer-0 embeddings only)")

    report = MetricReport(
        split=split,
        per_k=summarize(np.arange(len(evaluated))),
        per_group=per_group,
        n_users_evaluated=len(evaluated),
        n_users_skipped=graph.n_users - len(evaluated),
        n_cold_users=n_cold,
        ndcg_variant="standard" if standard_idcg else "full",
        mask_validation=mask_validation,
        config=dict(config or {}),
    )
    logger.info(
        f"Evaluated {split} on {len(evaluated)} users: "
        + ", ".join(f"Recall@{k}={format_number(report.recall(k))} NDCG@{k}={format_number(report.ndcg(k))}" for k in ks)
    )
    return report


def recommend(scorer: Scorer, bundle: DatasetBundle, user_id: str, k: int = 20) -> List[str]:
    """Top-K external item ids for an external user id."""
    index = {uid: u for u, uid in enumerate(bundle.user_ids)}
    if user_id not in index:
        raise KeyError(f"unknown user id '{user_id}'")
    result = rank_all_items(scorer, bundle.graph, index[user_id], k)
    return [bundle.item_ids[i] for i in result.top_k_items]


# === Report files ===

def write_report(report: MetricReport, path: str | Path) -> None:
    Path(path).write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")


def read_report(path: str | Path) -> MetricReport:
    return MetricReport.model_validate_json(Path(path).read_text(encoding="utf-8"))


def _config_lines(config: Dict[str, str]) -> List[str]:
    return [f"# {key}={value}" for key, value in config.items()]


def report_table(report: MetricReport, sep: str = "\t") -> str:
    """Flat table: one overall row plus one row per degree group."""
    ks = sorted(report.per_k)
    header = ["group", "degree_range", "users"]
    for k in ks:
        header += [f"recall@{k}", f"ndcg@{k}"]

    def cells(metrics: Dict[int, KMetrics]) -> List[str]:
        out = []
        for k in ks:
            out += [format_number(metrics[k].recall), format_number(metrics[k].ndcg)]
        return out

    lines = _config_lines(report.config) + [sep.join(header)]
    lines.append(sep.join(["all", "", str(report.n_users_evaluated)] + cells(report.per_k)))
    for g in sorted(report.per_group):
        group = report.per_group[g]
        lines.append(sep.join([str(g), f"{group.degree_min}-{group.degree_max}", str(group.n_evaluated)]
                              + cells(group.per_k)))
    return "\n".join(lines) + "\n"


def group_comparison_table(baseline: MetricReport, candidate: MetricReport, k: int,
                           config: Optional[Dict[str, str]] = None, sep: str = "\t") -> str:
    """Per-group Recall@k of two models side by side with the improvement."""
    header = ["group", "degree_range", "users", f"recall@{k}_a", f"recall@{k}_b", "improvement"]
    lines = _config_lines(config or {}) + [sep.join(header)]

    def row(label: str, degree_range: str, users: int, a: float, b: float) -> str:
        return sep.join([label, degree_range, str(users), format_number(a), format_number(b), format_number(b - a)])

    lines.append(row("all", "", baseline.n_users_evaluated, baseline.recall(k), candidate.recall(k)))
    for g in sorted(baseline.per_group):
        group_a, group_b = baseline.per_group[g], candidate.per_group[g]
        lines.append(row(str(g), f"{group_a.degree_min}-{group_a.degree_max}", group_a.n_evaluated,
                         group_a.per_k[k].recall, group_b.per_k[k].recall))
    return "\n".join(lines) + "\n"
