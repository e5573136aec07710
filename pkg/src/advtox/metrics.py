"""Aggregate attack metrics (ASR, query cost, perturbation size) and
ROC-based bias metrics (overall, subgroup, BPSN).

Denominators exclude skipped seeds and transport failures; when a metric's
denominator is empty the value is None and the metric name is listed in
``undefined`` rather than reported as a number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .search import AttackStatus


@dataclass
class RunMetrics:
    total_seeds: int
    skipped: int
    transport_failures: int
    attempted: int
    successes: int
    asr: float | None
    avg_queries: float | None
    avg_perturb_pct: float | None
    undefined: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "total_seeds": self.total_seeds,
            "skipped": self.skipped,
            "transport_failures": self.transport_failures,
            "attempted": self.attempted,
            "successes": self.successes,
            "asr": self.asr,
            "avg_queries": self.avg_queries,
            "avg_perturb_pct": self.avg_perturb_pct,
            "undefined": sorted(self.undefined),
        }


def _attempted(results) -> list:
    return [r for r in results
            if r.status not in (AttackStatus.SKIPPED, AttackStatus.FAILED_TRANSPORT)]


def compute_asr(results) -> float | None:
    attempted = _attempted(results)
    if not attempted:
        return None
    wins = sum(1 for r in attempted if r.status is AttackStatus.SUCCESS)
    return wins / len(attempted)


def avg_queries(results) -> float | None:
    attempted = _attempted(results)
    if not attempted:
        return None
    return sum(r.queries for r in attempted) / len(attempted)


def avg_perturb_pct(results) -> float | None:
    wins = [r for r in results if r.status is AttackStatus.SUCCESS]
    if not wins:
        return None
    return 100.0 * sum(r.perturbed_ratio for r in wins) / len(wins)


def compute_metrics(results) -> RunMetrics:
    skipped = sum(1 for r in results if r.status is AttackStatus.SKIPPED)
    transport = sum(1 for r in results if r.status is AttackStatus.FAILED_TRANSPORT)
    attempted = _attempted(results)
    successes = sum(1 for r in attempted if r.status is AttackStatus.SUCCESS)
    asr = compute_asr(results)
    queries = avg_queries(results)
    perturb = avg_perturb_pct(results)
    undefined = []
    if asr is None:
        undefined.append("asr")
    if queries is None:
        undefined.append("avg_queries")
    if perturb is None:
        undefined.append("avg_perturb_pct")
    return RunMetrics(
        total_seeds=len(results), skipped=skipped, transport_failures=transport,
        attempted=len(attempted), successes=successes, asr=asr,
        avg_queries=queries, avg_perturb_pct=perturb, undefined=undefined)


def roc_auc(scores, truths) -> float:
    """Probability that a random positive outscores a random negative, with
    ties counting one half (Mann-Whitney with average ranks)."""
    scores = np.asarray(scores, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.int64)
    if scores.shape != truths.shape or scores.ndim != 1:
        raise ValueError("scores and truths must be equal-length vectors")
    n_pos = int(truths.sum())
    n_neg = len(truths) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs at least one positive and one negative")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    pos_rank_sum = float(ranks[truths == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def subgroup_auc(scores, truths, group_mask) -> float | None:
    """ROC-AUC restricted to records flagged for the identity group; None when
    the subset is degenerate."""
    scores = np.asarray(scores, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.int64)
    mask = np.asarray(group_mask, dtype=bool)
    sub_s, sub_t = scores[mask], truths[mask]
    if len(sub_t) == 0 or sub_t.sum() in (0, len(sub_t)):
        return None
    return roc_auc(sub_s, sub_t)


def bpsn_auc(scores, truths, group_mask) -> float | None:
    """Background-positive / subgroup-negative AUC: non-toxic comments from
    the group against toxic comments that do not mention it."""
    scores = np.asarray(scores, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.int64)
    mask = np.asarray(group_mask, dtype=bool)
    keep = (mask & (truths == 0)) | (~mask & (truths == 1))
    sub_s, sub_t = scores[keep], truths[keep]
    if len(sub_t) == 0 or sub_t.sum() in (0, len(sub_t)):
        return None
    return roc_auc(sub_s, sub_t)


def bias_report(scores, truths, identity_masks: dict) -> dict:
    """Per-group Subgroup/BPSN AUC table; degenerate groups are reported in
    ``undefined`` with the metric that failed."""
    groups = {}
    undefined = []
    for group, mask in sorted(identity_masks.items()):
        sub = subgroup_auc(scores, truths, mask)
        bpsn = bpsn_auc(scores, truths, mask)
        if sub is None:
            undefined.append(f"subgroup_auc:{group}")
        if bpsn is None:
            undefined.append(f"bpsn_auc:{group}")
        groups[group] = {"subgroup_auc": sub, "bpsn_auc": bpsn,
                         "group_size": int(np.asarray(mask, dtype=bool).sum())}
    return {"groups": groups, "undefined": undefined}
