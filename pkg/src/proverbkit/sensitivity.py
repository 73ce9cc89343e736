"""Metric-sensitivity analysis: semantically close hypothesis pairs whose
metric scores are far apart.

Two hypotheses of the same reference are flagged for a metric when their
cosine similarities to the reference embedding differ by less than
``cos_diff_max`` while their metric scores differ by more than that metric's
threshold (both inequalities strict).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, ValidationError

DEFAULT_METRIC_DIFF_MIN = {"COMET": 10.0, "BLEU": 5.0, "CHRFPP": 10.0}


@dataclass(frozen=True)
class HypothesisRecord:
    system_id: str
    reference_id: str
    hypothesis: str
    metric_scores: Mapping[str, float]
    embedding: tuple[float, ...] | None = None


@dataclass(frozen=True)
class SensitivityConfig:
    cos_diff_max: float = 0.05
    metric_diff_min: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_METRIC_DIFF_MIN))

    def __post_init__(self) -> None:
        if self.cos_diff_max <= 0 or any(v <= 0 for v in self.metric_diff_min.values()):
            raise ValidationError("sensitivity thresholds must be positive")


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValidationError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValidationError("cosine is undefined for a zero vector")
    return float(np.dot(u, v) / (nu * nv))


UnstablePair = tuple[HypothesisRecord, HypothesisRecord, str]


def find_unstable_pairs(records: list[HypothesisRecord],
                        ref_embeddings: Mapping[str, Sequence[float]],
                        config: SensitivityConfig = SensitivityConfig()
                        ) -> list[UnstablePair]:
    """All flagged (h1, h2, metric) triples, deduplicated and ordered.

    Pairs are unordered (h1 before h2 by system id) and compared per
    reference group; output is sorted by (reference_id, system ids, metric).
    """
    for record in records:
        if record.embedding is None:
            raise DataError(f"record {record.system_id}/{record.reference_id} "
                            "has no embedding")
        missing = [m for m in config.metric_diff_min if m not in record.metric_scores]
        if missing:
            raise DataError(f"record {record.system_id}/{record.reference_id} "
                            f"missing metric(s) {missing}")

    groups: dict[str, list[HypothesisRecord]] = {}
    for record in records:
        groups.setdefault(record.reference_id, []).append(record)

    flagged: list[UnstablePair] = []
    for ref_id in sorted(groups):
        if ref_id not in ref_embeddings:
            raise DataError(f"no reference embedding for {ref_id!r}")
        ref_vec = ref_embeddings[ref_id]
        group = sorted(groups[ref_id], key=lambda r: (r.system_id, r.hypothesis))
        cosines = [cosine(r.embedding, ref_vec) for r in group]
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                if abs(cosines[i] - cosines[j]) >= config.cos_diff_max:
                    continue
                for metric in sorted(config.metric_diff_min):
                    delta = abs(group[i].metric_scores[metric]
                                - group[j].metric_scores[metric])
                    if delta > config.metric_diff_min[metric]:
                        flagged.append((group[i], group[j], metric))
    return flagged


def count_by_system(pairs: list[UnstablePair]) -> dict[str, int]:
    """How often each system appears across flagged pairs."""
    counts: Counter[str] = Counter()
    for h1, h2, _ in pairs:
        counts[h1.system_id] += 1
        counts[h2.system_id] += 1
    return dict(counts)


def count_unique_pairs(pairs: list[UnstablePair]) -> int:
    """Pairs counted once even when flagged by several metrics."""
    return len({(h1.reference_id, h1.system_id, h1.hypothesis,
                 h2.system_id, h2.hypothesis) for h1, h2, _ in pairs})
