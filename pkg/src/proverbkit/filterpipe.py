"""Phase-2 filtering: usage check, dual quality estimation, fusion, quantiles.

The usage filter runs before QE scoring to save model calls. Filtering is
applied per translation direction: the keep threshold is the larger of the
per-direction quantile score and the global minimum score.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .corpus import MinedCandidate, ProverbEntry, ScoredCandidate
from .errors import ProtocolError, ValidationError
from .modelclient import ModelClient
from .prompts import ChatTurn

logger = logging.getLogger(__name__)

USAGE_INSTRUCTION = (
    "You decide whether a proverb is contained in a sentence, judging by "
    "semantic meaning rather than exact wording. "
    "Answer with exactly one word: Yes or No."
)
USAGE_QUESTION = 'Proverb: "{proverb}"\nSentence: "{sentence}"\nIs the proverb contained in the sentence?'

QE_INSTRUCTION = (
    "You rate translation quality. Given a sentence and its translation, "
    "reply with a single integer from 1 to 5, where 5 means a perfect "
    "translation. Reply with the number only."
)
QE_QUESTION = 'Sentence: "{a}"\nTranslation: "{b}"'


@dataclass(frozen=True)
class FilterConfig:
    max_per_direction: int = 2000
    min_score: float = 4.0
    qe_weight: float = 5.0

    def __post_init__(self) -> None:
        if self.max_per_direction <= 0:
            raise ValidationError("max_per_direction must be > 0")
        if not 1.0 <= self.min_score <= 10.0:
            raise ValidationError("min_score must be in [1,10]")


def _yes_no(client: ModelClient, proverb_text: str, sentence: str) -> str:
    transcript = [
        ChatTurn("system", USAGE_INSTRUCTION),
        ChatTurn("user", USAGE_QUESTION.format(proverb=proverb_text, sentence=sentence)),
    ]
    return client.chat(transcript).strip()


def usage_filter(candidate: MinedCandidate, proverb: ProverbEntry,
                 client: ModelClient) -> bool | None:
    """True/False from the model's constrained Yes/No answer.

    A reply outside {Yes, No} is retried once; a second bad reply marks the
    candidate undecided (None), which callers exclude.
    """
    for attempt in range(2):
        answer = _yes_no(client, proverb.text, candidate.pair.source)
        if answer == "Yes":
            return True
        if answer == "No":
            return False
        logger.warning("usage filter: protocol error for (%s, %s): %r (attempt %d)",
                       candidate.pair.doc_id, candidate.pair.line_idx, answer,
                       attempt + 1)
    return None


def _qe_once(client: ModelClient, a: str, b: str) -> float:
    transcript = [
        ChatTurn("system", QE_INSTRUCTION),
        ChatTurn("user", QE_QUESTION.format(a=a, b=b)),
    ]
    reply = client.chat(transcript).strip()
    try:
        value = float(reply)
    except ValueError as exc:
        raise ProtocolError(f"non-numeric QE reply {reply!r}") from exc
    if not 1.0 <= value <= 5.0:
        raise ProtocolError(f"QE reply {value} outside [1,5]")
    return value


def llm_qe_score(candidate: MinedCandidate, client: ModelClient) -> float:
    """Mean of two scores with source/target order swapped between queries."""
    forward = _qe_once(client, candidate.pair.source, candidate.pair.target)
    backward = _qe_once(client, candidate.pair.target, candidate.pair.source)
    return (forward + backward) / 2.0


def fuse_scores(llm_qe: float, da_qe: float, qe_weight: float = 5.0) -> float:
    """Overall quality: llm_qe + da_qe * qe_weight."""
    if not 1.0 <= llm_qe <= 5.0:
        raise ValidationError(f"llm_qe {llm_qe} outside [1,5]")
    if not 0.0 <= da_qe <= 1.0:
        raise ValidationError(f"da_qe {da_qe} outside [0,1]")
    return llm_qe + da_qe * qe_weight


def score_candidates(candidates: list[MinedCandidate],
                     proverbs: list[ProverbEntry],
                     client: ModelClient,
                     config: FilterConfig = FilterConfig()) -> list[ScoredCandidate]:
    """Run usage filtering then QE scoring; survivors advance to phase P2."""
    by_id = {p.id: p for p in proverbs}

    def check(cand: MinedCandidate) -> bool | None:
        return usage_filter(cand, by_id[cand.proverb_id], client)

    decisions = client.map_concurrent(check, candidates)
    kept = [c for c, d in zip(candidates, decisions) if d is True]
    logger.info("usage filter kept %d/%d candidates", len(kept), len(candidates))

    def score(cand: MinedCandidate) -> ScoredCandidate:
        llm_qe = llm_qe_score(cand, client)
        da_qe = client.da_qe(cand.pair.source, cand.pair.target)
        return ScoredCandidate(
            candidate=cand.advanced("P2"),
            llm_qe=llm_qe,
            da_qe=da_qe,
            overall=fuse_scores(llm_qe, da_qe, config.qe_weight),
        )

    return client.map_concurrent(score, kept)


def quantile_threshold(scores: list[float],
                       config: FilterConfig = FilterConfig()) -> float:
    """Keep threshold: max(nearest-rank score at q_min, min_score).

    q_min = max(0, 1 - max_per_direction / |D|); the quantile is the
    ceil(q*n)-th ascending element (nearest-rank, 1-based).
    """
    if not scores:
        raise ValidationError("quantile_threshold requires non-empty scores")
    n = len(scores)
    # ceil(q_min * n) == max(0, n - cap) exactly; integer arithmetic avoids
    # the float round-off of literally evaluating (1 - cap/n) * n
    rank = max(1, n - config.max_per_direction)
    value = sorted(scores)[rank - 1]
    return max(value, config.min_score)


def filter_direction(candidates: list[ScoredCandidate],
                     config: FilterConfig = FilterConfig()) -> list[ScoredCandidate]:
    """Keep candidates scoring at or above the direction's threshold.

    Ties at the threshold are all kept even if that slightly exceeds the cap.
    Output is sorted by overall descending, then (doc_id, line_idx).
    """
    if not candidates:
        return []
    directions = {s.candidate.direction for s in candidates}
    if len(directions) > 1:
        raise ValidationError(f"mixed directions in one filter call: {sorted(directions)}")
    threshold = quantile_threshold([s.overall for s in candidates], config)
    kept = [s for s in candidates if s.overall >= threshold]
    kept.sort(key=lambda s: (-s.overall, s.candidate.pair.doc_id,
                             s.candidate.pair.line_idx))
    return kept
