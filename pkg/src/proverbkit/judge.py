"""Pairwise LLM-as-judge evaluation with position randomization.

Each comparison shows two model outputs as anonymous candidates A and B; the
assignment is randomized per item (seeded, so replays are identical) and the
verdict is mapped back to the underlying models before tallying win rates.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass

from .errors import ValidationError
from .modelclient import ModelClient
from .prompts import ChatTurn

logger = logging.getLogger(__name__)

JUDGE_INSTRUCTION = (
    "You judge machine translation quality. Compare the two candidate "
    "translations comprehensively on three aspects: translation accuracy, "
    "fluency, and cultural appropriateness. "
    'Answer with exactly one of: "A", "B", or "tie".'
)

JUDGE_BODY = (
    "Context before: {before}\n"
    "Source: {source}\n"
    "Context after: {after}\n"
    "Reference translation: {reference}\n"
    "Candidate A: {a}\n"
    "Candidate B: {b}\n"
    "Which candidate is the better translation?"
)

RAW_VERDICTS = ("A", "B", "tie")


@dataclass(frozen=True)
class JudgeItem:
    source: str
    reference: str
    context_before: str
    context_after: str
    hyp_model_x: str
    hyp_model_y: str
    seed: int

    def __post_init__(self) -> None:
        if not self.hyp_model_x or not self.hyp_model_y:
            raise ValidationError("both hypotheses must be non-empty")


@dataclass(frozen=True)
class PositionMap:
    x_is_a: bool

    def resolve(self, raw: str) -> str:
        if raw == "tie":
            return "tie"
        if raw == "A":
            return "X" if self.x_is_a else "Y"
        return "Y" if self.x_is_a else "X"


@dataclass(frozen=True)
class Verdict:
    raw: str       # "A" | "B" | "tie"
    resolved: str  # "X" | "Y" | "tie"
    position_map: PositionMap

    def __post_init__(self) -> None:
        if self.raw not in RAW_VERDICTS:
            raise ValidationError(f"bad raw verdict {self.raw!r}")
        if self.resolved != self.position_map.resolve(self.raw):
            raise ValidationError("resolved verdict inconsistent with position map")


def assign_positions(item: JudgeItem) -> PositionMap:
    """Deterministic coin flip from the item's seed."""
    return PositionMap(x_is_a=random.Random(item.seed).random() < 0.5)


def build_judge_prompt(item: JudgeItem, positions: PositionMap) -> list[ChatTurn]:
    hyp_a = item.hyp_model_x if positions.x_is_a else item.hyp_model_y
    hyp_b = item.hyp_model_y if positions.x_is_a else item.hyp_model_x
    body = JUDGE_BODY.format(before=item.context_before or "(none)",
                             source=item.source,
                             after=item.context_after or "(none)",
                             reference=item.reference,
                             a=hyp_a, b=hyp_b)
    return [ChatTurn("system", JUDGE_INSTRUCTION), ChatTurn("user", body)]


def judge_pair(item: JudgeItem, client: ModelClient) -> Verdict | None:
    """One judged comparison; None when the reply stays unparsable after a retry."""
    positions = assign_positions(item)
    transcript = build_judge_prompt(item, positions)
    for attempt in range(2):
        raw = client.chat(transcript).strip()
        if raw in RAW_VERDICTS:
            return Verdict(raw=raw, resolved=positions.resolve(raw),
                           position_map=positions)
        logger.warning("judge: unparsable verdict %r (attempt %d)", raw, attempt + 1)
    return None


def judge_items(items: list[JudgeItem], client: ModelClient
                ) -> list[Verdict | None]:
    return client.map_concurrent(lambda item: judge_pair(item, client), items)


def tally_winrates(verdicts: list[Verdict]) -> tuple[float, float, float]:
    """(win_x, win_y, tie) fractions over valid verdicts; ties stay in the denominator."""
    if not verdicts:
        raise ValidationError("cannot tally an empty verdict list")
    n = len(verdicts)
    win_x = sum(1 for v in verdicts if v.resolved == "X") / n
    win_y = sum(1 for v in verdicts if v.resolved == "Y") / n
    tie = sum(1 for v in verdicts if v.resolved == "tie") / n
    return win_x, win_y, tie


def tally_winrates_excluding_ties(verdicts: list[Verdict]) -> tuple[float, float]:
    """Win fractions over decisive verdicts only; (0, 0) when all were ties."""
    decisive = [v for v in verdicts if v.resolved != "tie"]
    if not decisive:
        return 0.0, 0.0
    n = len(decisive)
    return (sum(1 for v in decisive if v.resolved == "X") / n,
            sum(1 for v in decisive if v.resolved == "Y") / n)
