"""The five translation prompt templates, rendered as structured chat turns."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .corpus import ContextWindow
from .errors import ValidationError

LANGUAGE_NAMES = {
    "bn": "Bengali",
    "de": "German",
    "en": "English",
    "id": "Indonesian",
    "zh": "Chinese",
}

# One-shot example sentence and its fixed translations; override via
# PromptRequest.greetings for other languages.
GOOD_MORNING = {
    "en": "Good morning",
    "de": "Guten Morgen",
    "bn": "সুপ্রভাত",
    "id": "Selamat pagi",
    "zh": "早上好",
}

MAX_CONTEXT_ROUNDS = 5

SYSTEM_TEMPLATE = (
    "You are a professional translator. Translate the user's {src} sentence "
    "into {tgt}. Reply with the translation only, without any irrelevant content."
)

EXPLANATION_TEMPLATE = (
    "You are a professional translator. Translate the user's {src} sentence "
    "into {tgt}. Reply with the translation only, without any irrelevant "
    "content. Note that the sentence may contain a proverb; its explanation "
    "is: {explanation}"
)


class PromptTemplate(str, Enum):
    ZERO_SHOT = "zero_shot"
    ONE_SHOT = "one_shot"
    EXPLANATION = "explanation"
    DIALOGUE_CONTEXT = "dialogue_context"
    CONCAT_CONTEXT = "concat_context"


@dataclass(frozen=True)
class ChatTurn:
    role: str  # "system" | "user" | "assistant"
    content: str

    def __post_init__(self) -> None:
        if self.role not in ("system", "user", "assistant"):
            raise ValidationError(f"unknown chat role {self.role!r}")
        if self.role != "system" and not self.content:
            raise ValidationError(f"{self.role} turn with empty content")


@dataclass(frozen=True)
class PromptRequest:
    template: PromptTemplate
    source: str
    src_lang: str
    tgt_lang: str
    proverb_explanation: str | None = None
    context: ContextWindow | None = None
    greetings: dict | None = None  # overrides GOOD_MORNING

    def __post_init__(self) -> None:
        if self.template is PromptTemplate.EXPLANATION and not self.proverb_explanation:
            raise ValidationError("explanation template requires proverb_explanation")
        if self.template in (PromptTemplate.DIALOGUE_CONTEXT,
                             PromptTemplate.CONCAT_CONTEXT) and self.context is None:
            raise ValidationError(f"{self.template.value} template requires context")


def _lang_name(code: str) -> str:
    return LANGUAGE_NAMES.get(code, code)


def _system_turn(req: PromptRequest) -> ChatTurn:
    src, tgt = _lang_name(req.src_lang), _lang_name(req.tgt_lang)
    if req.template is PromptTemplate.EXPLANATION:
        content = EXPLANATION_TEMPLATE.format(
            src=src, tgt=tgt, explanation=req.proverb_explanation)
    else:
        content = SYSTEM_TEMPLATE.format(src=src, tgt=tgt)
    return ChatTurn("system", content)


def _greeting(req: PromptRequest, lang: str) -> str:
    table = req.greetings if req.greetings is not None else GOOD_MORNING
    if lang not in table:
        raise ValidationError(f"no one-shot greeting configured for {lang!r}")
    return table[lang]


def build_prompt(req: PromptRequest) -> list[ChatTurn]:
    """Render the request as an ordered chat transcript.

    The final turn is always a user turn carrying exactly the source sentence.
    Context templates use prior sentences only; dialogue context is capped at
    5 rounds, concatenation always forms a single round.
    """
    turns = [_system_turn(req)]
    if req.template is PromptTemplate.ONE_SHOT:
        turns.append(ChatTurn("user", _greeting(req, req.src_lang)))
        turns.append(ChatTurn("assistant", _greeting(req, req.tgt_lang)))
    elif req.template is PromptTemplate.DIALOGUE_CONTEXT:
        rounds = req.context.prior[-MAX_CONTEXT_ROUNDS:]
        for pair in rounds:
            turns.append(ChatTurn("user", pair.source))
            turns.append(ChatTurn("assistant", pair.target))
    elif req.template is PromptTemplate.CONCAT_CONTEXT:
        prior = req.context.prior
        if prior:
            turns.append(ChatTurn("user", "\n".join(p.source for p in prior)))
            turns.append(ChatTurn("assistant", "\n".join(p.target for p in prior)))
    turns.append(ChatTurn("user", req.source))
    return turns
