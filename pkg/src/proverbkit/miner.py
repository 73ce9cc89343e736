"""Phase-1 mining: locate sentence pairs whose source side contains a proverb.

Matching operates at character granularity over the space-joined lemmatized
tokens, so any replacement of characters reduces the score and exact
containment scores 1.0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .corpus import Corpus, MinedCandidate, ProverbEntry
from .errors import ValidationError
from .metrics import similarity_ratio
from .textnorm import IdentityLemmatizer, Lemmatizer, TokenSequence, lemmatize, tokenize

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.8


@dataclass(frozen=True)
class MiningConfig:
    threshold: float = DEFAULT_THRESHOLD
    scheme: str = "whitespace"
    lemmatizer: Lemmatizer = field(default_factory=IdentityLemmatizer)

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold <= 1.0:
            raise ValidationError(f"threshold {self.threshold} outside (0,1]")


def prepare(text: str, lang: str | None, config: MiningConfig) -> TokenSequence:
    """Tokenize and lemmatize one side of a match."""
    return lemmatize(tokenize(text, config.scheme, lang=lang),
                     config.lemmatizer, language=lang)


def window_bounds(proverb_len: int, sentence_len: int) -> tuple[int, int]:
    """Token-window length range searched: [ceil(|p|/2), min(2|p|, |s|)]."""
    return math.ceil(proverb_len / 2), min(2 * proverb_len, sentence_len)


def containment_score(proverb: TokenSequence, sentence: TokenSequence) -> float:
    """Best similarity between the proverb and any contiguous sentence window.

    Windows far shorter or longer than the proverb cannot reach a useful
    score, so only lengths within [ceil(|p|/2), 2|p|] are scanned.
    """
    if len(proverb) == 0:
        raise ValidationError("containment_score requires a non-empty proverb")
    if len(sentence) == 0:
        return 0.0
    target = proverb.joined
    lo, hi = window_bounds(len(proverb), len(sentence))
    best = 0.0
    for width in range(lo, hi + 1):
        for start in range(0, len(sentence) - width + 1):
            window = " ".join(sentence.tokens[start:start + width])
            best = max(best, similarity_ratio(target, window))
            if best == 1.0:
                return 1.0
    return best


def mine(corpus: Corpus, proverbs: list[ProverbEntry],
         config: MiningConfig = MiningConfig()) -> list[MinedCandidate]:
    """All (pair, proverb) matches with containment score >= threshold.

    Output is deterministic: sorted by (doc_id, line_idx, proverb_id). Every
    matching proverb is emitted per pair; downstream filtering deduplicates.
    """
    src_langs = corpus.src_langs()
    for proverb in proverbs:
        if src_langs and proverb.language not in src_langs:
            raise ValidationError(
                f"proverb {proverb.id!r} language {proverb.language!r} does not "
                f"match corpus source language(s) {sorted(src_langs)}")

    prepared = [(p, prepare(p.text, p.language, config)) for p in proverbs]
    candidates: list[MinedCandidate] = []
    for pair in corpus.pairs():
        sentence = prepare(pair.source, pair.src_lang, config)
        for proverb, proverb_seq in prepared:
            score = containment_score(proverb_seq, sentence)
            if score >= config.threshold:
                candidates.append(MinedCandidate(
                    pair=pair,
                    proverb_id=proverb.id,
                    match_score=score,
                    direction=(pair.src_lang, pair.tgt_lang),
                    phase="P1",
                ))
    candidates.sort(key=lambda c: (c.pair.doc_id, c.pair.line_idx, c.proverb_id))
    logger.info("mined %d candidates from %d pairs x %d proverbs",
                len(candidates), len(corpus), len(proverbs))
    return candidates
