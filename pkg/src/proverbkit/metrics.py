"""Deterministic string metrics: similarity ratio, LCS, sentence BLEU, chrF++.

All metric values are reported to two decimal places with round-half-even.
BLEU follows the widely used sentence-level defaults (4-gram, NIST exponential
smoothing of zero counts, punctuation-isolating tokenization, brevity
penalty); chrF++ uses character order 6, word order 2 and beta = 2.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import ValidationError
from .textnorm import TokenSequence, tokenize

BLEU = "BLEU"
CHRFPP = "CHRFPP"
COMET_EXTERNAL = "COMET-external"


@dataclass(frozen=True)
class MetricScore:
    name: str
    value: float
    scale: tuple[float, float] = (0.0, 100.0)

    def __post_init__(self) -> None:
        lo, hi = self.scale
        if not lo <= self.value <= hi:
            raise ValidationError(f"{self.name} value {self.value} outside [{lo},{hi}]")


def _as_text(x: TokenSequence | str) -> str:
    return x.joined if isinstance(x, TokenSequence) else x


# ---------------------------------------------------------------------------
# Ratcliff/Obershelp similarity

def _longest_match(a: str, b: str, alo: int, ahi: int, blo: int, bhi: int
                   ) -> tuple[int, int, int]:
    """First longest matching block, ties broken on (start in a, start in b)."""
    b_positions: dict[str, list[int]] = {}
    for j in range(blo, bhi):
        b_positions.setdefault(b[j], []).append(j)
    besti, bestj, bestsize = alo, blo, 0
    j2len: dict[int, int] = {}
    for i in range(alo, ahi):
        newj2len: dict[int, int] = {}
        for j in b_positions.get(a[i], ()):
            k = j2len.get(j - 1, 0) + 1
            newj2len[j] = k
            if k > bestsize:
                besti, bestj, bestsize = i - k + 1, j - k + 1, k
        j2len = newj2len
    return besti, bestj, bestsize


def _matched_total(a: str, b: str, alo: int, ahi: int, blo: int, bhi: int) -> int:
    i, j, size = _longest_match(a, b, alo, ahi, blo, bhi)
    if size == 0:
        return 0
    return (size
            + _matched_total(a, b, alo, i, blo, j)
            + _matched_total(a, b, i + size, ahi, j + size, bhi))


def similarity_ratio(a: TokenSequence | str, b: TokenSequence | str) -> float:
    """Ratcliff/Obershelp ratio 2*M / (|a|+|b|) over recursively matched blocks.

    Arguments are ordered canonically before matching so the score is
    symmetric; two empty strings score 1.0 by convention.
    """
    sa, sb = _as_text(a), _as_text(b)
    if not sa and not sb:
        return 1.0
    if (len(sa), sa) > (len(sb), sb):
        sa, sb = sb, sa
    matched = _matched_total(sa, sb, 0, len(sa), 0, len(sb))
    return 2.0 * matched / (len(sa) + len(sb))


# ---------------------------------------------------------------------------
# Longest common subsequence

def lcs_len(a: Sequence, b: Sequence) -> int:
    """Length of the longest common subsequence (standard dynamic program)."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            curr.append(prev[j - 1] + 1 if x == y else max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


# ---------------------------------------------------------------------------
# Sentence BLEU

@dataclass(frozen=True)
class BleuConfig:
    max_order: int = 4
    smoothing: str = "exp"          # "exp" | "floor" | "none"
    floor_value: float = 0.1
    scheme: str = "intl"

    def __post_init__(self) -> None:
        if self.max_order < 1:
            raise ValidationError("max_order must be >= 1")
        if self.smoothing not in ("exp", "floor", "none"):
            raise ValidationError(f"unknown smoothing {self.smoothing!r}")


def _ngram_counts(tokens: tuple[str, ...], n: int) -> Counter:
    return Counter(tokens[i:i + n] for i in range(len(tokens) - n + 1))


def sentence_bleu(hyp: str, ref: str, config: BleuConfig = BleuConfig()) -> MetricScore:
    """Sentence BLEU in [0, 100]; 100.00 iff tokenized hyp equals tokenized ref."""
    ref_tokens = tokenize(ref, config.scheme).tokens
    if not ref_tokens:
        raise ValidationError("BLEU is undefined for an empty reference")
    hyp_tokens = tokenize(hyp, config.scheme).tokens
    if not hyp_tokens:
        return MetricScore(BLEU, 0.0)

    log_sum = 0.0
    effective_order = 0
    smooth_scale = 1.0
    for n in range(1, config.max_order + 1):
        total = len(hyp_tokens) - n + 1
        if total <= 0:
            break
        effective_order += 1
        hyp_counts = _ngram_counts(hyp_tokens, n)
        ref_counts = _ngram_counts(ref_tokens, n)
        correct = sum((hyp_counts & ref_counts).values())
        if correct == 0:
            if config.smoothing == "exp":
                smooth_scale *= 2.0
                precision = 1.0 / (smooth_scale * total)
            elif config.smoothing == "floor":
                precision = config.floor_value / total
            else:
                return MetricScore(BLEU, 0.0)
        else:
            precision = correct / total
        log_sum += math.log(precision)

    brevity = 1.0
    if len(hyp_tokens) < len(ref_tokens):
        brevity = math.exp(1.0 - len(ref_tokens) / len(hyp_tokens))
    score = 100.0 * brevity * math.exp(log_sum / effective_order)
    return MetricScore(BLEU, round(score, 2))


# ---------------------------------------------------------------------------
# chrF++

@dataclass(frozen=True)
class ChrfConfig:
    char_order: int = 6
    word_order: int = 2
    beta: float = 2.0

    def __post_init__(self) -> None:
        if self.char_order < 1 or self.word_order < 0:
            raise ValidationError("bad chrF orders")


def _split_off_punct(word: str) -> list[str]:
    # chrF++ word tokens: peel one leading or trailing punctuation character.
    if len(word) > 1:
        if unicodedata.category(word[-1]).startswith("P"):
            return [word[:-1], word[-1]]
        if unicodedata.category(word[0]).startswith("P"):
            return [word[0], word[1:]]
    return [word]


def _chrf_words(text: str) -> tuple[str, ...]:
    out: list[str] = []
    for word in text.split():
        out.extend(_split_off_punct(word))
    return tuple(out)


def chrf_pp(hyp: str, ref: str, config: ChrfConfig = ChrfConfig()) -> MetricScore:
    """chrF++ in [0, 100]; 100.00 iff hyp == ref after whitespace normalization."""
    if not ref.strip():
        raise ValidationError("chrF++ is undefined for an empty reference")
    if not hyp.strip():
        return MetricScore(CHRFPP, 0.0)

    hyp_chars = tuple("".join(hyp.split()))
    ref_chars = tuple("".join(ref.split()))
    hyp_words = _chrf_words(hyp)
    ref_words = _chrf_words(ref)

    grams: list[tuple[tuple, tuple, int]] = []
    for n in range(1, config.char_order + 1):
        grams.append((hyp_chars, ref_chars, n))
    for n in range(1, config.word_order + 1):
        grams.append((hyp_words, ref_words, n))

    factor = config.beta ** 2
    f_sum = 0.0
    orders = 0
    for hyp_seq, ref_seq, n in grams:
        hyp_counts = _ngram_counts(hyp_seq, n)
        ref_counts = _ngram_counts(ref_seq, n)
        n_hyp = sum(hyp_counts.values())
        n_ref = sum(ref_counts.values())
        if n_hyp == 0 and n_ref == 0:
            continue
        orders += 1
        match = sum((hyp_counts & ref_counts).values())
        if match == 0:
            continue
        precision = match / n_hyp
        recall = match / n_ref
        f_sum += (1 + factor) * precision * recall / (factor * precision + recall)
    if orders == 0:
        return MetricScore(CHRFPP, 0.0)
    return MetricScore(CHRFPP, round(100.0 * f_sum / orders, 2))
