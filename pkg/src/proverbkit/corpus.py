"""Domain types for proverbs, bitexts and mined candidates, plus JSONL persistence.

Storage is line-delimited JSON (one record per line, UTF-8) so large subtitle
corpora can be streamed. Text fields are stored verbatim; normalization happens
in a separate, explicit stage.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DataError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_LANGUAGES = ("bn", "de", "en", "id", "zh")


@dataclass(frozen=True)
class ProverbEntry:
    """One proverb with its explanation and figurative/literal label."""

    id: str
    text: str
    language: str
    explanation: str = ""
    figurative: bool = False
    equivalents: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise DataError(f"proverb {self.id!r}: empty text")


@dataclass(frozen=True, order=True)
class SentencePair:
    """One aligned subtitle line; (doc_id, line_idx) is the ordering key."""

    doc_id: str
    line_idx: int
    source: str
    target: str
    src_lang: str
    tgt_lang: str

    def __post_init__(self) -> None:
        if self.line_idx < 0:
            raise DataError(f"{self.doc_id}: negative line_idx {self.line_idx}")


PHASES = ("P1", "P2", "P3")


@dataclass(frozen=True)
class MinedCandidate:
    """A sentence pair matched to a proverb during mining."""

    pair: SentencePair
    proverb_id: str
    match_score: float
    direction: tuple[str, str]
    phase: str = "P1"

    def __post_init__(self) -> None:
        if self.phase not in PHASES:
            raise ValidationError(f"unknown phase {self.phase!r}")
        if not 0.0 <= self.match_score <= 1.0:
            raise ValidationError(f"match_score {self.match_score} outside [0,1]")

    def advanced(self, phase: str) -> "MinedCandidate":
        """Return a copy moved to a later phase; phases only move forward."""
        if PHASES.index(phase) < PHASES.index(self.phase):
            raise ValidationError(f"cannot move phase {self.phase} back to {phase}")
        return MinedCandidate(self.pair, self.proverb_id, self.match_score,
                              self.direction, phase)


@dataclass(frozen=True)
class ScoredCandidate:
    """A mined candidate with its quality-estimation scores attached."""

    candidate: MinedCandidate
    llm_qe: float
    da_qe: float
    overall: float

    def __post_init__(self) -> None:
        if not 1.0 <= self.llm_qe <= 5.0:
            raise ValidationError(f"llm_qe {self.llm_qe} outside [1,5]")
        if not 0.0 <= self.da_qe <= 1.0:
            raise ValidationError(f"da_qe {self.da_qe} outside [0,1]")


@dataclass(frozen=True)
class ContextWindow:
    """Up to N prior and N following lines around a focal pair, same document."""

    prior: tuple[SentencePair, ...]
    following: tuple[SentencePair, ...]


class Corpus:
    """Immutable collection of sentence pairs grouped by document.

    Safe to share across threads once constructed.
    """

    def __init__(self, pairs: Iterable[SentencePair]):
        docs: dict[str, list[SentencePair]] = {}
        index: dict[tuple[str, int], SentencePair] = {}
        for pair in pairs:
            key = (pair.doc_id, pair.line_idx)
            if key in index:
                raise DataError(f"duplicate (doc_id, line_idx) key {key}")
            index[key] = pair
            docs.setdefault(pair.doc_id, []).append(pair)
        for doc in docs.values():
            doc.sort(key=lambda p: p.line_idx)
        self._docs = {k: tuple(v) for k, v in sorted(docs.items())}
        self._index = index

    def __len__(self) -> int:
        return len(self._index)

    def doc_ids(self) -> tuple[str, ...]:
        return tuple(self._docs)

    def document(self, doc_id: str) -> tuple[SentencePair, ...]:
        return self._docs[doc_id]

    def pairs(self) -> Iterator[SentencePair]:
        """All pairs, sorted by (doc_id, line_idx)."""
        for doc in self._docs.values():
            yield from doc

    def src_langs(self) -> set[str]:
        return {p.src_lang for p in self.pairs()}

    def get(self, doc_id: str, line_idx: int) -> SentencePair | None:
        return self._index.get((doc_id, line_idx))

    def retrieve_context(self, focal: SentencePair, max_each: int = 5) -> ContextWindow:
        """Up to ``max_each`` prior and following lines of the focal pair's document."""
        if max_each < 0:
            raise ValidationError(f"max_each must be >= 0, got {max_each}")
        if self.get(focal.doc_id, focal.line_idx) != focal:
            raise DataError(f"focal pair ({focal.doc_id}, {focal.line_idx}) not in corpus")
        doc = self._docs[focal.doc_id]
        pos = next(i for i, p in enumerate(doc) if p.line_idx == focal.line_idx)
        prior = doc[max(0, pos - max_each):pos]
        following = doc[pos + 1:pos + 1 + max_each]
        return ContextWindow(prior=prior, following=following)


def retrieve_context(corpus: Corpus, focal: SentencePair, max_each: int = 5) -> ContextWindow:
    return corpus.retrieve_context(focal, max_each)


# ---------------------------------------------------------------------------
# JSONL record conversion

def _require(record: dict, keys: Iterable[str], where: str) -> None:
    missing = [k for k in keys if k not in record]
    if missing:
        raise DataError(f"{where}: missing field(s) {', '.join(missing)}")


def proverb_to_record(entry: ProverbEntry) -> dict:
    return {
        "id": entry.id,
        "text": entry.text,
        "language": entry.language,
        "explanation": entry.explanation,
        "figurative": entry.figurative,
        "equivalents": list(entry.equivalents),
    }


def proverb_from_record(record: dict, where: str = "record") -> ProverbEntry:
    _require(record, ("id", "text", "language"), where)
    return ProverbEntry(
        id=str(record["id"]),
        text=str(record["text"]),
        language=str(record["language"]),
        explanation=str(record.get("explanation", "")),
        figurative=bool(record.get("figurative", False)),
        equivalents=tuple(record.get("equivalents", ())),
    )


def pair_to_record(pair: SentencePair) -> dict:
    return {
        "doc_id": pair.doc_id,
        "line_idx": pair.line_idx,
        "source": pair.source,
        "target": pair.target,
        "src_lang": pair.src_lang,
        "tgt_lang": pair.tgt_lang,
    }


def pair_from_record(record: dict, where: str = "record") -> SentencePair:
    _require(record, ("doc_id", "line_idx", "source", "target"), where)
    line_idx = record["line_idx"]
    if not isinstance(line_idx, int) or isinstance(line_idx, bool):
        raise DataError(f"{where}: line_idx {line_idx!r} is not an integer")
    return SentencePair(
        doc_id=str(record["doc_id"]),
        line_idx=line_idx,
        source=str(record["source"]),
        target=str(record["target"]),
        src_lang=str(record.get("src_lang", "")),
        tgt_lang=str(record.get("tgt_lang", "")),
    )


def candidate_to_record(cand: MinedCandidate) -> dict:
    record = pair_to_record(cand.pair)
    record.update({
        "proverb_id": cand.proverb_id,
        "match_score": cand.match_score,
        "phase": cand.phase,
    })
    return record


def candidate_from_record(record: dict, where: str = "record") -> MinedCandidate:
    _require(record, ("proverb_id", "match_score"), where)
    pair = pair_from_record(record, where)
    return MinedCandidate(
        pair=pair,
        proverb_id=str(record["proverb_id"]),
        match_score=float(record["match_score"]),
        direction=(pair.src_lang, pair.tgt_lang),
        phase=str(record.get("phase", "P1")),
    )


def scored_to_record(scored: ScoredCandidate) -> dict:
    record = candidate_to_record(scored.candidate)
    record.update({
        "llm_qe": scored.llm_qe,
        "da_qe": scored.da_qe,
        "overall": scored.overall,
    })
    return record


def scored_from_record(record: dict, where: str = "record") -> ScoredCandidate:
    _require(record, ("llm_qe", "da_qe", "overall"), where)
    return ScoredCandidate(
        candidate=candidate_from_record(record, where),
        llm_qe=float(record["llm_qe"]),
        da_qe=float(record["da_qe"]),
        overall=float(record["overall"]),
    )


# ---------------------------------------------------------------------------
# File I/O

def read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (1-based line number, parsed record) pairs; blank lines skipped."""
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise DataError(f"{path}:{lineno}: record is not an object")
            yield lineno, record


def write_jsonl(path: str | Path, records: Iterable[dict]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
            count += 1
    return count


def load_proverbs(path: str | Path,
                  languages: Iterable[str] = DEFAULT_LANGUAGES) -> list[ProverbEntry]:
    """Load proverb entries, rejecting malformed records and duplicate ids."""
    allowed = set(languages)
    entries: list[ProverbEntry] = []
    seen: dict[str, int] = {}
    for lineno, record in read_jsonl(path):
        try:
            entry = proverb_from_record(record, where=f"{path}:{lineno}")
        except DataError:
            raise
        except (TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        if entry.language not in allowed:
            raise DataError(f"{path}:{lineno}: language {entry.language!r} "
                            f"not in configured set {sorted(allowed)}")
        if entry.id in seen:
            raise DataError(f"{path}:{lineno}: duplicate proverb id {entry.id!r} "
                            f"(first seen at line {seen[entry.id]})")
        seen[entry.id] = lineno
        entries.append(entry)
    logger.info("loaded %d proverbs from %s", len(entries), path)
    return entries


def load_bitext(path: str | Path) -> Corpus:
    """Load a bitext corpus; duplicate (doc_id, line_idx) keys are rejected."""
    pairs: list[SentencePair] = []
    seen: dict[tuple[str, int], int] = {}
    for lineno, record in read_jsonl(path):
        pair = pair_from_record(record, where=f"{path}:{lineno}")
        key = (pair.doc_id, pair.line_idx)
        if key in seen:
            raise DataError(f"{path}:{lineno}: duplicate key {key} "
                            f"(first seen at line {seen[key]})")
        seen[key] = lineno
        pairs.append(pair)
    logger.info("loaded %d sentence pairs (%d docs) from %s",
                len(pairs), len({p.doc_id for p in pairs}), path)
    return Corpus(pairs)


def save_bitext(corpus: Corpus, path: str | Path) -> int:
    return write_jsonl(path, (pair_to_record(p) for p in corpus.pairs()))
