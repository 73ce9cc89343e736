"""Tokenization and pluggable lemmatization applied before fuzzy matching."""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError, ValidationError

SCHEMES = ("whitespace", "intl")

# Chinese subtitles usually carry no spaces; fall back to characters so the
# matcher sees sub-sentence granularity.
_ZH_CHAR_FALLBACK_MIN_LEN = 5


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        if any(not t for t in self.tokens):
            raise ValidationError("TokenSequence may not contain empty tokens")

    @property
    def joined(self) -> str:
        return " ".join(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _is_symbol(ch: str) -> bool:
    return unicodedata.category(ch).startswith("S")


def _is_number(ch: str) -> bool:
    return unicodedata.category(ch).startswith("N")


def _intl_split(text: str) -> list[str]:
    # mteval-international style: isolate punctuation unless glued to digits
    # ("1,000" stays together), always isolate symbols.
    out: list[str] = []
    for i, ch in enumerate(text):
        if _is_symbol(ch):
            out.append(f" {ch} ")
        elif _is_punct(ch):
            prev_num = i > 0 and _is_number(text[i - 1])
            next_num = i + 1 < len(text) and _is_number(text[i + 1])
            out.append(("" if prev_num else " ") + ch + ("" if next_num else " "))
        else:
            out.append(ch)
    return "".join(out).split()


def tokenize(text: str, scheme: str = "whitespace", lang: str | None = None) -> TokenSequence:
    """Split ``text`` into tokens.

    ``whitespace`` splits on Unicode whitespace; ``intl`` additionally isolates
    punctuation and symbols. For ``lang="zh"`` a whitespace split that yields a
    single long token falls back to character tokens.
    """
    if scheme not in SCHEMES:
        raise ValidationError(f"unknown tokenization scheme {scheme!r}")
    if scheme == "intl":
        tokens = _intl_split(text)
    else:
        tokens = text.split()
        if (lang == "zh" and len(tokens) == 1
                and len(tokens[0]) >= _ZH_CHAR_FALLBACK_MIN_LEN):
            tokens = list(tokens[0])
    return TokenSequence(tuple(tokens))


class Lemmatizer:
    """Interface: maps surface tokens of a supported language to lemmas."""

    def supports(self, language: str) -> bool:
        raise NotImplementedError

    def lemma(self, token: str) -> str:
        raise NotImplementedError


class IdentityLemmatizer(Lemmatizer):
    """Default lemmatizer: lowercase only, supports every language."""

    def supports(self, language: str) -> bool:
        return True

    def lemma(self, token: str) -> str:
        return token.lower()


class RuleTableLemmatizer(Lemmatizer):
    """Lemmatizer backed by a ``surface<TAB>lemma`` dictionary file."""

    def __init__(self, table: dict[str, str], languages: tuple[str, ...]):
        self._languages = set(languages)
        # Resolve chains (a->b, b->c) to a fixed point so lemmatization is
        # idempotent; cycles keep the first target.
        resolved: dict[str, str] = {}
        for surface in table:
            target = table[surface]
            seen = {surface}
            while target in table and target not in seen:
                seen.add(target)
                target = table[target]
            resolved[surface] = target
        self._table = {k.lower(): v.lower() for k, v in resolved.items()}

    @classmethod
    def from_file(cls, path: str | Path, languages: tuple[str, ...]) -> "RuleTableLemmatizer":
        table: dict[str, str] = {}
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or not parts[0] or not parts[1]:
                    raise DataError(f"{path}:{lineno}: expected 'surface<TAB>lemma'")
                table[parts[0]] = parts[1]
        return cls(table, languages)

    def supports(self, language: str) -> bool:
        return language in self._languages

    def lemma(self, token: str) -> str:
        low = token.lower()
        return self._table.get(low, low)


def lemmatize(seq: TokenSequence, lemmatizer: Lemmatizer,
              language: str | None = None) -> TokenSequence:
    """Replace each token by its lowercased lemma; token count is preserved."""
    if language is not None and not lemmatizer.supports(language):
        raise ValidationError(f"lemmatizer does not support language {language!r}")
    return TokenSequence(tuple(lemmatizer.lemma(t) for t in seq.tokens))
