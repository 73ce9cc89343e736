"""Prefix-completion contamination probes and the gain ratio report.

Each probe truncates a sentence at a word proportion tau, asks a completion
model to continue the prefix with and without preceding context, and measures
the context-conditioned gain in LCS overlap with the held-out suffix,
normalized by suffix length and clamped at zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from .errors import DataError, ValidationError
from .metrics import lcs_len
from .modelclient import ModelClient

logger = logging.getLogger(__name__)

LCS_UNITS = ("token", "character")
DEFAULT_TAU = 0.5
DEFAULT_CUTOFF = 0.9


@dataclass(frozen=True)
class ProbeSample:
    language: str
    context: str
    sentence: str
    tau: float
    prefix: str = ""
    suffix: str = ""
    completion_with_ctx: str = ""
    completion_no_ctx: str = ""
    gamma: float | None = None


def split_prefix(sentence: str, tau: float) -> tuple[str, str]:
    """Split at max(1, floor(tau * n)) words; both sides stay non-empty."""
    if not 0.0 < tau < 1.0:
        raise ValidationError(f"tau {tau} outside (0,1)")
    words = sentence.split()
    if len(words) < 2:
        raise DataError(f"cannot split a {len(words)}-token sentence")
    cut = max(1, int(tau * len(words)))
    return " ".join(words[:cut]), " ".join(words[cut:])


def build_probe_inputs(context: str, prefix: str) -> tuple[str, str]:
    """(with-context input, without-context input); whitespace-only context is empty."""
    context = context.strip()
    with_ctx = f"{context}\n{prefix}" if context else prefix
    return with_ctx, prefix


def _units(text: str, lcs_unit: str) -> list[str]:
    if lcs_unit == "token":
        return text.split()
    return list(text)


def gamma(sample: ProbeSample, lcs_unit: str = "token") -> float:
    """Clamped LCS gain: max(0, (lcs_with_ctx - lcs_no_ctx) / |suffix|)."""
    if lcs_unit not in LCS_UNITS:
        raise ValidationError(f"unknown lcs unit {lcs_unit!r}")
    suffix = _units(sample.suffix, lcs_unit)
    if not suffix:
        raise DataError("gamma is undefined for an empty suffix")
    with_ctx = lcs_len(_units(sample.completion_with_ctx, lcs_unit), suffix)
    no_ctx = lcs_len(_units(sample.completion_no_ctx, lcs_unit), suffix)
    return max(0.0, (with_ctx - no_ctx) / len(suffix))


def run_probe(sample: ProbeSample, client: ModelClient,
              lcs_unit: str = "token") -> ProbeSample:
    """Split, complete both prompt forms, and attach the gain ratio."""
    prefix, suffix = split_prefix(sample.sentence, sample.tau)
    with_ctx_input, no_ctx_input = build_probe_inputs(sample.context, prefix)
    max_tokens = 2 * len(suffix.split())  # bound completion cost
    completed = replace(
        sample,
        prefix=prefix,
        suffix=suffix,
        completion_with_ctx=client.complete(with_ctx_input, max_tokens=max_tokens),
        completion_no_ctx=client.complete(no_ctx_input, max_tokens=max_tokens),
    )
    return replace(completed, gamma=gamma(completed, lcs_unit))


def run_probes(samples: list[ProbeSample], client: ModelClient,
               lcs_unit: str = "token") -> list[ProbeSample]:
    return client.map_concurrent(lambda s: run_probe(s, client, lcs_unit), samples)


def contamination_report(samples: list[ProbeSample],
                         cutoff: float = DEFAULT_CUTOFF) -> dict[str, float]:
    """Per-language percentage of samples with gamma strictly above the cutoff."""
    groups: dict[str, list[ProbeSample]] = {}
    for sample in samples:
        groups.setdefault(sample.language, []).append(sample)
    report: dict[str, float] = {}
    for language in sorted(groups):
        group = [s for s in groups[language] if s.gamma is not None]
        if not group:
            logger.warning("language %s has no scored probes; omitted", language)
            continue
        hits = sum(1 for s in group if s.gamma > cutoff)
        report[language] = round(100.0 * hits / len(group), 1)
    return report
