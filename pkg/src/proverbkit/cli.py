"""Subcommand front-end and pipeline orchestration.

Every subcommand writes a manifest next to its outputs recording the
parameters, seeds and tool version needed to replay the run. Exit codes:
0 success, 2 validation error, 3 external-model failure, 4 data error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .contamination import (DEFAULT_CUTOFF, DEFAULT_TAU, ProbeSample,
                            contamination_report, run_probes)
from .corpus import (DEFAULT_LANGUAGES, candidate_from_record,
                     candidate_to_record, load_bitext, load_proverbs,
                     pair_to_record, read_jsonl, scored_from_record,
                     scored_to_record, write_jsonl)
from .errors import DataError, ModelError, ValidationError
from .filterpipe import FilterConfig, filter_direction, quantile_threshold, score_candidates
from .judge import (JudgeItem, judge_items, tally_winrates,
                    tally_winrates_excluding_ties)
from .metrics import chrf_pp, sentence_bleu
from .miner import DEFAULT_THRESHOLD, MiningConfig, mine
from .modelclient import ModelClient, ModelClientConfig
from .prompts import MAX_CONTEXT_ROUNDS, ChatTurn, PromptRequest, PromptTemplate, build_prompt
from .sensitivity import (HypothesisRecord, SensitivityConfig, cosine,
                          count_by_system, count_unique_pairs,
                          find_unstable_pairs)
from .textnorm import RuleTableLemmatizer

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_MODEL = 3
EXIT_DATA = 4


# ---------------------------------------------------------------------------
# Manifests

def _utcnow() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def write_manifest(out_path: str | Path, command: str, parameters: dict,
                   seeds: dict | None = None, started_at: str | None = None) -> Path:
    payload = json.dumps(parameters, sort_keys=True, ensure_ascii=False)
    manifest = {
        "command": command,
        "tool_version": __version__,
        "config_digest": hashlib.sha256(payload.encode("utf-8")).hexdigest(),
        "parameters": parameters,
        "seeds": seeds or {},
        "started_at": started_at or _utcnow(),
        "finished_at": _utcnow(),
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, ensure_ascii=False, indent=2) + "\n",
                    encoding="utf-8")
    return path


def _require_file(path: str | Path, what: str) -> Path:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"{what} file not found: {path}")
    return path


def _client_from_args(args, temperature: float = 0.0) -> ModelClient:
    config = ModelClientConfig(
        endpoint=args.endpoint,
        model_name=args.model,
        temperature=temperature,
        max_in_flight=args.max_in_flight,
        cache_dir=args.cache_dir,
    )
    return ModelClient(config)


def _add_model_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--endpoint", default="mock:",
                        help="model endpoint URL, or mock:[fixtures.jsonl] for "
                             "the bundled deterministic mock (default: mock:)")
    parser.add_argument("--model", default="default", help="model name")
    parser.add_argument("--cache-dir", default=None,
                        help="response cache directory (replay-identical runs)")
    parser.add_argument("--max-in-flight", type=int, default=4,
                        help="bounded concurrent model calls (default: 4)")


def _write_json(path: str | Path, obj: dict) -> None:
    Path(path).write_text(json.dumps(obj, ensure_ascii=False, indent=2) + "\n",
                          encoding="utf-8")


def _read_json(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc.msg})") from exc


# ---------------------------------------------------------------------------
# Subcommands

def cmd_mine(args) -> int:
    started = _utcnow()
    bitext = _require_file(args.bitext, "bitext")
    proverb_path = _require_file(args.proverbs, "proverbs")
    lemmatizer = None
    if args.lemma_table:
        lemmatizer = RuleTableLemmatizer.from_file(
            _require_file(args.lemma_table, "lemma table"),
            languages=DEFAULT_LANGUAGES)
    config = MiningConfig(threshold=args.threshold, scheme=args.scheme,
                          **({"lemmatizer": lemmatizer} if lemmatizer else {}))
    corpus = load_bitext(bitext)
    proverbs = load_proverbs(proverb_path)
    candidates = mine(corpus, proverbs, config)
    write_jsonl(args.out, (candidate_to_record(c) for c in candidates))
    write_manifest(args.out, "mine", {
        "bitext": str(bitext), "proverbs": str(proverb_path),
        "threshold": args.threshold, "scheme": args.scheme,
        "lemma_table": args.lemma_table,
        "match_granularity": "character",
    }, started_at=started)
    print(f"mine: {len(candidates)} candidates -> {args.out}")
    return EXIT_OK


def _load_candidates(path: str | Path) -> list:
    return [candidate_from_record(rec, where=f"{path}:{lineno}")
            for lineno, rec in read_jsonl(path)]


def _load_scored(path: str | Path) -> list:
    return [scored_from_record(rec, where=f"{path}:{lineno}")
            for lineno, rec in read_jsonl(path)]


def cmd_filter(args) -> int:
    started = _utcnow()
    candidates = _load_candidates(_require_file(args.candidates, "candidates"))
    proverbs = load_proverbs(_require_file(args.proverbs, "proverbs"))
    config = FilterConfig(max_per_direction=args.max_per_direction,
                          min_score=args.min_score, qe_weight=args.qe_weight)
    client = _client_from_args(args, temperature=0.0)
    scored = score_candidates(candidates, proverbs, client, config)

    by_direction: dict[tuple[str, str], list] = {}
    for s in scored:
        by_direction.setdefault(s.candidate.direction, []).append(s)
    p1_by_direction: dict[tuple[str, str], int] = {}
    for c in candidates:
        p1_by_direction[c.direction] = p1_by_direction.get(c.direction, 0) + 1

    kept = []
    directions_report = {}
    for direction in sorted(by_direction):
        group = by_direction[direction]
        scores = [s.overall for s in group]
        threshold = quantile_threshold(scores, config)
        q_min = max(0.0, 1.0 - config.max_per_direction / len(scores))
        surviving = filter_direction(group, config)
        kept.extend(surviving)
        directions_report["->".join(direction)] = {
            "p1": p1_by_direction.get(direction, 0),
            "scored": len(group),
            "p2": len(surviving),
            "q_min": round(q_min, 6),
            "threshold": round(threshold, 6),
        }
    write_jsonl(args.out, (scored_to_record(s) for s in kept))
    report = {
        "tool_version": __version__,
        "max_per_direction": config.max_per_direction,
        "min_score": config.min_score,
        "qe_weight": config.qe_weight,
        "directions": directions_report,
    }
    _write_json(args.report, report)
    write_manifest(args.out, "filter", {
        "candidates": str(args.candidates), "proverbs": str(args.proverbs),
        "endpoint": args.endpoint, "model": args.model,
        "max_per_direction": config.max_per_direction,
        "min_score": config.min_score, "qe_weight": config.qe_weight,
        "temperature": 0.0, "quantile_method": "nearest-rank",
    }, started_at=started)
    print(f"filter: kept {len(kept)}/{len(candidates)} -> {args.out}")
    return EXIT_OK


def cmd_context(args) -> int:
    started = _utcnow()
    corpus = load_bitext(_require_file(args.bitext, "bitext"))
    path = _require_file(args.candidates, "candidates")
    rows = []
    for lineno, record in read_jsonl(path):
        cand = (scored_from_record(record, where=f"{path}:{lineno}")
                if "overall" in record
                else candidate_from_record(record, where=f"{path}:{lineno}")
                )
        cand = getattr(cand, "candidate", cand)
        focal = corpus.get(cand.pair.doc_id, cand.pair.line_idx)
        if focal is None:
            raise DataError(f"{path}:{lineno}: candidate pair not in bitext")
        window = corpus.retrieve_context(focal, max_each=args.max_each)
        rows.append({
            "doc_id": cand.pair.doc_id,
            "line_idx": cand.pair.line_idx,
            "proverb_id": cand.proverb_id,
            "prior": [pair_to_record(p) for p in window.prior],
            "following": [pair_to_record(p) for p in window.following],
        })
    write_jsonl(args.out, rows)
    write_manifest(args.out, "context", {
        "candidates": str(args.candidates), "bitext": str(args.bitext),
        "max_each": args.max_each,
    }, started_at=started)
    print(f"context: {len(rows)} windows -> {args.out}")
    return EXIT_OK


def _context_windows_by_key(path: str | Path) -> dict:
    from .corpus import ContextWindow, pair_from_record
    windows = {}
    for lineno, record in read_jsonl(path):
        key = (record["doc_id"], record["line_idx"], record.get("proverb_id"))
        windows[key] = ContextWindow(
            prior=tuple(pair_from_record(r) for r in record.get("prior", ())),
            following=tuple(pair_from_record(r) for r in record.get("following", ())),
        )
    return windows


def cmd_prompt(args) -> int:
    started = _utcnow()
    path = _require_file(args.candidates, "candidates")
    proverbs = {p.id: p for p in load_proverbs(_require_file(args.proverbs, "proverbs"))}
    template = PromptTemplate(args.template)
    windows = {}
    if args.context:
        windows = _context_windows_by_key(_require_file(args.context, "context"))
    rows = []
    for lineno, record in read_jsonl(path):
        cand = (scored_from_record(record, where=f"{path}:{lineno}")
                if "overall" in record
                else candidate_from_record(record, where=f"{path}:{lineno}"))
        cand = getattr(cand, "candidate", cand)
        proverb = proverbs.get(cand.proverb_id)
        if proverb is None:
            raise DataError(f"{path}:{lineno}: unknown proverb id {cand.proverb_id!r}")
        window = windows.get((cand.pair.doc_id, cand.pair.line_idx, cand.proverb_id))
        request = PromptRequest(
            template=template,
            source=cand.pair.source,
            src_lang=cand.pair.src_lang,
            tgt_lang=cand.pair.tgt_lang,
            proverb_explanation=proverb.explanation or proverb.text,
            context=window,
        )
        turns = build_prompt(request)
        rows.append({
            "doc_id": cand.pair.doc_id,
            "line_idx": cand.pair.line_idx,
            "proverb_id": cand.proverb_id,
            "template": template.value,
            "reference": cand.pair.target,
            "transcript": [{"role": t.role, "content": t.content} for t in turns],
        })
    write_jsonl(args.out, rows)
    write_manifest(args.out, "prompt", {
        "candidates": str(args.candidates), "proverbs": str(args.proverbs),
        "context": args.context, "template": template.value,
        "max_context_rounds": MAX_CONTEXT_ROUNDS,
    }, started_at=started)
    print(f"prompt: {len(rows)} transcripts -> {args.out}")
    return EXIT_OK


def cmd_score(args) -> int:
    started = _utcnow()
    path = _require_file(args.hypotheses, "hypotheses")
    client = None
    rows = []
    for lineno, record in read_jsonl(path):
        where = f"{path}:{lineno}"
        if "transcript" in record:  # prompt-stage output: translate first
            if client is None:
                client = _client_from_args(args)
            transcript = [ChatTurn(t["role"], t["content"])
                          for t in record["transcript"]]
            hypothesis = client.chat(transcript)
            reference = record.get("reference", "")
        else:
            if "hypothesis" not in record or "reference" not in record:
                raise DataError(f"{where}: need 'hypothesis' and 'reference'")
            hypothesis = record["hypothesis"]
            reference = record["reference"]
        if not str(reference).strip():
            raise DataError(f"{where}: empty reference")
        row = {k: record[k] for k in ("doc_id", "line_idx", "proverb_id", "template")
               if k in record}
        row.update({
            "hypothesis": hypothesis,
            "reference": reference,
            "bleu": sentence_bleu(hypothesis, reference).value,
            "chrf_pp": chrf_pp(hypothesis, reference).value,
        })
        rows.append(row)
    write_jsonl(args.out, rows)
    write_manifest(args.out, "score", {
        "hypotheses": str(args.hypotheses), "endpoint": args.endpoint,
        "model": args.model,
    }, started_at=started)
    print(f"score: {len(rows)} rows -> {args.out}")
    return EXIT_OK


def cmd_contaminate(args) -> int:
    started = _utcnow()
    path = _require_file(args.samples, "samples")
    samples = []
    for lineno, record in read_jsonl(path):
        for key in ("language", "sentence"):
            if key not in record:
                raise DataError(f"{path}:{lineno}: missing {key!r}")
        samples.append(ProbeSample(
            language=record["language"],
            context=record.get("context", ""),
            sentence=record["sentence"],
            tau=args.tau,
        ))
    client = _client_from_args(args, temperature=0.0)
    probed = run_probes(samples, client, lcs_unit=args.unit)
    report = {
        "tool_version": __version__,
        "tau": args.tau,
        "cutoff": args.cutoff,
        "lcs_unit": args.unit,
        "n_samples": len(probed),
        "per_language_pct_above_cutoff": contamination_report(probed, args.cutoff),
    }
    _write_json(args.out, report)
    if args.probes:
        write_jsonl(args.probes, ({
            "language": s.language, "context": s.context, "sentence": s.sentence,
            "tau": s.tau, "prefix": s.prefix, "suffix": s.suffix,
            "completion_with_ctx": s.completion_with_ctx,
            "completion_no_ctx": s.completion_no_ctx,
            "gamma": round(s.gamma, 6),
        } for s in probed))
    write_manifest(args.out, "contaminate", {
        "samples": str(args.samples), "tau": args.tau, "cutoff": args.cutoff,
        "lcs_unit": args.unit, "endpoint": args.endpoint, "model": args.model,
        "temperature": 0.0,
    }, started_at=started)
    print(f"contaminate: {len(probed)} probes -> {args.out}")
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    started = _utcnow()
    path = _require_file(args.hypotheses, "hypotheses")
    raw_rows = [(lineno, rec) for lineno, rec in read_jsonl(path)]
    client = _client_from_args(args)

    metric_diff_min = {"BLEU": args.bleu_diff, "CHRFPP": args.chrf_diff}
    if all("COMET" in rec.get("metric_scores", {}) for _, rec in raw_rows):
        metric_diff_min["COMET"] = args.comet_diff
    else:
        logger.info("COMET scores absent from some rows; COMET flagging disabled")

    records = []
    references = {}
    for lineno, rec in raw_rows:
        where = f"{path}:{lineno}"
        for key in ("system_id", "reference_id", "hypothesis", "reference"):
            if key not in rec:
                raise DataError(f"{where}: missing {key!r}")
        scores = dict(rec.get("metric_scores", {}))
        scores.setdefault("BLEU", sentence_bleu(rec["hypothesis"], rec["reference"]).value)
        scores.setdefault("CHRFPP", chrf_pp(rec["hypothesis"], rec["reference"]).value)
        records.append(HypothesisRecord(
            system_id=rec["system_id"],
            reference_id=rec["reference_id"],
            hypothesis=rec["hypothesis"],
            metric_scores=scores,
            embedding=tuple(client.embed(rec["hypothesis"])),
        ))
        if rec["reference_id"] not in references:
            references[rec["reference_id"]] = tuple(client.embed(rec["reference"]))

    config = SensitivityConfig(cos_diff_max=args.cos_diff_max,
                               metric_diff_min=metric_diff_min)
    flagged = find_unstable_pairs(records, references, config)
    rows = []
    for h1, h2, metric in flagged:
        ref_vec = references[h1.reference_id]
        rows.append({
            "reference_id": h1.reference_id,
            "metric": metric,
            "system_a": h1.system_id, "system_b": h2.system_id,
            "hypothesis_a": h1.hypothesis, "hypothesis_b": h2.hypothesis,
            "score_a": h1.metric_scores[metric], "score_b": h2.metric_scores[metric],
            "cos_a": round(cosine(h1.embedding, ref_vec), 6),
            "cos_b": round(cosine(h2.embedding, ref_vec), 6),
        })
    write_jsonl(args.out, rows)
    summary = {
        "tool_version": __version__,
        "flagged_per_metric_total": len(flagged),
        "flagged_unique_pairs": count_unique_pairs(flagged),
        "by_system": count_by_system(flagged),
        "cos_diff_max": args.cos_diff_max,
        "metric_diff_min": metric_diff_min,
    }
    _write_json(str(args.out) + ".summary.json", summary)
    write_manifest(args.out, "sensitivity", {
        "hypotheses": str(args.hypotheses), "cos_diff_max": args.cos_diff_max,
        "metric_diff_min": metric_diff_min, "endpoint": args.endpoint,
        "model": args.model,
    }, started_at=started)
    print(f"sensitivity: {len(flagged)} flags -> {args.out}")
    return EXIT_OK


def cmd_judge(args) -> int:
    started = _utcnow()
    path = _require_file(args.pairs, "pairs")
    items = []
    for idx, (lineno, rec) in enumerate(read_jsonl(path)):
        where = f"{path}:{lineno}"
        for key in ("source", "reference", "hyp_model_x", "hyp_model_y"):
            if key not in rec:
                raise DataError(f"{where}: missing {key!r}")
        items.append(JudgeItem(
            source=rec["source"],
            reference=rec["reference"],
            context_before=rec.get("context_before", ""),
            context_after=rec.get("context_after", ""),
            hyp_model_x=rec["hyp_model_x"],
            hyp_model_y=rec["hyp_model_y"],
            seed=args.seed + idx,  # one global seed governs every assignment
        ))
    client = _client_from_args(args, temperature=0.0)
    verdicts = judge_items(items, client)
    valid = [v for v in verdicts if v is not None]
    rows = []
    for item, verdict in zip(items, verdicts):
        rows.append({
            "source": item.source,
            "seed": item.seed,
            "raw": verdict.raw if verdict else None,
            "resolved": verdict.resolved if verdict else "invalid",
            "x_was_shown_as": ("A" if verdict.position_map.x_is_a else "B")
            if verdict else None,
        })
    write_jsonl(args.out, rows)
    if not valid:
        raise DataError("all judge verdicts were invalid")
    win_x, win_y, tie = tally_winrates(valid)
    ex_x, ex_y = tally_winrates_excluding_ties(valid)
    summary = {
        "tool_version": __version__,
        "n_items": len(items),
        "n_valid": len(valid),
        "n_invalid": len(items) - len(valid),
        "win_x": round(win_x, 6), "win_y": round(win_y, 6), "tie": round(tie, 6),
        "win_x_excluding_ties": round(ex_x, 6),
        "win_y_excluding_ties": round(ex_y, 6),
    }
    _write_json(str(args.out) + ".summary.json", summary)
    write_manifest(args.out, "judge", {
        "pairs": str(args.pairs), "endpoint": args.endpoint, "model": args.model,
        "temperature": 0.0,
    }, seeds={"position_seed": args.seed}, started_at=started)
    print(f"judge: {len(valid)}/{len(items)} valid verdicts -> {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    started = _utcnow()
    lines = []
    versions = set()

    def load_optional(path, label):
        if not path:
            lines.append(f"{label}: no data")
            return None
        obj = _read_json(_require_file(path, label))
        versions.add(obj.get("tool_version", "unknown"))
        return obj

    filter_report = load_optional(args.filter_report, "filtering")
    if filter_report:
        lines.append("filtering (per direction):")
        lines.append(f"  {'direction':<12} {'P1':>6} {'P2':>6} {'q_min':>9} {'threshold':>10}")
        for direction, stats in sorted(filter_report["directions"].items()):
            lines.append(f"  {direction:<12} {stats['p1']:>6} {stats['p2']:>6} "
                         f"{stats['q_min']:>9.5f} {stats['threshold']:>10.4f}")

    contamination = load_optional(args.contamination, "contamination")
    if contamination:
        lines.append(f"contamination (% samples with gamma > "
                     f"{contamination['cutoff']}, tau={contamination['tau']}):")
        per_lang = contamination["per_language_pct_above_cutoff"]
        if per_lang:
            for lang, pct in sorted(per_lang.items()):
                lines.append(f"  {lang:<6} {pct:>5.1f}%")
        else:
            lines.append("  no data")

    sens = load_optional(args.sensitivity_summary, "sensitivity")
    if sens:
        lines.append(f"sensitivity: {sens['flagged_per_metric_total']} metric flags, "
                     f"{sens['flagged_unique_pairs']} unique pairs")
        for system, count in sorted(sens["by_system"].items()):
            lines.append(f"  {system:<20} {count}")

    judge_summary = load_optional(args.judge_summary, "judge")
    if judge_summary:
        lines.append("judge win rates (ties in denominator):")
        lines.append(f"  win_x={judge_summary['win_x']:.3f} "
                     f"win_y={judge_summary['win_y']:.3f} "
                     f"tie={judge_summary['tie']:.3f} "
                     f"(n={judge_summary['n_valid']})")
        lines.append(f"  excluding ties: win_x={judge_summary['win_x_excluding_ties']:.3f} "
                     f"win_y={judge_summary['win_y_excluding_ties']:.3f}")

    header = [f"proverbkit report (tool version {__version__})"]
    known = versions - {"unknown"}
    if len(known) > 1 or (known and known != {__version__}):
        header.append("WARNING: stage outputs were produced by mixed tool "
                      f"versions: {sorted(versions)}")
    text = "\n".join(header + [""] + lines) + "\n"
    Path(args.out).write_text(text, encoding="utf-8")
    write_manifest(args.out, "report", {
        "filter_report": args.filter_report,
        "contamination": args.contamination,
        "sensitivity_summary": args.sensitivity_summary,
        "judge_summary": args.judge_summary,
    }, started_at=started)
    print(text, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Pipeline

PIPELINE_STAGES = ("mine", "filter", "context", "prompt", "score",
                   "contaminate", "sensitivity", "judge", "report")


def _validate_pipeline_config(config: dict, config_dir: Path) -> dict:
    if not isinstance(config, dict):
        raise ValidationError("pipeline config must be a JSON object")
    for key in ("out_dir", "stages"):
        if key not in config:
            raise ValidationError(f"pipeline config missing {key!r}")
    stages = config["stages"]
    unknown = [s for s in stages if s not in PIPELINE_STAGES]
    if unknown:
        raise ValidationError(f"unknown pipeline stage(s): {unknown}")

    def resolve(key):
        if key in config and config[key]:
            path = Path(config[key])
            if not path.is_absolute():
                path = config_dir / path
            if not path.is_file():
                raise ValidationError(f"pipeline config: {key} file not found: {path}")
            config[key] = str(path)

    needs = {"mine": ["bitext", "proverbs"], "filter": ["proverbs"],
             "context": ["bitext"], "prompt": ["proverbs"],
             "contaminate": ["contamination_samples"],
             "sensitivity": ["sensitivity_hypotheses"],
             "judge": ["judge_pairs"]}
    for stage in stages:
        for key in needs.get(stage, ()):
            if not config.get(key):
                raise ValidationError(f"stage {stage!r} requires config key {key!r}")
    for key in ("bitext", "proverbs", "contamination_samples",
                "sensitivity_hypotheses", "judge_pairs"):
        resolve(key)
    return config


def cmd_pipeline(args) -> int:
    started = _utcnow()
    config_path = _require_file(args.config, "pipeline config")
    config = _validate_pipeline_config(_read_json(config_path), config_path.parent)
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    params = config.get("params", {})
    model = config.get("model", {})
    seed = int(config.get("seed", 0))

    ns = argparse.Namespace(
        endpoint=model.get("endpoint", "mock:"),
        model=model.get("model_name", "default"),
        cache_dir=model.get("cache_dir"),
        max_in_flight=int(model.get("max_in_flight", 4)),
    )

    paths = {
        "candidates": out_dir / "candidates.jsonl",
        "filtered": out_dir / "filtered.jsonl",
        "filter_report": out_dir / "filter_report.json",
        "context": out_dir / "context.jsonl",
        "prompts": out_dir / "prompts.jsonl",
        "scores": out_dir / "scores.jsonl",
        "contamination_report": out_dir / "contamination_report.json",
        "probes": out_dir / "probes.jsonl",
        "sensitivity_pairs": out_dir / "sensitivity_pairs.jsonl",
        "verdicts": out_dir / "verdicts.jsonl",
        "report": out_dir / "report.txt",
    }

    for stage in config["stages"]:
        logger.info("pipeline stage: %s", stage)
        try:
            if stage == "mine":
                cmd_mine(argparse.Namespace(
                    bitext=config["bitext"], proverbs=config["proverbs"],
                    threshold=float(params.get("threshold", DEFAULT_THRESHOLD)),
                    scheme=params.get("scheme", "whitespace"),
                    lemma_table=params.get("lemma_table"),
                    out=str(paths["candidates"])))
            elif stage == "filter":
                cmd_filter(argparse.Namespace(
                    candidates=str(paths["candidates"]), proverbs=config["proverbs"],
                    max_per_direction=int(params.get("max_per_direction", 2000)),
                    min_score=float(params.get("min_score", 4.0)),
                    qe_weight=float(params.get("qe_weight", 5.0)),
                    out=str(paths["filtered"]), report=str(paths["filter_report"]),
                    **vars(ns)))
            elif stage == "context":
                cmd_context(argparse.Namespace(
                    candidates=str(paths["filtered"]), bitext=config["bitext"],
                    max_each=int(params.get("max_each", 5)),
                    out=str(paths["context"])))
            elif stage == "prompt":
                cmd_prompt(argparse.Namespace(
                    candidates=str(paths["filtered"]), proverbs=config["proverbs"],
                    context=str(paths["context"]),
                    template=params.get("template", "dialogue_context"),
                    out=str(paths["prompts"])))
            elif stage == "score":
                cmd_score(argparse.Namespace(
                    hypotheses=str(paths["prompts"]), out=str(paths["scores"]),
                    **vars(ns)))
            elif stage == "contaminate":
                cmd_contaminate(argparse.Namespace(
                    samples=config["contamination_samples"],
                    tau=float(params.get("tau", DEFAULT_TAU)),
                    cutoff=float(params.get("cutoff", DEFAULT_CUTOFF)),
                    unit=params.get("lcs_unit", "token"),
                    out=str(paths["contamination_report"]),
                    probes=str(paths["probes"]), **vars(ns)))
            elif stage == "sensitivity":
                cmd_sensitivity(argparse.Namespace(
                    hypotheses=config["sensitivity_hypotheses"],
                    cos_diff_max=float(params.get("cos_diff_max", 0.05)),
                    bleu_diff=float(params.get("bleu_diff", 5.0)),
                    chrf_diff=float(params.get("chrf_diff", 10.0)),
                    comet_diff=float(params.get("comet_diff", 10.0)),
                    out=str(paths["sensitivity_pairs"]), **vars(ns)))
            elif stage == "judge":
                cmd_judge(argparse.Namespace(
                    pairs=config["judge_pairs"], seed=seed,
                    out=str(paths["verdicts"]), **vars(ns)))
            elif stage == "report":
                cmd_report(argparse.Namespace(
                    filter_report=str(paths["filter_report"])
                    if paths["filter_report"].is_file() else None,
                    contamination=str(paths["contamination_report"])
                    if paths["contamination_report"].is_file() else None,
                    sensitivity_summary=str(paths["sensitivity_pairs"]) + ".summary.json"
                    if Path(str(paths["sensitivity_pairs"]) + ".summary.json").is_file() else None,
                    judge_summary=str(paths["verdicts"]) + ".summary.json"
                    if Path(str(paths["verdicts"]) + ".summary.json").is_file() else None,
                    out=str(paths["report"])))
        except Exception as exc:
            logger.error("pipeline stage %r failed: %s", stage, exc)
            raise
    write_manifest(out_dir / "pipeline", "pipeline", {
        "config": str(config_path), "stages": list(config["stages"]),
        "params": params, "model": {k: v for k, v in model.items()},
    }, seeds={"seed": seed}, started_at=started)
    print(f"pipeline: completed stages {', '.join(config['stages'])} -> {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proverbkit",
        description="Mine, filter and evaluate figurative-expression "
                    "translation pairs in parallel subtitle corpora.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="phase-1 fuzzy proverb search")
    p.add_argument("--bitext", required=True)
    p.add_argument("--proverbs", required=True)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD,
                   help="matching score threshold (default: 0.8)")
    p.add_argument("--scheme", choices=("whitespace", "intl"), default="whitespace")
    p.add_argument("--lemma-table", default=None,
                   help="surface<TAB>lemma dictionary file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("filter", help="phase-2 usage + quality-estimation filtering")
    p.add_argument("--candidates", required=True)
    p.add_argument("--proverbs", required=True)
    p.add_argument("--max-per-direction", type=int, default=2000,
                   help="per-direction sample cap (default: 2000)")
    p.add_argument("--min-score", type=float, default=4.0,
                   help="minimum fused score (default: 4)")
    p.add_argument("--qe-weight", type=float, default=5.0,
                   help="DA-QE fusion weight (default: 5)")
    p.add_argument("--out", required=True)
    p.add_argument("--report", required=True)
    _add_model_args(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("context", help="retrieve surrounding subtitle lines")
    p.add_argument("--candidates", required=True)
    p.add_argument("--bitext", required=True)
    p.add_argument("--max-each", type=int, default=5,
                   help="max lines per direction (default: 5)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_context)

    p = sub.add_parser("prompt", help="build translation prompt transcripts")
    p.add_argument("--candidates", required=True)
    p.add_argument("--proverbs", required=True)
    p.add_argument("--context", default=None)
    p.add_argument("--template", default="zero_shot",
                   choices=[t.value for t in PromptTemplate])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("score", help="sentence BLEU / chrF++ scoring")
    p.add_argument("--hypotheses", required=True,
                   help="JSONL with hypothesis+reference rows, or prompt-stage "
                        "transcripts to translate first")
    p.add_argument("--out", required=True)
    _add_model_args(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("contaminate", help="prefix-completion contamination probes")
    p.add_argument("--samples", required=True)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU,
                   help="prefix word proportion (default: 0.5)")
    p.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF,
                   help="report gamma > cutoff (default: 0.9)")
    p.add_argument("--unit", choices=("token", "character"), default="token",
                   help="LCS unit (default: token)")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--probes", default=None, help="optional per-probe JSONL output")
    _add_model_args(p)
    p.set_defaults(func=cmd_contaminate)

    p = sub.add_parser("sensitivity", help="find metric-unstable hypothesis pairs")
    p.add_argument("--hypotheses", required=True)
    p.add_argument("--cos-diff-max", type=float, default=0.05,
                   help="max cosine difference (default: 0.05)")
    p.add_argument("--bleu-diff", type=float, default=5.0,
                   help="BLEU gap threshold (default: 5)")
    p.add_argument("--chrf-diff", type=float, default=10.0,
                   help="chrF++ gap threshold (default: 10)")
    p.add_argument("--comet-diff", type=float, default=10.0,
                   help="COMET gap threshold (default: 10)")
    p.add_argument("--out", required=True)
    _add_model_args(p)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("judge", help="pairwise LLM-as-judge win rates")
    p.add_argument("--pairs", required=True)
    p.add_argument("--seed", type=int, default=0,
                   help="global position-randomization seed")
    p.add_argument("--out", required=True)
    _add_model_args(p)
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("report", help="human-readable run summary")
    p.add_argument("--filter-report", default=None)
    p.add_argument("--contamination", default=None)
    p.add_argument("--sensitivity-summary", default=None)
    p.add_argument("--judge-summary", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("pipeline", help="run configured stages end to end")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
