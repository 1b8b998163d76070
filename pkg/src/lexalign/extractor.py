"""Dual-stream term extraction, auto-completion, hallucination detection."""
from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, replace
from typing import Any, Mapping, Sequence

from .aligner import TrilingualTriple
from .gateway import ChatMessage, ChatRequest, LlmGateway
from .model import TermEntry
from .prompts import FewShotExample, fill, load_sections
from .rounding import pct, round_half_up

DIRECTIONS = ("zh_en", "zh_ja")

_DIRECTION_FIELDS = {
    "zh_en": {"target_language": "English", "target_field": "english",
              "target_context_field": "en_context"},
    "zh_ja": {"target_language": "Japanese", "target_field": "japanese",
              "target_context_field": "ja_context"},
}


class MalformedResponse(ValueError):
    """Chat response was not parseable term JSON; carries a snippet."""

    def __init__(self, message: str, snippet: str):
        super().__init__(f"{message}: {snippet!r}")
        self.snippet = snippet


class FieldError(ValueError):
    """A parsed element lacks the source term or its context."""


class CompletionRefused(RuntimeError):
    """Auto-completion could not produce a grounded term/context pair."""


@dataclass(frozen=True)
class ExtractionPrompt:
    """Ordered sections; serialization follows the section order exactly."""

    instruction: str
    input_format: str
    requirements: str
    output_format: str
    examples: str | None
    user_input: str

    def to_text(self) -> str:
        parts = [
            f"Instruction: {self.instruction}",
            f"Input Format: {self.input_format}",
            f"Requirements:\n{self.requirements}",
            f"Output Format:\n{self.output_format}",
        ]
        if self.examples is not None:
            parts.append(f"Examples:\n{self.examples}")
        parts.append(f"User Input:\n{self.user_input}")
        return "\n\n".join(parts)


@dataclass(frozen=True)
class RawTermPair:
    source_term: str
    target_term: str | None
    context: str
    target_context: str | None
    explanation: str | None


@dataclass(frozen=True)
class ExtractionFailure:
    law_id: str
    article_number: int
    direction: str
    message: str


@dataclass(frozen=True)
class ExtractionRunStats:
    articles_total: int
    articles_succeeded: int
    success_rate: float       # one-decimal percent
    extracted: int
    unique_terms: int
    avg_per_article: float    # one decimal
    ja_covered: int
    en_covered: int


def build_extraction_prompt(pair: tuple[str, str], direction: str,
                            shots: Sequence[FewShotExample] = ()) -> ExtractionPrompt:
    """pair is (chinese article text, target-language article text)."""
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown direction {direction!r}")
    fields = _DIRECTION_FIELDS[direction]
    sections = load_sections("extraction.txt")
    examples = None
    if shots:
        examples = "\n".join(shot.render(i + 1) for i, shot in enumerate(shots))
    zh_text, target_text = pair
    return ExtractionPrompt(
        instruction=fill(sections["instruction"], **fields),
        input_format=fill(sections["input_format"], **fields),
        requirements=fill(sections["requirements"], **fields),
        output_format=fill(sections["output_format"], **fields),
        examples=examples,
        user_input=f"{zh_text}\t{target_text}",
    )


_FENCE_RE = re.compile(r"^```[a-zA-Z0-9_-]*\s*\n(.*?)\n?```\s*$", re.DOTALL)


def strip_to_json(text: str) -> str:
    """Remove code fences and surrounding prose; no bracket repair."""
    stripped = text.strip()
    fenced = _FENCE_RE.match(stripped)
    if fenced:
        stripped = fenced.group(1).strip()
    starts = [i for i in (stripped.find("{"), stripped.find("[")) if i >= 0]
    if not starts:
        return stripped
    start = min(starts)
    closer = "}" if stripped[start] == "{" else "]"
    end = stripped.rfind(closer)
    if end <= start:
        return stripped
    return stripped[start:end + 1]


def parse_json_payload(text: str) -> Any:
    candidate = strip_to_json(text)
    try:
        return json.loads(candidate)
    except json.JSONDecodeError as exc:
        raise MalformedResponse(f"not valid JSON ({exc.msg})", text[:120]) from exc


def parse_extraction_response(text: str) -> list[RawTermPair]:
    """Accept {"terms": [...]} or a bare array of term objects."""
    payload = parse_json_payload(text)
    if isinstance(payload, dict):
        if "terms" not in payload:
            raise MalformedResponse('object lacks a "terms" array', text[:120])
        items = payload["terms"]
    else:
        items = payload
    if not isinstance(items, list):
        raise MalformedResponse("terms payload is not an array", text[:120])
    pairs: list[RawTermPair] = []
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            raise FieldError(f"terms[{i}]: expected an object")
        source = item.get("chinese")
        context = item.get("context")
        if not isinstance(source, str) or not source.strip():
            raise FieldError(f"terms[{i}].chinese: missing or empty")
        if not isinstance(context, str) or not context.strip():
            raise FieldError(f"terms[{i}].context: missing or empty")
        target = item.get("english") if "english" in item else item.get("japanese")
        target_context = (item.get("en_context") if "en_context" in item
                          else item.get("ja_context"))
        pairs.append(RawTermPair(
            source_term=source.strip(),
            target_term=target.strip() if isinstance(target, str) and target.strip() else None,
            context=context.strip(),
            target_context=(target_context.strip()
                            if isinstance(target_context, str) and target_context.strip()
                            else None),
            explanation=(item["explanation"].strip()
                         if isinstance(item.get("explanation"), str)
                         and item["explanation"].strip() else None),
        ))
    return pairs


def extract_stream(triple: TrilingualTriple, direction: str, gateway: LlmGateway,
                   shots: Sequence[FewShotExample] = (),
                   feedback: str | None = None,
                   temperature: float = 0.0) -> list[TermEntry]:
    """One LLM call for one article in one direction; raises MalformedResponse."""
    target_segment = triple.en if direction == "zh_en" else triple.ja
    prompt = build_extraction_prompt((triple.zh.text, target_segment.text), direction, shots)
    messages = [ChatMessage(role="user", content=prompt.to_text())]
    if feedback:
        messages.append(ChatMessage(role="user", content=f"Reviewer feedback: {feedback}"))
    response = gateway.chat(ChatRequest(model_id=gateway.config.model_id,
                                        messages=tuple(messages),
                                        temperature=temperature))
    pairs = parse_extraction_response(response.content)
    entries: list[TermEntry] = []
    for pair in pairs:
        entry = TermEntry(
            chinese=pair.source_term,
            context_zh=pair.context,
            law_id=triple.zh.statute_id,
            article_number=triple.zh.article_number,
            explanation=pair.explanation,
            provenance="extracted",
            status="raw",
        )
        if direction == "zh_en":
            entry = replace(entry, english=pair.target_term, context_en=pair.target_context)
        else:
            entry = replace(entry, japanese=pair.target_term, context_ja=pair.target_context)
        entries.append(entry)
    return entries


def merge_streams(zh_en: Sequence[TermEntry], zh_ja: Sequence[TermEntry]) -> list[TermEntry]:
    """Merge per (law_id, article_number, chinese); zh_en wins context conflicts."""
    merged: dict[tuple[str, int, str], TermEntry] = {}
    order: list[tuple[str, int, str]] = []
    for entry in zh_en:
        key = (entry.law_id, entry.article_number, entry.chinese)
        if key not in merged:
            merged[key] = entry
            order.append(key)
    for entry in zh_ja:
        key = (entry.law_id, entry.article_number, entry.chinese)
        if key not in merged:
            merged[key] = entry
            order.append(key)
            continue
        base = merged[key]
        notes = base.notes
        if entry.context_zh != base.context_zh:
            notes = notes + (f"context variant (zh_ja stream): {entry.context_zh}",)
        merged[key] = replace(
            base,
            japanese=base.japanese or entry.japanese,
            context_ja=base.context_ja or entry.context_ja,
            explanation=base.explanation or entry.explanation,
            notes=notes,
        )
    return [merged[key] for key in order]


def _norm(text: str) -> str:
    """NFKC, casefold, all whitespace removed; used for substring grounding."""
    folded = unicodedata.normalize("NFKC", text).casefold()
    return "".join(ch for ch in folded if not ch.isspace())


def auto_complete(entry: TermEntry, triple: TrilingualTriple,
                  gateway: LlmGateway, temperature: float = 0.0) -> TermEntry:
    """Fill the missing language(s) from the aligned article text.

    Complete entries pass through unchanged. Raises CompletionRefused when the
    provider cannot ground the completion in the aligned article.
    """
    missing: list[tuple[str, str]] = []
    if not entry.english:
        missing.append(("english", "English"))
    if not entry.japanese:
        missing.append(("japanese", "Japanese"))
    if not missing:
        return entry
    sections = load_sections("auto_complete.txt")
    current = entry
    for attr, language_name in missing:
        article = triple.en if attr == "english" else triple.ja
        prompt_text = "\n\n".join([
            fill(sections["instruction"]),
            fill(sections["task"], chinese=current.chinese,
                 context=current.context_zh, target_language=language_name,
                 article=article.text),
        ])
        response = gateway.chat(ChatRequest(
            model_id=gateway.config.model_id,
            messages=(ChatMessage(role="user", content=prompt_text),),
            temperature=temperature,
        ))
        try:
            payload = parse_json_payload(response.content)
        except MalformedResponse as exc:
            raise CompletionRefused(f"{language_name}: unparseable completion ({exc})") from exc
        term = payload.get("term") if isinstance(payload, dict) else None
        context = payload.get("context") if isinstance(payload, dict) else None
        if not term or not isinstance(term, str) or not isinstance(context, str) or not context:
            raise CompletionRefused(f"{language_name}: provider returned no grounded term")
        if _norm(term) not in _norm(context) or _norm(context) not in _norm(article.text):
            raise CompletionRefused(
                f"{language_name}: completion not grounded in the aligned article"
            )
        if attr == "english":
            current = replace(current, english=term, context_en=context,
                              provenance="auto_completed")
        else:
            current = replace(current, japanese=term, context_ja=context,
                              provenance="auto_completed")
    return current


def detect_hallucination(entry: TermEntry, triple: TrilingualTriple) -> dict[str, bool]:
    """Per-language flags: term must sit in its context, context in its article."""
    flags: dict[str, bool] = {}

    def check(term: str | None, context: str | None, article_text: str) -> bool:
        assert term is not None
        if not context:
            return True
        return _norm(term) not in _norm(context) or _norm(context) not in _norm(article_text)

    flags["zh"] = check(entry.chinese, entry.context_zh, triple.zh.text)
    if entry.english is not None:
        flags["en"] = check(entry.english, entry.context_en, triple.en.text)
    if entry.japanese is not None:
        flags["ja"] = check(entry.japanese, entry.context_ja, triple.ja.text)
    return flags


def extraction_stats(entries: Sequence[TermEntry],
                     articles: int | Sequence[Any]) -> ExtractionRunStats:
    """Success rate counts articles that yielded at least one entry."""
    total = articles if isinstance(articles, int) else len(articles)
    if total < 1:
        raise ValueError("articles must be >= 1")
    covered = len({(e.law_id, e.article_number) for e in entries})
    return ExtractionRunStats(
        articles_total=total,
        articles_succeeded=covered,
        success_rate=pct(covered, total),
        extracted=len(entries),
        unique_terms=len({(e.law_id, e.chinese) for e in entries}),
        avg_per_article=round_half_up(len(entries) / total, 1),
        ja_covered=sum(1 for e in entries if e.japanese),
        en_covered=sum(1 for e in entries if e.english),
    )
