"""Five-dimension quality scoring with an LLM judge, plus summary metrics.

Each dimension is judged once over a seeded sample of the termbase; the
overall score is the weighted sum of the five dimension scores, reported to
two decimals alongside a letter grade.
"""
from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .gateway import ChatMessage, ChatRequest, LlmGateway
from .model import TermEntry, Termbase, entry_to_dict, utc_now
from .prompts import fill, load_sections
from .rounding import pct, round_half_up

DIMENSIONS = ("coverage", "consistency", "completeness", "professionalism",
              "translation_quality")

_DIMENSION_TITLES = {
    "coverage": "Coverage",
    "consistency": "Consistency",
    "completeness": "Completeness",
    "professionalism": "Professionalism",
    "translation_quality": "Translation Quality",
}


class JudgeError(RuntimeError):
    """The judge model never produced a usable score for a dimension."""

    def __init__(self, dimension: str, snippet: str):
        super().__init__(f"no usable score for {dimension!r}: {snippet!r}")
        self.dimension = dimension
        self.snippet = snippet


@dataclass(frozen=True)
class WeightVector:
    """Dimension weights in DIMENSIONS order; must sum to 1."""

    values: tuple[float, float, float, float, float]

    def __post_init__(self) -> None:
        if len(self.values) != len(DIMENSIONS):
            raise ValueError(f"need exactly {len(DIMENSIONS)} weights")
        if any(w < 0 for w in self.values):
            raise ValueError("weights must be non-negative")
        if abs(sum(self.values) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {sum(self.values)!r}")

    def as_mapping(self) -> dict[str, float]:
        return dict(zip(DIMENSIONS, self.values))

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float]) -> "WeightVector":
        extra = set(mapping) - set(DIMENSIONS)
        missing = set(DIMENSIONS) - set(mapping)
        if extra or missing:
            raise ValueError(f"weights must cover exactly {DIMENSIONS}; "
                             f"extra={sorted(extra)} missing={sorted(missing)}")
        return cls(values=tuple(float(mapping[d]) for d in DIMENSIONS))


PRESETS: dict[str, WeightVector] = {
    "table7": WeightVector((0.25, 0.25, 0.20, 0.15, 0.15)),
    "table8-fit": WeightVector((0.20, 0.20, 0.30, 0.15, 0.15)),
}
DEFAULT_PRESET = "table8-fit"


@dataclass(frozen=True)
class DimensionScore:
    dimension: str
    score: int            # clamped to 0..100
    raw_text: str
    clamped: bool


SAMPLE_MAX = 100


def sample_terms(entries: Sequence[TermEntry], n_max: int = SAMPLE_MAX,
                 seed: int = 0) -> list[TermEntry]:
    """Uniform sample without replacement; full list when it already fits."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if len(entries) <= n_max:
        return list(entries)
    return random.Random(seed).sample(list(entries), n_max)


def render_sample(entries: Sequence[TermEntry]) -> str:
    return json.dumps([entry_to_dict(e) for e in entries], ensure_ascii=False, indent=2)


def build_judge_prompt(dimension: str, sample_json: str) -> str:
    if dimension not in DIMENSIONS:
        raise ValueError(f"unknown dimension {dimension!r}")
    sections = load_sections("judge.txt")
    tasks = load_sections("judge_tasks.txt")[dimension]
    return "\n\n".join([
        fill(sections["instruction"]),
        fill(sections["dimension"], dimension_name=_DIMENSION_TITLES[dimension]),
        fill(sections["tasks"], dimension_tasks=tasks),
        fill(sections["sample"], sample=sample_json),
        fill(sections["response_format"]),
    ])


_SCORE_RE = re.compile(r"-?\d+")


def judge_dimension(dimension: str, sample_json: str, gateway: LlmGateway,
                    max_attempts: int = 2, temperature: float = 0.0) -> DimensionScore:
    prompt = build_judge_prompt(dimension, sample_json)
    messages: list[ChatMessage] = [ChatMessage(role="user", content=prompt)]
    last_text = ""
    for _ in range(max(1, max_attempts)):
        response = gateway.chat(ChatRequest(model_id=gateway.config.model_id,
                                            messages=tuple(messages),
                                            temperature=temperature))
        last_text = response.content
        match = _SCORE_RE.search(response.content)
        if match:
            raw = int(match.group())
            clamped = raw < 0 or raw > 100
            return DimensionScore(dimension=dimension,
                                  score=min(100, max(0, raw)),
                                  raw_text=response.content.strip(),
                                  clamped=clamped)
        messages.append(ChatMessage(role="assistant", content=response.content))
        messages.append(ChatMessage(role="user", content=(
            "Respond with a single integer score between 0 and 100. "
            "Output the number only."
        )))
    raise JudgeError(dimension, last_text[:120])


def evaluate_sample(entries: Sequence[TermEntry], gateway: LlmGateway,
                    max_attempts: int = 2,
                    temperature: float = 0.0) -> dict[str, DimensionScore]:
    if not entries:
        raise ValueError("cannot judge an empty sample")
    sample_json = render_sample(entries)
    return {dimension: judge_dimension(dimension, sample_json, gateway,
                                       max_attempts=max_attempts,
                                       temperature=temperature)
            for dimension in DIMENSIONS}


def aggregate_score(scores: Mapping[str, float], weights: WeightVector) -> float:
    """Weighted sum over the five dimensions, to two decimals."""
    missing = set(DIMENSIONS) - set(scores)
    if missing:
        raise ValueError(f"scores missing dimensions: {sorted(missing)}")
    total = sum(w * float(scores[d]) for d, w in zip(DIMENSIONS, weights.values))
    return round_half_up(total, 2)


_GRADE_FLOORS = (("A+", 95.0), ("A", 90.0), ("A-", 85.0), ("B+", 80.0),
                 ("B", 75.0), ("B-", 70.0), ("C+", 65.0), ("C", 60.0))


def grade_for(score: float) -> str:
    for name, floor in _GRADE_FLOORS:
        if score >= floor:
            return name
    return "C-"


def success_rate(articles_with_terms: int, articles_total: int) -> float:
    return pct(articles_with_terms, articles_total)


def duplicate_rate(extracted: int, standardized: int) -> float:
    return pct(extracted - standardized, extracted)


def hallucination_rate(flagged: int, checked: int) -> float:
    return pct(flagged, checked)


def _display_value(key: str, value: float) -> str:
    if key.endswith("_rate"):
        return f"{value:.1f}%"
    return f"{value:.1f}"


def build_quality_report(
    *,
    dimension_scores: Mapping[str, DimensionScore],
    weights: WeightVector,
    preset_name: str | None,
    sample_size: int,
    population: int,
    seed: int,
    metrics: Mapping[str, float],
    generated_at: str,
    agreement: Mapping[str, float | None] | None = None,
) -> dict[str, Any]:
    """Assemble the evaluation report artifact as a plain JSON-ready dict."""
    missing = set(DIMENSIONS) - set(dimension_scores)
    if missing:
        raise ValueError(f"dimension scores missing: {sorted(missing)}")
    score_values = {d: dimension_scores[d].score for d in DIMENSIONS}
    overall = aggregate_score(score_values, weights)
    notes = [f"{d}: judge output clamped to the 0..100 range"
             for d in DIMENSIONS if dimension_scores[d].clamped]
    display: dict[str, str] = {
        "overall_score": f"{overall:.2f}",
        "grade": grade_for(overall),
    }
    for key, value in metrics.items():
        display[key] = _display_value(key, value)
    return {
        "schema_version": 1,
        "generated_at": generated_at,
        "weights": {"preset": preset_name, "values": weights.as_mapping()},
        "sample": {"size": sample_size, "population": population, "seed": seed},
        "dimension_scores": score_values,
        "overall_score": overall,
        "grade": grade_for(overall),
        "metrics": dict(metrics),
        "agreement": dict(agreement) if agreement is not None else None,
        "display": display,
        "notes": notes,
    }


def evaluate_termbase(termbase: Termbase, gateway: LlmGateway, *,
                      preset: str = DEFAULT_PRESET,
                      weights: WeightVector | None = None,
                      seed: int = 0,
                      sample_max: int = SAMPLE_MAX,
                      metrics: Mapping[str, float] | None = None,
                      generated_at: str | None = None,
                      max_attempts: int = 2,
                      temperature: float = 0.0) -> dict[str, Any]:
    """Judge a termbase end to end and return the report dict."""
    chosen = weights if weights is not None else PRESETS[preset]
    sample = sample_terms(termbase.entries, n_max=sample_max, seed=seed)
    scores = evaluate_sample(sample, gateway, max_attempts=max_attempts,
                             temperature=temperature)
    return build_quality_report(
        dimension_scores=scores,
        weights=chosen,
        preset_name=None if weights is not None else preset,
        sample_size=len(sample),
        population=len(termbase.entries),
        seed=seed,
        metrics=dict(metrics or {}),
        generated_at=generated_at if generated_at is not None else utc_now(),
        agreement=None,
    )
