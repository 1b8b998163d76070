"""Variant grouping, rendering standardization, and merge statistics.

Renderings of the same Chinese term are grouped per law and sent to the model,
which may only rearrange the variants it was given: the validator rejects any
decision string that is not a verbatim copy of an input variant.
"""
from __future__ import annotations

import ast
import json
import unicodedata
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

from .gateway import ChatMessage, ChatRequest, LlmGateway
from .model import TermEntry
from .prompts import fill, load_sections
from .rounding import pct
from .extractor import parse_json_payload, MalformedResponse

Pair = tuple[str, str]  # (english, japanese); "" marks a missing language


class ConstraintViolation(RuntimeError):
    """The model invented, dropped, or double-booked a variant rendering."""


@dataclass(frozen=True)
class VariantGroup:
    law_id: str
    chinese: str
    entries: tuple[TermEntry, ...]  # first-occurrence order, repetitions kept

    @property
    def pairs(self) -> list[Pair]:
        return [entry_pair(e) for e in self.entries]

    @property
    def unique_pairs(self) -> list[Pair]:
        seen: list[Pair] = []
        for pair in self.pairs:
            if pair not in seen:
                seen.append(pair)
        return seen


@dataclass(frozen=True)
class StandardizationDecision:
    best: Pair
    merged: tuple[Pair, ...]     # folded into best
    distinct: tuple[Pair, ...]   # preserved as separate entries
    rationale: str
    llm_called: bool


@dataclass(frozen=True)
class GroupOutcome:
    law_id: str
    chinese: str
    occurrences: int
    decision: StandardizationDecision | None
    violation: str | None


@dataclass(frozen=True)
class StandardizationStats:
    original: int
    standardized: int
    variants_merged: int
    unique_chinese: int
    reduction_rate: float      # one-decimal percent
    independence_rate: float   # one-decimal percent
    extra: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class StandardizationReport:
    outcomes: tuple[GroupOutcome, ...]
    stats: StandardizationStats

    @property
    def violations(self) -> list[GroupOutcome]:
        return [o for o in self.outcomes if o.violation is not None]


def entry_pair(entry: TermEntry) -> Pair:
    return (entry.english or "", entry.japanese or "")


def group_variants(entries: Sequence[TermEntry]) -> list[VariantGroup]:
    """Group by (law_id, chinese) in first-encounter order, keeping repetitions."""
    buckets: dict[tuple[str, str], list[TermEntry]] = {}
    order: list[tuple[str, str]] = []
    for entry in entries:
        key = (entry.law_id, entry.chinese)
        if key not in buckets:
            buckets[key] = []
            order.append(key)
        buckets[key].append(entry)
    return [VariantGroup(law_id=law, chinese=zh, entries=tuple(buckets[(law, zh)]))
            for law, zh in order]


_ARTICLES = ("the", "a", "an")
_ES_SUFFIXES = ("ses", "xes", "zes", "ches", "shes")
_PLAIN_S_PROTECTED = ("ss", "us", "is")


def _strip_plural(token: str) -> str:
    if token.endswith(_ES_SUFFIXES):
        return token[:-2]
    if token.endswith("ies") and len(token) > 3:
        return token[:-3] + "y"
    if token.endswith("s") and not token.endswith(_PLAIN_S_PROTECTED):
        return token[:-1]
    return token


def variant_merge_key(text: str | None, language: str) -> str:
    """Key under which near-identical renderings fold together.

    English folds case, a leading article, and trailing plurals; Chinese and
    Japanese renderings only merge on exact equality.
    """
    if not text:
        return ""
    if language != "en":
        return text
    folded = unicodedata.normalize("NFKC", text).casefold()
    tokens = folded.split()
    if tokens and tokens[0] in _ARTICLES:
        tokens = tokens[1:]
    return " ".join(_strip_plural(t) for t in tokens)


def merge_minor_variants(variants: Sequence[str], language: str = "en") -> list[str]:
    """Collapse case/article/plural variants; keep one representative per key.

    The representative is the most frequent spelling, ties broken by first
    occurrence; representatives come back in first-occurrence order of their key.
    """
    clusters: dict[str, list[str]] = {}
    order: list[str] = []
    for variant in variants:
        key = variant_merge_key(variant, language)
        if key not in clusters:
            clusters[key] = []
            order.append(key)
        clusters[key].append(variant)
    out: list[str] = []
    for key in order:
        members = clusters[key]
        counts: dict[str, int] = {}
        for m in members:
            counts[m] = counts.get(m, 0) + 1
        out.append(max(members, key=lambda m: (counts[m], -members.index(m))))
    return out


def _pair_from_item(item: Any, where: str) -> Pair:
    if not isinstance(item, dict):
        raise ConstraintViolation(f"{where}: expected an object with english/japanese")
    english = item.get("english")
    japanese = item.get("japanese")
    if english is not None and not isinstance(english, str):
        raise ConstraintViolation(f"{where}.english: expected a string")
    if japanese is not None and not isinstance(japanese, str):
        raise ConstraintViolation(f"{where}.japanese: expected a string")
    return (english or "", japanese or "")


def _validate_decision(payload: Any, unique_pairs: Sequence[Pair]) -> StandardizationDecision:
    if not isinstance(payload, dict):
        raise ConstraintViolation("decision payload is not an object")
    for required in ("best", "merged", "distinct", "rationale"):
        if required not in payload:
            raise ConstraintViolation(f"decision lacks the {required!r} field")
    best = _pair_from_item(payload["best"], "best")
    if not isinstance(payload["merged"], list) or not isinstance(payload["distinct"], list):
        raise ConstraintViolation("merged and distinct must be arrays")
    merged = tuple(_pair_from_item(item, f"merged[{i}]")
                   for i, item in enumerate(payload["merged"]))
    distinct = tuple(_pair_from_item(item, f"distinct[{i}]")
                     for i, item in enumerate(payload["distinct"]))
    rationale = payload["rationale"]
    if not isinstance(rationale, str) or not rationale.strip():
        raise ConstraintViolation("rationale must be a non-empty string")

    allowed = set(unique_pairs)
    referenced: list[Pair] = [best, *merged, *distinct]
    for pair in referenced:
        if pair not in allowed:
            raise ConstraintViolation(
                f"decision invents a rendering not among the variants: "
                f"english={pair[0]!r} japanese={pair[1]!r}"
            )
    if len(set(referenced)) != len(referenced):
        raise ConstraintViolation("a variant is referenced in more than one bucket")
    missing = allowed - set(referenced)
    if missing:
        shown = sorted(missing)[0]
        raise ConstraintViolation(
            f"decision drops a variant: english={shown[0]!r} japanese={shown[1]!r}"
        )
    return StandardizationDecision(best=best, merged=merged, distinct=distinct,
                                   rationale=rationale.strip(), llm_called=True)


def build_standardization_prompt(group: VariantGroup) -> str:
    sections = load_sections("standardization.txt")
    variants_json = json.dumps(
        [{"english": en, "japanese": ja} for en, ja in group.pairs],
        ensure_ascii=False, indent=2,
    )
    return "\n\n".join([
        fill(sections["instruction"]),
        fill(sections["tasks"]),
        fill(sections["criteria"]),
        fill(sections["constraints"]),
        fill(sections["variants"], chinese=group.chinese, variants=variants_json),
        fill(sections["output_format"]),
    ])


def standardize_group(group: VariantGroup, gateway: LlmGateway,
                      max_attempts: int = 2,
                      temperature: float = 0.0,
                      feedback: str | None = None) -> StandardizationDecision:
    """Decide best/merged/distinct for one group; singletons skip the model.

    A decision that references strings outside the provided variants is
    rejected; one corrective retry is attempted before ConstraintViolation
    escapes for review escalation.
    """
    unique = group.unique_pairs
    if len(unique) == 1:
        return StandardizationDecision(best=unique[0], merged=(), distinct=(),
                                       rationale="single rendering; nothing to standardize",
                                       llm_called=False)
    prompt = build_standardization_prompt(group)
    messages: list[ChatMessage] = [ChatMessage(role="user", content=prompt)]
    if feedback:
        messages.append(ChatMessage(role="user", content=f"Reviewer feedback: {feedback}"))
    last_error: ConstraintViolation | None = None
    for _ in range(max(1, max_attempts)):
        response = gateway.chat(ChatRequest(model_id=gateway.config.model_id,
                                            messages=tuple(messages),
                                            temperature=temperature))
        try:
            payload = parse_json_payload(response.content)
        except MalformedResponse as exc:
            last_error = ConstraintViolation(f"unparseable decision: {exc}")
        else:
            try:
                return _validate_decision(payload, unique)
            except ConstraintViolation as exc:
                last_error = exc
        messages.append(ChatMessage(role="assistant", content=response.content))
        messages.append(ChatMessage(role="user", content=(
            f"Constraint violation: {last_error}. You may only choose from the "
            "variants provided above. Copy each variant string verbatim and place "
            "every variant in exactly one of best, merged, or distinct."
        )))
    assert last_error is not None
    raise last_error


def _representative(group: VariantGroup, pair: Pair) -> TermEntry:
    for entry in group.entries:
        if entry_pair(entry) == pair:
            return entry
    raise ValueError(f"no entry in group carries the pair {pair!r}")  # pragma: no cover


def _finalize(entry: TermEntry, extra_notes: Sequence[str]) -> TermEntry:
    notes = entry.notes + tuple(extra_notes)
    if entry.english and entry.japanese:
        return replace(entry, status="standardized", notes=notes)
    missing = "english" if not entry.english else "japanese"
    return replace(entry, notes=notes + (f"kept raw: missing {missing} rendering",))


def _pair_label(pair: Pair) -> str:
    return f"english={pair[0]!r} japanese={pair[1]!r}"


def apply_standardization(entries: Sequence[TermEntry], gateway: LlmGateway,
                          *, max_attempts: int = 2,
                          temperature: float = 0.0,
                          feedback: str | None = None,
                          extra_metrics: Mapping[str, str] | None = None,
                          ) -> tuple[list[TermEntry], StandardizationReport]:
    """Standardize every variant group; escalated groups pass through unchanged."""
    groups = group_variants(entries)
    out: list[TermEntry] = []
    outcomes: list[GroupOutcome] = []
    for group in groups:
        try:
            decision = standardize_group(group, gateway, max_attempts=max_attempts,
                                         temperature=temperature, feedback=feedback)
        except ConstraintViolation as exc:
            outcomes.append(GroupOutcome(law_id=group.law_id, chinese=group.chinese,
                                         occurrences=len(group.entries),
                                         decision=None, violation=str(exc)))
            note = f"standardization escalated for review: {exc}"
            out.extend(replace(e, notes=e.notes + (note,)) for e in group.entries)
            continue
        outcomes.append(GroupOutcome(law_id=group.law_id, chinese=group.chinese,
                                     occurrences=len(group.entries),
                                     decision=decision, violation=None))
        canonical_notes = [f"merged rendering: {_pair_label(p)}" for p in decision.merged]
        out.append(_finalize(_representative(group, decision.best), canonical_notes))
        for pair in decision.distinct:
            out.append(_finalize(_representative(group, pair),
                                 ["preserved as a distinct meaning"]))
    stats = compute_standardization_stats(entries, out, extra_metrics=extra_metrics)
    return out, StandardizationReport(outcomes=tuple(outcomes), stats=stats)


def dedup_entries(entries: Sequence[TermEntry]) -> list[TermEntry]:
    """Drop exact (law, chinese, english, japanese) repeats; first one wins."""
    seen: set[tuple[str, str, str, str]] = set()
    out: list[TermEntry] = []
    for entry in entries:
        key = (entry.law_id, entry.chinese, entry.english or "", entry.japanese or "")
        if key in seen:
            continue
        seen.add(key)
        out.append(entry)
    return out


_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div)


def evaluate_metric_formula(formula: str, variables: Mapping[str, float]) -> float:
    """Evaluate an arithmetic-only formula over named count variables."""
    try:
        tree = ast.parse(formula, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"invalid metric formula {formula!r}: {exc.msg}") from exc

    def ev(node: ast.AST) -> float:
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.BinOp) and isinstance(node.op, _ALLOWED_BINOPS):
            left, right = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            return left / right
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            value = ev(node.operand)
            return -value if isinstance(node.op, ast.USub) else value
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id not in variables:
                raise ValueError(f"unknown variable {node.id!r} in metric formula")
            return float(variables[node.id])
        raise ValueError(f"unsupported element in metric formula: {type(node).__name__}")

    return ev(tree)


def compute_standardization_stats(
    before: Sequence[TermEntry] | tuple[int, int, int],
    after: Sequence[TermEntry] | None = None,
    *,
    extra_metrics: Mapping[str, str] | None = None,
) -> StandardizationStats:
    """Merge statistics, from entry lists or from bare counts.

    Counts mode takes (original, standardized, unique_chinese) with after=None.
    Rates are one-decimal percents.
    """
    if after is None:
        if not (isinstance(before, tuple) and len(before) == 3
                and all(isinstance(x, int) for x in before)):
            raise TypeError("counts mode needs a (original, standardized, "
                            "unique_chinese) tuple of ints")
        original, standardized, unique_chinese = before
    else:
        original = len(before)
        standardized = len(after)
        unique_chinese = len({(e.law_id, e.chinese) for e in after})
    if original < 1 or standardized < 1:
        raise ValueError("counts must be positive")
    variants_merged = original - standardized
    variables = {
        "original": original,
        "standardized": standardized,
        "variants_merged": variants_merged,
        "unique_chinese": unique_chinese,
    }
    extra = {name: evaluate_metric_formula(formula, variables)
             for name, formula in (extra_metrics or {}).items()}
    return StandardizationStats(
        original=original,
        standardized=standardized,
        variants_merged=variants_merged,
        unique_chinese=unique_chinese,
        reduction_rate=pct(variants_merged, original),
        independence_rate=pct(unique_chinese, standardized),
        extra=extra,
    )
