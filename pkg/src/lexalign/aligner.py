"""Cross-language article alignment: rule pass, embedding recall, rerank gate.

Alignment never drops an article: every source ends up accepted, needs_review,
or failed (provider gave out), and the latter two become review tasks upstream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .gateway import LlmGateway, ProviderError
from .model import ArticleSegment

Ref = tuple[str, int, str]  # (statute_id, article_number, language)


class DimensionMismatch(ValueError):
    pass


class ZeroVector(ValueError):
    pass


@dataclass(frozen=True)
class AlignmentCandidate:
    source_ref: Ref
    target_ref: Ref
    method: str  # "rule" | "embedding"
    similarity: float

    def __post_init__(self) -> None:
        if self.method not in ("rule", "embedding"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class AlignedPair:
    candidate: AlignmentCandidate | None
    rerank_score: float | None
    attempts: int
    status: str  # "accepted" | "needs_review" | "failed"
    qc_notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.status not in ("accepted", "needs_review", "failed"):
            raise ValueError(f"unknown status {self.status!r}")


@dataclass(frozen=True)
class AlignPolicy:
    threshold: float = 0.5        # acceptance bar on the normalized [0, 1] rerank score
    max_attempts: int = 3
    k: int = 3                    # widened to 2k then 4k on retries
    text_window: int = 480        # rerank query/document chars, doubled on retries


@dataclass(frozen=True)
class TrilingualTriple:
    zh: ArticleSegment
    en: ArticleSegment
    ja: ArticleSegment
    pair_zh_en: AlignedPair
    pair_zh_ja: AlignedPair


@dataclass(frozen=True)
class UnmatchedArticle:
    zh_ref: Ref
    missing: tuple[str, ...]
    notes: tuple[str, ...]


@dataclass(frozen=True)
class TrilingualAssembly:
    triples: tuple[TrilingualTriple, ...]
    unmatched: tuple[UnmatchedArticle, ...]


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    if len(a) != len(b):
        raise DimensionMismatch(f"dimensions differ: {len(a)} vs {len(b)}")
    norm_a = math.sqrt(sum(x * x for x in a))
    norm_b = math.sqrt(sum(x * x for x in b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine undefined for a zero vector")
    return sum(x * y for x, y in zip(a, b)) / (norm_a * norm_b)


def rule_align(source_segments: Sequence[ArticleSegment],
               target_segments: Sequence[ArticleSegment]) -> list[AlignmentCandidate]:
    """Pair articles sharing a number; a partial bijection, similarity 1.0."""
    targets_by_number = {t.article_number: t for t in target_segments}
    out = []
    for source in source_segments:
        target = targets_by_number.get(source.article_number)
        if target is not None:
            out.append(AlignmentCandidate(
                source_ref=source.ref, target_ref=target.ref,
                method="rule", similarity=1.0,
            ))
    return out


def _top_k_for_source(source: ArticleSegment, targets: Sequence[ArticleSegment],
                      source_vec: np.ndarray, target_matrix: np.ndarray,
                      k: int) -> list[AlignmentCandidate]:
    sims = target_matrix @ source_vec
    # Sort by similarity then article number so shuffled target order cannot
    # change the candidate set.
    ranked = sorted(range(len(targets)), key=lambda j: (-sims[j], targets[j].article_number))
    return [
        AlignmentCandidate(source_ref=source.ref, target_ref=targets[j].ref,
                           method="embedding", similarity=float(sims[j]))
        for j in ranked[:min(k, len(targets))]
    ]


def embed_align(source_segments: Sequence[ArticleSegment],
                target_segments: Sequence[ArticleSegment],
                gateway: LlmGateway, k: int = 3) -> list[AlignmentCandidate]:
    """Top-k targets per source by embedding cosine, descending."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not source_segments or not target_segments:
        return []
    source_vectors = gateway.embed([s.text for s in source_segments])
    target_vectors = gateway.embed([t.text for t in target_segments])
    target_matrix = np.array([v.values for v in target_vectors], dtype=float)
    out: list[AlignmentCandidate] = []
    for source, vec in zip(source_segments, source_vectors):
        out.extend(_top_k_for_source(source, target_segments,
                                     np.array(vec.values, dtype=float), target_matrix, k))
    return out


def merge_candidates(rule: Sequence[AlignmentCandidate],
                     embedding: Sequence[AlignmentCandidate]) -> list[AlignmentCandidate]:
    """Union keyed by (source_ref, target_ref); rule wins duplicates and sorts first."""
    seen: set[tuple[Ref, Ref]] = set()
    out: list[AlignmentCandidate] = []
    for candidate in list(rule) + list(embedding):
        key = (candidate.source_ref, candidate.target_ref)
        if key in seen:
            continue
        seen.add(key)
        out.append(candidate)
    return out


def _qc_notes(source: ArticleSegment, target: ArticleSegment, score: float) -> tuple[str, ...]:
    ratio = len(target.text) / max(1, len(source.text))
    notes = [
        f"len_ratio={ratio:.2f}",
        f"number_match={'yes' if source.article_number == target.article_number else 'no'}",
        f"rerank_score={score:.3f}",
    ]
    if not 0.2 <= ratio <= 5.0:
        notes.append("warn: length ratio outside [0.2, 5.0]")
    return tuple(notes)


Regenerate = Callable[[ArticleSegment, int], Sequence[AlignmentCandidate]]


def align_article(source: ArticleSegment,
                  candidates: Sequence[AlignmentCandidate],
                  targets_by_ref: Mapping[Ref, ArticleSegment],
                  gateway: LlmGateway,
                  policy: AlignPolicy = AlignPolicy(),
                  regenerate: Regenerate | None = None) -> AlignedPair:
    """Rerank the candidate set; below-threshold results retry with widened k."""
    current = list(candidates)
    window = policy.text_window
    best: AlignmentCandidate | None = None
    best_score: float | None = None
    attempts = 0
    while attempts < policy.max_attempts:
        attempts += 1
        if current:
            texts = [targets_by_ref[c.target_ref].text[:window] for c in current]
            try:
                ranked = gateway.rerank(source.text[:window], texts)
            except (ProviderError, TimeoutError) as exc:
                return AlignedPair(
                    candidate=best, rerank_score=best_score, attempts=attempts,
                    status="failed", qc_notes=(f"provider error: {exc}",),
                )
            top_index, top_score = ranked[0]
            if best_score is None or top_score > best_score:
                best = current[top_index]
                best_score = top_score
            if top_score >= policy.threshold:
                target = targets_by_ref[current[top_index].target_ref]
                return AlignedPair(
                    candidate=current[top_index], rerank_score=top_score, attempts=attempts,
                    status="accepted", qc_notes=_qc_notes(source, target, top_score),
                )
        if regenerate is None or attempts >= policy.max_attempts:
            break
        window *= 2
        current = list(regenerate(source, policy.k * (2 ** attempts)))
    notes = ["below acceptance threshold" if best is not None else "no candidates"]
    if best is not None and best_score is not None:
        notes.extend(_qc_notes(source, targets_by_ref[best.target_ref], best_score))
    return AlignedPair(candidate=best, rerank_score=best_score, attempts=attempts,
                       status="needs_review", qc_notes=tuple(notes))


def align_statutes(source_segments: Sequence[ArticleSegment],
                   target_segments: Sequence[ArticleSegment],
                   gateway: LlmGateway,
                   policy: AlignPolicy = AlignPolicy(),
                   rerank_gateway: LlmGateway | None = None) -> list[AlignedPair]:
    """Full alignment of one statute pair; one AlignedPair per source article.

    `gateway` serves the embedding calls; reranking goes through
    `rerank_gateway` when given, so the two roles can use different providers.
    """
    scorer = rerank_gateway if rerank_gateway is not None else gateway
    if not source_segments:
        return []
    if not target_segments:
        return [AlignedPair(candidate=None, rerank_score=None, attempts=0,
                            status="needs_review", qc_notes=("no target articles",))
                for _ in source_segments]
    rule = rule_align(source_segments, target_segments)
    source_vectors = gateway.embed([s.text for s in source_segments])
    target_vectors = gateway.embed([t.text for t in target_segments])
    target_matrix = np.array([v.values for v in target_vectors], dtype=float)
    targets_by_ref = {t.ref: t for t in target_segments}
    rule_by_source: dict[Ref, list[AlignmentCandidate]] = {}
    for candidate in rule:
        rule_by_source.setdefault(candidate.source_ref, []).append(candidate)
    vec_by_source = {s.ref: np.array(v.values, dtype=float)
                     for s, v in zip(source_segments, source_vectors)}

    pairs: list[AlignedPair] = []
    for source in source_segments:
        def regenerate(seg: ArticleSegment, k: int) -> list[AlignmentCandidate]:
            embedded = _top_k_for_source(seg, target_segments, vec_by_source[seg.ref],
                                         target_matrix, k)
            return merge_candidates(rule_by_source.get(seg.ref, []), embedded)

        merged = regenerate(source, policy.k)
        pairs.append(align_article(source, merged, targets_by_ref, scorer,
                                   policy, regenerate=regenerate))
    return pairs


def build_trilingual(zh_segments: Sequence[ArticleSegment],
                     en_segments: Sequence[ArticleSegment],
                     ja_segments: Sequence[ArticleSegment],
                     zh_en_pairs: Sequence[AlignedPair],
                     zh_ja_pairs: Sequence[AlignedPair]) -> TrilingualAssembly:
    """One triple per zh article with accepted pairs both ways; rest unmatched."""
    zh_by_ref = {s.ref: s for s in zh_segments}
    en_by_ref = {s.ref: s for s in en_segments}
    ja_by_ref = {s.ref: s for s in ja_segments}

    def by_source(pairs: Sequence[AlignedPair]) -> dict[Ref, AlignedPair]:
        out: dict[Ref, AlignedPair] = {}
        for pair in pairs:
            if pair.candidate is not None:
                out.setdefault(pair.candidate.source_ref, pair)
        return out

    en_map = by_source(zh_en_pairs)
    ja_map = by_source(zh_ja_pairs)

    triples: list[TrilingualTriple] = []
    unmatched: list[UnmatchedArticle] = []
    for zh_seg in zh_segments:
        pair_en = en_map.get(zh_seg.ref)
        pair_ja = ja_map.get(zh_seg.ref)
        missing: list[str] = []
        notes: list[str] = []
        for language, pair in (("en", pair_en), ("ja", pair_ja)):
            if pair is None or pair.status != "accepted":
                missing.append(language)
                status = pair.status if pair is not None else "absent"
                notes.append(f"{language}: {status}")
                if pair is not None:
                    notes.extend(pair.qc_notes)
        if missing:
            unmatched.append(UnmatchedArticle(zh_ref=zh_seg.ref, missing=tuple(missing),
                                              notes=tuple(notes)))
            continue
        assert pair_en is not None and pair_en.candidate is not None
        assert pair_ja is not None and pair_ja.candidate is not None
        triples.append(TrilingualTriple(
            zh=zh_seg,
            en=en_by_ref[pair_en.candidate.target_ref],
            ja=ja_by_ref[pair_ja.candidate.target_ref],
            pair_zh_en=pair_en,
            pair_zh_ja=pair_ja,
        ))
    return TrilingualAssembly(triples=tuple(triples), unmatched=tuple(unmatched))
