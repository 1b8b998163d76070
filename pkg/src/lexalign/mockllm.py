"""Deterministic offline provider for tests and --mock runs.

Every response is a pure function of (request body, seed): embeddings are
character-trigram feature hashes, rerank scores are embedding cosines mapped
to [0, 1], and chat answers come from fixture rules ("when the prompt contains
X, emit Y") with built-in task responders behind them. The task responders
recognize this package's own prompt shapes and synthesize valid answers from
the prompt content alone; term spans in synthetic corpora are marked with
《...》 (seen by both extraction streams) or 〈...〉 (zh->en stream only).
"""
from __future__ import annotations

import json
import math
import re
import threading
import time
import unicodedata
from dataclasses import dataclass
from hashlib import blake2b
from pathlib import Path
from typing import Any, Sequence


@dataclass(frozen=True)
class MockRule:
    contains: str
    response: str


def load_mock_rules(path: str | Path) -> tuple[MockRule, ...]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return tuple(MockRule(contains=item["contains"], response=item["response"]) for item in data)


_DOUBLE_SPAN_RE = re.compile(r"《([^《》]+)》")
_SINGLE_SPAN_RE = re.compile(r"〈([^〈〉]+)〉")
_SENTENCE_DELIMITERS = "。！？；;!?\n"

# Markers the responders key on; the prompt templates carry these lines.
EXTRACTION_MARKER = "The input format is: [Chinese text]"
AUTOCOMPLETE_MARKER = 'Return pure JSON with keys "term" and "context"'
STANDARDIZE_MARKER = "Variants (JSON):"
JUDGE_MARKER = "Respond with a single integer score between 0 and 100"
REFINE_MARKER = "Split the following statute block"


def _sentence_around(text: str, index: int) -> str:
    start = 0
    for i in range(index - 1, -1, -1):
        if text[i] in _SENTENCE_DELIMITERS:
            start = i + 1
            break
    end = len(text)
    for i in range(index, len(text)):
        if text[i] in _SENTENCE_DELIMITERS:
            end = i + 1
            break
    return text[start:end].strip()


class MockProvider:
    """In-process provider; also instruments concurrency for gateway tests."""

    def __init__(self, seed: int = 0, rules: Sequence[MockRule] = (),
                 latency: float = 0.0, embedding_dim: int = 192):
        self.seed = seed
        self.rules = tuple(rules)
        self.latency = latency
        self.embedding_dim = embedding_dim
        self.requests: list[tuple[str, bytes]] = []
        self.max_in_flight_observed = 0
        self._in_flight = 0
        self._lock = threading.Lock()
        self._gram_cache: dict[str, tuple[int, float]] = {}

    # --- provider protocol -------------------------------------------------

    def send(self, kind: str, body: bytes) -> dict[str, Any]:
        with self._lock:
            self._in_flight += 1
            self.max_in_flight_observed = max(self.max_in_flight_observed, self._in_flight)
            self.requests.append((kind, body))
        try:
            if self.latency:
                time.sleep(self.latency)
            payload = json.loads(body.decode("utf-8"))
            if kind == "chat":
                return self._chat(payload)
            if kind == "embed":
                return self._embed(payload)
            if kind == "rerank":
                return self._rerank(payload)
            raise ValueError(f"unknown request kind {kind!r}")
        finally:
            with self._lock:
                self._in_flight -= 1

    # --- chat ---------------------------------------------------------------

    def _chat(self, payload: dict[str, Any]) -> dict[str, Any]:
        prompt = "\n".join(m["content"] for m in payload["messages"])
        content = self._complete(prompt)
        return {
            "choices": [{"message": {"role": "assistant", "content": content}}],
            "usage": {
                "prompt_tokens": max(1, len(prompt) // 4),
                "completion_tokens": max(1, len(content) // 4),
            },
        }

    def _complete(self, prompt: str) -> str:
        for rule in self.rules:
            if rule.contains in prompt:
                return rule.response
        if EXTRACTION_MARKER in prompt:
            return self._respond_extraction(prompt)
        if AUTOCOMPLETE_MARKER in prompt:
            return self._respond_autocomplete(prompt)
        if STANDARDIZE_MARKER in prompt:
            return self._respond_standardize(prompt)
        if JUDGE_MARKER in prompt:
            return self._respond_judge(prompt)
        if REFINE_MARKER in prompt:
            return self._respond_refine(prompt)
        return "mock-completion:" + self._digest(prompt)[:16]

    def _digest(self, text: str) -> str:
        return blake2b(f"{self.seed}|{text}".encode("utf-8"), digest_size=16).hexdigest()

    def _respond_extraction(self, prompt: str) -> str:
        ja_stream = '"japanese"' in prompt
        user = prompt.rsplit("User Input:", 1)[-1]
        zh_text, _, target_text = user.partition("\t")
        seen: set[str] = set()
        terms: list[dict[str, str]] = []
        spans = [(m.start(), m.group(1), True) for m in _DOUBLE_SPAN_RE.finditer(zh_text)]
        if not ja_stream:
            spans += [(m.start(), m.group(1), False) for m in _SINGLE_SPAN_RE.finditer(zh_text)]
        for start, term, _ in sorted(spans):
            if term in seen:
                continue
            seen.add(term)
            context = _sentence_around(zh_text, start)
            at = target_text.find(term)
            target_context = _sentence_around(target_text, at) if at >= 0 else context
            item: dict[str, str] = {"chinese": term}
            if ja_stream:
                item["japanese"] = term
                item["context"] = context
                item["ja_context"] = target_context
            else:
                item["english"] = term
                item["context"] = context
                item["en_context"] = target_context
            item["explanation"] = f"本法语境下的专门概念：{term}。"
            terms.append(item)
        return json.dumps({"terms": terms}, ensure_ascii=False)

    def _respond_autocomplete(self, prompt: str) -> str:
        term_match = re.search(r"Term \(Chinese\): (.+)", prompt)
        article_match = re.search(r"Aligned article text[^\n]*\n(.*?)\n\nReturn pure JSON",
                                  prompt, re.DOTALL)
        if not term_match or not article_match:
            return json.dumps({"term": "", "context": ""}, ensure_ascii=False)
        term = term_match.group(1).strip()
        article = article_match.group(1)
        at = article.find(term)
        if at < 0:
            return json.dumps({"term": "", "context": ""}, ensure_ascii=False)
        return json.dumps({"term": term, "context": _sentence_around(article, at)},
                          ensure_ascii=False)

    def _respond_standardize(self, prompt: str) -> str:
        blob = prompt.rsplit(STANDARDIZE_MARKER, 1)[-1]
        blob = blob.split("Output Format", 1)[0].strip()
        try:
            variants = json.loads(blob)
        except json.JSONDecodeError:
            return json.dumps({"best": {}, "merged": [], "distinct": [],
                               "rationale": "variants block unreadable"}, ensure_ascii=False)
        from .standardizer import variant_merge_key  # late import, avoids a cycle

        def pair(v: dict[str, Any]) -> tuple[str, str]:
            return (v.get("english") or "", v.get("japanese") or "")

        def cluster_key(v: dict[str, Any]) -> tuple[str, str]:
            en, ja = pair(v)
            return (variant_merge_key(en, "en"), variant_merge_key(ja, "ja"))

        clusters: dict[tuple[str, str], list[dict[str, Any]]] = {}
        order: list[tuple[str, str]] = []
        for v in variants:
            key = cluster_key(v)
            if key not in clusters:
                clusters[key] = []
                order.append(key)
            clusters[key].append(v)
        best_key = max(order, key=lambda k: (len(clusters[k]), -order.index(k)))
        best_cluster = clusters[best_key]
        counts: dict[tuple[str, str], int] = {}
        for v in best_cluster:
            counts[pair(v)] = counts.get(pair(v), 0) + 1
        best = max(best_cluster, key=lambda v: (counts[pair(v)], -best_cluster.index(v)))
        merged: list[dict[str, str]] = []
        seen_pairs = {pair(best)}
        for v in best_cluster:
            if pair(v) not in seen_pairs:
                seen_pairs.add(pair(v))
                merged.append({"english": pair(v)[0], "japanese": pair(v)[1]})
        # every unique pair outside the best cluster must be listed: the
        # decision schema accounts for each variant exactly once
        distinct: list[dict[str, str]] = []
        for key in order:
            if key == best_key:
                continue
            listed: set[tuple[str, str]] = set()
            for v in clusters[key]:
                if pair(v) not in listed:
                    listed.add(pair(v))
                    distinct.append({"english": pair(v)[0], "japanese": pair(v)[1]})
        return json.dumps({
            "best": {"english": pair(best)[0], "japanese": pair(best)[1]},
            "merged": merged,
            "distinct": distinct,
            "rationale": "kept the most frequent rendering; folded case/article/plural "
                         "variants; preserved renderings with different meanings",
        }, ensure_ascii=False)

    def _respond_judge(self, prompt: str) -> str:
        digest = blake2b(f"{self.seed}|judge|{prompt}".encode("utf-8"), digest_size=8).digest()
        return str(60 + digest[0] % 40)

    def _respond_refine(self, prompt: str) -> str:
        tail = prompt.rsplit(REFINE_MARKER, 1)[-1].split(":", 1)[-1]
        block = tail.split("\n\nReturn pure JSON", 1)[0].strip()
        return json.dumps({"blocks": [block]}, ensure_ascii=False)

    # --- embeddings / rerank -------------------------------------------------

    def _gram_bucket(self, gram: str) -> tuple[int, float]:
        cached = self._gram_cache.get(gram)
        if cached is not None:
            return cached
        digest = blake2b(f"{self.seed}|{gram}".encode("utf-8"), digest_size=8).digest()
        index = int.from_bytes(digest[:4], "big") % self.embedding_dim
        sign = 1.0 if digest[4] & 1 else -1.0
        self._gram_cache[gram] = (index, sign)
        return index, sign

    def embed_text(self, text: str) -> tuple[float, ...]:
        """Unit-norm feature-hash embedding; identical texts embed identically."""
        normalized = " ".join(unicodedata.normalize("NFKC", text).casefold().split())
        values = [0.0] * self.embedding_dim
        grams = ([normalized[i:i + 3] for i in range(len(normalized) - 2)]
                 if len(normalized) >= 3 else [normalized])
        for gram in grams:
            index, sign = self._gram_bucket(gram)
            values[index] += sign
        norm = math.sqrt(sum(v * v for v in values))
        if norm == 0.0:
            index, sign = self._gram_bucket("\x00" + normalized)
            values[index] = sign
            norm = 1.0
        return tuple(v / norm for v in values)

    def _embed(self, payload: dict[str, Any]) -> dict[str, Any]:
        return {"data": [{"embedding": list(self.embed_text(t))} for t in payload["input"]]}

    def _rerank(self, payload: dict[str, Any]) -> dict[str, Any]:
        query_vec = self.embed_text(payload["query"])
        results = []
        for i, doc in enumerate(payload["documents"]):
            doc_vec = self.embed_text(doc)
            cosine = sum(a * b for a, b in zip(query_vec, doc_vec))
            results.append({"index": i, "relevance_score": (cosine + 1.0) / 2.0})
        return {"results": results}
