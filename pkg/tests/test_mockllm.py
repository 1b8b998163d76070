from __future__ import annotations

import json
import math

import pytest

from lexalign.extractor import (auto_complete, build_extraction_prompt,
                                extract_stream, CompletionRefused)
from lexalign.gateway import ChatMessage, ChatRequest
from lexalign.mockllm import (JUDGE_MARKER, MockProvider, MockRule,
                              load_mock_rules)

from conftest import make_gateway, make_triple

ZH = "第一条 经营者销售《商品》时，不得利用〈虚假宣传〉误导消费者。"
EN = "Article 1. A business operator selling 《商品》 shall not mislead consumers through 〈虚假宣传〉."
JA = "第１条 事業者は《商品》を販売する際、〈虚假宣传〉で消費者を誤導してはならない。"


def chat(gateway, text: str) -> str:
    request = ChatRequest(model_id="mock-model",
                          messages=(ChatMessage(role="user", content=text),))
    return gateway.chat(request).content


class TestDeterminism:
    def test_same_seed_same_everything(self):
        a, b = make_gateway(seed=3), make_gateway(seed=3)
        assert chat(a, "anything") == chat(b, "anything")
        assert a.embed(["条款"]) == b.embed(["条款"])
        assert a.rerank("q", ["x", "y"]) == b.rerank("q", ["x", "y"])

    def test_different_seed_different_embedding(self):
        a, b = make_gateway(seed=1), make_gateway(seed=2)
        assert a.embed(["条款"]) != b.embed(["条款"])

    def test_judge_deterministic_and_in_range(self):
        gw = make_gateway(seed=5)
        prompt = f"{JUDGE_MARKER}\nEvaluate coverage of this termbase."
        first = chat(gw, prompt)
        assert first == chat(make_gateway(seed=5), prompt)
        assert 60 <= int(first) <= 99

    def test_judge_varies_with_prompt(self):
        gw = make_gateway(seed=5)
        scores = {chat(gw, f"{JUDGE_MARKER}\ndimension {i}") for i in range(12)}
        assert len(scores) > 1


class TestEmbeddings:
    def test_unit_norm_and_dimension(self):
        provider = MockProvider(seed=0, embedding_dim=64)
        out = provider.send("embed", json.dumps(
            {"model": "m", "input": ["第一条 总则"]}).encode())
        vector = out["data"][0]["embedding"]
        assert len(vector) == 64
        assert math.isclose(math.sqrt(sum(x * x for x in vector)), 1.0,
                            rel_tol=1e-9)

    def test_similar_texts_score_higher(self):
        gw = make_gateway()
        base = "第五条 国家保护消费者的合法权益不受侵害。"
        near = "第五条 国家保护消费者的合法权益。"
        far = "Article 9. The council shall meet annually."
        [(top_idx, top), (_, low)] = gw.rerank(base, [near, far])
        assert top_idx == 0 and top > low

    def test_rerank_scores_within_unit_interval(self):
        gw = make_gateway()
        for _, score in gw.rerank("工会", ["工会", "劳动合同", "annual meeting"]):
            assert 0.0 <= score <= 1.0

    def test_identical_text_scores_one(self):
        gw = make_gateway()
        (idx, score), *_ = gw.rerank("数据处理者", ["数据处理者", "其他文本"])
        assert idx == 0
        assert math.isclose(score, 1.0, rel_tol=1e-9)


class TestExtractionResponder:
    def test_double_brackets_seen_by_both_streams(self):
        triple = make_triple(ZH, EN, JA)
        gw = make_gateway()
        en_terms = {e.chinese for e in extract_stream(triple, "zh_en", gw)}
        ja_terms = {e.chinese for e in extract_stream(triple, "zh_ja", gw)}
        assert "商品" in en_terms and "商品" in ja_terms

    def test_single_brackets_only_in_english_stream(self):
        triple = make_triple(ZH, EN, JA)
        gw = make_gateway()
        en_terms = {e.chinese for e in extract_stream(triple, "zh_en", gw)}
        ja_terms = {e.chinese for e in extract_stream(triple, "zh_ja", gw)}
        assert "虚假宣传" in en_terms
        assert "虚假宣传" not in ja_terms

    def test_contexts_grounded_in_articles(self):
        triple = make_triple(ZH, EN, JA)
        gw = make_gateway()
        for entry in extract_stream(triple, "zh_en", gw):
            assert entry.context_zh in ZH.replace("\n", "")
            assert entry.context_en and entry.context_en in EN

    def test_response_is_valid_json_terms_list(self):
        prompt = build_extraction_prompt((ZH, EN), "zh_en").to_text()
        payload = json.loads(chat(make_gateway(), prompt))
        assert isinstance(payload["terms"], list)
        assert payload["terms"][0]["chinese"] == "商品"


class TestAutoCompleteResponder:
    def test_grounded_completion_succeeds(self):
        triple = make_triple(ZH, EN, JA)
        gw = make_gateway()
        [entry] = [e for e in extract_stream(triple, "zh_en", gw)
                   if e.chinese == "商品"]
        assert entry.japanese is None
        completed = auto_complete(entry, triple, gw)
        assert completed.japanese == "商品"
        assert completed.context_ja and "商品" in completed.context_ja
        assert completed.provenance == "auto_completed"

    def test_term_absent_from_article_refused(self):
        ja_without_term = "第１条 事業者は消費者を誤導してはならない。"
        triple = make_triple(ZH, EN, ja_without_term)
        gw = make_gateway()
        [entry] = [e for e in extract_stream(triple, "zh_en", gw)
                   if e.chinese == "商品"]
        with pytest.raises(CompletionRefused, match="Japanese"):
            auto_complete(entry, triple, gw)


class TestRules:
    def test_rules_override_builtin_responders(self):
        rule = MockRule(contains=JUDGE_MARKER, response="17")
        gw = make_gateway(rules=(rule,))
        assert chat(gw, f"{JUDGE_MARKER}\nanything") == "17"

    def test_first_match_wins(self):
        rules = (MockRule(contains="alpha", response="first"),
                 MockRule(contains="alpha beta", response="second"))
        gw = make_gateway(rules=rules)
        assert chat(gw, "alpha beta gamma") == "first"

    def test_load_rules_from_json(self, tmp_path):
        path = tmp_path / "rules.json"
        path.write_text(json.dumps([
            {"contains": "ping", "response": "pong"},
        ]), encoding="utf-8")
        rules = load_mock_rules(path)
        assert rules == (MockRule(contains="ping", response="pong"),)

    def test_unrecognized_prompt_gets_tagged_fallback(self):
        reply = chat(make_gateway(), "tell me a story")
        assert reply.startswith("mock-completion:")


class TestRequestLog:
    def test_requests_recorded_with_kind(self):
        provider = MockProvider(seed=0)
        provider.send("embed", json.dumps({"model": "m", "input": ["a"]}).encode())
        provider.send("rerank", json.dumps(
            {"model": "m", "query": "a", "documents": ["b"]}).encode())
        assert [kind for kind, _ in provider.requests] == ["embed", "rerank"]
