from __future__ import annotations

from pathlib import Path

import pytest

from lexalign.aligner import AlignedPair, AlignmentCandidate, TrilingualTriple
from lexalign.gateway import LlmGateway, ProviderConfig, RetryPolicy
from lexalign.mockllm import MockProvider
from lexalign.model import ArticleSegment, LawInfo, TermEntry
from lexalign.synthetic import write_corpus


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory: pytest.TempPathFactory) -> Path:
    directory = tmp_path_factory.mktemp("corpus")
    write_corpus(directory)
    return directory


def make_gateway(seed: int = 0, *, rules=(), max_attempts: int = 3,
                 recorder=None, sleeper=None, max_in_flight: int = 8):
    provider = MockProvider(seed=seed, rules=rules)
    config = ProviderConfig(
        model_id="mock-model",
        max_in_flight=max_in_flight,
        retry=RetryPolicy(max_attempts=max_attempts, base_backoff=0.01),
    )
    kwargs = {}
    if recorder is not None:
        kwargs["recorder"] = recorder
    if sleeper is not None:
        kwargs["sleeper"] = sleeper
    return LlmGateway(provider, config, **kwargs)


@pytest.fixture
def mock_gateway() -> LlmGateway:
    return make_gateway()


def make_entry(**overrides) -> TermEntry:
    values = dict(
        chinese="工会",
        context_zh="第一条 《工会》是职工自愿结合的工人阶级的群众组织。",
        law_id="demo-union",
        article_number=1,
        japanese="工会",
        english="工会",
        context_ja="第１条 《工会》は職員が自発的に結合する大衆組織である。",
        context_en="Article 1. The 《工会》 is a mass organization.",
        explanation="一种群众组织。",
    )
    values.update(overrides)
    return TermEntry(**values)


def make_segment(statute_id: str, language: str, article_number: int,
                 text: str) -> ArticleSegment:
    return ArticleSegment(
        statute_id=statute_id,
        language=language,
        article_number=article_number,
        structural_path=(),
        text=text,
        word_count=max(1, len(text.split())),
    )


def make_triple(zh_text: str, en_text: str, ja_text: str,
                law_id: str = "demo-union", article_number: int = 1) -> TrilingualTriple:
    zh = make_segment(law_id, "zh", article_number, zh_text)
    en = make_segment(law_id, "en", article_number, en_text)
    ja = make_segment(law_id, "ja", article_number, ja_text)

    def pair(target: ArticleSegment) -> AlignedPair:
        candidate = AlignmentCandidate(
            source_ref=(law_id, article_number, "zh"),
            target_ref=(target.statute_id, target.article_number, target.language),
            method="rule",
            similarity=1.0,
        )
        return AlignedPair(candidate=candidate, rerank_score=1.0,
                           attempts=1, status="accepted")

    return TrilingualTriple(zh=zh, en=en, ja=ja,
                            pair_zh_en=pair(en), pair_zh_ja=pair(ja))


def make_law(law_id: str = "demo-union", domain_tag: str = "labor") -> LawInfo:
    return LawInfo(
        law_id=law_id,
        titles={"zh": "示例法", "ja": "サンプル法", "en": "Sample Law"},
        year=2020,
        domain_tag=domain_tag,
    )
