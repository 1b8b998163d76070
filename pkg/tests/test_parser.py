from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexalign.model import ArticleSegment, StatuteDocument
from lexalign.parser import (EmptyCorpus, NoMarkersFound, compute_corpus_stats,
                             count_words, format_chinese_numeral, format_stats_rows,
                             parse_chinese_numeral, segment_statute)


def doc(body: str, language: str = "zh", doc_id: str = "law-1") -> StatuteDocument:
    return StatuteDocument(id=doc_id, title="T", language=language, year=2020,
                           domain_tag="demo", body=body)


class TestChineseNumerals:
    @pytest.mark.parametrize("text,value", [
        ("一", 1), ("二", 2), ("两", 2), ("十", 10), ("十五", 15), ("二十", 20),
        ("二十一", 21), ("九十九", 99), ("一百", 100), ("一百零五", 105),
        ("一百一十", 110), ("五百二十三", 523), ("一千", 1000), ("一千零一", 1001),
        ("一千零一十", 1010), ("三千四百五十六", 3456), ("九千九百九十九", 9999),
    ])
    def test_hand_oracles(self, text, value):
        assert parse_chinese_numeral(text) == value

    def test_arabic_and_fullwidth_digits(self):
        assert parse_chinese_numeral("42") == 42
        assert parse_chinese_numeral("４２") == 42

    @pytest.mark.parametrize("bad", ["", "零", "百五", "一二三四五六", "abc"])
    def test_rejects_garbage(self, bad):
        with pytest.raises(ValueError):
            parse_chinese_numeral(bad)

    @given(st.integers(min_value=1, max_value=9999))
    @settings(max_examples=300, deadline=None)
    def test_round_trip_property(self, n):
        assert parse_chinese_numeral(format_chinese_numeral(n)) == n


ZH_BODY = """# 示例法

第一章 总则

第一条 为了示范分段，制定本法。
第二条 本法适用于全国。
补充一句，属于第二条。

第二章 罚则

第一节 一般规定

第三条 违反本法的，依法处罚。
"""

EN_BODY = """# Sample Law

Chapter I General Provisions

Article 1. This law exists to demonstrate segmentation.
Article 2. It applies nationwide.
A continuation line belonging to article 2.

Chapter II Penalties

Section 1. General rules

Article 3. Violations are punished according to law.
"""


class TestSegmentation:
    def test_chinese_structure(self):
        result = segment_statute(doc(ZH_BODY))
        numbers = [s.article_number for s in result.segments]
        assert numbers == [1, 2, 3]
        assert result.segments[0].structural_path == (("chapter", 1),)
        assert result.segments[2].structural_path == (("chapter", 2), ("section", 1))
        assert "补充一句" in result.segments[1].text
        assert result.segments[0].text.startswith("第一条")
        assert result.warnings == ()

    def test_english_structure(self):
        result = segment_statute(doc(EN_BODY, language="en"))
        assert [s.article_number for s in result.segments] == [1, 2, 3]
        assert result.segments[2].structural_path == (("chapter", 2), ("section", 1))
        assert "continuation line" in result.segments[1].text

    def test_discontinuity_warns_not_raises(self):
        body = "第一条 甲。\n第三条 乙。\n"
        result = segment_statute(doc(body))
        assert [s.article_number for s in result.segments] == [1, 3]
        assert len(result.warnings) == 1
        assert "discontinuity" in result.warnings[0].message or "article" in result.warnings[0].message

    def test_no_markers_raises(self):
        with pytest.raises(NoMarkersFound):
            segment_statute(doc("这是一段没有任何条文标记的文字。"))

    def test_document_order_and_totality(self):
        result = segment_statute(doc(ZH_BODY))
        marker_lines = [l for l in ZH_BODY.splitlines() if l.startswith("第") and "条" in l.split()[0]]
        assert len(result.segments) == len(marker_lines)
        joined = "\n".join(s.text for s in result.segments)
        for line in marker_lines:
            assert line.strip() in joined


class TestWordCounts:
    def test_english_whitespace_tokens(self):
        assert count_words("Article 1. This   law exists.", "en") == 5

    def test_chinese_excludes_punctuation_and_spaces(self):
        assert count_words("第一条 为了示范，制定本法。", "zh") == 11

    def test_japanese_same_rule(self):
        assert count_words("第１条 これは例です。", "ja") == 9

    def test_unknown_language(self):
        with pytest.raises(ValueError):
            count_words("x", "de")


def seg(words: int, language: str = "zh", n: int = 1) -> ArticleSegment:
    return ArticleSegment(statute_id="law-1", language=language, article_number=n,
                          structural_path=(), text="x", word_count=words)


class TestCorpusStats:
    def test_population_std(self):
        stats = compute_corpus_stats([seg(10, n=1), seg(20, n=2), seg(30, n=3)])
        assert stats.article_count == 3
        assert stats.avg_words == pytest.approx(20.0)
        assert stats.std_words == pytest.approx(math.sqrt(200 / 3))
        assert stats.total_words == 60

    def test_mixed_languages_rejected(self):
        with pytest.raises(ValueError, match="mixed"):
            compute_corpus_stats([seg(10), seg(10, language="en", n=2)])

    def test_empty_rejected(self):
        with pytest.raises(EmptyCorpus):
            compute_corpus_stats([])

    def test_format_rows_aligned(self):
        rows = format_stats_rows([compute_corpus_stats([seg(10), seg(20, n=2)])])
        assert rows[0].split() == ["language", "articles", "avg_words",
                                   "std_words", "total_words"]
        assert rows[1].split()[0] == "zh"
