from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from lexalign.mockllm import MockRule, STANDARDIZE_MARKER
from lexalign.standardizer import (ConstraintViolation, apply_standardization,
                                   build_standardization_prompt,
                                   compute_standardization_stats, dedup_entries,
                                   evaluate_metric_formula, group_variants,
                                   merge_minor_variants, standardize_group,
                                   variant_merge_key, VariantGroup)

from conftest import make_entry, make_gateway


def variant(chinese: str, english: str | None, japanese: str | None, **overrides):
    return make_entry(chinese=chinese, english=english, japanese=japanese,
                      status="raw", provenance="extracted", **overrides)


class TestMergeKey:
    def test_english_folds_case_articles_plurals(self):
        assert variant_merge_key("The Labor Contracts", "en") == \
            variant_merge_key("labor contract", "en")
        assert variant_merge_key("A data handler", "en") == \
            variant_merge_key("data handlers", "en")

    def test_ies_plural(self):
        assert variant_merge_key("companies", "en") == variant_merge_key("company", "en")

    def test_es_suffixes(self):
        assert variant_merge_key("boxes", "en") == variant_merge_key("box", "en")
        assert variant_merge_key("branches", "en") == variant_merge_key("branch", "en")

    def test_protected_endings_not_stripped(self):
        for word in ("business", "status", "basis"):
            assert variant_merge_key(word, "en") == word

    def test_cjk_exact_match_only(self):
        assert variant_merge_key("労働契約", "ja") == "労働契約"
        assert variant_merge_key("労働契約 ", "ja") != variant_merge_key("労働契約", "ja")

    def test_empty_and_none(self):
        assert variant_merge_key(None, "en") == ""
        assert variant_merge_key("", "ja") == ""


class TestMergeMinorVariants:
    def test_most_frequent_spelling_wins(self):
        merged = merge_minor_variants(
            ["Labor Contract", "labor contract", "labor contract"])
        assert merged == ["labor contract"]

    def test_tie_broken_by_first_occurrence(self):
        assert merge_minor_variants(["The Union", "union"]) == ["The Union"]

    def test_distinct_keys_preserved_in_order(self):
        merged = merge_minor_variants(["data handler", "the data handlers",
                                       "legal person", "data handler"])
        assert merged == ["data handler", "legal person"]


class TestGrouping:
    def test_groups_keyed_by_law_and_chinese_in_order(self):
        entries = [
            variant("劳动合同", "labor contract", "労働契約"),
            variant("工会", "union", "労働組合"),
            variant("劳动合同", "Labor Contracts", "労働契約"),
            variant("劳动合同", "employment agreement", "雇用契約",
                    law_id="demo-data"),
        ]
        groups = group_variants(entries)
        assert [(g.law_id, g.chinese, len(g.entries)) for g in groups] == [
            ("demo-union", "劳动合同", 2),
            ("demo-union", "工会", 1),
            ("demo-data", "劳动合同", 1),
        ]

    def test_unique_pairs_keep_first_occurrence_order(self):
        group = VariantGroup(law_id="demo-union", chinese="劳动合同", entries=(
            variant("劳动合同", "labor contract", "労働契約"),
            variant("劳动合同", "Labor Contracts", "労働契約"),
            variant("劳动合同", "labor contract", "労働契約"),
        ))
        assert group.unique_pairs == [("labor contract", "労働契約"),
                                      ("Labor Contracts", "労働契約")]


class TestStandardizeGroup:
    def two_variant_group(self):
        return group_variants([
            variant("劳动合同", "labor contract", "労働契約"),
            variant("劳动合同", "labor contract", "労働契約"),
            variant("劳动合同", "Labor Contracts", "労働契約"),
        ])[0]

    def test_singleton_skips_the_model(self):
        [group] = group_variants([variant("工会", "union", "労働組合")])
        gw = make_gateway()
        decision = standardize_group(group, gw)
        assert decision.llm_called is False
        assert decision.best == ("union", "労働組合")
        assert decision.merged == () and decision.distinct == ()
        assert gw.provider.requests == []

    def test_minor_variants_folded_into_majority(self):
        decision = standardize_group(self.two_variant_group(), make_gateway())
        assert decision.llm_called is True
        assert decision.best == ("labor contract", "労働契約")
        assert decision.merged == (("Labor Contracts", "労働契約"),)
        assert decision.distinct == ()

    def test_different_meanings_kept_distinct(self):
        [group] = group_variants([
            variant("代表", "representative", "代表者"),
            variant("代表", "delegate", "代議員"),
        ])
        decision = standardize_group(group, make_gateway())
        assert decision.best == ("representative", "代表者")
        assert decision.distinct == (("delegate", "代議員"),)

    def test_prompt_lists_variants_and_term(self):
        prompt = build_standardization_prompt(self.two_variant_group())
        assert "劳动合同" in prompt
        assert prompt.count("labor contract") >= 1
        assert STANDARDIZE_MARKER in prompt

    def test_feedback_added_as_user_message(self):
        gw = make_gateway()
        standardize_group(self.two_variant_group(), gw,
                          feedback="keep all variants distinct")
        _, body = gw.provider.requests[-1]
        messages = json.loads(body)["messages"]
        assert messages[-1]["content"] == "Reviewer feedback: keep all variants distinct"


class TestNoInvention:
    def respond(self, payload) -> str:
        return json.dumps(payload, ensure_ascii=False)

    def group(self):
        return group_variants([
            variant("代表", "representative", "代表者"),
            variant("代表", "delegate", "代議員"),
        ])[0]

    def run_with(self, response: str, max_attempts: int = 1):
        gw = make_gateway(rules=(MockRule(contains=STANDARDIZE_MARKER,
                                          response=response),))
        return standardize_group(self.group(), gw, max_attempts=max_attempts)

    def test_fabricated_rendering_rejected(self):
        payload = {"best": {"english": "spokesperson", "japanese": "代表者"},
                   "merged": [], "distinct": [{"english": "delegate",
                                               "japanese": "代議員"}],
                   "rationale": "made one up"}
        with pytest.raises(ConstraintViolation, match="invents"):
            self.run_with(self.respond(payload))

    def test_dropped_variant_rejected(self):
        payload = {"best": {"english": "representative", "japanese": "代表者"},
                   "merged": [], "distinct": [], "rationale": "lost one"}
        with pytest.raises(ConstraintViolation, match="drops"):
            self.run_with(self.respond(payload))

    def test_double_booked_variant_rejected(self):
        payload = {"best": {"english": "representative", "japanese": "代表者"},
                   "merged": [{"english": "delegate", "japanese": "代議員"}],
                   "distinct": [{"english": "delegate", "japanese": "代議員"}],
                   "rationale": "listed twice"}
        with pytest.raises(ConstraintViolation, match="more than one bucket"):
            self.run_with(self.respond(payload))

    def test_missing_field_rejected(self):
        payload = {"best": {"english": "representative", "japanese": "代表者"},
                   "merged": [], "rationale": "no distinct key"}
        with pytest.raises(ConstraintViolation, match="distinct"):
            self.run_with(self.respond(payload))

    def test_blank_rationale_rejected(self):
        payload = {"best": {"english": "representative", "japanese": "代表者"},
                   "merged": [],
                   "distinct": [{"english": "delegate", "japanese": "代議員"}],
                   "rationale": "  "}
        with pytest.raises(ConstraintViolation, match="rationale"):
            self.run_with(self.respond(payload))

    def test_unparseable_decision_rejected(self):
        with pytest.raises(ConstraintViolation, match="unparseable"):
            self.run_with("not json at all")

    def test_retry_sends_corrective_message_then_escalates(self):
        gw = make_gateway(rules=(MockRule(contains=STANDARDIZE_MARKER,
                                          response="garbage"),))
        with pytest.raises(ConstraintViolation):
            standardize_group(self.group(), gw, max_attempts=2)
        chats = [json.loads(body)["messages"] for kind, body in gw.provider.requests
                 if kind == "chat"]
        assert len(chats) == 2
        assert len(chats[1]) == 3  # prompt + assistant echo + corrective message
        assert chats[1][1]["role"] == "assistant"
        assert chats[1][2]["content"].startswith("Constraint violation:")

    def test_corrected_retry_succeeds(self):
        good = self.respond({
            "best": {"english": "representative", "japanese": "代表者"},
            "merged": [],
            "distinct": [{"english": "delegate", "japanese": "代議員"}],
            "rationale": "kept both meanings"})
        # first call lacks the corrective marker, so the bad rule fires;
        # the retry contains it, so the good rule fires first
        rules = (MockRule(contains="Constraint violation:", response=good),
                 MockRule(contains=STANDARDIZE_MARKER, response="garbage"))
        gw = make_gateway(rules=rules)
        decision = standardize_group(self.group(), gw, max_attempts=2)
        assert decision.best == ("representative", "代表者")
        assert len([1 for kind, _ in gw.provider.requests if kind == "chat"]) == 2


class TestApplyStandardization:
    def test_merges_duplicates_and_marks_status(self):
        entries = [
            variant("劳动合同", "labor contract", "労働契約"),
            variant("劳动合同", "Labor Contracts", "労働契約"),
            variant("工会", "union", "労働組合"),
        ]
        out, report = apply_standardization(entries, make_gateway())
        assert [e.chinese for e in out] == ["劳动合同", "工会"]
        assert all(e.status == "standardized" for e in out)
        assert any(note.startswith("merged rendering:") for note in out[0].notes)
        assert report.stats.original == 3
        assert report.stats.standardized == 2
        assert report.stats.variants_merged == 1
        assert report.violations == []

    def test_distinct_meanings_become_two_entries(self):
        entries = [variant("代表", "representative", "代表者"),
                   variant("代表", "delegate", "代議員")]
        out, report = apply_standardization(entries, make_gateway())
        assert len(out) == 2
        assert {e.english for e in out} == {"representative", "delegate"}
        assert "preserved as a distinct meaning" in out[1].notes
        assert report.stats.independence_rate == 50.0  # one chinese, two entries

    def test_escalated_group_passes_through_raw(self):
        gw = make_gateway(rules=(MockRule(contains=STANDARDIZE_MARKER,
                                          response="garbage"),))
        entries = [variant("代表", "representative", "代表者"),
                   variant("代表", "delegate", "代議員"),
                   variant("工会", "union", "労働組合")]
        out, report = apply_standardization(entries, gw)
        escalated = [e for e in out if e.chinese == "代表"]
        assert len(escalated) == 2
        assert all(e.status == "raw" for e in escalated)
        assert all(any(n.startswith("standardization escalated") for n in e.notes)
                   for e in escalated)
        [violation] = report.violations
        assert violation.chinese == "代表"
        assert violation.decision is None
        # the untouched singleton still standardizes
        [union] = [e for e in out if e.chinese == "工会"]
        assert union.status == "standardized"

    def test_incomplete_rendering_stays_raw_with_note(self):
        out, _ = apply_standardization(
            [variant("工会", "union", None)], make_gateway())
        [entry] = out
        assert entry.status == "raw"
        assert "kept raw: missing japanese rendering" in entry.notes


class TestDedup:
    def test_exact_repeats_dropped_first_wins(self):
        first = variant("工会", "union", "労働組合", explanation="第一次")
        repeat = variant("工会", "union", "労働組合", explanation="第二次")
        different = variant("工会", "labor union", "労働組合")
        assert dedup_entries([first, repeat, different]) == [first, different]

    @given(st.lists(st.tuples(st.sampled_from("甲乙丙"), st.sampled_from("ab"),
                              st.sampled_from(["x", ""])), max_size=12))
    def test_idempotent_and_key_unique(self, rows):
        entries = [variant(zh, en or None, ja or None)
                   for zh, en, ja in rows]
        once = dedup_entries(entries)
        assert dedup_entries(once) == once
        keys = [(e.law_id, e.chinese, e.english or "", e.japanese or "")
                for e in once]
        assert len(keys) == len(set(keys))


class TestMetricFormula:
    VARS = {"original": 200.0, "standardized": 120.0,
            "variants_merged": 80.0, "unique_chinese": 100.0}

    def test_arithmetic(self):
        assert evaluate_metric_formula("variants_merged / original * 100",
                                       self.VARS) == 40.0
        assert evaluate_metric_formula("-(standardized - original)", self.VARS) == 80.0
        assert evaluate_metric_formula("1 + 2 * 3", {}) == 7.0

    def test_unknown_variable(self):
        with pytest.raises(ValueError, match="unknown variable"):
            evaluate_metric_formula("bogus + 1", self.VARS)

    def test_calls_rejected(self):
        with pytest.raises(ValueError, match="unsupported"):
            evaluate_metric_formula("__import__('os')", self.VARS)

    def test_attributes_rejected(self):
        with pytest.raises(ValueError, match="unsupported"):
            evaluate_metric_formula("original.__class__", self.VARS)

    def test_power_rejected(self):
        with pytest.raises(ValueError, match="unsupported"):
            evaluate_metric_formula("original ** 2", self.VARS)

    def test_booleans_rejected(self):
        with pytest.raises(ValueError, match="unsupported"):
            evaluate_metric_formula("True", self.VARS)

    def test_syntax_error(self):
        with pytest.raises(ValueError, match="invalid metric formula"):
            evaluate_metric_formula("original +", self.VARS)


class TestStats:
    def test_counts_mode(self):
        stats = compute_standardization_stats((200, 120, 100))
        assert stats.variants_merged == 80
        assert stats.reduction_rate == 40.0
        assert stats.independence_rate == 83.3

    def test_entry_lists_mode_matches_counts_mode(self):
        before = [variant("甲", "a", "x"), variant("甲", "b", "y"),
                  variant("乙", "c", "z")]
        after = [variant("甲", "a", "x"), variant("乙", "c", "z")]
        from_lists = compute_standardization_stats(before, after)
        from_counts = compute_standardization_stats((3, 2, 2))
        assert from_lists == from_counts

    def test_extra_metrics_evaluated(self):
        stats = compute_standardization_stats(
            (200, 120, 100),
            extra_metrics={"merge_ratio": "variants_merged / original"})
        assert stats.extra == {"merge_ratio": 0.4}

    def test_zero_counts_rejected(self):
        with pytest.raises(ValueError):
            compute_standardization_stats((0, 1, 1))

    def test_bad_counts_tuple_rejected(self):
        with pytest.raises(TypeError):
            compute_standardization_stats((200, 120))
