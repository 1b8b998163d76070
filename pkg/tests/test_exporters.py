from __future__ import annotations

import csv
import io
import xml.etree.ElementTree as ET

import pytest

from lexalign.exporters import (CSV_COLUMNS, EXPORT_FORMATS, UnsupportedField,
                                export_csv, export_jsonl, export_termbase,
                                export_tbx_basic, parse_csv, parse_jsonl,
                                write_export)
from lexalign.model import (ENTRY_FIELD_ORDER, assign_concept_ids,
                            entry_to_dict, new_termbase)

from conftest import make_entry, make_law


def standardized_termbase():
    entries = [
        make_entry(chinese="工会", english="trade union", japanese="労働組合",
                   status="standardized", provenance="extracted",
                   notes=("merged rendering: english='Trade Unions'",)),
        make_entry(chinese="劳动合同", english="labor contract", japanese="労働契約",
                   status="standardized", provenance="auto_completed",
                   article_number=2),
    ]
    termbase = new_termbase(entries, [make_law()],
                            created_at="2024-01-01T00:00:00Z")
    return assign_concept_ids(termbase)


def check_tbx_structure(xml_text: str, termbase) -> None:
    """Independent structural validation of a TBX-Basic document."""
    root = ET.fromstring(xml_text)
    assert root.tag == "martif"
    assert root.get("type") == "TBX-Basic"
    assert root.get("{http://www.w3.org/XML/1998/namespace}lang") == "en"
    assert root.find("martifHeader/fileDesc/titleStmt/title") is not None
    body = root.find("text/body")
    assert body is not None
    term_entries = body.findall("termEntry")
    assert len(term_entries) == len(termbase.entries)
    expected_ids = {f"c-{e.concept_id}" for e in termbase.entries}
    assert {te.get("id") for te in term_entries} == expected_ids
    for te in term_entries:
        lang_sets = te.findall("langSet")
        languages = {ls.get("{http://www.w3.org/XML/1998/namespace}lang")
                     for ls in lang_sets}
        assert languages == {"zh", "en", "ja"}
        for ls in lang_sets:
            term = ls.find("tig/term")
            assert term is not None and term.text and term.text.strip()


class TestJsonl:
    def test_round_trip_structural_equality(self):
        termbase = standardized_termbase()
        text = export_jsonl(termbase)
        parsed = parse_jsonl(text)
        assert [entry_to_dict(e) for e in parsed] == \
            [entry_to_dict(e) for e in termbase.entries]

    def test_one_compact_line_per_entry(self):
        termbase = standardized_termbase()
        lines = export_jsonl(termbase).splitlines()
        assert len(lines) == len(termbase.entries)
        for line in lines:
            assert "\n" not in line and line.startswith("{")

    def test_trailing_newline(self):
        assert export_jsonl(standardized_termbase()).endswith("\n")

    def test_utf8_not_escaped(self):
        assert "工会" in export_jsonl(standardized_termbase())


class TestCsv:
    def test_header_matches_documented_field_order(self):
        text = export_csv(standardized_termbase())
        reader = csv.reader(io.StringIO(text))
        assert tuple(next(reader)) == CSV_COLUMNS == ENTRY_FIELD_ORDER

    def test_round_trip_structural_equality(self):
        termbase = standardized_termbase()
        parsed = parse_csv(export_csv(termbase))
        assert [entry_to_dict(e) for e in parsed] == \
            [entry_to_dict(e) for e in termbase.entries]

    def test_notes_json_encoded_in_cell(self):
        termbase = standardized_termbase()
        row = next(csv.DictReader(io.StringIO(export_csv(termbase))))
        assert row["notes"].startswith("[")
        assert "merged rendering" in row["notes"]

    def test_wrong_header_rejected_on_parse(self):
        with pytest.raises(ValueError, match="header"):
            parse_csv("chinese,english\n工会,union\n")


class TestTbx:
    def test_structure_validated(self):
        termbase = standardized_termbase()
        check_tbx_structure(export_tbx_basic(termbase), termbase)

    def test_contexts_and_definition_attached(self):
        termbase = standardized_termbase()
        root = ET.fromstring(export_tbx_basic(termbase))
        entry = root.find("text/body/termEntry")
        definition = entry.find("descrip[@type='definition']")
        assert definition is not None and definition.text
        zh_context = None
        for ls in entry.findall("langSet"):
            if ls.get("{http://www.w3.org/XML/1998/namespace}lang") == "zh":
                zh_context = ls.find("tig/descrip[@type='context']")
        assert zh_context is not None and "工会" in zh_context.text

    def test_subject_field_carries_domain(self):
        root = ET.fromstring(export_tbx_basic(standardized_termbase()))
        subject = root.find("text/body/termEntry/descrip[@type='subjectField']")
        assert subject is not None and subject.text == "labor"

    def test_raw_entry_refused_with_location(self):
        entries = [make_entry(status="raw")]
        termbase = new_termbase(entries, [make_law()],
                                created_at="2024-01-01T00:00:00Z")
        with pytest.raises(UnsupportedField, match=r"entries\[0\]"):
            export_tbx_basic(termbase)

    def test_missing_japanese_refused(self):
        entries = [make_entry(japanese=None, context_ja=None,
                              status="standardized")]
        termbase = assign_concept_ids(
            new_termbase(entries, [make_law()],
                         created_at="2024-01-01T00:00:00Z"))
        with pytest.raises(UnsupportedField, match="japanese"):
            export_tbx_basic(termbase)

    def test_custom_title(self):
        xml_text = export_tbx_basic(standardized_termbase(), title="示例库")
        root = ET.fromstring(xml_text)
        assert root.find("martifHeader/fileDesc/titleStmt/title").text == "示例库"


class TestDispatcher:
    def test_formats_registry(self):
        assert set(EXPORT_FORMATS) == {"jsonl", "csv", "tbx_basic"}

    def test_dispatch_matches_direct_calls(self):
        termbase = standardized_termbase()
        assert export_termbase(termbase, "jsonl") == export_jsonl(termbase)
        assert export_termbase(termbase, "csv") == export_csv(termbase)
        assert export_termbase(termbase, "tbx_basic") == export_tbx_basic(termbase)

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError, match="format"):
            export_termbase(standardized_termbase(), "xlsx")

    def test_write_export_writes_verbatim(self, tmp_path):
        termbase = standardized_termbase()
        path = write_export(termbase, "csv", tmp_path / "termbase.csv")
        assert path == tmp_path / "termbase.csv"
        assert path.read_text(encoding="utf-8") == export_csv(termbase)
