"""Termbase exports: JSON Lines, CSV, and a TBX-Basic subset.

JSONL and CSV are lossless over the documented entry fields (same names as
the termbase JSON schema) and round-trip back into entries. The TBX export
targets the TBX-Basic skeleton — one termEntry per concept with a language
section per rendering — and refuses entries that lack the required metadata
rather than emitting half-formed concept records.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable
from xml.etree import ElementTree as ET

from .model import ENTRY_FIELD_ORDER, Termbase, TermEntry, entry_from_dict, entry_to_dict

EXPORT_FORMATS = ("jsonl", "csv", "tbx_basic")

EXTENSIONS = {"jsonl": ".jsonl", "csv": ".csv", "tbx_basic": ".tbx"}

CSV_COLUMNS = ENTRY_FIELD_ORDER

_LANG_SECTIONS = (("zh", "chinese", "context"),
                  ("en", "english", "en_context"),
                  ("ja", "japanese", "ja_context"))


class UnsupportedField(ValueError):
    """An entry is missing metadata the requested format requires."""


def export_jsonl(termbase: Termbase) -> str:
    lines = [json.dumps(entry_to_dict(entry), ensure_ascii=False)
             for entry in termbase.entries]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_jsonl(text: str) -> list[TermEntry]:
    entries = []
    for i, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        entries.append(entry_from_dict(json.loads(line), where=f"line {i + 1}"))
    return entries


def export_csv(termbase: Termbase) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for entry in termbase.entries:
        row = entry_to_dict(entry)
        if "notes" in row:
            row["notes"] = json.dumps(row["notes"], ensure_ascii=False)
        writer.writerow({column: row.get(column, "") for column in CSV_COLUMNS})
    return buffer.getvalue()


def parse_csv(text: str) -> list[TermEntry]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is not None and tuple(reader.fieldnames) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header: {reader.fieldnames}")
    entries = []
    for i, row in enumerate(reader):
        data: dict[str, object] = {}
        for column in CSV_COLUMNS:
            value = row.get(column, "")
            if value == "" or value is None:
                continue
            if column == "article_number":
                data[column] = int(value)
            elif column == "notes":
                data[column] = json.loads(value)
            else:
                data[column] = value
        entries.append(entry_from_dict(data, where=f"row {i + 2}"))
    return entries


def _require(entry: TermEntry, index: int, field: str, value: object) -> None:
    if not value:
        raise UnsupportedField(
            f"entries[{index}]: TBX export requires {field!r}; "
            "only standardized entries with all three renderings can be exported")


def export_tbx_basic(termbase: Termbase, title: str = "trilingual legal termbase") -> str:
    martif = ET.Element("martif", {"type": "TBX-Basic", "xml:lang": "en"})
    header = ET.SubElement(martif, "martifHeader")
    file_desc = ET.SubElement(header, "fileDesc")
    title_stmt = ET.SubElement(file_desc, "titleStmt")
    ET.SubElement(title_stmt, "title").text = title
    source_desc = ET.SubElement(file_desc, "sourceDesc")
    ET.SubElement(source_desc, "p").text = (
        f"generated termbase; created {termbase.created_at}; "
        f"revised {termbase.revised_at}")
    body = ET.SubElement(ET.SubElement(martif, "text"), "body")
    for i, entry in enumerate(termbase.entries):
        _require(entry, i, "concept_id", entry.concept_id)
        _require(entry, i, "english", entry.english)
        _require(entry, i, "japanese", entry.japanese)
        term_entry = ET.SubElement(body, "termEntry", {"id": f"c-{entry.concept_id}"})
        law = termbase.law_index.get(entry.law_id)
        if law is not None:
            subject = ET.SubElement(term_entry, "descrip", {"type": "subjectField"})
            subject.text = law.domain_tag
        wire = entry_to_dict(entry)
        if entry.explanation:
            definition = ET.SubElement(term_entry, "descrip", {"type": "definition"})
            definition.text = entry.explanation
        for lang, term_field, context_field in _LANG_SECTIONS:
            lang_set = ET.SubElement(term_entry, "langSet", {"xml:lang": lang})
            tig = ET.SubElement(lang_set, "tig")
            ET.SubElement(tig, "term").text = wire[term_field]
            context = wire.get(context_field)
            if context:
                descrip = ET.SubElement(tig, "descrip", {"type": "context"})
                descrip.text = context
    ET.indent(martif, space="  ")
    return ('<?xml version="1.0" encoding="UTF-8"?>\n'
            + ET.tostring(martif, encoding="unicode") + "\n")


_EXPORTERS = {
    "jsonl": export_jsonl,
    "csv": export_csv,
    "tbx_basic": export_tbx_basic,
}


def export_termbase(termbase: Termbase, format: str) -> str:
    if format not in _EXPORTERS:
        raise ValueError(f"unknown export format {format!r}; "
                         f"formats are {EXPORT_FORMATS}")
    return _EXPORTERS[format](termbase)


def write_export(termbase: Termbase, format: str, path: str | Path) -> Path:
    target = Path(path)
    target.write_text(export_termbase(termbase, format), encoding="utf-8")
    return target
