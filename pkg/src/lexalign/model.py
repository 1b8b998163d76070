"""Core domain types and persistence for the trilingual legal termbase.

Entries use the wire field names (``chinese``/``context``/``en_context``/...)
in every serialized form; in-memory attributes keep the language suffix
(``context_zh``) to stay greppable.
"""
from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from hashlib import blake2b
from pathlib import Path
from typing import Any, Iterable, Mapping

LANGUAGES = ("zh", "ja", "en")
SCHEMA_VERSION = 1

PROVENANCES = ("extracted", "auto_completed", "human_edited")
STATUSES = ("raw", "standardized", "approved", "rejected")
# Stages accepted by validate_entry; approved entries carry standardized-level guarantees.
VALIDATION_STAGES = ("raw", "standardized", "approved")


class SchemaError(ValueError):
    """Serialized termbase does not match the documented schema."""


class DuplicateConcept(ValueError):
    """Two standardized entries collide on (law_id, chinese, english)."""


def utc_now() -> str:
    """Wall clock in RFC 3339 UTC with second precision."""
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class StatuteDocument:
    """One language version of one statute, as ingested plain text/Markdown."""

    id: str
    title: str
    language: str
    year: int
    domain_tag: str
    body: str

    def __post_init__(self) -> None:
        if self.language not in LANGUAGES:
            raise ValueError(f"unknown language code: {self.language!r}")
        if not self.body.strip():
            raise ValueError(f"statute {self.id!r} ({self.language}) has an empty body")


@dataclass(frozen=True)
class ArticleSegment:
    """A single article carved out of a statute body.

    structural_path holds the enclosing (level, number) pairs, outermost first,
    e.g. (("chapter", 2), ("section", 1)). text includes the article marker line.
    """

    statute_id: str
    language: str
    article_number: int
    structural_path: tuple[tuple[str, int], ...]
    text: str
    word_count: int

    def __post_init__(self) -> None:
        if self.article_number < 1:
            raise ValueError(f"article_number must be >= 1, got {self.article_number}")
        for level, number in self.structural_path:
            if level not in ("chapter", "section"):
                raise ValueError(f"unknown structural level {level!r}")
            if number < 1:
                raise ValueError(f"structural number must be >= 1, got {number}")

    @property
    def ref(self) -> tuple[str, int, str]:
        return (self.statute_id, self.article_number, self.language)


@dataclass(frozen=True)
class TermEntry:
    """One term concept row; optional languages stay None until filled."""

    chinese: str
    context_zh: str
    law_id: str
    article_number: int
    japanese: str | None = None
    english: str | None = None
    context_ja: str | None = None
    context_en: str | None = None
    explanation: str | None = None
    concept_id: str | None = None
    provenance: str = "extracted"
    status: str = "raw"
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")


@dataclass(frozen=True)
class LawInfo:
    """Per-law metadata kept alongside the entries; one record covers all languages."""

    law_id: str
    titles: Mapping[str, str]
    year: int
    domain_tag: str


@dataclass(frozen=True)
class Termbase:
    entries: tuple[TermEntry, ...]
    law_index: Mapping[str, LawInfo]
    created_at: str
    revised_at: str

    def __post_init__(self) -> None:
        for entry in self.entries:
            if entry.law_id not in self.law_index:
                raise ValueError(f"entry law_id {entry.law_id!r} missing from law_index")


def validate_entry(entry: TermEntry, stage: str = "raw") -> list[str]:
    """Return violations of the stage-appropriate invariants; empty list means valid."""
    if stage not in VALIDATION_STAGES:
        raise ValueError(f"unknown validation stage {stage!r}")
    violations: list[str] = []
    if not entry.chinese.strip():
        violations.append("chinese: must be non-empty")
    if not entry.context_zh.strip():
        violations.append("context: must be non-empty")
    if not entry.law_id.strip():
        violations.append("law_id: must be non-empty")
    if entry.article_number < 1:
        violations.append("article_number: must be >= 1")
    for name, value in (("japanese", entry.japanese), ("english", entry.english),
                        ("ja_context", entry.context_ja), ("en_context", entry.context_en),
                        ("explanation", entry.explanation)):
        if value is not None and not value.strip():
            violations.append(f"{name}: present but empty")
    if stage in ("standardized", "approved"):
        if not (entry.japanese or "").strip():
            violations.append("japanese: required once standardized")
        if not (entry.english or "").strip():
            violations.append("english: required once standardized")
    return violations


def concept_key(law_id: str, chinese: str, english: str | None) -> tuple[str, str, str]:
    norm = lambda s: unicodedata.normalize("NFC", s)
    return (norm(law_id), norm(chinese), norm(english or ""))


def concept_id_for(law_id: str, chinese: str, english: str | None) -> str:
    """Stable 128-bit id over the NFC-normalized concept key, lowercase hex."""
    digest = blake2b(digest_size=16)
    for part in concept_key(law_id, chinese, english):
        digest.update(part.encode("utf-8"))
        digest.update(b"\x1f")
    return digest.hexdigest()


def assign_concept_ids(termbase: Termbase) -> Termbase:
    """Assign deterministic concept ids to standardized/approved entries.

    Raw and rejected entries pass through untouched. Two entries colliding on
    the full (law_id, chinese, english) key is a DuplicateConcept error.
    """
    seen: dict[tuple[str, str, str], int] = {}
    out: list[TermEntry] = []
    for i, entry in enumerate(termbase.entries):
        if entry.status not in ("standardized", "approved"):
            out.append(entry)
            continue
        key = concept_key(entry.law_id, entry.chinese, entry.english)
        if key in seen:
            raise DuplicateConcept(
                f"entries[{seen[key]}] and entries[{i}] share concept key "
                f"(law_id={entry.law_id!r}, chinese={entry.chinese!r}, english={entry.english!r})"
            )
        seen[key] = i
        out.append(replace(entry, concept_id=concept_id_for(*key)))
    return replace(termbase, entries=tuple(out))


# --- canonical serialization ---------------------------------------------
# Field order is fixed so saves are byte-stable. Optional fields are omitted
# when absent, never emitted as null.

_ENTRY_WIRE_FIELDS: tuple[tuple[str, str, bool], ...] = (
    # (wire name, attribute, required)
    ("chinese", "chinese", True),
    ("japanese", "japanese", False),
    ("english", "english", False),
    ("context", "context_zh", True),
    ("ja_context", "context_ja", False),
    ("en_context", "context_en", False),
    ("explanation", "explanation", False),
    ("concept_id", "concept_id", False),
    ("law_id", "law_id", True),
    ("article_number", "article_number", True),
    ("provenance", "provenance", True),
    ("status", "status", True),
)


def entry_to_dict(entry: TermEntry) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for wire, attr, required in _ENTRY_WIRE_FIELDS:
        value = getattr(entry, attr)
        if value is None and not required:
            continue
        out[wire] = value
    if entry.notes:
        out["notes"] = list(entry.notes)
    return out


ENTRY_FIELD_ORDER = tuple(wire for wire, _, _ in _ENTRY_WIRE_FIELDS) + ("notes",)

_ENTRY_KNOWN_KEYS = {wire for wire, _, _ in _ENTRY_WIRE_FIELDS} | {"notes"}
_ENTRY_REQUIRED_KEYS = {wire for wire, _, required in _ENTRY_WIRE_FIELDS if required}


def entry_from_dict(data: Mapping[str, Any], where: str = "entry") -> TermEntry:
    for key in data:
        if key not in _ENTRY_KNOWN_KEYS:
            raise SchemaError(f"{where}.{key}: unknown field")
    for key in _ENTRY_REQUIRED_KEYS:
        if key not in data:
            raise SchemaError(f"{where}.{key}: missing required field")
    for wire, _, _ in _ENTRY_WIRE_FIELDS:
        if wire in data and data[wire] is None:
            raise SchemaError(f"{where}.{wire}: null is not allowed; omit absent fields")
    try:
        return TermEntry(
            chinese=data["chinese"],
            japanese=data.get("japanese"),
            english=data.get("english"),
            context_zh=data["context"],
            context_ja=data.get("ja_context"),
            context_en=data.get("en_context"),
            explanation=data.get("explanation"),
            concept_id=data.get("concept_id"),
            law_id=data["law_id"],
            article_number=data["article_number"],
            provenance=data.get("provenance", "extracted"),
            status=data.get("status", "raw"),
            notes=tuple(data.get("notes", ())),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def termbase_to_dict(termbase: Termbase) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "created_at": termbase.created_at,
        "revised_at": termbase.revised_at,
        "laws": {
            law_id: {
                "titles": dict(info.titles),
                "year": info.year,
                "domain_tag": info.domain_tag,
            }
            for law_id, info in sorted(termbase.law_index.items())
        },
        "entries": [entry_to_dict(e) for e in termbase.entries],
    }


_TERMBASE_KEYS = {"schema_version", "created_at", "revised_at", "laws", "entries"}
_LAW_KEYS = {"titles", "year", "domain_tag"}


def termbase_from_dict(data: Mapping[str, Any]) -> Termbase:
    for key in data:
        if key not in _TERMBASE_KEYS:
            raise SchemaError(f"{key}: unknown field")
    for key in _TERMBASE_KEYS:
        if key not in data:
            raise SchemaError(f"{key}: missing required field")
    if data["schema_version"] != SCHEMA_VERSION:
        raise SchemaError(f"schema_version: expected {SCHEMA_VERSION}, got {data['schema_version']!r}")
    laws: dict[str, LawInfo] = {}
    for law_id, raw in data["laws"].items():
        for key in raw:
            if key not in _LAW_KEYS:
                raise SchemaError(f"laws.{law_id}.{key}: unknown field")
        for key in _LAW_KEYS:
            if key not in raw:
                raise SchemaError(f"laws.{law_id}.{key}: missing required field")
        laws[law_id] = LawInfo(law_id=law_id, titles=dict(raw["titles"]),
                               year=raw["year"], domain_tag=raw["domain_tag"])
    entries = tuple(
        entry_from_dict(raw, where=f"entries[{i}]") for i, raw in enumerate(data["entries"])
    )
    try:
        return Termbase(entries=entries, law_index=laws,
                        created_at=data["created_at"], revised_at=data["revised_at"])
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def dumps_canonical(obj: Any) -> str:
    """Canonical JSON text used for every artifact this package writes."""
    return json.dumps(obj, ensure_ascii=False, indent=2) + "\n"


def save_termbase(termbase: Termbase, path: str | Path) -> None:
    Path(path).write_text(dumps_canonical(termbase_to_dict(termbase)), encoding="utf-8")


def load_termbase(path: str | Path) -> Termbase:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("top level: expected an object")
    return termbase_from_dict(data)


def new_termbase(entries: Iterable[TermEntry], laws: Iterable[LawInfo],
                 created_at: str | None = None) -> Termbase:
    now = created_at if created_at is not None else utc_now()
    return Termbase(
        entries=tuple(entries),
        law_index={law.law_id: law for law in laws},
        created_at=now,
        revised_at=now,
    )
