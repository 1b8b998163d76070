"""Run orchestration: staged execution with checkpoints, review gates, and
versioned artifacts.

A run owns a directory under the configured output dir. Every stage reads its
inputs from the previous stage's artifacts (never from memory), so a run can
be resumed by a fresh process. Artifacts are written atomically and never
mutated: a re-run renames the old file to a .revN sibling before writing.

In mock mode the clock is pinned, so two runs with the same seed produce
byte-identical termbases and evaluation reports.
"""
from __future__ import annotations

import json
import os
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Iterator, Mapping

from .aligner import (AlignedPair, AlignmentCandidate, AlignPolicy, TrilingualAssembly,
                      TrilingualTriple, align_statutes, build_trilingual)
from .config import PipelineConfig, build_gateway, load_config, save_config
from .evaluation import (build_quality_report, duplicate_rate, evaluate_sample,
                         hallucination_rate, sample_terms, success_rate)
from .extractor import (CompletionRefused, FieldError, MalformedResponse, auto_complete,
                        detect_hallucination, extract_stream, extraction_stats,
                        merge_streams, parse_json_payload)
from .gateway import ChatMessage, ChatRequest, LlmGateway, ProviderError
from .model import (ArticleSegment, LawInfo, StatuteDocument, assign_concept_ids,
                    dumps_canonical, load_termbase, new_termbase, termbase_to_dict,
                    utc_now, validate_entry)
from .parser import (NoMarkersFound, SegmentationResult, SegmentationWarning,
                     compute_corpus_stats, count_words, segment_statute)
from .prompts import fill, load_sections, select_examples
from .review import ReviewQueue, ReviewTask, atomic_write_text
from .standardizer import apply_standardization, dedup_entries
from .rounding import round_half_up

STAGES = ("preprocess", "align", "extract", "standardize", "evaluate")

# Pipeline stages that pause for a human gate in strict mode, and the review
# stage name their tasks carry.
REVIEW_STAGE_FOR = {
    "preprocess": "segmentation",
    "align": "alignment",
    "extract": "extraction",
    "standardize": "standardization",
}
PIPELINE_STAGE_FOR = {review: stage for stage, review in REVIEW_STAGE_FOR.items()}

MOCK_CLOCK = "2024-01-01T00:00:00Z"
LANG_ORDER = ("zh", "ja", "en")

ARTIFACTS = {
    "preprocess": ("documents.json", "segments.json", "corpus_stats.json"),
    "align": ("alignments.json",),
    "extract": ("raw.termbase.json", "extraction_stats.json"),
    "standardize": ("standardized.termbase.json", "standardization_report.json"),
    "evaluate": ("evaluation_report.json",),
}


class CorpusError(ValueError):
    pass


class RunLocked(RuntimeError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


# --- corpus loading --------------------------------------------------------

def load_corpus(corpus_dir: str | Path) -> tuple[list[StatuteDocument], list[LawInfo]]:
    """Read laws.json plus one text file per (law, language)."""
    root = Path(corpus_dir)
    manifest_path = root / "laws.json"
    if not manifest_path.exists():
        raise CorpusError(f"corpus manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusError(f"laws.json is not valid JSON: {exc}") from exc
    laws_data = manifest.get("laws")
    if not isinstance(laws_data, list) or not laws_data:
        raise CorpusError("laws.json must carry a non-empty laws array")
    documents: list[StatuteDocument] = []
    laws: list[LawInfo] = []
    for i, law in enumerate(laws_data):
        try:
            law_id = law["id"]
            year = int(law["year"])
            domain_tag = law["domain_tag"]
            titles = law["titles"]
            files = law["files"]
        except (KeyError, TypeError) as exc:
            raise CorpusError(f"laws[{i}]: missing field {exc}") from exc
        laws.append(LawInfo(law_id=law_id, titles=dict(titles), year=year,
                            domain_tag=domain_tag))
        for language in LANG_ORDER:
            if language not in files:
                raise CorpusError(f"laws[{i}] ({law_id}): no {language} file listed")
            path = root / files[language]
            if not path.exists():
                raise CorpusError(f"laws[{i}] ({law_id}): file not found: {path}")
            documents.append(StatuteDocument(
                id=law_id,
                title=titles.get(language, law_id),
                language=language,
                year=year,
                domain_tag=domain_tag,
                body=path.read_text(encoding="utf-8"),
            ))
    return documents, laws


def refine_segments(doc: StatuteDocument, gateway: LlmGateway,
                    temperature: float = 0.0) -> SegmentationResult:
    """Fallback for marker-less documents: the model splits the body into
    blocks, which become sequentially numbered pseudo-articles."""
    sections = load_sections("refine.txt")
    prompt = sections["instruction"] + "\n\n" + fill(sections["task"],
                                                     block=doc.body.strip())
    response = gateway.chat(ChatRequest(
        model_id=gateway.config.model_id,
        messages=(ChatMessage(role="user", content=prompt),),
        temperature=temperature,
    ))
    payload = parse_json_payload(response.content)
    blocks = payload.get("blocks") if isinstance(payload, dict) else None
    if not isinstance(blocks, list) or not blocks or \
            not all(isinstance(b, str) and b.strip() for b in blocks):
        raise NoMarkersFound(
            f"no article markers in {doc.id!r} ({doc.language}) and the "
            "refinement model returned no usable blocks")
    segments = tuple(
        ArticleSegment(
            statute_id=doc.id,
            language=doc.language,
            article_number=i + 1,
            structural_path=(),
            text=block.strip(),
            word_count=count_words(block.strip(), doc.language),
        )
        for i, block in enumerate(blocks)
    )
    warning = SegmentationWarning(
        line_number=0,
        message="no article markers found; blocks split by the refinement model",
    )
    return SegmentationResult(source_id=doc.id, language=doc.language,
                              segments=segments, warnings=(warning,))


# --- artifact (de)serialization --------------------------------------------

def _segment_to_dict(segment: ArticleSegment) -> dict[str, Any]:
    return {
        "statute_id": segment.statute_id,
        "language": segment.language,
        "article_number": segment.article_number,
        "structural_path": [list(step) for step in segment.structural_path],
        "text": segment.text,
        "word_count": segment.word_count,
    }


def _segment_from_dict(data: Mapping[str, Any]) -> ArticleSegment:
    return ArticleSegment(
        statute_id=data["statute_id"],
        language=data["language"],
        article_number=data["article_number"],
        structural_path=tuple((kind, number) for kind, number in data["structural_path"]),
        text=data["text"],
        word_count=data["word_count"],
    )


def _pair_to_dict(pair: AlignedPair) -> dict[str, Any]:
    candidate = None
    if pair.candidate is not None:
        candidate = {
            "source_ref": list(pair.candidate.source_ref),
            "target_ref": list(pair.candidate.target_ref),
            "method": pair.candidate.method,
            "similarity": pair.candidate.similarity,
        }
    return {
        "candidate": candidate,
        "rerank_score": pair.rerank_score,
        "attempts": pair.attempts,
        "status": pair.status,
        "qc_notes": list(pair.qc_notes),
    }


def _pair_from_dict(data: Mapping[str, Any]) -> AlignedPair:
    candidate = None
    if data.get("candidate") is not None:
        raw = data["candidate"]
        candidate = AlignmentCandidate(
            source_ref=tuple(raw["source_ref"]),
            target_ref=tuple(raw["target_ref"]),
            method=raw["method"],
            similarity=raw["similarity"],
        )
    return AlignedPair(
        candidate=candidate,
        rerank_score=data.get("rerank_score"),
        attempts=data["attempts"],
        status=data["status"],
        qc_notes=tuple(data.get("qc_notes") or ()),
    )


# --- transcripts ------------------------------------------------------------

class TranscriptWriter:
    """One JSON file per provider round trip, numbered in call order."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._counter = self._initial_counter()

    def _initial_counter(self) -> int:
        highest = 0
        for path in self.directory.glob("*.json"):
            match = re.match(r"(\d+)\.", path.name)
            if match:
                highest = max(highest, int(match.group(1)))
        return highest

    def recorder_for(self, role: str) -> Callable[[str, bytes, Any, int], None]:
        def record(kind: str, body: bytes, outcome: Any, attempt: int) -> None:
            with self._lock:
                self._counter += 1
                index = self._counter
            if isinstance(outcome, dict):
                outcome_payload: Any = outcome
            else:
                outcome_payload = {"error": str(outcome)}
            payload = {
                "index": index,
                "role": role,
                "kind": kind,
                "attempt": attempt,
                "request": json.loads(body.decode("utf-8")),
                "outcome": outcome_payload,
            }
            path = self.directory / f"{index:04d}.{role}.json"
            path.write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
                            encoding="utf-8")
        return record


# --- run orchestration -------------------------------------------------------

def next_run_id(output_dir: str | Path) -> str:
    root = Path(output_dir)
    highest = 0
    if root.exists():
        for path in root.iterdir():
            match = re.fullmatch(r"run-(\d{4})", path.name)
            if match:
                highest = max(highest, int(match.group(1)))
    return f"run-{highest + 1:04d}"


def _fresh_stage_entry() -> dict[str, Any]:
    return {"status": "pending", "completed_at": None, "artifacts": [],
            "gate_task_id": None, "feedback": None}


class PipelineRun:
    """One termbase build, resumable from its run directory."""

    def __init__(self, config: PipelineConfig, run_dir: Path,
                 manifest: dict[str, Any]):
        self.config = config
        self.run_dir = run_dir
        self.manifest = manifest
        self.clock: Callable[[], str] = (lambda: MOCK_CLOCK) if config.mock else utc_now
        self.queue = ReviewQueue(run_dir / "review", clock=self.clock)
        self.transcripts = TranscriptWriter(run_dir / "transcripts")
        self._gateways: dict[str, LlmGateway] = {}

    # -- construction --------------------------------------------------------

    @classmethod
    def create(cls, config: PipelineConfig, run_id: str | None = None) -> "PipelineRun":
        rid = run_id if run_id else next_run_id(config.output_dir)
        run_dir = Path(config.output_dir) / rid
        if run_dir.exists():
            raise RunLocked(f"run directory already exists: {run_dir}")
        run_dir.mkdir(parents=True)
        clock = (lambda: MOCK_CLOCK) if config.mock else utc_now
        manifest = {
            "schema_version": 1,
            "run_id": rid,
            "created_at": clock(),
            "status": "created",
            "revision": 1,
            "mock": config.mock,
            "seed": config.seed,
            "strict_review": config.strict_review,
            "error": None,
            "stages": {stage: _fresh_stage_entry() for stage in STAGES},
        }
        run = cls(config, run_dir, manifest)
        save_config(config, run_dir / "config.json")
        run._save_manifest()
        return run

    @classmethod
    def open(cls, run_dir: str | Path) -> "PipelineRun":
        root = Path(run_dir)
        manifest_path = root / "manifest.json"
        if not manifest_path.exists():
            raise FileNotFoundError(f"not a run directory (no manifest): {root}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        config = load_config(root / "config.json")
        return cls(config, root, manifest)

    # -- small helpers ---------------------------------------------------------

    @property
    def run_id(self) -> str:
        return self.manifest["run_id"]

    def _save_manifest(self) -> None:
        atomic_write_text(self.run_dir / "manifest.json",
                          json.dumps(self.manifest, ensure_ascii=False, indent=2) + "\n")

    def _set_status(self, status: str, error: str | None = None) -> None:
        self.manifest["status"] = status
        self.manifest["error"] = error
        self._save_manifest()

    @contextmanager
    def _locked(self) -> Iterator[None]:
        lock_path = self.run_dir / ".lock"
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RunLocked(f"run is already being executed (lock: {lock_path})") from None
        try:
            os.write(fd, str(os.getpid()).encode("ascii"))
            os.close(fd)
            yield
        finally:
            try:
                os.unlink(lock_path)
            except FileNotFoundError:
                pass

    def _gateway(self, role: str) -> LlmGateway:
        if role not in self._gateways:
            self._gateways[role] = build_gateway(
                self.config, role, recorder=self.transcripts.recorder_for(role))
        return self._gateways[role]

    def _rev_name(self, name: str, n: int) -> str:
        stem, _, ext = name.rpartition(".")
        return f"{stem}.rev{n}.{ext}"

    def _write_artifact(self, name: str, text: str) -> None:
        path = self.run_dir / name
        if path.exists():
            n = 1
            while (self.run_dir / self._rev_name(name, n)).exists():
                n += 1
            path.rename(self.run_dir / self._rev_name(name, n))
        atomic_write_text(path, text)

    def _read_artifact(self, name: str) -> Any:
        return json.loads((self.run_dir / name).read_text(encoding="utf-8"))

    def summary(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "status": self.manifest["status"],
            "created_at": self.manifest["created_at"],
            "revision": self.manifest["revision"],
            "mock": self.manifest["mock"],
            "seed": self.manifest["seed"],
            "strict_review": self.manifest["strict_review"],
            "error": self.manifest["error"],
            "stages": {stage: {
                "status": entry["status"],
                "completed_at": entry["completed_at"],
                "artifacts": list(entry["artifacts"]),
                "gate_task_id": entry["gate_task_id"],
            } for stage, entry in self.manifest["stages"].items()},
        }

    # -- review plumbing -------------------------------------------------------

    def apply_rejection(self, task: ReviewTask) -> None:
        """Invalidate the rejected stage and everything after it; the feedback
        rides along into the re-run's prompts."""
        with self._locked():
            self._apply_rejection(task)

    def _apply_rejection(self, task: ReviewTask) -> None:
        stage = PIPELINE_STAGE_FOR[task.stage]
        self.manifest["revision"] += 1
        for later in STAGES[STAGES.index(stage):]:
            entry = self.manifest["stages"][later]
            entry["status"] = "pending"
            entry["completed_at"] = None
            entry["gate_task_id"] = None
            review_stage = REVIEW_STAGE_FOR.get(later)
            if review_stage:
                self.queue.supersede_open(review_stage)
        self.manifest["stages"][stage]["feedback"] = task.feedback
        self._save_manifest()

    def _complete_stage(self, stage: str) -> None:
        entry = self.manifest["stages"][stage]
        entry["status"] = "complete"
        entry["completed_at"] = self.clock()
        entry["artifacts"] = list(ARTIFACTS[stage])
        self._save_manifest()

    def _open_gate(self, stage: str) -> None:
        entry = self.manifest["stages"][stage]
        gate = self.queue.create(
            kind="gate",
            stage=REVIEW_STAGE_FOR[stage],
            title=f"approve {stage} results (revision {self.manifest['revision']})",
            payload={"pipeline_stage": stage, "revision": self.manifest["revision"]},
        )
        entry["gate_task_id"] = gate.id
        entry["status"] = "awaiting_review"
        entry["artifacts"] = list(ARTIFACTS[stage])
        self._save_manifest()

    # -- execution -------------------------------------------------------------

    def execute(self, until: str | None = None) -> str:
        """Run pending stages in order; returns the resulting run status.

        Stops early at an open review gate (strict mode) or after `until`.
        """
        if until is not None and until not in STAGES:
            raise ValueError(f"unknown stage {until!r}; stages are {STAGES}")
        with self._locked():
            self._set_status("running")
            try:
                for stage in STAGES:
                    entry = self.manifest["stages"][stage]
                    if entry["status"] == "complete":
                        if until == stage:
                            break
                        continue
                    if entry["status"] == "awaiting_review":
                        gate = self.queue.get(entry["gate_task_id"])
                        if gate.status == "open":
                            self._set_status("awaiting_review")
                            return "awaiting_review"
                        if gate.status == "approved":
                            self._complete_stage(stage)
                            if until == stage:
                                break
                            continue
                        self._apply_rejection(gate)
                        entry = self.manifest["stages"][stage]
                    self._run_stage(stage, feedback=entry.get("feedback"))
                    if self.config.strict_review and stage in REVIEW_STAGE_FOR:
                        self._open_gate(stage)
                        self._set_status("awaiting_review")
                        return "awaiting_review"
                    self._complete_stage(stage)
                    if until == stage:
                        break
            except Exception as exc:
                self._set_status("failed", error=str(exc))
                raise StageError(stage, exc) from exc
            if all(e["status"] == "complete" for e in self.manifest["stages"].values()):
                self._set_status("complete")
                return "complete"
            self._set_status("partial")
            return "partial"

    def _run_stage(self, stage: str, feedback: str | None = None) -> None:
        runner = {
            "preprocess": self._stage_preprocess,
            "align": self._stage_align,
            "extract": self._stage_extract,
            "standardize": self._stage_standardize,
            "evaluate": self._stage_evaluate,
        }[stage]
        if stage in ("extract", "standardize"):
            runner(feedback=feedback)  # type: ignore[call-arg]
        else:
            runner()  # type: ignore[call-arg]

    # -- stage: preprocess ------------------------------------------------------

    def _stage_preprocess(self) -> None:
        documents, laws = load_corpus(self.config.corpus_dir)
        results: list[SegmentationResult] = []
        for doc in documents:
            try:
                results.append(segment_statute(doc))
            except NoMarkersFound:
                results.append(refine_segments(
                    doc, self._gateway("refine"),
                    temperature=self.config.temperature("refine")))
        self._write_artifact("documents.json", dumps_canonical({
            "laws": [{"law_id": law.law_id, "titles": dict(law.titles),
                      "year": law.year, "domain_tag": law.domain_tag}
                     for law in laws],
            "documents": [{"id": d.id, "language": d.language, "title": d.title,
                           "year": d.year, "domain_tag": d.domain_tag, "body": d.body}
                          for d in documents],
        }))
        warnings_payload = []
        for result in results:
            for warning in result.warnings:
                warnings_payload.append({
                    "source_id": result.source_id,
                    "language": result.language,
                    "line_number": warning.line_number,
                    "message": warning.message,
                })
        self._write_artifact("segments.json", dumps_canonical({
            "segments": [_segment_to_dict(s) for r in results for s in r.segments],
            "warnings": warnings_payload,
        }))
        stats = []
        for language in LANG_ORDER:
            language_segments = [s for r in results for s in r.segments
                                 if s.language == language]
            if language_segments:
                stat = compute_corpus_stats(language_segments)
                stats.append({
                    "language": stat.language,
                    "article_count": stat.article_count,
                    "avg_words": stat.avg_words,
                    "std_words": stat.std_words,
                    "total_words": stat.total_words,
                })
        self._write_artifact("corpus_stats.json", dumps_canonical({"stats": stats}))
        for item in warnings_payload:
            self.queue.create(
                kind="item",
                stage="segmentation",
                title=f"segmentation warning: {item['source_id']} ({item['language']})",
                payload=item,
                qc_notes=(item["message"],),
                rerun_ref={"statute_id": item["source_id"], "language": item["language"]},
            )

    # -- stage: align -----------------------------------------------------------

    def _segments_by_law(self) -> tuple[list[str], dict[tuple[str, str], list[ArticleSegment]]]:
        documents = self._read_artifact("documents.json")
        law_ids = [law["law_id"] for law in documents["laws"]]
        segments = self._read_artifact("segments.json")["segments"]
        grouped: dict[tuple[str, str], list[ArticleSegment]] = {}
        for raw in segments:
            segment = _segment_from_dict(raw)
            grouped.setdefault((segment.statute_id, segment.language), []).append(segment)
        return law_ids, grouped

    def _stage_align(self) -> None:
        law_ids, grouped = self._segments_by_law()
        policy = AlignPolicy(
            threshold=self.config.align.threshold,
            max_attempts=self.config.align.max_attempts,
            k=self.config.align.k,
            text_window=self.config.align.text_window,
        )
        embed_gw = self._gateway("embed")
        rerank_gw = self._gateway("rerank")
        laws_payload = []
        review_items: list[dict[str, Any]] = []
        for law_id in law_ids:
            zh = grouped.get((law_id, "zh"), [])
            law_entry: dict[str, Any] = {"law_id": law_id}
            pairs_by_language: dict[str, list[AlignedPair]] = {}
            for language in ("en", "ja"):
                targets = grouped.get((law_id, language), [])
                pairs = align_statutes(zh, targets, embed_gw, policy,
                                       rerank_gateway=rerank_gw)
                pairs_by_language[language] = pairs
                law_entry[language] = [_pair_to_dict(p) for p in pairs]
                for source, pair in zip(zh, pairs):
                    if pair.status != "accepted":
                        review_items.append({
                            "law_id": law_id,
                            "article_number": source.article_number,
                            "language": language,
                            "status": pair.status,
                            "qc_notes": list(pair.qc_notes),
                        })
            assembly = build_trilingual(zh, grouped.get((law_id, "en"), []),
                                        grouped.get((law_id, "ja"), []),
                                        pairs_by_language["en"], pairs_by_language["ja"])
            law_entry["unmatched"] = [
                {"zh_ref": list(u.zh_ref), "missing": list(u.missing),
                 "notes": list(u.notes)}
                for u in assembly.unmatched
            ]
            laws_payload.append(law_entry)
        self._write_artifact("alignments.json", dumps_canonical({"laws": laws_payload}))
        for item in review_items:
            self.queue.create(
                kind="item",
                stage="alignment",
                title=(f"alignment {item['status']}: {item['law_id']} "
                       f"article {item['article_number']} (zh→{item['language']})"),
                payload=item,
                qc_notes=tuple(item["qc_notes"]),
                rerun_ref={"law_id": item["law_id"],
                           "article_number": item["article_number"],
                           "language": item["language"]},
            )

    # -- stage: extract ----------------------------------------------------------

    def _assemblies(self) -> tuple[list[str], dict[str, TrilingualAssembly],
                                   dict[str, str], int]:
        law_ids, grouped = self._segments_by_law()
        documents = self._read_artifact("documents.json")
        domain_by_law = {law["law_id"]: law["domain_tag"] for law in documents["laws"]}
        alignments = self._read_artifact("alignments.json")
        assemblies: dict[str, TrilingualAssembly] = {}
        total_articles = 0
        for law_entry in alignments["laws"]:
            law_id = law_entry["law_id"]
            zh = grouped.get((law_id, "zh"), [])
            total_articles += len(zh)
            assemblies[law_id] = build_trilingual(
                zh,
                grouped.get((law_id, "en"), []),
                grouped.get((law_id, "ja"), []),
                [_pair_from_dict(p) for p in law_entry["en"]],
                [_pair_from_dict(p) for p in law_entry["ja"]],
            )
        return law_ids, assemblies, domain_by_law, total_articles

    def _process_triple(self, triple: TrilingualTriple, domain_tag: str,
                        feedback: str | None) -> tuple[list[Any], list[dict[str, Any]]]:
        events: list[dict[str, Any]] = []
        by_direction: dict[str, list[Any]] = {}
        where = {"law_id": triple.zh.statute_id,
                 "article_number": triple.zh.article_number}
        temp = self.config.temperature("extract")
        for direction in ("zh_en", "zh_ja"):
            shots = select_examples(domain_tag, direction)
            try:
                by_direction[direction] = extract_stream(
                    triple, direction, self._gateway("extract"),
                    shots=shots, feedback=feedback, temperature=temp)
            except (MalformedResponse, FieldError, ProviderError, TimeoutError) as exc:
                events.append({"type": "stream_failed", "direction": direction,
                               "error": str(exc), **where})
                by_direction[direction] = []
        merged = merge_streams(by_direction["zh_en"], by_direction["zh_ja"])
        completed = []
        complete_temp = self.config.temperature("complete")
        for entry in merged:
            if entry.english and entry.japanese:
                completed.append(entry)
                continue
            try:
                completed.append(auto_complete(entry, triple, self._gateway("complete"),
                                               temperature=complete_temp))
            except (CompletionRefused, ProviderError, TimeoutError) as exc:
                events.append({"type": "completion_refused", "chinese": entry.chinese,
                               "error": str(exc), **where})
                completed.append(replace(
                    entry, notes=entry.notes + (f"auto-completion refused: {exc}",)))
        final = []
        for entry in completed:
            flags = detect_hallucination(entry, triple)
            flagged = sorted(language for language, hit in flags.items() if hit)
            if flagged:
                events.append({"type": "hallucination", "chinese": entry.chinese,
                               "languages": flagged, **where})
                entry = replace(entry, notes=entry.notes + (
                    f"hallucination flag: {', '.join(flagged)}",))
            final.append(entry)
        return final, events

    def _stage_extract(self, feedback: str | None = None) -> None:
        law_ids, assemblies, domain_by_law, total_articles = self._assemblies()
        documents = self._read_artifact("documents.json")
        laws = [LawInfo(law_id=law["law_id"], titles=law["titles"], year=law["year"],
                        domain_tag=law["domain_tag"]) for law in documents["laws"]]
        jobs: list[tuple[TrilingualTriple, str]] = []
        for law_id in law_ids:
            for triple in assemblies[law_id].triples:
                jobs.append((triple, domain_by_law[law_id]))
        results: list[tuple[list[Any], list[dict[str, Any]]] | None] = [None] * len(jobs)
        with ThreadPoolExecutor(max_workers=self.config.max_workers) as pool:
            futures = {
                pool.submit(self._process_triple, triple, domain, feedback): i
                for i, (triple, domain) in enumerate(jobs)
            }
            for future in futures:
                results[futures[future]] = future.result()
        entries = []
        events: list[dict[str, Any]] = []
        for result in results:
            assert result is not None
            triple_entries, triple_events = result
            entries.extend(triple_entries)
            events.extend(triple_events)
        for law_id in law_ids:
            for unmatched in assemblies[law_id].unmatched:
                events.append({"type": "article_unaligned", "law_id": law_id,
                               "article_number": unmatched.zh_ref[1],
                               "error": "; ".join(unmatched.notes) or "not aligned"})
        termbase = new_termbase(entries, laws, created_at=self.clock())
        self._write_artifact("raw.termbase.json",
                             dumps_canonical(termbase_to_dict(termbase)))
        stats = extraction_stats(entries, total_articles) if entries else None
        flagged = sum(1 for e in events if e["type"] == "hallucination")
        checked = len(entries)
        stats_payload: dict[str, Any] = {
            "articles_total": total_articles,
            "articles_succeeded": stats.articles_succeeded if stats else 0,
            "success_rate": stats.success_rate if stats else 0.0,
            "extracted": stats.extracted if stats else 0,
            "unique_terms": stats.unique_terms if stats else 0,
            "avg_per_article": stats.avg_per_article if stats else 0.0,
            "ja_covered": stats.ja_covered if stats else 0,
            "en_covered": stats.en_covered if stats else 0,
            "hallucination": {
                "checked": checked,
                "flagged": flagged,
                "rate": hallucination_rate(flagged, checked) if checked else None,
            },
            "events": events,
        }
        self._write_artifact("extraction_stats.json", dumps_canonical(stats_payload))
        for event in events:
            if event["type"] == "hallucination":
                title = (f"hallucination flag: {event['chinese']!r} in "
                         f"{event['law_id']} article {event['article_number']} "
                         f"({', '.join(event['languages'])})")
            elif event["type"] == "completion_refused":
                title = (f"auto-completion refused: {event['chinese']!r} in "
                         f"{event['law_id']} article {event['article_number']}")
            elif event["type"] == "article_unaligned":
                title = (f"article skipped (not aligned): {event['law_id']} "
                         f"article {event['article_number']}")
            else:
                title = (f"extraction stream failed: {event['law_id']} article "
                         f"{event['article_number']} ({event['direction']})")
            self.queue.create(
                kind="item",
                stage="extraction",
                title=title,
                payload=event,
                rerun_ref={"law_id": event["law_id"],
                           "article_number": event["article_number"]},
            )

    # -- stage: standardize --------------------------------------------------------

    def _stage_standardize(self, feedback: str | None = None) -> None:
        termbase = load_termbase(self.run_dir / "raw.termbase.json")
        standardized, report = apply_standardization(
            list(termbase.entries),
            self._gateway("standardize"),
            max_attempts=2,
            temperature=self.config.temperature("standardize"),
            feedback=feedback,
            extra_metrics=self.config.extra_metrics,
        )
        standardized = dedup_entries(standardized)
        problems: list[str] = []
        for i, entry in enumerate(standardized):
            violations = validate_entry(entry, "standardized"
                                        if entry.status == "standardized" else "raw")
            problems.extend(f"entries[{i}].{v}" for v in violations)
        if problems:
            raise ValueError("standardized entries failed validation: "
                             + "; ".join(problems[:5]))
        out = assign_concept_ids(new_termbase(
            standardized,
            termbase.law_index.values(),
            created_at=termbase.created_at,
        ))
        out = replace(out, revised_at=self.clock())
        self._write_artifact("standardized.termbase.json",
                             dumps_canonical(termbase_to_dict(out)))
        report_payload = {
            "stats": {
                "original": report.stats.original,
                "standardized": report.stats.standardized,
                "variants_merged": report.stats.variants_merged,
                "unique_chinese": report.stats.unique_chinese,
                "reduction_rate": report.stats.reduction_rate,
                "independence_rate": report.stats.independence_rate,
                "extra": dict(report.stats.extra),
            },
            "groups": [
                {
                    "law_id": outcome.law_id,
                    "chinese": outcome.chinese,
                    "occurrences": outcome.occurrences,
                    "violation": outcome.violation,
                    "decision": None if outcome.decision is None else {
                        "best": list(outcome.decision.best),
                        "merged": [list(p) for p in outcome.decision.merged],
                        "distinct": [list(p) for p in outcome.decision.distinct],
                        "rationale": outcome.decision.rationale,
                        "llm_called": outcome.decision.llm_called,
                    },
                }
                for outcome in report.outcomes
            ],
        }
        self._write_artifact("standardization_report.json", dumps_canonical(report_payload))
        for outcome in report.violations:
            self.queue.create(
                kind="item",
                stage="standardization",
                title=(f"standardization escalated: {outcome.chinese!r} "
                       f"({outcome.law_id})"),
                payload={"law_id": outcome.law_id, "chinese": outcome.chinese,
                         "occurrences": outcome.occurrences,
                         "violation": outcome.violation},
                rerun_ref={"law_id": outcome.law_id, "chinese": outcome.chinese},
            )

    # -- stage: evaluate --------------------------------------------------------------

    def _stage_evaluate(self) -> None:
        termbase = load_termbase(self.run_dir / "standardized.termbase.json")
        extraction = self._read_artifact("extraction_stats.json")
        standardization = self._read_artifact("standardization_report.json")["stats"]
        metrics: dict[str, float] = {
            "success_rate": success_rate(extraction["articles_succeeded"],
                                         extraction["articles_total"]),
            "duplicate_rate": duplicate_rate(standardization["original"],
                                             standardization["standardized"]),
            "independence_rate": standardization["independence_rate"],
            "avg_terms_per_article": extraction["avg_per_article"],
        }
        if extraction["hallucination"]["rate"] is not None:
            metrics["hallucination_rate"] = extraction["hallucination"]["rate"]
        for name, value in standardization["extra"].items():
            metrics[name] = round_half_up(value, 1)
        sample = sample_terms(termbase.entries, n_max=self.config.sample_max,
                              seed=self.config.seed)
        scores = evaluate_sample(sample, self._gateway("judge"),
                                 temperature=self.config.temperature("judge"))
        report = build_quality_report(
            dimension_scores=scores,
            weights=self.config.weight_vector(),
            preset_name=None if self.config.weights is not None
            else self.config.weight_preset,
            sample_size=len(sample),
            population=len(termbase.entries),
            seed=self.config.seed,
            metrics=metrics,
            generated_at=self.clock(),
        )
        self._write_artifact("evaluation_report.json", dumps_canonical(report))


def run_pipeline(config: PipelineConfig, run_id: str | None = None,
                 until: str | None = None) -> PipelineRun:
    """Create and execute a run; returns the run (check .manifest for status)."""
    run = PipelineRun.create(config, run_id=run_id)
    run.execute(until=until)
    return run


def resume_pipeline(run_dir: str | Path, until: str | None = None) -> PipelineRun:
    run = PipelineRun.open(run_dir)
    run.execute(until=until)
    return run
