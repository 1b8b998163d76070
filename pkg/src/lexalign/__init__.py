"""Trilingual (zh/ja/en) legal termbase construction pipeline.

Stages: statute segmentation, article alignment, dual-stream term extraction
with auto-completion, variant standardization, and weighted multi-dimension
quality evaluation — orchestrated as resumable runs with a human review queue,
a CLI, and an HTTP API.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .aligner import AlignedPair, AlignPolicy, TrilingualTriple, align_statutes
from .config import (ConfigError, PipelineConfig, ProviderSpec, default_config,
                     load_config, save_config)
from .evaluation import (DIMENSIONS, PRESETS, WeightVector, aggregate_score,
                         build_quality_report, grade_for)
from .exporters import EXPORT_FORMATS, UnsupportedField, export_termbase, write_export
from .extractor import extract_stream, extraction_stats, merge_streams
from .gateway import ChatMessage, ChatRequest, LlmGateway, ProviderConfig, ProviderError
from .model import (ArticleSegment, LawInfo, StatuteDocument, Termbase, TermEntry,
                    assign_concept_ids, load_termbase, new_termbase, save_termbase)
from .parser import compute_corpus_stats, parse_chinese_numeral, segment_statute
from .pipeline import (STAGES, CorpusError, PipelineRun, RunLocked, StageError,
                       load_corpus, resume_pipeline, run_pipeline)
from .reliability import RatingsMatrix, agreement_summary, cronbach_alpha, icc2
from .review import ReviewQueue, ReviewTask
from .standardizer import apply_standardization, compute_standardization_stats
from .synthetic import build_demo_corpus, write_corpus

__all__ = [
    "__version__",
    "AlignedPair", "AlignPolicy", "TrilingualTriple", "align_statutes",
    "ConfigError", "PipelineConfig", "ProviderSpec", "default_config",
    "load_config", "save_config",
    "DIMENSIONS", "PRESETS", "WeightVector", "aggregate_score",
    "build_quality_report", "grade_for",
    "EXPORT_FORMATS", "UnsupportedField", "export_termbase", "write_export",
    "extract_stream", "extraction_stats", "merge_streams",
    "ChatMessage", "ChatRequest", "LlmGateway", "ProviderConfig", "ProviderError",
    "ArticleSegment", "LawInfo", "StatuteDocument", "Termbase", "TermEntry",
    "assign_concept_ids", "load_termbase", "new_termbase", "save_termbase",
    "compute_corpus_stats", "parse_chinese_numeral", "segment_statute",
    "STAGES", "CorpusError", "PipelineRun", "RunLocked", "StageError",
    "load_corpus", "resume_pipeline", "run_pipeline",
    "RatingsMatrix", "agreement_summary", "cronbach_alpha", "icc2",
    "ReviewQueue", "ReviewTask",
    "apply_standardization", "compute_standardization_stats",
    "build_demo_corpus", "write_corpus",
]
