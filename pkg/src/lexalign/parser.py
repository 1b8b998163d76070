"""Statute segmentation: article/chapter/section markers, numerals, word counts."""
from __future__ import annotations

import math
import re
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import ArticleSegment, StatuteDocument


class ParseError(ValueError):
    """Numeral text could not be parsed; message carries the unconsumed suffix."""


class NoMarkersFound(ValueError):
    """A statute body contained no recognizable article markers."""


class EmptyCorpus(ValueError):
    pass


CN_DIGITS = {"零": 0, "〇": 0, "一": 1, "二": 2, "两": 2, "三": 3, "四": 4,
             "五": 5, "六": 6, "七": 7, "八": 8, "九": 9}
CN_UNITS = {"十": 10, "百": 100, "千": 1000}
_CN_DIGIT_CHARS = "".join(CN_DIGITS)
_CN_UNIT_CHARS = "".join(CN_UNITS)

# Full-width digits show up in Japanese article markers (第１条).
_FULLWIDTH_DIGITS = str.maketrans("０１２３４５６７８９", "0123456789")

_MARKER_RE = re.compile(
    rf"^第\s*([0-9０-９{_CN_DIGIT_CHARS}{_CN_UNIT_CHARS}]+)\s*(条|條|章|节|節)$"
)

_ROMAN_VALUES = {"I": 1, "V": 5, "X": 10, "L": 50, "C": 100, "D": 500, "M": 1000}


def _parse_kanji_numeral(text: str) -> int:
    """Parse a composition of 一..九 with 十/百/千 (and 零) into an int."""
    value = 0
    current = 0
    last_unit = 10_000
    after_zero = False
    for i, ch in enumerate(text):
        if ch in ("零", "〇"):
            if current:
                raise ParseError(f"unexpected zero at {text[i:]!r}")
            after_zero = True
        elif ch in CN_DIGITS:
            if current:
                raise ParseError(f"unexpected digit at {text[i:]!r}")
            current = CN_DIGITS[ch]
        elif ch in CN_UNITS:
            unit = CN_UNITS[ch]
            if unit >= last_unit:
                raise ParseError(f"unit out of order at {text[i:]!r}")
            if current == 0:
                # Bare leading 十 as in 十二; 零十 is malformed.
                if ch != "十" or value or after_zero:
                    raise ParseError(f"unit without digit at {text[i:]!r}")
                current = 1
            value += current * unit
            current = 0
            last_unit = unit
            after_zero = False
        else:
            raise ParseError(f"unconsumed suffix {text[i:]!r}")
    # A trailing digit is the ones place after 零 (一百零一) or after 十 (二十四);
    # other trailing digits (一百三) are ambiguous and rejected.
    if current and not after_zero and last_unit not in (10, 10_000):
        raise ParseError(f"ambiguous trailing digit in {text!r}")
    return value + current


def parse_chinese_numeral(text: str) -> int:
    """Parse 第X条/第X章/第X节 markers or a bare numeral, 1..9999.

    Accepts kanji compositions (一..九 with 十/百/千/零) and ASCII or
    full-width Arabic digits.
    """
    stripped = text.strip()
    if not stripped:
        raise ParseError("empty numeral text")
    match = _MARKER_RE.match(stripped)
    if match:
        numeral = match.group(1)
    elif stripped.startswith("第"):
        raise ParseError(f"unconsumed suffix {stripped!r}")
    else:
        numeral = stripped
    numeral = numeral.translate(_FULLWIDTH_DIGITS)
    if numeral.isascii() and numeral.isdigit():
        value = int(numeral)
    else:
        value = _parse_kanji_numeral(numeral)
    if not 1 <= value <= 9999:
        raise ParseError(f"numeral out of supported range: {value}")
    return value


def format_chinese_numeral(n: int) -> str:
    """Format 1..9999 in standard kanji form (第 marker not included)."""
    if not 1 <= n <= 9999:
        raise ValueError(f"out of supported range: {n}")
    digit_chars = "零一二三四五六七八九"
    if n < 10:
        return digit_chars[n]
    if n < 20:
        return "十" + (digit_chars[n % 10] if n % 10 else "")
    parts: list[str] = []
    pending_zero = False
    for value, unit in ((1000, "千"), (100, "百"), (10, "十"), (1, "")):
        digit = (n // value) % 10
        if digit == 0:
            if parts:
                pending_zero = True
            continue
        if pending_zero:
            parts.append("零")
            pending_zero = False
        parts.append(digit_chars[digit] + unit)
    return "".join(parts)


def _parse_roman(text: str) -> int | None:
    text = text.upper()
    if not text or any(ch not in _ROMAN_VALUES for ch in text):
        return None
    total = 0
    for i, ch in enumerate(text):
        value = _ROMAN_VALUES[ch]
        if i + 1 < len(text) and _ROMAN_VALUES[text[i + 1]] > value:
            total -= value
        else:
            total += value
    return total if total > 0 else None


_EN_MARKER_RE = re.compile(
    r"^(Article|Chapter|Section)\s+([0-9]+|[IVXLCDMivxlcdm]+)\b[.:]?", re.IGNORECASE
)
_CJK_MARKER_RE = re.compile(
    rf"第\s*[0-9０-９{_CN_DIGIT_CHARS}{_CN_UNIT_CHARS}]+\s*(条|條|章|节|節)"
)
_LEVEL_BY_SUFFIX = {"条": "article", "條": "article", "章": "chapter",
                    "节": "section", "節": "section"}


def classify_line(line: str, language: str) -> tuple[str, int] | None:
    """Classify a line as ('article'|'chapter'|'section', number) or None.

    Markdown header prefixes (#, ##, ...) are stripped first, so headers are
    considered as structural candidates before the bare pattern markers.
    """
    stripped = line.strip()
    stripped = re.sub(r"^#{1,6}\s*", "", stripped)
    if not stripped:
        return None
    if language == "en":
        match = _EN_MARKER_RE.match(stripped)
        if not match:
            return None
        kind = match.group(1).lower()
        raw = match.group(2)
        number = int(raw) if raw.isdigit() else _parse_roman(raw)
        if number is None or number < 1:
            return None
        return (kind, number)
    match = _CJK_MARKER_RE.match(stripped)
    if not match:
        return None
    level = _LEVEL_BY_SUFFIX[match.group(1)]
    try:
        number = parse_chinese_numeral(match.group(0).replace(" ", ""))
    except ParseError:
        return None
    return (level, number)


@dataclass(frozen=True)
class SegmentationWarning:
    line_number: int
    message: str


@dataclass(frozen=True)
class SegmentationResult:
    source_id: str
    language: str
    segments: tuple[ArticleSegment, ...]
    warnings: tuple[SegmentationWarning, ...]


def segment_statute(doc: StatuteDocument) -> SegmentationResult:
    """Split a statute body into article segments with structural paths.

    Chapter/section markers set the structural context of subsequent articles;
    text between article markers attaches to the preceding article. Article
    numbering discontinuities are recorded as warnings, not errors.
    """
    lines = doc.body.splitlines()
    segments: list[ArticleSegment] = []
    warnings: list[SegmentationWarning] = []
    chapter: int | None = None
    section: int | None = None
    current_lines: list[str] = []
    current_number: int | None = None
    current_path: tuple[tuple[str, int], ...] = ()
    last_article: int | None = None

    def flush() -> None:
        nonlocal current_lines, current_number
        if current_number is None:
            return
        text = "\n".join(current_lines).strip()
        segments.append(ArticleSegment(
            statute_id=doc.id,
            language=doc.language,
            article_number=current_number,
            structural_path=current_path,
            text=text,
            word_count=count_words(text, doc.language),
        ))
        current_lines = []
        current_number = None

    for line_no, line in enumerate(lines, start=1):
        marker = classify_line(line, doc.language)
        if marker is None:
            if current_number is not None:
                current_lines.append(line)
            continue
        level, number = marker
        if level == "article":
            flush()
            if last_article is not None and number != last_article + 1:
                warnings.append(SegmentationWarning(
                    line_number=line_no,
                    message=f"article numbering discontinuity after {last_article}: got {number}",
                ))
            last_article = number
            current_number = number
            path: list[tuple[str, int]] = []
            if chapter is not None:
                path.append(("chapter", chapter))
            if section is not None:
                path.append(("section", section))
            current_path = tuple(path)
            current_lines = [line.strip()]
        elif level == "chapter":
            flush()
            chapter = number
            section = None
        else:
            flush()
            section = number
    flush()

    if not segments:
        raise NoMarkersFound(f"no article markers found in {doc.id!r} ({doc.language})")
    return SegmentationResult(
        source_id=doc.id,
        language=doc.language,
        segments=tuple(segments),
        warnings=tuple(warnings),
    )


def count_words(text: str, language: str) -> int:
    """en: whitespace-delimited tokens. zh/ja: non-punctuation characters."""
    if language == "en":
        return len(text.split())
    if language not in ("zh", "ja"):
        raise ValueError(f"unknown language code: {language!r}")
    total = 0
    for ch in text:
        category = unicodedata.category(ch)
        if category[0] in ("P", "Z", "C"):
            continue
        total += 1
    return total


@dataclass(frozen=True)
class CorpusStats:
    language: str
    article_count: int
    avg_words: float
    std_words: float
    total_words: int


def compute_corpus_stats(segments: Sequence[ArticleSegment]) -> CorpusStats:
    """Per-language averages with population (ddof=0) standard deviation."""
    if not segments:
        raise EmptyCorpus("no segments to summarize")
    languages = {seg.language for seg in segments}
    if len(languages) != 1:
        raise ValueError(f"mixed languages in one stats call: {sorted(languages)}")
    counts = [seg.word_count for seg in segments]
    n = len(counts)
    avg = sum(counts) / n
    std = math.sqrt(sum((c - avg) ** 2 for c in counts) / n)
    return CorpusStats(
        language=segments[0].language,
        article_count=n,
        avg_words=avg,
        std_words=std,
        total_words=sum(counts),
    )


def format_stats_rows(stats: Iterable[CorpusStats]) -> list[str]:
    """Rows shaped like the corpus summary table: lang, n, avg +/- std, total."""
    rows = ["language  articles  avg_words  std_words  total_words"]
    for s in stats:
        rows.append(
            f"{s.language:<8}  {s.article_count:>8}  {s.avg_words:>9.1f}  "
            f"{s.std_words:>9.1f}  {s.total_words:>11}"
        )
    return rows
