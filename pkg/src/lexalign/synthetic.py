"""Deterministic demo corpus: three trilingual statutes with planted terms.

The three language editions of each demo statute share their payload text and
differ only in marker conventions (kanji numerals, full-width digits, English
headings). That makes character-level embeddings rank the true counterpart
first, so the whole pipeline can run offline against the mock provider.

Term spans are planted with bracket conventions the mock extractor reads:
    《term》  extracted by both translation streams
    〈term〉  extracted by the Chinese-English stream only (creates Japanese
              coverage gaps for auto-completion to fill)

One article's Japanese edition deliberately drops a planted term so that
auto-completion is refused and the term's variant group reaches the
standardization model with two genuinely different renderings.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .model import LawInfo, StatuteDocument
from .parser import format_chinese_numeral


@dataclass(frozen=True)
class DemoArticle:
    number: int
    payload: str
    ja_payload: str | None = None  # override when the Japanese edition differs
    extra_lines: tuple[str, ...] = ()


@dataclass(frozen=True)
class DemoUnit:
    """A chapter or a section heading with the articles directly under it."""

    kind: str  # "chapter" | "section"
    number: int
    titles: Mapping[str, str]  # language -> heading words
    articles: tuple[DemoArticle, ...]


@dataclass(frozen=True)
class DemoLaw:
    law_id: str
    year: int
    domain_tag: str
    titles: Mapping[str, str]
    units: tuple[DemoUnit, ...]

    def articles(self) -> list[DemoArticle]:
        return [a for unit in self.units for a in unit.articles]


_ROMAN = {1: "I", 2: "II", 3: "III", 4: "IV", 5: "V"}


def _zh_heading(kind: str, number: int, title: str) -> str:
    suffix = "章" if kind == "chapter" else "节"
    return f"第{format_chinese_numeral(number)}{suffix} {title}"


def _ja_heading(kind: str, number: int, title: str) -> str:
    suffix = "章" if kind == "chapter" else "節"
    fullwidth = str(number).translate(str.maketrans("0123456789", "０１２３４５６７８９"))
    return f"第{fullwidth}{suffix} {title}"


def _en_heading(kind: str, number: int, title: str) -> str:
    if kind == "chapter":
        return f"Chapter {_ROMAN[number]} {title}"
    return f"Section {number}. {title}"


def _zh_article(article: DemoArticle) -> list[str]:
    lines = [f"第{format_chinese_numeral(article.number)}条 {article.payload}"]
    lines.extend(article.extra_lines)
    return lines


def _ja_article(article: DemoArticle) -> list[str]:
    fullwidth = str(article.number).translate(
        str.maketrans("0123456789", "０１２３４５６７８９"))
    payload = article.ja_payload if article.ja_payload is not None else article.payload
    lines = [f"第{fullwidth}条 {payload}"]
    lines.extend(article.extra_lines)
    return lines


def _en_article(article: DemoArticle) -> list[str]:
    lines = [f"Article {article.number}. {article.payload}"]
    lines.extend(article.extra_lines)
    return lines


def render_law(law: DemoLaw, language: str) -> str:
    heading = {"zh": _zh_heading, "ja": _ja_heading, "en": _en_heading}[language]
    article = {"zh": _zh_article, "ja": _ja_article, "en": _en_article}[language]
    lines: list[str] = [f"# {law.titles[language]}", ""]
    for unit in law.units:
        lines.append(heading(unit.kind, unit.number, unit.titles[language]))
        lines.append("")
        for art in unit.articles:
            lines.extend(article(art))
            lines.append("")
    return "\n".join(lines).rstrip() + "\n"


DEMO_LAWS: tuple[DemoLaw, ...] = (
    DemoLaw(
        law_id="demo-data",
        year=2021,
        domain_tag="data_protection",
        titles={"zh": "示例数据保护法", "ja": "示例データ保護法",
                "en": "Demo Data Protection Law"},
        units=(
            DemoUnit(
                kind="chapter", number=1,
                titles={"zh": "总则", "ja": "総則", "en": "General Provisions"},
                articles=(
                    DemoArticle(1, "为了规范《个人信息处理者》的处理活动，"
                                   "保障〈个人信息〉不被滥用，制定本法。"),
                    DemoArticle(2, "开展跨境业务的经营者进行《数据跨境流动》前，"
                                   "应当通过国家组织的《数据安全评估》。"),
                    DemoArticle(3, "处理《敏感个人信息》的《个人信息处理者》应当取得单独同意，"
                                   "并采取加密等保护措施。"),
                ),
            ),
            DemoUnit(
                kind="chapter", number=2,
                titles={"zh": "监督管理", "ja": "監督管理", "en": "Supervision"},
                articles=(
                    DemoArticle(4, "关系国计民生的重要行业运营者，应当每年组织一次〈数据安全评估〉，"
                                   "并向主管部门提交报告。",
                                ja_payload="关系国计民生的重要行业运营者，应当每年组织一次データ安全評価，"
                                           "并向主管部门提交报告。"),
                    DemoArticle(5, "国家对收集的数据实行《数据分类分级保护》，"
                                   "明确重要数据目录并动态调整。"),
                    DemoArticle(6, "违反本法规定拒不改正的，由有关主管部门责令暂停相关业务，"
                                   "可以并处〈行政处罚〉。"),
                ),
            ),
        ),
    ),
    DemoLaw(
        law_id="demo-union",
        year=2018,
        domain_tag="labor",
        titles={"zh": "示例工会保障法", "ja": "示例労働組合保障法",
                "en": "Demo Labor Union Protection Law"},
        units=(
            DemoUnit(
                kind="chapter", number=1,
                titles={"zh": "组织", "ja": "組織", "en": "Organization"},
                articles=(
                    DemoArticle(1, "职工依法组建的《工会》代表职工利益，任何组织不得阻挠或者限制。"),
                ),
            ),
            DemoUnit(
                kind="section", number=1,
                titles={"zh": "民主管理", "ja": "民主管理", "en": "Democratic Management"},
                articles=(
                    DemoArticle(2, "用人单位应当与职工一方订立《集体合同》，"
                                   "并提交〈职工代表大会〉审议通过。"),
                    DemoArticle(3, "发生《劳动争议》时，《工会》应当代表职工与用人单位平等协商处理。"),
                ),
            ),
            DemoUnit(
                kind="chapter", number=2,
                titles={"zh": "保障", "ja": "保障", "en": "Safeguards"},
                articles=(
                    DemoArticle(4, "参加《集体协商》的职工代表在履行职责期间，"
                                   "所在单位不得降低其工资待遇。"),
                    DemoArticle(5, "生产经营单位必须执行国家〈劳动保护〉规程，改善作业环境与劳动条件。"),
                    DemoArticle(6, "《工会经费》按照全体职工工资总额的比例拨缴，专款专用并接受审计监督。"),
                ),
            ),
        ),
    ),
    DemoLaw(
        law_id="demo-standards",
        year=2024,
        domain_tag="standards",
        titles={"zh": "示例标准化促进法", "ja": "示例標準化促進法",
                "en": "Demo Standardization Promotion Law"},
        units=(
            DemoUnit(
                kind="chapter", number=1,
                titles={"zh": "标准制定", "ja": "標準制定", "en": "Formulation"},
                articles=(
                    DemoArticle(1, "对需要在全国范围内统一的技术要求，应当制定《国家标准》；"
                                   "鼓励优先采用〈推荐性标准〉。"),
                    DemoArticle(2, "没有国家标准而又需要在行业内统一的，可以制定《行业标准》并报备案。"),
                    DemoArticle(3, "保障人身健康和生命财产安全的技术要求属于《强制性标准》，"
                                   "《国家标准》中的强制性条文必须执行。"),
                    DemoArticle(4, "标准制定部门应当根据实际需要定期开展《标准复审》，"
                                   "复审周期一般不超过五年。"),
                ),
            ),
            DemoUnit(
                kind="chapter", number=2,
                titles={"zh": "标准实施", "ja": "標準実施", "en": "Implementation"},
                articles=(
                    DemoArticle(5, "起草单位可以委托〈技术委员会〉对标准草案进行技术审查并出具意见。"),
                    DemoArticle(6, "推动《标准实施》的部门应当建立实施信息反馈和效果评估机制。"),
                    DemoArticle(7, "县级以上有关行政主管部门依照职责分工对标准的实施进行《监督检查》。",
                                extra_lines=("对发现的违规行为，应当依照规定及时处理并向社会公布结果。",)),
                ),
            ),
        ),
    ),
)


def build_demo_corpus() -> tuple[list[StatuteDocument], list[LawInfo]]:
    documents: list[StatuteDocument] = []
    laws: list[LawInfo] = []
    for law in DEMO_LAWS:
        laws.append(LawInfo(law_id=law.law_id, titles=dict(law.titles),
                            year=law.year, domain_tag=law.domain_tag))
        for language in ("zh", "ja", "en"):
            documents.append(StatuteDocument(
                id=law.law_id,
                title=law.titles[language],
                language=language,
                year=law.year,
                domain_tag=law.domain_tag,
                body=render_law(law, language),
            ))
    return documents, laws


def write_corpus(directory: str | Path,
                 laws: Sequence[DemoLaw] = DEMO_LAWS) -> list[Path]:
    """Write one text file per (law, language) plus a laws.json manifest."""
    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    manifest = {"laws": []}
    for law in laws:
        files = {}
        for language in ("zh", "ja", "en"):
            name = f"{law.law_id}.{language}.txt"
            path = out_dir / name
            path.write_text(render_law(law, language), encoding="utf-8")
            written.append(path)
            files[language] = name
        manifest["laws"].append({
            "id": law.law_id,
            "year": law.year,
            "domain_tag": law.domain_tag,
            "titles": dict(law.titles),
            "files": files,
        })
    manifest_path = out_dir / "laws.json"
    manifest_path.write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    written.append(manifest_path)
    return written
