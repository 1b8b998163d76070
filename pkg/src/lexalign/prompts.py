"""Prompt template loading.

Templates live as text files next to this module. A template is a sequence of
``[section]`` headers with free text below; placeholders use ``$name`` (see
string.Template) so literal JSON braces survive substitution.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from string import Template

_SECTION_RE = re.compile(r"^\[([a-z_]+)\]\s*$", re.MULTILINE)


def _read(name: str) -> str:
    return (resources.files("lexalign") / "prompts" / name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def load_sections(name: str) -> dict[str, str]:
    """Parse a template file into {section: body} preserving body order."""
    text = _read(name)
    matches = list(_SECTION_RE.finditer(text))
    if not matches:
        raise ValueError(f"template {name!r} has no [section] headers")
    sections: dict[str, str] = {}
    for i, match in enumerate(matches):
        start = match.end()
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        sections[match.group(1)] = text[start:end].strip("\n").rstrip()
    return sections


def fill(template_body: str, **values: str) -> str:
    return Template(template_body).substitute(**values)


@dataclass(frozen=True)
class FewShotExample:
    input: str
    output: dict

    def render(self, index: int) -> str:
        body = json.dumps({"input": self.input, "output": self.output}, ensure_ascii=False)
        return f"Example {index}: {body}"


@lru_cache(maxsize=None)
def load_example_bank() -> dict[str, dict[str, tuple[FewShotExample, ...]]]:
    """domain_tag -> direction -> examples; 'generic' is the fallback domain."""
    raw = json.loads(_read("fewshot.json"))
    bank: dict[str, dict[str, tuple[FewShotExample, ...]]] = {}
    for domain, by_direction in raw.items():
        bank[domain] = {
            direction: tuple(FewShotExample(input=e["input"], output=e["output"])
                             for e in examples)
            for direction, examples in by_direction.items()
        }
    return bank


def select_examples(domain_tag: str, direction: str) -> tuple[FewShotExample, ...]:
    bank = load_example_bank()
    domain = bank.get(domain_tag, bank["generic"])
    return domain.get(direction, bank["generic"].get(direction, ()))
