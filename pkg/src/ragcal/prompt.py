"""Bit-exact prompt rendering.

The prompt is a single flat text (no chat roles): system prompt first, then
an optional document block at one of three slots, the question, the
letter-labelled choices, and the trailing answer cue. Choices are relabelled
to single letters so forced decoding can read one token per option. There is
deliberately no chain-of-thought elicitation: the text ends at the answer cue
so the next-token distribution over labels is directly interpretable.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, replace
from pathlib import Path

from .contextgen import ContextDoc, Mixture, Position, ScenarioSpec, answer_doc_present
from .dataset import MAX_OPTIONS, QaItem

DEFAULT_SYSTEM_PROMPT = (
    "You are a helpful medical expert, and your task is to answer a multi-choice "
    "medical question using the relevant documents. Please first think step-by-step "
    "and then choose the answer from the provided options. Your responses will be "
    "used for research purposes only, so please have a definite answer."
)


@dataclass(frozen=True)
class PromptTemplate:
    """The fixed strings of the prompt layout; overridable from a config file."""

    system_prompt: str = DEFAULT_SYSTEM_PROMPT
    document_header: str = "Here are the relevant documents:"
    question_header: str = "Here is the question:"
    choices_header: str = "Here are the potential choices:"
    answer_cue: str = "Answer:"

    @classmethod
    def from_file(cls, path: str | Path) -> "PromptTemplate":
        """Load overrides from a JSON or TOML file (top level or [template])."""
        path = Path(path)
        if path.suffix == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        else:
            data = json.loads(path.read_text(encoding="utf-8"))
        data = data.get("template", data)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown template fields in {path}: {sorted(unknown)}")
        return replace(cls(), **data)


DEFAULT_TEMPLATE = PromptTemplate()


@dataclass(frozen=True)
class PromptInstance:
    """A rendered prompt plus the label bookkeeping needed to score it."""

    item_id: str
    scenario: ScenarioSpec
    text: str
    labels: tuple[str, ...]
    label_to_option: dict[str, int]

    def __post_init__(self) -> None:
        j = len(self.labels)
        if self.labels != tuple(string.ascii_uppercase[:j]):
            raise ValueError(f"labels must be the first {j} uppercase letters")
        if sorted(self.label_to_option) != sorted(self.labels) or sorted(
            self.label_to_option.values()
        ) != list(range(j)):
            raise ValueError("label_to_option must biject labels onto option indices")


def relabel_options(options: list[str] | tuple[str, ...]) -> tuple[tuple[str, ...], dict[str, int]]:
    """Assign single-letter labels A.. to the options in order.

    Labels keep options apart even when their texts collide, and keep each
    option to one vocabulary token for forced decoding.
    """
    j = len(options)
    if not 2 <= j <= MAX_OPTIONS:
        raise ValueError(f"need 2..{MAX_OPTIONS} options to label with letters, got {j}")
    labels = tuple(string.ascii_uppercase[:j])
    return labels, {label: index for index, label in enumerate(labels)}


def _infer_scenario(docs: list[ContextDoc], position: Position) -> ScenarioSpec:
    if not docs:
        return ScenarioSpec.baseline(0)
    if len(docs) == 1 and docs[0].answer_bearing:
        mixture = Mixture.ANS1
    elif answer_doc_present(docs):
        mixture = Mixture.ANS1_OTH2
    else:
        mixture = Mixture.OTH3
    return ScenarioSpec(mixture, position, 0)


def render_prompt(
    item: QaItem,
    docs: list[ContextDoc],
    position: Position,
    system_prompt: str | None = None,
    template: PromptTemplate = DEFAULT_TEMPLATE,
    scenario: ScenarioSpec | None = None,
) -> PromptInstance:
    """Render the full prompt text for one item and document set.

    With documents, the block (header + passages, blank-line separated) sits
    before the question (pre-q), between question and choices (aft-q), or
    after the choices (aft-c). Without documents the block is absent and
    ``position`` is ignored: there is exactly one baseline rendering.
    """
    if docs and position not in (Position.PRE_Q, Position.AFT_Q, Position.AFT_C):
        raise ValueError(f"documents need an insertion position, got {position}")
    if system_prompt is not None:
        template = replace(template, system_prompt=system_prompt)
    labels, label_to_option = relabel_options(item.options)

    sections = [template.system_prompt]
    doc_block = None
    if docs:
        doc_block = template.document_header + "\n" + "\n\n".join(doc.text for doc in docs)
    question_block = template.question_header + "\n" + item.question
    choice_lines = [f"{label}. {option}" for label, option in zip(labels, item.options)]
    choices_block = template.choices_header + "\n" + "\n".join(choice_lines)

    if doc_block is not None and position is Position.PRE_Q:
        sections.append(doc_block)
    sections.append(question_block)
    if doc_block is not None and position is Position.AFT_Q:
        sections.append(doc_block)
    sections.append(choices_block)
    if doc_block is not None and position is Position.AFT_C:
        sections.append(doc_block)
    sections.append(template.answer_cue)

    text = "\n\n".join(sections)
    assert text.endswith(template.answer_cue)

    if scenario is None:
        scenario = _infer_scenario(docs, position if docs else Position.NONE)
    return PromptInstance(
        item_id=item.id,
        scenario=scenario,
        text=text,
        labels=labels,
        label_to_option=label_to_option,
    )
