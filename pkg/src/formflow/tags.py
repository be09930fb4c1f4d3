"""Recovery-oriented extraction of decision tags and chain-of-thought spans.

Model output is rarely clean: tags get duplicated, closers go stray, text is
truncated mid-tag. Every function here is total over arbitrary input (bytes
are decoded lossily) and reports problems as diagnostics instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .prompts import PromptTask


class Decision(Enum):
    CONFIRMED = "Confirmed"
    REJECTED = "Rejected"
    INDETERMINATE = "Indeterminate"


class DiagnosticCode(Enum):
    MISSING_DECISION_TAG = "MissingDecisionTag"
    DUPLICATE_DECISION_TAG = "DuplicateDecisionTag"
    STRAY_CLOSER = "StrayCloser"
    NESTED_TAG_IGNORED = "NestedTagIgnored"
    UNCLOSED_TAG = "UnclosedTag"


@dataclass(frozen=True)
class Diagnostic:
    code: DiagnosticCode
    message: str

    def to_dict(self) -> dict:
        return {"code": self.code.value, "message": self.message}


@dataclass(frozen=True)
class TagSpan:
    """One occurrence of a tag in raw text.

    ``start``/``end`` are offsets into the (decoded) raw string covering the
    whole occurrence, open tag included, so ``raw[start:end]`` reproduces the
    fragment the span was extracted from.
    """

    name: str
    value: str
    start: int
    end: int
    well_formed: bool


@dataclass
class TagScan:
    spans: list[TagSpan] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)


@dataclass
class ExtractionResult:
    decision_value: str | None
    chain_of_thought: str | None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "decision_value": self.decision_value,
            "chain_of_thought": self.chain_of_thought,
            "diagnostics": [d.to_dict() for d in self.diagnostics],
        }


def _decode(raw: str | bytes) -> str:
    if isinstance(raw, bytes):
        return raw.decode("utf-8", errors="replace")
    return raw


def scan_tags(raw: str | bytes, tag_name: str) -> TagScan:
    """Find all occurrences of ``<tag_name>...</tag_name>``, recovering from damage.

    A close pairs with the nearest preceding open, so well-formed values never
    contain markers of their own tag. Recovery rules:
    - an open followed by another open before any close is a dangling span:
      well_formed False, value up to the re-open (NestedTagIgnored);
    - an open with no marker after it at all runs to end of input
      (UnclosedTag) — truncated output is still worth logging;
    - a close with no span in progress is reported as StrayCloser.

    Tag names match case-sensitively. Attributes, entities and nesting are
    out of scope; markers are the literal ``<name>`` / ``</name>`` strings.
    """
    text = _decode(raw)
    open_marker = f"<{tag_name}>"
    close_marker = f"</{tag_name}>"
    scan = TagScan()
    pos = 0
    n = len(text)
    open_at: int | None = None
    value_start = 0

    while pos < n:
        next_open = text.find(open_marker, pos)
        next_close = text.find(close_marker, pos)
        if next_open == -1 and next_close == -1:
            break

        if next_close != -1 and (next_open == -1 or next_close < next_open):
            if open_at is None:
                scan.diagnostics.append(
                    Diagnostic(
                        DiagnosticCode.STRAY_CLOSER,
                        f"unmatched </{tag_name}> at offset {next_close}",
                    )
                )
            else:
                scan.spans.append(
                    TagSpan(
                        name=tag_name,
                        value=text[value_start:next_close],
                        start=open_at,
                        end=next_close + len(close_marker),
                        well_formed=True,
                    )
                )
                open_at = None
            pos = next_close + len(close_marker)
            continue

        if open_at is not None:
            scan.spans.append(
                TagSpan(
                    name=tag_name,
                    value=text[value_start:next_open],
                    start=open_at,
                    end=next_open,
                    well_formed=False,
                )
            )
            scan.diagnostics.append(
                Diagnostic(
                    DiagnosticCode.NESTED_TAG_IGNORED,
                    f"<{tag_name}> at offset {open_at} reopened before closing;"
                    " dangling span cut at the re-open",
                )
            )
        open_at = next_open
        value_start = next_open + len(open_marker)
        pos = value_start

    if open_at is not None:
        scan.spans.append(
            TagSpan(
                name=tag_name,
                value=text[value_start:n],
                start=open_at,
                end=n,
                well_formed=False,
            )
        )
        scan.diagnostics.append(
            Diagnostic(
                DiagnosticCode.UNCLOSED_TAG,
                f"<{tag_name}> at offset {open_at} has no closing tag",
            )
        )

    return scan


def extract_tag(raw: str | bytes, tag_name: str) -> list[TagSpan]:
    """All occurrences of a tag in textual order. Total: never raises."""
    return scan_tags(raw, tag_name).spans


def extract_decision(raw: str | bytes, task: "PromptTask") -> ExtractionResult:
    """Pull the task's decision value and chain-of-thought out of raw model text.

    First complete pair wins when the decision tag is duplicated; the loser is
    reported as DuplicateDecisionTag. A missing decision tag is reported as
    MissingDecisionTag, never raised.
    """
    decision_scan = scan_tags(raw, task.decision_tag)
    cot_scan = scan_tags(raw, task.cot_tag)
    diagnostics = list(decision_scan.diagnostics) + list(cot_scan.diagnostics)

    decision_spans = [s for s in decision_scan.spans if s.well_formed]
    decision_value = decision_spans[0].value if decision_spans else None
    if len(decision_spans) > 1:
        diagnostics.append(
            Diagnostic(
                DiagnosticCode.DUPLICATE_DECISION_TAG,
                f"{len(decision_spans)} <{task.decision_tag}> spans; first wins",
            )
        )
    if decision_value is None:
        diagnostics.append(
            Diagnostic(
                DiagnosticCode.MISSING_DECISION_TAG,
                f"no well-formed <{task.decision_tag}> span found",
            )
        )

    cot_spans = [s for s in cot_scan.spans if s.well_formed]
    chain_of_thought = cot_spans[0].value if cot_spans else None

    return ExtractionResult(
        decision_value=decision_value,
        chain_of_thought=chain_of_thought,
        diagnostics=diagnostics,
    )


def normalize_decision(value: str | None) -> Decision:
    """Case-folded, whitespace-trimmed "yes"/"no"; anything else is indeterminate."""
    if value is None:
        return Decision.INDETERMINATE
    folded = value.strip().casefold()
    if folded == "yes":
        return Decision.CONFIRMED
    if folded == "no":
        return Decision.REJECTED
    return Decision.INDETERMINATE
