"""formflow: explicit commit/reset decisions for multi-turn chatbot sessions."""

from .session import (
    Domain,
    EntityRef,
    Lifecycle,
    Mode,
    Session,
    TransitionKind,
    TransitionOutcome,
    new_session,
    query_history,
    restore,
    snapshot,
)
from .tags import Decision, ExtractionResult, TagSpan, extract_decision, extract_tag, normalize_decision

__version__ = "0.1.0"

__all__ = [
    "Decision",
    "Domain",
    "EntityRef",
    "ExtractionResult",
    "Lifecycle",
    "Mode",
    "Session",
    "TagSpan",
    "TransitionKind",
    "TransitionOutcome",
    "extract_decision",
    "extract_tag",
    "new_session",
    "normalize_decision",
    "query_history",
    "restore",
    "snapshot",
    "__version__",
]
