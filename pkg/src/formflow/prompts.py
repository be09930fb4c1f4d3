"""Task-prompt registry and renderer.

Each registered task owns a prompt template with named ``{placeholder}``
markers, a guideline block, and few-shot examples. Rendering is pure and
deterministic; user-supplied values are sanitized so they can never inject
structural tags into the prompt.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .tags import Decision, normalize_decision

#: Replacement map for user-supplied text: ASCII angle brackets become
#: fullwidth lookalikes, readable to a model but inert to the tag parser.
_SANITIZE_MAP = {"<": "﹤", ">": "﹥"}

#: Only this many of the most recent history entries are serialized.
HISTORY_LIMIT = 20

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


class DuplicateTaskName(ValueError):
    pass


class UnknownTask(KeyError):
    pass


class UnknownPlaceholder(ValueError):
    pass


@dataclass(frozen=True)
class FewShotExample:
    query: str
    entity_name: str
    history: list[str]
    expected_decision: str
    expected_cot: str

    def __post_init__(self) -> None:
        if normalize_decision(self.expected_decision) is Decision.INDETERMINATE:
            raise ValueError(
                f"few-shot expected_decision must normalize to yes/no, got {self.expected_decision!r}"
            )


@dataclass(frozen=True)
class PromptTask:
    """A registered prompt task: template, tag names, guidelines, examples.

    ``query_tag``/``entity_tag``/``history_tag`` name the structural elements
    the rendered prompt must contain exactly once; backends that parse the
    prompt (the rule oracle) rely on them.
    """

    task_name: str
    decision_tag: str
    cot_tag: str
    template: str
    guidelines: list[str] = field(default_factory=list)
    examples: list[FewShotExample] = field(default_factory=list)
    query_tag: str = "query"
    entity_tag: str = "currentCustomerName"
    history_tag: str = "userQueryHistory"

    def __post_init__(self) -> None:
        if not self.decision_tag or not self.cot_tag:
            raise ValueError("decision_tag and cot_tag must be nonempty")
        if self.decision_tag == self.cot_tag:
            raise ValueError("decision_tag and cot_tag must differ")
        for marker in ("{user_question}", "{current_entity_name}", "{history_json}"):
            if marker not in self.template:
                raise ValueError(f"template is missing placeholder {marker}")


def sanitize_value(value: str) -> str:
    """Defang angle brackets in a user-supplied value before substitution."""
    for ch, repl in _SANITIZE_MAP.items():
        value = value.replace(ch, repl)
    return value


def serialize_history(history: list[str]) -> str:
    """JSON array of strings, compact separators, most recent HISTORY_LIMIT kept."""
    kept = list(history)[-HISTORY_LIMIT:]
    return json.dumps(kept, separators=(",", ":"), ensure_ascii=False)


def render_prompt(
    task: PromptTask,
    user_question: str,
    entity_name: str,
    history: list[str],
) -> str:
    """Substitute all placeholders; byte-identical output for identical inputs."""
    values = {
        "user_question": sanitize_value(user_question),
        "current_entity_name": sanitize_value(entity_name),
        "history_json": serialize_history([sanitize_value(h) for h in history]),
    }

    def _sub(match: re.Match) -> str:
        name = match.group(1)
        if name not in values:
            raise UnknownPlaceholder(f"template references undeclared placeholder {{{name}}}")
        return values[name]

    return _PLACEHOLDER_RE.sub(_sub, task.template)


class TaskRegistry:
    """Read-mostly name -> PromptTask store; registration happens at startup."""

    def __init__(self) -> None:
        self._tasks: dict[str, PromptTask] = {}

    def register(self, task: PromptTask) -> PromptTask:
        if task.task_name in self._tasks:
            raise DuplicateTaskName(f"task {task.task_name!r} already registered")
        self._tasks[task.task_name] = task
        return task

    def get(self, name: str) -> PromptTask:
        try:
            return self._tasks[name]
        except KeyError:
            raise UnknownTask(f"no task named {name!r}") from None

    def names(self) -> list[str]:
        return sorted(self._tasks)

    def load_file(self, path: str) -> list[PromptTask]:
        """Register tasks from a JSON file: a list of PromptTask field dicts."""
        with open(path, encoding="utf-8") as fh:
            entries = json.load(fh)
        loaded = []
        for entry in entries:
            examples = [FewShotExample(**ex) for ex in entry.pop("examples", [])]
            loaded.append(self.register(PromptTask(examples=examples, **entry)))
        return loaded


CUSTOMER_CONFIRMATION_TEMPLATE = """You are a customer search bot, and your task is to determine if the user query refers to searching for a customer or details about the current customer based on <userQueryHistory> and <currentCustomerName>. Follow the guidelines:
1. Respond with <isCustomerConfirmed>no</isCustomerConfirmed> if:
  - The user query mentions or implies the name of a different customer.
  - The user query involves clarifying or correcting the current customer.
  - The user query refers to a geographic or industry-specific refinement without explanation.
  - The user query uses phrases like "the one", "I meant", or "I am looking for" that indicate a switch.
2. Respond with <isCustomerConfirmed>yes</isCustomerConfirmed> if:
  - The user query asks about details of the current customer (service consumption, pricing, etc.).
  - The user query does not involve clarifying or correcting the current customer name.
  - The user query involves comparing details between the current customer and another but keeps the current customer context.
3. Include a brief explanation of your reasoning in <chainOfThought>...</chainOfThought> tags.
<examples>
<example>
  query: "the one in china"
  current customer name: ABCCompany
  user query history list: ["Is ABCCompany a customer"]
  <isCustomerConfirmed>no</isCustomerConfirmed>
  <chainOfThought>User mentions 'the one in China', so likely switching context.</chainOfThought>
</example>
<example>
  query: "recent news"
  current customer name: ABCCompany
  user query history list: ["Is ABCCompany a customer"]
  <isCustomerConfirmed>yes</isCustomerConfirmed>
  <chainOfThought>User is asking for details on ABCCompany with no mention of a new entity.</chainOfThought>
</example>
</examples>
Here is the user query:<query>{user_question}</query>
Here is the current customer name:<currentCustomerName>{current_entity_name}</currentCustomerName>
Here is the user query history:
<userQueryHistory>
  {history_json}
</userQueryHistory>"""

HOTEL_CONFIRMATION_TEMPLATE = """You are a hotel booking bot, and your task is to determine if the user query refers to searching for a hotel or details about the currently selected hotel based on <userQueryHistory> and <currentHotelName>. Follow the guidelines:
1. Respond with <isHotelSelectionConfirmed>no</isHotelSelectionConfirmed> if:
  - The user query mentions or implies the name of a different hotel.
  - The user query involves clarifying or correcting the current hotel selection.
  - The user query refers to a location or amenity refinement without explanation.
  - The user query uses phrases like "the one", "I meant", or "I am looking for" that indicate a switch.
2. Respond with <isHotelSelectionConfirmed>yes</isHotelSelectionConfirmed> if:
  - The user query asks about details of the current hotel (rates, amenities, availability, etc.).
  - The user query does not involve clarifying or correcting the current hotel name.
  - The user query involves comparing the current hotel with another but keeps the current hotel context.
3. Include a brief explanation of your reasoning in <chainOfThought>...</chainOfThought> tags.
<examples>
<example>
  query: "the one near the beach"
  current hotel name: Seaview Grand Hotel
  user query history list: ["Find me the Seaview Grand Hotel"]
  <isHotelSelectionConfirmed>no</isHotelSelectionConfirmed>
  <chainOfThought>User mentions 'the one near the beach', so likely switching selection.</chainOfThought>
</example>
<example>
  query: "weekend rates"
  current hotel name: Seaview Grand Hotel
  user query history list: ["Find me the Seaview Grand Hotel"]
  <isHotelSelectionConfirmed>yes</isHotelSelectionConfirmed>
  <chainOfThought>User is asking for details on Seaview Grand Hotel with no mention of a new hotel.</chainOfThought>
</example>
</examples>
Here is the user query:<query>{user_question}</query>
Here is the current hotel name:<currentHotelName>{current_entity_name}</currentHotelName>
Here is the user query history:
<userQueryHistory>
  {history_json}
</userQueryHistory>"""

BOOKING_RESET_TEMPLATE = """You are a hotel booking bot, and your task is to determine if the user wants to abandon the booking that is currently in progress based on <userQueryHistory> and <currentHotelName>. Follow the guidelines:
1. Respond with <isBookingReset>yes</isBookingReset> if:
  - The user query asks to cancel, restart, or start over the current booking.
  - The user query abandons the selected hotel and all entered details.
2. Respond with <isBookingReset>no</isBookingReset> if:
  - The user query continues or refines the booking in progress.
  - The user query asks about details of the current hotel.
3. Include a brief explanation of your reasoning in <chainOfThought>...</chainOfThought> tags.
<examples>
<example>
  query: "forget it, start over"
  current hotel name: Seaview Grand Hotel
  user query history list: ["Find me the Seaview Grand Hotel"]
  <isBookingReset>yes</isBookingReset>
  <chainOfThought>User asks to start over, abandoning the booking in progress.</chainOfThought>
</example>
<example>
  query: "add a second night"
  current hotel name: Seaview Grand Hotel
  user query history list: ["Find me the Seaview Grand Hotel"]
  <isBookingReset>no</isBookingReset>
  <chainOfThought>User is refining the booking in progress, not abandoning it.</chainOfThought>
</example>
</examples>
Here is the user query:<query>{user_question}</query>
Here is the current hotel name:<currentHotelName>{current_entity_name}</currentHotelName>
Here is the user query history:
<userQueryHistory>
  {history_json}
</userQueryHistory>"""


def _customer_guidelines() -> list[str]:
    return [
        "The user query mentions or implies the name of a different customer.",
        "The user query involves clarifying or correcting the current customer.",
        "The user query refers to a geographic or industry-specific refinement without explanation.",
        'The user query uses phrases like "the one", "I meant", or "I am looking for" that indicate a switch.',
        "The user query asks about details of the current customer (service consumption, pricing, etc.).",
        "The user query does not involve clarifying or correcting the current customer name.",
        "The user query involves comparing details between the current customer and another but keeps the current customer context.",
        "Include a brief explanation of your reasoning in <chainOfThought>...</chainOfThought> tags.",
    ]


def builtin_registry() -> TaskRegistry:
    """Fresh registry holding the three shipped tasks."""
    registry = TaskRegistry()
    registry.register(
        PromptTask(
            task_name="IsCustomerConfirmed",
            decision_tag="isCustomerConfirmed",
            cot_tag="chainOfThought",
            template=CUSTOMER_CONFIRMATION_TEMPLATE,
            guidelines=_customer_guidelines(),
            examples=[
                FewShotExample(
                    query="the one in china",
                    entity_name="ABCCompany",
                    history=["Is ABCCompany a customer"],
                    expected_decision="no",
                    expected_cot="User mentions 'the one in China', so likely switching context.",
                ),
                FewShotExample(
                    query="recent news",
                    entity_name="ABCCompany",
                    history=["Is ABCCompany a customer"],
                    expected_decision="yes",
                    expected_cot="User is asking for details on ABCCompany with no mention of a new entity.",
                ),
            ],
            entity_tag="currentCustomerName",
        )
    )
    registry.register(
        PromptTask(
            task_name="IsHotelSelectionConfirmed",
            decision_tag="isHotelSelectionConfirmed",
            cot_tag="chainOfThought",
            template=HOTEL_CONFIRMATION_TEMPLATE,
            guidelines=[
                "The user query mentions or implies the name of a different hotel.",
                "The user query uses phrases that indicate a switch.",
                "The user query asks about details of the current hotel.",
            ],
            examples=[
                FewShotExample(
                    query="the one near the beach",
                    entity_name="Seaview Grand Hotel",
                    history=["Find me the Seaview Grand Hotel"],
                    expected_decision="no",
                    expected_cot="User mentions 'the one near the beach', so likely switching selection.",
                ),
                FewShotExample(
                    query="weekend rates",
                    entity_name="Seaview Grand Hotel",
                    history=["Find me the Seaview Grand Hotel"],
                    expected_decision="yes",
                    expected_cot="User is asking for details on Seaview Grand Hotel with no mention of a new hotel.",
                ),
            ],
            entity_tag="currentHotelName",
        )
    )
    registry.register(
        PromptTask(
            task_name="IsBookingReset",
            decision_tag="isBookingReset",
            cot_tag="chainOfThought",
            template=BOOKING_RESET_TEMPLATE,
            guidelines=[
                "The user query asks to cancel, restart, or start over the current booking.",
                "The user query continues or refines the booking in progress.",
            ],
            examples=[
                FewShotExample(
                    query="forget it, start over",
                    entity_name="Seaview Grand Hotel",
                    history=["Find me the Seaview Grand Hotel"],
                    expected_decision="yes",
                    expected_cot="User asks to start over, abandoning the booking in progress.",
                ),
                FewShotExample(
                    query="add a second night",
                    entity_name="Seaview Grand Hotel",
                    history=["Find me the Seaview Grand Hotel"],
                    expected_decision="no",
                    expected_cot="User is refining the booking in progress, not abandoning it.",
                ),
            ],
            entity_tag="currentHotelName",
        )
    )
    return registry


DEFAULT_REGISTRY = builtin_registry()
