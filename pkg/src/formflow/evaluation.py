"""Scenario replay and A/B misalignment measurement.

A scenario is a scripted conversation with per-turn intended-context labels.
Running it in tagged and baseline modes and counting the turns where the
active context disagrees with the intent measures how much the explicit
commit/reset decisions help. Clarifying turns are counted separately: a
well-placed question is the success path, not a misalignment.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .backends import RuleOracleBackend, ScriptEntry, ScriptedStubBackend, parse_script
from .catalog import FixtureAdapter, adapter_for, tokenize
from .orchestrator import Orchestrator
from .prompts import DEFAULT_REGISTRY, TaskRegistry
from .session import Domain, Mode, Session, new_session

SWITCH_LEXICON = ("the one", "I meant", "I am looking for")

#: Default pattern mix for generated scenarios, in percent.
DEFAULT_MIX = {"stay": 40, "explicit": 20, "implicit": 20, "ambiguous": 20}


class ScenarioInvalid(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioTurn:
    utterance: str
    intended_entity: str
    is_correction: bool = False

    def __post_init__(self) -> None:
        if not self.intended_entity:
            raise ScenarioInvalid("every turn needs a nonempty intended_entity")


@dataclass
class Scenario:
    scenario_id: str
    domain: Domain
    turns: list[ScenarioTurn]
    stub_script: list[ScriptEntry] | None = None
    seed: int = 0

    def to_dict(self) -> dict:
        doc = {
            "scenario_id": self.scenario_id,
            "domain": self.domain.value,
            "seed": self.seed,
            "turns": [
                {
                    "utterance": t.utterance,
                    "intended_entity": t.intended_entity,
                    "is_correction": t.is_correction,
                }
                for t in self.turns
            ],
        }
        if self.stub_script is not None:
            doc["stub_script"] = [
                {"expect_substring": e.expect_substring, "response_text": e.response_text}
                for e in self.stub_script
            ]
        return doc


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        turns = [
            ScenarioTurn(
                utterance=t["utterance"],
                intended_entity=t["intended_entity"],
                is_correction=bool(t.get("is_correction", False)),
            )
            for t in doc["turns"]
        ]
        script = parse_script(doc["stub_script"]) if doc.get("stub_script") else None
        return Scenario(
            scenario_id=str(doc["scenario_id"]),
            domain=Domain(doc["domain"]),
            turns=turns,
            stub_script=script,
            seed=int(doc.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioInvalid(f"bad scenario document: {exc}") from exc


def load_scenario_file(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


@dataclass
class ScenarioReport:
    scenario_id: str
    mode: Mode
    misaligned_turns: int = 0
    clarifying_turns: int = 0
    corrective_user_turns: int = 0
    total_turns: int = 0
    final_context: str | None = None

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "mode": self.mode.value,
            "misaligned_turns": self.misaligned_turns,
            "clarifying_turns": self.clarifying_turns,
            "corrective_user_turns": self.corrective_user_turns,
            "total_turns": self.total_turns,
            "final_context": self.final_context,
        }


def _counter_clock():
    state = {"now": 0}

    def clock() -> int:
        state["now"] += 1
        return state["now"]

    return clock


def build_orchestrator(
    scenario: Scenario,
    adapter: FixtureAdapter | None = None,
    registry: TaskRegistry = DEFAULT_REGISTRY,
) -> Orchestrator:
    adapter = adapter or adapter_for(scenario.domain)
    if scenario.stub_script is not None:
        backend = ScriptedStubBackend(scenario.stub_script)
    else:
        task = registry.get(adapter.confirmation_task_name)
        backend = RuleOracleBackend(task, adapter.display_names())
    return Orchestrator(adapter, backend, registry=registry)


def run_scenario(
    scenario: Scenario,
    mode: Mode,
    registry: TaskRegistry = DEFAULT_REGISTRY,
) -> tuple[ScenarioReport, Session]:
    """Replay one scenario in the given mode and count misalignments.

    A turn is misaligned when, after processing, the active context entity
    differs from the turn's intended entity and the turn was not answered
    with a clarifying question.
    """
    adapter = adapter_for(scenario.domain)
    known = set(adapter.display_names())
    for turn in scenario.turns:
        if turn.intended_entity not in known:
            raise ScenarioInvalid(
                f"intended entity {turn.intended_entity!r} not in the"
                f" {scenario.domain.value} catalog"
            )

    orchestrator = build_orchestrator(scenario, adapter=adapter, registry=registry)
    session = new_session(
        scenario.domain,
        mode=mode,
        session_id=f"{scenario.scenario_id}-{mode.value}",
        clock=_counter_clock(),
    )
    report = ScenarioReport(scenario_id=scenario.scenario_id, mode=mode)

    for turn in scenario.turns:
        result = orchestrator.handle_turn(session, turn.utterance)
        report.total_turns += 1
        if turn.is_correction:
            report.corrective_user_turns += 1
        if result.clarifying:
            report.clarifying_turns += 1
            continue
        active = session.context.entity
        if active is None or active.display_name != turn.intended_entity:
            report.misaligned_turns += 1

    active = session.context.entity
    report.final_context = active.display_name if active is not None else None
    return report, session


def delta_dental_scenario() -> Scenario:
    """The canonical ambiguous-switch conversation used for the A/B check."""
    return Scenario(
        scenario_id="delta-dental",
        domain=Domain.CUSTOMER_MGMT,
        turns=[
            ScenarioTurn("Is Delta a customer?", "Delta Airlines"),
            ScenarioTurn("Dental.", "Delta Dental"),
            ScenarioTurn(
                "I mean Delta Dental specifically.", "Delta Dental", is_correction=True
            ),
        ],
    )


# -- corpus generation --------------------------------------------------------

_STAY_TEMPLATES = (
    "What's their {kind}?",
    "Tell me about the {kind}.",
    "Any update on the {kind}?",
)
_EXPLICIT_TEMPLATES = (
    "Actually, show me {name} instead.",
    "Switch to {name}.",
    "Let's look at {name} now.",
)
_IMPLICIT_TEMPLATES = (
    "I meant the {token} one.",
    "I am looking for {token}.",
    "No, the one called {token}.",
)
_BOOTSTRAP_CUSTOMER = "Is {name} a customer?"
_BOOTSTRAP_HOTEL = "Find me {name}."

#: Token shared by exactly one designed pair per domain, used for ambiguous turns.
_AMBIGUOUS_PAIRS = {
    Domain.CUSTOMER_MGMT: ("Delta", ("Delta Airlines", "Delta Dental")),
    Domain.HOTEL_BOOKING: ("Seaview", ("Seaview Grand Hotel", "Seaview Boutique Inn")),
}


def _original_case_token(display_name: str, token: str) -> str:
    for word in display_name.split():
        if word.lower().strip(".,") == token:
            return word
    return token


def _safe_detail_kinds(catalog, entity_id: str) -> list[str]:
    """Detail kinds whose tokens collide with no other entity's name tokens."""
    kinds = []
    for kind in catalog.detail_kinds(entity_id):
        kind_tokens = set(tokenize(kind))
        collides = any(
            kind_tokens & set(other.tokens)
            for other in catalog.entities
            if other.ref.entity_id != entity_id
        )
        if not collides:
            kinds.append(kind)
    return kinds


def generate_corpus(
    n: int,
    seed: int,
    mix: dict[str, int] | None = None,
) -> list[Scenario]:
    """Deterministically build ``n`` scripted scenarios for a fixed seed.

    Each scenario opens with a bootstrap search and then mixes four turn
    patterns per the configured ratios: stay-on-context detail queries,
    explicit-name switches, implicit switch phrases, and ambiguous single-word
    switches. Implicit and ambiguous switches are followed by a scripted user
    correction, mirroring a user who notices the wrong context immediately.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    mix = dict(mix or DEFAULT_MIX)
    patterns = [name for name in ("stay", "explicit", "implicit", "ambiguous") if mix.get(name, 0) > 0]
    weights = [mix[name] for name in patterns]

    rng = random.Random(seed)
    catalogs = {
        domain: adapter_for(domain).catalog
        for domain in (Domain.CUSTOMER_MGMT, Domain.HOTEL_BOOKING)
    }
    scenarios = []
    for index in range(n):
        domain = Domain.CUSTOMER_MGMT if rng.random() < 0.6 else Domain.HOTEL_BOOKING
        catalog = catalogs[domain]
        names = catalog.display_names()
        ambiguous_token, ambiguous_pair = _AMBIGUOUS_PAIRS[domain]
        bootstrap_template = (
            _BOOTSTRAP_CUSTOMER if domain is Domain.CUSTOMER_MGMT else _BOOTSTRAP_HOTEL
        )

        current = rng.choice(names)
        turns = [ScenarioTurn(bootstrap_template.format(name=current), current)]

        for _ in range(rng.randint(2, 4)):
            pattern = rng.choices(patterns, weights=weights, k=1)[0]
            if pattern == "ambiguous" and current in ambiguous_pair:
                pattern = "implicit"

            if pattern == "stay":
                entity_id = catalog.by_name(current).entity_id
                kinds = _safe_detail_kinds(catalog, entity_id)
                if not kinds:
                    kinds = catalog.detail_kinds(entity_id)[:1]
                kind = rng.choice(kinds)
                turns.append(
                    ScenarioTurn(rng.choice(_STAY_TEMPLATES).format(kind=kind), current)
                )
            elif pattern == "explicit":
                target = rng.choice([m for m in names if m != current])
                turns.append(
                    ScenarioTurn(
                        rng.choice(_EXPLICIT_TEMPLATES).format(name=target), target
                    )
                )
                current = target
            elif pattern == "implicit":
                candidates = [
                    m for m in names
                    if m != current and catalog.unique_tokens(catalog.by_name(m).entity_id)
                ]
                target = rng.choice(candidates)
                token = catalog.unique_tokens(catalog.by_name(target).entity_id)[0]
                word = _original_case_token(target, token)
                turns.append(
                    ScenarioTurn(
                        rng.choice(_IMPLICIT_TEMPLATES).format(token=word), target
                    )
                )
                turns.append(
                    ScenarioTurn(f"No, I meant {target}.", target, is_correction=True)
                )
                current = target
            else:
                target = rng.choice(ambiguous_pair)
                turns.append(ScenarioTurn(f"{ambiguous_token}.", target))
                turns.append(
                    ScenarioTurn(
                        f"I mean {target} specifically.", target, is_correction=True
                    )
                )
                current = target

        scenarios.append(
            Scenario(
                scenario_id=f"gen-{seed}-{index:03d}",
                domain=domain,
                turns=turns,
                seed=seed,
            )
        )
    return scenarios


# -- A/B comparison -----------------------------------------------------------


@dataclass
class ModeTotals:
    misaligned_turns: int = 0
    clarifying_turns: int = 0
    corrective_user_turns: int = 0
    total_turns: int = 0

    def add(self, report: ScenarioReport) -> None:
        self.misaligned_turns += report.misaligned_turns
        self.clarifying_turns += report.clarifying_turns
        self.corrective_user_turns += report.corrective_user_turns
        self.total_turns += report.total_turns

    def to_dict(self) -> dict:
        return {
            "misaligned_turns": self.misaligned_turns,
            "clarifying_turns": self.clarifying_turns,
            "corrective_user_turns": self.corrective_user_turns,
            "total_turns": self.total_turns,
        }


@dataclass
class MisalignmentReport:
    scenarios: list[dict] = field(default_factory=list)
    tagged: ModeTotals = field(default_factory=ModeTotals)
    baseline: ModeTotals = field(default_factory=ModeTotals)
    incomplete: bool = False
    error: str | None = None

    @property
    def reduction_ratio(self) -> float | None:
        """Relative drop in misaligned turns; undefined when baseline has none."""
        if self.baseline.misaligned_turns == 0:
            return None
        return (
            self.baseline.misaligned_turns - self.tagged.misaligned_turns
        ) / self.baseline.misaligned_turns

    @property
    def degenerate(self) -> bool:
        return self.baseline.misaligned_turns == 0

    def to_dict(self) -> dict:
        return {
            "scenarios": self.scenarios,
            "aggregate": {
                "tagged": self.tagged.to_dict(),
                "baseline": self.baseline.to_dict(),
            },
            "reduction_ratio": self.reduction_ratio,
            "degenerate": self.degenerate,
            "incomplete": self.incomplete,
            "error": self.error,
        }


def compare_modes(
    corpus: list[Scenario],
    out_path: str | None = None,
    registry: TaskRegistry = DEFAULT_REGISTRY,
) -> MisalignmentReport:
    """Run every scenario in both modes and aggregate misalignment counts.

    Scenario failures abort the sweep; whatever completed is returned with the
    report flagged incomplete.
    """
    if not corpus:
        raise ValueError("corpus must be nonempty")
    report = MisalignmentReport()
    try:
        for scenario in corpus:
            tagged, _ = run_scenario(scenario, Mode.TAGGED, registry=registry)
            baseline, _ = run_scenario(scenario, Mode.BASELINE, registry=registry)
            report.tagged.add(tagged)
            report.baseline.add(baseline)
            report.scenarios.append(
                {
                    "scenario_id": scenario.scenario_id,
                    "domain": scenario.domain.value,
                    "tagged": tagged.to_dict(),
                    "baseline": baseline.to_dict(),
                }
            )
    except Exception as exc:  # noqa: BLE001 - partial report is flagged, not hidden
        report.incomplete = True
        report.error = f"{type(exc).__name__}: {exc}"

    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
    return report
