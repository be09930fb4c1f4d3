"""Fixture entity catalogs and the token-overlap search behind candidate resolution.

Catalogs are small JSON files shipped with the package; search is a normalized
token-overlap score, deterministic over the catalog order so replays are
byte-stable.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

from .session import Domain, EntityRef

_TOKEN_RE = re.compile(r"[a-z0-9]+")

#: Function words and domain nouns that carry no entity signal.
STOPWORDS = frozenset(
    """
    a an the is are was were be being been am i me my we our you your it its
    their they them he she his her of for to in on at by with about and or
    not no yes do does did done what whats which who whom how when where why
    can could would should will shall may might please thanks thank tell show
    give get find one ones actually instead now just info information details
    detail more mean meant looking look called specifically new current s t
    customer customers hotel hotels company
    """.split()
)


class AdapterFailure(RuntimeError):
    pass


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens with stopwords removed."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if t not in STOPWORDS]


def overlap_score(query_tokens: set[str], entity_tokens: set[str]) -> float:
    """Share of the smaller token set covered by the overlap, in [0, 1].

    A one-word query naming half of a two-word entity still scores 1.0: the
    min-normalization rewards full coverage of whichever side is shorter.
    """
    if not query_tokens or not entity_tokens:
        return 0.0
    inter = len(query_tokens & entity_tokens)
    return inter / min(len(query_tokens), len(entity_tokens))


@dataclass(frozen=True)
class CatalogEntity:
    ref: EntityRef
    details: dict
    tokens: frozenset


@dataclass(frozen=True)
class SearchHit:
    entity: EntityRef
    score: float


class EntityCatalog:
    def __init__(self, domain: Domain, entries: list[dict]):
        self.domain = domain
        self.entities: list[CatalogEntity] = []
        seen: set[str] = set()
        for entry in entries:
            entity_id = entry["entity_id"]
            if entity_id in seen:
                raise ValueError(f"duplicate entity_id {entity_id!r} in catalog")
            seen.add(entity_id)
            ref = EntityRef(
                entity_id=entity_id,
                display_name=entry["display_name"],
                domain=domain,
            )
            self.entities.append(
                CatalogEntity(
                    ref=ref,
                    details=dict(entry["details"]),
                    tokens=frozenset(tokenize(entry["display_name"])),
                )
            )
        self._by_id = {e.ref.entity_id: e for e in self.entities}

    def __len__(self) -> int:
        return len(self.entities)

    def get(self, entity_id: str) -> CatalogEntity:
        try:
            return self._by_id[entity_id]
        except KeyError:
            raise AdapterFailure(f"unknown entity_id {entity_id!r}") from None

    def by_name(self, display_name: str) -> EntityRef | None:
        for entity in self.entities:
            if entity.ref.display_name == display_name:
                return entity.ref
        return None

    def display_names(self) -> list[str]:
        return [e.ref.display_name for e in self.entities]

    def search(self, text: str) -> list[SearchHit]:
        """All entities with a nonzero score, best first; catalog order breaks ties."""
        query_tokens = set(tokenize(text))
        hits = []
        for index, entity in enumerate(self.entities):
            score = overlap_score(query_tokens, set(entity.tokens))
            if score > 0.0:
                hits.append((score, index, entity.ref))
        hits.sort(key=lambda item: (-item[0], item[1]))
        return [SearchHit(entity=ref, score=score) for score, _, ref in hits]

    def exact_name_match(self, text: str) -> EntityRef | None:
        """First entity whose full display name appears verbatim (case-insensitive)."""
        lowered = text.lower()
        for entity in self.entities:
            if entity.ref.display_name.lower() in lowered:
                return entity.ref
        return None

    def detail_kinds(self, entity_id: str) -> list[str]:
        return list(self.get(entity_id).details)

    def fetch_detail(self, entity_id: str, kind: str) -> str:
        entity = self.get(entity_id)
        try:
            return entity.details[kind]
        except KeyError:
            raise AdapterFailure(
                f"entity {entity_id!r} has no detail kind {kind!r}"
            ) from None

    def best_detail_kind(self, entity_id: str, text: str) -> str:
        """Detail kind with the highest token overlap against the text, else the first."""
        entity = self.get(entity_id)
        query_tokens = set(tokenize(text))
        best_kind = next(iter(entity.details))
        best = 0
        for kind in entity.details:
            hit = len(query_tokens & set(tokenize(kind)))
            if hit > best:
                best, best_kind = hit, kind
        return best_kind

    def detail_kind_matches(self, entity_id: str, text: str) -> bool:
        """True when a token of the text names one of the entity's detail kinds."""
        query_tokens = set(tokenize(text))
        return any(
            query_tokens & set(tokenize(kind))
            for kind in self.get(entity_id).details
        )

    def unique_tokens(self, entity_id: str) -> list[str]:
        """Name tokens no other catalog entity shares, in name order."""
        own = self.get(entity_id)
        others: set[str] = set()
        for entity in self.entities:
            if entity.ref.entity_id != entity_id:
                others |= set(entity.tokens)
        return [t for t in tokenize(own.ref.display_name) if t not in others]


_FIXTURE_FILES = {
    Domain.CUSTOMER_MGMT: "customers.json",
    Domain.HOTEL_BOOKING: "hotels.json",
}


def load_catalog(domain: Domain) -> EntityCatalog:
    """Catalog shipped with the package for the given domain."""
    name = _FIXTURE_FILES[domain]
    data = resources.files("formflow.fixtures").joinpath(name).read_text(encoding="utf-8")
    return EntityCatalog(domain, json.loads(data))


def load_catalog_file(domain: Domain, path: str) -> EntityCatalog:
    with open(path, encoding="utf-8") as fh:
        return EntityCatalog(domain, json.load(fh))


class FixtureAdapter:
    """Domain adapter backed by a fixture catalog."""

    def __init__(self, catalog: EntityCatalog):
        self.catalog = catalog
        self.domain = catalog.domain
        if catalog.domain is Domain.CUSTOMER_MGMT:
            self.confirmation_task_name = "IsCustomerConfirmed"
            self.reset_task_name = None
        else:
            self.confirmation_task_name = "IsHotelSelectionConfirmed"
            self.reset_task_name = "IsBookingReset"

    def search_entities(self, text: str) -> list[SearchHit]:
        return self.catalog.search(text)

    def fetch_detail(self, entity: EntityRef, detail_kind: str) -> str:
        return self.catalog.fetch_detail(entity.entity_id, detail_kind)

    def detail_kinds(self, entity: EntityRef) -> list[str]:
        return self.catalog.detail_kinds(entity.entity_id)

    def best_detail_kind(self, entity: EntityRef, text: str) -> str:
        return self.catalog.best_detail_kind(entity.entity_id, text)

    def detail_kind_matches(self, entity: EntityRef, text: str) -> bool:
        return self.catalog.detail_kind_matches(entity.entity_id, text)

    def exact_name_match(self, text: str) -> EntityRef | None:
        return self.catalog.exact_name_match(text)

    def display_names(self) -> list[str]:
        return self.catalog.display_names()


def adapter_for(domain: Domain) -> FixtureAdapter:
    return FixtureAdapter(load_catalog(domain))
