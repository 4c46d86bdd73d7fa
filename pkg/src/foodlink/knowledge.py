"""External-knowledge lookup and text augmentation.

Two sources feed the augmentation step: a food ontology queried by keyword
match against class labels/synonyms, and an entity-linking service wrapped
as an HTTP client. Either way the result is a list of entities whose labels
get appended to the text, separated by single spaces.
"""

from __future__ import annotations

import json
import threading
import urllib.error
import urllib.request
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .textutil import is_digits_token, is_unit_token, stopwords, tokenize

ENTITY_SOURCES = ("ontology", "linker", "llm")


@dataclass(frozen=True)
class Entity:
    uri_or_id: str
    label: str
    source: str
    confidence: float | None = None

    def __post_init__(self):
        if not self.label:
            raise ValueError("entity label must be non-empty")
        if self.source not in ENTITY_SOURCES:
            raise ValueError(f"unknown entity source {self.source!r}")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0,1]")


@dataclass(frozen=True)
class AugmentedText:
    base: str
    entities: tuple[Entity, ...]
    rendered: str


def extract_keywords(text: str) -> list[str]:
    """Lowercased tokens minus stopwords, digit-only tokens, and unit tokens.

    Order is preserved and duplicates are dropped keeping the first occurrence.
    """
    stop = stopwords()
    seen: set[str] = set()
    out: list[str] = []
    for tok in tokenize(text):
        if tok in stop or tok in seen:
            continue
        if is_digits_token(tok) or is_unit_token(tok):
            continue
        seen.add(tok)
        out.append(tok)
    return out


# ---------------------------------------------------------------------------
# ontology
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OntologyClass:
    uri: str
    label: str
    synonyms: tuple[str, ...] = ()


class Ontology:
    """Immutable-after-load set of labeled classes, queryable by keyword."""

    def __init__(self, classes: list[OntologyClass]):
        self._classes = sorted(classes, key=lambda c: (c.label.lower(), c.uri))

    def __len__(self) -> int:
        return len(self._classes)

    @property
    def classes(self) -> list[OntologyClass]:
        return list(self._classes)

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "Ontology":
        """Load the simplified fixture format: one {uri, label, synonyms[]} per line."""
        classes = []
        for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            classes.append(
                OntologyClass(rec["uri"], rec["label"], tuple(rec.get("synonyms", ())))
            )
        return cls(classes)

    @classmethod
    def from_owl(cls, path: str | Path) -> "Ontology":
        """Extract class labels and synonyms from an OWL/RDF-XML file.

        Reads owl:Class/rdfs:label plus oboInOwl synonym annotations; no
        reasoning, no imports.
        """
        ns = {
            "owl": "http://www.w3.org/2002/07/owl#",
            "rdf": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
            "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
            "oboInOwl": "http://www.geneontology.org/formats/oboInOwl#",
        }
        about_key = f"{{{ns['rdf']}}}about"
        tree = ET.parse(str(path))
        classes = []
        for el in tree.getroot().iter(f"{{{ns['owl']}}}Class"):
            uri = el.get(about_key)
            if uri is None:
                continue
            label_el = el.find("rdfs:label", ns)
            if label_el is None or not (label_el.text or "").strip():
                continue
            synonyms = []
            for tag in ("hasExactSynonym", "hasSynonym", "hasRelatedSynonym", "hasBroadSynonym"):
                for syn in el.findall(f"oboInOwl:{tag}", ns):
                    if syn.text and syn.text.strip():
                        synonyms.append(syn.text.strip())
            classes.append(OntologyClass(uri, label_el.text.strip(), tuple(synonyms)))
        return cls(classes)

    @classmethod
    def load(cls, path: str | Path) -> "Ontology":
        p = Path(path)
        if p.suffix.lower() in {".owl", ".rdf", ".xml"}:
            return cls.from_owl(p)
        return cls.from_jsonl(p)


_SCORE_EXACT = 3
_SCORE_SUBSTRING = 2
_SCORE_SYNONYM = 1


def _match_score(keywords: list[str], cls: OntologyClass) -> int:
    """Best match of any keyword against a class: exact label equality beats
    keyword-in-label substring, which beats synonym matches."""
    label = cls.label.lower()
    best = 0
    for kw in keywords:
        if kw == label:
            return _SCORE_EXACT
        if kw in label:
            best = max(best, _SCORE_SUBSTRING)
    if best < _SCORE_SYNONYM:
        for syn in cls.synonyms:
            s = syn.lower()
            if any(kw == s or kw in s for kw in keywords):
                best = max(best, _SCORE_SYNONYM)
                break
    return best


def query_ontology(text: str, n: int, ontology: Ontology) -> list[Entity]:
    """Top-n ontology classes matching the text's keywords.

    Ranking is (match score desc, label lexicographic asc); deterministic for
    fixed ontology contents, and results for n1 <= n2 are prefix-consistent.
    """
    if ontology is None:
        raise ValueError("ontology not loaded")
    if n < 1:
        raise ValueError("n must be >= 1")
    keywords = extract_keywords(text)
    if not keywords:
        return []
    scored = []
    for cls in ontology.classes:
        score = _match_score(keywords, cls)
        if score > 0:
            scored.append((-score, cls.label.lower(), cls))
    scored.sort(key=lambda t: (t[0], t[1]))
    return [Entity(c.uri, c.label, "ontology") for _, _, c in scored[:n]]


# ---------------------------------------------------------------------------
# entity linking client
# ---------------------------------------------------------------------------

class LinkerTransportError(RuntimeError):
    """The linker endpoint could not be reached (carries the cause)."""


class LinkerProtocolError(RuntimeError):
    """The linker responded with something other than the documented shape."""


class LinkerClient(Protocol):
    def link(self, text: str) -> list[dict]:
        """Return raw entity records [{id, label, confidence}, ...]."""
        ...


class HttpLinkerClient:
    """POSTs {"text": ...} to an entity-linking endpoint and expects
    {"entities": [{"id", "label", "confidence"}, ...]} back.

    Concurrent callers share the client; a semaphore caps in-flight requests.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0, max_in_flight: int = 4):
        self.endpoint = endpoint
        self.timeout = timeout
        self._gate = threading.Semaphore(max_in_flight)

    def link(self, text: str) -> list[dict]:
        payload = json.dumps({"text": text}).encode("utf-8")
        req = urllib.request.Request(
            self.endpoint, data=payload, headers={"Content-Type": "application/json"}
        )
        try:
            with self._gate:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    body = resp.read()
        except (urllib.error.URLError, OSError) as exc:
            raise LinkerTransportError(f"linker unreachable: {exc}") from exc
        try:
            data = json.loads(body)
            entities = data["entities"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise LinkerProtocolError(f"malformed linker response: {body[:200]!r}") from exc
        if not isinstance(entities, list):
            raise LinkerProtocolError("linker 'entities' field is not a list")
        return entities


class StaticLinkerClient:
    """Deterministic stub: a fixed text -> entities mapping, for tests and
    offline runs. Unknown texts link to nothing."""

    def __init__(self, mapping: dict[str, list[dict]]):
        self.mapping = dict(mapping)

    @classmethod
    def from_json(cls, path: str | Path) -> "StaticLinkerClient":
        return cls(json.loads(Path(path).read_text("utf-8")))

    def link(self, text: str) -> list[dict]:
        return [dict(rec) for rec in self.mapping.get(text, [])]


def link_entities(text: str, client: LinkerClient) -> list[Entity]:
    """Entities from the linker, sorted by descending confidence."""
    records = client.link(text)
    entities = []
    for rec in records:
        try:
            entities.append(
                Entity(
                    uri_or_id=str(rec["id"]),
                    label=str(rec["label"]),
                    source="linker",
                    confidence=float(rec["confidence"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise LinkerProtocolError(f"bad entity record {rec!r}") from exc
    entities.sort(key=lambda e: -e.confidence)
    return entities


# ---------------------------------------------------------------------------
# augmentation
# ---------------------------------------------------------------------------

def augment(text: str, entities: list[Entity]) -> AugmentedText:
    """Append entity labels to the text, one space before each label."""
    rendered = text + "".join(" " + e.label for e in entities)
    return AugmentedText(base=text, entities=tuple(entities), rendered=rendered)
