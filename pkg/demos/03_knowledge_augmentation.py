"""External knowledge: ontology lookup, entity linking, and text augmentation.

Shows the full enrichment path for a product description: extract keywords,
query a food ontology for matching classes, pull linked entities from a
(stubbed) entity-linking service, and append the winners to the text.
"""

from foodlink.knowledge import (
    Ontology,
    OntologyClass,
    StaticLinkerClient,
    augment,
    extract_keywords,
    link_entities,
    query_ontology,
)

DESCRIPTION = "nestle nido powder infant formula"

# --- keywords ---------------------------------------------------------------

print("keywords:", extract_keywords(DESCRIPTION))
print("keywords drop units/digits:", extract_keywords("twisted tea malt beverage 5 pct 144oz"))
print()

# --- ontology query ---------------------------------------------------------

ontology = Ontology([
    OntologyClass("obo:FOODON_03301577", "rice powder", ("ground rice",)),
    OntologyClass("obo:FOODON_03307445", "frozen dairy dessert", ("frozen custard",)),
    OntologyClass("obo:FOODON_03301440", "sour milk beverage", ("kefir",)),
    OntologyClass("obo:FOODON_03315354", "creamy salad dressing", ("ranch dressing",)),
])

for n in (1, 3):
    labels = [e.label for e in query_ontology(DESCRIPTION, n, ontology)]
    print(f"ontology top-{n}: {labels}")

# --- entity linking (stub client; swap in HttpLinkerClient for a live one) --

linker = StaticLinkerClient({
    DESCRIPTION: [
        {"id": "wd:Q160746", "label": "nestle", "confidence": 0.92},
        {"id": "wd:Q1050058", "label": "nido", "confidence": 0.41},
    ],
})
linked = link_entities(DESCRIPTION, linker)
print("linker entities:", [(e.label, e.confidence) for e in linked])
print()

# --- augmentation -----------------------------------------------------------

entities = query_ontology(DESCRIPTION, 1, ontology)
augmented = augment(DESCRIPTION, entities)
print("base:     ", augmented.base)
print("augmented:", augmented.rendered)
assert augmented.rendered == "nestle nido powder infant formula rice powder"
