#!/usr/bin/env python3
"""Regenerate the bundled 200-document synthetic corpus.

The corpus is committed at src/patclass/data/sample_corpus.jsonl; this
script exists so the fixture is reproducible. Descriptions are composed
from per-class template sentences that trigger the default keyword
queries, plus neutral filler; titles and abstracts carry the same
topical words so a classifier has signal to learn from. A handful of
records are non-English or incomplete to exercise corpus filtering.

Usage: python3 scripts/make_sample_corpus.py [--out PATH]
"""

import argparse
import json
import os
import random

POSITIVE_TOPICS = {
    # topic: (title, abstract, description core sentence)
    "green": (
        "Green plastic compositions",
        "A green plastic material with reduced environmental impact.",
        "The proposed green plastic material lowers the environmental footprint "
        "of consumer packaging.",
    ),
    "recycling": (
        "Recycling plastic waste streams",
        "A method for recycling plastic waste from municipal sources.",
        "The invention relates to recycling plastic waste collected from "
        "household streams in an efficient manner.",
    ),
    "recovery": (
        "Sorting apparatus for plastic articles",
        "Equipment for collecting and sorting mixed plastic articles.",
        "The apparatus is collecting and sorting mixed plastic articles before "
        "cleaning and baling them for transport.",
    ),
    "compost": (
        "Composting recycled plastic residues",
        "Recycled plastic scraps are converted into compost additives.",
        "In the process, recycled plastic scraps are converted into compost "
        "suitable for agricultural soil improvement.",
    ),
    "melt": (
        "Remelting recycled thermoplastics",
        "Plastic regrind is recycled, remelted and extruded into pellets.",
        "The plastic regrind is recycled then remelted and extruded into "
        "uniform pellets for reuse in molding lines.",
    ),
    "feedstock": (
        "Feedstock recycling of waste plastic",
        "Feedstock recycling converts waste plastic into monomers.",
        "Feedstock recycling converts waste plastic into monomers by pyrolysis "
        "at moderate temperatures.",
    ),
    "alternative": (
        "Alternative plastic from renewable sources",
        "An alternative plastic produced from renewable feedstocks.",
        "Described is an alternative plastic produced from renewable feedstocks "
        "such as plant oils.",
    ),
    "bioplastic": (
        "Biodegradable plastic packaging film",
        "A biodegradable plastic film that is compostable at home.",
        "The biodegradable plastic film decomposes in home composting "
        "conditions within months.",
    ),
    "bioplastic2": (
        "Bioplastic articles for packaging",
        "Bioplastic articles molded from starch blends.",
        "Bioplastic articles are molded from starch blends with improved "
        "moisture resistance.",
    ),
    "vitrimer": (
        "Vitrimer networks for reprocessable thermosets",
        "Vitrimer networks enable reprocessing of thermoset parts.",
        "Vitrimer networks permit repeated reprocessing of thermoset parts "
        "without losing mechanical strength.",
    ),
    "selfheal": (
        "Self-healing polymer compositions",
        "A self-healing polymer that can be recycled without degradation.",
        "The self-healing polymer can be recycled without loss of elasticity "
        "after repair cycles.",
    ),
}

# Weights steer the class distribution toward the shallow classes,
# leaving the deep ones rare.
POSITIVE_WEIGHTS = {
    "green": 10,
    "recycling": 14,
    "recovery": 9,
    "compost": 3,
    "melt": 3,
    "feedstock": 2,
    "alternative": 7,
    "bioplastic": 5,
    "bioplastic2": 3,
    "vitrimer": 1,
    "selfheal": 1,
}

NEGATIVE_TOPICS = {
    "semiconductor": (
        "Semiconductor device with raised gate",
        "A semiconductor device with an improved gate dielectric.",
        "The semiconductor device comprises a raised gate electrode over a "
        "strained channel region.",
    ),
    "engine": (
        "Variable valve timing arrangement",
        "An internal combustion engine with variable valve timing.",
        "The internal combustion engine adjusts valve timing according to the "
        "measured load and speed.",
    ),
    "pharma": (
        "Pharmaceutical composition and dosage",
        "A pharmaceutical composition comprising the active compound.",
        "The pharmaceutical composition comprises the active compound together "
        "with conventional excipients.",
    ),
    "battery": (
        "Lithium ion battery cathode",
        "A lithium ion battery with an improved cathode material.",
        "The lithium ion battery employs a layered oxide cathode with dopants "
        "for cycle stability.",
    ),
    "network": (
        "Uplink scheduling in wireless networks",
        "A wireless communication method for scheduling transmissions.",
        "The wireless communication method schedules uplink transmissions "
        "according to channel quality reports.",
    ),
    "optics": (
        "Optical lens assembly for cameras",
        "An optical lens assembly with reduced aberration.",
        "The optical lens assembly combines aspheric elements to reduce "
        "chromatic aberration in compact cameras.",
    ),
    # Conventional-plastics negatives: mention plastic without matching
    # any class query, so the boost sampler has material to prefer.
    "plastic_housing": (
        "Molded housing for electronic sensor",
        "A molded plastic housing for an electronic sensor unit.",
        "The molded plastic housing protects the electronic sensor unit "
        "against dust and vibration.",
    ),
    "plastic_molding": (
        "Injection molding of precision parts",
        "An injection molding process for plastic components.",
        "The injection molding process produces plastic components with tight "
        "dimensional tolerances.",
    ),
    "plastic_container": (
        "Container with tamper evident lid",
        "A plastic container with a tamper evident closure.",
        "The plastic container has a tamper evident lid that snaps onto the "
        "rim during filling.",
    ),
}

NEGATIVE_WEIGHTS = {
    "semiconductor": 16,
    "engine": 15,
    "pharma": 15,
    "battery": 14,
    "network": 13,
    "optics": 12,
    "plastic_housing": 16,
    "plastic_molding": 14,
    "plastic_container": 12,
}

FILLER = [
    "Further embodiments are described with reference to the drawings.",
    "The dependent claims define preferred embodiments of the invention.",
    "Various modifications will be apparent to the skilled reader.",
    "Test results are summarized in the accompanying tables.",
    "The manufacturing cost is reduced compared with prior approaches.",
    "A control unit supervises the operation of the individual modules.",
    "The materials were characterized by standard laboratory methods.",
    "An exemplary embodiment is described in detail hereinafter.",
]


def weighted_topics(rng, weights, n):
    names = list(weights)
    pool = []
    for name in names:
        pool.extend([name] * weights[name])
    return [rng.choice(pool) for _ in range(n)]


def build_record(rng, doc_id, topic_map, topic):
    title, abstract, core = topic_map[topic]
    sentences = [core]
    for _ in range(rng.randint(2, 5)):
        sentences.append(rng.choice(FILLER))
    rng.shuffle(sentences)
    return {
        "id": doc_id,
        "lang": "en",
        "title": title,
        "abstract": abstract,
        "description": " ".join(sentences),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--out",
        default=os.path.join(
            os.path.dirname(__file__), "..", "src", "patclass", "data",
            "sample_corpus.jsonl",
        ),
    )
    parser.add_argument("--seed", type=int, default=20407)
    parser.add_argument("--n-positive", type=int, default=58)
    parser.add_argument("--n-negative", type=int, default=130)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    records = []
    for topic in weighted_topics(rng, POSITIVE_WEIGHTS, args.n_positive):
        records.append(build_record(rng, "", POSITIVE_TOPICS, topic))
    for topic in weighted_topics(rng, NEGATIVE_WEIGHTS, args.n_negative):
        records.append(build_record(rng, "", NEGATIVE_TOPICS, topic))

    # Records that the quality filter must drop.
    bad = []
    for i in range(6):
        rec = build_record(rng, "", NEGATIVE_TOPICS, rng.choice(list(NEGATIVE_TOPICS)))
        rec["lang"] = "de" if i % 2 == 0 else "fr"
        bad.append(rec)
    for i in range(6):
        rec = build_record(rng, "", NEGATIVE_TOPICS, rng.choice(list(NEGATIVE_TOPICS)))
        rec[("abstract", "description", "title")[i % 3]] = ""
        bad.append(rec)
    records.extend(bad)

    rng.shuffle(records)
    for i, rec in enumerate(records):
        rec["id"] = f"EP{3500000 + i}A1"

    out_path = os.path.normpath(args.out)
    with open(out_path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    print(f"wrote {len(records)} records to {out_path}")


if __name__ == "__main__":
    main()
