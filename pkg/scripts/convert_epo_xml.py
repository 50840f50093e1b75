#!/usr/bin/env python3
"""Convert simple patent XML exports into the JSONL corpus format.

The toolkit itself only reads JSON Lines (one record per line with the
fields id, lang, title, abstract, description). Full-text dossier
archives from patent offices come as large, office-specific XML; this
converter handles a plain per-document XML layout and documents the
field mapping so adapting it to a concrete office schema is mechanical:

    <patent>                 -> one JSONL record
      <id>EP1234567A1</id>   -> "id"    (publication number)
      <lang>en</lang>        -> "lang"  (ISO 639-1 code)
      <title>...</title>     -> "title"
      <abstract>...</abstract>       -> "abstract"
      <description>...</description> -> "description"
    </patent>

Multiple <patent> elements may sit under one root element. Nested
markup inside the text fields is flattened to its text content.
Office-specific archives (nested ZIPs, DTDs, per-field sub-documents)
are out of scope here; map their fields onto the five above.

Usage: python3 scripts/convert_epo_xml.py INPUT.xml OUTPUT.jsonl
"""

import argparse
import json
import sys
import xml.etree.ElementTree as ET

FIELDS = ("id", "lang", "title", "abstract", "description")


def text_of(elem, tag):
    child = elem.find(tag)
    if child is None:
        return ""
    return " ".join("".join(child.itertext()).split())


def convert(in_path, out_path):
    tree = ET.parse(in_path)
    root = tree.getroot()
    patents = [root] if root.tag == "patent" else root.findall(".//patent")
    n = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for elem in patents:
            record = {field: text_of(elem, field) for field in FIELDS}
            if not record["id"]:
                print(f"skipping <patent> #{n + 1}: no <id>", file=sys.stderr)
                continue
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            n += 1
    print(f"converted {n} records -> {out_path}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("input")
    parser.add_argument("output")
    args = parser.parse_args()
    convert(args.input, args.output)


if __name__ == "__main__":
    main()
