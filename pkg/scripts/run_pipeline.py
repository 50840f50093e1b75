#!/usr/bin/env python3
"""End-to-end experiment on the bundled corpus.

Runs label -> build-dataset -> train (both model kinds) -> evaluate ->
curves -> explain into ./out, then prints the headline scores. This is
the quickest way to see every artifact the pipeline produces.

Usage: python3 scripts/run_pipeline.py [--config configs/sample.yaml]
"""

import argparse
import json
import os
import subprocess
import sys


def run(*args):
    cmd = [sys.executable, "-m", "patclass.cli", *args]
    print("+", " ".join(args))
    subprocess.run(cmd, check=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default="configs/sample.yaml")
    args = parser.parse_args()
    base = ("-c", args.config)

    run(*base, "label")
    run(*base, "build-dataset")
    for kind in ("flat", "hier"):
        run(*base, "train", "--model", kind)
        run(*base, "evaluate", "--model", kind)
    run(*base, "curves")

    # Explain the first document labeled positive for the root class.
    labels_path = os.path.join("out", "reports", "labels.jsonl")
    doc_id = None
    with open(labels_path, encoding="utf-8") as fh:
        for line in fh:
            record = json.loads(line)
            if "Y02G" in record["codes"]:
                doc_id = record["id"]
                break
    if doc_id is not None:
        run(*base, "explain", "--id", doc_id, "--class", "Y02G")
    run(*base, "report")


if __name__ == "__main__":
    main()
