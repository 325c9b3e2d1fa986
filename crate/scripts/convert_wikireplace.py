#!/usr/bin/env python3
"""Convert WikiReplace-style annotations to the genlevel JSON Lines format.

Input: JSON Lines or a JSON array, one object per PII span. Field names are
configurable; the defaults are

    id           record identifier (generated as "{split}-{n:05}" if absent)
    sentence     the sentence containing the span
    pii          the span text as it appears in the sentence
    start/end    optional character offsets of the span; when absent the first
                 occurrence of `pii` in `sentence` is used
    type         semantic type label, copied verbatim
    candidates   generalizations, most specific first
    selections   annotator choices as 1-based candidate indices
                 (use --zero-based for 0-based input)

Output fields: id, text, span_start, span_end, span_text, semantic_type,
candidates, majority_level, all_levels. Offsets are counted in Unicode code
points. The majority level is the most frequent selection; ties go to the
lowest level. Records that cannot be converted are reported on stderr and
skipped (or abort the run with --strict).

    python3 scripts/convert_wikireplace.py raw/train.json -o data/train.jsonl
"""

import argparse
import json
import sys
from collections import Counter


def read_objects(path):
    with open(path, encoding="utf-8") as f:
        text = f.read()
    stripped = text.lstrip()
    if stripped.startswith("["):
        return json.loads(stripped)
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def convert(obj, n, args):
    f = args.fields
    text = obj[f["sentence"]]
    span = obj[f["pii"]]
    if f["start"] in obj and f["end"] in obj:
        start, end = int(obj[f["start"]]), int(obj[f["end"]])
        if text[start:end] != span:
            raise ValueError(f"offsets {start}..{end} do not cover {span!r}")
    else:
        start = text.find(span)
        if start < 0 or not span:
            raise ValueError(f"span {span!r} not found in sentence")
        end = start + len(span)

    candidates = [str(c) for c in obj[f["candidates"]]]
    if not candidates:
        raise ValueError("no candidates")
    offset = 1 if args.zero_based else 0
    selections = [int(s) + offset for s in obj[f["selections"]]]
    if not selections:
        raise ValueError("no annotator selections")
    bad = [s for s in selections if not 1 <= s <= len(candidates)]
    if bad:
        raise ValueError(f"selections {bad} outside 1..{len(candidates)}")

    counts = Counter(selections)
    majority = min(counts, key=lambda level: (-counts[level], level))
    return {
        "id": str(obj.get(f["id"], f"{args.split}-{n:05}")),
        "text": text,
        "span_start": start,
        "span_end": end,
        "span_text": span,
        "semantic_type": str(obj[f["type"]]),
        "candidates": candidates,
        "majority_level": majority,
        "all_levels": sorted(counts),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--split", default="rec", help="id prefix when records carry none")
    p.add_argument("--zero-based", action="store_true")
    p.add_argument("--strict", action="store_true")
    for name in ("id", "sentence", "pii", "start", "end", "type", "candidates", "selections"):
        p.add_argument(f"--{name}-field", default=name, dest=f"{name}_field")
    args = p.parse_args(argv)
    args.fields = {
        k[: -len("_field")]: v for k, v in vars(args).items() if k.endswith("_field")
    }

    written = skipped = 0
    with open(args.output, "w", encoding="utf-8") as out:
        for n, obj in enumerate(read_objects(args.input)):
            try:
                rec = convert(obj, n, args)
            except (KeyError, ValueError, TypeError) as e:
                if args.strict:
                    sys.exit(f"record {n}: {e!r}")
                print(f"skipping record {n}: {e!r}", file=sys.stderr)
                skipped += 1
                continue
            out.write(json.dumps(rec, ensure_ascii=False) + "\n")
            written += 1
    print(f"wrote {written} records to {args.output} ({skipped} skipped)", file=sys.stderr)


if __name__ == "__main__":
    main()
