#!/usr/bin/env python3
"""Regenerate the shared sentence-construction fixture.

Writes 20 records and, for every record, the original sentence plus the
C = 5 padded generalized sentences keyed "<id>#orig" / "<id>#cand<i>".
Sentences are built here with plain code-point slicing so the fixture does
not depend on the Rust implementation it checks.
"""
import json
import struct
import sys
from pathlib import Path

C = 5
PAD = "[PAD]"


def rec(rid, text, span, stype, candidates, majority, all_levels=None, occurrence=0):
    start = -1
    for _ in range(occurrence + 1):
        start = text.index(span, start + 1)
    return {
        "id": rid,
        "text": text,
        "span_start": start,
        "span_end": start + len(span),
        "span_text": span,
        "semantic_type": stype,
        "candidates": candidates,
        "majority_level": majority,
        "all_levels": sorted(set(all_levels or []) | {majority}),
    }


RECORDS = [
    rec("p01", "The person (born August 22, 1935) is a Canadian lawyer and former Senator.",
        "August 22, 1935", "DATETIME", ["1935", "date in 1930s", "***"], 2),
    rec("p02", "Oslo is cold in winter.", "Oslo", "LOC", ["a Norwegian city", "a city", "a place"], 1),
    rec("p03", "She moved to Quito.", "Quito", "LOC", ["a capital", "a city in South America"], 2, [1]),
    rec("p04", "Contact Ada Byron for details.", "Ada Byron", "PERSON",
        ["a mathematician", "a person", "someone", "***", "[REDACTED]"], 3),
    rec("p05", "Zürich hosts the bank’s head office.", "Zürich", "LOC", ["a Swiss city", "a city"], 1),
    rec("p06", "北京是中国的首都。", "北京", "LOC", ["某城市", "某地"], 1),
    rec("p07", "Paris, Paris, and Paris again.", "Paris", "LOC", ["a city"], 1, occurrence=1),
    rec("p08", "He was 42 years old.", "42", "QUANTITY", ["in his forties", "an adult age", "***"], 2, [1, 3]),
    rec("p09", "Team 🚀 Rocket won.", "🚀 Rocket", "ORG", ["a team", "an organization"], 1),
    rec("p10", "Nordbank", "Nordbank", "ORG", ["a bank", "a company", "an institution"], 2),
    rec("p11", "Dinner on Tuesday", "Tuesday", "DATETIME", ["a weekday", "a day"], 1),
    rec("p12", "  Leading spaces before Lyon and after.  ", "Lyon", "LOC", ["a French city", "a city", "a place"], 3),
    rec("p13", "The Norwegian delegation arrived.", "Norwegian", "DEM", ["Scandinavian", "European"], 1),
    rec("p14", "Tab\tseparated\tMalmo\tvalues", "Malmo", "LOC", ["a city"], 1),
    rec("p15", "Line one\nLine two mentions Bergen.", "Bergen", "LOC", ["a Norwegian city", "a city", "a place", "***"], 4),
    rec("p16", "Raj Patel's café is on the corner.", "Raj Patel", "PERSON", ["a café owner", "a person"], 2),
    rec("p17", "The price was $1,250.", "$1,250", "QUANTITY", ["over $1,000", "a price", "***"], 1, [2]),
    rec("p18", "Naïve résumé from Malmö", "Malmö", "LOC", ["", "a city"], 2),
    rec("p19", "Quotes \"Osaka\" inside.", "Osaka", "LOC", ["a \"Japanese\" city", "a city"], 1),
    rec("p20", "The nineties were loud; the nineties ended.", "the nineties", "DATETIME",
        ["the 1990s", "a decade", "the past"], 2, occurrence=0),
]


def sentences(r):
    text = r["text"]
    lo, hi = r["span_start"], r["span_end"]
    assert text[lo:hi] == r["span_text"], r["id"]
    padded = r["candidates"] + [PAD] * (C - len(r["candidates"]))
    rows = [{"key": f"{r['id']}#orig", "sentence": text}]
    for i, cand in enumerate(padded, start=1):
        rows.append({"key": f"{r['id']}#cand{i}", "sentence": text[:lo] + cand + text[hi:]})
    return rows


def write_store(path, dim, entries):
    """PIEM v1: magic, u32 version, u32 dim, u64 count, then per entry
    u32 key length, UTF-8 key, dim little-endian f32. Entries are written
    in byte order of their keys, which is the canonical order."""
    entries = sorted(entries, key=lambda e: e[0].encode("utf-8"))
    with open(path, "wb") as f:
        f.write(b"PIEM" + struct.pack("<IIQ", 1, dim, len(entries)))
        for key, vec in entries:
            k = key.encode("utf-8")
            f.write(struct.pack("<I", len(k)) + k + struct.pack(f"<{dim}f", *vec))


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "parity_records.jsonl", "w", encoding="utf-8") as f:
        for r in RECORDS:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")
    with open(out / "parity_sentences.jsonl", "w", encoding="utf-8") as f:
        for r in RECORDS:
            for row in sentences(r):
                f.write(json.dumps(row, ensure_ascii=False) + "\n")
    # Store covering p01 with C = 5: entry j holds [j, -j, j / 8, 1e-3 * j].
    keys = ["p01#orig"] + [f"p01#cand{i}" for i in range(1, C + 1)]
    write_store(out / "parity_store.piem", 4,
                [(k, [j, -j, j / 8, 1e-3 * j]) for j, k in enumerate(keys)])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/fixtures")
