#!/usr/bin/env python3
"""Independent one-pass stats oracle for the mini corpus (run once, frozen).

Cleans each article with the library cleaner (the stats contract assumes
cleaned input), then derives token/vocab/byte counts with a character-level
single pass that never calls str.split(), so the counting route is
independent of the implementation under test.
"""

from __future__ import annotations

import json
from pathlib import Path

from foodlink.corpus import clean_text


def one_pass_counts(text: str) -> tuple[int, list[str]]:
    """Count whitespace-delimited tokens and collect them lowercased."""
    tokens: list[str] = []
    current: list[str] = []
    for ch in text:
        if ch in (" ", "\t", "\n", "\r", "\x0b", "\x0c"):
            if current:
                tokens.append("".join(current).lower())
                current = []
        else:
            current.append(ch)
    if current:
        tokens.append("".join(current).lower())
    return len(tokens), tokens


def main() -> None:
    data_dir = Path(__file__).resolve().parent.parent / "data"
    article_count = 0
    token_count = 0
    byte_size = 0
    vocab: set[str] = set()
    for line in (data_dir / "mini_corpus.jsonl").read_text("utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        cleaned = clean_text(record["text"])
        article_count += 1
        n, tokens = one_pass_counts(cleaned)
        token_count += n
        vocab.update(tokens)
        byte_size += len(cleaned.encode("utf-8"))
    stats = {
        "article_count": article_count,
        "token_count": token_count,
        "vocab_size": len(vocab),
        "byte_size": byte_size,
    }
    out = data_dir / "mini_corpus_stats.json"
    out.write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n", "utf-8")
    print(f"wrote {out}: {stats}")


if __name__ == "__main__":
    main()
