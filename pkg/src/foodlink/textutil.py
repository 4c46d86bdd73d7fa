"""Shared tokenization, hashing, and RNG-derivation helpers."""

from __future__ import annotations

import hashlib
import re
from functools import lru_cache
from importlib import resources

import numpy as np

_WORD_RE = re.compile(r"[a-z0-9]+(?:\.[a-z0-9]+)*")
_DIGITS_RE = re.compile(r"^\d+(?:[.,]\d+)*$")
# quantity+unit compounds such as "1lb", "1.5oz", "144oz", "6ct"
_QUANTITY_UNIT_RE = re.compile(r"^\d+(?:\.\d+)?(?P<unit>[a-z]+)$")


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens; keeps number.unit compounds like ``12.78oz`` whole."""
    return _WORD_RE.findall(text.lower())


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    """The committed English stopword list (versioned data, not code)."""
    raw = resources.files("foodlink.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w for w in raw.split() if w and not w.startswith("#"))


@lru_cache(maxsize=1)
def unit_tokens() -> frozenset[str]:
    """Retail unit tokens (oz, lb, ct, ...) stripped from keyword extraction."""
    raw = resources.files("foodlink.data").joinpath("units.txt").read_text("utf-8")
    return frozenset(w for w in raw.split() if w and not w.startswith("#"))


def is_unit_token(token: str) -> bool:
    """True for bare units ("oz") and quantity+unit compounds ("1.5oz")."""
    units = unit_tokens()
    if token in units:
        return True
    m = _QUANTITY_UNIT_RE.match(token)
    return bool(m and m.group("unit") in units)


def is_digits_token(token: str) -> bool:
    return bool(_DIGITS_RE.match(token))


def stable_hash64(text: str, salt: str = "") -> int:
    """Platform-stable 64-bit hash (Python's hash() is salted per process)."""
    digest = hashlib.blake2b((salt + "\x00" + text).encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def derive_rng(*parts: int) -> np.random.Generator:
    """Deterministic generator from any integers (negatives are masked)."""
    masked = tuple(int(p) & 0xFFFFFFFFFFFFFFFF for p in parts)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(masked)))
