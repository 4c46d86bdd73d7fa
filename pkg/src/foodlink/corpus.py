"""Corpus ingestion, cleaning, statistics, and desk-scale MLM pretraining.

The cleaning pipeline drops non-ASCII characters, strips URLs and email
addresses, truncates everything from the first standalone references heading
onward, and collapses whitespace. It is idempotent: cleaning a cleaned text
is a no-op.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nn
from .model_store import EncoderConfig, ScorerModelHandle, encoder_from_weights, encoder_weight_dict
from .textutil import derive_rng, sha256_hex, tokenize

_URL_RE = re.compile(r"(?:https?://\S+|www\.\S+)", re.IGNORECASE)
_EMAIL_RE = re.compile(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}")
_REFS_HEADING_RE = re.compile(r"^\s*(?:references|bibliography)\s*:?\s*$", re.IGNORECASE)

MODEL_SIZES = ("tiny", "small")


@dataclass(frozen=True)
class RawArticle:
    id: str
    text: str
    source: str | None = None


@dataclass(frozen=True)
class CorpusStats:
    article_count: int
    token_count: int
    vocab_size: int
    byte_size: int


@dataclass(frozen=True)
class MLMConfig:
    mask_fraction: float = 0.15
    epochs: int = 3
    seed: int = 0
    model_size: str = "small"

    def __post_init__(self):
        if not 0.0 < self.mask_fraction < 1.0:
            raise ValueError(f"mask_fraction must be in (0,1), got {self.mask_fraction}")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.model_size not in MODEL_SIZES:
            raise ValueError(f"model_size must be one of {MODEL_SIZES}")


def clean_text(raw: str) -> str:
    """Clean one article for MLM training. Total function, may return ""."""
    text = raw.encode("ascii", "ignore").decode("ascii")
    text = _URL_RE.sub(" ", text)
    text = _EMAIL_RE.sub(" ", text)
    kept_lines = []
    for line in text.split("\n"):
        if _REFS_HEADING_RE.match(line):
            break
        kept_lines.append(line)
    text = "\n".join(kept_lines)
    return " ".join(text.split())


def clean_articles(articles: list[RawArticle]) -> list[RawArticle]:
    return [RawArticle(a.id, clean_text(a.text), a.source) for a in articles]


def corpus_stats(articles: list[RawArticle]) -> CorpusStats:
    """Whitespace-token counts over cleaned articles; vocab is lowercased."""
    token_count = 0
    byte_size = 0
    vocab: set[str] = set()
    for article in articles:
        tokens = article.text.split()
        token_count += len(tokens)
        byte_size += len(article.text.encode("utf-8"))
        vocab.update(t.lower() for t in tokens)
    return CorpusStats(
        article_count=len(articles),
        token_count=token_count,
        vocab_size=len(vocab),
        byte_size=byte_size,
    )


# ---------------------------------------------------------------------------
# article I/O: a directory of .txt files, or a JSONL of {id, text, source}
# ---------------------------------------------------------------------------

def load_articles(path: str | Path) -> list[RawArticle]:
    p = Path(path)
    if p.is_dir():
        articles = [
            RawArticle(f.stem, f.read_text("utf-8"), None)
            for f in sorted(p.glob("*.txt"))
        ]
    else:
        articles = []
        for lineno, line in enumerate(p.read_text("utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            articles.append(RawArticle(str(rec["id"]), rec["text"], rec.get("source")))
    seen: set[str] = set()
    for a in articles:
        if a.id in seen:
            raise ValueError(f"duplicate article id {a.id!r}")
        seen.add(a.id)
        if not a.text:
            raise ValueError(f"article {a.id!r} has empty text")
    return articles


def save_stats(stats: CorpusStats, path: str | Path) -> None:
    payload = {
        "article_count": stats.article_count,
        "token_count": stats.token_count,
        "vocab_size": stats.vocab_size,
        "byte_size": stats.byte_size,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")


# ---------------------------------------------------------------------------
# masked language model pretraining (desk scale)
# ---------------------------------------------------------------------------

PAD_ID, MASK_ID, UNK_ID = 0, 1, 2
_SPECIALS = ["[PAD]", "[MASK]", "[UNK]"]
_MAX_VOCAB = 4096
_BATCH_SIZE = 16
_LEARNING_RATE = 3e-3


def _build_vocab(articles: list[RawArticle]) -> list[str]:
    # same tokenizer as the scorer, so learned vectors resolve at fine-tune time
    counts: Counter[str] = Counter()
    for a in articles:
        counts.update(tokenize(a.text))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return _SPECIALS + [tok for tok, _ in ranked[:_MAX_VOCAB]]


def _windows(articles: list[RawArticle], vocab_index: dict[str, int], max_len: int) -> list[list[int]]:
    out = []
    for a in articles:
        ids = [vocab_index.get(t, UNK_ID) for t in tokenize(a.text)]
        for start in range(0, len(ids), max_len):
            chunk = ids[start : start + max_len]
            if len(chunk) >= 2:
                out.append(chunk)
    return out


def mlm_pretrain(
    articles: list[RawArticle],
    config: MLMConfig,
    base: ScorerModelHandle | None = None,
) -> ScorerModelHandle:
    """Train a small encoder to predict masked tokens of the cleaned corpus.

    Returns a handle the scorer module can fine-tune from. Pass ``base`` to
    continue training an existing generic model instead of starting from
    scratch (handle provenance records which happened).
    """
    # continued training keeps the base architecture; scratch uses the preset
    enc_config = base.config if base is not None else EncoderConfig.preset(config.model_size)
    vocab = _build_vocab(articles)
    vocab_index = {tok: i for i, tok in enumerate(vocab)}
    windows = _windows(articles, vocab_index, enc_config.max_len)
    if not windows:
        raise ValueError("empty training corpus")

    rng = derive_rng(config.seed, 1)
    dim, n_vocab = enc_config.dim, len(vocab)
    embedding = nn.Param(rng.normal(0.0, 0.02, size=(n_vocab, dim)))
    positional = nn.Param(rng.normal(0.0, 0.02, size=(enc_config.max_len, dim)))
    if base is not None:
        encoder = encoder_from_weights(enc_config, base.weights, rng)
        _transfer_embeddings(embedding.value, vocab_index, base)
        base_pos = base.weights.get("positional")
        if base_pos is not None and base_pos.shape == positional.value.shape:
            positional.value[...] = base_pos
        provenance = "finetuned_generic"
    else:
        encoder = enc_config.build(rng)
        provenance = "scratch_domain"
    out_proj = nn.Linear(dim, n_vocab, rng)
    if base is not None:
        _transfer_mlm_head(out_proj, vocab_index, base)

    params = [embedding, positional] + encoder.params() + out_proj.params()
    optimizer = nn.Adam(params, lr=_LEARNING_RATE)

    loss_history = []
    for epoch in range(config.epochs):
        epoch_rng = derive_rng(config.seed, epoch + 2)
        order = epoch_rng.permutation(len(windows))
        losses = []
        for start in range(0, len(order), _BATCH_SIZE):
            batch = [windows[i] for i in order[start : start + _BATCH_SIZE]]
            loss = _mlm_step(
                batch, embedding, positional, encoder, out_proj, optimizer,
                config.mask_fraction, epoch_rng,
            )
            losses.append(loss)
        loss_history.append(float(np.mean(losses)))

    weights = {
        "embedding": embedding.value.copy(),
        "positional": positional.value.copy(),
        "mlm_head.W": out_proj.W.value.copy(),
        "mlm_head.b": out_proj.b.value.copy(),
    }
    weights.update(encoder_weight_dict(encoder))
    handle = ScorerModelHandle(
        identifier=sha256_hex(json.dumps([provenance, enc_config.to_dict(), config.seed]))[:12],
        provenance=provenance,
        config=enc_config,
        seed=config.seed,
        weights=weights,
        vocab=vocab,
        loss_history=loss_history,
        dataset_hash=sha256_hex("\x00".join(a.text for a in articles)),
    )
    return handle


def _transfer_embeddings(table: np.ndarray, vocab_index: dict[str, int], base: ScorerModelHandle) -> None:
    """Copy base-model vectors for tokens both vocabularies share."""
    base_table = base.weights.get("embedding")
    if base.vocab is None or base_table is None or base_table.shape[1] != table.shape[1]:
        return
    base_index = {tok: i for i, tok in enumerate(base.vocab)}
    for tok, i in vocab_index.items():
        j = base_index.get(tok)
        if j is not None:
            table[i] = base_table[j]


def _transfer_mlm_head(out_proj: nn.Linear, vocab_index: dict[str, int], base: ScorerModelHandle) -> None:
    """Copy prediction-head columns for tokens both vocabularies share."""
    base_w = base.weights.get("mlm_head.W")
    base_b = base.weights.get("mlm_head.b")
    if base.vocab is None or base_w is None or base_w.shape[0] != out_proj.W.value.shape[0]:
        return
    base_index = {tok: i for i, tok in enumerate(base.vocab)}
    for tok, i in vocab_index.items():
        j = base_index.get(tok)
        if j is not None:
            out_proj.W.value[:, i] = base_w[:, j]
            out_proj.b.value[i] = base_b[j]


def _mlm_step(batch, embedding, positional, encoder, out_proj, optimizer, mask_fraction, rng):
    max_t = max(len(w) for w in batch)
    b = len(batch)
    ids = np.full((b, max_t), PAD_ID, dtype=np.int64)
    mask = np.zeros((b, max_t))
    targets = []
    masked_rows, masked_cols = [], []
    for i, window in enumerate(batch):
        ids[i, : len(window)] = window
        mask[i, : len(window)] = 1.0
        n_mask = max(1, round(mask_fraction * len(window)))
        positions = rng.choice(len(window), size=n_mask, replace=False)
        for pos in sorted(positions):
            targets.append(window[pos])
            masked_rows.append(i)
            masked_cols.append(pos)
            ids[i, pos] = MASK_ID

    x = embedding.value[ids] + positional.value[:max_t][None, :, :]
    h = encoder.forward(x, mask)
    h_masked = h[masked_rows, masked_cols]
    logits = out_proj.forward(h_masked)
    loss, dlogits = nn.softmax_cross_entropy(logits, np.asarray(targets))

    optimizer.zero_grad()
    dh_masked = out_proj.backward(dlogits)
    dh = np.zeros_like(h)
    np.add.at(dh, (masked_rows, masked_cols), dh_masked)
    dx = encoder.backward(dh)
    np.add.at(embedding.grad, ids, dx)
    positional.grad[:max_t] += dx.sum(axis=0)
    optimizer.step()
    return loss
