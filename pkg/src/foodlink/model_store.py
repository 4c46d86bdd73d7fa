"""Encoder configuration and the persisted model handle shared by the corpus
pretrainer and the pair scorer."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn

PROVENANCES = ("pretrained_generic", "finetuned_generic", "scratch_domain")


@dataclass(frozen=True)
class EncoderConfig:
    dim: int = 64
    n_layers: int = 2
    n_heads: int = 4
    ffn_hidden: int = 128
    max_len: int = 48
    qk_init: str = "identity"
    gain_init: float = 4.0

    @classmethod
    def preset(cls, model_size: str) -> "EncoderConfig":
        if model_size == "tiny":
            return cls(dim=32, n_layers=1, n_heads=2, ffn_hidden=64, max_len=32)
        if model_size == "small":
            return cls()
        raise ValueError(f"unknown model size {model_size!r}")

    def build(self, rng: np.random.Generator) -> nn.TransformerEncoder:
        return nn.TransformerEncoder(
            self.dim, self.n_layers, self.n_heads, self.ffn_hidden, rng,
            qk_init=self.qk_init, gain_init=self.gain_init,
        )

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "n_layers": self.n_layers,
            "n_heads": self.n_heads,
            "ffn_hidden": self.ffn_hidden,
            "max_len": self.max_len,
            "qk_init": self.qk_init,
            "gain_init": self.gain_init,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        return cls(**d)


def encoder_weight_dict(encoder: nn.TransformerEncoder) -> dict[str, np.ndarray]:
    """Name every encoder parameter for persistence/transfer."""
    out: dict[str, np.ndarray] = {}
    for i, block in enumerate(encoder.blocks):
        prefix = f"block{i}."
        out[prefix + "ln1.gamma"] = block.ln1.gamma.value
        out[prefix + "ln1.beta"] = block.ln1.beta.value
        out[prefix + "attn.Wq"] = block.attn.Wq.value
        out[prefix + "attn.Wk"] = block.attn.Wk.value
        out[prefix + "attn.Wv"] = block.attn.Wv.value
        out[prefix + "attn.Wo"] = block.attn.Wo.value
        out[prefix + "attn.gain"] = block.attn.gain.value
        out[prefix + "ln2.gamma"] = block.ln2.gamma.value
        out[prefix + "ln2.beta"] = block.ln2.beta.value
        out[prefix + "ffn.fc1.W"] = block.ffn.fc1.W.value
        out[prefix + "ffn.fc1.b"] = block.ffn.fc1.b.value
        out[prefix + "ffn.fc2.W"] = block.ffn.fc2.W.value
        out[prefix + "ffn.fc2.b"] = block.ffn.fc2.b.value
    out["ln_out.gamma"] = encoder.ln_out.gamma.value
    out["ln_out.beta"] = encoder.ln_out.beta.value
    return out


def encoder_from_weights(
    config: EncoderConfig, weights: dict[str, np.ndarray], rng: np.random.Generator
) -> nn.TransformerEncoder:
    """Build an encoder and copy in any matching persisted weights."""
    encoder = config.build(rng)
    named = encoder_weight_dict(encoder)
    # encoder_weight_dict returns the live arrays, so copy into them in place
    for name, live in named.items():
        if name in weights and weights[name].shape == live.shape:
            live[...] = weights[name]
    return encoder


@dataclass
class ScorerModelHandle:
    """A trained (or trainable) model: provenance, config, weights, lineage.

    ``provenance`` distinguishes a generic off-the-shelf encoder, a generic
    encoder further adapted on a domain corpus, and one trained from scratch
    on the domain corpus.
    """

    identifier: str
    provenance: str
    config: EncoderConfig
    seed: int
    weights: dict[str, np.ndarray] = field(default_factory=dict)
    vocab: list[str] | None = None
    loss_history: list[float] = field(default_factory=list)
    dataset_hash: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def save(self, directory: str | Path) -> Path:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        manifest = {
            "identifier": self.identifier,
            "provenance": self.provenance,
            "config": self.config.to_dict(),
            "seed": self.seed,
            "loss_history": self.loss_history,
            "dataset_hash": self.dataset_hash,
            "has_vocab": self.vocab is not None,
            "extra": {k: v for k, v in self.extra.items() if not k.startswith("_")},
        }
        (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8")
        np.savez(d / "weights.npz", **self.weights)
        if self.vocab is not None:
            (d / "vocab.json").write_text(json.dumps(self.vocab) + "\n", "utf-8")
        return d

    @classmethod
    def load(cls, directory: str | Path) -> "ScorerModelHandle":
        d = Path(directory)
        manifest = json.loads((d / "manifest.json").read_text("utf-8"))
        with np.load(d / "weights.npz") as npz:
            weights = {k: npz[k].copy() for k in npz.files}
        vocab = None
        if manifest.get("has_vocab"):
            vocab = json.loads((d / "vocab.json").read_text("utf-8"))
        return cls(
            identifier=manifest["identifier"],
            provenance=manifest["provenance"],
            config=EncoderConfig.from_dict(manifest["config"]),
            seed=manifest["seed"],
            weights=weights,
            vocab=vocab,
            loss_history=list(manifest.get("loss_history", [])),
            dataset_hash=manifest.get("dataset_hash"),
            extra=manifest.get("extra", {}),
        )
