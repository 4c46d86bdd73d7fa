"""Command-line pipeline driver.

One declarative JSON config file feeds every subcommand; seeds come only
from the config (or the --seed override), never from the clock, so reruns
with the same config, seeds, and cassettes produce byte-identical reports.
Each command writes its artifacts plus a manifest recording input/output
hashes and the config fingerprint.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__, corpus, cuisine, evaluation, gpt_rank, qadataset, scorer
from .knowledge import HttpLinkerClient, Ontology, StaticLinkerClient
from .llm_augment import CassetteChatClient, ChatClientConfig, HttpChatClient
from .model_store import EncoderConfig, ScorerModelHandle
from .textutil import sha256_hex


class ConfigError(ValueError):
    pass


def load_config(path: str | Path, seed_override: int | None = None,
                out_override: str | None = None) -> dict:
    try:
        config = json.loads(Path(path).read_text("utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if seed_override is not None:
        config["seed"] = seed_override
    if out_override is not None:
        config["out_dir"] = out_override
    config.setdefault("seed", 0)
    if "out_dir" not in config:
        raise ConfigError("config needs an out_dir (or pass --out)")
    return config


def config_fingerprint(config: dict) -> str:
    return sha256_hex(json.dumps(config, sort_keys=True, default=str))


def _file_hash(path: Path) -> str:
    return sha256_hex(path.read_bytes())


def write_manifest(command: str, config: dict, inputs: list[Path], outputs: list[Path]) -> Path:
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "version": __version__,
        "config_fingerprint": config_fingerprint(config),
        "seed": config["seed"],
        "inputs": {str(p): _file_hash(Path(p)) for p in inputs if Path(p).is_file()},
        "outputs": {str(p): _file_hash(Path(p)) for p in outputs},
        "timestamp": time.time(),
    }
    path = out_dir / f"{command}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8")
    return path


# ---------------------------------------------------------------------------
# wiring helpers
# ---------------------------------------------------------------------------

def _require(config: dict, section: str) -> dict:
    if section not in config:
        raise ConfigError(f"config is missing the {section!r} section")
    return config[section]


def build_chat_client(config: dict):
    chat = config.get("chat") or {}
    cassette = chat.get("cassette")
    inner = None
    if chat.get("endpoint"):
        inner = HttpChatClient(
            ChatClientConfig(
                endpoint=chat["endpoint"],
                model_name=chat.get("model_name", "gpt-3.5-turbo"),
                credential_env_var=chat.get("credential_env_var", "CHAT_API_KEY"),
                timeout=float(chat.get("timeout", 30.0)),
                max_retries=int(chat.get("max_retries", 2)),
            )
        )
    if cassette is None and inner is None:
        raise ConfigError("chat section needs an endpoint, a cassette, or both")
    if cassette is not None:
        return CassetteChatClient(cassette, inner=inner,
                                  model_name=chat.get("model_name", "gpt-3.5-turbo"))
    return inner


def build_plan(config: dict) -> scorer.AugmentationPlan:
    aug = config.get("augmentation") or {"plan": "none"}
    kind = aug.get("plan", "none")
    if kind == "none":
        return scorer.AugmentationPlan()
    if kind == "ontology":
        if "ontology" not in aug:
            raise ConfigError("ontology plan needs an 'ontology' path")
        return scorer.AugmentationPlan(
            kind="ontology", n=int(aug.get("n", 1)), ontology=Ontology.load(aug["ontology"])
        )
    if kind == "linker":
        linker_cfg = aug.get("linker") or {}
        if "fixture" in linker_cfg:
            client = StaticLinkerClient.from_json(linker_cfg["fixture"])
        elif "endpoint" in linker_cfg:
            client = HttpLinkerClient(linker_cfg["endpoint"], timeout=float(linker_cfg.get("timeout", 10.0)))
        else:
            raise ConfigError("linker plan needs a 'linker' endpoint or fixture")
        return scorer.AugmentationPlan(kind="linker", n=int(aug.get("n", 1)), linker=client)
    if kind in ("llm_p1", "llm_p2"):
        return scorer.AugmentationPlan(
            kind=kind,
            d=int(aug.get("d", 3)),
            chat=build_chat_client(config),
            llm_applies_to_answers=bool(aug.get("applies_to_answers", False)),
        )
    raise ConfigError(f"invalid augmentation plan name {kind!r}")


def _build_dataset_from_sources(config: dict) -> qadataset.ExtendedDataset:
    section = _require(config, "dataset")
    gold = qadataset.load_gold_pairs(section["gold"])
    pool = qadataset.load_answer_pool(section["pool"])
    return qadataset.build_extended_dataset(gold, pool, R=int(section.get("R", 9)), seed=config["seed"])


def _load_or_build_dataset(config: dict) -> qadataset.ExtendedDataset:
    section = _require(config, "dataset")
    if "file" in section:
        return qadataset.load_dataset(section["file"])
    return _build_dataset_from_sources(config)


def _dataset_input_paths(config: dict) -> list[Path]:
    section = config.get("dataset") or {}
    return [Path(section[k]) for k in ("file", "gold", "pool") if k in section]


def _split(config: dict, ds: qadataset.ExtendedDataset):
    fraction = float(config.get("dataset", {}).get("train_fraction", 0.2))
    return qadataset.split_dataset(ds, fraction, config["seed"])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_corpus_stats(config: dict) -> int:
    section = _require(config, "corpus")
    articles = corpus.load_articles(section["path"])
    cleaned = corpus.clean_articles(articles)
    stats = corpus.corpus_stats(cleaned)
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    report = out_dir / "corpus_stats.json"
    corpus.save_stats(stats, report)
    write_manifest("corpus-stats", config, [Path(section["path"])], [report])
    print(f"corpus stats written to {report}")
    return 0


def cmd_build_dataset(config: dict) -> int:
    section = _require(config, "dataset")
    ds = _build_dataset_from_sources(config)
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "dataset.tsv"
    qadataset.save_dataset(ds, out_path)
    inputs = [Path(section[k]) for k in ("gold", "pool") if k in section]
    write_manifest("build-dataset", config, inputs, [out_path])
    print(f"dataset with {len(ds.questions)} questions (R={ds.R}) written to {out_path}")
    return 0


def _base_model(config: dict) -> ScorerModelHandle:
    train_cfg = config.get("train") or {}
    if "from_model" in train_cfg:
        return ScorerModelHandle.load(train_cfg["from_model"])
    preset = train_cfg.get("model_size", "small")
    return scorer.new_model(EncoderConfig.preset(preset), seed=config["seed"])


def cmd_train(config: dict) -> int:
    train_cfg = config.get("train") or {}
    ds = _load_or_build_dataset(config)
    train_ds, _ = _split(config, ds)
    plan = build_plan(config)
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    dump_path = out_dir / "training_dump.jsonl"
    tuned = scorer.fine_tune(
        _base_model(config),
        train_ds,
        augmentation=plan,
        epochs=int(train_cfg.get("epochs", 10)),
        seed=config["seed"],
        dump_path=dump_path,
        train_config=scorer.TrainConfig(
            batch_size=int(train_cfg.get("batch_size", 8)),
            learning_rate=float(train_cfg.get("learning_rate", 3e-3)),
        ),
    )
    model_dir = tuned.save(out_dir / "model")
    outputs = [dump_path, model_dir / "manifest.json", model_dir / "weights.npz"]
    write_manifest("train", config, _dataset_input_paths(config), outputs)
    print(f"model {tuned.identifier} ({tuned.provenance}, plan={plan.kind}) saved to {model_dir}")
    return 0


def cmd_evaluate(config: dict) -> int:
    eval_cfg = config.get("evaluate") or {}
    model_dir = eval_cfg.get("model_dir", str(Path(config["out_dir"]) / "model"))
    model = ScorerModelHandle.load(model_dir)
    ds = _load_or_build_dataset(config)
    _, test_ds = _split(config, ds)
    plan = build_plan(config)
    report = evaluation.evaluate_scorer(model, test_ds, plan)
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "eval_report.json"
    evaluation.save_report(
        report,
        out_path,
        fingerprint={
            "model": model.identifier,
            "provenance": model.provenance,
            "augmentation": plan.describe(),
            "R": ds.R,
            "seed": config["seed"],
        },
    )
    inputs = [Path(model_dir) / "weights.npz"] + _dataset_input_paths(config)
    write_manifest("evaluate", config, inputs, [out_path])
    print(f"MAP {report.map:.4f}  P@1 {report.p_at_1:.4f}  -> {out_path}")
    return 0


def cmd_llm_baseline(config: dict) -> int:
    baseline_cfg = config.get("llm_baseline") or {}
    ds = _load_or_build_dataset(config)
    client = build_chat_client(config)
    report, log = gpt_rank.evaluate_llm_ranker(
        ds, client, sample_size=int(baseline_cfg.get("sample_size", 100)), seed=config["seed"]
    )
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "llm_baseline_report.json"
    payload = {
        "map": report.map,
        "p_at_1": report.p_at_1,
        "failures": report.failures,
        "per_question": list(report.per_question),
        "responses": log,
        "fingerprint": {"seed": config["seed"], "sample_size": baseline_cfg.get("sample_size", 100)},
    }
    out_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")
    inputs = _dataset_input_paths(config)
    cassette = (config.get("chat") or {}).get("cassette")
    if cassette:
        inputs.append(Path(cassette))
    write_manifest("llm-baseline", config, inputs, [out_path])
    print(f"LLM baseline MAP {report.map:.4f}  P@1 {report.p_at_1:.4f}  failures {report.failures}")
    return 0


def cmd_cuisine(config: dict) -> int:
    section = _require(config, "cuisine")
    recipes = cuisine.load_recipes(section["recipes"])
    features = [cuisine.FeatureSpec(kind) for kind in section.get("features", ["tfidf", "embedding"])]
    classifiers = [
        cuisine.ClassifierSpec(kind, seed=config["seed"])
        for kind in section.get("classifiers", list(cuisine.CLASSIFIER_KINDS))
    ]
    report = cuisine.run_matrix(
        recipes,
        features,
        classifiers,
        test_fraction=float(section.get("test_fraction", 0.2)),
        seed=config["seed"],
    )
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "cuisine_report.json"
    table_path = out_dir / "cuisine_table.txt"
    cuisine.save_report(report, json_path, table_path)
    write_manifest("cuisine", config, [Path(section["recipes"])], [json_path, table_path])
    print(cuisine.format_table(report))
    return 0


COMMANDS = {
    "corpus-stats": cmd_corpus_stats,
    "build-dataset": cmd_build_dataset,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "llm-baseline": cmd_llm_baseline,
    "cuisine": cmd_cuisine,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="foodlink",
        description="Link product descriptions to nutrition-taxonomy descriptions.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="path to the JSON run config")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="override the config out_dir")
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config, seed_override=args.seed, out_override=args.out)
        return COMMANDS[args.command](config)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
