"""foodlink: knowledge-infused answer selection for food description matching.

Pipeline pieces: corpus cleaning and desk-scale MLM pretraining, extended
answer-selection dataset construction, ontology/linker/LLM text augmentation,
a trainable cross-encoder pair scorer with an embedding-kNN baseline, ranking
metrics (P@1 / AP / MAP), an LLM list-ranking baseline, and a cuisine
classification harness.
"""

__version__ = "0.1.0"

from .corpus import CorpusStats, MLMConfig, RawArticle, clean_text, corpus_stats, mlm_pretrain
from .evaluation import (
    EvalReport,
    RankedList,
    average_precision,
    mean_average_precision,
    precision_at_1,
    rank_candidates,
    select_answer,
)
from .gpt_rank import ParsedRanking, RankPrompt, build_rank_prompt, evaluate_llm_ranker, parse_ranking
from .knowledge import (
    AugmentedText,
    Entity,
    Ontology,
    augment,
    extract_keywords,
    link_entities,
    query_ontology,
)
from .llm_augment import AugPromptSpec, ChatClientConfig, expand_semantics, render_aug_prompt, rephrase
from .model_store import EncoderConfig, ScorerModelHandle
from .qadataset import (
    Answer,
    ExtendedDataset,
    QAPair,
    Question,
    build_extended_dataset,
    split_dataset,
)
from .scorer import (
    AugmentationPlan,
    HashedEmbedder,
    ScoredCandidate,
    embed,
    fine_tune,
    knn_match,
    new_model,
    score_pair,
)
from .cuisine import ClassifierSpec, CuisineReport, FeatureSpec, Recipe, featurize, recipe_to_text, run_matrix, train_and_eval
