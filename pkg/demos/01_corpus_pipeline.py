"""Corpus cleaning, statistics, and a small masked-language-model run.

Walks the corpus path end to end on a handful of noisy articles: strip the
junk, count what survives, then pretrain a tiny encoder on the cleaned text.
"""

from foodlink.corpus import MLMConfig, RawArticle, clean_articles, clean_text, corpus_stats, mlm_pretrain

# --- cleaning ---------------------------------------------------------------

noisy = [
    RawArticle("a1", "Soil nitrogen limits maize yield. See https://journal.example.org/17"),
    RawArticle("a2", "Contact lab3@institute.example.com about the café assay results."),
    RawArticle("a3", "Crop rotation improves drought tolerance.\nREFERENCES\n[1] dropped citation"),
]

for article in noisy:
    print(f"{article.id} raw:     {article.text!r}")
    print(f"{article.id} cleaned: {clean_text(article.text)!r}\n")

# cleaning is idempotent: a second pass changes nothing
cleaned = clean_articles(noisy)
assert [clean_text(a.text) for a in cleaned] == [a.text for a in cleaned]

# --- statistics -------------------------------------------------------------

stats = corpus_stats(cleaned)
print(f"articles:   {stats.article_count}")
print(f"tokens:     {stats.token_count} (whitespace-delimited, cleaned text)")
print(f"vocabulary: {stats.vocab_size} distinct lowercased tokens")
print(f"bytes:      {stats.byte_size}\n")

# --- masked-language-model pretraining --------------------------------------

# a slightly larger synthetic corpus so the model has something to chew on
base = "maize yield responds to soil nitrogen and crop rotation under drought stress "
articles = [RawArticle(f"syn{i}", base * 8) for i in range(20)]

handle = mlm_pretrain(articles, MLMConfig(mask_fraction=0.15, epochs=3, seed=0, model_size="tiny"))
print("MLM loss by epoch:", [round(loss, 3) for loss in handle.loss_history])
print("handle:", handle.identifier, f"({handle.provenance})")
assert handle.loss_history[-1] < handle.loss_history[0]
