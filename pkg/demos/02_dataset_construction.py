"""Building the extended answer-selection dataset.

Each product description (the question) gets its one correct taxonomy
description plus R randomly sampled incorrect ones, labeled True/False,
then the whole thing is split by question into a small train set and a
large test set.
"""

from foodlink.qadataset import Answer, Question, build_extended_dataset, split_dataset

pool = [
    Answer("usda-1", "sugar, white, granulated or lump"),
    Answer("usda-2", "salsa, red, commercially-prepared"),
    Answer("usda-3", "cookie-crisp"),
    Answer("usda-4", "yogurt, plain, low fat"),
    Answer("usda-5", "bread, whole wheat"),
    Answer("usda-6", "cheddar cheese"),
]
gold = [
    (Question("upc-1", "domino white sugar granulated 1lb"), pool[0]),
    (Question("upc-2", "yoplait original harvest peach yogurt low fat"), pool[3]),
    (Question("upc-3", "great value whole wheat sandwich bread 20oz"), pool[4]),
]

ds = build_extended_dataset(gold, pool, R=2, seed=7)

print(f"{'question':42s} {'candidate answer':38s} label")
for q in ds.questions:
    for pair in ds.pairs_for(q.id):
        print(f"{q.text:42s} {ds.answer(pair.answer_id).text:38s} {pair.label}")
    print()

# sampling is uniform over the incorrect answers and reproducible per seed
again = build_extended_dataset(gold, pool, R=2, seed=7)
assert again.pairs == ds.pairs

train, test = split_dataset(ds, train_fraction=0.34, seed=7)
print("train questions:", [q.id for q in train.questions])
print("test questions: ", [q.id for q in test.questions])
