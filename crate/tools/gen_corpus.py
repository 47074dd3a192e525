#!/usr/bin/env python3
"""Generates the bundled tiny corpus (data/tiny/{train,valid,test}.txt).

The text is templated English-like prose with enough sequential structure
that a small recurrent model decisively beats a unigram baseline:

* documents stick to one topic for a stretch of sentences, and each topic
  owns its nouns/verbs/adjectives, so earlier words predict later ones;
* nouns carry preferred adjectives and verbs select their objects, giving
  strong local collocations;
* slot fillers are drawn with Zipf-like weights, so the vocabulary has the
  usual long-tailed frequency profile.

Deterministic for a fixed seed; run from the repository root:

    python3 tools/gen_corpus.py
"""

import random
from pathlib import Path

SEED = 20240811
OUT_DIR = Path(__file__).resolve().parent.parent / "data" / "tiny"

TRAIN_TOKENS = 85_000
VALID_TOKENS = 7_000
TEST_TOKENS = 8_000

NUM_TOPICS = 8
NOUNS_PER_TOPIC = 52
VERBS_PER_TOPIC = 26
ADJS_PER_TOPIC = 16
SHARED_NOUNS = 30
SHARED_VERBS = 16
ADVERBS = 18

DETERMINERS = ["the", "a", "this", "that", "each", "another"]
PREPOSITIONS = ["in", "on", "near", "under", "behind", "beside", "through", "across"]
CONJUNCTIONS = ["and", "but", "while", "because"]
PRONOUNS = ["it", "she", "he", "they"]

ONSETS = ["b", "br", "c", "cl", "d", "dr", "f", "fl", "g", "gr", "h", "j",
          "k", "l", "m", "n", "p", "pl", "pr", "r", "s", "sk", "sl", "sp",
          "st", "t", "tr", "v", "w", "z"]
NUCLEI = ["a", "e", "i", "o", "u", "ai", "ea", "ou", "or", "ar", "el", "in", "on"]
CODAS = ["", "n", "r", "l", "s", "t", "k", "m", "nd", "rn", "sk", "th"]
SUFFIX = {"noun": ["", "", "er", "ing"], "verb": ["s", "ed", "es"], "adj": ["y", "ish", "al", "ic"]}


def make_words(rng, kind, count, taken):
    words = []
    while len(words) < count:
        w = rng.choice(ONSETS) + rng.choice(NUCLEI) + rng.choice(CODAS)
        if rng.random() < 0.55:
            w += rng.choice(ONSETS) + rng.choice(NUCLEI) + rng.choice(CODAS)
        w += rng.choice(SUFFIX[kind])
        if 3 <= len(w) <= 12 and w not in taken:
            taken.add(w)
            words.append(w)
    return words


def zipf_weights(n, s=1.05):
    return [1.0 / (r + 2.0) ** s for r in range(n)]


class Pick:
    """Zipf-weighted chooser over a fixed word list."""

    def __init__(self, rng, words):
        self.rng = rng
        self.words = words
        self.weights = zipf_weights(len(words))

    def __call__(self, subset=None):
        ws = self.words if subset is None else subset
        wt = self.weights[: len(ws)]
        return self.rng.choices(ws, weights=wt, k=1)[0]


def build_world(rng):
    taken = set(DETERMINERS + PREPOSITIONS + CONJUNCTIONS + PRONOUNS)
    shared_nouns = make_words(rng, "noun", SHARED_NOUNS, taken)
    shared_verbs = make_words(rng, "verb", SHARED_VERBS, taken)
    adverbs = make_words(rng, "adj", ADVERBS, taken)
    topics = []
    for _ in range(NUM_TOPICS):
        nouns = make_words(rng, "noun", NOUNS_PER_TOPIC, taken)
        verbs = make_words(rng, "verb", VERBS_PER_TOPIC, taken)
        adjs = make_words(rng, "adj", ADJS_PER_TOPIC, taken)
        # Collocations: every noun prefers 3 adjectives; every verb selects
        # its objects from a 12-noun subset.
        adj_of = {n: rng.sample(adjs, 3) for n in nouns}
        obj_of = {v: rng.sample(nouns, 12) for v in verbs}
        topics.append({
            "nouns": nouns, "verbs": verbs, "adjs": adjs,
            "adj_of": adj_of, "obj_of": obj_of,
        })
    return {
        "topics": topics,
        "shared_nouns": shared_nouns,
        "shared_verbs": shared_verbs,
        "adverbs": adverbs,
    }


def sentence(rng, world, topic):
    noun = Pick(rng, topic["nouns"])
    verb = Pick(rng, topic["verbs"])
    det = Pick(rng, DETERMINERS)
    prep = Pick(rng, PREPOSITIONS)
    adverb = Pick(rng, world["adverbs"])
    shared_noun = Pick(rng, world["shared_nouns"])
    shared_verb = Pick(rng, world["shared_verbs"])

    def np(head=None):
        n = head if head is not None else noun()
        out = [det()]
        if rng.random() < 0.45:
            out.append(rng.choice(topic["adj_of"][n]) if n in topic["adj_of"]
                       else adverb())
        out.append(n)
        return out

    def vp():
        v = verb()
        obj = rng.choice(topic["obj_of"][v])
        out = [v]
        if rng.random() < 0.25:
            out.insert(0, adverb())
        out += np(obj)
        if rng.random() < 0.3:
            out += [prep(), *np(shared_noun())]
        return out

    shape = rng.random()
    if shape < 0.55:
        words = np() + vp()
    elif shape < 0.75:
        words = np() + vp() + [rng.choice(CONJUNCTIONS)] + np() + vp()
    elif shape < 0.9:
        words = [rng.choice(PRONOUNS), shared_verb()] + np() + [prep(), *np()]
    else:
        words = [prep(), *np()] + [","] + np() + vp()
    return words


def stream(rng, world, budget):
    lines = []
    tokens = 0
    while tokens < budget:
        topic = rng.choice(world["topics"])
        for _ in range(rng.randint(4, 12)):  # one topic-coherent paragraph
            words = sentence(rng, world, topic)
            tokens += len(words) + 1  # sentence boundary costs one token
            lines.append(" ".join(words))
            if tokens >= budget:
                break
    return "\n".join(lines) + "\n"


def main():
    rng = random.Random(SEED)
    world = build_world(rng)
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    splits = [("train.txt", TRAIN_TOKENS), ("valid.txt", VALID_TOKENS), ("test.txt", TEST_TOKENS)]
    vocab = set()
    for name, budget in splits:
        text = stream(rng, world, budget)
        (OUT_DIR / name).write_text(text)
        n_tokens = sum(len(l.split()) + 1 for l in text.splitlines())
        vocab.update(w for l in text.splitlines() for w in l.split())
        print(f"{name}: {n_tokens} tokens (incl. sentence ends)")
    print(f"distinct words across splits: {len(vocab)}")


if __name__ == "__main__":
    main()
