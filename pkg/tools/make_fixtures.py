#!/usr/bin/env python3
"""Regenerate the packaged fixture assets under src/advtox/data/.

Deterministic (fixed seeds). Corpora are built from class-agnostic sentence
skeletons with one charged-word slot, so filler vocabulary is class-balanced
and only the charged words (and their bigrams) carry label signal. Toxic
charged words come in synonym families; the family members beyond the corpus
word exist only in the embedding store and synonym lexicon, which is what
gives word-swap attacks their room to move.

Run from the repo root:  python tools/make_fixtures.py
"""

from __future__ import annotations

import csv
import random
from pathlib import Path

import numpy as np

DATA = Path(__file__).resolve().parent.parent / "src" / "advtox" / "data"

# family -> (tag, [corpus word, synonym...]); the corpus word appears in text,
# the rest only in the embedding store / lexicon.
FAMILIES: dict[str, tuple[str, list[str]]] = {
    # offensive adjectives
    "stupid": ("ADJ", ["stupid", "dumb", "idiotic", "moronic", "dense", "brainless"]),
    "pathetic": ("ADJ", ["pathetic", "pitiful", "lame", "woeful", "dismal", "feeble"]),
    "disgusting": ("ADJ", ["disgusting", "gross", "vile", "foul", "nasty", "repulsive"]),
    "worthless": ("ADJ", ["worthless", "useless", "hopeless", "inept", "incompetent"]),
    "annoying": ("ADJ", ["annoying", "irritating", "grating", "insufferable", "tiresome"]),
    # offensive nouns
    "idiot": ("NOUN", ["idiot", "moron", "imbecile", "dunce", "simpleton", "halfwit"]),
    "loser": ("NOUN", ["loser", "failure", "reject", "flop", "washout", "deadbeat"]),
    "clown": ("NOUN", ["clown", "buffoon", "joker", "jester", "goofball"]),
    "trash": ("NOUN", ["trash", "garbage", "rubbish", "junk", "refuse"]),
    # hate adjectives / nouns / verbs
    "inferior": ("ADJ", ["inferior", "lesser", "subpar", "substandard", "inadequate"]),
    "degenerate": ("ADJ", ["degenerate", "depraved", "debased", "corrupt", "rotten"]),
    "vermin": ("NOUN", ["vermin", "parasites", "pests", "leeches", "cockroaches"]),
    "scum": ("NOUN", ["scum", "lowlifes", "dregs", "riffraff", "filth"]),
    "despise": ("VERB", ["despise", "loathe", "detest", "abhor", "resent"]),
    "banish": ("VERB", ["banish", "expel", "purge", "oust", "eject"]),
    # multilabel-only families
    "filthy": ("ADJ", ["filthy", "grimy", "squalid", "grubby", "mucky"]),
    "lewd": ("ADJ", ["lewd", "smutty", "raunchy", "bawdy", "indecent"]),
    "wreck": ("VERB", ["wreck", "smash", "crush", "demolish", "flatten"]),
}

OFF_ADJ = ["stupid", "pathetic", "disgusting", "worthless", "annoying"]
OFF_NOUN = ["idiot", "loser", "clown", "trash"]
HATE_ADJ = ["inferior", "degenerate"]
HATE_NOUN = ["vermin", "scum"]
HATE_VERB = ["despise", "banish"]

BENIGN_ADJ = ["wonderful", "kind", "lovely", "brilliant", "generous", "delightful",
              "charming", "thoughtful", "helpful", "friendly", "pleasant", "cheerful",
              "supportive", "gracious"]
BENIGN_NOUN = ["gem", "hero", "legend", "star", "champion", "treasure", "sweetheart"]
BENIGN_VERB = ["love", "adore", "cherish", "appreciate", "admire"]

# skeletons: {A}=adjective slot, {N}=noun slot, {V}=verb slot
ADJ_SKELETONS = [
    "you are a truly {A} person and everyone here knows it",
    "what a {A} comment honestly this whole thread noticed it",
    "my neighbor keeps being {A} about every single topic lately",
    "that was a really {A} thing to post in here",
    "this is the most {A} take anyone has shared today",
    "your latest reply sounds {A} and people can clearly tell",
    "every message you write comes across {A} beyond any doubt",
    "the moderators think your posting style is {A} most days",
]
NOUN_SKELETONS = [
    "only a real {N} would post this comment in here",
    "you {N} nobody wants to read another reply from you",
    "that {N} keeps writing the same message every single day",
    "imagine being the kind of {N} who argues like this",
    "this forum attracts one {N} after another every single week",
    "some {N} downvoted my careful post again this very morning",
]
VERB_SKELETONS = [
    "i {V} this entire community and everything it stands for",
    "honestly we {V} people like you around here every day",
    "they openly {V} the newcomers who join this group lately",
]

#  neutral openers, drawn independently of the class so they stay balanced
PREFIXES = ["", "well", "look", "listen", "frankly", "seriously", "again",
            "folks", "wow", "right", "fine", "sure"]

IDENTITY_GROUPS = ["male", "female", "black", "white", "heterosexual", "homosexual"]

MULTILABEL = {
    # label -> families whose corpus word triggers it
    "obscene": ["filthy"],
    "insult": ["stupid", "pathetic", "idiot", "loser"],
    "threat": ["wreck"],
    "identity_attack": ["vermin", "scum", "inferior"],
    "sexual_explicit": ["lewd"],
}

STOPWORDS = """a about after again all am an and any are as at be because been
before being between both but by could did do does down during each few for
from further had has have he her here hers him his how i if in into is it its
me more most my no nor not of off on once only or other our ours out over own
same she so some such than that the their theirs them then there these they
this those through to too under until up very was we were what when where
which while who whom why will with you your yours""".split()

HOMOGLYPHS = {
    "a": "@", "b": "8", "c": "с", "e": "3", "g": "9", "i": "1",
    "l": "1ⅼ", "o": "0", "s": "5", "t": "7", "z": "2",
    "0": "O", "1": "l",
}

KEYBOARD_ROWS = ["qwertyuiop", "asdfghjkl", "zxcvbnm", "1234567890"]


def keyboard_map() -> dict[str, str]:
    out: dict[str, str] = {}
    for row in KEYBOARD_ROWS:
        for i, ch in enumerate(row):
            neighbors = ""
            if i > 0:
                neighbors += row[i - 1]
            if i + 1 < len(row):
                neighbors += row[i + 1]
            out[ch] = neighbors
    return out


def fill(skeleton: str, word: str, rng: random.Random | None = None) -> str:
    body = (skeleton.replace("{A}", word).replace("{N}", word)
            .replace("{V}", word))
    if rng is None:
        return body
    prefix = rng.choice(PREFIXES)
    return f"{prefix} {body}" if prefix else body


def pick_skeleton(rng: random.Random, tag: str) -> str:
    if tag == "ADJ":
        return rng.choice(ADJ_SKELETONS)
    if tag == "NOUN":
        return rng.choice(NOUN_SKELETONS)
    return rng.choice(VERB_SKELETONS)


def benign_word(rng: random.Random, tag: str) -> str:
    pool = {"ADJ": BENIGN_ADJ, "NOUN": BENIGN_NOUN, "VERB": BENIGN_VERB}[tag]
    return rng.choice(pool)


def toxic_word(rng: random.Random, families: list[str]) -> tuple[str, str]:
    family = rng.choice(families)
    tag, words = FAMILIES[family]
    return words[0], tag


def make_multiclass(rng: random.Random):
    rows: list[tuple[str, str]] = []
    seen: set[str] = set()

    def add(text: str, label: str) -> bool:
        if text in seen:
            return False
        seen.add(text)
        rows.append((text, label))
        return True

    while sum(1 for _, l in rows if l == "benign") < 250:
        tag = rng.choice(["ADJ", "ADJ", "NOUN", "VERB"])
        add(fill(pick_skeleton(rng, tag), benign_word(rng, tag), rng), "benign")
    while sum(1 for _, l in rows if l == "offensive") < 125:
        word, tag = toxic_word(rng, OFF_ADJ + OFF_NOUN)
        add(fill(pick_skeleton(rng, tag), word, rng), "offensive")
    while sum(1 for _, l in rows if l == "hate") < 125:
        word, tag = toxic_word(rng, HATE_ADJ + HATE_NOUN + HATE_VERB)
        add(fill(pick_skeleton(rng, tag), word, rng), "hate")
    rng.shuffle(rows)
    return rows, seen


def make_seeds(rng: random.Random, exclude: set[str], count: int = 50):
    rows: list[tuple[str, str]] = []
    seen: set[str] = set(exclude)
    while len(rows) < count:
        if len(rows) % 2 == 0:
            word, tag = toxic_word(rng, OFF_ADJ + OFF_NOUN)
            label = "offensive"
        else:
            word, tag = toxic_word(rng, HATE_ADJ + HATE_NOUN + HATE_VERB)
            label = "hate"
        text = fill(pick_skeleton(rng, tag), word, rng)
        if text in seen:
            continue
        seen.add(text)
        rows.append((text, label))
    return rows


def make_multilabel(rng: random.Random):
    labels = list(MULTILABEL)
    rows: list[tuple[str, dict[str, int]]] = []
    seen: set[str] = set()

    def add(text: str, flags: dict[str, int]) -> bool:
        if text in seen:
            return False
        seen.add(text)
        rows.append((text, flags))
        return True

    while sum(1 for _, f in rows if not any(f.values())) < 300:
        tag = rng.choice(["ADJ", "ADJ", "NOUN", "VERB"])
        add(fill(pick_skeleton(rng, tag), benign_word(rng, tag), rng),
            {l: 0 for l in labels})
    while sum(1 for _, f in rows if sum(f.values()) == 1) < 150:
        label = rng.choice(labels)
        word, tag = toxic_word(rng, MULTILABEL[label])
        flags = {l: int(l == label) for l in labels}
        add(fill(pick_skeleton(rng, tag), word, rng), flags)
    while sum(1 for _, f in rows if sum(f.values()) == 2) < 50:
        l1, l2 = rng.sample(labels, 2)
        w1, t1 = toxic_word(rng, MULTILABEL[l1])
        w2, t2 = toxic_word(rng, MULTILABEL[l2])
        text = fill(pick_skeleton(rng, t1), w1) + " and " + fill(pick_skeleton(rng, t2), w2)
        flags = {l: int(l in (l1, l2)) for l in labels}
        add(text, flags)
    rng.shuffle(rows)
    return rows


def make_bias(rng: random.Random):
    rows = []
    for group in IDENTITY_GROUPS:
        for _ in range(30):
            adj = rng.choice(BENIGN_ADJ)
            text = f"as a {group} member i find this community truly {adj}"
            rows.append((text, "benign", group))
        for _ in range(10):
            word, tag = toxic_word(rng, HATE_NOUN + HATE_ADJ)
            if tag == "NOUN":
                text = f"{group} people are complete {word} and everyone should know"
            else:
                text = f"{group} people are simply {word} and always will be"
            rows.append((text, "toxic", group))
    for _ in range(80):
        tag = rng.choice(["ADJ", "NOUN", "VERB"])
        rows.append((fill(pick_skeleton(rng, tag), benign_word(rng, tag), rng), "benign", None))
    for _ in range(80):
        word, tag = toxic_word(rng, OFF_ADJ + OFF_NOUN)
        rows.append((fill(pick_skeleton(rng, tag), word, rng), "toxic", None))
    rng.shuffle(rows)
    return rows


def make_embeddings(seed: int = 7, dim: int = 48):
    rng = np.random.default_rng(seed)
    vectors: dict[str, np.ndarray] = {}
    centers = {}
    for family, (_tag, words) in FAMILIES.items():
        c = rng.standard_normal(dim)
        c /= np.linalg.norm(c)
        centers[family] = c
        for word in words:
            u = rng.standard_normal(dim)
            u /= np.linalg.norm(u)
            v = c + 0.12 * u
            vectors[word] = v / np.linalg.norm(v)
    # sanity: tight clusters, well-separated families
    names = list(centers)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            assert abs(float(centers[a] @ centers[b])) < 0.45, (a, b)
    for family, (_tag, words) in FAMILIES.items():
        for w in words:
            assert float(vectors[w] @ centers[family]) > 0.9, (family, w)
    return vectors


def write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240)

    multiclass, seen = make_multiclass(random.Random(101))
    write_csv(DATA / "corpus_multiclass.csv", ["text", "label"], multiclass)

    seeds = make_seeds(random.Random(202), seen)
    write_csv(DATA / "seeds_toxic_50.csv", ["text", "label"], seeds)

    multilabel = make_multilabel(random.Random(303))
    labels = list(MULTILABEL)
    write_csv(DATA / "corpus_multilabel.csv", ["text", *labels],
              [[text, *[flags[l] for l in labels]] for text, flags in multilabel])

    bias = make_bias(random.Random(404))
    write_csv(DATA / "corpus_bias.csv",
              ["text", "label", *[f"identity_{g}" for g in IDENTITY_GROUPS]],
              [[text, label, *[int(group == g) for g in IDENTITY_GROUPS]]
               for text, label, group in bias])

    vectors = make_embeddings()
    with (DATA / "embeddings.txt").open("w", encoding="utf-8") as fh:
        for word in sorted(vectors):
            comps = " ".join(f"{x:.6f}" for x in vectors[word])
            fh.write(f"{word} {comps}\n")

    with (DATA / "synonyms.tsv").open("w", encoding="utf-8") as fh:
        for family, (_tag, words) in sorted(FAMILIES.items()):
            fh.write(f"{words[0]}\t{','.join(words[1:5])}\n")

    with (DATA / "pos.tsv").open("w", encoding="utf-8") as fh:
        entries = {}
        for _family, (tag, words) in sorted(FAMILIES.items()):
            for word in words:
                entries.setdefault(word, tag)
        for word, tag in sorted(entries.items()):
            fh.write(f"{word}\t{tag}\n")

    (DATA / "stopwords.txt").write_text(
        "\n".join(sorted(set(STOPWORDS))) + "\n", encoding="utf-8")

    with (DATA / "homoglyphs.tsv").open("w", encoding="utf-8") as fh:
        for ch, variants in sorted(HOMOGLYPHS.items()):
            fh.write(f"{ch}\t{variants}\n")

    with (DATA / "keyboard.tsv").open("w", encoding="utf-8") as fh:
        for ch, variants in sorted(keyboard_map().items()):
            fh.write(f"{ch}\t{variants}\n")

    del rng
    print(f"fixtures written to {DATA}")


if __name__ == "__main__":
    main()
