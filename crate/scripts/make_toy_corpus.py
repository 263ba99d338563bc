#!/usr/bin/env python3
"""Writes data/toy_corpus.txt and data/toy_labels.txt.

Short synthetic messages, label 1 for mildly insulting ones and 0 for neutral
ones. Output is fully determined by SEED.
"""
import pathlib
import random

SEED = 20211016
N = 160

INSULTS = ["idiot", "clown", "loser", "moron"]
OPENERS = ["you are such a", "what a", "only a", "stop acting like a", "honestly a", "typical", "look at this", "nobody likes a"]
NEUTRAL_TOPICS = ["weather", "train", "coffee", "match", "concert", "garden", "library", "recipe"]
NEUTRAL_FRAMES = [
    "the {t} was great today",
    "looking forward to the {t} this weekend",
    "anyone know a good {t} nearby",
    "the {t} starts at noon",
    "just finished reading about the {t}",
    "my {t} plans changed again",
]
SHARED = ["today", "again", "really", "lol", "this weekend", "at noon"]


def insult(rng):
    word = rng.choice(INSULTS)
    text = f"{rng.choice(OPENERS)} {word}"
    if rng.random() < 0.5:
        text += f" {rng.choice(SHARED)}"
    if rng.random() < 0.3:
        text += f" at the {rng.choice(NEUTRAL_TOPICS)}"
    return text


def neutral(rng):
    text = rng.choice(NEUTRAL_FRAMES).format(t=rng.choice(NEUTRAL_TOPICS))
    if rng.random() < 0.3:
        text += f" {rng.choice(SHARED)}"
    # A few neutral messages reuse insult vocabulary so that the keyword
    # signal is informative but not perfect.
    if rng.random() < 0.08:
        text += f" said the {rng.choice(INSULTS)} in the movie"
    return text


def main():
    rng = random.Random(SEED)
    docs, labels = [], []
    for _ in range(N):
        label = 1 if rng.random() < 0.35 else 0
        docs.append(insult(rng) if label else neutral(rng))
        labels.append(label)
    root = pathlib.Path(__file__).resolve().parent.parent / "data"
    root.mkdir(exist_ok=True)
    (root / "toy_corpus.txt").write_text("\n".join(docs) + "\n")
    (root / "toy_labels.txt").write_text("\n".join(map(str, labels)) + "\n")


if __name__ == "__main__":
    main()
