#!/usr/bin/env python3
"""Generate the bundled desk-scale labelled review corpus.

Writes data/reviews/<doc_id>.txt and data/reviews/labels.csv. Output is a
pure function of the seed, so the committed corpus can be regenerated
byte for byte.
"""

import argparse
import csv
import random
from pathlib import Path

POSITIVE = """
superb wonderful brilliant excellent delightful moving charming gripping
masterful touching stunning beautiful clever witty engaging memorable
heartfelt inspired elegant thrilling hilarious lovely powerful rich
fresh vivid graceful remarkable splendid tender uplifting compelling
captivating enjoyable fantastic gorgeous joyful magnificent marvelous
outstanding perfect riveting satisfying sublime terrific warm wise
amazing breathtaking dazzling exquisite flawless glorious haunting
impressive luminous poignant radiant refreshing sharp smart
""".split()

NEGATIVE = """
awful terrible dreadful boring tedious clumsy dull lifeless shallow
bland messy pointless predictable stale tiresome weak wooden annoying
confusing disappointing forgettable hollow incoherent lazy mediocre
painful pretentious sloppy tasteless ugly unfunny uneven unwatchable
wasted worthless absurd bloated cheap clueless dismal embarrassing
flat grating inept insipid irritating joyless laughable limp listless
muddled plodding poor ridiculous silly sluggish trite vapid
""".split()

COMMON = """
the and of to in it is that this film movie with as for was on but
its are one story about by at from an be has his her they who which
""".split()

SYLLABLES = """
ka ri mo te lu sa ne vo pa di ro mi zu ta le no fi ga hu be ko ya
se dra tor vin mel cas pen lor bri gan sul fet tam quo rix bel dun
""".split()


def pseudo_words(rng, count):
    words = set()
    while len(words) < count:
        words.add("".join(rng.choice(SYLLABLES) for _ in range(rng.randint(2, 3))))
    return sorted(words)


def zipf_weights(size, exponent):
    return [1.0 / (rank + 1) ** exponent for rank in range(size)]


def make_document(rng, label, neutral, weights):
    length = rng.randint(200, 400)
    own, other = (POSITIVE, NEGATIVE) if label == 1 else (NEGATIVE, POSITIVE)
    # Each sentiment word class has its own popularity profile.
    tokens = []
    for _ in range(length):
        u = rng.random()
        if u < 0.04:
            tokens.append(own[min(int(rng.expovariate(1 / 12)), len(own) - 1)])
        elif u < 0.055:
            tokens.append(other[min(int(rng.expovariate(1 / 12)), len(other) - 1)])
        elif u < 0.25:
            tokens.append(rng.choice(COMMON))
        else:
            tokens.append(rng.choices(neutral, weights)[0])
    sentences = []
    i = 0
    while i < len(tokens):
        step = rng.randint(8, 16)
        chunk = tokens[i : i + step]
        chunk[0] = chunk[0].capitalize()
        sentences.append(" ".join(chunk) + ".")
        i += step
    return " ".join(sentences) + "\n"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "reviews")
    parser.add_argument("--docs", type=int, default=1000)
    parser.add_argument("--neutral", type=int, default=4000)
    parser.add_argument("--seed", type=int, default=20181)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    neutral = pseudo_words(rng, args.neutral)
    rng.shuffle(neutral)
    weights = zipf_weights(len(neutral), 0.6)

    args.out.mkdir(parents=True, exist_ok=True)
    for old in args.out.glob("*.txt"):
        old.unlink()
    rows = []
    for i in range(args.docs):
        label = i % 2
        doc_id = f"r{i:04d}"
        (args.out / f"{doc_id}.txt").write_text(make_document(rng, label, neutral, weights))
        rows.append((doc_id, label))
    with open(args.out / "labels.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["doc_id", "label"])
        writer.writerows(rows)
    print(f"wrote {len(rows)} documents to {args.out}")


if __name__ == "__main__":
    main()
