#!/usr/bin/env python3
"""Generate the bundled synthetic English -> romanized Hindi-like corpus.

The target side is verb-final (SOV) with postpositions, so phrase reordering
matters for SMT and attention matters for NMT. Output is fully determined by
--seed.
"""

import argparse
import random
from pathlib import Path

NOUNS = {
    "boy": "ladka", "girl": "ladki", "man": "aadmi", "woman": "aurat",
    "teacher": "shikshak", "farmer": "kisan", "dog": "kutta", "cat": "billi",
    "book": "kitaab", "house": "ghar", "water": "paani", "food": "khana",
    "school": "vidyalay", "market": "bazaar", "river": "nadi", "tree": "ped",
    "letter": "patra", "village": "gaon", "city": "shahar", "friend": "dost",
}
ANIMATE = ["boy", "girl", "man", "woman", "teacher", "farmer", "dog", "cat", "friend"]
OBJECTS = ["book", "water", "food", "letter", "tree", "house", "dog", "cat", "friend"]
PLACES = ["house", "school", "market", "river", "village", "city"]
ADJ = {"big": "bada", "small": "chhota", "good": "achha", "old": "purana", "new": "naya", "red": "laal"}
VT = {
    "eats": "khata hai", "reads": "padhta hai", "sees": "dekhta hai", "writes": "likhta hai",
    "buys": "kharidta hai", "drinks": "peeta hai", "likes": "pasand karta hai", "finds": "dhoondhta hai",
}
VI = {"sleeps": "sota hai", "runs": "daudta hai", "laughs": "hansta hai", "walks": "chalta hai", "sings": "gaata hai"}
ADV = {"quickly": "jaldi", "slowly": "dheere", "today": "aaj", "often": "aksar"}
PREP = {"in": "mein", "near": "ke paas"}
CONJ = {"and": "aur", "but": "lekin", "because": "kyonki"}


def noun_phrase(rng, pool, allow_adj=True):
    """Returns (english words, target words)."""
    noun = rng.choice(pool)
    if allow_adj and rng.random() < 0.35:
        adj = rng.choice(sorted(ADJ))
        return ["the", adj, noun], [ADJ[adj], NOUNS[noun]]
    return ["the", noun], [NOUNS[noun]]


def clause(rng):
    """One independent clause: (english, target, chunk tags)."""
    subj_en, subj_tg = noun_phrase(rng, ANIMATE)
    kind = rng.random()
    if kind < 0.45:
        verb = rng.choice(sorted(VT))
        obj_en, obj_tg = noun_phrase(rng, OBJECTS)
        en = subj_en + [verb] + obj_en
        tg = subj_tg + obj_tg + VT[verb].split()
        tags = ["NP", "VP", "NP"]
        if rng.random() < 0.4:
            prep = rng.choice(sorted(PREP))
            place_en, place_tg = noun_phrase(rng, PLACES, allow_adj=False)
            en += [prep] + place_en
            tg = subj_tg + place_tg + PREP[prep].split() + obj_tg + VT[verb].split()
            tags += ["PP", "NP"]
    elif kind < 0.75:
        verb = rng.choice(sorted(VI))
        adv = rng.choice(sorted(ADV))
        en = subj_en + [verb, adv]
        tg = subj_tg + [ADV[adv]] + VI[verb].split()
        tags = ["NP", "VP", "ADVP"]
    else:
        verb = rng.choice(sorted(VI))
        prep = rng.choice(sorted(PREP))
        place_en, place_tg = noun_phrase(rng, PLACES, allow_adj=False)
        en = subj_en + [verb, prep] + place_en
        tg = subj_tg + place_tg + PREP[prep].split() + VI[verb].split()
        tags = ["NP", "VP", "PP", "NP"]
    return en, tg, tags


def sentence(rng, simple):
    en, tg, tags = clause(rng)
    if not simple:
        conj = rng.choice(sorted(CONJ))
        en2, tg2, tags2 = clause(rng)
        en = en + [conj] + en2
        tg = tg + [CONJ[conj]] + tg2
        tags = tags + ["OTHER"] + tags2
    en = [en[0].capitalize()] + en[1:]
    return " ".join(en) + ".", " ".join(tg) + " .", tags


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/synthetic")
    ap.add_argument("--pairs", type=int, default=500)
    ap.add_argument("--labeled", type=int, default=400)
    ap.add_argument("--simple-fraction", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=2019)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    src, tgt, chunks, gold = [], [], [], []
    seen = set()
    while len(src) < args.pairs:
        simple = rng.random() < args.simple_fraction
        en, tg, tags = sentence(rng, simple)
        if en in seen:
            continue
        seen.add(en)
        idx = len(src) + 1
        src.append(en)
        tgt.append(tg)
        chunks.append(f"{idx}\t{' '.join(tags)}")
        gold.append(f"{idx}\t{'Simple' if simple else 'Other'}")

    # Held-out labeled chunk sequences for mining rules and training the classifier.
    lrng = random.Random(args.seed + 1)
    labeled = []
    for k in range(args.labeled):
        simple = k % 2 == 0
        _, _, tags = sentence(lrng, simple)
        labeled.append(f"{'Simple' if simple else 'Other'}\t{' '.join(tags)}")

    (out / "corpus.en").write_text("\n".join(src) + "\n", encoding="utf-8")
    (out / "corpus.hi").write_text("\n".join(tgt) + "\n", encoding="utf-8")
    (out / "chunks.tsv").write_text("\n".join(chunks) + "\n", encoding="utf-8")
    (out / "gold.tsv").write_text("\n".join(gold) + "\n", encoding="utf-8")
    (out / "labeled.tsv").write_text("\n".join(labeled) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
