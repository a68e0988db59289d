#!/usr/bin/env python3
"""Regenerates tests/fixtures/brat: 30 valid .txt/.ann pairs, many written in
non-canonical but accepted forms, and 10 malformed pairs listed in
malformed/expected.tsv as <stem> <tab> <line> <tab> <error kind>.
"""

import argparse
import random
import re
from pathlib import Path

WORDS = ("patient douleur thoracique fièvre aspirine Doliprane œdème cœur prise "
         "gélule matin soir sœur père diabète insuline tension élevée réalisé "
         "échographie négatif 🙂 naïve Noël rénale ß-bloquant µg").split()
LABELS = ["Drug", "Symptom", "Disorder", "Anatomy", "Dose"]
ATTRS = [("is_negated", None), ("certainty", "probable"), ("is_family", None), ("severity", "high")]
RELATIONS = ["treats", "located_in", "causes"]


def make_text(rng):
    lines = []
    for _ in range(rng.randint(2, 4)):
        lines.append(" ".join(rng.choice(WORDS) for _ in range(rng.randint(6, 14))) + ".")
    return "\n".join(lines) + "\n"


def tokens(text):
    return [(m.start(), m.end()) for m in re.finditer(r"[^\s.]+", text)]


def make_entities(rng, text, count, discontinuous):
    toks = tokens(text)
    used = set()
    entities = []
    for _ in range(count):
        frag_count = rng.choice([2, 3]) if discontinuous and rng.random() < 0.5 else 1
        for _attempt in range(50):
            start = rng.randrange(len(toks) - frag_count * 2)
            picks = sorted(rng.sample(range(start, min(len(toks), start + 6)), frag_count))
            if frag_count > 1 and any(b - a < 2 for a, b in zip(picks, picks[1:])):
                continue
            if used & set(picks):
                continue
            frags = [toks[i] for i in picks]
            if any("\n" in text[a:b] for a, b in frags):
                continue
            used |= set(picks)
            entities.append({"label": rng.choice(LABELS), "frags": frags})
            break
    entities.sort(key=lambda e: e["frags"][0])
    return entities


def t_line(tid, ent, text, frags=None):
    frags = frags or ent["frags"]
    surface = " ".join(text[a:b] for a, b in frags)
    offsets = ";".join(f"{a} {b}" for a, b in frags)
    return f"{tid}\t{ent['label']} {offsets}\t{surface}"


def valid_fixture(rng, index):
    """Returns (text, ann). Variant flags come from the index so every form is covered."""
    text = make_text(rng)
    discontinuous = index % 3 == 1
    entities = make_entities(rng, text, rng.randint(2, 6), discontinuous)
    if discontinuous and all(len(e["frags"]) == 1 for e in entities):
        entities = make_entities(random.Random(index), text, 4, True)
    with_attrs = index % 2 == 0 or index % 5 == 3
    with_rels = index % 4 in (2, 3) and len(entities) >= 2
    shuffled_ids = index % 6 == 5
    crlf = index % 7 == 4
    interleave = index % 5 == 0
    extras = index % 8 == 6
    split_touching = index % 9 == 7

    ids = list(range(1, len(entities) + 1))
    if shuffled_ids:
        ids = rng.sample(range(3, 3 + 3 * len(entities)), len(entities))
    tids = [f"T{i}" for i in ids]

    t_lines = []
    for k, ent in enumerate(entities):
        frags = ent["frags"]
        a, b = frags[0]
        if split_touching and k == 0 and b - a >= 3:
            cut = a + (b - a) // 2
            frags = [(a, cut), (cut, b)] + frags[1:]
        t_lines.append(t_line(tids[k], ent, text, frags))

    a_lines = []
    if with_attrs:
        n = 0
        for k in range(len(entities)):
            for label, value in ATTRS:
                if rng.random() < 0.3:
                    n += 1
                    sigil = "M" if extras and n == 1 and value is None else "A"
                    tail = f" {value}" if value else ""
                    a_lines.append((k, f"{sigil}{n + (7 if shuffled_ids else 0)}\t{label} {tids[k]}{tail}"))

    r_lines = []
    if with_rels:
        for n in range(rng.randint(1, 2)):
            i, j = rng.sample(range(len(entities)), 2)
            tab = "\t" if extras else ""
            r_lines.append(f"R{n + 1}\t{rng.choice(RELATIONS)} Arg1:{tids[i]} Arg2:{tids[j]}{tab}")

    lines = []
    if interleave:
        for k, t in enumerate(t_lines):
            lines.append(t)
            lines.extend(a for owner, a in a_lines if owner == k)
        lines.extend(r_lines)
    else:
        lines = t_lines + [a for _, a in a_lines] + r_lines
    if extras:
        lines.insert(1, "#1\tAnnotatorNotes T1\tvu en consultation")
        lines.append("")
        lines.append("N1\tReference T1 Wikipedia:12345\tx")
    if index % 10 == 8 and r_lines:
        # Relations may precede the attributes of earlier entities.
        lines = t_lines + r_lines + [a for _, a in a_lines]
    sep = "\r\n" if crlf else "\n"
    return text, sep.join(lines) + sep


MALFORMED = [
    # (ann template over a fixed text, line, kind)
    ("T1\tDrug 0 8\taspirine\nT2\tSymptom 12 19\n", 2, "malformed"),
    ("T1\tDrug 0 8\taspirine\nTx\tSymptom 12 19\tdouleur\n", 2, "malformed"),
    ("T1\tDrug 0 x\taspirine\n", 1, "malformed"),
    ("T1\tDrug 0 8\taspirine\n\nT2\tSymptom 19 12\tdouleur\n", 3, "malformed"),
    ("T1\tDrug 12 19;0 8\tdouleur aspirine\n", 1, "malformed"),
    ("T1\tDrug 0 8\taspirine\nT2\tSymptom 12 400\tdouleur\n", 2, "malformed"),
    ("T1\tDrug 0 8\taspirine\nA1\tis_negated T9\n", 2, "malformed"),
    ("T1\tDrug 0 8\taspirine\nT2\tSymptom 12 19\tdouleur\nR1\ttreats Arg1:T1 Arg2:T3\n", 3, "malformed"),
    ("T1\tDrug 0 8\taspirine\nT1\tSymptom 12 19\tdouleur\n", 2, "malformed"),
    ("T1\tDrug 0 8\taspirine\nT2\tSymptom 12 19\tdouleurs\n", 2, "surface"),
]
MALFORMED_TEXT = "aspirine et douleur thoracique, fièvre à 39 °C.\n"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path,
                        default=Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "brat")
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()
    rng = random.Random(args.seed)

    valid = args.out / "valid"
    valid.mkdir(parents=True, exist_ok=True)
    for index in range(30):
        text, ann = valid_fixture(rng, index)
        (valid / f"v{index + 1:02d}.txt").write_text(text, encoding="utf-8")
        (valid / f"v{index + 1:02d}.ann").write_bytes(ann.encode("utf-8"))

    malformed = args.out / "malformed"
    malformed.mkdir(parents=True, exist_ok=True)
    expected = []
    for index, (ann, line, kind) in enumerate(MALFORMED):
        stem = f"m{index + 1:02d}"
        (malformed / f"{stem}.txt").write_text(MALFORMED_TEXT, encoding="utf-8")
        (malformed / f"{stem}.ann").write_bytes(ann.encode("utf-8"))
        expected.append(f"{stem}\t{line}\t{kind}")
    (malformed / "expected.tsv").write_text("\n".join(expected) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
