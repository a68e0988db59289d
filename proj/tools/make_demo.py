#!/usr/bin/env python3
"""Regenerates data/demo: a synthetic French clinical corpus with reference
Brat annotations, a drug dictionary and the demo pipeline configurations.

Output is deterministic for a given seed.
"""

import argparse
import json
import random
from pathlib import Path

# (surface, ATC code); None marks drugs deliberately absent from the dictionary.
DRUGS = [
    ("aspirine", "B01AC06"),
    ("Doliprane", "N02BE01"),
    ("paracétamol", "N02BE01"),
    ("amoxicilline", "J01CA04"),
    ("metformine", "A10BA02"),
    ("ibuprofène", "M01AE01"),
    ("Kardégic", "B01AC06"),
    ("Lovenox", "B01AB05"),
    ("Levothyrox", "H03AA01"),
    ("oméprazole", "A02BC01"),
    ("furosémide", "C03CA01"),
    ("bisoprolol", "C07AB07"),
    ("ramipril", "C09AA05"),
    ("atorvastatine", "C10AA05"),
    ("insuline glargine", "A10AE04"),
    ("Spasfon", None),
]

NAMES = ["DUPONT", "MARTIN", "LEFEBVRE", "MOREAU", "GARCIA", "ROUX"]

# Sentences with a {drug} slot; `{x}` slots hold PHI.
DRUG_SENTENCES = [
    "Traitement habituel : {drug} le matin.",
    "Le patient prend du {drug} depuis {date}.",
    "Introduction de {drug} à faible dose.",
    "Arrêt du {drug} en raison d'une intolérance.",
    "Pas de {drug} pendant l'hospitalisation.",
    "Relais par {drug} puis {drug2} à la sortie.",
    "Ordonnance de {drug} renouvelée par le Dr {name}.",
]

OTHER_SENTENCES = [
    "Consultation du {date} pour angine.",
    "Douleur de la poitrine irradiant vers le bras gauche.",
    "Bilan : créatinine normale, urine claire.",
    "Cholestérol élevé, consommation d'alcool modérée.",
    "Contrôle prévu dans une semaine.",
    "Patient vu par {title} {name}, joignable au {phone}.",
    "Examen clinique sans particularité.",
]


def phone(rng):
    return "0" + str(rng.randint(1, 9)) + "".join(f" {rng.randint(0, 99):02d}" for _ in range(4))


def date(rng):
    return f"{rng.randint(1, 28):02d}/{rng.randint(1, 12):02d}/{rng.randint(2015, 2024)}"


def render(template, rng, spans, base):
    """Fills `template`, appending (start, end, surface) of drug mentions to spans."""
    out = ""
    i = 0
    while i < len(template):
        if template[i] != "{":
            out += template[i]
            i += 1
            continue
        j = template.index("}", i)
        slot = template[i + 1:j]
        i = j + 1
        if slot in ("drug", "drug2"):
            surface = rng.choice(DRUGS)[0]
            spans.append((base + len(out), base + len(out) + len(surface), surface))
            out += surface
        elif slot == "date":
            out += date(rng)
        elif slot == "phone":
            out += phone(rng)
        elif slot == "name":
            out += rng.choice(NAMES)
        elif slot == "title":
            out += rng.choice(["M.", "Mme"])
    return out


def document(rng):
    text = ""
    spans = []
    n = rng.randint(4, 7)
    for k in range(n):
        pool = DRUG_SENTENCES if rng.random() < 0.55 else OTHER_SENTENCES
        if k:
            text += "\n" if rng.random() < 0.3 else " "
        text += render(rng.choice(pool), rng, spans, len(text))
    return text + "\n", spans


def write_configs(out):
    regex_rules = [{"pattern": r"\b\w+(?:ine|ol|ide|pril)\b", "label": "Drug", "case_sensitive": False}]
    preprocess = [
        {"op": "split_sentences", "inputs": ["raw"], "outputs": ["sentences"]},
        {"op": "deidentify", "inputs": ["sentences"], "outputs": ["deid", "phi"]},
    ]
    dict_step = {"op": "match_dictionary", "params": {"dictionary": "drugs.csv"},
                 "inputs": ["deid"], "outputs": ["dict_drugs"]}
    regex_step = {"op": "match_regex", "params": {"rules": regex_rules},
                  "inputs": ["deid"], "outputs": ["regex_drugs"]}
    configs = {
        "orange.json": {
            "name": "orange", "inputs": ["raw"], "outputs": ["drugs"],
            "steps": preprocess + [dict(regex_step, outputs=["drugs"])],
        },
        "black.json": {
            "name": "black", "inputs": ["raw"], "outputs": ["dict_drugs", "regex_drugs"],
            "steps": preprocess + [dict_step, regex_step],
        },
        "black_nested.json": {
            "name": "black_nested", "inputs": ["raw"], "outputs": ["dict_drugs", "regex_drugs"],
            "pipelines": [{"name": "preprocess", "inputs": ["raw"], "outputs": ["deid"],
                           "steps": preprocess}],
            "steps": [{"op": "preprocess", "inputs": ["raw"], "outputs": ["deid"]},
                      dict_step, regex_step],
        },
    }
    for name, spec in configs.items():
        (out / name).write_text(json.dumps(spec, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "demo")
    parser.add_argument("--docs", type=int, default=24)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    corpus = args.out / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)
    for k in range(args.docs):
        text, spans = document(rng)
        stem = f"cr{k + 1:03d}"
        (corpus / f"{stem}.txt").write_text(text, encoding="utf-8")
        ann = "".join(f"T{i + 1}\tDrug {s} {e}\t{w}\n" for i, (s, e, w) in enumerate(spans))
        (corpus / f"{stem}.ann").write_text(ann, encoding="utf-8")

    lines = ["term,label,norm_id"]
    lines += [f"{term},Drug,{code}" for term, code in DRUGS if code is not None]
    (args.out / "drugs.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    write_configs(args.out)


if __name__ == "__main__":
    main()
