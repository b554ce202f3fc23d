#!/usr/bin/env python3
"""Writes the replay fixture: corpus, scripted model responses and gold triples.

Each abstract has a simple opening sentence, a compound sentence carrying a
pronoun, and a complex sentence with a relative clause. The scripted model
behaves like a careful but literal extractor: given a long sentence it only
reports the first relation, and it copies pronouns through unresolved.
"""
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))

# drug, disease, A, B, C, subject form of the second sentence
ROWS = [
    ("Metformin", "type 2 diabetes", "hepatic glucose output", "insulin sensitivity", "HbA1c levels"),
    ("Atorvastatin", "hypercholesterolemia", "LDL cholesterol", "endothelial function", "cardiovascular events"),
    ("Lisinopril", "hypertension", "systolic pressure", "renal perfusion", "stroke rates"),
    ("Omeprazole", "peptic ulcer disease", "gastric acid secretion", "mucosal healing", "bleeding episodes"),
    ("Salbutamol", "asthma", "airway resistance", "peak expiratory flow", "exacerbation rates"),
    ("Levothyroxine", "hypothyroidism", "serum TSH", "basal metabolic rate", "fatigue scores"),
    ("Warfarin", "atrial fibrillation", "thrombus formation", "anticoagulation control", "embolic events"),
    ("Sertraline", "major depression", "depressive symptoms", "sleep quality", "relapse rates"),
    ("Donepezil", "Alzheimer disease", "cholinesterase activity", "cognitive scores", "caregiver burden"),
    ("Imatinib", "chronic myeloid leukemia", "BCR-ABL signaling", "hematologic response", "blast counts"),
    ("Methotrexate", "rheumatoid arthritis", "joint inflammation", "functional status", "erosion scores"),
    ("Tamoxifen", "breast cancer", "estrogen signaling", "disease-free survival", "recurrence rates"),
    ("Allopurinol", "gout", "uric acid production", "joint mobility", "flare frequency"),
    ("Furosemide", "heart failure", "fluid retention", "exercise tolerance", "hospital admissions"),
    ("Insulin glargine", "type 1 diabetes", "fasting glucose", "glycemic stability", "hypoglycemic events"),
    ("Clopidogrel", "coronary artery disease", "platelet aggregation", "stent patency", "ischemic events"),
    ("Montelukast", "allergic rhinitis", "nasal congestion", "daytime function", "symptom scores"),
    ("Valproate", "epilepsy", "seizure frequency", "mood stability", "emergency visits"),
    ("Rituximab", "follicular lymphoma", "B-cell counts", "progression-free survival", "lymph node size"),
    ("Adalimumab", "Crohn disease", "intestinal inflammation", "mucosal healing", "steroid use"),
    ("Ondansetron", "chemotherapy-induced nausea", "vomiting episodes", "oral intake", "rescue medication use"),
    ("Finasteride", "benign prostatic hyperplasia", "prostate volume", "urinary flow", "retention episodes"),
    ("Zoledronic acid", "osteoporosis", "bone resorption", "bone mineral density", "fracture rates"),
]

# Abstracts whose full-pipeline decomposition of the compound sentence keeps
# only the first clause, so the full configuration is not perfect.
LOSSY = {4, 16}


def triple(e1, r, e2):
    return {"Entity 1": e1, "Relationship": r, "Entity 2": e2}


def decomposition(sentences):
    return "\n".join(f"S{k} → {s}" for k, s in enumerate(sentences, 1))


def main():
    corpus, scenario, gold = [], [], []

    def script(task, text, response):
        scenario.append({"task": task, "input": text, "response": response})

    def extract(text, triples):
        script("extract", text, json.dumps(triples))

    def simplify(text, outputs):
        # The rule classifier decides the category; script all three.
        for task in ("simplify_comx", "simplify_comp", "simplify_comx_comp"):
            script(task, text, decomposition(outputs))

    for i, (drug, disease, a, b, c) in enumerate(ROWS):
        doc = f"R{i + 1:02d}"
        np = "The drug" if i % 3 == 2 else "It"
        s1 = f"{drug} treats {disease}."
        s2 = f"{np} reduced {a}, and it improved {b}."
        s3 = f"Patients with {disease} who received it showed lower {c}."
        text = " ".join([s1, s2, s3])
        corpus.append({"id": doc, "text": text, "source": "local"})

        tokens = text.split()
        spans = []
        s2_start = len(s1.split())
        np_len = len(np.split())
        spans.append((s2_start, s2_start + np_len - 1, np))
        s2_tokens = s2.split()
        spans.append((s2_start + s2_tokens.index("it"), s2_start + s2_tokens.index("it"), "it"))
        s3_start = s2_start + len(s2_tokens)
        s3_tokens = s3.split()
        spans.append((s3_start + s3_tokens.index("it"), s3_start + s3_tokens.index("it"), "it"))
        for start, end, expr in spans:
            assert " ".join(tokens[start:end + 1]).rstrip(".,") == expr, (doc, expr)
        script("coref", text, json.dumps([
            {"Expression": expr, "StartToken": start, "EndToken": end, "RefersTo": drug}
            for start, end, expr in spans
        ]))

        r2 = f"{drug} reduced {a}, and {drug} improved {b}."
        r3 = f"Patients with {disease} who received {drug} showed lower {c}."
        patients = f"Patients with {disease}"

        t1 = triple(drug, "treats", disease)
        t2a = triple(drug, "reduced", a)
        t2b = triple(drug, "improved", b)
        t3a = triple(patients, "received", drug)
        t3b = triple(patients, "showed", f"lower {c}")
        gold.append({"doc_id": doc, "triples": [
            {"entity1": t["Entity 1"], "relation": t["Relationship"], "entity2": t["Entity 2"]}
            for t in (t1, t2a, t2b, t3a, t3b)
        ]})

        extract(s1, [t1])

        # Resolved text: decomposed or extracted whole.
        r2_parts = [f"{drug} reduced {a}.", f"{drug} improved {b}."]
        simplify(r2, r2_parts[:1] if i in LOSSY else r2_parts)
        extract(r2_parts[0], [t2a])
        extract(r2_parts[1], [t2b])
        extract(r2, [t2a])
        r3_parts = [f"{patients} received {drug}.", f"{patients} showed lower {c}."]
        simplify(r3, r3_parts)
        extract(r3_parts[0], [t3a])
        extract(r3_parts[1], [t3b])
        extract(r3, [t3b])

        # Unresolved text: pronouns survive into the triples.
        o2_parts = [f"{np} reduced {a}.", f"It improved {b}."]
        simplify(s2, o2_parts)
        extract(o2_parts[0], [triple(np, "reduced", a)])
        extract(o2_parts[1], [triple("It", "improved", b)])
        extract(s2, [triple(np, "reduced", a)])
        o3_parts = [f"{patients} received it.", f"{patients} showed lower {c}."]
        simplify(s3, o3_parts)
        extract(o3_parts[0], [triple(patients, "received", "it")])
        extract(s3, [t3b])

    def dump(name, rows):
        with open(os.path.join(HERE, name), "w", encoding="utf-8") as f:
            for r in rows:
                f.write(json.dumps(r, ensure_ascii=False) + "\n")

    # A sentence can be scripted twice with the same answer; keep one line.
    seen, unique = set(), []
    for r in scenario:
        key = (r["task"], r["input"])
        if key in seen:
            continue
        seen.add(key)
        unique.append(r)

    dump("corpus.jsonl", corpus)
    dump("scenario.jsonl", unique)
    dump("gold_triples.jsonl", gold)
    dump("corpus_small.jsonl", corpus[:3])


if __name__ == "__main__":
    main()
