"""Brute-force recount of gap tags over the bundled fixture.

Re-applies the three-stage rule directly from the raw GQA fields and the
mapping asset, with no shared code. Prints per-gap (total, unique,
detailed, group, semantic) and the untagged count.
"""
import json
import sys
from collections import defaultdict

root = sys.argv[1] if len(sys.argv) > 1 else "."
mapping = json.load(open(f"{root}/data/kg_mapping.json"))
questions = json.load(open(f"{root}/tests/data/fixture_questions.json"))


def norm(s):
    return (s or "").strip().lower()


def find(stage, value):
    hits = [g for g, e in mapping.items() if norm(value) in [norm(k) for k in e[stage]]]
    assert len(hits) <= 1
    return hits[0] if hits else None


rows = defaultdict(lambda: {"total": 0, "texts": set(), "detailed": 0, "group": 0, "semantic": 0})
untagged = 0
per_question = {}
for qid, q in questions.items():
    tags = {}
    g = find("detailed_types", q["types"]["detailed"])
    if g:
        tags.setdefault(g, "detailed")
    g = find("global_groups", q["groups"]["global"])
    if g:
        tags.setdefault(g, "group")
    for step in q["semantic"]:
        parts = step["operation"].split(None, 1)
        if len(parts) == 2 and parts[0] in ("filter", "verify", "choose", "query"):
            g = find("semantic_filters", parts[1])
            if g:
                tags.setdefault(g, "semantic")
    per_question[qid] = tags
    if not tags:
        untagged += 1
    for g, src in tags.items():
        rows[g]["total"] += 1
        rows[g]["texts"].add(q["question"])
        rows[g][src] += 1

for g in ["attribute", "direction", "location", "material", "reasoning", "sentiment", "size", "state"]:
    r = rows[g]
    print(f'{{"{g}", {{{r["total"]}, {len(r["texts"])}, {r["detailed"]}, {r["group"]}, {r["semantic"]}}}}},')
print("untagged", untagged)
for qid in sorted(per_question):
    print(qid, sorted(per_question[qid].items()))
