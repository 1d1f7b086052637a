"""Writes a small synthetic tweet-stance corpus for smoke runs.

Documents carry an obvious polarity cue, so a tiny encoder can fit them.
"""
import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
TARGETS = ["Biden", "Sanders", "Trump"]
FAVOR = ["love", "support", "admire"]
AGAINST = ["hate", "oppose", "despise"]
FILLER = ["today", "again", "honestly", "this week", "after the debate", "#election"]

SUMMARIES = {
    "Biden": "Joseph Robinette Biden Jr. is an American politician who served as the 46th president of the United States.",
    "Sanders": "Bernard Sanders is an American politician who has served as the junior United States senator from Vermont.",
    "Trump": "Donald John Trump is an American politician, media personality, and businessman who served as the 45th president of the United States.",
}


def main() -> None:
    rng = random.Random(7)
    rows = {"train": [], "validation": [], "test": []}
    counts = {"train": 48, "validation": 12, "test": 12}
    n = 0
    for target in TARGETS:
        for split, count in counts.items():
            for i in range(count):
                label = "favor" if i % 2 == 0 else "against"
                cue = rng.choice(FAVOR if label == "favor" else AGAINST)
                doc = f"I {cue} {target} {rng.choice(FILLER)}"
                rows[split].append((f"ex{n:04d}", doc, target, label))
                n += 1
    for split, items in rows.items():
        with open(HERE / f"{split}.tsv", "w") as f:
            f.write("example_id\tdocument\ttarget\tlabel\n")
            for r in items:
                f.write("\t".join(r) + "\n")
    with open(HERE / "knowledge_cache.jsonl", "w") as f:
        for t in TARGETS:
            f.write(json.dumps({"target": t, "page_title": f"{t} (sample)", "summary": SUMMARIES[t],
                                "status": "manual", "fetched_at": "2024-01-01T00:00:00Z"}) + "\n")


if __name__ == "__main__":
    main()
