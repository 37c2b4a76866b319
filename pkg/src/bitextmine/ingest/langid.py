"""Language identification with rank-ordered character trigram profiles.

Out-of-place distance between the trigram ranking of a text and each
language profile; the closest profile wins.
"""
import json
from collections import Counter

PROFILE_SIZE = 400
MIN_CHARS = 100


def trigrams(text):
    """Character trigrams of each word, padded with a space on both sides."""
    grams = Counter()
    for word in text.lower().split():
        padded = f" {word} "
        for i in range(len(padded) - 2):
            grams[padded[i:i + 3]] += 1
    return grams


def _ranking(counts, size):
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [g for g, _ in ordered[:size]]


class Profile:
    def __init__(self, lang, ranked):
        self.lang = lang
        self.ranked = list(ranked)
        self.rank = {g: i for i, g in enumerate(self.ranked)}

    @classmethod
    def train(cls, lang, texts, size=PROFILE_SIZE):
        counts = Counter()
        for text in texts:
            counts.update(trigrams(text))
        return cls(lang, _ranking(counts, size))

    def distance(self, doc_ranked):
        penalty = len(self.ranked)
        total = 0
        for i, g in enumerate(doc_ranked):
            r = self.rank.get(g)
            total += penalty if r is None else abs(r - i)
        return total


def detect_language(text, profiles, min_chars=MIN_CHARS):
    """Language code of the closest profile, or None for short texts."""
    if len(text) < min_chars or not profiles:
        return None
    doc = _ranking(trigrams(text), PROFILE_SIZE)
    if not doc:
        return None
    best = min(profiles, key=lambda p: (p.distance(doc), p.lang))
    return best.lang


def save_profiles(profiles, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump({p.lang: p.ranked for p in profiles}, f, ensure_ascii=False, indent=0, sort_keys=True)
        f.write("\n")


def load_profiles(path):
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    return [Profile(lang, ranked) for lang, ranked in sorted(data.items())]
